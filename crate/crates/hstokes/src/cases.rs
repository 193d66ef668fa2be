//! Built-in problem cases shared by the CLI, the verification suite and the
//! oracle comparisons. Each case is defined by closures, so it can be
//! sampled on any grid (in particular at oracle resolution).

use crate::domain::{sample_boundary, GridSpec};
use crate::error::{HsError, Result};
use crate::spectral::{TorusField, TorusGrid, TorusSpaceTime};
use crate::stokes::StokesData;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseName {
    Zero,
    RayleighRamp,
    TangentialMode,
    NormalMode,
    SmallNs,
    LargeNs,
}

impl CaseName {
    pub fn parse(s: &str) -> Result<CaseName> {
        match s {
            "zero" => Ok(CaseName::Zero),
            "rayleigh-ramp" => Ok(CaseName::RayleighRamp),
            "tangential-mode" => Ok(CaseName::TangentialMode),
            "normal-mode" => Ok(CaseName::NormalMode),
            "small-ns" => Ok(CaseName::SmallNs),
            "large-ns" => Ok(CaseName::LargeNs),
            other => Err(HsError::InvalidData(format!(
                "unknown case '{other}'; known: zero, rayleigh-ramp, tangential-mode, \
                 normal-mode, small-ns, large-ns"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseName::Zero => "zero",
            CaseName::RayleighRamp => "rayleigh-ramp",
            CaseName::TangentialMode => "tangential-mode",
            CaseName::NormalMode => "normal-mode",
            CaseName::SmallNs => "small-ns",
            CaseName::LargeNs => "large-ns",
        }
    }

    /// Default desk-scale grid of the case.
    pub fn default_grid(&self) -> GridSpec {
        match self {
            CaseName::Zero => GridSpec::new(2, TAU, 4.0, 16, 33, 0.25, 17),
            // the 1-D comparison case runs fine-grained in x_n and t
            CaseName::RayleighRamp => GridSpec::new(2, TAU, 4.0, 8, 257, 0.5, 257),
            // tall box: the slowest tangential mode decays like e^{-x_n}, so
            // oracle comparisons on x_n <= H/2 need the ceiling far away
            CaseName::TangentialMode | CaseName::NormalMode => {
                GridSpec::new(2, TAU, 16.0, 16, 129, 0.5, 33)
            }
            CaseName::SmallNs => GridSpec::new(2, TAU, 4.0, 16, 33, 0.25, 17),
            CaseName::LargeNs => GridSpec::new(2, TAU, 4.0, 16, 33, 1.0, 65),
        }
        .expect("built-in grids are valid")
    }

    pub fn default_amplitude(&self) -> f64 {
        match self {
            CaseName::Zero => 0.0,
            CaseName::SmallNs => 0.1,
            // strong enough that the first horizon genuinely fails to
            // contract and the automatic halving engages
            CaseName::LargeNs => 50.0,
            _ => 1.0,
        }
    }

    /// Whether the case is meant to be solved with the Picard iteration.
    pub fn is_nonlinear(&self) -> bool {
        matches!(self, CaseName::SmallNs | CaseName::LargeNs)
    }
}

/// Smooth ramp with `s(0) = s'(0) = 0`, `s(T) = 1`.
pub fn smoothstep(t: f64, t_final: f64) -> f64 {
    let s = (t / t_final).clamp(0.0, 1.0);
    s * s * (3.0 - 2.0 * s)
}

/// Sample a case's data on a grid. All built-in cases use `h = 0`, `F = 0`
/// and a wall velocity ramping up smoothly from rest, so the compatibility
/// hypotheses hold exactly.
pub fn build_case(name: CaseName, grid: &GridSpec, amplitude: f64, alpha: f64) -> Result<StokesData> {
    let mut data = StokesData::zero(grid, alpha);
    let t_final = grid.t_final;
    match name {
        CaseName::Zero => {}
        CaseName::RayleighRamp => {
            data.g = sample_boundary(grid, grid.dim, move |_, t, c| {
                if c == 0 {
                    amplitude * smoothstep(t, t_final)
                } else {
                    0.0
                }
            })?;
        }
        CaseName::TangentialMode | CaseName::SmallNs | CaseName::LargeNs => {
            data.g = sample_boundary(grid, grid.dim, move |xt, t, c| {
                if c == 0 {
                    amplitude * smoothstep(t, t_final) * (TAU * xt[0] / grid.period_l).sin()
                } else {
                    0.0
                }
            })?;
        }
        CaseName::NormalMode => {
            let dim = grid.dim;
            data.g = sample_boundary(grid, grid.dim, move |xt, t, c| {
                if c == dim - 1 {
                    amplitude * smoothstep(t, t_final) * (TAU * xt[0] / grid.period_l).sin()
                } else {
                    0.0
                }
            })?;
        }
    }
    Ok(data)
}

/// Case with its default grid and amplitude.
pub fn build_default(name: CaseName, alpha: f64) -> Result<(GridSpec, StokesData)> {
    let grid = name.default_grid();
    let data = build_case(name, &grid, name.default_amplitude(), alpha)?;
    Ok((grid, data))
}

/// Fixed random band-limited tensor corpus on a full torus, constant in
/// time: drives the Duhamel scaling study. Modes are drawn with
/// `band.0 <= |xi| <= band.1`, amplitudes and phases from the seeded stream.
pub fn random_band_tensor(
    torus: &TorusGrid,
    n_time: usize,
    dt: f64,
    band: (f64, f64),
    modes: usize,
    seed: u64,
) -> TorusSpaceTime {
    let dim = torus.dim;
    let comps = dim * dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_axes = torus.shape.len();

    // rejection-sample integer modes inside the band
    let mut chosen: Vec<(Vec<i64>, f64, f64, usize)> = Vec::new();
    let mut guard = 0usize;
    while chosen.len() < modes && guard < 100_000 {
        guard += 1;
        let mut m = vec![0i64; n_axes];
        let mut xi2 = 0.0f64;
        for (a, ma) in m.iter_mut().enumerate() {
            let max_m = (torus.shape[a] / 2 - 1) as i64;
            *ma = rng.gen_range(-max_m..=max_m);
            let xi = TAU * *ma as f64 / torus.extents[a];
            xi2 += xi * xi;
        }
        let q = xi2.sqrt();
        if q < band.0 || q > band.1 {
            continue;
        }
        let amp = rng.gen_range(0.2..1.0);
        let phase = rng.gen_range(0.0..TAU);
        let comp = rng.gen_range(0..comps);
        chosen.push((m, amp, phase, comp));
    }

    let mut slice = TorusField::zeros(torus, comps);
    let mut idx = vec![0usize; n_axes];
    for flat in 0..torus.points() {
        torus.decode(flat, &mut idx);
        for (m, amp, phase, comp) in &chosen {
            let mut arg = *phase;
            for a in 0..n_axes {
                let x = idx[a] as f64 * torus.extents[a] / torus.shape[a] as f64;
                arg += TAU * m[a] as f64 / torus.extents[a] * x;
            }
            slice.values[flat * comps + comp] += amp * arg.cos();
        }
    }
    TorusSpaceTime {
        grid: torus.clone(),
        components: comps,
        dt,
        slices: vec![slice; n_time],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_names_round_trip() {
        for name in [
            CaseName::Zero,
            CaseName::RayleighRamp,
            CaseName::TangentialMode,
            CaseName::NormalMode,
            CaseName::SmallNs,
            CaseName::LargeNs,
        ] {
            assert_eq!(CaseName::parse(name.as_str()).unwrap(), name);
        }
        assert!(CaseName::parse("bogus").is_err());
    }

    #[test]
    fn built_in_cases_validate() {
        use crate::stokes::{SolverOptions, StokesSolver};
        for name in [
            CaseName::Zero,
            CaseName::TangentialMode,
            CaseName::NormalMode,
            CaseName::SmallNs,
        ] {
            let grid = GridSpec::new(2, TAU, 4.0, 8, 17, 0.25, 9).unwrap();
            let data = build_case(name, &grid, name.default_amplitude(), 0.5).unwrap();
            let solver = StokesSolver::new(&grid, SolverOptions::default());
            solver.validate(&data).unwrap();
        }
    }

    #[test]
    fn ramp_is_smooth_at_zero() {
        assert_eq!(smoothstep(0.0, 1.0), 0.0);
        assert!((smoothstep(1.0, 1.0) - 1.0).abs() < 1e-15);
        // quadratic touch at t = 0
        assert!(smoothstep(1e-6, 1.0) < 1e-10);
    }

    #[test]
    fn random_tensor_is_deterministic_and_band_limited() {
        let grid = GridSpec::new(2, TAU, TAU / 2.0, 32, 17, 0.4, 9).unwrap();
        let torus = TorusGrid::doubled(&grid);
        let a = random_band_tensor(&torus, 3, 0.05, (2.0, 6.0), 12, 7);
        let b = random_band_tensor(&torus, 3, 0.05, (2.0, 6.0), 12, 7);
        assert_eq!(a.slices[0].values, b.slices[0].values);
        // constant in time
        assert_eq!(a.slices[0].values, a.slices[2].values);
        assert!(a.slices[0].linf() > 0.0);
    }
}
