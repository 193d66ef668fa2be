//! Assembly of the full Stokes solution `u = v + V + grad(phi) + w` from the
//! kernel pieces: heat evolution of the reflected initial data, Duhamel
//! integral of the projected force, harmonic gradient correcting the
//! wall-normal trace, and the boundary propagator driven by the residual
//! tangential wall data.
//!
//! The pressure is never formed; solutions are validated through the weak
//! formulation against divergence-free test fields and through trace,
//! divergence and oracle diagnostics.

use crate::analysis::{
    anisotropic_seminorm, anisotropic_seminorm_boundary, divergence_sup, gradient_sup,
    make_test_family, seminorm_initial, trace_error, weak_residual_stokes, SeminormMode,
    TraceError,
};
use crate::domain::{boundary_trace, BoundaryField, Field, GridSpec, SpaceTimeField};
use crate::error::{HsError, Result};
use crate::extension::{check_compatibility, extend_initial, extend_tensor, CompatibilityReport};
use crate::kernels::{
    duhamel_force, heat_evolve_series, solonnikov_w, SolonnikovKernelTable, SolonnikovParams,
};
use crate::spectral::{
    boundary_slice_as_torus, fft_forward, fft_inverse, restrict_to_half, riesz, riesz_boundary,
    SpectralField, TorusGrid,
};
use num_complex::Complex64;
use std::sync::Mutex;

/// Problem data for one Stokes solve: initial velocity `h`, Dirichlet wall
/// data `g`, force potential `F` (the force is `div F`), and the Hoelder
/// exponent the verification functionals use.
#[derive(Debug, Clone)]
pub struct StokesData {
    pub h: Field,
    pub g: BoundaryField,
    pub f: SpaceTimeField,
    pub alpha: f64,
}

impl StokesData {
    pub fn zero(grid: &GridSpec, alpha: f64) -> Self {
        StokesData {
            h: Field::zeros(grid, grid.dim),
            g: BoundaryField::zeros(grid, grid.dim),
            f: SpaceTimeField::zeros(grid, grid.dim * grid.dim),
            alpha,
        }
    }

    /// Scale of the data, used to make tolerances relative.
    pub fn scale(&self) -> f64 {
        self.h.linf().max(self.g.linf()).max(self.f.linf())
    }

    /// Restriction to a shorter horizon on the same slice spacing.
    pub fn truncate_time(&self, n_time: usize, t_final: f64) -> Result<StokesData> {
        let grid = self.h.grid.with_horizon(t_final, n_time)?;
        let mut h = self.h.clone();
        h.grid = grid;
        Ok(StokesData {
            h,
            g: self.g.truncate_time(n_time, t_final)?,
            f: self.f.truncate_time(n_time, t_final)?,
            alpha: self.alpha,
        })
    }
}

/// The four addends of the solution, retained for diagnostics.
#[derive(Debug, Clone)]
pub struct StokesParts {
    /// `v`: heat evolution of the reflected initial data.
    pub heat: SpaceTimeField,
    /// `V`: Duhamel integral of the projected force.
    pub force: SpaceTimeField,
    /// `grad(phi)`: harmonic gradient fixing the wall-normal trace.
    pub harmonic: SpaceTimeField,
    /// `w`: boundary propagator driven by the residual tangential data.
    pub boundary: SpaceTimeField,
}

/// Hoelder-type norms of the data entering the a-priori estimate ratio.
#[derive(Debug, Clone)]
pub struct DataNorms {
    pub h_norm: f64,
    pub g_norm: f64,
    pub f_norm: f64,
    pub riesz_gn_sup: f64,
    pub riesz_hn_sup: f64,
    /// `M_0`-type aggregate: `|h| + |g| + |R'g_n| + |R'h_n|`.
    pub aggregate: f64,
}

#[derive(Debug, Clone)]
pub struct StokesDiagnostics {
    pub compat: CompatibilityReport,
    pub trace: TraceError,
    pub divergence_sup: f64,
    pub gradient_sup: f64,
    /// Normalized weak-formulation gap, when computed.
    pub weak_residual: Option<f64>,
    /// `|u|_{C^{alpha,alpha/2}} / (data aggregate)`: the empirical constant
    /// of the a-priori estimate, logged rather than asserted.
    pub holder_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: SpaceTimeField,
    pub parts: StokesParts,
    pub diagnostics: StokesDiagnostics,
}

/// Solver options; the defaults run every diagnostic.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Relative tolerance for the compatibility hypotheses.
    pub compat_tol_rel: f64,
    pub solonnikov: SolonnikovParams,
    /// Size of the divergence-free test family for the weak residual.
    pub residual_family: usize,
    /// Seed for test-field and seminorm sampling.
    pub seed: u64,
    pub compute_weak_residual: bool,
    /// Random-pair budget of the sampled seminorm estimator.
    pub seminorm_budget: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            compat_tol_rel: 1e-6,
            solonnikov: SolonnikovParams::default(),
            residual_family: 4,
            seed: 42,
            compute_weak_residual: true,
            seminorm_budget: 200_000,
        }
    }
}

/// Reusable Stokes solver: owns the kernel moment cache, which is shared
/// across calls (and across Picard iterations).
pub struct StokesSolver {
    grid: GridSpec,
    pub options: SolverOptions,
    table: Mutex<SolonnikovKernelTable>,
}

impl StokesSolver {
    pub fn new(grid: &GridSpec, options: SolverOptions) -> Self {
        StokesSolver {
            grid: *grid,
            options,
            table: Mutex::new(SolonnikovKernelTable::new(grid, options.solonnikov)),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Validate shapes, the Hoelder exponent, compatibility hypotheses, and
    /// the zero-tangential-mean condition on `g_n` (global incompressibility
    /// on the torus).
    pub fn validate(&self, data: &StokesData) -> Result<CompatibilityReport> {
        let grid = self.grid;
        let dim = grid.dim;
        if data.h.grid != grid || data.g.grid != grid || data.f.grid != grid {
            return Err(HsError::ShapeMismatch(
                "data grids differ from solver grid".into(),
            ));
        }
        if data.h.components != dim || data.g.components != dim || data.f.components != dim * dim {
            return Err(HsError::ShapeMismatch(
                "expected vector h, vector g and rank-2 tensor F".into(),
            ));
        }
        if !(data.alpha > 0.0 && data.alpha < 1.0) {
            return Err(HsError::InvalidData(format!(
                "Hoelder exponent must lie in (0,1), got {}",
                data.alpha
            )));
        }
        data.h.assert_finite("initial data")?;
        data.g.assert_finite("boundary data")?;
        data.f.assert_finite("force potential")?;
        let tol = self.options.compat_tol_rel * data.scale().max(1e-300);
        let report = check_compatibility(&data.h, &data.g, tol);
        if !report.pass() {
            return Err(HsError::Incompatible(format!(
                "data violates the compatibility hypotheses: trace mismatch {:.3e}, div h {:.3e}, normal trace {:.3e} (tol {:.3e})",
                report.trace_mismatch, report.divergence_sup, report.normal_trace_sup, tol
            )));
        }
        // zero tangential mean of g_n at every time: a net flux through the
        // wall is unsolvable on the torus
        let tp = grid.tangential_points() as f64;
        for l in 0..grid.n_time {
            let mut mean = 0.0;
            for p in 0..grid.tangential_points() {
                mean += data.g.at(l, p, dim - 1);
            }
            mean /= tp;
            if mean.abs() > tol {
                return Err(HsError::Incompatible(format!(
                    "g_n has nonzero tangential mean {mean:.3e} at t = {} (tol {tol:.3e}): \
                     net flux through the wall is unsolvable on the torus",
                    grid.time(l)
                )));
            }
        }
        Ok(report)
    }

    /// Full pipeline; see the module docs for the decomposition.
    pub fn solve(&self, data: &StokesData) -> Result<StokesSolution> {
        let grid = self.grid;
        let dim = grid.dim;
        let compat = self.validate(data)?;
        let scale = data.scale();
        let compat_tol = self.options.compat_tol_rel * scale.max(1e-300);

        // v: heat evolution of the reflected initial data
        let h_ext = extend_initial(&data.h, compat_tol)?;
        let times: Vec<f64> = (0..grid.n_time).map(|l| grid.time(l)).collect();
        let v_slices = heat_evolve_series(&h_ext, &times)?;
        let heat = SpaceTimeField::from_slices(
            &grid,
            v_slices.iter().map(|s| restrict_to_half(s, &grid)).collect(),
        )?;

        // V: Duhamel integral of the projected force
        let f_ext = extend_tensor(&data.f);
        let v_big = duhamel_force(&f_ext);
        let force = SpaceTimeField::from_slices(
            &grid,
            v_big.slices.iter().map(|s| restrict_to_half(s, &grid)).collect(),
        )?;

        let v_tr = boundary_trace(&heat);
        let force_tr = boundary_trace(&force);

        // wall-normal residual d = g_n - v_n|0 - V_n|0 and its harmonic lift
        let mut data_n = data.g.component(dim - 1);
        for l in 0..grid.n_time {
            for p in 0..grid.tangential_points() {
                *data_n.at_mut(l, p, 0) -= v_tr.at(l, p, dim - 1) + force_tr.at(l, p, dim - 1);
            }
        }
        let harmonic = grad_phi(&data_n, &grid);

        // residual tangential wall data and the boundary propagator
        let g_cap = build_g(&data.g, &v_tr, &force_tr);
        let boundary = {
            let mut table = self.table.lock().expect("kernel table lock poisoned");
            solonnikov_w(&g_cap, &mut table)?
        };

        // fixed summation order keeps the re-sum exactly reproducible
        let mut u = heat.clone();
        u.add_scaled(&force, 1.0);
        u.add_scaled(&harmonic, 1.0);
        u.add_scaled(&boundary, 1.0);
        u.assert_finite("stokes solution")?;

        let trace = trace_error(&u, &data.h, &data.g);
        let div = divergence_sup(&u);
        let grad = gradient_sup(&u);
        let weak = if self.options.compute_weak_residual {
            let family = make_test_family(&grid, self.options.residual_family, self.options.seed);
            Some(weak_residual_stokes(&u, &data.f, &family)?)
        } else {
            None
        };
        let holder_ratio = self.holder_ratio(data, &u)?;

        Ok(StokesSolution {
            u,
            parts: StokesParts {
                heat,
                force,
                harmonic,
                boundary,
            },
            diagnostics: StokesDiagnostics {
                compat,
                trace,
                divergence_sup: div,
                gradient_sup: grad,
                weak_residual: weak,
                holder_ratio,
            },
        })
    }

    /// Norms of the data entering the a-priori estimate.
    pub fn data_norms(&self, data: &StokesData) -> Result<DataNorms> {
        let mode = SeminormMode::Sampled {
            budget: self.options.seminorm_budget,
            seed: self.options.seed,
        };
        let h_rep = seminorm_initial(&data.h, data.alpha, mode)?;
        let g_rep = anisotropic_seminorm_boundary(&data.g, data.alpha, mode)?;
        let f_rep = anisotropic_seminorm(&data.f, data.alpha, mode)?;
        let dim = self.grid.dim;
        let gn = data.g.component(dim - 1);
        let mut riesz_gn_sup: f64 = 0.0;
        for j in 0..self.grid.n_tangential_axes() {
            riesz_gn_sup = riesz_gn_sup.max(riesz_boundary(&gn, j).linf());
        }
        let riesz_hn_sup = match extend_initial(
            &data.h,
            self.options.compat_tol_rel * data.scale().max(1e-300),
        ) {
            Ok(h_ext) => {
                // tangential Riesz of the reflected normal component
                let torus = &h_ext.grid;
                let mut comp = crate::spectral::TorusField::zeros(torus, 1);
                for (i, v) in comp.values.iter_mut().enumerate() {
                    *v = h_ext.values[i * dim + (dim - 1)];
                }
                let mut sup: f64 = 0.0;
                for a in 1..torus.shape.len() {
                    sup = sup.max(riesz(&comp, a).linf());
                }
                sup
            }
            Err(_) => f64::NAN,
        };
        let aggregate = h_rep.total() + g_rep.total() + riesz_gn_sup + riesz_hn_sup;
        Ok(DataNorms {
            h_norm: h_rep.total(),
            g_norm: g_rep.total(),
            f_norm: f_rep.total(),
            riesz_gn_sup,
            riesz_hn_sup,
            aggregate,
        })
    }

    fn holder_ratio(&self, data: &StokesData, u: &SpaceTimeField) -> Result<f64> {
        let norms = self.data_norms(data)?;
        let t = self.grid.t_final;
        let f_weight = t.sqrt().max(t.powf(0.5 + data.alpha / 2.0));
        let denom = norms.aggregate + f_weight * norms.f_norm;
        if denom <= 0.0 {
            return Ok(0.0);
        }
        let u_rep = anisotropic_seminorm(
            u,
            data.alpha,
            SeminormMode::Sampled {
                budget: self.options.seminorm_budget,
                seed: self.options.seed,
            },
        )?;
        Ok(u_rep.total() / denom)
    }
}

/// One-shot Stokes solve with default options.
pub fn solve_stokes(data: &StokesData, grid: &GridSpec) -> Result<StokesSolution> {
    StokesSolver::new(grid, SolverOptions::default()).solve(data)
}

/// Harmonic gradient lifting wall-normal data into the half space: per
/// tangential mode and time slice,
///
/// * tangential component j: `(-i xi_j / |xi'|) e^{-|xi'| x_n} d_hat`,
/// * normal component: `e^{-|xi'| x_n} d_hat`,
/// * zero mode: tangential components vanish, normal one is constant in x_n.
pub fn grad_phi(data_n: &BoundaryField, grid: &GridSpec) -> SpaceTimeField {
    assert_eq!(data_n.components, 1, "grad_phi expects scalar wall data");
    let dim = grid.dim;
    let torus = TorusGrid::tangential(grid);
    let nt = grid.tangential_points();
    let n_axes = torus.shape.len();
    let mut out = SpaceTimeField::zeros(grid, dim);
    let mut idx = vec![0usize; n_axes];
    for l in 0..grid.n_time {
        let spec = fft_forward(&boundary_slice_as_torus(data_n, l));
        // pack (row, component) per mode, one inverse transform per slice
        let mut packed = SpectralField::zeros(&torus, dim * grid.n_normal);
        for flat in 0..nt {
            torus.decode(flat, &mut idx);
            let mut q2 = 0.0;
            let mut xi = [0.0f64; 2];
            for a in 0..n_axes {
                let w = if torus.is_nyquist(a, idx[a]) {
                    0.0
                } else {
                    torus.wavevector(a, idx[a])
                };
                xi[a] = w;
                q2 += w * w;
            }
            let q = q2.sqrt();
            let d_hat = spec.modes[flat];
            for k in 0..grid.n_normal {
                let decay = (-q * grid.normal(k)).exp();
                let base = flat * dim * grid.n_normal + k * dim;
                for (a, xia) in xi.iter().enumerate().take(n_axes) {
                    packed.modes[base + a] = if q == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, -xia / q) * decay * d_hat
                    };
                }
                packed.modes[base + dim - 1] = d_hat * decay;
            }
        }
        let phys = fft_inverse(&packed);
        for k in 0..grid.n_normal {
            for p in 0..nt {
                for c in 0..dim {
                    *out.slices[l].at_mut(k, p, c) =
                        phys.values[p * dim * grid.n_normal + k * dim + c];
                }
            }
        }
    }
    out
}

/// Residual tangential wall data for the boundary propagator:
///
/// `G' = g' - V'|_0 - v'|_0 - R'(g_n - v_n|_0 - V_n|_0)`, `G_n = 0`.
pub fn build_g(
    g: &BoundaryField,
    v_trace: &BoundaryField,
    force_trace: &BoundaryField,
) -> BoundaryField {
    let grid = g.grid;
    let dim = grid.dim;
    let mut d = g.component(dim - 1);
    for l in 0..grid.n_time {
        for p in 0..grid.tangential_points() {
            *d.at_mut(l, p, 0) -= v_trace.at(l, p, dim - 1) + force_trace.at(l, p, dim - 1);
        }
    }
    let mut out = BoundaryField::zeros(&grid, dim);
    for j in 0..grid.n_tangential_axes() {
        let rd = riesz_boundary(&d, j);
        for l in 0..grid.n_time {
            for p in 0..grid.tangential_points() {
                *out.at_mut(l, p, j) = g.at(l, p, j)
                    - force_trace.at(l, p, j)
                    - v_trace.at(l, p, j)
                    - rd.at(l, p, 0);
            }
        }
    }
    out
}
