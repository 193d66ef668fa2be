//! Extensions of half-grid data onto the doubled, periodized domain, plus
//! compatibility validation of the problem data.
//!
//! Reflection about the wall supplies the extensions constructively: the
//! tangential velocity components extend evenly in `x_n`, the normal one
//! oddly, which preserves the divergence identity; tensors extend evenly
//! component-wise, which preserves `L_inf` exactly.

use crate::analysis::divergence_field;
use crate::domain::{BoundaryField, Field, SpaceTimeField};
use crate::error::{HsError, Result};
use crate::spectral::{TorusField, TorusGrid, TorusSpaceTime};

/// Per-hypothesis diagnostics for the data `(h, g)`.
#[derive(Debug, Clone, Copy)]
pub struct CompatibilityReport {
    /// sup |g(., 0) - h(., x_n = 0)|.
    pub trace_mismatch: f64,
    /// Discrete divergence sup of h.
    pub divergence_sup: f64,
    /// sup |h_n(., 0)|.
    pub normal_trace_sup: f64,
    pub trace_ok: bool,
    pub divergence_ok: bool,
    pub normal_trace_ok: bool,
}

impl CompatibilityReport {
    pub fn pass(&self) -> bool {
        self.trace_ok && self.divergence_ok && self.normal_trace_ok
    }
}

/// Check the compatibility hypotheses `g|_{t=0} = h|_{x_n=0}`, `div h = 0`
/// and `h_n|_{x_n=0} = 0` against a tolerance.
pub fn check_compatibility(h: &Field, g: &BoundaryField, tol: f64) -> CompatibilityReport {
    let grid = h.grid;
    let dim = grid.dim;
    let mut trace_mismatch: f64 = 0.0;
    for p in 0..grid.tangential_points() {
        for c in 0..dim {
            trace_mismatch = trace_mismatch.max((g.at(0, p, c) - h.at(0, p, c)).abs());
        }
    }
    let divergence_sup = divergence_field(h).linf();
    let mut normal_trace_sup: f64 = 0.0;
    for p in 0..grid.tangential_points() {
        normal_trace_sup = normal_trace_sup.max(h.at(0, p, dim - 1).abs());
    }
    CompatibilityReport {
        trace_mismatch,
        divergence_sup,
        normal_trace_sup,
        trace_ok: trace_mismatch <= tol,
        divergence_ok: divergence_sup <= tol,
        normal_trace_ok: normal_trace_sup <= tol,
    }
}

/// Mirror row for position `k` on the doubled normal axis.
#[inline]
fn mirror_index(k: usize, n_normal: usize) -> usize {
    debug_assert!(k >= n_normal);
    2 * (n_normal - 1) - k
}

/// Reflect an initial velocity field onto the doubled torus: tangential
/// components evenly in `x_n`, the normal component oddly.
///
/// Fails when `sup |h_n(., 0)| > tol`: an odd reflection of a nonzero wall
/// trace would be discontinuous, and a divergence-free Hoelder extension in
/// that situation has to be supplied by the caller instead.
pub fn extend_initial(h: &Field, tol: f64) -> Result<TorusField> {
    let grid = h.grid;
    let dim = grid.dim;
    if h.components != dim {
        return Err(HsError::ShapeMismatch(format!(
            "extend_initial expects {} components, got {}",
            dim, h.components
        )));
    }
    let mut wall_sup: f64 = 0.0;
    for p in 0..grid.tangential_points() {
        wall_sup = wall_sup.max(h.at(0, p, dim - 1).abs());
    }
    if wall_sup > tol {
        return Err(HsError::Incompatible(format!(
            "sup |h_n(., 0)| = {wall_sup:.3e} exceeds {tol:.3e}; the odd reflection would be \
             discontinuous -- supply a divergence-free extension explicitly"
        )));
    }

    let torus = TorusGrid::doubled(&grid);
    let nt = grid.tangential_points();
    let n_full = torus.shape[0];
    let mut out = TorusField::zeros(&torus, dim);
    for k in 0..n_full {
        let (src, normal_sign) = if k < grid.n_normal {
            (k, 1.0)
        } else {
            (mirror_index(k, grid.n_normal), -1.0)
        };
        for p in 0..nt {
            for c in 0..dim {
                let sign = if c == dim - 1 { normal_sign } else { 1.0 };
                out.values[(k * nt + p) * dim + c] = sign * h.at(src, p, c);
            }
        }
    }
    Ok(out)
}

/// Even reflection of every tensor component onto the doubled torus, slice by
/// slice. Preserves `L_inf` exactly and never increases the discrete spatial
/// Hoelder seminorm.
pub fn extend_tensor(f: &SpaceTimeField) -> TorusSpaceTime {
    let grid = f.grid;
    let torus = TorusGrid::doubled(&grid);
    let nt = grid.tangential_points();
    let comps = f.components;
    let n_full = torus.shape[0];
    let slices: Vec<TorusField> = f
        .slices
        .iter()
        .map(|slice| {
            let mut out = TorusField::zeros(&torus, comps);
            for k in 0..n_full {
                let src = if k < grid.n_normal {
                    k
                } else {
                    mirror_index(k, grid.n_normal)
                };
                for p in 0..nt {
                    for c in 0..comps {
                        out.values[(k * nt + p) * comps + c] = slice.at(src, p, c);
                    }
                }
            }
            out
        })
        .collect();
    TorusSpaceTime {
        grid: torus,
        components: comps,
        dt: grid.dt(),
        slices,
    }
}

/// Even reflection of a single slice (used for the initial tensor and for
/// scalar heat data in tests).
pub fn extend_even_slice(f: &Field) -> TorusField {
    let grid = f.grid;
    let torus = TorusGrid::doubled(&grid);
    let nt = grid.tangential_points();
    let comps = f.components;
    let mut out = TorusField::zeros(&torus, comps);
    for k in 0..torus.shape[0] {
        let src = if k < grid.n_normal {
            k
        } else {
            mirror_index(k, grid.n_normal)
        };
        for p in 0..nt {
            for c in 0..comps {
                out.values[(k * nt + p) * comps + c] = f.at(src, p, c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{sample_boundary, sample_initial, GridSpec};
    use crate::spectral::{divergence_torus, restrict_to_half};

    const TAU: f64 = std::f64::consts::TAU;

    fn grid3() -> GridSpec {
        GridSpec::new(3, TAU, 4.0, 16, 17, 0.5, 5).unwrap()
    }

    #[test]
    fn compatibility_all_zero_passes() {
        let g = grid3();
        let h = Field::zeros(&g, 3);
        let gb = BoundaryField::zeros(&g, 3);
        let rep = check_compatibility(&h, &gb, 1e-12);
        assert_eq!(rep.trace_mismatch, 0.0);
        assert_eq!(rep.divergence_sup, 0.0);
        assert_eq!(rep.normal_trace_sup, 0.0);
        assert!(rep.pass());
    }

    #[test]
    fn compatibility_tangential_field_matches_its_trace() {
        // h = (sin(x_2) e^{-x_n}, 0, 0): x_1-independent, so div h = 0
        let g = grid3();
        let h = sample_initial(&g, 3, |xt, xn, c| {
            if c == 0 {
                xt[1].sin() * (-xn).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let gb = sample_boundary(&g, 3, |xt, _, c| if c == 0 { xt[1].sin() } else { 0.0 }).unwrap();
        let rep = check_compatibility(&h, &gb, 1e-8);
        assert!(rep.trace_mismatch < 1e-12);
        assert!(rep.divergence_sup < 1e-10);
        assert!(rep.pass());
    }

    #[test]
    fn compatibility_flags_injected_divergence() {
        let g = grid3();
        // h_1 = sin(x_1): div h = cos(x_1), sup ~ 1
        let h = sample_initial(&g, 3, |xt, _, c| if c == 0 { xt[0].sin() } else { 0.0 }).unwrap();
        let gb = sample_boundary(&g, 3, |xt, _, c| if c == 0 { xt[0].sin() } else { 0.0 }).unwrap();
        let rep = check_compatibility(&h, &gb, 1e-8);
        assert!((rep.divergence_sup - 1.0).abs() < 1e-10);
        assert!(!rep.pass());
    }

    #[test]
    fn extend_initial_zero() {
        let g = grid3();
        let h = Field::zeros(&g, 3);
        let ext = extend_initial(&h, 1e-12).unwrap();
        assert_eq!(ext.linf(), 0.0);
    }

    #[test]
    fn extend_initial_restriction_is_bit_exact_and_divergence_free() {
        let g = grid3();
        let h = sample_initial(&g, 3, |xt, xn, c| {
            if c == 0 {
                xt[1].sin() * (-xn).exp()
            } else {
                0.0
            }
        })
        .unwrap();
        let ext = extend_initial(&h, 1e-12).unwrap();
        let back = restrict_to_half(&ext, &g);
        assert_eq!(back.values, h.values);
        // even-tangential reflection of an x_1-independent field stays
        // divergence-free on the torus
        let div = divergence_torus(&ext);
        assert!(div.linf() < 1e-10 * ext.linf().max(1.0) / g.dx_normal());
    }

    #[test]
    fn extend_initial_divfree_with_normal_component() {
        // stream form: psi = cos(x_1) sin(pi x_n / H)^4, h = (d_n psi, -d_1 psi);
        // div h = 0 on [0, H] and h_n touches both seams to third order
        let g = GridSpec::new(2, TAU, 4.0, 16, 33, 0.5, 5).unwrap();
        let hh = g.height_h;
        let k = std::f64::consts::PI / hh;
        let h = sample_initial(&g, 2, |xt, xn, c| {
            let s = (k * xn).sin();
            if c == 0 {
                xt[0].cos() * 4.0 * s.powi(3) * (k * xn).cos() * k
            } else {
                xt[0].sin() * s.powi(4)
            }
        })
        .unwrap();
        // h_n(., 0) = 0 and h_n(., H) = 0, so the reflection is clean
        let ext = extend_initial(&h, 1e-12).unwrap();
        let div = divergence_torus(&ext);
        // the sin^4 profile is not band-limited on the doubled torus, so the
        // spectral divergence carries seam-aliasing slack, shrinking with dx^4
        assert!(div.linf() < 1e-2 * ext.linf() / g.dx_normal());
        // spot-check odd/even symmetry
        let nt = g.tangential_points();
        let n_full = 2 * (g.n_normal - 1);
        for p in 0..nt {
            for k_idx in 1..g.n_normal - 1 {
                let mirror = n_full - k_idx;
                let t_dir = ext.values[(mirror * nt + p) * 2];
                let t_src = ext.values[(k_idx * nt + p) * 2];
                assert_eq!(t_dir, t_src);
                let n_dir = ext.values[(mirror * nt + p) * 2 + 1];
                let n_src = ext.values[(k_idx * nt + p) * 2 + 1];
                assert_eq!(n_dir, -n_src);
            }
        }
    }

    #[test]
    fn extend_initial_rejects_nonzero_wall_trace() {
        let g = grid3();
        let h = sample_initial(&g, 3, |xt, _, c| {
            if c == 2 {
                0.1 * xt[0].sin()
            } else {
                0.0
            }
        })
        .unwrap();
        assert!(matches!(
            extend_initial(&h, 1e-8),
            Err(HsError::Incompatible(_))
        ));
    }

    #[test]
    fn extend_tensor_zero_and_abs_profile() {
        let g = GridSpec::new(2, TAU, 4.0, 8, 9, 0.5, 3).unwrap();
        let zero = SpaceTimeField::zeros(&g, 4);
        assert_eq!(extend_tensor(&zero).slices[0].linf(), 0.0);

        // F = x_n per component reflects to the distance-to-wall profile
        let f = crate::domain::sample(&g, 4, |_, xn, _, _| xn).unwrap();
        let ext = extend_tensor(&f);
        let nt = g.tangential_points();
        let n_full = 2 * (g.n_normal - 1);
        for k in 0..n_full {
            let x = k as f64 * g.dx_normal();
            let expected = x.min(2.0 * g.height_h - x);
            let got = ext.slices[1].values[(k * nt) * 4];
            assert!((got - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn extend_tensor_is_linf_isometry() {
        let g = GridSpec::new(2, TAU, 4.0, 8, 9, 0.5, 3).unwrap();
        let f = crate::domain::sample(&g, 4, |xt, xn, t, c| {
            ((c + 1) as f64 * xt[0] + xn * 0.77 + t).sin() * (1.3 - xn * 0.1)
        })
        .unwrap();
        let ext = extend_tensor(&f);
        for (l, slice) in ext.slices.iter().enumerate() {
            assert_eq!(slice.linf(), f.slices[l].linf());
        }
    }
}
