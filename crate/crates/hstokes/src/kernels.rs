//! Time-dependent kernel evaluations: heat extension of the initial data,
//! the Duhamel integral of the projected force, and the boundary propagator
//! `w` with its composite kernel `K_ij`.
//!
//! Tangential Fourier transform turns the propagator into a family of 1-D
//! kernels. With `k` the unit-mass 1-D heat kernel and `q = |xi'|`, the
//! transformed kernel splits into
//!
//! ```text
//! A(q, x_n, tau) = -2 d/dx_n [ k(x_n, tau) ] e^{-q^2 tau}
//! J(q, x_n, tau) = Int_0^{x_n} d/dz k(z, tau) e^{-q (x_n - z)} dz
//! B = e^{-q^2 tau} J
//! K_ij = delta_ij A + (2 xi'_i xi'_j / q) B     (tangential rows)
//! K_nj = 2 i xi'_j B                            (normal row)
//! ```
//!
//! The `z` integral uses adaptive quadrature; the singular `(t-s)^{-1/2}`
//! endpoint of the time convolution is removed by the substitution
//! `sigma = sqrt(t-s)` and handled with composite midpoint product
//! integration whose moments are tabulated per (mode class, normal node,
//! lag) and reused across time steps and Picard iterations.

use crate::domain::{BoundaryField, GridSpec, SpaceTimeField};
use crate::error::{HsError, Result};
use crate::spectral::{
    boundary_slice_as_torus, fft_forward, fft_inverse, heat_propagate, SpectralField, TorusField,
    TorusGrid, TorusSpaceTime,
};
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Unit-mass 1-D heat kernel `(4 pi t)^{-1/2} exp(-x^2 / 4t)`.
#[inline]
pub fn heat_kernel_1d(x: f64, t: f64) -> f64 {
    (FOUR_PI * t).sqrt().recip() * (-x * x / (4.0 * t)).exp()
}

/// `d/dx` of the unit-mass 1-D heat kernel.
#[inline]
pub fn heat_kernel_1d_dx(x: f64, t: f64) -> f64 {
    -x / (2.0 * t) * heat_kernel_1d(x, t)
}

// ---------------------------------------------------------------------------
// heat evolution
// ---------------------------------------------------------------------------

/// Heat evolution of full-torus data: spectral propagation by
/// `exp(-|xi|^2 t)`; at `t = 0` this is the identity.
pub fn heat_evolve(data: &TorusField, t: f64) -> Result<TorusField> {
    let spec = fft_forward(data);
    Ok(fft_inverse(&heat_propagate(&spec, t)?))
}

/// Heat evolution sampled at several times, sharing one forward transform.
pub fn heat_evolve_series(data: &TorusField, times: &[f64]) -> Result<Vec<TorusField>> {
    let spec = fft_forward(data);
    times
        .par_iter()
        .map(|&t| Ok(fft_inverse(&heat_propagate(&spec, t)?)))
        .collect()
}

// ---------------------------------------------------------------------------
// Duhamel force integral
// ---------------------------------------------------------------------------

/// `phi_1(z) = (e^z - 1)/z`, stable near zero.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// `phi_2(z) = (e^z - 1 - z)/z^2`, stable near zero.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-5 {
        0.5 + z / 6.0 + z * z / 24.0 + z * z * z / 120.0
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// Duhamel integral of the Leray-projected force `div F` on the full torus:
///
/// `V_j(t) = Int_0^t e^{-|xi|^2 (t-s)} (i xi_k) P_ij F_ki(s) ds`
///
/// computed with an exact exponential integrator assuming the force spectrum
/// is piecewise linear in time. `V(0) = 0` and the output is mode-wise
/// divergence-free.
pub fn duhamel_force(f_tensor: &TorusSpaceTime) -> TorusSpaceTime {
    let grid = &f_tensor.grid;
    let dim = grid.dim;
    assert_eq!(
        f_tensor.components,
        dim * dim,
        "duhamel_force expects a rank-2 tensor field"
    );
    let n_time = f_tensor.slices.len();
    let dt = f_tensor.dt;
    let points = grid.points();

    // forward transforms of every slice
    let spectra: Vec<SpectralField> = f_tensor.slices.par_iter().map(fft_forward).collect();

    // projected divergence g_hat_j(s) = P_jk (i xi_l F_lk); bins with any
    // Nyquist axis are zeroed so that div V vanishes in the symbol algebra
    let n_axes = grid.shape.len();
    let g_hat: Vec<Vec<Complex64>> = spectra
        .par_iter()
        .map(|spec| {
            let mut out = vec![Complex64::new(0.0, 0.0); points * dim];
            let mut idx = vec![0usize; n_axes];
            let mut xi = vec![0.0f64; n_axes];
            for flat in 0..points {
                grid.decode(flat, &mut idx);
                let mut nyquist = false;
                for a in 0..n_axes {
                    xi[a] = grid.wavevector(a, idx[a]);
                    nyquist |= grid.is_nyquist(a, idx[a]);
                }
                if nyquist {
                    continue;
                }
                let norm2: f64 = xi.iter().map(|x| x * x).sum();
                if norm2 == 0.0 {
                    continue; // zero mode of div F vanishes
                }
                // d_i = i xi_k F_ki
                let mut d = vec![Complex64::new(0.0, 0.0); dim];
                for (i, di) in d.iter_mut().enumerate() {
                    for k in 0..dim {
                        let xik = xi[grid.axis_of_component(k)];
                        *di +=
                            Complex64::new(0.0, xik) * spec.modes[flat * dim * dim + k * dim + i];
                    }
                }
                // g = P d
                for j in 0..dim {
                    let xij = xi[grid.axis_of_component(j)];
                    let mut acc = d[j];
                    for (i, di) in d.iter().enumerate() {
                        let xii = xi[grid.axis_of_component(i)];
                        acc -= di * (xij * xii / norm2);
                    }
                    out[flat * dim + j] = acc;
                }
            }
            out
        })
        .collect();

    // exact exponential recurrence per mode:
    // V(t_{l+1}) = E V(t_l) + dt [ g_l (phi1 - phi2) + g_{l+1} phi2 ](-lambda dt)
    let mode_series: Vec<Vec<Complex64>> = (0..points)
        .into_par_iter()
        .map(|flat| {
            let mut idx = vec![0usize; n_axes];
            grid.decode(flat, &mut idx);
            let mut lambda = 0.0;
            for a in 0..n_axes {
                let xi = grid.wavevector(a, idx[a]);
                lambda += xi * xi;
            }
            let z = -lambda * dt;
            let e = z.exp();
            let w_old = dt * (phi1(z) - phi2(z));
            let w_new = dt * phi2(z);
            let mut series = vec![Complex64::new(0.0, 0.0); n_time * dim];
            for l in 0..n_time - 1 {
                for c in 0..dim {
                    let v = series[l * dim + c] * e
                        + g_hat[l][flat * dim + c] * w_old
                        + g_hat[l + 1][flat * dim + c] * w_new;
                    series[(l + 1) * dim + c] = v;
                }
            }
            series
        })
        .collect();

    // scatter to slice spectra and invert
    let slices: Vec<TorusField> = (0..n_time)
        .into_par_iter()
        .map(|l| {
            let mut spec = SpectralField::zeros(grid, dim);
            for flat in 0..points {
                for c in 0..dim {
                    spec.modes[flat * dim + c] = mode_series[flat][l * dim + c];
                }
            }
            fft_inverse(&spec)
        })
        .collect();

    TorusSpaceTime {
        grid: grid.clone(),
        components: dim,
        dt,
        slices,
    }
}

// ---------------------------------------------------------------------------
// Solonnikov boundary propagator
// ---------------------------------------------------------------------------

/// Quadrature and screening parameters for the boundary propagator.
#[derive(Debug, Clone, Copy)]
pub struct SolonnikovParams {
    /// Midpoint nodes on the singular first lag interval (sigma variable).
    pub sigma_nodes_first: usize,
    /// Midpoint nodes on lag intervals 2..=4.
    pub sigma_nodes_near: usize,
    /// Midpoint nodes on later lag intervals.
    pub sigma_nodes_far: usize,
    /// Absolute tolerance scale of the adaptive z-quadrature.
    pub j_quad_tol: f64,
    /// Modes with relative spectral magnitude below this contribute below
    /// roundoff and are skipped.
    pub mode_cutoff_rel: f64,
    /// Relative tolerance for the `G_n = 0`, `G(., 0) = 0` preconditions.
    pub precondition_tol: f64,
}

impl Default for SolonnikovParams {
    fn default() -> Self {
        SolonnikovParams {
            sigma_nodes_first: 64,
            sigma_nodes_near: 24,
            sigma_nodes_far: 12,
            j_quad_tol: 1e-10,
            mode_cutoff_rel: 1e-14,
            precondition_tol: 1e-8,
        }
    }
}

/// Adaptive Simpson on [a, b] with an initial panel split.
fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, panels: usize) -> f64 {
    let mut acc = 0.0;
    let h = (b - a) / panels as f64;
    for i in 0..panels {
        let pa = a + i as f64 * h;
        let pb = pa + h;
        let fa = f(pa);
        let fb = f(pb);
        let m = 0.5 * (pa + pb);
        let fm = f(m);
        let whole = (fa + 4.0 * fm + fb) * (pb - pa) / 6.0;
        acc += simpson_rec(f, pa, pb, fa, fm, fb, whole, tol / panels as f64, 24);
    }
    acc
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + 4.0 * flm + fm) * (m - a) / 6.0;
    let right = (fm + 4.0 * frm + fb) * (b - m) / 6.0;
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// `J(q, x_n, tau) = Int_0^{x_n} d/dz k(z, tau) e^{-q (x_n - z)} dz`.
///
/// The integrand concentrates in a layer of width `sqrt(tau)` at the wall, so
/// the interval is split there before the adaptive pass.
fn j_integral(q: f64, x_n: f64, tau: f64, tol_scale: f64) -> f64 {
    if x_n <= 0.0 {
        return 0.0;
    }
    let f = |z: f64| heat_kernel_1d_dx(z, tau) * (-q * (x_n - z)).exp();
    let scale = (FOUR_PI * tau).sqrt().recip();
    let tol = tol_scale * scale.max(1.0);
    let split = (10.0 * tau.sqrt()).min(x_n);
    let mut acc = adaptive_simpson(&f, 0.0, split, tol, 8);
    if split < x_n {
        acc += adaptive_simpson(&f, split, x_n, tol, 4);
    }
    acc
}

/// Pointwise transformed kernel `K_hat(xi', x_n, tau)` as a `dim x (dim-1)`
/// row-major matrix (row = velocity component, column = forcing component).
///
/// At `xi' = 0` the composite term vanishes and only the diagonal
/// `-2 d_{x_n} k` part survives; at `x_n = 0` the whole kernel vanishes
/// pointwise (the boundary row of `w` is assigned separately).
pub fn solonnikov_kernel_hat(
    xi_t: &[f64],
    x_n: f64,
    tau: f64,
    j_quad_tol: f64,
) -> Result<Vec<Complex64>> {
    if tau <= 0.0 {
        return Err(HsError::InvalidData(format!(
            "kernel lag must be positive, got {tau}"
        )));
    }
    let dim = xi_t.len() + 1;
    let q2: f64 = xi_t.iter().map(|x| x * x).sum();
    let q = q2.sqrt();
    let decay = (-q2 * tau).exp();
    let a_val = -2.0 * heat_kernel_1d_dx(x_n, tau) * decay;
    let b_val = if q == 0.0 {
        0.0
    } else {
        decay * j_integral(q, x_n, tau, j_quad_tol)
    };
    let mut out = vec![Complex64::new(0.0, 0.0); dim * (dim - 1)];
    for j in 0..dim - 1 {
        for i in 0..dim - 1 {
            let mut v = Complex64::new(0.0, 0.0);
            if i == j {
                v += a_val;
            }
            if q > 0.0 {
                v += 2.0 * xi_t[i] * xi_t[j] / q * b_val;
            }
            out[i * (dim - 1) + j] = v;
        }
        out[(dim - 1) * (dim - 1) + j] = Complex64::new(0.0, 2.0 * xi_t[j] * b_val);
    }
    Ok(out)
}

/// Product-integration moments of the scalar kernel factors for one mode
/// class, indexed `[d - 1][k_normal]` for lags `d = 1..n_time-1`.
struct ClassMoments {
    /// Int over lag interval d of A(tau) * (tau - (d-1) dt)/dt.
    pa: Vec<f64>,
    /// Int of A(tau) * (d dt - tau)/dt.
    qa: Vec<f64>,
    pb: Vec<f64>,
    qb: Vec<f64>,
}

/// Cached kernel moments, reusable across time steps and Picard iterations.
///
/// The expensive factors depend on the tangential mode only through
/// `q = |xi'|`, so moments are stored per squared-integer-mode class.
pub struct SolonnikovKernelTable {
    grid: GridSpec,
    pub params: SolonnikovParams,
    classes: HashMap<u64, ClassMoments>,
}

impl SolonnikovKernelTable {
    pub fn new(grid: &GridSpec, params: SolonnikovParams) -> Self {
        SolonnikovKernelTable {
            grid: *grid,
            params,
            classes: HashMap::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn sigma_nodes(&self, d: usize) -> usize {
        if d == 1 {
            self.params.sigma_nodes_first
        } else if d <= 4 {
            self.params.sigma_nodes_near
        } else {
            self.params.sigma_nodes_far
        }
    }

    /// Build moments for every class key in `keys` that is not yet cached.
    fn ensure_classes(&mut self, mut keys: Vec<u64>) {
        keys.sort_unstable();
        keys.dedup();
        let missing: Vec<u64> = keys
            .into_iter()
            .filter(|k| !self.classes.contains_key(k))
            .collect();
        if missing.is_empty() {
            return;
        }
        let built: Vec<(u64, ClassMoments)> = missing
            .par_iter()
            .map(|&key| (key, self.build_class(key)))
            .collect();
        for (key, moments) in built {
            self.classes.insert(key, moments);
        }
    }

    /// Midpoint product integration in the sigma = sqrt(lag) variable.
    fn build_class(&self, key: u64) -> ClassMoments {
        let grid = &self.grid;
        let dt = grid.dt();
        let n_lags = grid.n_time - 1;
        let n_normal = grid.n_normal;
        let q = std::f64::consts::TAU / grid.period_l * (key as f64).sqrt();
        let q2 = q * q;
        let tol = self.params.j_quad_tol;

        let per_normal: Vec<Vec<[f64; 4]>> = (0..n_normal)
            .into_par_iter()
            .map(|k| {
                let x_n = grid.normal(k);
                let mut rows = vec![[0.0f64; 4]; n_lags];
                if k == 0 {
                    return rows; // kernel vanishes pointwise at the wall
                }
                for d in 1..=n_lags {
                    let lag_lo = (d - 1) as f64 * dt;
                    let lag_hi = d as f64 * dt;
                    let s_lo = lag_lo.sqrt();
                    let s_hi = lag_hi.sqrt();
                    let nodes = self.sigma_nodes(d);
                    let ds = (s_hi - s_lo) / nodes as f64;
                    let mut pa = 0.0;
                    let mut qa = 0.0;
                    let mut pb = 0.0;
                    let mut qb = 0.0;
                    for m in 0..nodes {
                        let sigma = s_lo + (m as f64 + 0.5) * ds;
                        let tau = sigma * sigma;
                        let jac = 2.0 * sigma * ds;
                        let w_p = (tau - lag_lo) / dt;
                        let w_q = (lag_hi - tau) / dt;
                        let decay = (-q2 * tau).exp();
                        let a_val = -2.0 * heat_kernel_1d_dx(x_n, tau) * decay;
                        pa += jac * w_p * a_val;
                        qa += jac * w_q * a_val;
                        if q > 0.0 {
                            let b_val = decay * j_integral(q, x_n, tau, tol);
                            pb += jac * w_p * b_val;
                            qb += jac * w_q * b_val;
                        }
                    }
                    rows[d - 1] = [pa, qa, pb, qb];
                }
                rows
            })
            .collect();

        let mut pa = vec![0.0; n_lags * n_normal];
        let mut qa = vec![0.0; n_lags * n_normal];
        let mut pb = vec![0.0; n_lags * n_normal];
        let mut qb = vec![0.0; n_lags * n_normal];
        for k in 0..n_normal {
            for d in 0..n_lags {
                pa[d * n_normal + k] = per_normal[k][d][0];
                qa[d * n_normal + k] = per_normal[k][d][1];
                pb[d * n_normal + k] = per_normal[k][d][2];
                qb[d * n_normal + k] = per_normal[k][d][3];
            }
        }
        ClassMoments { pa, qa, pb, qb }
    }
}

/// Squared-integer-mode class key and tangential wavevector for a flat
/// tangential mode index.
fn mode_key_and_xi(torus: &TorusGrid, flat: usize, idx: &mut [usize], xi: &mut [f64]) -> u64 {
    torus.decode(flat, idx);
    let mut key = 0u64;
    for a in 0..torus.shape.len() {
        let m = torus.signed_mode(a, idx[a]);
        key += (m * m) as u64;
        xi[a] = torus.wavevector(a, idx[a]);
    }
    key
}

/// Boundary propagator: solves the Stokes system with zero force, zero
/// initial data and tangential wall data `G = (G', 0)`,
///
/// `w_i(x, t) = Int_0^t Int K_ij(x'-y', x_n, t-s) G_j(y', s) dy' ds`,
///
/// per tangential mode with product integration in time. The `x_n = 0` row is
/// assigned `G` exactly (the kernel converges to `G` only as a distributional
/// limit) and `w(., ., 0) = 0`.
pub fn solonnikov_w(
    g_cap: &BoundaryField,
    table: &mut SolonnikovKernelTable,
) -> Result<SpaceTimeField> {
    let grid = *table.grid();
    if g_cap.grid != grid {
        return Err(HsError::ShapeMismatch(
            "boundary data grid differs from kernel table grid".into(),
        ));
    }
    let dim = grid.dim;
    if g_cap.components != dim {
        return Err(HsError::ShapeMismatch(format!(
            "expected {dim} components of wall data, got {}",
            g_cap.components
        )));
    }
    let scale = g_cap.linf();
    let tol = table.params.precondition_tol * scale.max(1e-300);
    // Theorem hypotheses: G_n = 0 and G(., 0) = 0
    let mut gn_sup: f64 = 0.0;
    for l in 0..grid.n_time {
        for p in 0..grid.tangential_points() {
            gn_sup = gn_sup.max(g_cap.at(l, p, dim - 1).abs());
        }
    }
    if gn_sup > tol {
        return Err(HsError::Incompatible(format!(
            "boundary propagator requires G_n = 0, got sup |G_n| = {gn_sup:.3e}"
        )));
    }
    let mut g0_sup: f64 = 0.0;
    for p in 0..grid.tangential_points() {
        for c in 0..dim {
            g0_sup = g0_sup.max(g_cap.at(0, p, c).abs());
        }
    }
    if g0_sup > tol {
        return Err(HsError::Incompatible(format!(
            "boundary propagator requires G(., 0) = 0, got sup = {g0_sup:.3e}"
        )));
    }

    let mut w = SpaceTimeField::zeros(&grid, dim);
    if scale == 0.0 {
        return Ok(w);
    }

    let torus = TorusGrid::tangential(&grid);
    let nt = grid.tangential_points();
    let n_time = grid.n_time;
    let n_normal = grid.n_normal;
    let n_axes = torus.shape.len();

    // tangential spectra of G, slice by slice
    let g_spec: Vec<SpectralField> = (0..n_time)
        .into_par_iter()
        .map(|l| fft_forward(&boundary_slice_as_torus(g_cap, l)))
        .collect();

    // per-mode magnitude screening: exactly scale-invariant, so linearity in
    // G is preserved by the cutoff
    let mut mode_amp = vec![0.0f64; nt];
    for spec in &g_spec {
        for (flat, amp) in mode_amp.iter_mut().enumerate() {
            for c in 0..dim {
                *amp = amp.max(spec.modes[flat * dim + c].norm());
            }
        }
    }
    let global_amp = mode_amp.iter().fold(0.0f64, |m, &v| m.max(v));
    let cutoff = table.params.mode_cutoff_rel * global_amp;
    let active: Vec<usize> = (0..nt).filter(|&m| mode_amp[m] > cutoff).collect();

    // moment classes needed by the active modes
    let mut idx = vec![0usize; n_axes];
    let mut xi = vec![0.0f64; n_axes];
    let keys: Vec<u64> = active
        .iter()
        .map(|&flat| mode_key_and_xi(&torus, flat, &mut idx, &mut xi))
        .collect();
    table.ensure_classes(keys);

    // mode-wise time convolution with the product-integration weights
    let n_lags = n_time - 1;
    let per_mode: Vec<(usize, Vec<Complex64>)> = active
        .par_iter()
        .map(|&flat| {
            let mut idx = vec![0usize; n_axes];
            let mut xi = vec![0.0f64; n_axes];
            let key = mode_key_and_xi(&torus, flat, &mut idx, &mut xi);
            let q = std::f64::consts::TAU / grid.period_l * (key as f64).sqrt();
            let moments = &table.classes[&key];
            // series[(l * n_normal + k) * dim + c]
            let mut series = vec![Complex64::new(0.0, 0.0); n_time * n_normal * dim];
            for l in 1..n_time {
                for d in 1..=l.min(n_lags) {
                    let g_old = &g_spec[l - d].modes[flat * dim..flat * dim + dim];
                    let g_new = &g_spec[l - d + 1].modes[flat * dim..flat * dim + dim];
                    for k in 1..n_normal {
                        let pa = moments.pa[(d - 1) * n_normal + k];
                        let qa = moments.qa[(d - 1) * n_normal + k];
                        let pb = moments.pb[(d - 1) * n_normal + k];
                        let qb = moments.qb[(d - 1) * n_normal + k];
                        let base = (l * n_normal + k) * dim;
                        for j in 0..dim - 1 {
                            let gj = g_old[j] * pa + g_new[j] * qa;
                            // diagonal A part
                            series[base + j] += gj;
                            // composite B part
                            if q > 0.0 {
                                let gb = g_old[j] * pb + g_new[j] * qb;
                                for i in 0..dim - 1 {
                                    series[base + i] += gb * (2.0 * xi[i] * xi[j] / q);
                                }
                                series[base + dim - 1] += gb * Complex64::new(0.0, 2.0 * xi[j]);
                            }
                        }
                    }
                }
            }
            (flat, series)
        })
        .collect();

    // scatter the mode series into per-slice spectra and invert; the slice
    // spectra carry n_normal * dim entries per tangential mode
    let mut slice_specs: Vec<SpectralField> = (1..n_time)
        .map(|_| SpectralField::zeros(&torus, dim * n_normal))
        .collect();
    for (flat, series) in &per_mode {
        for l in 1..n_time {
            for k in 0..n_normal {
                for c in 0..dim {
                    slice_specs[l - 1].modes[(flat * n_normal + k) * dim + c] =
                        series[(l * n_normal + k) * dim + c];
                }
            }
        }
    }
    let phys: Vec<TorusField> = slice_specs.par_iter().map(fft_inverse).collect();
    for l in 1..n_time {
        let p = &phys[l - 1];
        for k in 1..n_normal {
            for pt in 0..nt {
                for c in 0..dim {
                    *w.slices[l].at_mut(k, pt, c) = p.values[(pt * n_normal + k) * dim + c];
                }
            }
        }
    }
    // boundary row carries the data exactly; w(., ., 0) stays zero
    for l in 1..n_time {
        for pt in 0..nt {
            for c in 0..dim {
                *w.slices[l].at_mut(0, pt, c) = g_cap.at(l, pt, c);
            }
        }
    }
    Ok(w)
}
