//! Independent reference solvers used for cross-checks: a 1-D half-line
//! heat/Rayleigh solver and finite-difference Stokes/Navier-Stokes projection
//! solvers on the truncated box.
//!
//! These deliberately share no discretization with the kernel pipeline:
//! second-order finite differences on a MAC-staggered normal grid, implicit
//! trapezoidal (Crank-Nicolson) time stepping, and a pressure Poisson solve
//! per step. The staggering makes the discrete divergence and gradient
//! operators exactly compatible, so the post-projection divergence sits at
//! solver precision.
//!
//! The ceiling condition is homogeneous Dirichlet, which differs from the
//! kernel pipeline's implicit decay; comparisons are therefore restricted to
//! `x_n <= H/2` where the ceiling influence is negligible.

use crate::domain::{BoundaryField, Field, GridSpec, SpaceTimeField};
use crate::error::{HsError, Result};
use crate::spectral::{boundary_slice_as_torus, fft_forward, fft_inverse, SpectralField, TorusField, TorusGrid};
use num_complex::Complex64;

/// Oracle resolution and stability parameters.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    /// Normal resolution multiplier versus the main grid.
    pub normal_refine: usize,
    /// Time resolution multiplier versus the main grid.
    pub time_refine: usize,
    /// Advective CFL limit for the explicit nonlinear term.
    pub cfl_limit: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            normal_refine: 2,
            time_refine: 2,
            cfl_limit: 0.9,
        }
    }
}

impl OracleConfig {
    /// The refined grid this oracle runs on for a given main grid.
    pub fn oracle_grid(&self, grid: &GridSpec) -> Result<GridSpec> {
        grid.refined(self.normal_refine, self.time_refine)
    }
}

/// Thomas algorithm for a tridiagonal system with real coefficients and
/// complex right-hand side. `diag`, `lower`, `upper` are overwritten-free.
fn solve_tridiag(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[Complex64],
    out: &mut Vec<Complex64>,
) {
    let n = diag.len();
    let mut c_star = vec![0.0f64; n];
    let mut d_star = vec![Complex64::new(0.0, 0.0); n];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c_star[i - 1];
        c_star[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d_star[i] = (rhs[i] - d_star[i - 1] * lower[i]) / m;
    }
    out.clear();
    out.resize(n, Complex64::new(0.0, 0.0));
    out[n - 1] = d_star[n - 1];
    for i in (0..n - 1).rev() {
        let next = out[i + 1];
        out[i] = d_star[i] - next * c_star[i];
    }
}

/// Real-valued Thomas solve.
fn solve_tridiag_real(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c_star = vec![0.0f64; n];
    let mut d_star = vec![0.0f64; n];
    c_star[0] = upper[0] / diag[0];
    d_star[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c_star[i - 1];
        c_star[i] = if i + 1 < n { upper[i] / m } else { 0.0 };
        d_star[i] = (rhs[i] - lower[i] * d_star[i - 1]) / m;
    }
    let mut out = vec![0.0f64; n];
    out[n - 1] = d_star[n - 1];
    for i in (0..n - 1).rev() {
        out[i] = d_star[i] - c_star[i] * out[i + 1];
    }
    out
}

/// Crank-Nicolson solve of `u_t = u_xx` on `(0, H)` with `u(0, t) = a(t)`,
/// `u(H, t) = 0`, `u(., 0) = 0`. Returns `[time][node]`; second-order
/// self-convergent.
pub fn rayleigh_1d(
    a: impl Fn(f64) -> f64,
    n_normal: usize,
    height: f64,
    t_final: f64,
    n_time: usize,
) -> Vec<Vec<f64>> {
    let dx = height / (n_normal - 1) as f64;
    let dt = t_final / (n_time - 1) as f64;
    let r = dt / (2.0 * dx * dx);
    let m = n_normal - 2; // interior unknowns
    let lower = vec![-r; m];
    let diag = vec![1.0 + 2.0 * r; m];
    let upper = vec![-r; m];
    let mut u = vec![vec![0.0f64; n_normal]; n_time];
    for l in 0..n_time - 1 {
        let t_old = l as f64 * dt;
        let t_new = (l + 1) as f64 * dt;
        let mut rhs = vec![0.0f64; m];
        for i in 0..m {
            let k = i + 1;
            rhs[i] = u[l][k] + r * (u[l][k - 1] - 2.0 * u[l][k] + u[l][k + 1]);
        }
        // explicit-side wall value is already in u[l][0]; the implicit side
        // moves -r * a(t_new) to the right-hand side
        rhs[0] += r * a(t_new);
        let _ = t_old;
        let sol = solve_tridiag_real(&lower, &diag, &upper, &rhs);
        u[l + 1][0] = a(t_new);
        u[l + 1][n_normal - 1] = 0.0;
        u[l + 1][1..=m].copy_from_slice(&sol);
    }
    u
}

/// Classical Duhamel quadrature for the half-line heat problem with wall
/// value `a(t)`: independent closed-form-kernel oracle used to validate
/// `rayleigh_1d` itself.
pub fn rayleigh_duhamel(a: impl Fn(f64) -> f64, x: f64, t: f64, nodes: usize) -> f64 {
    // Int_0^t x/(sqrt(4 pi) (t-s)^{3/2}) exp(-x^2/(4(t-s))) a(s) ds,
    // sigma = sqrt(t - s) substitution then midpoint
    let s_max = t.sqrt();
    let ds = s_max / nodes as f64;
    let mut acc = 0.0;
    for m in 0..nodes {
        let sigma = (m as f64 + 0.5) * ds;
        let tau = sigma * sigma;
        // kernel * 2 sigma dsigma with (t-s)^{3/2} = sigma^3
        let contrib = 2.0 * ds * x / ((4.0 * std::f64::consts::PI).sqrt() * sigma * sigma)
            * (-x * x / (4.0 * tau)).exp();
        acc += contrib * a(t - tau);
    }
    acc
}

/// Per-mode MAC state: tangential components at cell centers, normal
/// component at faces, pressure at cell centers.
struct ModeState {
    u_t: Vec<Vec<Complex64>>, // [c][cell]
    u_n: Vec<Complex64>,      // [face]
    p: Vec<Complex64>,        // [cell]
}

struct FdWorkspace {
    grid: GridSpec,
    torus: TorusGrid,
    q2: Vec<f64>,         // per mode |xi'|^2
    xi: Vec<Vec<f64>>,    // per mode tangential wavevector
    g_hat: Vec<SpectralField>,
    h_hat: SpectralField,
    f_hat: Option<Vec<SpectralField>>,
}

fn build_workspace(
    h: &Field,
    g: &BoundaryField,
    f_tensor: Option<&SpaceTimeField>,
    grid: &GridSpec,
) -> Result<FdWorkspace> {
    let dim = grid.dim;
    if h.components != dim || g.components != dim {
        return Err(HsError::ShapeMismatch("oracle expects vector h and g".into()));
    }
    let torus = TorusGrid::tangential(grid);
    let nt = grid.tangential_points();
    let g_hat: Vec<SpectralField> = (0..grid.n_time)
        .map(|l| fft_forward(&boundary_slice_as_torus(g, l)))
        .collect();
    // h as tangential spectra per normal node: pack as [node * dim + c]
    let mut h_field = TorusField::zeros(&torus, dim * grid.n_normal);
    for k in 0..grid.n_normal {
        for p in 0..nt {
            for c in 0..dim {
                h_field.values[p * dim * grid.n_normal + k * dim + c] = h.at(k, p, c);
            }
        }
    }
    let h_hat = fft_forward(&h_field);
    let f_hat = f_tensor.map(|f| {
        (0..grid.n_time)
            .map(|l| {
                let mut t = TorusField::zeros(&torus, dim * dim * grid.n_normal);
                for k in 0..grid.n_normal {
                    for p in 0..nt {
                        for c in 0..dim * dim {
                            t.values[p * dim * dim * grid.n_normal + k * dim * dim + c] =
                                f.slices[l].at(k, p, c);
                        }
                    }
                }
                fft_forward(&t)
            })
            .collect()
    });
    let n_axes = torus.shape.len();
    let mut idx = vec![0usize; n_axes];
    let mut q2 = vec![0.0f64; nt];
    let mut xi = vec![vec![0.0f64; n_axes]; nt];
    for flat in 0..nt {
        torus.decode(flat, &mut idx);
        for a in 0..n_axes {
            let w = if torus.is_nyquist(a, idx[a]) {
                0.0 // odd tangential derivatives drop the Nyquist bin
            } else {
                torus.wavevector(a, idx[a])
            };
            xi[flat][a] = w;
            q2[flat] += w * w;
        }
    }
    Ok(FdWorkspace {
        grid: *grid,
        torus,
        q2,
        xi,
        g_hat,
        h_hat,
        f_hat,
    })
}

impl FdWorkspace {
    fn dim(&self) -> usize {
        self.grid.dim
    }

    fn init_mode(&self, flat: usize) -> ModeState {
        let dim = self.dim();
        let n = self.grid.n_normal;
        let cells = n - 1;
        let mut u_t = vec![vec![Complex64::new(0.0, 0.0); cells]; dim - 1];
        let mut u_n = vec![Complex64::new(0.0, 0.0); n];
        for k in 0..n {
            u_n[k] = self.h_hat.modes[flat * dim * n + k * dim + (dim - 1)];
        }
        for c in 0..dim - 1 {
            for j in 0..cells {
                let a = self.h_hat.modes[flat * dim * n + j * dim + c];
                let b = self.h_hat.modes[flat * dim * n + (j + 1) * dim + c];
                u_t[c][j] = (a + b) * 0.5;
            }
        }
        ModeState {
            u_t,
            u_n,
            p: vec![Complex64::new(0.0, 0.0); cells],
        }
    }

    /// div F for this mode: tangential part at cell centers and interior
    /// faces, from the nodal tensor spectrum at slice `l`.
    fn force_mode(&self, flat: usize, l: usize) -> (Vec<Vec<Complex64>>, Vec<Complex64>) {
        let dim = self.dim();
        let n = self.grid.n_normal;
        let cells = n - 1;
        let dx = self.grid.dx_normal();
        let mut f_t = vec![vec![Complex64::new(0.0, 0.0); cells]; dim - 1];
        let mut f_n = vec![Complex64::new(0.0, 0.0); n];
        let Some(f_hat) = &self.f_hat else {
            return (f_t, f_n);
        };
        let spec = &f_hat[l];
        let at = |k: usize, comp: usize| -> Complex64 {
            spec.modes[flat * dim * dim * n + k * dim * dim + comp]
        };
        // (div F)_i = i xi_a F_{a,i} + d_n F_{n,i}
        for (c, f_tc) in f_t.iter_mut().enumerate() {
            for (j, v) in f_tc.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..dim - 1 {
                    let fk = (at(j, a * dim + c) + at(j + 1, a * dim + c)) * 0.5;
                    acc += Complex64::new(0.0, self.xi[flat][a]) * fk;
                }
                acc += (at(j + 1, (dim - 1) * dim + c) - at(j, (dim - 1) * dim + c)) / dx;
                *v = acc;
            }
        }
        for k in 1..n - 1 {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dim - 1 {
                acc += Complex64::new(0.0, self.xi[flat][a]) * at(k, a * dim + (dim - 1));
            }
            acc += (at(k + 1, dim * dim - 1) - at(k - 1, dim * dim - 1)) / (2.0 * dx);
            f_n[k] = acc;
        }
        (f_t, f_n)
    }
}

/// One Crank-Nicolson + incremental-projection step for a single mode.
///
/// `adv_t`/`adv_n` carry the explicit advective contribution (zero for the
/// linear Stokes oracle).
#[allow(clippy::too_many_arguments)]
fn mode_step(
    ws: &FdWorkspace,
    flat: usize,
    state: &mut ModeState,
    l: usize,
    f_t_mid: &[Vec<Complex64>],
    f_n_mid: &[Complex64],
    adv_t: &[Vec<Complex64>],
    adv_n: &[Complex64],
) {
    let dim = ws.dim();
    let grid = &ws.grid;
    let n = grid.n_normal;
    let cells = n - 1;
    let dx = grid.dx_normal();
    let dt = grid.dt();
    let q2 = ws.q2[flat];
    let r = dt / (2.0 * dx * dx);
    let g_old = &ws.g_hat[l].modes[flat * dim..(flat + 1) * dim];
    let g_new = &ws.g_hat[l + 1].modes[flat * dim..(flat + 1) * dim];

    let mut rhs = vec![Complex64::new(0.0, 0.0); cells];
    let mut sol = Vec::new();

    // tangential components at cell centers, ghost-cell Dirichlet walls
    for c in 0..dim - 1 {
        let u = &state.u_t[c];
        let lap = |j: usize, u: &[Complex64], bc_lo: Complex64, bc_hi: Complex64| -> Complex64 {
            let um = if j == 0 { 2.0 * bc_lo - u[0] } else { u[j - 1] };
            let up = if j + 1 == cells {
                2.0 * bc_hi - u[cells - 1]
            } else {
                u[j + 1]
            };
            (um - 2.0 * u[j] + up) / (dx * dx) - q2 * u[j]
        };
        let zero = Complex64::new(0.0, 0.0);
        for (j, r_out) in rhs.iter_mut().enumerate() {
            let grad_p = Complex64::new(0.0, ws.xi[flat][c]) * state.p[j];
            *r_out = u[j]
                + dt * 0.5 * lap(j, u, g_old[c], zero)
                + dt * (f_t_mid[c][j] + adv_t[c][j] - grad_p);
        }
        // implicit side: (I - dt/2 (D2 - q2)) with ghost Dirichlet folded in
        let mut lower = vec![-r; cells];
        let mut diag = vec![1.0 + 2.0 * r + 0.5 * dt * q2; cells];
        let mut upper = vec![-r; cells];
        // ghost at wall: u_{-1} = 2 g - u_0
        diag[0] += r; // -r * (-u_0) folded
        rhs[0] += 2.0 * r * g_new[c];
        // ghost at ceiling: u_cells = -u_{cells-1}
        diag[cells - 1] += r;
        lower[0] = 0.0;
        upper[cells - 1] = 0.0;
        solve_tridiag(&lower, &diag, &upper, &rhs, &mut sol);
        state.u_t[c].copy_from_slice(&sol);
    }

    // normal component at interior faces, Dirichlet at wall/ceiling faces
    {
        let m = n - 2;
        let u = &state.u_n;
        let mut rhs_n = vec![Complex64::new(0.0, 0.0); m];
        for i in 0..m {
            let k = i + 1;
            let lap = (u[k - 1] - 2.0 * u[k] + u[k + 1]) / (dx * dx) - q2 * u[k];
            // face pressure gradient from adjacent cells
            let grad_p = (state.p[k] - state.p[k - 1]) / dx;
            rhs_n[i] = u[k] + dt * 0.5 * lap + dt * (f_n_mid[k] + adv_n[k] - grad_p);
        }
        let bc_lo_new = g_new[dim - 1];
        rhs_n[0] += r * bc_lo_new;
        let mut lower = vec![-r; m];
        let diag = vec![1.0 + 2.0 * r + 0.5 * dt * q2; m];
        let mut upper = vec![-r; m];
        lower[0] = 0.0;
        upper[m - 1] = 0.0;
        solve_tridiag(&lower, &diag, &upper, &rhs_n, &mut sol);
        state.u_n[0] = bc_lo_new;
        state.u_n[n - 1] = Complex64::new(0.0, 0.0);
        state.u_n[1..=m].copy_from_slice(&sol);
        let _ = &diag;
        let _ = &lower;
        let _ = &upper;
    }

    // pressure correction: (D2 - q2) phi = div u* / dt, Neumann walls
    {
        let mut div = vec![Complex64::new(0.0, 0.0); cells];
        for (j, d) in div.iter_mut().enumerate() {
            let mut acc = (state.u_n[j + 1] - state.u_n[j]) / dx;
            for c in 0..dim - 1 {
                acc += Complex64::new(0.0, ws.xi[flat][c]) * state.u_t[c][j];
            }
            *d = acc / dt;
        }
        let mut lower = vec![1.0 / (dx * dx); cells];
        let mut diag = vec![-2.0 / (dx * dx) - q2; cells];
        let mut upper = vec![1.0 / (dx * dx); cells];
        // Neumann ghosts: phi_{-1} = phi_0, phi_cells = phi_{cells-1}
        diag[0] += 1.0 / (dx * dx);
        diag[cells - 1] += 1.0 / (dx * dx);
        lower[0] = 0.0;
        upper[cells - 1] = 0.0;
        if q2 == 0.0 {
            // remove the mean (solvability) and pin the first cell
            let mean = div.iter().sum::<Complex64>() / cells as f64;
            for d in div.iter_mut() {
                *d -= mean;
            }
            diag[0] = 1.0;
            upper[0] = 0.0;
            div[0] = Complex64::new(0.0, 0.0);
        }
        let mut phi = Vec::new();
        solve_tridiag(&lower, &diag, &upper, &div, &mut phi);
        for c in 0..dim - 1 {
            let factor = Complex64::new(0.0, ws.xi[flat][c]);
            for j in 0..cells {
                let delta = factor * phi[j] * dt;
                state.u_t[c][j] -= delta;
            }
        }
        for k in 1..n - 1 {
            state.u_n[k] -= dt * (phi[k] - phi[k - 1]) / dx;
        }
        for (pj, fj) in state.p.iter_mut().zip(phi.iter()) {
            *pj += fj;
        }
    }
}

/// Gather mode states into a nodal space-time slice (tangential components
/// interpolated from cell centers, boundary rows set to the data).
fn states_to_slice(
    ws: &FdWorkspace,
    states: &[ModeState],
    l: usize,
    out: &mut SpaceTimeField,
) {
    let dim = ws.dim();
    let grid = &ws.grid;
    let n = grid.n_normal;
    let nt = grid.tangential_points();
    let mut spec = SpectralField::zeros(&ws.torus, dim * n);
    for (flat, st) in states.iter().enumerate() {
        for k in 0..n {
            for c in 0..dim - 1 {
                let v = if k == 0 {
                    ws.g_hat[l].modes[flat * dim + c]
                } else if k == n - 1 {
                    Complex64::new(0.0, 0.0)
                } else {
                    (st.u_t[c][k - 1] + st.u_t[c][k]) * 0.5
                };
                spec.modes[flat * dim * n + k * dim + c] = v;
            }
            spec.modes[flat * dim * n + k * dim + (dim - 1)] = st.u_n[k];
        }
    }
    let phys = fft_inverse(&spec);
    for k in 0..n {
        for p in 0..nt {
            for c in 0..dim {
                *out.slices[l].at_mut(k, p, c) = phys.values[p * dim * n + k * dim + c];
            }
        }
    }
}

/// Finite-difference Stokes solve on the given grid (already at oracle
/// resolution): Chorin-type incremental projection, tangentially spectral,
/// MAC-staggered normal finite differences.
pub fn stokes_fd(
    h: &Field,
    g: &BoundaryField,
    f_tensor: &SpaceTimeField,
    grid: &GridSpec,
) -> Result<SpaceTimeField> {
    let ws = build_workspace(h, g, Some(f_tensor), grid)?;
    run_fd(&ws, None)
}

/// Finite-difference Navier-Stokes solve: `stokes_fd` plus explicit
/// (Adams-Bashforth) treatment of the advective term, CFL-limited.
pub fn ns_fd(
    h: &Field,
    g: &BoundaryField,
    grid: &GridSpec,
    cfl_limit: f64,
) -> Result<SpaceTimeField> {
    let ws = build_workspace(h, g, None, grid)?;
    run_fd(&ws, Some(cfl_limit))
}

fn run_fd(ws: &FdWorkspace, advective: Option<f64>) -> Result<SpaceTimeField> {
    let grid = &ws.grid;
    let dim = ws.dim();
    let nt = grid.tangential_points();
    let mut states: Vec<ModeState> = (0..nt).map(|m| ws.init_mode(m)).collect();
    let mut out = SpaceTimeField::zeros(grid, dim);
    // t = 0 slice straight from the data
    {
        let mut spec = SpectralField::zeros(&ws.torus, dim * grid.n_normal);
        spec.modes.copy_from_slice(&ws.h_hat.modes);
        let phys = fft_inverse(&spec);
        for k in 0..grid.n_normal {
            for p in 0..nt {
                for c in 0..dim {
                    *out.slices[0].at_mut(k, p, c) =
                        phys.values[p * dim * grid.n_normal + k * dim + c];
                }
            }
        }
    }

    let zero_t = vec![vec![Complex64::new(0.0, 0.0); grid.n_normal - 1]; dim - 1];
    let zero_n = vec![Complex64::new(0.0, 0.0); grid.n_normal];
    let mut adv_prev: Option<Vec<(Vec<Vec<Complex64>>, Vec<Complex64>)>> = None;

    for l in 0..grid.n_time - 1 {
        // explicit advection (Adams-Bashforth 2, Euler on the first step)
        let adv: Option<Vec<(Vec<Vec<Complex64>>, Vec<Complex64>)>> = match advective {
            None => None,
            Some(cfl_limit) => {
                let current = advection_terms(ws, &states)?;
                let sup = advection_cfl(ws, &states);
                let cfl = sup * grid.dt() / grid.dx_normal().min(grid.dx_tangential());
                if cfl > cfl_limit {
                    return Err(HsError::CflViolation {
                        cfl,
                        limit: cfl_limit,
                    });
                }
                let combined = match &adv_prev {
                    None => current.clone(),
                    Some(prev) => current
                        .iter()
                        .zip(prev.iter())
                        .map(|((ct, cn), (pt, pn))| {
                            let t = ct
                                .iter()
                                .zip(pt.iter())
                                .map(|(cc, pc)| {
                                    cc.iter()
                                        .zip(pc.iter())
                                        .map(|(a, b)| a * 1.5 - b * 0.5)
                                        .collect()
                                })
                                .collect();
                            let n = cn
                                .iter()
                                .zip(pn.iter())
                                .map(|(a, b)| a * 1.5 - b * 0.5)
                                .collect();
                            (t, n)
                        })
                        .collect(),
                };
                adv_prev = Some(current);
                Some(combined)
            }
        };

        for flat in 0..nt {
            let (f_t_old, f_n_old) = ws.force_mode(flat, l);
            let (f_t_new, f_n_new) = ws.force_mode(flat, l + 1);
            let f_t_mid: Vec<Vec<Complex64>> = f_t_old
                .iter()
                .zip(f_t_new.iter())
                .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x + y) * 0.5).collect())
                .collect();
            let f_n_mid: Vec<Complex64> = f_n_old
                .iter()
                .zip(f_n_new.iter())
                .map(|(x, y)| (x + y) * 0.5)
                .collect();
            let (adv_t, adv_n) = match &adv {
                Some(terms) => (&terms[flat].0, &terms[flat].1),
                None => (&zero_t, &zero_n),
            };
            mode_step(ws, flat, &mut states[flat], l, &f_t_mid, &f_n_mid, adv_t, adv_n);
        }
        states_to_slice(ws, &states, l + 1, &mut out);
    }
    out.assert_finite("finite-difference oracle")?;
    Ok(out)
}

/// Conservative advective term `-div(u (x) u)` on the MAC arrangement,
/// returned per mode at (cell centers, faces).
fn advection_terms(
    ws: &FdWorkspace,
    states: &[ModeState],
) -> Result<Vec<(Vec<Vec<Complex64>>, Vec<Complex64>)>> {
    let grid = &ws.grid;
    let dim = ws.dim();
    let n = grid.n_normal;
    let cells = n - 1;
    let nt = grid.tangential_points();
    let dx = grid.dx_normal();

    // physical-space velocities: tangential at cells, normal at faces
    let mut spec_t = SpectralField::zeros(&ws.torus, (dim - 1) * cells);
    let mut spec_n = SpectralField::zeros(&ws.torus, n);
    for (flat, st) in states.iter().enumerate() {
        for c in 0..dim - 1 {
            for j in 0..cells {
                spec_t.modes[flat * (dim - 1) * cells + j * (dim - 1) + c] = st.u_t[c][j];
            }
        }
        for k in 0..n {
            spec_n.modes[flat * n + k] = st.u_n[k];
        }
    }
    let ut_phys = fft_inverse(&spec_t);
    let un_phys = fft_inverse(&spec_n);
    let ut = |p: usize, j: usize, c: usize| ut_phys.values[p * (dim - 1) * cells + j * (dim - 1) + c];
    let un = |p: usize, k: usize| un_phys.values[p * n + k];

    // fluxes in physical space
    // tangential momentum c at cells: T_a = u_a u_c (cells), N = u_n u_c (faces)
    // normal momentum at faces: T_a = u_a u_n (faces), N = u_n u_n (cells)
    let mut flux_t_cells = TorusField::zeros(&ws.torus, (dim - 1) * (dim - 1) * cells);
    let mut flux_n_faces = TorusField::zeros(&ws.torus, (dim - 1) * n);
    let mut flux_nt_faces = TorusField::zeros(&ws.torus, (dim - 1) * n);
    let mut flux_nn_cells = TorusField::zeros(&ws.torus, cells);
    for p in 0..nt {
        for j in 0..cells {
            for a in 0..dim - 1 {
                for c in 0..dim - 1 {
                    flux_t_cells.values
                        [p * (dim - 1) * (dim - 1) * cells + j * (dim - 1) * (dim - 1) + a * (dim - 1) + c] =
                        ut(p, j, a) * ut(p, j, c);
                }
            }
            let un_c = 0.5 * (un(p, j) + un(p, j + 1));
            flux_nn_cells.values[p * cells + j] = un_c * un_c;
        }
        for k in 0..n {
            // u_c at faces by averaging adjacent cells (data rows at walls)
            for c in 0..dim - 1 {
                let ucf = if k == 0 || k == n - 1 {
                    0.0 // replaced below by boundary data in spectral space
                } else {
                    0.5 * (ut(p, k - 1, c) + ut(p, k, c))
                };
                flux_n_faces.values[p * (dim - 1) * n + k * (dim - 1) + c] = ucf * un(p, k);
                flux_nt_faces.values[p * (dim - 1) * n + k * (dim - 1) + c] = ucf * un(p, k);
            }
        }
    }
    let ft_hat = fft_forward(&flux_t_cells);
    let fn_hat = fft_forward(&flux_n_faces);
    let fnt_hat = fft_forward(&flux_nt_faces);
    let fnn_hat = fft_forward(&flux_nn_cells);

    let mut out = Vec::with_capacity(nt);
    for flat in 0..nt {
        let mut adv_t = vec![vec![Complex64::new(0.0, 0.0); cells]; dim - 1];
        let mut adv_n = vec![Complex64::new(0.0, 0.0); n];
        for (c, adv_tc) in adv_t.iter_mut().enumerate() {
            for (j, v) in adv_tc.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for a in 0..dim - 1 {
                    let f = ft_hat.modes[flat * (dim - 1) * (dim - 1) * cells
                        + j * (dim - 1) * (dim - 1)
                        + a * (dim - 1)
                        + c];
                    acc += Complex64::new(0.0, ws.xi[flat][a]) * f;
                }
                // d_n (u_n u_c): difference of face fluxes
                let flo = fn_hat.modes[flat * (dim - 1) * n + j * (dim - 1) + c];
                let fhi = fn_hat.modes[flat * (dim - 1) * n + (j + 1) * (dim - 1) + c];
                acc += (fhi - flo) / dx;
                *v = -acc;
            }
        }
        for k in 1..n - 1 {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dim - 1 {
                acc += Complex64::new(0.0, ws.xi[flat][a])
                    * fnt_hat.modes[flat * (dim - 1) * n + k * (dim - 1) + a];
            }
            acc += (fnn_hat.modes[flat * cells + k] - fnn_hat.modes[flat * cells + k - 1]) / dx;
            adv_n[k] = -acc;
        }
        out.push((adv_t, adv_n));
    }
    Ok(out)
}

fn advection_cfl(ws: &FdWorkspace, states: &[ModeState]) -> f64 {
    // sup |u| from the mode spectra (cheap overestimate via mode sums)
    let nt = ws.grid.tangential_points() as f64;
    let mut sup: f64 = 0.0;
    for st in states {
        for u in &st.u_t {
            for v in u {
                sup = sup.max(v.norm());
            }
        }
        for v in &st.u_n {
            sup = sup.max(v.norm());
        }
    }
    // spectra are unnormalized; a single mode of amplitude A has |coeff| = A nt / 2
    sup * 2.0 / nt
}

/// Restrict an oracle-resolution solution onto the main grid nodes (grids
/// must be nested: oracle = refined(main)).
pub fn restrict_to_main(
    sol: &SpaceTimeField,
    main: &GridSpec,
    cfg: &OracleConfig,
) -> Result<SpaceTimeField> {
    let rn = cfg.normal_refine;
    let rt = cfg.time_refine;
    let expect = main.refined(rn, rt)?;
    if sol.grid != expect {
        return Err(HsError::ShapeMismatch(
            "oracle solution grid is not a refinement of the main grid".into(),
        ));
    }
    let mut out = SpaceTimeField::zeros(main, sol.components);
    for l in 0..main.n_time {
        for k in 0..main.n_normal {
            for p in 0..main.tangential_points() {
                for c in 0..sol.components {
                    *out.slices[l].at_mut(k, p, c) = sol.slices[l * rt].at(k * rn, p, c);
                }
            }
        }
    }
    Ok(out)
}

/// Relative `L_inf` difference of two fields over `x_n <= x_max`, normalized
/// by the sup of `reference` on that region.
pub fn relative_linf_below(a: &SpaceTimeField, reference: &SpaceTimeField, x_max: f64) -> f64 {
    let grid = a.grid;
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for l in 0..grid.n_time {
        for k in 0..grid.n_normal {
            if grid.normal(k) > x_max {
                continue;
            }
            for p in 0..grid.tangential_points() {
                for c in 0..a.components {
                    diff = diff.max((a.slices[l].at(k, p, c) - reference.slices[l].at(k, p, c)).abs());
                    scale = scale.max(reference.slices[l].at(k, p, c).abs());
                }
            }
        }
    }
    diff / scale.max(1e-300)
}
