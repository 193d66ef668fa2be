//! Picard iteration for the Navier-Stokes system: repeated Stokes solves
//! with force potential `F^m = -u^m (x) u^m`, uniform-boundedness and
//! contraction monitoring, and automatic time-horizon control.
//!
//! The smallness conditions guaranteeing contraction involve constants that
//! are not computable from the data, so the iteration measures the
//! contraction ratio `rho_m = |U^m| / |U^{m-1}|` in the `L_inf +` anisotropic
//! seminorm aggregate and shrinks the horizon when the ratios stay above the
//! configured threshold.

use crate::analysis::{anisotropic_seminorm, SeminormMode};
use crate::domain::{GridSpec, SpaceTimeField};
use crate::error::{HsError, Result};
use crate::stokes::{SolverOptions, StokesData, StokesSolution, StokesSolver};
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct IterationConfig {
    /// Iteration cap.
    pub m_max: usize,
    /// Contraction ratio threshold theta in (0, 1).
    pub contraction_threshold: f64,
    /// Relative increment tolerance declaring convergence.
    pub stop_tol: f64,
    /// Horizon shrink factor on non-contraction (the slice count shrinks
    /// proportionally, keeping the step size).
    pub t_shrink: f64,
    /// Retry cap for the automatic horizon control.
    pub max_attempts: usize,
    /// Hoelder exponent of the contraction norm.
    pub alpha: f64,
}

impl Default for IterationConfig {
    fn default() -> Self {
        IterationConfig {
            m_max: 30,
            contraction_threshold: 0.9,
            stop_tol: 1e-6,
            t_shrink: 0.5,
            max_attempts: 8,
            alpha: 0.5,
        }
    }
}

impl IterationConfig {
    fn validate(&self) -> Result<()> {
        if !(self.contraction_threshold > 0.0 && self.contraction_threshold < 1.0) {
            return Err(HsError::InvalidData(format!(
                "contraction threshold must lie in (0,1), got {}",
                self.contraction_threshold
            )));
        }
        if self.m_max < 1 {
            return Err(HsError::InvalidData("m_max must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-step Picard diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct IterationRecord {
    pub m: usize,
    /// `|u^m|` estimate: L_inf + spatial + temporal seminorms.
    pub norm_u: f64,
    /// `|U^m| = |u^{m+1} - u^m|`, same aggregate.
    pub norm_increment: f64,
    /// `rho_m = |U^m| / |U^{m-1}|`, defined for m >= 2.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    /// Data-norm aggregate `M_0 = |h| + |g| + |R'g_n| + |R'h_n|`.
    pub data_norm_m0: f64,
    /// Geometric-series bound proxy `M = |u^1| (1 + 1/(1 - theta))`.
    pub bound_proxy_m: f64,
    pub accepted_horizon: f64,
    pub converged: bool,
}

/// One Picard step: form `F^m = -u^m (x) u^m` and solve the Stokes system
/// with it (the extension to the doubled torus happens inside the solve).
///
/// With `u_m = 0` this reduces bit-exactly to the pure Stokes solve of
/// `(h, g, F = 0)`.
pub fn picard_step(
    u_m: &SpaceTimeField,
    data: &StokesData,
    solver: &StokesSolver,
) -> Result<StokesSolution> {
    let grid = *solver.grid();
    let dim = grid.dim;
    let mut f = SpaceTimeField::zeros(&grid, dim * dim);
    for (l, slice) in f.slices.iter_mut().enumerate() {
        for k in 0..grid.n_normal {
            for p in 0..grid.tangential_points() {
                for ci in 0..dim {
                    for cj in 0..dim {
                        *slice.at_mut(k, p, ci * dim + cj) =
                            -u_m.slices[l].at(k, p, ci) * u_m.slices[l].at(k, p, cj);
                    }
                }
            }
        }
    }
    let step_data = StokesData {
        h: data.h.clone(),
        g: data.g.clone(),
        f,
        alpha: data.alpha,
    };
    solver.solve(&step_data)
}

fn contraction_norm(u: &SpaceTimeField, alpha: f64, budget: usize, seed: u64) -> Result<f64> {
    Ok(anisotropic_seminorm(u, alpha, SeminormMode::Sampled { budget, seed })?.total())
}

/// Picard iteration at a fixed horizon.
///
/// Iterates until the relative increment drops below `stop_tol` or `m_max`
/// is reached; fails with `NonContraction` when the measured ratios exceed
/// the threshold persistently (two consecutive steps) or the increment grows
/// after the second step.
pub fn picard_solve(
    data: &StokesData,
    solver: &StokesSolver,
    cfg: &IterationConfig,
) -> Result<(StokesSolution, IterationTrace)> {
    cfg.validate()?;
    if data.f.linf() != 0.0 {
        return Err(HsError::InvalidData(
            "picard_solve expects zero force potential; the iteration supplies F^m itself".into(),
        ));
    }
    let grid = *solver.grid();
    let budget = solver.options.seminorm_budget;
    let seed = solver.options.seed;
    let horizon = grid.t_final;

    let m0 = solver.data_norms(data)?.aggregate;
    let zero = SpaceTimeField::zeros(&grid, grid.dim);
    let mut current = picard_step(&zero, data, solver)?;
    let mut norm_curr = contraction_norm(&current.u, cfg.alpha, budget, seed)?;
    let bound_proxy = norm_curr * (1.0 + 1.0 / (1.0 - cfg.contraction_threshold));

    let mut trace = IterationTrace {
        records: Vec::new(),
        data_norm_m0: m0,
        bound_proxy_m: bound_proxy,
        accepted_horizon: horizon,
        converged: false,
    };

    let mut prev_increment: Option<f64> = None;
    let mut consecutive_bad = 0usize;
    for m in 1..=cfg.m_max {
        let next = match picard_step(&current.u, data, solver) {
            Ok(sol) => sol,
            Err(HsError::NonFinite(_)) => {
                // the iterates blew past floating-point range: divergence
                return Err(HsError::NonContraction {
                    step: m + 1,
                    ratio: f64::INFINITY,
                    threshold: cfg.contraction_threshold,
                    horizon,
                });
            }
            Err(e) => return Err(e),
        };
        let increment = next.u.diff(&current.u);
        let norm_inc = contraction_norm(&increment, cfg.alpha, budget, seed)?;
        let ratio = prev_increment.map(|prev| if prev == 0.0 { 0.0 } else { norm_inc / prev });
        trace.records.push(IterationRecord {
            m,
            norm_u: norm_curr,
            norm_increment: norm_inc,
            ratio,
        });
        if let Some(rho) = ratio {
            if rho > cfg.contraction_threshold {
                consecutive_bad += 1;
            } else {
                consecutive_bad = 0;
            }
            let growing_late = m > 2 && rho > 1.0;
            if consecutive_bad >= 2 || growing_late {
                return Err(HsError::NonContraction {
                    step: m,
                    ratio: rho,
                    threshold: cfg.contraction_threshold,
                    horizon,
                });
            }
        }
        let norm_next = contraction_norm(&next.u, cfg.alpha, budget, seed)?;
        if norm_inc <= cfg.stop_tol * norm_next.max(1e-300) || norm_inc == 0.0 {
            trace.converged = true;
            trace.records.push(IterationRecord {
                m: m + 1,
                norm_u: norm_next,
                norm_increment: 0.0,
                ratio: None,
            });
            return Ok((next, trace));
        }
        prev_increment = Some(norm_inc);
        current = next;
        norm_curr = norm_next;
    }
    Ok((current, trace))
}

/// Outcome of one horizon attempt.
#[derive(Debug, Clone, Serialize)]
pub struct AttemptRecord {
    pub horizon: f64,
    pub n_time: usize,
    pub contracted: bool,
}

#[derive(Debug)]
pub struct AutoResult {
    pub t_star: f64,
    pub attempts: Vec<AttemptRecord>,
    pub solution: StokesSolution,
    pub trace: IterationTrace,
}

/// Run `picard_solve`, halving the horizon (and the slice count, keeping the
/// step size) on `NonContraction`, up to the retry cap.
///
/// Mirrors the unspecified-constant smallness condition of the contraction
/// argument with an empirical test; fails with `HorizonUnderflow` when the
/// horizon drops below four time steps.
pub fn auto_timestep(
    data: &StokesData,
    grid: &GridSpec,
    cfg: &IterationConfig,
    options: SolverOptions,
) -> Result<AutoResult> {
    cfg.validate()?;
    let dt = grid.dt();
    let floor = 4.0 * dt;
    let mut attempts = Vec::new();
    let mut cur_grid = *grid;
    let mut cur_data = data.clone();
    for _ in 0..cfg.max_attempts {
        let solver = StokesSolver::new(&cur_grid, options);
        match picard_solve(&cur_data, &solver, cfg) {
            Ok((solution, trace)) => {
                attempts.push(AttemptRecord {
                    horizon: cur_grid.t_final,
                    n_time: cur_grid.n_time,
                    contracted: true,
                });
                return Ok(AutoResult {
                    t_star: cur_grid.t_final,
                    attempts,
                    solution,
                    trace,
                });
            }
            Err(HsError::NonContraction { .. }) => {
                attempts.push(AttemptRecord {
                    horizon: cur_grid.t_final,
                    n_time: cur_grid.n_time,
                    contracted: false,
                });
                let intervals = cur_grid.n_time - 1;
                if intervals % 2 != 0 {
                    return Err(HsError::HorizonUnderflow {
                        t_star: cur_grid.t_final / 2.0,
                        floor,
                        attempts: attempts.len(),
                    });
                }
                let new_n_time = intervals / 2 + 1;
                let new_horizon = cur_grid.t_final / 2.0;
                if new_horizon < floor {
                    return Err(HsError::HorizonUnderflow {
                        t_star: new_horizon,
                        floor,
                        attempts: attempts.len(),
                    });
                }
                cur_grid = cur_grid.with_horizon(new_horizon, new_n_time)?;
                cur_data = cur_data.truncate_time(new_n_time, new_horizon)?;
            }
            Err(e) => return Err(e),
        }
    }
    Err(HsError::HorizonUnderflow {
        t_star: cur_grid.t_final,
        floor,
        attempts: attempts.len(),
    })
}
