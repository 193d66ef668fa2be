//! Acceptance suite: every criterion below runs end-to-end at its pinned
//! tolerance and prints one PASS/FAIL line. The suite doubles as the
//! verification protocol for the solver library.

use hstokes::analysis::{
    anisotropic_seminorm, divergence_sup, gradient_sup, make_test_family, weak_residual_ns,
    weak_residual_stokes, SeminormMode,
};
use hstokes::cases::{build_case, random_band_tensor, smoothstep, CaseName, TAU};
use hstokes::domain::{GridSpec, SpaceTimeField};
use hstokes::error::HsError;
use hstokes::kernels::{duhamel_force, heat_evolve, heat_kernel_1d};
use hstokes::navier_stokes::{auto_timestep, picard_solve, IterationConfig};
use hstokes::oracle::{ns_fd, rayleigh_1d, restrict_to_main, stokes_fd, OracleConfig};
use hstokes::spectral::{
    divergence_torus, fft_forward, fft_inverse, harmonic_extension, leray_project, riesz,
    TorusField, TorusGrid,
};
use hstokes::stokes::{solve_stokes, SolverOptions, StokesSolver};
use std::time::Instant;

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "ACCEPTANCE {criterion}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// Deterministic band-limited field on a torus from fixed trigonometric data.
fn band_limited(torus: &TorusGrid, seed: usize) -> TorusField {
    let mut f = TorusField::zeros(torus, 1);
    let n_axes = torus.shape.len();
    let mut idx = vec![0usize; n_axes];
    let coeffs: [(f64, i64, i64, f64); 4] = match seed {
        0 => [(0.9, 1, 0, 0.3), (0.5, 2, 1, 1.1), (0.3, 0, 3, -0.4), (0.2, 4, 2, 2.0)],
        1 => [(1.1, 0, 1, -0.2), (0.4, 3, 0, 0.9), (0.35, 2, 2, 1.7), (0.15, 1, 4, 0.5)],
        _ => [(0.8, 1, 1, 0.0), (0.6, 0, 2, -1.2), (0.25, 3, 1, 0.8), (0.1, 2, 4, -0.6)],
    };
    for flat in 0..torus.points() {
        torus.decode(flat, &mut idx);
        let mut acc = 0.0;
        for &(a, m0, m1, ph) in &coeffs {
            let mut arg = ph;
            arg += TAU * m0 as f64 / torus.extents[0]
                * (idx[0] as f64 * torus.extents[0] / torus.shape[0] as f64);
            if n_axes > 1 {
                arg += TAU * m1 as f64 / torus.extents[1]
                    * (idx[1] as f64 * torus.extents[1] / torus.shape[1] as f64);
            }
            acc += a * arg.cos();
        }
        f.values[flat] = acc;
    }
    f
}

/// Exact-pair spatial Hoelder seminorm of a torus field along each axis,
/// test-side estimator independent of the library's.
fn torus_spatial_seminorm(f: &TorusField, alpha: f64) -> f64 {
    let n0 = f.grid.shape[0];
    let n1 = if f.grid.shape.len() > 1 { f.grid.shape[1] } else { 1 };
    let d0 = f.grid.extents[0] / n0 as f64;
    let d1 = if f.grid.shape.len() > 1 {
        f.grid.extents[1] / n1 as f64
    } else {
        1.0
    };
    let mut sup: f64 = 0.0;
    let at = |i: usize, j: usize| f.values[i * n1 + j];
    for i in 0..n0 {
        for j in 0..n1 {
            for ii in 0..n0 {
                for jj in 0..n1 {
                    if i == ii && j == jj {
                        continue;
                    }
                    let di = (i.abs_diff(ii)).min(n0 - i.abs_diff(ii)) as f64 * d0;
                    let dj = (j.abs_diff(jj)).min(n1 - j.abs_diff(jj)) as f64 * d1;
                    let dist = (di * di + dj * dj).sqrt();
                    sup = sup.max((at(i, j) - at(ii, jj)).abs() / dist.powf(alpha));
                }
            }
        }
    }
    sup
}

#[test]
fn criterion_01_rayleigh_ramp_equivalence() {
    let start = Instant::now();
    let grid = GridSpec::new(2, TAU, 4.0, 8, 257, 0.5, 257).unwrap();
    let data = build_case(CaseName::RayleighRamp, &grid, 1.0, 0.5).unwrap();
    let options = SolverOptions {
        compute_weak_residual: false,
        ..SolverOptions::default()
    };
    let sol = StokesSolver::new(&grid, options).solve(&data).unwrap();
    let runtime = start.elapsed().as_secs_f64();

    // independent 1-D oracle at doubled resolution
    let t_final = grid.t_final;
    let reference = rayleigh_1d(
        |t| smoothstep(t, t_final),
        513,
        grid.height_h,
        t_final,
        513,
    );
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut cross: f64 = 0.0;
    for l in 0..grid.n_time {
        for k in 0..grid.n_normal {
            if grid.normal(k) > grid.height_h / 2.0 {
                continue;
            }
            let got = sol.u.slices[l].at(k, 0, 0);
            let expect = reference[2 * l][2 * k];
            diff = diff.max((got - expect).abs());
            scale = scale.max(expect.abs());
            cross = cross.max(sol.u.slices[l].at(k, 0, 1).abs());
        }
    }
    let rel = diff / scale;
    report(
        "1 rayleigh-ramp vs 1-D oracle",
        rel <= 0.02 && runtime < 30.0 && cross < 1e-10,
        &format!("rel_linf = {rel:.2e} (<= 0.02), u_n sup = {cross:.2e}, runtime = {runtime:.1}s (< 30)"),
    );
}

#[test]
fn criterion_02_stokes_oracle_equivalence() {
    let compare = |case: CaseName, grid: &GridSpec| -> f64 {
        let data = build_case(case, grid, 1.0, 0.5).unwrap();
        let options = SolverOptions {
            compute_weak_residual: false,
            ..SolverOptions::default()
        };
        let sol = StokesSolver::new(grid, options).solve(&data).unwrap();
        let cfg = OracleConfig::default();
        let ogrid = cfg.oracle_grid(grid).unwrap();
        let odata = build_case(case, &ogrid, 1.0, 0.5).unwrap();
        let oref = stokes_fd(&odata.h, &odata.g, &odata.f, &ogrid).unwrap();
        let oref = restrict_to_main(&oref, grid, &cfg).unwrap();
        hstokes::oracle::relative_linf_below(&sol.u, &oref, grid.height_h / 2.0)
    };
    for case in [CaseName::TangentialMode, CaseName::NormalMode] {
        let base = case.default_grid();
        let fine = base.refined(2, 2).unwrap();
        let err_base = compare(case, &base);
        let err_fine = compare(case, &fine);
        let halving = err_fine / err_base;
        report(
            &format!("2 stokes vs FD oracle [{}]", case.as_str()),
            err_base <= 0.05 && err_fine <= 0.05 && halving <= 0.6,
            &format!(
                "rel_linf base = {err_base:.4}, refined = {err_fine:.4} (<= 0.05), \
                 refinement factor = {halving:.2} (<= 0.6)"
            ),
        );
    }
}

#[test]
fn criterion_03_navier_stokes_oracle_equivalence() {
    let (grid, data) = hstokes::cases::build_default(CaseName::SmallNs, 0.5).unwrap();
    let options = SolverOptions {
        compute_weak_residual: false,
        ..SolverOptions::default()
    };
    let solver = StokesSolver::new(&grid, options);
    let (sol, trace) = picard_solve(&data, &solver, &IterationConfig::default()).unwrap();
    assert!(trace.converged);

    let cfg = OracleConfig::default();
    let ogrid = cfg.oracle_grid(&grid).unwrap();
    let odata = build_case(CaseName::SmallNs, &ogrid, 0.1, 0.5).unwrap();
    let oref = ns_fd(&odata.h, &odata.g, &ogrid, cfg.cfl_limit).unwrap();
    let oref = restrict_to_main(&oref, &grid, &cfg).unwrap();
    let rel = hstokes::oracle::relative_linf_below(&sol.u, &oref, grid.height_h / 2.0);
    report(
        "3 picard vs FD Navier-Stokes oracle [small-ns]",
        rel <= 0.05,
        &format!("rel_linf = {rel:.4} (<= 0.05)"),
    );
}

#[test]
fn criterion_04_contraction_property() {
    // contraction ratios on small-ns
    let (grid, data) = hstokes::cases::build_default(CaseName::SmallNs, 0.5).unwrap();
    let options = SolverOptions {
        compute_weak_residual: false,
        ..SolverOptions::default()
    };
    let solver = StokesSolver::new(&grid, options);
    let (_, trace) = picard_solve(&data, &solver, &IterationConfig::default()).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut geometric = true;
    let mut prev: Option<f64> = None;
    for r in &trace.records {
        if let Some(rho) = r.ratio {
            worst_ratio = worst_ratio.max(rho);
        }
        if let Some(p) = prev {
            if r.norm_increment > p && r.norm_increment > 0.0 {
                geometric = false;
            }
        }
        if r.norm_increment > 0.0 {
            prev = Some(r.norm_increment);
        }
    }
    report(
        "4a contraction ratios [small-ns]",
        trace.converged && worst_ratio <= 0.6 && geometric,
        &format!(
            "max ratio = {worst_ratio:.3} (<= 0.6), increments decrease monotonically = {geometric}"
        ),
    );

    // deterministic recovery-or-underflow on large-ns
    let run = || {
        let (lgrid, ldata) = hstokes::cases::build_default(CaseName::LargeNs, 0.5).unwrap();
        auto_timestep(&ldata, &lgrid, &IterationConfig::default(), options)
    };
    let first = run();
    let second = run();
    let outcome = |r: &hstokes::error::Result<hstokes::navier_stokes::AutoResult>| match r {
        Ok(res) => format!(
            "recovered T* = {} after {} attempts",
            res.t_star,
            res.attempts.len()
        ),
        Err(HsError::HorizonUnderflow {
            t_star, attempts, ..
        }) => format!("underflow at T* = {t_star} after {attempts} attempts"),
        Err(e) => format!("unexpected error {e}"),
    };
    let o1 = outcome(&first);
    let o2 = outcome(&second);
    let deterministic = o1 == o2
        && matches!(
            first,
            Ok(_) | Err(HsError::HorizonUnderflow { .. })
        );
    // the halving mechanism must actually engage: either the first horizon
    // failed and a shorter one was accepted, or the search underflowed
    let mechanism_engaged = match &first {
        Ok(res) => res.attempts.len() >= 2 && !res.attempts[0].contracted,
        Err(HsError::HorizonUnderflow { .. }) => true,
        Err(_) => false,
    };
    report(
        "4b horizon control [large-ns]",
        deterministic && mechanism_engaged,
        &format!("outcome = '{o1}', repeated = '{o2}'"),
    );
}

#[test]
fn criterion_05_duhamel_scaling() {
    // fixed random band-limited F corpus, constant in time
    let grid = GridSpec::new(2, TAU, 2.0, 32, 17, 0.4, 33).unwrap();
    let torus = TorusGrid::doubled(&grid);
    let horizons = [0.4, 0.1, 0.025];
    let n_time = 33usize;
    let mut points = Vec::new();
    for &t_final in &horizons {
        let dt = t_final / (n_time - 1) as f64;
        let f = random_band_tensor(&torus, n_time, dt, (1.5, 5.0), 24, 2026);
        let v = duhamel_force(&f);
        let sup = v.slices.iter().fold(0.0f64, |m, s| m.max(s.linf()));
        points.push((t_final.ln(), sup.ln()));
    }
    // least-squares slope through the three points
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    report(
        "5 Duhamel T^(1/2) scaling",
        (slope - 0.5).abs() <= 0.15,
        &format!("log-log slope = {slope:.3} (0.5 +/- 0.15)"),
    );
}

#[test]
fn criterion_06_semigroup_invariants() {
    // resolved corpus: the coarsest decay e^{-xi_max^2 dt} sits far below the
    // slack, so discrete positivity defects cannot surface
    let grid = GridSpec::new(2, TAU, 2.0, 32, 17, 1.0, 5).unwrap();
    let torus = TorusGrid::tangential(&grid);
    let mut corpus: Vec<TorusField> = vec![
        band_limited(&torus, 0),
        band_limited(&torus, 1),
        TorusField {
            grid: torus.clone(),
            components: 1,
            values: vec![1.25; torus.points()],
        },
    ];
    // periodized Gaussian bump
    let mut gauss = TorusField::zeros(&torus, 1);
    for (i, v) in gauss.values.iter_mut().enumerate() {
        let x = i as f64 * TAU / 32.0;
        for m in -3i64..=3 {
            *v += heat_kernel_1d(x - std::f64::consts::PI + m as f64 * TAU, 0.05);
        }
    }
    corpus.push(gauss);

    let times = [0.0, 0.25, 0.5, 1.0];
    let mut worst_linf_growth: f64 = 0.0;
    let mut worst_semi_growth: f64 = 0.0;
    for f in &corpus {
        let mut prev_linf = f64::INFINITY;
        let mut prev_semi = f64::INFINITY;
        for &t in &times {
            let evolved = heat_evolve(f, t).unwrap();
            let linf = evolved.linf();
            let semi = torus_spatial_seminorm(&evolved, 0.5);
            if linf > prev_linf {
                worst_linf_growth = worst_linf_growth.max(linf - prev_linf);
            }
            if semi > prev_semi {
                worst_semi_growth = worst_semi_growth.max(semi - prev_semi);
            }
            prev_linf = prev_linf.min(linf);
            prev_semi = prev_semi.min(semi);
        }
    }
    report(
        "6 heat semigroup monotonicity",
        worst_linf_growth <= 1e-10 && worst_semi_growth <= 1e-8,
        &format!(
            "max L_inf growth = {worst_linf_growth:.2e} (<= 1e-10), \
             max seminorm growth = {worst_semi_growth:.2e} (<= 1e-8)"
        ),
    );
}

#[test]
fn criterion_07_operator_algebra() {
    let grid = GridSpec::new(2, TAU, TAU / 2.0, 32, 17, 0.5, 3).unwrap();
    let torus = TorusGrid::doubled(&grid);
    let f = band_limited(&torus, 2);
    let scale = f.linf();

    // R.R = -Id off the mean
    let mean = f.values.iter().sum::<f64>() / f.values.len() as f64;
    let mut rr = TorusField::zeros(&torus, 1);
    for j in 0..2 {
        rr.add_scaled(&riesz(&riesz(&f, j), j), 1.0);
    }
    let mut rr_err: f64 = 0.0;
    for (i, v) in rr.values.iter().enumerate() {
        rr_err = rr_err.max((v + (f.values[i] - mean)).abs());
    }

    // vector field for the projector checks
    let mut vf = TorusField::zeros(&torus, 2);
    let f2 = band_limited(&torus, 1);
    for i in 0..torus.points() {
        vf.values[2 * i] = f.values[i];
        vf.values[2 * i + 1] = f2.values[i];
    }
    let p1 = leray_project(&vf);
    let p2 = leray_project(&p1);
    let idem_err = p1
        .values
        .iter()
        .zip(p2.values.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let div_err = divergence_torus(&p1).linf();

    // P annihilates gradients: grad of a band-limited potential
    let pot = band_limited(&torus, 0);
    let spec = fft_forward(&pot);
    let mut gx = spec.clone();
    let mut gn = spec.clone();
    hstokes::spectral::map_modes(&mut gx, |idx, xi, _, v| {
        if torus.is_nyquist(1, idx[1]) {
            num_complex::Complex64::new(0.0, 0.0)
        } else {
            num_complex::Complex64::new(0.0, xi[1]) * v
        }
    });
    hstokes::spectral::map_modes(&mut gn, |idx, xi, _, v| {
        if torus.is_nyquist(0, idx[0]) {
            num_complex::Complex64::new(0.0, 0.0)
        } else {
            num_complex::Complex64::new(0.0, xi[0]) * v
        }
    });
    let gx = fft_inverse(&gx);
    let gn = fft_inverse(&gn);
    let mut grad = TorusField::zeros(&torus, 2);
    for i in 0..torus.points() {
        grad.values[2 * i] = gx.values[i];
        grad.values[2 * i + 1] = gn.values[i];
    }
    let grad_scale = grad.linf();
    let pg_err = leray_project(&grad).linf();

    let tol = 1e-12;
    report(
        "7 operator algebra",
        rr_err <= tol * scale
            && idem_err <= tol * scale
            && div_err <= tol * scale / grid.dx_normal()
            && pg_err <= tol * grad_scale,
        &format!(
            "RR+Id err = {:.2e}, idempotence err = {:.2e}, div P err = {:.2e}, P grad err = {:.2e} (tol 1e-12 rel)",
            rr_err / scale,
            idem_err / scale,
            div_err / (scale / grid.dx_normal()),
            pg_err / grad_scale
        ),
    );
}

#[test]
fn criterion_08_poisson_extension() {
    let grid = GridSpec::new(2, TAU, 4.0, 64, 65, 0.5, 3).unwrap();
    let torus = TorusGrid::tangential(&grid);

    // single-mode exactness
    let mut single = TorusField::zeros(&torus, 1);
    for (i, v) in single.values.iter_mut().enumerate() {
        *v = (i as f64 * TAU / 64.0).sin();
    }
    let ext = harmonic_extension(&single, &grid);
    let mut mode_err: f64 = 0.0;
    for k in 0..grid.n_normal {
        let xn = grid.normal(k);
        for p in 0..64 {
            let x = p as f64 * TAU / 64.0;
            mode_err = mode_err.max((ext.at(k, p, 0) - (-xn).exp() * x.sin()).abs());
        }
    }

    // L_inf bound with constant 1 on band-limited corpus
    let mut bound_ok = true;
    let mut worst_ratio: f64 = 0.0;
    for seed in 0..3 {
        let b = band_limited(&torus, seed);
        let e = harmonic_extension(&b, &grid);
        let wall = b.linf();
        let mut sup: f64 = 0.0;
        for k in 0..grid.n_normal {
            for p in 0..64 {
                sup = sup.max(e.at(k, p, 0).abs());
            }
        }
        worst_ratio = worst_ratio.max(sup / wall);
        bound_ok &= sup <= wall * (1.0 + 1e-12);
    }
    report(
        "8 Poisson extension",
        mode_err <= 1e-12 && bound_ok,
        &format!("single-mode err = {mode_err:.2e} (<= 1e-12), sup ratio = {worst_ratio:.6} (<= 1)"),
    );
}

#[test]
fn criterion_09_solution_structure() {
    let options = SolverOptions {
        compute_weak_residual: false,
        ..SolverOptions::default()
    };
    // divergence and initial trace on the two single-mode cases
    for case in [CaseName::TangentialMode, CaseName::NormalMode] {
        let grid = GridSpec::new(2, TAU, 4.0, 16, 65, 0.5, 33).unwrap();
        let data = build_case(case, &grid, 1.0, 0.5).unwrap();
        let sol = StokesSolver::new(&grid, options).solve(&data).unwrap();
        let div_rel = sol.diagnostics.divergence_sup / sol.diagnostics.gradient_sup.max(1e-300);
        let init_rel = sol.diagnostics.trace.initial / data.scale();
        report(
            &format!("9a structure [{}]", case.as_str()),
            div_rel <= 1e-3 && init_rel <= 1e-8,
            &format!("div/grad = {div_rel:.2e} (<= 1e-3), initial trace = {init_rel:.2e} (<= 1e-8)"),
        );
    }

    // first-interior-row trace convergence with order >= alpha
    let alpha = 0.5;
    let mut errs = Vec::new();
    for n_normal in [65usize, 129, 257] {
        let grid = GridSpec::new(2, TAU, 4.0, 16, n_normal, 0.5, 33).unwrap();
        let data = build_case(CaseName::TangentialMode, &grid, 1.0, alpha).unwrap();
        let sol = StokesSolver::new(&grid, options).solve(&data).unwrap();
        errs.push(sol.diagnostics.trace.boundary_first_interior);
    }
    let r1 = errs[1] / errs[0];
    let r2 = errs[2] / errs[1];
    let bound = 2.0f64.powf(-alpha) * 1.15;
    report(
        "9b boundary trace refinement",
        r1 <= bound && r2 <= bound,
        &format!(
            "errors = {:.3e} -> {:.3e} -> {:.3e}, ratios = {r1:.2}, {r2:.2} (<= {bound:.2})",
            errs[0], errs[1], errs[2]
        ),
    );
}

#[test]
fn criterion_10_weak_residual() {
    let options = SolverOptions {
        compute_weak_residual: false,
        ..SolverOptions::default()
    };
    let levels = [
        GridSpec::new(2, TAU, 4.0, 16, 33, 0.5, 17).unwrap(),
        GridSpec::new(2, TAU, 4.0, 16, 65, 0.5, 33).unwrap(),
        GridSpec::new(2, TAU, 4.0, 16, 129, 0.5, 65).unwrap(),
    ];
    let mut true_res = Vec::new();
    let mut spoiled_res = Vec::new();
    for grid in &levels {
        let data = build_case(CaseName::TangentialMode, grid, 1.0, 0.5).unwrap();
        let sol = StokesSolver::new(grid, options).solve(&data).unwrap();
        let family = make_test_family(grid, 4, 42);
        true_res.push(weak_residual_stokes(&sol.u, &data.f, &family).unwrap());
        // negative control: perturb by a non-solution. The perturbation must
        // vary in x_n: an x_n-independent tangential field with zero mean
        // pairs to zero with every admissible test field (divergence-free +
        // compact support force the vertical average of the tangential
        // component to vanish mode-wise), so it would be invisible here and
        // only visible to the trace conditions.
        let mut spoiled = sol.u.clone();
        let t_final = grid.t_final;
        let kx = std::f64::consts::PI / grid.height_h;
        for (l, slice) in spoiled.slices.iter_mut().enumerate() {
            let t = grid.time(l);
            for k in 0..grid.n_normal {
                let xn = grid.normal(k);
                for p in 0..grid.tangential_points() {
                    let x1 = grid.tangential_coords(p)[0];
                    *slice.at_mut(k, p, 0) +=
                        0.1 * x1.sin() * (kx * xn).sin() * smoothstep(t, t_final);
                }
            }
        }
        spoiled_res.push(weak_residual_stokes(&spoiled, &data.f, &family).unwrap());
    }
    let decreasing = true_res[1] < true_res[0] && true_res[2] < true_res[1];
    let bounded_away =
        spoiled_res[2] >= 0.5 * spoiled_res[0] && spoiled_res[2] >= 10.0 * true_res[2];
    report(
        "10a stokes weak residual",
        decreasing && bounded_away,
        &format!(
            "true = {:.3e} -> {:.3e} -> {:.3e} (decreasing), spoiled = {:.3e} -> {:.3e} -> {:.3e} (bounded away)",
            true_res[0], true_res[1], true_res[2], spoiled_res[0], spoiled_res[1], spoiled_res[2]
        ),
    );

    // nonlinear form on the converged small-ns solution
    let mut ns_res = Vec::new();
    for (n_normal, n_time) in [(17usize, 9usize), (33, 17)] {
        let grid = GridSpec::new(2, TAU, 4.0, 16, n_normal, 0.25, n_time).unwrap();
        let data = build_case(CaseName::SmallNs, &grid, 0.1, 0.5).unwrap();
        let solver = StokesSolver::new(&grid, options);
        let (sol, _) = picard_solve(&data, &solver, &IterationConfig::default()).unwrap();
        let family = make_test_family(&grid, 4, 42);
        ns_res.push(weak_residual_ns(&sol.u, &family).unwrap());
    }
    report(
        "10b navier-stokes weak residual",
        ns_res[1] < ns_res[0],
        &format!("residuals = {:.3e} -> {:.3e} (decreasing)", ns_res[0], ns_res[1]),
    );
}

#[test]
fn criterion_11_determinism() {
    let grid = GridSpec::new(2, TAU, 4.0, 16, 33, 0.25, 17).unwrap();
    let data = build_case(CaseName::TangentialMode, &grid, 1.0, 0.5).unwrap();
    let solve_in_pool = |threads: usize| -> Vec<u64> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let sol = solve_stokes(&data, &grid).unwrap();
            sol.u
                .slices
                .iter()
                .flat_map(|s| s.values.iter().map(|v| v.to_bits()))
                .collect()
        })
    };
    let one = solve_in_pool(1);
    let four = solve_in_pool(4);
    let repeat = solve_in_pool(4);
    report(
        "11 determinism across thread counts",
        one == four && four == repeat,
        &format!(
            "bit-identical across pools(1) vs pools(4) vs repeat = {}",
            one == four && four == repeat
        ),
    );
}

#[test]
fn acceptance_support_quantities_log() {
    // logged, not asserted: the empirical a-priori-estimate constant on the
    // standard corpus, and the divergence/gradient scales
    let grid = GridSpec::new(2, TAU, 4.0, 16, 33, 0.25, 17).unwrap();
    for case in [CaseName::TangentialMode, CaseName::NormalMode] {
        let data = build_case(case, &grid, 1.0, 0.5).unwrap();
        let sol = solve_stokes(&data, &grid).unwrap();
        println!(
            "LOG case {}: holder_ratio = {:.3}, div = {:.3e}, grad = {:.3e}, weak = {:?}",
            case.as_str(),
            sol.diagnostics.holder_ratio,
            sol.diagnostics.divergence_sup,
            sol.diagnostics.gradient_sup,
            sol.diagnostics.weak_residual
        );
        let _ = anisotropic_seminorm(&sol.u, 0.5, SeminormMode::sampled_default(7)).unwrap();
        let _ = divergence_sup(&sol.u);
        let _ = gradient_sup(&sol.u);
    }
}
