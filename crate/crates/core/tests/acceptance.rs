//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`). Tolerances
//! are pinned in the assertions; grids are pinned where the criterion fixes
//! them and chosen once here otherwise.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fluxtrack::field::{flux_at_left, HeatField};
use fluxtrack::flatness::{
    calibrate_cost_constant, cost_report, flat_control, make_flat_target, series_state,
    SeriesOptions,
};
use fluxtrack::grid::{SpaceGrid, TimeGrid};
use fluxtrack::heat::{solve_heat_forward, HeatProblem};
use fluxtrack::hum::{
    apply_bstar, apply_gramian, apply_observation, eval_j, random_smooth_signal,
    synthesize_and_verify, DualConfig,
};
use fluxtrack::signal::{NormKind, Signal};
use fluxtrack::special::{
    factorial_inequality_check, fit_upper_constant, gs_eval, gs_lower_bound_ln, gs_upper_bound_ln,
};
use fluxtrack::target::Target;
use fluxtrack::transmute::{transmute_field, verify_transmutation, TransmutationPlan};
use fluxtrack::wave::{solve_wave, WaveProblem};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("acceptance {criterion}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "acceptance {criterion} failed: {detail}");
}

fn runtime_ok(criterion: &str, started: Instant, limit_s: f64) {
    let elapsed = started.elapsed().as_secs_f64();
    report(&format!("{criterion} runtime"), elapsed <= limit_s, &format!("{elapsed:.1}s of {limit_s}s"));
}

#[test]
fn criterion_01_closed_loop_flatness_tracking() {
    let started = Instant::now();
    let (length, t_end) = (1.0f64, 1.0f64);
    let (n_cells, n_steps) = (200usize, 4000usize);
    let (s, eps) = (0.5f64, 0.1f64);
    let tgrid = TimeGrid::new(t_end, n_steps).unwrap();
    let xgrid = SpaceGrid::new(length, n_cells).unwrap();
    let target = Target::Ramp { slope: 1.0 };

    let plan = make_flat_target(&target, s, eps, t_end, 64).unwrap();
    let control = flat_control(&plan.target, length, tgrid, SeriesOptions::default()).unwrap();
    let problem = HeatProblem::new(
        xgrid,
        tgrid,
        Signal::zeros(tgrid),
        control.control.clone(),
        vec![0.0; xgrid.n_nodes()],
    )
    .unwrap();
    let field = solve_heat_forward(&problem).unwrap();
    let flux = flux_at_left(&field).unwrap();

    let mut err_target = 0.0f64;
    let mut err_moll = 0.0f64;
    for (k, &v) in flux.values().iter().enumerate() {
        let t = tgrid.node(k);
        err_target = err_target.max((v - t).abs());
        let wd = plan.target.value(t).unwrap();
        err_moll = err_moll.max((v - wd).abs());
    }
    report(
        "1 closed-loop tracking vs target",
        err_target <= eps + 5e-3,
        &format!("||flux - w||_C0 = {err_target:.3e} <= {:.3e}", eps + 5e-3),
    );
    report(
        "1 closed-loop tracking vs mollified",
        err_moll <= 5e-3,
        &format!("||flux - w_delta||_C0 = {err_moll:.3e} <= 5e-3"),
    );
    runtime_ok("1", started, 30.0);
}

#[test]
fn criterion_02_mollification_bound() {
    let started = Instant::now();
    let t_end = 1.0f64;
    let targets: Vec<(&str, Target<f64>)> = vec![
        ("ramp", Target::Ramp { slope: 1.0 }),
        ("bump_step_a", Target::bump_integral(1.0, 0.1, 0.4, 1.5).unwrap()),
        ("bump_step_b", Target::bump_integral(0.7, 0.0, 0.6, 2.0).unwrap()),
    ];
    for (name, target) in &targets {
        let norm = target.w1inf_norm(t_end, 2000).unwrap();
        for &delta in &[0.05f64, 0.1, 0.2] {
            let eps = delta * norm;
            let plan = make_flat_target(target, 0.5, eps, t_end, 16).unwrap();
            let mut emax = 0.0f64;
            for k in 0..=2000 {
                let t = t_end * k as f64 / 2000.0;
                let wd = plan.target.value(t).unwrap();
                emax = emax.max((wd - target.value(t)).abs());
            }
            report(
                &format!("2 mollification bound [{name}, delta={delta}]"),
                emax <= delta * norm + 1e-9,
                &format!("||w_d - w|| = {emax:.3e} <= {:.3e}", delta * norm + 1e-9),
            );
        }
    }
    runtime_ok("2", started, 5.0);
}

#[test]
fn criterion_03_cost_bound_consistency() {
    let started = Instant::now();
    let (length, t_end, s) = (1.0f64, 1.0f64, 0.5f64);
    let tgrid = TimeGrid::new(t_end, 2000).unwrap();
    let target = Target::Ramp { slope: 1.0 };
    let eps_sweep = [0.2f64, 0.1, 0.05, 0.025];
    let norm = target.w1inf_norm(t_end, 2000).unwrap();
    let cal = calibrate_cost_constant(s, length, norm, 0.025, 0.2).unwrap();
    let opts = SeriesOptions::default();
    for &eps in &eps_sweep {
        let plan = make_flat_target(&target, s, eps, t_end, opts.n_max).unwrap();
        let control = flat_control(&plan.target, length, tgrid, opts).unwrap();
        let rep = cost_report(&plan, &control, s, eps, length, tgrid, &cal).unwrap();
        // bound comparison in log space (the bound overflows f64 at small eps)
        let pass = rep.v_sup_norm.ln() <= rep.ln_bound_value;
        report(
            &format!("3 cost bound [eps={eps}]"),
            pass,
            &format!(
                "ln||v|| = {:.3} <= ln bound = {:.3} (fitted_C = {:.4}, terms <= {})",
                rep.v_sup_norm.ln(),
                rep.ln_bound_value,
                rep.fitted_c,
                rep.terms_used_max
            ),
        );
    }
    runtime_ok("3", started, 120.0);
}

#[test]
fn criterion_04_gs_sandwich() {
    let started = Instant::now();
    for &s in &[0.3f64, 0.5, 0.8] {
        let xs: Vec<f64> = (1..=300).map(|k| 30.0 * k as f64 / 300.0).collect();
        let c = fit_upper_constant(s, &xs).unwrap();
        let mut lower_ok = true;
        let mut upper_ok = true;
        for &x in &xs {
            let g = gs_eval(s, x).unwrap();
            lower_ok &= gs_lower_bound_ln(s, x) <= g.ln_value + 1e-12;
            upper_ok &= gs_upper_bound_ln(s, x, c) >= g.ln_value - 1e-9;
        }
        report(
            &format!("4 sandwich lower [s={s}]"),
            lower_ok,
            "exp(s x^{1/s}) <= G_s(x) on 300 points of [0,30]",
        );
        report(
            &format!("4 sandwich upper [s={s}]"),
            upper_ok,
            &format!("G_s(x) <= C exp(C x^{{1/s}}) with fitted C = {c:.4}"),
        );
    }
    let mut exp_ok = true;
    let mut worst = 0.0f64;
    for &x in &[1.0f64, 5.0, 10.0] {
        let g = gs_eval(1.0, x).unwrap();
        let rel = (g.ln_value - x).abs() / x;
        worst = worst.max(rel);
        exp_ok &= rel <= 1e-12;
    }
    report("4 G_1 equals exp", exp_ok, &format!("max relative gap {worst:.2e} <= 1e-12"));
    runtime_ok("4", started, 5.0);
}

#[test]
fn criterion_05_factorial_inequality() {
    let started = Instant::now();
    let ok = factorial_inequality_check(200);
    report(
        "5 factorial inequality",
        ok,
        "(i!)^2 (2i+1) C(2i,i) = (2i+1)! and C(2i,i) >= 2^i exactly for i <= 200",
    );
    runtime_ok("5", started, 1.0);
}

fn even_bump_control(s: f64) -> f64 {
    let u = s.abs() - 0.8;
    if u > 1e-12 && u < 1.0 - 1e-12 {
        (-1.0 / ((1.0 - u) * u)).exp()
    } else {
        0.0
    }
}

#[test]
fn criterion_06_transmutation_identities() {
    let started = Instant::now();
    let t_end = 1.0f64;
    let n_cells = 120usize;
    let tgrid = TimeGrid::new(t_end, 400).unwrap();
    let xgrid = SpaceGrid::new(1.0f64, n_cells).unwrap();
    let plan = TransmutationPlan::new(tgrid);

    // (a) kernel mass at 50 nodes
    let mut mass_ok = true;
    let mut mass_lo = f64::INFINITY;
    for k in 1..=50 {
        let t = t_end * k as f64 / 50.0;
        let m = plan.kernel_mass(t).unwrap();
        mass_lo = mass_lo.min(m);
        mass_ok &= (1.0 - 1e-12..=1.0).contains(&m);
    }
    report("6a kernel mass", mass_ok, &format!("min mass {mass_lo:.15} in [1-1e-12, 1]"));

    // (d) second moment = 2t
    let mut mom_ok = true;
    let mut mom_worst = 0.0f64;
    for k in 1..=10 {
        let t = t_end * k as f64 / 10.0;
        let m2 = plan.kernel_moment(t, 2).unwrap();
        let rel = (m2 - 2.0 * t).abs() / (2.0 * t);
        mom_worst = mom_worst.max(rel);
        mom_ok &= rel <= 1e-8;
    }
    report("6d second moment", mom_ok, &format!("max relative error {mom_worst:.2e} <= 1e-8"));

    let span = plan.required_s_span() * 1.02;
    let wave_steps = {
        let raw = (2.0 * span / xgrid.dx()).ceil() as usize;
        raw + raw % 2
    };

    // (b) steady case z = x
    let z0: Vec<f64> = xgrid.nodes().collect();
    let steady = WaveProblem::new(
        xgrid,
        span,
        wave_steps,
        vec![1.0; wave_steps + 1],
        z0,
        vec![0.0; xgrid.n_nodes()],
    )
    .unwrap();
    let zs = solve_wave(&steady).unwrap();
    let ys = transmute_field(&zs, &plan).unwrap();
    let mut steady_err = 0.0f64;
    for k in 0..tgrid.n_nodes() {
        for i in 0..xgrid.n_nodes() {
            steady_err = steady_err.max((ys.at(k, i) - xgrid.node(i)).abs());
        }
    }
    report("6b steady state", steady_err <= 1e-10, &format!("max |y - x| = {steady_err:.3e} <= 1e-10"));

    // (c) compactly supported even control
    let ds = 2.0 * span / wave_steps as f64;
    let control: Vec<f64> = (0..=wave_steps).map(|m| even_bump_control(-span + m as f64 * ds)).collect();
    let p = WaveProblem::new(
        xgrid,
        span,
        wave_steps,
        control,
        vec![0.0; xgrid.n_nodes()],
        vec![0.0; xgrid.n_nodes()],
    )
    .unwrap();
    let z = solve_wave(&p).unwrap();
    let rep = verify_transmutation(&z, &plan).unwrap();
    report(
        "6c heat residual",
        rep.interior_heat_residual <= 1e-4,
        &format!("max residual {:.3e} <= 1e-4", rep.interior_heat_residual),
    );
    report(
        "6c direct solve match",
        rep.direct_solve_sup <= 5e-3,
        &format!("sup discrepancy {:.3e} <= 5e-3", rep.direct_solve_sup),
    );
    runtime_ok("6", started, 120.0);
}

#[test]
fn criterion_07_duality_and_gradient() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20260809);

    // duality identity over 10 random pairs
    {
        let xg = SpaceGrid::new(1.0f64, 100).unwrap();
        let tg = TimeGrid::new(1.0f64, 4000).unwrap();
        let cfg = DualConfig::new(xg, tg, 0.0);
        let tol = 10.0 * tg.dt().max(xg.dx().powi(2));
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let f = random_smooth_signal(tg, &mut rng, 5);
            let v = random_smooth_signal(tg, &mut rng, 5);
            let lhs = v.inner(&apply_bstar(&cfg, &f).unwrap());
            let rhs = apply_observation(&cfg, &v).unwrap().inner(&f);
            worst = worst.max((lhs - rhs).abs() / (f.norm(NormKind::L2) * v.norm(NormKind::L2)));
        }
        report(
            "7 duality identity",
            worst <= tol,
            &format!("max defect {worst:.3e} <= 10 max(dt, dx^2) = {tol:.3e}"),
        );
    }

    // Gramian symmetry over 10 pairs
    {
        let xg = SpaceGrid::new(1.0f64, 150).unwrap();
        let tg = TimeGrid::new(1.0f64, 8000).unwrap();
        let cfg = DualConfig::new(xg, tg, 0.0);
        let mut worst = 0.0f64;
        for _ in 0..10 {
            let f = random_smooth_signal(tg, &mut rng, 5);
            let g = random_smooth_signal(tg, &mut rng, 5);
            let a = apply_gramian(&cfg, &f).unwrap().inner(&g);
            let b = f.inner(&apply_gramian(&cfg, &g).unwrap());
            worst = worst.max((a - b).abs() / (f.norm(NormKind::L2) * g.norm(NormKind::L2)));
        }
        report("7 gramian symmetry", worst <= 1e-8, &format!("max asymmetry {worst:.3e} <= 1e-8"));
    }

    // gradient of J against central differences along 5 directions
    {
        let xg = SpaceGrid::new(1.0f64, 100).unwrap();
        let tg = TimeGrid::new(1.0f64, 4000).unwrap();
        let mut cfg = DualConfig::new(xg, tg, 0.05);
        cfg.smoothing_sigma = 1e-7;
        let w = random_smooth_signal(tg, &mut rng, 4);
        let f0 = random_smooth_signal(tg, &mut rng, 4);
        let (_, grad) = eval_j(&cfg, &f0, &w).unwrap();
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let d = random_smooth_signal(tg, &mut rng, 4);
            let h = 1e-5;
            let jp = eval_j(&cfg, &f0.linear_comb(1.0, &d, h).unwrap(), &w).unwrap().0;
            let jm = eval_j(&cfg, &f0.linear_comb(1.0, &d, -h).unwrap(), &w).unwrap().0;
            let fd = (jp - jm) / (2.0 * h);
            worst = worst.max((fd - grad.inner(&d)).abs() / fd.abs().max(1e-14));
        }
        report("7 gradient check", worst <= 1e-5, &format!("max relative error {worst:.3e} <= 1e-5"));
    }
    runtime_ok("7", started, 60.0);
}

#[test]
fn criterion_08_hum_closed_loop() {
    let started = Instant::now();
    let xg = SpaceGrid::new(1.0f64, 100).unwrap();
    let tg = TimeGrid::new(1.0f64, 4000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // manufactured achievable target: w = E y_{v*} for a smooth control v*
    let probe = DualConfig::new(xg, tg, 0.0);
    let vstar = random_smooth_signal(tg, &mut rng, 3);
    let w = apply_observation(&probe, &vstar).unwrap();

    let mut cfg = DualConfig::new(xg, tg, 0.05);
    cfg.max_iters = 500;
    cfg.grad_tol = 1e-9;
    let (_, rep) = synthesize_and_verify(&cfg, &w).unwrap();
    report(
        "8 hum closed loop",
        rep.tracking_error_l2 <= 0.05 + 5e-3 && rep.iterations <= 500,
        &format!(
            "tracking {:.3e} <= 5.5e-2 in {} iterations (condition estimate {:.2e})",
            rep.tracking_error_l2, rep.iterations, rep.cg_condition_estimate
        ),
    );
    runtime_ok("8", started, 120.0);
}

fn mms_error(n_cells: usize, n_steps: usize) -> f64 {
    let xg = SpaceGrid::new(1.0f64, n_cells).unwrap();
    let tg = TimeGrid::new(0.25f64, n_steps).unwrap();
    let pi = std::f64::consts::PI;
    let initial: Vec<f64> = xg.nodes().map(|x| (pi * x).sin()).collect();
    let p = HeatProblem::new(xg, tg, Signal::zeros(tg), Signal::zeros(tg), initial).unwrap();
    let f = solve_heat_forward(&p).unwrap();
    let mut emax = 0.0f64;
    for n in 0..=n_steps {
        let t = tg.node(n);
        for i in 0..=n_cells {
            let exact = (-pi * pi * t).exp() * (pi * xg.node(i)).sin();
            emax = emax.max((f.at(n, i) - exact).abs());
        }
    }
    emax
}

#[test]
fn criterion_09_solver_convergence() {
    let started = Instant::now();
    // order in dx with dt fine enough to be invisible
    let ex1 = mms_error(8, 4096);
    let ex2 = mms_error(16, 4096);
    let ex3 = mms_error(32, 4096);
    let p_x1 = (ex1 / ex2).log2();
    let p_x2 = (ex2 / ex3).log2();
    report(
        "9 heat order in dx",
        p_x1 >= 1.8 && p_x2 >= 1.8,
        &format!("orders {p_x1:.2}, {p_x2:.2} from errors {ex1:.2e}, {ex2:.2e}, {ex3:.2e}"),
    );
    // order in dt on a fine mesh
    let et1 = mms_error(256, 12);
    let et2 = mms_error(256, 24);
    let et3 = mms_error(256, 48);
    let p_t1 = (et1 / et2).log2();
    let p_t2 = (et2 / et3).log2();
    report(
        "9 heat order in dt",
        p_t1 >= 1.8 && p_t2 >= 1.8,
        &format!("orders {p_t1:.2}, {p_t2:.2} from errors {et1:.2e}, {et2:.2e}, {et3:.2e}"),
    );
    // leapfrog energy drift with zero control
    {
        let nc = 100usize;
        let xg = SpaceGrid::new(1.0f64, nc).unwrap();
        let steps = 400usize;
        let s_max = 0.9 * xg.dx() * steps as f64 / 2.0;
        let z0: Vec<f64> = xg
            .nodes()
            .map(|x| {
                let u: f64 = (x - 0.45) / 0.25;
                if u.abs() < 1.0 {
                    (-1.0 / (1.0 - u * u)).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let p = WaveProblem::new(xg, s_max, steps, vec![0.0; steps + 1], z0, vec![0.0; nc + 1]).unwrap();
        let f = solve_wave(&p).unwrap();
        let e = fluxtrack::wave::wave_energy(&f);
        let e0 = e[steps / 2];
        let drift = e.iter().fold(0.0f64, |m, &v| m.max((v - e0).abs())) / e0;
        report("9 wave energy drift", drift <= 1e-10, &format!("relative drift {drift:.3e} <= 1e-10"));
    }
    runtime_ok("9", started, 60.0);
}

#[test]
fn criterion_10_series_state_consistency() {
    let started = Instant::now();
    let t_end = 1.0f64;
    let s = 0.5f64;
    let eps = 0.2f64; // delta = 0.2 for the unit ramp
    let target = Target::Ramp { slope: 1.0 };
    let opts = SeriesOptions::default();

    // interior heat residual under space refinement, fine time grid so the
    // dt^2 part stays far below the dx^2 part
    let tgrid = TimeGrid::new(t_end, 8000).unwrap();
    let plan = make_flat_target(&target, s, eps, t_end, opts.n_max).unwrap();
    let mut residuals = Vec::new();
    for &nc in &[25usize, 50, 100] {
        let xg = SpaceGrid::new(1.0f64, nc).unwrap();
        let field = series_state(&plan.target, xg, tgrid, opts).unwrap();
        let dt = tgrid.dt();
        let dx = xg.dx();
        let mut r = 0.0f64;
        for k in (1..tgrid.n_nodes() - 1).step_by(7) {
            for i in 1..nc {
                let yt = (field.at(k + 1, i) - field.at(k - 1, i)) / (2.0 * dt);
                let yxx = (field.at(k, i + 1) - 2.0 * field.at(k, i) + field.at(k, i - 1)) / (dx * dx);
                r = r.max((yt - yxx).abs());
            }
        }
        residuals.push(r);
    }
    let p1 = (residuals[0] / residuals[1]).log2();
    let p2 = (residuals[1] / residuals[2]).log2();
    report(
        "10 series-state residual order",
        p1 >= 1.8 && p2 >= 1.8,
        &format!("orders {p1:.2}, {p2:.2} from residuals {residuals:?}"),
    );

    // stencil flux at x = 0 matches the mollified target at O(dx^4)
    let tg_flux = TimeGrid::new(t_end, 400).unwrap();
    let mut flux_errs = Vec::new();
    for &nc in &[50usize, 100] {
        let xg = SpaceGrid::new(1.0f64, nc).unwrap();
        let field = series_state(&plan.target, xg, tg_flux, opts).unwrap();
        let flux = flux_at_left(&field).unwrap();
        let mut e = 0.0f64;
        for (k, &v) in flux.values().iter().enumerate() {
            let wd = plan.target.value(tg_flux.node(k)).unwrap();
            e = e.max((v - wd).abs());
        }
        flux_errs.push(e);
    }
    let ratio = flux_errs[0] / flux_errs[1];
    report(
        "10 series-state flux stencil",
        ratio >= 8.0 && flux_errs[1] <= 1e-6,
        &format!("errors {flux_errs:?}, halving ratio {ratio:.1} (>= 8 for order >= 3)"),
    );
    let _ = HeatField::zeros(tg_flux, SpaceGrid::new(1.0f64, 10).unwrap());
    runtime_ok("10", started, 30.0);
}
