use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use fluxtrack::csvio;
use fluxtrack::field::flux_at_left;
use fluxtrack::flatness::{
    calibrate_cost_constant, cost_report, flat_control, make_flat_target, SeriesOptions,
};
use fluxtrack::heat::{solve_heat_forward, HeatProblem};
use fluxtrack::hum::{synthesize_and_verify, DualConfig};
use fluxtrack::signal::{NormKind, Signal};
use fluxtrack::special::{gs_eval, gs_lower_bound_ln, gs_upper_bound_ln, fit_upper_constant};
use fluxtrack::target::Target;
use fluxtrack::transmute::{transmute_signal, verify_transmutation, TransmutationPlan, WaveTrace};
use fluxtrack::verify::{all_passed, run_all, VerifyGrids};
use fluxtrack::wave::{solve_wave, WaveProblem};

use crate::config::LoadedConfig;
use crate::output::OutputWriter;
use crate::CliError;

pub struct RunContext {
    pub loaded: LoadedConfig,
    pub out: OutputWriter,
    pub quiet: bool,
}

impl RunContext {
    pub fn new(loaded: LoadedConfig, quiet: bool) -> Result<Self, CliError> {
        let out = OutputWriter::new(&loaded.config.out_dir, &loaded.sha256, loaded.config.seed)?;
        Ok(Self { loaded, out, quiet })
    }

    fn say(&self, msg: &str) {
        if !self.quiet {
            println!("{msg}");
        }
    }

    fn target(&self) -> Result<Target<f64>, CliError> {
        self.loaded.config.build_target(&self.loaded.dir)
    }

    fn series_options(&self) -> SeriesOptions<f64> {
        SeriesOptions {
            tol_series: self.loaded.config.method.tol_series,
            n_max: self.loaded.config.method.n_max,
        }
    }

    fn single_eps(&self) -> Result<f64, CliError> {
        self.loaded
            .config
            .method
            .eps
            .ok_or_else(|| CliError::config("method.eps is required for this command"))
    }
}

#[derive(Serialize)]
struct TrackErrors {
    sup_error_vs_target: f64,
    l2_error_vs_target: f64,
    sup_error_vs_mollified: f64,
    l2_error_vs_mollified: f64,
}

pub fn run_track(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = &ctx.loaded.config;
    let tgrid = cfg.time_grid()?;
    let xgrid = cfg.space_grid()?;
    let target = ctx.target()?;
    let eps = ctx.single_eps()?;
    let s = cfg.method.s;
    let opts = ctx.series_options();

    ctx.say("mollifying target and synthesizing the flatness control...");
    let plan = make_flat_target(&target, s, eps, tgrid.t_end(), opts.n_max)
        .map_err(CliError::from_lib)?;
    let control = flat_control(&plan.target, xgrid.length(), tgrid, opts)
        .map_err(CliError::from_lib)?;
    let cal = calibrate_cost_constant(s, xgrid.length(), plan.w_norm.max(1e-300), eps, eps)
        .map_err(CliError::from_lib)?;
    let report = cost_report(&plan, &control, s, eps, xgrid.length(), tgrid, &cal)
        .map_err(CliError::from_lib)?;

    let target_signal = target.sample(tgrid).map_err(CliError::from_lib)?;
    let mollified = Signal::from_fn(tgrid, |t| plan.target.value(t).unwrap_or(f64::NAN))
        .map_err(CliError::from_lib)?;

    ctx.say("running the verification solve...");
    let problem = HeatProblem::new(
        xgrid,
        tgrid,
        Signal::zeros(tgrid),
        control.control.clone(),
        vec![0.0; xgrid.n_nodes()],
    )
    .map_err(CliError::from_lib)?;
    let field = solve_heat_forward(&problem).map_err(CliError::from_lib)?;
    let flux = flux_at_left(&field).map_err(CliError::from_lib)?;

    let diff_t = flux.linear_comb(1.0, &target_signal, -1.0).map_err(CliError::from_lib)?;
    let diff_m = flux.linear_comb(1.0, &mollified, -1.0).map_err(CliError::from_lib)?;
    let errors = TrackErrors {
        sup_error_vs_target: diff_t.norm(NormKind::Sup),
        l2_error_vs_target: diff_t.norm(NormKind::L2),
        sup_error_vs_mollified: diff_m.norm(NormKind::Sup),
        l2_error_vs_mollified: diff_m.norm(NormKind::L2),
    };

    ctx.out.write_signal("control.csv", &control.control)?;
    ctx.out.write_signal("target.csv", &target_signal)?;
    ctx.out.write_signal("mollified_target.csv", &mollified)?;
    ctx.out.write_signal("simulated_flux.csv", &flux)?;
    ctx.out.write_json("cost_report.json", &report)?;
    ctx.out.write_json("errors.json", &errors)?;
    ctx.say(&format!(
        "track done: sup tracking error {:.3e} (target), {:.3e} (mollified)",
        errors.sup_error_vs_target, errors.sup_error_vs_mollified
    ));
    Ok(())
}

pub fn run_cost_curve(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = &ctx.loaded.config;
    let tgrid = cfg.time_grid()?;
    let xgrid = cfg.space_grid()?;
    let target = ctx.target()?;
    let s = cfg.method.s;
    let opts = ctx.series_options();
    let mut eps_list = cfg.method.eps_list.clone();
    if eps_list.len() < 2 {
        return Err(CliError::config("cost-curve needs method.eps_list with at least 2 entries"));
    }
    if eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::config("eps values must be positive"));
    }
    eps_list.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let eps_min = *eps_list.last().unwrap();
    let eps_max = eps_list[0];
    let w_norm = target
        .w1inf_norm(tgrid.t_end(), 2000)
        .map_err(CliError::from_lib)?;
    ctx.say("calibrating the cost constant...");
    let cal = calibrate_cost_constant(s, xgrid.length(), w_norm.max(1e-300), eps_min, eps_max)
        .map_err(CliError::from_lib)?;

    ctx.say(&format!("sweeping {} eps values...", eps_list.len()));
    let mut rows: Vec<(f64, Result<Vec<f64>, CliError>)> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for &eps in &eps_list {
            let target = &target;
            let cal = &cal;
            handles.push((eps, scope.spawn(move || -> Result<Vec<f64>, CliError> {
                let plan = make_flat_target(target, s, eps, tgrid.t_end(), opts.n_max)
                    .map_err(CliError::from_lib)?;
                let control = flat_control(&plan.target, xgrid.length(), tgrid, opts)
                    .map_err(CliError::from_lib)?;
                let report = cost_report(&plan, &control, s, eps, xgrid.length(), tgrid, cal)
                    .map_err(CliError::from_lib)?;
                Ok(vec![eps, report.delta, report.v_sup_norm, report.bound_value])
            })));
        }
        for (eps, h) in handles {
            rows.push((eps, h.join().expect("worker panicked")));
        }
    });
    let mut table = Vec::new();
    for (eps, row) in rows {
        match row {
            Ok(r) => table.push(r),
            Err(e) => {
                return Err(CliError {
                    code: e.code,
                    message: format!("eps = {eps}: {}", e.message),
                })
            }
        }
    }
    ctx.out.write_csv("cost_curve.csv", "eps,delta,v_sup_norm,bound_value", &table)?;
    ctx.say("cost-curve done");
    Ok(())
}

pub fn run_gs(ctx: &RunContext) -> Result<(), CliError> {
    let m = &ctx.loaded.config.method;
    if m.s_list.is_empty() {
        return Err(CliError::config("gs needs method.s_list"));
    }
    if !(m.x_max > 0.0) || m.n_x < 2 {
        return Err(CliError::config("gs needs x_max > 0 and n_x >= 2"));
    }
    let mut rows = Vec::new();
    for &s in &m.s_list {
        let xs: Vec<f64> = (1..=m.n_x).map(|k| m.x_max * k as f64 / m.n_x as f64).collect();
        let fit_c = fit_upper_constant(s, &xs).map_err(CliError::from_lib)?;
        for &x in &xs {
            let g = gs_eval(s, x).map_err(CliError::from_lib)?;
            rows.push(vec![
                s,
                x,
                g.value,
                gs_lower_bound_ln(s, x).exp(),
                gs_upper_bound_ln(s, x, fit_c).exp(),
            ]);
        }
    }
    ctx.out.write_csv("gs.csv", "s,x,value,lower_bound,upper_bound_fitC", &rows)?;
    ctx.say("gs table written");
    Ok(())
}

pub fn run_transmute(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = &ctx.loaded.config;
    let tgrid = cfg.time_grid()?;
    let xgrid = cfg.space_grid()?;
    let tc = &cfg.transmute;
    let wave_path = tc
        .wave_csv
        .as_ref()
        .ok_or_else(|| CliError::config("transmute.wave_csv is required"))?;
    let resolved: &Path = wave_path;
    let resolved = if resolved.is_absolute() {
        resolved.to_path_buf()
    } else {
        ctx.loaded.dir.join(resolved)
    };
    let file = File::open(&resolved)
        .map_err(|e| CliError::config(format!("wave csv {}: {e}", resolved.display())))?;
    let (ss, gs) = csvio::read_pairs(BufReader::new(file)).map_err(CliError::from_lib)?;
    // the time column holds the pseudo-time s over a symmetric range
    let s_max = ss.last().copied().unwrap();
    if (ss[0] + s_max).abs() > 1e-9 * s_max.max(1.0) {
        return Err(CliError::config(format!(
            "wave csv must span a symmetric range [-S, S]; got [{}, {}]",
            ss[0], s_max
        )));
    }
    let ds = ss[1] - ss[0];
    for (i, pair) in ss.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - ds).abs() > 1e-9 * ds {
            return Err(CliError::config(format!(
                "wave csv must be uniformly sampled (row {} breaks the spacing)",
                i + 2
            )));
        }
    }
    let trace = WaveTrace::new(s_max, gs).map_err(CliError::from_lib)?;

    let mut plan = TransmutationPlan::new(tgrid);
    plan.tol_kernel = tc.tol_kernel;
    plan.nodes_per_panel = tc.nodes_per_panel;
    plan.panels_per_scale = tc.panels_per_scale;

    ctx.say("transmuting the control...");
    let v = transmute_signal(&trace, &plan).map_err(CliError::from_lib)?;
    ctx.out.write_signal("heat_control.csv", &v)?;

    // verification: drive the wave with the resampled control, zero initial
    // data, and check the transmutation identities
    ctx.say("solving the wave and verifying the identities...");
    let span = plan.required_s_span().max(s_max);
    let n_steps = {
        let raw = (2.0 * span / xgrid.dx()).ceil() as usize;
        raw + raw % 2
    };
    let ds_solver = 2.0 * span / n_steps as f64;
    let control: Vec<f64> = (0..=n_steps)
        .map(|k| {
            let s = -span + k as f64 * ds_solver;
            if s.abs() <= s_max {
                trace.eval(s)
            } else {
                0.0
            }
        })
        .collect();
    let problem = WaveProblem::new(
        xgrid,
        span,
        n_steps,
        control,
        vec![0.0; xgrid.n_nodes()],
        vec![0.0; xgrid.n_nodes()],
    )
    .map_err(CliError::from_lib)?;
    let z = solve_wave(&problem).map_err(CliError::from_lib)?;
    let report = verify_transmutation(&z, &plan).map_err(CliError::from_lib)?;
    ctx.out.write_json("transmute_report.json", &report)?;
    ctx.say(&format!(
        "transmute done: heat residual {:.3e}, direct-solve sup {:.3e}",
        report.interior_heat_residual, report.direct_solve_sup
    ));
    Ok(())
}

pub fn run_hum(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = &ctx.loaded.config;
    let tgrid = cfg.time_grid()?;
    let xgrid = cfg.space_grid()?;
    let target = ctx.target()?;
    let w = target.sample(tgrid).map_err(CliError::from_lib)?;

    let mut dual = DualConfig::new(xgrid, tgrid, cfg.hum.eps);
    dual.smoothing_sigma = cfg.hum.smoothing_sigma;
    dual.max_iters = cfg.hum.max_iters;
    dual.grad_tol = cfg.hum.grad_tol;

    // the dual machinery observes E y = -d_x y(., 0); the user target is the
    // trace d_x y(., 0) = w, so minimize against -w
    let w_dual = w.scale(-1.0);
    ctx.say("minimizing the dual functional...");
    let (state, report) = synthesize_and_verify(&dual, &w_dual).map_err(CliError::from_lib)?;

    // flux trace of the closed-loop solve, in the user convention
    let problem = HeatProblem::new(
        xgrid,
        tgrid,
        Signal::zeros(tgrid),
        state.bstar_p.clone(),
        vec![0.0; xgrid.n_nodes()],
    )
    .map_err(CliError::from_lib)?
    .with_startup(dual.startup);
    let field = solve_heat_forward(&problem).map_err(CliError::from_lib)?;
    let flux = flux_at_left(&field).map_err(CliError::from_lib)?;

    ctx.out.write_signal("f.csv", &state.f)?;
    ctx.out.write_signal("control.csv", &state.bstar_p)?;
    ctx.out.write_signal("flux.csv", &flux)?;
    ctx.out.write_json("hum_report.json", &report)?;
    ctx.say(&format!(
        "hum done: tracking error {:.3e} in {} iterations (converged: {})",
        report.tracking_error_l2, report.iterations, report.converged
    ));
    Ok(())
}

pub fn run_verify(ctx: &RunContext) -> Result<(), CliError> {
    let cfg = &ctx.loaded.config;
    let grids = VerifyGrids {
        length: cfg.grids.length,
        t_end: cfg.grids.t_end,
        n_cells: cfg.grids.n_cells,
        n_steps: cfg.grids.n_steps,
    };
    ctx.say("running the property suite...");
    let results = run_all(grids, cfg.seed).map_err(CliError::from_lib)?;
    let passed = all_passed(&results);
    let report = json!({
        "passed": passed,
        "seed": cfg.seed,
        "properties": results,
    });
    ctx.out.write_json("verify_report.json", &report)?;
    for r in &results {
        ctx.say(&format!(
            "[{}] {}: measured {:.6e} vs threshold {:.6e}",
            if r.passed { "pass" } else { "FAIL" },
            r.name,
            r.measured,
            r.threshold
        ));
    }
    if passed {
        Ok(())
    } else {
        let failing: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
        Err(CliError::numeric(format!("properties failed: {}", failing.join(", "))))
    }
}
