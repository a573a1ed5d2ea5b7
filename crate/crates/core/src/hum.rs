//! Dual synthesis of tracking controls.
//!
//! Observation convention: E y = -d_x y(., 0) (the outward flux at x = 0) and
//! B* p = +d_x p(., L), fixed so the discrete duality
//!     <v, B* p_f>_{L2} = <E y_v, f>_{L2}
//! holds up to discretization error. The Gramian Lf = E y with control
//! v = B* p_f is then symmetric positive semidefinite up to the same error.
//!
//! All inner products use the trapezoid rule, pairing with the
//! Crank-Nicolson stepping so forward and adjoint solves are discrete
//! transposes up to the boundary stencils; the dual solves default to pure
//! Crank-Nicolson (no startup damping) to preserve that pairing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{flux_at_left, flux_at_right};
use crate::grid::{SpaceGrid, TimeGrid};
use crate::heat::{solve_heat_adjoint, solve_heat_forward, AdjointProblem, HeatProblem, Startup};
use crate::scalar::Real;
use crate::signal::{NormKind, Signal};

#[derive(Debug, Clone, Copy)]
pub struct DualConfig<F> {
    pub xgrid: SpaceGrid<F>,
    pub tgrid: TimeGrid<F>,
    /// Approximation slack: the eps ||f|| term of the dual functional.
    pub eps: F,
    /// Smoothing of the non-smooth eps ||f|| term.
    pub smoothing_sigma: F,
    pub max_iters: usize,
    pub grad_tol: F,
    pub startup: Startup,
}

impl<F: Real> DualConfig<F> {
    pub fn new(xgrid: SpaceGrid<F>, tgrid: TimeGrid<F>, eps: F) -> Self {
        Self {
            xgrid,
            tgrid,
            eps,
            smoothing_sigma: F::of(1e-9),
            max_iters: 500,
            grad_tol: F::of(1e-10),
            startup: Startup::CrankNicolson,
        }
    }
}

/// Observation E y_v = -d_x y(., 0) for the forward solve driven by the
/// right-boundary control v (zero left boundary, zero initial state).
pub fn apply_observation<F: Real>(cfg: &DualConfig<F>, v: &Signal<F>) -> Result<Signal<F>> {
    let p = HeatProblem::new(
        cfg.xgrid,
        cfg.tgrid,
        Signal::zeros(cfg.tgrid),
        v.clone(),
        vec![F::zero(); cfg.xgrid.n_nodes()],
    )?
    .with_startup(cfg.startup);
    let y = solve_heat_forward(&p)?;
    Ok(flux_at_left(&y)?.scale(-F::one()))
}

/// B* p_f = +d_x p(., L) for the adjoint solve with Dirichlet data f at x = 0.
pub fn apply_bstar<F: Real>(cfg: &DualConfig<F>, f: &Signal<F>) -> Result<Signal<F>> {
    let p = AdjointProblem::new(cfg.xgrid, cfg.tgrid, f.clone())?.with_startup(cfg.startup);
    let field = solve_heat_adjoint(&p)?;
    flux_at_right(&field)
}

/// Gramian application Lf = E y_{B* p_f}: one adjoint and one forward solve.
pub fn apply_gramian<F: Real>(cfg: &DualConfig<F>, f: &Signal<F>) -> Result<Signal<F>> {
    let v = apply_bstar(cfg, f)?;
    apply_observation(cfg, &v)
}

/// Value and gradient of
///   J(f) = 1/2 <Lf, f> - <f, w> + eps sqrt(<f,f> + sigma^2).
pub fn eval_j<F: Real>(cfg: &DualConfig<F>, f: &Signal<F>, w: &Signal<F>) -> Result<(F, Signal<F>)> {
    let lf = apply_gramian(cfg, f)?;
    let smooth_norm = (f.inner(f) + cfg.smoothing_sigma * cfg.smoothing_sigma).sqrt();
    let value = F::of(0.5) * lf.inner(f) - f.inner(w) + cfg.eps * smooth_norm;
    let grad = lf
        .linear_comb(F::one(), w, -F::one())?
        .linear_comb(F::one(), f, cfg.eps / smooth_norm)?;
    Ok((value, grad))
}

/// Outcome of the dual minimization.
#[derive(Debug, Clone)]
pub struct HumState<F> {
    /// Dual variable on the observation side.
    pub f: Signal<F>,
    /// The synthesized control B* p_f.
    pub bstar_p: Signal<F>,
    pub j_value: F,
    pub grad_norm: F,
    pub iterations: usize,
    pub converged: bool,
    /// J value per accepted iteration (nonincreasing).
    pub j_trace: Vec<F>,
    /// Ritz-value ratio of the Gramian restricted to the Krylov space.
    pub condition_estimate: F,
}

/// Extreme eigenvalues of a symmetric tridiagonal matrix by Sturm bisection.
fn tridiag_extremes<F: Real>(diag: &[F], off: &[F]) -> (F, F) {
    let n = diag.len();
    if n == 0 {
        return (F::one(), F::one());
    }
    let mut lo = diag[0];
    let mut hi = diag[0];
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { F::zero() }
            + if i < n - 1 { off[i].abs() } else { F::zero() };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let count_below = |x: F| -> usize {
        // Sturm sequence: number of eigenvalues < x
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < F::zero() {
            count += 1;
        }
        for i in 1..n {
            let off2 = off[i - 1] * off[i - 1];
            let denom = if d.abs() < F::of(1e-300) { F::of(1e-300) } else { d };
            d = diag[i] - x - off2 / denom;
            if d < F::zero() {
                count += 1;
            }
        }
        count
    };
    let bisect = |target: usize| -> F {
        let mut a = lo;
        let mut b = hi;
        for _ in 0..80 {
            let m = F::of(0.5) * (a + b);
            if count_below(m) > target {
                b = m;
            } else {
                a = m;
            }
        }
        F::of(0.5) * (a + b)
    };
    (bisect(0), bisect(n - 1))
}

/// Minimizes J. For eps = 0 this is conjugate gradient on Lf = w with early
/// stopping (iteration caps regularize the compact, ill-conditioned Gramian);
/// for eps > 0, Polak-Ribiere nonlinear CG with restarts and an exact line
/// search on the quadratic-plus-smooth objective.
pub fn minimize_j<F: Real>(cfg: &DualConfig<F>, w: &Signal<F>) -> Result<HumState<F>> {
    if w.grid().n_steps() != cfg.tgrid.n_steps() {
        return Err(Error::IncompatibleGrids("target must live on the dual time grid".into()));
    }
    if cfg.eps == F::zero() {
        minimize_linear_cg(cfg, w)
    } else {
        minimize_smoothed_ncg(cfg, w)
    }
}

fn minimize_linear_cg<F: Real>(cfg: &DualConfig<F>, w: &Signal<F>) -> Result<HumState<F>> {
    let mut f = Signal::zeros(cfg.tgrid);
    let mut lf = Signal::zeros(cfg.tgrid);
    let mut r = w.clone();
    let mut p = r.clone();
    let mut rs = r.inner(&r);
    let mut j_trace = Vec::new();
    let mut alphas: Vec<F> = Vec::new();
    let mut betas: Vec<F> = Vec::new();
    let mut converged = rs.sqrt() <= cfg.grad_tol;
    let mut iterations = 0;
    let mut j_prev = F::zero();
    j_trace.push(F::zero());
    while !converged && iterations < cfg.max_iters {
        let q = apply_gramian(cfg, &p)?;
        let pq = p.inner(&q);
        if !(pq > F::zero()) {
            // curvature breakdown: the discretized Gramian lost definiteness
            break;
        }
        let alpha = rs / pq;
        f = f.linear_comb(F::one(), &p, alpha)?;
        lf = lf.linear_comb(F::one(), &q, alpha)?;
        r = r.linear_comb(F::one(), &q, -alpha)?;
        let rs_new = r.inner(&r);
        iterations += 1;
        let j = F::of(0.5) * lf.inner(&f) - f.inner(w);
        if j > j_prev + F::of(1e-13) * j_prev.abs().max(F::one()) {
            // numerical stall; keep the last good iterate
            break;
        }
        j_prev = j;
        j_trace.push(j);
        alphas.push(alpha);
        betas.push(rs_new / rs);
        if rs_new.sqrt() <= cfg.grad_tol {
            converged = true;
        }
        let beta = rs_new / rs;
        p = r.linear_comb(F::one(), &p, beta)?;
        rs = rs_new;
    }
    // Lanczos tridiagonal from the CG coefficients
    let k = alphas.len();
    let condition_estimate = if k >= 2 {
        let mut diag = vec![F::zero(); k];
        let mut off = vec![F::zero(); k - 1];
        for i in 0..k {
            diag[i] = F::one() / alphas[i]
                + if i > 0 { betas[i - 1] / alphas[i - 1] } else { F::zero() };
            if i + 1 < k {
                off[i] = betas[i].sqrt() / alphas[i];
            }
        }
        let (emin, emax) = tridiag_extremes(&diag, &off);
        if emin > F::zero() {
            emax / emin
        } else {
            F::infinity()
        }
    } else {
        F::one()
    };
    let bstar_p = apply_bstar(cfg, &f)?;
    let grad_norm = rs.sqrt();
    Ok(HumState {
        f,
        bstar_p,
        j_value: j_prev,
        grad_norm,
        iterations,
        converged,
        j_trace,
        condition_estimate,
    })
}

fn minimize_smoothed_ncg<F: Real>(cfg: &DualConfig<F>, w: &Signal<F>) -> Result<HumState<F>> {
    let sigma2 = cfg.smoothing_sigma * cfg.smoothing_sigma;
    let smooth = |f: &Signal<F>| (f.inner(f) + sigma2).sqrt();
    let mut f = Signal::zeros(cfg.tgrid);
    let mut lf = Signal::zeros(cfg.tgrid);
    let mut grad = w.scale(-F::one());
    let mut grad2 = grad.inner(&grad);
    let mut dir = grad.scale(-F::one());
    let mut j = cfg.eps * cfg.smoothing_sigma;
    let mut j_trace = vec![j];
    let mut converged = grad2.sqrt() <= cfg.grad_tol;
    let mut iterations = 0;
    let mut rayleigh_min = F::infinity();
    let mut rayleigh_max = F::zero();
    while !converged && iterations < cfg.max_iters {
        let q = apply_gramian(cfg, &dir)?;
        let dq = dir.inner(&q);
        let dd = dir.inner(&dir);
        if dd > F::zero() && dq > F::zero() {
            rayleigh_min = rayleigh_min.min(dq / dd);
            rayleigh_max = rayleigh_max.max(dq / dd);
        }
        // phi(a) = 1/2<L(f+ad), f+ad> - <f+ad, w> + eps sqrt(||f+ad||^2 + s^2)
        let lf_f = lf.inner(&f);
        let lf_d = F::of(0.5) * (lf.inner(&dir) + q.inner(&f));
        let fw = f.inner(w);
        let dw = dir.inner(w);
        let ff = f.inner(&f);
        let fd = f.inner(&dir);
        let phi = |a: F| -> F {
            F::of(0.5) * (lf_f + F::of(2.0) * a * lf_d + a * a * dq) - (fw + a * dw)
                + cfg.eps * (ff + F::of(2.0) * a * fd + a * a * dd + sigma2).sqrt()
        };
        let dphi = |a: F| -> F {
            lf_d + a * dq - dw
                + cfg.eps * (fd + a * dd) / (ff + F::of(2.0) * a * fd + a * a * dd + sigma2).sqrt()
        };
        // bracket a root of dphi starting from the quadratic-only guess
        let mut a_hi = if dq > F::zero() { ((dw - lf_d) / dq).max(F::of(1e-16)) } else { F::one() };
        let mut guard = 0;
        while dphi(a_hi) < F::zero() && guard < 60 {
            a_hi = a_hi * F::of(2.0);
            guard += 1;
        }
        let mut a_lo = F::zero();
        let mut alpha = a_hi;
        for _ in 0..80 {
            alpha = F::of(0.5) * (a_lo + a_hi);
            if dphi(alpha) > F::zero() {
                a_hi = alpha;
            } else {
                a_lo = alpha;
            }
        }
        // accept only decreasing steps; otherwise restart along -grad
        let j_new = phi(alpha);
        if !(j_new <= j) {
            let steep = grad.scale(-F::one());
            if dir.values() != steep.values() {
                dir = steep;
                continue;
            }
            break;
        }
        f = f.linear_comb(F::one(), &dir, alpha)?;
        lf = lf.linear_comb(F::one(), &q, alpha)?;
        j = j_new;
        j_trace.push(j);
        iterations += 1;
        let sn = smooth(&f);
        let grad_new = lf
            .linear_comb(F::one(), w, -F::one())?
            .linear_comb(F::one(), &f, cfg.eps / sn)?;
        let g2_new = grad_new.inner(&grad_new);
        if g2_new.sqrt() <= cfg.grad_tol {
            grad2 = g2_new;
            converged = true;
            break;
        }
        // Polak-Ribiere with automatic restart
        let y = grad_new.linear_comb(F::one(), &grad, -F::one())?;
        let mut beta = grad_new.inner(&y) / grad2;
        if beta < F::zero() || iterations % (cfg.tgrid.n_steps() + 1) == 0 {
            beta = F::zero();
        }
        dir = grad_new.scale(-F::one()).linear_comb(F::one(), &dir, beta)?;
        grad = grad_new;
        grad2 = g2_new;
    }
    let condition_estimate = if rayleigh_max > F::zero() && rayleigh_min < F::infinity() {
        rayleigh_max / rayleigh_min.max(F::of(1e-300))
    } else {
        F::one()
    };
    let bstar_p = apply_bstar(cfg, &f)?;
    Ok(HumState {
        f,
        bstar_p,
        j_value: j,
        grad_norm: grad2.sqrt(),
        iterations,
        converged,
        j_trace,
        condition_estimate,
    })
}

/// Closed-loop report of [`synthesize_and_verify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumReport {
    pub eps: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tracking_error_l2: f64,
    pub f_norm: f64,
    pub v_norm: f64,
    pub grad_norm: f64,
    pub smoothing_sigma: f64,
    pub cg_condition_estimate: f64,
    /// Discretization allowance 10 max(dt, dx^2) (1 + ||w||).
    pub tol_disc: f64,
    /// Whether tracking_error_l2 <= eps + tol_disc.
    pub passed: bool,
}

/// Minimizes J, forward-solves with the synthesized control, and reports the
/// closed-loop tracking error ||E y - w||_{L2}.
pub fn synthesize_and_verify<F: Real>(cfg: &DualConfig<F>, w: &Signal<F>) -> Result<(HumState<F>, HumReport)> {
    let state = minimize_j(cfg, w)?;
    let ey = apply_observation(cfg, &state.bstar_p)?;
    let err = ey.linear_comb(F::one(), w, -F::one())?;
    let tracking = err.norm(NormKind::L2);
    let dt = cfg.tgrid.dt();
    let dx = cfg.xgrid.dx();
    let tol_disc = F::of(10.0) * dt.max(dx * dx) * (F::one() + w.norm(NormKind::L2));
    let report = HumReport {
        eps: cfg.eps.as_f64(),
        iterations: state.iterations,
        converged: state.converged,
        tracking_error_l2: tracking.as_f64(),
        f_norm: state.f.norm(NormKind::L2).as_f64(),
        v_norm: state.bstar_p.norm(NormKind::L2).as_f64(),
        grad_norm: state.grad_norm.as_f64(),
        smoothing_sigma: cfg.smoothing_sigma.as_f64(),
        cg_condition_estimate: state.condition_estimate.as_f64(),
        tol_disc: tol_disc.as_f64(),
        passed: tracking.as_f64() <= cfg.eps.as_f64() + tol_disc.as_f64(),
    };
    Ok((state, report))
}

/// Smooth compatible test signals: a few sine modes vanishing at both ends,
/// with seeded random amplitudes. Used by the randomized property checks.
pub fn random_smooth_signal<F: Real>(
    grid: TimeGrid<F>,
    rng: &mut impl rand::Rng,
    modes: usize,
) -> Signal<F> {
    let t_end = grid.t_end();
    let pi = F::of(std::f64::consts::PI);
    let amps: Vec<F> = (1..=modes)
        .map(|k| F::of(rng.gen_range(-1.0..1.0)) / F::of_usize(k * k))
        .collect();
    Signal::from_fn(grid, |t| {
        let mut acc = F::zero();
        for (k, &a) in amps.iter().enumerate() {
            acc += a * (F::of_usize(k + 1) * pi * t / t_end).sin();
        }
        acc
    })
    .expect("finite by construction")
}
