//! The entire-series growth function G_s(x) = sum_i x^i / (i!)^s that prices
//! the approximate-tracking control, its two-sided exponential bounds, and the
//! exact factorial inequalities behind the per-term cost estimate.

use num_bigint::BigUint;

use crate::error::{Error, Result};
use crate::scalar::{ln_gamma, Real};

/// Result of a series evaluation. `ln_value` is always finite and is the
/// quantity downstream bounds compare against; `value = exp(ln_value)` can
/// overflow to +inf for large arguments (the series grows like
/// exp(s x^{1/s})).
#[derive(Debug, Clone, Copy)]
pub struct GsEvaluation<F> {
    pub s: F,
    pub x: F,
    pub value: F,
    pub ln_value: F,
    pub terms_used: usize,
    /// Geometric estimate of the dropped tail, relative to the sum.
    pub tail_bound: F,
    /// Index of the largest term (near x^{1/s} by the ratio test).
    pub peak_index: usize,
}

/// Evaluates G_s(x) for s in (0, 1], x >= 0.
///
/// Terms are accumulated in log space (ln term_i = i ln x - s ln i!) with a
/// streaming log-sum-exp, so neither x^i nor (i!)^s is ever formed.
/// Summation stops once 100 consecutive terms fall below 1e-17 of the
/// running sum and the index has passed the term peak at e x^{1/s}.
pub fn gs_eval<F: Real>(s: F, x: F) -> Result<GsEvaluation<F>> {
    if !(s > F::zero() && s <= F::one()) {
        return Err(Error::OutOfRange(format!(
            "gs_eval needs s in (0, 1], got {s}; use gs_closed_bound_s_ge_1 for s >= 1"
        )));
    }
    if !(x >= F::zero()) || !x.is_finite() {
        return Err(Error::OutOfRange(format!("gs_eval needs x >= 0, got {x}")));
    }
    if x == F::zero() {
        return Ok(GsEvaluation {
            s,
            x,
            value: F::one(),
            ln_value: F::zero(),
            terms_used: 1,
            tail_bound: F::zero(),
            peak_index: 0,
        });
    }
    let ln_x = x.ln();
    let past_peak = F::of(std::f64::consts::E) * x.powf(F::one() / s);
    let drop = F::of(1e-17).ln();
    let mut ln_term = F::zero();
    let mut ln_sum = F::zero();
    let mut peak = (F::zero(), 0usize);
    let mut consec = 0usize;
    let mut i = 0usize;
    loop {
        i += 1;
        ln_term += ln_x - s * F::of_usize(i).ln();
        if ln_term > peak.0 {
            peak = (ln_term, i);
        }
        let m = ln_sum.max(ln_term);
        ln_sum = m + ((ln_sum - m).exp() + (ln_term - m).exp()).ln();
        if ln_term <= ln_sum + drop {
            consec += 1;
            if consec >= 100 && F::of_usize(i) > past_peak {
                break;
            }
        } else {
            consec = 0;
        }
        if i > 100_000_000 {
            return Err(Error::DivergentSeries(format!(
                "gs_eval did not converge within 1e8 terms (s={s}, x={x})"
            )));
        }
    }
    // tail estimate: next term / (1 - ratio); past the enforced peak the
    // ratio x/(i+1)^s is at most e^{-s}
    let ratio = x / F::of_usize(i + 1).powf(s);
    let tail_rel = (ln_term - ln_sum).exp() * ratio / (F::one() - ratio.min(F::of(0.99)));
    Ok(GsEvaluation {
        s,
        x,
        value: ln_sum.exp(),
        ln_value: ln_sum,
        terms_used: i + 1,
        tail_bound: tail_rel,
        peak_index: peak.1,
    })
}

/// Upper bound C exp(C x^{1/s}) for s in (0,1); the constant is never given
/// by theory as a number, so callers fit it (see [`fit_upper_constant`]).
pub fn gs_upper_bound<F: Real>(s: F, x: F, c: F) -> F {
    gs_upper_bound_ln(s, x, c).exp()
}

/// ln of [`gs_upper_bound`]; finite even when the bound overflows.
pub fn gs_upper_bound_ln<F: Real>(s: F, x: F, c: F) -> F {
    c.ln() + c * x.powf(F::one() / s)
}

/// Lower bound exp(s x^{1/s}), valid for s in (0,1).
pub fn gs_lower_bound<F: Real>(s: F, x: F) -> F {
    gs_lower_bound_ln(s, x).exp()
}

/// ln of [`gs_lower_bound`].
pub fn gs_lower_bound_ln<F: Real>(s: F, x: F) -> F {
    s * x.powf(F::one() / s)
}

/// For s >= 1 the same expression exp(s x^{1/s}) is an upper bound
/// (power-mean inequality applied to the series).
pub fn gs_closed_bound_s_ge_1<F: Real>(s: F, x: F) -> Result<F> {
    if !(s >= F::one()) {
        return Err(Error::OutOfRange(format!("closed bound needs s >= 1, got {s}")));
    }
    if !(x >= F::zero()) {
        return Err(Error::OutOfRange(format!("closed bound needs x >= 0, got {x}")));
    }
    Ok((s * x.powf(F::one() / s)).exp())
}

/// Term-wise derivative series G_s'(x) = sum (i+1)^{1-s} x^i/(i!)^s, in log space.
pub fn gs_derivative_ln<F: Real>(s: F, x: F) -> Result<F> {
    if !(s > F::zero() && s <= F::one()) {
        return Err(Error::OutOfRange(format!("gs_derivative needs s in (0,1], got {s}")));
    }
    if x == F::zero() {
        return Ok(F::zero()); // G'(0) = 1
    }
    let ln_x = x.ln();
    let one_minus_s = F::one() - s;
    let drop = F::of(1e-17).ln();
    let past_peak = F::of(std::f64::consts::E) * x.powf(F::one() / s);
    let mut ln_base = F::zero(); // ln of x^i/(i!)^s
    let mut ln_sum = F::zero(); // i = 0 term: 1^{1-s} * 1
    let mut consec = 0usize;
    let mut i = 0usize;
    loop {
        i += 1;
        ln_base += ln_x - s * F::of_usize(i).ln();
        let ln_term = ln_base + one_minus_s * F::of_usize(i + 1).ln();
        let m = ln_sum.max(ln_term);
        ln_sum = m + ((ln_sum - m).exp() + (ln_term - m).exp()).ln();
        if ln_term <= ln_sum + drop {
            consec += 1;
            if consec >= 100 && F::of_usize(i) > past_peak {
                return Ok(ln_sum);
            }
        } else {
            consec = 0;
        }
        if i > 100_000_000 {
            return Err(Error::DivergentSeries("gs_derivative did not converge".into()));
        }
    }
}

/// max over the samples of G_s'(x) / (x^{(1-s)/s} G_s(x)); the growth lemma
/// asserts this stays bounded for x >= 1.
pub fn gs_derivative_ratio_check<F: Real>(s: F, x_samples: &[F]) -> Result<F> {
    if !(s > F::zero() && s < F::one()) {
        return Err(Error::OutOfRange(format!("ratio check needs s in (0,1), got {s}")));
    }
    let mut max_ratio = F::zero();
    for &x in x_samples {
        if !(x >= F::one()) {
            return Err(Error::OutOfRange(format!("ratio check is stated for x >= 1, got {x}")));
        }
        let ln_dg = gs_derivative_ln(s, x)?;
        let g = gs_eval(s, x)?;
        let ln_ratio = ln_dg - (F::one() - s) / s * x.ln() - g.ln_value;
        max_ratio = max_ratio.max(ln_ratio.exp());
    }
    Ok(max_ratio)
}

/// Fits the smallest C such that C exp(C x^{1/s}) >= G_s(x) on the given
/// grid, by bisection in log space. Documented as machine-fitted output,
/// never a theoretical constant.
pub fn fit_upper_constant<F: Real>(s: F, xs: &[F]) -> Result<F> {
    let lns: Vec<(F, F)> = xs
        .iter()
        .map(|&x| gs_eval(s, x).map(|g| (x, g.ln_value)))
        .collect::<Result<_>>()?;
    let holds = |c: F| -> bool {
        lns.iter().all(|&(x, ln_g)| gs_upper_bound_ln(s, x, c) >= ln_g - F::of(1e-12))
    };
    let mut hi = F::one();
    let mut guard = 0;
    while !holds(hi) {
        hi = hi * F::of(2.0);
        guard += 1;
        if guard > 60 {
            return Err(Error::DivergentSeries("no finite upper constant found".into()));
        }
    }
    let mut lo = F::of(1e-3);
    for _ in 0..64 {
        let mid = F::of(0.5) * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Exact verification, in big-integer arithmetic, that for all i <= i_max:
///   (i!)^2 * (2i+1) * C(2i, i) = (2i+1)!   and   C(2i, i) >= 2^i.
/// Together these give the per-term inequality (i!)^{2-s}/(2i+1)! <= 1/(i!)^s.
pub fn factorial_inequality_check(i_max: usize) -> bool {
    let mut fact_i = BigUint::from(1u32); // i!
    let mut fact_2i1 = BigUint::from(1u32); // (2i+1)!
    let mut binom = BigUint::from(1u32); // C(2i, i)
    for i in 0..=i_max {
        if i > 0 {
            fact_i *= BigUint::from(i);
            fact_2i1 *= BigUint::from(2 * i) * BigUint::from(2 * i + 1);
            // C(2i, i) = C(2i-2, i-1) * (2i-1)(2i) / i^2
            binom = binom * BigUint::from(2 * i - 1) * BigUint::from(2 * i) / (BigUint::from(i) * BigUint::from(i));
        }
        let lhs = &fact_i * &fact_i * BigUint::from(2 * i + 1) * &binom;
        if lhs != fact_2i1 {
            return false;
        }
        if binom < BigUint::from(2u32).pow(i as u32) {
            return false;
        }
    }
    true
}

/// ln of the i-th cost-series term (C/delta)^i (i!)^{2-s} / (2i+1)! * L^{2i+1};
/// used by the per-term chain checks.
pub fn ln_cost_term<F: Real>(c_over_delta: F, s: F, length: F, i: usize) -> F {
    F::of_usize(i) * c_over_delta.ln() + (F::of(2.0) - s) * ln_gamma(F::of_usize(i + 1))
        - ln_gamma(F::of_usize(2 * i + 2))
        + F::of_usize(2 * i + 1) * length.ln()
}
