//! Truncated power-series (jet) arithmetic.
//!
//! A jet holds c_k = f^(k)(center)/k! for k = 0..=order. Products use the
//! Cauchy convolution; exp and real powers use the standard ODE-derived
//! recurrences, which stay stable to order ~60 where repeated finite
//! differences fail past order ~5.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<F> {
    center: F,
    coeffs: Vec<F>,
}

impl<F: Real> Jet<F> {
    pub fn new(center: F, coeffs: Vec<F>) -> Self {
        assert!(!coeffs.is_empty());
        Self { center, coeffs }
    }

    pub fn zero(center: F, order: usize) -> Self {
        Self { center, coeffs: vec![F::zero(); order + 1] }
    }

    pub fn constant(center: F, value: F, order: usize) -> Self {
        let mut coeffs = vec![F::zero(); order + 1];
        coeffs[0] = value;
        Self { center, coeffs }
    }

    /// Jet of the identity t -> t at `center`.
    pub fn variable(center: F, order: usize) -> Self {
        let mut coeffs = vec![F::zero(); order + 1];
        coeffs[0] = center;
        if order >= 1 {
            coeffs[1] = F::one();
        }
        Self { center, coeffs }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn center(&self) -> F {
        self.center
    }

    #[inline]
    pub fn coeffs(&self) -> &[F] {
        &self.coeffs
    }

    #[inline]
    pub fn coeff(&self, k: usize) -> F {
        self.coeffs[k]
    }

    /// k-th derivative value: c_k * k!.
    pub fn derivative(&self, k: usize) -> F {
        let mut fact = F::one();
        for j in 1..=k {
            fact *= F::of_usize(j);
        }
        self.coeffs[k] * fact
    }

    pub fn is_all_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == F::zero())
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.order() != other.order() || (self.center - other.center).abs() > F::of(1e-14) * (self.center.abs() + F::one()) {
            return Err(Error::InvalidInput(
                "jet operands need matching centers and orders".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + b).collect();
        Ok(Self { center: self.center, coeffs })
    }

    pub fn scale(&self, a: F) -> Self {
        Self { center: self.center, coeffs: self.coeffs.iter().map(|&c| a * c).collect() }
    }

    /// Cauchy product truncated at the shared order.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let n = self.coeffs.len();
        let mut out = vec![F::zero(); n];
        for k in 0..n {
            let mut acc = F::zero();
            for j in 0..=k {
                acc += self.coeffs[j] * other.coeffs[k - j];
            }
            out[k] = acc;
        }
        Ok(Self { center: self.center, coeffs: out })
    }

    /// exp(u) via e' = e u': (k+1) e_{k+1} = sum_j (j+1) u_{j+1} e_{k-j}.
    pub fn compose_exp(&self) -> Self {
        let n = self.coeffs.len();
        let mut e = vec![F::zero(); n];
        e[0] = self.coeffs[0].exp();
        if e[0] == F::zero() {
            // underflow: every coefficient of exp(u) carries the factor e^{u_0}
            return Self { center: self.center, coeffs: e };
        }
        for k in 0..n - 1 {
            let mut acc = F::zero();
            for j in 0..=k {
                acc += F::of_usize(j + 1) * self.coeffs[j + 1] * e[k - j];
            }
            e[k + 1] = acc / F::of_usize(k + 1);
        }
        Self { center: self.center, coeffs: e }
    }

    /// u^a for real a (negative allowed), requiring u_0 > 0.
    /// Recurrence from (u^a)' u = a u^a u'.
    pub fn power(&self, a: F) -> Result<Self> {
        let u0 = self.coeffs[0];
        if u0 <= F::zero() {
            return Err(Error::SingularJet(format!(
                "power requires positive constant term, got {u0}"
            )));
        }
        let n = self.coeffs.len();
        let mut p = vec![F::zero(); n];
        p[0] = u0.powf(a);
        for k in 1..n {
            let mut acc = F::zero();
            for j in 1..=k {
                acc += ((a + F::one()) * F::of_usize(j) - F::of_usize(k)) * self.coeffs[j] * p[k - j];
            }
            p[k] = acc / (F::of_usize(k) * u0);
        }
        Ok(Self { center: self.center, coeffs: p })
    }

    /// u^(-a): the reciprocal-power form used for the mollifier exponent.
    pub fn power_neg(&self, a: F) -> Result<Self> {
        self.power(-a)
    }
}
