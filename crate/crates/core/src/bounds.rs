//! Closed-form tracking-error bounds and the delayed-recursion check.
//!
//! All asymptotic bounds share the shape `(e_f + σ(1 + c·T_d)) / (1 - c)`
//! with an effective contraction factor `c`: `L` for the synchronous and
//! ℓ∞ asynchronous cases, `L√m` through norm equivalence, and `L√(N_d+1)`
//! for the refined ℓ2 analysis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::norm::NormKind;

/// Scalar inputs of the asymptotic bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundInputs {
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub e_f: f64,
    pub sigma: f64,
    #[serde(rename = "T_d", default)]
    pub t_d: usize,
    #[serde(rename = "N_d", default)]
    pub n_d: usize,
    pub m: usize,
    pub norm: NormKind,
}

impl BoundInputs {
    pub fn new(lipschitz: f64, e_f: f64, sigma: f64, m: usize, norm: NormKind) -> Self {
        Self {
            lipschitz,
            e_f,
            sigma,
            t_d: 0,
            n_d: 0,
            m,
            norm,
        }
    }

    pub fn with_delay(mut self, t_d: usize, n_d: usize) -> Self {
        self.t_d = t_d;
        self.n_d = n_d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lipschitz.is_finite() && self.lipschitz >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "L = {} must be finite and >= 0",
                self.lipschitz
            )));
        }
        if !(self.e_f.is_finite() && self.e_f >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "e_f = {} must be finite and >= 0",
                self.e_f
            )));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "sigma = {} must be finite and >= 0",
                self.sigma
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidInput("dimension m must be positive".into()));
        }
        if self.n_d > self.m - 1 {
            return Err(Error::InvalidInput(format!(
                "N_d = {} exceeds m - 1 = {}",
                self.n_d,
                self.m - 1
            )));
        }
        Ok(())
    }
}

fn delayed_form(e_f: f64, sigma: f64, c: f64, t_d: usize) -> f64 {
    (e_f + sigma * (1.0 + c * t_d as f64)) / (1.0 - c)
}

/// `β^(t,τ) = Π_{ℓ=τ+1..t} L^(ℓ)`, with `l_series[k] = L^(k+1)`.
pub fn beta_coefficient(t: usize, tau: usize, l_series: &[f64]) -> Result<f64> {
    if tau > t {
        return Err(Error::IndexOutOfRange(format!("tau = {tau} exceeds t = {t}")));
    }
    if l_series.len() < t {
        return Err(Error::IndexOutOfRange(format!(
            "Lipschitz series has {} entries, need {t}",
            l_series.len()
        )));
    }
    Ok(l_series[tau..t].iter().product())
}

/// Finite-time bound on `‖x^(t+1) - x^(*,t+1)‖`:
/// `β^(t,0)·e_1 + Σ_{τ=1..t} β^(t,τ)(e_f^(τ) + σ^(τ))`.
///
/// Series are indexed from time 1, so `series[k]` is the value at `k+1`.
pub fn per_iterate_bound(
    initial_error: f64,
    e_f_series: &[f64],
    sigma_series: &[f64],
    l_series: &[f64],
    t: usize,
) -> Result<f64> {
    for len in [e_f_series.len(), sigma_series.len(), l_series.len()] {
        if len < t {
            return Err(Error::LengthMismatch {
                expected: t,
                found: len,
            });
        }
    }
    let mut total = beta_coefficient(t, 0, l_series)? * initial_error;
    for tau in 1..=t {
        total += beta_coefficient(t, tau, l_series)? * (e_f_series[tau - 1] + sigma_series[tau - 1]);
    }
    Ok(total)
}

/// The finite-time bound for every tick `1..=n+1` of a run whose series have
/// length `n`, evaluated through the equivalent recursion
/// `b^(t+1) = L^(t) b^(t) + e_f^(t) + σ^(t)`.
pub fn per_iterate_bound_series(
    initial_error: f64,
    e_f_series: &[f64],
    sigma_series: &[f64],
    l_series: &[f64],
) -> Result<Vec<f64>> {
    check_len(l_series.len(), e_f_series.len())?;
    check_len(l_series.len(), sigma_series.len())?;
    let mut out = Vec::with_capacity(l_series.len() + 1);
    let mut b = initial_error;
    out.push(b);
    for k in 0..l_series.len() {
        b = l_series[k] * b + e_f_series[k] + sigma_series[k];
        out.push(b);
    }
    Ok(out)
}

fn require_contraction(c: f64, what: &str) -> Result<()> {
    if c < 1.0 {
        Ok(())
    } else {
        Err(Error::PreconditionFailed(format!("{what} = {c} >= 1")))
    }
}

fn require_norm(inputs: &BoundInputs, norm: NormKind) -> Result<()> {
    if inputs.norm == norm {
        Ok(())
    } else {
        Err(Error::PreconditionFailed(format!(
            "bound requires the {norm:?} norm, inputs use {:?}",
            inputs.norm
        )))
    }
}

/// `(e_f + σ) / (1 - L)`.
pub fn asymptotic_bound_sync(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    require_contraction(inputs.lipschitz, "L")?;
    Ok((inputs.e_f + inputs.sigma) / (1.0 - inputs.lipschitz))
}

/// `(e_f + σ(1 + L·T_d)) / (1 - L)` under ℓ∞.
pub fn asymptotic_bound_async_inf(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    require_norm(inputs, NormKind::EllInf)?;
    require_contraction(inputs.lipschitz, "L")?;
    Ok(delayed_form(inputs.e_f, inputs.sigma, inputs.lipschitz, inputs.t_d))
}

/// `(e_f + σ(1 + L√m·T_d)) / (1 - L√m)` under ℓ2, bounding the ℓ∞ error.
pub fn asymptotic_bound_async_l2_equiv(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    require_norm(inputs, NormKind::Ell2)?;
    let c = inputs.lipschitz * (inputs.m as f64).sqrt();
    require_contraction(c, "L√m")?;
    Ok(delayed_form(inputs.e_f, inputs.sigma, c, inputs.t_d))
}

/// `(e_f + σ(1 + L√(N_d+1)·T_d)) / (1 - L√(N_d+1))` under ℓ2.
pub fn asymptotic_bound_async_l2_refined(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    require_norm(inputs, NormKind::Ell2)?;
    let c = inputs.lipschitz * ((inputs.n_d + 1) as f64).sqrt();
    require_contraction(c, "L√(N_d+1)")?;
    Ok(delayed_form(inputs.e_f, inputs.sigma, c, inputs.t_d))
}

/// A bound value or the reason it does not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BoundValue {
    Value { value: f64 },
    NotApplicable { reason: String },
}

impl BoundValue {
    fn from_result(r: Result<f64>) -> Self {
        match r {
            Ok(value) => Self::Value { value },
            Err(e) => Self::NotApplicable { reason: e.to_string() },
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Value { value } => Some(*value),
            Self::NotApplicable { .. } => None,
        }
    }
}

impl fmt::Display for BoundValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Value { value } => write!(f, "{value:.12}"),
            Self::NotApplicable { reason } => write!(f, "not applicable ({reason})"),
        }
    }
}

/// Every asymptotic bound evaluated for one set of inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub sync: BoundValue,
    pub async_inf: BoundValue,
    pub async_l2_equiv: BoundValue,
    pub async_l2_refined: BoundValue,
}

impl BoundTable {
    pub fn evaluate(inputs: &BoundInputs) -> Self {
        Self {
            sync: BoundValue::from_result(asymptotic_bound_sync(inputs)),
            async_inf: BoundValue::from_result(asymptotic_bound_async_inf(inputs)),
            async_l2_equiv: BoundValue::from_result(asymptotic_bound_async_l2_equiv(inputs)),
            async_l2_refined: BoundValue::from_result(asymptotic_bound_async_l2_refined(inputs)),
        }
    }
}

impl fmt::Display for BoundTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "synchronous            (e_f+σ)/(1-L)                     : {}",
            self.sync
        )?;
        writeln!(
            f,
            "asynchronous ℓ∞        (e_f+σ(1+L·T_d))/(1-L)            : {}",
            self.async_inf
        )?;
        writeln!(
            f,
            "asynchronous ℓ2, √m    (e_f+σ(1+L√m·T_d))/(1-L√m)        : {}",
            self.async_l2_equiv
        )?;
        write!(
            f,
            "asynchronous ℓ2, N_d   (e_f+σ(1+L√(N_d+1)·T_d))/(1-L√(N_d+1)): {}",
            self.async_l2_refined
        )
    }
}

/// Constants of a regularized projected-gradient map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientProblemConstants {
    /// Smoothness constant `M`.
    pub smoothness: f64,
    pub eta: f64,
    pub alpha: f64,
    /// `(√(N_d+1) - 1) / (√(N_d+1) + 1)`.
    pub kappa: f64,
}

impl GradientProblemConstants {
    pub fn new(smoothness: f64, eta: f64, alpha: f64, n_d: usize) -> Self {
        let s = ((n_d + 1) as f64).sqrt();
        Self {
            smoothness,
            eta,
            alpha,
            kappa: (s - 1.0) / (s + 1.0),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        projected_gradient_lipschitz(self.alpha, self.smoothness, self.eta)
    }
}

/// Admissible step sizes `[lo, hi]`.
///
/// At the endpoints `L√(N_d+1) = 1`, so only interior points satisfy the
/// strict contraction requirement; a window with `lo >= hi` is empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepWindow {
    pub lo: f64,
    pub hi: f64,
}

impl StepWindow {
    pub fn is_empty(&self) -> bool {
        !(self.lo < self.hi)
    }

    /// Whether `alpha` lies strictly inside the window (and is positive).
    pub fn contains(&self, alpha: f64) -> bool {
        alpha > 0.0 && self.lo < alpha && alpha < self.hi
    }
}

/// `[(1/η)(1 - 1/√(N_d+1)), (1/(M+η))(1 + 1/√(N_d+1))]`.
pub fn gradient_step_window(smoothness: f64, eta: f64, n_d: usize) -> Result<StepWindow> {
    if !(smoothness > 0.0 && eta > 0.0) {
        return Err(Error::PreconditionFailed(format!(
            "step window needs M > 0 and eta > 0 (got M = {smoothness}, eta = {eta})"
        )));
    }
    let s = 1.0 / ((n_d + 1) as f64).sqrt();
    Ok(StepWindow {
        lo: (1.0 - s) / eta,
        hi: (1.0 + s) / (smoothness + eta),
    })
}

/// `(√(N_d+1) - 1)/2 · M`: the window is nonempty iff `η` exceeds this.
pub fn min_regularization(smoothness: f64, n_d: usize) -> f64 {
    (((n_d + 1) as f64).sqrt() - 1.0) / 2.0 * smoothness
}

/// `max{|1 - αη|, |1 - α(M + η)|}`.
pub fn projected_gradient_lipschitz(alpha: f64, smoothness: f64, eta: f64) -> f64 {
    (1.0 - alpha * eta).abs().max((1.0 - alpha * (smoothness + eta)).abs())
}

/// Outcome of simulating the delayed recursion `a^(t) = b + Γ a^(t-δ^(t))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionCheck {
    pub empirical_limsup: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Simulates `a^(t) = b + Γ a^(t-δ^(t))` from `a^(1..T) = b` and compares the
/// maximum over the last 10% of the horizon with `b/(1-Γ)`.
///
/// `delta_schedule` is applied cyclically: `δ^(t) = delta_schedule[(t-1) % len]`.
pub fn check_delayed_recursion_limsup(
    b: f64,
    gamma: f64,
    max_delay: usize,
    delta_schedule: &[usize],
    horizon: usize,
) -> Result<RecursionCheck> {
    check_delayed_recursion_limsup_from(b, gamma, max_delay, delta_schedule, horizon, &vec![b; max_delay])
}

/// As [`check_delayed_recursion_limsup`] with explicit initial values
/// `a^(1..T)`.
pub fn check_delayed_recursion_limsup_from(
    b: f64,
    gamma: f64,
    max_delay: usize,
    delta_schedule: &[usize],
    horizon: usize,
    initial: &[f64],
) -> Result<RecursionCheck> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::PreconditionFailed(format!("Gamma = {gamma} is not in (0, 1)")));
    }
    if max_delay == 0 || delta_schedule.is_empty() {
        return Err(Error::PreconditionFailed(
            "need T >= 1 and a nonempty delay schedule".into(),
        ));
    }
    if let Some(d) = delta_schedule.iter().find(|d| **d == 0 || **d > max_delay) {
        return Err(Error::PreconditionFailed(format!(
            "delay {d} is not in 1..={max_delay}"
        )));
    }
    check_len(max_delay, initial.len())?;
    if horizon <= max_delay {
        return Err(Error::PreconditionFailed("horizon must exceed T".into()));
    }
    let mut a = Vec::with_capacity(horizon);
    a.extend_from_slice(initial);
    for t in max_delay + 1..=horizon {
        let delta = delta_schedule[(t - 1) % delta_schedule.len()];
        let prev = a[t - delta - 1];
        a.push(b + gamma * prev);
    }
    let start = (horizon as f64 * 0.9).floor() as usize;
    let empirical_limsup = a[start.saturating_sub(1)..].iter().copied().fold(f64::MIN, f64::max);
    let bound = b / (1.0 - gamma);
    Ok(RecursionCheck {
        empirical_limsup,
        bound,
        pass: empirical_limsup <= bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_coefficient(4, 4, &[0.5; 4]).unwrap(), 1.0);
        assert!(close(beta_coefficient(3, 0, &[0.5; 3]).unwrap(), 0.125, 1e-15));
        assert!(close(beta_coefficient(3, 0, &[0.3, 0.6, 0.9]).unwrap(), 0.162, 1e-15));
        assert!(matches!(
            beta_coefficient(2, 3, &[0.5; 3]),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            beta_coefficient(5, 0, &[0.5; 3]),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn per_iterate_examples() {
        let z = [0.0; 4];
        assert!(close(
            per_iterate_bound(1.0, &z, &z, &[0.5; 4], 4).unwrap(),
            0.0625,
            1e-15
        ));
        assert!(close(
            per_iterate_bound(1.0, &[0.1], &[0.2], &[0.5], 1).unwrap(),
            0.8,
            1e-15
        ));
        assert!(matches!(
            per_iterate_bound(1.0, &[0.1], &[0.2], &[0.5], 2),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn per_iterate_matches_recursion() {
        let mut rng = crate::rng::stream(11, &[]);
        use rand::Rng;
        let n = 60;
        let ef: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.1)).collect();
        let sg: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.1)).collect();
        let ls: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..0.95)).collect();
        // oracle: direct recursion written out here
        let mut b = 1.7;
        for t in 1..=n {
            b = ls[t - 1] * b + ef[t - 1] + sg[t - 1];
            let direct = per_iterate_bound(1.7, &ef, &sg, &ls, t).unwrap();
            assert!(close(direct, b, 1e-12), "t={t}");
        }
        let series = per_iterate_bound_series(1.7, &ef, &sg, &ls).unwrap();
        assert_eq!(series.len(), n + 1);
        assert!(close(series[n], b, 1e-12));
    }

    #[test]
    fn asymptotic_examples() {
        let b = |l, ef, s| BoundInputs::new(l, ef, s, 4, NormKind::EllInf);
        assert_eq!(asymptotic_bound_sync(&b(0.5, 0.0, 0.0)).unwrap(), 0.0);
        assert!(close(asymptotic_bound_sync(&b(0.5, 0.01, 0.1)).unwrap(), 0.22, 1e-15));
        assert!(close(asymptotic_bound_sync(&b(0.5, 0.0, 0.1)).unwrap(), 0.2, 1e-15));
        assert!(asymptotic_bound_sync(&b(1.0, 0.0, 0.1)).is_err());

        assert!(close(
            asymptotic_bound_async_inf(&b(0.5, 0.0, 0.1).with_delay(3, 0)).unwrap(),
            0.5,
            1e-15
        ));
        assert!(close(
            asymptotic_bound_async_inf(&b(0.5, 0.05, 0.1).with_delay(3, 0)).unwrap(),
            0.6,
            1e-15
        ));
        let i = b(0.3, 0.02, 0.07);
        assert_eq!(
            asymptotic_bound_async_inf(&i).unwrap(),
            asymptotic_bound_sync(&i).unwrap()
        );
        assert!(asymptotic_bound_async_inf(&BoundInputs::new(0.5, 0.0, 0.1, 4, NormKind::Ell2)).is_err());
    }

    #[test]
    fn l2_examples() {
        let l2 = |l, m| BoundInputs::new(l, 0.0, 0.1, m, NormKind::Ell2);
        let one = l2(0.5, 1).with_delay(3, 0);
        let inf = BoundInputs {
            norm: NormKind::EllInf,
            ..one
        };
        assert_eq!(
            asymptotic_bound_async_l2_equiv(&one).unwrap(),
            asymptotic_bound_async_inf(&inf).unwrap()
        );
        let err = asymptotic_bound_async_l2_equiv(&l2(0.5, 4)).unwrap_err();
        assert!(err.to_string().contains("L√m"));
        assert!(close(
            asymptotic_bound_async_l2_equiv(&l2(0.4, 4).with_delay(2, 0)).unwrap(),
            1.3,
            1e-12
        ));

        let r0 = l2(0.4, 4).with_delay(2, 0);
        assert!(close(
            asymptotic_bound_async_l2_refined(&r0).unwrap(),
            0.1 * 1.8 / 0.6,
            1e-15
        ));
        assert!(asymptotic_bound_async_l2_refined(&l2(0.5, 4).with_delay(0, 3)).is_err());
        let v = asymptotic_bound_async_l2_refined(&l2(0.4, 4).with_delay(2, 1)).unwrap();
        // 0.1·(1 + 0.4√2·2)/(1 - 0.4√2)
        assert!(close(v, 0.490_744_1, 1e-6));
    }

    #[test]
    fn n_d_must_fit_dimension() {
        let i = BoundInputs::new(0.1, 0.0, 0.1, 2, NormKind::Ell2).with_delay(1, 2);
        assert!(matches!(asymptotic_bound_sync(&i), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn window_examples() {
        let w = gradient_step_window(3.0, 1.0, 0).unwrap();
        assert_eq!(w.lo, 0.0);
        assert!(close(w.hi, 2.0 / 4.0, 1e-15));
        let w = gradient_step_window(1.0, 1.0, 3).unwrap();
        assert!(close(w.lo, 0.5, 1e-15) && close(w.hi, 0.75, 1e-15));
        assert!(gradient_step_window(1.0, 0.4, 3).unwrap().is_empty());
        assert!(gradient_step_window(0.0, 1.0, 0).is_err());
        assert!(gradient_step_window(1.0, 0.0, 0).is_err());
    }

    #[test]
    fn min_regularization_examples() {
        assert_eq!(min_regularization(5.0, 0), 0.0);
        assert!(close(min_regularization(1.0, 3), 0.5, 1e-15));
        assert!(close(min_regularization(2.0, 8), 2.0, 1e-15));
    }

    #[test]
    fn gradient_lipschitz_examples() {
        assert_eq!(projected_gradient_lipschitz(0.5, 1.0, 1.0), 0.5);
        let (m, eta) = (1.7f64, 0.3f64);
        let a = 2.0 / (m + 2.0 * eta);
        assert!(close((1.0 - a * eta).abs(), (1.0 - a * (m + eta)).abs(), 1e-15));
        let c = GradientProblemConstants::new(1.0, 1.0, 0.5, 3);
        assert!(close(c.kappa, 1.0 / 3.0, 1e-15));
        assert_eq!(c.lipschitz(), 0.5);
    }

    #[test]
    fn recursion_examples() {
        let r = check_delayed_recursion_limsup(1.0, 0.5, 1, &[1], 1000).unwrap();
        assert!(close(r.empirical_limsup, 2.0, 1e-12) && r.pass);
        let r = check_delayed_recursion_limsup(1.0, 1e-12, 1, &[1], 100).unwrap();
        assert!(close(r.empirical_limsup, 1.0, 1e-9));
        let r = check_delayed_recursion_limsup(1.0, 0.5, 2, &[1, 2], 10_000).unwrap();
        assert!(r.empirical_limsup <= 2.0 + 1e-9 && r.pass);
        assert!(check_delayed_recursion_limsup(1.0, 1.0, 1, &[1], 10).is_err());
        assert!(check_delayed_recursion_limsup(1.0, 0.5, 2, &[3], 10).is_err());
    }

    #[test]
    fn recursion_from_large_initial_values_decays() {
        let r = check_delayed_recursion_limsup_from(1.0, 0.5, 3, &[3, 1, 2], 2000, &[50.0, 10.0, 80.0]).unwrap();
        assert!(r.pass);
    }

    proptest! {
        #[test]
        fn bounds_monotone_and_ordered(
            l in 0.0f64..0.45, ef in 0.0f64..1.0, sg in 0.0f64..1.0,
            td in 0usize..6, nd in 0usize..4, dl in 0.0f64..0.04, dx in 0.0f64..0.5,
        ) {
            let m = 4;
            let base = BoundInputs::new(l, ef, sg, m, NormKind::EllInf).with_delay(td, nd);
            let s = asymptotic_bound_sync(&base).unwrap();
            let a = asymptotic_bound_async_inf(&base).unwrap();
            prop_assert!(s <= a + 1e-12);
            let a_more = asymptotic_bound_async_inf(&base.with_delay(td + 1, nd)).unwrap();
            prop_assert!(a <= a_more + 1e-12);
            for bumped in [
                BoundInputs { e_f: ef + dx, ..base },
                BoundInputs { sigma: sg + dx, ..base },
                BoundInputs { lipschitz: l + dl, ..base },
            ] {
                prop_assert!(asymptotic_bound_async_inf(&bumped).unwrap() >= a - 1e-12);
                prop_assert!(asymptotic_bound_sync(&bumped).unwrap() >= s - 1e-12);
            }
            let l2 = BoundInputs { norm: NormKind::Ell2, ..base };
            let eq = asymptotic_bound_async_l2_equiv(&l2).unwrap();
            let re = asymptotic_bound_async_l2_refined(&l2).unwrap();
            prop_assert!(re <= eq + 1e-12);
            if nd < m - 1 {
                let re_more = asymptotic_bound_async_l2_refined(&l2.with_delay(td, nd + 1)).unwrap();
                prop_assert!(re <= re_more + 1e-12);
            }
        }

        #[test]
        fn reduction_chain(l in 0.0f64..0.99, ef in 0.0f64..1.0, sg in 0.0f64..1.0) {
            let inf = BoundInputs::new(l, ef, sg, 1, NormKind::EllInf);
            let l2 = BoundInputs { norm: NormKind::Ell2, ..inf };
            let s = asymptotic_bound_sync(&inf).unwrap();
            prop_assert_eq!(asymptotic_bound_async_inf(&inf).unwrap(), s);
            prop_assert_eq!(asymptotic_bound_async_l2_refined(&l2).unwrap(), s);
            prop_assert_eq!(asymptotic_bound_async_l2_equiv(&l2).unwrap(), s);
        }

        #[test]
        fn window_nonempty_iff_eta_exceeds_minimum(
            m in 0.01f64..10.0, eta in 0.01f64..10.0, nd in 0usize..10,
        ) {
            let thr = min_regularization(m, nd);
            prop_assume!((eta - thr).abs() > 1e-12);
            let w = gradient_step_window(m, eta, nd).unwrap();
            prop_assert_eq!(!w.is_empty(), eta > thr);
            if !w.is_empty() {
                let alpha = 0.5 * (w.lo + w.hi);
                let l = projected_gradient_lipschitz(alpha, m, eta);
                prop_assert!(l * ((nd + 1) as f64).sqrt() < 1.0);
            }
        }
    }
}
