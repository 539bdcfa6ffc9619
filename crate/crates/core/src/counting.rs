//! Exact laws and moments of the bivariate claim-counting process
//! `(M1(t), M2(t))` and of the combined count `A(t) = M1(t) + M2(t)`.
//!
//! Each period is one of four exclusive outcomes (quiet, type-1, type-2,
//! common shock); `M1` counts type-1-or-shock periods and `M2` counts
//! type-2-or-shock periods, so the pair is a correlated bivariate binomial.

use std::fmt;

use serde::Serialize;

use crate::model::{ModelSpec, ShockParams};
use crate::pmf::Pmf;
use crate::DENSE_HORIZON_CAP;

#[derive(Debug, Clone, PartialEq)]
pub enum CountingError {
    HorizonTooLarge { t: usize, cap: usize },
    ConditionalOnZeroProbability { value: usize },
}

impl fmt::Display for CountingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountingError::HorizonTooLarge { t, cap } => {
                write!(f, "horizon {t} exceeds the dense-table cap {cap}")
            }
            CountingError::ConditionalOnZeroProbability { value } => {
                write!(f, "conditioning count {value} has zero probability")
            }
        }
    }
}

impl std::error::Error for CountingError {}

/// Which count of the pair `(M1, M2)` a conditional or regression refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Margin {
    First,
    Second,
}

/// Dense joint law of `(M1(t), M2(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateCountsLaw {
    t: usize,
    /// `table[m1][m2] = P(M1(t) = m1, M2(t) = m2)`.
    table: Vec<Vec<f64>>,
}

impl BivariateCountsLaw {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn prob(&self, m1: usize, m2: usize) -> f64 {
        if m1 > self.t || m2 > self.t {
            return 0.0;
        }
        self.table[m1][m2]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn total(&self) -> f64 {
        self.table.iter().flatten().sum()
    }

    /// Marginal law of one coordinate as a dense vector over `0..=t`.
    pub fn marginal(&self, which: Margin) -> Vec<f64> {
        let mut out = vec![0.0; self.t + 1];
        for (m1, row) in self.table.iter().enumerate() {
            for (m2, &w) in row.iter().enumerate() {
                let idx = match which {
                    Margin::First => m1,
                    Margin::Second => m2,
                };
                out[idx] += w;
            }
        }
        out
    }

    /// Law of `M1 + M2` (anti-diagonal sums of the table).
    pub fn diagonal_sum_law(&self) -> Pmf {
        let mut weights = vec![0.0; 2 * self.t + 1];
        for (m1, row) in self.table.iter().enumerate() {
            for (m2, &w) in row.iter().enumerate() {
                weights[m1 + m2] += w;
            }
        }
        Pmf::new(0, weights).expect("diagonal sums of a proper table form a pmf")
    }

    /// Moments computed directly from the table; the closed-form route's
    /// independent cross-check.
    pub fn moments_from_table(&self) -> CountsMoments {
        let (mut mean1, mut mean2, mut m1_sq, mut m2_sq, mut cross) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (m1, row) in self.table.iter().enumerate() {
            for (m2, &w) in row.iter().enumerate() {
                let (a, b) = (m1 as f64, m2 as f64);
                mean1 += a * w;
                mean2 += b * w;
                m1_sq += a * a * w;
                m2_sq += b * b * w;
                cross += a * b * w;
            }
        }
        let var1 = m1_sq - mean1 * mean1;
        let var2 = m2_sq - mean2 * mean2;
        let cov = cross - mean1 * mean2;
        let denom = (var1 * var2).sqrt();
        let cor = if denom > 0.0 { cov / denom } else { 0.0 };
        CountsMoments { mean1, mean2, var1, var2, cross, cov, cor }
    }
}

/// First and second moments of the count pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountsMoments {
    pub mean1: f64,
    pub mean2: f64,
    pub var1: f64,
    pub var2: f64,
    /// `E[M1(t) M2(t)]`.
    pub cross: f64,
    pub cov: f64,
    /// Correlation; does not depend on the horizon.
    pub cor: f64,
}

/// Joint probability generating function `E[z1^M1(t) z2^M2(t)]`,
/// `[1 - p + p1 z1 + p2 z2 + p0 z1 z2]^t`.
pub fn joint_pgf(model: &ModelSpec, t: usize, z1: f64, z2: f64) -> f64 {
    let s = model.shock();
    let base = 1.0 - s.p() + s.p1() * z1 + s.p2() * z2 + s.p0() * z1 * z2;
    base.powi(t as i32)
}

/// Binomial coefficient as f64 via the multiplicative formula.
fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * (n - k + i) as f64 / i as f64;
    }
    acc
}

/// `t! / (b0! b1! b2! (t - b0 - b1 - b2)!)` as f64.
fn multinomial_coeff(t: u64, b0: u64, b1: u64, b2: u64) -> f64 {
    binom(t, b0) * binom(t - b0, b1) * binom(t - b0 - b1, b2)
}

/// Probability that the shock/type-1/type-2 event counts over `t` periods
/// equal `(b0, b1, b2)`; zero outside the simplex `b0 + b1 + b2 <= t`.
///
/// This is the ground-truth law of the underlying process and doubles as
/// the brute-force oracle for the bivariate table.
pub fn multinomial_pmf(shock: &ShockParams, t: usize, b0: usize, b1: usize, b2: usize) -> f64 {
    if b0 + b1 + b2 > t {
        return 0.0;
    }
    let rest = (t - b0 - b1 - b2) as i32;
    multinomial_coeff(t as u64, b0 as u64, b1 as u64, b2 as u64)
        * shock.p0().powi(b0 as i32)
        * shock.p1().powi(b1 as i32)
        * shock.p2().powi(b2 as i32)
        * (1.0 - shock.p()).powi(rest)
}

/// Dense joint law of `(M1(t), M2(t))` from the closed form: for each cell
/// the sum over the shared shock count `i`.
///
/// Shocks increment both counts, so the support is the full square
/// `{0..t}^2` (cells above the anti-diagonal are reached once
/// `i >= m1 + m2 - t` shocks are shared).
pub fn joint_pmf(model: &ModelSpec, t: usize) -> Result<BivariateCountsLaw, CountingError> {
    if t > DENSE_HORIZON_CAP {
        return Err(CountingError::HorizonTooLarge { t, cap: DENSE_HORIZON_CAP });
    }
    let s = model.shock();
    let (p0, p1, p2) = (s.p0(), s.p1(), s.p2());
    let q = 1.0 - s.p();
    let mut table = vec![vec![0.0; t + 1]; t + 1];
    for m1 in 0..=t {
        for m2 in 0..=t {
            let lo = (m1 + m2).saturating_sub(t);
            let mut cell = 0.0;
            for i in lo..=m1.min(m2) {
                cell += multinomial_coeff(t as u64, i as u64, (m1 - i) as u64, (m2 - i) as u64)
                    * p0.powi(i as i32)
                    * p1.powi((m1 - i) as i32)
                    * p2.powi((m2 - i) as i32)
                    * q.powi((t + i - m1 - m2) as i32);
            }
            table[m1][m2] = cell;
        }
    }
    Ok(BivariateCountsLaw { t, table })
}

fn binomial_pmf(t: usize, k: usize, q: f64) -> f64 {
    binom(t as u64, k as u64) * q.powi(k as i32) * (1.0 - q).powi((t - k) as i32)
}

/// Conditional law of the other count given `M_r(t) = value`, computed as
/// the joint table row divided by the binomial marginal.
///
/// The closed-form conditional expression for this model does not
/// normalize as printed, so division is the authoritative route; see the
/// property suite for the recorded discrepancy.
pub fn conditional(
    model: &ModelSpec,
    t: usize,
    given: Margin,
    value: usize,
) -> Result<Pmf, CountingError> {
    let s = model.shock();
    let q = match given {
        Margin::First => s.p1() + s.p0(),
        Margin::Second => s.p2() + s.p0(),
    };
    if value > t {
        return Err(CountingError::ConditionalOnZeroProbability { value });
    }
    let marginal = binomial_pmf(t, value, q);
    if marginal <= 0.0 {
        return Err(CountingError::ConditionalOnZeroProbability { value });
    }
    let law = joint_pmf(model, t)?;
    let weights: Vec<f64> = (0..=t)
        .map(|other| match given {
            Margin::First => law.prob(value, other) / marginal,
            Margin::Second => law.prob(other, value) / marginal,
        })
        .collect();
    Ok(Pmf::new(0, weights).expect("conditional weights are a pmf"))
}

/// Conditional mean `E[M_s(t) | M_r(t) = i]`; linear in `i`.
///
/// Conditioned on `i` periods carrying an `r`-coordinate event, each of
/// them is a shock with probability `p0/(p0+pr)` and each of the other
/// `t - i` periods carries an `s`-only event with probability
/// `ps/(1-p0-pr)`.
pub fn regression(model: &ModelSpec, t: usize, conditioned: Margin, i: usize) -> f64 {
    let s = model.shock();
    let (pr, ps) = match conditioned {
        Margin::First => (s.p1(), s.p2()),
        Margin::Second => (s.p2(), s.p1()),
    };
    let p0 = s.p0();
    let shock_share = if i == 0 { 0.0 } else { i as f64 * p0 / (p0 + pr) };
    let other_share = if ps == 0.0 { 0.0 } else { (t - i) as f64 * ps / (1.0 - p0 - pr) };
    shock_share + other_share
}

/// Closed-form moments of the count pair.
pub fn moments(model: &ModelSpec, t: usize) -> CountsMoments {
    let s = model.shock();
    let tf = t as f64;
    let q1 = s.p1() + s.p0();
    let q2 = s.p2() + s.p0();
    let cov_rate = s.p0() - q1 * q2;
    let denom = (q1 * (1.0 - q1) * q2 * (1.0 - q2)).sqrt();
    CountsMoments {
        mean1: tf * q1,
        mean2: tf * q2,
        var1: tf * q1 * (1.0 - q1),
        var2: tf * q2 * (1.0 - q2),
        cross: tf * (tf - 1.0) * q1 * q2 + tf * s.p0(),
        cov: tf * cov_rate,
        // horizon-free by construction; zero at t = 0 or for degenerate margins
        cor: if t == 0 || denom == 0.0 { 0.0 } else { cov_rate / denom },
    }
}

/// Law and moments of the combined count `A(t) = M1(t) + M2(t)`; a shock
/// adds 2, a single-type event adds 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterTotal {
    pub pmf: Pmf,
    pub mean: f64,
    pub var: f64,
}

/// `A(t)` via the polynomial power `[1 - p + (p1 + p2) z + p0 z^2]^t`.
///
/// The per-period variance is `p1 + p2 + 4 p0 - (p1 + p2 + 2 p0)^2` and
/// the increments are independent, so the horizon enters both moments
/// linearly.
pub fn cluster_total(model: &ModelSpec, t: usize) -> Result<ClusterTotal, CountingError> {
    if t > DENSE_HORIZON_CAP {
        return Err(CountingError::HorizonTooLarge { t, cap: DENSE_HORIZON_CAP });
    }
    let s = model.shock();
    let step = Pmf::new(0, vec![1.0 - s.p(), s.p1() + s.p2(), s.p0()])
        .expect("per-period combined-count law");
    let mut pmf = Pmf::point_mass(0);
    for _ in 0..t {
        pmf = pmf.convolve(&step);
    }
    let rate_mean = s.p1() + s.p2() + 2.0 * s.p0();
    let rate_var = s.p1() + s.p2() + 4.0 * s.p0() - rate_mean * rate_mean;
    Ok(ClusterTotal { pmf, mean: t as f64 * rate_mean, var: t as f64 * rate_var })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{all_ones, tm1};
    use crate::model::{ClaimLaw, ModelSpec, ShockJointLaw, ShockParams};

    fn quarters() -> ModelSpec {
        ModelSpec::new(
            ShockParams::new(0.25, 0.25, 0.25).unwrap(),
            ClaimLaw::constant(1).unwrap(),
            ClaimLaw::constant(1).unwrap(),
            ShockJointLaw::constant(1, 1).unwrap(),
        )
    }

    /// Exhaustive law of (M1, M2) built from the raw event-count pmf:
    /// the module's brute-force oracle.
    fn enumerate_counts(model: &ModelSpec, t: usize) -> Vec<Vec<f64>> {
        let mut table = vec![vec![0.0; t + 1]; t + 1];
        for b0 in 0..=t {
            for b1 in 0..=(t - b0) {
                for b2 in 0..=(t - b0 - b1) {
                    let w = multinomial_pmf(model.shock(), t, b0, b1, b2);
                    table[b1 + b0][b2 + b0] += w;
                }
            }
        }
        table
    }

    #[test]
    fn pgf_at_one_is_one() {
        for t in [0, 1, 5, 17] {
            assert!((joint_pgf(&tm1(), t, 1.0, 1.0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pgf_at_zero_counts_quiet_paths() {
        // two quiet periods in a row
        assert!((joint_pgf(&tm1(), 2, 0.0, 0.0) - 0.25).abs() < 1e-13);
        assert_eq!(joint_pgf(&tm1(), 0, 0.3, 0.9), 1.0);
    }

    #[test]
    fn pgf_matches_table_sum() {
        let model = tm1();
        let t = 6;
        let law = joint_pmf(&model, t).unwrap();
        for (z1, z2) in [(0.3f64, 0.8f64), (1.0, 0.2), (0.0, 1.0)] {
            let from_table: f64 = (0..=t)
                .flat_map(|m1| (0..=t).map(move |m2| (m1, m2)))
                .map(|(m1, m2)| law.prob(m1, m2) * z1.powi(m1 as i32) * z2.powi(m2 as i32))
                .sum();
            assert!((joint_pgf(&model, t, z1, z2) - from_table).abs() < 1e-12);
        }
    }

    #[test]
    fn single_period_table_is_forced() {
        let law = joint_pmf(&tm1(), 1).unwrap();
        assert!((law.prob(0, 0) - 0.5).abs() < 1e-15);
        assert!((law.prob(1, 0) - 0.2).abs() < 1e-15);
        assert!((law.prob(0, 1) - 0.2).abs() < 1e-15);
        assert!((law.prob(1, 1) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn two_period_mixed_cell() {
        // one type-1 and one type-2 event in either order, or one shock and
        // one quiet period in either order
        let law = joint_pmf(&tm1(), 2).unwrap();
        assert!((law.prob(1, 1) - 0.18).abs() < 1e-15);
    }

    #[test]
    fn table_matches_enumeration() {
        for t in 0..=8 {
            let law = joint_pmf(&tm1(), t).unwrap();
            let oracle = enumerate_counts(&tm1(), t);
            for m1 in 0..=t {
                for m2 in 0..=t {
                    assert!(
                        (law.prob(m1, m2) - oracle[m1][m2]).abs() < 1e-13,
                        "t={t} ({m1},{m2})"
                    );
                }
            }
            assert!((law.total() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn marginals_are_binomial() {
        let model = tm1();
        let t = 7;
        let law = joint_pmf(&model, t).unwrap();
        let m1 = law.marginal(Margin::First);
        let m2 = law.marginal(Margin::Second);
        for k in 0..=t {
            assert!((m1[k] - binomial_pmf(t, k, 0.3)).abs() < 1e-12);
            assert!((m2[k] - binomial_pmf(t, k, 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn horizon_cap_is_enforced() {
        assert!(matches!(
            joint_pmf(&tm1(), DENSE_HORIZON_CAP + 1),
            Err(CountingError::HorizonTooLarge { .. })
        ));
        assert!(joint_pmf(&tm1(), DENSE_HORIZON_CAP).is_ok());
    }

    #[test]
    fn conditional_single_period() {
        let law = conditional(&tm1(), 1, Margin::First, 0).unwrap();
        assert!((law.prob(0) - 0.5 / 0.7).abs() < 1e-12);
        assert!((law.prob(1) - 0.2 / 0.7).abs() < 1e-12);
        assert!(law.is_proper(1e-10));
    }

    #[test]
    fn conditional_degenerate_cases() {
        // empty horizon: point mass at zero
        let law = conditional(&tm1(), 0, Margin::First, 0).unwrap();
        assert!((law.prob(0) - 1.0).abs() < 1e-15);

        // conditioning beyond the horizon is impossible
        assert!(matches!(
            conditional(&tm1(), 3, Margin::Second, 4),
            Err(CountingError::ConditionalOnZeroProbability { .. })
        ));

        // zero-probability margin
        let m = ModelSpec::new(
            ShockParams::new(0.0, 0.3, 0.0).unwrap(),
            ClaimLaw::constant(1).unwrap(),
            ClaimLaw::constant(1).unwrap(),
            ShockJointLaw::constant(1, 1).unwrap(),
        );
        assert!(conditional(&m, 2, Margin::Second, 1).is_err());
    }

    #[test]
    fn conditional_given_maximal_count() {
        // M1 = t forces every period to be type-1 or shock; M2 then counts
        // the shocks, binomial over the t periods
        let model = tm1();
        let t = 5;
        let law = conditional(&model, t, Margin::First, t).unwrap();
        for m2 in 0..=t {
            assert!((law.prob(m2 as i64) - binomial_pmf(t, m2, 0.1 / 0.3)).abs() < 1e-12);
        }
    }

    #[test]
    fn regression_reference_value() {
        assert!((regression(&tm1(), 10, Margin::First, 0) - 20.0 / 7.0).abs() < 1e-12);
        assert_eq!(regression(&tm1(), 0, Margin::First, 0), 0.0);
    }

    #[test]
    fn regression_equals_conditional_mean() {
        let model = tm1();
        let t = 10;
        for i in 0..=t {
            let cond = conditional(&model, t, Margin::First, i).unwrap();
            assert!(
                (regression(&model, t, Margin::First, i) - cond.mean()).abs() < 1e-9,
                "i={i}"
            );
        }
    }

    #[test]
    fn regression_constant_when_slope_vanishes() {
        // p0 = (p1+p0)(p2+p0) makes the counts independent, so the
        // conditional mean no longer depends on the conditioning value
        let model = quarters();
        let t = 8;
        let at0 = regression(&model, t, Margin::First, 0);
        for i in 1..=t {
            assert!((regression(&model, t, Margin::First, i) - at0).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_reference_values() {
        let m = moments(&tm1(), 10);
        assert!((m.mean1 - 3.0).abs() < 1e-12);
        assert!((m.mean2 - 3.0).abs() < 1e-12);
        assert!((m.cov - 0.1).abs() < 1e-12);
        assert!((m.cor - 1.0 / 21.0).abs() < 1e-12);
    }

    #[test]
    fn moments_match_table() {
        for t in [1, 2, 5, 10] {
            let closed = moments(&tm1(), t);
            let table = joint_pmf(&tm1(), t).unwrap().moments_from_table();
            assert!((closed.mean1 - table.mean1).abs() < 1e-10);
            assert!((closed.var1 - table.var1).abs() < 1e-10);
            assert!((closed.cross - table.cross).abs() < 1e-10);
            assert!((closed.cov - table.cov).abs() < 1e-10);
            assert!((closed.cor - table.cor).abs() < 1e-9);
        }
    }

    #[test]
    fn equal_quarters_make_counts_uncorrelated() {
        for t in 1..=10 {
            let m = moments(&quarters(), t);
            assert_eq!(m.cov, 0.0, "t={t}");
        }
    }

    #[test]
    fn correlation_is_horizon_free() {
        let reference = moments(&tm1(), 1).cor;
        for t in [2, 5, 10] {
            assert!((moments(&tm1(), t).cor - reference).abs() < 1e-12);
        }
    }

    #[test]
    fn moments_vanish_at_zero_horizon() {
        let m = moments(&tm1(), 0);
        assert_eq!(m.mean1, 0.0);
        assert_eq!(m.var2, 0.0);
        assert_eq!(m.cov, 0.0);
        assert_eq!(m.cor, 0.0);
    }

    #[test]
    fn cluster_total_reference_values() {
        let c = cluster_total(&tm1(), 10).unwrap();
        assert!((c.mean - 6.0).abs() < 1e-12);
        assert!((c.var - 4.4).abs() < 1e-12);
        assert!((c.pmf.mean() - c.mean).abs() < 1e-10);
        assert!((c.pmf.variance() - c.var).abs() < 1e-10);
    }

    #[test]
    fn cluster_total_single_period() {
        let c = cluster_total(&tm1(), 1).unwrap();
        assert!((c.pmf.prob(0) - 0.5).abs() < 1e-15);
        assert!((c.pmf.prob(1) - 0.4).abs() < 1e-15);
        assert!((c.pmf.prob(2) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cluster_total_matches_diagonal_sums() {
        for t in [0, 1, 4, 9] {
            let c = cluster_total(&tm1(), t).unwrap();
            let diag = joint_pmf(&tm1(), t).unwrap().diagonal_sum_law();
            assert!(c.pmf.max_abs_diff(&diag) < 1e-10, "t={t}");
        }
    }

    #[test]
    fn cluster_variance_with_horizon_inside_the_square_goes_negative() {
        // The variance formula with the horizon multiplying the squared
        // rate inside the bracket is not a variance at all; on the
        // reference model at t = 10 it evaluates to -28. The implemented
        // per-period form stays non-negative.
        let s = tm1();
        let shock = s.shock();
        let t = 10.0;
        let rate = shock.p1() + shock.p2() + 2.0 * shock.p0();
        let inside: f64 = t * (shock.p1() + shock.p2() + 4.0 * shock.p0() - t * rate * rate);
        assert!((inside - (-28.0)).abs() < 1e-12);
        assert!(cluster_total(&s, 10).unwrap().var >= 0.0);
    }

    #[test]
    fn multinomial_reference_values() {
        let shock = tm1();
        assert!((multinomial_pmf(shock.shock(), 1, 1, 0, 0) - 0.1).abs() < 1e-15);
        assert!((multinomial_pmf(shock.shock(), 3, 1, 1, 1) - 0.024).abs() < 1e-15);
        assert_eq!(multinomial_pmf(shock.shock(), 2, 1, 1, 1), 0.0);
    }

    #[test]
    fn multinomial_sums_to_one() {
        let model = tm1();
        for t in [1, 4, 7] {
            let mut total = 0.0;
            for b0 in 0..=t {
                for b1 in 0..=(t - b0) {
                    for b2 in 0..=(t - b0 - b1) {
                        total += multinomial_pmf(model.shock(), t, b0, b1, b2);
                    }
                }
            }
            assert!((total - 1.0).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn all_ones_model_has_same_counting_laws() {
        // claim sizes do not enter the counting process
        let a = joint_pmf(&all_ones(0.1, 0.2, 0.2), 4).unwrap();
        let b = joint_pmf(&tm1(), 4).unwrap();
        for m1 in 0..=4 {
            for m2 in 0..=4 {
                assert_eq!(a.prob(m1, m2), b.prob(m1, m2));
            }
        }
    }
}
