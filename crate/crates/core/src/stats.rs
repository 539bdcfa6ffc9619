//! Minimal special-function and goodness-of-fit helpers for the
//! simulation consistency checks.

use serde::Serialize;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, 9 coefficients; ~1e-13 relative).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`; series for `x < a + 1`,
/// continued fraction otherwise.
pub fn regularized_gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    let ln_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        // series: P(a,x) = e^{-x} x^a / Γ(a) * Σ x^n / (a (a+1) ... (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut denom = a;
        for _ in 0..500 {
            denom += 1.0;
            term *= x / denom;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (ln_prefactor.exp() * sum).min(1.0)
    } else {
        // Lentz continued fraction for Q(a,x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        let q = ln_prefactor.exp() * h;
        (1.0 - q).clamp(0.0, 1.0)
    }
}

/// Survival function of the chi-square law with `dof` degrees of freedom.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    1.0 - regularized_gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// Result of a Pearson chi-square goodness-of-fit test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chi2Result {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Number of cells kept after pooling low-expectation cells.
    pub cells: usize,
}

/// Pearson test of observed counts against expected cell probabilities.
///
/// Cells with expected count below `min_expected` are pooled into one
/// bucket. Expected probabilities need not sum to 1 (any remainder is
/// treated as an extra never-observed cell folded into the pool).
pub fn chi_square_test(observed: &[u64], expected_probs: &[f64], n: u64, min_expected: f64) -> Chi2Result {
    assert_eq!(observed.len(), expected_probs.len());
    let nf = n as f64;
    let mut statistic = 0.0;
    let mut kept = 0usize;
    let mut pooled_obs = 0.0;
    let mut pooled_exp = 0.0;
    for (&obs, &prob) in observed.iter().zip(expected_probs) {
        let expected = nf * prob;
        if expected >= min_expected {
            let diff = obs as f64 - expected;
            statistic += diff * diff / expected;
            kept += 1;
        } else {
            pooled_obs += obs as f64;
            pooled_exp += expected;
        }
    }
    // account for any expected mass outside the listed cells
    let listed: f64 = expected_probs.iter().sum();
    pooled_exp += nf * (1.0 - listed).max(0.0);
    if pooled_exp > 0.0 {
        let diff = pooled_obs - pooled_exp;
        statistic += diff * diff / pooled_exp;
        kept += 1;
    }
    let dof = kept.saturating_sub(1).max(1);
    Chi2Result { statistic, dof, p_value: chi_square_sf(statistic, dof), cells: kept }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(1.0) - 0.0).abs() < 1e-12);
        assert!((ln_gamma(2.0) - 0.0).abs() < 1e-12);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-11);
        assert!((ln_gamma(0.5) - 0.5 * std::f64::consts::PI.ln()).abs() < 1e-12);
    }

    #[test]
    fn incomplete_gamma_matches_exponential_cdf() {
        // P(1, x) = 1 - e^{-x}
        for x in [0.1, 0.5, 1.0, 3.0, 10.0] {
            assert!((regularized_gamma_p(1.0, x) - (1.0 - (-x).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn chi_square_sf_known_quantiles() {
        // P(chi2_1 > 3.841) ≈ 0.05, P(chi2_10 > 18.307) ≈ 0.05
        assert!((chi_square_sf(3.8414588206941236, 1) - 0.05).abs() < 1e-6);
        assert!((chi_square_sf(18.307038053275146, 10) - 0.05).abs() < 1e-6);
        assert_eq!(chi_square_sf(0.0, 4), 1.0);
    }

    #[test]
    fn chi_square_test_on_exact_counts_is_lenient() {
        // observed exactly proportional to expected: statistic 0, p-value 1
        let observed = [500u64, 300, 200];
        let expected = [0.5, 0.3, 0.2];
        let r = chi_square_test(&observed, &expected, 1000, 5.0);
        assert!(r.statistic < 1e-12);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!(r.dof, 2);
    }

    #[test]
    fn chi_square_test_flags_gross_mismatch() {
        let observed = [900u64, 50, 50];
        let expected = [0.5, 0.3, 0.2];
        let r = chi_square_test(&observed, &expected, 1000, 5.0);
        assert!(r.p_value < 1e-6);
    }

    #[test]
    fn chi_square_test_pools_sparse_cells() {
        let observed = [998u64, 1, 1, 0];
        let expected = [0.997, 0.001, 0.001, 0.001];
        let r = chi_square_test(&observed, &expected, 1000, 5.0);
        // three sparse cells pool into one bucket next to the big cell
        assert_eq!(r.cells, 2);
    }
}
