//! Infinite-horizon ruin machinery for the surplus process
//! `R_u(t) = u + t - S(t)`: the global maximum of the associated walk, its
//! compound-geometric representations, the convolution-series survival
//! curve, the Lundberg exponent and bound, the deficit-at-ruin laws for
//! zero initial capital, and an independent finite-horizon DP oracle.

use std::fmt;

use serde::Serialize;

use crate::model::ModelSpec;
use crate::pmf::Pmf;

#[derive(Debug, Clone, PartialEq)]
pub enum RuinError {
    /// `p * mu >= 1`: ruin is certain and the infinite-horizon laws degenerate.
    NetProfitViolated { p_mu: f64 },
    /// `mu = 1`: the walk never goes up, so the ladder law is empty.
    DegenerateLadder,
    InvalidParameter(String),
    StateSpaceTooLarge { states: u64, cap: u64 },
    NumericFailure(String),
}

impl fmt::Display for RuinError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuinError::NetProfitViolated { p_mu } => {
                write!(f, "net profit condition violated: p*mu = {p_mu} >= 1")
            }
            RuinError::DegenerateLadder => {
                write!(f, "mean claim per event is 1: ruin never happens and the ladder law is empty")
            }
            RuinError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            RuinError::StateSpaceTooLarge { states, cap } => {
                write!(f, "finite-horizon DP needs {states} states, cap is {cap}")
            }
            RuinError::NumericFailure(msg) => write!(f, "numeric failure: {msg}"),
        }
    }
}

impl std::error::Error for RuinError {}

fn require_net_profit(model: &ModelSpec) -> Result<(), RuinError> {
    let s = model.summary();
    if !s.net_profit_holds {
        return Err(RuinError::NetProfitViolated { p_mu: s.p_mu });
    }
    Ok(())
}

/// Survival probability with zero initial capital, `(1 - p mu)/(1 - p)`.
pub fn survival_at_zero(model: &ModelSpec) -> Result<f64, RuinError> {
    require_net_profit(model)?;
    let s = model.summary();
    let p = model.shock().p();
    if p >= 1.0 {
        return Err(RuinError::InvalidParameter("p = 1 leaves no quiet periods".into()));
    }
    Ok((1.0 - s.p_mu) / (1.0 - p))
}

/// P.g.f. of the global maximum `M` of the associated walk,
/// `(1 - p mu)(1 - z) / (1 - p + p1 G1(z) + p0 G34(z) + p2 G2(z) - z)`
/// for `z` in `[0, 1)`. Its value at 0 is the survival probability at
/// zero initial capital.
pub fn global_max_pgf(model: &ModelSpec, z: f64) -> Result<f64, RuinError> {
    require_net_profit(model)?;
    if !(0.0..1.0).contains(&z) {
        return Err(RuinError::InvalidParameter(format!("z = {z} outside [0, 1)")));
    }
    let s = model.shock();
    let summary = model.summary();
    let denom = 1.0 - s.p() - z
        + s.p1() * model.law1().pgf(z)
        + s.p0() * model.shock_joint().sum_law().pgf(z)
        + s.p2() * model.law2().pgf(z);
    Ok((1.0 - summary.p_mu) * (1.0 - z) / denom)
}

/// Ladder-height law: `P(U1 = k) = P(Y > k)/(mu - 1)` for `k >= 1`, with
/// `Y` the per-event claim. `None` when `mu = 1` (the walk never rises and
/// ruin is impossible).
pub fn ladder_law(model: &ModelSpec) -> Option<Pmf> {
    let event = model.per_event_claim_law();
    let mu = event.mean();
    let max = event.support_max();
    if max <= 1 {
        return None;
    }
    let weights: Vec<f64> = (1..max).map(|k| event.survival(k) / (mu - 1.0)).collect();
    Some(Pmf::new(1, weights).expect("ladder weights form a pmf"))
}

/// The two compound-geometric representations of the global maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GeometricVariant {
    /// Geometric count with continuation `p mu`; summands include mass at 0.
    A,
    /// Ladder representation: continuation `p(mu-1)/(1-p)`, summands >= 1.
    B,
}

/// A compound-geometric law: geometric number of i.i.d. summands.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricRep {
    pub variant: GeometricVariant,
    /// Continuation probability of the geometric count.
    pub continuation: f64,
    pub summand: Pmf,
}

impl GeometricRep {
    /// Exact p.m.f. of the compound law on `0..len` (power-series
    /// coefficients of the compound p.g.f.; exact regardless of `len`).
    pub fn compound_pmf(&self, len: usize) -> Pmf {
        compound_geometric_pmf(self.continuation, &self.summand, len)
    }

    /// `(1 - theta) / (1 - theta G_f(z))`.
    pub fn compound_pgf(&self, z: f64) -> f64 {
        (1.0 - self.continuation) / (1.0 - self.continuation * self.summand.pgf(z))
    }
}

/// Power-series coefficients of `(1 - theta)/(1 - theta G_f(z))`: the
/// p.m.f. of a geometric (continuation `theta`) number of i.i.d. summands
/// with law `f` supported on the non-negative integers.
pub fn compound_geometric_pmf(theta: f64, summand: &Pmf, len: usize) -> Pmf {
    assert!((0.0..1.0).contains(&theta), "continuation must be in [0, 1)");
    assert!(summand.offset() >= 0, "summands must be non-negative");
    let len = len.max(1);
    let head = 1.0 - theta * summand.prob(0);
    let mut weights = vec![0.0; len];
    weights[0] = (1.0 - theta) / head;
    let max_j = summand.support_max();
    for k in 1..len {
        let mut acc = 0.0;
        let reach = (k as i64).min(max_j);
        for j in 1..=reach {
            acc += summand.prob(j) * weights[k - j as usize];
        }
        weights[k] = theta * acc / head;
    }
    Pmf::new(0, weights).expect("compound geometric weights form a (sub-)pmf")
}

/// Build one of the two compound-geometric representations of the global
/// maximum `M`.
///
/// Variant A uses the per-event tail: continuation `p mu` and summand
/// `P(U = k) = P(Y > k)/mu` for `k >= 0` (so the summand law is proper).
/// Variant B is the ladder representation: continuation `p(mu-1)/(1-p)`
/// (the ruin probability at zero) and the ladder-height summands. Both
/// have the same compound law and both reproduce [`global_max_pgf`].
pub fn geometric_representation(
    model: &ModelSpec,
    variant: GeometricVariant,
) -> Result<GeometricRep, RuinError> {
    require_net_profit(model)?;
    let event = model.per_event_claim_law();
    let mu = event.mean();
    let summary = model.summary();
    match variant {
        GeometricVariant::A => {
            let max = event.support_max();
            let weights: Vec<f64> = (0..max).map(|k| event.survival(k) / mu).collect();
            let summand = Pmf::new(0, weights).expect("per-event tail law is a pmf");
            Ok(GeometricRep { variant, continuation: summary.p_mu, summand })
        }
        GeometricVariant::B => {
            let summand = ladder_law(model).ok_or(RuinError::DegenerateLadder)?;
            let p = model.shock().p();
            let theta = p * (mu - 1.0) / (1.0 - p);
            Ok(GeometricRep { variant, continuation: theta, summand })
        }
    }
}

/// P.m.f. of the global maximum from the power series of its closed-form
/// p.g.f. (long division of numerator by denominator). A route through
/// the transform only, independent of both compound representations.
pub fn max_law_series(model: &ModelSpec, len: usize) -> Result<Pmf, RuinError> {
    require_net_profit(model)?;
    let s = model.shock();
    let summary = model.summary();
    let event = model.per_event_claim_law();
    let len = len.max(1);

    // denominator 1 - p - z + p G_Y(z), numerator (1 - p mu)(1 - z)
    let max_claim = event.support_max() as usize;
    let mut denom = vec![0.0; max_claim + 1];
    denom[0] = 1.0 - s.p();
    denom[1] += -1.0;
    for (k, w) in event.iter() {
        denom[k as usize] += s.p() * w;
    }
    let mut coeffs = vec![0.0; len];
    for k in 0..len {
        let numer = match k {
            0 => 1.0 - summary.p_mu,
            1 => -(1.0 - summary.p_mu),
            _ => 0.0,
        };
        let mut acc = numer;
        for j in 1..=k.min(max_claim) {
            acc -= denom[j] * coeffs[k - j];
        }
        let c = acc / denom[0];
        // rounding can leave series coefficients a hair below zero
        coeffs[k] = if c < 0.0 && c > -1e-12 { 0.0 } else { c };
    }
    Pmf::new(0, coeffs).map_err(|e| RuinError::NumericFailure(format!("series expansion: {e}")))
}

/// One row of a survival/ruin curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuinPoint {
    pub u: u64,
    pub delta: f64,
    pub psi: f64,
    /// `z*^{-u}` when the Lundberg exponent exists.
    pub lundberg_bound: Option<f64>,
    /// Upper bound on the series mass omitted at this `u`; zero whenever
    /// the per-`u` series was evaluated to its last non-vanishing term.
    pub series_tail_bound: f64,
}

/// Survival and ruin probabilities per initial capital.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuinCurve {
    pub eps: f64,
    /// Number of convolution powers evaluated.
    pub truncation_order: usize,
    pub z_star: Option<f64>,
    pub points: Vec<RuinPoint>,
}

/// Survival probabilities via the convolution series
/// `delta(u) = delta(0) * sum_n theta^n H^{*n}(u)` with
/// `theta = p(mu-1)/(1-p)` and `H` the ladder-height c.d.f.
///
/// The ruin side is evaluated as a sum of positive terms,
/// `psi(u) = delta(0) * [sum_{n<=u} theta^n (1 - H^{*n}(u)) +
/// theta^{u+1}/(1-theta)]`: summands are >= 1, so convolution powers
/// beyond `u` miss `u` entirely and their contribution has the closed
/// geometric form. This keeps tiny ruin probabilities at full relative
/// precision. `eps` bounds the mass of any explicitly skipped terms via
/// `theta^{N+1}/(1-theta) <= eps`.
pub fn beekman_survival(model: &ModelSpec, u_max: u64, eps: f64) -> Result<RuinCurve, RuinError> {
    require_net_profit(model)?;
    if !(eps > 0.0) {
        return Err(RuinError::InvalidParameter(format!("eps = {eps} must be positive")));
    }
    const U_MAX_CAP: u64 = 1_000_000;
    if u_max > U_MAX_CAP {
        return Err(RuinError::InvalidParameter(format!(
            "u_max = {u_max} exceeds the dense-curve cap {U_MAX_CAP}"
        )));
    }
    let z_star = adjustment_coefficient(model)?.map(|a| a.z_star);
    let bound = |u: u64| z_star.map(|z| z.powi(-(u as i32)));

    let delta0 = survival_at_zero(model)?;
    let ladder = ladder_law(model);
    let umax = u_max as usize;

    let Some(ladder) = ladder else {
        // mu = 1: the walk never rises, ruin is impossible
        let points = (0..=u_max)
            .map(|u| RuinPoint { u, delta: 1.0, psi: 0.0, lundberg_bound: bound(u), series_tail_bound: 0.0 })
            .collect();
        return Ok(RuinCurve { eps, truncation_order: 0, z_star, points });
    };

    let summary = model.summary();
    let p = model.shock().p();
    let theta = p * (summary.mu - 1.0) / (1.0 - p);

    // smallest N with theta^{N+1}/(1-theta) <= eps
    let n_eps = ((eps * (1.0 - theta)).ln() / theta.ln() - 1.0).ceil().max(0.0) as usize;
    let n_used = n_eps.min(umax);

    let mut psi_partial = vec![0.0; umax + 1];
    let mut conv = Pmf::point_mass(0);
    let mut theta_pow = 1.0;
    for n in 1..=n_used {
        conv = conv.convolve_truncated(&ladder, u_max as i64);
        theta_pow *= theta;
        // prefix cdf of the n-fold ladder convolution, exact on [0, u_max]
        let mut cdf = 0.0;
        let mut cdfs = vec![1.0; umax + 1];
        for (k, w) in conv.iter() {
            if k as usize > umax {
                break;
            }
            cdf += w;
            cdfs[k as usize] = cdf;
        }
        for u in 0..conv.offset().min(umax as i64 + 1) {
            cdfs[u as usize] = 0.0;
        }
        for u in n..=umax {
            psi_partial[u] += theta_pow * (1.0 - cdfs[u]);
        }
    }

    let mut points = Vec::with_capacity(umax + 1);
    let mut prev_psi = f64::INFINITY;
    for u in 0..=u_max {
        let closed_tail = theta.powi(u as i32 + 1) / (1.0 - theta);
        let psi = delta0 * (psi_partial[u as usize] + closed_tail);
        let series_tail_bound = if (u as usize) <= n_used {
            0.0
        } else {
            delta0 * theta.powi(n_used as i32 + 1) / (1.0 - theta)
        };
        debug_assert!(psi <= prev_psi + 1e-12, "ruin curve must be non-increasing");
        prev_psi = psi;
        points.push(RuinPoint {
            u,
            delta: 1.0 - psi,
            psi,
            lundberg_bound: bound(u),
            series_tail_bound,
        });
    }
    Ok(RuinCurve { eps, truncation_order: n_used, z_star, points })
}

/// The Lundberg root and exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjustmentCoefficient {
    /// Root `z* > 1` of `1 - p + p G_Y(z) - z = 0`.
    pub z_star: f64,
    /// `ln z*`.
    pub epsilon: f64,
    pub bracket: (f64, f64),
    /// `|g(z*)|` at the returned root.
    pub residual: f64,
}

/// Find the root `z* > 1` of `g(z) = 1 - p + p G_Y(z) - z`.
///
/// `g` is strictly convex with `g(1) = 0` and `g'(1) = p mu - 1 < 0`, so a
/// root beyond 1 exists exactly when some event claims more than 1; with
/// all claims equal to 1 the reserve never drops and `Ok(None)` is
/// returned (ruin probabilities vanish identically).
pub fn adjustment_coefficient(model: &ModelSpec) -> Result<Option<AdjustmentCoefficient>, RuinError> {
    require_net_profit(model)?;
    let event = model.per_event_claim_law();
    if event.support_max() <= 1 {
        return Ok(None);
    }
    let p = model.shock().p();
    let g = |z: f64| 1.0 - p - z + p * event.pgf(z);
    let g_prime = |z: f64| -1.0 + p * event.iter().map(|(k, w)| w * k as f64 * z.powi(k as i32 - 1)).sum::<f64>();

    let lo0 = 1.0 + 1e-9;
    let mut hi = 2.0;
    let mut guard = 0;
    while g(hi) <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(RuinError::NumericFailure("no upper bracket for the Lundberg root".into()));
        }
    }
    let bracket = (lo0, hi);

    let (mut lo, mut hi) = bracket;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..50 {
        let gz = g(z);
        if gz.abs() < 1e-15 {
            break;
        }
        let gp = g_prime(z);
        if gp == 0.0 {
            break;
        }
        let next = z - gz / gp;
        if !(bracket.0..=bracket.1).contains(&next) {
            break;
        }
        z = next;
    }
    let residual = g(z).abs();
    if residual >= 1e-12 {
        return Err(RuinError::NumericFailure(format!(
            "Lundberg root residual {residual} at z = {z}"
        )));
    }
    Ok(Some(AdjustmentCoefficient { z_star: z, epsilon: z.ln(), bracket, residual }))
}

/// Exact probability of ruin on or before period `horizon`, by dynamic
/// programming over reserve levels.
///
/// Independent of every series/transform route above: the reserve starts
/// at `u`, gains the unit premium each period, pays the per-period claim,
/// and is absorbed the first time it drops below zero.
pub fn finite_horizon_ruin(model: &ModelSpec, u: u64, horizon: u64) -> Result<f64, RuinError> {
    if horizon < 1 {
        return Err(RuinError::InvalidParameter("horizon must be at least 1".into()));
    }
    const STATE_CAP: u64 = 8_000_000;
    let states = u + horizon + 1;
    if states > STATE_CAP {
        return Err(RuinError::StateSpaceTooLarge { states, cap: STATE_CAP });
    }
    let claims: Vec<(usize, f64)> = model
        .per_period_claim_law()
        .iter()
        .filter(|&(_, w)| w > 0.0)
        .map(|(k, w)| (k as usize, w))
        .collect();

    let mut alive = vec![0.0; states as usize];
    alive[u as usize] = 1.0;
    let mut reach = u as usize;
    let mut ruined = 0.0;
    for _ in 0..horizon {
        let mut next = vec![0.0; states as usize];
        for r in 0..=reach {
            let w = alive[r];
            if w == 0.0 {
                continue;
            }
            for &(claim, pw) in &claims {
                let gain = r + 1;
                if claim > gain {
                    ruined += w * pw;
                } else {
                    next[gain - claim] += w * pw;
                }
            }
        }
        alive = next;
        reach += 1;
    }
    Ok(ruined)
}

// ── Deficit at ruin (zero initial capital) ─────────────────────────────────

/// Deficit point masses and reconciliation diagnostics, zero initial capital.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeficitReport {
    /// `mu > 1`; when false the remaining fields are empty.
    pub ruin_possible: bool,
    pub psi_zero: f64,
    pub r_max: u64,
    pub reconciled: ReconciledDeficit,
    pub paper_printed: PrintedDeficit,
    pub pgf_samples: Vec<PgfSample>,
}

/// The internally consistent deficit laws. `lambda[r-1]` is the mass at
/// deficit `r`.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ReconciledDeficit {
    /// Defective law with total mass `psi(0)`: `p P(Y > r)/(1 - p)`.
    pub unconditional_lambda: Vec<f64>,
    /// Conditional-on-ruin law `P(Y > r)/(mu - 1)`; sums to 1.
    pub conditional_lambda: Vec<f64>,
    pub unconditional_total: f64,
    /// Forward evaluation of the one-step recursion from `lambda_1`.
    pub recursion_lambda: Vec<f64>,
    /// Largest gap between the recursion and the closed form.
    pub recursion_max_abs_diff: f64,
    /// `sum_r r * conditional_lambda_r`.
    pub mean_deficit: f64,
    /// `(E[Y^2] - mu) / (2 (mu - 1))`.
    pub mean_deficit_closed_form: f64,
}

/// The conditional-mean formulas evaluated exactly as printed, kept for
/// reporting next to the reconciled values. The shared denominator
/// vanishes identically when fed the unconditional `lambda_1`, and the
/// ruin-time expression goes negative with the conditional one, so both
/// values carry flags rather than silent fixes. The authoritative mean
/// deficit is the reconciled one; the authoritative mean ruin time is the
/// Monte Carlo estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct PrintedDeficit {
    pub conditional_lambda1: f64,
    pub denominator: f64,
    pub denominator_vanishes: bool,
    pub mean_deficit: f64,
    pub mean_ruin_time: f64,
    pub mean_ruin_time_negative: bool,
    pub unconditional_lambda1: f64,
    pub unconditional_denominator: f64,
    pub unconditional_denominator_vanishes: bool,
}

/// One evaluation point of the deficit p.g.f.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PgfSample {
    pub s: f64,
    /// `sum_r s^r lambda_r` (unconditional law).
    pub series: f64,
    /// Closed form of the same transform with `q = 1 - p`.
    pub closed_form: f64,
}

/// Deficit-at-ruin laws for zero initial capital, with every printed
/// variant evaluated and reconciled against the closed forms.
pub fn deficit_laws(model: &ModelSpec, r_max: u64) -> Result<DeficitReport, RuinError> {
    require_net_profit(model)?;
    if r_max < 1 {
        return Err(RuinError::InvalidParameter("r_max must be at least 1".into()));
    }
    let s = model.shock();
    let p = s.p();
    let q = 1.0 - p;
    let event = model.per_event_claim_law();
    let mu = event.mean();
    let psi_zero = 1.0 - survival_at_zero(model)?;

    if event.support_max() <= 1 {
        return Ok(DeficitReport {
            ruin_possible: false,
            psi_zero,
            r_max,
            reconciled: ReconciledDeficit::default(),
            paper_printed: PrintedDeficit::default(),
            pgf_samples: Vec::new(),
        });
    }

    let full_r = (event.support_max() - 1).max(r_max as i64) as u64;
    let uncond = |r: u64| p * event.survival(r as i64) / q;
    let cond = |r: u64| event.survival(r as i64) / (mu - 1.0);

    // mixture mass at claim size k, as printed: p1 P(Y11=k) + p0 P(Y3+Y4=k) + p2 P(Y21=k)
    let w = |k: u64| {
        s.p1() * model.law1().prob(k)
            + s.p0() * model.shock_joint().sum_law().prob(k)
            + s.p2() * model.law2().prob(k)
    };
    let w1 = s.p1() * model.law1().prob(1) + s.p2() * model.law2().prob(1);

    // forward recursion from the unconditional lambda_1
    let lambda1_uncond = (p - w1) / q;
    let mut recursion = vec![0.0; r_max as usize];
    recursion[0] = lambda1_uncond;
    for r in 1..r_max as usize {
        let prev = recursion[r - 1];
        recursion[r] =
            prev * (1.0 - w1) / q - prev * lambda1_uncond - w((r + 1) as u64) / q;
    }

    let unconditional_lambda: Vec<f64> = (1..=r_max).map(uncond).collect();
    let conditional_lambda: Vec<f64> = (1..=r_max).map(cond).collect();
    let recursion_max_abs_diff = recursion
        .iter()
        .zip(&unconditional_lambda)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);

    let mean_deficit: f64 = (1..=full_r).map(|r| r as f64 * cond(r)).sum();
    let mean_deficit_closed_form = (event.second_moment() - mu) / (2.0 * (mu - 1.0));

    let lambda1_cond = cond(1);
    let denominator = p - q * lambda1_cond - w1;
    let unconditional_denominator = p - q * lambda1_uncond - w1;
    let p_mu = model.summary().p_mu;
    let printed = PrintedDeficit {
        conditional_lambda1: lambda1_cond,
        denominator,
        denominator_vanishes: denominator.abs() < 1e-12,
        mean_deficit: (p_mu - 1.0) / denominator,
        mean_ruin_time: 1.0 / denominator,
        mean_ruin_time_negative: 1.0 / denominator < 0.0,
        unconditional_lambda1: lambda1_uncond,
        unconditional_denominator,
        unconditional_denominator_vanishes: unconditional_denominator.abs() < 1e-12,
    };

    let pgf_samples = (1..=9)
        .map(|i| {
            let z = i as f64 / 10.0;
            let series: f64 = (1..=full_r).map(|r| z.powi(r as i32) * uncond(r)).sum();
            let numer: f64 = (2..=event.support_max() as u64)
                .map(|k| z.powi(k as i32 - 1) * w(k))
                .sum::<f64>()
                - lambda1_uncond * q;
            let denom = 1.0 - w1 - lambda1_uncond * q - q / z;
            PgfSample { s: z, series, closed_form: numer / denom }
        })
        .collect();

    Ok(DeficitReport {
        ruin_possible: true,
        psi_zero,
        r_max,
        reconciled: ReconciledDeficit {
            unconditional_lambda,
            conditional_lambda,
            unconditional_total: (1..=full_r).map(uncond).sum(),
            recursion_lambda: recursion,
            recursion_max_abs_diff,
            mean_deficit,
            mean_deficit_closed_form,
        },
        paper_printed: printed,
        pgf_samples,
    })
}

// ── Thinning equivalence of compound geometric laws ─────────────────────────

/// The two stochastically equivalent compound-geometric constructions.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinningCheck {
    /// `P(A) = (1 - c pG) / (c (1 - pG))`.
    pub thinning_prob: f64,
    /// Geometric count with continuation `c * pG` over thinned summands.
    pub pmf_left: Pmf,
    /// Geometric count with continuation `pG` over the plain summands.
    pub pmf_right: Pmf,
    pub tail_left: f64,
    pub tail_right: f64,
    pub max_abs_diff: f64,
}

/// Verify that a compound geometric law with continuation `pG` over
/// strictly positive summands `X` equals the compound geometric law with
/// the larger continuation `c * pG` over the thinned summands `I_A X`,
/// `P(A) = (1 - c pG)/(c (1 - pG))`, for any `c` in `(1, 1/pG)`.
///
/// Thinning can only lower a compound-geometric continuation, so the
/// indicators must ride with the `c * pG` side; attaching them to the
/// `pG` side instead pairs two laws that genuinely differ.
///
/// Both p.m.f.s are computed independently on `0..=k_max` with the lost
/// upper mass recorded.
pub fn thinning_equivalence(
    xlaw: &Pmf,
    p_g: f64,
    c: f64,
    k_max: u64,
) -> Result<ThinningCheck, RuinError> {
    if xlaw.offset() < 1 {
        return Err(RuinError::InvalidParameter("summand law must be strictly positive".into()));
    }
    if !xlaw.is_proper(1e-10) {
        return Err(RuinError::InvalidParameter("summand law must have total mass 1".into()));
    }
    if !(0.0 < p_g && p_g < 1.0) {
        return Err(RuinError::InvalidParameter(format!("pG = {p_g} outside (0, 1)")));
    }
    if !(1.0 < c && c < 1.0 / p_g) {
        return Err(RuinError::InvalidParameter(format!("c = {c} outside (1, {})", 1.0 / p_g)));
    }
    let thinning_prob = (1.0 - c * p_g) / (c * (1.0 - p_g));
    if !(0.0..=1.0).contains(&thinning_prob) {
        return Err(RuinError::NumericFailure(format!(
            "thinning probability {thinning_prob} outside [0, 1]"
        )));
    }

    let zero = Pmf::point_mass(0);
    let thinned =
        Pmf::mixture(&[(1.0 - thinning_prob, &zero), (thinning_prob, xlaw)]).expect("thinned law");
    let len = k_max as usize + 1;
    let pmf_left = compound_geometric_pmf(c * p_g, &thinned, len);
    let pmf_right = compound_geometric_pmf(p_g, xlaw, len);
    Ok(ThinningCheck {
        thinning_prob,
        tail_left: 1.0 - pmf_left.total_mass(),
        tail_right: 1.0 - pmf_right.total_mass(),
        max_abs_diff: pmf_left.max_abs_diff(&pmf_right),
        pmf_left,
        pmf_right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{all_ones, tm1};
    use crate::model::{ClaimLaw, ModelSpec, ShockJointLaw, ShockParams};

    fn heavy() -> ModelSpec {
        // p*mu = 0.4 * 2.35 = 0.94 < 1, claims up to 4
        ModelSpec::new(
            ShockParams::new(0.1, 0.2, 0.1).unwrap(),
            ClaimLaw::new(&[(1, 0.3), (2, 0.4), (4, 0.3)]).unwrap(),
            ClaimLaw::new(&[(1, 0.6), (3, 0.4)]).unwrap(),
            ShockJointLaw::new(&[(1, 1, 0.5), (2, 1, 0.5)]).unwrap(),
        )
    }

    fn certain_ruin() -> ModelSpec {
        ModelSpec::new(
            ShockParams::new(0.0, 0.6, 0.0).unwrap(),
            ClaimLaw::constant(2).unwrap(),
            ClaimLaw::constant(1).unwrap(),
            ShockJointLaw::constant(1, 1).unwrap(),
        )
    }

    #[test]
    fn survival_at_zero_reference() {
        assert!((survival_at_zero(&tm1()).unwrap() - 0.6).abs() < 1e-12);
        assert_eq!(survival_at_zero(&all_ones(0.0, 0.2, 0.2)).unwrap(), 1.0);
        assert!(matches!(
            survival_at_zero(&certain_ruin()),
            Err(RuinError::NetProfitViolated { .. })
        ));
    }

    #[test]
    fn survival_at_zero_vanishes_at_the_profit_boundary() {
        // p*mu = 0.3 + 0.6999 * 1 nudged just below 1 via a claim of 2
        let m = ModelSpec::new(
            ShockParams::new(0.0, 0.4999, 0.0).unwrap(),
            ClaimLaw::constant(2).unwrap(),
            ClaimLaw::constant(1).unwrap(),
            ShockJointLaw::constant(1, 1).unwrap(),
        );
        let s = m.summary();
        assert!(s.net_profit_holds && s.p_mu > 0.999);
        let delta0 = survival_at_zero(&m).unwrap();
        assert!(delta0 > 0.0 && delta0 < 5e-4, "delta(0) = {delta0}");
    }

    #[test]
    fn ruin_decays_geometrically_on_reference_model() {
        // with unit ladder heights, exceeding 50 takes 51 ladder epochs
        let curve = beekman_survival(&tm1(), 50, 1e-10).unwrap();
        let theta = geometric_representation(&tm1(), GeometricVariant::B).unwrap().continuation;
        let psi0 = curve.points[0].psi;
        assert!(curve.points[50].psi < psi0 * theta.powi(40));
    }

    #[test]
    fn global_max_pgf_reference_values() {
        let m = tm1();
        assert!((global_max_pgf(&m, 0.0).unwrap() - 0.6).abs() < 1e-12);
        // closed form reduces to 0.6/(1 - 0.4 z)
        assert!((global_max_pgf(&m, 0.5).unwrap() - 0.75).abs() < 1e-12);
        for z in [0.0, 0.3, 0.9] {
            assert!((global_max_pgf(&all_ones(0.0, 0.2, 0.2), z).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!(global_max_pgf(&m, 1.0).is_err());
        assert!(global_max_pgf(&m, -0.1).is_err());
    }

    #[test]
    fn ladder_law_reference() {
        let ladder = ladder_law(&tm1()).unwrap();
        assert_eq!(ladder.offset(), 1);
        assert_eq!(ladder.len(), 1);
        assert!((ladder.prob(1) - 1.0).abs() < 1e-12);
        assert!(ladder_law(&all_ones(0.0, 0.2, 0.2)).is_none());
    }

    #[test]
    fn ladder_law_sums_to_one() {
        let ladder = ladder_law(&heavy()).unwrap();
        assert!(ladder.is_proper(1e-10));
        // support ends at max claim - 1
        assert_eq!(ladder.support_max(), 3);
    }

    #[test]
    fn variant_b_is_geometric_on_reference_model() {
        let rep = geometric_representation(&tm1(), GeometricVariant::B).unwrap();
        assert!((rep.continuation - 0.4).abs() < 1e-12);
        let law = rep.compound_pmf(12);
        for u in 0..12 {
            assert!((law.prob(u) - 0.6 * 0.4f64.powi(u as i32)).abs() < 1e-12, "u={u}");
        }
    }

    #[test]
    fn variant_a_summand_on_reference_model() {
        let rep = geometric_representation(&tm1(), GeometricVariant::A).unwrap();
        assert!((rep.continuation - 0.7).abs() < 1e-12);
        assert!((rep.summand.prob(0) - 5.0 / 7.0).abs() < 1e-12);
        assert!((rep.summand.prob(1) - 2.0 / 7.0).abs() < 1e-12);
        assert!(rep.summand.is_proper(1e-10));
    }

    #[test]
    fn variant_a_all_claims_one_is_point_mass() {
        let rep = geometric_representation(&all_ones(0.0, 0.1, 0.1), GeometricVariant::A).unwrap();
        assert!((rep.continuation - 0.2).abs() < 1e-12);
        let law = rep.compound_pmf(6);
        assert!((law.prob(0) - 1.0).abs() < 1e-12);
        assert!(law.prob(3) < 1e-15);
    }

    #[test]
    fn variant_b_requires_rising_walk() {
        assert!(matches!(
            geometric_representation(&all_ones(0.0, 0.1, 0.1), GeometricVariant::B),
            Err(RuinError::DegenerateLadder)
        ));
    }

    #[test]
    fn representations_agree_with_each_other_and_the_series() {
        for model in [tm1(), heavy()] {
            let a = geometric_representation(&model, GeometricVariant::A).unwrap().compound_pmf(80);
            let b = geometric_representation(&model, GeometricVariant::B).unwrap().compound_pmf(80);
            let series = max_law_series(&model, 80).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
            assert!(a.max_abs_diff(&series) < 1e-12);
        }
    }

    #[test]
    fn representations_match_pgf_on_a_grid() {
        let model = heavy();
        let a = geometric_representation(&model, GeometricVariant::A).unwrap();
        let b = geometric_representation(&model, GeometricVariant::B).unwrap();
        for i in 0..10 {
            let z = i as f64 / 10.0;
            let exact = global_max_pgf(&model, z).unwrap();
            assert!((a.compound_pgf(z) - exact).abs() < 1e-9, "A at z={z}");
            assert!((b.compound_pgf(z) - exact).abs() < 1e-9, "B at z={z}");
        }
    }

    #[test]
    fn beekman_reference_curve() {
        let curve = beekman_survival(&tm1(), 5, 1e-10).unwrap();
        let psi: Vec<f64> = curve.points.iter().map(|p| p.psi).collect();
        assert!((psi[0] - 0.4).abs() < 1e-12);
        assert!((psi[1] - 0.16).abs() < 1e-12);
        assert!((psi[2] - 0.064).abs() < 1e-12);
        for p in &curve.points {
            assert!((p.delta + p.psi - 1.0).abs() < 1e-12);
            assert_eq!(p.series_tail_bound, 0.0);
        }
        assert!((curve.points[0].delta - survival_at_zero(&tm1()).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn beekman_monotone_and_bounded_by_lundberg() {
        let curve = beekman_survival(&heavy(), 50, 1e-10).unwrap();
        let z = curve.z_star.unwrap();
        for pair in curve.points.windows(2) {
            assert!(pair[1].psi <= pair[0].psi + 1e-12);
        }
        for p in &curve.points {
            let bound = p.lundberg_bound.unwrap();
            assert!((bound - z.powi(-(p.u as i32))).abs() < 1e-12);
            assert!(p.psi <= bound + 1e-12, "u={}", p.u);
        }
    }

    #[test]
    fn beekman_no_ruin_when_claims_are_unit() {
        let curve = beekman_survival(&all_ones(0.0, 0.1, 0.1), 10, 1e-10).unwrap();
        for p in &curve.points {
            assert_eq!(p.psi, 0.0);
            assert_eq!(p.delta, 1.0);
        }
    }

    #[test]
    fn beekman_rejects_bad_inputs() {
        assert!(beekman_survival(&tm1(), 5, 0.0).is_err());
        assert!(beekman_survival(&certain_ruin(), 5, 1e-10).is_err());
    }

    #[test]
    fn beekman_matches_delta_form_of_the_series() {
        // delta(u) = delta0 * sum_{n<=u} theta^n H^{*n}(u), finite because
        // ladder summands are >= 1
        let model = heavy();
        let u_max = 20i64;
        let curve = beekman_survival(&model, u_max as u64, 1e-12).unwrap();
        let delta0 = survival_at_zero(&model).unwrap();
        let ladder = ladder_law(&model).unwrap();
        let summary = model.summary();
        let theta = model.shock().p() * (summary.mu - 1.0) / (1.0 - model.shock().p());
        for u in 0..=u_max {
            let mut delta = delta0;
            let mut conv = Pmf::point_mass(0);
            let mut tp = 1.0;
            for _n in 1..=u {
                conv = conv.convolve(&ladder);
                tp *= theta;
                delta += delta0 * tp * conv.cdf(u);
            }
            assert!(
                (curve.points[u as usize].delta - delta).abs() < 1e-12,
                "u={u}: {} vs {delta}",
                curve.points[u as usize].delta
            );
        }
    }

    #[test]
    fn adjustment_coefficient_reference_root() {
        let a = adjustment_coefficient(&tm1()).unwrap().unwrap();
        assert!((a.z_star - 2.5).abs() < 1e-12);
        assert!((a.epsilon - 2.5f64.ln()).abs() < 1e-12);
        assert!(a.residual < 1e-12);
    }

    #[test]
    fn adjustment_coefficient_absent_for_unit_claims() {
        assert_eq!(adjustment_coefficient(&all_ones(0.0, 0.2, 0.2)).unwrap(), None);
    }

    #[test]
    fn martingale_identity_at_the_root() {
        for model in [tm1(), heavy()] {
            let a = adjustment_coefficient(&model).unwrap().unwrap();
            let step = model.per_period_step_law();
            assert!((step.pgf(a.z_star) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lundberg_bound_dominates_reference_psi() {
        // psi(3) = 0.4^4 = 0.0256 <= 2.5^{-3} = 0.064
        let a = adjustment_coefficient(&tm1()).unwrap().unwrap();
        let bound = a.z_star.powi(-3);
        assert!((bound - 0.064).abs() < 1e-12);
        let curve = beekman_survival(&tm1(), 3, 1e-10).unwrap();
        assert!((curve.points[3].psi - 0.0256).abs() < 1e-12);
        assert!(curve.points[3].psi <= bound);
    }

    #[test]
    fn dp_single_period_reference() {
        assert!((finite_horizon_ruin(&tm1(), 0, 1).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(finite_horizon_ruin(&all_ones(0.0, 0.2, 0.2), 0, 50).unwrap(), 0.0);
        assert!(finite_horizon_ruin(&tm1(), 0, 0).is_err());
    }

    #[test]
    fn dp_is_monotone_in_horizon() {
        let model = heavy();
        let mut prev = 0.0;
        for t in [1, 2, 5, 10, 50] {
            let cur = finite_horizon_ruin(&model, 1, t).unwrap();
            assert!(cur >= prev - 1e-15);
            prev = cur;
        }
    }

    #[test]
    fn dp_converges_to_series_ruin() {
        let psi = beekman_survival(&tm1(), 5, 1e-12).unwrap();
        for u in 0..=5u64 {
            let dp = finite_horizon_ruin(&tm1(), u, 2000).unwrap();
            assert!(
                (dp - psi.points[u as usize].psi).abs() < 1e-10,
                "u={u}: dp={dp} series={}",
                psi.points[u as usize].psi
            );
        }
    }

    #[test]
    fn dp_state_cap() {
        assert!(matches!(
            finite_horizon_ruin(&tm1(), 0, 10_000_000),
            Err(RuinError::StateSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn deficit_reference_report() {
        let report = deficit_laws(&tm1(), 4).unwrap();
        assert!(report.ruin_possible);
        assert!((report.psi_zero - 0.4).abs() < 1e-12);

        let rec = &report.reconciled;
        assert!((rec.conditional_lambda[0] - 1.0).abs() < 1e-12);
        assert!(rec.conditional_lambda[1].abs() < 1e-15);
        assert!((rec.unconditional_lambda[0] - 0.4).abs() < 1e-12);
        assert!((rec.unconditional_total - 0.4).abs() < 1e-12);
        assert!((rec.mean_deficit - 1.0).abs() < 1e-12);
        assert!((rec.mean_deficit_closed_form - 1.0).abs() < 1e-12);
        // recursion gives lambda_2 = 0.4*0.7/0.5 - 0.16 - 0.2/0.5 = 0
        assert!(rec.recursion_lambda[1].abs() < 1e-12);
        assert!(rec.recursion_max_abs_diff < 1e-12);

        let printed = &report.paper_printed;
        assert!((printed.conditional_lambda1 - 1.0).abs() < 1e-12);
        assert!((printed.mean_deficit - 1.0).abs() < 1e-12);
        assert!(printed.mean_ruin_time_negative);
        assert!((printed.mean_ruin_time - (-10.0 / 3.0)).abs() < 1e-9);
        assert!(!printed.denominator_vanishes);
        assert!(printed.unconditional_denominator_vanishes);
    }

    #[test]
    fn deficit_pgf_samples_match_series() {
        for model in [tm1(), heavy()] {
            let report = deficit_laws(&model, 8).unwrap();
            for sample in &report.pgf_samples {
                assert!(
                    (sample.series - sample.closed_form).abs() < 1e-9,
                    "s={}: {} vs {}",
                    sample.s,
                    sample.series,
                    sample.closed_form
                );
            }
        }
    }

    #[test]
    fn deficit_conditional_is_unconditional_over_psi_zero() {
        let report = deficit_laws(&heavy(), 6).unwrap();
        for (c, u) in report
            .reconciled
            .conditional_lambda
            .iter()
            .zip(&report.reconciled.unconditional_lambda)
        {
            assert!((c - u / report.psi_zero).abs() < 1e-10);
        }
        assert!((report.reconciled.unconditional_total - report.psi_zero).abs() < 1e-10);
    }

    #[test]
    fn deficit_degenerate_and_invalid_inputs() {
        let report = deficit_laws(&all_ones(0.0, 0.1, 0.1), 3).unwrap();
        assert!(!report.ruin_possible);
        assert!(report.reconciled.unconditional_lambda.is_empty());
        assert!(deficit_laws(&tm1(), 0).is_err());
        assert!(deficit_laws(&certain_ruin(), 3).is_err());
    }

    #[test]
    fn thinning_reference_case() {
        let x = Pmf::point_mass(1);
        let check = thinning_equivalence(&x, 0.5, 1.5, 64).unwrap();
        assert!((check.thinning_prob - 1.0 / 3.0).abs() < 1e-12);
        // the agreeing pair shares P(0) = 1 - pG
        assert!((check.pmf_left.prob(0) - 0.5).abs() < 1e-12);
        assert!((check.pmf_right.prob(0) - 0.5).abs() < 1e-12);
        assert!(check.max_abs_diff < 1e-12);
    }

    #[test]
    fn thinning_on_a_spread_summand() {
        let x = Pmf::from_pairs(&[(1, 0.3), (2, 0.5), (5, 0.2)]).unwrap();
        let check = thinning_equivalence(&x, 0.4, 2.0, 128).unwrap();
        assert!(check.max_abs_diff < 1e-12);
        assert!(check.tail_left < 1e-9);
        assert!((check.tail_left - check.tail_right).abs() < 1e-12);
    }

    #[test]
    fn thinning_degenerates_as_c_approaches_one() {
        let x = Pmf::from_pairs(&[(1, 0.7), (3, 0.3)]).unwrap();
        let check = thinning_equivalence(&x, 0.5, 1.0 + 1e-9, 64).unwrap();
        assert!((check.thinning_prob - 1.0).abs() < 1e-8);
        assert!(check.max_abs_diff < 1e-10);
    }

    #[test]
    fn thinning_collapses_as_pg_vanishes() {
        let x = Pmf::point_mass(2);
        let check = thinning_equivalence(&x, 1e-9, 1.5, 16).unwrap();
        assert!((check.pmf_left.prob(0) - 1.0).abs() < 1e-8);
        assert!((check.pmf_right.prob(0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn thinning_rejects_bad_parameters() {
        let x = Pmf::point_mass(1);
        assert!(thinning_equivalence(&x, 0.5, 2.5, 16).is_err()); // c >= 1/pG
        assert!(thinning_equivalence(&x, 0.5, 1.0, 16).is_err()); // c <= 1
        assert!(thinning_equivalence(&x, 1.1, 0.5, 16).is_err()); // pG outside (0,1)
        let zero_support = Pmf::new(0, vec![0.5, 0.5]).unwrap();
        assert!(thinning_equivalence(&zero_support, 0.5, 1.5, 16).is_err());
    }

    #[test]
    fn compound_geometric_zero_continuation_is_point_mass() {
        let f = Pmf::from_pairs(&[(1, 1.0)]).unwrap();
        let law = compound_geometric_pmf(0.0, &f, 5);
        assert_eq!(law.prob(0), 1.0);
        assert_eq!(law.prob(1), 0.0);
    }
}
