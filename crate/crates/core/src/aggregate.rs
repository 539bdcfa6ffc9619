//! Exact transforms, p.m.f.s and moments of the per-line totals
//! `(S1(t), S2(t))` and the combined total `S(t) = S1(t) + S2(t)`.

use std::fmt;

use serde::Serialize;

use crate::counting::Margin;
use crate::model::ModelSpec;
use crate::pmf::Pmf;
use crate::DENSE_HORIZON_CAP;

#[derive(Debug, Clone, PartialEq)]
pub enum AggregateError {
    HorizonTooLarge { t: usize, cap: usize },
    NegativeTransformArgument { z: f64 },
    TableTooLarge { cells: usize, cap: usize },
}

impl fmt::Display for AggregateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggregateError::HorizonTooLarge { t, cap } => {
                write!(f, "horizon {t} exceeds the dense-table cap {cap}")
            }
            AggregateError::NegativeTransformArgument { z } => {
                write!(f, "transform argument {z} must be non-negative")
            }
            AggregateError::TableTooLarge { cells, cap } => {
                write!(f, "bivariate claim table needs {cells} cells, cap is {cap}")
            }
        }
    }
}

impl std::error::Error for AggregateError {}

/// First and second moments of the total-claim pair and of their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClaimsMoments {
    pub mean_s1: f64,
    pub mean_s2: f64,
    pub var_s1: f64,
    pub var_s2: f64,
    /// `E[S1(t) S2(t)]`.
    pub cross: f64,
    pub cov: f64,
    /// Correlation; does not depend on the horizon.
    pub cor: f64,
    pub mean_s: f64,
    pub var_s: f64,
}

/// Joint exponential transform `E[e^{-z1 S1(t) - z2 S2(t)}]`:
/// `[1 - p + p1 L1(z1) + p0 L34(z1, z2) + p2 L2(z2)]^t`, where the `L`s
/// are the transforms of the claim laws.
pub fn joint_transform(model: &ModelSpec, t: usize, z1: f64, z2: f64) -> Result<f64, AggregateError> {
    for z in [z1, z2] {
        if z < 0.0 || !z.is_finite() {
            return Err(AggregateError::NegativeTransformArgument { z });
        }
    }
    let s = model.shock();
    let base = 1.0 - s.p()
        + s.p1() * model.law1().exp_transform(z1)
        + s.p0() * model.shock_joint().exp_transform(z1, z2)
        + s.p2() * model.law2().exp_transform(z2);
    Ok(base.powi(t as i32))
}

/// Exponential transform of the combined total, `E[e^{-z S(t)}]`; the
/// diagonal `z1 = z2 = z` of [`joint_transform`].
pub fn total_claim_exp_transform(model: &ModelSpec, t: usize, z: f64) -> Result<f64, AggregateError> {
    joint_transform(model, t, z, z)
}

/// Conventional p.g.f. of the combined total, `E[z^{S(t)}]`.
pub fn total_claim_pgf(model: &ModelSpec, t: usize, z: f64) -> f64 {
    let s = model.shock();
    let base = 1.0 - s.p()
        + s.p1() * model.law1().pgf(z)
        + s.p0() * model.shock_joint().sum_law().pgf(z)
        + s.p2() * model.law2().pgf(z);
    base.powi(t as i32)
}

/// Exact law of `S(t)`: the `t`-fold convolution of the per-period claim.
pub fn total_claim_pmf(model: &ModelSpec, t: usize) -> Result<Pmf, AggregateError> {
    if t > DENSE_HORIZON_CAP {
        return Err(AggregateError::HorizonTooLarge { t, cap: DENSE_HORIZON_CAP });
    }
    let cells = t * model.max_event_claim() as usize + 1;
    if cells > BIVARIATE_CELL_CAP {
        return Err(AggregateError::TableTooLarge { cells, cap: BIVARIATE_CELL_CAP });
    }
    let step = model.per_period_claim_law();
    let mut law = Pmf::point_mass(0);
    for _ in 0..t {
        law = law.convolve(&step);
    }
    Ok(law)
}

/// Closed-form moments of `(S1(t), S2(t))` and `S(t)`.
pub fn claims_moments(model: &ModelSpec, t: usize) -> ClaimsMoments {
    let s = model.shock();
    let tf = t as f64;
    let (law1, law2) = (model.law1(), model.law2());
    let joint = model.shock_joint();
    let (m3, m4) = (joint.marginal3(), joint.marginal4());

    // per-period increment moments of each line
    let a_mean = s.p1() * law1.mean() + s.p0() * m3.mean();
    let b_mean = s.p2() * law2.mean() + s.p0() * m4.mean();
    let a_sq = s.p1() * law1.second_moment() + s.p0() * m3.second_moment();
    let b_sq = s.p2() * law2.second_moment() + s.p0() * m4.second_moment();
    let cov_rate = s.p0() * joint.cross_moment() - a_mean * b_mean;

    let var_s1 = tf * (a_sq - a_mean * a_mean);
    let var_s2 = tf * (b_sq - b_mean * b_mean);
    let denom = ((a_sq - a_mean * a_mean) * (b_sq - b_mean * b_mean)).sqrt();

    // combined total: per-period claim I_A * Y
    let s_mean = a_mean + b_mean;
    let sum34_sq = joint.sum_law().second_moment();
    let s_sq = s.p1() * law1.second_moment() + s.p2() * law2.second_moment() + s.p0() * sum34_sq;

    ClaimsMoments {
        mean_s1: tf * a_mean,
        mean_s2: tf * b_mean,
        var_s1,
        var_s2,
        cross: tf * s.p0() * joint.cross_moment() + tf * (tf - 1.0) * a_mean * b_mean,
        cov: tf * cov_rate,
        cor: if t == 0 || denom == 0.0 { 0.0 } else { cov_rate / denom },
        mean_s: tf * s_mean,
        var_s: tf * (s_sq - s_mean * s_mean),
    }
}

/// Per-period increment law of one line alone: nothing on quiet periods
/// and on the other line's events, the line's own law on its events, the
/// matching shock marginal on shocks.
pub fn per_period_marginal_claim_law(model: &ModelSpec, which: Margin) -> Pmf {
    let s = model.shock();
    let (p_own, own, shock_part) = match which {
        Margin::First => (s.p1(), model.law1().to_pmf(), model.shock_joint().marginal3().to_pmf()),
        Margin::Second => (s.p2(), model.law2().to_pmf(), model.shock_joint().marginal4().to_pmf()),
    };
    let zero = Pmf::point_mass(0);
    let p_other = s.p() - p_own - s.p0();
    Pmf::mixture(&[
        (1.0 - s.p() + p_other, &zero),
        (p_own, &own),
        (s.p0(), &shock_part),
    ])
    .expect("marginal per-period claim law is proper")
}

/// Dense joint law of `(S1(t), S2(t))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateClaimsLaw {
    t: usize,
    /// `table[s1][s2] = P(S1(t) = s1, S2(t) = s2)`.
    table: Vec<Vec<f64>>,
}

impl BivariateClaimsLaw {
    pub fn t(&self) -> usize {
        self.t
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.table.len(), self.table[0].len())
    }

    pub fn prob(&self, s1: usize, s2: usize) -> f64 {
        self.table.get(s1).and_then(|row| row.get(s2)).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.table.iter().flatten().sum()
    }

    /// Moments computed from the table; the closed forms' cross-check.
    pub fn moments_from_table(&self) -> ClaimsMoments {
        let (mut m1, mut m2, mut sq1, mut sq2, mut cross) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let (mut ms, mut sqs) = (0.0, 0.0);
        for (s1, row) in self.table.iter().enumerate() {
            for (s2, &w) in row.iter().enumerate() {
                let (a, b) = (s1 as f64, s2 as f64);
                m1 += a * w;
                m2 += b * w;
                sq1 += a * a * w;
                sq2 += b * b * w;
                cross += a * b * w;
                ms += (a + b) * w;
                sqs += (a + b) * (a + b) * w;
            }
        }
        let var_s1 = sq1 - m1 * m1;
        let var_s2 = sq2 - m2 * m2;
        let cov = cross - m1 * m2;
        let denom = (var_s1 * var_s2).sqrt();
        ClaimsMoments {
            mean_s1: m1,
            mean_s2: m2,
            var_s1,
            var_s2,
            cross,
            cov,
            cor: if denom > 0.0 { cov / denom } else { 0.0 },
            mean_s: ms,
            var_s: sqs - ms * ms,
        }
    }
}

/// Cell cap for the dense bivariate claim table.
pub const BIVARIATE_CELL_CAP: usize = 1 << 22;

/// Exact joint law of `(S1(t), S2(t))` by `t`-fold bivariate convolution
/// of the per-period increment: quiet periods add `(0, 0)`, type-1 events
/// `(Y1, 0)`, type-2 events `(0, Y2)`, shocks the joint pair `(Y3, Y4)`.
pub fn bivariate_claim_pmf(model: &ModelSpec, t: usize) -> Result<BivariateClaimsLaw, AggregateError> {
    if t > DENSE_HORIZON_CAP {
        return Err(AggregateError::HorizonTooLarge { t, cap: DENSE_HORIZON_CAP });
    }
    let s = model.shock();
    // sparse one-period atoms: (ds1, ds2, weight)
    let mut atoms: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0 - s.p())];
    for (k, w) in model.law1().pairs() {
        atoms.push((k as usize, 0, s.p1() * w));
    }
    for (k, w) in model.law2().pairs() {
        atoms.push((0, k as usize, s.p2() * w));
    }
    for (k3, k4, w) in model.shock_joint().atoms() {
        atoms.push((k3 as usize, k4 as usize, s.p0() * w));
    }
    let max1 = atoms.iter().map(|&(a, _, _)| a).max().unwrap();
    let max2 = atoms.iter().map(|&(_, b, _)| b).max().unwrap();
    let (rows, cols) = (t * max1 + 1, t * max2 + 1);
    if rows.saturating_mul(cols) > BIVARIATE_CELL_CAP {
        return Err(AggregateError::TableTooLarge { cells: rows * cols, cap: BIVARIATE_CELL_CAP });
    }

    let mut table = vec![vec![0.0; cols]; rows];
    table[0][0] = 1.0;
    let mut reach1 = 0usize;
    let mut reach2 = 0usize;
    for _ in 0..t {
        let mut next = vec![vec![0.0; cols]; rows];
        for s1 in 0..=reach1 {
            for s2 in 0..=reach2 {
                let w = table[s1][s2];
                if w == 0.0 {
                    continue;
                }
                for &(d1, d2, aw) in &atoms {
                    next[s1 + d1][s2 + d2] += w * aw;
                }
            }
        }
        table = next;
        reach1 = (reach1 + max1).min(rows - 1);
        reach2 = (reach2 + max2).min(cols - 1);
    }
    Ok(BivariateClaimsLaw { t, table })
}
