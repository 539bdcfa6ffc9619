//! Validated model parameters and the derived per-event / per-period claim
//! laws consumed by every other module.
//!
//! A model is a triple of event probabilities (common shock, type-1 only,
//! type-2 only) together with three claim-size laws: one per stand-alone
//! policy type and a joint law for the pair paid out on a common shock.
//! All laws have finite support on the positive integers, which keeps every
//! downstream computation (convolutions, the surplus DP, the Lundberg root
//! search) exact at machine precision.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pmf::Pmf;

/// Tolerance on claim-law weight sums. Inputs outside this band are
/// rejected, never renormalized: silent renormalization hides data errors.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Largest accepted claim size. The engine stores laws densely, so claim
/// sizes bound every array the model can allocate.
pub const MAX_CLAIM_SIZE: u64 = 1_000_000;

/// Structured rejection listing every violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelError {
    pub violations: Vec<String>,
}

impl ModelError {
    fn single(message: impl Into<String>) -> ModelError {
        ModelError { violations: vec![message.into()] }
    }
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid model: {}", self.violations.join("; "))
    }
}

impl std::error::Error for ModelError {}

/// Per-period event probabilities of the three exclusive claim-generating
/// outcomes. The remaining mass `1 - p0 - p1 - p2` is a quiet period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShockParams {
    p0: f64,
    p1: f64,
    p2: f64,
}

impl ShockParams {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Result<ShockParams, ModelError> {
        let raw = ShockParams { p0, p1, p2 };
        let violations = raw.violations();
        if violations.is_empty() {
            Ok(raw)
        } else {
            Err(ModelError { violations })
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, value) in [("p0", self.p0), ("p1", self.p1), ("p2", self.p2)] {
            if !value.is_finite() || value < 0.0 {
                v.push(format!("{name} = {value} must be a finite probability >= 0"));
            }
        }
        let p = self.p0 + self.p1 + self.p2;
        if p > 1.0 {
            v.push(format!("p = p0 + p1 + p2 = {p} > 1"));
        }
        if p <= 0.0 {
            v.push("p = p0 + p1 + p2 must be positive (a model with no events is degenerate)".to_string());
        }
        v
    }

    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Total per-period event probability `p = p0 + p1 + p2`.
    pub fn p(&self) -> f64 {
        self.p0 + self.p1 + self.p2
    }
}

/// Finite claim-size law on the positive integers.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClaimLaw {
    support: Vec<u64>,
    probs: Vec<f64>,
}

impl ClaimLaw {
    /// Build from `(claim size, probability)` pairs. Sizes must be distinct
    /// positive integers; weights must be positive and sum to 1 within
    /// [`WEIGHT_SUM_TOL`].
    pub fn new(pairs: &[(u64, f64)]) -> Result<ClaimLaw, ModelError> {
        let mut sorted: Vec<(u64, f64)> = pairs.to_vec();
        sorted.sort_by_key(|&(k, _)| k);
        let law = ClaimLaw {
            support: sorted.iter().map(|&(k, _)| k).collect(),
            probs: sorted.iter().map(|&(_, w)| w).collect(),
        };
        let violations = law.violations("claim law");
        if violations.is_empty() {
            Ok(law)
        } else {
            Err(ModelError { violations })
        }
    }

    /// Law concentrated at a single claim size.
    pub fn constant(k: u64) -> Result<ClaimLaw, ModelError> {
        ClaimLaw::new(&[(k, 1.0)])
    }

    fn violations(&self, label: &str) -> Vec<String> {
        let mut v = Vec::new();
        if self.support.is_empty() {
            v.push(format!("{label}: empty support"));
            return v;
        }
        for (&k, &w) in self.support.iter().zip(&self.probs) {
            if k < 1 {
                v.push(format!("{label}: claim sizes must be >= 1, found {k}"));
            }
            if k > MAX_CLAIM_SIZE {
                v.push(format!("{label}: claim size {k} exceeds the cap {MAX_CLAIM_SIZE}"));
            }
            if !w.is_finite() || w <= 0.0 {
                v.push(format!("{label}: weight {w} at claim size {k} must be positive"));
            }
        }
        for pair in self.support.windows(2) {
            if pair[0] == pair[1] {
                v.push(format!("{label}: duplicate claim size {}", pair[0]));
            }
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            v.push(format!(
                "{label}: weights sum to {total}, outside 1 +/- {WEIGHT_SUM_TOL} (renormalization refused)"
            ));
        }
        v
    }

    pub fn pairs(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.support.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn prob(&self, k: u64) -> f64 {
        match self.support.binary_search(&k) {
            Ok(i) => self.probs[i],
            Err(_) => 0.0,
        }
    }

    pub fn max_value(&self) -> u64 {
        *self.support.last().expect("validated law is non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.pairs().map(|(k, w)| k as f64 * w).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.pairs().map(|(k, w)| (k as f64) * (k as f64) * w).sum()
    }

    /// `P(Y > k)`.
    pub fn survival(&self, k: u64) -> f64 {
        self.pairs().filter(|&(v, _)| v > k).map(|(_, w)| w).sum()
    }

    /// `E[z^Y]`.
    pub fn pgf(&self, z: f64) -> f64 {
        self.pairs().map(|(k, w)| w * z.powi(k as i32)).sum()
    }

    /// `E[e^{-z Y}]`.
    pub fn exp_transform(&self, z: f64) -> f64 {
        self.pairs().map(|(k, w)| w * (-z * k as f64).exp()).sum()
    }

    pub fn to_pmf(&self) -> Pmf {
        let pairs: Vec<(i64, f64)> = self.pairs().map(|(k, w)| (k as i64, w)).collect();
        Pmf::from_pairs(&pairs).expect("validated claim law is a valid pmf")
    }
}

/// Joint law of the claim pair `(Y3, Y4)` paid out on a common shock.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShockJointLaw {
    atoms: Vec<((u64, u64), f64)>,
}

impl ShockJointLaw {
    pub fn new(atoms: &[(u64, u64, f64)]) -> Result<ShockJointLaw, ModelError> {
        let mut sorted: Vec<((u64, u64), f64)> =
            atoms.iter().map(|&(k3, k4, w)| ((k3, k4), w)).collect();
        sorted.sort_by_key(|&(pair, _)| pair);
        let law = ShockJointLaw { atoms: sorted };
        let violations = law.violations();
        if violations.is_empty() {
            Ok(law)
        } else {
            Err(ModelError { violations })
        }
    }

    /// Point mass at `(k3, k4)`.
    pub fn constant(k3: u64, k4: u64) -> Result<ShockJointLaw, ModelError> {
        ShockJointLaw::new(&[(k3, k4, 1.0)])
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.atoms.is_empty() {
            v.push("shock_joint: empty support".to_string());
            return v;
        }
        for &((k3, k4), w) in &self.atoms {
            if k3 < 1 || k4 < 1 {
                v.push(format!("shock_joint: claim sizes must be >= 1, found ({k3}, {k4})"));
            }
            if k3 > MAX_CLAIM_SIZE || k4 > MAX_CLAIM_SIZE {
                v.push(format!(
                    "shock_joint: claim sizes ({k3}, {k4}) exceed the cap {MAX_CLAIM_SIZE}"
                ));
            }
            if !w.is_finite() || w <= 0.0 {
                v.push(format!("shock_joint: weight {w} at ({k3}, {k4}) must be positive"));
            }
        }
        for pair in self.atoms.windows(2) {
            if pair[0].0 == pair[1].0 {
                v.push(format!("shock_joint: duplicate atom {:?}", pair[0].0));
            }
        }
        let total: f64 = self.atoms.iter().map(|&(_, w)| w).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            v.push(format!(
                "shock_joint: weights sum to {total}, outside 1 +/- {WEIGHT_SUM_TOL} (renormalization refused)"
            ));
        }
        v
    }

    pub fn atoms(&self) -> impl Iterator<Item = (u64, u64, f64)> + '_ {
        self.atoms.iter().map(|&((k3, k4), w)| (k3, k4, w))
    }

    fn marginal(&self, first: bool) -> ClaimLaw {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (k3, k4, w) in self.atoms() {
            *acc.entry(if first { k3 } else { k4 }).or_insert(0.0) += w;
        }
        let pairs: Vec<(u64, f64)> = acc.into_iter().collect();
        ClaimLaw::new(&pairs).expect("marginal of a validated joint law is valid")
    }

    /// Marginal law of the first shock claim `Y3`.
    pub fn marginal3(&self) -> ClaimLaw {
        self.marginal(true)
    }

    /// Marginal law of the second shock claim `Y4`.
    pub fn marginal4(&self) -> ClaimLaw {
        self.marginal(false)
    }

    /// Law of the total shock payout `Y3 + Y4`.
    pub fn sum_law(&self) -> ClaimLaw {
        let mut acc: BTreeMap<u64, f64> = BTreeMap::new();
        for (k3, k4, w) in self.atoms() {
            *acc.entry(k3 + k4).or_insert(0.0) += w;
        }
        let pairs: Vec<(u64, f64)> = acc.into_iter().collect();
        ClaimLaw::new(&pairs).expect("sum law of a validated joint law is valid")
    }

    /// `E[Y3 * Y4]`.
    pub fn cross_moment(&self) -> f64 {
        self.atoms().map(|(k3, k4, w)| (k3 as f64) * (k4 as f64) * w).sum()
    }

    /// `E[e^{-z3 Y3 - z4 Y4}]`.
    pub fn exp_transform(&self, z3: f64, z4: f64) -> f64 {
        self.atoms().map(|(k3, k4, w)| w * (-z3 * k3 as f64 - z4 * k4 as f64).exp()).sum()
    }

    /// Whether the joint law factorizes into its marginals
    /// (total-variation distance below `tol`).
    pub fn is_product_law(&self, tol: f64) -> bool {
        let m3 = self.marginal3();
        let m4 = self.marginal4();
        let mut tv = 0.0;
        for (k3, w3) in m3.pairs() {
            for (k4, w4) in m4.pairs() {
                let joint = self
                    .atoms
                    .binary_search_by_key(&(k3, k4), |&(pair, _)| pair)
                    .map(|i| self.atoms[i].1)
                    .unwrap_or(0.0);
                tv += (joint - w3 * w4).abs();
            }
        }
        0.5 * tv < tol
    }
}

/// A fully validated model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSpec {
    shock: ShockParams,
    law1: ClaimLaw,
    law2: ClaimLaw,
    shock_joint: ShockJointLaw,
}

/// Derived scalar summary of a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelSummary {
    /// Mean claim per event, `mu`.
    pub mu: f64,
    /// Mean claim per period, `p * mu`; premiums are 1 per period.
    pub p_mu: f64,
    /// Relative premium margin `1/(p mu) - 1`.
    pub safety_loading: f64,
    /// `p * mu < 1`: ruin is avoidable.
    pub net_profit_holds: bool,
}

impl ModelSpec {
    pub fn new(
        shock: ShockParams,
        law1: ClaimLaw,
        law2: ClaimLaw,
        shock_joint: ShockJointLaw,
    ) -> ModelSpec {
        // Parts are individually validated on construction; composing them
        // introduces no further constraints.
        ModelSpec { shock, law1, law2, shock_joint }
    }

    pub fn shock(&self) -> &ShockParams {
        &self.shock
    }

    /// Claim law of a stand-alone type-1 event.
    pub fn law1(&self) -> &ClaimLaw {
        &self.law1
    }

    /// Claim law of a stand-alone type-2 event.
    pub fn law2(&self) -> &ClaimLaw {
        &self.law2
    }

    pub fn shock_joint(&self) -> &ShockJointLaw {
        &self.shock_joint
    }

    /// Law of the claim paid on an arbitrary event: the `(p1, p0, p2)/p`
    /// mixture of the type-1 law, the shock total `Y3 + Y4`, and the
    /// type-2 law. Support starts at 1 and the law is proper.
    pub fn per_event_claim_law(&self) -> Pmf {
        let p = self.shock.p();
        let law1 = self.law1.to_pmf();
        let law2 = self.law2.to_pmf();
        let sum34 = self.shock_joint.sum_law().to_pmf();
        Pmf::mixture(&[
            (self.shock.p1 / p, &law1),
            (self.shock.p0 / p, &sum34),
            (self.shock.p2 / p, &law2),
        ])
        .expect("mixture of proper claim laws is proper")
    }

    /// Law of one increment of the surplus walk, claim minus the unit
    /// premium: mass `1 - p` at -1 and `p * P(claim = k+1)` at `k >= 0`.
    pub fn per_period_step_law(&self) -> Pmf {
        let p = self.shock.p();
        let event = self.per_event_claim_law();
        // step values run from -1 (quiet) to max claim - 1
        let mut weights = vec![0.0; event.support_max() as usize + 1];
        weights[0] = 1.0 - p;
        for (k, w) in event.iter() {
            weights[k as usize] = p * w;
        }
        Pmf::new(-1, weights).expect("step law is proper")
    }

    /// Law of the claim paid in one period (zero on quiet periods);
    /// the step law shifted by the unit premium.
    pub fn per_period_claim_law(&self) -> Pmf {
        self.per_period_step_law().shift(1)
    }

    /// Mean claim sizes, loading and the net profit condition.
    pub fn summary(&self) -> ModelSummary {
        let p = self.shock.p();
        let mu = (self.shock.p1 * self.law1.mean()
            + self.shock.p2 * self.law2.mean()
            + self.shock.p0 * (self.shock_joint.marginal3().mean() + self.shock_joint.marginal4().mean()))
            / p;
        let p_mu = p * mu;
        ModelSummary {
            mu,
            p_mu,
            safety_loading: 1.0 / p_mu - 1.0,
            net_profit_holds: p_mu < 1.0,
        }
    }

    /// Largest claim payable on a single event.
    pub fn max_event_claim(&self) -> u64 {
        let shock_max = self
            .shock_joint
            .atoms()
            .map(|(k3, k4, _)| k3 + k4)
            .max()
            .expect("validated joint law is non-empty");
        self.law1.max_value().max(self.law2.max_value()).max(shock_max)
    }
}

// ── Model file I/O ────────────────────────────────────────────────────────

/// On-disk schema: probabilities, claim maps keyed by claim size, and the
/// shock pair as `[k3, k4, prob]` rows.
#[derive(Debug, Deserialize)]
struct ModelFile {
    p0: f64,
    p1: f64,
    p2: f64,
    type1: BTreeMap<String, f64>,
    type2: BTreeMap<String, f64>,
    shock_joint: Vec<(u64, u64, f64)>,
}

fn claim_pairs(field: &str, map: &BTreeMap<String, f64>, violations: &mut Vec<String>) -> Vec<(u64, f64)> {
    let mut pairs = Vec::with_capacity(map.len());
    for (key, &w) in map {
        match key.parse::<u64>() {
            Ok(k) => pairs.push((k, w)),
            Err(_) => violations.push(format!("{field}: claim size key {key:?} is not a non-negative integer")),
        }
    }
    pairs
}

/// Parse and validate a model document, collecting every violation.
pub fn parse_model(json: &str) -> Result<ModelSpec, ModelError> {
    let file: ModelFile =
        serde_json::from_str(json).map_err(|e| ModelError::single(format!("model file: {e}")))?;

    let mut violations = Vec::new();
    let shock = match ShockParams::new(file.p0, file.p1, file.p2) {
        Ok(s) => Some(s),
        Err(e) => {
            violations.extend(e.violations);
            None
        }
    };
    let pairs1 = claim_pairs("type1", &file.type1, &mut violations);
    let law1 = match ClaimLaw::new(&pairs1) {
        Ok(l) => Some(l),
        Err(e) => {
            violations.extend(e.violations.into_iter().map(|v| v.replace("claim law", "type1")));
            None
        }
    };
    let pairs2 = claim_pairs("type2", &file.type2, &mut violations);
    let law2 = match ClaimLaw::new(&pairs2) {
        Ok(l) => Some(l),
        Err(e) => {
            violations.extend(e.violations.into_iter().map(|v| v.replace("claim law", "type2")));
            None
        }
    };
    let joint = match ShockJointLaw::new(&file.shock_joint) {
        Ok(j) => Some(j),
        Err(e) => {
            violations.extend(e.violations);
            None
        }
    };

    match (shock, law1, law2, joint) {
        (Some(s), Some(l1), Some(l2), Some(j)) if violations.is_empty() => {
            Ok(ModelSpec::new(s, l1, l2, j))
        }
        _ => Err(ModelError { violations }),
    }
}

/// Canonical JSON echo of a parsed model: same schema as the input file,
/// numbers round-tripped exactly, keys in a fixed order.
pub fn model_to_canonical_json(model: &ModelSpec) -> String {
    fn claim_map(law: &ClaimLaw) -> serde_json::Map<String, serde_json::Value> {
        let mut map = serde_json::Map::new();
        for (k, w) in law.pairs() {
            map.insert(k.to_string(), serde_json::json!(w));
        }
        map
    }
    let atoms: Vec<serde_json::Value> = model
        .shock_joint()
        .atoms()
        .map(|(k3, k4, w)| serde_json::json!([k3, k4, w]))
        .collect();
    let doc = serde_json::json!({
        "p0": model.shock().p0(),
        "p1": model.shock().p1(),
        "p2": model.shock().p2(),
        "type1": claim_map(model.law1()),
        "type2": claim_map(model.law2()),
        "shock_joint": atoms,
    });
    serde_json::to_string_pretty(&doc).expect("model serialization cannot fail")
}
