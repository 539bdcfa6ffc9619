//! Dense probability mass functions over a contiguous integer range.
//!
//! Every law in this crate (per-event claims, the step law of the surplus
//! walk, aggregate claims, ladder heights, deficits) is finite and integer
//! valued, so a dense weight vector anchored at its smallest support point
//! is both exact and fast to convolve.

use std::fmt;

/// Finite p.m.f. over the integers `offset, offset+1, ...`.
///
/// Sub-probability ("defective") vectors are allowed: the unconditional
/// deficit law carries total mass `psi(0) < 1`, and truncated compound
/// laws carry the mass of the kept support. Proper laws can be asserted
/// with [`Pmf::is_proper`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    offset: i64,
    weights: Vec<f64>,
}

/// Rejected weight vector.
#[derive(Debug, Clone, PartialEq)]
pub enum PmfError {
    NegativeWeight { index: usize, weight: f64 },
    MassExceedsOne { total: f64 },
    Empty,
}

impl fmt::Display for PmfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PmfError::NegativeWeight { index, weight } => {
                write!(f, "weight at index {index} is negative ({weight})")
            }
            PmfError::MassExceedsOne { total } => {
                write!(f, "total mass {total} exceeds 1")
            }
            PmfError::Empty => write!(f, "empty weight vector"),
        }
    }
}

impl std::error::Error for PmfError {}

/// Tolerance on the total-mass upper bound.
pub const MASS_TOL: f64 = 1e-12;

impl Pmf {
    /// Build a p.m.f. from dense weights starting at `offset`.
    pub fn new(offset: i64, weights: Vec<f64>) -> Result<Pmf, PmfError> {
        if weights.is_empty() {
            return Err(PmfError::Empty);
        }
        for (index, &weight) in weights.iter().enumerate() {
            if weight < 0.0 || !weight.is_finite() {
                return Err(PmfError::NegativeWeight { index, weight });
            }
        }
        let total: f64 = weights.iter().sum();
        if total > 1.0 + MASS_TOL {
            return Err(PmfError::MassExceedsOne { total });
        }
        Ok(Pmf { offset, weights })
    }

    /// Point mass at `k`.
    pub fn point_mass(k: i64) -> Pmf {
        Pmf { offset: k, weights: vec![1.0] }
    }

    /// Build from sparse `(value, weight)` pairs; gaps are filled with zeros.
    pub fn from_pairs(pairs: &[(i64, f64)]) -> Result<Pmf, PmfError> {
        if pairs.is_empty() {
            return Err(PmfError::Empty);
        }
        let lo = pairs.iter().map(|&(k, _)| k).min().unwrap();
        let hi = pairs.iter().map(|&(k, _)| k).max().unwrap();
        let mut weights = vec![0.0; (hi - lo + 1) as usize];
        for &(k, w) in pairs {
            weights[(k - lo) as usize] += w;
        }
        Pmf::new(lo, weights)
    }

    /// Mixture `sum_i weight_i * component_i`. Weights need not sum to 1;
    /// a deficient mixture yields a defective law. Zero-weight components
    /// do not widen the stored range.
    pub fn mixture(parts: &[(f64, &Pmf)]) -> Result<Pmf, PmfError> {
        let live: Vec<(f64, &Pmf)> = parts.iter().copied().filter(|&(w, _)| w != 0.0).collect();
        if live.is_empty() {
            return Err(PmfError::Empty);
        }
        let lo = live.iter().map(|(_, p)| p.offset).min().unwrap();
        let hi = live.iter().map(|(_, p)| p.support_max()).max().unwrap();
        let mut weights = vec![0.0; (hi - lo + 1) as usize];
        for &(mix_w, pmf) in &live {
            for (k, w) in pmf.iter() {
                weights[(k - lo) as usize] += mix_w * w;
            }
        }
        Pmf::new(lo, weights)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// Largest point of the stored range (weights there may be zero).
    pub fn support_max(&self) -> i64 {
        self.offset + self.weights.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Iterate `(value, weight)` over the stored range.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.offset + i as i64, w))
    }

    /// `P(X = k)`; zero outside the stored range.
    pub fn prob(&self, k: i64) -> f64 {
        if k < self.offset {
            return 0.0;
        }
        let i = (k - self.offset) as usize;
        self.weights.get(i).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_proper(&self, tol: f64) -> bool {
        (self.total_mass() - 1.0).abs() <= tol
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, w)| k as f64 * w).sum()
    }

    pub fn second_moment(&self) -> f64 {
        self.iter().map(|(k, w)| (k as f64) * (k as f64) * w).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.second_moment() - m * m
    }

    /// `P(X <= k)`.
    pub fn cdf(&self, k: i64) -> f64 {
        self.iter().take_while(|&(v, _)| v <= k).map(|(_, w)| w).sum()
    }

    /// `P(X > k)`.
    pub fn survival(&self, k: i64) -> f64 {
        self.iter().skip_while(|&(v, _)| v <= k).map(|(_, w)| w).sum()
    }

    /// `E[z^X]`. Requires `z > 0` when the offset is negative.
    pub fn pgf(&self, z: f64) -> f64 {
        self.iter().map(|(k, w)| w * z.powi(k as i32)).sum()
    }

    /// `E[e^{-z X}]`.
    pub fn exp_transform(&self, z: f64) -> f64 {
        self.iter().map(|(k, w)| w * (-z * k as f64).exp()).sum()
    }

    /// Translate the support by `delta`.
    pub fn shift(&self, delta: i64) -> Pmf {
        Pmf { offset: self.offset + delta, weights: self.weights.clone() }
    }

    /// Exact dense convolution (law of the independent sum).
    pub fn convolve(&self, other: &Pmf) -> Pmf {
        let mut weights = vec![0.0; self.weights.len() + other.weights.len() - 1];
        for (i, &a) in self.weights.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.weights.iter().enumerate() {
                weights[i + j] += a * b;
            }
        }
        Pmf { offset: self.offset + other.offset, weights }
    }

    /// Convolution truncated to values `<= max_value`. Exact on the kept
    /// range; the discarded upper tail is simply not stored.
    pub fn convolve_truncated(&self, other: &Pmf, max_value: i64) -> Pmf {
        let offset = self.offset + other.offset;
        let full_len = self.weights.len() + other.weights.len() - 1;
        let keep = ((max_value - offset + 1).max(0) as usize).min(full_len);
        let mut weights = vec![0.0; keep.max(1)];
        for (i, &a) in self.weights.iter().enumerate() {
            if a == 0.0 || i >= keep {
                continue;
            }
            for (j, &b) in other.weights.iter().enumerate() {
                if i + j >= keep {
                    break;
                }
                weights[i + j] += a * b;
            }
        }
        Pmf { offset, weights }
    }

    /// `n`-fold convolution power; `n = 0` is the point mass at 0.
    pub fn convolve_power(&self, n: usize) -> Pmf {
        let mut acc = Pmf::point_mass(0);
        for _ in 0..n {
            acc = acc.convolve(self);
        }
        acc
    }

    /// Largest absolute pointwise difference over the union of ranges.
    pub fn max_abs_diff(&self, other: &Pmf) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.support_max().max(other.support_max());
        let mut worst = 0.0f64;
        for k in lo..=hi {
            worst = worst.max((self.prob(k) - other.prob(k)).abs());
        }
        worst
    }

    /// Total-variation distance `0.5 * sum |p - q|` over the union of ranges.
    pub fn tv_distance(&self, other: &Pmf) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = self.support_max().max(other.support_max());
        0.5 * (lo..=hi).map(|k| (self.prob(k) - other.prob(k)).abs()).sum::<f64>()
    }
}
