//! The `verify` subcommand: every exact identity the engine promises,
//! checked against an independent route on the loaded model, plus seeded
//! Monte Carlo calibration. One line per check; nonzero exit on failure.

use ruinlab_core::aggregate;
use ruinlab_core::counting;
use ruinlab_core::model::ModelSpec;
use ruinlab_core::pmf::Pmf;
use ruinlab_core::ruin::{self, GeometricVariant};
use ruinlab_core::simulate::{self, SimConfig};

pub struct Check {
    pub name: &'static str,
    pub outcome: Outcome,
    pub detail: String,
}

pub enum Outcome {
    Pass,
    Fail,
    Skip,
}

fn pass(name: &'static str, detail: String) -> Check {
    Check { name, outcome: Outcome::Pass, detail }
}

fn fail(name: &'static str, detail: String) -> Check {
    Check { name, outcome: Outcome::Fail, detail }
}

fn skip(name: &'static str, detail: String) -> Check {
    Check { name, outcome: Outcome::Skip, detail }
}

fn gate(name: &'static str, worst: f64, tol: f64) -> Check {
    let detail = format!("max_err={worst:.3e} tol={tol:.1e}");
    if worst < tol {
        pass(name, detail)
    } else {
        fail(name, detail)
    }
}

/// MC thresholds are slightly wider than the 4-sigma analysis level so an
/// arbitrary user seed virtually never trips them; the acceptance suite
/// pins its own seed and applies the strict levels.
const MC_MAX_Z: f64 = 5.0;
const MC_MIN_P: f64 = 1e-6;

fn enumeration_check(model: &ModelSpec) -> Check {
    let mut worst = 0.0f64;
    for t in 0..=6usize {
        let law = match counting::joint_pmf(model, t) {
            Ok(law) => law,
            Err(e) => return skip("counting_enumeration", e.to_string()),
        };
        let mut oracle = vec![vec![0.0; t + 1]; t + 1];
        for b0 in 0..=t {
            for b1 in 0..=(t - b0) {
                for b2 in 0..=(t - b0 - b1) {
                    oracle[b1 + b0][b2 + b0] +=
                        counting::multinomial_pmf(model.shock(), t, b0, b1, b2);
                }
            }
        }
        for m1 in 0..=t {
            for m2 in 0..=t {
                worst = worst.max((law.prob(m1, m2) - oracle[m1][m2]).abs());
            }
        }
    }
    gate("counting_enumeration", worst, 1e-12)
}

fn moment_check(model: &ModelSpec) -> Check {
    let mut worst = 0.0f64;
    let t = 8;
    let closed = counting::moments(model, t);
    let table = match counting::joint_pmf(model, t) {
        Ok(law) => law.moments_from_table(),
        Err(e) => return skip("moment_formulas", e.to_string()),
    };
    for (a, b) in [
        (closed.mean1, table.mean1),
        (closed.mean2, table.mean2),
        (closed.var1, table.var1),
        (closed.var2, table.var2),
        (closed.cross, table.cross),
        (closed.cov, table.cov),
    ] {
        worst = worst.max((a - b).abs());
    }
    let t = 10;
    let claims = aggregate::claims_moments(model, t);
    let law = match aggregate::total_claim_pmf(model, t) {
        Ok(law) => law,
        // dense references cap out on huge claim supports; nothing to test
        Err(e) => return skip("moment_formulas", e.to_string()),
    };
    worst = worst.max((law.mean() - claims.mean_s).abs());
    worst = worst.max((law.variance() - claims.var_s).abs());
    let bivariate = match aggregate::bivariate_claim_pmf(model, t) {
        Ok(law) => law.moments_from_table(),
        Err(e) => return skip("moment_formulas", e.to_string()),
    };
    for (a, b) in [
        (bivariate.mean_s1, claims.mean_s1),
        (bivariate.var_s1, claims.var_s1),
        (bivariate.cross, claims.cross),
        (bivariate.cov, claims.cov),
    ] {
        worst = worst.max((a - b).abs());
    }
    gate("moment_formulas", worst, 1e-9)
}

fn representation_check(model: &ModelSpec) -> Check {
    if !model.summary().net_profit_holds {
        return skip("representation_equality", "net profit condition fails".into());
    }
    let len = 60;
    let a = ruin::geometric_representation(model, GeometricVariant::A).unwrap().compound_pmf(len);
    let series = ruin::max_law_series(model, len).unwrap();
    let mut worst = a.max_abs_diff(&series);
    if ruin::ladder_law(model).is_some() {
        let b = ruin::geometric_representation(model, GeometricVariant::B).unwrap().compound_pmf(len);
        worst = worst.max(a.max_abs_diff(&b));
    }
    let curve = ruin::beekman_survival(model, 20, 1e-14).unwrap();
    let mut prev = 0.0;
    for point in &curve.points {
        worst = worst.max((point.delta - prev - a.prob(point.u as i64)).abs());
        prev = point.delta;
    }
    gate("representation_equality", worst, 1e-8)
}

fn dp_check(model: &ModelSpec) -> Check {
    if !model.summary().net_profit_holds {
        return skip("dp_vs_series", "net profit condition fails".into());
    }
    let curve = ruin::beekman_survival(model, 5, 1e-14).unwrap();
    let mut worst = 0.0f64;
    for u in 0..=5u64 {
        match ruin::finite_horizon_ruin(model, u, 2000) {
            Ok(dp) => worst = worst.max((dp - curve.points[u as usize].psi).abs()),
            Err(e) => return fail("dp_vs_series", e.to_string()),
        }
    }
    gate("dp_vs_series", worst, 1e-8)
}

fn lundberg_check(model: &ModelSpec) -> Check {
    if !model.summary().net_profit_holds {
        return skip("lundberg", "net profit condition fails".into());
    }
    match ruin::adjustment_coefficient(model).unwrap() {
        None => {
            let curve = ruin::beekman_survival(model, 10, 1e-12).unwrap();
            let worst = curve.points.iter().map(|p| p.psi).fold(0.0f64, f64::max);
            gate("lundberg", worst, 1e-15)
        }
        Some(adj) => {
            let step = model.per_period_step_law();
            let mut worst = (step.pgf(adj.z_star) - 1.0).abs().max(adj.residual);
            let curve = ruin::beekman_survival(model, 50, 1e-12).unwrap();
            for point in &curve.points {
                let excess = point.psi - adj.z_star.powi(-(point.u as i32));
                worst = worst.max(excess.max(0.0));
            }
            gate("lundberg", worst, 1e-12)
        }
    }
}

fn deficit_check(model: &ModelSpec) -> Check {
    if !model.summary().net_profit_holds {
        return skip("deficit_reconciliation", "net profit condition fails".into());
    }
    let report = ruin::deficit_laws(model, 64).unwrap();
    if !report.ruin_possible {
        return skip("deficit_reconciliation", "ruin impossible (every claim is 1)".into());
    }
    let rec = &report.reconciled;
    let mut worst = rec.recursion_max_abs_diff;
    worst = worst.max((rec.unconditional_total - report.psi_zero).abs());
    for (c, u) in rec.conditional_lambda.iter().zip(&rec.unconditional_lambda) {
        worst = worst.max((c - u / report.psi_zero).abs());
    }
    worst = worst.max((rec.mean_deficit - rec.mean_deficit_closed_form).abs());
    for sample in &report.pgf_samples {
        worst = worst.max((sample.series - sample.closed_form).abs());
    }
    gate("deficit_reconciliation", worst, 1e-9)
}

fn thinning_check(model: &ModelSpec) -> Check {
    let unit = Pmf::point_mass(1);
    let canonical = match ruin::thinning_equivalence(&unit, 0.5, 1.5, 128) {
        Ok(check) => check.max_abs_diff,
        Err(e) => return fail("thinning_equivalence", e.to_string()),
    };
    let event = model.per_event_claim_law();
    let from_model = match ruin::thinning_equivalence(&event, 0.5, 1.5, 256) {
        Ok(check) => check.max_abs_diff,
        Err(e) => return fail("thinning_equivalence", e.to_string()),
    };
    gate("thinning_equivalence", canonical.max(from_model), 1e-10)
}

fn mc_moments_check(model: &ModelSpec, seed: u64, paths: u64, threads: usize) -> Check {
    let t = 8u32;
    let cfg = SimConfig::new(seed, paths, t, 0).unwrap();
    let summary = simulate::sample_paths(model, &cfg, threads);
    let counts = counting::moments(model, t as usize);
    let claims = aggregate::claims_moments(model, t as usize);
    let expectations = [
        ("mean_m1", counts.mean1),
        ("mean_m2", counts.mean2),
        ("mean_m1m2", counts.cross),
        ("mean_s1", claims.mean_s1),
        ("mean_s2", claims.mean_s2),
        ("mean_s1s2", claims.cross),
        ("mean_s", claims.mean_s),
    ];
    let mut worst_z = 0.0f64;
    for (name, exact) in expectations {
        let stat = summary.statistics.iter().find(|s| s.name == name).unwrap();
        if stat.std_error > 0.0 {
            worst_z = worst_z.max((stat.estimate - exact).abs() / stat.std_error);
        }
    }
    let detail = format!("max_z={worst_z:.2} limit={MC_MAX_Z}");
    if worst_z < MC_MAX_Z {
        pass("mc_moments", detail)
    } else {
        fail("mc_moments", detail)
    }
}

fn mc_equivalence_check(model: &ModelSpec, seed: u64, paths: u64, threads: usize) -> Check {
    let cfg = SimConfig::new(seed, paths, 5, 0).unwrap();
    let include_independent = model.shock_joint().is_product_law(1e-12);
    let summary = match simulate::equivalence_report(model, 5, &cfg, include_independent, threads) {
        Ok(s) => s,
        Err(e @ simulate::SimError::AnalyticUnavailable(_))
        | Err(e @ simulate::SimError::TableTooLarge { .. }) => {
            return skip("mc_equivalence", e.to_string())
        }
        Err(e) => return fail("mc_equivalence", e.to_string()),
    };
    let mut worst_p = 1.0f64;
    for cmp in &summary.comparisons {
        if let Some(chi2) = cmp.chi_square {
            worst_p = worst_p.min(chi2.p_value);
        }
    }
    let detail = format!("min_p={worst_p:.2e} level={MC_MIN_P:.0e}");
    if worst_p > MC_MIN_P {
        pass("mc_equivalence", detail)
    } else {
        fail("mc_equivalence", detail)
    }
}

fn mc_ruin_check(model: &ModelSpec, seed: u64, paths: u64, threads: usize) -> Check {
    if !model.summary().net_profit_holds {
        return skip("mc_ruin", "net profit condition fails".into());
    }
    let cfg = SimConfig::new(seed, paths, 300, 0).unwrap();
    let summary = simulate::estimate_ruin(model, &cfg, threads).unwrap();
    let exact = 1.0 - ruin::survival_at_zero(model).unwrap();
    let psi = &summary.statistics[0];
    let mut worst_z = if psi.std_error > 0.0 {
        (psi.estimate - exact).abs() / psi.std_error
    } else {
        // every claim is 1: the estimate must be exactly zero
        if psi.estimate == 0.0 && exact == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    if let Ok(report) = ruin::deficit_laws(model, 64) {
        if report.ruin_possible {
            let hist = summary.histograms.iter().find(|h| h.name == "deficit_given_ruin").unwrap();
            if hist.n > 0 {
                let n = hist.n as f64;
                for (i, &count) in hist.counts.iter().enumerate() {
                    let p = report.reconciled.conditional_lambda.get(i).copied().unwrap_or(0.0);
                    if p * n >= 10.0 && p < 1.0 {
                        let se = (p * (1.0 - p) / n).sqrt();
                        worst_z = worst_z.max((count as f64 / n - p).abs() / se);
                    }
                }
            }
        }
    }
    let detail = format!("max_z={worst_z:.2} limit={MC_MAX_Z}");
    if worst_z < MC_MAX_Z {
        pass("mc_ruin", detail)
    } else {
        fail("mc_ruin", detail)
    }
}

fn mc_thinning_check(model: &ModelSpec, seed: u64, paths: u64, threads: usize) -> Check {
    let cfg = SimConfig::new(seed, paths, 1, 0).unwrap();
    let event = model.per_event_claim_law();
    let (summary, exact) = match simulate::thinning_mc_check(&event, 0.5, 1.5, &cfg, threads) {
        Ok(r) => r,
        Err(e) => return fail("mc_thinning", e.to_string()),
    };
    if exact.max_abs_diff >= 1e-10 {
        return fail("mc_thinning", format!("exact sides differ by {:.3e}", exact.max_abs_diff));
    }
    let mut worst_p = 1.0f64;
    let mut worst_z = 0.0f64;
    for cmp in &summary.comparisons {
        if let Some(chi2) = cmp.chi_square {
            worst_p = worst_p.min(chi2.p_value);
        }
        worst_z = worst_z.max(cmp.max_abs_z);
    }
    let detail = format!("min_p={worst_p:.2e} max_z={worst_z:.2}");
    if worst_p > MC_MIN_P && worst_z < MC_MAX_Z {
        pass("mc_thinning", detail)
    } else {
        fail("mc_thinning", detail)
    }
}

/// Run the whole suite; returns the checks in a fixed order.
pub fn run_suite(model: &ModelSpec, seed: u64, paths: u64, threads: usize) -> Vec<Check> {
    vec![
        enumeration_check(model),
        moment_check(model),
        representation_check(model),
        dp_check(model),
        lundberg_check(model),
        deficit_check(model),
        thinning_check(model),
        mc_moments_check(model, seed, paths, threads),
        mc_equivalence_check(model, seed, paths, threads),
        mc_ruin_check(model, seed, paths, threads),
        mc_thinning_check(model, seed, paths, threads),
    ]
}
