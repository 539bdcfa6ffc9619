//! Acceptance suite: the engine's exit criteria, one test per criterion,
//! each printing a PASS line with its measured margin (run with
//! `cargo test -p ruinlab --test acceptance -- --nocapture` to see them).
//!
//! Every tolerance is pinned here, not configurable.

use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use ruinlab_core::aggregate;
use ruinlab_core::counting;
use ruinlab_core::model::{ClaimLaw, ModelSpec, ShockJointLaw, ShockParams};
use ruinlab_core::pmf::Pmf;
use ruinlab_core::ruin::{self, GeometricVariant};
use ruinlab_core::simulate::{self, PathRng, SimConfig};

fn tm1() -> ModelSpec {
    ModelSpec::new(
        ShockParams::new(0.1, 0.2, 0.2).unwrap(),
        ClaimLaw::new(&[(1, 0.5), (2, 0.5)]).unwrap(),
        ClaimLaw::constant(1).unwrap(),
        ShockJointLaw::constant(1, 1).unwrap(),
    )
}

fn unit_claims_model() -> ModelSpec {
    ModelSpec::new(
        ShockParams::new(0.0, 0.2, 0.2).unwrap(),
        ClaimLaw::constant(1).unwrap(),
        ClaimLaw::constant(1).unwrap(),
        ShockJointLaw::constant(1, 1).unwrap(),
    )
}

// ── randomized model generation (seeded) ────────────────────────────────────

fn pick_distinct(rng: &mut PathRng, count: usize, max: u64) -> Vec<u64> {
    let mut values = Vec::new();
    while values.len() < count {
        let v = 1 + rng.next_u64() % max;
        if !values.contains(&v) {
            values.push(v);
        }
    }
    values.sort_unstable();
    values
}

fn random_claim_law(rng: &mut PathRng, max_value: u64) -> ClaimLaw {
    let atoms = 1 + (rng.next_u64() % 3) as usize;
    let values = pick_distinct(rng, atoms.min(max_value as usize), max_value);
    let raw: Vec<u64> = values.iter().map(|_| 1 + rng.next_u64() % 9).collect();
    let total: u64 = raw.iter().sum();
    let pairs: Vec<(u64, f64)> =
        values.into_iter().zip(raw).map(|(v, w)| (v, w as f64 / total as f64)).collect();
    ClaimLaw::new(&pairs).unwrap()
}

fn random_joint(rng: &mut PathRng, max_value: u64) -> ShockJointLaw {
    let atoms = 1 + (rng.next_u64() % 3) as usize;
    let mut triples: Vec<(u64, u64, f64)> = Vec::new();
    let mut raw = Vec::new();
    while triples.len() < atoms {
        let k3 = 1 + rng.next_u64() % max_value;
        let k4 = 1 + rng.next_u64() % max_value;
        if triples.iter().any(|&(a, b, _)| (a, b) == (k3, k4)) {
            continue;
        }
        triples.push((k3, k4, 0.0));
        raw.push(1 + rng.next_u64() % 9);
    }
    let total: u64 = raw.iter().sum();
    for (t, w) in triples.iter_mut().zip(raw) {
        t.2 = w as f64 / total as f64;
    }
    ShockJointLaw::new(&triples).unwrap()
}

fn random_model(rng: &mut PathRng) -> ModelSpec {
    loop {
        let p0 = if rng.next_f64() < 0.25 { 0.0 } else { 0.02 + 0.18 * rng.next_f64() };
        let p1 = 0.05 + 0.25 * rng.next_f64();
        let p2 = 0.05 + 0.25 * rng.next_f64();
        if p0 + p1 + p2 > 0.7 {
            continue;
        }
        let shock = ShockParams::new(p0, p1, p2).unwrap();
        return ModelSpec::new(
            shock,
            random_claim_law(rng, 4),
            random_claim_law(rng, 4),
            random_joint(rng, 3),
        );
    }
}

fn random_net_profit_model(rng: &mut PathRng) -> ModelSpec {
    loop {
        let m = random_model(rng);
        if m.summary().p_mu <= 0.85 && m.max_event_claim() >= 2 {
            return m;
        }
    }
}

// ── criteria ────────────────────────────────────────────────────────────────

#[test]
fn acceptance_01_counting_exactness() {
    let start = Instant::now();
    let mut rng = PathRng::for_path(20_01, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let model = random_model(&mut rng);
        for t in 0..=8usize {
            let law = counting::joint_pmf(&model, t).unwrap();
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
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-12, "max error {worst:.3e} >= 1e-12");
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}, budget 5 s");
    println!(
        "PASS  1 counting exactness: 50 models, t<=8, max_err={worst:.3e} ({:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_02_equal_quarters_independence() {
    let model = ModelSpec::new(
        ShockParams::new(0.25, 0.25, 0.25).unwrap(),
        ClaimLaw::constant(1).unwrap(),
        ClaimLaw::constant(1).unwrap(),
        ShockJointLaw::constant(1, 1).unwrap(),
    );
    for t in 1..=10 {
        let m = counting::moments(&model, t);
        assert_eq!(m.cov, 0.0, "cov at t={t} is {}", m.cov);
    }
    println!("PASS  2 equal-quarters model: cov(M1,M2) identically 0 for t=1..=10");
}

#[test]
fn acceptance_03_moment_formulas() {
    let mut rng = PathRng::for_path(20_03, 0, 0);
    let mut worst = 0.0f64;
    let mut worst_cor = 0.0f64;
    for trial in 0..50 {
        let model = random_model(&mut rng);
        let t = 1 + (rng.next_u64() % 20) as usize;
        let closed = aggregate::claims_moments(&model, t);

        let total = aggregate::total_claim_pmf(&model, t).unwrap();
        worst = worst.max((total.mean() - closed.mean_s).abs());
        worst = worst.max((total.variance() - closed.var_s).abs());

        let table = aggregate::bivariate_claim_pmf(&model, t).unwrap().moments_from_table();
        for (a, b) in [
            (table.mean_s1, closed.mean_s1),
            (table.mean_s2, closed.mean_s2),
            (table.var_s1, closed.var_s1),
            (table.var_s2, closed.var_s2),
            (table.cross, closed.cross),
            (table.cov, closed.cov),
        ] {
            worst = worst.max((a - b).abs());
        }
        let cor1 = aggregate::claims_moments(&model, 1).cor;
        for h in [2usize, 5, 10] {
            worst_cor = worst_cor.max((aggregate::claims_moments(&model, h).cor - cor1).abs());
        }
        assert!(worst < 1e-9, "trial {trial}: max moment error {worst:.3e}");
    }
    assert!(worst_cor < 1e-12, "correlation drifts with the horizon: {worst_cor:.3e}");
    println!("PASS  3 moment formulas: 50 models, max_err={worst:.3e}, cor drift={worst_cor:.3e}");
}

#[test]
fn acceptance_04_representation_equality() {
    let mut rng = PathRng::for_path(20_04, 0, 0);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let model = random_net_profit_model(&mut rng);
        let len = 60;
        let a = ruin::geometric_representation(&model, GeometricVariant::A)
            .unwrap()
            .compound_pmf(len);
        let series = ruin::max_law_series(&model, len).unwrap();
        worst = worst.max(a.max_abs_diff(&series));
        if ruin::ladder_law(&model).is_some() {
            let b = ruin::geometric_representation(&model, GeometricVariant::B)
                .unwrap()
                .compound_pmf(len);
            worst = worst.max(a.max_abs_diff(&b));
        }
    }
    assert!(worst < 1e-8, "representations disagree by {worst:.3e}");

    // closed form on the reference model: P(M = u) = 0.6 * 0.4^u
    let reference = tm1();
    let mut worst_ref = 0.0f64;
    for rep in [
        ruin::geometric_representation(&reference, GeometricVariant::A).unwrap(),
        ruin::geometric_representation(&reference, GeometricVariant::B).unwrap(),
    ] {
        let law = rep.compound_pmf(40);
        for u in 0..40 {
            worst_ref = worst_ref.max((law.prob(u) - 0.6 * 0.4f64.powi(u as i32)).abs());
        }
    }
    let series = ruin::max_law_series(&reference, 40).unwrap();
    for u in 0..40 {
        worst_ref = worst_ref.max((series.prob(u) - 0.6 * 0.4f64.powi(u as i32)).abs());
    }
    assert!(worst_ref < 1e-10, "reference-model closed form off by {worst_ref:.3e}");
    println!(
        "PASS  4 representation equality: 20 models max_err={worst:.3e}, reference closed form max_err={worst_ref:.3e}"
    );
}

#[test]
fn acceptance_05_dp_vs_beekman() {
    let start = Instant::now();
    let model = tm1();
    let curve = ruin::beekman_survival(&model, 5, 1e-10).unwrap();
    assert!((curve.points[0].psi - 0.4).abs() < 1e-12);
    assert!((curve.points[1].psi - 0.16).abs() < 1e-12);
    assert!((curve.points[2].psi - 0.064).abs() < 1e-12);
    let mut worst = 0.0f64;
    for u in 0..=5u64 {
        let dp = ruin::finite_horizon_ruin(&model, u, 2000).unwrap();
        worst = worst.max((dp - curve.points[u as usize].psi).abs());
    }
    let elapsed = start.elapsed();
    assert!(worst < 1e-8, "DP vs series error {worst:.3e}");
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    println!(
        "PASS  5 DP vs convolution series: u<=5 at T=2000, max_err={worst:.3e} ({:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_06_lundberg() {
    let model = tm1();
    let adj = ruin::adjustment_coefficient(&model).unwrap().expect("root exists");
    assert!((adj.z_star - 2.5).abs() < 1e-10, "z* = {}", adj.z_star);

    let step = model.per_period_step_law();
    let martingale_gap = (step.pgf(adj.z_star) - 1.0).abs();
    assert!(martingale_gap < 1e-12, "martingale gap {martingale_gap:.3e}");

    let curve = ruin::beekman_survival(&model, 50, 1e-10).unwrap();
    for point in &curve.points {
        let bound = adj.z_star.powi(-(point.u as i32));
        assert!(point.psi <= bound + 1e-12, "u={}: psi={} > bound={}", point.u, point.psi, bound);
    }

    let unit = unit_claims_model();
    assert!(ruin::adjustment_coefficient(&unit).unwrap().is_none());
    let unit_curve = ruin::beekman_survival(&unit, 20, 1e-10).unwrap();
    assert!(unit_curve.points.iter().all(|p| p.psi == 0.0));
    println!(
        "PASS  6 Lundberg: z*=2.5 (|gap|={:.3e}), martingale gap={martingale_gap:.3e}, bound holds to u=50, unit-claims model has no root and psi=0",
        (adj.z_star - 2.5) .abs()
    );
}

#[test]
fn acceptance_07_deficit_reconciliation() {
    let model = tm1();
    let report = ruin::deficit_laws(&model, 8).unwrap();
    let rec = &report.reconciled;
    assert!((rec.recursion_lambda[0] - 0.4).abs() < 1e-12);
    assert!(rec.recursion_lambda[1].abs() < 1e-12, "lambda_2 = {}", rec.recursion_lambda[1]);
    assert!((rec.unconditional_total - 0.4).abs() < 1e-10);
    assert!((rec.mean_deficit - 1.0).abs() < 1e-12);

    // Monte Carlo at full scale with a fixed seed
    let cfg = SimConfig::new(424242, 1_000_000, 500, 0).unwrap();
    let summary = simulate::estimate_ruin(&model, &cfg, 0).unwrap();
    let hist = summary.histograms.iter().find(|h| h.name == "deficit_given_ruin").unwrap();
    let ruins = hist.n as f64;
    let mut worst_gap = 0.0f64;
    for (i, &count) in hist.counts.iter().enumerate() {
        let exact = rec.conditional_lambda.get(i).copied().unwrap_or(0.0);
        let phat = count as f64 / ruins;
        let se = (exact * (1.0 - exact) / ruins).sqrt();
        let gap = (phat - exact).abs();
        assert!(gap <= 4.0 * se + 1e-12, "deficit {}: {phat} vs {exact}", i + 1);
        worst_gap = worst_gap.max(gap);
    }
    println!(
        "PASS  7 deficit reconciliation: lambda_2={:.3e}, total-psi(0) gap={:.3e}, MC histogram max gap={worst_gap:.3e} over {} ruins",
        rec.recursion_lambda[1],
        (rec.unconditional_total - 0.4).abs(),
        hist.n
    );
}

#[test]
fn acceptance_08_equivalence_by_simulation() {
    let start = Instant::now();
    let model = tm1();
    let cfg = SimConfig::new(88_88, 1_000_000, 5, 0).unwrap();
    let summary = simulate::equivalence_report(&model, 5, &cfg, true, 0).unwrap();
    let mut min_p = 1.0f64;
    for name in [
        "counts_direct_vs_exact",
        "counts_thinned_vs_exact",
        "claims_direct_vs_exact",
        "claims_type_i_vs_exact",
    ] {
        let cmp = summary.comparisons.iter().find(|c| c.name == name).unwrap();
        let chi2 = cmp.chi_square.expect("chi-square attached");
        assert!(chi2.p_value > 1e-3, "{name}: p = {}", chi2.p_value);
        min_p = min_p.min(chi2.p_value);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60 s");
    println!(
        "PASS  8 construction equivalence: 1e6 paths at t=5, min chi-square p={min_p:.3} ({:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn acceptance_09_thinning_equivalence() {
    // canonical case
    let unit = Pmf::point_mass(1);
    let canonical = ruin::thinning_equivalence(&unit, 0.5, 1.5, 128).unwrap();
    assert!(canonical.max_abs_diff < 1e-10);

    // 20 random triples
    let mut rng = PathRng::for_path(20_09, 0, 0);
    let mut worst = canonical.max_abs_diff;
    for _ in 0..20 {
        let law = random_claim_law(&mut rng, 5);
        let pairs: Vec<(i64, f64)> = law.pairs().map(|(k, w)| (k as i64, w)).collect();
        let xlaw = Pmf::from_pairs(&pairs).unwrap();
        let p_g = 0.1 + 0.7 * rng.next_f64();
        let c = 1.0 + (1.0 / p_g - 1.0) * (0.1 + 0.8 * rng.next_f64());
        let check = ruin::thinning_equivalence(&xlaw, p_g, c, 256).unwrap();
        worst = worst.max(check.max_abs_diff);
    }
    assert!(worst < 1e-10, "exact constructions disagree by {worst:.3e}");

    // Monte Carlo check within 4 standard errors
    let cfg = SimConfig::new(909090, 1_000_000, 1, 0).unwrap();
    let (summary, exact) = simulate::thinning_mc_check(&unit, 0.5, 1.5, &cfg, 0).unwrap();
    assert!(exact.max_abs_diff < 1e-10);
    let mut max_z = 0.0f64;
    for cmp in &summary.comparisons {
        max_z = max_z.max(cmp.max_abs_z);
    }
    assert!(max_z < 4.0, "MC histogram off by {max_z:.2} standard errors");
    println!(
        "PASS  9 thinning equivalence: exact max_diff={worst:.3e}, MC max|z|={max_z:.2} over 1e6 paths"
    );
}

#[test]
fn acceptance_10_verify_determinism() {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.pop();
    path.pop();
    path.push("models");
    path.push("tm1.json");
    let tm1 = path.to_str().unwrap();

    let run = || {
        Command::new(env!("CARGO_BIN_EXE_ruinlab"))
            .args(["verify", "--model", tm1, "--seed", "42"])
            .output()
            .expect("binary runs")
    };
    let first = run();
    let second = run();
    assert_eq!(first.status.code(), Some(0), "verify failed:\n{}", String::from_utf8_lossy(&first.stdout));
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout, "reports must be byte-identical");
    assert_eq!(first.stderr, second.stderr);
    println!(
        "PASS 10 determinism: verify run twice, byte-identical {} -byte reports, exit 0",
        first.stdout.len()
    );
}
