//! Acceptance run: one PASS/FAIL line per criterion at the pinned sizes and
//! tolerances. Exits non-zero if any criterion fails.

use std::time::Instant;

use ktree::analytics::{ml_moment, MlParams};
use ktree::harness::checks::{
    crp_suite, dirichlet_suite, mark_pushforward_suite, mark_suite, martingale_suite, mb_suite, metric_suite, qn_suite,
    Suite,
};
use ktree::harness::{run_experiment, ExperimentKind, ExperimentSpec, MomentReport};

const SEED: u64 = 1;

struct Outcome {
    passed: bool,
    detail: String,
}

fn suites(list: Vec<Suite>) -> Outcome {
    let passed = list.iter().all(Suite::passed);
    let detail = list
        .iter()
        .flat_map(|s| s.checks.iter().map(move |c| format!("[{}] {}: {} ({})", if c.passed { "ok" } else { "FAIL" }, s.name, c.name, c.detail)))
        .collect::<Vec<_>>()
        .join("\n    ");
    Outcome { passed, detail }
}

fn within(r: &MomentReport, tol: f64) -> (bool, String) {
    let ok = r.relative_error() <= tol;
    let z = r.z_score.map_or("-".to_string(), |z| format!("{z:.2}"));
    (
        ok,
        format!(
            "[{}] {}: {:.5} +- {:.5} vs {:.5} [{}], rel err {:.2}% (tol {:.0}%), z = {z}",
            if ok { "ok" } else { "FAIL" },
            r.statistic,
            r.mean,
            r.std_error,
            r.target,
            r.provenance,
            100.0 * r.relative_error(),
            100.0 * tol
        ),
    )
}

fn combine(parts: Vec<(bool, String)>) -> Outcome {
    Outcome { passed: parts.iter().all(|p| p.0), detail: parts.into_iter().map(|p| p.1).collect::<Vec<_>>().join("\n    ") }
}

fn criterion_1() -> Outcome {
    suites(vec![qn_suite(2, 4).unwrap(), qn_suite(3, 4).unwrap()])
}

fn criterion_2() -> Outcome {
    suites((2..=4).map(|k| qn_suite(k, 30).unwrap()).collect())
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    for k in [2, 3] {
        let out = run_experiment(&ExperimentSpec::new(ExperimentKind::Spine, k, vec![10_000], 2000, SEED)).unwrap();
        parts.push(within(&out.reports[0], 0.05));
        parts.push(within(&out.reports[1], 0.10));
    }
    combine(parts)
}

fn criterion_4(composite: &mut Option<Outcome>) -> Outcome {
    let spec = ExperimentSpec::new(ExperimentKind::SubtreeRatio, 3, vec![10_000], 2000, SEED).with_kp(2);
    let out = run_experiment(&spec).unwrap();
    let x = &out.reports[2];
    let gap = &out.reports[3];
    let z = x.z_score.unwrap_or(f64::INFINITY);
    *composite = Some(Outcome {
        passed: gap.mean <= 1e-12 && z.abs() <= 3.0,
        detail: format!(
            "{}: {:.5} +- {:.5} vs {:.5} [{}], z = {z:.2}; {} = {:.1e}",
            x.statistic, x.mean, x.std_error, x.target, x.provenance, gap.statistic, gap.mean
        ),
    });
    combine(vec![within(&out.reports[0], 0.05)])
}

fn criterion_5() -> Outcome {
    let grid: Vec<u64> = (10..=16).map(|e| 1u64 << e).collect();
    let mut parts = Vec::new();
    for k in [2, 3] {
        let out = run_experiment(&ExperimentSpec::new(ExperimentKind::HeightScaling, k, grid.clone(), 500, SEED)).unwrap();
        let reg = out.regression.unwrap();
        let target = 1.0 / k as f64;
        let ok = (reg.slope - target).abs() <= 0.05;
        parts.push((
            ok,
            format!(
                "[{}] k={k}: slope {:.4} (se {:.4}, r2 {:.5}) vs 1/k = {target:.4}, tol 0.05",
                if ok { "ok" } else { "FAIL" },
                reg.slope,
                reg.slope_std_error,
                reg.r_squared
            ),
        ));
    }
    combine(parts)
}

fn criterion_6() -> Outcome {
    let plain = run_experiment(&ExperimentSpec::new(ExperimentKind::LeafHeight, 2, vec![10_000], 2000, SEED)).unwrap();
    let pruned =
        run_experiment(&ExperimentSpec::new(ExperimentKind::LeafHeight, 3, vec![10_000], 2000, SEED).with_kp(2)).unwrap();
    let (a, mut da) = within(&plain.reports[0], 0.07);
    let (b, mut db) = within(&pruned.reports[0], 0.07);
    da.insert_str(0, "k=2: ");
    db.insert_str(0, "k=3, k'=2: ");
    combine(vec![(a, da), (b, db)])
}

fn criterion_7() -> Outcome {
    suites(vec![
        dirichlet_suite(1_000_000, SEED).unwrap(),
        mark_pushforward_suite(&[(3, 2), (4, 2), (4, 3)], 1_000_000, SEED).unwrap(),
    ])
}

fn criterion_8() -> Outcome {
    suites(vec![mark_suite(100_000, SEED).unwrap()])
}

fn criterion_9() -> Outcome {
    suites(vec![metric_suite(500, SEED).unwrap()])
}

fn criterion_10() -> Outcome {
    suites(vec![
        mb_suite(2, 3).unwrap(),
        martingale_suite(2, 4, 200, SEED).unwrap(),
        martingale_suite(3, 4, 200, SEED).unwrap(),
        crp_suite(2, 1, 100_000, SEED).unwrap(),
        crp_suite(3, 2, 100_000, SEED).unwrap(),
    ])
}

fn main() {
    let titles = [
        "exact split law vs enumeration, q_1 anchors",
        "q_n normalization and printed forms, k <= 4, n <= 30",
        "spine Mittag-Leffler moments, n = 10^4, 2000 replicates",
        "nested-count Mittag-Leffler mean, k=3, k'=2, n = 10^4, 2000 replicates",
        "height exponent by log-log regression, n = 2^10..2^16, 500 replicates",
        "leaf-height mean vs 1/phi(1/k), n = 10^4, 2000 replicates",
        "dislocation-measure identities, N = 10^6",
        "marking kernel",
        "metric lemmas on 500 random (tree, p) pairs",
        "exact structural checks and restaurant transitions",
    ];
    let mut composite = None;
    let mut all = true;
    for (i, title) in titles.iter().enumerate() {
        let start = Instant::now();
        let out = match i + 1 {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(),
            4 => criterion_4(&mut composite),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        all &= out.passed;
        println!(
            "criterion {:>2}: {} {title} ({:.1} s)\n    {}",
            i + 1,
            if out.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if let Some(c) = composite {
        println!("composite subtree identity: {}\n    {}", if c.passed { "PASS" } else { "FAIL" }, c.detail);
    }
    let second = ml_moment(MlParams::new(0.5, 0.5).unwrap(), 2.0).unwrap();
    println!("note: spine second-moment target at k=2 is ml_moment(1/2,1/2,2) = {second:.6}");
    if !all {
        std::process::exit(1);
    }
}
