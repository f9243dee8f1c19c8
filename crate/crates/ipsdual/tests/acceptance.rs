//! Acceptance suite: one test per verification criterion, each printing a
//! single PASS/FAIL line (visible with `--nocapture`) before asserting.
//!
//! Run with:
//!
//! ```text
//! cargo test --test acceptance -- --nocapture
//! ```

use std::time::{Duration, Instant};

use ipsdual::diffusion::{BracoParams, FellerParams};
use ipsdual::exact::{
    count_generator, evolve_distribution, full_generator, prototype_duality_gap,
    wedge_duality_gap, Distribution, DEFAULT_EVOLVE_TOL,
};
use ipsdual::experiments::{
    laplace_duality_report, moment_duality_report, pure_death_scaling, tv_distance,
};
use ipsdual::graphical::{
    pathwise_duality_holds, standard_dual_mechanisms, standard_mechanisms, Configuration,
    EventLog, RateSpec,
};
use ipsdual::mechanism::{classify_all, BasicMechanism};
use ipsdual::rng::replicate_rng;
use rand::Rng;

/// Print the criterion's verdict line, then fail the test if it did not hold.
fn report(ok: bool, name: &str, detail: &str) {
    println!("{}: {name} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "{name}: {detail}");
}

fn within(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

#[test]
fn catalog_counts_pairs_and_symmetry() {
    let started = Instant::now();
    let catalog = classify_all();

    let counts_ok = catalog.with_dual_count() == 16 && catalog.self_dual_count() == 8;

    // The six named pairs, matched as unordered sets.
    let pair = |a: BasicMechanism, b: BasicMechanism| {
        if a.code() <= b.code() {
            (a, b)
        } else {
            (b, a)
        }
    };
    let expected = [
        pair(BasicMechanism::resampling(), BasicMechanism::coalescent()),
        pair(BasicMechanism::pure_birth(), BasicMechanism::pure_birth()),
        pair(BasicMechanism::death_coalescent(), BasicMechanism::death_coalescent()),
        pair(BasicMechanism::identity(), BasicMechanism::identity()),
        pair(BasicMechanism::constant_zero(), BasicMechanism::constant_zero()),
        pair(BasicMechanism::all_to_ones(), BasicMechanism::all_to_ones()),
    ];
    let pairs = catalog.unordered_pairs();
    let named_ok = expected.iter().all(|p| pairs.contains(p));

    // Closure under the conjugation symmetries, over the whole catalog.
    let closure_ok = catalog.entries().iter().all(|&(f, g)| {
        catalog.dual_of(f.dagger()) == Some(g.dagger())
            && catalog.dual_of(f.hat()) == Some(g.hat_dagger())
            && catalog.dual_of(f.hat_dagger()) == Some(g.hat())
    });

    let elapsed = started.elapsed();
    let ok = counts_ok && named_ok && closure_ok && within(elapsed, Duration::from_secs(1));
    report(
        ok,
        "mechanism catalog",
        &format!(
            "16-with-dual {counts_ok}, named pairs {named_ok}, symmetry closure {closure_ok}, {:.2?}",
            elapsed
        ),
    );
}

#[test]
fn pathwise_identity_on_sampled_logs() {
    let started = Instant::now();
    let n = 6;
    let rates = RateSpec::new(1.0, 1.0, 1.0, 1.0).unwrap();
    let mechanisms = standard_mechanisms();
    let duals = standard_dual_mechanisms();
    let reps: u64 = 10_000;

    let mut held = 0u64;
    for replicate in 0..reps {
        let mut rng = replicate_rng(2024, replicate);
        let log = EventLog::sample_standard(n, &rates, 1.0, &mut rng).unwrap();
        let x0 = Configuration::random(n, &mut rng);
        let y_t = Configuration::random(n, &mut rng);
        held += pathwise_duality_holds(&x0, &y_t, &log, &mechanisms, &duals).unwrap() as u64;
    }

    let elapsed = started.elapsed();
    let ok = held == reps && within(elapsed, Duration::from_secs(60));
    report(
        ok,
        "pathwise duality on sampled logs",
        &format!("held in {held}/{reps} realizations at N = {n}, {:.2?}", elapsed),
    );
}

#[test]
fn exact_wedge_gap_small_systems() {
    let started = Instant::now();
    let mut max_gap = 0.0f64;
    let mut cases = 0u32;
    for n in 2..=5usize {
        for draw in 0..50u64 {
            let mut rng = replicate_rng(4096, ((n as u64) << 32) | draw);
            let rates = RateSpec::new(
                rng.gen::<f64>() * 2.0,
                rng.gen::<f64>() * 2.0,
                rng.gen::<f64>() * 2.0,
                rng.gen::<f64>() * 2.0,
            )
            .unwrap();
            let x = Configuration::random(n, &mut rng);
            let y = Configuration::random(n, &mut rng);
            for t in [0.1, 0.5, 1.0, 2.0] {
                let gap = wedge_duality_gap(n, &rates, &x, &y, t).unwrap();
                max_gap = max_gap.max(gap);
                cases += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    let ok = max_gap <= 1e-8 && within(elapsed, Duration::from_secs(120));
    report(
        ok,
        "exact disjointness duality",
        &format!("max gap {max_gap:.3e} over {cases} randomized cases, {:.2?}", elapsed),
    );
}

#[test]
fn count_projection_matches_lumped_chain() {
    let started = Instant::now();
    let mechs = standard_mechanisms();
    let rate_sets = [
        RateSpec::new(1.0, 1.0, 1.0, 1.0).unwrap(),
        RateSpec::new(1.0, 0.5, 2.0, 1.0).unwrap(),
        RateSpec::new(0.3, 0.7, 1.5, 0.2).unwrap(),
    ];
    let mut worst = 0.0f64;
    for n in 2..=6usize {
        for rates in &rate_sets {
            let full = full_generator(n, rates, &mechs).unwrap();
            let count = count_generator(n, rates).unwrap();
            // Lumpability holds from any fixed configuration; use an
            // alternating pattern so both phases appear.
            let x0 = Configuration::new((0..n).map(|i| i % 2 == 0).collect());
            for t in [0.5, 1.5] {
                let full_law = evolve_distribution(
                    &full,
                    &Distribution::point(1 << n, x0.to_index()).unwrap(),
                    t,
                    1e-13,
                )
                .unwrap();
                let projected = full_law.project_to_counts(n).unwrap();
                let count_law = evolve_distribution(
                    &count,
                    &Distribution::point(n + 1, x0.count_ones()).unwrap(),
                    t,
                    1e-13,
                )
                .unwrap();
                worst = worst.max(tv_distance(&projected, &count_law));
            }
        }
    }
    let elapsed = started.elapsed();
    let ok = worst <= 1e-10;
    report(
        ok,
        "count-chain lumping",
        &format!("worst TV {worst:.3e} across N = 2..6, {:.2?}", elapsed),
    );
}

#[test]
fn sampling_gap_shrinks_with_system_size() {
    let started = Instant::now();
    let (u, e, beta, c, t) = (1.0, 0.5, 1.0, 1.0, 1.0);
    let n = 3;
    let sizes = [50usize, 100, 200, 400];
    let mut gaps = Vec::new();
    for &n_sites in &sizes {
        let k = (0.3 * n_sites as f64).floor() as usize;
        let rates = RateSpec::new(u, e, c * n_sites as f64, beta).unwrap();
        gaps.push(prototype_duality_gap(n_sites, n, k, &rates, t).unwrap());
    }
    let nonincreasing = gaps.windows(2).all(|w| w[1] <= w[0]);
    let halved = gaps[3] < gaps[0] / 2.0;
    let elapsed = started.elapsed();
    let ok = nonincreasing && halved && within(elapsed, Duration::from_secs(120));
    report(
        ok,
        "sampling-duality gap decay",
        &format!(
            "gaps {:?} nonincreasing {nonincreasing}, final < half of first {halved}, {:.2?}",
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>(),
            elapsed
        ),
    );
}

#[test]
fn moment_duality_three_se() {
    let started = Instant::now();
    let p = BracoParams::new(1.0, 1.0, 0.5).unwrap();
    let r = moment_duality_report(&p, 3, 0.3, 1.0, 100_000, 1e-3, 31).unwrap();
    let elapsed = started.elapsed();
    let ok = r.pass && r.gap <= 0.02 && within(elapsed, Duration::from_secs(300));
    report(
        ok,
        "moment duality (chain vs diffusion)",
        &format!(
            "gap {:.3e} vs tolerance {:.3e} (3 SE + bias), absolute cap 0.02, {:.2?}",
            r.gap, r.tolerance, elapsed
        ),
    );
}

#[test]
fn laplace_closed_form_anchor() {
    let p = FellerParams::new(0.0, 0.0, 1.0).unwrap();
    let r = laplace_duality_report(&p, 1.0, 1.0, 1.0, 1.0, 100_000, 1e-3, 47).unwrap();
    let target = (-0.5f64).exp();
    let off_by = (r.lhs_estimate - target).abs();
    let ok = r.pass && off_by < 0.01;
    report(
        ok,
        "branching-diffusion Laplace transform",
        &format!("estimate {:.5} vs closed form {target:.5}, off by {off_by:.2e}", r.lhs_estimate),
    );
}

#[test]
fn laplace_self_dual_parameters() {
    let p = FellerParams::new(1.0, 1.0, 1.0).unwrap();
    let r = laplace_duality_report(&p, 1.0, 2.0, 0.5, 1.0, 100_000, 1e-3, 53).unwrap();
    report(
        r.pass,
        "logistic Feller Laplace duality",
        &format!("gap {:.3e} vs tolerance {:.3e} (3 SE + bias)", r.gap, r.tolerance),
    );
}

#[test]
fn pure_coalescent_mean_follows_decay_curve() {
    let started = Instant::now();
    let table =
        pure_death_scaling(&[100, 400, 1600], 1.0, 1.0, &[0.25, 0.5, 0.75, 1.0]).unwrap();
    let d: Vec<f64> = table.rows.iter().map(|r| r.distance).collect();
    let strictly_decreasing = d.windows(2).all(|w| w[1] < w[0]);
    let elapsed = started.elapsed();
    let ok = strictly_decreasing && within(elapsed, Duration::from_secs(60));
    report(
        ok,
        "pure-coalescent decay curve",
        &format!(
            "sup errors {:?} strictly decreasing {strictly_decreasing}, {:.2?}",
            d.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>(),
            elapsed
        ),
    );
}

#[test]
fn count_mean_dominated_by_exponential() {
    let (n_sites, u, beta, n0) = (200usize, 1.0, 1.0, 5usize);
    let rates = RateSpec::new(u, 0.0, 0.0, beta).unwrap();
    let gen = count_generator(n_sites, &rates).unwrap();
    let mut law = Distribution::point(n_sites + 1, n0).unwrap();
    let mut prev = 0.0;
    let mut ok = true;
    let mut worst_margin = f64::INFINITY;
    for i in 0..=20 {
        let t = 0.1 * i as f64;
        law = evolve_distribution(&gen, &law, t - prev, DEFAULT_EVOLVE_TOL).unwrap();
        prev = t;
        let mean = law.mean_index();
        let bound = n0 as f64 * (u * t).exp();
        worst_margin = worst_margin.min(bound - mean);
        ok &= mean <= bound + 1e-9;
    }
    report(
        ok,
        "exponential domination of the count mean",
        &format!("E[Z_t] <= {n0}·e^t on [0,2]; smallest margin {worst_margin:.3e}"),
    );
}

#[test]
fn subcommand_reruns_are_byte_identical() {
    let bin = env!("CARGO_BIN_EXE_ipsdual");
    let dir = tempfile::tempdir().unwrap();

    // (label, argv tail, output file names to compare)
    let cases: Vec<(&str, Vec<String>, Vec<&str>)> = vec![
        (
            "classify",
            vec!["classify".into(), "--out".into(), "catalog.csv".into()],
            vec!["catalog.csv"],
        ),
        (
            "pathwise",
            [
                "pathwise", "--n", "5", "--rates", "1,1,1,1", "--horizon", "1", "--reps",
                "200", "--seed", "9", "--out", "pathwise.csv",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            vec!["pathwise.csv"],
        ),
        (
            "exact-dual",
            [
                "exact-dual", "--n-max", "3", "--rates", "1,0.5,2,1", "--draws", "4",
                "--seed", "9", "--out", "wedge.csv",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            vec!["wedge.csv"],
        ),
        (
            "prototype",
            ["prototype", "--n-list", "30,60", "--out", "proto.csv"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            vec!["proto.csv"],
        ),
        (
            "sde-dual",
            [
                "sde-dual", "moment", "--reps", "4000", "--dt", "0.005", "--seed", "9",
                "--out", "moment.csv",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            vec!["moment.csv", "moment.json"],
        ),
        (
            "scaling",
            [
                "scaling", "pure-death", "--n-list", "64,256", "--t-grid", "0.5,1",
                "--out", "pd.csv",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            vec!["pd.csv", "pd.json"],
        ),
    ];

    let mut all_ok = true;
    let mut details = Vec::new();
    for (label, tail, files) in &cases {
        let run_once = || {
            let output = std::process::Command::new(bin)
                .args(tail)
                .env("IPSDUAL_OUT_DIR", dir.path())
                .output()
                .expect("spawn ipsdual");
            let fileset: Vec<Vec<u8>> = files
                .iter()
                .map(|f| std::fs::read(dir.path().join(f)).expect("output file"))
                .collect();
            (output.status.code(), output.stdout, fileset)
        };
        let first = run_once();
        let second = run_once();
        let ok = first.0 == Some(0) && first == second;
        all_ok &= ok;
        details.push(format!("{label} {}", if ok { "ok" } else { "DIFFERS" }));
    }
    report(all_ok, "byte-identical subcommand reruns", &details.join(", "));
}
