//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured numbers. Runs as a plain binary so the lines always print.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use ergolab::caps::Caps;
use ergolab::entropy::{binary_entropy, LogBase};
use ergolab::explab::claims;
use ergolab::explab::{render, run_experiment, ExperimentConfig, Format, Report};
use ergolab::markov::{entropy_pair, transfer_matrix, verify_injective_dense, verify_intertwining, KernelSpec};
use ergolab::poisson::verify_independence;
use ergolab::rank_one::{build, spacer_params_for, verify_translate_disjointness, RankOneParams, StageParams};
use ergolab::rational::{parse_q, q, Q};

const MARKOV_GRID: &str = include_str!("../../../configs/markov-grid.conf");
const MARKOV_VERIFY: &str = include_str!("../../../configs/markov-verify.conf");
const RANKONE_BUILD: &str = include_str!("../../../configs/rankone-build.conf");
const DISJOINT: [&str; 3] = [
    include_str!("../../../configs/rankone-disjoint-L1.conf"),
    include_str!("../../../configs/rankone-disjoint-L2.conf"),
    include_str!("../../../configs/rankone-disjoint-Lj.conf"),
];
const POISSON_MEASURE: &str = include_str!("../../../configs/poisson-measure.conf");
const POISSON_INDEPENDENCE: &str = include_str!("../../../configs/poisson-independence.conf");
const PENTROPY: &str = include_str!("../../../configs/pentropy.conf");

/// Criteria that are known to fail, with the reason recorded alongside the
/// decision log. They are reported as FAIL but do not fail the run.
const KNOWN_RED: &[&str] = &["8(ii)"];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
}

fn outcome(id: &'static str, title: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, title, pass, detail }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn run_config(text: &str) -> Report {
    let c = ExperimentConfig::parse(text, None).expect("config parses");
    run_experiment(&c, &Caps::default()).expect("config runs")
}

fn grid() -> Vec<Q> {
    (1..=1000).map(|k| q(k, 2001)).collect()
}

fn small_grid() -> [Q; 3] {
    [q(1, 4), q(1, 3), q(2, 5)]
}

fn criterion_1() -> Outcome {
    let (failures, t) = timed(|| {
        grid()
            .into_iter()
            .filter(|a| !transfer_matrix(&KernelSpec::new(a.clone()).unwrap()).markov_check().all())
            .count()
    });
    let pass = failures == 0 && t < Duration::from_secs(1);
    outcome("1", "Markov identities", pass, format!("1000 values of a, {failures} failures, {:.3}s (limit 1s)", t.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let ((checks, failures), t) = timed(|| {
        let mut checks = 0;
        let mut failures = 0;
        for a in small_grid() {
            let spec = KernelSpec::new(a).unwrap();
            for w in 2..=8 {
                let r = verify_intertwining(&spec, w).unwrap();
                checks += r.checks.len() + 1;
                failures += r.failures();
            }
        }
        (checks, failures)
    });
    let pass = failures == 0 && t < Duration::from_secs(10);
    outcome(
        "2",
        "Intertwining",
        pass,
        format!("{checks} basis functions over a in {{1/4,1/3,2/5}}, w=2..8, {failures} failures, {:.3}s (limit 10s)", t.as_secs_f64()),
    )
}

fn criterion_3() -> Outcome {
    let mut failures = Vec::new();
    for a in small_grid() {
        let spec = KernelSpec::new(a.clone()).unwrap();
        for w in 2..=8 {
            let r = verify_injective_dense(&spec, w, &Caps::default()).unwrap();
            if !(r.full_rank() && r.rank == 1 << w && r.determinant_matches && r.kron_determinant_matches) {
                failures.push(format!("a={a} w={w}"));
            }
        }
    }
    outcome("3", "Injectivity and density", failures.is_empty(), format!("rank = 2^w and det = -2a on 21 cases, failures: {failures:?}"))
}

fn criterion_4() -> Outcome {
    let mut worst_beta = 0.0f64;
    let mut max_xi = 0.0f64;
    let mut bad = 0;
    for a in grid().into_iter().chain(small_grid()) {
        let (hx, hb) = entropy_pair(&KernelSpec::new(a).unwrap(), LogBase::Binary);
        worst_beta = worst_beta.max((hb - 1.0).abs());
        max_xi = max_xi.max(hx);
        if hx >= 1.0 {
            bad += 1;
        }
    }
    let pass = bad == 0 && worst_beta <= 1e-12;
    outcome("4", "Entropy separation", pass, format!("max H(xi) = {max_xi:.15}, max |H(beta) - 1| = {worst_beta:e}, {bad} violations"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut failures = 0;
    for _ in 0..50 {
        let stage_count = rng.random_range(1..=8usize);
        let stages: Vec<StageParams> = (1..stage_count)
            .map(|_| {
                let r = rng.random_range(2..=5u64);
                StageParams::new(r, (0..r).map(|_| rng.random_range(0..=7)).collect()).unwrap()
            })
            .collect();
        let state = build(&RankOneParams::new(stages.clone()).unwrap()).unwrap();
        let mut h = 1u64;
        let mut ok = state.heights()[0] == 1;
        for (j, s) in stages.iter().enumerate() {
            h = s.cuts * h + s.spacers.iter().sum::<u64>();
            // the tower has exactly h levels
            let top_exists = state.level(j + 2, h - 1).is_ok();
            let beyond = state.level(j + 2, h).is_err();
            ok &= state.heights()[j + 1] == h && top_exists && beyond;
        }
        failures += usize::from(!ok);
    }
    outcome("5", "Rank-one recurrence", failures == 0, format!("50 random parameter sets with J <= 8, {failures} mismatches"))
}

fn criterion_6() -> Outcome {
    let (detail, t) = timed(|| {
        let mut wrong = Vec::new();
        let mut checks = 0;
        let rules: [(&str, fn(u64) -> Option<u64>); 3] = [("1", |_| Some(1)), ("2", |_| Some(2)), ("j", Some)];
        for (name, rule) in rules {
            let state = build(&spacer_params_for(rule, |_| Some(2), 6).unwrap()).unwrap();
            for j in 1..=5u64 {
                checks += 1;
                let r = verify_translate_disjointness(&state, j as usize, rule(j).unwrap());
                if !matches!(r, Ok(ref r) if r.disjoint) {
                    wrong.push(format!("L={name} j={j}"));
                }
            }
        }
        let odo = build(&RankOneParams::odometer(6)).unwrap();
        let mut control_false = true;
        for j in 1..=5 {
            checks += 1;
            control_false &= matches!(verify_translate_disjointness(&odo, j, 1), Ok(ref r) if !r.disjoint);
        }
        (wrong, control_false, checks)
    });
    let (wrong, control_false, checks) = detail;
    let pass = wrong.is_empty() && control_false && t < Duration::from_secs(30);
    outcome(
        "6",
        "Translate disjointness premise",
        pass,
        format!(
            "{checks} checks, failures {wrong:?}, odometer control exactly false: {control_false}, {:.3}s (limit 30s)",
            t.as_secs_f64()
        ),
    )
}

fn criterion_7(rendered: &mut Vec<(&'static str, String)>) -> Outcome {
    let ((measure, independence, identity_worst), t) = timed(|| {
        let measure = run_config(POISSON_MEASURE);
        let independence = run_config(POISSON_INDEPENDENCE);
        // the exact identity on its own, for the spec's ln 2 pair and a degenerate one
        let ln2 = parse_q(&format!("{}", std::f64::consts::LN_2)).unwrap();
        let a = ergolab::interval::IntervalSet::interval(q(0, 1), ln2.clone()).unwrap();
        let b = ergolab::interval::IntervalSet::interval(q(1, 1), q(1, 1) + ln2).unwrap();
        let worst = [(0, 0), (3, 1), (200, 0)]
            .into_iter()
            .map(|(k, m)| verify_independence(&a, &b, k, m, 0, 0).unwrap().relative_error)
            .fold(0.0f64, f64::max);
        (measure, independence, worst)
    });
    rendered.push(("poisson-measure", render(&measure, Format::Csv)));
    rendered.push(("poisson-independence", render(&independence, Format::Csv)));
    let events = measure.records.iter().filter(|r| r.claim == claims::CYLINDER).count();
    let measure_fail = measure.failures().count();
    let worst_z = measure
        .records
        .iter()
        .filter_map(|r| Some((r.value? - r.expected?).abs() / (r.tolerance / 4.0)))
        .fold(0.0f64, f64::max);
    let pass = events == 20 && measure_fail == 0 && independence.all_pass() && identity_worst <= 1e-12 && t < Duration::from_secs(60);
    outcome(
        "7",
        "Poisson cylinder formula",
        pass,
        format!(
            "{events} events at 1e6 samples, {measure_fail} outside 4 sigma (max |z| = {worst_z:.2}), independence records pass: {}, worst identity error {identity_worst:e}, {:.1}s (limit 60s)",
            independence.all_pass(),
            t.as_secs_f64()
        ),
    )
}

fn criterion_8(rendered: &mut Vec<(&'static str, String)>) -> Vec<Outcome> {
    let report = run_config(PENTROPY);
    rendered.push(("pentropy", render(&report, Format::Csv)));
    let of = |claim: &str| report.records.iter().filter(move |r| r.claim == claim).collect::<Vec<_>>();

    let bern = of(claims::BERNOULLI);
    let first = bern.first().and_then(|r| r.value).unwrap_or(f64::NAN);
    let constant = bern.iter().all(|r| r.value.is_some_and(|v| (v - first).abs() <= 1e-12));
    let b_pass = !bern.is_empty() && bern.iter().all(|r| r.pass) && constant && first > 0.0;
    let i = outcome("8(i)", "P-entropy, Bernoulli column", b_pass, format!("{} values of j, h_j = {first} for every j", bern.len()));

    let bound = of(claims::ROTATION_BOUND);
    let decay = of(claims::ROTATION_DECAY);
    let bound_ok = !bound.is_empty() && bound.iter().all(|r| r.pass);
    let decay_ok = decay.len() == 1 && decay[0].pass;
    let last = decay.first().and_then(|r| r.value).unwrap_or(f64::NAN);
    let ii = outcome(
        "8(ii)",
        "P-entropy, rotation column",
        bound_ok && decay_ok,
        format!(
            "h_j <= log2(2L)/L at every j: {bound_ok}; h_64 = {last:.6} bit against the 0.1 bit target (the bound itself is log2(128)/64 = 0.109375)"
        ),
    );

    let susp = of(claims::SUSPENSION);
    let mc = of(claims::SUSPENSION_MC);
    let q = (-std::f64::consts::LN_2).exp();
    let h_q = binary_entropy(q, LogBase::Binary);
    let susp_ok = !susp.is_empty()
        && susp.iter().all(|r| r.pass && r.exact && r.value.is_some_and(|v| (v - h_q).abs() <= 1e-12))
        && mc.iter().all(|r| r.pass);
    let iii = outcome(
        "8(iii)",
        "P-entropy, Poisson suspension column",
        susp_ok,
        format!("{} values of j with exact product law, h_j = H(q, 1-q) = {h_q}; Monte Carlo checks pass: {}", susp.len(), mc.iter().all(|r| r.pass)),
    );
    let together = outcome(
        "8",
        "P-entropy dichotomy in one report",
        i.pass && ii.pass && iii.pass && !bern.is_empty() && !bound.is_empty() && !susp.is_empty(),
        format!("columns present: bernoulli {}, rotation {}, suspension {}", bern.len(), bound.len() / 2, susp.len()),
    );
    vec![i, ii, iii, together]
}

fn strip_timestamp(json: &str) -> Value {
    let mut v: Value = serde_json::from_str(json).unwrap();
    v["meta"].as_object_mut().unwrap().remove("timestamp");
    v
}

fn criterion_9(rendered: &[(&'static str, String)]) -> Outcome {
    let mut mismatches = Vec::new();
    let mut compared = 0;
    let mut texts: Vec<(&str, &str)> = vec![
        ("markov-grid", MARKOV_GRID),
        ("markov-verify", MARKOV_VERIFY),
        ("rankone-build", RANKONE_BUILD),
    ];
    texts.extend(DISJOINT.iter().map(|t| ("rankone-disjoint", *t)));
    for (name, text) in texts {
        let a = run_config(text);
        let b = run_config(text);
        compared += 1;
        if render(&a, Format::Csv) != render(&b, Format::Csv)
            || strip_timestamp(&render(&a, Format::Json)) != strip_timestamp(&render(&b, Format::Json))
        {
            mismatches.push(name);
        }
    }
    for (name, csv) in rendered {
        let text = match *name {
            "poisson-measure" => POISSON_MEASURE,
            "poisson-independence" => POISSON_INDEPENDENCE,
            _ => PENTROPY,
        };
        compared += 1;
        if render(&run_config(text), Format::Csv) != *csv {
            mismatches.push(name);
        }
    }
    // the library-level exact criteria repeat as well
    let stable = criterion_3().detail == criterion_3().detail && criterion_5().detail == criterion_5().detail;
    outcome(
        "9",
        "Determinism under a fixed seed",
        mismatches.is_empty() && stable,
        format!("{compared} reports rerun byte-identically (JSON compared without the timestamp); mismatches: {mismatches:?}"),
    )
}

fn main() -> ExitCode {
    let mut rendered = Vec::new();
    let mut results = vec![criterion_1(), criterion_2(), criterion_3(), criterion_4(), criterion_5(), criterion_6()];
    results.push(criterion_7(&mut rendered));
    results.extend(criterion_8(&mut rendered));
    results.push(criterion_9(&rendered));

    let mut unexpected = 0;
    for r in &results {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        let note = if r.pass {
            ""
        } else if KNOWN_RED.contains(&r.id) {
            " [known red, see the decision log]"
        } else if r.id == "8" && only_known_red_subparts(&results) {
            " [fails through its known-red part only]"
        } else {
            ""
        };
        println!("criterion {:<6} {verdict}  {}: {}{note}", r.id, r.title, r.detail);
        if !r.pass && !KNOWN_RED.contains(&r.id) && !(r.id == "8" && only_known_red_subparts(&results)) {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} criteria failed unexpectedly");
        ExitCode::FAILURE
    }
}

/// Criterion 8 as a whole fails exactly when one of its known-red parts does.
fn only_known_red_subparts(results: &[Outcome]) -> bool {
    results
        .iter()
        .filter(|r| r.id.starts_with("8(") && !r.pass)
        .all(|r| KNOWN_RED.contains(&r.id))
}
