//! Acceptance suite. Runs every criterion in order, prints one
//! `PASS`/`FAIL`/`WAIVED` line per criterion, writes a run manifest, and
//! exits non-zero if anything failed.
//!
//! Criteria run sequentially so their wall-clock budgets are not distorted
//! by each other. Criterion 7 needs the published recordings, ingested as
//! `.session` files into the directory named by `FACEGATE_DATASET_DIR`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use facegate_core::eval::{self, sweep_feature_count, sweep_window_size, train_test_eval};
use facegate_core::features::{
    base_feature_names, channel_stats, poly_expand, poly_feature_names, BASE_FEATURE_COUNT, POLY_FEATURE_COUNT,
};
use facegate_core::forest::{train_forest, train_tree, write_model, DecisionTree, Node};
use facegate_core::gate::{gate_stream, Gate, GateDecision};
use facegate_core::ingest::{read_session_dir, trim_session, DEFAULT_TRIM_MARGIN};
use facegate_core::pipeline::{alerts_csv, run_stream};
use facegate_core::synth::{
    synth_trace, synthetic_feature_dataset, synthetic_sessions, FeatureTableSpec, Segment, SessionSetSpec, Template,
    TraceSpec,
};
use facegate_core::{
    Activity, Dataset, ForestConfig, GateConfig, KeyValues, Label, MaxFeatures, RngSeed, SensorSample,
};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

enum Status {
    Pass,
    Fail,
    Waived,
    Note,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: String) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("feature oracle equivalence", c1_feature_oracle),
        ("polynomial expansion count", c2_poly_count),
        ("gate correctness", c3_gate),
        ("forest validity audit", c4_forest_audit),
        ("small-instance tree oracle", c5_depth2_oracle),
        ("synthetic end-to-end", c6_synthetic_end_to_end),
        ("published dataset reproduction", c7_dataset),
        ("window sweep shape", c8_window_sweep),
        ("pipeline determinism", c9_pipeline_determinism),
        ("battery-hour figures", c10_battery),
    ];
    let mut manifest = KeyValues::new();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let out = run();
        let secs = started.elapsed().as_secs_f64();
        let tag = match out.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Waived => "WAIVED",
            Status::Note => "NOTE",
        };
        println!("criterion {:>2} {tag:<6} {name} ({secs:.1}s): {}", i + 1, out.detail);
        manifest.push(format!("criterion.{}.status", i + 1), tag);
        manifest.push(format!("criterion.{}.detail", i + 1), &out.detail);
    }
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-manifest.kv");
    match manifest.write(&path) {
        Ok(()) => println!("manifest: {}", path.display()),
        Err(e) => eprintln!("could not write manifest: {e}"),
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// 1. Features vs a direct-summation oracle

/// Straightforward textbook formulas, one pass each, no shared helpers.
fn oracle_stats(x: &[f64]) -> [f64; 9] {
    let n = x.len();
    let nf = n as f64;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for &v in x {
        min = min.min(v);
        max = max.max(v);
        sum += v;
    }
    let mean = sum / nf;
    let mut s = x.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let quant = |p: f64| {
        let h = (nf - 1.0) * p;
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        s[lo] + (h - lo as f64) * (s[hi] - s[lo])
    };
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &v in x {
        m2 += (v - mean).powi(2);
        m3 += (v - mean).powi(3);
        m4 += (v - mean).powi(4);
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    let constant = min == max;
    let std = m2.sqrt();
    let skew = if constant { 0.0 } else { m3 / m2.powf(1.5) };
    let kurt = if constant { 0.0 } else { m4 / (m2 * m2) };
    // Pearson correlation of x[0..n-1] with x[1..n]
    let a = &x[..n - 1];
    let b = &x[1..];
    let ma = a.iter().sum::<f64>() / (n - 1) as f64;
    let mb = b.iter().sum::<f64>() / (n - 1) as f64;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for k in 0..n - 1 {
        sab += (a[k] - ma) * (b[k] - mb);
        saa += (a[k] - ma).powi(2);
        sbb += (b[k] - mb).powi(2);
    }
    let ac = if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    };
    [min, max, mean, quant(0.25), quant(0.75), std, skew, kurt, ac]
}

fn rel_err(got: f64, want: f64) -> f64 {
    if got == want {
        0.0
    } else {
        (got - want).abs() / want.abs()
    }
}

fn c1_feature_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = RngSeed(1).rng();
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for w in 0..10_000 {
        let offset = rng.random_range(-5.0..5.0);
        let scale = rng.random_range(0.1..20.0);
        let noise = Normal::new(offset, scale).unwrap();
        let x: Vec<f64> = (0..40).map(|_| noise.sample(&mut rng)).collect();
        let got = channel_stats(&x);
        let want = oracle_stats(&x);
        for k in 0..9 {
            let e = rel_err(got[k], want[k]);
            if e > worst || e.is_nan() {
                worst = if e.is_nan() { f64::INFINITY } else { e };
                worst_at = format!("window {w} stat {k}: {} vs {}", got[k], want[k]);
            }
        }
    }
    let elapsed = started.elapsed();
    Outcome::check(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "10000 windows x 9 stats, worst relative error {worst:.2e} ({worst_at}), {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 2. Polynomial expansion

fn c2_poly_count() -> Outcome {
    let mut rng = RngSeed(2).rng();
    let mut problems = Vec::new();
    for n in 1..=BASE_FEATURE_COUNT {
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let e = poly_expand(&f).unwrap();
        if e.len() != (n + 1) * (n + 2) / 2 {
            problems.push(format!("n={n}: {} terms", e.len()));
        }
        // pairs in lexicographic order after the bias and linear terms
        let mut k = 1 + n;
        for i in 0..n {
            for j in i..n {
                if e[k] != f[i] * f[j] {
                    problems.push(format!("n={n}: term ({i},{j}) is not the exact product"));
                }
                k += 1;
            }
        }
    }
    let names = poly_feature_names(&base_feature_names());
    Outcome::check(
        problems.is_empty() && POLY_FEATURE_COUNT == 1540 && names.len() == 1540,
        if problems.is_empty() {
            format!("54 -> {} terms; counts and products exact for n = 1..54", names.len())
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 3. Gate

/// Recomputes both window means from scratch at every step.
fn naive_gate(samples: &[SensorSample], cfg: &GateConfig) -> (Vec<GateDecision>, Vec<(f64, f64)>) {
    let (s, l) = (cfg.short_len(), cfg.long_len());
    let e: Vec<f64> = samples.iter().map(|x| x.resultant_acceleration()).collect();
    let mut out = Vec::with_capacity(e.len());
    let mut means = Vec::with_capacity(e.len());
    for k in 0..e.len() {
        let long = &e[(k + 1).saturating_sub(l)..=k];
        let short = &e[(k + 1).saturating_sub(s)..=k];
        let la = long.iter().sum::<f64>() / long.len() as f64;
        let sa = short.iter().sum::<f64>() / short.len() as f64;
        means.push((sa, la));
        let pass = k + 1 >= l && la > 0.0 && sa / la > cfg.threshold;
        out.push(if pass {
            GateDecision::Pass
        } else {
            GateDecision::Blocked
        });
    }
    (out, means)
}

fn c3_gate() -> Outcome {
    let cfg = GateConfig::default();
    let mut notes = Vec::new();
    let mut ok = true;

    // constant traces never pass
    for level in [0.0, 0.3, 1.0, 9.81, 250.0] {
        let trace: Vec<SensorSample> = (0..6000)
            .map(|k| SensorSample::new(k as f64 / cfg.sample_rate, [level, -level, level], [0.1; 3]))
            .collect();
        let (_, r) = gate_stream(&trace, &cfg).unwrap();
        if r.pass_fraction != 0.0 {
            ok = false;
            notes.push(format!("constant {level} passed {}", r.pass_fraction));
        }
    }

    // bursts over 10% of the duration
    let spec = TraceSpec {
        repeat: 60,
        ..TraceSpec::new(vec![
            Segment::new(9.0, Template::Rest, 1.0),
            Segment::new(1.0, Template::Burst, 10.0),
        ])
    };
    let trace = synth_trace(&spec, RngSeed(3)).unwrap();
    let (decisions, report) = gate_stream(&trace, &cfg).unwrap();
    let (reference, _) = naive_gate(&trace, &cfg);
    let ref_fraction = reference.iter().filter(|d| d.is_pass()).count() as f64 / reference.len() as f64;
    let in_band = (0.08..=0.20).contains(&report.pass_fraction);
    ok &= in_band && decisions == reference;
    notes.push(format!(
        "burst trace pass fraction {:.4} (reference {:.4}, band [0.08, 0.20])",
        report.pass_fraction, ref_fraction
    ));

    // scale invariance: power-of-two scaling is exact in floating point
    for k in [0.25, 4.0, 1024.0] {
        let scaled: Vec<SensorSample> = trace
            .iter()
            .map(|s| SensorSample::new(s.t, s.accel.map(|v| v * k), s.gyro))
            .collect();
        let (d, _) = gate_stream(&scaled, &cfg).unwrap();
        if d != decisions {
            ok = false;
            notes.push(format!("scaling by {k} changed decisions"));
        }
    }

    // running sums vs the naive oracle over 1e5 steps
    let mut rng = RngSeed(33).rng();
    let long_trace: Vec<SensorSample> = (0..100_000)
        .map(|k| {
            let a = if (k / 700) % 9 == 0 { 12.0 } else { 1.0 };
            SensorSample::new(
                k as f64 / cfg.sample_rate,
                [a * rng.random_range(0.5..1.5), rng.random_range(-1.0..1.0), 9.81],
                [0.0; 3],
            )
        })
        .collect();
    let (naive_dec, naive_means) = naive_gate(&long_trace, &cfg);
    let mut gate = Gate::new(cfg).unwrap();
    let mut worst = 0.0f64;
    let mut mismatched = 0;
    for (k, s) in long_trace.iter().enumerate() {
        let d = gate.step(s);
        let (sa, la) = naive_means[k];
        worst = worst
            .max(rel_err(gate.short_mean(), sa))
            .max(rel_err(gate.long_mean(), la));
        if d != naive_dec[k] {
            mismatched += 1;
        }
    }
    ok &= worst <= 1e-9 && mismatched == 0;
    notes.push(format!(
        "1e5-step running sums worst relative error {worst:.1e}, {mismatched} decision mismatches"
    ));
    Outcome::check(ok, notes.join("; "))
}

// ---------------------------------------------------------------------------
// 4. Forest audit

fn audit(forest: &facegate_core::Forest) -> Vec<String> {
    let cfg = forest.config();
    let mut problems = Vec::new();
    for (i, t) in forest.trees().iter().enumerate() {
        for n in t.nodes() {
            if let Node::Leaf { counts } = n {
                if counts[0] + counts[1] < cfg.min_samples_leaf {
                    problems.push(format!("tree {i}: leaf with {counts:?}"));
                }
            }
        }
        if t.depth() > cfg.max_depth {
            problems.push(format!("tree {i}: depth {}", t.depth()));
        }
    }
    let total: f64 = forest.importances().iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        problems.push(format!("importances sum to {total}"));
    }
    problems
}

fn c4_forest_audit() -> Outcome {
    let data = synthetic_feature_dataset(
        &FeatureTableSpec {
            rows: 800,
            separation: 1.5,
            ..Default::default()
        },
        RngSeed(4),
    )
    .unwrap();
    let configs = [
        ForestConfig::default(),
        ForestConfig {
            bootstrap: true,
            max_depth: 4,
            min_samples_leaf: 12,
            min_samples_split: 30,
            ..Default::default()
        },
        ForestConfig {
            n_trees: 40,
            max_features: MaxFeatures::All,
            min_samples_leaf: 1,
            min_samples_split: 2,
            ..Default::default()
        },
    ];
    let mut problems = Vec::new();
    let mut leaves = 0;
    for cfg in &configs {
        let f = train_forest(&data, cfg).unwrap();
        leaves += f.trees().iter().map(DecisionTree::n_leaves).sum::<usize>();
        problems.extend(audit(&f));
        let text = write_model(&f).unwrap();
        let again = train_forest(&data, cfg).unwrap();
        if write_model(&again).unwrap() != text || again != f {
            problems.push("retraining with the same seed changed the model".into());
        }
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let other = pool.install(|| train_forest(&data, cfg).unwrap());
            if write_model(&other).unwrap() != text {
                problems.push(format!("{threads}-thread training changed the model"));
            }
        }
    }
    Outcome::check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("3 configurations, {leaves} leaves audited; bit-identical retrains at 1 and 3 threads")
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 5. Greedy tree vs exhaustive depth-2 tree

/// Rows correctly classified by the best single split of `rows` (or no split).
#[allow(clippy::needless_range_loop)]
fn best_stump_correct(x: &[Vec<f64>], y: &[usize], rows: &[usize]) -> usize {
    let mut counts = [0; 2];
    for &r in rows {
        counts[y[r]] += 1;
    }
    let mut best = counts[0].max(counts[1]);
    let p = x.first().map_or(0, Vec::len);
    for f in 0..p {
        let mut sorted = rows.to_vec();
        sorted.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap());
        let mut left = [0; 2];
        for k in 0..sorted.len().saturating_sub(1) {
            left[y[sorted[k]]] += 1;
            if x[sorted[k]][f] == x[sorted[k + 1]][f] {
                continue;
            }
            let right = [counts[0] - left[0], counts[1] - left[1]];
            best = best.max(left[0].max(left[1]) + right[0].max(right[1]));
        }
    }
    best
}

/// Training accuracy of the best depth-≤2 tree, by enumerating every root
/// split and solving each child exactly.
fn best_depth2_accuracy(x: &[Vec<f64>], y: &[usize]) -> f64 {
    let n = x.len();
    let all: Vec<usize> = (0..n).collect();
    let mut best = best_stump_correct(x, y, &all);
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = x.iter().map(|r| r[f]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| x[i][f] <= w[0]);
            best = best.max(best_stump_correct(x, y, &l) + best_stump_correct(x, y, &r));
        }
    }
    best as f64 / n as f64
}

fn c5_depth2_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = RngSeed(5).rng();
    let cfg = ForestConfig {
        n_trees: 1,
        max_features: MaxFeatures::All,
        min_samples_leaf: 1,
        min_samples_split: 2,
        ..Default::default()
    };
    let mut worst_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for case in 0..20 {
        let n = rng.random_range(20..=200);
        let p = rng.random_range(1..=6);
        let levels = if case % 3 == 0 { 5 } else { 1000 };
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..p)
                    .map(|_| rng.random_range(0..levels) as f64 / levels as f64)
                    .collect()
            })
            .collect();
        // XOR-like and threshold concepts with label noise
        let y: Vec<usize> = x
            .iter()
            .map(|r| {
                let base = if case % 2 == 0 {
                    (r[0] > 0.5) != (r[p - 1] > 0.3)
                } else {
                    r.iter().sum::<f64>() > p as f64 / 2.0
                };
                (base ^ (rng.random_range(0.0..1.0) < 0.1)) as usize
            })
            .collect();
        let mut data = Dataset::new((0..p).map(|i| format!("x{i}")).collect());
        for (r, &l) in x.iter().zip(&y) {
            data.push(r, Label::from_index(l).unwrap(), "p", Activity::TouchNose)
                .unwrap();
        }
        let tree = train_tree(&data, &cfg, &mut RngSeed(case).rng()).unwrap();
        let correct = (0..n).filter(|&i| tree.predict_label(&x[i]).index() == y[i]).count();
        let acc = correct as f64 / n as f64;
        let oracle = best_depth2_accuracy(&x, &y);
        worst_margin = worst_margin.min(acc - oracle);
        if acc < oracle {
            failures.push(format!("case {case}: tree {acc:.3} < depth-2 optimum {oracle:.3}"));
        }
    }
    let elapsed = started.elapsed();
    Outcome::check(
        failures.is_empty() && elapsed < Duration::from_secs(60),
        if failures.is_empty() {
            format!(
                "20 datasets, tree accuracy minus depth-2 optimum >= {worst_margin:.3}, {:.2}s",
                elapsed.as_secs_f64()
            )
        } else {
            failures.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------
// 6. Synthetic end to end

fn c6_synthetic_end_to_end() -> Outcome {
    let started = Instant::now();
    let base = synthetic_feature_dataset(&FeatureTableSpec::default(), RngSeed(6)).unwrap();
    let data = base.poly_expanded().unwrap();
    let cfg = ForestConfig::default();
    let seed = RngSeed(60);
    let (report, forest) = train_test_eval(&data, &cfg, 0.2, seed, None).unwrap();
    let sweep = sweep_feature_count(&data, forest.importances(), 10, &cfg, 0.2, seed).unwrap();
    let elapsed = started.elapsed();

    // The informative base columns are the first five: ax_min .. ax_q75.
    let informative: Vec<String> = base.feature_names()[..5].to_vec();
    let top: Vec<&String> = sweep.ranking[..10].iter().map(|&i| &data.feature_names()[i]).collect();
    let recovered = top
        .iter()
        .filter(|n| n.split(['*', '^']).any(|part| informative.iter().any(|f| f == part)))
        .count();
    let full_row = sweep.rows.last().unwrap().1;
    Outcome::check(
        report.accuracy >= 0.95
            && sweep.elbow_k <= 200
            && full_row == report.accuracy
            && elapsed < Duration::from_secs(300),
        format!(
            "{} windows, {} participants, split accuracy {:.4}, elbow k = {}, \
             k=1540 row {:.4}, {recovered}/10 top features built from informative columns, {:.1}s",
            data.len(),
            data.participant_ids().len(),
            report.accuracy,
            sweep.elbow_k,
            full_row,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------
// 7. Published dataset

fn c7_dataset() -> Outcome {
    let Some(dir) = std::env::var_os("FACEGATE_DATASET_DIR") else {
        return Outcome {
            status: Status::Waived,
            detail: "FACEGATE_DATASET_DIR not set; published recordings unavailable".into(),
        };
    };
    let sessions = match read_session_dir(std::path::Path::new(&dir)) {
        Ok(s) if !s.is_empty() => s,
        Ok(_) => {
            return Outcome {
                status: Status::Waived,
                detail: format!("no .session files in {}", PathBuf::from(&dir).display()),
            }
        }
        Err(e) => return Outcome::check(false, format!("cannot read sessions: {e}")),
    };
    let mut windows = Vec::new();
    for s in &sessions {
        let trimmed =
            trim_session(s, DEFAULT_TRIM_MARGIN).and_then(|t| facegate_core::features::session_windows(&t, 0.4));
        match trimmed {
            Ok(w) => windows.extend(w),
            Err(e) => log_skip(&s.participant, &e),
        }
    }
    let data = match Dataset::from_windows(&windows, true) {
        Ok(d) => d,
        Err(e) => return Outcome::check(false, format!("featurization failed: {e}")),
    };
    let cfg = ForestConfig::default();
    let seed = RngSeed(42);
    let (split, forest) = train_test_eval(&data, &cfg, 0.2, seed, Some(340)).unwrap();
    let test_rows = split.confusion.total();
    let expected_test = (data.len() as f64 * 0.2).ceil() as usize;
    let keep: Vec<usize> = {
        let (train, _) = eval::split_train_test(&data, 0.2, seed).unwrap();
        let full = train_forest(&train, &cfg).unwrap();
        full.ranked_features().into_iter().take(340).collect()
    };
    let loo = eval::leave_one_out(&data, &cfg, Some(&keep)).unwrap();
    let checks = [
        ("split accuracy", split.accuracy, 0.884, 0.03),
        ("split fpr", split.fpr, 0.155, 0.05),
        ("split fnr", split.fnr, 0.10, 0.05),
        ("loo mean", loo.accuracy, 0.703, 0.05),
    ];
    let mut ok = test_rows == expected_test && forest.feature_names().len() == 340;
    let mut detail = format!("{} windows, {test_rows} test rows", data.len());
    for (name, got, want, tol) in checks {
        let inside = (got - want).abs() <= tol;
        ok &= inside;
        let _ = write!(detail, ", {name} {got:.4} (target {want} +/- {tol})");
    }
    Outcome::check(ok, detail)
}

fn log_skip(participant: &str, e: &facegate_core::Error) {
    eprintln!("skipping a session of {participant}: {e}");
}

// ---------------------------------------------------------------------------
// 8. Window sweep shape

fn c8_window_sweep() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for seed in [8, 18, 28] {
        let sessions = synthetic_sessions(&SessionSetSpec::default(), RngSeed(seed)).unwrap();
        let rows = sweep_window_size(
            &sessions,
            &[0.2, 0.4],
            &ForestConfig::default(),
            0.2,
            RngSeed(seed),
            true,
        )
        .unwrap();
        ok &= rows[1].accuracy > rows[0].accuracy;
        parts.push(format!(
            "seed {seed}: 0.2s {:.3} vs 0.4s {:.3}",
            rows[0].accuracy, rows[1].accuracy
        ));
    }
    Outcome::check(ok, format!("synthetic sessions; {}", parts.join(", ")))
}

// ---------------------------------------------------------------------------
// 9. Pipeline determinism

fn c9_pipeline_determinism() -> Outcome {
    let sessions = synthetic_sessions(&SessionSetSpec::default(), RngSeed(9)).unwrap();
    let mut windows = Vec::new();
    for s in &sessions {
        windows.extend(facegate_core::features::session_windows(s, 0.4).unwrap());
    }
    let data = Dataset::from_windows(&windows, false).unwrap();
    let model = train_forest(
        &data,
        &ForestConfig {
            n_trees: 30,
            ..Default::default()
        },
    )
    .unwrap();
    let spec = TraceSpec {
        repeat: 12,
        ..TraceSpec::new(vec![
            Segment::new(8.0, Template::Rest, 1.0),
            Segment::new(1.5, Template::Burst, 6.0),
            Segment::new(0.5, Template::Swing, 2.0),
        ])
    };
    let trace = synth_trace(&spec, RngSeed(90)).unwrap();
    let cfg = GateConfig::default();
    let render = || {
        let (alerts, report) = run_stream(&trace, &cfg, &model, 0.4).unwrap();
        format!("{}{}", report.to_kv(), alerts_csv(&alerts))
    };
    let first = render();
    let mut identical = (1..5).all(|_| render() == first);
    for threads in [1, 2, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        identical &= pool.install(render) == first;
    }
    let (_, report) = run_stream(&trace, &cfg, &model, 0.4).unwrap();
    let audit = report.classifier_invocations == report.windows_classified;
    Outcome::check(
        identical && audit,
        format!(
            "5 runs and 1/2/4 threads byte-identical: {identical}; {} windows classified, {} alerts, \
             duty cycle {:.5}",
            report.windows_classified,
            report.alerts,
            report.duty_cycle()
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. Battery hours

fn c10_battery() -> Outcome {
    Outcome {
        status: Status::Note,
        detail: "battery-hour measurements need the watch hardware; the gate pass fraction (criterion 3) \
                 and classifier duty cycle (criterion 9) stand in for energy"
            .into(),
    }
}
