use std::fmt::Write as _;
use std::path::PathBuf;

use facegate_core::eval::{
    leave_one_out, pca_csv, pca_first_component_variance, split_train_test, sweep_feature_count, sweep_window_size,
    train_test_eval, window_sweep_csv, EvalMode,
};
use facegate_core::features::{session_windows, BASE_FEATURE_COUNT, POLY_FEATURE_COUNT};
use facegate_core::forest::{load_model, parse_depth, randomized_search, train_forest, write_model, SearchSpace};
use facegate_core::gate::gate_stream;
use facegate_core::ingest::{
    load_session, parse_sensor_csv, read_annotations, read_session, read_session_dir, trim_session, write_sensor_csv,
    write_session, ColumnMapping,
};
use facegate_core::pipeline::{alert_line, alerts_csv, run_stream, synth_trace, TraceSpec};
use facegate_core::synth::{synthetic_feature_dataset, synthetic_sessions, FeatureTableSpec, SessionSetSpec};
use facegate_core::types::DEFAULT_SAMPLE_RATE;
use facegate_core::{Dataset, ForestConfig, GateConfig, KeyValues, MaxFeatures, RngSeed, SensorSample, Session};

use crate::params::{invalid, CliError, CliResult, Params};
use crate::run::Run;

pub fn dispatch(name: &str, p: &Params, run: &mut Run) -> CliResult<()> {
    match name {
        "ingest" => ingest(p, run),
        "extract" => extract(p, run),
        "train" => train(p, run),
        "search" => search(p, run),
        "eval" => eval(p, run),
        "sweep-window" => sweep_window(p, run),
        "sweep-features" => sweep_features(p, run),
        "pca-study" => pca_study(p, run),
        "gate-stats" => gate_stats(p, run),
        "simulate" => simulate(p, run),
        "synth" => synth(p, run),
        other => invalid(format!("unknown subcommand `{other}`")),
    }
}

/// Stdout is a reporting channel; a closed pipe (`| head`) is not an error.
fn say_raw(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

macro_rules! say {
    ($($arg:tt)*) => {
        say_raw(&format!("{}\n", format_args!($($arg)*)))
    };
}

fn kv_text(kv: &KeyValues) -> String {
    kv.to_string()
}

fn mapping(p: &Params, run: &mut Run) -> CliResult<ColumnMapping> {
    match p.opt_path("mapping")? {
        Some(path) => {
            run.input("mapping", &path);
            let kv = KeyValues::read(&path)?;
            ColumnMapping::from_kv(&kv).map_err(|e| CliError::Invalid(format!("--mapping: {e}")))
        }
        None => Ok(ColumnMapping::default()),
    }
}

fn ingest(p: &Params, run: &mut Run) -> CliResult<()> {
    let sensors = p.path("sensors")?;
    let annotations = p.path("annotations")?;
    let mapping = mapping(p, run)?;
    if !sensors.is_dir() {
        return Err(CliError::Io(format!(
            "--sensors: {} is not a directory",
            sensors.display()
        )));
    }
    run.input("annotations", &annotations);
    let records = read_annotations(&annotations)?;
    if records.is_empty() {
        return invalid("--annotations lists no sessions");
    }
    let mut index = String::from("session_id,participant,activity,stance,samples,phases\n");
    for rec in &records {
        let file = sensors.join(format!("{}.csv", rec.session_id));
        run.input("sensors", &file);
        let s = load_session(&file, rec, &mapping)?;
        run.write(&format!("{}.session", rec.session_id), &write_session(&s))?;
        let _ = writeln!(
            index,
            "{},{},{},{},{},{}",
            rec.session_id,
            s.participant,
            s.label.activity,
            s.label.stance,
            s.samples.len(),
            s.phases.len()
        );
    }
    run.write("sessions.csv", &index)?;
    run.note("sessions", records.len());
    eprintln!("wrote {} sessions to {}", records.len(), run.out_dir().display());
    Ok(())
}

fn positive(p: &Params, key: &str) -> CliResult<f64> {
    let v: f64 = p.get(key)?;
    if !(v > 0.0 && v.is_finite()) {
        return invalid(format!("{} must be positive, got {v}", p.flag(key)));
    }
    Ok(v)
}

fn non_negative(p: &Params, key: &str) -> CliResult<f64> {
    let v: f64 = p.get(key)?;
    if !(v >= 0.0 && v.is_finite()) {
        return invalid(format!("{} must be non-negative, got {v}", p.flag(key)));
    }
    Ok(v)
}

fn fraction(p: &Params, key: &str) -> CliResult<f64> {
    let v: f64 = p.get(key)?;
    if !(v > 0.0 && v < 1.0) {
        return invalid(format!("{} must lie strictly between 0 and 1, got {v}", p.flag(key)));
    }
    Ok(v)
}

fn sessions(p: &Params, run: &mut Run) -> CliResult<Vec<Session>> {
    let dir = p.path("sessions")?;
    run.input("sessions", &dir);
    let sessions = read_session_dir(&dir)?;
    if sessions.is_empty() {
        return invalid(format!("--sessions: no .session files in {}", dir.display()));
    }
    let trim = non_negative(p, "trim")?;
    sessions.iter().map(|s| p.check(trim_session(s, trim))).collect()
}

fn extract(p: &Params, run: &mut Run) -> CliResult<()> {
    let window = positive(p, "window")?;
    let poly: bool = p.get("poly")?;
    let sessions = sessions(p, run)?;
    let mut windows = Vec::new();
    for s in &sessions {
        windows.extend(p.check(session_windows(s, window))?);
    }
    if windows.is_empty() {
        return invalid(format!(
            "no complete {window}s window in any transition; try a smaller --window"
        ));
    }
    let data = p.check(Dataset::from_windows(&windows, poly))?;
    run.write("features.csv", &data.to_csv())?;
    let [neg, pos] = data.class_counts();
    run.note("rows", data.len());
    run.note("rows_no_face_touch", neg);
    run.note("rows_face_touch", pos);
    eprintln!(
        "wrote {} windows ({} face touch) x {} features",
        data.len(),
        pos,
        data.n_features()
    );
    Ok(())
}

/// A file, or `dir/default_name` when a directory is given.
fn file_or_dir(path: PathBuf, default_name: &str) -> PathBuf {
    if path.is_dir() {
        path.join(default_name)
    } else {
        path
    }
}

fn features(p: &Params, run: &mut Run) -> CliResult<Dataset> {
    let path = file_or_dir(p.path("features")?, "features.csv");
    run.input("features", &path);
    let data = Dataset::read_csv(&path)?;
    if data.is_empty() {
        return invalid("--features table has no rows");
    }
    let poly: bool = p.get("poly")?;
    if !poly || data.n_features() == POLY_FEATURE_COUNT {
        return Ok(data);
    }
    if data.n_features() != BASE_FEATURE_COUNT {
        return invalid(format!(
            "--poly expects {BASE_FEATURE_COUNT} base feature columns, found {}; pass --poly false",
            data.n_features()
        ));
    }
    Ok(data.poly_expanded()?)
}

fn forest_config(p: &Params) -> CliResult<ForestConfig> {
    let max_depth = p.kv().get("max_depth").unwrap_or("none");
    let cfg = ForestConfig {
        n_trees: p.get("n_trees")?,
        max_depth: parse_depth(max_depth).map_err(|e| CliError::Invalid(format!("--max-depth: {e}")))?,
        min_samples_leaf: p.get("min_samples_leaf")?,
        min_samples_split: p.get("min_samples_split")?,
        bootstrap: p.get("bootstrap")?,
        max_features: p.get::<MaxFeatures>("max_features")?,
        seed: RngSeed(p.get("seed")?),
    };
    p.check(cfg.validate())?;
    Ok(cfg)
}

fn top_k(p: &Params, data: &Dataset) -> CliResult<Option<usize>> {
    let k: Option<usize> = p.opt("top_k")?;
    match k {
        Some(k) if k == 0 || k > data.n_features() => {
            invalid(format!("--top-k must lie in 1..={}, got {k}", data.n_features()))
        }
        _ => Ok(k),
    }
}

fn importances_csv(names: &[String], importances: &[f64]) -> String {
    let mut s = String::from("rank,feature,importance\n");
    let order = facegate_core::eval::rank_by_importance(importances);
    for (r, &i) in order.iter().enumerate() {
        let _ = writeln!(s, "{},{},{}", r + 1, names[i], importances[i]);
    }
    s
}

fn train(p: &Params, run: &mut Run) -> CliResult<()> {
    let cfg = forest_config(p)?;
    let mut data = features(p, run)?;
    let k = top_k(p, &data)?;
    let mut forest = p.check(train_forest(&data, &cfg))?;
    if let Some(k) = k.filter(|&k| k < data.n_features()) {
        let keep: Vec<usize> = forest.ranked_features().into_iter().take(k).collect();
        data = data.select_features(&keep)?;
        forest = p.check(train_forest(&data, &cfg))?;
    }
    run.write("model.fgm", &write_model(&forest)?)?;
    run.write(
        "importances.csv",
        &importances_csv(forest.feature_names(), forest.importances()),
    )?;
    run.write("config.kv", &kv_text(&cfg.to_kv()))?;
    run.note("rows", data.len());
    run.note("features", data.n_features());
    eprintln!(
        "trained {} trees on {} rows x {} features",
        forest.trees().len(),
        data.len(),
        data.n_features()
    );
    Ok(())
}

fn search(p: &Params, run: &mut Run) -> CliResult<()> {
    let mut kv = KeyValues::new();
    for key in [
        "n_trees",
        "max_depth",
        "min_samples_leaf",
        "min_samples_split",
        "bootstrap",
        "max_features",
        "draws",
        "folds",
        "seed",
    ] {
        p.list::<String>(key)?;
        kv.push(key, p.kv().get(key).unwrap_or(""));
    }
    let space = SearchSpace::default()
        .overlay(&kv)
        .map_err(|e| CliError::Invalid(p.flagify(&e.to_string())))?;
    p.check(space.validate())?;
    let data = features(p, run)?;
    let result = p.check(randomized_search(&data, &space))?;
    run.write("search.csv", &result.to_csv())?;
    run.write("best.kv", &kv_text(&result.best.to_kv()))?;
    let best = result.best_row();
    run.note("best_mean_accuracy", best.mean_accuracy);
    say!(
        "best: {} (cv accuracy {:.4} ± {:.4})",
        result
            .best
            .to_kv()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" "),
        best.mean_accuracy,
        best.std_accuracy
    );
    Ok(())
}

fn eval(p: &Params, run: &mut Run) -> CliResult<()> {
    let mode = match p.get::<String>("mode")?.as_str() {
        "split" => EvalMode::Split,
        "loo" => EvalMode::LeaveOneOut,
        other => return invalid(format!("--mode must be split or loo, got `{other}`")),
    };
    let cfg = forest_config(p)?;
    let frac = fraction(p, "test_fraction")?;
    let data = features(p, run)?;
    let k = top_k(p, &data)?;
    let report = match mode {
        EvalMode::Split => p.check(train_test_eval(&data, &cfg, frac, cfg.seed, k))?.0,
        EvalMode::LeaveOneOut => {
            let keep = match k.filter(|&k| k < data.n_features()) {
                Some(k) => {
                    let ranker = p.check(train_forest(&data, &cfg))?;
                    Some(ranker.ranked_features().into_iter().take(k).collect::<Vec<_>>())
                }
                None => None,
            };
            p.check(leave_one_out(&data, &cfg, keep.as_deref()))?
        }
    };
    run.write("report.txt", &report.to_text())?;
    run.write("report.kv", &kv_text(&report.to_kv()))?;
    if mode == EvalMode::LeaveOneOut {
        run.write("participants.csv", &report.participants_csv())?;
    }
    say_raw(&report.to_text());
    Ok(())
}

fn sweep_window(p: &Params, run: &mut Run) -> CliResult<()> {
    let sizes: Vec<f64> = p.list("windows")?;
    if let Some(bad) = sizes.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return invalid(format!("--windows entries must be positive, got {bad}"));
    }
    let cfg = forest_config(p)?;
    let frac = fraction(p, "test_fraction")?;
    let poly: bool = p.get("poly")?;
    let sessions = sessions(p, run)?;
    let rows = p.check(sweep_window_size(&sessions, &sizes, &cfg, frac, cfg.seed, poly))?;
    run.write("window_sweep.csv", &window_sweep_csv(&rows))?;
    let mut kv = KeyValues::new();
    for r in &rows {
        kv.push(format!("window.{}.rows", r.window_seconds), r.windows);
        kv.push(format!("window.{}.accuracy", r.window_seconds), r.accuracy);
    }
    run.write("report.kv", &kv_text(&kv))?;
    for r in &rows {
        say!(
            "{:>5} s  {:>6} windows  accuracy {:.4}",
            r.window_seconds,
            r.windows,
            r.accuracy
        );
    }
    Ok(())
}

fn sweep_features(p: &Params, run: &mut Run) -> CliResult<()> {
    let step: usize = p.get("step")?;
    if step == 0 {
        return invalid("--step must be at least 1");
    }
    let cfg = forest_config(p)?;
    let frac = fraction(p, "test_fraction")?;
    let data = features(p, run)?;
    let (train, _) = p.check(split_train_test(&data, frac, cfg.seed))?;
    let ranker = p.check(train_forest(&train, &cfg))?;
    let sweep = p.check(sweep_feature_count(
        &data,
        ranker.importances(),
        step,
        &cfg,
        frac,
        cfg.seed,
    ))?;
    run.write("feature_sweep.csv", &sweep.to_csv())?;
    run.write(
        "importances.csv",
        &importances_csv(data.feature_names(), ranker.importances()),
    )?;
    let mut kv = KeyValues::new();
    kv.push("elbow_k", sweep.elbow_k);
    if let Some((_, a)) = sweep.rows.iter().find(|(k, _)| *k == sweep.elbow_k) {
        kv.push("elbow_accuracy", a);
    }
    if let Some((k, a)) = sweep.rows.last() {
        kv.push("all_features", k).push("all_features_accuracy", a);
    }
    run.write("report.kv", &kv_text(&kv))?;
    say!("elbow at k = {}", sweep.elbow_k);
    Ok(())
}

fn pca_study(p: &Params, run: &mut Run) -> CliResult<()> {
    let data = features(p, run)?;
    let rows = p.check(pca_first_component_variance(&data))?;
    run.write("pca.csv", &pca_csv(&rows))?;
    for (k, v) in &rows {
        say!("{k:>3} participants  first component {v:.2}%");
    }
    Ok(())
}

/// The trace named by `--trace`/`--session`/`--synth`, with its sample rate.
fn trace(p: &Params, run: &mut Run) -> CliResult<(Vec<SensorSample>, f64)> {
    let session = p.opt_path("session")?;
    let recorded = match (p.opt_path("trace")?, session) {
        (Some(_), Some(_)) => return invalid("--trace and --session name the same input; pass one"),
        (a, b) => a.or(b),
    };
    match (recorded, p.opt_path("synth")?) {
        (Some(_), Some(_)) => invalid("--trace and --synth are mutually exclusive"),
        (None, None) => invalid("one of --trace or --synth is required"),
        (None, Some(spec_path)) => {
            run.input("synth", &spec_path);
            let text = std::fs::read_to_string(&spec_path)
                .map_err(|e| CliError::Io(format!("--synth {}: {e}", spec_path.display())))?;
            let spec = TraceSpec::parse(&text).map_err(|e| CliError::Invalid(format!("--synth: {e}")))?;
            let seed = RngSeed(p.get("seed")?);
            Ok((synth_trace(&spec, seed)?, spec.sample_rate))
        }
        (Some(path), None) => {
            run.input("trace", &path);
            if path.extension().is_some_and(|e| e == "session") {
                let s = read_session(&path)?;
                Ok((s.samples, s.sample_rate))
            } else {
                let m = mapping(p, run)?;
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| CliError::Io(format!("--trace {}: {e}", path.display())))?;
                Ok((parse_sensor_csv(&text, &m)?, m.sample_rate))
            }
        }
    }
}

fn gate_config(p: &Params, sample_rate: f64) -> CliResult<GateConfig> {
    let g = GateConfig {
        t_sta: p.get("t_sta")?,
        t_lta: p.get("t_lta")?,
        threshold: p.get("threshold")?,
        sample_rate,
    };
    p.check(g.validate())?;
    Ok(g)
}

fn gate_stats(p: &Params, run: &mut Run) -> CliResult<()> {
    gate_config(p, DEFAULT_SAMPLE_RATE)?;
    let (samples, rate) = trace(p, run)?;
    let g = gate_config(p, rate)?;
    let (_, report) = gate_stream(&samples, &g)?;
    let mut kv = report.to_kv();
    kv.push("duration_seconds", samples.len() as f64 / rate);
    kv.extend(&g.to_kv());
    run.write("gate_report.kv", &kv_text(&kv))?;
    let text = format!(
        "samples:        {}\n\
         passed:         {}\n\
         pass fraction:  {:.4}\n\
         activations:    {}\n\
         gate:           t_sta={} t_lta={} threshold={} rate={}\n",
        report.total_samples,
        report.passed_samples,
        report.pass_fraction,
        report.activations,
        g.t_sta,
        g.t_lta,
        g.threshold,
        g.sample_rate
    );
    run.write("gate_report.txt", &text)?;
    say_raw(&text);
    Ok(())
}

fn simulate(p: &Params, run: &mut Run) -> CliResult<()> {
    gate_config(p, DEFAULT_SAMPLE_RATE)?;
    let window = positive(p, "window")?;
    let model_path = file_or_dir(p.path("model")?, "model.fgm");
    run.input("model", &model_path);
    let model = load_model(&model_path)?;
    let (samples, rate) = trace(p, run)?;
    let g = gate_config(p, rate)?;
    let (alerts, report) = p.check(run_stream(&samples, &g, &model, window))?;
    for a in &alerts {
        say!("{}", alert_line(a));
    }
    let mut kv = report.to_kv();
    kv.extend(&g.to_kv());
    kv.push("window_seconds", window);
    run.write("report.kv", &kv_text(&kv))?;
    run.write("alerts.csv", &alerts_csv(&alerts))?;
    // Wall-clock timings differ between runs; kept apart from report.kv.
    run.write_volatile("latency.kv", &kv_text(&report.latency.to_kv()))?;
    eprintln!(
        "{} samples, pass fraction {:.4}, {} windows classified, {} alerts",
        report.total_samples, report.pass_fraction, report.windows_classified, report.alerts
    );
    Ok(())
}

fn synth(p: &Params, run: &mut Run) -> CliResult<()> {
    let seed = RngSeed(p.get("seed")?);
    match p.get::<String>("kind")?.as_str() {
        "trace" => {
            let spec_path = p.path("spec")?;
            run.input("spec", &spec_path);
            let text = std::fs::read_to_string(&spec_path)
                .map_err(|e| CliError::Io(format!("--spec {}: {e}", spec_path.display())))?;
            let spec = TraceSpec::parse(&text).map_err(|e| CliError::Invalid(format!("--spec: {e}")))?;
            let samples = synth_trace(&spec, seed)?;
            let mapping = ColumnMapping {
                sample_rate: spec.sample_rate,
                ..ColumnMapping::default()
            };
            run.write("trace.csv", &write_sensor_csv(&samples, &mapping)?)?;
            run.write("trace.spec", &spec.to_text())?;
            run.note("samples", samples.len());
        }
        "sessions" => {
            let spec = SessionSetSpec {
                participants: p.get("participants")?,
                sessions_per_class: p.get("sessions_per_class")?,
                ..SessionSetSpec::default()
            };
            let sessions = p.check(synthetic_sessions(&spec, seed))?;
            for (i, s) in sessions.iter().enumerate() {
                let name = format!("{}_{:03}_{}.session", s.participant, i, s.label.activity);
                run.write(&name, &write_session(s))?;
            }
            run.note("sessions", sessions.len());
        }
        "features" => {
            let spec = FeatureTableSpec {
                rows: p.get("rows")?,
                participants: p.get("participants")?,
                informative: p.get("informative")?,
                separation: p.get("separation")?,
            };
            let data = p.check(synthetic_feature_dataset(&spec, seed))?;
            run.write("features.csv", &data.to_csv())?;
            run.note("rows", data.len());
        }
        other => return invalid(format!("--kind must be trace, sessions or features, got `{other}`")),
    }
    eprintln!("wrote synthetic data to {}", run.out_dir().display());
    Ok(())
}
