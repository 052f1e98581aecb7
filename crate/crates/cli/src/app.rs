//! Subcommand and flag table. Every flag doubles as a config-file key (with
//! dashes or underscores), so a run's manifest can be fed back as `--config`.

use clap::{Arg, ArgAction, Command};
use facegate_core::eval::{DEFAULT_TEST_FRACTION, WINDOW_SWEEP_SIZES};
use facegate_core::features::DEFAULT_WINDOW_SECONDS;
use facegate_core::forest::{SearchSpace, UNBOUNDED_DEPTH};
use facegate_core::ingest::DEFAULT_TRIM_MARGIN;
use facegate_core::synth::{FeatureTableSpec, SessionSetSpec};
use facegate_core::{ForestConfig, GateConfig};

pub const THREADS_ENV: &str = "FACEGATE_THREADS";

/// One layered parameter.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: &'static str,
    pub default: Option<String>,
    pub help: &'static str,
    /// Accepts a bare `--flag` as `true`.
    pub switch: bool,
}

impl Param {
    /// Config and manifest key.
    pub fn key(&self) -> String {
        self.name.replace('-', "_")
    }
}

fn opt(name: &'static str, help: &'static str) -> Param {
    Param {
        name,
        default: None,
        help,
        switch: false,
    }
}

fn def(name: &'static str, default: impl ToString, help: &'static str) -> Param {
    Param {
        name,
        default: Some(default.to_string()),
        help,
        switch: false,
    }
}

fn switch(name: &'static str, default: bool, help: &'static str) -> Param {
    Param {
        name,
        default: Some(default.to_string()),
        help,
        switch: true,
    }
}

pub struct Sub {
    pub name: &'static str,
    pub about: &'static str,
    /// Extra names for `--config`.
    pub config_aliases: &'static [&'static str],
    pub params: Vec<Param>,
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn depth(d: usize) -> String {
    if d == UNBOUNDED_DEPTH {
        "none".into()
    } else {
        d.to_string()
    }
}

fn forest_params(poly_default: bool) -> Vec<Param> {
    let c = ForestConfig::default();
    vec![
        def("n-trees", c.n_trees, "Trees in the forest"),
        def("max-depth", depth(c.max_depth), "Maximum tree depth, or `none`"),
        def("min-samples-leaf", c.min_samples_leaf, "Minimum rows in a leaf"),
        def(
            "min-samples-split",
            c.min_samples_split,
            "Minimum rows to split a node; at least twice --min-samples-leaf",
        ),
        def(
            "max-features",
            c.max_features,
            "Features tried per split: all, sqrt, log2, a count or a fraction",
        ),
        switch("bootstrap", c.bootstrap, "Draw a bootstrap sample per tree"),
        def("seed", c.seed.0, "Seed for every random choice"),
        switch(
            "poly",
            poly_default,
            "Expand 54 base features to 1540 degree-2 terms in memory",
        ),
    ]
}

fn gate_params() -> Vec<Param> {
    let g = GateConfig::default();
    vec![
        def("t-sta", g.t_sta, "Short averaging window, seconds"),
        def("t-lta", g.t_lta, "Long averaging window, seconds"),
        def(
            "threshold",
            g.threshold,
            "STA/LTA ratio above which samples pass; must exceed 1",
        ),
    ]
}

fn trace_params() -> Vec<Param> {
    vec![
        opt("trace", "Recorded trace: a .session file or a sensor CSV"),
        opt("synth", "Synthetic trace spec file"),
        opt("mapping", "Column mapping for a sensor CSV trace"),
        def("seed", 42, "Noise seed for --synth"),
    ]
}

pub fn subcommands() -> Vec<Sub> {
    let space = SearchSpace::default();
    let table = FeatureTableSpec::default();
    let sessions = SessionSetSpec::default();
    let mut subs = vec![
        Sub {
            name: "ingest",
            about: "Align sensor CSVs with annotations and write normalized session files",
            config_aliases: &[],
            params: vec![
                opt("sensors", "Directory holding <session_id>.csv sensor files"),
                opt("annotations", "Annotation CSV"),
                opt(
                    "mapping",
                    "Column mapping file (key=value); defaults to named columns t,ax,..,gz",
                ),
            ],
        },
        Sub {
            name: "extract",
            about: "Cut sessions into windows and write a feature table",
            config_aliases: &[],
            params: vec![
                opt("sessions", "Directory of .session files"),
                def("window", DEFAULT_WINDOW_SECONDS, "Window length, seconds"),
                def("trim", DEFAULT_TRIM_MARGIN, "Seconds removed from each session end"),
                switch(
                    "poly",
                    false,
                    "Write all 1540 degree-2 terms instead of the 54 base features",
                ),
            ],
        },
        Sub {
            name: "train",
            about: "Train a random forest on a feature table",
            config_aliases: &["model-config"],
            params: [
                vec![
                    opt("features", "Feature table, or a directory holding features.csv"),
                    opt("top-k", "Retrain on the k most important features"),
                ],
                forest_params(true),
            ]
            .concat(),
        },
        Sub {
            name: "search",
            about: "Randomized hyperparameter search with stratified k-fold cross-validation",
            config_aliases: &[],
            params: vec![
                opt("features", "Feature table, or a directory holding features.csv"),
                def("draws", space.n_draws, "Configurations drawn"),
                def("folds", space.folds, "Cross-validation folds"),
                def("n-trees", join(&space.n_trees), "Candidate tree counts"),
                def(
                    "max-depth",
                    space.max_depth.iter().map(|&d| depth(d)).collect::<Vec<_>>().join(","),
                    "Candidate depths (`none` is unbounded)",
                ),
                def(
                    "min-samples-leaf",
                    join(&space.min_samples_leaf),
                    "Candidate leaf minimums",
                ),
                def(
                    "min-samples-split",
                    join(&space.min_samples_split),
                    "Candidate split minimums",
                ),
                def("bootstrap", join(&space.bootstrap), "Candidate bootstrap settings"),
                def(
                    "max-features",
                    join(&space.max_features),
                    "Candidate per-split feature counts",
                ),
                def("seed", space.seed.0, "Seed for draws, folds and forests"),
                switch("poly", true, "Expand 54 base features to 1540 degree-2 terms in memory"),
            ],
        },
        Sub {
            name: "eval",
            about: "Train-test split or leave-one-participant-out evaluation",
            config_aliases: &["model-config"],
            params: [
                vec![
                    opt("features", "Feature table, or a directory holding features.csv"),
                    def("mode", "split", "split or loo"),
                    opt("top-k", "Keep only the k most important features"),
                    def(
                        "test-fraction",
                        DEFAULT_TEST_FRACTION,
                        "Held-out share for --mode split",
                    ),
                ],
                forest_params(true),
            ]
            .concat(),
        },
        Sub {
            name: "sweep-window",
            about: "Accuracy against window length",
            config_aliases: &["model-config"],
            params: [
                vec![
                    opt("sessions", "Directory of .session files"),
                    def("windows", join(&WINDOW_SWEEP_SIZES), "Window lengths, seconds"),
                    def("trim", DEFAULT_TRIM_MARGIN, "Seconds removed from each session end"),
                    def("test-fraction", DEFAULT_TEST_FRACTION, "Held-out share"),
                ],
                forest_params(true),
            ]
            .concat(),
        },
        Sub {
            name: "sweep-features",
            about: "Accuracy against the number of top-ranked features kept",
            config_aliases: &["model-config"],
            params: [
                vec![
                    opt("features", "Feature table, or a directory holding features.csv"),
                    def("step", 10, "Feature-count increment"),
                    def("test-fraction", DEFAULT_TEST_FRACTION, "Held-out share"),
                ],
                forest_params(true),
            ]
            .concat(),
        },
        Sub {
            name: "pca-study",
            about: "First principal component's variance share as participants are added",
            config_aliases: &[],
            params: vec![
                opt("features", "Feature table, or a directory holding features.csv"),
                switch("poly", false, "Expand to 1540 degree-2 terms first"),
            ],
        },
        Sub {
            name: "gate-stats",
            about: "Duty cycle of the activity gate on one trace",
            config_aliases: &["gate-config"],
            params: [
                vec![opt("session", "Session file (same as --trace)")],
                trace_params(),
                gate_params(),
            ]
            .concat(),
        },
        Sub {
            name: "simulate",
            about: "Replay a trace through gate, features and forest; alerts go to stdout",
            config_aliases: &["gate-config"],
            params: [
                trace_params(),
                vec![
                    opt("model", "Model file, or a directory holding model.fgm"),
                    def("window", DEFAULT_WINDOW_SECONDS, "Window length, seconds"),
                ],
                gate_params(),
            ]
            .concat(),
        },
        Sub {
            name: "synth",
            about: "Generate a synthetic trace, session set or feature table",
            config_aliases: &[],
            params: vec![
                def("kind", "trace", "trace, sessions or features"),
                opt("spec", "Trace spec file for --kind trace"),
                def("seed", 42, "Noise seed"),
                def(
                    "participants",
                    sessions.participants,
                    "Participants (sessions, features)",
                ),
                def(
                    "sessions-per-class",
                    sessions.sessions_per_class,
                    "Sessions per participant and class (sessions)",
                ),
                def("rows", table.rows, "Rows (features)"),
                def("informative", table.informative, "Label-dependent columns (features)"),
                def(
                    "separation",
                    table.separation,
                    "Class-mean gap of informative columns in noise units (features)",
                ),
            ],
        },
    ];
    for s in &mut subs {
        s.params.push(opt("out", "Output directory"));
    }
    subs
}

pub fn command(subs: &[Sub]) -> Command {
    let mut cmd = Command::new("facegate")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Face-touch detection from wrist motion: ingest, features, forest, evaluation, replay")
        .subcommand_required(true)
        .arg_required_else_help(true);
    for s in subs {
        let mut sc = Command::new(s.name).about(s.about);
        for p in &s.params {
            let mut a = Arg::new(p.name)
                .long(p.name)
                .help(p.help)
                .value_name(p.name.to_uppercase());
            if p.name == "out" {
                a = a.visible_alias("report");
            }
            if let Some(d) = &p.default {
                a = a.default_value(d.clone());
            }
            if p.switch {
                a = a.num_args(0..=1).default_missing_value("true").value_name("BOOL");
            }
            sc = sc.arg(a);
        }
        sc = sc
            .arg(
                Arg::new("config")
                    .long("config")
                    .visible_aliases(s.config_aliases.iter().copied())
                    .value_name("FILE")
                    .help("key=value file; command-line flags take precedence"),
            )
            .arg(
                Arg::new("threads")
                    .long("threads")
                    .env(THREADS_ENV)
                    .value_name("N")
                    .help("Worker threads; 0 uses every core")
                    .default_value("0"),
            )
            .arg(
                Arg::new("verbose")
                    .short('v')
                    .long("verbose")
                    .action(ArgAction::Count)
                    .help("More log output; repeat for more"),
            );
        cmd = cmd.subcommand(sc);
    }
    cmd
}
