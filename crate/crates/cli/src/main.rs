//! `plir`: two-stage long-document re-ranking pipeline.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 data/format error,
//! 3 numerical abort.

mod commands;
mod config;
mod manifest;

use clap::{Arg, ArgAction, Command};
use plir_core::Error;

use config::{load_config, CliConfig, CONFIG_ENV, OVERRIDES};

fn build_cli() -> Command {
    let mut cmd = Command::new("plir")
        .about("Two-stage long-document re-ranking: BM25 pooling, paragraph-pair encoding, interaction max-pooling, attention-RNN aggregation")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .arg(
            Arg::new("config")
                .short('c')
                .long("config")
                .value_name("FILE")
                .global(true)
                .help(format!("TOML config file (default: ${CONFIG_ENV} when set)")),
        );
    for (name, help) in OVERRIDES {
        cmd = cmd.arg(
            Arg::new(*name)
                .long(*name)
                .value_name("VALUE")
                .global(true)
                .help(*help)
                .help_heading("Config overrides"),
        );
    }
    cmd.subcommand(Command::new("synth").about("Generate a synthetic retrieval benchmark"))
        .subcommand(Command::new("index").about("Build the vocabulary and the BM25 inverted index"))
        .subcommand(
            Command::new("retrieve")
                .about("First-stage top-K retrieval, written as a TREC run file")
                .arg(Arg::new("run-out").long("run-out").value_name("FILE"))
                .arg(Arg::new("queries").long("queries").value_name("FILE"))
                .arg(
                    Arg::new("whole-corpus")
                        .long("whole-corpus")
                        .action(ArgAction::SetTrue)
                        .help("score the whole corpus instead of per-query pools"),
                ),
        )
        .subcommand(
            Command::new("pool-augment")
                .about("Build training pools: gold-relevant docs plus sampled negatives")
                .arg(Arg::new("run").long("run").value_name("FILE"))
                .arg(Arg::new("pool-out").long("pool-out").value_name("FILE")),
        )
        .subcommand(
            Command::new("stage1-build")
                .about("Build the paragraph-pair training dataset")
                .arg(Arg::new("dataset-out").long("dataset-out").value_name("FILE"))
                .arg(
                    Arg::new("tasks")
                        .long("tasks")
                        .value_name("FILE")
                        .help("task-id list restricting the paragraph tasks used"),
                )
                .arg(
                    Arg::new("merge-paragraph-splits")
                        .long("merge-paragraph-splits")
                        .action(ArgAction::SetTrue)
                        .help("merge the paragraph train and test splits (use every task)"),
                ),
        )
        .subcommand(
            Command::new("stage1-train")
                .about("Train the paragraph-pair encoder")
                .arg(Arg::new("dataset").long("dataset").value_name("FILE"))
                .arg(Arg::new("encoder-out").long("encoder-out").value_name("FILE")),
        )
        .subcommand(
            Command::new("encode")
                .about("Build interaction matrices for every (query, candidate) pair of a pool")
                .arg(Arg::new("pool").long("pool").value_name("FILE"))
                .arg(Arg::new("run").long("run").value_name("FILE"))
                .arg(Arg::new("encoder").long("encoder").value_name("FILE"))
                .arg(
                    Arg::new("vectors")
                        .long("vectors")
                        .value_name("FILE")
                        .help("use an imported pair-vector store instead of the encoder"),
                )
                .arg(Arg::new("cache-out").long("cache-out").value_name("FILE"))
                .arg(
                    Arg::new("export-vectors")
                        .long("export-vectors")
                        .value_name("FILE")
                        .help("also export the computed pair vectors as a vector store"),
                ),
        )
        .subcommand(
            Command::new("agg-train")
                .about("Train the attention-RNN aggregator on cached interactions")
                .arg(Arg::new("cache").long("cache").value_name("FILE"))
                .arg(Arg::new("model-out").long("model-out").value_name("FILE"))
                .arg(Arg::new("checkpoint-dir").long("checkpoint-dir").value_name("DIR")),
        )
        .subcommand(
            Command::new("predict")
                .about("Classify cached candidates with a trained aggregator")
                .arg(Arg::new("cache").long("cache").value_name("FILE"))
                .arg(Arg::new("model").long("model").value_name("FILE"))
                .arg(Arg::new("predictions-out").long("predictions-out").value_name("FILE"))
                .arg(Arg::new("run-out").long("run-out").value_name("FILE")),
        )
        .subcommand(
            Command::new("evaluate")
                .about("Pooled metrics over full candidate pools, optional baseline significance")
                .arg(Arg::new("predictions").long("predictions").value_name("FILE"))
                .arg(Arg::new("run").long("run").value_name("FILE"))
                .arg(
                    Arg::new("baseline-run")
                        .long("baseline-run")
                        .value_name("FILE")
                        .help("BM25 run evaluated at the cutoff as the significance baseline"),
                )
                .arg(Arg::new("label").long("label").value_name("NAME"))
                .arg(Arg::new("report-out").long("report-out").value_name("PREFIX")),
        )
        .subcommand(
            Command::new("crossdomain")
                .about("Train and evaluate the six-cell cross-domain transfer grid")
                .arg(Arg::new("domain-a").long("domain-a").value_name("DIR").required(true))
                .arg(Arg::new("domain-b").long("domain-b").value_name("DIR").required(true))
                .arg(Arg::new("name-a").long("name-a").value_name("NAME"))
                .arg(Arg::new("name-b").long("name-b").value_name("NAME")),
        )
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config(_) => 1,
        Error::Io { .. } | Error::Parse { .. } | Error::Format { .. } | Error::Data(_) => 2,
        Error::Numeric(_) => 3,
    }
}

fn resolve_config(matches: &clap::ArgMatches) -> plir_core::Result<CliConfig> {
    let file = matches
        .get_one::<String>("config")
        .map(std::path::PathBuf::from)
        .or_else(|| std::env::var(CONFIG_ENV).ok().map(std::path::PathBuf::from));
    let overrides: Vec<(String, String)> = OVERRIDES
        .iter()
        .filter_map(|(name, _)| {
            matches
                .get_one::<String>(name)
                .map(|v| (name.to_string(), v.clone()))
        })
        .collect();
    load_config(file.as_deref(), &overrides)
}

fn init_threads(threads: usize) {
    if threads > 0 {
        // Ignore AlreadyInitialized: tests may call run() repeatedly.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn run() -> plir_core::Result<()> {
    let matches = match build_cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            return Err(Error::Config(e.to_string()));
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let config = resolve_config(sub)?;
    init_threads(config.threads);
    let get = |key: &str| sub.get_one::<String>(key).cloned();
    match name {
        "synth" => commands::cmd_synth(&config),
        "index" => commands::cmd_index(&config),
        "retrieve" => commands::cmd_retrieve(
            &config,
            &commands::RetrieveArgs {
                run_out: get("run-out"),
                queries: get("queries"),
                whole_corpus: sub.get_flag("whole-corpus"),
            },
        ),
        "pool-augment" => commands::cmd_pool_augment(
            &config,
            &commands::PoolAugmentArgs {
                run: get("run"),
                pool_out: get("pool-out"),
            },
        ),
        "stage1-build" => commands::cmd_stage1_build(
            &config,
            &commands::Stage1BuildArgs {
                dataset_out: get("dataset-out"),
                tasks: get("tasks"),
                merge_paragraph_splits: sub.get_flag("merge-paragraph-splits"),
            },
        ),
        "stage1-train" => commands::cmd_stage1_train(
            &config,
            &commands::Stage1TrainArgs {
                dataset: get("dataset"),
                encoder_out: get("encoder-out"),
            },
        ),
        "encode" => commands::cmd_encode(
            &config,
            &commands::EncodeArgs {
                pool: get("pool"),
                run: get("run"),
                encoder: get("encoder"),
                vectors: get("vectors"),
                cache_out: get("cache-out"),
                export_vectors: get("export-vectors"),
            },
        ),
        "agg-train" => commands::cmd_agg_train(
            &config,
            &commands::AggTrainArgs {
                cache: get("cache"),
                model_out: get("model-out"),
                checkpoint_dir: get("checkpoint-dir"),
            },
        ),
        "predict" => commands::cmd_predict(
            &config,
            &commands::PredictArgs {
                cache: get("cache"),
                model: get("model"),
                predictions_out: get("predictions-out"),
                run_out: get("run-out"),
            },
        ),
        "evaluate" => commands::cmd_evaluate(
            &config,
            &commands::EvaluateArgs {
                predictions: get("predictions"),
                run: get("run"),
                baseline_run: get("baseline-run"),
                label: get("label"),
                report_out: get("report-out"),
            },
        ),
        "crossdomain" => commands::cmd_crossdomain(
            &config,
            &commands::CrossDomainArgs {
                domain_a: get("domain-a").expect("required"),
                domain_b: get("domain-b").expect("required"),
                name_a: get("name-a"),
                name_b: get("name-b"),
            },
        ),
        other => Err(Error::Config(format!("unknown subcommand `{other}`"))),
    }
}

fn main() {
    match run() {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}
