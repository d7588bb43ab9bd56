//! Command-line entry point: evaluation, mitigation, artifact building,
//! layer selection, lens dumps, QC runs, and report rendering.
//!
//! Exit codes: 0 success, 1 usage, 2 data integrity, 3 model/capability,
//! 4 degenerate math. Errors also emit one machine-parsable line on stderr.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fragile_core::artifact::{InterventionDescriptor, LensFile, ResultsFile, VecArtifact};
use fragile_core::assets;
use fragile_core::corpus::{load_corpus, save_corpus, Corpus};
use fragile_core::elicit::{PromptStyle, SamplingConfig};
use fragile_core::error::Error;
use fragile_core::layersel::{load_value_records, SchwartzCircle};
use fragile_core::metrics::{CellStats, TiePolicy};
use fragile_core::modelio::resolve;
use fragile_core::qc::{
    run_qc_loop, CommandClient, GenerationClient, GenerationParams, QcLoopConfig, QcOutcome,
    ScriptedClient, SelectionOrder,
};
use fragile_core::report::{
    gap_curve_chart, quadrant_bar_chart, render_aggregate_text, render_mitigation_text,
    ConditionRow,
};
use fragile_core::run::{
    load_steering, load_subspace, resolve_layer, run_evaluate, run_lens, run_select_layer,
    run_valign_build, BuildOptions, EvaluateOptions, LensOptions, RunError, SelectLayerOptions,
};
use fragile_core::valign::{
    make_baseline_hook, make_valign_hook, validate_artifacts, BaselineHookKind, ValignConfig,
    DEFAULT_K,
};

#[derive(Parser)]
#[command(name = "fragile", version, about = "Framing-sensitivity evaluation and mitigation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SamplingArgs {
    /// Sampling temperature.
    #[arg(long, default_value_t = 0.7)]
    temperature: f64,
    /// Nucleus truncation mass.
    #[arg(long, default_value_t = 0.95)]
    top_p: f64,
    /// Samples per decision distribution.
    #[arg(long, default_value_t = 10)]
    num_samples: usize,
    /// New tokens per sample (styles may override).
    #[arg(long, default_value_t = 1)]
    max_new_tokens: usize,
    /// Run seed; all per-instance seeds derive from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SamplingArgs {
    fn to_config(&self) -> SamplingConfig {
        SamplingConfig {
            temperature: self.temperature,
            top_p: self.top_p,
            num_samples: self.num_samples,
            max_new_tokens: self.max_new_tokens,
            rng_seed: self.seed,
        }
    }
}

fn parse_style(s: &str) -> Result<PromptStyle, String> {
    match s {
        "base" => Ok(PromptStyle::Base),
        "instruction" => Ok(PromptStyle::Instruction),
        "cot" => Ok(PromptStyle::Cot),
        "third-person" | "third_person" => Ok(PromptStyle::ThirdPerson),
        other => Err(format!("unknown style `{other}`")),
    }
}

fn parse_tie_policy(s: &str) -> Result<TiePolicy, String> {
    match s {
        "exclude" => Ok(TiePolicy::ExcludeTieModal),
        "include" => Ok(TiePolicy::IncludeTieModal),
        other => Err(format!("unknown tie policy `{other}`")),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Elicit base and framed decisions over a corpus and report
    /// flip/quadrant sensitivity.
    Evaluate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, value_parser = parse_style, default_value = "base")]
        style: PromptStyle,
        /// File whose contents become the system-role anchor.
        #[arg(long)]
        anchor_file: Option<PathBuf>,
        #[arg(long, default_value_t = fragile_core::metrics::DEFAULT_TAU)]
        tau: f64,
        #[arg(long, value_parser = parse_tie_policy, default_value = "exclude")]
        tie_policy: TiePolicy,
        /// Synthesize label-swapped twins for instances lacking one.
        #[arg(long)]
        synthesize_swaps: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Output directory for results.json and report.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare mitigation conditions against the base condition.
    Mitigate {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = fragile_core::metrics::DEFAULT_TAU)]
        tau: f64,
        #[arg(long, value_parser = parse_tie_policy, default_value = "exclude")]
        tie_policy: TiePolicy,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Conditions to run, comma separated: instruction,cot,third-person,
        /// gaussian,additive,valign,valign-projection,valign-steering.
        #[arg(long, default_value = "valign")]
        conditions: String,
        /// Steering-vector artifact (fragile-vec/1).
        #[arg(long)]
        steering: Option<PathBuf>,
        /// Sensitivity-subspace artifact (fragile-vec/1).
        #[arg(long)]
        subspace: Option<PathBuf>,
        /// Intervention layer; defaults to the artifact's layer or the
        /// pinned per-model table.
        #[arg(long)]
        layer: Option<usize>,
        /// Steering strength for the full intervention.
        #[arg(long, default_value_t = fragile_core::valign::DEFAULT_ALPHA)]
        alpha: f64,
        /// Projection subspace size.
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Scale for the noise and additive baselines.
        #[arg(long, default_value_t = 5.0)]
        baseline_alpha: f64,
        #[arg(long, default_value_t = 7)]
        noise_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the steering-vector and sensitivity-subspace artifacts.
    ValignBuild {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long)]
        layer: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Override the built-in anchor text.
        #[arg(long)]
        anchor_file: Option<PathBuf>,
        /// Override the built-in neutral style corpus (one sentence per line).
        #[arg(long)]
        style_corpus: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score layers and select the intervention layer.
    SelectLayer {
        /// Held-out corpus with framed variants.
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: String,
        /// Line-delimited (text, value, correlation) records.
        #[arg(long)]
        values: PathBuf,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Override the built-in adjacency/opposition circle (JSON).
        #[arg(long)]
        circle: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        /// Directory for the score table; also writes valign-config.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump per-layer direction shifts and plots.
    Lens {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        model: String,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[arg(long, default_value_t = fragile_core::metrics::DEFAULT_TAU)]
        tau: f64,
        /// Top tokens to keep per layer.
        #[arg(long, default_value_t = 5)]
        top_m: usize,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Judge framed variants, regenerating failures, and write a new corpus.
    QcRun {
        #[arg(long)]
        corpus: PathBuf,
        /// Client spec: `stub:<script.json>` or `command:<program>`.
        #[arg(long)]
        client: String,
        #[arg(long, default_value_t = 2)]
        max_regens: usize,
        /// Comma-separated generator ids cycled on regeneration.
        #[arg(long, default_value = "generator-a,generator-b")]
        generators: String,
        #[arg(long, default_value_t = 0.1)]
        gen_temperature: f64,
        #[arg(long, default_value_t = 700)]
        gen_max_tokens: usize,
        /// Output corpus path (the input corpus is never modified).
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render reports from a results or lens file.
    Report {
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        lens: Option<PathBuf>,
        /// Directory for SVG output; omit for text only.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are success, not usage errors.
            if e.use_stderr() {
                eprintln!("{e}");
                eprintln!("fragile-error code=1 stage=usage msg=\"argument parsing failed\"");
                return ExitCode::from(1);
            }
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.source.exit_code();
            eprintln!("fragile: {e}");
            let msg = e.source.to_string().replace('"', "'");
            eprintln!(
                "fragile-error code={code} stage={} msg=\"{}\"",
                e.stage, msg
            );
            ExitCode::from(code as u8)
        }
    }
}

fn usage_error(msg: impl Into<String>) -> RunError {
    RunError {
        stage: "usage",
        instance: None,
        source: Error::Config(msg.into()),
    }
}

fn io_stage(stage: &'static str) -> impl Fn(Error) -> RunError {
    move |source| RunError {
        stage,
        instance: None,
        source,
    }
}

fn read_text(path: &PathBuf, stage: &'static str) -> Result<String, RunError> {
    std::fs::read_to_string(path).map_err(|e| RunError {
        stage,
        instance: None,
        source: Error::io(path.display().to_string(), e),
    })
}

fn ensure_dir(path: &PathBuf, stage: &'static str) -> Result<(), RunError> {
    std::fs::create_dir_all(path).map_err(|e| RunError {
        stage,
        instance: None,
        source: Error::io(path.display().to_string(), e),
    })
}

fn write_text(path: &PathBuf, text: &str, stage: &'static str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError {
        stage,
        instance: None,
        source: Error::io(path.display().to_string(), e),
    })
}

fn dispatch(cli: Cli) -> Result<(), RunError> {
    match cli.command {
        Command::Evaluate {
            corpus,
            model,
            sampling,
            style,
            anchor_file,
            tau,
            tie_policy,
            synthesize_swaps,
            workers,
            out,
        } => {
            let anchor = match anchor_file {
                Some(p) => Some(read_text(&p, "config")?),
                None => None,
            };
            let opts = EvaluateOptions {
                style,
                anchor,
                sampling: sampling.to_config(),
                tau,
                tie_policy,
                synthesize_swaps,
                workers,
                ..EvaluateOptions::new(corpus, model)
            };
            let results = run_evaluate(&opts)?;
            ensure_dir(&out, "write")?;
            results
                .save(out.join("results.json"))
                .map_err(io_stage("write"))?;
            let text = render_aggregate_text(&results.aggregate);
            write_text(&out.join("report.txt"), &text, "write")?;
            print!("{text}");
            for (cond, a) in &results.accuracy {
                println!("accuracy[{cond}] = {a:.3}");
            }
            println!("manifest hash: {}", results.manifest_hash);
            Ok(())
        }

        Command::Mitigate {
            corpus,
            model,
            sampling,
            tau,
            tie_policy,
            workers,
            conditions,
            steering,
            subspace,
            layer,
            alpha,
            k,
            baseline_alpha,
            noise_seed,
            out,
        } => run_mitigate(MitigateArgs {
            corpus,
            model,
            sampling: sampling.to_config(),
            tau,
            tie_policy,
            workers,
            conditions,
            steering,
            subspace,
            layer,
            alpha,
            k,
            baseline_alpha,
            noise_seed,
            out,
        }),

        Command::ValignBuild {
            corpus,
            model,
            layer,
            k,
            anchor_file,
            style_corpus,
            seed,
            out,
        } => {
            let anchor = match anchor_file {
                Some(p) => read_text(&p, "config")?,
                None => assets::VALUE_ANCHOR.to_string(),
            };
            let style_corpus = match style_corpus {
                Some(p) => read_text(&p, "config")?
                    .lines()
                    .filter(|l| !l.trim().is_empty())
                    .map(|l| l.to_string())
                    .collect(),
                None => assets::style_corpus_sentences()
                    .into_iter()
                    .map(|s| s.to_string())
                    .collect(),
            };
            let opts = BuildOptions {
                corpus_path: corpus.clone(),
                model_id: model,
                layer,
                k,
                anchor,
                query: assets::VALUE_QUERY.to_string(),
                style_corpus,
                stage1: fragile_core::valign::Stage1Options {
                    rng_seed: seed,
                    ..Default::default()
                },
            };
            let built = run_valign_build(&opts)?;
            ensure_dir(&out, "write")?;
            let steering_path = out.join("steering.json");
            let subspace_path = out.join("subspace.json");
            VecArtifact::from_steering(&built.steering)
                .save(&steering_path)
                .map_err(io_stage("write"))?;
            VecArtifact::from_subspace(&built.subspace)
                .save(&subspace_path)
                .map_err(io_stage("write"))?;
            println!("layer: {}", built.layer);
            println!("steering vector: {}", steering_path.display());
            println!("sensitivity subspace: {}", subspace_path.display());
            println!(
                "explained variance: {:?}",
                built.subspace.explained_variance
            );
            Ok(())
        }

        Command::SelectLayer {
            corpus,
            model,
            values,
            sampling,
            circle,
            workers,
            out,
        } => {
            let records = load_value_records(&values).map_err(io_stage("load"))?;
            let circle = match circle {
                Some(p) => {
                    let text = read_text(&p, "config")?;
                    serde_json::from_str(&text)
                        .map_err(|e| usage_error(format!("bad circle file: {e}")))?
                }
                None => SchwartzCircle::builtin(),
            };
            let opts = SelectLayerOptions {
                corpus_path: corpus,
                model_id: model,
                value_records: records,
                sampling: sampling.to_config(),
                circle,
                workers,
            };
            let output = run_select_layer(&opts)?;
            ensure_dir(&out, "write")?;
            let table_json = serde_json::to_string_pretty(&output).expect("table serializes");
            write_text(&out.join("layer-scores.json"), &table_json, "write")?;
            let selected = output.table.selected_layer;
            let config = ValignConfig::full(selected);
            let config_json = serde_json::to_string_pretty(&config).expect("config serializes");
            write_text(&out.join("valign-config.json"), &config_json, "write")?;
            println!("selected layer: {selected}");
            println!("gap pairs: {}", output.gap_pairs);
            for row in &output.table.rows {
                println!(
                    "layer {:>2}: gap {:8.4} sep {:8.4} circ {:8.4} rank_sum {:5.1}{}",
                    row.layer,
                    row.gap_score,
                    row.sep_score,
                    row.circ_score,
                    row.rank_sum,
                    if row.selected { "  <- selected" } else { "" }
                );
            }
            Ok(())
        }

        Command::Lens {
            corpus,
            model,
            sampling,
            tau,
            top_m,
            workers,
            out,
        } => {
            let opts = LensOptions {
                corpus_path: corpus,
                model_id: model,
                sampling: sampling.to_config(),
                tau,
                top_m,
                workers,
            };
            let lens = run_lens(&opts)?;
            ensure_dir(&out, "write")?;
            lens.save(out.join("lens.json")).map_err(io_stage("write"))?;
            for (dim, curve) in &lens.curves {
                let path = out.join(format!("gap-{dim}.svg"));
                gap_curve_chart(&path, &format!("direction shift by layer ({dim})"), curve)
                    .map_err(io_stage("write"))?;
                println!("plot: {}", path.display());
            }
            println!("records: {}", lens.records.len());
            println!("manifest hash: {}", lens.manifest_hash);
            Ok(())
        }

        Command::QcRun {
            corpus,
            client,
            max_regens,
            generators,
            gen_temperature,
            gen_max_tokens,
            out,
        } => run_qc(
            corpus,
            client,
            max_regens,
            generators,
            gen_temperature,
            gen_max_tokens,
            out,
        ),

        Command::Report { results, lens, svg } => {
            if results.is_none() && lens.is_none() {
                return Err(usage_error("pass --results and/or --lens"));
            }
            if let Some(path) = results {
                let file = ResultsFile::load(&path).map_err(io_stage("load"))?;
                print!("{}", render_aggregate_text(&file.aggregate));
                println!("manifest hash: {}", file.manifest_hash);
                if let Some(dir) = &svg {
                    ensure_dir(dir, "write")?;
                    let rows: Vec<(String, CellStats)> = file
                        .aggregate
                        .dimension_averages
                        .iter()
                        .map(|a| (format!("{}", a.dimension), a.framing.clone()))
                        .collect();
                    if !rows.is_empty() {
                        let p = dir.join("quadrants.svg");
                        quadrant_bar_chart(&p, "quadrant shares by framing", &rows)
                            .map_err(io_stage("write"))?;
                        println!("plot: {}", p.display());
                    }
                }
            }
            if let Some(path) = lens {
                let file = LensFile::load(&path).map_err(io_stage("load"))?;
                println!("lens records: {}", file.records.len());
                if let Some(dir) = &svg {
                    ensure_dir(dir, "write")?;
                    for (dim, curve) in &file.curves {
                        let p = dir.join(format!("gap-{dim}.svg"));
                        gap_curve_chart(&p, &format!("direction shift by layer ({dim})"), curve)
                            .map_err(io_stage("write"))?;
                        println!("plot: {}", p.display());
                    }
                }
            }
            Ok(())
        }
    }
}

struct MitigateArgs {
    corpus: PathBuf,
    model: String,
    sampling: SamplingConfig,
    tau: f64,
    tie_policy: TiePolicy,
    workers: usize,
    conditions: String,
    steering: Option<PathBuf>,
    subspace: Option<PathBuf>,
    layer: Option<usize>,
    alpha: f64,
    k: usize,
    baseline_alpha: f64,
    noise_seed: u64,
    out: PathBuf,
}

fn run_mitigate(args: MitigateArgs) -> Result<(), RunError> {
    let handle = resolve(&args.model).map_err(io_stage("resolve-model"))?;
    let steering = match &args.steering {
        Some(p) => Some(load_steering(p).map_err(io_stage("load-artifact"))?),
        None => None,
    };
    let subspace = match &args.subspace {
        Some(p) => Some(load_subspace(p).map_err(io_stage("load-artifact"))?),
        None => None,
    };
    validate_artifacts(&handle, steering.as_ref(), subspace.as_ref())
        .map_err(io_stage("load-artifact"))?;
    let layer = match args.layer {
        Some(l) => l,
        None => subspace
            .as_ref()
            .map(|s| s.layer)
            .or(steering.as_ref().map(|s| s.layer))
            .map(Ok)
            .unwrap_or_else(|| resolve_layer(&handle, None))
            .map_err(io_stage("config"))?,
    };

    let requested: Vec<String> = args
        .conditions
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();

    let base_opts = |command: String| EvaluateOptions {
        sampling: args.sampling,
        tau: args.tau,
        tie_policy: args.tie_policy,
        workers: args.workers,
        command,
        ..EvaluateOptions::new(args.corpus.clone(), args.model.clone())
    };

    let mut conditions: Vec<(String, EvaluateOptions)> =
        vec![("base".to_string(), base_opts("mitigate:base".into()))];

    for name in &requested {
        let mut opts = base_opts(format!("mitigate:{name}"));
        match name.as_str() {
            "instruction" => opts.style = PromptStyle::Instruction,
            "cot" => opts.style = PromptStyle::Cot,
            "third-person" | "third_person" => opts.style = PromptStyle::ThirdPerson,
            "gaussian" => {
                let kind = BaselineHookKind::GaussianNoise {
                    layer,
                    scale: args.baseline_alpha,
                    seed: args.noise_seed,
                };
                let hook = make_baseline_hook(&kind).map_err(io_stage("config"))?;
                opts.intervention = InterventionDescriptor {
                    kind: "gaussian_noise".into(),
                    layer: Some(layer),
                    alpha: Some(args.baseline_alpha),
                    ..Default::default()
                };
                opts.hooks = vec![hook];
            }
            "additive" => {
                let sv = steering.as_ref().ok_or_else(|| {
                    usage_error("additive baseline needs --steering for its direction")
                })?;
                let kind = BaselineHookKind::AdditiveVector {
                    layer,
                    direction: sv.w_hat.clone(),
                    alpha: args.baseline_alpha,
                };
                let hook = make_baseline_hook(&kind).map_err(io_stage("config"))?;
                opts.intervention = InterventionDescriptor {
                    kind: "additive_vector".into(),
                    layer: Some(layer),
                    alpha: Some(args.baseline_alpha),
                    artifact_hashes: artifact_hashes(&args.steering, &None)?,
                    ..Default::default()
                };
                opts.hooks = vec![hook];
            }
            "valign" | "valign-projection" | "valign-steering" => {
                let cfg = ValignConfig {
                    layer,
                    alpha: args.alpha,
                    k: args
                        .k
                        .min(subspace.as_ref().map(|s| s.basis.len()).unwrap_or(args.k)),
                    text_anchor: name == "valign",
                    steering: name != "valign-projection",
                    projection: name != "valign-steering",
                };
                let (hook, use_anchor) =
                    make_valign_hook(&cfg, steering.as_ref(), subspace.as_ref())
                        .map_err(io_stage("config"))?;
                if use_anchor {
                    opts.anchor = Some(assets::VALUE_ANCHOR.trim_end().to_string());
                }
                opts.intervention = InterventionDescriptor {
                    kind: name.clone(),
                    layer: Some(layer),
                    alpha: Some(if cfg.steering { cfg.alpha } else { 0.0 }),
                    k: Some(cfg.k),
                    artifact_hashes: artifact_hashes(&args.steering, &args.subspace)?,
                };
                opts.hooks = vec![hook];
            }
            other => return Err(usage_error(format!("unknown condition `{other}`"))),
        }
        conditions.push((name.clone(), opts));
    }

    ensure_dir(&args.out, "write")?;
    let mut all_rows: BTreeMap<String, Vec<ConditionRow>> = BTreeMap::new();
    let mut bar_rows: Vec<(String, CellStats)> = Vec::new();
    for (name, opts) in &conditions {
        let results = run_evaluate(opts)?;
        results
            .save(args.out.join(format!("results-{name}.json")))
            .map_err(io_stage("write"))?;
        for avg in &results.aggregate.dimension_averages {
            all_rows
                .entry(avg.dimension.to_string())
                .or_default()
                .push(ConditionRow {
                    condition: name.clone(),
                    stats: avg.framing.clone(),
                });
        }
        if let Some(first) = results.aggregate.dimension_averages.first() {
            bar_rows.push((name.clone(), first.framing.clone()));
        }
        println!("condition {name}: manifest {}", results.manifest_hash);
    }

    let mut report = String::new();
    for (dimension, rows) in &all_rows {
        report.push_str(&render_mitigation_text(dimension, rows).map_err(io_stage("report"))?);
        report.push('\n');
    }
    write_text(&args.out.join("report.txt"), &report, "write")?;
    if !bar_rows.is_empty() {
        quadrant_bar_chart(
            &args.out.join("quadrants.svg"),
            "quadrant shares by condition",
            &bar_rows,
        )
        .map_err(io_stage("write"))?;
    }
    print!("{report}");
    Ok(())
}

fn artifact_hashes(
    steering: &Option<PathBuf>,
    subspace: &Option<PathBuf>,
) -> Result<BTreeMap<String, String>, RunError> {
    let mut out = BTreeMap::new();
    if let Some(p) = steering {
        out.insert(
            "steering".to_string(),
            fragile_core::artifact::file_sha256(p).map_err(io_stage("load-artifact"))?,
        );
    }
    if let Some(p) = subspace {
        out.insert(
            "subspace".to_string(),
            fragile_core::artifact::file_sha256(p).map_err(io_stage("load-artifact"))?,
        );
    }
    Ok(out)
}

fn run_qc(
    corpus_path: PathBuf,
    client_spec: String,
    max_regens: usize,
    generators: String,
    gen_temperature: f64,
    gen_max_tokens: usize,
    out: PathBuf,
) -> Result<(), RunError> {
    let corpus = load_corpus(&corpus_path).map_err(io_stage("load"))?;
    let client: Box<dyn GenerationClient> = if let Some(path) = client_spec.strip_prefix("stub:") {
        Box::new(ScriptedClient::from_script(path).map_err(io_stage("config"))?)
    } else if let Some(prog) = client_spec.strip_prefix("command:") {
        Box::new(CommandClient::new(prog))
    } else {
        return Err(usage_error(format!(
            "client `{client_spec}` must be stub:<script.json> or command:<program>"
        )));
    };
    let cfg = QcLoopConfig {
        max_regens,
        generators: generators
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect(),
        params: GenerationParams {
            temperature: gen_temperature,
            max_tokens: gen_max_tokens,
            ..Default::default()
        },
        order: SelectionOrder::default(),
    };

    let mut accepted = Corpus {
        instances: corpus.instances.clone(),
        variants: Vec::new(),
    };
    let mut rejections = Vec::new();
    let mut attempts_total = 0usize;
    for variant in &corpus.variants {
        match run_qc_loop(variant, client.as_ref(), &cfg).map_err(io_stage("qc"))? {
            QcOutcome::Accepted {
                variant, attempts, ..
            } => {
                attempts_total += attempts;
                accepted.variants.push(variant);
            }
            QcOutcome::Rejected { verdicts, attempts } => {
                attempts_total += attempts;
                rejections.push(serde_json::json!({
                    "variant": variant.effective_id(),
                    "verdicts": verdicts,
                }));
            }
        }
    }
    save_corpus(&accepted, &out).map_err(io_stage("write"))?;
    let rejections_path = out.with_extension("rejections.json");
    let text = serde_json::to_string_pretty(&rejections).expect("rejections serialize");
    write_text(&rejections_path, &text, "write")?;
    println!(
        "accepted {} of {} variants ({} judge calls); wrote {}",
        accepted.variants.len(),
        corpus.variants.len(),
        attempts_total,
        out.display()
    );
    Ok(())
}
