use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use structqa::correction::{run_correction_with, Author, CorrectionTrace, QaContext, Question};
use structqa::distill::{export, loss_report, sft_loss, split_by_kind, PreferencePair, RecordKind, Reduction, SftRecord, TableScorer};
use structqa::dsl::FunctionRegistry;
use structqa::graph::io::write_dump;
use structqa::harness::{
    error_stats, evaluate, load_demos, load_graph_file, load_questions, load_traces, EvalMode, GraphCatalog,
    GraphFileKind, GraphSpec, Metric, PipelineConfig,
};
use structqa::jsonl::{read_jsonl, write_jsonl};
use structqa::llm::{build_client, Backend};

#[derive(Parser)]
#[command(name = "structqa", version, about = "Query, correct and distill over structured data")]
struct Cli {
    #[command(flatten)]
    opts: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    backend: Option<BackendArg>,
    /// Script file for the scripted backend.
    #[arg(long, global = true)]
    script: Option<PathBuf>,
    /// Maximum correction rounds [default: 3].
    #[arg(long, global = true)]
    mct: Option<usize>,
    /// Demonstrations per prompt [default: 8].
    #[arg(long, global = true)]
    demos: Option<usize>,
    /// Demonstrations retrieved before selection [default: 15].
    #[arg(long, global = true)]
    retrieves: Option<usize>,
    /// Samples voted on for the initial query [default: 5].
    #[arg(long = "self-consistency", global = true)]
    self_consistency: Option<usize>,
    /// Treat an empty final result as an error too.
    #[arg(long = "strict-empty", global = true)]
    strict_empty: bool,
    /// Questions evaluated at once.
    #[arg(long, global = true)]
    parallelism: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Http,
    Scripted,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Table,
    Kg,
    Temporal,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    With,
    Without,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Denotation,
    Hits1,
}

#[derive(Clone, Copy, ValueEnum)]
enum AuthorArg {
    Teacher,
    Student,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a table, triple or quadruple file into an edge dump.
    Ingest {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        input: PathBuf,
        /// Output path; stdout when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        key_column: Option<String>,
        #[arg(long)]
        delimiter: Option<char>,
    },
    /// Answer one question and print its trace.
    Ask {
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        graph: String,
        #[arg(long)]
        question: String,
        #[arg(long)]
        demos_file: Option<PathBuf>,
        /// Skip the correction loop.
        #[arg(long)]
        no_epm: bool,
    },
    /// Run the correction loop over a dataset and write traces.
    Correct {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        demos_file: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_enum, default_value = "teacher")]
        author: AuthorArg,
    },
    /// Turn traces into SFT records and preference pairs.
    GenSft {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long)]
        sft_out: PathBuf,
        #[arg(long)]
        pref_out: PathBuf,
    },
    /// Compute the distillation losses with a table-driven scorer.
    ScoreLoss {
        #[arg(long)]
        sft: PathBuf,
        #[arg(long)]
        pref: Option<PathBuf>,
        /// JSON scorer table: {"tokens": {...}, "default": -1.0, "sequences": {...}}.
        #[arg(long)]
        scorer: PathBuf,
        /// Also report per-token means.
        #[arg(long)]
        mean: bool,
    },
    /// Evaluate a dataset with and/or without the correction loop.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        catalog: PathBuf,
        #[arg(long)]
        demos_file: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "both")]
        mode: ModeArg,
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
        /// Write traces of the correction run here.
        #[arg(long)]
        traces_out: Option<PathBuf>,
    },
    /// Tally errors before and after correction.
    ErrorStats {
        #[arg(long)]
        traces: PathBuf,
    },
}

type BoxError = Box<dyn std::error::Error>;

fn pipeline_config(opts: &GlobalOpts) -> Result<PipelineConfig, BoxError> {
    let mut cfg = match &opts.config {
        Some(path) => PipelineConfig::from_toml_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(b) = opts.backend {
        cfg.client.backend = match b {
            BackendArg::Http => Backend::Http,
            BackendArg::Scripted => Backend::Scripted,
        };
    }
    if let Some(s) = &opts.script {
        cfg.client.script_path = Some(s.clone());
    }
    let c = &mut cfg.correction;
    if let Some(v) = opts.mct {
        c.mct = v;
    }
    if let Some(v) = opts.demos {
        c.query_demos = v;
        c.correction_demos = v;
    }
    if let Some(v) = opts.retrieves {
        c.retrieves = v;
    }
    if let Some(v) = opts.self_consistency {
        c.self_consistency = v;
    }
    if opts.strict_empty {
        c.strict_empty = true;
    }
    if let Some(p) = opts.parallelism {
        cfg.parallelism = p;
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), BoxError> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_jsonl_file<T: Serialize>(path: &Path, items: &[T]) -> Result<(), BoxError> {
    let mut w = BufWriter::new(File::create(path)?);
    write_jsonl(items, &mut w)?;
    w.flush()?;
    Ok(())
}

fn read_jsonl_file<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, BoxError> {
    Ok(read_jsonl(BufReader::new(File::open(path)?))?)
}

fn demos(path: &Option<PathBuf>) -> Result<Vec<structqa::correction::Demonstration>, BoxError> {
    Ok(match path {
        Some(p) => load_demos(p)?,
        None => Vec::new(),
    })
}

fn run(cli: Cli) -> Result<(), BoxError> {
    let registry = FunctionRegistry::default();
    match cli.command {
        Command::Ingest {
            kind,
            input,
            output,
            key_column,
            delimiter,
        } => {
            let spec = GraphSpec {
                name: "input".into(),
                kind: match kind {
                    KindArg::Table => GraphFileKind::Table,
                    KindArg::Kg => GraphFileKind::Kg,
                    KindArg::Temporal => GraphFileKind::Temporal,
                },
                path: input,
                key_column,
                delimiter,
            };
            let graph = load_graph_file(&spec, Path::new("."))?;
            match output {
                Some(p) => {
                    let mut w = BufWriter::new(File::create(&p)?);
                    write_dump(&graph, &mut w)?;
                    w.flush()?;
                    eprintln!("{} edges written to {}", graph.len(), p.display());
                }
                None => write_dump(&graph, io::stdout().lock())?,
            }
        }
        Command::Ask {
            catalog,
            graph,
            question,
            demos_file,
            no_epm,
        } => {
            let mut cfg = pipeline_config(&cli.opts)?;
            if no_epm {
                cfg.correction.mct = 0;
            }
            let catalog = GraphCatalog::from_manifest(&catalog)?;
            let g = catalog.get(&graph).ok_or_else(|| format!("unknown graph '{graph}'"))?;
            let demos = demos(&demos_file)?;
            let client = build_client(&cfg.client)?;
            let ctx = QaContext {
                graph: &g.graph,
                schema: &g.schema,
                registry: &registry,
                demos: &demos,
            };
            let q = Question {
                id: "ask".into(),
                text: question,
                gold: None,
                graph_ref: graph.clone(),
            };
            let trace = run_correction_with(&q, &ctx, &client, &client, Author::Teacher, &cfg.correction)?;
            print_json(&trace)?;
        }
        Command::Correct {
            dataset,
            catalog,
            demos_file,
            output,
            author,
        } => {
            let cfg = pipeline_config(&cli.opts)?;
            let catalog = GraphCatalog::from_manifest(&catalog)?;
            let questions = load_questions(&dataset)?;
            let demos = demos(&demos_file)?;
            let client = build_client(&cfg.client)?;
            let author = match author {
                AuthorArg::Teacher => Author::Teacher,
                AuthorArg::Student => Author::Student,
            };
            let mut traces: Vec<CorrectionTrace> = Vec::with_capacity(questions.len());
            for q in &questions {
                let g = catalog
                    .get(&q.graph_ref)
                    .ok_or_else(|| format!("question {} refers to unknown graph '{}'", q.id, q.graph_ref))?;
                let ctx = QaContext {
                    graph: &g.graph,
                    schema: &g.schema,
                    registry: &registry,
                    demos: &demos,
                };
                traces.push(run_correction_with(q, &ctx, &client, &client, author, &cfg.correction)?);
            }
            write_jsonl_file(&output, &traces)?;
            eprintln!("{} traces written to {}", traces.len(), output.display());
        }
        Command::GenSft {
            traces,
            sft_out,
            pref_out,
        } => {
            let traces = load_traces(&traces)?;
            let (sft, pairs) = export(&traces);
            write_jsonl_file(&sft_out, &sft)?;
            write_jsonl_file(&pref_out, &pairs)?;
            eprintln!("{} SFT records, {} preference pairs", sft.len(), pairs.len());
        }
        Command::ScoreLoss { sft, pref, scorer, mean } => {
            let scorer: TableScorer = serde_json::from_reader(BufReader::new(File::open(&scorer)?))?;
            let records: Vec<SftRecord> = read_jsonl_file(&sft)?;
            let pairs: Vec<PreferencePair> = match &pref {
                Some(p) => read_jsonl_file(p)?,
                None => Vec::new(),
            };
            let report = loss_report(&records, &pairs, &scorer)?;
            if mean {
                let (q, c) = split_by_kind(&records);
                print_json(&serde_json::json!({
                    "l_q": report.l_q,
                    "l_c": report.l_c,
                    "l_1": report.l_1,
                    "l_2": report.l_2,
                    "l_q_token_mean": sft_loss(&q, RecordKind::QueryGen, &scorer, Reduction::TokenMean)?,
                    "l_c_token_mean": sft_loss(&c, RecordKind::Correction, &scorer, Reduction::TokenMean)?,
                }))?;
            } else {
                print_json(&report)?;
            }
        }
        Command::Eval {
            dataset,
            catalog,
            demos_file,
            mode,
            metric,
            traces_out,
        } => {
            let mut cfg = pipeline_config(&cli.opts)?;
            if let Some(m) = metric {
                cfg.metric = match m {
                    MetricArg::Denotation => Metric::DenotationAccuracy,
                    MetricArg::Hits1 => Metric::HitsAt1,
                };
            }
            let catalog = GraphCatalog::from_manifest(&catalog)?;
            let questions = load_questions(&dataset)?;
            let demos = demos(&demos_file)?;
            let modes: &[EvalMode] = match mode {
                ModeArg::With => &[EvalMode::WithEpm],
                ModeArg::Without => &[EvalMode::WithoutEpm],
                ModeArg::Both => &[EvalMode::WithEpm, EvalMode::WithoutEpm],
            };
            let mut reports = Vec::new();
            for m in modes {
                // Fresh client per mode so scripted replies replay from the start.
                let client = build_client(&cfg.client)?;
                let run = evaluate(&questions, &catalog, &registry, &demos, &client, &cfg, *m)?;
                if *m == EvalMode::WithEpm {
                    if let Some(p) = &traces_out {
                        write_jsonl_file(p, &run.traces)?;
                    }
                }
                reports.push(run.report);
            }
            print_json(&reports)?;
        }
        Command::ErrorStats { traces } => {
            let traces = load_traces(&traces)?;
            print_json(&error_stats(&traces))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
