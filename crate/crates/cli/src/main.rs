//! `d4c`: runs the pipeline stages over a file-based artifact directory.

mod config;
mod stages;

use std::fs::{self, File, TryLockError};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use d4c_service::{AppState, Layout};
use serde_json::json;

use crate::config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "d4c", version, about = "Literature annotation, drug/disease similarity and knowledge-graph pipeline")]
struct Cli {
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Artifact directory (overrides the config file).
    #[arg(long, global = true, env = "D4C_ARTIFACTS")]
    artifacts: Option<PathBuf>,
    /// Print machine-readable JSON instead of a summary line.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read CORD-19 JSON documents into the corpus store.
    Ingest {
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Tag drug and disease mentions with the gazetteers.
    Annotate {
        #[arg(long)]
        atc: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
    },
    /// Train the labeled topic model and infer paragraph topics.
    TopicsTrain {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Build the drug-disease matrix, cluster drugs and index them.
    DrugsCluster {
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
    },
    /// Train one embedding model per disease and compare them.
    DiseasesTrain {
        #[arg(long)]
        contexts: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Flatten corpus and annotations into CSV tables.
    KgExport,
    /// Apply the mapping to the exported tables and write kg.nt.
    KgBuild {
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Evaluate a JSON pattern query against kg.nt.
    Query { file: PathBuf },
    /// Serve the HTTP API over the artifacts.
    Serve {
        #[arg(long)]
        addr: Option<String>,
    },
}

impl Command {
    fn writes(&self) -> bool {
        !matches!(self, Command::Query { .. } | Command::Serve { .. })
    }
}

fn effective_config(cli: &Cli) -> anyhow::Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(a) = &cli.artifacts {
        cfg.paths.artifacts = a.clone();
    }
    match &cli.command {
        Command::Ingest { corpus } => {
            if let Some(c) = corpus {
                cfg.paths.corpus = c.clone();
            }
        }
        Command::Annotate { atc, mesh } => {
            if let Some(p) = atc {
                cfg.paths.atc = p.clone();
            }
            if let Some(p) = mesh {
                cfg.paths.mesh = p.clone();
            }
        }
        Command::TopicsTrain { seed, iterations } => {
            if let Some(s) = seed {
                cfg.topics.seed = *s;
            }
            if let Some(i) = iterations {
                cfg.topics.iterations = *i;
            }
        }
        Command::DrugsCluster { k_min, k_max } => {
            if let Some(k) = k_min {
                cfg.drugs.k_min = *k;
            }
            if let Some(k) = k_max {
                cfg.drugs.k_max = *k;
            }
        }
        Command::DiseasesTrain { contexts, seed } => {
            if let Some(c) = contexts {
                cfg.diseases.contexts = Some(c.clone());
            }
            if let Some(s) = seed {
                cfg.diseases.embedding.seed = *s;
            }
        }
        Command::KgBuild { mapping } => {
            if let Some(m) = mapping {
                cfg.kg.mapping = Some(m.clone());
            }
        }
        Command::Serve { addr } => {
            if let Some(a) = addr {
                cfg.serve.addr = a.clone();
            }
        }
        Command::KgExport | Command::Query { .. } => {}
    }
    Ok(cfg)
}

/// Holds the artifact-directory lock for the lifetime of the command.
fn lock(layout: &Layout, exclusive: bool) -> anyhow::Result<Option<File>> {
    if !exclusive && !layout.root().exists() {
        return Ok(None);
    }
    fs::create_dir_all(layout.root())
        .with_context(|| format!("cannot create artifact directory {}", layout.root().display()))?;
    let file = File::create(layout.root().join(".d4c.lock"))?;
    let taken = if exclusive { file.try_lock() } else { file.try_lock_shared() };
    match taken {
        Ok(()) => Ok(Some(file)),
        Err(TryLockError::WouldBlock) => anyhow::bail!(
            "artifact directory {} is in use by another d4c process",
            layout.root().display()
        ),
        Err(TryLockError::Error(e)) => Err(e.into()),
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let cfg = effective_config(cli)?;
    let layout = Layout::new(&cfg.paths.artifacts);
    let _lock = lock(&layout, cli.command.writes())?;
    let summary = match &cli.command {
        Command::Ingest { .. } => stages::ingest(&cfg, &layout)?,
        Command::Annotate { .. } => stages::annotate(&cfg, &layout)?,
        Command::TopicsTrain { .. } => stages::topics_train(&cfg, &layout)?,
        Command::DrugsCluster { .. } => stages::drugs_cluster(&cfg, &layout)?,
        Command::DiseasesTrain { .. } => stages::diseases_train(&cfg, &layout)?,
        Command::KgExport => stages::kg_export(&cfg, &layout)?,
        Command::KgBuild { .. } => stages::kg_build(&cfg, &layout)?,
        Command::Query { file } => {
            let result = stages::query(&layout, file)?;
            if cli.json {
                let out = json!({"vars": result.vars, "bindings": result.bindings_json()});
                println!("{}", serde_json::to_string_pretty(&out)?);
            } else {
                println!("{}", result.vars.join("\t"));
                for row in &result.rows {
                    let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                    println!("{}", cells.join("\t"));
                }
            }
            return Ok(());
        }
        Command::Serve { .. } => {
            let state = AppState::load(&layout)?;
            let addr = cfg
                .serve
                .addr
                .parse()
                .with_context(|| format!("invalid listen address {:?}", cfg.serve.addr))?;
            eprintln!("serving {} on http://{addr}", layout.root().display());
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(d4c_service::serve(state, addr))?;
            return Ok(());
        }
    };
    if cli.json {
        println!("{}", json!({"stage": summary.stage, "summary": summary.facts}));
    } else {
        println!("{}", summary.line);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
