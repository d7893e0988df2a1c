use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use smsp::{describe, exit_code, run, write_artifacts, Decision, PipelineConfig, PolicySource, Resolution};
use smsp_core::policy::SourceLang;
use smsp_core::session::{ExportFormat, ExportWhat, SessionState};

/// Match heterogeneous security policies against a support ontology.
///
/// Exit status: 0 when no conflict is left open, 1 when some are, 2 on
/// input errors.
#[derive(Debug, Parser)]
#[command(name = "smsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align the policies, classify conflicts and write the artifacts.
    Align(PipelineArgs),
    /// Like `align`, then resolve conflicts automatically or from a file.
    Resolve {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Apply the default proposal of every conflict.
        #[arg(long, conflicts_with = "decisions")]
        auto: bool,
        /// JSON array of decisions to apply in order.
        #[arg(long, value_name = "FILE")]
        decisions: Option<PathBuf>,
    },
    /// Re-export one artifact from a saved session.
    Export {
        /// Session snapshot written by `align` or `resolve`.
        #[arg(long)]
        session: PathBuf,
        #[arg(long, value_parser = parse_what)]
        what: ExportWhat,
        #[arg(long, value_parser = parse_format, default_value = "canonical")]
        format: ExportFormat,
        /// Harmonized policy text of a single domain.
        #[arg(long)]
        domain: Option<String>,
        /// Output file; stdout when omitted.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Session storage; defaults to $SMSP_DATA_DIR, then ./smsp-data.
        #[arg(long)]
        data_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct PipelineArgs {
    /// JSON pipeline configuration.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Support ontology (JSON document or .ttl).
    #[arg(long)]
    support: Option<PathBuf>,
    /// Policy input as LANG:DOMAIN:PATH; repeat for each file. Replaces the
    /// configured list.
    #[arg(long = "policy", value_parser = parse_policy)]
    policies: Vec<PolicySource>,
    #[arg(long)]
    catalogue: Option<PathBuf>,
    #[arg(long)]
    syn_threshold: Option<f64>,
    #[arg(long)]
    homonym_ceiling: Option<f64>,
    #[arg(long)]
    anchor_threshold: Option<f64>,
    #[arg(long)]
    damping: Option<f64>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Resolve automatically (same as `resolve --auto`).
    #[arg(long)]
    auto_resolve: bool,
}

fn parse_policy(s: &str) -> Result<PolicySource, String> {
    let mut it = s.splitn(3, ':');
    match (it.next(), it.next(), it.next()) {
        (Some(lang), Some(domain), Some(path)) if !domain.is_empty() && !path.is_empty() => Ok(PolicySource {
            lang: lang.parse::<SourceLang>().map_err(|e| e.to_string())?,
            domain_id: domain.to_string(),
            path: PathBuf::from(path),
        }),
        _ => Err(format!("expected LANG:DOMAIN:PATH, got `{s}`")),
    }
}

fn parse_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown value `{s}`"))
}

fn parse_what(s: &str) -> Result<ExportWhat, String> {
    parse_enum(s)
}

fn parse_format(s: &str) -> Result<ExportFormat, String> {
    parse_enum(s)
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig {
                support: self.support.clone().context("--support or --config is required")?,
                policies: Vec::new(),
                similarity: Default::default(),
                enrichment: Default::default(),
                catalogue: None,
                deontic: None,
                auto_resolve: false,
                output_dir: PathBuf::from("smsp-out"),
            },
        };
        if let Some(s) = &self.support {
            cfg.support = s.clone();
        }
        if !self.policies.is_empty() {
            cfg.policies = self.policies.clone();
        }
        if let Some(c) = &self.catalogue {
            cfg.catalogue = Some(c.clone());
        }
        if let Some(v) = self.syn_threshold {
            cfg.similarity.syn_threshold = v;
        }
        if let Some(v) = self.homonym_ceiling {
            cfg.similarity.homonym_semantic_ceiling = v;
        }
        if let Some(v) = self.anchor_threshold {
            cfg.similarity.anchor_threshold = v;
        }
        if let Some(v) = self.damping {
            cfg.enrichment.damping = v;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        cfg.auto_resolve |= self.auto_resolve;
        Ok(cfg)
    }
}

fn read_decisions(path: &Path) -> Result<Vec<Decision>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading decisions {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing decisions {}", path.display()))
}

fn pipeline(cfg: &PipelineConfig, resolution: Resolution, harmonized: bool) -> Result<u8> {
    let state = run(cfg.inputs()?, resolution)?;
    write_artifacts(&state, &cfg.output_dir, harmonized)?;
    print!("{}", describe(&state));
    println!("  artifacts in {}", cfg.output_dir.display());
    Ok(exit_code(&state))
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Align(args) => {
            let cfg = args.config()?;
            let resolution = if cfg.auto_resolve { Resolution::Auto } else { Resolution::None };
            pipeline(&cfg, resolution, cfg.auto_resolve)
        }
        Command::Resolve { pipeline: args, auto, decisions } => {
            let cfg = args.config()?;
            match (auto || cfg.auto_resolve, decisions) {
                (_, Some(path)) => {
                    let ds = read_decisions(&path)?;
                    pipeline(&cfg, Resolution::Decisions(&ds), true)
                }
                (true, None) => pipeline(&cfg, Resolution::Auto, true),
                (false, None) => bail!("resolve needs --auto or --decisions"),
            }
        }
        Command::Export { session, what, format, domain, output } => {
            let bytes = std::fs::read(&session).with_context(|| format!("reading session {}", session.display()))?;
            let state = SessionState::from_bytes(&bytes).with_context(|| format!("loading session {}", session.display()))?;
            let out = state.export(what, format, domain.as_deref())?;
            match output {
                Some(path) => std::fs::write(&path, out).with_context(|| format!("writing {}", path.display()))?,
                None => {
                    use std::io::Write;
                    std::io::stdout().write_all(&out)?;
                }
            }
            Ok(exit_code(&state))
        }
        Command::Serve { bind, data_dir } => {
            let dir = data_dir.unwrap_or_else(smsp_service::default_data_dir);
            let rt = tokio::runtime::Runtime::new()?;
            println!("listening on {bind}, sessions in {}", dir.display());
            rt.block_on(smsp_service::serve(bind, dir))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
