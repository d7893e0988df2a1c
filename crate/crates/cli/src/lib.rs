//! Batch pipeline behind the `smsp` binary.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use smsp_core::enrichment::EnrichmentConfig;
use smsp_core::ontology::{import_turtle, load_ontology, Ontology};
use smsp_core::policy::{DeonticTable, SourceLang};
use smsp_core::resolution::{Catalogue, ResolutionAction};
use smsp_core::session::{ExportFormat, ExportWhat, PolicyInput, SessionInputs, SessionState};
use smsp_core::similarity::SimilarityConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySource {
    pub lang: SourceLang,
    pub domain_id: String,
    pub path: PathBuf,
}

/// Pipeline configuration file. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub support: PathBuf,
    pub policies: Vec<PolicySource>,
    #[serde(default)]
    pub similarity: SimilarityConfig,
    #[serde(default)]
    pub enrichment: EnrichmentConfig,
    #[serde(default)]
    pub catalogue: Option<PathBuf>,
    #[serde(default)]
    pub deontic: Option<DeonticTable>,
    #[serde(default)]
    pub auto_resolve: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("smsp-out")
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let bytes = std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: PipelineConfig =
            serde_json::from_slice(&bytes).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.support);
        for p in &mut self.policies {
            join(&mut p.path);
        }
        if let Some(c) = &mut self.catalogue {
            join(c);
        }
        join(&mut self.output_dir);
    }

    /// Reads every referenced file.
    pub fn inputs(&self) -> Result<SessionInputs> {
        if self.policies.len() < 2 {
            bail!("at least two policy inputs are required, got {}", self.policies.len());
        }
        let support = read_support(&self.support)?;
        let policies = self
            .policies
            .iter()
            .map(|p| {
                let text = std::fs::read_to_string(&p.path).with_context(|| format!("reading policy {}", p.path.display()))?;
                Ok(PolicyInput { lang: p.lang, domain_id: p.domain_id.clone(), text })
            })
            .collect::<Result<Vec<_>>>()?;
        let catalogue = match &self.catalogue {
            Some(path) => {
                let bytes = std::fs::read(path).with_context(|| format!("reading catalogue {}", path.display()))?;
                Catalogue::from_json(&bytes).with_context(|| format!("loading catalogue {}", path.display()))?
            }
            None => Catalogue::default(),
        };
        Ok(SessionInputs {
            support,
            policies,
            similarity: self.similarity,
            enrichment: self.enrichment,
            catalogue,
            deontic: self.deontic.clone().unwrap_or_default(),
        })
    }
}

/// Support ontology from a canonical JSON document, or Turtle when the file
/// ends in `.ttl`.
pub fn read_support(path: &Path) -> Result<Ontology> {
    let bytes = std::fs::read(path).with_context(|| format!("reading support ontology {}", path.display()))?;
    let o = if path.extension().is_some_and(|e| e == "ttl") {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or("support");
        import_turtle(&bytes, id)
    } else {
        load_ontology(&bytes)
    };
    o.with_context(|| format!("loading support ontology {}", path.display()))
}

/// One entry of a decisions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(flatten)]
    pub action: ResolutionAction,
    #[serde(default)]
    pub enrich: bool,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution<'a> {
    None,
    Auto,
    Decisions(&'a [Decision]),
}

/// Builds the session and applies the requested resolution.
pub fn run(inputs: SessionInputs, resolution: Resolution) -> Result<SessionState> {
    let mut state = SessionState::create(inputs)?;
    match resolution {
        Resolution::None => {}
        Resolution::Auto => state = state.auto_resolve(now_ms),
        Resolution::Decisions(ds) => {
            for (i, d) in ds.iter().enumerate() {
                state = state.decide(&d.action, d.enrich, now_ms()).with_context(|| format!("decision {}", i + 1))?.0;
            }
        }
    }
    Ok(state)
}

/// Writes the correspondence ontology, report, enriched ontology (JSON and
/// Turtle), the session snapshot and, when `harmonized`, one policy file per
/// domain. Returns the written paths.
pub fn write_artifacts(state: &SessionState, dir: &Path, harmonized: bool) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut written = Vec::new();
    let mut put = |path: PathBuf, bytes: Vec<u8>| -> Result<()> {
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    let c = ExportFormat::Canonical;
    put(dir.join("correspondences.json"), state.export(ExportWhat::Correspondences, c, None)?)?;
    put(dir.join("report.json"), state.export(ExportWhat::Report, c, None)?)?;
    put(dir.join("enriched_ontology.json"), state.export(ExportWhat::EnrichedOntology, c, None)?)?;
    put(dir.join("enriched_ontology.ttl"), state.export(ExportWhat::EnrichedOntology, ExportFormat::Turtle, None)?)?;
    put(dir.join("session.json"), state.to_bytes())?;
    if harmonized {
        let hdir = dir.join("harmonized");
        std::fs::create_dir_all(&hdir).with_context(|| format!("creating {}", hdir.display()))?;
        for h in state.harmonized() {
            put(hdir.join(&h.file), h.text.into_bytes())?;
        }
    }
    Ok(written)
}

/// Exit status contract: 0 when nothing is open, 1 otherwise.
pub fn exit_code(state: &SessionState) -> u8 {
    u8::from(!state.remaining_conflicts().is_empty())
}

/// `run` plus `write_artifacts` driven by a config; harmonized policies are
/// written when `auto_resolve` is set.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<(SessionState, u8)> {
    let resolution = if cfg.auto_resolve { Resolution::Auto } else { Resolution::None };
    let state = run(cfg.inputs()?, resolution)?;
    write_artifacts(&state, &cfg.output_dir, cfg.auto_resolve)?;
    let code = exit_code(&state);
    Ok((state, code))
}

/// Short human-readable summary for stdout.
pub fn describe(state: &SessionState) -> String {
    let s = state.summary();
    let mut out = format!("session {}\n", s.session_id);
    for (kind, n) in &s.open {
        out.push_str(&format!("  open {:<20} {n}\n", kind.as_str()));
    }
    out.push_str(&format!("  resolved {}  decisions {}\n", s.resolved_total, s.decisions));
    for c in state.remaining_conflicts() {
        let sides: Vec<String> = c.correspondences.iter().map(|x| format!("{} ~ {}", x.left.concept_id, x.right.concept_id)).collect();
        let form = serde_json::to_value(c.form).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        out.push_str(&format!("  {} {} {form} {}\n", c.id, c.kind.as_str(), sides.join(", ")));
    }
    out
}
