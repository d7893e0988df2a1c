//! Test support: fixture paths, proptest generators and slow reference
//! implementations used as oracles against the core crate.

pub mod fixtures;
pub mod gen;
pub mod oracle;

use std::path::PathBuf;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures_dir().join(rel)
}

/// Every file of the parser corpus with its language, in name order.
pub fn corpus() -> Vec<(smsp_core::policy::SourceLang, PathBuf)> {
    use smsp_core::policy::SourceLang;
    let mut files: Vec<PathBuf> = std::fs::read_dir(fixture("corpus"))
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let lang = match p.extension().and_then(|e| e.to_str()) {
                Some("rei") => SourceLang::Rei,
                Some("ponder") => SourceLang::Ponder,
                Some("json") => SourceLang::Kaos,
                other => panic!("unexpected corpus file extension {other:?}"),
            };
            (lang, p)
        })
        .collect()
}
