//! proptest strategies for ontologies, SOPs and policy texts.

use proptest::prelude::*;
use proptest::sample::{select, subsequence};
use serde_json::json;
use smsp_core::ontology::{Concept, ConceptKind, Ontology, Provenance, Relation, RelationType};
use smsp_core::policy::SourceLang;
use smsp_core::sop::Sop;

/// Shared label pool. Several entries are near-spellings of each other so
/// that generated pairs hit every alignment branch.
pub const LABELS: &[&str] = &[
    "permit",
    "allow",
    "grant",
    "deny",
    "print",
    "printer",
    "printers",
    "printing service",
    "use printing service",
    "output",
    "key",
    "keys",
    "crypto key",
    "database key",
    "record",
    "records",
    "read record",
    "member",
    "members",
    "department",
    "it department",
];

/// Re-spells a space-separated label as camelCase, snake_case or
/// UPPER_SNAKE.
pub fn respell(label: &str, style: u8) -> String {
    let words: Vec<&str> = label.split(' ').collect();
    match style % 4 {
        0 => label.to_string(),
        1 => words
            .iter()
            .enumerate()
            .map(|(i, w)| {
                if i == 0 {
                    w.to_string()
                } else {
                    let mut c = w.chars();
                    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
                }
            })
            .collect(),
        2 => words.join("_"),
        _ => words.join("_").to_uppercase(),
    }
}

fn styled_label() -> impl Strategy<Value = String> {
    (select(LABELS), any::<u8>()).prop_map(|(l, s)| respell(l, s))
}

fn labels() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(styled_label(), 1..=3).prop_map(|mut v| {
        let mut seen = std::collections::BTreeSet::new();
        v.retain(|l| seen.insert(l.clone()));
        v
    })
}

/// Like [`labels`], but the preferred label often comes from a tiny pool,
/// so equal labels with different qualifiers (homonym material) are common.
fn sop_labels() -> impl Strategy<Value = Vec<String>> {
    let first = prop_oneof![select(&["key", "record", "port"][..]).prop_map(String::from), styled_label()];
    (first, prop::collection::vec(styled_label(), 0..=2)).prop_map(|(f, rest)| {
        let mut v = vec![f];
        for l in rest {
            if !v.contains(&l) {
                v.push(l);
            }
        }
        v
    })
}

fn kind() -> impl Strategy<Value = ConceptKind> {
    select(ConceptKind::ALL.to_vec())
}

fn relation_type() -> impl Strategy<Value = RelationType> {
    select(RelationType::ALL.to_vec())
}

/// Ontology with `1..=max` concepts `{prefix}#c{i}`. Hierarchical edges
/// only point from higher to lower index, so they stay acyclic.
pub fn ontology(prefix: &'static str, max: usize) -> impl Strategy<Value = Ontology> {
    (1..=max)
        .prop_flat_map(move |n| {
            let concepts = prop::collection::vec((labels(), kind()), n);
            let edges = prop::collection::vec((0..n, 0..n, relation_type(), any::<bool>(), 1u8..=10), 0..=2 * n);
            (concepts, edges)
        })
        .prop_map(move |(concepts, edges)| build(prefix, concepts, edges))
}

fn build(
    prefix: &str,
    concepts: Vec<(Vec<String>, ConceptKind)>,
    edges: Vec<(usize, usize, RelationType, bool, u8)>,
) -> Ontology {
    let mut o = Ontology::new(prefix);
    for (i, (labels, kind)) in concepts.into_iter().enumerate() {
        let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
        o.insert_concept(Concept::new(format!("{prefix}#c{i}"), &labels, kind)).unwrap();
    }
    for (a, b, t, authored, conf) in edges {
        let (a, b) = if t.is_hierarchical() { (a.max(b), a.min(b)) } else { (a, b) };
        if a == b {
            continue;
        }
        let (prov, conf) = if authored { (Provenance::Authored, 1.0) } else { (Provenance::Case1, f64::from(conf) / 10.0) };
        let r = Relation::new(format!("{prefix}#c{a}"), format!("{prefix}#c{b}"), t, prov, conf);
        o.insert_relation(r).unwrap();
    }
    o
}

/// Support ontology: only is_a, synonym_of and equivalent_to edges, all
/// authored.
pub fn support(max: usize) -> impl Strategy<Value = Ontology> {
    let t = select(vec![RelationType::IsA, RelationType::IsA, RelationType::SynonymOf, RelationType::EquivalentTo]);
    (1..=max)
        .prop_flat_map(move |n| {
            let concepts = prop::collection::vec((labels(), kind()), n);
            let edges = prop::collection::vec((0..n, 0..n, t.clone()).prop_map(|(a, b, t)| (a, b, t, true, 10)), 0..=2 * n);
            (concepts, edges)
        })
        .prop_map(|(concepts, edges)| build("so", concepts, edges))
}

/// SOP for domain `domain` with `1..=max` concepts and no bindings. Kinds
/// are drawn from a narrow set so that cross-SOP pairs often agree.
pub fn sop(domain: &'static str, max: usize) -> impl Strategy<Value = Sop> {
    let kind = select(vec![ConceptKind::Entity, ConceptKind::Entity, ConceptKind::Action, ConceptKind::Policy]);
    (1..=max)
        .prop_flat_map(move |n| {
            let concepts = prop::collection::vec((sop_labels(), kind.clone()), n);
            let t = Just(RelationType::PartOf);
            let edges = prop::collection::vec((0..n, 0..n, t).prop_map(|(a, b, t)| (a, b, t, true, 10)), 0..n);
            (concepts, edges)
        })
        .prop_map(move |(concepts, edges)| Sop {
            domain_id: domain.to_string(),
            lang: SourceLang::Rei,
            ontology: build(&format!("sop-{domain}"), concepts, edges),
            bindings: Vec::new(),
        })
}

/// A support ontology plus two SOPs over the same label pool.
pub fn alignment_case(max_support: usize, max_sop: usize) -> impl Strategy<Value = (Ontology, Vec<Sop>)> {
    (support(max_support), sop("A", max_sop), sop("B", max_sop)).prop_map(|(s, a, b)| (s, vec![a, b]))
}

// Policy text.

const ACTIONS: &[&str] = &["usePrintingService", "deleteRecord", "openPort", "rotateKey", "backupDatabase", "audit"];
const PREDICATES: &[&str] = &["member", "onShift", "zone", "holds", "owner"];
const CONSTANTS: &[&str] = &["ITDepartment", "Nurses", "dmz", "hq", "Printers", "Records", "db1"];
const VARIABLES: &[&str] = &["P", "Q", "X1"];

#[derive(Debug, Clone)]
pub struct RuleSpec {
    /// Index into the modality groups: permit, prohibit, oblige, exempt.
    pub modality: usize,
    pub variant: usize,
    pub subject: &'static str,
    pub action: &'static str,
    pub target: Option<&'static str>,
    pub conditions: Vec<(&'static str, Vec<&'static str>)>,
}

fn rule_spec(action: impl Strategy<Value = &'static str>) -> impl Strategy<Value = RuleSpec> {
    let arg = prop_oneof![select(VARIABLES), select(CONSTANTS)];
    let cond = (select(PREDICATES), prop::collection::vec(arg, 1..=2));
    (0..4usize, 0..3usize, select(VARIABLES), action, prop::option::of(select(CONSTANTS)), prop::collection::vec(cond, 0..=2))
        .prop_map(|(modality, variant, subject, action, target, conditions)| RuleSpec {
            modality,
            variant,
            subject,
            action,
            target,
            conditions,
        })
}

fn rei_deontic(m: usize, v: usize) -> &'static str {
    const T: [[&str; 3]; 4] =
        [["permit", "allow", "grant"], ["prohibit", "deny", "forbid"], ["oblige", "must", "require"], ["exempt", "waive", "dispense"]];
    T[m][v]
}

fn render_conditions(rule: &RuleSpec) -> Vec<String> {
    rule.conditions.iter().map(|(p, args)| format!("{p}({})", args.join(", "))).collect()
}

/// Renders rules in the surface syntax of `lang`. Ponder has no keyword
/// for exemptions and REI no target slot; those parts are dropped.
pub fn render(lang: SourceLang, rules: &[RuleSpec]) -> String {
    match lang {
        SourceLang::Rei => rules
            .iter()
            .map(|r| {
                format!(
                    "has({}, {}({}, [{}])).\n",
                    r.subject,
                    rei_deontic(r.modality, r.variant),
                    r.action,
                    render_conditions(r).join(", ")
                )
            })
            .collect(),
        SourceLang::Ponder => rules
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let kw = ["auth+", "auth-", "oblig", "oblig"][r.modality];
                let mut s = format!("inst {kw} p{i} {{ subject {}; action {};", r.subject, r.action);
                if let Some(t) = r.target {
                    s.push_str(&format!(" target {t};"));
                }
                if !r.conditions.is_empty() {
                    s.push_str(&format!(" when {};", render_conditions(r).join(", ")));
                }
                s + " }\n"
            })
            .collect(),
        SourceLang::Kaos => {
            let items: Vec<serde_json::Value> = rules
                .iter()
                .map(|r| {
                    let modality = ["A+", "A-", "O+", "O-"][r.modality];
                    let mut v = json!({
                        "modality": modality,
                        "actor": r.subject,
                        "action": r.action,
                    });
                    if let Some(t) = r.target {
                        v["target"] = json!(t);
                    }
                    if !r.conditions.is_empty() {
                        v["context"] = r.conditions.iter().map(|(p, a)| json!({"pred": p, "args": a})).collect();
                    }
                    v
                })
                .collect();
            serde_json::to_string(&items).unwrap()
        }
    }
}

pub fn lang() -> impl Strategy<Value = SourceLang> {
    select(vec![SourceLang::Rei, SourceLang::Ponder, SourceLang::Kaos])
}

/// Valid policy text in `lang`, 0 to 5 rules.
pub fn policy_text(lang: SourceLang) -> impl Strategy<Value = String> {
    prop::collection::vec(rule_spec(select(ACTIONS)), 0..=5).prop_map(move |rules| render(lang, &rules))
}

/// Valid policy text whose rules all act on different actions, so the set
/// cannot contradict itself.
pub fn consistent_policy_text(lang: SourceLang) -> impl Strategy<Value = String> {
    subsequence(ACTIONS, 1..=ACTIONS.len())
        .prop_flat_map(|actions| actions.into_iter().map(|a| rule_spec(Just(a))).collect::<Vec<_>>())
        .prop_map(move |rules| render(lang, &rules))
}

/// Valid text with a few random byte edits applied.
pub fn mutated_text(lang: SourceLang) -> impl Strategy<Value = Vec<u8>> {
    (policy_text(lang), prop::collection::vec((any::<prop::sample::Index>(), any::<u8>(), 0..3u8), 1..=4)).prop_map(
        |(text, edits)| {
            let mut bytes = text.into_bytes();
            for (at, byte, op) in edits {
                if bytes.is_empty() {
                    bytes.push(byte);
                    continue;
                }
                let i = at.index(bytes.len());
                match op {
                    0 => bytes[i] = byte,
                    1 => {
                        bytes.remove(i);
                    }
                    _ => bytes.insert(i, byte),
                }
            }
            bytes
        },
    )
}
