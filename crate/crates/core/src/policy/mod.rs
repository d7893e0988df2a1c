//! Canonical policy model shared by every language frontend.
//!
//! A [`PolicySet`] is what one administrative domain hands to the
//! workbench. Each frontend ([`rei`], [`ponder`], [`kaos`]) parses its own
//! surface syntax into the same [`PolicyRule`] shape and ships a canonical
//! pretty-printer so that harmonized rules can be written back out.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub mod kaos;
mod lexer;
pub mod ponder;
pub mod rei;

/// Sign and type of a policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    AuthPos,
    AuthNeg,
    OblPos,
    OblNeg,
    Unknown,
}

impl Modality {
    /// True for the two pairs with opposite sign: authorizations against
    /// negative authorizations, obligations against exemptions.
    pub fn opposes(self, other: Modality) -> bool {
        matches!(
            (self, other),
            (Modality::AuthPos, Modality::AuthNeg)
                | (Modality::AuthNeg, Modality::AuthPos)
                | (Modality::OblPos, Modality::OblNeg)
                | (Modality::OblNeg, Modality::OblPos)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceLang {
    Rei,
    Ponder,
    Kaos,
}

impl SourceLang {
    pub fn as_str(self) -> &'static str {
        match self {
            SourceLang::Rei => "rei",
            SourceLang::Ponder => "ponder",
            SourceLang::Kaos => "kaos",
        }
    }

    /// File extension used for harmonized policy files.
    pub fn extension(self) -> &'static str {
        match self {
            SourceLang::Rei => "rei",
            SourceLang::Ponder => "ponder",
            SourceLang::Kaos => "json",
        }
    }
}

impl fmt::Display for SourceLang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SourceLang {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rei" => Ok(SourceLang::Rei),
            "ponder" => Ok(SourceLang::Ponder),
            "kaos" => Ok(SourceLang::Kaos),
            other => Err(format!("unknown policy language `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefKind {
    Variable,
    Named,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EntityRef {
    pub kind: RefKind,
    pub name: String,
}

impl EntityRef {
    pub fn variable(name: impl Into<String>) -> Self {
        EntityRef { kind: RefKind::Variable, name: name.into() }
    }

    pub fn named(name: impl Into<String>) -> Self {
        EntityRef { kind: RefKind::Named, name: name.into() }
    }

    pub fn is_variable(&self) -> bool {
        self.kind == RefKind::Variable
    }

    /// Classifies an argument name relative to the rule's subject.
    pub fn classify(name: &str, subject: &str) -> Self {
        if name == subject && starts_uppercase(name) || is_variable_name(name) {
            EntityRef::variable(name)
        } else {
            EntityRef::named(name)
        }
    }
}

fn starts_uppercase(name: &str) -> bool {
    name.chars().next().is_some_and(|c| c.is_ascii_uppercase())
}

/// Conventional variable spelling: one uppercase letter, optionally
/// followed by digits (`P`, `Q`, `X1`). Longer capitalised identifiers such
/// as `ITDepartment` are constants.
pub fn is_variable_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => chars.all(|c| c.is_ascii_digit()),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub predicate: String,
    pub args: Vec<EntityRef>,
}

impl Condition {
    fn sort_key(&self) -> (&str, usize, Vec<&str>) {
        (
            self.predicate.as_str(),
            self.args.len(),
            self.args.iter().map(|a| a.name.as_str()).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub id: String,
    pub domain_id: String,
    pub source_lang: SourceLang,
    pub modality: Modality,
    /// Operator exactly as written in the source.
    pub deontic_label: String,
    pub subject: EntityRef,
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<EntityRef>,
    #[serde(default)]
    pub conditions: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicySet {
    pub domain_id: String,
    pub lang: SourceLang,
    pub rules: Vec<PolicyRule>,
}

impl PolicySet {
    pub fn new(domain_id: impl Into<String>, lang: SourceLang) -> Self {
        PolicySet { domain_id: domain_id.into(), lang, rules: Vec::new() }
    }

    pub fn rule(&self, id: &str) -> Option<&PolicyRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn rule_mut(&mut self, id: &str) -> Option<&mut PolicyRule> {
        self.rules.iter_mut().find(|r| r.id == id)
    }

    /// Copy of the set with every rule normalized.
    pub fn normalized(&self) -> PolicySet {
        PolicySet {
            domain_id: self.domain_id.clone(),
            lang: self.lang,
            rules: self.rules.iter().map(normalize_rule).collect(),
        }
    }
}

/// Sorts conditions by (predicate, arity, argument names) and drops exact
/// duplicates. The deontic label is left alone.
pub fn normalize_rule(rule: &PolicyRule) -> PolicyRule {
    let mut out = rule.clone();
    out.conditions.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()).then_with(|| a.cmp(b)));
    out.conditions.dedup();
    out
}

/// Lookup table from deontic operator names to modalities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeonticTable(BTreeMap<String, Modality>);

impl Default for DeonticTable {
    fn default() -> Self {
        let groups: [(&[&str], Modality); 4] = [
            (&["permit", "allow", "grant"], Modality::AuthPos),
            (&["prohibit", "deny", "forbid"], Modality::AuthNeg),
            (&["oblige", "must", "require"], Modality::OblPos),
            (&["exempt", "waive", "dispense"], Modality::OblNeg),
        ];
        let mut map = BTreeMap::new();
        for (labels, modality) in groups {
            for label in labels {
                map.insert(label.to_string(), modality);
            }
        }
        DeonticTable(map)
    }
}

impl DeonticTable {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Modality)>,
        S: AsRef<str>,
    {
        DeonticTable(
            entries
                .into_iter()
                .map(|(label, m)| (label.as_ref().to_lowercase(), m))
                .collect(),
        )
    }

    pub fn get(&self, label: &str) -> Option<Modality> {
        self.0.get(&label.to_lowercase()).copied()
    }
}

/// Case-insensitive lookup; labels outside the table map to `Unknown`.
pub fn map_deontic(label: &str, table: &DeonticTable) -> Modality {
    table.get(label).unwrap_or(Modality::Unknown)
}

/// Located syntax or schema error. Lines and columns are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    /// Offending token as it appears in the source (empty at end of input).
    pub token: String,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, token: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError { line, column, token: token.into(), message: message.into() }
    }
}

/// Parses `text` with the frontend for `lang` using the default deontic table.
pub fn parse(lang: SourceLang, text: &str, domain_id: &str) -> Result<PolicySet, ParseError> {
    parse_with(lang, text, domain_id, &DeonticTable::default())
}

pub fn parse_with(
    lang: SourceLang,
    text: &str,
    domain_id: &str,
    table: &DeonticTable,
) -> Result<PolicySet, ParseError> {
    match lang {
        SourceLang::Rei => rei::parse_with(text, domain_id, table),
        SourceLang::Ponder => ponder::parse(text, domain_id),
        SourceLang::Kaos => kaos::parse(text.as_bytes(), domain_id),
    }
}

/// Canonical text for a set in its own language.
pub fn print(set: &PolicySet) -> String {
    match set.lang {
        SourceLang::Rei => rei::print(set),
        SourceLang::Ponder => ponder::print(set),
        SourceLang::Kaos => kaos::print(set),
    }
}

pub(crate) fn print_args(args: &[EntityRef]) -> String {
    args.iter().map(|a| a.name.as_str()).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cond(pred: &str, args: &[&str]) -> Condition {
        Condition { predicate: pred.into(), args: args.iter().map(|a| EntityRef::classify(a, "X")).collect() }
    }

    fn rule_with(conditions: Vec<Condition>) -> PolicyRule {
        PolicyRule {
            id: "r1".into(),
            domain_id: "A".into(),
            source_lang: SourceLang::Rei,
            modality: Modality::AuthPos,
            deontic_label: "Permit".into(),
            subject: EntityRef::variable("X"),
            action: "read".into(),
            target: None,
            conditions,
        }
    }

    #[test]
    fn default_table() {
        let t = DeonticTable::default();
        assert_eq!(map_deontic("permit", &t), Modality::AuthPos);
        assert_eq!(map_deontic("allow", &t), Modality::AuthPos);
        assert_eq!(map_deontic("frobnicate", &t), Modality::Unknown);
        assert_eq!(map_deontic("DENY", &t), Modality::AuthNeg);
        assert_eq!(map_deontic("Waive", &t), Modality::OblNeg);
        assert_eq!(map_deontic("must", &t), Modality::OblPos);
    }

    #[test]
    fn overridden_table() {
        let t = DeonticTable::from_entries([("Erlauben", Modality::AuthPos)]);
        assert_eq!(map_deontic("erlauben", &t), Modality::AuthPos);
        assert_eq!(map_deontic("permit", &t), Modality::Unknown);
    }

    #[test]
    fn normalize_sorts_conditions() {
        let r = rule_with(vec![cond("b", &["X"]), cond("a", &["X"])]);
        let n = normalize_rule(&r);
        assert_eq!(n.conditions, vec![cond("a", &["X"]), cond("b", &["X"])]);
        assert_eq!(normalize_rule(&n), n);
        assert_eq!(n.deontic_label, "Permit");
    }

    #[test]
    fn normalize_orders_by_arity_then_names() {
        let r = rule_with(vec![cond("m", &["X", "b"]), cond("m", &["z"]), cond("m", &["X", "a"])]);
        let names: Vec<_> = normalize_rule(&r)
            .conditions
            .iter()
            .map(|c| print_args(&c.args))
            .collect();
        assert_eq!(names, ["z", "X, a", "X, b"]);
    }

    #[test]
    fn variable_classification() {
        assert!(EntityRef::classify("P", "P").is_variable());
        assert!(EntityRef::classify("X1", "P").is_variable());
        assert!(!EntityRef::classify("ITDepartment", "P").is_variable());
        assert!(!EntityRef::classify("printers", "P").is_variable());
        assert!(EntityRef::classify("Subject", "Subject").is_variable());
    }

    #[test]
    fn opposition() {
        assert!(Modality::AuthPos.opposes(Modality::AuthNeg));
        assert!(Modality::OblNeg.opposes(Modality::OblPos));
        assert!(!Modality::AuthPos.opposes(Modality::AuthPos));
        assert!(!Modality::AuthPos.opposes(Modality::OblNeg));
        assert!(!Modality::Unknown.opposes(Modality::AuthNeg));
    }
}
