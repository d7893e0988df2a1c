//! Deterministic Turtle export and an importer for exactly the subset the
//! exporter emits.
//!
//! Predicate mapping: is_a `rdfs:subClassOf`, part_of `ex:partOf`,
//! synonym_of `ex:synonymOf`, homonym_of `ex:homonymOf`, equivalent_to
//! `owl:equivalentClass`, related_to `rdfs:seeAlso`, labels `rdfs:label`.
//! Concept kinds are written as `a ex:<Kind>`. Provenance and confidence
//! are not part of the RDF view.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{Concept, ConceptKind, Ontology, OntologyError, Relation, RelationType};

const EX: &str = "http://smsp.example/schema#";
const OWL: &str = "http://www.w3.org/2002/07/owl#";
const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";
const CONCEPT_BASE: &str = "http://smsp.example/ontology/";

fn predicate(t: RelationType) -> &'static str {
    match t {
        RelationType::IsA => "rdfs:subClassOf",
        RelationType::PartOf => "ex:partOf",
        RelationType::SynonymOf => "ex:synonymOf",
        RelationType::HomonymOf => "ex:homonymOf",
        RelationType::EquivalentTo => "owl:equivalentClass",
        RelationType::RelatedTo => "rdfs:seeAlso",
    }
}

fn class_name(kind: ConceptKind) -> &'static str {
    match kind {
        ConceptKind::Action => "Action",
        ConceptKind::DeonticOperator => "DeonticOperator",
        ConceptKind::Entity => "Entity",
        ConceptKind::Predicate => "Predicate",
        ConceptKind::Policy => "Policy",
        ConceptKind::Generic => "Generic",
    }
}

fn iri(id: &str) -> String {
    let mut out = String::from("<");
    out.push_str(CONCEPT_BASE);
    for c in id.chars() {
        let reserved = matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\' | '%');
        if c.is_ascii_graphic() && !reserved {
            out.push(c);
        } else {
            let mut buf = [0u8; 4];
            for b in c.encode_utf8(&mut buf).bytes() {
                let _ = write!(out, "%{b:02X}");
            }
        }
    }
    out.push('>');
    out
}

fn literal(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

pub fn export_turtle(o: &Ontology) -> Vec<u8> {
    let mut out = format!("@prefix ex: <{EX}> .\n@prefix owl: <{OWL}> .\n@prefix rdfs: <{RDFS}> .\n");
    let mut by_source: BTreeMap<&str, BTreeMap<RelationType, Vec<&str>>> = BTreeMap::new();
    for r in o.relations() {
        by_source.entry(&r.source).or_default().entry(r.rel_type).or_default().push(&r.target);
    }
    for c in o.concepts() {
        let mut lines = vec![format!("a ex:{}", class_name(c.kind))];
        let labels: Vec<String> = c.labels.iter().map(|l| literal(l)).collect();
        lines.push(format!("rdfs:label {}", labels.join(", ")));
        if let Some(rels) = by_source.get(c.id.as_str()) {
            for (t, targets) in rels {
                let objs: Vec<String> = targets.iter().map(|t| iri(t)).collect();
                lines.push(format!("{} {}", predicate(*t), objs.join(", ")));
            }
        }
        let _ = write!(out, "\n{} {} .\n", iri(&c.id), lines.join(" ;\n    "));
    }
    out.into_bytes()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Iri(String),
    Name(String),
    Literal(String),
    Punct(char),
    Directive(String),
}

fn malformed(msg: impl Into<String>) -> OntologyError {
    OntologyError::Malformed(format!("turtle: {}", msg.into()))
}

fn lex(text: &str) -> Result<Vec<Tok>, OntologyError> {
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut toks = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '#' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '<' => {
                let start = i + 1;
                while i < chars.len() && chars[i] != '>' {
                    i += 1;
                }
                if i == chars.len() {
                    return Err(malformed("unterminated IRI"));
                }
                toks.push(Tok::Iri(chars[start..i].iter().collect()));
                i += 1;
            }
            '"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match chars.get(i) {
                        None => return Err(malformed("unterminated string")),
                        Some('"') => break,
                        Some('\\') => {
                            let esc = chars.get(i + 1).ok_or_else(|| malformed("dangling escape"))?;
                            s.push(match esc {
                                'n' => '\n',
                                'r' => '\r',
                                't' => '\t',
                                '"' => '"',
                                '\\' => '\\',
                                other => return Err(malformed(format!("unsupported escape \\{other}"))),
                            });
                            i += 2;
                        }
                        Some(c) => {
                            s.push(*c);
                            i += 1;
                        }
                    }
                }
                i += 1;
                toks.push(Tok::Literal(s));
            }
            ',' | ';' | '.' => {
                toks.push(Tok::Punct(c));
                i += 1;
            }
            '@' => {
                let start = i + 1;
                i += 1;
                while i < chars.len() && chars[i].is_alphanumeric() {
                    i += 1;
                }
                toks.push(Tok::Directive(chars[start..i].iter().collect()));
            }
            _ => {
                let start = i;
                while i < chars.len() && !chars[i].is_whitespace() && !matches!(chars[i], ',' | ';' | '<' | '"') {
                    if chars[i] == '.' && chars.get(i + 1).is_none_or(|n| n.is_whitespace()) {
                        break;
                    }
                    i += 1;
                }
                toks.push(Tok::Name(chars[start..i].iter().collect()));
            }
        }
    }
    Ok(toks)
}

fn percent_decode(s: &str) -> Result<String, OntologyError> {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            let hex = s.get(i + 1..i + 3).ok_or_else(|| malformed("truncated percent escape"))?;
            out.push(u8::from_str_radix(hex, 16).map_err(|_| malformed("bad percent escape"))?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| malformed("percent escape is not UTF-8"))
}

enum Object {
    Resource(String),
    Literal(String),
}

/// Reads back Turtle produced by [`export_turtle`]. Relations come back as
/// authored with confidence 1.0.
pub fn import_turtle(bytes: &[u8], id: &str) -> Result<Ontology, OntologyError> {
    let text = std::str::from_utf8(bytes).map_err(|_| malformed("not UTF-8"))?;
    let toks = lex(text)?;
    let mut prefixes: BTreeMap<String, String> = BTreeMap::new();
    let mut triples: Vec<(String, String, Object)> = Vec::new();

    let expand = |tok: &Tok, prefixes: &BTreeMap<String, String>| -> Result<String, OntologyError> {
        match tok {
            Tok::Iri(i) => Ok(i.clone()),
            Tok::Name(n) if n == "a" => Ok(format!("{RDFS}type")),
            Tok::Name(n) => {
                let (p, local) = n.split_once(':').ok_or_else(|| malformed(format!("bad name `{n}`")))?;
                let base = prefixes.get(p).ok_or_else(|| malformed(format!("unknown prefix `{p}`")))?;
                Ok(format!("{base}{local}"))
            }
            other => Err(malformed(format!("expected a resource, found {other:?}"))),
        }
    };

    let mut i = 0;
    while i < toks.len() {
        if let Tok::Directive(d) = &toks[i] {
            if d != "prefix" {
                return Err(malformed(format!("unsupported directive @{d}")));
            }
            match (toks.get(i + 1), toks.get(i + 2), toks.get(i + 3)) {
                (Some(Tok::Name(p)), Some(Tok::Iri(base)), Some(Tok::Punct('.'))) => {
                    prefixes.insert(p.trim_end_matches(':').to_string(), base.clone());
                }
                _ => return Err(malformed("bad @prefix line")),
            }
            i += 4;
            continue;
        }
        let subject = expand(&toks[i], &prefixes)?;
        i += 1;
        loop {
            let pred = expand(toks.get(i).ok_or_else(|| malformed("missing predicate"))?, &prefixes)?;
            i += 1;
            loop {
                let obj = match toks.get(i) {
                    Some(Tok::Literal(l)) => Object::Literal(l.clone()),
                    Some(t) => Object::Resource(expand(t, &prefixes)?),
                    None => return Err(malformed("missing object")),
                };
                triples.push((subject.clone(), pred.clone(), obj));
                i += 1;
                if toks.get(i) == Some(&Tok::Punct(',')) {
                    i += 1;
                } else {
                    break;
                }
            }
            match toks.get(i) {
                Some(Tok::Punct(';')) => i += 1,
                Some(Tok::Punct('.')) => {
                    i += 1;
                    break;
                }
                _ => return Err(malformed("expected `;` or `.`")),
            }
        }
    }

    let concept_id = |iri: &str| -> Result<String, OntologyError> {
        let rest = iri.strip_prefix(CONCEPT_BASE).ok_or_else(|| malformed(format!("foreign IRI <{iri}>")))?;
        percent_decode(rest)
    };
    let rdf_type = format!("{RDFS}type");
    let label = format!("{RDFS}label");
    let mut kinds: BTreeMap<String, ConceptKind> = BTreeMap::new();
    let mut labels: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut relations = Vec::new();
    for (s, p, o) in triples {
        let sid = concept_id(&s)?;
        match o {
            Object::Literal(l) if p == label => labels.entry(sid).or_default().push(l),
            Object::Resource(class) if p == rdf_type => {
                let name = class.strip_prefix(EX).unwrap_or_default();
                let kind = ConceptKind::ALL
                    .into_iter()
                    .find(|k| class_name(*k) == name)
                    .ok_or_else(|| malformed(format!("unknown class <{class}>")))?;
                kinds.insert(sid, kind);
            }
            Object::Resource(target) => {
                let t = RelationType::ALL
                    .into_iter()
                    .find(|t| {
                        let (p_prefix, local) = predicate(*t).split_once(':').unwrap();
                        let base = match p_prefix {
                            "ex" => EX,
                            "owl" => OWL,
                            _ => RDFS,
                        };
                        p == format!("{base}{local}")
                    })
                    .ok_or_else(|| malformed(format!("unsupported predicate <{p}>")))?;
                relations.push(Relation::authored(sid, concept_id(&target)?, t));
            }
            Object::Literal(_) => return Err(malformed(format!("unexpected literal for <{p}>"))),
        }
    }

    let mut o = Ontology::new(id);
    for (cid, kind) in kinds {
        let ls = labels.remove(&cid).unwrap_or_default();
        o.insert_concept(Concept { id: cid, labels: ls, kind })?;
    }
    if let Some(orphan) = labels.keys().next() {
        return Err(malformed(format!("labels for untyped subject `{orphan}`")));
    }
    for r in relations {
        o.insert_relation(r)?;
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PREFIXES: &str = "@prefix ex: <http://smsp.example/schema#> .\n@prefix owl: <http://www.w3.org/2002/07/owl#> .\n@prefix rdfs: <http://www.w3.org/2000/01/rdf-schema#> .\n";

    #[test]
    fn empty_ontology_is_prefix_block() {
        assert_eq!(String::from_utf8(export_turtle(&Ontology::new("so"))).unwrap(), PREFIXES);
    }

    #[test]
    fn single_concept() {
        let mut o = Ontology::new("so");
        o.insert_concept(Concept::new("so#Permit", &["permit"], ConceptKind::DeonticOperator)).unwrap();
        let ttl = String::from_utf8(export_turtle(&o)).unwrap();
        assert_eq!(
            ttl,
            format!(
                "{PREFIXES}\n<http://smsp.example/ontology/so#Permit> a ex:DeonticOperator ;\n    rdfs:label \"permit\" .\n"
            )
        );
        assert_eq!(ttl.matches("rdfs:label").count(), 1);
    }

    #[test]
    fn relations_and_escapes_round_trip() {
        let mut o = Ontology::new("so");
        o.insert_concept(Concept::new("so#A b", &["say \"hi\"", "x\\y"], ConceptKind::Entity)).unwrap();
        o.insert_concept(Concept::new("so#Ü", &["ü"], ConceptKind::Generic)).unwrap();
        o.insert_concept(Concept::new("so#C.", &["c"], ConceptKind::Action)).unwrap();
        o.insert_relation(Relation::authored("so#A b", "so#Ü", RelationType::IsA)).unwrap();
        o.insert_relation(Relation::authored("so#A b", "so#C.", RelationType::EquivalentTo)).unwrap();
        o.insert_relation(Relation::authored("so#A b", "so#C.", RelationType::RelatedTo)).unwrap();
        o.insert_relation(Relation::authored("so#C.", "so#Ü", RelationType::PartOf)).unwrap();
        let ttl = export_turtle(&o);
        let back = import_turtle(&ttl, "so").unwrap();
        assert!(back.same_shape(&o));
        assert_eq!(export_turtle(&back), ttl);
    }

    #[test]
    fn rejects_foreign_content() {
        let doc = format!("{PREFIXES}<http://other/x> a ex:Entity ; rdfs:label \"x\" .\n");
        assert!(import_turtle(doc.as_bytes(), "so").is_err());
        let doc = format!("{PREFIXES}<http://smsp.example/ontology/so#x> a ex:Entity ; ex:weird <http://smsp.example/ontology/so#x> .\n");
        assert!(import_turtle(doc.as_bytes(), "so").is_err());
    }
}
