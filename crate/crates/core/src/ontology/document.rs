use serde::{Deserialize, Serialize};

use super::{Concept, ConceptKind, Ontology, OntologyError, Provenance, Relation, RelationType};

/// On-disk form of an ontology. Concepts are sorted by id and relations by
/// (source, type, target), so equal ontologies always produce equal bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OntologyDocument {
    pub id: String,
    pub concepts: Vec<ConceptDocument>,
    #[serde(default)]
    pub relations: Vec<RelationDocument>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptDocument {
    pub id: String,
    pub labels: Vec<String>,
    pub kind: ConceptKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDocument {
    pub source: String,
    pub target: String,
    #[serde(rename = "type")]
    pub rel_type: RelationType,
    pub provenance: Provenance,
    pub confidence: f64,
}

impl From<Ontology> for OntologyDocument {
    fn from(o: Ontology) -> Self {
        OntologyDocument::from(&o)
    }
}

impl From<&Ontology> for OntologyDocument {
    fn from(o: &Ontology) -> Self {
        OntologyDocument {
            id: o.id.clone(),
            concepts: o
                .concepts()
                .map(|c| ConceptDocument { id: c.id.clone(), labels: c.labels.clone(), kind: c.kind })
                .collect(),
            relations: o
                .relations()
                .map(|r| RelationDocument {
                    source: r.source.clone(),
                    target: r.target.clone(),
                    rel_type: r.rel_type,
                    provenance: r.provenance,
                    confidence: r.confidence,
                })
                .collect(),
        }
    }
}

impl TryFrom<OntologyDocument> for Ontology {
    type Error = OntologyError;

    /// Validates every invariant; nothing is repaired.
    fn try_from(doc: OntologyDocument) -> Result<Self, Self::Error> {
        let mut o = Ontology::new(doc.id);
        for c in doc.concepts {
            o.insert_concept(Concept { id: c.id, labels: c.labels, kind: c.kind })?;
        }
        for r in doc.relations {
            let rel = Relation {
                source: r.source,
                target: r.target,
                rel_type: r.rel_type,
                provenance: r.provenance,
                confidence: r.confidence,
            };
            o.check_relation(&rel)?;
            if rel.rel_type.is_symmetric() && rel.source > rel.target {
                return Err(OntologyError::InvalidRelation {
                    triple: rel.describe(),
                    reason: "symmetric relations are stored with source < target".into(),
                });
            }
            let key = rel.key();
            if o.relations.contains_key(&key) {
                return Err(OntologyError::DuplicateRelation(rel.describe()));
            }
            o.relations.insert(key, rel);
        }
        o.validate()?;
        Ok(o)
    }
}

pub fn load_ontology(bytes: &[u8]) -> Result<Ontology, OntologyError> {
    let doc: OntologyDocument =
        serde_json::from_slice(bytes).map_err(|e| OntologyError::Malformed(e.to_string()))?;
    Ontology::try_from(doc)
}

pub fn save_ontology(o: &Ontology) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(&OntologyDocument::from(o)).expect("ontology serializes");
    bytes.push(b'\n');
    bytes
}
