//! KAOS-style structured input: a JSON array of
//! `{modality, actor, action, target?, context?: [{pred, args}]}` objects.
//! Modality strings are `A+`, `A-`, `O+`, `O-`; anything else is rejected.

use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize};

use super::{Condition, EntityRef, Modality, ParseError, PolicyRule, PolicySet, SourceLang};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
struct Name(String);

impl<'de> Deserialize<'de> for Name {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.trim().is_empty() {
            return Err(de::Error::custom("identifier must not be empty"));
        }
        Ok(Name(s))
    }
}

#[derive(Debug, Clone, Copy)]
struct KaosModality(Modality);

impl KaosModality {
    fn as_str(self) -> &'static str {
        match self.0 {
            Modality::AuthPos => "A+",
            Modality::AuthNeg => "A-",
            Modality::OblPos => "O+",
            Modality::OblNeg => "O-",
            Modality::Unknown => "?",
        }
    }
}

impl<'de> Deserialize<'de> for KaosModality {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = KaosModality;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("one of \"A+\", \"A-\", \"O+\", \"O-\"")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<KaosModality, E> {
                let m = match v {
                    "A+" => Modality::AuthPos,
                    "A-" => Modality::AuthNeg,
                    "O+" => Modality::OblPos,
                    "O-" => Modality::OblNeg,
                    other => return Err(E::custom(format!("unknown modality \"{other}\""))),
                };
                Ok(KaosModality(m))
            }
        }
        d.deserialize_str(V)
    }
}

impl Serialize for KaosModality {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Context {
    pred: Name,
    args: Vec<Name>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    modality: KaosModality,
    actor: Name,
    action: Name,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    target: Option<Name>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    context: Vec<Context>,
}

fn located(err: serde_json::Error) -> ParseError {
    // serde_json appends " at line L column C"; the location is carried separately.
    let msg = err.to_string();
    let msg = match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg,
    };
    ParseError::new(err.line().max(1), err.column().max(1), "", msg)
}

pub fn parse(bytes: &[u8], domain_id: &str) -> Result<PolicySet, ParseError> {
    let entries: Vec<Entry> = serde_json::from_slice(bytes).map_err(located)?;
    let rules = entries
        .into_iter()
        .enumerate()
        .map(|(i, e)| {
            let actor = e.actor.0;
            PolicyRule {
                id: format!("r{}", i + 1),
                domain_id: domain_id.to_string(),
                source_lang: SourceLang::Kaos,
                modality: e.modality.0,
                deontic_label: e.modality.as_str().to_string(),
                subject: EntityRef::classify(&actor, &actor),
                action: e.action.0,
                target: e.target.map(|t| EntityRef::named(t.0)),
                conditions: e
                    .context
                    .into_iter()
                    .map(|c| Condition {
                        predicate: c.pred.0,
                        args: c.args.iter().map(|a| EntityRef::classify(&a.0, &actor)).collect(),
                    })
                    .collect(),
            }
        })
        .collect();
    Ok(PolicySet { domain_id: domain_id.to_string(), lang: SourceLang::Kaos, rules })
}

/// A JSON array with one entry object per line.
pub fn print(set: &PolicySet) -> String {
    if set.rules.is_empty() {
        return "[]\n".to_string();
    }
    let lines: Vec<String> = set
        .rules
        .iter()
        .map(|r| {
            let entry = Entry {
                modality: KaosModality(r.modality),
                actor: Name(r.subject.name.clone()),
                action: Name(r.action.clone()),
                target: r.target.as_ref().map(|t| Name(t.name.clone())),
                context: r
                    .conditions
                    .iter()
                    .map(|c| Context {
                        pred: Name(c.predicate.clone()),
                        args: c.args.iter().map(|a| Name(a.name.clone())).collect(),
                    })
                    .collect(),
            };
            serde_json::to_string(&entry).expect("entry serializes")
        })
        .collect();
    format!("[\n{}\n]\n", lines.join(",\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry() {
        let src = br#"[{"modality":"A+","actor":"P","action":"usePrintingService","context":[{"pred":"member","args":["P","ITDepartment"]}]}]"#;
        let set = parse(src, "K").unwrap();
        let r = &set.rules[0];
        assert_eq!(r.modality, Modality::AuthPos);
        assert_eq!(r.deontic_label, "A+");
        assert_eq!(r.subject, EntityRef::variable("P"));
        assert_eq!(r.conditions[0].args[1], EntityRef::named("ITDepartment"));
        assert_eq!(r.source_lang, SourceLang::Kaos);
    }

    #[test]
    fn empty_array() {
        assert!(parse(b"[]", "K").unwrap().rules.is_empty());
    }

    #[test]
    fn unknown_modality() {
        let err = parse(br#"[{"modality":"X","actor":"P","action":"a"}]"#, "K").unwrap_err();
        assert!(err.message.contains("unknown modality \"X\""), "{}", err.message);
        assert_eq!(err.line, 1);
    }

    #[test]
    fn missing_field_named() {
        let err = parse(b"[{\"modality\":\"A-\",\n \"action\":\"a\"}]", "K").unwrap_err();
        assert!(err.message.contains("actor"), "{}", err.message);
        assert_eq!(err.line, 2);
    }

    #[test]
    fn mistyped_field() {
        let err = parse(br#"[{"modality":"O+","actor":"P","action":7}]"#, "K").unwrap_err();
        assert!(err.message.contains("invalid type"), "{}", err.message);
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse(br#"[{"modality":"O+","actor":"P","action":"a","priority":3}]"#, "K").unwrap_err();
        assert!(err.message.contains("priority"));
    }

    #[test]
    fn invalid_utf8() {
        assert!(parse(&[b'[', 0xff, b']'], "K").is_err());
    }

    #[test]
    fn print_round_trip() {
        let src = br#"[{"modality":"O-","actor":"/ops","action":"rotateKeys","target":"Vault"},{"modality":"A-","actor":"X","action":"read","context":[{"pred":"after","args":["X","midnight"]}]}]"#;
        let set = parse(src, "K").unwrap();
        let printed = print(&set);
        assert_eq!(
            printed,
            "[\n{\"modality\":\"O-\",\"actor\":\"/ops\",\"action\":\"rotateKeys\",\"target\":\"Vault\"},\n{\"modality\":\"A-\",\"actor\":\"X\",\"action\":\"read\",\"context\":[{\"pred\":\"after\",\"args\":[\"X\",\"midnight\"]}]}\n]\n"
        );
        assert_eq!(parse(printed.as_bytes(), "K").unwrap(), set);
    }
}
