//! Frontend for a Ponder subset:
//!
//! ```text
//! inst   := "inst" ("auth+" | "auth-" | "oblig") ident "{" clause+ "}"
//! clause := ("subject" | "target" | "action" | "when") tokenseq ";"
//! ```
//!
//! `subject` and `action` are mandatory; each clause appears at most once.
//! A `when` clause holds comma-separated `pred(arg, ...)` conditions.

use std::collections::BTreeSet;

use super::lexer::{tokenize, LexConfig, Token, TokenStream};
use super::{print_args, Condition, EntityRef, Modality, ParseError, PolicyRule, PolicySet, SourceLang};

const LEX: LexConfig = LexConfig {
    line_comment: "//",
    punct: "{};(),+-",
    ident_start: |c| c.is_alphabetic() || c == '_' || c == '/',
    ident_continue: |c| c.is_alphanumeric() || c == '_' || c == '/',
};

pub fn parse(text: &str, domain_id: &str) -> Result<PolicySet, ParseError> {
    let mut ts = TokenStream::new(tokenize(text, &LEX)?);
    let mut set = PolicySet::new(domain_id, SourceLang::Ponder);
    let mut names = BTreeSet::new();
    while !ts.at_eof() {
        let (rule, name_tok) = instance(&mut ts, domain_id)?;
        if !names.insert(rule.id.clone()) {
            return Err(name_tok.error(format!("duplicate policy name `{}`", rule.id)));
        }
        set.rules.push(rule);
    }
    Ok(set)
}

fn modality(ts: &mut TokenStream) -> Result<(Modality, String), ParseError> {
    let tok = ts.peek().clone();
    if tok.is_keyword("oblig") {
        ts.next();
        return Ok((Modality::OblPos, "oblig".into()));
    }
    if tok.is_keyword("auth") {
        let sign = ts.peek_at(1).clone();
        let adjacent = sign.line == tok.line && sign.col == tok.col + tok.text.chars().count();
        if adjacent && (sign.is_punct('+') || sign.is_punct('-')) {
            ts.next();
            ts.next();
            let m = if sign.is_punct('+') { Modality::AuthPos } else { Modality::AuthNeg };
            return Ok((m, format!("auth{}", sign.text)));
        }
    }
    Err(tok.error(format!("expected `auth+`, `auth-` or `oblig`, found {}", tok.describe())))
}

fn instance(ts: &mut TokenStream, domain_id: &str) -> Result<(PolicyRule, Token), ParseError> {
    let head = ts.peek();
    if !head.is_keyword("inst") {
        return Err(head.error(format!("expected `inst`, found {}", head.describe())));
    }
    ts.next();
    let (modality, label) = modality(ts)?;
    let name = ts.expect_ident("policy name")?;
    ts.expect_punct('{', &format!("to open policy `{}`", name.text))?;

    let mut subject: Option<String> = None;
    let mut target: Option<String> = None;
    let mut action: Option<String> = None;
    let mut when: Option<Vec<(String, Vec<String>)>> = None;

    while !ts.peek().is_punct('}') {
        let kw = ts.peek().clone();
        if !kw.is_ident() {
            return Err(kw.error(format!("unbalanced brackets: expected a clause or `}}`, found {}", kw.describe())));
        }
        let duplicate = |present: bool| -> Result<(), ParseError> {
            if present {
                Err(kw.error(format!("duplicate `{}` clause in policy `{}`", kw.text, name.text)))
            } else {
                Ok(())
            }
        };
        match kw.text.as_str() {
            "subject" => {
                duplicate(subject.is_some())?;
                ts.next();
                subject = Some(ts.expect_ident("subject name")?.text);
            }
            "target" => {
                duplicate(target.is_some())?;
                ts.next();
                target = Some(ts.expect_ident("target name")?.text);
            }
            "action" => {
                duplicate(action.is_some())?;
                ts.next();
                action = Some(ts.expect_ident("action name")?.text);
            }
            "when" => {
                duplicate(when.is_some())?;
                ts.next();
                when = Some(conditions(ts)?);
            }
            other => return Err(kw.error(format!("unknown clause `{other}`"))),
        }
        ts.expect_punct(';', &format!("after `{}` clause", kw.text))?;
    }
    let close = ts.next();
    let subject = subject.ok_or_else(|| close.error(format!("missing mandatory `subject` clause in policy `{}`", name.text)))?;
    let action = action.ok_or_else(|| close.error(format!("missing mandatory `action` clause in policy `{}`", name.text)))?;

    let conditions = when
        .unwrap_or_default()
        .into_iter()
        .map(|(predicate, args)| Condition {
            predicate,
            args: args.iter().map(|a| EntityRef::classify(a, &subject)).collect(),
        })
        .collect();
    let rule = PolicyRule {
        id: name.text.clone(),
        domain_id: domain_id.to_string(),
        source_lang: SourceLang::Ponder,
        modality,
        deontic_label: label,
        subject: EntityRef::classify(&subject, &subject),
        action,
        target: target.map(EntityRef::named),
        conditions,
    };
    Ok((rule, name))
}

fn conditions(ts: &mut TokenStream) -> Result<Vec<(String, Vec<String>)>, ParseError> {
    let mut out = Vec::new();
    loop {
        let pred = ts.expect_ident("condition predicate")?;
        ts.expect_punct('(', &format!("after predicate `{}`", pred.text))?;
        let mut args = Vec::new();
        loop {
            args.push(ts.expect_ident("condition argument")?.text);
            if ts.peek().is_punct(',') {
                ts.next();
            } else {
                break;
            }
        }
        ts.expect_punct(')', &format!("to close `{}`", pred.text))?;
        out.push((pred.text, args));
        if ts.peek().is_punct(',') {
            ts.next();
        } else {
            return Ok(out);
        }
    }
}

fn keyword(rule: &PolicyRule) -> &str {
    match rule.deontic_label.as_str() {
        l @ ("auth+" | "auth-" | "oblig") => l,
        _ => match rule.modality {
            Modality::AuthPos => "auth+",
            Modality::AuthNeg => "auth-",
            Modality::OblPos => "oblig",
            Modality::OblNeg | Modality::Unknown => rule.deontic_label.as_str(),
        },
    }
}

/// One `inst` per line.
pub fn print(set: &PolicySet) -> String {
    let mut out = String::new();
    for rule in &set.rules {
        out.push_str(&format!("inst {} {} {{ subject {};", keyword(rule), rule.id, rule.subject.name));
        if let Some(t) = &rule.target {
            out.push_str(&format!(" target {};", t.name));
        }
        out.push_str(&format!(" action {};", rule.action));
        if !rule.conditions.is_empty() {
            let conds: Vec<String> = rule
                .conditions
                .iter()
                .map(|c| format!("{}({})", c.predicate, print_args(&c.args)))
                .collect();
            out.push_str(&format!(" when {};", conds.join(", ")));
        }
        out.push_str(" }\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positive_authorization() {
        let set = parse("inst auth+ p1 { subject S; target Printers; action usePrintingService; }", "A").unwrap();
        let r = &set.rules[0];
        assert_eq!(r.id, "p1");
        assert_eq!(r.modality, Modality::AuthPos);
        assert_eq!(r.deontic_label, "auth+");
        assert_eq!(r.action, "usePrintingService");
        assert_eq!(r.target, Some(EntityRef::named("Printers")));
        assert_eq!(r.subject, EntityRef::variable("S"));
    }

    #[test]
    fn negative_authorization_and_obligation() {
        let set = parse(
            "inst auth- p2 { subject S; target Printers; action usePrintingService; }\n// comment\ninst oblig o1 { action audit; subject /staff/admins; }",
            "A",
        )
        .unwrap();
        assert_eq!(set.rules[0].modality, Modality::AuthNeg);
        assert_eq!(set.rules[1].modality, Modality::OblPos);
        assert_eq!(set.rules[1].subject, EntityRef::named("/staff/admins"));
    }

    #[test]
    fn missing_action() {
        let err = parse("inst auth+ p3 { subject S; }", "A").unwrap_err();
        assert!(err.message.contains("missing mandatory `action`"), "{}", err.message);
        assert_eq!(err.token, "}");
    }

    #[test]
    fn missing_subject() {
        let err = parse("inst auth+ p3 { action a; }", "A").unwrap_err();
        assert!(err.message.contains("`subject`"));
    }

    #[test]
    fn duplicate_clause() {
        let err = parse("inst auth+ p { subject S; action a; action b; }", "A").unwrap_err();
        assert!(err.message.contains("duplicate `action`"), "{}", err.message);
        assert_eq!((err.line, err.column), (1, 37));
    }

    #[test]
    fn duplicate_policy_name() {
        let err = parse("inst auth+ p { subject S; action a; }\ninst auth- p { subject S; action a; }", "A").unwrap_err();
        assert!(err.message.contains("duplicate policy name"));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn detached_sign_rejected() {
        assert!(parse("inst auth + p { subject S; action a; }", "A").is_err());
    }

    #[test]
    fn when_conditions() {
        let set = parse("inst auth+ p { subject Q; action use; when member(Q, ITDepartment), onShift(Q); }", "B").unwrap();
        let c = &set.rules[0].conditions;
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].args, vec![EntityRef::variable("Q"), EntityRef::named("ITDepartment")]);
        assert_eq!(c[1].predicate, "onShift");
    }

    #[test]
    fn unclosed_block() {
        let err = parse("inst auth+ p { subject S; action a;", "A").unwrap_err();
        assert!(err.message.contains("unbalanced"), "{}", err.message);
    }

    #[test]
    fn print_round_trip() {
        let src = "inst auth+ p1 {\n  subject S;\n  action usePrintingService;\n  target Printers;\n  when member(S, ITDepartment);\n}\n";
        let set = parse(src, "A").unwrap();
        let printed = print(&set);
        assert_eq!(
            printed,
            "inst auth+ p1 { subject S; target Printers; action usePrintingService; when member(S, ITDepartment); }\n"
        );
        assert_eq!(parse(&printed, "A").unwrap(), set);
    }
}
