//! Frontend for the Prolog-style REI subset:
//!
//! ```text
//! clause  := "has" "(" var "," deontic ")" "."
//! deontic := ident "(" ident "," "[" [cond {"," cond}] "]" ")"
//! cond    := ident "(" arg {"," arg} ")"
//! ```
//!
//! `%` starts a line comment. The target is implicit in the action term.

use super::lexer::{tokenize, LexConfig, TokenStream};
use super::{
    map_deontic, print_args, Condition, DeonticTable, EntityRef, ParseError, PolicyRule, PolicySet,
    SourceLang,
};

const LEX: LexConfig = LexConfig {
    line_comment: "%",
    punct: "()[],.",
    ident_start: |c| c.is_alphabetic() || c == '_',
    ident_continue: |c| c.is_alphanumeric() || c == '_',
};

pub fn parse(text: &str, domain_id: &str) -> Result<PolicySet, ParseError> {
    parse_with(text, domain_id, &DeonticTable::default())
}

pub fn parse_with(text: &str, domain_id: &str, table: &DeonticTable) -> Result<PolicySet, ParseError> {
    let mut ts = TokenStream::new(tokenize(text, &LEX)?);
    let mut set = PolicySet::new(domain_id, SourceLang::Rei);
    while !ts.at_eof() {
        let id = format!("r{}", set.rules.len() + 1);
        set.rules.push(clause(&mut ts, id, domain_id, table)?);
    }
    Ok(set)
}

fn clause(ts: &mut TokenStream, id: String, domain_id: &str, table: &DeonticTable) -> Result<PolicyRule, ParseError> {
    let head = ts.peek();
    if !head.is_keyword("has") {
        return Err(head.error(format!("expected `has` at start of clause, found {}", head.describe())));
    }
    ts.next();
    ts.expect_punct('(', "after `has`")?;

    let subject = ts.peek().clone();
    if !subject.is_ident() || !subject.text.starts_with(|c: char| c.is_uppercase()) {
        return Err(subject.error(format!("expected subject variable, found {}", subject.describe())));
    }
    ts.next();
    ts.expect_punct(',', "after the subject variable")?;

    let deontic = ts.expect_ident("deontic operator")?;
    ts.expect_punct('(', &format!("to open the argument list of `{}`", deontic.text))?;
    let action = ts.peek().clone();
    if !action.is_ident() {
        return Err(action.error(format!("missing action in `{}`, found {}", deontic.text, action.describe())));
    }
    ts.next();
    ts.expect_punct(',', "after the action")?;
    ts.expect_punct('[', "to open the condition list")?;

    let mut conditions = Vec::new();
    if !ts.peek().is_punct(']') {
        loop {
            conditions.push(condition(ts, &subject.text)?);
            if ts.peek().is_punct(',') {
                ts.next();
            } else {
                break;
            }
        }
    }
    ts.expect_punct(']', "to close the condition list")?;
    ts.expect_punct(')', &format!("to close `{}`", deontic.text))?;
    ts.expect_punct(')', "to close `has`")?;
    ts.expect_punct('.', "at end of clause")?;

    Ok(PolicyRule {
        id,
        domain_id: domain_id.to_string(),
        source_lang: SourceLang::Rei,
        modality: map_deontic(&deontic.text, table),
        deontic_label: deontic.text,
        subject: EntityRef::variable(subject.text),
        action: action.text,
        target: None,
        conditions,
    })
}

fn condition(ts: &mut TokenStream, subject: &str) -> Result<Condition, ParseError> {
    let pred = ts.expect_ident("condition predicate")?;
    ts.expect_punct('(', &format!("after predicate `{}`", pred.text))?;
    let mut args = Vec::new();
    loop {
        let arg = ts.expect_ident("condition argument")?;
        args.push(EntityRef::classify(&arg.text, subject));
        if ts.peek().is_punct(',') {
            ts.next();
        } else {
            break;
        }
    }
    ts.expect_punct(')', &format!("to close `{}`", pred.text))?;
    Ok(Condition { predicate: pred.text, args })
}

/// One clause per line, single spaces after commas.
pub fn print(set: &PolicySet) -> String {
    let mut out = String::new();
    for rule in &set.rules {
        let conds: Vec<String> = rule
            .conditions
            .iter()
            .map(|c| format!("{}({})", c.predicate, print_args(&c.args)))
            .collect();
        out.push_str(&format!(
            "has({}, {}({}, [{}])).\n",
            rule.subject.name,
            rule.deontic_label,
            rule.action,
            conds.join(", ")
        ));
    }
    out
}
