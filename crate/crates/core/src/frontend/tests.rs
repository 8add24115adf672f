use super::*;
use crate::cro;
use crate::policy::{Atom, Constraint};
use crate::terms::Term;

const CRO: &str = include_str!("../../../../examples/cro.acs");

fn parse(text: &str) -> Result<crate::Scenario, Vec<Diagnostic>> {
    parse_scenario(&ScenarioSource::new(text, "test.acs"))
}

fn first_error(text: &str) -> Diagnostic {
    parse(text).unwrap_err().into_iter().next().unwrap()
}

fn wrap(body: &str) -> String {
    format!(
        "scenario \"t\" {{\n  principals Ed, CA;\n  attributes ise;\n{body}\n  query knows(Ed, a2i(Ed, ise));\n}}\n"
    )
}

#[test]
fn cro_fixture_matches_the_programmatic_scenario() {
    let sc = parse(CRO).unwrap();
    assert_eq!(sc.principals.len(), 4);
    assert_eq!(sc.attributes.len(), 3);
    assert_eq!(sc.user_rules().len(), 4);
    assert_eq!(sc.events().len(), 6);
    assert_eq!(sc.causality.edges().len(), 3);
    assert_eq!(sc.query.conjuncts.len(), 1);
    assert_eq!(sc, cro::scenario());
}

#[test]
fn cro_round_trips() {
    let sc = parse(CRO).unwrap();
    let again = parse(&pretty(&sc)).unwrap();
    assert_eq!(sc, again);
}

#[test]
fn constraints_round_trip_with_precedence() {
    let src = wrap(
        "  policy R: knows(p, a2i(p, x)) <- knows(p, a2i(q, x)) | not x = ise and prim(x) or p = q;",
    );
    let sc = parse(&src).unwrap();
    let c = &sc.user_rules()[0].constraint;
    assert!(matches!(c, Constraint::Or(l, _) if matches!(**l, Constraint::And(..))));
    if let Constraint::Or(l, _) = c {
        if let Constraint::And(n, _) = &**l {
            assert!(matches!(**n, Constraint::Not(_)));
        }
    }
    assert_eq!(parse(&pretty(&sc)).unwrap(), sc);
}

#[test]
fn hints_round_trip() {
    let src = wrap("  event E: send CA -> Ed : a2i(Ed, ise);\n  uknows E : CA, a2i(Ed, ise);");
    let sc = parse(&src).unwrap();
    assert_eq!(sc.hints.len(), 1);
    assert_eq!(sc.hints_for("E")[0].to_string(), "uknows(CA, a2i(Ed, ise))");
    assert_eq!(parse(&pretty(&sc)).unwrap(), sc);
}

#[test]
fn undeclared_principal_has_a_location() {
    let d = first_error(&wrap("  event E: send Bob -> Ed : a2i(Ed, ise);"));
    assert_eq!(d.code, Code::Undeclared);
    assert_eq!(d.pos, Pos { line: 4, col: 17 });
    assert!(d.message.contains("Bob"));
    assert!(d.render("f.acs").starts_with("f.acs:4:17: error[E-UNDECLARED]"));
}

#[test]
fn builtin_rules_cannot_be_restated() {
    let named = first_error(&wrap("  policy trust: knows(p, a2i(p, ise)) <- knows(p, a2i(p, ise));"));
    assert_eq!(named.code, Code::Builtin);
    let copy = first_error(&wrap(
        "  policy T: knows(a, y) <- knows(a, s2i(b, said(y))), knows(a, a2i(b, tdOn(y)));",
    ));
    assert_eq!(copy.code, Code::Builtin);
    assert!(copy.message.contains("trust"));
}

#[test]
fn sort_errors() {
    assert_eq!(first_error(&wrap("  event E: send CA -> Ed : a2i(ise, Ed);")).code, Code::Sort);
    assert_eq!(first_error(&wrap("  event E: send CA -> ise : a2i(Ed, ise);")).code, Code::Sort);
    let mixed = first_error(&wrap("  policy R: knows(p, a2i(p, ise)) <- knows(p, p);"));
    assert_eq!(mixed.code, Code::Sort);
}

#[test]
fn arity_errors() {
    assert_eq!(first_error(&wrap("  event E: send CA -> Ed : a2i(Ed);")).code, Code::Arity);
    assert_eq!(
        first_error(&wrap("  policy R: knows(p) <- true;")).code,
        Code::Arity
    );
}

#[test]
fn c2_violations() {
    let head = first_error(&wrap("  policy R: uknows(p, a2i(p, ise)) <- knows(p, a2i(p, ise));"));
    assert_eq!(head.code, Code::C2);
    let body = first_error(&wrap("  policy R: knows(p, a2i(p, ise)) <- knows(p, x);"));
    assert_eq!(body.code, Code::C2);
    let unbound = first_error(&wrap("  policy R: knows(p, x) <- knows(p, a2i(p, ise));"));
    assert_eq!(unbound.code, Code::C2);
}

#[test]
fn cyclic_orders() {
    let d = first_error(&wrap(
        "  event A: send CA -> Ed : a2i(Ed, ise);\n  event B: send Ed -> CA : a2i(Ed, ise);\n  order A < B;\n  order B < A;",
    ));
    assert_eq!(d.code, Code::Cycle);
    assert!(d.message.contains("A < B < A"));
    assert_eq!(d.pos, Pos { line: 6, col: 9 });
}

#[test]
fn duplicates() {
    assert_eq!(first_error(&wrap("  principals Ed;")).code, Code::Duplicate);
    assert_eq!(
        first_error(&wrap(
            "  event E: send CA -> Ed : a2i(Ed, ise);\n  event E: send CA -> Ed : a2i(Ed, ise);"
        ))
        .code,
        Code::Duplicate
    );
    assert_eq!(
        first_error(&wrap("  query knows(Ed, a2i(Ed, ise));")).code,
        Code::Duplicate
    );
}

#[test]
fn lexical_and_syntax_errors() {
    assert_eq!(first_error(&wrap("  order A $ B;")).code, Code::Lex);
    let d = first_error(&wrap("  event E send CA -> Ed : a2i(Ed, ise);"));
    assert_eq!(d.code, Code::Syntax);
    assert_eq!(d.pos, Pos { line: 4, col: 11 });
    assert_eq!(first_error("scenario t {}").code, Code::Syntax);
    assert_eq!(first_error(&wrap("  event E: send CA -> Ed : a2i(Ed, ise);").replace("  query knows(Ed, a2i(Ed, ise));\n", "")).code, Code::Syntax);
}

#[test]
fn variables_only_in_policies() {
    let d = first_error(&wrap("  event E: send CA -> Ed : a2i(p, ise);"));
    assert_eq!(d.code, Code::Undeclared);
    let upper = first_error(&wrap("  policy R: knows(P, a2i(P, ise)) <- knows(P, a2i(P, ise));"));
    assert_eq!(upper.code, Code::Undeclared);
}

#[test]
fn unknown_event_in_order() {
    let d = first_error(&wrap("  event E: send CA -> Ed : a2i(Ed, ise);\n  order E < F;"));
    assert_eq!(d.code, Code::Undeclared);
    assert_eq!(d.pos.line, 5);
}

#[test]
fn query_override() {
    let sc = parse(CRO).unwrap();
    let q = parse_query("knows(CRep, a2i(Helen,cans))", &sc).unwrap();
    assert_eq!(
        q.conjuncts,
        vec![Atom::knows(
            Term::principal("CRep"),
            Term::a2i(Term::principal("Helen"), Term::attribute("cans")).unwrap()
        )
        .unwrap()]
    );
    assert_eq!(parse_query("knows(Bob, a2i(Ed, cans))", &sc).unwrap_err()[0].code, Code::Undeclared);
    assert_eq!(parse_query("uknows(CA, a2i(Ed, ise))", &sc).unwrap_err()[0].code, Code::Syntax);
}

#[test]
fn multiple_errors_are_reported() {
    let ds = parse(&wrap(
        "  event E: send Bob -> Ed : a2i(Ed, ise);\n  event F: send CA -> Eve : a2i(Ed, ise);",
    ))
    .unwrap_err();
    assert_eq!(ds.len(), 2);
}
