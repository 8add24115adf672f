use std::fmt::Write;

use crate::policy::PolicyRule;
use crate::scenario::Scenario;

fn list<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn rule(r: &PolicyRule) -> String {
    let mut s = format!("policy {}: {} <- ", r.name, r.head);
    if r.body.is_empty() {
        s.push_str("true");
    } else {
        s.push_str(&list(&r.body));
    }
    if !r.constraint.is_true() {
        write!(s, " | {}", r.constraint).unwrap();
    }
    s.push(';');
    s
}

/// Renders a scenario in the concrete syntax accepted by the parser.
pub fn pretty(sc: &Scenario) -> String {
    let mut out = String::new();
    writeln!(out, "scenario \"{}\" {{", sc.name).unwrap();
    if !sc.principals.is_empty() {
        writeln!(out, "  principals {};", list(&sc.principals)).unwrap();
    }
    if !sc.attributes.is_empty() {
        writeln!(out, "  attributes {};", list(&sc.attributes)).unwrap();
    }
    let rules = sc.user_rules();
    if !rules.is_empty() {
        out.push('\n');
    }
    for r in rules {
        writeln!(out, "  {}", rule(r)).unwrap();
    }
    if !sc.events().is_empty() {
        out.push('\n');
    }
    for e in sc.events() {
        writeln!(out, "  event {};", e).unwrap();
    }
    let rel = &sc.causality;
    for &(a, b) in rel.edges() {
        writeln!(out, "  order {} < {};", rel.events()[a].name, rel.events()[b].name).unwrap();
    }
    for h in &sc.hints {
        let args = h.fact.args();
        writeln!(out, "  uknows {} : {}, {};", h.event, args[0], args[1]).unwrap();
    }
    writeln!(out, "\n  query {};", sc.query).unwrap();
    out.push_str("}\n");
    out
}
