//! Text and JSON renderings of verdicts and compatibility reports.

use acsan_core::analysis::{CompatReport, Verdict};
use acsan_core::fixpoint::DerivationTree;
use acsan_core::Scenario;
use serde_json::{json, Value};

fn tree_json(t: &DerivationTree) -> Value {
    json!({
        "fact": t.root.to_string(),
        "rule": t.justification.label(),
        "children": t.children.iter().map(tree_json).collect::<Vec<_>>(),
    })
}

/// One tree per conjunct; several conjuncts hang under a `query` node.
pub fn derivation_json(sc: &Scenario, v: &Verdict) -> Value {
    match v.derivations.as_slice() {
        [] => Value::Null,
        [one] => tree_json(one),
        many => json!({
            "fact": sc.query.to_string(),
            "rule": "query",
            "children": many.iter().map(tree_json).collect::<Vec<_>>(),
        }),
    }
}

pub fn verdict_json(sc: &Scenario, v: &Verdict) -> Value {
    json!({
        "scenario": sc.name,
        "mode": v.mode.name(),
        "result": if v.reachable { "reachable" } else { "unreachable" },
        "layers": v.witness.iter().map(|s| json!({
            "events": s.events,
            "injected_uknows": s.injected.iter().map(|a| a.to_string()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
        "derivation": derivation_json(sc, v),
        "stats": {
            "fixpoint_calls": v.stats.fixpoint_calls,
            "sequences_explored": v.stats.sequences_explored,
        },
    })
}

pub fn verdict_text(sc: &Scenario, v: &Verdict) -> String {
    let mut out = format!(
        "{}: {} ({})\n",
        sc.name,
        if v.reachable { "reachable" } else { "unreachable" },
        v.mode
    );
    out.push_str(&format!("  query: {}\n", sc.query));
    for (i, step) in v.witness.iter().enumerate() {
        out.push_str(&format!("  step {}: {}\n", i + 1, step.events.join(", ")));
        if !step.injected.is_empty() {
            out.push_str(&format!("    inject {}\n", step.injected));
        }
    }
    if let Some(k) = v.satisfied_at {
        out.push_str(&format!("  query holds after step {k}\n"));
    }
    out.push_str(&format!(
        "  fixpoint calls: {}, sequences explored: {}",
        v.stats.fixpoint_calls, v.stats.sequences_explored
    ));
    out
}

pub fn explain_text(sc: &Scenario, v: &Verdict) -> String {
    let mut out = verdict_text(sc, v);
    for t in &v.derivations {
        out.push_str("\n\n");
        out.push_str(t.to_string().trim_end());
    }
    out
}

pub fn compat_lines(r: &CompatReport) -> Vec<String> {
    r.comp1
        .iter()
        .map(|v| format!("COMP1: {v}"))
        .chain(r.comp2.iter().map(|v| format!("COMP2: {v}")))
        .collect()
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn compat_text(sc: &Scenario, r: &CompatReport) -> String {
    let mut out = format!("{}\n", sc.name);
    out.push_str(&format!("  C1 pass: {} principals declared\n", sc.principals.len()));
    out.push_str(&format!("  C2 pass: {} policies well-formed\n", sc.user_rules().len()));
    out.push_str(&format!("  COMP1 {}\n", pass(r.comp1_holds())));
    for v in &r.comp1 {
        out.push_str(&format!("    {v}\n"));
    }
    out.push_str(&format!("  COMP2 {}", pass(r.comp2_holds())));
    for v in &r.comp2 {
        out.push_str(&format!("\n    {v}"));
    }
    out
}

pub fn compat_json(sc: &Scenario, r: &CompatReport) -> Value {
    json!({
        "scenario": sc.name,
        "c1": { "pass": true, "principals": sc.principals.len() },
        "c2": { "pass": true, "policies": sc.user_rules().len() },
        "comp1": {
            "pass": r.comp1_holds(),
            "violations": r.comp1.iter().map(|v| json!({
                "by": v.by,
                "event": v.event,
                "step": v.step,
                "enabled_before": v.enabled_before,
            })).collect::<Vec<_>>(),
        },
        "comp2": {
            "pass": r.comp2_holds(),
            "violations": r.comp2.iter().map(|v| json!({
                "event": v.event,
                "missing": v.missing.to_string(),
            })).collect::<Vec<_>>(),
        },
    })
}
