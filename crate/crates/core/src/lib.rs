//! Reachability analysis for access-control scenarios built from
//! distributed-knowledge policies and message-passing events.

pub mod analysis;
pub mod cro;
pub mod fixpoint;
pub mod frontend;
pub mod gen;
pub mod policy;
pub mod scenario;
pub mod terms;
pub mod transition;

pub use analysis::{
    replay_witness,
    analyze_interleaving, analyze_partial_order, check_compat, AnalysisError, AnalysisOptions,
    CompatMode, CompatReport, Mode, Verdict,
};
pub use fixpoint::{constr_fp, DerivationTree, FactSet, FixpointError, Program, DEFAULT_BUDGET};
pub use frontend::{parse_query, parse_scenario, pretty, Diagnostic, ScenarioSource};
pub use policy::{Atom, Constraint, PolicyError, PolicyRule, PolicySet, Predicate};
pub use scenario::{CausalityRelation, Scenario, ScenarioError};
pub use terms::{Constructor, Sort, Substitution, Term, TermError, Variable};
pub use transition::{check_query, enabled, Acs, Event, Query, State, TransitionError, UknowsBatch};
