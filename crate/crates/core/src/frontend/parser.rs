//! Recursive-descent parser for scenario files, followed by elaboration
//! into checked terms, rules, events and orders.

use std::collections::BTreeMap;

use super::diagnostics::{Code, Diagnostic, Pos, ScenarioSource};
use super::lexer::{tokenize, Tok, Token};
use crate::policy::{
    builtin_rules, validate_rule, Atom, Constraint, PolicyRule, PolicySet, Predicate, RuleViolation,
    BUILTIN_NAMES,
};
use crate::scenario::{CausalityRelation, Scenario, ScenarioError, UknowsHint};
use crate::terms::{Constructor, Sort, Term};
use crate::transition::{Event, Query};

#[derive(Debug, Clone)]
enum RTerm {
    Name(String, Pos),
    App(String, Vec<RTerm>, Pos),
}

impl RTerm {
    fn pos(&self) -> Pos {
        match self {
            RTerm::Name(_, p) | RTerm::App(_, _, p) => *p,
        }
    }
}

#[derive(Debug, Clone)]
struct RAtom {
    pred: String,
    args: Vec<RTerm>,
    pos: Pos,
}

#[derive(Debug, Clone)]
enum RConstraint {
    True,
    Eq(RTerm, RTerm, Pos),
    Prim(RTerm),
    Not(Box<RConstraint>),
    And(Box<RConstraint>, Box<RConstraint>),
    Or(Box<RConstraint>, Box<RConstraint>),
}

type Name = (String, Pos);

#[derive(Debug, Clone)]
enum Decl {
    Principals(Vec<Name>),
    Attributes(Vec<Name>),
    Policy {
        name: Name,
        head: RAtom,
        body: Vec<RAtom>,
        constraint: RConstraint,
    },
    Event {
        name: Name,
        from: Name,
        to: Name,
        payload: RTerm,
    },
    Order(Name, Name),
    Uknows {
        event: Name,
        principal: Name,
        infon: RTerm,
    },
    Query(Vec<RAtom>, Pos),
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic::error(
            Code::Syntax,
            self.pos(),
            format!("expected {wanted}, found {}", self.peek().describe()),
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<Pos> {
        if *self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<Pos> {
        if self.is_kw(kw) {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().pos)),
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn scenario(&mut self) -> PResult<(String, Vec<Decl>)> {
        self.keyword("scenario")?;
        let name = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                s
            }
            _ => return Err(self.unexpected("a quoted scenario name")),
        };
        self.expect(Tok::LBrace)?;
        let mut decls = Vec::new();
        while *self.peek() != Tok::RBrace {
            decls.push(self.decl()?);
        }
        self.expect(Tok::RBrace)?;
        if *self.peek() != Tok::Eof {
            return Err(self.unexpected("end of input"));
        }
        Ok((name, decls))
    }

    fn idlist(&mut self) -> PResult<Vec<Name>> {
        let mut out = vec![self.ident()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn decl(&mut self) -> PResult<Decl> {
        let (kw, pos) = self.ident()?;
        let d = match kw.as_str() {
            "principals" => Decl::Principals(self.idlist()?),
            "attributes" => Decl::Attributes(self.idlist()?),
            "policy" => {
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let head = self.atom()?;
                self.expect(Tok::LeftArrow)?;
                let (body, constraint) = self.body()?;
                Decl::Policy {
                    name,
                    head,
                    body,
                    constraint,
                }
            }
            "event" => {
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                self.keyword("send")?;
                let from = self.ident()?;
                self.expect(Tok::RightArrow)?;
                let to = self.ident()?;
                self.expect(Tok::Colon)?;
                let payload = self.term()?;
                Decl::Event {
                    name,
                    from,
                    to,
                    payload,
                }
            }
            "order" => {
                let a = self.ident()?;
                self.expect(Tok::Less)?;
                let b = self.ident()?;
                Decl::Order(a, b)
            }
            "uknows" => {
                let event = self.ident()?;
                self.expect(Tok::Colon)?;
                let principal = self.ident()?;
                self.expect(Tok::Comma)?;
                let infon = self.term()?;
                Decl::Uknows {
                    event,
                    principal,
                    infon,
                }
            }
            "query" => Decl::Query(self.atoms()?, pos),
            _ => {
                return Err(Diagnostic::error(
                    Code::Syntax,
                    pos,
                    format!("expected a declaration, found `{kw}`"),
                ))
            }
        };
        self.expect(Tok::Semi)?;
        Ok(d)
    }

    fn body(&mut self) -> PResult<(Vec<RAtom>, RConstraint)> {
        let body = if self.is_kw("true") {
            self.bump();
            Vec::new()
        } else {
            self.atoms()?
        };
        let constraint = if *self.peek() == Tok::Bar {
            self.bump();
            self.constraint()?
        } else {
            RConstraint::True
        };
        Ok((body, constraint))
    }

    fn atoms(&mut self) -> PResult<Vec<RAtom>> {
        let mut out = vec![self.atom()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            out.push(self.atom()?);
        }
        Ok(out)
    }

    fn atom(&mut self) -> PResult<RAtom> {
        let (pred, pos) = self.ident()?;
        self.expect(Tok::LParen)?;
        let args = self.args()?;
        Ok(RAtom { pred, args, pos })
    }

    fn args(&mut self) -> PResult<Vec<RTerm>> {
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn term(&mut self) -> PResult<RTerm> {
        let (name, pos) = self.ident()?;
        if *self.peek() == Tok::LParen {
            self.bump();
            Ok(RTerm::App(name, self.args()?, pos))
        } else {
            Ok(RTerm::Name(name, pos))
        }
    }

    // not > and > or, both binary operators left-associative
    fn constraint(&mut self) -> PResult<RConstraint> {
        let mut lhs = self.conjunction()?;
        while self.is_kw("or") {
            self.bump();
            lhs = RConstraint::Or(Box::new(lhs), Box::new(self.conjunction()?));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<RConstraint> {
        let mut lhs = self.negation()?;
        while self.is_kw("and") {
            self.bump();
            lhs = RConstraint::And(Box::new(lhs), Box::new(self.negation()?));
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> PResult<RConstraint> {
        if self.is_kw("not") {
            self.bump();
            return Ok(RConstraint::Not(Box::new(self.negation()?)));
        }
        if *self.peek() == Tok::LParen {
            self.bump();
            let c = self.constraint()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        if self.is_kw("true") {
            self.bump();
            return Ok(RConstraint::True);
        }
        if self.is_kw("prim") && self.toks[self.at + 1].tok == Tok::LParen {
            self.bump();
            self.bump();
            let t = self.term()?;
            self.expect(Tok::RParen)?;
            return Ok(RConstraint::Prim(t));
        }
        let lhs = self.term()?;
        let pos = self.expect(Tok::Equals)?;
        let rhs = self.term()?;
        Ok(RConstraint::Eq(lhs, rhs, pos))
    }
}

/// Declared constants, used to resolve identifiers.
struct Env {
    consts: BTreeMap<String, Sort>,
}

/// Variable sorts of one policy, or `None` where variables are not allowed.
type Vars = Option<BTreeMap<String, Sort>>;

fn is_lower(name: &str) -> bool {
    name.starts_with(|c: char| c.is_ascii_lowercase())
}

impl Env {
    fn sort_hint(&self, t: &RTerm, vars: &Vars) -> Option<Sort> {
        match t {
            RTerm::Name(n, _) => self
                .consts
                .get(n)
                .copied()
                .or_else(|| vars.as_ref().and_then(|v| v.get(n).copied())),
            RTerm::App(c, _, _) => Constructor::from_name(c).map(|c| c.result_sort()),
        }
    }

    fn term(&self, t: &RTerm, expected: Option<Sort>, vars: &mut Vars) -> PResult<Term> {
        let term = match t {
            RTerm::Name(n, pos) => {
                if let Some(&sort) = self.consts.get(n) {
                    Term::constant(n.as_str(), sort)
                } else if let (Some(vars), true) = (vars.as_mut(), is_lower(n)) {
                    let sort = match (vars.get(n), expected) {
                        (Some(&s), _) => s,
                        (None, Some(s)) => {
                            vars.insert(n.clone(), s);
                            s
                        }
                        (None, None) => {
                            return Err(Diagnostic::error(
                                Code::Sort,
                                *pos,
                                format!("cannot infer the sort of variable `{n}`"),
                            ))
                        }
                    };
                    Term::var(n.as_str(), sort)
                } else {
                    return Err(Diagnostic::error(
                        Code::Undeclared,
                        *pos,
                        format!("`{n}` is not a declared principal or attribute"),
                    ));
                }
            }
            RTerm::App(c, args, pos) => {
                let Some(ctor) = Constructor::from_name(c) else {
                    return Err(Diagnostic::error(
                        Code::Undeclared,
                        *pos,
                        format!("unknown constructor `{c}`"),
                    ));
                };
                let (sig, _) = ctor.signature();
                if args.len() != sig.len() {
                    return Err(Diagnostic::error(
                        Code::Arity,
                        *pos,
                        format!("{c} takes {} argument(s), got {}", sig.len(), args.len()),
                    ));
                }
                let args = args
                    .iter()
                    .zip(sig.iter())
                    .map(|(a, &s)| self.term(a, Some(s), vars))
                    .collect::<PResult<Vec<_>>>()?;
                Term::app(ctor, args).map_err(|e| Diagnostic::error(Code::Sort, *pos, e.to_string()))?
            }
        };
        if let Some(s) = expected {
            if term.sort() != s {
                return Err(Diagnostic::error(
                    Code::Sort,
                    t.pos(),
                    format!("expected {s}, found {} `{term}`", term.sort()),
                ));
            }
        }
        Ok(term)
    }

    fn atom(&self, a: &RAtom, vars: &mut Vars) -> PResult<Atom> {
        let Some(pred) = Predicate::from_name(&a.pred) else {
            return Err(Diagnostic::error(
                Code::Syntax,
                a.pos,
                format!("unknown predicate `{}`", a.pred),
            ));
        };
        let sig = pred.signature();
        if a.args.len() != sig.len() {
            return Err(Diagnostic::error(
                Code::Arity,
                a.pos,
                format!("{} takes {} argument(s), got {}", a.pred, sig.len(), a.args.len()),
            ));
        }
        let args = a
            .args
            .iter()
            .zip(sig.iter())
            .map(|(t, &s)| self.term(t, Some(s), vars))
            .collect::<PResult<Vec<_>>>()?;
        Atom::new(pred, args).map_err(|e| Diagnostic::error(Code::Sort, a.pos, e.to_string()))
    }

    fn constraint(&self, c: &RConstraint, vars: &mut Vars) -> PResult<Constraint> {
        Ok(match c {
            RConstraint::True => Constraint::True,
            RConstraint::Eq(a, b, pos) => {
                let hint = self.sort_hint(a, vars).or_else(|| self.sort_hint(b, vars));
                let a = self.term(a, hint, vars)?;
                let b = self.term(b, hint, vars)?;
                Constraint::eq(a, b).map_err(|e| Diagnostic::error(Code::Sort, *pos, e.to_string()))?
            }
            RConstraint::Prim(t) => Constraint::Prim(self.term(t, Some(Sort::Attribute), vars)?),
            RConstraint::Not(c) => Constraint::Not(Box::new(self.constraint(c, vars)?)),
            RConstraint::And(a, b) => Constraint::And(
                Box::new(self.constraint(a, vars)?),
                Box::new(self.constraint(b, vars)?),
            ),
            RConstraint::Or(a, b) => Constraint::Or(
                Box::new(self.constraint(a, vars)?),
                Box::new(self.constraint(b, vars)?),
            ),
        })
    }

    fn principal(&self, (n, pos): &Name) -> PResult<Term> {
        self.term(&RTerm::Name(n.clone(), *pos), Some(Sort::Principal), &mut None)
    }

    fn query(&self, atoms: &[RAtom]) -> Result<Query, Vec<Diagnostic>> {
        let mut diags = Vec::new();
        let mut conjuncts = Vec::new();
        for a in atoms {
            match self.atom(a, &mut None) {
                Ok(atom) if atom.pred() == Predicate::Knows => conjuncts.push(atom),
                Ok(_) => diags.push(Diagnostic::error(
                    Code::Syntax,
                    a.pos,
                    "queries are conjunctions of knows atoms",
                )),
                Err(d) => diags.push(d),
            }
        }
        if diags.is_empty() {
            Ok(Query::new(conjuncts))
        } else {
            Err(diags)
        }
    }
}

fn parse_tokens(text: &str) -> Result<Parser, Vec<Diagnostic>> {
    Ok(Parser {
        toks: tokenize(text).map_err(|d| vec![d])?,
        at: 0,
    })
}

/// Parses and validates a scenario file.
pub fn parse_scenario(src: &ScenarioSource) -> Result<Scenario, Vec<Diagnostic>> {
    let mut p = parse_tokens(&src.text)?;
    let (name, decls) = p.scenario().map_err(|d| vec![d])?;
    elaborate(name, &decls)
}

/// Parses a query against the constants of `sc`, e.g. for a command-line
/// override.
pub fn parse_query(text: &str, sc: &Scenario) -> Result<Query, Vec<Diagnostic>> {
    let mut p = parse_tokens(text)?;
    let atoms = p.atoms().map_err(|d| vec![d])?;
    if *p.peek() != Tok::Eof {
        return Err(vec![p.unexpected("end of query")]);
    }
    let consts = sc
        .principals
        .iter()
        .chain(&sc.attributes)
        .map(|t| (t.to_string(), t.sort()))
        .collect();
    Env { consts }.query(&atoms)
}

fn elaborate(name: String, decls: &[Decl]) -> Result<Scenario, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut consts = BTreeMap::new();
    let mut principals = Vec::new();
    let mut attributes = Vec::new();
    for d in decls {
        let (names, sort) = match d {
            Decl::Principals(ns) => (ns, Sort::Principal),
            Decl::Attributes(ns) => (ns, Sort::Attribute),
            _ => continue,
        };
        for (n, pos) in names {
            if consts.insert(n.clone(), sort).is_some() {
                diags.push(Diagnostic::error(
                    Code::Duplicate,
                    *pos,
                    format!("`{n}` is declared twice"),
                ));
                continue;
            }
            let t = Term::constant(n.as_str(), sort);
            if sort == Sort::Principal {
                principals.push(t);
            } else {
                attributes.push(t);
            }
        }
    }
    let env = Env { consts };

    let builtins = builtin_rules();
    let mut rules: Vec<PolicyRule> = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    let mut hints = Vec::new();
    let mut query: Option<Query> = None;
    for d in decls {
        match d {
            Decl::Policy {
                name: (rname, pos),
                head,
                body,
                constraint,
            } => {
                if BUILTIN_NAMES.contains(&rname.as_str()) {
                    diags.push(Diagnostic::error(
                        Code::Builtin,
                        *pos,
                        format!("`{rname}` is a built-in rule and is always present"),
                    ));
                    continue;
                }
                if rules.iter().any(|r| &r.name == rname) {
                    diags.push(Diagnostic::error(
                        Code::Duplicate,
                        *pos,
                        format!("policy `{rname}` is declared twice"),
                    ));
                    continue;
                }
                let mut vars: Vars = Some(BTreeMap::new());
                let elab = (|| -> PResult<PolicyRule> {
                    let head = env.atom(head, &mut vars)?;
                    let body = body
                        .iter()
                        .map(|a| env.atom(a, &mut vars))
                        .collect::<PResult<Vec<_>>>()?;
                    let c = env.constraint(constraint, &mut vars)?;
                    Ok(PolicyRule::new(rname.as_str(), head, body, c))
                })();
                let rule = match elab {
                    Ok(r) => r,
                    Err(d) => {
                        diags.push(d);
                        continue;
                    }
                };
                if let Some(b) = builtins.iter().find(|b| b.alpha_equivalent(&rule)) {
                    diags.push(Diagnostic::error(
                        Code::Builtin,
                        *pos,
                        format!("policy `{rname}` restates built-in rule `{}`", b.name),
                    ));
                    continue;
                }
                let report = validate_rule(&rule);
                if !report.is_valid() {
                    for v in &report.violations {
                        let why = match v {
                            RuleViolation::HeadPredicate(p) => {
                                format!("policy heads must be knows atoms, found {p}")
                            }
                            RuleViolation::UnboundHeadVariable(v) => {
                                format!("head variable `{}` does not occur in the body", v.name())
                            }
                            RuleViolation::NonPrincipalBodyVariable(v) => format!(
                                "body-only variable `{}` must be a principal",
                                v.name()
                            ),
                        };
                        diags.push(Diagnostic::error(Code::C2, *pos, format!("policy `{rname}`: {why}")));
                    }
                    continue;
                }
                rules.push(rule);
            }
            Decl::Event {
                name: (ename, pos),
                from,
                to,
                payload,
            } => {
                if events.iter().any(|e| &e.name == ename) {
                    diags.push(Diagnostic::error(
                        Code::Duplicate,
                        *pos,
                        format!("event `{ename}` is declared twice"),
                    ));
                    continue;
                }
                let ev = (|| -> PResult<Event> {
                    let s = env.principal(from)?;
                    let r = env.principal(to)?;
                    let x = env.term(payload, Some(Sort::Infon), &mut None)?;
                    Event::new(ename.as_str(), s, x, r)
                        .map_err(|e| Diagnostic::error(Code::Sort, *pos, e.to_string()))
                })();
                match ev {
                    Ok(e) => events.push(e),
                    Err(d) => diags.push(d),
                }
            }
            Decl::Query(atoms, pos) => {
                if query.is_some() {
                    diags.push(Diagnostic::error(Code::Duplicate, *pos, "only one query is allowed"));
                    continue;
                }
                match env.query(atoms) {
                    Ok(q) => query = Some(q),
                    Err(ds) => diags.extend(ds),
                }
            }
            _ => {}
        }
    }

    // Orders and hints refer to events declared anywhere in the file.
    let mut edges = Vec::new();
    let mut edge_pos = Vec::new();
    let find = |(n, pos): &Name| {
        events.iter().position(|e| &e.name == n).ok_or_else(|| {
            Diagnostic::error(Code::Undeclared, *pos, format!("unknown event `{n}`"))
        })
    };
    for d in decls {
        match d {
            Decl::Order(a, b) => {
                match (find(a), find(b)) {
                    (Ok(i), Ok(j)) => {
                        edges.push((i, j));
                        edge_pos.push(a.1);
                    }
                    (ra, rb) => diags.extend(ra.err().into_iter().chain(rb.err())),
                }
            }
            Decl::Uknows {
                event,
                principal,
                infon,
            } => {
                let hint = (|| -> PResult<UknowsHint> {
                    find(event)?;
                    let p = env.principal(principal)?;
                    let x = env.term(infon, Some(Sort::Infon), &mut None)?;
                    let fact = Atom::uknows(p, x)
                        .map_err(|e| Diagnostic::error(Code::Sort, principal.1, e.to_string()))?;
                    Ok(UknowsHint {
                        event: event.0.clone(),
                        fact,
                    })
                })();
                match hint {
                    Ok(h) => hints.push(h),
                    Err(d) => diags.push(d),
                }
            }
            _ => {}
        }
    }

    if query.is_none() && diags.is_empty() {
        diags.push(Diagnostic::error(
            Code::Syntax,
            Pos { line: 1, col: 1 },
            "the scenario declares no query",
        ));
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    let names: Vec<String> = events.iter().map(|e| e.name.clone()).collect();
    let causality = CausalityRelation::new(events, edges.clone()).map_err(|e| {
        let (code, pos) = match &e {
            // Point at the declaration of the cycle's first edge.
            ScenarioError::CyclicOrder(cycle) => {
                let at = edges
                    .iter()
                    .position(|&(i, j)| names[i] == cycle[0] && names[j] == cycle[1])
                    .map(|k| edge_pos[k]);
                (Code::Cycle, at.unwrap_or_default())
            }
            ScenarioError::DuplicateEvent(_) => (Code::Duplicate, Pos::default()),
            _ => (Code::Undeclared, Pos::default()),
        };
        vec![Diagnostic::error(code, pos, e.to_string())]
    })?;
    let policies = PolicySet::new(rules).map_err(|e| {
        vec![Diagnostic::error(Code::Builtin, Pos { line: 1, col: 1 }, e.to_string())]
    })?;
    Ok(Scenario {
        name,
        principals,
        attributes,
        policies,
        causality,
        query: query.expect("checked above"),
        hints,
    })
}
