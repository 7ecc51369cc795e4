//! Oracles shared by the integration tests and the acceptance report.
//!
//! Each check returns `Ok(detail)` or `Err(reason)` so that the acceptance
//! target can print one line per criterion while ordinary tests assert.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vinculum_core::*;

pub const CORPUS: &str = include_str!("../../../../corpus/tour.hbt");

pub fn corpus() -> Document {
    parse_document(CORPUS).expect("corpus parses")
}

// ---------------------------------------------------------------------------
// Golden transcripts
// ---------------------------------------------------------------------------

/// One node of an expected proof tree, written with the names used in print.
pub struct Node {
    pub path: &'static [usize],
    pub locals: &'static [&'static str],
    pub assumptions: &'static [&'static str],
    pub target: &'static str,
    pub by: &'static str,
}

const fn node(
    path: &'static [usize],
    locals: &'static [&'static str],
    assumptions: &'static [&'static str],
    target: &'static str,
    by: &'static str,
) -> Node {
    Node { path, locals, assumptions, target, by }
}

pub const AND_COMM: &[Node] = &[
    node(&[], &["A", "B"], &[], "(A /\\ B) -> (B /\\ A)", "->I"),
    node(&[0], &["A", "B"], &["A /\\ B"], "B /\\ A", "/\\I"),
    node(&[0, 0], &["A", "B"], &["A /\\ B"], "B", "/\\E2"),
    node(&[0, 0, 0], &["A", "B"], &["A /\\ B"], "A /\\ B", "0"),
    node(&[0, 1], &["A", "B"], &["A /\\ B"], "A", "/\\E1"),
    node(&[0, 1, 0], &["A", "B"], &["A /\\ B"], "A /\\ B", "0"),
];

pub const DE_MORGAN: &[Node] = &[
    node(&[], &["P"], &["∃ (x. ¬ (P x))"], "¬ (∀ (a. P a))", "¬I"),
    node(&[0], &["P", "F"], &["∃ (x. ¬ (P x))", "∀ (a. P a)"], "F", "∃E^0"),
    node(&[0, 0], &["P", "F", "x"], &["∃ (x. ¬ (P x))", "∀ (a. P a)", "¬ (P x)"], "F", "¬E^2"),
    node(&[0, 0, 0], &["P", "F", "x"], &["∃ (x. ¬ (P x))", "∀ (a. P a)", "¬ (P x)"], "P x", "∀E^1"),
];

pub const PRED: &[Node] = &[
    node(&[], &["n"], &["n ℕ", "¬ (n = 0)"], "∃ (k. n = (S k))", "cases(_ℕ)^0"),
    node(&[0], &["n"], &["n ℕ", "¬ (n = 0)", "n = 0"], "∃ (k. n = (S k))", "¬E^1"),
    node(&[0, 0], &["n"], &["n ℕ", "¬ (n = 0)", "n = 0"], "n = 0", "2"),
    node(&[1], &["n", "k"], &["n ℕ", "¬ (n = 0)", "n = (S k)", "k ℕ"], "∃ (k. n = (S k))", "∃I"),
    node(&[1, 0], &["n", "k"], &["n ℕ", "¬ (n = 0)", "n = (S k)", "k ℕ"], "n = (S k)", "2"),
];

pub const RIGHT_IDENTITY: &[Node] = &[
    node(&[], &["n"], &["n ℕ"], "(n + 0) = n", "induction(_ℕ)^0"),
    node(&[0], &["n"], &["n ℕ"], "(0 + 0) = 0", "+B"),
    node(&[1], &["n", "k"], &["n ℕ", "(k + 0) = k", "k ℕ"], "((S k) + 0) = (S k)", "+I->"),
    node(&[1, 0], &["n", "k"], &["n ℕ", "(k + 0) = k", "k ℕ"], "(S (k + 0)) = (S k)", "1->"),
    node(&[1, 0, 0], &["n", "k"], &["n ℕ", "(k + 0) = k", "k ℕ"], "(S k) = (S k)", "refl"),
];

pub const GOLDEN: &[(&str, &[Node])] = &[("/\\comm", AND_COMM), ("¬∀∃", DE_MORGAN), ("pred", PRED), ("+0", RIGHT_IDENTITY)];

fn preorder(tree: &ProofTree, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(path.clone());
    for (i, child) in tree.children.iter().enumerate() {
        path.push(i);
        preorder(child, path, out);
        path.pop();
    }
}

fn same_term(env: &NameEnv, locals: &[&str], expected: &str, actual: &Term) -> Result<(), String> {
    let want = parse_term(expected, &env.with_binders(locals.iter().copied())).map_err(|e| format!("cannot parse `{expected}`: {e}"))?;
    match alpha_beta_eta_equal(&want, actual, DEFAULT_FUEL) {
        Ok(true) => Ok(()),
        _ => Err(format!(
            "expected `{expected}`, found `{}`",
            print_term(actual, &env.with_binders(locals.iter().copied()), Notation::Infix)
        )),
    }
}

/// Compares a replayed proof tree node by node against `expected`.
pub fn compare_tree(state: &ProofState, expected: &[Node]) -> Result<(), String> {
    let mut paths = Vec::new();
    preorder(state.tree(), &mut Vec::new(), &mut paths);
    let want: Vec<Vec<usize>> = expected.iter().map(|n| n.path.to_vec()).collect();
    if paths != want {
        return Err(format!("tree shape {paths:?}, expected {want:?}"));
    }
    let env = state.env();
    for n in expected {
        let goal = state.goal(n.path).map_err(|e| e.to_string())?;
        let at = format!("at {:?}", n.path);
        if goal.locals.len() != n.locals.len() {
            return Err(format!("{at}: locals {:?}, expected {:?}", goal.locals, n.locals));
        }
        if goal.assumptions.len() != n.assumptions.len() {
            return Err(format!("{at}: {} assumptions, expected {}", goal.assumptions.len(), n.assumptions.len()));
        }
        for (a, want) in goal.assumptions.iter().zip(n.assumptions) {
            if !a.is_fact() {
                return Err(format!("{at}: hypothetical assumption"));
            }
            same_term(env, n.locals, want, &a.conclusion).map_err(|e| format!("{at}: {e}"))?;
        }
        same_term(env, n.locals, n.target, &goal.target).map_err(|e| format!("{at}: {e}"))?;
        let node = state.tree().node(n.path).expect("node exists");
        let label = node.step.as_ref().map(Step::label).unwrap_or_default();
        if label != n.by {
            return Err(format!("{at}: closed by `{label}`, expected `{}`", n.by));
        }
    }
    Ok(())
}

pub fn replayed(doc: &Document, name: &str) -> Result<ProofState, String> {
    let index = doc.theorem_index(name).ok_or_else(|| format!("no theorem {name}"))?;
    let theorem = doc.theorems().find(|(i, _)| *i == index).map(|(_, t)| t).unwrap();
    let (state, errors) = doc.start_proof(index, DEFAULT_FUEL).unwrap().replay(&theorem.script);
    if let Some(e) = errors.first() {
        return Err(format!("{name}: {}", e.message));
    }
    Ok(state)
}

/// The unfinished conjunction proof shown before the last branch is closed:
/// one goal tag left at `A`.
pub fn check_partial_and_comm(doc: &Document) -> Result<(), String> {
    let index = doc.theorem_index("/\\comm").unwrap();
    let theorem = doc.theorems().find(|(i, _)| *i == index).unwrap().1;
    let (state, errors) = doc.start_proof(index, DEFAULT_FUEL).unwrap().replay(&theorem.script[..4]);
    if !errors.is_empty() {
        return Err("prefix replay failed".into());
    }
    if state.unsolved() != vec![vec![0, 1]] {
        return Err(format!("open goals {:?}, expected [[0, 1]]", state.unsolved()));
    }
    let goal = state.goal(&[0, 1]).unwrap();
    same_term(state.env(), &["A", "B"], "A", &goal.target)?;
    // The finishing rule only shows up once non-introduction rules are listed.
    let intro_only = state.goal_summary(&[0, 1], false, false).map_err(|e| e.to_string())?;
    let all = state.goal_summary(&[0, 1], true, false).map_err(|e| e.to_string())?;
    if intro_only.candidates.iter().any(|c| c == "/\\E1") || !all.candidates.iter().any(|c| c == "/\\E1") {
        return Err("/\\E1 should be offered only with all rules shown".into());
    }
    Ok(())
}

pub fn check_corpus_replay() -> Result<String, String> {
    let doc = corpus();
    let report = check_document(&doc, &CheckConfig::default());
    if report.summary() != "4 theorems, 4 complete" {
        return Err(report.summary());
    }
    for (name, expected) in GOLDEN {
        let state = replayed(&doc, name)?;
        compare_tree(&state, expected).map_err(|e| format!("{name}: {e}"))?;
    }
    check_partial_and_comm(&doc)?;
    Ok(report.summary())
}

// ---------------------------------------------------------------------------
// Random pattern problems
// ---------------------------------------------------------------------------

pub const MAX_SCOPE: usize = 3;
pub const MAX_HEIGHT: usize = 5;

struct PatternGen {
    rng: ChaCha8Rng,
    arities: Vec<usize>,
}

impl PatternGen {
    fn flex(&mut self, scope: usize) -> Term {
        let var = self.rng.gen_range(0..self.arities.len());
        let mut vars: Vec<usize> = (0..scope).collect();
        vars.shuffle(&mut self.rng);
        vars.truncate(self.arities[var]);
        Term::apps(Term::var(var as u32), vars.into_iter().map(Term::Bound))
    }

    fn leaf(&mut self, scope: usize) -> Term {
        match self.rng.gen_range(0..4) {
            0 => Term::constant("c"),
            1 if scope > 0 => Term::Bound(self.rng.gen_range(0..scope)),
            2 => self.flex(scope),
            _ => Term::constant("d"),
        }
    }

    fn term(&mut self, scope: usize, height: usize) -> Term {
        if height == 0 || self.rng.gen_bool(0.3) {
            return self.leaf(scope);
        }
        match self.rng.gen_range(0..4) {
            0 if scope < MAX_SCOPE => Term::lam("y", self.term(scope + 1, height - 1)),
            1 if scope > 0 => {
                let head = Term::Bound(self.rng.gen_range(0..scope));
                Term::app(head, self.term(scope, height - 1))
            }
            _ => {
                let l = self.term(scope, height - 1);
                let r = self.term(scope, height - 1);
                Term::apps(Term::constant("f"), [l, r])
            }
        }
    }

    /// A variant of `t` that agrees with it in places and diverges elsewhere.
    fn perturb(&mut self, t: &Term, scope: usize, height: usize) -> Term {
        let roll: f64 = self.rng.gen();
        if roll < 0.15 {
            return self.flex(scope);
        }
        if roll < 0.3 {
            return self.term(scope, height.min(2));
        }
        match t {
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(self.perturb(b, scope + 1, height.saturating_sub(1)))),
            Term::App(..) if !matches!(t.head(), Term::UnifVar(_)) => {
                let (head, args) = t.spine();
                let args: Vec<Term> = args.into_iter().map(|a| self.perturb(a, scope, height.saturating_sub(1))).collect();
                Term::apps(head.clone(), args)
            }
            _ => t.clone(),
        }
    }
}

pub struct Problem {
    pub ambient: usize,
    pub left: Term,
    pub right: Term,
}

pub fn pattern_problems(count: usize, seed: u64) -> Vec<Problem> {
    let mut gen = PatternGen { rng: ChaCha8Rng::seed_from_u64(seed), arities: Vec::new() };
    (0..count)
        .map(|_| {
            let ambient = gen.rng.gen_range(0..=MAX_SCOPE);
            gen.arities = (0..3).map(|_| gen.rng.gen_range(0..=ambient)).collect();
            let height = gen.rng.gen_range(1..=MAX_HEIGHT);
            let left = gen.term(ambient, height);
            let right = gen.perturb(&left, ambient, height);
            Problem { ambient, left, right }
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct SoundnessTally {
    pub solved: usize,
    pub failed: usize,
    pub outside: usize,
}

pub fn check_unification_soundness(count: usize, seed: u64) -> Result<SoundnessTally, String> {
    let mut tally = SoundnessTally::default();
    for (i, p) in pattern_problems(count, seed).iter().enumerate() {
        let mut fresh = FreshIds::starting_at(100);
        match unify(&p.left, &p.right, p.ambient, &mut fresh) {
            Ok(subst) => {
                tally.solved += 1;
                if !subst.is_idempotent() {
                    return Err(format!("problem {i}: unifier is not idempotent"));
                }
                let l = subst.apply(&p.left).map_err(|e| e.to_string())?;
                let r = subst.apply(&p.right).map_err(|e| e.to_string())?;
                if !alpha_beta_eta_equal(&l, &r, DEFAULT_FUEL).unwrap_or(false) {
                    return Err(format!("problem {i}: {:?} =?= {:?} solved but sides differ", p.left, p.right));
                }
            }
            Err(e) if e.is_genuine_failure() => tally.failed += 1,
            Err(_) => tally.outside += 1,
        }
    }
    if tally.solved == 0 || tally.failed == 0 {
        return Err(format!("degenerate sample: {tally:?}"));
    }
    Ok(tally)
}

// ---------------------------------------------------------------------------
// Exhaustive most-general-unifier oracle
// ---------------------------------------------------------------------------
//
// Signature: constant `a`, binary constant `f`, one ambient variable `x`, a
// unification variable ?0 used with one argument and ?1 used bare. Every
// term up to size four is enumerated and every pair is unified. Candidate
// ground solutions are drawn from a fixed finite pool.

fn a() -> Term {
    Term::constant("a")
}

fn f(l: Term, r: Term) -> Term {
    Term::apps(Term::constant("f"), [l, r])
}

fn leaves(scope: usize) -> Vec<Term> {
    let mut out = vec![a(), Term::var(1)];
    for i in 0..scope {
        out.push(Term::Bound(i));
        out.push(Term::app(Term::var(0), Term::Bound(i)));
    }
    out
}

/// All terms of exactly `size` nodes under `scope` binders (at most one local λ).
fn terms_of_size(scope: usize, size: usize) -> Vec<Term> {
    let mut out = Vec::new();
    if size == 1 {
        return leaves(scope);
    }
    if scope == 1 {
        out.extend(terms_of_size(2, size - 1).into_iter().map(|b| Term::lam("y", b)));
    }
    for left in 1..size - 1 {
        let right = size - 1 - left;
        for l in terms_of_size(scope, left) {
            for r in terms_of_size(scope, right) {
                out.push(f(l.clone(), r));
            }
        }
    }
    out
}

pub fn enumerate_terms(max_size: usize) -> Vec<Term> {
    (1..=max_size).flat_map(|s| terms_of_size(1, s)).collect()
}

fn pool_unary() -> Vec<Term> {
    let w = || Term::Bound(0);
    [
        a(),
        w(),
        f(w(), a()),
        f(a(), w()),
        f(w(), w()),
        f(a(), a()),
        Term::lam("z", Term::Bound(0)),
        Term::lam("z", Term::Bound(1)),
        Term::lam("z", a()),
    ]
    .into_iter()
    .map(|b| Term::lam("w", b))
    .collect()
}

fn pool_nullary() -> Vec<Term> {
    vec![a(), f(a(), a()), Term::lam("z", Term::Bound(0)), Term::lam("z", a()), Term::lam("z", f(Term::Bound(0), a()))]
}

fn ground_solutions() -> Vec<Substitution> {
    let mut out = Vec::new();
    for s0 in pool_unary() {
        for s1 in pool_nullary() {
            let mut s = Substitution::new();
            s.insert(VarId(0), s0.clone());
            s.insert(VarId(1), s1);
            out.push(s);
        }
    }
    out
}

fn canon(s: &Substitution, t: &Term) -> Option<Term> {
    s.apply(t).ok()?.canonical(DEFAULT_FUEL).ok()
}

/// Rebinds the free variables of `g` (all local to the match site) to the
/// abstractions of a flex solution; `None` if one is not in the spine.
fn rebind(g: &Term, spine: &[usize], cutoff: usize) -> Option<Term> {
    Some(match g {
        Term::Bound(j) if *j < cutoff => g.clone(),
        Term::Bound(j) => {
            let pos = spine.iter().position(|s| *s == j - cutoff)?;
            Term::Bound(cutoff + spine.len() - 1 - pos)
        }
        Term::App(l, r) => Term::app(rebind(l, spine, cutoff)?, rebind(r, spine, cutoff)?),
        Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(rebind(b, spine, cutoff + 1)?)),
        _ => g.clone(),
    })
}

/// Matches a canonical pattern against a canonical ground term, recording
/// solutions for the pattern's variables.
fn match_ground(p: &Term, g: &Term, out: &mut BTreeMap<VarId, Term>) -> bool {
    let (ph, pargs) = p.spine();
    if let Term::UnifVar(v) = ph {
        let spine: Option<Vec<usize>> = pargs
            .iter()
            .map(|t| match t {
                Term::Bound(i) => Some(*i),
                _ => None,
            })
            .collect();
        let Some(spine) = spine else { return false };
        let Some(body) = rebind(g, &spine, 0) else { return false };
        let hints: Vec<Name> = spine.iter().map(|_| Name::from("w")).collect();
        let solution = Term::lams(&hints, body);
        return match out.get(v) {
            Some(prev) => *prev == solution,
            None => {
                out.insert(*v, solution);
                true
            }
        };
    }
    match (p, g) {
        (Term::Lam(_, pb), Term::Lam(_, gb)) => match_ground(pb, gb, out),
        (Term::App(..), Term::App(..)) => {
            let (gh, gargs) = g.spine();
            pargs.len() == gargs.len() && match_ground(ph, gh, out) && pargs.iter().zip(&gargs).all(|(pa, ga)| match_ground(pa, ga, out))
        }
        _ => p == g,
    }
}

/// `theta` is an instance of `sigma` on ?0 and ?1: some assignment to the
/// variables `sigma` introduced makes `theta . sigma` agree with `theta`.
fn is_instance(sigma: &Substitution, theta: &Substitution) -> bool {
    let mut extra = BTreeMap::new();
    let mut pairs = Vec::new();
    for v in [VarId(0), VarId(1)] {
        let image = sigma.get(v).cloned().unwrap_or(Term::UnifVar(v));
        let (Some(p), Some(g)) = (canon(theta, &image), canon(theta, &Term::UnifVar(v))) else { return false };
        if !match_ground(&p, &g, &mut extra) {
            return false;
        }
        pairs.push((p, g));
    }
    let mut rest = Substitution::new();
    for (v, t) in extra {
        rest.insert(v, t);
    }
    pairs.iter().all(|(p, g)| canon(&rest, p).as_ref() == Some(g))
}

#[derive(Debug, Default)]
pub struct MguTally {
    pub problems: usize,
    pub solved: usize,
    pub failed: usize,
    pub instances_checked: usize,
}

pub fn check_mgu_oracle(max_size: usize) -> Result<MguTally, String> {
    let terms = enumerate_terms(max_size);
    let grounds = ground_solutions();
    let mut tally = MguTally::default();
    for (i, t) in terms.iter().enumerate() {
        for u in &terms[i..] {
            tally.problems += 1;
            let solutions: Vec<&Substitution> =
                grounds.iter().filter(|s| matches!((canon(s, t), canon(s, u)), (Some(l), Some(r)) if l == r)).collect();
            let mut fresh = FreshIds::starting_at(10);
            match unify(t, u, 1, &mut fresh) {
                Ok(sigma) => {
                    tally.solved += 1;
                    let (l, r) = (canon(&sigma, t), canon(&sigma, u));
                    if l.is_none() || l != r {
                        return Err(format!("{t:?} =?= {u:?}: returned substitution does not unify"));
                    }
                    for theta in solutions {
                        tally.instances_checked += 1;
                        if !is_instance(&sigma, theta) {
                            return Err(format!("{t:?} =?= {u:?}: unifier {sigma:?} is not more general than {theta:?}"));
                        }
                    }
                }
                Err(e) if e.is_genuine_failure() => {
                    tally.failed += 1;
                    if let Some(theta) = solutions.first() {
                        return Err(format!("{t:?} =?= {u:?}: reported {e} but {theta:?} unifies"));
                    }
                }
                Err(e) => return Err(format!("{t:?} =?= {u:?}: unexpected {e}")),
            }
        }
    }
    Ok(tally)
}

// ---------------------------------------------------------------------------
// Instantiation examples
// ---------------------------------------------------------------------------

fn nat_env() -> NameEnv {
    let mut env = NameEnv::new();
    for c in ["_/\\_", "_ℕ", "0", "S", "G"] {
        env.declare(c).unwrap();
    }
    env
}

fn nat_def(env: &NameEnv) -> InductiveDef {
    let zero = NamedRule::new("zero", parse_rule("0 ℕ", env).unwrap(), RuleKind::Intro);
    let suc = NamedRule::new("suc", parse_rule("n. n ℕ |- (S n) ℕ", env).unwrap(), RuleKind::Intro);
    InductiveDef::new(vec![Judgment { name: "_ℕ".into(), arity: 1 }], vec![zero, suc])
}

fn identity() -> Term {
    Term::lam("a", Term::Bound(0))
}

pub fn check_instantiation_examples() -> Result<String, String> {
    let env = nat_env();

    // Conjunction introduction for the goal `A /\ A` with `A` in scope.
    let and_i = parse_rule("A B. A, B |- A /\\ B", &env).unwrap();
    let mut fresh = FreshIds::default();
    let inst = instantiate(&and_i, 1, &mut fresh);
    let x = Term::Bound(0);
    let expected = Term::apps(Term::constant("_/\\_"), [Term::app(Term::var(0), x.clone()), Term::app(Term::var(1), x.clone())]);
    if inst.conclusion != expected {
        return Err(format!("conclusion {:?}", inst.conclusion));
    }
    let goal = parse_term("A /\\ A", &env.with_binders(["A"])).unwrap();
    let sigma = unify(&goal, &inst.conclusion, 1, &mut fresh).map_err(|e| e.to_string())?;
    for v in [VarId(0), VarId(1)] {
        if sigma.get(v) != Some(&identity()) {
            return Err(format!("{v} := {:?}, expected the identity", sigma.get(v)));
        }
    }

    // Induction as an elimination on `k ℕ` for the goal `G k`.
    let ind = nat_def(&env).synthesize_induction().map_err(|e| e.to_string())?.remove(0);
    let mut fresh = FreshIds::default();
    let partial = instantiate_two_phase(&ind.rule, 1, &mut fresh);
    let first = partial.first_premise().ok_or("no first premise")?;
    let (head, args) = first.conclusion.spine();
    let phase_one_var = match (head, args.as_slice()) {
        (Term::Const(c), [arg]) if &**c == "_ℕ" => match arg.spine() {
            (Term::UnifVar(v), spine) if spine == vec![&Term::Bound(0)] => *v,
            _ => return Err(format!("first premise {:?}", first.conclusion)),
        },
        _ => return Err(format!("first premise {:?}", first.conclusion)),
    };
    let assumption = parse_term("k ℕ", &env.with_binders(["k"])).unwrap();
    let sigma = unify(&first.conclusion, &assumption, 1, &mut fresh).map_err(|e| e.to_string())?;
    if sigma.get(phase_one_var) != Some(&identity()) {
        return Err(format!("{phase_one_var} := {:?}, expected the identity", sigma.get(phase_one_var)));
    }
    let finished = partial.finish(&sigma, &mut fresh, DEFAULT_FUEL).map_err(|e| e.to_string())?;
    let conclusion = sigma.apply(&finished.conclusion).map_err(|e| e.to_string())?;
    if !vinculum_core::unify::is_pattern(&conclusion) {
        return Err(format!("conclusion {conclusion:?} is not a pattern"));
    }
    let goal = parse_term("G k", &env.with_binders(["k"])).unwrap();
    let tau = Unifier::new(&mut fresh).with_subst(sigma).unify(&goal, &conclusion, 1).map_err(|e| e.to_string())?;
    let motive_goal = tau.apply(&conclusion).map_err(|e| e.to_string())?;
    if motive_goal != goal {
        return Err(format!("motive instantiates to {motive_goal:?}"));
    }
    Ok("identity solutions; pattern-safe induction conclusion".into())
}

// ---------------------------------------------------------------------------
// Synthesis golden test
// ---------------------------------------------------------------------------

pub const CASES_NAT: &str = "P x. x ℕ, [x = 0 |- P], [n. x = (S n), n ℕ |- P] |- P";
pub const INDUCTION_NAT: &str = "P x. x ℕ, P 0, [n. P n, n ℕ |- P (S n)] |- P x";

pub fn rules_alpha_equal(a: &Rule, b: &Rule) -> bool {
    let (ca, cb) = (a.normalize(DEFAULT_FUEL), b.normalize(DEFAULT_FUEL));
    let strip = |r: Rule| {
        let mut t = Vec::new();
        r.for_each_term(&mut |term, _| t.push(term.eta_contract()));
        (r.binders.len(), r.premises.len(), t)
    };
    match (ca, cb) {
        (Ok(x), Ok(y)) => shape(&x) == shape(&y) && strip(x) == strip(y),
        _ => false,
    }
}

fn shape(r: &Rule) -> (usize, Vec<(usize, usize)>) {
    (r.binders.len(), r.premises.iter().map(|p| (p.binders.len(), p.premises.len())).collect())
}

pub fn check_synthesis_golden() -> Result<String, String> {
    let env = nat_env();
    let def = nat_def(&env);
    let cases = def.synthesize_cases("_ℕ").map_err(|e| e.to_string())?;
    let induction = def.synthesize_induction().map_err(|e| e.to_string())?.remove(0);
    for (rule, text, name) in [(&cases, CASES_NAT, "cases(_ℕ)"), (&induction, INDUCTION_NAT, "induction(_ℕ)")] {
        if rule.name != name {
            return Err(format!("named {}, expected {name}", rule.name));
        }
        let expected = parse_rule(text, &env).map_err(|e| e.to_string())?;
        if !rules_alpha_equal(&rule.rule, &expected) {
            return Err(format!("{name} prints as `{}`", print_rule(&rule.rule, &env, Notation::Infix)));
        }
    }
    // The successor case of the cases rule brings the premise of `suc` into
    // scope, so the pred proof sees it as assumption 3.
    let state = replayed(&corpus(), "pred")?;
    let goal = state.goal(&[1]).map_err(|e| e.to_string())?;
    let names = ["n", "k"];
    same_term(state.env(), &names, "n = (S k)", &goal.assumptions[2].conclusion)?;
    same_term(state.env(), &names, "k ℕ", &goal.assumptions[3].conclusion)?;
    Ok(format!("{} | {}", print_rule(&cases.rule, &env, Notation::Infix), print_rule(&induction.rule, &env, Notation::Infix)))
}

// ---------------------------------------------------------------------------
// Determinism and divergence
// ---------------------------------------------------------------------------

pub fn check_document_round_trip() -> Result<String, String> {
    let doc = corpus();
    let once = serialize_document(&doc);
    if once != CORPUS {
        return Err("corpus file is not in canonical form".into());
    }
    let again = parse_document(&once).map_err(|e| e.to_string())?;
    let twice = serialize_document(&again);
    if once != twice {
        return Err("serialize . parse is not idempotent".into());
    }
    let config = CheckConfig::default();
    let (r1, r2) = (check_document(&doc, &config), check_document(&again, &config));
    if format!("{r1:?}") != format!("{r2:?}") {
        return Err("reports differ after a round trip".into());
    }
    Ok(r2.summary())
}

pub const OMEGA_DOC: &str = r#"{
  "title": "divergence",
  "version": 1,
  "constants": ["P"],
  "items": [
    {"kind": "axioms", "rules": [{"name": "PI", "binders": ["X"], "conclusion": "P X"}]},
    {
      "kind": "theorem",
      "name": "omega",
      "conclusion": "P ((x. x x) (x. x x))",
      "script": [{"path": [], "op": "intro", "rule": "PI"}]
    }
  ]
}"#;

pub fn check_divergence() -> Result<String, String> {
    let start = Instant::now();
    let doc = parse_document(OMEGA_DOC).map_err(|e| e.to_string())?;
    let report = check_document(&doc, &CheckConfig::default());
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(5) {
        return Err(format!("took {elapsed:?}"));
    }
    let theorem = &report.theorems[0];
    if theorem.status == Status::Complete || !theorem.errors.iter().any(|e| e.code == "fuel-exhausted") {
        return Err(format!("{:?} {:?}", theorem.status, theorem.errors));
    }
    Ok(format!("fuel-exhausted after {elapsed:.2?}"))
}
