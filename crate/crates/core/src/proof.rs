//! Goal trees and the operations that grow them.
//!
//! A [`ProofState`] owns the tree, the script of steps that built it (in the
//! order they were applied) and the proof-global supply of unification
//! variables. Every operation takes the state by reference and returns a new
//! one; substitutions found by unification are applied to the whole tree at
//! once, so no node ever mentions a solved variable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rule::{instantiate, instantiate_two_phase, NamedRule, Rule};
use crate::syntax::{print_rule, print_term, NameEnv, Notation};
use crate::term::{Name, NormalizeError, Term, VarId, DEFAULT_FUEL};
use crate::unify::{FreshIds, Substitution, Unifier, UnifyError};

/// Child indices from the root to a node.
pub type GoalPath = Vec<usize>;

/// The rules visible at some point of a document, in declaration order.
#[derive(Clone, Debug, Default)]
pub struct RuleScope {
    rules: Vec<Arc<NamedRule>>,
    index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rule `{0}` is already defined")]
pub struct DuplicateRuleName(pub String);

impl RuleScope {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, rule: Arc<NamedRule>) -> Result<(), DuplicateRuleName> {
        if self.index.contains_key(&rule.name) || rule.name == crate::REFL {
            return Err(DuplicateRuleName(rule.name.clone()));
        }
        self.index.insert(rule.name.clone(), self.rules.len());
        self.rules.push(rule);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Arc<NamedRule>> {
        self.index.get(name).map(|i| &self.rules[*i])
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Arc<NamedRule>> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Direction of a rewrite: `->` replaces left-hand sides by right-hand sides.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "->")]
    Forward,
    #[serde(rename = "<-")]
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "->",
            Direction::Backward => "<-",
        })
    }
}

/// The equation a rewrite uses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equation {
    Rule(String),
    Assumption(usize),
}

/// One recorded proof step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Step {
    /// Backward application of a rule in scope.
    Intro {
        rule: String,
    },
    /// Backward application of an assumption.
    Assumption {
        assumption: usize,
    },
    /// Forward application of a rule to an assumption.
    Elim {
        rule: String,
        assumption: usize,
    },
    /// Rewrite by a rule (`rule`) or an assumption (`assumption`); exactly one
    /// is present.
    Rewrite {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rule: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        assumption: Option<usize>,
        direction: Direction,
        #[serde(default)]
        occurrence: usize,
    },
    Refl,
}

impl Step {
    pub fn rewrite(equation: Equation, direction: Direction, occurrence: usize) -> Step {
        let (rule, assumption) = match equation {
            Equation::Rule(r) => (Some(r), None),
            Equation::Assumption(a) => (None, Some(a)),
        };
        Step::Rewrite { rule, assumption, direction, occurrence }
    }

    /// Short label used when rendering trees: `/\I`, `AllE^1`, `+I->`, `2->`.
    pub fn label(&self) -> String {
        match self {
            Step::Intro { rule } => rule.clone(),
            Step::Assumption { assumption } => assumption.to_string(),
            Step::Elim { rule, assumption } => format!("{rule}^{assumption}"),
            Step::Rewrite { rule, assumption, direction, .. } => match (rule, assumption) {
                (Some(r), _) => format!("{r}{direction}"),
                (None, Some(a)) => format!("{a}{direction}"),
                (None, None) => format!("?{direction}"),
            },
            Step::Refl => crate::REFL.to_string(),
        }
    }
}

/// A step together with the goal it was applied to.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptStep {
    pub path: GoalPath,
    #[serde(flatten)]
    pub step: Step,
}

/// A node of the goal tree. `locals` and `assumptions` are those introduced
/// at this node; the target is scoped under every local on the path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTree {
    pub locals: Vec<Name>,
    pub assumptions: Vec<Rule>,
    pub target: Term,
    pub step: Option<Step>,
    pub children: Vec<ProofTree>,
}

impl ProofTree {
    fn leaf(locals: Vec<Name>, assumptions: Vec<Rule>, target: Term) -> Self {
        ProofTree { locals, assumptions, target, step: None, children: vec![] }
    }

    pub fn is_solved(&self) -> bool {
        self.step.is_some()
    }

    /// Paths of unsolved nodes below (and including) this one, in pre-order.
    pub fn unsolved(&self) -> Vec<GoalPath> {
        let mut out = Vec::new();
        self.collect_unsolved(&mut vec![], &mut out);
        out
    }

    fn collect_unsolved(&self, here: &mut GoalPath, out: &mut Vec<GoalPath>) {
        if self.step.is_none() {
            out.push(here.clone());
        }
        for (i, c) in self.children.iter().enumerate() {
            here.push(i);
            c.collect_unsolved(here, out);
            here.pop();
        }
    }

    pub fn node(&self, path: &[usize]) -> Option<&ProofTree> {
        path.iter().try_fold(self, |n, i| n.children.get(*i))
    }

    fn node_mut(&mut self, path: &[usize]) -> Option<&mut ProofTree> {
        path.iter().try_fold(self, |n, i| n.children.get_mut(*i))
    }

    fn map_terms(&mut self, f: &mut impl FnMut(&Term) -> Result<Term, NormalizeError>) -> Result<(), NormalizeError> {
        self.target = f(&self.target)?;
        for a in &mut self.assumptions {
            *a = a.map_terms(&mut |t, _| f(t))?;
        }
        for c in &mut self.children {
            c.map_terms(f)?;
        }
        Ok(())
    }

    pub fn unif_vars(&self) -> BTreeSet<VarId> {
        let mut out = self.target.unif_vars();
        for a in &self.assumptions {
            out.extend(a.unif_vars());
        }
        for c in &self.children {
            out.extend(c.unif_vars());
        }
        out
    }
}

/// Everything in scope at a node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Goal {
    pub locals: Vec<Name>,
    /// Numbered from 0 along the path; each scoped under all `locals`.
    pub assumptions: Vec<Rule>,
    pub target: Term,
}

impl Goal {
    pub fn depth(&self) -> usize {
        self.locals.len()
    }
}

/// Which unification an application failed at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Conclusion,
    FirstPremise,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Conclusion => "conclusion",
            Stage::FirstPremise => "first premise",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("no goal at path {0:?}")]
    InvalidGoalRef(GoalPath),
    #[error("goal {0:?} is already solved")]
    GoalSolved(GoalPath),
    #[error("no rule named `{0}` is in scope")]
    UnknownRule(String),
    #[error("assumption {index} is not in scope ({available} available)")]
    NoSuchAssumption { index: usize, available: usize },
    #[error("assumption {0} is hypothetical and cannot be eliminated")]
    HypotheticalAssumption(usize),
    #[error("rule `{0}` has no premises to eliminate with")]
    NoPremises(String),
    #[error("the first premise of `{0}` is hypothetical")]
    HypotheticalFirstPremise(String),
    #[error("{stage} `{left}` does not unify with `{right}`: {reason}")]
    NoUnifier { stage: Stage, left: String, right: String, reason: String },
    #[error("unification left the pattern fragment on `{left}` =?= `{right}`")]
    OutsidePatternFragment { left: String, right: String },
    #[error("`{0}` is not an equation")]
    NotAnEquation(String),
    #[error("equation `{0}` has premises")]
    ConditionalEquation(String),
    #[error("no subterm of the goal matches `{0}`")]
    NoMatchingSubterm(String),
    #[error("occurrence {occurrence} requested but only {matches} subterms match")]
    OccurrenceOutOfRange { occurrence: usize, matches: usize },
    #[error("rewrite step names neither a rule nor an assumption")]
    MissingEquation,
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

impl ApplyError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ApplyError::InvalidGoalRef(_) => "invalid-goal",
            ApplyError::GoalSolved(_) => "goal-solved",
            ApplyError::UnknownRule(_) => "unknown-rule",
            ApplyError::NoSuchAssumption { .. } => "no-such-assumption",
            ApplyError::HypotheticalAssumption(_) => "hypothetical-assumption",
            ApplyError::NoPremises(_) => "no-premises",
            ApplyError::HypotheticalFirstPremise(_) => "hypothetical-premise",
            ApplyError::NoUnifier { .. } => "no-unifier",
            ApplyError::OutsidePatternFragment { .. } => "outside-pattern-fragment",
            ApplyError::NotAnEquation(_) => "not-an-equation",
            ApplyError::ConditionalEquation(_) => "conditional-equation",
            ApplyError::NoMatchingSubterm(_) => "no-matching-subterm",
            ApplyError::OccurrenceOutOfRange { .. } => "occurrence-out-of-range",
            ApplyError::MissingEquation => "missing-equation",
            ApplyError::Normalize(_) => "fuel-exhausted",
        }
    }
}

/// What the goal panel shows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GoalSummary {
    pub goal: Goal,
    /// Names of candidate rules, in scope order.
    pub candidates: Vec<String>,
}

/// Result of replaying a proof from scratch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckReport {
    pub complete: bool,
    pub errors: Vec<NodeError>,
    pub unsolved: Vec<GoalPath>,
    /// Unification variables still present in the finished tree.
    pub unresolved: Vec<VarId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodeError {
    /// Position of the step in the script.
    pub step: usize,
    pub path: GoalPath,
    pub code: &'static str,
    pub message: String,
}

/// Options for [`ProofState::check_tree`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CheckOptions {
    /// Count proofs that leave unification variables unsolved as incomplete.
    pub strict_unifvars: bool,
}

#[derive(Clone, Debug)]
pub struct ProofState {
    theorem: Arc<NamedRule>,
    scope: Arc<RuleScope>,
    env: Arc<NameEnv>,
    tree: ProofTree,
    script: Vec<ScriptStep>,
    fresh: FreshIds,
    history: Substitution,
    fuel: usize,
}

impl ProofState {
    /// A single unsolved goal: binders become locals, premises assumptions.
    pub fn new(theorem: Arc<NamedRule>, scope: Arc<RuleScope>, env: Arc<NameEnv>) -> Self {
        Self::with_fuel(theorem, scope, env, DEFAULT_FUEL)
    }

    pub fn with_fuel(theorem: Arc<NamedRule>, scope: Arc<RuleScope>, env: Arc<NameEnv>, fuel: usize) -> Self {
        let r = &theorem.rule;
        let tree = ProofTree::leaf(r.binders.clone(), r.premises.clone(), r.conclusion.clone());
        ProofState { theorem, scope, env, tree, script: vec![], fresh: FreshIds::default(), history: Substitution::new(), fuel }
    }

    pub fn theorem(&self) -> &Arc<NamedRule> {
        &self.theorem
    }

    pub fn scope(&self) -> &Arc<RuleScope> {
        &self.scope
    }

    pub fn env(&self) -> &Arc<NameEnv> {
        &self.env
    }

    pub fn tree(&self) -> &ProofTree {
        &self.tree
    }

    /// Steps in application order.
    pub fn script(&self) -> &[ScriptStep] {
        &self.script
    }

    /// Composition of every substitution found so far.
    pub fn history(&self) -> &Substitution {
        &self.history
    }

    pub fn fuel(&self) -> usize {
        self.fuel
    }

    pub fn unsolved(&self) -> Vec<GoalPath> {
        self.tree.unsolved()
    }

    pub fn is_complete(&self) -> bool {
        self.unsolved().is_empty()
    }

    /// Locals, assumptions and target in scope at `path`.
    pub fn goal(&self, path: &[usize]) -> Result<Goal, ApplyError> {
        let mut node = &self.tree;
        let mut locals = node.locals.clone();
        let mut assumptions = node.assumptions.clone();
        for i in path {
            node = node.children.get(*i).ok_or_else(|| ApplyError::InvalidGoalRef(path.to_vec()))?;
            let k = node.locals.len();
            if k > 0 {
                assumptions = assumptions.iter().map(|a| a.shift_up(k, 0)).collect();
            }
            locals.extend(node.locals.iter().cloned());
            assumptions.extend(node.assumptions.iter().cloned());
        }
        Ok(Goal { locals, assumptions, target: node.target.clone() })
    }

    fn open_goal(&self, path: &[usize]) -> Result<Goal, ApplyError> {
        let goal = self.goal(path)?;
        if self.tree.node(path).is_some_and(ProofTree::is_solved) {
            return Err(ApplyError::GoalSolved(path.to_vec()));
        }
        Ok(goal)
    }

    /// Name environment with the goal's locals as binders, for printing.
    pub fn goal_env(&self, goal: &Goal) -> NameEnv {
        self.env.with_binder_names(&goal.locals)
    }

    pub fn print_term_at(&self, goal: &Goal, t: &Term) -> String {
        print_term(t, &self.goal_env(goal), Notation::Infix)
    }

    pub fn print_rule_at(&self, goal: &Goal, r: &Rule) -> String {
        print_rule(r, &self.goal_env(goal), Notation::Infix)
    }

    /// Candidate rules for the goal at `path`: introduction-format rules, or
    /// every rule when `show_all`. With `check_unifiable`, only those whose
    /// conclusion actually unifies with the target are kept.
    pub fn goal_summary(&self, path: &[usize], show_all: bool, check_unifiable: bool) -> Result<GoalSummary, ApplyError> {
        let goal = self.goal(path)?;
        let mut candidates = Vec::new();
        for r in self.scope.iter() {
            if !show_all && !crate::rule::is_introduction_format(&r.rule) {
                continue;
            }
            if check_unifiable && self.apply_intro(path, &r.name).is_err() {
                continue;
            }
            candidates.push(r.name.clone());
        }
        Ok(GoalSummary { goal, candidates })
    }

    fn rule(&self, name: &str) -> Result<Arc<NamedRule>, ApplyError> {
        self.scope.get(name).cloned().ok_or_else(|| ApplyError::UnknownRule(name.to_string()))
    }

    fn assumption(goal: &Goal, index: usize) -> Result<&Rule, ApplyError> {
        goal.assumptions.get(index).ok_or(ApplyError::NoSuchAssumption { index, available: goal.assumptions.len() })
    }

    /// Applies a step recorded in a script.
    pub fn apply_step(&self, path: &[usize], step: &Step) -> Result<ProofState, ApplyError> {
        match step {
            Step::Intro { rule } => self.apply_intro(path, rule),
            Step::Assumption { assumption } => self.apply_assumption(path, *assumption),
            Step::Elim { rule, assumption } => self.apply_elim(path, *assumption, rule),
            Step::Rewrite { rule, assumption, direction, occurrence } => {
                let eq = match (rule, assumption) {
                    (Some(r), None) => Equation::Rule(r.clone()),
                    (None, Some(a)) => Equation::Assumption(*a),
                    _ => return Err(ApplyError::MissingEquation),
                };
                self.rewrite(path, &eq, *direction, *occurrence)
            }
            Step::Refl => self.apply_refl(path),
        }
    }

    /// Backward application of a rule in scope.
    pub fn apply_intro(&self, path: &[usize], rule: &str) -> Result<ProofState, ApplyError> {
        let goal = self.open_goal(path)?;
        let named = self.rule(rule)?;
        self.backward(path, &goal, &named.rule, Step::Intro { rule: rule.to_string() })
    }

    /// Backward application of an assumption (which may be hypothetical).
    pub fn apply_assumption(&self, path: &[usize], index: usize) -> Result<ProofState, ApplyError> {
        let goal = self.open_goal(path)?;
        let a = Self::assumption(&goal, index)?.clone();
        self.backward(path, &goal, &a, Step::Assumption { assumption: index })
    }

    /// Closes an equation goal by the built-in reflexivity rule.
    pub fn apply_refl(&self, path: &[usize]) -> Result<ProofState, ApplyError> {
        let goal = self.open_goal(path)?;
        if !is_equation(&goal.target) {
            return Err(ApplyError::NotAnEquation(self.print_term_at(&goal, &goal.target)));
        }
        self.backward(path, &goal, &NamedRule::refl().rule, Step::Refl)
    }

    fn backward(&self, path: &[usize], goal: &Goal, rule: &Rule, step: Step) -> Result<ProofState, ApplyError> {
        let mut next = self.clone();
        let depth = goal.depth();
        let inst = instantiate(rule, depth, &mut next.fresh);
        let conclusion = inst.conclusion.normalize_with(self.fuel)?;
        let subst = Unifier::new(&mut next.fresh)
            .with_fuel(self.fuel)
            .unify(&conclusion, &goal.target, depth)
            .map_err(|e| self.unify_error(goal, Stage::Conclusion, &conclusion, &goal.target, e))?;
        next.commit(path, goal, &subst, inst.premises, step)?;
        Ok(next)
    }

    /// Forward application of `rule` to assumption `index`: the first premise
    /// is unified with the assumption, remaining binders are instantiated,
    /// then the conclusion is unified with the target. The first premise gets
    /// no subgoal.
    pub fn apply_elim(&self, path: &[usize], index: usize, rule: &str) -> Result<ProofState, ApplyError> {
        let goal = self.open_goal(path)?;
        let named = self.rule(rule)?;
        let assumption = Self::assumption(&goal, index)?;
        if !assumption.is_fact() {
            return Err(ApplyError::HypotheticalAssumption(index));
        }
        if named.rule.premises.is_empty() {
            return Err(ApplyError::NoPremises(rule.to_string()));
        }
        if !named.rule.premises[0].is_fact() {
            return Err(ApplyError::HypotheticalFirstPremise(rule.to_string()));
        }
        let mut next = self.clone();
        let depth = goal.depth();
        let partial = instantiate_two_phase(&named.rule, depth, &mut next.fresh);
        let first = partial.first_premise().expect("rule has a premise").conclusion.normalize_with(self.fuel)?;
        let first_subst = Unifier::new(&mut next.fresh)
            .with_fuel(self.fuel)
            .unify(&first, &assumption.conclusion, depth)
            .map_err(|e| self.unify_error(&goal, Stage::FirstPremise, &first, &assumption.conclusion, e))?;
        let inst = partial.finish(&first_subst, &mut next.fresh, self.fuel)?;
        let conclusion = inst.conclusion.normalize_with(self.fuel)?;
        let target = first_subst.apply_with(&goal.target, self.fuel)?;
        let subst = Unifier::new(&mut next.fresh)
            .with_fuel(self.fuel)
            .with_subst(first_subst)
            .unify(&conclusion, &target, depth)
            .map_err(|e| self.unify_error(&goal, Stage::Conclusion, &conclusion, &target, e))?;
        let premises = inst.premises.into_iter().skip(1).collect();
        next.commit(path, &goal, &subst, premises, Step::Elim { rule: rule.to_string(), assumption: index })?;
        Ok(next)
    }

    /// Rewrites the `occurrence`-th subterm (pre-order, outermost first) that
    /// unifies with one side of an equation, replacing it by the other side.
    pub fn rewrite(&self, path: &[usize], eq: &Equation, direction: Direction, occurrence: usize) -> Result<ProofState, ApplyError> {
        let goal = self.open_goal(path)?;
        let depth = goal.depth();
        let mut next = self.clone();
        let (lhs, rhs) = match eq {
            Equation::Rule(name) => {
                let named = self.rule(name)?;
                if !named.rule.premises.is_empty() {
                    return Err(ApplyError::ConditionalEquation(name.clone()));
                }
                let inst = instantiate(&named.rule, depth, &mut next.fresh);
                let conclusion = inst.conclusion.normalize_with(self.fuel)?;
                equation_sides(&conclusion).ok_or_else(|| ApplyError::NotAnEquation(print_rule(&named.rule, &self.env, Notation::Infix)))?
            }
            Equation::Assumption(index) => {
                let a = Self::assumption(&goal, *index)?;
                if !a.is_fact() {
                    return Err(ApplyError::ConditionalEquation(index.to_string()));
                }
                equation_sides(&a.conclusion).ok_or_else(|| ApplyError::NotAnEquation(self.print_term_at(&goal, &a.conclusion)))?
            }
        };
        let (pattern, replacement) = match direction {
            Direction::Forward => (lhs, rhs),
            Direction::Backward => (rhs, lhs),
        };
        let mut sites = Vec::new();
        visit_subterms(&goal.target, 0, &mut |t, local| sites.push((t.clone(), local)));
        let mut matches = 0;
        let mut found = None;
        for (visit, (site, local)) in sites.iter().enumerate() {
            if matches!(site.head(), Term::UnifVar(_)) {
                continue;
            }
            let mut trial = next.fresh;
            let shifted = pattern.shift_up(*local, 0);
            if let Ok(s) = Unifier::new(&mut trial).with_fuel(self.fuel).unify(&shifted, site, depth + local) {
                if matches == occurrence {
                    found = Some((visit, s, trial));
                    break;
                }
                matches += 1;
            }
        }
        let Some((visit, subst, trial)) = found else {
            if matches == 0 {
                return Err(ApplyError::NoMatchingSubterm(self.print_term_at(&goal, &pattern)));
            }
            return Err(ApplyError::OccurrenceOutOfRange { occurrence, matches });
        };
        next.fresh = trial;
        let rewritten = replace_subterm(&goal.target, 0, &mut 0, visit, &|local| replacement.shift_up(local, 0));
        let child = Rule::fact(rewritten);
        next.commit(path, &goal, &subst, vec![child], Step::rewrite(eq.clone(), direction, occurrence))?;
        Ok(next)
    }

    /// Records `step` at `path` with one child per premise, then applies
    /// `subst` to the whole tree.
    fn commit(&mut self, path: &[usize], goal: &Goal, subst: &Substitution, premises: Vec<Rule>, step: Step) -> Result<(), ApplyError> {
        let mut taken = goal.locals.clone();
        let children = premises
            .into_iter()
            .map(|p| {
                let locals: Vec<Name> = p
                    .binders
                    .iter()
                    .map(|b| {
                        let n = self.env.fresh_name(b, &taken);
                        taken.push(n.clone());
                        n
                    })
                    .collect();
                taken.truncate(goal.locals.len());
                ProofTree::leaf(locals, p.premises, p.conclusion)
            })
            .collect();
        let node = self.tree.node_mut(path).ok_or_else(|| ApplyError::InvalidGoalRef(path.to_vec()))?;
        node.step = Some(step.clone());
        node.children = children;
        let fuel = self.fuel;
        if !subst.is_empty() {
            self.tree.map_terms(&mut |t| subst.apply_with(t, fuel))?;
            self.history = Substitution::compose_with(subst, &self.history, fuel).map_err(|e| match e {
                UnifyError::Normalize(n) => ApplyError::Normalize(n),
                other => unreachable!("solved variables are never reintroduced: {other}"),
            })?;
        } else {
            // Premises still need β-normal form after instantiation.
            self.tree.node_mut(path).expect("node exists").map_terms(&mut |t| t.normalize_with(fuel))?;
        }
        self.script.push(ScriptStep { path: path.to_vec(), step });
        Ok(())
    }

    fn unify_error(&self, goal: &Goal, stage: Stage, left: &Term, right: &Term, e: UnifyError) -> ApplyError {
        let l = self.print_term_at(goal, left);
        let r = self.print_term_at(goal, right);
        match e {
            UnifyError::OutsidePatternFragment { .. } => ApplyError::OutsidePatternFragment { left: l, right: r },
            UnifyError::Normalize(n) => ApplyError::Normalize(n),
            other => ApplyError::NoUnifier { stage, left: l, right: r, reason: reason(&other) },
        }
    }

    /// Resets the node at `path` to unsolved and replays the remaining
    /// script from scratch. Steps that no longer apply are dropped together
    /// with everything below them.
    pub fn clear_subtree(&self, path: &[usize]) -> Result<ProofState, ApplyError> {
        if self.tree.node(path).is_none() {
            return Err(ApplyError::InvalidGoalRef(path.to_vec()));
        }
        let kept: Vec<ScriptStep> = self.script.iter().filter(|s| !s.path.starts_with(path)).cloned().collect();
        let (state, _) = self.fresh_copy().replay(&kept);
        Ok(state)
    }

    fn fresh_copy(&self) -> ProofState {
        ProofState::with_fuel(self.theorem.clone(), self.scope.clone(), self.env.clone(), self.fuel)
    }

    /// Applies `script` in order, skipping steps that fail and every later
    /// step below a failed one.
    pub fn replay(&self, script: &[ScriptStep]) -> (ProofState, Vec<NodeError>) {
        let mut state = self.clone();
        let mut errors = Vec::new();
        let mut failed: Vec<GoalPath> = Vec::new();
        for (i, s) in script.iter().enumerate() {
            if failed.iter().any(|f| s.path.starts_with(f)) {
                continue;
            }
            match state.apply_step(&s.path, &s.step) {
                Ok(next) => state = next,
                Err(e) => {
                    errors.push(NodeError { step: i, path: s.path.clone(), code: e.code(), message: e.to_string() });
                    failed.push(s.path.clone());
                }
            }
        }
        (state, errors)
    }

    /// Replays the whole script with a fresh variable supply and reports
    /// failing steps, open goals and leftover unification variables.
    pub fn check_tree(&self, options: CheckOptions) -> CheckReport {
        let (state, errors) = self.fresh_copy().replay(&self.script);
        let unsolved = state.unsolved();
        let unresolved: Vec<VarId> = state.tree.unif_vars().into_iter().collect();
        let complete = errors.is_empty() && unsolved.is_empty() && (!options.strict_unifvars || unresolved.is_empty());
        CheckReport { complete, errors, unsolved, unresolved }
    }
}

fn reason(e: &UnifyError) -> String {
    match e {
        UnifyError::Clash { .. } => "different heads".into(),
        UnifyError::OccursCheck { var, .. } => format!("{var} would occur in its own solution"),
        UnifyError::Escape { .. } => "a solution would mention a variable bound below it".into(),
        UnifyError::DepthMismatch { depth } => format!("terms are not scoped at depth {depth}"),
        other => other.to_string(),
    }
}

fn is_equation(t: &Term) -> bool {
    equation_sides(t).is_some()
}

/// `(lhs, rhs)` of a term `_=_ lhs rhs`.
pub fn equation_sides(t: &Term) -> Option<(Term, Term)> {
    let (head, args) = t.spine();
    match (head, args.as_slice()) {
        (Term::Const(c), [l, r]) if &**c == crate::EQUALS => Some(((*l).clone(), (*r).clone())),
        _ => None,
    }
}

/// Pre-order walk over rewrite sites: a term, then the arguments of its spine
/// left to right, going under abstractions. Spine heads are not sites.
fn visit_subterms(t: &Term, local: usize, f: &mut impl FnMut(&Term, usize)) {
    f(t, local);
    match t {
        Term::Lam(_, b) => visit_subterms(b, local + 1, f),
        Term::App(..) => {
            let (_, args) = t.spine();
            for a in args {
                visit_subterms(a, local, f);
            }
        }
        _ => {}
    }
}

/// Replaces the site with visit number `at` (see [`visit_subterms`]).
fn replace_subterm(t: &Term, local: usize, counter: &mut usize, at: usize, with: &dyn Fn(usize) -> Term) -> Term {
    let me = *counter;
    *counter += 1;
    if me == at {
        return with(local);
    }
    match t {
        Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(replace_subterm(b, local + 1, counter, at, with))),
        Term::App(..) => {
            let (head, args) = t.spine();
            let args: Vec<Term> = args.into_iter().map(|a| replace_subterm(a, local, counter, at, with)).collect();
            Term::apps(head.clone(), args)
        }
        other => other.clone(),
    }
}
