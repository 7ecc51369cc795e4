//! Higher-order pattern unification.
//!
//! Follows the structure of Nipkow's functional formulation of Miller's
//! algorithm on nameless terms: flex-rigid pairs are solved by abstracting the
//! rigid side over the flexible spine (pruning foreign variables out of nested
//! flexible subterms), flex-flex pairs by intersecting spines through a fresh
//! variable. Anything outside the pattern fragment is rejected.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::term::{unspine, Name, NormalizeError, Term, VarId, DEFAULT_FUEL};

/// Source of proof-global unification variable ids.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FreshIds {
    next: u32,
}

impl FreshIds {
    pub fn starting_at(next: u32) -> Self {
        FreshIds { next }
    }

    pub fn fresh(&mut self) -> VarId {
        let id = VarId(self.next);
        self.next += 1;
        id
    }

    pub fn peek(&self) -> u32 {
        self.next
    }
}

/// Map from unification variables to closed solutions.
///
/// Solutions are stored fully abstracted over the variable's spine, so
/// substituting never needs index shifting.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    map: BTreeMap<VarId, Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot unify `{left}` with `{right}`: different heads")]
    Clash { left: String, right: String },
    #[error("variable {var} occurs in `{term}`")]
    OccursCheck { var: VarId, term: String },
    #[error("bound variable #{index} would escape its scope")]
    Escape { index: usize },
    #[error("`{term}` lies outside the pattern fragment")]
    OutsidePatternFragment { term: String },
    #[error("terms are not well-scoped at depth {depth}")]
    DepthMismatch { depth: usize },
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

impl UnifyError {
    /// True for failures that prove the problem has no unifier, as opposed to
    /// the algorithm declining it.
    pub fn is_genuine_failure(&self) -> bool {
        matches!(self, UnifyError::Clash { .. } | UnifyError::OccursCheck { .. } | UnifyError::Escape { .. })
    }
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn get(&self, id: VarId) -> Option<&Term> {
        self.map.get(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.map.iter().map(|(k, v)| (*k, v))
    }

    /// Inserts without composing; the caller keeps the map idempotent.
    pub fn insert(&mut self, id: VarId, solution: Term) {
        self.map.insert(id, solution);
    }

    /// Replaces every mapped variable, then β-normalises.
    pub fn apply(&self, t: &Term) -> Result<Term, NormalizeError> {
        self.apply_with(t, DEFAULT_FUEL)
    }

    pub fn apply_with(&self, t: &Term, fuel: usize) -> Result<Term, NormalizeError> {
        if self.map.is_empty() {
            return t.normalize_with(fuel);
        }
        self.replace(t).normalize_with(fuel)
    }

    fn replace(&self, t: &Term) -> Term {
        match t {
            Term::UnifVar(v) => match self.map.get(v) {
                Some(s) => s.clone(),
                None => t.clone(),
            },
            Term::Bound(_) | Term::Const(_) => t.clone(),
            Term::App(f, a) => Term::app(self.replace(f), self.replace(a)),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(self.replace(b))),
        }
    }

    /// `compose(outer, inner)` behaves as applying `inner` first, then `outer`.
    pub fn compose(outer: &Substitution, inner: &Substitution) -> Result<Substitution, UnifyError> {
        Self::compose_with(outer, inner, DEFAULT_FUEL)
    }

    pub fn compose_with(outer: &Substitution, inner: &Substitution, fuel: usize) -> Result<Substitution, UnifyError> {
        let mut map = BTreeMap::new();
        for (id, t) in &inner.map {
            map.insert(*id, outer.apply_with(t, fuel)?);
        }
        for (id, t) in &outer.map {
            map.entry(*id).or_insert_with(|| t.clone());
        }
        for (id, t) in &map {
            if t.mentions_var(*id) {
                return Err(UnifyError::OccursCheck { var: *id, term: format!("{t:?}") });
            }
        }
        Ok(Substitution { map })
    }

    /// Adds `id ↦ solution`, rewriting existing entries so the map stays
    /// idempotent. `solution` must already be normal with respect to `self`.
    fn extend(&mut self, id: VarId, solution: Term, fuel: usize) -> Result<(), NormalizeError> {
        let single = Substitution { map: BTreeMap::from([(id, solution.clone())]) };
        for t in self.map.values_mut() {
            if t.mentions_var(id) {
                *t = single.apply_with(t, fuel)?;
            }
        }
        self.map.insert(id, solution);
        Ok(())
    }

    /// True if applying the substitution twice equals applying it once.
    pub fn is_idempotent(&self) -> bool {
        self.map.values().all(|t| t.unif_vars().iter().all(|v| !self.map.contains_key(v)))
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (id, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{id} ↦ {t:?}")?;
        }
        f.write_str("}")
    }
}

/// True iff every unification variable in `t` is applied to distinct bound
/// variables (up to η).
pub fn is_pattern(t: &Term) -> bool {
    match t {
        Term::Lam(_, b) => is_pattern(b),
        _ => {
            let (head, args) = t.spine();
            match head {
                Term::UnifVar(_) => pattern_spine(&args).is_some(),
                Term::Lam(_, b) => is_pattern(b) && args.iter().all(|a| is_pattern(a)),
                _ => args.iter().all(|a| is_pattern(a)),
            }
        }
    }
}

/// Bound-variable indices of a pattern spine, or `None` if some argument is
/// not a bound variable or a variable repeats.
fn pattern_spine(args: &[&Term]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(args.len());
    for a in args {
        match a.eta_contract() {
            Term::Bound(i) if !out.contains(&i) => out.push(i),
            _ => return None,
        }
    }
    Some(out)
}

/// Unifies `t` and `u`, both well-scoped at `depth`, with the default budget.
pub fn unify(t: &Term, u: &Term, depth: usize, fresh: &mut FreshIds) -> Result<Substitution, UnifyError> {
    Unifier::new(fresh).unify(t, u, depth)
}

/// Stateful unifier; accumulates the substitution across several pairs.
pub struct Unifier<'a> {
    fresh: &'a mut FreshIds,
    fuel: usize,
    subst: Substitution,
}

impl<'a> Unifier<'a> {
    pub fn new(fresh: &'a mut FreshIds) -> Self {
        Unifier { fresh, fuel: DEFAULT_FUEL, subst: Substitution::new() }
    }

    pub fn with_fuel(mut self, fuel: usize) -> Self {
        self.fuel = fuel;
        self
    }

    /// Starts from an existing (idempotent) substitution.
    pub fn with_subst(mut self, subst: Substitution) -> Self {
        self.subst = subst;
        self
    }

    pub fn unify(mut self, t: &Term, u: &Term, depth: usize) -> Result<Substitution, UnifyError> {
        self.add(t, u, depth)?;
        Ok(self.subst)
    }

    /// Unifies one more pair under the substitution gathered so far.
    pub fn add(&mut self, t: &Term, u: &Term, depth: usize) -> Result<(), UnifyError> {
        if t.scope_depth() > depth || u.scope_depth() > depth {
            return Err(UnifyError::DepthMismatch { depth });
        }
        self.go(t, u)
    }

    pub fn finish(self) -> Substitution {
        self.subst
    }

    fn resolve(&self, t: &Term) -> Result<Term, UnifyError> {
        Ok(self.subst.apply_with(t, self.fuel)?)
    }

    fn go(&mut self, t: &Term, u: &Term) -> Result<(), UnifyError> {
        let t = self.resolve(t)?;
        let u = self.resolve(u)?;
        if t == u {
            return Ok(());
        }
        match (t, u) {
            (Term::Lam(_, b1), Term::Lam(_, b2)) => self.go(&b1, &b2),
            (Term::Lam(_, b), other) | (other, Term::Lam(_, b)) => {
                let expanded = Term::app(other.shift_up(1, 0), Term::Bound(0));
                self.go(&b, &expanded)
            }
            (t, u) => {
                let (h1, a1) = unspine(t.clone());
                let (h2, a2) = unspine(u.clone());
                match (&h1, &h2) {
                    (Term::UnifVar(f), Term::UnifVar(g)) => self.flex_flex(*f, &a1, *g, &a2, &t, &u),
                    (Term::UnifVar(f), _) => self.flex_rigid(*f, &a1, &t, &u),
                    (_, Term::UnifVar(g)) => self.flex_rigid(*g, &a2, &u, &t),
                    _ => {
                        if !same_rigid_head(&h1, &h2) || a1.len() != a2.len() {
                            return Err(UnifyError::Clash { left: format!("{t:?}"), right: format!("{u:?}") });
                        }
                        for (x, y) in a1.iter().zip(&a2) {
                            self.go(x, y)?;
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    fn spine_of(args: &[Term], whole: &Term) -> Result<Vec<usize>, UnifyError> {
        let refs: Vec<&Term> = args.iter().collect();
        pattern_spine(&refs).ok_or_else(|| UnifyError::OutsidePatternFragment { term: format!("{whole:?}") })
    }

    fn flex_rigid(&mut self, f: VarId, args: &[Term], flex: &Term, rigid: &Term) -> Result<(), UnifyError> {
        let spine = Self::spine_of(args, flex)?;
        if rigid.mentions_var(f) {
            return Err(UnifyError::OccursCheck { var: f, term: format!("{rigid:?}") });
        }
        let body = self.abstract_over(rigid, &spine, 0)?;
        // Pruning inside later arguments can instantiate variables already
        // copied into the body.
        let solution = self.resolve(&Term::lams(&binder_hints(spine.len()), body))?;
        self.subst.extend(f, solution, self.fuel)?;
        Ok(())
    }

    /// Re-expresses `t` (at the flexible side's depth plus `local` binders) in
    /// terms of the spine positions, pruning variables that cannot be reached.
    fn abstract_over(&mut self, t: &Term, spine: &[usize], local: usize) -> Result<Term, UnifyError> {
        let n = spine.len();
        match t {
            Term::Bound(i) if *i < local => Ok(t.clone()),
            Term::Bound(i) => match spine.iter().position(|x| *x == i - local) {
                Some(pos) => Ok(Term::Bound(local + n - 1 - pos)),
                None => Err(UnifyError::Escape { index: i - local }),
            },
            Term::Const(_) => Ok(t.clone()),
            Term::Lam(h, b) => Ok(Term::Lam(h.clone(), Box::new(self.abstract_over(b, spine, local + 1)?))),
            Term::UnifVar(_) | Term::App(..) => {
                let (head, args) = t.spine();
                if let Term::UnifVar(g) = head {
                    return self.abstract_flex(*g, &args.into_iter().cloned().collect::<Vec<_>>(), t, spine, local);
                }
                let mut out = self.abstract_over(head, spine, local)?;
                for a in args {
                    // Earlier pruning may have instantiated variables in later arguments.
                    let a = self.resolve(a)?;
                    out = Term::app(out, self.abstract_over(&a, spine, local)?);
                }
                Ok(out)
            }
        }
    }

    fn abstract_flex(&mut self, g: VarId, args: &[Term], whole: &Term, spine: &[usize], local: usize) -> Result<Term, UnifyError> {
        let g_spine = Self::spine_of(args, whole)?;
        let reachable = |i: &usize| *i < local || spine.contains(&(i - local));
        if !g_spine.iter().all(reachable) {
            // Prune: g ↦ λ ys. h (ys ∩ reachable)
            let m = g_spine.len();
            let keep: Vec<usize> = (0..m).filter(|p| reachable(&g_spine[*p])).collect();
            let h = self.fresh.fresh();
            let body = Term::apps(Term::UnifVar(h), keep.iter().map(|p| Term::Bound(m - 1 - p)));
            let solution = Term::lams(&binder_hints(m), body);
            self.subst.extend(g, solution, self.fuel)?;
            let pruned = Term::apps(Term::UnifVar(h), keep.iter().map(|p| Term::Bound(g_spine[*p])));
            return self.abstract_over(&pruned, spine, local);
        }
        let mut out = Term::UnifVar(g);
        for i in g_spine {
            out = Term::app(out, self.abstract_over(&Term::Bound(i), spine, local)?);
        }
        Ok(out)
    }

    fn flex_flex(&mut self, f: VarId, a1: &[Term], g: VarId, a2: &[Term], t: &Term, u: &Term) -> Result<(), UnifyError> {
        let xs = Self::spine_of(a1, t)?;
        let ys = Self::spine_of(a2, u)?;
        let n = xs.len();
        let m = ys.len();
        if f == g {
            // Applying one normal term to spines of different lengths leaves
            // results that differ in λ-prefix or spine length, so no solution.
            if n != m {
                return Err(UnifyError::OccursCheck { var: f, term: format!("{t:?} =?= {u:?}") });
            }
            let keep: Vec<usize> = (0..n).filter(|p| xs[*p] == ys[*p]).collect();
            if keep.len() == n {
                return Ok(());
            }
            let h = self.fresh.fresh();
            let body = Term::apps(Term::UnifVar(h), keep.iter().map(|p| Term::Bound(n - 1 - p)));
            self.subst.extend(f, Term::lams(&binder_hints(n), body), self.fuel)?;
            return Ok(());
        }
        // Common variables, in the order they appear in the first spine.
        let common: Vec<(usize, usize)> =
            xs.iter().enumerate().filter_map(|(p, x)| ys.iter().position(|y| y == x).map(|q| (p, q))).collect();
        let h = self.fresh.fresh();
        let f_body = Term::apps(Term::UnifVar(h), common.iter().map(|(p, _)| Term::Bound(n - 1 - p)));
        let g_body = Term::apps(Term::UnifVar(h), common.iter().map(|(_, q)| Term::Bound(m - 1 - q)));
        self.subst.extend(f, Term::lams(&binder_hints(n), f_body), self.fuel)?;
        let g_solution = self.resolve(&Term::lams(&binder_hints(m), g_body))?;
        self.subst.extend(g, g_solution, self.fuel)?;
        Ok(())
    }
}

fn same_rigid_head(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::Const(x), Term::Const(y)) => x == y,
        (Term::Bound(i), Term::Bound(j)) => i == j,
        _ => false,
    }
}

fn binder_hints(n: usize) -> Vec<Name> {
    (0..n).map(|i| Name::from(format!("x{i}"))).collect()
}

/// Applies `s` to `t` with the default budget.
pub fn apply_subst(s: &Substitution, t: &Term) -> Result<Term, NormalizeError> {
    s.apply(t)
}

/// Composition; see [`Substitution::compose`].
pub fn compose(outer: &Substitution, inner: &Substitution) -> Result<Substitution, UnifyError> {
    Substitution::compose(outer, inner)
}
