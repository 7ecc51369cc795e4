//! Untyped λ-terms with nameless bound variables.
//!
//! Bound variables are de Bruijn indices; the hint on a [`Term::Lam`] is only
//! used for display and never takes part in equality. Unification variables
//! are proof-global and applied to their spine through ordinary `App` nodes.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Shared, cheaply clonable identifier text.
pub type Name = Arc<str>;

/// Default β-reduction budget.
pub const DEFAULT_FUEL: usize = 10_000;

/// Maximum nesting of the normaliser before it gives up.
///
/// Untyped terms such as `Y ~` grow by one constructor per step; without a
/// nesting cap they would exhaust the native stack well before the step
/// budget runs out.
const MAX_NORMALIZE_DEPTH: usize = 500;

/// Identifier of a unification (schematic) variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub enum Term {
    /// Nameless bound variable; `0` is the innermost binder.
    Bound(usize),
    Const(Name),
    UnifVar(VarId),
    App(Box<Term>, Box<Term>),
    /// Abstraction with a display hint for its binder.
    Lam(Name, Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("shift would make bound index {index} negative")]
    NegativeIndex { index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("reduction budget exhausted after {steps} steps (the term may diverge)")]
    FuelExhausted { steps: usize },
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Term::Bound(i), Term::Bound(j)) => i == j,
            (Term::Const(a), Term::Const(b)) => a == b,
            (Term::UnifVar(a), Term::UnifVar(b)) => a == b,
            (Term::App(f, a), Term::App(g, b)) => f == g && a == b,
            (Term::Lam(_, a), Term::Lam(_, b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Term {}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Name::from(name))
    }

    pub fn var(id: u32) -> Term {
        Term::UnifVar(VarId(id))
    }

    pub fn app(fun: Term, arg: Term) -> Term {
        Term::App(Box::new(fun), Box::new(arg))
    }

    /// Left-nested application of `head` to every element of `args`.
    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn lam(hint: &str, body: Term) -> Term {
        Term::Lam(Name::from(hint), Box::new(body))
    }

    /// `n` nested abstractions over `body`, all sharing `hint`.
    pub fn lams(hints: &[Name], body: Term) -> Term {
        hints.iter().rev().fold(body, |b, h| Term::Lam(h.clone(), Box::new(b)))
    }

    /// Splits an application into its head and argument list.
    pub fn spine(&self) -> (&Term, Vec<&Term>) {
        let mut args = Vec::new();
        let mut head = self;
        while let Term::App(f, a) = head {
            args.push(&**a);
            head = f;
        }
        args.reverse();
        (head, args)
    }

    pub fn head(&self) -> &Term {
        let mut head = self;
        while let Term::App(f, _) = head {
            head = f;
        }
        head
    }

    pub fn is_lam(&self) -> bool {
        matches!(self, Term::Lam(..))
    }

    /// Shifts every free index `>= cutoff` by `amount`.
    pub fn shift(&self, amount: isize, cutoff: usize) -> Result<Term, TermError> {
        match self {
            Term::Bound(i) if *i >= cutoff => {
                let shifted = *i as isize + amount;
                if shifted < cutoff as isize {
                    // Would collide with (or escape below) a binder inside the cutoff.
                    return Err(TermError::NegativeIndex { index: *i });
                }
                Ok(Term::Bound(shifted as usize))
            }
            Term::Bound(_) | Term::Const(_) | Term::UnifVar(_) => Ok(self.clone()),
            Term::App(f, a) => Ok(Term::app(f.shift(amount, cutoff)?, a.shift(amount, cutoff)?)),
            Term::Lam(h, b) => Ok(Term::Lam(h.clone(), Box::new(b.shift(amount, cutoff + 1)?))),
        }
    }

    /// Infallible upward shift.
    pub fn shift_up(&self, amount: usize, cutoff: usize) -> Term {
        if amount == 0 {
            return self.clone();
        }
        match self {
            Term::Bound(i) if *i >= cutoff => Term::Bound(i + amount),
            Term::Bound(_) | Term::Const(_) | Term::UnifVar(_) => self.clone(),
            Term::App(f, a) => Term::app(f.shift_up(amount, cutoff), a.shift_up(amount, cutoff)),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.shift_up(amount, cutoff + 1))),
        }
    }

    /// Substitutes `arg` for index 0 of `self` (the body of an abstraction),
    /// lowering the remaining free indices by one.
    pub fn instantiate_bound(&self, arg: &Term) -> Term {
        self.subst_at(0, arg)
    }

    fn subst_at(&self, level: usize, arg: &Term) -> Term {
        match self {
            Term::Bound(i) if *i == level => arg.shift_up(level, 0),
            Term::Bound(i) if *i > level => Term::Bound(i - 1),
            Term::Bound(_) | Term::Const(_) | Term::UnifVar(_) => self.clone(),
            Term::App(f, a) => Term::app(f.subst_at(level, arg), a.subst_at(level, arg)),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.subst_at(level + 1, arg))),
        }
    }

    /// Rewrites a block of `images.len()` binders sitting directly above
    /// `cutoff`. Binder `p` (outermost first) becomes `images[p]`.
    ///
    /// `kept` is the number of binders that remain in the block afterwards;
    /// [`BinderImage::Keep`] positions refer to them, and substituted terms
    /// (scoped outside the whole block) are lifted over them.
    pub fn replace_binders(&self, images: &[BinderImage], kept: usize, cutoff: usize) -> Term {
        let m = images.len();
        match self {
            Term::Bound(i) if *i < cutoff => self.clone(),
            Term::Bound(i) if *i < cutoff + m => match &images[m - 1 - (i - cutoff)] {
                BinderImage::Term(t) => t.shift_up(cutoff + kept, 0),
                BinderImage::Keep(q) => Term::Bound(cutoff + (kept - 1 - q)),
            },
            Term::Bound(i) => Term::Bound(i - m + kept),
            Term::Const(_) | Term::UnifVar(_) => self.clone(),
            Term::App(f, a) => Term::app(f.replace_binders(images, kept, cutoff), a.replace_binders(images, kept, cutoff)),
            Term::Lam(h, b) => Term::Lam(h.clone(), Box::new(b.replace_binders(images, kept, cutoff + 1))),
        }
    }

    /// Substitutes the innermost `args.len()` free variables; `args[0]` is the
    /// outermost of them. The arguments are scoped outside the block.
    pub fn instantiate_many(&self, args: &[Term], cutoff: usize) -> Term {
        let images: Vec<_> = args.iter().cloned().map(BinderImage::Term).collect();
        self.replace_binders(&images, 0, cutoff)
    }

    /// The smallest context depth under which the term is well-scoped.
    pub fn scope_depth(&self) -> usize {
        fn go(t: &Term, local: usize) -> usize {
            match t {
                Term::Bound(i) if *i >= local => i - local + 1,
                Term::Bound(_) | Term::Const(_) | Term::UnifVar(_) => 0,
                Term::App(f, a) => go(f, local).max(go(a, local)),
                Term::Lam(_, b) => go(b, local + 1),
            }
        }
        go(self, 0)
    }

    /// Free bound-variable indices, relative to the term's root.
    pub fn free_bound(&self) -> BTreeSet<usize> {
        fn go(t: &Term, local: usize, out: &mut BTreeSet<usize>) {
            match t {
                Term::Bound(i) if *i >= local => {
                    out.insert(i - local);
                }
                Term::Bound(_) | Term::Const(_) | Term::UnifVar(_) => {}
                Term::App(f, a) => {
                    go(f, local, out);
                    go(a, local, out);
                }
                Term::Lam(_, b) => go(b, local + 1, out),
            }
        }
        let mut out = BTreeSet::new();
        go(self, 0, &mut out);
        out
    }

    pub fn has_free(&self, index: usize) -> bool {
        match self {
            Term::Bound(i) => *i == index,
            Term::Const(_) | Term::UnifVar(_) => false,
            Term::App(f, a) => f.has_free(index) || a.has_free(index),
            Term::Lam(_, b) => b.has_free(index + 1),
        }
    }

    pub fn unif_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            Term::UnifVar(v) => {
                out.insert(*v);
            }
            Term::Bound(_) | Term::Const(_) => {}
            Term::App(f, a) => {
                f.collect_vars(out);
                a.collect_vars(out);
            }
            Term::Lam(_, b) => b.collect_vars(out),
        }
    }

    pub fn mentions_var(&self, id: VarId) -> bool {
        match self {
            Term::UnifVar(v) => *v == id,
            Term::Bound(_) | Term::Const(_) => false,
            Term::App(f, a) => f.mentions_var(id) || a.mentions_var(id),
            Term::Lam(_, b) => b.mentions_var(id),
        }
    }

    pub fn mentions_const(&self, name: &str) -> bool {
        match self {
            Term::Const(c) => &**c == name,
            Term::Bound(_) | Term::UnifVar(_) => false,
            Term::App(f, a) => f.mentions_const(name) || a.mentions_const(name),
            Term::Lam(_, b) => b.mentions_const(name),
        }
    }

    /// True if the term contains no β-redex.
    pub fn is_normal(&self) -> bool {
        match self {
            Term::App(f, a) => !f.is_lam() && f.is_normal() && a.is_normal(),
            Term::Lam(_, b) => b.is_normal(),
            _ => true,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::App(f, a) => 1 + f.size() + a.size(),
            Term::Lam(_, b) => 1 + b.size(),
            _ => 1,
        }
    }

    /// β-normal form with the default budget.
    pub fn normalize(&self) -> Result<Term, NormalizeError> {
        self.normalize_with(DEFAULT_FUEL)
    }

    /// β-normal form by leftmost-outermost reduction, giving up after `fuel`
    /// contractions.
    pub fn normalize_with(&self, fuel: usize) -> Result<Term, NormalizeError> {
        let mut budget = Budget { fuel, used: 0 };
        budget.normalize(self.clone(), 0)
    }

    /// Contracts every η-redex `(x. f x)` with `x` not free in `f`.
    pub fn eta_contract(&self) -> Term {
        match self {
            Term::Lam(h, body) => {
                let body = body.eta_contract();
                if let Term::App(f, a) = &body {
                    if matches!(**a, Term::Bound(0)) && !f.has_free(0) {
                        if let Ok(f) = f.shift(-1, 0) {
                            return f;
                        }
                    }
                }
                Term::Lam(h.clone(), Box::new(body))
            }
            Term::App(f, a) => Term::app(f.eta_contract(), a.eta_contract()),
            _ => self.clone(),
        }
    }

    /// β-normal, η-short form.
    pub fn canonical(&self, fuel: usize) -> Result<Term, NormalizeError> {
        Ok(self.normalize_with(fuel)?.eta_contract())
    }
}

/// What a rewritten binder turns into; see [`Term::replace_binders`].
#[derive(Clone, Debug)]
pub enum BinderImage {
    Term(Term),
    Keep(usize),
}

struct Budget {
    fuel: usize,
    used: usize,
}

impl Budget {
    fn exhausted(&self) -> NormalizeError {
        NormalizeError::FuelExhausted { steps: self.used }
    }

    fn normalize(&mut self, term: Term, depth: usize) -> Result<Term, NormalizeError> {
        if depth > MAX_NORMALIZE_DEPTH {
            return Err(self.exhausted());
        }
        let mut term = term;
        loop {
            match term {
                Term::Lam(h, body) => {
                    return Ok(Term::Lam(h, Box::new(self.normalize(*body, depth + 1)?)));
                }
                Term::App(..) => {
                    let (head, mut args) = unspine(term);
                    if let Term::Lam(_, body) = head {
                        if self.used == self.fuel {
                            return Err(self.exhausted());
                        }
                        self.used += 1;
                        let first = args.remove(0);
                        term = Term::apps(body.instantiate_bound(&first), args);
                        continue;
                    }
                    let mut out = head;
                    for arg in args {
                        out = Term::app(out, self.normalize(arg, depth + 1)?);
                    }
                    return Ok(out);
                }
                other => return Ok(other),
            }
        }
    }
}

/// Owned counterpart of [`Term::spine`].
pub(crate) fn unspine(term: Term) -> (Term, Vec<Term>) {
    let mut args = Vec::new();
    let mut head = term;
    while let Term::App(f, a) = head {
        args.push(*a);
        head = *f;
    }
    args.reverse();
    (head, args)
}

/// Decides αβη-equality: both sides are normalised, η-contracted, and then
/// compared up to renaming of binder hints.
pub fn alpha_beta_eta_equal(t: &Term, u: &Term, fuel: usize) -> Result<bool, NormalizeError> {
    Ok(t.canonical(fuel)? == u.canonical(fuel)?)
}
