//! Derived rules for inductive definitions.
//!
//! From the introduction rules of one or more judgments we build a
//! case-analysis (inversion) rule and an induction rule per judgment. For
//! `zero: 0 ℕ` and `suc: n. n ℕ |- S n ℕ` these are
//!
//! ```text
//! cases(_ℕ):     P x. x ℕ, [x = 0 |- P], [n. x = (S n), n ℕ |- P] |- P
//! induction(_ℕ): P x. x ℕ, P 0, [n. P n, n ℕ |- P (S n)] |- P x
//! ```
//!
//! Judgments whose introduction rules mention each other get simultaneous
//! induction rules with one motive per judgment in the group.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rule::{NamedRule, Rule, RuleKind};
use crate::term::{Name, Term};

/// A judgment constant and the number of arguments it takes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub name: String,
    pub arity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InductiveDef {
    pub judgments: Vec<Judgment>,
    pub intros: Vec<NamedRule>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InductionError {
    #[error("`{0}` is not a judgment of this definition")]
    UnknownJudgment(String),
    #[error("conclusion of `{0}` is not headed by a judgment of this definition")]
    NotAnIntro(String),
    #[error("`{rule}` applies `{judgment}` to {found} arguments, expected {expected}")]
    ArityMismatch { rule: String, judgment: String, expected: usize, found: usize },
    #[error("`{judgment}` occurs in a non-positive position in `{rule}`")]
    PositivityViolation { rule: String, judgment: String },
}

pub fn cases_name(judgment: &str) -> String {
    format!("cases({judgment})")
}

pub fn induction_name(judgment: &str) -> String {
    format!("induction({judgment})")
}

impl InductiveDef {
    pub fn new(judgments: Vec<Judgment>, intros: Vec<NamedRule>) -> Self {
        InductiveDef { judgments, intros }
    }

    fn position(&self, name: &str) -> Option<usize> {
        self.judgments.iter().position(|j| j.name == name)
    }

    /// The judgment heading `t` with its arguments, if any.
    fn judgment_of<'t>(&self, t: &'t Term) -> Option<(usize, Vec<&'t Term>)> {
        let (head, args) = t.spine();
        match head {
            Term::Const(c) => self.position(c).map(|j| (j, args)),
            _ => None,
        }
    }

    fn mentions_judgment(&self, t: &Term) -> Option<&str> {
        self.judgments.iter().map(|j| j.name.as_str()).find(|j| t.mentions_const(j))
    }

    fn rule_mentions_judgment(&self, r: &Rule) -> Option<&str> {
        self.judgments.iter().map(|j| j.name.as_str()).find(|j| r.mentions_const(j))
    }

    /// Checks that every intro concludes a judgment with the right arity and
    /// that judgments occur in premises only as the head of a premise's
    /// conclusion.
    pub fn validate(&self) -> Result<(), InductionError> {
        for intro in &self.intros {
            let name = &intro.name;
            let (j, args) = self.judgment_of(&intro.rule.conclusion).ok_or_else(|| InductionError::NotAnIntro(name.clone()))?;
            self.check_arity(name, j, args.len())?;
            let violation = |judgment: &str| InductionError::PositivityViolation { rule: name.clone(), judgment: judgment.to_string() };
            if let Some(bad) = args.iter().find_map(|a| self.mentions_judgment(a)) {
                return Err(violation(bad));
            }
            for p in &intro.rule.premises {
                if let Some(bad) = p.premises.iter().find_map(|q| self.rule_mentions_judgment(q)) {
                    return Err(violation(bad));
                }
                match self.judgment_of(&p.conclusion) {
                    Some((k, args)) => {
                        self.check_arity(name, k, args.len())?;
                        if let Some(bad) = args.iter().find_map(|a| self.mentions_judgment(a)) {
                            return Err(violation(bad));
                        }
                    }
                    None => {
                        if let Some(bad) = self.mentions_judgment(&p.conclusion) {
                            return Err(violation(bad));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn check_arity(&self, rule: &str, judgment: usize, found: usize) -> Result<(), InductionError> {
        let j = &self.judgments[judgment];
        if j.arity != found {
            return Err(InductionError::ArityMismatch { rule: rule.to_string(), judgment: j.name.clone(), expected: j.arity, found });
        }
        Ok(())
    }

    fn intros_of(&self, judgment: usize) -> impl Iterator<Item = &NamedRule> {
        self.intros.iter().filter(move |r| self.judgment_of(&r.rule.conclusion).map(|(j, _)| j) == Some(judgment))
    }

    /// Judgments reachable from `judgment` through recursive premises,
    /// in declaration order.
    fn group(&self, judgment: usize) -> Vec<usize> {
        let mut seen = BTreeSet::from([judgment]);
        let mut todo = vec![judgment];
        while let Some(j) = todo.pop() {
            for intro in self.intros_of(j) {
                for p in &intro.rule.premises {
                    if let Some((k, _)) = self.judgment_of(&p.conclusion) {
                        if seen.insert(k) {
                            todo.push(k);
                        }
                    }
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Cases rule for `judgment`; see the module documentation.
    pub fn synthesize_cases(&self, judgment: &str) -> Result<NamedRule, InductionError> {
        self.validate()?;
        let j = self.position(judgment).ok_or_else(|| InductionError::UnknownJudgment(judgment.to_string()))?;
        let m = self.judgments[j].arity;
        let mut binders: Vec<Name> = vec![Name::from("P")];
        binders.extend(argument_names(m));
        let mut premises = vec![Rule::fact(judgment_applied(judgment, m, 0))];
        for intro in self.intros_of(j) {
            let r = &intro.rule;
            let k = r.binders.len();
            let (_, args) = r.conclusion.spine();
            let mut branch: Vec<Rule> = args
                .iter()
                .enumerate()
                .map(|(i, t)| Rule::fact(Term::apps(Term::constant(crate::EQUALS), [Term::Bound(k + m - 1 - i), (*t).clone()])))
                .collect();
            branch.extend(r.premises.iter().cloned());
            premises.push(Rule { binders: r.binders.clone(), premises: branch, conclusion: Term::Bound(k + m) });
        }
        let rule = Rule { binders, premises, conclusion: Term::Bound(m) };
        Ok(NamedRule::new(cases_name(judgment), rule, RuleKind::DerivedCases))
    }

    /// Induction rules for every judgment, in declaration order.
    pub fn synthesize_induction(&self) -> Result<Vec<NamedRule>, InductionError> {
        self.validate()?;
        (0..self.judgments.len()).map(|j| self.induction_for(j)).collect()
    }

    fn induction_for(&self, j: usize) -> Result<NamedRule, InductionError> {
        let judgment = &self.judgments[j].name;
        let group = self.group(j);
        let g = group.len();
        let m = self.judgments[j].arity;
        let motive_names: Vec<Name> = if g == 1 {
            vec![Name::from("P")]
        } else {
            group.iter().map(|k| Name::from(format!("P_{}", self.judgments[*k].name.trim_matches('_')))).collect()
        };
        // Index of the motive for judgment `k` under `extra` binders below the
        // rule's own.
        let motive = |k: usize, extra: usize| -> Term {
            let slot = group.iter().position(|x| *x == k).expect("judgment in group");
            Term::Bound(extra + m + g - 1 - slot)
        };
        let mut binders = motive_names;
        binders.extend(argument_names(m));
        let mut premises = vec![Rule::fact(judgment_applied(judgment, m, 0))];
        for &owner in &group {
            for intro in self.intros_of(owner) {
                let r = &intro.rule;
                let k = r.binders.len();
                let mut branch = Vec::new();
                for p in &r.premises {
                    if let Some((q, args)) = self.judgment_of(&p.conclusion) {
                        let inner = p.binders.len();
                        let ih = Term::apps(motive(q, k + inner), args.into_iter().cloned());
                        branch.push(Rule { binders: p.binders.clone(), premises: p.premises.clone(), conclusion: ih });
                    }
                    branch.push(p.clone());
                }
                let (_, args) = r.conclusion.spine();
                let conclusion = Term::apps(motive(owner, k), args.into_iter().cloned());
                premises.push(Rule { binders: r.binders.clone(), premises: branch, conclusion });
            }
        }
        let conclusion = Term::apps(motive(j, 0), (0..m).rev().map(Term::Bound));
        let rule = Rule { binders, premises, conclusion };
        Ok(NamedRule::new(induction_name(judgment), rule, RuleKind::DerivedInduction))
    }

    /// Cases then induction rule for each judgment, in declaration order.
    pub fn derived_rules(&self) -> Result<Vec<NamedRule>, InductionError> {
        self.validate()?;
        let mut out = Vec::new();
        for (j, judgment) in self.judgments.iter().enumerate() {
            out.push(self.synthesize_cases(&judgment.name)?);
            out.push(self.induction_for(j)?);
        }
        Ok(out)
    }
}

fn argument_names(m: usize) -> Vec<Name> {
    if m == 1 {
        vec![Name::from("x")]
    } else {
        (1..=m).map(|i| Name::from(format!("x{i}"))).collect()
    }
}

/// `judgment x1 .. xm` where the arguments are the innermost `m` binders
/// below `extra` further ones.
fn judgment_applied(judgment: &str, m: usize, extra: usize) -> Term {
    Term::apps(Term::constant(judgment), (0..m).rev().map(|i| Term::Bound(extra + i)))
}
