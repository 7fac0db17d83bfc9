//! Quantifier elimination over `(N, +)`.
//!
//! `∃x φ` over the naturals is treated as `∃x ∈ Z (x >= 0 ∧ φ)` and
//! eliminated with Cooper's method. Because `x >= 0` is a top-level lower
//! bound the "minus infinity" disjunct is always false and drops out.
//! Counting quantifiers are handed to [`crate::counting`].

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::formula::Formula;
use crate::linear::{Atom, Lin, Qf};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QeError {
    #[error("formula has free variables: {0:?}")]
    FreeVariablesPresent(Vec<String>),
}

/// A formula that is guaranteed to be quantifier-free and counting-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QfFormula(Formula);

impl QfFormula {
    /// Wrap a formula, returning `None` if it has quantifiers.
    pub fn new(f: Formula) -> Option<QfFormula> {
        f.is_quantifier_free().then_some(QfFormula(f))
    }

    pub fn formula(&self) -> &Formula {
        &self.0
    }

    pub fn into_formula(self) -> Formula {
        self.0
    }
}

impl fmt::Display for QfFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<QfFormula> for Formula {
    fn from(q: QfFormula) -> Formula {
        q.0
    }
}

/// Equivalent quantifier-free formula.
pub fn eliminate(f: &Formula) -> QfFormula {
    QfFormula(to_qf(f).to_formula())
}

/// Eliminate into the internal normal form.
pub fn to_qf(f: &Formula) -> Qf {
    qe(f, true)
}

/// Truth value of a sentence.
pub fn decide(f: &Formula) -> Result<bool, QeError> {
    let free = f.free_vars();
    if !free.is_empty() {
        return Err(QeError::FreeVariablesPresent(free.into_iter().collect()));
    }
    Ok(decide_closed(f))
}

/// Truth value of a formula known to be closed.
pub(crate) fn decide_closed(f: &Formula) -> bool {
    match to_qf(f) {
        Qf::True => true,
        Qf::False => false,
        other => panic!("closed formula reduced to non-constant {other:?}"),
    }
}

/// Universal closure of `f`.
pub fn closure(f: Formula) -> Formula {
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    Formula::forall_many(&vars, f)
}

/// Do `f` and `g` agree on every assignment over N?
pub fn equivalent(f: &Formula, g: &Formula) -> bool {
    decide_closed(&closure(Formula::iff(f.clone(), g.clone())))
}

/// Is `f` true under every assignment?
pub fn valid(f: &Formula) -> bool {
    decide_closed(&closure(f.clone()))
}

/// Is `f` true under some assignment?
pub fn satisfiable(f: &Formula) -> bool {
    let vars: Vec<String> = f.free_vars().into_iter().collect();
    decide_closed(&Formula::exists_many(&vars, f.clone()))
}

fn qe(f: &Formula, pos: bool) -> Qf {
    let flip = |q: Qf| if pos { q } else { q.negate() };
    match f {
        Formula::True
        | Formula::False
        | Formula::Eq(..)
        | Formula::Lt(..)
        | Formula::Le(..)
        | Formula::CongMod(..) => Qf::from_formula(f).map(flip).expect("atom"),
        Formula::Not(g) => qe(g, !pos),
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (x, y) = (qe(a, pos), qe(b, pos));
            if matches!(f, Formula::And(..)) == pos {
                Qf::and2(x, y)
            } else {
                Qf::or2(x, y)
            }
        }
        Formula::Implies(a, b) => {
            let (x, y) = (qe(a, !pos), qe(b, pos));
            if pos {
                Qf::or2(x, y)
            } else {
                Qf::and2(x, y)
            }
        }
        Formula::Iff(a, b) => {
            let (ap, bp) = (qe(a, true), qe(b, true));
            let (an, bn) = (ap.negate(), bp.negate());
            if pos {
                Qf::or2(Qf::and2(ap, bp), Qf::and2(an, bn))
            } else {
                Qf::or2(Qf::and2(ap, bn), Qf::and2(an, bp))
            }
        }
        Formula::Exists(v, body) => flip(exists(v, &qe(body, true))),
        Formula::Forall(v, body) => {
            let q = exists(v, &qe(body, false));
            if pos {
                q.negate()
            } else {
                q
            }
        }
        Formula::Count { count, bound, body } => {
            flip(crate::counting::eliminate_count_qf(count, bound, &qe(body, true)))
        }
    }
}

/// `∃x ∈ N. phi` for quantifier-free `phi`.
pub fn exists(x: &str, phi: &Qf) -> Qf {
    match phi {
        _ if !phi.mentions(x) => phi.clone(),
        Qf::Or(items) => Qf::or(items.iter().map(|d| exists(x, d)).collect()),
        Qf::And(items) => {
            let (with, without): (Vec<Qf>, Vec<Qf>) = items.iter().cloned().partition(|c| c.mentions(x));
            let mut out = without;
            out.push(exists_core(x, with));
            Qf::and(out)
        }
        _ => exists_core(x, vec![phi.clone()]),
    }
}

/// Conjunction `conjuncts`, all mentioning `x`.
fn exists_core(x: &str, mut conjuncts: Vec<Qf>) -> Qf {
    // equality shortcut: c·x + r = 0 pins x
    let pick = conjuncts.iter().position(|c| matches!(c, Qf::Atom(Atom::Eq(l)) if l.mentions(x)));
    if let Some(i) = pick {
        let Qf::Atom(Atom::Eq(l)) = conjuncts.remove(i) else { unreachable!() };
        let mut c = l.coeff(x);
        let mut r = l.without(x);
        if c.is_negative() {
            c = -c;
            r = r.neg();
        }
        // x = -r / c: need c | r and -r >= 0
        let mut out = vec![Qf::dvd(c.clone(), r.clone()), Qf::le(r.clone())];
        let neg_r = r.neg();
        for q in &conjuncts {
            out.push(q.map_atoms(&mut |a| substitute_scaled(a, x, &c, &neg_r)));
        }
        return Qf::and(out);
    }
    conjuncts.push(Qf::Atom(Atom::Le(Lin::term(x, -1))));
    cooper(x, &Qf::And(conjuncts))
}

/// Rewrite atom `a` under `c·x = t` (c > 0) by scaling it with `c`.
fn substitute_scaled(a: &Atom, x: &str, c: &BigInt, t: &Lin) -> Qf {
    let k = a.lin().coeff(x);
    if k.is_zero() {
        return Qf::Atom(a.clone());
    }
    let l = a.lin().without(x).scale(c).add(&t.scale(&k));
    match a {
        Atom::Dvd(m, _) => Atom::Dvd(m * c, l),
        Atom::NDvd(m, _) => Atom::NDvd(m * c, l),
        _ => a.map_lin(|_| l.clone()),
    }
    .normalize()
}

fn cooper(x: &str, phi: &Qf) -> Qf {
    let mut atoms = Vec::new();
    phi.atoms(&mut atoms);
    let lcm = atoms
        .iter()
        .map(|a| a.lin().coeff(x).abs())
        .filter(|c| !c.is_zero())
        .fold(BigInt::one(), |acc, c| acc.lcm(&c));

    // scale so that every coefficient of x is ±1, with x standing for lcm·x
    let unit = phi.map_atoms(&mut |a| {
        let c = a.lin().coeff(x);
        if c.is_zero() {
            return Qf::Atom(a.clone());
        }
        let k = &lcm / c.abs();
        let mut l = a.lin().scale(&k);
        l.coeffs.insert(x.to_string(), c.signum());
        Qf::Atom(match a {
            Atom::Dvd(m, _) => Atom::Dvd(m * &k, l),
            Atom::NDvd(m, _) => Atom::NDvd(m * &k, l),
            _ => a.map_lin(|_| l.clone()),
        })
    });
    let unit = if lcm.is_one() {
        unit
    } else {
        Qf::And(vec![unit, Qf::Atom(Atom::Dvd(lcm.clone(), Lin::var(x)))])
    };

    let mut atoms = Vec::new();
    unit.atoms(&mut atoms);
    let mut delta = BigInt::one();
    let mut lower = BTreeSet::new();
    let mut upper = BTreeSet::new();
    for a in &atoms {
        let c = a.lin().coeff(x);
        if c.is_zero() {
            continue;
        }
        let s = a.lin().without(x);
        let up = c.is_positive();
        match a {
            Atom::Dvd(m, _) | Atom::NDvd(m, _) => delta = delta.lcm(m),
            // x + s <= 0 is an upper bound x < -s + 1; -x + s <= 0 a lower bound x > s - 1
            Atom::Le(_) if up => {
                upper.insert(s.neg().add_constant(1));
            }
            Atom::Le(_) => {
                lower.insert(s.add_constant(-1));
            }
            Atom::Eq(_) => {
                let t = if up { s.neg() } else { s };
                lower.insert(t.add_constant(-1));
                upper.insert(t.add_constant(1));
            }
            Atom::Ne(_) => {
                let t = if up { s.neg() } else { s };
                lower.insert(t.clone());
                upper.insert(t);
            }
        }
    }

    let steps: Vec<BigInt> = num_iter(&delta);
    let mut out = Vec::new();
    if upper.len() < lower.len() {
        // x -> +infinity side
        let inf = unit.map_atoms(&mut |a| plus_infinity(a, x));
        for j in &steps {
            out.push(inf.substitute(x, &Lin::constant(j.clone())));
        }
        for a in &upper {
            for j in &steps {
                out.push(unit.substitute(x, &a.add_constant(-j)));
            }
        }
    } else {
        for b in &lower {
            for j in &steps {
                out.push(unit.substitute(x, &b.add_constant(j.clone())));
            }
        }
    }
    Qf::or(out)
}

fn num_iter(delta: &BigInt) -> Vec<BigInt> {
    let mut v = Vec::new();
    let mut j = BigInt::one();
    while &j <= delta {
        v.push(j.clone());
        j += 1;
    }
    v
}

/// Truth of a unit-coefficient atom for arbitrarily large `x`.
fn plus_infinity(a: &Atom, x: &str) -> Qf {
    let c = a.lin().coeff(x);
    if c.is_zero() {
        return Qf::Atom(a.clone());
    }
    match a {
        Atom::Le(_) => Qf::bool(c.is_negative()),
        Atom::Eq(_) => Qf::False,
        Atom::Ne(_) => Qf::True,
        _ => Qf::Atom(a.clone()),
    }
}
