//! Definable linear orders on semilinear domains: order axioms, VD*-rank by
//! iterated condensation, isomorphisms with `(N, <)` and the Cantor orders.
//!
//! Condensation `≃_{α+1}` relates `a, b` when finitely many `≃_α`-classes lie
//! strictly between them. Classes are counted through their lexicographically
//! least representatives, and "finitely many" is expressed as boundedness:
//! a definable subset of `N^m` is finite iff its coordinate sums are bounded.
//! That keeps every `≃_α` first order, so it is eliminated to a
//! quantifier-free formula before the next step.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};
use serde_json::json;
use thiserror::Error;

use crate::counting::{self, PiecewisePolynomial};
use crate::formula::{evaluate_qf, fresh_var, parse, render, Assignment, Formula};
use crate::linear::{Lin, Qf};
use crate::qe;
use crate::semilinear::{self, SemilinearSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("relation is not a strict linear order on the domain")]
    NotALinearOrder,
    #[error("internal error: condensation did not terminate by rank {m} (reached {rank})")]
    InternalRankBoundViolation { rank: usize, m: usize },
    #[error("order is not of type omega: {0}")]
    NotOmegaType(String),
    #[error("order relation mentions variables other than the two points: {0:?}")]
    FreeVariables(Vec<String>),
}

/// A strict order `rel(xs, ys)` ("xs ≺ ys") on `domain ⊆ N^m`.
#[derive(Debug, Clone)]
pub struct DefinableOrder {
    pub m: usize,
    pub domain: SemilinearSet,
    pub rel: Formula,
    pub xs: Vec<String>,
    pub ys: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankCertificate {
    pub rank: usize,
    /// `≃₁ … ≃_rank`, each over the order's `xs, ys`.
    pub condensations: Vec<Formula>,
    pub class_count: usize,
}

impl RankCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "rank": self.rank,
            "condensations": self.condensations.iter().map(render).collect::<Vec<_>>(),
            "classCount": self.class_count,
        })
    }
}

/// Quantifier-free view of an order, with helpers for building sentences.
struct Ctx<'a> {
    o: &'a DefinableOrder,
    rel: Qf,
}

fn tuple(hint: &str, m: usize) -> Vec<String> {
    (0..m).map(|_| fresh_var(hint)).collect()
}

fn exists_all(vs: &[String], q: Qf) -> Qf {
    vs.iter().rev().fold(q, |acc, v| qe::exists(v, &acc))
}

fn forall_all(vs: &[String], q: Qf) -> Qf {
    exists_all(vs, q.negate()).negate()
}

fn implies(a: Qf, b: Qf) -> Qf {
    Qf::or2(a.negate(), b)
}

fn eq_tuple(a: &[String], b: &[String]) -> Qf {
    Qf::and(a.iter().zip(b).map(|(x, y)| Qf::eq(Lin::var(x.clone()).sub(&Lin::var(y.clone())))).collect())
}

/// `d <lex c`: the well-order used to pick class representatives.
fn lex_lt(d: &[String], c: &[String]) -> Qf {
    Qf::or(
        (0..d.len())
            .map(|i| {
                let mut conj = vec![eq_tuple(&d[..i], &c[..i])];
                conj.push(Qf::le(Lin::var(d[i].clone()).sub(&Lin::var(c[i].clone())).add_constant(1)));
                Qf::and(conj)
            })
            .collect(),
    )
}

/// `Σc ≤ n`.
fn sum_le(c: &[String], n: &str) -> Qf {
    Qf::le(c.iter().fold(Lin::var(n).neg(), |acc, v| acc.add(&Lin::var(v.clone()))))
}

fn closed(q: Qf) -> bool {
    match q {
        Qf::True => true,
        Qf::False => false,
        other => panic!("closed sentence reduced to {other:?}"),
    }
}

impl<'a> Ctx<'a> {
    fn new(o: &'a DefinableOrder) -> Result<Ctx<'a>, OrderError> {
        let extra: Vec<String> =
            o.rel.free_vars().into_iter().filter(|v| !o.xs.contains(v) && !o.ys.contains(v)).collect();
        if !extra.is_empty() {
            return Err(OrderError::FreeVariables(extra));
        }
        Ok(Ctx { o, rel: qe::to_qf(&o.rel) })
    }

    fn dom(&self, a: &[String]) -> Qf {
        self.o.domain.to_qf(a)
    }

    /// `q(xs, ys)` instantiated at `(a, b)`.
    fn at(&self, q: &Qf, a: &[String], b: &[String]) -> Qf {
        let map: BTreeMap<String, String> =
            self.o.xs.iter().chain(&self.o.ys).cloned().zip(a.iter().chain(b).cloned()).collect();
        q.rename(&map)
    }

    fn lt(&self, a: &[String], b: &[String]) -> Qf {
        self.at(&self.rel, a, b)
    }

    fn tuple(&self, hint: &str) -> Vec<String> {
        tuple(hint, self.o.m)
    }

    /// Is the set `{c : q(c)}` bounded, as a formula in the other variables?
    fn bounded(&self, c: &[String], q: Qf) -> Qf {
        let n = fresh_var("N");
        exists_all(std::slice::from_ref(&n), forall_all(c, implies(q, sum_le(c, &n))))
    }

    /// Least representatives of the classes of `cong` (over `xs, ys`).
    fn representatives(&self, cong: &Qf, c: &[String]) -> Qf {
        let d = self.tuple("d");
        let body = implies(Qf::and(vec![self.dom(&d), self.at(cong, &d, c)]), lex_lt(&d, c).negate());
        Qf::and2(self.dom(c), forall_all(&d, body))
    }

    /// Next condensation from the representatives `rep` (over `xs`).
    fn condense(&self, rep: &Qf) -> Qf {
        let (a, b) = (self.o.xs.clone(), self.o.ys.clone());
        let c = self.tuple("c");
        let rep_c = rep.rename(&a.iter().cloned().zip(c.iter().cloned()).collect());
        let between = Qf::or2(
            Qf::and2(self.lt(&a, &c), self.lt(&c, &b)),
            Qf::and2(self.lt(&b, &c), self.lt(&c, &a)),
        );
        Qf::and(vec![self.dom(&a), self.dom(&b), self.bounded(&c, Qf::and2(rep_c, between))])
    }
}

impl DefinableOrder {
    pub fn new(domain: SemilinearSet, rel: Formula, xs: Vec<String>, ys: Vec<String>) -> DefinableOrder {
        assert_eq!(xs.len(), domain.dim);
        assert_eq!(ys.len(), domain.dim);
        DefinableOrder { m: domain.dim, domain, rel, xs, ys }
    }

    /// Order on the set defined by `domain` (over `xs`) given by `rel`.
    pub fn from_formulas(domain: &Formula, rel: Formula, xs: Vec<String>, ys: Vec<String>) -> DefinableOrder {
        let d = semilinear::from_formula(domain, &xs);
        DefinableOrder::new(d, rel, xs, ys)
    }

    /// Does `a ≺ b` hold (ignoring the domain)?
    pub fn less(&self, a: &[BigUint], b: &[BigUint]) -> bool {
        let asg = Assignment::from_pairs(self.xs.iter().zip(a).chain(self.ys.iter().zip(b)).map(|(v, x)| (v.clone(), x.clone())));
        if self.rel.is_quantifier_free() {
            return evaluate_qf(&self.rel, &asg).expect("all variables assigned");
        }
        qe::to_qf(&self.rel).eval(&asg).expect("all variables assigned")
    }
}

/// Irreflexivity, transitivity and totality on the domain, each decided.
pub fn check_linear_order(o: &DefinableOrder) -> bool {
    let Ok(cx) = Ctx::new(o) else { return false };
    let (a, b, c) = (cx.tuple("a"), cx.tuple("b"), cx.tuple("c"));
    let irrefl = forall_all(&a, implies(cx.dom(&a), cx.lt(&a, &a).negate()));
    if !closed(irrefl) {
        return false;
    }
    let total = forall_all(
        &[a.clone(), b.clone()].concat(),
        implies(
            Qf::and(vec![cx.dom(&a), cx.dom(&b), eq_tuple(&a, &b).negate()]),
            Qf::or2(cx.lt(&a, &b), cx.lt(&b, &a)),
        ),
    );
    if !closed(total) {
        return false;
    }
    let trans = forall_all(
        &[a.clone(), b.clone(), c.clone()].concat(),
        implies(
            Qf::and(vec![cx.dom(&a), cx.dom(&b), cx.dom(&c), cx.lt(&a, &b), cx.lt(&b, &c)]),
            cx.lt(&a, &c),
        ),
    );
    closed(trans)
}

fn finite_count(q: &Qf, vars: &[String]) -> Option<usize> {
    let s = semilinear::from_qf(q, vars);
    s.is_finite().then_some(s.pieces.len())
}

/// VD*-rank with the condensations that witness it.
pub fn vd_rank(o: &DefinableOrder) -> Result<RankCertificate, OrderError> {
    if !check_linear_order(o) {
        return Err(OrderError::NotALinearOrder);
    }
    let cx = Ctx::new(o)?;
    let ab = [o.xs.clone(), o.ys.clone()].concat();
    let mut rep = cx.dom(&o.xs);
    let mut condensations = Vec::new();
    loop {
        if let Some(class_count) = finite_count(&rep, &o.xs) {
            return Ok(RankCertificate { rank: condensations.len(), condensations, class_count });
        }
        if condensations.len() == o.m {
            return Err(OrderError::InternalRankBoundViolation { rank: o.m + 1, m: o.m });
        }
        // canonical form through the semilinear set keeps later steps small
        let cong = semilinear::from_qf(&cx.condense(&rep), &ab).to_qf(&ab);
        rep = cx.representatives(&cong, &o.xs);
        condensations.push(cong.to_formula());
    }
}

/// Decide the certificate's claims: each condensation coarsens the previous
/// one (starting from equality on the domain), the last quotient is finite
/// with `class_count` classes and the one before it is infinite.
pub fn check_certificate(o: &DefinableOrder, cert: &RankCertificate) -> bool {
    let Ok(cx) = Ctx::new(o) else { return false };
    let (a, b) = (o.xs.clone(), o.ys.clone());
    let mut prev = Qf::and2(cx.dom(&a), eq_tuple(&a, &b));
    let mut reps = vec![cx.dom(&a)];
    for f in &cert.condensations {
        let cong = qe::to_qf(f);
        if !closed(forall_all(&[a.clone(), b.clone()].concat(), implies(prev, cong.clone()))) {
            return false;
        }
        reps.push(cx.representatives(&cong, &a));
        prev = cong;
    }
    let last = finite_count(reps.last().unwrap(), &a);
    let before_infinite = cert.rank == 0 || finite_count(&reps[cert.rank - 1], &a).is_none();
    cert.rank == cert.condensations.len() && last == Some(cert.class_count) && before_infinite
}

/// Scattered (no dense suborder): witnessed by a rank certificate.
pub fn is_scattered(o: &DefinableOrder) -> bool {
    vd_rank(o).is_ok()
}

/// The isomorphism `O → (N, <)`, `a ↦ |{c ≺ a}|`, for orders of type ω.
pub fn order_type_iso(o: &DefinableOrder) -> Result<PiecewisePolynomial, OrderError> {
    let cert = vd_rank(o)?;
    if cert.rank != 1 {
        return Err(OrderError::NotOmegaType(format!("rank is {}", cert.rank)));
    }
    let cx = Ctx::new(o)?;
    let (a, b, c) = (cx.tuple("a"), cx.tuple("b"), cx.tuple("c"));
    let no_max = forall_all(&a, implies(cx.dom(&a), exists_all(&b, Qf::and2(cx.dom(&b), cx.lt(&a, &b)))));
    if !closed(no_max) {
        return Err(OrderError::NotOmegaType("has a maximum".into()));
    }
    let finite_pred =
        forall_all(&a, implies(cx.dom(&a), cx.bounded(&c, Qf::and2(cx.dom(&c), cx.lt(&c, &a)))));
    if !closed(finite_pred) {
        return Err(OrderError::NotOmegaType("some element has infinitely many predecessors".into()));
    }
    let graph = Qf::and(vec![cx.dom(&c), cx.dom(&a), cx.lt(&c, &a)]);
    let s = semilinear::from_qf(&graph, &[c, a].concat());
    let p = counting::section_count(&s, o.m).map_err(|e| OrderError::NotOmegaType(e.to_string()))?;
    Ok(counting::restrict(&p, &o.domain))
}

/// The first `k` elements in `≺`-order, each found as the definable minimum
/// of what is left (the minimum of the domain, then successors).
pub fn enumerate_in_order(o: &DefinableOrder, k: usize) -> Vec<Vec<BigUint>> {
    let cx = Ctx::new(o).expect("order over its own variables");
    let (a, b) = (o.xs.clone(), o.ys.clone());
    let c = cx.tuple("c");
    let least = Qf::and2(cx.dom(&b), forall_all(&c, implies(cx.dom(&c), cx.lt(&c, &b).negate())));
    let succ = Qf::and(vec![
        cx.dom(&b),
        cx.lt(&a, &b),
        forall_all(&c, implies(Qf::and2(cx.dom(&c), cx.lt(&a, &c)), cx.lt(&c, &b).negate())),
    ]);
    let point = |q: &Qf| -> Option<Vec<BigUint>> {
        let s = semilinear::from_qf(q, &b);
        match s.pieces.as_slice() {
            [p] if p.generators.is_empty() => Some(p.base.clone()),
            [] => None,
            _ => panic!("minimum is not unique"),
        }
    };
    let mut out = Vec::new();
    let mut cur = point(&least);
    while let Some(p) = cur {
        if out.len() == k {
            break;
        }
        let mut q = succ.clone();
        for (v, x) in a.iter().zip(&p) {
            q = q.substitute(v, &Lin::constant(BigInt::from(x.clone())));
        }
        out.push(p);
        cur = point(&q);
    }
    out
}

// ---------------------------------------------------------------------------
// Cantor orders

/// `≺₁` (`i = 1`) or `≺₂` (`i = 2`) on `N²`: by coordinate sum, ties broken
/// by the second coordinate, increasing for `≺₁` and decreasing for `≺₂`.
pub fn cantor_order(i: u8) -> DefinableOrder {
    let src = match i {
        1 => "(a2 < b2 & a1 + a2 = b1 + b2) | a1 + a2 < b1 + b2",
        2 => "(b2 < a2 & a1 + a2 = b1 + b2) | a1 + a2 < b1 + b2",
        _ => panic!("Cantor order index must be 1 or 2"),
    };
    let names = |p: &str| vec![format!("{p}1"), format!("{p}2")];
    DefinableOrder::new(SemilinearSet::full(2), parse(src).expect("valid"), names("a"), names("b"))
}

/// `C₁(x, y) = ½(x+y)² + ½(x+3y)`, `C₂(x, y) = C₁(y, x)`.
pub fn cantor_eval(i: u8, p: (&BigUint, &BigUint)) -> BigUint {
    let (x, y) = if i == 1 { p } else { (p.1, p.0) };
    let s = x + y;
    (&s * (&s + 1u32)) / 2u32 + y
}

pub fn cantor_inverse(i: u8, n: &BigUint) -> (BigUint, BigUint) {
    // largest s with s(s+1)/2 <= n
    let mut s: BigUint = (n * 2u32).sqrt();
    while &s * (&s + 1u32) / 2u32 > *n {
        s -= BigUint::one();
    }
    let y = n - &s * (&s + 1u32) / 2u32;
    let x = &s - &y;
    debug_assert!(!s.is_zero() || y.is_zero());
    if i == 1 {
        (x, y)
    } else {
        (y, x)
    }
}

#[cfg(test)]
mod tests;
