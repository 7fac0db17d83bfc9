//! Dimension of semilinear sets and explicit definable bijections with `N^l`.
//!
//! The bijection is built piece by piece. Let `l` be the largest generator
//! count and `P₀ … P_{t−1}` the pieces with `l` generators. A point of `Pᵢ`
//! with coefficients `λ` goes to `(t·λ₁ + i, λ₂, …, λ_l)`, so the top pieces
//! cover `N^l` by residue classes of the first coordinate. The remaining
//! pieces `T` are mapped recursively onto `N^{l'} × 0` (`l' = dim T`), or onto
//! `{0 … p−1} × 0` when `T` is finite with `p` points. Room is made by a
//! "hotel" shift of the top image:
//!
//! * `l' ≥ 1`: `y ↦ y + e_{l'+1}` when `y_{l'+2} = … = y_l = 0`,
//! * `T` finite: `y ↦ y + p·e₁` when `y₂ = … = y_l = 0`,
//!
//! whose image is exactly the complement of the slot reserved for `T`.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::formula::Formula;
use crate::linear::{Lin, Qf};
use crate::qe;
use crate::semilinear::{Lattice, SemilinearSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DimensionError {
    #[error("set is finite (dimension 0); no bijection with N^l, l >= 1")]
    FiniteSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionResult {
    pub dim: usize,
    /// A piece with `dim` generators; `None` only for the empty set.
    pub witness: Option<Lattice>,
}

pub fn dim(s: &SemilinearSet) -> DimensionResult {
    let d = s.pieces.iter().map(|p| p.generators.len()).max().unwrap_or(0);
    let witness = s.pieces.iter().find(|p| p.generators.len() == d).cloned();
    DimensionResult { dim: d, witness }
}

/// Graph of a bijection `S → N^dim`, free in `xs` (the point) and `ys`.
#[derive(Debug, Clone)]
pub struct Bijection {
    pub formula: Formula,
    pub xs: Vec<String>,
    pub ys: Vec<String>,
    pub dim: usize,
}

pub fn bijection_to_cube(s: &SemilinearSet, xs: &[String]) -> Result<Bijection, DimensionError> {
    let l = dim(s).dim;
    if l == 0 {
        return Err(DimensionError::FiniteSet);
    }
    let taken: BTreeSet<&String> = xs.iter().collect();
    let mut prefix = String::from("y");
    while (1..=l).any(|i| taken.contains(&format!("{prefix}{i}"))) {
        prefix.push('_');
    }
    let ys: Vec<String> = (1..=l).map(|i| format!("{prefix}{i}")).collect();
    let qf = build(&s.pieces, xs, &ys);
    Ok(Bijection { formula: qf.to_formula(), xs: xs.to_vec(), ys, dim: l })
}

fn build(pieces: &[Lattice], xs: &[String], ys: &[String]) -> Qf {
    let l = ys.len();
    let top: Vec<&Lattice> = pieces.iter().filter(|p| p.generators.len() == l).collect();
    let rest: Vec<Lattice> = pieces.iter().filter(|p| p.generators.len() < l).cloned().collect();
    let y = |i: usize| Lin::var(ys[i].clone());
    let zero_from = |from: usize| (from..l).map(|i| Qf::eq(y(i))).collect::<Vec<_>>();

    let mut cases = Vec::new();
    // shift: (first coordinate whose vanishing onward is the condition, coordinate, amount)
    let shift: Option<(usize, usize, BigInt)> = if rest.is_empty() {
        None
    } else {
        let l2 = rest.iter().map(|p| p.generators.len()).max().unwrap();
        if l2 == 0 {
            let pts: BTreeSet<Vec<BigUint>> = rest.iter().map(|p| p.base.clone()).collect();
            for (j, p) in pts.iter().enumerate() {
                let mut c: Vec<Qf> = xs
                    .iter()
                    .zip(p)
                    .map(|(x, v)| Qf::eq(Lin::var(x.clone()).add_constant(-BigInt::from(v.clone()))))
                    .collect();
                c.push(Qf::eq(y(0).add_constant(-BigInt::from(j))));
                c.extend(zero_from(1));
                cases.push(Qf::and(c));
            }
            Some((1, 0, BigInt::from(pts.len())))
        } else {
            let mut c = vec![build(&rest, xs, &ys[..l2])];
            c.extend(zero_from(l2));
            cases.push(Qf::and(c));
            Some((l2 + 1, l2, BigInt::one()))
        }
    };

    let t = BigInt::from(top.len());
    for (i, p) in top.iter().enumerate() {
        let (det, _, forms) = p.coefficient_forms(xs);
        let d = det.abs();
        let sgn = if det.is_negative() { -BigInt::one() } else { BigInt::one() };
        // d·λ = sgn·forms
        let lam: Vec<Lin> = forms.iter().map(|f| f.scale(&sgn)).collect();
        let mut y0: Vec<Lin> = lam.clone();
        y0[0] = lam[0].scale(&t).add_constant(&d * BigInt::from(i));
        let eqs = |y0: &[Lin]| Qf::and((0..l).map(|k| Qf::eq(y(k).scale(&d).sub(&y0[k]))).collect());
        let map = match &shift {
            None => eqs(&y0),
            Some((from, coord, amount)) => {
                let cond = Qf::and((*from..l).map(|k| Qf::eq(lam[k].clone())).collect());
                let mut shifted = y0.clone();
                shifted[*coord] = shifted[*coord].add_constant(&d * amount);
                Qf::or2(Qf::and2(cond.clone(), eqs(&shifted)), Qf::and2(cond.negate(), eqs(&y0)))
            }
        };
        cases.push(Qf::and2(p.to_qf(xs), map));
    }
    Qf::or(cases)
}

/// The defining sentences of a bijection `S → N^l`, by name.
pub fn verification_sentences(s: &SemilinearSet, b: &Bijection) -> Vec<(&'static str, Formula)> {
    let f = &b.formula;
    let dom = s.to_formula(&b.xs);
    let prime = |vs: &[String]| -> Vec<String> { vs.iter().map(|v| format!("{v}'")).collect() };
    let rename = |f: &Formula, from: &[String], to: &[String]| {
        f.rename_free(&from.iter().cloned().zip(to.iter().cloned()).collect())
    };
    let (xs, ys) = (&b.xs, &b.ys);
    let (xs2, ys2) = (prime(xs), prime(ys));
    let all = |vs: Vec<&[String]>, body: Formula| {
        let v: Vec<String> = vs.concat();
        Formula::forall_many(&v, body)
    };
    vec![
        ("into", all(vec![xs, ys], Formula::implies(f.clone(), dom.clone()))),
        ("total", all(vec![xs], Formula::implies(dom, Formula::exists_many(ys, f.clone())))),
        (
            "functional",
            all(
                vec![xs, ys, &ys2],
                Formula::implies(Formula::and(f.clone(), rename(f, ys, &ys2)), Formula::tuple_eq(ys, &ys2)),
            ),
        ),
        (
            "injective",
            all(
                vec![xs, &xs2, ys],
                Formula::implies(Formula::and(f.clone(), rename(f, xs, &xs2)), Formula::tuple_eq(xs, &xs2)),
            ),
        ),
        ("surjective", all(vec![ys], Formula::exists_many(xs, f.clone()))),
    ]
}

/// Decide every verification sentence; returns the names of those that fail.
pub fn verify(s: &SemilinearSet, b: &Bijection) -> Vec<&'static str> {
    verification_sentences(s, b)
        .into_iter()
        .filter(|(_, f)| !qe::decide(f).expect("closed"))
        .map(|(n, _)| n)
        .collect()
}

/// The image of `x` under the bijection [`bijection_to_cube`] builds,
/// computed directly; `None` when `x ∉ S`.
pub fn image(s: &SemilinearSet, x: &[BigUint]) -> Option<Vec<BigUint>> {
    let l = dim(s).dim;
    image_in(&s.pieces, x, l)
}

fn image_in(pieces: &[Lattice], x: &[BigUint], l: usize) -> Option<Vec<BigUint>> {
    let top: Vec<&Lattice> = pieces.iter().filter(|p| p.generators.len() == l).collect();
    let rest: Vec<Lattice> = pieces.iter().filter(|p| p.generators.len() < l).cloned().collect();
    let l2 = rest.iter().map(|p| p.generators.len()).max();
    let finite: Vec<Vec<BigUint>> = if l2 == Some(0) {
        rest.iter().map(|p| p.base.clone()).collect::<BTreeSet<_>>().into_iter().collect()
    } else {
        Vec::new()
    };
    for (i, p) in top.iter().enumerate() {
        if let Some(lam) = p.coefficients(x) {
            let mut y = lam.clone();
            y[0] = &lam[0] * top.len() + i;
            match l2 {
                Some(0) if lam[1..].iter().all(Zero::is_zero) => y[0] += finite.len(),
                Some(m) if m > 0 && lam[m + 1..].iter().all(Zero::is_zero) => y[m] += 1u32,
                _ => {}
            }
            return Some(y);
        }
    }
    match l2 {
        None => None,
        Some(0) => {
            let j = finite.iter().position(|p| p.as_slice() == x)?;
            let mut y = vec![BigUint::zero(); l];
            y[0] = BigUint::from(j);
            Some(y)
        }
        Some(m) => {
            let mut y = image_in(&rest, x, m)?;
            y.resize(l, BigUint::zero());
            Some(y)
        }
    }
}
