//! Section cardinalities as piecewise polynomials, vector partition
//! functions, and elimination of counting quantifiers.
//!
//! A section-count function is a polynomial on each cell of the chamber
//! arrangement of the generators' parameter parts, once the parameters are
//! also fixed modulo the lcm of the maximal minors. The polynomial on each
//! domain lattice is fitted by interpolation against a brute-force counter
//! and then checked on fresh points.

use std::ops::Not;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::formula::{Formula, Term};
use crate::linear::{Atom, Lin, Qf};
use crate::matrix::{self, Q};
use crate::qe;
use crate::semilinear::{self, Lattice, SemilinearError, SemilinearSet};

mod poly;

pub use poly::Polynomial;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CountingError {
    #[error("cannot split dimension {dim} into {n} counted coordinates and a nonempty parameter part")]
    BadSplit { n: usize, dim: usize },
    #[error("internal consistency error: {0}")]
    Inconsistent(String),
    #[error("invalid piecewise polynomial JSON: {0}")]
    Json(String),
}

impl From<SemilinearError> for CountingError {
    fn from(e: SemilinearError) -> Self {
        CountingError::Json(e.to_string())
    }
}

/// Polynomials on disjoint fundamental lattices of `N^param_dim`, plus the
/// region where the counted quantity is infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewisePolynomial {
    pub param_dim: usize,
    pub degree_bound: usize,
    pub pieces: Vec<(Lattice, Polynomial)>,
    pub infinite: Option<SemilinearSet>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PwValue {
    Finite(BigUint),
    Infinite,
    Undefined,
}

impl std::fmt::Display for PwValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PwValue::Finite(n) => write!(f, "{n}"),
            PwValue::Infinite => write!(f, "infinite"),
            PwValue::Undefined => write!(f, "undefined"),
        }
    }
}

impl PiecewisePolynomial {
    pub fn degree(&self) -> usize {
        self.pieces.iter().map(|(_, p)| p.degree() as usize).max().unwrap_or(0)
    }

    pub fn eval(&self, b: &[BigUint]) -> PwValue {
        eval_pwpoly(self, b)
    }

    pub fn to_json(&self) -> Value {
        let pieces: Vec<Value> = self
            .pieces
            .iter()
            .map(|(l, p)| {
                let monomials: Vec<Value> =
                    p.terms().map(|(e, c)| json!({"coef": c.to_string(), "exps": e})).collect();
                json!({"lattice": semilinear::lattice_json(l), "poly": {"text": p.to_string(), "monomials": monomials}})
            })
            .collect();
        json!({
            "paramDim": self.param_dim,
            "degreeBound": self.degree_bound,
            "pieces": pieces,
            "infinite": self.infinite.as_ref().map(SemilinearSet::to_json),
        })
    }

    pub fn from_json(v: &Value) -> Result<PiecewisePolynomial, CountingError> {
        let err = |m: &str| CountingError::Json(m.to_string());
        let m = v["paramDim"].as_u64().ok_or_else(|| err("missing paramDim"))? as usize;
        let degree_bound = v["degreeBound"].as_u64().unwrap_or(0) as usize;
        let mut pieces = Vec::new();
        for p in v["pieces"].as_array().ok_or_else(|| err("missing pieces"))? {
            let l = semilinear::lattice_from_json(&p["lattice"])?;
            if l.dim() != m {
                return Err(err("lattice dimension differs from paramDim"));
            }
            let mut terms = Vec::new();
            for mono in p["poly"]["monomials"].as_array().ok_or_else(|| err("missing monomials"))? {
                let c: Q = mono["coef"]
                    .as_str()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("bad coefficient"))?;
                let e: Vec<u32> = serde_json::from_value(mono["exps"].clone()).map_err(|e| err(&e.to_string()))?;
                if e.len() != m {
                    return Err(err("exponent vector length differs from paramDim"));
                }
                terms.push((c, e));
            }
            pieces.push((l, Polynomial::from_terms(m, terms)));
        }
        let infinite = match &v["infinite"] {
            Value::Null => None,
            s => Some(SemilinearSet::from_json(s)?),
        };
        Ok(PiecewisePolynomial { param_dim: m, degree_bound, pieces, infinite })
    }
}

/// Value at `b`: the piece polynomial, `Infinite` on the infinite region,
/// `Undefined` outside both.
pub fn eval_pwpoly(p: &PiecewisePolynomial, b: &[BigUint]) -> PwValue {
    if p.infinite.as_ref().is_some_and(|s| s.member(b).unwrap_or(false)) {
        return PwValue::Infinite;
    }
    let Some((_, poly)) = p.pieces.iter().find(|(l, _)| l.dim() == b.len() && l.contains(b)) else {
        return PwValue::Undefined;
    };
    let bi: Vec<BigInt> = b.iter().map(|x| BigInt::from(x.clone())).collect();
    let v = poly.eval(&bi);
    match v.is_integer().then(|| v.to_integer().to_biguint()).flatten() {
        Some(n) => PwValue::Finite(n),
        None => panic!("piece polynomial {poly} is not a natural number at {b:?}"),
    }
}

// ---------------------------------------------------------------------------
// section counts

fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

fn to_int(v: &[BigUint]) -> Vec<BigInt> {
    v.iter().map(|x| BigInt::from(x.clone())).collect()
}

/// A piece whose sections are finite: `c + G·λ` restricted to the
/// parameter coordinates, every column of `G` nonzero.
struct FinitePiece {
    shift: Vec<BigInt>,
    cols: Vec<Vec<BigInt>>,
    /// Independent columns, the rows on which they are invertible, and
    /// `det·inverse` of that square block (integral, `det > 0`).
    pivots: Vec<usize>,
    rows: Vec<usize>,
    adj: Vec<Vec<BigInt>>,
    det: BigInt,
}

impl FinitePiece {
    fn new(shift: Vec<BigInt>, cols: Vec<Vec<BigInt>>) -> FinitePiece {
        let pivots = matrix::independent_rows(&cols);
        let block: Vec<Vec<BigInt>> = pivots.iter().map(|&j| cols[j].clone()).collect();
        let rows = matrix::independent_rows(&matrix::transpose(&block));
        let square: Vec<Vec<BigInt>> = rows.iter().map(|&i| block.iter().map(|c| c[i].clone()).collect()).collect();
        let (det, adj) = if pivots.is_empty() {
            (BigInt::one(), Vec::new())
        } else {
            let (d, inv) = matrix::det_inverse(&square).expect("independent block");
            let d = d.to_integer().abs();
            let adj = inv.iter().map(|r| r.iter().map(|k| (k * Q::from_integer(d.clone())).to_integer()).collect()).collect();
            (d, adj)
        };
        FinitePiece { shift, cols, pivots, rows, adj, det }
    }

    fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// `|{λ ∈ N^s : shift + G·λ = b}|`: search over the non-pivot
    /// coefficients, solve for the pivot ones.
    fn count(&self, b: &[BigInt]) -> BigUint {
        let free: Vec<&Vec<BigInt>> =
            self.cols.iter().enumerate().filter(|(j, _)| !self.pivots.contains(j)).map(|(_, c)| c).collect();
        let mut rem: Vec<BigInt> = b.iter().zip(&self.shift).map(|(x, c)| x - c).collect();
        self.search(&free, &mut rem)
    }

    fn search(&self, free: &[&Vec<BigInt>], rem: &mut [BigInt]) -> BigUint {
        let Some((c, rest)) = free.split_first() else {
            return BigUint::from(self.solvable(rem) as u8);
        };
        let mut total = BigUint::zero();
        let mut steps = 0usize;
        // columns are natural and nonzero, so `rem` eventually goes negative
        while rem.iter().all(|x| !x.is_negative()) {
            total += self.search(rest, rem);
            for (r, x) in rem.iter_mut().zip(c.iter()) {
                *r -= x;
            }
            steps += 1;
        }
        for (r, x) in rem.iter_mut().zip(c.iter()) {
            *r += x * BigInt::from(steps);
        }
        total
    }

    /// Is `rem` a natural combination of the pivot columns?
    fn solvable(&self, rem: &[BigInt]) -> bool {
        if rem.iter().any(Signed::is_negative) {
            return false;
        }
        let mut lambda = Vec::with_capacity(self.pivots.len());
        for row in &self.adj {
            let v: BigInt = row.iter().zip(&self.rows).map(|(k, &i)| k * &rem[i]).sum();
            let (q, r) = v.div_rem(&self.det);
            if !r.is_zero() || q.is_negative() {
                return false;
            }
            lambda.push(q);
        }
        (0..rem.len()).all(|i| {
            let s: BigInt = self.pivots.iter().zip(&lambda).map(|(&j, l)| &self.cols[j][i] * l).sum();
            s == rem[i]
        })
    }
}

/// `|S↾b̄|` as a piecewise polynomial in the last `dim − n` coordinates.
pub fn section_count(s: &SemilinearSet, n: usize) -> Result<PiecewisePolynomial, CountingError> {
    let k = s.dim;
    if n == 0 || n >= k {
        return Err(CountingError::BadSplit { n, dim: k });
    }
    let m = k - n;
    let inf = infinite_region(s, n);
    let finite: Vec<FinitePiece> = s
        .pieces
        .iter()
        .filter(|l| l.generators.iter().all(|g| g[n..].iter().any(|x| !x.is_zero())))
        .map(|l| FinitePiece::new(to_int(&l.base[n..]), l.generators.iter().map(|g| to_int(&g[n..])).collect()))
        .collect();
    let degree = finite.iter().map(|p| p.cols.len() - p.rank()).max().unwrap_or(0);
    assert!(degree <= n, "kernel of the parameter map embeds in the counted coordinates");
    let pieces = fit(&finite, &inf, m, degree)?;
    let out = PiecewisePolynomial { param_dim: m, degree_bound: n, pieces, infinite: (!inf.is_empty()).then_some(inf) };
    assert!(out.degree() <= out.degree_bound, "degree bound violated");
    Ok(out)
}

/// Parameters with an infinite section: `∀N ∃z̄ (N < Σz̄ ∧ (z̄, b̄) ∈ S)`,
/// one piece at a time.
fn infinite_region(s: &SemilinearSet, n: usize) -> SemilinearSet {
    let m = s.dim - n;
    let zs = names("z", n);
    let bs = names("b", m);
    let vars: Vec<String> = zs.iter().chain(&bs).cloned().collect();
    let big = crate::formula::fresh_var("N");
    let unbounded = Formula::or_all(s.pieces.iter().map(|l| {
        let sum = Term::sum(zs.iter().map(|z| Term::var(z.clone())));
        let body = Formula::and(Formula::lt(Term::var(big.clone()), sum), l.to_qf(&vars).to_formula());
        Formula::forall(big.clone(), Formula::exists_many(&zs, body))
    }));
    let region = semilinear::from_qf(&qe::to_qf(&unbounded), &bs);
    // cross-check against the generators: a section is infinite exactly when
    // it meets a piece with a generator invisible to the parameters
    for b in box_points(m, if m <= 2 { 4 } else { 1 }) {
        let bb: Vec<BigUint> = b.iter().map(|x| x.to_biguint().expect("natural")).collect();
        let by_generators = s.pieces.iter().any(|l| {
            let (hidden, seen): (Vec<_>, Vec<_>) = l.generators.iter().partition(|g| g[n..].iter().all(Zero::is_zero));
            !hidden.is_empty()
                && FinitePiece::new(to_int(&l.base[n..]), seen.iter().map(|g| to_int(&g[n..])).collect())
                    .count(&b)
                    .is_zero()
                    .not()
        });
        assert_eq!(region.member(&bb).expect("dimension"), by_generators, "infinite region at {b:?}");
    }
    region
}

pub(crate) fn box_points(m: usize, hi: u32) -> Vec<Vec<BigInt>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|p: Vec<BigInt>| {
                (0..=hi).map(move |x| {
                    let mut q = p.clone();
                    q.push(BigInt::from(x));
                    q
                })
            })
            .collect();
    }
    out
}

// ---------------------------------------------------------------------------
// chambers and interpolation

/// Affine forms `h·(b̄ − c)` whose sign pattern refines the chambers of
/// every piece: walls spanned by rank−1 columns, and the equations of the
/// column span.
fn chamber_forms(finite: &[FinitePiece], bs: &[String]) -> Vec<Lin> {
    let m = bs.len();
    let mut forms = std::collections::BTreeSet::new();
    let mut add = |h: &[BigInt], c: &[BigInt]| {
        let constant: BigInt = -dot(h, c);
        let g = h.iter().fold(constant.clone(), |a, x| a.gcd(x));
        let Some(lead) = h.iter().find(|x| !x.is_zero()) else { return };
        let g = if lead.is_negative() { -g } else { g };
        let mut l = Lin::constant(&constant / &g);
        for (v, x) in bs.iter().zip(h) {
            l.add_term(v, &(x / &g));
        }
        forms.insert(l);
    };
    for p in finite {
        let r = p.rank();
        for h in matrix::int_kernel(&p.cols, m) {
            add(&h, &p.shift);
        }
        if r == 0 {
            continue;
        }
        let span: Vec<Vec<BigInt>> = matrix::independent_rows(&p.cols).into_iter().map(|i| p.cols[i].clone()).collect();
        for t in matrix::subsets(p.cols.len(), r - 1) {
            let tc: Vec<Vec<BigInt>> = t.iter().map(|&i| p.cols[i].clone()).collect();
            if matrix::rank(&tc) != r - 1 {
                continue;
            }
            // h = Σ yₖ spanₖ orthogonal to the chosen columns
            let rows: Vec<Vec<BigInt>> =
                tc.iter().map(|c| span.iter().map(|w| dot(c, w)).collect()).collect();
            for y in matrix::int_kernel(&rows, r) {
                let mut h = vec![BigInt::zero(); m];
                for (yk, w) in y.iter().zip(&span) {
                    for (hi, wi) in h.iter_mut().zip(w) {
                        *hi += yk * wi;
                    }
                }
                add(&h, &p.shift);
            }
        }
    }
    forms.into_iter().collect()
}

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// lcm of the nonzero maximal minors of every piece's column matrix.
fn period(finite: &[FinitePiece], m: usize) -> BigInt {
    let mut p = BigInt::one();
    for f in finite {
        let r = f.rank();
        for rows in matrix::subsets(m, r) {
            for cols in matrix::subsets(f.cols.len(), r) {
                let sub: Vec<Vec<BigInt>> =
                    rows.iter().map(|&i| cols.iter().map(|&j| f.cols[j][i].clone()).collect()).collect();
                if let Some((d, _)) = matrix::det_inverse(&sub) {
                    p = p.lcm(&d.to_integer().abs());
                }
            }
        }
    }
    p
}

/// Sign cells of the forms that contain lattice points.
fn cells(forms: &[Lin], bs: &[String]) -> Vec<Vec<Atom>> {
    let mut cells = vec![Vec::new()];
    for f in forms {
        let mut next = Vec::new();
        for c in &cells {
            for lit in [Atom::Le(f.add_constant(1)), Atom::Eq(f.clone()), Atom::Le(f.neg().add_constant(1))] {
                let mut atoms = c.clone();
                atoms.push(lit);
                if let Some(atoms) = semilinear::conj(atoms) {
                    if !semilinear::cone_points(&atoms, bs).is_empty() {
                        next.push(atoms);
                    }
                }
            }
        }
        cells = next;
    }
    cells
}

/// `c + H·ε + N·(p·H)` for every `ε ∈ {0..p-1}^r`.
fn refine(l: &Lattice, p: &BigInt) -> Vec<Lattice> {
    let p = p.to_biguint().expect("positive period");
    if p.is_one() {
        return vec![l.clone()];
    }
    let gens: Vec<Vec<BigUint>> = l.generators.iter().map(|g| g.iter().map(|x| x * &p).collect()).collect();
    let mut out = Vec::new();
    let r = l.generators.len();
    let mut eps = vec![BigUint::zero(); r];
    loop {
        out.push(Lattice { base: l.at(&eps), generators: gens.clone() });
        let mut i = 0;
        loop {
            if i == r {
                return out;
            }
            eps[i] += 1u32;
            if eps[i] < p {
                break;
            }
            eps[i] = BigUint::zero();
            i += 1;
        }
    }
}

fn fit(
    finite: &[FinitePiece],
    inf: &SemilinearSet,
    m: usize,
    degree: usize,
) -> Result<Vec<(Lattice, Polynomial)>, CountingError> {
    let bs = names("b", m);
    let f = |b: &[BigInt]| -> BigUint { finite.iter().map(|p| p.count(b)).sum() };
    let period = period(finite, m);
    let outside_inf = inf.to_qf(&bs).negate();
    let mut out = Vec::new();
    for cell in cells(&chamber_forms(finite, &bs), &bs) {
        let q = Qf::and2(Qf::and(cell.into_iter().map(Qf::Atom).collect()), outside_inf.clone());
        for l in semilinear::from_qf(&q, &bs).pieces {
            fit_lattice(l, &period, degree, &f, &mut out)?;
        }
    }
    // merge neighbouring pieces on which one polynomial serves
    let mut out = semilinear::coalesce_labeled(out, |group| {
        let parts = &group[1..];
        let (_, best) = parts.iter().max_by_key(|(l, _)| l.generators.len()).expect("nonempty group");
        parts.iter().all(|(l, p)| agrees_on(best, p, l)).then(|| best.clone())
    });
    out.sort();
    Ok(out)
}

/// Fit `f` on `l`, splitting only where one polynomial does not serve.
///
/// `f` is a polynomial of degree `<= degree` on every sublattice of the
/// refinement of `l` by `period`, so a candidate that matches `f` on the
/// interpolation simplex of each of those sublattices equals `f` on all of
/// `l`. When the candidate fails, `l` is refined by one prime factor of the
/// period and the parts are fitted recursively.
fn fit_lattice(
    l: Lattice,
    period: &BigInt,
    degree: usize,
    f: &dyn Fn(&[BigInt]) -> BigUint,
    out: &mut Vec<(Lattice, Polynomial)>,
) -> Result<(), CountingError> {
    let candidate = interpolate(&l, degree, f);
    if period.is_one() {
        out.push((l.clone(), candidate?));
        return Ok(());
    }
    if let Ok(g) = candidate {
        if matches_on_refinement(&l, period, degree, &g, f) {
            out.push((l, g));
            return Ok(());
        }
    }
    let q = smallest_prime_factor(period);
    let rest = period / &q;
    for c in refine(&l, &q) {
        fit_lattice(c, &rest, degree, f, out)?;
    }
    Ok(())
}

fn matches_on_refinement(l: &Lattice, period: &BigInt, degree: usize, g: &Polynomial, f: &dyn Fn(&[BigInt]) -> BigUint) -> bool {
    let nodes = exponents(l.generators.len(), degree);
    refine(l, period).iter().all(|c| {
        nodes.iter().all(|mu| {
            let x = to_int(&c.at(&mu.iter().map(|&v| BigUint::from(v)).collect::<Vec<_>>()));
            g.eval(&x) == Q::from_integer(BigInt::from(f(&x)))
        })
    })
}

fn smallest_prime_factor(n: &BigInt) -> BigInt {
    let mut d = BigInt::from(2);
    while &d * &d <= *n {
        if (n % &d).is_zero() {
            return d;
        }
        d += 1;
    }
    n.clone()
}

/// Do `p` and `q` coincide on the lattice `l`? Their difference, in the
/// lattice's coefficient coordinates, has degree `<= d` and vanishes
/// identically iff it vanishes on the simplex `|μ| <= d`.
fn agrees_on(p: &Polynomial, q: &Polynomial, l: &Lattice) -> bool {
    let d = p.degree().max(q.degree()) as usize;
    exponents(l.generators.len(), d).iter().all(|mu| {
        let x = to_int(&l.at(&mu.iter().map(|&v| BigUint::from(v)).collect::<Vec<_>>()));
        p.eval(&x) == q.eval(&x)
    })
}

/// Exponent vectors in `r` variables of total degree `<= d`.
fn exponents(r: usize, d: usize) -> Vec<Vec<u32>> {
    if r == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..=d {
        for mut rest in exponents(r - 1, d - first) {
            rest.insert(0, first as u32);
            out.push(rest);
        }
    }
    out
}

/// The polynomial (in the ambient coordinates) agreeing with `f` on `l`,
/// fitted on the simplex `|μ| <= degree` of coefficient vectors and checked
/// on the next two layers and a far point.
fn interpolate(l: &Lattice, degree: usize, f: &dyn Fn(&[BigInt]) -> BigUint) -> Result<Polynomial, CountingError> {
    let m = l.dim();
    let r = l.generators.len();
    let point = |mu: &[u32]| -> Vec<BigInt> {
        to_int(&l.at(&mu.iter().map(|&x| BigUint::from(x)).collect::<Vec<_>>()))
    };
    let exps = exponents(r, degree);
    let mono = |mu: &[u32], e: &[u32]| -> BigInt {
        mu.iter().zip(e).map(|(&x, &k)| num_traits::pow(BigInt::from(x), k as usize)).product()
    };
    let a: Vec<Vec<BigInt>> = exps.iter().map(|mu| exps.iter().map(|e| mono(mu, e)).collect()).collect();
    let rhs: Vec<BigInt> = exps.iter().map(|mu| BigInt::from(f(&point(mu)))).collect();
    let coef = matrix::solve_unique(&a, &rhs).ok_or_else(|| CountingError::Inconsistent("singular interpolation".into()))?;
    let g = Polynomial::from_terms(r, coef.into_iter().zip(exps.iter().cloned()));

    let mut fresh: Vec<Vec<u32>> = exponents(r, degree + 2).into_iter().filter(|e| e.iter().sum::<u32>() as usize > degree).collect();
    fresh.truncate(40);
    fresh.push(vec![2 * degree as u32 + 3; r]);
    for mu in fresh {
        let want = f(&point(&mu));
        let mu_i: Vec<BigInt> = mu.iter().map(|&x| BigInt::from(x)).collect();
        if g.eval(&mu_i) != Q::from_integer(BigInt::from(want.clone())) {
            return Err(CountingError::Inconsistent(format!(
                "interpolated {g} disagrees with the count {want} at {:?} on {l:?}",
                point(&mu)
            )));
        }
    }

    // μ = H_R⁻¹ (u_R − c_R) on independent rows R
    if r == 0 {
        return Ok(Polynomial::constant(m, g.eval(&[])));
    }
    let h: Vec<Vec<BigInt>> = (0..m).map(|i| l.generators.iter().map(|g| BigInt::from(g[i].clone())).collect()).collect();
    let rows = matrix::independent_rows(&h);
    let sub: Vec<Vec<BigInt>> = rows.iter().map(|&i| h[i].clone()).collect();
    let (_, inv) = matrix::det_inverse(&sub).expect("independent rows");
    let base = to_int(&l.base);
    let mus: Vec<Polynomial> = inv
        .iter()
        .map(|row| {
            row.iter().zip(&rows).fold(Polynomial::zero(m), |acc, (k, &i)| {
                let t = Polynomial::var(m, i).add(&Polynomial::constant(m, -Q::from_integer(base[i].clone())));
                acc.add(&t.scale(k))
            })
        })
        .collect();
    Ok(g.compose(&mus))
}

// ---------------------------------------------------------------------------
// partition functions

/// `φ_A(u) = |{λ ∈ N^n : Aλ = u}|` for an integer `d×n` matrix, as the
/// section count of `{(λ, u) : Aλ = u}`.
pub fn partition_function(a: &[Vec<BigInt>]) -> PiecewisePolynomial {
    let d = a.len();
    let n = a.first().map_or(0, Vec::len);
    assert!(d > 0 && n > 0, "partition function of an empty matrix");
    assert!(a.iter().all(|r| r.len() == n), "ragged matrix");
    let ls = names("l", n);
    let us = names("u", d);
    let eqs = a.iter().zip(&us).map(|(row, u)| {
        let side = |pos: bool| {
            Term::sum(row.iter().zip(&ls).filter(|(c, _)| c.is_positive() == pos && !c.is_zero()).map(|(c, l)| {
                Term::scale(c.abs().to_biguint().expect("nonzero magnitude"), Term::var(l.clone()))
            }))
        };
        Formula::eq(side(true), Term::add(Term::var(u.clone()), side(false)))
    });
    let vars: Vec<String> = ls.iter().chain(&us).cloned().collect();
    let s = semilinear::from_formula(&Formula::and_all(eqs), &vars);
    let mut p = section_count(&s, n).expect("n < n + d");
    p.degree_bound = n - matrix::rank(a);
    assert!(p.degree() <= p.degree_bound, "partition function degree exceeds n - rank");
    p
}

// ---------------------------------------------------------------------------
// closure operations

/// Pointwise sum on the common refinement of the domains; infinite where
/// either summand is.
pub fn add(p: &PiecewisePolynomial, q: &PiecewisePolynomial) -> PiecewisePolynomial {
    assert_eq!(p.param_dim, q.param_dim, "parameter dimensions differ");
    let m = p.param_dim;
    let bs = names("b", m);
    let mut pieces = Vec::new();
    for (l1, f1) in &p.pieces {
        for (l2, f2) in &q.pieces {
            let both = Qf::and2(l1.to_qf(&bs), l2.to_qf(&bs));
            for l in semilinear::from_qf(&both, &bs).pieces {
                pieces.push((l, f1.add(f2)));
            }
        }
    }
    pieces.sort();
    // infinite: one side infinite, the other defined
    let inf_qf = |x: &PiecewisePolynomial| x.infinite.as_ref().map_or(Qf::False, |s| s.to_qf(&bs));
    let dom_qf = |x: &PiecewisePolynomial| Qf::or2(Qf::or(x.pieces.iter().map(|(l, _)| l.to_qf(&bs)).collect()), inf_qf(x));
    let inf = Qf::and(vec![Qf::or2(inf_qf(p), inf_qf(q)), dom_qf(p), dom_qf(q)]);
    let inf = semilinear::from_qf(&inf, &bs);
    PiecewisePolynomial {
        param_dim: m,
        degree_bound: p.degree_bound.max(q.degree_bound),
        pieces,
        infinite: (!inf.is_empty()).then_some(inf),
    }
}

/// Restriction to the definable subset `t` of the parameter space.
pub fn restrict(p: &PiecewisePolynomial, t: &SemilinearSet) -> PiecewisePolynomial {
    assert_eq!(p.param_dim, t.dim, "parameter dimensions differ");
    let bs = names("b", p.param_dim);
    let tq = t.to_qf(&bs);
    let mut pieces = Vec::new();
    for (l, f) in &p.pieces {
        for c in semilinear::from_qf(&Qf::and2(l.to_qf(&bs), tq.clone()), &bs).pieces {
            pieces.push((c, f.clone()));
        }
    }
    pieces.sort();
    let infinite = p
        .infinite
        .as_ref()
        .map(|s| semilinear::from_qf(&Qf::and2(s.to_qf(&bs), tq.clone()), &bs))
        .filter(|s| !s.is_empty());
    PiecewisePolynomial { param_dim: p.param_dim, degree_bound: p.degree_bound, pieces, infinite }
}

// ---------------------------------------------------------------------------
// counting quantifiers

/// Replace every counting quantifier, innermost first, by an equivalent
/// quantifier-free formula. Other quantifiers are kept.
pub fn eliminate_counting(f: &Formula) -> Formula {
    let go = |g: &Formula| Box::new(eliminate_counting(g));
    match f {
        Formula::True | Formula::False | Formula::Eq(..) | Formula::Lt(..) | Formula::Le(..) | Formula::CongMod(..) => {
            f.clone()
        }
        Formula::Not(a) => Formula::Not(go(a)),
        Formula::And(a, b) => Formula::And(go(a), go(b)),
        Formula::Or(a, b) => Formula::Or(go(a), go(b)),
        Formula::Implies(a, b) => Formula::Implies(go(a), go(b)),
        Formula::Iff(a, b) => Formula::Iff(go(a), go(b)),
        Formula::Exists(v, a) => Formula::Exists(v.clone(), go(a)),
        Formula::Forall(v, a) => Formula::Forall(v.clone(), go(a)),
        Formula::Count { count, bound, body } => {
            let body = qe::to_qf(&eliminate_counting(body));
            eliminate_count_qf(count, bound, &body).to_formula()
        }
    }
}

/// `count y z. body` with a quantifier-free body. Sections that are
/// infinite make the formula false.
pub(crate) fn eliminate_count_qf(count: &str, bound: &str, body: &Qf) -> Qf {
    if count == bound {
        // the count refers to the outer variable; rename the bound one
        let fresh = crate::formula::fresh_var(bound);
        let map = [(bound.to_string(), fresh.clone())].into_iter().collect();
        return eliminate_count_qf(count, &fresh, &body.rename(&map));
    }
    let params: Vec<String> = body.vars().into_iter().filter(|v| v != bound).collect();
    let vars: Vec<String> = std::iter::once(bound.to_string()).chain(params.iter().cloned()).collect();
    let s = semilinear::from_qf(body, &vars);
    let y = Lin::var(count.to_string());
    if params.is_empty() {
        if !s.is_finite() {
            return Qf::False;
        }
        return Atom::Eq(y.add_constant(-BigInt::from(s.pieces.len()))).normalize();
    }
    let p = section_count(&s, 1).expect("one counted coordinate and a nonempty parameter part");
    let mut cases = Vec::new();
    for (l, f) in &p.pieces {
        assert!(f.degree() <= 1, "single-variable section counts are affine");
        // den·y = den·f(params)
        let den = f.terms().fold(BigInt::one(), |a, (_, c)| a.lcm(c.denom()));
        let mut rhs = Lin::zero();
        for (e, c) in f.terms() {
            let k = (c * Q::from_integer(den.clone())).to_integer();
            match e.iter().position(|&x| x == 1) {
                Some(i) => rhs.add_term(&params[i], &k),
                None => rhs = rhs.add_constant(k),
            }
        }
        let eq = Atom::Eq(y.scale(&den).sub(&rhs)).normalize();
        cases.push(Qf::and2(l.to_qf(&params), eq));
    }
    Qf::or(cases)
}
