//! Semilinear sets as disjoint unions of fundamental lattices.

use std::collections::BTreeSet;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{Formula, Term};
use crate::linear::{Lin, Qf};
use crate::matrix::{self, Q};
use crate::qe;

mod decompose;

pub use decompose::from_qf;
pub(crate) use decompose::{coalesce_labeled, cone_points, conj};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemilinearError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid lattice JSON: {0}")]
    Json(String),
}

/// `{ base + Σ kᵢ·generators[i] : kᵢ ∈ N }`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lattice {
    pub base: Vec<BigUint>,
    pub generators: Vec<Vec<BigUint>>,
}

/// A lattice whose generators are linearly independent.
pub type FundamentalLattice = Lattice;

/// Disjoint union of fundamental lattices in `N^dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemilinearSet {
    pub dim: usize,
    pub pieces: Vec<FundamentalLattice>,
}

impl Lattice {
    pub fn new(base: Vec<BigUint>, generators: Vec<Vec<BigUint>>) -> Lattice {
        debug_assert!(generators.iter().all(|g| g.len() == base.len()));
        Lattice { base, generators }
    }

    /// Convenience constructor from small integers.
    pub fn from_u64(base: &[u64], generators: &[&[u64]]) -> Lattice {
        Lattice {
            base: base.iter().map(|&x| BigUint::from(x)).collect(),
            generators: generators
                .iter()
                .map(|g| g.iter().map(|&x| BigUint::from(x)).collect())
                .collect(),
        }
    }

    pub fn point(p: Vec<BigUint>) -> Lattice {
        Lattice { base: p, generators: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn base_int(&self) -> Vec<BigInt> {
        self.base.iter().map(|x| BigInt::from(x.clone())).collect()
    }

    pub fn gens_int(&self) -> Vec<Vec<BigInt>> {
        self.generators
            .iter()
            .map(|g| g.iter().map(|x| BigInt::from(x.clone())).collect())
            .collect()
    }

    pub fn is_fundamental(&self) -> bool {
        matrix::independent(&self.gens_int())
    }

    /// Unique coefficient vector of `p`, if `p` is a member. Requires a
    /// fundamental lattice.
    pub fn coefficients(&self, p: &[BigUint]) -> Option<Vec<BigUint>> {
        // cheap rejections: generators are non-negative
        for (i, (x, c)) in p.iter().zip(&self.base).enumerate() {
            if x < c || (x != c && self.generators.iter().all(|g| g[i].is_zero())) {
                return None;
            }
        }
        let rhs: Vec<BigInt> = p
            .iter()
            .zip(&self.base)
            .map(|(x, c)| BigInt::from(x.clone()) - BigInt::from(c.clone()))
            .collect();
        if self.generators.is_empty() {
            return rhs.iter().all(Zero::is_zero).then(Vec::new);
        }
        let cols = matrix::transpose(&self.gens_int());
        let sol = matrix::solve_unique(&cols, &rhs)?;
        sol.into_iter()
            .map(|l| {
                if l.is_integer() && !l.is_negative() {
                    l.to_integer().to_biguint()
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn contains(&self, p: &[BigUint]) -> bool {
        self.coefficients(p).is_some()
    }

    /// The point with coefficient vector `lambda`.
    pub fn at(&self, lambda: &[BigUint]) -> Vec<BigUint> {
        let mut p = self.base.clone();
        for (l, g) in lambda.iter().zip(&self.generators) {
            for (x, gi) in p.iter_mut().zip(g) {
                *x += l * gi;
            }
        }
        p
    }

    /// `x̄ = base + Σ λᵢ gᵢ` with the coefficients existentially quantified.
    pub fn membership_formula(&self, vars: &[String]) -> Formula {
        let lambdas: Vec<String> = (0..self.generators.len()).map(|_| crate::formula::fresh_var("l")).collect();
        let eqs = vars.iter().enumerate().map(|(i, v)| {
            let mut rhs = vec![Term::Num(self.base[i].clone())];
            for (l, g) in lambdas.iter().zip(&self.generators) {
                if !g[i].is_zero() {
                    rhs.push(Term::scale(g[i].clone(), Term::var(l.clone())));
                }
            }
            Formula::eq(Term::var(v.clone()), Term::sum(rhs))
        });
        Formula::exists_many(&lambdas, Formula::and_all(eqs))
    }

    /// Coefficients of a point of a fundamental lattice as linear forms:
    /// returns `(det, P, L)` with `det·λᵢ = Lᵢ(x̄)` on the lattice, where `P`
    /// are the independent pivot rows used.
    pub fn coefficient_forms(&self, vars: &[String]) -> (BigInt, Vec<usize>, Vec<Lin>) {
        let c = self.base_int();
        let disp: Vec<Lin> = (0..self.dim()).map(|i| Lin::var(vars[i].clone()).add_constant(-&c[i])).collect();
        let rows = matrix::transpose(&self.gens_int()); // k × t
        let pivots = matrix::independent_rows(&rows);
        assert_eq!(pivots.len(), self.generators.len(), "coefficient forms need a fundamental lattice");
        if pivots.is_empty() {
            return (BigInt::one(), pivots, Vec::new());
        }
        let sq: Vec<Vec<BigInt>> = pivots.iter().map(|&i| rows[i].clone()).collect();
        let (det, inv) = matrix::det_inverse(&sq).expect("pivot block is invertible");
        let det = det.to_integer();
        // adj = det · inv is integral
        let adj: Vec<Vec<BigInt>> = inv
            .iter()
            .map(|r| r.iter().map(|x| (x * Q::from_integer(det.clone())).to_integer()).collect())
            .collect();
        let t = pivots.len();
        let scaled = (0..t)
            .map(|i| (0..t).fold(Lin::zero(), |acc, j| acc.add(&disp[pivots[j]].scale(&adj[i][j]))))
            .collect();
        (det, pivots, scaled)
    }

    /// Quantifier-free membership condition for a fundamental lattice.
    ///
    /// Pick independent pivot rows `P` of the generator matrix, solve
    /// `λ = G_P⁻¹ (x_P − c_P)` and require integrality (congruences),
    /// non-negativity, and consistency of the remaining rows.
    pub fn to_qf(&self, vars: &[String]) -> Qf {
        let k = self.dim();
        let c = self.base_int();
        let disp: Vec<Lin> = (0..k).map(|i| Lin::var(vars[i].clone()).add_constant(-&c[i])).collect();
        if self.generators.is_empty() {
            return Qf::and(disp.into_iter().map(Qf::eq).collect());
        }
        let rows = matrix::transpose(&self.gens_int()); // k × t
        let (det, pivots, scaled_lambda) = self.coefficient_forms(vars);
        let mut out = Vec::new();
        let t = pivots.len();
        let abs = det.abs();
        for sl in &scaled_lambda {
            out.push(Qf::dvd(abs.clone(), sl.clone()));
            // λ >= 0
            if det.is_positive() {
                out.push(Qf::nonneg(sl.clone()));
            } else {
                out.push(Qf::le(sl.clone()));
            }
        }
        for r in 0..k {
            if pivots.contains(&r) {
                continue;
            }
            // det·(x_r − c_r) = Σᵢ G[r][i] · det·λᵢ
            let rhs = (0..t).fold(Lin::zero(), |acc, i| acc.add(&scaled_lambda[i].scale(&rows[r][i])));
            out.push(Qf::eq(disp[r].scale(&det).sub(&rhs)));
        }
        Qf::and(out)
    }
}

impl SemilinearSet {
    pub fn empty(dim: usize) -> SemilinearSet {
        SemilinearSet { dim, pieces: Vec::new() }
    }

    /// All of `N^dim`.
    pub fn full(dim: usize) -> SemilinearSet {
        let gens = (0..dim)
            .map(|i| (0..dim).map(|j| BigUint::from((i == j) as u32)).collect())
            .collect();
        SemilinearSet { dim, pieces: vec![Lattice::new(vec![BigUint::zero(); dim], gens)] }
    }

    /// Wrap pieces, sorting them into canonical order. The caller vouches for
    /// disjointness and fundamentality.
    pub fn from_pieces(dim: usize, mut pieces: Vec<FundamentalLattice>) -> SemilinearSet {
        for p in &mut pieces {
            p.generators.sort_by(|a, b| b.cmp(a));
        }
        pieces.sort();
        pieces.dedup();
        SemilinearSet { dim, pieces }
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.pieces.iter().all(|p| p.generators.is_empty())
    }

    pub fn member(&self, p: &[BigUint]) -> Result<bool, SemilinearError> {
        if p.len() != self.dim {
            return Err(SemilinearError::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        Ok(self.pieces.iter().any(|l| l.contains(p)))
    }

    /// Index of the piece containing `p`.
    pub fn piece_of(&self, p: &[BigUint]) -> Option<usize> {
        self.pieces.iter().position(|l| l.contains(p))
    }

    /// All members with every coordinate `<= bound`, sorted lexicographically.
    pub fn enumerate(&self, bound: u64) -> Vec<Vec<BigUint>> {
        let bound = BigUint::from(bound);
        let mut out = BTreeSet::new();
        for l in &self.pieces {
            if l.base.iter().any(|x| x > &bound) {
                continue;
            }
            walk(l, 0, l.base.clone(), &bound, &mut out);
        }
        out.into_iter().collect()
    }

    pub fn to_qf(&self, vars: &[String]) -> Qf {
        Qf::or(self.pieces.iter().map(|l| l.to_qf(vars)).collect())
    }

    pub fn to_formula(&self, vars: &[String]) -> Formula {
        self.to_qf(vars).to_formula()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SetJson::from(self)).expect("serializable")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<SemilinearSet, SemilinearError> {
        let j: SetJson = serde_json::from_value(v.clone()).map_err(|e| SemilinearError::Json(e.to_string()))?;
        j.try_into()
    }
}

/// Depth-first walk over coefficient vectors; generators are non-negative,
/// so leaving the box is final.
fn walk(l: &Lattice, from: usize, p: Vec<BigUint>, bound: &BigUint, out: &mut BTreeSet<Vec<BigUint>>) {
    out.insert(p.clone());
    for i in from..l.generators.len() {
        let mut q = p.clone();
        for (x, g) in q.iter_mut().zip(&l.generators[i]) {
            *x += g;
        }
        if q.iter().all(|x| x <= bound) {
            walk(l, i, q, bound, out);
        }
    }
}

/// Convert a quantifier-free formula into a disjoint union of fundamental
/// lattices over the coordinates `vars`.
pub fn from_formula(f: &Formula, vars: &[String]) -> SemilinearSet {
    from_qf(&qe::to_qf(f), vars)
}

/// Rewrite an arbitrary list of lattices as a disjoint union of fundamental
/// ones with the same point set.
pub fn disjointify(ls: &[Lattice]) -> Vec<FundamentalLattice> {
    let Some(first) = ls.first() else { return Vec::new() };
    let k = first.dim();
    let vars: Vec<String> = (0..k).map(|i| format!("x{i}")).collect();
    let union = Formula::or_all(ls.iter().map(|l| l.membership_formula(&vars)));
    from_qf(&qe::to_qf(&union), &vars).pieces
}

/// Do two lattices of the same dimension share a point?
pub fn lattices_intersect(a: &Lattice, b: &Lattice) -> bool {
    if let Some(known) = quick_intersect(a, b) {
        return known;
    }
    let vars: Vec<String> = (0..a.dim()).map(|i| format!("x{i}")).collect();
    let f = Formula::and(a.membership_formula(&vars), b.membership_formula(&vars));
    qe::satisfiable(&f)
}

/// Pieces pairwise disjoint and each fundamental.
/// Cheap decisions for common cases; `None` when QE is needed.
fn quick_intersect(a: &Lattice, b: &Lattice) -> Option<bool> {
    let fixed = |l: &Lattice, i: usize| l.generators.iter().all(|g| g[i].is_zero());
    for i in 0..a.dim() {
        let (fa, fb) = (fixed(a, i), fixed(b, i));
        if (fa && (a.base[i] < b.base[i] || fb && a.base[i] != b.base[i])) || (fb && b.base[i] < a.base[i]) {
            return Some(false);
        }
    }
    if a.generators.is_empty() {
        return Some(b.contains(&a.base));
    }
    if b.generators.is_empty() {
        return Some(a.contains(&b.base));
    }
    // the real relaxation of base_a + G_a·λ = base_b + G_b·μ must be feasible
    let n = a.dim();
    let rows: Vec<Vec<BigInt>> = (0..n)
        .map(|i| {
            a.generators.iter().map(|g| BigInt::from(g[i].clone()))
                .chain(b.generators.iter().map(|g| -BigInt::from(g[i].clone())))
                .collect()
        })
        .collect();
    let rhs: Vec<BigInt> = b.base_int().iter().zip(a.base_int()).map(|(x, y)| x - y).collect();
    if !matrix::real_feasible(&rows, &rhs) {
        return Some(false);
    }
    // the integer cosets must meet
    let gens: Vec<Vec<BigInt>> = a.gens_int().into_iter().chain(b.gens_int()).collect();
    let mut diff: Vec<BigInt> = b.base_int().iter().zip(a.base_int()).map(|(x, y)| x - y).collect();
    for row in matrix::lattice_basis(&gens, n) {
        let c = row.iter().position(|x| !x.is_zero()).expect("basis rows are nonzero");
        let (f, r) = diff[c].div_rem(&row[c]);
        if !r.is_zero() {
            return Some(false);
        }
        for (d, x) in diff.iter_mut().zip(&row) {
            *d -= &f * x;
        }
    }
    if diff.iter().any(|x| !x.is_zero()) {
        return Some(false);
    }
    // same independent generators: the bases must differ by an integer
    // combination, and then far enough out both coefficient vectors are ≥ 0
    if a.generators == b.generators && a.is_fundamental() {
        let diff: Vec<BigInt> = a.base_int().iter().zip(b.base_int()).map(|(x, y)| y - x).collect();
        let sol = matrix::solve_unique(&matrix::transpose(&a.gens_int()), &diff);
        return Some(sol.is_some_and(|d| d.iter().all(|x| x.is_integer())));
    }
    None
}

pub fn check_invariants(s: &SemilinearSet) -> bool {
    s.pieces.iter().all(|p| p.dim() == s.dim && p.is_fundamental())
        && (0..s.pieces.len())
            .all(|i| (i + 1..s.pieces.len()).all(|j| !lattices_intersect(&s.pieces[i], &s.pieces[j])))
}

// ---------------------------------------------------------------------------
// JSON

#[derive(Serialize, Deserialize)]
struct LatticeJson {
    base: Vec<String>,
    generators: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct SetJson {
    dim: usize,
    lattices: Vec<LatticeJson>,
}

impl From<&Lattice> for LatticeJson {
    fn from(l: &Lattice) -> Self {
        LatticeJson {
            base: l.base.iter().map(ToString::to_string).collect(),
            generators: l.generators.iter().map(|g| g.iter().map(ToString::to_string).collect()).collect(),
        }
    }
}

impl From<&SemilinearSet> for SetJson {
    fn from(s: &SemilinearSet) -> Self {
        SetJson { dim: s.dim, lattices: s.pieces.iter().map(LatticeJson::from).collect() }
    }
}

fn parse_vec(v: &[String]) -> Result<Vec<BigUint>, SemilinearError> {
    v.iter()
        .map(|s| s.parse::<BigUint>().map_err(|e| SemilinearError::Json(format!("{s}: {e}"))))
        .collect()
}

impl TryFrom<SetJson> for SemilinearSet {
    type Error = SemilinearError;

    fn try_from(j: SetJson) -> Result<Self, Self::Error> {
        let mut pieces = Vec::new();
        for l in j.lattices {
            let base = parse_vec(&l.base)?;
            if base.len() != j.dim {
                return Err(SemilinearError::DimensionMismatch { expected: j.dim, got: base.len() });
            }
            let generators = l.generators.iter().map(|g| parse_vec(g)).collect::<Result<Vec<_>, _>>()?;
            if let Some(g) = generators.iter().find(|g| g.len() != j.dim) {
                return Err(SemilinearError::DimensionMismatch { expected: j.dim, got: g.len() });
            }
            pieces.push(Lattice { base, generators });
        }
        Ok(SemilinearSet { dim: j.dim, pieces })
    }
}

pub(crate) fn lattice_json(l: &Lattice) -> serde_json::Value {
    serde_json::to_value(LatticeJson::from(l)).expect("serializable")
}

/// Largest coordinate among the bases, as a hint for enumeration boxes.
pub fn max_base_coordinate(s: &SemilinearSet) -> u64 {
    s.pieces
        .iter()
        .flat_map(|l| l.base.iter())
        .map(|x| x.to_u64().unwrap_or(u64::MAX))
        .max()
        .unwrap_or(0)
}

pub(crate) fn lattice_from_json(v: &serde_json::Value) -> Result<Lattice, SemilinearError> {
    let l: LatticeJson = serde_json::from_value(v.clone()).map_err(|e| SemilinearError::Json(e.to_string()))?;
    let base = parse_vec(&l.base)?;
    let generators = l.generators.iter().map(|g| parse_vec(g)).collect::<Result<Vec<_>, _>>()?;
    if let Some(g) = generators.iter().find(|g| g.len() != base.len()) {
        return Err(SemilinearError::DimensionMismatch { expected: base.len(), got: g.len() });
    }
    Ok(Lattice { base, generators })
}

#[cfg(test)]
mod tests;
