//! Disjoint fundamental decomposition of a quantifier-free formula.
//!
//! The formula is first split into pairwise exclusive conjunctions of
//! literals. The solutions of one conjunction are the points at height 1 of
//! the homogenised cone `{(x̄, t) : x̄ >= 0, t >= 0, A x̄ <= b t}` inside the
//! lattice cut out by its equalities and congruences. A pulling
//! triangulation of that cone, made half-open with respect to a generic
//! interior direction, splits it into disjoint simplicial cones, and the
//! lattice points of each are a finite set of parallelepiped points plus
//! non-negative combinations of the rays.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use std::collections::BTreeSet;

use super::{Lattice, SemilinearSet};
use crate::linear::{Atom, Qf};
use crate::matrix::{self, Q};

/// Decompose `{x̄ ∈ N^k : q(x̄)}` over the coordinates `vars`.
pub fn from_qf(q: &Qf, vars: &[String]) -> SemilinearSet {
    for v in q.vars() {
        assert!(vars.contains(&v), "variable `{v}` is not among the coordinates");
    }
    let mut pieces = Vec::new();
    for leaf in leaves(q) {
        pieces.extend(cone_points(&leaf, vars));
    }
    let pieces = coalesce(pieces);
    SemilinearSet::from_pieces(vars.len(), pieces)
}

fn canonical(mut l: Lattice) -> Lattice {
    l.generators.sort_by(|a, b| b.cmp(a));
    l
}

fn coalesce(pieces: Vec<Lattice>) -> Vec<Lattice> {
    coalesce_labeled(pieces.into_iter().map(|l| (l, ())).collect(), |_| Some(()))
        .into_iter()
        .map(|(l, _)| l)
        .collect()
}

/// Merge disjoint labelled pieces whose union is again a single fundamental
/// lattice: a full set of residues `b + j·h` (`j < k`) over generator `k·h`,
/// or a piece sitting one step below another along one of its generators.
/// `join` gives the label of the union (the merged lattice comes first), or
/// `None` to refuse the merge.
pub(crate) fn coalesce_labeled<T: Clone>(
    pieces: Vec<(Lattice, T)>,
    join: impl Fn(&[(Lattice, T)]) -> Option<T>,
) -> Vec<(Lattice, T)> {
    let mut set: std::collections::BTreeMap<Lattice, T> =
        pieces.into_iter().map(|(l, t)| (canonical(l), t)).collect();
    let mut residues = true;
    loop {
        let mut changed = false;
        let snapshot: Vec<Lattice> = set.keys().cloned().collect();
        for l in snapshot {
            if !set.contains_key(&l) {
                continue;
            }
            if let Some((old, new, label)) = merge_with(&set, &l, residues, &join) {
                for o in &old {
                    set.remove(o);
                }
                set.insert(new, label);
                changed = true;
            }
        }
        // residue merges first: stepping below can break up residue groups
        if !changed {
            if !residues {
                return set.into_iter().collect();
            }
            residues = false;
        } else {
            residues = true;
        }
    }
}

type Merge<T> = (Vec<Lattice>, Lattice, T);

fn merge_with<T: Clone>(
    set: &std::collections::BTreeMap<Lattice, T>,
    l: &Lattice,
    residues: bool,
    join: &impl Fn(&[(Lattice, T)]) -> Option<T>,
) -> Option<Merge<T>> {
    let try_join = |group: Vec<Lattice>, merged: Lattice| -> Option<Merge<T>> {
        let mut labelled = vec![(merged.clone(), set[&group[0]].clone())];
        labelled.extend(group.iter().map(|g| (g.clone(), set[g].clone())));
        join(&labelled).map(|t| (group, merged, t))
    };
    for (gi, g) in l.generators.iter().enumerate() {
        let rest = || {
            let mut r = l.generators.clone();
            r.remove(gi);
            r
        };
        if !residues {
            // one step below, without `g`
            if l.base.iter().zip(g).all(|(b, x)| b >= x) {
                let below: Vec<BigUint> = l.base.iter().zip(g).map(|(b, x)| b - x).collect();
                let other = Lattice { base: below.clone(), generators: rest() };
                if set.contains_key(&other) {
                    let merged = Lattice { base: below, generators: l.generators.clone() };
                    if let Some(m) = try_join(vec![l.clone(), other], merged) {
                        return Some(m);
                    }
                }
            }
            continue;
        }
        // residues along a proper divisor of `g`
        let content = g.iter().fold(BigUint::zero(), |a, x| a.gcd(x));
        let Some(content) = content.to_u64() else { continue };
        for k in 2..=content.min(64) {
            if content % k != 0 {
                continue;
            }
            let h: Vec<BigUint> = g.iter().map(|x| x / k).collect();
            let mut group = vec![l.clone()];
            for j in 1..k {
                let base = l.base.iter().zip(&h).map(|(b, x)| b + x * j).collect();
                let other = Lattice { base, generators: l.generators.clone() };
                if !set.contains_key(&other) {
                    break;
                }
                group.push(other);
            }
            if group.len() as u64 == k {
                let mut gens = rest();
                gens.push(h);
                let merged = canonical(Lattice { base: l.base.clone(), generators: gens });
                if let Some(m) = try_join(group, merged) {
                    return Some(m);
                }
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// exclusive conjunctions

fn leaves(q: &Qf) -> Vec<Vec<Atom>> {
    let mut out = Vec::new();
    expand(q.clone(), Vec::new(), &mut out);
    out
}

/// Literals whose disjunction is `¬a`, pairwise exclusive.
fn negations(a: &Atom) -> Vec<Atom> {
    match a {
        Atom::Eq(l) => vec![Atom::Le(l.add_constant(1)), Atom::Le(l.neg().add_constant(1))],
        Atom::Ne(l) => vec![Atom::Eq(l.clone())],
        other => vec![other.negate()],
    }
}

pub(crate) fn conj(atoms: Vec<Atom>) -> Option<Vec<Atom>> {
    match Qf::and(atoms.into_iter().map(Atom::normalize).collect()) {
        Qf::False => None,
        Qf::True => Some(Vec::new()),
        Qf::Atom(a) => Some(vec![a]),
        Qf::And(items) => Some(
            items
                .into_iter()
                .map(|i| match i {
                    Qf::Atom(a) => a,
                    other => unreachable!("conjunction of literals produced {other:?}"),
                })
                .collect(),
        ),
        Qf::Or(_) => unreachable!("conjunction of literals produced a disjunction"),
    }
}

fn expand(q: Qf, mut lits: Vec<Atom>, out: &mut Vec<Vec<Atom>>) {
    let rest = match q {
        Qf::False => return,
        Qf::True => Qf::True,
        Qf::Atom(a) => {
            lits.push(a);
            Qf::True
        }
        Qf::And(items) => {
            let mut rest = Vec::new();
            for i in items {
                match i {
                    Qf::Atom(a) => lits.push(a),
                    other => rest.push(other),
                }
            }
            Qf::and(rest)
        }
        or @ Qf::Or(_) => or,
    };
    let Some(lits) = conj(lits) else { return };
    if rest.is_true() {
        split_ne(lits, out);
        return;
    }
    let mut atoms = Vec::new();
    rest.atoms(&mut atoms);
    let a = atoms[0].clone();
    let neg = match a.negate().normalize() {
        Qf::Atom(n) => Some(n),
        _ => None,
    };
    let assign = |val: bool| {
        rest.map_atoms(&mut |b| {
            if *b == a {
                Qf::bool(val)
            } else if Some(b) == neg.as_ref() {
                Qf::bool(!val)
            } else {
                Qf::Atom(b.clone())
            }
        })
    };
    let mut with = lits.clone();
    with.push(a.clone());
    expand(assign(true), with, out);
    let when_false = assign(false);
    for n in negations(&a) {
        let mut with = lits.clone();
        with.push(n);
        expand(when_false.clone(), with, out);
    }
}

/// Replace each disequality by the two exclusive strict inequalities and
/// each non-divisibility by the exclusive nonzero residues.
fn split_ne(lits: Vec<Atom>, out: &mut Vec<Vec<Atom>>) {
    if let Some(i) = lits.iter().position(|a| matches!(a, Atom::NDvd(..))) {
        let Atom::NDvd(m, l) = &lits[i] else { unreachable!() };
        let mut r = BigInt::one();
        while &r < m {
            let mut next = lits.clone();
            next[i] = Atom::Dvd(m.clone(), l.add_constant(r.clone()));
            if let Some(next) = conj(next) {
                split_ne(next, out);
            }
            r += 1;
        }
        return;
    }
    match lits.iter().position(|a| matches!(a, Atom::Ne(_))) {
        None => out.push(lits),
        Some(i) => {
            for n in negations(&Atom::Eq(lits[i].lin().clone())) {
                let mut next = lits.clone();
                next[i] = n;
                if let Some(next) = conj(next) {
                    split_ne(next, out);
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// one conjunction

type Vector = Vec<BigInt>;

fn dot(a: &[BigInt], b: &[BigInt]) -> BigInt {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ zᵢ bᵢ`.
fn combine(z: &[BigInt], basis: &[Vector], n: usize) -> Vector {
    let mut w = vec![BigInt::zero(); n];
    for (zi, b) in z.iter().zip(basis) {
        if zi.is_zero() {
            continue;
        }
        for (x, bi) in w.iter_mut().zip(b) {
            *x += zi * bi;
        }
    }
    w
}

/// Lattice points of `{x̄ >= 0 : lits}` as disjoint fundamental lattices.
/// `lits` holds only `Le`, `Eq` and `Dvd` atoms.
pub(crate) fn cone_points(lits: &[Atom], vars: &[String]) -> Vec<Lattice> {
    let k = vars.len();
    let n = k + 1; // (x̄, t)
    let row = |l: &crate::linear::Lin, sign: i32| -> Vector {
        let mut r: Vector = vars.iter().map(|v| l.coeff(v) * sign).collect();
        r.push(&l.constant * sign);
        r
    };
    let mut ineqs: Vec<Vector> = (0..n)
        .map(|i| (0..n).map(|j| BigInt::from((i == j) as u8)).collect())
        .collect();
    let mut eqs = Vec::new();
    let mut congs = Vec::new();
    for a in lits {
        match a {
            Atom::Le(l) => ineqs.push(row(l, -1)),
            Atom::Eq(l) => eqs.push(row(l, 1)),
            Atom::Dvd(m, l) => congs.push((m.clone(), row(l, 1))),
            other => unreachable!("literal {other:?} should have been split"),
        }
    }
    let Some((basis, rays)) = cone(&ineqs, &eqs, &congs, n) else { return Vec::new() };
    let d = basis.len();
    let height = |z: &[BigInt]| dot(z, &basis.iter().map(|b| b[k].clone()).collect::<Vec<_>>());

    let tight: Vec<Vec<bool>> = ineqs
        .iter()
        .map(|a| {
            let az: Vector = basis.iter().map(|b| dot(a, b)).collect();
            rays.iter().map(|r| dot(&az, r).is_zero()).collect()
        })
        .collect();
    let all: Vec<usize> = (0..rays.len()).collect();
    let simplices = triangulate(&all, d, &rays, &tight);
    let xi = rays.iter().fold(vec![BigInt::zero(); d], |acc, r| acc.iter().zip(r).map(|(a, b)| a + b).collect());

    let to_x = |z: &[BigInt]| -> Vec<BigUint> {
        combine(z, &basis, n)[..k]
            .iter()
            .map(|x| x.to_biguint().expect("cone points are non-negative"))
            .collect()
    };
    let mut out = Vec::new();
    for sigma in simplices {
        let vs: Vec<&Vector> = sigma.iter().map(|&j| &rays[j]).collect();
        let hs: Vec<BigInt> = vs.iter().map(|v| height(v)).collect();
        let gens: Vec<Vec<BigUint>> = vs.iter().zip(&hs).filter(|(_, h)| h.is_zero()).map(|(v, _)| to_x(v)).collect();
        for base in simplex_points(&vs, &hs, &xi, d, &height) {
            out.push(Lattice { base: to_x(&base), generators: gens.clone() });
        }
    }
    out
}

/// Basis of the lattice `{w : eqs·w = 0, congs}` restricted to the linear
/// span of the cone `ineqs·w >= 0`, and the cone's extreme rays in those
/// coordinates. `None` when the cone is `{0}`.
fn cone(ineqs: &[Vector], eqs: &[Vector], congs: &[(BigInt, Vector)], n: usize) -> Option<(Vec<Vector>, Vec<Vector>)> {
    // w with eqs·w = 0 and c·w = m·q for fresh integer q
    let r = congs.len();
    let mut system: Vec<Vector> = eqs.iter().map(|e| e.iter().cloned().chain(vec![BigInt::zero(); r]).collect()).collect();
    for (i, (m, c)) in congs.iter().enumerate() {
        let mut row = c.clone();
        row.extend((0..r).map(|j| if i == j { -m } else { BigInt::zero() }));
        system.push(row);
    }
    let kernel = matrix::int_kernel(&system, n + r);
    let projected: Vec<Vector> = kernel.into_iter().map(|w| w[..n].to_vec()).collect();
    let mut basis = matrix::lattice_basis(&projected, n);
    loop {
        let d = basis.len();
        if d == 0 {
            return None;
        }
        let a: Vec<Vector> = ineqs.iter().map(|a| basis.iter().map(|b| dot(a, b)).collect()).collect();
        let rays = extreme_rays(&a, d);
        if rays.is_empty() {
            return None;
        }
        if matrix::rank(&rays) == d {
            return Some((basis, rays));
        }
        // pass to the span of the cone
        let implicit: Vec<Vector> = a.into_iter().filter(|row| rays.iter().all(|r| dot(row, r).is_zero())).collect();
        let sub = matrix::int_kernel(&implicit, d);
        basis = sub.iter().map(|z| combine(z, &basis, n)).collect();
    }
}

/// Extreme rays (primitive) of the pointed cone `{z : a·z >= 0}` in `Z^d`.
fn extreme_rays(a: &[Vector], d: usize) -> Vec<Vector> {
    let mut out = BTreeSet::new();
    for s in matrix::subsets(a.len(), d - 1) {
        let rows: Vec<Vector> = s.iter().map(|&i| a[i].clone()).collect();
        let kernel = matrix::int_kernel(&rows, d);
        if kernel.len() != 1 {
            continue;
        }
        let v = &kernel[0];
        for cand in [v.clone(), v.iter().map(|x| -x).collect::<Vector>()] {
            if a.iter().all(|row| !dot(row, &cand).is_negative()) {
                out.insert(cand);
            }
        }
    }
    out.into_iter().collect()
}

/// Pulling triangulation of the cone spanned by `face` (of dimension `dim`),
/// always pulling the first ray of each face.
fn triangulate(face: &[usize], dim: usize, rays: &[Vector], tight: &[Vec<bool>]) -> Vec<Vec<usize>> {
    if face.len() == dim {
        return vec![face.to_vec()];
    }
    let apex = face[0];
    let mut facets = BTreeSet::new();
    for t in tight {
        if t[apex] {
            continue;
        }
        let g: Vec<usize> = face.iter().copied().filter(|&j| t[j]).collect();
        if g.len() + 1 >= dim && matrix::rank(&g.iter().map(|&j| rays[j].clone()).collect::<Vec<_>>()) == dim - 1 {
            facets.insert(g);
        }
    }
    let mut out = Vec::new();
    for g in facets {
        for mut s in triangulate(&g, dim - 1, rays, tight) {
            s.insert(0, apex);
            out.push(s);
        }
    }
    out
}

/// Points of height 1 in the half-open simplicial cone on `vs`, modulo the
/// height-0 rays: parallelepiped points of height 1, and parallelepiped
/// points of height 0 shifted by a ray of height 1.
fn simplex_points(
    vs: &[&Vector],
    hs: &[BigInt],
    xi: &[BigInt],
    d: usize,
    height: &dyn Fn(&[BigInt]) -> BigInt,
) -> Vec<Vector> {
    // columns are the rays
    let v: Vec<Vector> = (0..d).map(|i| vs.iter().map(|r| r[i].clone()).collect()).collect();
    let (_, inv) = matrix::det_inverse(&v).expect("simplex rays are independent");
    // a facet is open when the generic direction leaves through it
    let open: Vec<bool> = inv
        .iter()
        .map(|nj| {
            let s: Q = nj.iter().zip(xi).map(|(a, b)| a * matrix::q(b)).sum();
            if !s.is_zero() {
                return s.is_negative();
            }
            nj.iter().find(|x| !x.is_zero()).expect("nonzero normal").is_negative()
        })
        .collect();
    // coset representatives of Z^d / (rays) from a triangular basis
    let tri = matrix::lattice_basis(&vs.iter().map(|r| (*r).clone()).collect::<Vec<_>>(), d);
    let diag: Vec<BigInt> = (0..d).map(|i| tri[i][i].clone()).collect();
    let mut out = Vec::new();
    let mut z = vec![BigInt::zero(); d];
    loop {
        let lambda: Vec<Q> = inv.iter().map(|nj| nj.iter().zip(&z).map(|(a, b)| a * matrix::q(b)).sum()).collect();
        let f: Vec<Q> = lambda
            .iter()
            .zip(&open)
            .map(|(l, &o)| {
                let fr = l - l.floor();
                if o && fr.is_zero() {
                    Q::one()
                } else {
                    fr
                }
            })
            .collect();
        let pi: Vector = (0..d)
            .map(|i| {
                let s: Q = f.iter().zip(vs).map(|(fj, r)| fj * matrix::q(&r[i])).sum();
                debug_assert!(s.is_integer());
                s.to_integer()
            })
            .collect();
        let h = height(&pi);
        if h.is_one() {
            out.push(pi);
        } else if h.is_zero() {
            for (r, hr) in vs.iter().zip(hs) {
                if hr.is_one() {
                    out.push(pi.iter().zip(r.iter()).map(|(a, b)| a + b).collect());
                }
            }
        }
        // next representative
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            z[i] += 1;
            if z[i] < diag[i] {
                break;
            }
            z[i] = BigInt::zero();
            i += 1;
        }
    }
}
