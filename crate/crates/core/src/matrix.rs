//! Exact rational linear algebra on small dense matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: &BigInt) -> Q {
    Q::from_integer(n.clone())
}

/// Reduced row echelon form; returns the pivot columns.
pub fn rref(m: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn to_q(m: &[Vec<BigInt>]) -> Vec<Vec<Q>> {
    m.iter().map(|r| r.iter().map(q).collect()).collect()
}

/// Rank of an integer matrix given as rows.
pub fn rank(rows: &[Vec<BigInt>]) -> usize {
    let mut m = to_q(rows);
    rref(&mut m).len()
}

/// Are the given integer vectors linearly independent?
pub fn independent(vectors: &[Vec<BigInt>]) -> bool {
    rank(vectors) == vectors.len()
}

/// Column-major view: `cols[j][i]` is entry (i, j). Returns the transpose.
pub fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    let Some(first) = m.first() else { return Vec::new() };
    (0..first.len()).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Unique solution of `A x = b` where `A` has full column rank, or `None`
/// if the system is inconsistent.
pub fn solve_unique(a: &[Vec<BigInt>], b: &[BigInt]) -> Option<Vec<Q>> {
    let n = a.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| row.iter().map(q).chain(std::iter::once(q(bi))).collect())
        .collect();
    let pivots = rref(&mut m);
    if pivots.contains(&n) {
        return None;
    }
    assert_eq!(pivots.len(), n, "solve_unique requires full column rank");
    Some((0..n).map(|i| m[i][n].clone()).collect())
}

/// Indices of a maximal set of linearly independent rows, chosen greedily.
pub fn independent_rows(rows: &[Vec<BigInt>]) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        basis.push(r.clone());
        if rank(&basis) == basis.len() {
            chosen.push(i);
        } else {
            basis.pop();
        }
    }
    chosen
}

/// Determinant and inverse of a square integer matrix (`None` if singular).
pub fn det_inverse(a: &[Vec<BigInt>]) -> Option<(Q, Vec<Vec<Q>>)> {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<Q> = row.iter().map(q).collect();
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    // determinant by elimination with explicit bookkeeping
    let mut det = Q::one();
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let piv = m[c][c].clone();
        det *= &piv;
        let inv = piv.recip();
        for x in m[c].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..2 * n {
                    let d = &f * &m[c][j];
                    m[i][j] -= d;
                }
            }
        }
    }
    let inv = m.into_iter().map(|r| r[n..].to_vec()).collect();
    Some((det, inv))
}

/// Integer row echelon form: returns `(E, U)` with `U` unimodular and
/// `U · rows = E`; pivots are positive.
pub fn int_echelon(rows: &[Vec<BigInt>], n: usize) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>) {
    let m = rows.len();
    let mut e = rows.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut p = 0;
    for c in 0..n {
        if p == m {
            break;
        }
        loop {
            let Some(best) = (p..m).filter(|&i| !e[i][c].is_zero()).min_by_key(|&i| e[i][c].abs()) else {
                break;
            };
            e.swap(p, best);
            u.swap(p, best);
            let mut done = true;
            for i in p + 1..m {
                if e[i][c].is_zero() {
                    continue;
                }
                let f = e[i][c].div_floor(&e[p][c]);
                for j in 0..n {
                    let d = &f * &e[p][j];
                    e[i][j] -= d;
                }
                for j in 0..m {
                    let d = &f * &u[p][j];
                    u[i][j] -= d;
                }
                done &= e[i][c].is_zero();
            }
            if done {
                break;
            }
        }
        if e[p][c].is_zero() {
            continue;
        }
        if e[p][c].is_negative() {
            e[p].iter_mut().for_each(|x| *x = -&*x);
            u[p].iter_mut().for_each(|x| *x = -&*x);
        }
        p += 1;
    }
    (e, u)
}

/// A basis of `{w ∈ Z^n : a·w = 0}`.
pub fn int_kernel(a: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    // left kernel of aᵀ
    let t: Vec<Vec<BigInt>> = (0..n).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect();
    let (e, u) = int_echelon(&t, a.len());
    e.iter().zip(u).filter(|(r, _)| r.iter().all(Zero::is_zero)).map(|(_, w)| w).collect()
}

/// A basis of the lattice spanned by `gens` in `Z^n`, in echelon form.
pub fn lattice_basis(gens: &[Vec<BigInt>], n: usize) -> Vec<Vec<BigInt>> {
    let (e, _) = int_echelon(gens, n);
    e.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect()
}

/// Is `{λ ∈ Q^m : a·λ = d, λ >= 0}` nonempty? Gaussian elimination of the
/// equalities followed by Fourier–Motzkin on the remaining inequalities.
pub fn real_feasible(a: &[Vec<BigInt>], d: &[BigInt]) -> bool {
    let m = a.first().map_or(0, Vec::len);
    let mut aug: Vec<Vec<Q>> = a
        .iter()
        .zip(d)
        .map(|(r, x)| r.iter().map(q).chain(std::iter::once(q(x))).collect())
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&m) {
        return false;
    }
    // pivot λ_p = rhs - Σ_free c·λ_f >= 0, and each free λ_f >= 0;
    // rows are (coefficients over free vars, constant) meaning Σ c·λ + k >= 0
    let free: Vec<usize> = (0..m).filter(|j| !pivots.contains(j)).collect();
    let mut ineqs: Vec<(Vec<Q>, Q)> = Vec::new();
    for i in 0..pivots.len() {
        ineqs.push((free.iter().map(|&f| -aug[i][f].clone()).collect(), aug[i][m].clone()));
    }
    for i in 0..free.len() {
        ineqs.push(((0..free.len()).map(|j| if i == j { Q::one() } else { Q::zero() }).collect(), Q::zero()));
    }
    for v in 0..free.len() {
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for row in ineqs {
            if row.0[v].is_positive() {
                pos.push(row);
            } else if row.0[v].is_negative() {
                neg.push(row);
            } else {
                rest.push(row);
            }
        }
        for (pc, pk) in &pos {
            for (nc, nk) in &neg {
                let (s, t) = (-nc[v].clone(), pc[v].clone());
                let c: Vec<Q> = pc.iter().zip(nc).map(|(x, y)| x * &s + y * &t).collect();
                rest.push((c, pk * &s + nk * &t));
            }
        }
        rest.sort();
        rest.dedup();
        ineqs = rest;
    }
    ineqs.iter().all(|(_, k)| !k.is_negative())
}

/// All `k`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> Vec<Vec<BigInt>> {
        rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn rank_and_solve() {
        assert_eq!(rank(&m(&[&[1, 2], &[2, 4]])), 1);
        assert_eq!(rank(&m(&[&[1, 2], &[0, 4]])), 2);
        let a = m(&[&[1], &[2]]);
        let s = solve_unique(&a, &[BigInt::from(3), BigInt::from(6)]).unwrap();
        assert_eq!(s, vec![Q::from_integer(3.into())]);
        assert!(solve_unique(&a, &[BigInt::from(3), BigInt::from(5)]).is_none());
    }

    #[test]
    fn determinant_and_inverse() {
        let (d, inv) = det_inverse(&m(&[&[2, 1], &[1, 1]])).unwrap();
        assert_eq!(d, Q::from_integer(1.into()));
        assert_eq!(inv[0][1], Q::from_integer((-1).into()));
        let (d, _) = det_inverse(&m(&[&[0, 1], &[1, 0]])).unwrap();
        assert_eq!(d, Q::from_integer((-1).into()));
        assert!(det_inverse(&m(&[&[1, 2], &[2, 4]])).is_none());
    }

    #[test]
    fn integer_kernel_and_basis() {
        // x + 2y + 3z = 0
        let k = int_kernel(&m(&[&[1, 2, 3]]), 3);
        assert_eq!(k.len(), 2);
        for w in &k {
            assert!((&w[0] + &w[1] * BigInt::from(2) + &w[2] * BigInt::from(3)).is_zero());
        }
        // the kernel basis is saturated: (1,1,-1) is an integer combination
        let b = lattice_basis(&[k[0].clone(), k[1].clone()], 3);
        let l = solve_unique(&transpose(&b), &[1.into(), 1.into(), (-1).into()]).unwrap();
        assert!(l.iter().all(|x| x.is_integer()));
        let b = lattice_basis(&m(&[&[4, 0], &[6, 0], &[1, 3]]), 2);
        assert_eq!(b, m(&[&[1, 3], &[0, 6]]));
    }

    #[test]
    fn relaxation_feasibility() {
        // λ1 - λ2 = 3 has non-negative solutions; λ1 + λ2 = -1 does not
        assert!(real_feasible(&m(&[&[1, -1]]), &[3.into()]));
        assert!(!real_feasible(&m(&[&[1, 1]]), &[(-1).into()]));
        // λ1 + λ2 = 1, λ1 - λ2 = 3 forces λ2 = -1
        assert!(!real_feasible(&m(&[&[1, 1], &[1, -1]]), &[1.into(), 3.into()]));
        assert!(!real_feasible(&m(&[&[0, 0]]), &[1.into()]));
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert_eq!(independent_rows(&m(&[&[1, 2], &[2, 4], &[0, 1]])), vec![0, 2]);
    }
}
