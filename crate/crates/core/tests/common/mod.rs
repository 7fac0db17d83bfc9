//! Shared generators and brute-force oracles for integration tests.
#![allow(dead_code)]

use num_bigint::BigUint;
use presburger::formula::{Assignment, Formula, Term};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const NAMES: [&str; 3] = ["x", "y", "z"];

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random linear term over `vars` with coefficients in `0..=5`.
pub fn term(r: &mut ChaCha8Rng, vars: &[String]) -> Term {
    let mut parts = Vec::new();
    for v in vars {
        if r.gen_bool(0.6) {
            let c: u32 = r.gen_range(1..=5);
            parts.push(if c == 1 { Term::var(v.clone()) } else { Term::scale(c, Term::var(v.clone())) });
        }
    }
    if parts.is_empty() || r.gen_bool(0.5) {
        parts.push(Term::num(r.gen_range(0..=12u32)));
    }
    Term::sum(parts)
}

pub fn atom(r: &mut ChaCha8Rng, vars: &[String]) -> Formula {
    let (a, b) = (term(r, vars), term(r, vars));
    match r.gen_range(0..4) {
        0 => Formula::eq(a, b),
        1 => Formula::lt(a, b),
        2 => Formula::le(a, b),
        _ => Formula::cong(a, b, r.gen_range(2..=6u32)),
    }
}

/// Random quantifier-free formula.
pub fn qf(r: &mut ChaCha8Rng, vars: &[String], depth: u32) -> Formula {
    if depth == 0 || r.gen_bool(0.3) {
        return atom(r, vars);
    }
    match r.gen_range(0..5) {
        0 => Formula::not(qf(r, vars, depth - 1)),
        1 | 2 => Formula::and(qf(r, vars, depth - 1), qf(r, vars, depth - 1)),
        3 => Formula::or(qf(r, vars, depth - 1), qf(r, vars, depth - 1)),
        _ => Formula::implies(qf(r, vars, depth - 1), qf(r, vars, depth - 1)),
    }
}

/// Guard `v <= c·w + d` (or `v <= d`) keeping bounded evaluation exact:
/// every witness the formula can talk about lies below the guard.
fn guard(r: &mut ChaCha8Rng, v: &str, outer: &[String]) -> Formula {
    let d = Term::num(r.gen_range(0..=5u32));
    let rhs = match outer.choose(r) {
        Some(w) if r.gen_bool(0.8) => {
            let c: u32 = r.gen_range(1..=2);
            Term::add(Term::scale(c, Term::var(w.clone())), d)
        }
        _ => d,
    };
    Formula::le(Term::var(v), rhs)
}

/// Random formula with at most `quants` guarded quantifiers; the free
/// variables are `free` and at most three names are used overall.
pub fn quantified(r: &mut ChaCha8Rng, free: &[String], quants: usize) -> Formula {
    fn go(r: &mut ChaCha8Rng, scope: &[String], left: usize) -> Formula {
        if left == 0 || r.gen_bool(0.15) {
            return qf(r, scope, 2);
        }
        // bind a fresh name if one remains, otherwise shadow
        let unused: Vec<&str> = NAMES.iter().copied().filter(|n| !scope.iter().any(|s| s == n)).collect();
        let v = match unused.first() {
            Some(v) => v.to_string(),
            None => scope.choose(r).unwrap().clone(),
        };
        let outer: Vec<String> = scope.iter().filter(|s| **s != v).cloned().collect();
        let g = guard(r, &v, &outer);
        let mut inner = outer.clone();
        inner.push(v.clone());
        let body = go(r, &inner, left - 1);
        let body = if r.gen_bool(0.5) { Formula::and(body, qf(r, &inner, 1)) } else { body };
        let f = if r.gen_bool(0.5) {
            Formula::exists(v, Formula::and(g, body))
        } else {
            Formula::forall(v, Formula::implies(g, body))
        };
        if r.gen_bool(0.3) {
            Formula::and(f, qf(r, scope, 1))
        } else {
            f
        }
    }
    go(r, free, quants)
}

/// All assignments of `vars` over `0..=hi`.
pub fn assignments(vars: &[String], hi: u64) -> Vec<Assignment> {
    let mut out = vec![Assignment::new()];
    for v in vars {
        let mut next = Vec::new();
        for a in &out {
            for x in 0..=hi {
                next.push(a.clone().with(v.clone(), x));
            }
        }
        out = next;
    }
    out
}

pub fn point(xs: &[u64]) -> Vec<BigUint> {
    xs.iter().map(|&x| BigUint::from(x)).collect()
}

pub fn names(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Every point of `{0..=hi}^k`.
pub fn grid(k: usize, hi: u64) -> Vec<Vec<u64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for x in 0..=hi {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}
