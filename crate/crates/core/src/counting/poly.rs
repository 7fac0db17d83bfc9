//! Multivariate polynomials with rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::matrix::Q;

/// `Σ coef · Π xᵢ^expᵢ` over `nvars` variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, Q>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Polynomial {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Polynomial {
        Polynomial::zero(nvars).plus_term(vec![0; nvars], c)
    }

    pub fn var(nvars: usize, i: usize) -> Polynomial {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Polynomial::zero(nvars).plus_term(e, Q::one())
    }

    /// Build from `(coefficient, exponents)` pairs.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Q, Vec<u32>)>) -> Polynomial {
        terms.into_iter().fold(Polynomial::zero(nvars), |p, (c, e)| {
            assert_eq!(e.len(), nvars, "exponent vector length");
            p.plus_term(e, c)
        })
    }

    fn plus_term(mut self, e: Vec<u32>, c: Q) -> Polynomial {
        if c.is_zero() {
            return self;
        }
        let slot = self.terms.entry(e).or_insert_with(Q::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; 0 for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Q)> {
        self.terms.iter()
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        other.terms.iter().fold(self.clone(), |p, (e, c)| p.plus_term(e.clone(), c.clone()))
    }

    pub fn scale(&self, k: &Q) -> Polynomial {
        Polynomial::from_terms(self.nvars, self.terms.iter().map(|(e, c)| (c * k, e.clone())))
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out = out.plus_term(e, c1 * c2);
            }
        }
        out
    }

    pub fn eval_q(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.nvars, "point dimension");
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter().zip(x).fold(c.clone(), |acc, (&k, xi)| acc * num_traits::pow(xi.clone(), k as usize))
            })
            .sum()
    }

    pub fn eval(&self, x: &[BigInt]) -> Q {
        self.eval_q(&x.iter().map(|v| Q::from_integer(v.clone())).collect::<Vec<_>>())
    }

    /// Substitute `subs[i]` (polynomials over a common variable set) for
    /// variable `i`.
    pub fn compose(&self, subs: &[Polynomial]) -> Polynomial {
        assert_eq!(subs.len(), self.nvars);
        let n = subs.first().map_or(0, |p| p.nvars);
        let mut out = Polynomial::zero(n);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(n, c.clone());
            for (s, &k) in subs.iter().zip(e) {
                for _ in 0..k {
                    t = t.mul(s);
                }
            }
            out = out.add(&t);
        }
        out
    }
}

impl fmt::Display for Polynomial {
    /// Variables print as `b1, b2, …`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        // highest degree first
        let mut terms: Vec<_> = self.terms.iter().collect();
        terms.sort_by(|(a, _), (b, _)| b.iter().sum::<u32>().cmp(&a.iter().sum::<u32>()).then(b.cmp(a)));
        for (i, (e, c)) in terms.into_iter().enumerate() {
            let neg = c.is_negative();
            match (i, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            let c = c.abs();
            let vars: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(j, &k)| if k == 1 { format!("b{}", j + 1) } else { format!("b{}^{k}", j + 1) })
                .collect();
            if vars.is_empty() {
                write!(f, "{c}")?;
            } else if c.is_one() {
                write!(f, "{}", vars.join("*"))?;
            } else {
                write!(f, "{c}*{}", vars.join("*"))?;
            }
        }
        Ok(())
    }
}
