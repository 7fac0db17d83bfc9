//! Signed linear forms, normalized atoms and quantifier-free formulas in
//! negation normal form. This is the internal representation used by the
//! elimination engine; the surface language stays natural-number valued.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::formula::{Assignment, EvalError, Formula, Term};

/// `Σ coeffs[v]·v + constant` over the integers. Zero coefficients are never
/// stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Lin {
    pub coeffs: BTreeMap<String, BigInt>,
    pub constant: BigInt,
}

impl Lin {
    pub fn zero() -> Lin {
        Lin::default()
    }

    pub fn constant(c: impl Into<BigInt>) -> Lin {
        Lin { coeffs: BTreeMap::new(), constant: c.into() }
    }

    pub fn var(v: impl Into<String>) -> Lin {
        Lin::term(v, 1)
    }

    pub fn term(v: impl Into<String>, c: impl Into<BigInt>) -> Lin {
        let c = c.into();
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(v.into(), c);
        }
        Lin { coeffs, constant: BigInt::zero() }
    }

    pub fn coeff(&self, v: &str) -> BigInt {
        self.coeffs.get(v).cloned().unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn mentions(&self, v: &str) -> bool {
        self.coeffs.contains_key(v)
    }

    pub fn vars(&self) -> impl Iterator<Item = &String> {
        self.coeffs.keys()
    }

    pub fn add(&self, other: &Lin) -> Lin {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            out.add_term(v, c);
        }
        out.constant += &other.constant;
        out
    }

    pub fn sub(&self, other: &Lin) -> Lin {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Lin {
        self.scale(&BigInt::from(-1))
    }

    pub fn scale(&self, k: &BigInt) -> Lin {
        if k.is_zero() {
            return Lin::zero();
        }
        Lin {
            coeffs: self.coeffs.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn add_constant(&self, k: impl Into<BigInt>) -> Lin {
        let mut out = self.clone();
        out.constant += k.into();
        out
    }

    pub fn add_term(&mut self, v: &str, c: &BigInt) {
        let entry = self.coeffs.entry(v.to_string()).or_default();
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(v);
        }
    }

    /// The form with `v` dropped.
    pub fn without(&self, v: &str) -> Lin {
        let mut out = self.clone();
        out.coeffs.remove(v);
        out
    }

    /// Replace `v` by `by`.
    pub fn substitute(&self, v: &str, by: &Lin) -> Lin {
        match self.coeffs.get(v) {
            None => self.clone(),
            Some(c) => self.without(v).add(&by.scale(c)),
        }
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> Lin {
        let mut out = Lin::constant(self.constant.clone());
        for (v, c) in &self.coeffs {
            out.add_term(map.get(v).unwrap_or(v), c);
        }
        out
    }

    /// Gcd of the variable coefficients (0 for a constant form).
    pub fn content(&self) -> BigInt {
        self.coeffs.values().fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    pub fn eval(&self, a: &Assignment) -> Result<BigInt, EvalError> {
        let mut s = self.constant.clone();
        for (v, c) in &self.coeffs {
            let x = a.get(v).ok_or_else(|| EvalError::UnboundVariable(v.clone()))?;
            s += c * BigInt::from(x.clone());
        }
        Ok(s)
    }

    pub fn eval_int(&self, a: &BTreeMap<String, BigInt>) -> Option<BigInt> {
        let mut s = self.constant.clone();
        for (v, c) in &self.coeffs {
            s += c * a.get(v)?;
        }
        Some(s)
    }

    /// First nonzero coefficient is positive.
    fn is_canonical_sign(&self) -> bool {
        self.coeffs.values().next().is_none_or(|c| c.is_positive())
    }

    pub fn from_term(t: &Term) -> Lin {
        match t {
            Term::Num(n) => Lin::constant(BigInt::from(n.clone())),
            Term::Var(v) => Lin::var(v.clone()),
            Term::Add(a, b) => Lin::from_term(a).add(&Lin::from_term(b)),
            Term::Scale(k, t) => Lin::from_term(t).scale(&BigInt::from(k.clone())),
        }
    }
}

/// Normalized atoms. Each holds a form compared against zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    /// `lin <= 0`
    Le(Lin),
    /// `lin = 0`
    Eq(Lin),
    /// `lin != 0`
    Ne(Lin),
    /// `m | lin`, `m >= 2`
    Dvd(BigInt, Lin),
    /// `m ∤ lin`, `m >= 2`
    NDvd(BigInt, Lin),
}

impl Atom {
    pub fn lin(&self) -> &Lin {
        match self {
            Atom::Le(l) | Atom::Eq(l) | Atom::Ne(l) | Atom::Dvd(_, l) | Atom::NDvd(_, l) => l,
        }
    }

    pub fn negate(&self) -> Atom {
        match self {
            Atom::Le(l) => Atom::Le(l.neg().add_constant(1)),
            Atom::Eq(l) => Atom::Ne(l.clone()),
            Atom::Ne(l) => Atom::Eq(l.clone()),
            Atom::Dvd(m, l) => Atom::NDvd(m.clone(), l.clone()),
            Atom::NDvd(m, l) => Atom::Dvd(m.clone(), l.clone()),
        }
    }

    pub fn map_lin(&self, f: impl Fn(&Lin) -> Lin) -> Atom {
        match self {
            Atom::Le(l) => Atom::Le(f(l)),
            Atom::Eq(l) => Atom::Eq(f(l)),
            Atom::Ne(l) => Atom::Ne(f(l)),
            Atom::Dvd(m, l) => Atom::Dvd(m.clone(), f(l)),
            Atom::NDvd(m, l) => Atom::NDvd(m.clone(), f(l)),
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, EvalError> {
        let v = self.lin().eval(a)?;
        Ok(self.holds_at(&v))
    }

    pub fn eval_int(&self, a: &BTreeMap<String, BigInt>) -> Option<bool> {
        Some(self.holds_at(&self.lin().eval_int(a)?))
    }

    fn holds_at(&self, v: &BigInt) -> bool {
        match self {
            Atom::Le(_) => !v.is_positive(),
            Atom::Eq(_) => v.is_zero(),
            Atom::Ne(_) => !v.is_zero(),
            Atom::Dvd(m, _) => v.mod_floor(m).is_zero(),
            Atom::NDvd(m, _) => !v.mod_floor(m).is_zero(),
        }
    }

    /// Normal form: gcd-reduced, canonical sign for (dis)equalities,
    /// residues reduced for divisibility. Constant atoms fold to booleans.
    pub fn normalize(self) -> Qf {
        match self {
            Atom::Le(l) => {
                if l.is_constant() {
                    return Qf::bool(!l.constant.is_positive());
                }
                // all variables range over N
                if !l.constant.is_positive() && l.coeffs.values().all(|c| c.is_negative()) {
                    return Qf::True;
                }
                if l.constant.is_positive() && l.coeffs.values().all(|c| c.is_positive()) {
                    return Qf::False;
                }
                let g = l.content();
                if g.is_one() {
                    return Qf::Atom(Atom::Le(l));
                }
                let coeffs = l.coeffs.iter().map(|(v, c)| (v.clone(), c / &g)).collect();
                let constant = l.constant.div_ceil(&g);
                Qf::Atom(Atom::Le(Lin { coeffs, constant }))
            }
            Atom::Eq(l) => match normalize_eq(l) {
                None => Qf::False,
                Some(l) if l.is_constant() => Qf::bool(l.constant.is_zero()),
                Some(l) => Qf::Atom(Atom::Eq(l)),
            },
            Atom::Ne(l) => match normalize_eq(l) {
                None => Qf::True,
                Some(l) if l.is_constant() => Qf::bool(!l.constant.is_zero()),
                Some(l) => Qf::Atom(Atom::Ne(l)),
            },
            Atom::Dvd(m, l) => match normalize_dvd(m, l) {
                DvdNorm::Const(b) => Qf::bool(b),
                DvdNorm::Atom(m, l) => Qf::Atom(Atom::Dvd(m, l)),
            },
            Atom::NDvd(m, l) => match normalize_dvd(m, l) {
                DvdNorm::Const(b) => Qf::bool(!b),
                DvdNorm::Atom(m, l) => Qf::Atom(Atom::NDvd(m, l)),
            },
        }
    }
}

/// `None` when the equation has no integer solutions.
fn normalize_eq(l: Lin) -> Option<Lin> {
    if l.is_constant() {
        return Some(l);
    }
    let g = l.content();
    if !(&l.constant % &g).is_zero() {
        return None;
    }
    let mut l = if g.is_one() {
        l
    } else {
        Lin {
            coeffs: l.coeffs.iter().map(|(v, c)| (v.clone(), c / &g)).collect(),
            constant: &l.constant / &g,
        }
    };
    if !l.is_canonical_sign() {
        l = l.neg();
    }
    // a positive combination of naturals plus a positive constant
    if l.constant.is_positive() && l.coeffs.values().all(|c| c.is_positive()) {
        return None;
    }
    Some(l)
}

enum DvdNorm {
    Const(bool),
    Atom(BigInt, Lin),
}

fn normalize_dvd(m: BigInt, l: Lin) -> DvdNorm {
    let m = m.abs();
    let mut coeffs = BTreeMap::new();
    for (v, c) in &l.coeffs {
        let r = c.mod_floor(&m);
        if !r.is_zero() {
            coeffs.insert(v.clone(), r);
        }
    }
    let constant = l.constant.mod_floor(&m);
    if coeffs.is_empty() {
        return DvdNorm::Const(constant.is_zero());
    }
    let g = coeffs.values().fold(m.clone(), |g, c| g.gcd(c));
    if !(&constant % &g).is_zero() {
        return DvdNorm::Const(false);
    }
    let (m, mut coeffs, mut constant) = if g.is_one() {
        (m, coeffs, constant)
    } else {
        let m2 = &m / &g;
        if m2.is_one() {
            return DvdNorm::Const(true);
        }
        let coeffs: BTreeMap<String, BigInt> = coeffs.into_iter().map(|(v, c)| (v, c / &g)).collect();
        (m2, coeffs, constant / &g)
    };
    // m | L  ⇔  m | -L: keep the first coefficient in the lower half
    let first = coeffs.values().next().expect("nonconstant");
    if first * 2 > m {
        for c in coeffs.values_mut() {
            *c = &m - &*c;
        }
        constant = (-constant).mod_floor(&m);
    }
    DvdNorm::Atom(m, Lin { coeffs, constant })
}

/// Interactions between divisibility literals sharing a linear part, read
/// conjunctively (a disjunction is handled as the negated conjunction of the
/// negated literals). Returns `true` on contradiction; drops implied items.
fn dvd_rules(out: &mut Vec<Qf>, conj: bool) -> bool {
    let mut groups: BTreeMap<&BTreeMap<String, BigInt>, Vec<(usize, bool, &BigInt, &BigInt)>> = BTreeMap::new();
    for (i, q) in out.iter().enumerate() {
        if let Qf::Atom(a) = q {
            let (pos, m, l) = match a {
                Atom::Dvd(m, l) => (conj, m, l),
                Atom::NDvd(m, l) => (!conj, m, l),
                _ => continue,
            };
            groups.entry(&l.coeffs).or_default().push((i, pos, m, &l.constant));
        }
    }
    let mut drop = BTreeSet::new();
    for lits in groups.values() {
        for (a, &(i, pi, mi, ci)) in lits.iter().enumerate() {
            for (b, &(j, pj, mj, cj)) in lits.iter().enumerate() {
                if a == b || drop.contains(&i) || drop.contains(&j) {
                    continue;
                }
                match (pi, pj) {
                    (true, true) => {
                        if !(ci - cj).is_multiple_of(&mi.gcd(mj)) {
                            return true;
                        }
                        if mi.is_multiple_of(mj) {
                            drop.insert(j);
                        }
                    }
                    (true, false) if mi.is_multiple_of(mj) => {
                        // L ≡ -ci (mod mi) decides L + cj (mod mj)
                        if (cj - ci).is_multiple_of(mj) {
                            return true;
                        }
                        drop.insert(j);
                    }
                    _ => {}
                }
            }
        }
    }
    if !drop.is_empty() {
        let mut i = 0;
        out.retain(|_| {
            i += 1;
            !drop.contains(&(i - 1))
        });
    }
    false
}

/// Quantifier-free formula in negation normal form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Qf {
    True,
    False,
    Atom(Atom),
    And(Vec<Qf>),
    Or(Vec<Qf>),
}

impl Qf {
    pub fn bool(b: bool) -> Qf {
        if b {
            Qf::True
        } else {
            Qf::False
        }
    }

    pub fn atom(a: Atom) -> Qf {
        a.normalize()
    }

    pub fn le(l: Lin) -> Qf {
        Atom::Le(l).normalize()
    }

    pub fn eq(l: Lin) -> Qf {
        Atom::Eq(l).normalize()
    }

    pub fn dvd(m: impl Into<BigInt>, l: Lin) -> Qf {
        Atom::Dvd(m.into(), l).normalize()
    }

    /// `lin >= 0`
    pub fn nonneg(l: Lin) -> Qf {
        Qf::le(l.neg())
    }

    pub fn and(items: Vec<Qf>) -> Qf {
        simplify_junction(items, true)
    }

    pub fn or(items: Vec<Qf>) -> Qf {
        simplify_junction(items, false)
    }

    pub fn and2(a: Qf, b: Qf) -> Qf {
        Qf::and(vec![a, b])
    }

    pub fn or2(a: Qf, b: Qf) -> Qf {
        Qf::or(vec![a, b])
    }

    pub fn negate(&self) -> Qf {
        match self {
            Qf::True => Qf::False,
            Qf::False => Qf::True,
            Qf::Atom(a) => a.negate().normalize(),
            Qf::And(xs) => Qf::or(xs.iter().map(Qf::negate).collect()),
            Qf::Or(xs) => Qf::and(xs.iter().map(Qf::negate).collect()),
        }
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Qf::True)
    }

    pub fn is_false(&self) -> bool {
        matches!(self, Qf::False)
    }

    pub fn atoms(&self, out: &mut Vec<Atom>) {
        match self {
            Qf::True | Qf::False => {}
            Qf::Atom(a) => out.push(a.clone()),
            Qf::And(xs) | Qf::Or(xs) => xs.iter().for_each(|x| x.atoms(out)),
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut atoms = Vec::new();
        self.atoms(&mut atoms);
        atoms.iter().flat_map(|a| a.lin().vars().cloned().collect::<Vec<_>>()).collect()
    }

    pub fn mentions(&self, v: &str) -> bool {
        match self {
            Qf::True | Qf::False => false,
            Qf::Atom(a) => a.lin().mentions(v),
            Qf::And(xs) | Qf::Or(xs) => xs.iter().any(|x| x.mentions(v)),
        }
    }

    /// Rebuild with every atom mapped through `f` (re-simplifying).
    pub fn map_atoms(&self, f: &mut impl FnMut(&Atom) -> Qf) -> Qf {
        match self {
            Qf::True | Qf::False => self.clone(),
            Qf::Atom(a) => f(a),
            Qf::And(xs) => Qf::and(xs.iter().map(|x| x.map_atoms(f)).collect()),
            Qf::Or(xs) => Qf::or(xs.iter().map(|x| x.map_atoms(f)).collect()),
        }
    }

    pub fn substitute(&self, v: &str, by: &Lin) -> Qf {
        self.map_atoms(&mut |a| {
            if a.lin().mentions(v) {
                a.map_lin(|l| l.substitute(v, by)).normalize()
            } else {
                Qf::Atom(a.clone())
            }
        })
    }

    pub fn rename(&self, map: &BTreeMap<String, String>) -> Qf {
        self.map_atoms(&mut |a| a.map_lin(|l| l.rename(map)).normalize())
    }

    pub fn eval(&self, a: &Assignment) -> Result<bool, EvalError> {
        Ok(match self {
            Qf::True => true,
            Qf::False => false,
            Qf::Atom(at) => at.eval(a)?,
            Qf::And(xs) => {
                for x in xs {
                    if !x.eval(a)? {
                        return Ok(false);
                    }
                }
                true
            }
            Qf::Or(xs) => {
                for x in xs {
                    if x.eval(a)? {
                        return Ok(true);
                    }
                }
                false
            }
        })
    }

    pub fn eval_int(&self, a: &BTreeMap<String, BigInt>) -> Option<bool> {
        Some(match self {
            Qf::True => true,
            Qf::False => false,
            Qf::Atom(at) => at.eval_int(a)?,
            Qf::And(xs) => {
                for x in xs {
                    if !x.eval_int(a)? {
                        return Some(false);
                    }
                }
                true
            }
            Qf::Or(xs) => {
                for x in xs {
                    if x.eval_int(a)? {
                        return Some(true);
                    }
                }
                false
            }
        })
    }

    /// Number of nodes; used as a size heuristic.
    pub fn size(&self) -> usize {
        match self {
            Qf::True | Qf::False | Qf::Atom(_) => 1,
            Qf::And(xs) | Qf::Or(xs) => 1 + xs.iter().map(Qf::size).sum::<usize>(),
        }
    }

    /// Convert a quantifier-free surface formula.
    pub fn from_formula(f: &Formula) -> Option<Qf> {
        nnf(f, true)
    }

    /// Render back into the surface language.
    pub fn to_formula(&self) -> Formula {
        match self {
            Qf::True => Formula::True,
            Qf::False => Formula::False,
            Qf::Atom(a) => atom_to_formula(a),
            Qf::And(xs) => Formula::and_all(xs.iter().map(Qf::to_formula)),
            Qf::Or(xs) => Formula::or_all(xs.iter().map(Qf::to_formula)),
        }
    }
}

fn nnf(f: &Formula, pos: bool) -> Option<Qf> {
    let lit = |a: Atom| {
        let q = a.normalize();
        if pos {
            q
        } else {
            q.negate()
        }
    };
    let diff = |a: &Term, b: &Term| Lin::from_term(a).sub(&Lin::from_term(b));
    Some(match f {
        Formula::True => Qf::bool(pos),
        Formula::False => Qf::bool(!pos),
        Formula::Eq(a, b) => lit(Atom::Eq(diff(a, b))),
        Formula::Lt(a, b) => lit(Atom::Le(diff(a, b).add_constant(1))),
        Formula::Le(a, b) => lit(Atom::Le(diff(a, b))),
        Formula::CongMod(a, b, m) => lit(Atom::Dvd(BigInt::from(m.clone()), diff(a, b))),
        Formula::Not(g) => nnf(g, !pos)?,
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (x, y) = (nnf(a, pos)?, nnf(b, pos)?);
            if matches!(f, Formula::And(..)) == pos {
                Qf::and2(x, y)
            } else {
                Qf::or2(x, y)
            }
        }
        Formula::Implies(a, b) => {
            let (x, y) = (nnf(a, !pos)?, nnf(b, pos)?);
            if pos {
                Qf::or2(x, y)
            } else {
                Qf::and2(x, y)
            }
        }
        Formula::Iff(a, b) => {
            let (ap, an) = (nnf(a, true)?, nnf(a, false)?);
            let (bp, bn) = (nnf(b, true)?, nnf(b, false)?);
            if pos {
                Qf::or2(Qf::and2(ap, bp), Qf::and2(an, bn))
            } else {
                Qf::or2(Qf::and2(ap, bn), Qf::and2(an, bp))
            }
        }
        Formula::Exists(..) | Formula::Forall(..) | Formula::Count { .. } => return None,
    })
}

/// Split a form into natural-coefficient left and right sides.
fn sides(l: &Lin) -> (Vec<(BigUint, String)>, Vec<(BigUint, String)>, BigInt) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (v, c) in &l.coeffs {
        let k = c.magnitude().clone();
        if c.sign() == Sign::Minus {
            right.push((k, v.clone()));
        } else {
            left.push((k, v.clone()));
        }
    }
    (left, right, l.constant.clone())
}

fn side_term(vars: &[(BigUint, String)], constant: &BigInt) -> Term {
    let mut parts: Vec<Term> = vars
        .iter()
        .map(|(k, v)| {
            if k.is_one() {
                Term::var(v.clone())
            } else {
                Term::scale(k.clone(), Term::var(v.clone()))
            }
        })
        .collect();
    if constant.is_positive() || parts.is_empty() {
        parts.push(Term::Num(constant.magnitude().clone()));
    }
    Term::sum(parts)
}

fn split_terms(l: &Lin) -> (Term, Term) {
    let (left, right, c) = sides(l);
    let zero = BigInt::zero();
    let lt = side_term(&left, if c.is_positive() { &c } else { &zero });
    let neg = -&c;
    let rt = side_term(&right, if neg.is_positive() { &neg } else { &zero });
    (lt, rt)
}

fn atom_to_formula(a: &Atom) -> Formula {
    match a {
        Atom::Le(l) => {
            // l <= 0 with positive constant reads better as a strict inequality
            if l.constant.is_positive() {
                let (lt, rt) = split_terms(&l.add_constant(-1));
                Formula::lt(lt, rt)
            } else {
                let (lt, rt) = split_terms(l);
                Formula::le(lt, rt)
            }
        }
        Atom::Eq(l) => {
            let (lt, rt) = split_terms(l);
            Formula::eq(lt, rt)
        }
        Atom::Ne(l) => {
            let (lt, rt) = split_terms(l);
            Formula::not(Formula::eq(lt, rt))
        }
        Atom::Dvd(m, l) | Atom::NDvd(m, l) => {
            let (lt, rt) = split_terms(l);
            let f = Formula::cong(lt, rt, m.magnitude().clone());
            if matches!(a, Atom::NDvd(..)) {
                Formula::not(f)
            } else {
                f
            }
        }
    }
}

// ---------------------------------------------------------------------------
// boolean simplification

/// Key identifying the linear part of a bound up to sign.
fn bound_key(l: &Lin) -> (BTreeMap<String, BigInt>, bool) {
    if l.is_canonical_sign() {
        (l.coeffs.clone(), true)
    } else {
        (l.neg().coeffs, false)
    }
}

fn simplify_junction(items: Vec<Qf>, conj: bool) -> Qf {
    let mut flat = Vec::new();
    for it in items {
        match it {
            Qf::True if conj => {}
            Qf::False if !conj => {}
            Qf::True | Qf::False => return it,
            Qf::And(xs) if conj => flat.extend(xs),
            Qf::Or(xs) if !conj => flat.extend(xs),
            other => flat.push(other),
        }
    }
    flat.sort();
    flat.dedup();

    // combine atomic bounds sharing a linear part
    // key -> (upper bound on L, lower bound on L) as integers where L is the
    // canonical-sign linear part: atom reads L <= hi or L >= lo
    let mut bounds: BTreeMap<BTreeMap<String, BigInt>, (Option<BigInt>, Option<BigInt>)> = BTreeMap::new();
    let mut eqs: BTreeMap<BTreeMap<String, BigInt>, Vec<BigInt>> = BTreeMap::new();
    let mut rest = Vec::new();
    for q in flat {
        match &q {
            Qf::Atom(Atom::Le(l)) => {
                let (key, positive) = bound_key(l);
                let e = bounds.entry(key).or_insert((None, None));
                if positive {
                    // L + c <= 0  ⇔  L <= -c
                    let hi = -&l.constant;
                    e.0 = Some(match e.0.take() {
                        None => hi,
                        Some(h) => if conj { h.min(hi) } else { h.max(hi) },
                    });
                } else {
                    // -L + c <= 0  ⇔  L >= c
                    let lo = l.constant.clone();
                    e.1 = Some(match e.1.take() {
                        None => lo,
                        Some(x) => if conj { x.max(lo) } else { x.min(lo) },
                    });
                }
            }
            Qf::Atom(Atom::Eq(l)) if conj => {
                eqs.entry(l.coeffs.clone()).or_default().push(-&l.constant);
                rest.push(q);
            }
            _ => rest.push(q),
        }
    }

    let mut out = rest;
    for (key, (hi, lo)) in bounds {
        let lin = |c: BigInt| Lin { coeffs: key.clone(), constant: c };
        // equalities pin the value of L
        if conj {
            if let Some(vals) = eqs.get(&key) {
                let v = &vals[0];
                if hi.as_ref().is_some_and(|h| v > h) || lo.as_ref().is_some_and(|l| v < l) {
                    return Qf::False;
                }
                continue;
            }
        }
        match (hi, lo) {
            (Some(h), Some(l)) => {
                if conj {
                    if l > h {
                        return Qf::False;
                    }
                    if l == h {
                        out.push(Qf::Atom(Atom::Eq(lin(-h))));
                        continue;
                    }
                } else if l <= &h + 1 {
                    return Qf::True;
                }
                out.push(Qf::Atom(Atom::Le(lin(-h))));
                out.push(Qf::Atom(Atom::Le(lin(-l).neg())));
            }
            (Some(h), None) => out.push(Qf::Atom(Atom::Le(lin(-h)))),
            (None, Some(l)) => out.push(Qf::Atom(Atom::Le(lin(-l).neg()))),
            (None, None) => {}
        }
    }
    if conj {
        // several equalities on the same linear part
        for vals in eqs.values() {
            if vals.iter().any(|v| v != &vals[0]) {
                return Qf::False;
            }
        }
    }
    out.sort();
    out.dedup();
    if dvd_rules(&mut out, conj) {
        return Qf::bool(!conj);
    }

    // complementary literals and disequalities against pinned values
    let atoms: BTreeSet<&Atom> = out
        .iter()
        .filter_map(|q| if let Qf::Atom(a) = q { Some(a) } else { None })
        .collect();
    for a in &atoms {
        let neg = a.negate();
        let neg_norm = match neg.clone().normalize() {
            Qf::Atom(n) => n,
            _ => neg,
        };
        if atoms.contains(&neg_norm) {
            return Qf::bool(!conj);
        }
    }
    if conj {
        let mut drop = BTreeSet::new();
        for a in &atoms {
            if let Atom::Ne(l) = a {
                if let Some(vals) = eqs.get(&l.coeffs) {
                    if vals[0] == -&l.constant {
                        return Qf::False;
                    }
                    drop.insert((*a).clone());
                }
            }
        }
        if !drop.is_empty() {
            out.retain(|q| !matches!(q, Qf::Atom(a) if drop.contains(a)));
        }
    }

    match out.len() {
        0 => Qf::bool(conj),
        1 => out.pop().unwrap(),
        _ => {
            if conj {
                Qf::And(out)
            } else {
                Qf::Or(out)
            }
        }
    }
}
