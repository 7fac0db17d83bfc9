//! Multi-dimensional interpretations of `(N, +)` in itself: translating
//! formulas, checking the basic conditions, normalizing to a non-relative
//! interpretation with absolute equality, and certifying one-dimensional
//! self-interpretations by an explicit definable isomorphism.
//!
//! Variable conventions. A translation of dimension `m` uses the tuples
//! `x̄, ȳ, z̄`, written `x, y, z` when `m = 1` and `x1..xm, y1..ym, z1..zm`
//! otherwise: `dom(x̄)`, `eq(x̄, ȳ)` and `plus(x̄, ȳ, z̄)` meaning
//! `x̄ = ȳ + z̄`. Isomorphism formulas `I(ȳ, z̄)` relate a tuple `ȳ` of the
//! source to `z̄` in the target.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Roots;
use num_traits::ToPrimitive;
use serde_json::{json, Value};
use thiserror::Error;

use crate::counting;
use crate::dimension;
use crate::formula::{desugar, fresh_var, parse, render, Formula, Term};
use crate::orders::{cantor_eval, cantor_inverse};
use crate::qe;
use crate::semilinear;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("formula outside the signature {{=, +}}: {0}")]
    SignatureMismatch(String),
    #[error("basic conditions fail: {0:?}")]
    BasicsFailed(Vec<String>),
    #[error("interpreted structure is finite")]
    FiniteDomain,
    #[error("not a model of (N, +): {0}")]
    NotAModel(String),
    #[error("{0} is a perfect square")]
    SquareInput(u64),
    #[error("invalid translation: {0}")]
    Invalid(String),
}

/// The tuple `p1..pm`, or just `p` when `m = 1`.
pub fn tuple_names(p: &str, m: usize) -> Vec<String> {
    if m == 1 {
        vec![p.to_string()]
    } else {
        (1..=m).map(|i| format!("{p}{i}")).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Translation {
    pub m: usize,
    pub dom: Formula,
    pub eq: Formula,
    pub plus: Formula,
}

impl Translation {
    pub fn new(m: usize, dom: Formula, eq: Formula, plus: Formula) -> Result<Translation, InterpError> {
        let t = Translation { m, dom, eq, plus };
        let (x, y, z) = (tuple_names("x", m), tuple_names("y", m), tuple_names("z", m));
        for (name, f, allowed) in [
            ("dom", &t.dom, x.clone()),
            ("eq", &t.eq, [x.clone(), y.clone()].concat()),
            ("plus", &t.plus, [x, y, z].concat()),
        ] {
            let extra: Vec<String> = f.free_vars().into_iter().filter(|v| !allowed.contains(v)).collect();
            if !extra.is_empty() {
                return Err(InterpError::Invalid(format!("{name} has unexpected free variables {extra:?}")));
            }
            if f.has_counting() {
                return Err(InterpError::Invalid(format!("{name} uses counting quantifiers")));
            }
        }
        Ok(t)
    }

    pub fn from_strs(m: usize, dom: &str, eq: &str, plus: &str) -> Result<Translation, InterpError> {
        let p = |s: &str| parse(s).map_err(|e| InterpError::Invalid(e.to_string()));
        Translation::new(m, p(dom)?, p(eq)?, p(plus)?)
    }

    /// Non-relative, absolute equality, ordinary addition.
    pub fn identity() -> Translation {
        Translation::from_strs(1, "x = x", "x = y", "x = y + z").expect("valid")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "m": self.m.to_string(),
            "dom": render(&self.dom),
            "eq": render(&self.eq),
            "plus": render(&self.plus),
        })
    }

    pub fn from_json(v: &Value) -> Result<Translation, InterpError> {
        let bad = |s: &str| InterpError::Invalid(s.to_string());
        let m = match &v["m"] {
            Value::Number(n) => n.as_u64(),
            Value::String(s) => s.parse().ok(),
            _ => None,
        }
        .filter(|&m| m >= 1)
        .ok_or_else(|| bad("\"m\" must be a positive integer"))? as usize;
        let field = |k: &str| v[k].as_str().ok_or_else(|| bad(&format!("missing string field \"{k}\"")));
        Translation::from_strs(m, field("dom")?, field("eq")?, field("plus")?)
    }

    pub fn dom_at(&self, a: &[String]) -> Formula {
        self.dom.instantiate(&tuple_names("x", self.m), a)
    }

    pub fn eq_at(&self, a: &[String], b: &[String]) -> Formula {
        let params = [tuple_names("x", self.m), tuple_names("y", self.m)].concat();
        self.eq.instantiate(&params, &[a, b].concat())
    }

    /// `a = b + c` in the interpreted structure.
    pub fn plus_at(&self, a: &[String], b: &[String], c: &[String]) -> Formula {
        let params = [tuple_names("x", self.m), tuple_names("y", self.m), tuple_names("z", self.m)].concat();
        self.plus.instantiate(&params, &[a, b, c].concat())
    }

    /// The same translation with each formula replaced by the quantifier-free
    /// form of its semilinear set, which keeps the sentences built from it
    /// small.
    fn compiled(&self) -> Translation {
        let m = self.m;
        let canon = |f: &Formula, vars: Vec<String>| {
            semilinear::from_qf(&qe::to_qf(f), &vars).to_qf(&vars).to_formula()
        };
        let (x, y, z) = (tuple_names("x", m), tuple_names("y", m), tuple_names("z", m));
        Translation {
            m,
            dom: canon(&self.dom, x.clone()),
            eq: canon(&self.eq, [x.clone(), y.clone()].concat()),
            plus: canon(&self.plus, [x, y, z].concat()),
        }
    }

    fn fresh(&self, hint: &str) -> Vec<String> {
        (0..self.m).map(|_| fresh_var(hint)).collect()
    }

    /// The tuple standing for the source variable `v`.
    pub fn var_tuple(&self, v: &str) -> Vec<String> {
        if self.m == 1 {
            vec![v.to_string()]
        } else {
            (1..=self.m).map(|i| format!("{v}_{i}")).collect()
        }
    }
}

// ---------------------------------------------------------------------------
// translation of formulas

/// `f^ι`: each variable becomes a tuple, quantifiers are relativized to
/// `dom`, `=` becomes `eq` and sums are unfolded through `plus`. Formulas in
/// the extended language are first rewritten into `{=, +}`.
pub fn translate_formula(t: &Translation, f: &Formula) -> Result<Formula, InterpError> {
    let core = desugar(f).map_err(|e| InterpError::SignatureMismatch(e.to_string()))?;
    translate(t, &core)
}

fn translate(t: &Translation, f: &Formula) -> Result<Formula, InterpError> {
    let go = |g: &Formula| translate(t, g);
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => {
            let mut fresh = Vec::new();
            let mut conds = Vec::new();
            let ta = translate_term(t, a, &mut fresh, &mut conds)?;
            let tb = translate_term(t, b, &mut fresh, &mut conds)?;
            conds.push(t.eq_at(&ta, &tb));
            Formula::exists_many(&fresh, Formula::and_all(conds))
        }
        Formula::Lt(..) | Formula::Le(..) | Formula::CongMod(..) | Formula::Count { .. } => {
            return Err(InterpError::SignatureMismatch(render(f)))
        }
        Formula::Not(g) => Formula::not(go(g)?),
        Formula::And(a, b) => Formula::and(go(a)?, go(b)?),
        Formula::Or(a, b) => Formula::or(go(a)?, go(b)?),
        Formula::Implies(a, b) => Formula::implies(go(a)?, go(b)?),
        Formula::Iff(a, b) => Formula::iff(go(a)?, go(b)?),
        Formula::Exists(v, g) => {
            let vs = t.var_tuple(v);
            Formula::exists_many(&vs, Formula::and(t.dom_at(&vs), go(g)?))
        }
        Formula::Forall(v, g) => {
            let vs = t.var_tuple(v);
            Formula::forall_many(&vs, Formula::implies(t.dom_at(&vs), go(g)?))
        }
    })
}

/// The tuple holding the value of `term`; sums get a fresh tuple constrained
/// by `dom` and `plus`.
fn translate_term(
    t: &Translation,
    term: &Term,
    fresh: &mut Vec<String>,
    conds: &mut Vec<Formula>,
) -> Result<Vec<String>, InterpError> {
    let sum = |a: Vec<String>, b: Vec<String>, fresh: &mut Vec<String>, conds: &mut Vec<Formula>| {
        let w = t.fresh("w");
        conds.push(t.dom_at(&w));
        conds.push(t.plus_at(&w, &a, &b));
        fresh.extend(w.iter().cloned());
        w
    };
    match term {
        Term::Var(v) => Ok(t.var_tuple(v)),
        Term::Add(a, b) => {
            let ta = translate_term(t, a, fresh, conds)?;
            let tb = translate_term(t, b, fresh, conds)?;
            Ok(sum(ta, tb, fresh, conds))
        }
        Term::Scale(k, a) => {
            let k = k.to_usize().filter(|&k| k >= 1).ok_or_else(|| {
                InterpError::SignatureMismatch(format!("coefficient {k} in a translated term"))
            })?;
            let ta = translate_term(t, a, fresh, conds)?;
            let mut acc = ta.clone();
            for _ in 1..k {
                acc = sum(acc, ta.clone(), fresh, conds);
            }
            Ok(acc)
        }
        Term::Num(n) => Err(InterpError::SignatureMismatch(format!("numeral {n}"))),
    }
}

// ---------------------------------------------------------------------------
// basic conditions

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub sentence: Formula,
    pub verdict: bool,
}

impl Check {
    fn decide(name: &str, sentence: Formula) -> Check {
        let verdict = qe::decide(&sentence).expect("verification sentences are closed");
        Check { name: name.to_string(), sentence, verdict }
    }

    pub fn to_json(&self) -> Value {
        json!({"name": self.name, "sentence": render(&self.sentence), "verdict": self.verdict})
    }
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.verdict)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.verdict).map(|c| c.name.clone()).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({"ok": self.ok(), "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>()})
    }
}

/// `∀ tuples (dom(each) → body)`.
fn forall_in(t: &Translation, tuples: &[&[String]], body: Formula) -> Formula {
    let doms = Formula::and_all(tuples.iter().map(|a| t.dom_at(a)));
    Formula::forall_many(&tuples.concat(), Formula::implies(doms, body))
}

/// Nonempty domain, `eq` an equivalence on it, `plus` total, functional and
/// compatible with `eq`.
pub fn verify_basics(t: &Translation) -> VerificationReport {
    basics(&t.compiled())
}

fn basics(t: &Translation) -> VerificationReport {
    let (a, b, c) = (t.fresh("a"), t.fresh("b"), t.fresh("c"));
    let (a2, b2, c2) = (t.fresh("a"), t.fresh("b"), t.fresh("c"));
    let checks = vec![
        Check::decide("domain nonempty", Formula::exists_many(&a, t.dom_at(&a))),
        Check::decide("eq reflexive", forall_in(t, &[&a], t.eq_at(&a, &a))),
        Check::decide("eq symmetric", forall_in(t, &[&a, &b], Formula::implies(t.eq_at(&a, &b), t.eq_at(&b, &a)))),
        Check::decide(
            "eq transitive",
            forall_in(
                t,
                &[&a, &b, &c],
                Formula::implies(Formula::and(t.eq_at(&a, &b), t.eq_at(&b, &c)), t.eq_at(&a, &c)),
            ),
        ),
        Check::decide(
            "plus total",
            forall_in(t, &[&b, &c], Formula::exists_many(&a, Formula::and(t.dom_at(&a), t.plus_at(&a, &b, &c)))),
        ),
        Check::decide(
            "plus functional",
            forall_in(
                t,
                &[&a, &a2, &b, &c],
                Formula::implies(Formula::and(t.plus_at(&a, &b, &c), t.plus_at(&a2, &b, &c)), t.eq_at(&a, &a2)),
            ),
        ),
        Check::decide(
            "plus respects eq",
            forall_in(
                t,
                &[&a, &b, &c, &a2, &b2, &c2],
                Formula::implies(
                    Formula::and_all([t.plus_at(&a, &b, &c), t.eq_at(&a, &a2), t.eq_at(&b, &b2), t.eq_at(&c, &c2)]),
                    t.plus_at(&a2, &b2, &c2),
                ),
            ),
        ),
    ];
    VerificationReport { checks }
}

// ---------------------------------------------------------------------------
// normalization

/// `d <lex c` as a formula.
fn lex_lt(d: &[String], c: &[String]) -> Formula {
    let v = |s: &String| Term::var(s.clone());
    Formula::or_all((0..d.len()).map(|i| {
        Formula::and(Formula::tuple_eq(&d[..i], &c[..i]), Formula::lt(v(&d[i]), v(&c[i])))
    }))
}

fn eliminated(f: Formula) -> Formula {
    qe::eliminate(&f).into_formula()
}

/// An equivalent non-relative interpretation `κ` with absolute equality and
/// the isomorphism `I(ȳ, z̄)` from `ι` to `κ`. The domain of `κ` is the set
/// of lexicographically least class representatives, straightened into
/// `N^{m'}` by the dimension bijection.
pub fn normalize(t: &Translation) -> Result<(Translation, Formula), InterpError> {
    normalize_compiled(&t.compiled())
}

fn normalize_compiled(t: &Translation) -> Result<(Translation, Formula), InterpError> {
    let report = basics(t);
    if !report.ok() {
        return Err(InterpError::BasicsFailed(report.failures()));
    }
    let r = t.fresh("r");
    let d = t.fresh("d");
    let least = Formula::and(
        t.dom_at(&r),
        Formula::forall_many(
            &d,
            Formula::implies(Formula::and(t.dom_at(&d), t.eq_at(&d, &r)), Formula::not(lex_lt(&d, &r))),
        ),
    );
    let reps = semilinear::from_formula(&least, &r);
    let b = dimension::bijection_to_cube(&reps, &r).map_err(|_| InterpError::FiniteDomain)?;
    let k = b.dim;
    let params = [b.xs.clone(), b.ys.clone()].concat();
    let graph = |src: &[String], dst: &[String]| b.formula.instantiate(&params, &[src, dst].concat());
    let (x, y, z) = (tuple_names("x", k), tuple_names("y", k), tuple_names("z", k));

    let (r0, r1, r2, w) = (t.fresh("r"), t.fresh("r"), t.fresh("r"), t.fresh("w"));
    let plus = Formula::exists_many(
        &[r0.clone(), r1.clone(), r2.clone(), w.clone()].concat(),
        Formula::and_all([
            graph(&r0, &x),
            graph(&r1, &y),
            graph(&r2, &z),
            t.dom_at(&w),
            t.plus_at(&w, &r1, &r2),
            t.eq_at(&w, &r0),
        ]),
    );
    let kappa = Translation {
        m: k,
        dom: Formula::True,
        eq: Formula::tuple_eq(&x, &y),
        plus: eliminated(plus),
    }
    .compiled();
    let (src, dst) = (tuple_names("y", t.m), tuple_names("z", k));
    let rr = t.fresh("r");
    let iso = Formula::and(
        t.dom_at(&src),
        Formula::exists_many(&rr, Formula::and(graph(&rr, &dst), t.eq_at(&src, &rr))),
    );
    Ok((kappa, eliminated(iso)))
}

// ---------------------------------------------------------------------------
// certification

#[derive(Debug, Clone)]
pub struct IsoCertificate {
    /// `I(y, z)`: the source element `y` corresponds to the natural `z`.
    pub iso: Formula,
    pub checks: Vec<Check>,
}

impl IsoCertificate {
    pub fn to_json(&self) -> Value {
        json!({
            "iso": render(&self.iso),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Certify that a one-dimensional `ι` interprets a copy of `(N, +)`: the
/// isomorphism sends `a` to the number of its `<_ι`-predecessors, where
/// `<_ι` is the translation of `<`; bijectivity and additivity are decided.
pub fn certify_self_interpretation_1d(t: &Translation) -> Result<IsoCertificate, InterpError> {
    if t.m != 1 {
        return Err(InterpError::Invalid(format!("certification needs dimension 1, got {}", t.m)));
    }
    let t = &t.compiled();
    let (kappa, to_kappa) = match normalize_compiled(t) {
        Err(InterpError::FiniteDomain) => return Err(InterpError::NotAModel("finite domain".into())),
        other => other?,
    };
    if kappa.m != 1 {
        return Err(InterpError::NotAModel(format!("normal form has dimension {}", kappa.m)));
    }
    let v = |s: &str| Term::var(s.to_string());
    let (a, c, n) = (fresh_var("a"), fresh_var("c"), fresh_var("n"));
    let below = translate_formula(&kappa, &Formula::lt(v(&c), v(&a)))?;
    let rank = counting::eliminate_counting(&Formula::count(n.clone(), c.clone(), below));
    let map = BTreeMap::from([("z".to_string(), a.clone())]);
    let iso = eliminated(Formula::exists(
        a.clone(),
        Formula::and(to_kappa.rename_free(&map), rank.rename_free(&BTreeMap::from([(n, "z".to_string())]))),
    ));

    let one = |s: &str| vec![s.to_string()];
    let at = |y: &str, z: &str| iso.rename_free(&BTreeMap::from([("y".to_string(), y.to_string()), ("z".to_string(), z.to_string())]));
    let (y, y2, z, z2) = (fresh_var("y"), fresh_var("y"), fresh_var("z"), fresh_var("z"));
    let (za, zb, zc) = (fresh_var("z"), fresh_var("z"), fresh_var("z"));
    let (aa, bb, cc) = (fresh_var("a"), fresh_var("b"), fresh_var("c"));
    let checks = vec![
        Check::decide("iso total", forall_in(t, &[&one(&y)], Formula::exists(z.clone(), at(&y, &z)))),
        Check::decide(
            "iso functional",
            forall_in(
                t,
                &[&one(&y)],
                Formula::forall_many(
                    &[z.clone(), z2.clone()],
                    Formula::implies(Formula::and(at(&y, &z), at(&y, &z2)), Formula::eq(v(&z), v(&z2))),
                ),
            ),
        ),
        Check::decide(
            "iso respects eq",
            forall_in(
                t,
                &[&one(&y), &one(&y2)],
                Formula::forall(
                    z.clone(),
                    Formula::implies(Formula::and(t.eq_at(&one(&y), &one(&y2)), at(&y, &z)), at(&y2, &z)),
                ),
            ),
        ),
        Check::decide(
            "iso injective",
            forall_in(
                t,
                &[&one(&y), &one(&y2)],
                Formula::forall(
                    z.clone(),
                    Formula::implies(Formula::and(at(&y, &z), at(&y2, &z)), t.eq_at(&one(&y), &one(&y2))),
                ),
            ),
        ),
        Check::decide(
            "iso surjective",
            Formula::forall(z.clone(), Formula::exists(y.clone(), Formula::and(t.dom_at(&one(&y)), at(&y, &z)))),
        ),
        Check::decide(
            "iso additive",
            forall_in(
                t,
                &[&one(&aa), &one(&bb), &one(&cc)],
                Formula::implies(
                    t.plus_at(&one(&cc), &one(&aa), &one(&bb)),
                    Formula::exists_many(
                        &[za.clone(), zb.clone(), zc.clone()],
                        Formula::and_all([
                            at(&aa, &za),
                            at(&bb, &zb),
                            at(&cc, &zc),
                            Formula::eq(v(&zc), Term::add(v(&za), v(&zb))),
                        ]),
                    ),
                ),
            ),
        ),
    ];
    if let Some(bad) = checks.iter().find(|c| !c.verdict) {
        return Err(InterpError::NotAModel(bad.name.clone()));
    }
    Ok(IsoCertificate { iso, checks })
}

// ---------------------------------------------------------------------------
// multiplication by √s through the Cantor bijection

#[derive(Debug, Clone, PartialEq)]
pub struct EnReport {
    pub s: u64,
    pub i: u8,
    pub bound: u64,
    /// Arguments `a` where `−2 < h(a) − √s·a < √s` fails (exact check).
    pub violations: Vec<u64>,
    /// Range of `h(a) − √s·a`, for display only.
    pub min_dev: f64,
    pub max_dev: f64,
}

impl EnReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for EnReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let verdict = if self.holds() {
            "all bounds hold".to_string()
        } else {
            format!("bounds fail at {} arguments, first a = {}", self.violations.len(), self.violations[0])
        };
        write!(
            f,
            "s={} i={} a<={}: {verdict}; h(a) - sqrt(s)*a ranges over [{:.4}, {:.4}]",
            self.s, self.i, self.bound, self.min_dev, self.max_dev
        )
    }
}

/// `h(a) = c + d` where `(c, d) = C_i⁻¹(s · C_i(p))`, with `p = (a, 0)` for
/// `i = 1` and the mirrored `p = (0, a)` for `i = 2` (`C₂(x, y) = C₁(y, x)`).
pub fn en_h(s: u64, i: u8, a: u64) -> BigUint {
    let (a, zero) = (BigUint::from(a), BigUint::from(0u32));
    let p = if i == 1 { (&a, &zero) } else { (&zero, &a) };
    let n = cantor_eval(i, p) * s;
    let (c, d) = cantor_inverse(i, &n);
    c + d
}

pub fn en_experiment(s: u64, i: u8, bound: u64) -> Result<EnReport, InterpError> {
    if s.sqrt() * s.sqrt() == s {
        return Err(InterpError::SquareInput(s));
    }
    let root = (s as f64).sqrt();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut violations = Vec::new();
    let sb = BigUint::from(s);
    for a in 0..=bound {
        let h = en_h(s, i, a);
        let ab = BigUint::from(a);
        // −2 < h − √s·a  ⟺  s·a² < (h+2)²;   h − √s·a < √s  ⟺  h² < s·(a+1)²
        let lower = &sb * &ab * &ab < (&h + 2u32) * (&h + 2u32);
        let upper = &h * &h < &sb * (&ab + 1u32) * (&ab + 1u32);
        if !(lower && upper) {
            violations.push(a);
        }
        let dev = h.to_f64().unwrap_or(f64::NAN) - root * a as f64;
        lo = lo.min(dev);
        hi = hi.max(dev);
    }
    Ok(EnReport { s, i, bound, violations, min_dev: lo, max_dev: hi })
}

#[cfg(test)]
mod tests;
