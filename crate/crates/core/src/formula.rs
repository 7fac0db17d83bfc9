//! Formulas of Presburger arithmetic over `(N, +)`.
//!
//! The surface language has numerals, `+`, scalar multiples `n*x`, the
//! relations `=`, `<`, `<=`, congruences `a == b mod n`, the usual boolean
//! connectives, first-order quantifiers and the counting quantifier
//! `count y z. phi` ("there are exactly `y` values of `z` with `phi`").

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Num(BigUint),
    Var(String),
    Add(Box<Term>, Box<Term>),
    /// `n * t` with a natural coefficient.
    Scale(BigUint, Box<Term>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Lt(Term, Term),
    Le(Term, Term),
    /// `t1 == t2 mod n`, `n >= 1`.
    CongMod(Term, Term, BigUint),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Exists(String, Box<Formula>),
    Forall(String, Box<Formula>),
    /// `count y z. body`: exactly `count` naturals `bound` satisfy `body`.
    Count {
        count: String,
        bound: String,
        body: Box<Formula>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("formula is not quantifier-free")]
    NotQuantifierFree,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DesugarError {
    #[error("counting quantifiers cannot be desugared into the core signature")]
    UnsupportedCounting,
}

/// A finite map from variable names to naturals.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment(BTreeMap<String, BigUint>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: impl Into<String>, value: impl Into<BigUint>) -> Self {
        self.0.insert(var.into(), value.into());
        self
    }

    pub fn set(&mut self, var: impl Into<String>, value: impl Into<BigUint>) {
        self.0.insert(var.into(), value.into());
    }

    pub fn get(&self, var: &str) -> Option<&BigUint> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BigUint)> {
        self.0.iter()
    }

    pub fn from_pairs<I, S, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, V)>,
        S: Into<String>,
        V: Into<BigUint>,
    {
        Self(pairs.into_iter().map(|(k, v)| (k.into(), v.into())).collect())
    }
}

static FRESH: AtomicUsize = AtomicUsize::new(0);

/// A variable name that cannot collide with anything the parser produces
/// from user input unless the user deliberately writes `__`-suffixed names.
pub fn fresh_var(hint: &str) -> String {
    let n = FRESH.fetch_add(1, Ordering::Relaxed);
    let base = hint.split("__").next().unwrap_or("v");
    format!("{base}__{n}")
}

// ---------------------------------------------------------------------------
// constructors

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn num(n: impl Into<BigUint>) -> Term {
        Term::Num(n.into())
    }

    pub fn add(a: Term, b: Term) -> Term {
        Term::Add(Box::new(a), Box::new(b))
    }

    pub fn scale(k: impl Into<BigUint>, t: Term) -> Term {
        Term::Scale(k.into(), Box::new(t))
    }

    /// Left-nested sum; the empty sum is `0`.
    pub fn sum(terms: impl IntoIterator<Item = Term>) -> Term {
        let mut it = terms.into_iter();
        match it.next() {
            None => Term::num(0u32),
            Some(first) => it.fold(first, Term::add),
        }
    }

    pub fn vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Num(_) => {}
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Add(a, b) => {
                a.vars(out);
                b.vars(out);
            }
            Term::Scale(_, t) => t.vars(out),
        }
    }

    fn mentions(&self, var: &str) -> bool {
        match self {
            Term::Num(_) => false,
            Term::Var(v) => v == var,
            Term::Add(a, b) => a.mentions(var) || b.mentions(var),
            Term::Scale(_, t) => t.mentions(var),
        }
    }

    fn rename(&self, map: &BTreeMap<String, String>) -> Term {
        match self {
            Term::Num(n) => Term::Num(n.clone()),
            Term::Var(v) => Term::Var(map.get(v).cloned().unwrap_or_else(|| v.clone())),
            Term::Add(a, b) => Term::add(a.rename(map), b.rename(map)),
            Term::Scale(k, t) => Term::Scale(k.clone(), Box::new(t.rename(map))),
        }
    }

    /// Flattened list of `(coefficient, Some(var))` / `(constant, None)`
    /// summands, in left-to-right order.
    fn summands(&self, factor: &BigUint, out: &mut Vec<(BigUint, Option<String>)>) {
        match self {
            Term::Num(n) => out.push((n * factor, None)),
            Term::Var(v) => out.push((factor.clone(), Some(v.clone()))),
            Term::Add(a, b) => {
                a.summands(factor, out);
                b.summands(factor, out);
            }
            Term::Scale(k, t) => t.summands(&(k * factor), out),
        }
    }

    pub fn eval(&self, a: &Assignment) -> Result<BigUint, EvalError> {
        match self {
            Term::Num(n) => Ok(n.clone()),
            Term::Var(v) => a
                .get(v)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(v.clone())),
            Term::Add(x, y) => Ok(x.eval(a)? + y.eval(a)?),
            Term::Scale(k, t) => Ok(k * t.eval(a)?),
        }
    }
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn lt(a: Term, b: Term) -> Formula {
        Formula::Lt(a, b)
    }

    pub fn le(a: Term, b: Term) -> Formula {
        Formula::Le(a, b)
    }

    pub fn cong(a: Term, b: Term, m: impl Into<BigUint>) -> Formula {
        Formula::CongMod(a, b, m.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn exists(v: impl Into<String>, body: Formula) -> Formula {
        Formula::Exists(v.into(), Box::new(body))
    }

    pub fn forall(v: impl Into<String>, body: Formula) -> Formula {
        Formula::Forall(v.into(), Box::new(body))
    }

    pub fn count(count: impl Into<String>, bound: impl Into<String>, body: Formula) -> Formula {
        Formula::Count {
            count: count.into(),
            bound: bound.into(),
            body: Box::new(body),
        }
    }

    /// Conjunction of all items; `true` when empty.
    pub fn and_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Disjunction of all items; `false` when empty.
    pub fn or_all(items: impl IntoIterator<Item = Formula>) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn exists_many(vars: &[String], body: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::exists(v.clone(), acc))
    }

    pub fn forall_many(vars: &[String], body: Formula) -> Formula {
        vars.iter()
            .rev()
            .fold(body, |acc, v| Formula::forall(v.clone(), acc))
    }

    /// Coordinatewise equality of two equally long variable tuples.
    pub fn tuple_eq(xs: &[String], ys: &[String]) -> Formula {
        Formula::and_all(
            xs.iter()
                .zip(ys)
                .map(|(x, y)| Formula::eq(Term::var(x.clone()), Term::var(y.clone()))),
        )
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let atom = |ts: &[&Term], out: &mut BTreeSet<String>| {
            let mut vs = BTreeSet::new();
            for t in ts {
                t.vars(&mut vs);
            }
            out.extend(vs.into_iter().filter(|v| !bound.contains(v)));
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) | Formula::Lt(a, b) | Formula::Le(a, b) | Formula::CongMod(a, b, _) => {
                atom(&[a, b], out)
            }
            Formula::Not(f) => f.collect_free(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                bound.push(v.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
            Formula::Count { count, bound: z, body } => {
                if !bound.contains(count) {
                    out.insert(count.clone());
                }
                bound.push(z.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    pub fn is_quantifier_free(&self) -> bool {
        match self {
            Formula::True
            | Formula::False
            | Formula::Eq(..)
            | Formula::Lt(..)
            | Formula::Le(..)
            | Formula::CongMod(..) => true,
            Formula::Not(f) => f.is_quantifier_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.is_quantifier_free() && b.is_quantifier_free()
            }
            Formula::Exists(..) | Formula::Forall(..) | Formula::Count { .. } => false,
        }
    }

    pub fn has_counting(&self) -> bool {
        match self {
            Formula::Count { .. } => true,
            Formula::Not(f) | Formula::Exists(_, f) | Formula::Forall(_, f) => f.has_counting(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.has_counting() || b.has_counting()
            }
            _ => false,
        }
    }

    /// Simultaneous capture-avoiding renaming of free variables.
    pub fn rename_free(&self, map: &BTreeMap<String, String>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Eq(a, b) => Formula::Eq(a.rename(map), b.rename(map)),
            Formula::Lt(a, b) => Formula::Lt(a.rename(map), b.rename(map)),
            Formula::Le(a, b) => Formula::Le(a.rename(map), b.rename(map)),
            Formula::CongMod(a, b, m) => Formula::CongMod(a.rename(map), b.rename(map), m.clone()),
            Formula::Not(f) => Formula::not(f.rename_free(map)),
            Formula::And(a, b) => Formula::and(a.rename_free(map), b.rename_free(map)),
            Formula::Or(a, b) => Formula::or(a.rename_free(map), b.rename_free(map)),
            Formula::Implies(a, b) => Formula::implies(a.rename_free(map), b.rename_free(map)),
            Formula::Iff(a, b) => Formula::iff(a.rename_free(map), b.rename_free(map)),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let (v2, inner) = rebind(v, map);
                let body = f.rename_free(&inner);
                if matches!(self, Formula::Exists(..)) {
                    Formula::exists(v2, body)
                } else {
                    Formula::forall(v2, body)
                }
            }
            Formula::Count { count, bound, body } => {
                let c = map.get(count).cloned().unwrap_or_else(|| count.clone());
                let (z2, inner) = rebind(bound, map);
                Formula::count(c, z2, body.rename_free(&inner))
            }
        }
    }

    /// Instantiate a formula whose free variables are `params` with `args`.
    pub fn instantiate(&self, params: &[String], args: &[String]) -> Formula {
        assert_eq!(params.len(), args.len(), "arity mismatch in instantiate");
        let map: BTreeMap<String, String> = params
            .iter()
            .cloned()
            .zip(args.iter().cloned())
            .filter(|(p, a)| p != a)
            .collect();
        self.rename_free(&map)
    }

    /// Structural equality up to renaming of bound variables. Sums are
    /// compared as flattened summand sequences since the grammar has no
    /// term-level parentheses.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        alpha_eq(self, other, &mut Vec::new())
    }
}

/// Drop the binder from the map, renaming it if it would capture a target.
fn rebind(v: &str, map: &BTreeMap<String, String>) -> (String, BTreeMap<String, String>) {
    let mut inner = map.clone();
    inner.remove(v);
    if inner.values().any(|t| t == v) {
        let nv = fresh_var(v);
        inner.insert(v.to_string(), nv.clone());
        (nv, inner)
    } else {
        (v.to_string(), inner)
    }
}

fn term_alpha_eq(a: &Term, b: &Term, env: &[(String, String)]) -> bool {
    let one = BigUint::one();
    let mut sa = Vec::new();
    let mut sb = Vec::new();
    a.summands(&one, &mut sa);
    b.summands(&one, &mut sb);
    sa.len() == sb.len()
        && sa.iter().zip(&sb).all(|((ka, va), (kb, vb))| {
            ka == kb
                && match (va, vb) {
                    (None, None) => true,
                    (Some(x), Some(y)) => lookup_pair(x, y, env),
                    _ => false,
                }
        })
}

fn lookup_pair(x: &str, y: &str, env: &[(String, String)]) -> bool {
    for (l, r) in env.iter().rev() {
        if l == x || r == y {
            return l == x && r == y;
        }
    }
    x == y
}

fn alpha_eq(f: &Formula, g: &Formula, env: &mut Vec<(String, String)>) -> bool {
    use Formula::*;
    match (f, g) {
        (True, True) | (False, False) => true,
        (Eq(a, b), Eq(c, d)) | (Lt(a, b), Lt(c, d)) | (Le(a, b), Le(c, d)) => {
            term_alpha_eq(a, c, env) && term_alpha_eq(b, d, env)
        }
        (CongMod(a, b, m), CongMod(c, d, n)) => {
            m == n && term_alpha_eq(a, c, env) && term_alpha_eq(b, d, env)
        }
        (Not(a), Not(b)) => alpha_eq(a, b, env),
        (And(a, b), And(c, d))
        | (Or(a, b), Or(c, d))
        | (Implies(a, b), Implies(c, d))
        | (Iff(a, b), Iff(c, d)) => alpha_eq(a, c, env) && alpha_eq(b, d, env),
        (Exists(x, a), Exists(y, b)) | (Forall(x, a), Forall(y, b)) => {
            env.push((x.clone(), y.clone()));
            let r = alpha_eq(a, b, env);
            env.pop();
            r
        }
        (
            Count { count: c1, bound: z1, body: b1 },
            Count { count: c2, bound: z2, body: b2 },
        ) => {
            if !lookup_pair(c1, c2, env) {
                return false;
            }
            env.push((z1.clone(), z2.clone()));
            let r = alpha_eq(b1, b2, env);
            env.pop();
            r
        }
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// lexer / parser

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Nat(BigUint),
    Forall,
    Exists,
    Count,
    True,
    False,
    Mod,
    Dot,
    Amp,
    Bar,
    Arrow,
    DArrow,
    Bang,
    LParen,
    RParen,
    Eq,
    EqEq,
    Lt,
    Le,
    Plus,
    Star,
    End,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, column, message: String| ParseError { line, column, message };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let (sl, sc) = (line, col);
        let starts = |s: &str| chars[i..].iter().take(s.len()).copied().eq(s.chars());
        let (tok, len) = if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            (Tok::Nat(s.parse().expect("digits")), j - i)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            let s: String = chars[i..j].iter().collect();
            let tok = match s.as_str() {
                "forall" => Tok::Forall,
                "exists" => Tok::Exists,
                "count" => Tok::Count,
                "true" => Tok::True,
                "false" => Tok::False,
                "mod" => Tok::Mod,
                _ => Tok::Ident(s),
            };
            (tok, j - i)
        } else if starts("<->") {
            (Tok::DArrow, 3)
        } else if starts("->") {
            (Tok::Arrow, 2)
        } else if starts("<=") {
            (Tok::Le, 2)
        } else if starts("==") {
            (Tok::EqEq, 2)
        } else {
            let tok = match c {
                '.' => Tok::Dot,
                '&' => Tok::Amp,
                '|' => Tok::Bar,
                '!' => Tok::Bang,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '+' => Tok::Plus,
                '*' => Tok::Star,
                other => return Err(err(sl, sc, format!("unexpected character `{other}`"))),
            };
            (tok, 1)
        };
        out.push(Spanned { tok, line: sl, column: sc });
        i += len;
        col += len;
    }
    out.push(Spanned { tok: Tok::End, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = &self.toks[self.pos];
        ParseError { line: t.line, column: t.column, message: message.into() }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error_here(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.error_here("expected identifier")),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.implies()?;
        while *self.peek() == Tok::DArrow {
            self.bump();
            let rhs = self.implies()?;
            lhs = Formula::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implies()?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            let rhs = self.and()?;
            lhs = Formula::or(lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Formula::and(lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Formula::not(self.unary()?))
            }
            Tok::Forall | Tok::Exists => {
                let is_forall = *self.peek() == Tok::Forall;
                self.bump();
                let v = self.ident()?;
                self.expect(Tok::Dot, "`.`")?;
                let body = self.iff()?;
                Ok(if is_forall { Formula::forall(v, body) } else { Formula::exists(v, body) })
            }
            Tok::Count => {
                self.bump();
                let y = self.ident()?;
                let z = self.ident()?;
                if y == z {
                    return Err(self.error_here("counting variable and bound variable must differ"));
                }
                self.expect(Tok::Dot, "`.`")?;
                let body = self.iff()?;
                Ok(Formula::count(y, z, body))
            }
            Tok::LParen => {
                self.bump();
                let f = self.iff()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(f)
            }
            Tok::True => {
                self.bump();
                Ok(Formula::True)
            }
            Tok::False => {
                self.bump();
                Ok(Formula::False)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.term()?;
        let op = self.bump();
        let rhs = self.term()?;
        match op.tok {
            Tok::Eq => Ok(Formula::Eq(lhs, rhs)),
            Tok::Lt => Ok(Formula::Lt(lhs, rhs)),
            Tok::Le => Ok(Formula::Le(lhs, rhs)),
            Tok::EqEq => {
                self.expect(Tok::Mod, "`mod`")?;
                let at = self.pos;
                match self.bump().tok {
                    Tok::Nat(n) if !n.is_zero() => Ok(Formula::CongMod(lhs, rhs, n)),
                    Tok::Nat(_) => {
                        self.pos = at;
                        Err(self.error_here("modulus must be at least 1"))
                    }
                    _ => {
                        self.pos = at;
                        Err(self.error_here("expected modulus"))
                    }
                }
            }
            _ => Err(ParseError {
                line: op.line,
                column: op.column,
                message: "expected `=`, `<`, `<=` or `==`".into(),
            }),
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.summand()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let s = self.summand()?;
            t = Term::add(t, s);
        }
        Ok(t)
    }

    fn summand(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::Nat(n) => {
                self.bump();
                if *self.peek() == Tok::Star {
                    self.bump();
                    let v = self.ident()?;
                    Ok(Term::Scale(n, Box::new(Term::Var(v))))
                } else {
                    Ok(Term::Num(n))
                }
            }
            Tok::Ident(v) => {
                self.bump();
                Ok(Term::Var(v))
            }
            _ => Err(self.error_here("expected term")),
        }
    }
}

/// Parse a formula from its textual form.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let f = p.iff()?;
    if *p.peek() != Tok::End {
        return Err(p.error_here("unexpected trailing input"));
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// rendering

fn render_term(t: &Term) -> String {
    let mut summands = Vec::new();
    t.summands(&BigUint::one(), &mut summands);
    summands
        .iter()
        .map(|(k, v)| match v {
            None => k.to_string(),
            Some(v) if k.is_one() => v.clone(),
            Some(v) => format!("{k}*{v}"),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn prec(f: &Formula) -> u8 {
    match f {
        Formula::Iff(..) => 1,
        Formula::Implies(..) => 2,
        Formula::Or(..) => 3,
        Formula::And(..) => 4,
        Formula::Not(..) => 5,
        Formula::Exists(..) | Formula::Forall(..) | Formula::Count { .. } => 0,
        _ => 6,
    }
}

fn render_child(f: &Formula, parens: bool) -> String {
    if parens || prec(f) == 0 {
        format!("({})", render(f))
    } else {
        render(f)
    }
}

/// Render a formula in the concrete syntax accepted by [`parse`].
pub fn render(f: &Formula) -> String {
    match f {
        Formula::True => "true".into(),
        Formula::False => "false".into(),
        Formula::Eq(a, b) => format!("{} = {}", render_term(a), render_term(b)),
        Formula::Lt(a, b) => format!("{} < {}", render_term(a), render_term(b)),
        Formula::Le(a, b) => format!("{} <= {}", render_term(a), render_term(b)),
        Formula::CongMod(a, b, m) => format!("{} == {} mod {}", render_term(a), render_term(b), m),
        Formula::Not(g) => format!("!{}", render_child(g, prec(g) < 5)),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Iff(a, b) => {
            let op = match f {
                Formula::And(..) => "&",
                Formula::Or(..) => "|",
                _ => "<->",
            };
            let p = prec(f);
            format!("{} {op} {}", render_child(a, prec(a) < p), render_child(b, prec(b) <= p))
        }
        Formula::Implies(a, b) => {
            let p = prec(f);
            format!("{} -> {}", render_child(a, prec(a) <= p), render_child(b, prec(b) < p))
        }
        Formula::Exists(v, g) => format!("exists {v}. {}", render(g)),
        Formula::Forall(v, g) => format!("forall {v}. {}", render(g)),
        Formula::Count { count, bound, body } => format!("count {count} {bound}. {}", render(body)),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_term(self))
    }
}

// ---------------------------------------------------------------------------
// desugaring into the signature <=, +>

fn var(v: &str) -> Term {
    Term::var(v)
}

/// `x` is zero: `forall v. x + v = v`.
fn def_zero(x: &str) -> Formula {
    let v = fresh_var("v");
    Formula::forall(v.clone(), Formula::eq(Term::add(var(x), var(&v)), var(&v)))
}

/// `x` is one: `!zero(x) & forall u v. x = u + v -> zero(u) | zero(v)`.
fn def_one(x: &str) -> Formula {
    let (u, v) = (fresh_var("u"), fresh_var("v"));
    let split = Formula::implies(
        Formula::eq(var(x), Term::add(var(&u), var(&v))),
        Formula::or(def_zero(&u), def_zero(&v)),
    );
    Formula::and(
        Formula::not(def_zero(x)),
        Formula::forall(u.clone(), Formula::forall(v, split)),
    )
}

/// `x` equals the numeral `n`, built from the successor chain.
fn def_numeral(x: &str, n: &BigUint) -> Formula {
    if n.is_zero() {
        return def_zero(x);
    }
    if n.is_one() {
        return def_one(x);
    }
    let (u, w) = (fresh_var("u"), fresh_var("w"));
    let prev = n - 1u32;
    Formula::exists(
        u.clone(),
        Formula::and(
            def_numeral(&u, &prev),
            Formula::exists(
                w.clone(),
                Formula::and(def_one(&w), Formula::eq(var(x), Term::add(var(&u), var(&w)))),
            ),
        ),
    )
}

/// Rewrite a term into variables and `+` only, returning the numerals that
/// had to be named by fresh variables.
fn flatten_term(t: &Term, named: &mut Vec<(String, BigUint)>) -> Term {
    match t {
        Term::Var(v) => Term::Var(v.clone()),
        Term::Num(n) => {
            let w = fresh_var("n");
            named.push((w.clone(), n.clone()));
            Term::Var(w)
        }
        Term::Add(a, b) => Term::add(flatten_term(a, named), flatten_term(b, named)),
        Term::Scale(k, inner) => {
            if k.is_zero() {
                return flatten_term(&Term::Num(BigUint::zero()), named);
            }
            let base = flatten_term(inner, named);
            let copies = k.to_usize().expect("scalar coefficient too large to unfold");
            Term::sum(std::iter::repeat_n(base, copies))
        }
    }
}

fn wrap_numerals(named: Vec<(String, BigUint)>, body: Formula) -> Formula {
    named.into_iter().rev().fold(body, |acc, (w, n)| {
        Formula::exists(w.clone(), Formula::and(def_numeral(&w, &n), acc))
    })
}

fn desugar_eq(a: &Term, b: &Term) -> Formula {
    let mut named = Vec::new();
    let (fa, fb) = (flatten_term(a, &mut named), flatten_term(b, &mut named));
    wrap_numerals(named, Formula::eq(fa, fb))
}

fn is_zero_numeral(t: &Term) -> bool {
    matches!(t, Term::Num(n) if n.is_zero())
}

/// Translate a formula of the extended language into the core signature
/// `<=, +>` using fixed definitions of the extended symbols.
pub fn desugar(f: &Formula) -> Result<Formula, DesugarError> {
    Ok(match f {
        Formula::True | Formula::False => f.clone(),
        Formula::Eq(a, b) => desugar_eq(a, b),
        Formula::Le(a, b) => {
            let u = fresh_var("u");
            Formula::exists(u.clone(), desugar_eq(b, &Term::add(a.clone(), var(&u))))
        }
        Formula::Lt(a, b) => {
            let u = fresh_var("u");
            Formula::exists(
                u.clone(),
                Formula::and(
                    desugar_eq(b, &Term::add(a.clone(), var(&u))),
                    Formula::not(def_zero(&u)),
                ),
            )
        }
        Formula::CongMod(a, b, m) => {
            let q = fresh_var("u");
            let mult = Term::Scale(m.clone(), Box::new(var(&q)));
            let body = if is_zero_numeral(b) {
                desugar_eq(a, &mult)
            } else if is_zero_numeral(a) {
                desugar_eq(b, &mult)
            } else {
                Formula::or(
                    desugar_eq(a, &Term::add(b.clone(), mult.clone())),
                    desugar_eq(b, &Term::add(a.clone(), mult)),
                )
            };
            Formula::exists(q, body)
        }
        Formula::Not(g) => Formula::not(desugar(g)?),
        Formula::And(a, b) => Formula::and(desugar(a)?, desugar(b)?),
        Formula::Or(a, b) => Formula::or(desugar(a)?, desugar(b)?),
        Formula::Implies(a, b) => Formula::implies(desugar(a)?, desugar(b)?),
        Formula::Iff(a, b) => Formula::iff(desugar(a)?, desugar(b)?),
        Formula::Exists(v, g) => Formula::exists(v.clone(), desugar(g)?),
        Formula::Forall(v, g) => Formula::forall(v.clone(), desugar(g)?),
        Formula::Count { .. } => return Err(DesugarError::UnsupportedCounting),
    })
}

/// True when the formula only uses `=`, `+` and variables in its atoms.
pub fn is_core_signature(f: &Formula) -> bool {
    fn core_term(t: &Term) -> bool {
        match t {
            Term::Var(_) => true,
            Term::Add(a, b) => core_term(a) && core_term(b),
            _ => false,
        }
    }
    match f {
        Formula::True | Formula::False => true,
        Formula::Eq(a, b) => core_term(a) && core_term(b),
        Formula::Lt(..) | Formula::Le(..) | Formula::CongMod(..) | Formula::Count { .. } => false,
        Formula::Not(g) | Formula::Exists(_, g) | Formula::Forall(_, g) => is_core_signature(g),
        Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
            is_core_signature(a) && is_core_signature(b)
        }
    }
}

// ---------------------------------------------------------------------------
// evaluation

fn eval_atom(f: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    Ok(match f {
        Formula::Eq(x, y) => x.eval(a)? == y.eval(a)?,
        Formula::Lt(x, y) => x.eval(a)? < y.eval(a)?,
        Formula::Le(x, y) => x.eval(a)? <= y.eval(a)?,
        Formula::CongMod(x, y, m) => (x.eval(a)? % m) == (y.eval(a)? % m),
        _ => unreachable!("not an atom"),
    })
}

/// Truth of a quantifier-free formula under an assignment.
pub fn evaluate_qf(f: &Formula, a: &Assignment) -> Result<bool, EvalError> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Eq(..) | Formula::Lt(..) | Formula::Le(..) | Formula::CongMod(..) => eval_atom(f, a),
        Formula::Not(g) => Ok(!evaluate_qf(g, a)?),
        Formula::And(x, y) => Ok(evaluate_qf(x, a)? && evaluate_qf(y, a)?),
        Formula::Or(x, y) => Ok(evaluate_qf(x, a)? || evaluate_qf(y, a)?),
        Formula::Implies(x, y) => Ok(!evaluate_qf(x, a)? || evaluate_qf(y, a)?),
        Formula::Iff(x, y) => Ok(evaluate_qf(x, a)? == evaluate_qf(y, a)?),
        Formula::Exists(..) | Formula::Forall(..) | Formula::Count { .. } => {
            Err(EvalError::NotQuantifierFree)
        }
    }
}

/// Upper bound imposed on `v` by a leading guard `v < t` / `v <= t`.
fn guard_limit(v: &str, guard: &Formula, a: &Assignment) -> Result<Option<Option<BigUint>>, EvalError> {
    let (t, strict) = match guard {
        Formula::Lt(Term::Var(x), t) if x == v && !t.mentions(v) => (t, true),
        Formula::Le(Term::Var(x), t) if x == v && !t.mentions(v) => (t, false),
        _ => return Ok(None),
    };
    let bound = t.eval(a)?;
    if strict {
        if bound.is_zero() {
            Ok(Some(None))
        } else {
            Ok(Some(Some(bound - 1u32)))
        }
    } else {
        Ok(Some(Some(bound)))
    }
}

fn leftmost_conjunct(f: &Formula) -> &Formula {
    match f {
        Formula::And(a, _) => leftmost_conjunct(a),
        other => other,
    }
}

/// Range `0..=hi` for a bounded quantifier over `v`; `None` when empty.
fn bounded_range(
    v: &str,
    body: &Formula,
    universal: bool,
    a: &Assignment,
    bound: u64,
) -> Result<Option<u64>, EvalError> {
    let guard = if universal {
        match body {
            Formula::Implies(g, _) => Some(leftmost_conjunct(g)),
            _ => None,
        }
    } else {
        Some(leftmost_conjunct(body))
    };
    let Some(guard) = guard else { return Ok(Some(bound)) };
    // the guard may only be used when it is independent of quantifier state
    let mut fv = BTreeSet::new();
    if let Formula::Lt(_, t) | Formula::Le(_, t) = guard {
        t.vars(&mut fv);
        if fv.iter().any(|x| a.get(x).is_none()) {
            return Ok(Some(bound));
        }
    }
    match guard_limit(v, guard, a)? {
        None => Ok(Some(bound)),
        Some(None) => Ok(None),
        Some(Some(lim)) => Ok(Some(lim.to_u64().map_or(bound, |l| l.min(bound)))),
    }
}

/// Truth value under bounded semantics: every quantifier, including the
/// counting quantifier, ranges over `{0, ..., bound}`.
///
/// This is a testing oracle. It agrees with the true semantics only when the
/// bound is large enough for the instance at hand.
pub fn evaluate_bounded(f: &Formula, a: &Assignment, bound: u64) -> Result<bool, EvalError> {
    let mut env = a.clone();
    eval_bounded(f, &mut env, bound)
}

fn eval_bounded(f: &Formula, env: &mut Assignment, bound: u64) -> Result<bool, EvalError> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Eq(..) | Formula::Lt(..) | Formula::Le(..) | Formula::CongMod(..) => eval_atom(f, env),
        Formula::Not(g) => Ok(!eval_bounded(g, env, bound)?),
        Formula::And(x, y) => Ok(eval_bounded(x, env, bound)? && eval_bounded(y, env, bound)?),
        Formula::Or(x, y) => Ok(eval_bounded(x, env, bound)? || eval_bounded(y, env, bound)?),
        Formula::Implies(x, y) => Ok(!eval_bounded(x, env, bound)? || eval_bounded(y, env, bound)?),
        Formula::Iff(x, y) => Ok(eval_bounded(x, env, bound)? == eval_bounded(y, env, bound)?),
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let saved = env.0.remove(v);
            let result = (|| {
                let Some(hi) = bounded_range(v, body, universal, env, bound)? else {
                    return Ok(universal);
                };
                for i in 0..=hi {
                    env.set(v.clone(), BigUint::from(i));
                    if eval_bounded(body, env, bound)? != universal {
                        return Ok(!universal);
                    }
                }
                Ok(universal)
            })();
            restore(env, v, saved);
            result
        }
        Formula::Count { count, bound: z, body } => {
            let target = env
                .get(count)
                .cloned()
                .ok_or_else(|| EvalError::UnboundVariable(count.clone()))?;
            let saved = env.0.remove(z);
            let result = (|| {
                let mut n = BigUint::zero();
                if let Some(hi) = bounded_range(z, body, false, env, bound)? {
                    for i in 0..=hi {
                        env.set(z.clone(), BigUint::from(i));
                        if eval_bounded(body, env, bound)? {
                            n += 1u32;
                        }
                    }
                }
                Ok(n == target)
            })();
            restore(env, z, saved);
            result
        }
    }
}

fn restore(env: &mut Assignment, v: &str, saved: Option<BigUint>) {
    match saved {
        Some(x) => env.set(v.to_string(), x),
        None => {
            env.0.remove(v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Formula {
        parse(s).unwrap()
    }

    #[test]
    fn parses_examples() {
        assert_eq!(
            p("exists y. x = 2*y"),
            Formula::exists("y", Formula::eq(var("x"), Term::scale(2u32, var("y"))))
        );
        assert_eq!(
            p("count n z. z < x"),
            Formula::count("n", "z", Formula::lt(var("z"), var("x")))
        );
        let e = parse("x == 1 mod 0").unwrap_err();
        assert_eq!((e.line, e.column), (1, 12));
    }

    #[test]
    fn precedence_and_scope() {
        assert_eq!(
            p("a = 0 | b = 0 & c = 0"),
            Formula::or(
                Formula::eq(var("a"), Term::num(0u32)),
                Formula::and(
                    Formula::eq(var("b"), Term::num(0u32)),
                    Formula::eq(var("c"), Term::num(0u32))
                )
            )
        );
        // quantifier body extends to the right
        match p("exists x. x = 0 & y = 0") {
            Formula::Exists(_, body) => assert!(matches!(*body, Formula::And(..))),
            other => panic!("{other:?}"),
        }
        assert!(matches!(p("a = 0 -> b = 0 -> c = 0"), Formula::Implies(_, r) if matches!(*r, Formula::Implies(..))));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let e = parse("x = \n  y +").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(parse("x = y )").is_err());
        assert!(parse("count z z. z = 0").is_err());
        assert!(parse("x # y").is_err());
    }

    #[test]
    fn renders_examples() {
        assert_eq!(render(&Formula::eq(var("x"), Term::num(0u32))), "x = 0");
        assert_eq!(render(&Formula::True), "true");
        assert_eq!(render(&p("exists y. x = 2*y")), "exists y. x = 2*y");
        let f = p("(exists y. x = y) & !(forall z. z = z) | x == y + 1 mod 3");
        assert_eq!(parse(&render(&f)).unwrap(), f);
    }

    #[test]
    fn evaluates_qf_examples() {
        let a = Assignment::new().with("x", 9u32);
        assert!(evaluate_qf(&p("x == 0 mod 3"), &a).unwrap());
        let a = Assignment::new().with("x", 2u32).with("y", 2u32);
        assert!(!evaluate_qf(&p("x < y"), &a).unwrap());
        let a = Assignment::new().with("x", 3u32).with("y", 7u32);
        assert!(evaluate_qf(&p("2*x + 1 = y"), &a).unwrap());
        assert_eq!(
            evaluate_qf(&p("x = z"), &a),
            Err(EvalError::UnboundVariable("z".into()))
        );
        assert_eq!(
            evaluate_qf(&p("exists z. x = z"), &a),
            Err(EvalError::NotQuantifierFree)
        );
    }

    #[test]
    fn evaluates_bounded_examples() {
        let none = Assignment::new();
        assert!(evaluate_bounded(&p("forall x. exists y. x = 2*y | x = 2*y + 1"), &none, 50).unwrap());
        assert!(!evaluate_bounded(&p("exists x. x + x = 5"), &none, 10).unwrap());
        let a = Assignment::new().with("x", 4u32).with("n", 4u32);
        assert!(evaluate_bounded(&p("count n z. z < x"), &a, 100).unwrap());
        let a = Assignment::new().with("x", 4u32).with("n", 3u32);
        assert!(!evaluate_bounded(&p("count n z. z < x"), &a, 100).unwrap());
    }

    #[test]
    fn guards_do_not_change_bounded_semantics() {
        let f = p("forall y. y < x -> exists z. z <= y & z + z = y | z + z + 1 = y");
        for x in 0..12u32 {
            let a = Assignment::new().with("x", x);
            assert!(evaluate_bounded(&f, &a, 40).unwrap());
        }
        // shadowed variable in the guard term must not be mis-read
        let g = p("exists x. x < x + 1 & x = 3");
        assert!(evaluate_bounded(&g, &Assignment::new(), 10).unwrap());
    }

    #[test]
    fn desugar_examples() {
        let eq = p("x = y");
        assert_eq!(desugar(&eq).unwrap(), eq);
        match desugar(&p("x == 0 mod 2")).unwrap() {
            Formula::Exists(u, body) => {
                assert_eq!(*body, Formula::eq(var("x"), Term::add(var(&u), var(&u))));
            }
            other => panic!("{other:?}"),
        }
        let lt = desugar(&p("x < y")).unwrap();
        assert!(is_core_signature(&lt));
        assert_eq!(desugar(&p("count n z. z < x")), Err(DesugarError::UnsupportedCounting));
    }

    #[test]
    fn desugar_is_sound_on_small_instances() {
        for src in ["x < y", "x <= y", "x = 2", "x == y mod 3", "2*x + 1 = y", "x < 2"] {
            let f = p(src);
            let d = desugar(&f).unwrap();
            assert!(is_core_signature(&d), "{src}");
            for x in 0..6u32 {
                for y in 0..6u32 {
                    let a = Assignment::new().with("x", x).with("y", y);
                    assert_eq!(
                        evaluate_bounded(&f, &a, 12).unwrap(),
                        evaluate_bounded(&d, &a, 12).unwrap(),
                        "{src} at x={x} y={y}"
                    );
                }
            }
        }
    }

    #[test]
    fn renaming_avoids_capture() {
        let f = p("exists y. x = y + 1");
        let map = BTreeMap::from([("x".to_string(), "y".to_string())]);
        let g = f.rename_free(&map);
        assert_eq!(g.free_vars(), BTreeSet::from(["y".to_string()]));
        let a = Assignment::new().with("y", 3u32);
        assert!(evaluate_bounded(&g, &a, 10).unwrap());
    }

    #[test]
    fn free_vars_of_counting() {
        let f = p("count n z. z < x");
        assert_eq!(f.free_vars(), BTreeSet::from(["n".to_string(), "x".to_string()]));
    }
}
