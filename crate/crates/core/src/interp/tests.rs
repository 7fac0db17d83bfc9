use super::*;
use crate::formula::{evaluate_qf, Assignment};

fn evens() -> Translation {
    Translation::from_strs(1, "x == 0 mod 2", "x = y", "x = y + z").unwrap()
}

fn multiples_of_3() -> Translation {
    Translation::from_strs(1, "x == 0 mod 3", "x = y", "x = y + z").unwrap()
}

fn shifted() -> Translation {
    Translation::from_strs(1, "5 <= x", "x = y", "x + 5 = y + z").unwrap()
}

/// Residues 0 and 1 mod 3; `n` is encoded as `3·(n div 2) + n mod 2`.
fn two_residues() -> Translation {
    let decode = |v: &str, q: &str, r: &str| format!("{v} = 3*{q} + {r} & {r} <= 1");
    let plus = format!(
        "exists qx. exists rx. exists qy. exists ry. exists qz. exists rz. {} & {} & {} & 2*qx + rx = 2*qy + ry + 2*qz + rz",
        decode("x", "qx", "rx"),
        decode("y", "qy", "ry"),
        decode("z", "qz", "rz")
    );
    Translation::from_strs(1, "x == 0 mod 3 | x == 1 mod 3", "x = y", &plus).unwrap()
}

fn max_plus() -> Translation {
    Translation::from_strs(1, "x = x", "x = y", "(y <= z & x = z) | (z < y & x = y)").unwrap()
}

fn iso_value(cert: &IsoCertificate, y: u64) -> Option<u64> {
    (0..=200u64).find(|&z| evaluate_qf(&cert.iso, &Assignment::new().with("y", y).with("z", z)).unwrap())
}

#[test]
fn translating_formulas() {
    let id = Translation::identity();
    let f = parse("forall x. exists y. y = x + x").unwrap();
    let g = translate_formula(&id, &f).unwrap();
    assert!(qe::equivalent(&f, &g));
    let atom = translate_formula(&id, &parse("x = y").unwrap()).unwrap();
    assert!(atom.alpha_eq(&id.eq));

    let f = parse("exists x. x + x = x").unwrap();
    let g = translate_formula(&evens(), &f).unwrap();
    assert!(qe::equivalent(&g, &parse("exists x. x == 0 mod 2 & x + x = x").unwrap()));
    assert!(qe::decide(&g).unwrap());
    // extended symbols are rewritten first
    let odd = parse("exists x. forall y. x = 2*y + 1").unwrap();
    assert_eq!(qe::decide(&translate_formula(&evens(), &odd).unwrap()).unwrap(), qe::decide(&odd).unwrap());
    assert!(matches!(
        translate_formula(&id, &Formula::count("n", "z", parse("z < x").unwrap())),
        Err(InterpError::SignatureMismatch(_))
    ));
}

#[test]
fn identity_translation_preserves_truth() {
    let corpus = [
        "forall x. exists y. x = 2*y | x = 2*y + 1",
        "exists x. forall y. x <= y",
        "forall x. forall y. x + y = y + x",
        "exists x. x + x = x + 1",
        "forall x. exists y. x < y",
        "forall x. forall y. x < y | y < x | x = y",
        "exists x. exists y. x + y = 7 & x == y mod 3",
        "forall x. x == 0 mod 2 | x == 1 mod 2",
    ];
    for src in corpus {
        let f = parse(src).unwrap();
        let g = translate_formula(&Translation::identity(), &f).unwrap();
        assert_eq!(qe::decide(&g).unwrap(), qe::decide(&f).unwrap(), "{src}");
    }
}

#[test]
fn basic_conditions() {
    for t in [Translation::identity(), evens(), multiples_of_3(), shifted(), two_residues(), max_plus()] {
        let r = verify_basics(&t);
        assert!(r.ok(), "{:?}", r.failures());
        for c in &r.checks {
            assert_eq!(qe::decide(&c.sentence).unwrap(), c.verdict);
        }
    }
    let projection = Translation::from_strs(1, "x = x", "x = y", "x = y").unwrap();
    let r = verify_basics(&projection);
    assert!(r.checks.iter().any(|c| c.name == "plus total" && c.verdict));
    let bad_eq = Translation::from_strs(1, "x = x", "x <= y", "x = y + z").unwrap();
    assert!(verify_basics(&bad_eq).failures().contains(&"eq symmetric".to_string()));
}

#[test]
fn normal_forms() {
    let (k, iso) = normalize(&Translation::identity()).unwrap();
    assert_eq!(k.m, 1);
    assert!(qe::equivalent(&iso, &parse("y = z").unwrap()));
    assert!(qe::equivalent(&k.plus, &parse("x = y + z").unwrap()));

    let (k, iso) = normalize(&evens()).unwrap();
    assert!(qe::equivalent(&iso, &parse("y = 2*z").unwrap()));
    assert!(qe::equivalent(&k.plus, &parse("x = y + z").unwrap()));
    assert_eq!(k.dom, Formula::True);
    assert_eq!(k.eq, parse("x = y").unwrap());

    let mod2 = Translation::from_strs(1, "x = x", "x == y mod 2", "x == y + z mod 2").unwrap();
    assert_eq!(normalize(&mod2).unwrap_err(), InterpError::FiniteDomain);

    // two dimensions, one of them degenerate
    let line = Translation::from_strs(2, "x2 = 7", "x1 = y1 & x2 = y2", "x1 = y1 + z1 & x2 = 7").unwrap();
    let (k, iso) = normalize(&line).unwrap();
    assert_eq!(k.m, 1);
    assert!(qe::equivalent(&iso, &parse("y2 = 7 & y1 = z").unwrap()));
}

#[test]
fn certified_self_interpretations() {
    let cases: Vec<(Translation, fn(u64) -> Option<u64>)> = vec![
        (Translation::identity(), |y| Some(y)),
        (evens(), |y| (y % 2 == 0).then_some(y / 2)),
        (multiples_of_3(), |y| (y % 3 == 0).then_some(y / 3)),
        (shifted(), |y| y.checked_sub(5)),
        (two_residues(), |y| (y % 3 <= 1).then_some(2 * (y / 3) + y % 3)),
    ];
    for (t, expected) in cases {
        let cert = certify_self_interpretation_1d(&t).unwrap();
        for c in &cert.checks {
            assert!(c.verdict && qe::decide(&c.sentence).unwrap(), "{}", c.name);
        }
        for y in 0..=100 {
            assert_eq!(iso_value(&cert, y), expected(y), "{} at {y}", render(&t.dom));
        }
    }
    let cert = certify_self_interpretation_1d(&evens()).unwrap();
    assert!(qe::equivalent(&cert.iso, &parse("y = 2*z").unwrap()));
}

#[test]
fn non_models_are_rejected() {
    assert!(matches!(certify_self_interpretation_1d(&max_plus()), Err(InterpError::NotAModel(_))));
    let bad_eq = Translation::from_strs(1, "x = x", "x <= y", "x = y + z").unwrap();
    assert!(matches!(certify_self_interpretation_1d(&bad_eq), Err(InterpError::BasicsFailed(_))));
    let finite = Translation::from_strs(1, "x = x", "x == y mod 2", "x == y + z mod 2").unwrap();
    assert!(matches!(certify_self_interpretation_1d(&finite), Err(InterpError::NotAModel(_))));
}

#[test]
fn translation_json() {
    let v: Value = serde_json::from_str(r#"{"m":1,"dom":"x == 0 mod 2","eq":"x = y","plus":"x = y + z"}"#).unwrap();
    let t = Translation::from_json(&v).unwrap();
    let back = Translation::from_json(&t.to_json()).unwrap();
    assert!(back.dom.alpha_eq(&t.dom) && back.plus.alpha_eq(&t.plus));
    let v: Value = serde_json::from_str(r#"{"m":1,"dom":"w = 0","eq":"x = y","plus":"x = y + z"}"#).unwrap();
    assert!(matches!(Translation::from_json(&v), Err(InterpError::Invalid(_))));
}

#[test]
fn en_examples() {
    assert_eq!(en_h(2, 1, 0), BigUint::from(0u32));
    assert_eq!(en_h(2, 1, 1), BigUint::from(1u32));
    assert_eq!(en_experiment(4, 1, 10).unwrap_err(), InterpError::SquareInput(4));
    assert_eq!(en_experiment(1, 1, 10).unwrap_err(), InterpError::SquareInput(1));
    let r = en_experiment(3, 2, 10_000).unwrap();
    assert!(r.holds(), "{r}");
    assert!(r.to_string().contains("all bounds hold"));
    for s in [2, 3, 5] {
        for i in [1, 2] {
            let r = en_experiment(s, i, 2_000).unwrap();
            assert!(r.holds() && r.min_dev > -2.0 && r.max_dev < (s as f64).sqrt(), "{r}");
        }
    }
}
