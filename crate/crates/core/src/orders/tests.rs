use super::*;
use crate::counting::PwValue;
use crate::formula::{evaluate_qf, Assignment};

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn order(domain: &str, rel: &str, xs: &[&str], ys: &[&str]) -> DefinableOrder {
    DefinableOrder::from_formulas(&parse(domain).unwrap(), parse(rel).unwrap(), vars(xs), vars(ys))
}

fn nat() -> DefinableOrder {
    order("x = x", "x < y", &["x"], &["y"])
}

fn lex2() -> DefinableOrder {
    order("a1 = a1 & a2 = a2", "a1 < b1 | (a1 = b1 & a2 < b2)", &["a1", "a2"], &["b1", "b2"])
}

fn n(x: u64) -> BigUint {
    BigUint::from(x)
}

#[test]
fn linear_order_axioms() {
    assert!(check_linear_order(&nat()));
    assert!(!check_linear_order(&order("x = x", "x == 0 mod 2 & y == 1 mod 2", &["x"], &["y"])));
    assert!(!check_linear_order(&order("x = x", "x <= y", &["x"], &["y"])));
    assert!(check_linear_order(&cantor_order(1)));
    assert!(check_linear_order(&cantor_order(2)));
    assert!(check_linear_order(&lex2()));
    // a linear order only on its domain
    assert!(check_linear_order(&order("x == 0 mod 3", "x < y", &["x"], &["y"])));
}

#[test]
fn ranks_of_small_orders() {
    let finite = order("x < 5", "x < y", &["x"], &["y"]);
    let cert = vd_rank(&finite).unwrap();
    assert_eq!((cert.rank, cert.class_count), (0, 5));
    assert!(check_certificate(&finite, &cert));

    let cert = vd_rank(&nat()).unwrap();
    assert_eq!((cert.rank, cert.class_count), (1, 1));
    assert!(check_certificate(&nat(), &cert));

    // ω + ω* : two classes after one condensation
    let two = order("x = x", "(x == 0 mod 2 & y == 0 mod 2 & x < y) | (x == 1 mod 2 & y == 1 mod 2 & y < x) | (x == 0 mod 2 & y == 1 mod 2)", &["x"], &["y"]);
    let cert = vd_rank(&two).unwrap();
    assert_eq!((cert.rank, cert.class_count), (1, 2));
    assert!(check_certificate(&two, &cert));
}

#[test]
fn ranks_in_the_plane() {
    let cert = vd_rank(&lex2()).unwrap();
    assert_eq!(cert.rank, 2);
    assert!(check_certificate(&lex2(), &cert));
    for i in [1, 2] {
        let o = cantor_order(i);
        let cert = vd_rank(&o).unwrap();
        assert_eq!((cert.rank, cert.class_count), (1, 1));
        assert!(check_certificate(&o, &cert));
        assert!(is_scattered(&o));
    }
    assert!(is_scattered(&lex2()));
    assert!(matches!(
        vd_rank(&order("x = x", "x <= y", &["x"], &["y"])),
        Err(OrderError::NotALinearOrder)
    ));
}

#[test]
fn isomorphisms_with_omega() {
    let f = order_type_iso(&nat()).unwrap();
    for x in 0..30 {
        assert_eq!(f.eval(&[n(x)]), PwValue::Finite(n(x)));
    }
    let evens = order("x == 0 mod 2", "x < y", &["x"], &["y"]);
    let f = order_type_iso(&evens).unwrap();
    assert_eq!(f.pieces.len(), 1);
    assert_eq!(f.pieces[0].1.to_string(), "1/2*b1");
    assert_eq!(f.eval(&[n(3)]), PwValue::Undefined);

    let f = order_type_iso(&cantor_order(1)).unwrap();
    assert_eq!(f.pieces.len(), 1);
    // ½(x+y)² + ½(x+3y)
    assert_eq!(f.pieces[0].1.to_string(), "1/2*b1^2 + b1*b2 + 1/2*b2^2 + 1/2*b1 + 3/2*b2");
    for x in 0..=20u64 {
        for y in 0..=20u64 {
            assert_eq!(f.eval(&[n(x), n(y)]), PwValue::Finite(cantor_eval(1, (&n(x), &n(y)))));
        }
    }
    assert!(matches!(order_type_iso(&lex2()), Err(OrderError::NotOmegaType(_))));
    let finite = order("x < 5", "x < y", &["x"], &["y"]);
    assert!(matches!(order_type_iso(&finite), Err(OrderError::NotOmegaType(_))));
}

#[test]
fn successor_enumeration_matches_iso() {
    let o = cantor_order(2);
    let f = order_type_iso(&o).unwrap();
    let seq = enumerate_in_order(&o, 60);
    assert_eq!(seq.len(), 60);
    for (i, p) in seq.iter().enumerate() {
        assert_eq!(f.eval(p), PwValue::Finite(n(i as u64)), "{p:?}");
        assert_eq!(cantor_eval(2, (&p[0], &p[1])), n(i as u64));
    }
}

#[test]
fn cantor_examples() {
    let o = cantor_order(1);
    let holds = |o: &DefinableOrder, a: [u64; 2], b: [u64; 2]| {
        let mut asg = Assignment::new();
        for (v, x) in o.xs.iter().zip(a).chain(o.ys.iter().zip(b)) {
            asg.set(v.clone(), x);
        }
        evaluate_qf(&o.rel, &asg).unwrap()
    };
    assert!(holds(&o, [0, 1], [1, 1]));
    assert!(holds(&o, [1, 0], [0, 1]));
    assert!(holds(&cantor_order(2), [0, 1], [1, 0]));
    assert!(o.less(&[n(1), n(0)], &[n(0), n(1)]));
    assert_eq!(cantor_eval(1, (&n(0), &n(0))), n(0));
    assert_eq!(cantor_eval(1, (&n(1), &n(0))), n(1));
    assert_eq!(cantor_eval(1, (&n(0), &n(1))), n(2));
    assert_eq!(cantor_inverse(1, &n(2)), (n(0), n(1)));
}

#[test]
fn cantor_bijection_on_a_box() {
    for i in [1u8, 2] {
        let mut seen = std::collections::BTreeSet::new();
        for x in 0..=40u64 {
            for y in 0..=40u64 {
                let c = cantor_eval(i, (&n(x), &n(y)));
                assert_eq!(cantor_inverse(i, &c), (n(x), n(y)));
                assert!(seen.insert(c));
            }
        }
        // the triangle x + y <= 40 fills 0..=860 exactly
        let tri: Vec<BigUint> = seen.iter().take(861).cloned().collect();
        assert_eq!(tri, (0..=860u64).map(n).collect::<Vec<_>>());
    }
    // rank in ≺₁ by brute force
    let o = cantor_order(1);
    let pts: Vec<[u64; 2]> = (0..=20).flat_map(|x| (0..=20).map(move |y| [x, y])).collect();
    for p in &pts {
        if p[0] + p[1] > 20 {
            continue;
        }
        let below = pts.iter().filter(|q| o.less(&[n(q[0]), n(q[1])], &[n(p[0]), n(p[1])])).count();
        assert_eq!(n(below as u64), cantor_eval(1, (&n(p[0]), &n(p[1]))), "{p:?}");
    }
}

#[test]
fn rank_bound_in_three_dimensions() {
    let lex3 = order(
        "a1 = a1 & a2 = a2 & a3 = a3",
        "a1 < b1 | (a1 = b1 & a2 < b2) | (a1 = b1 & a2 = b2 & a3 < b3)",
        &["a1", "a2", "a3"],
        &["b1", "b2", "b3"],
    );
    let cert = vd_rank(&lex3).unwrap();
    assert_eq!((cert.rank, cert.class_count), (3, 1));
    assert!(check_certificate(&lex3, &cert));
    // sum first, then lexicographic: ω
    let graded = order(
        "a1 = a1 & a2 = a2 & a3 = a3",
        "a1 + a2 + a3 < b1 + b2 + b3 | (a1 + a2 + a3 = b1 + b2 + b3 & (a1 < b1 | (a1 = b1 & a2 < b2)))",
        &["a1", "a2", "a3"],
        &["b1", "b2", "b3"],
    );
    assert_eq!(vd_rank(&graded).unwrap().rank, 1);
}
