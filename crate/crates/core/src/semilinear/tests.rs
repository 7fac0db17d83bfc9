use super::*;
use crate::formula::{evaluate_qf, parse, Assignment};

fn vars(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn pt(xs: &[u64]) -> Vec<BigUint> {
    xs.iter().map(|&x| BigUint::from(x)).collect()
}

fn agrees(src: &str, names: &[&str], box_: u64) -> SemilinearSet {
    let f = parse(src).unwrap();
    let vs = vars(names);
    let s = from_formula(&f, &vs);
    assert!(check_invariants(&s), "{src}: {s:?}");
    let k = vs.len();
    let total = (box_ + 1).pow(k as u32);
    for n in 0..total {
        let mut p = Vec::new();
        let mut a = Assignment::new();
        let mut r = n;
        for v in &vs {
            let x = r % (box_ + 1);
            r /= box_ + 1;
            p.push(BigUint::from(x));
            a.set(v.clone(), x);
        }
        assert_eq!(s.member(&p).unwrap(), evaluate_qf(&f, &a).unwrap(), "{src} at {p:?}: {s:?}");
    }
    s
}

#[test]
fn from_formula_examples() {
    let s = agrees("x == 0 mod 2 & 2 <= x", &["x"], 100);
    assert_eq!(s.pieces, vec![Lattice::from_u64(&[2], &[&[2]])]);
    assert!(from_formula(&Formula::False, &vars(&["x"])).is_empty());
    let all = from_formula(&Formula::True, &vars(&["x", "y"]));
    assert_eq!(all.pieces, vec![Lattice::from_u64(&[0, 0], &[&[1, 0], &[0, 1]])]);
}

#[test]
fn from_formula_mixed_constraints() {
    agrees("x < y", &["x", "y"], 12);
    agrees("2*x + 3*y <= 17 & x == y + 1 mod 3", &["x", "y"], 12);
    agrees("!(x = y) & y <= 5 | x == 1 mod 4", &["x", "y"], 12);
    agrees("3*x = 2*y + 1", &["x", "y"], 15);
    agrees("x + y + z <= 4 | x = 2*z & y < z", &["x", "y", "z"], 6);
    agrees("!(2*x == y mod 5) & 3*y < 2*x + 7", &["x", "y"], 15);
    // implicit equalities and a lattice of lower rank
    agrees("x <= y & y <= x & x == 1 mod 3", &["x", "y"], 20);
    agrees("x + y = 2*z + 1 & z <= x & x == y + 1 mod 4", &["x", "y", "z"], 9);
    agrees("5*x + 3*y <= 7*z + 2 & 2*z <= x + y", &["x", "y", "z"], 9);
}

#[test]
fn member_examples() {
    let evens = SemilinearSet::from_pieces(1, vec![Lattice::from_u64(&[2], &[&[2]])]);
    assert!(evens.member(&pt(&[8])).unwrap());
    assert!(!evens.member(&pt(&[3])).unwrap());
    let diag = SemilinearSet::from_pieces(2, vec![Lattice::from_u64(&[0, 0], &[&[1, 2]])]);
    assert!(diag.member(&pt(&[3, 6])).unwrap());
    assert_eq!(
        diag.member(&pt(&[3])),
        Err(SemilinearError::DimensionMismatch { expected: 2, got: 1 })
    );
}

#[test]
fn to_formula_examples() {
    let x = vars(&["x"]);
    assert_eq!(SemilinearSet::empty(1).to_formula(&x), Formula::False);
    assert_eq!(SemilinearSet::full(1).to_formula(&x), Formula::True);
    let evens = SemilinearSet::from_pieces(1, vec![Lattice::from_u64(&[2], &[&[2]])]);
    assert!(qe::equivalent(&evens.to_formula(&x), &parse("x == 0 mod 2 & 2 <= x").unwrap()));
    let skew = SemilinearSet::from_pieces(2, vec![Lattice::from_u64(&[1, 0], &[&[2, 1], &[1, 3]])]);
    let xy = vars(&["x", "y"]);
    let f = skew.to_formula(&xy);
    for a in 0..20u64 {
        for b in 0..20u64 {
            let asg = Assignment::new().with("x", a).with("y", b);
            assert_eq!(evaluate_qf(&f, &asg).unwrap(), skew.member(&pt(&[a, b])).unwrap());
        }
    }
}

#[test]
fn emptiness_and_finiteness() {
    assert!(SemilinearSet::empty(1).is_empty());
    let five = SemilinearSet::from_pieces(1, vec![Lattice::from_u64(&[5], &[])]);
    assert!(five.is_finite() && !five.is_empty());
    assert!(!SemilinearSet::full(1).is_finite());
}

#[test]
fn enumerate_examples() {
    let evens = SemilinearSet::from_pieces(1, vec![Lattice::from_u64(&[2], &[&[2]])]);
    assert_eq!(evens.enumerate(7), vec![pt(&[2]), pt(&[4]), pt(&[6])]);
    assert_eq!(
        SemilinearSet::full(2).enumerate(1),
        vec![pt(&[0, 0]), pt(&[0, 1]), pt(&[1, 0]), pt(&[1, 1])]
    );
    let diag = SemilinearSet::from_pieces(2, vec![Lattice::from_u64(&[0, 0], &[&[1, 2]])]);
    assert_eq!(diag.enumerate(6), vec![pt(&[0, 0]), pt(&[1, 2]), pt(&[2, 4]), pt(&[3, 6])]);
}

#[test]
fn disjointify_examples() {
    assert!(disjointify(&[]).is_empty());
    let twos = Lattice::from_u64(&[0], &[&[2]]);
    let threes = Lattice::from_u64(&[0], &[&[3]]);
    let out = disjointify(&[twos, threes]);
    let s = SemilinearSet::from_pieces(1, out);
    assert!(check_invariants(&s));
    let expected: Vec<Vec<BigUint>> = (0..=200u64).filter(|n| n % 2 == 0 || n % 3 == 0).map(|n| pt(&[n])).collect();
    assert_eq!(s.enumerate(200), expected);
    let single = Lattice::from_u64(&[1, 2], &[&[1, 1]]);
    assert_eq!(disjointify(std::slice::from_ref(&single)), vec![single]);
}

#[test]
fn disjointify_dependent_generators() {
    // generators (1,1),(2,2),(1,0) are dependent
    let l = Lattice::from_u64(&[0, 1], &[&[1, 1], &[2, 2], &[1, 0]]);
    let out = SemilinearSet::from_pieces(2, disjointify(std::slice::from_ref(&l)));
    assert!(check_invariants(&out));
    let mut brute = BTreeSet::new();
    for a in 0..30u64 {
        for b in 0..15u64 {
            for c in 0..30u64 {
                let p = l.at(&pt(&[a, b, c]));
                if p.iter().all(|x| x <= &BigUint::from(25u32)) {
                    brute.insert(p);
                }
            }
        }
    }
    assert_eq!(out.enumerate(25), brute.into_iter().collect::<Vec<_>>());
}

#[test]
fn json_round_trip() {
    let s = from_formula(&parse("x < y & y == 0 mod 3").unwrap(), &vars(&["x", "y"]));
    let j = s.to_json();
    assert_eq!(j["dim"], 2);
    assert!(j["lattices"][0]["base"][0].is_string());
    assert_eq!(SemilinearSet::from_json(&j).unwrap(), s);
}
