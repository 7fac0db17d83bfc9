use presburger::cli;
use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("presburger").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "{args:?}: {err}");
    serde_json::from_str(&out).unwrap_or_else(|e| panic!("{args:?}: {e}\n{out}"))
}

fn decimal(v: &Value) -> bool {
    v.as_str().is_some_and(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
}

fn assert_lattice(l: &Value, dim: usize) {
    let base = l["base"].as_array().unwrap();
    assert_eq!(base.len(), dim);
    assert!(base.iter().all(decimal));
    for g in l["generators"].as_array().unwrap() {
        let g = g.as_array().unwrap();
        assert_eq!(g.len(), dim);
        assert!(g.iter().all(decimal));
    }
}

fn assert_semilinear(v: &Value) {
    let dim = v["dim"].as_u64().unwrap() as usize;
    for l in v["lattices"].as_array().unwrap() {
        assert_lattice(l, dim);
    }
}

fn assert_pwpoly(v: &Value) {
    let m = v["paramDim"].as_u64().unwrap() as usize;
    for p in v["pieces"].as_array().unwrap() {
        assert_lattice(&p["lattice"], m);
        for mono in p["poly"]["monomials"].as_array().unwrap() {
            let coef = mono["coef"].as_str().unwrap();
            assert!(coef.parse::<num_rational::BigRational>().is_ok(), "{coef}");
            assert_eq!(mono["exps"].as_array().unwrap().len(), m);
        }
    }
    if !v["infinite"].is_null() {
        assert_semilinear(&v["infinite"]);
    }
}

#[test]
fn decide_examples() {
    let (code, out, _) = run(&["decide", "forall x. exists y. x = 2*y | x = 2*y + 1"]);
    assert_eq!((code, out.trim()), (0, "true"));
    let (code, out, _) = run(&["decide", "exists x. x + 1 = 0"]);
    assert_eq!((code, out.trim()), (1, "false"));
    let (code, out, err) = run(&["decide", "exists x. x <"]);
    assert_eq!(code, 2);
    assert!(out.is_empty());
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error:"));
    // free variables are a semantic error, not a verdict
    let (code, _, _) = run(&["decide", "x = 1"]);
    assert_eq!(code, 2);
}

#[test]
fn qe_prints_a_quantifier_free_formula() {
    let (code, out, _) = run(&["qe", "exists y. x = 2*y"]);
    assert_eq!(code, 0);
    let f = presburger::formula::parse(out.trim()).unwrap();
    assert!(f.is_quantifier_free());
    assert!(presburger::qe::equivalent(&f, &presburger::formula::parse("x == 0 mod 2").unwrap()));
}

#[test]
fn semilinear_json() {
    let v = json(&["semilinear", "y = 2*x", "--vars", "x,y"]);
    assert_semilinear(&v);
    assert_eq!(v["dim"], 2);
    let v = json(&["semilinear", "y = 2*x", "--vars", "x,y", "--enumerate", "6"]);
    assert_eq!(v, serde_json::json!([["0", "0"], ["1", "2"], ["2", "4"], ["3", "6"]]));
}

#[test]
fn dim_examples() {
    assert_eq!(json(&["dim", "y = 2*x", "--vars", "x,y"]), serde_json::json!({"dim": 1}));
    assert_eq!(json(&["dim", "x < 7", "--vars", "x"]), serde_json::json!({"dim": 0}));
    let v = json(&["dim", "x <= y", "--vars", "x,y", "--json"]);
    assert_eq!(v["dim"], 2);
    assert_lattice(&v["witness"], 2);
}

#[test]
fn bijection_output() {
    let (code, out, _) = run(&["bijection", "x == 0 mod 2", "--vars", "x"]);
    assert_eq!(code, 0);
    let f = presburger::formula::parse(out.trim()).unwrap();
    assert!(presburger::qe::equivalent(&f, &presburger::formula::parse("x = 2*y1").unwrap()));
    let v = json(&["bijection", "x <= y", "--vars", "x,y", "--json"]);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == true));
    let (code, _, err) = run(&["bijection", "x < 3", "--vars", "x"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn partition_example() {
    let v = json(&["partition", "--matrix", "1 1"]);
    assert_pwpoly(&v);
    let pieces = v["pieces"].as_array().unwrap();
    assert_eq!(pieces.len(), 1);
    assert_eq!(pieces[0]["poly"]["text"], "b1 + 1");
    assert_eq!(pieces[0]["lattice"], serde_json::json!({"base": ["0"], "generators": [["1"]]}));
    let v = json(&["partition", "--matrix", "1 1 0; 0 1 1"]);
    assert_pwpoly(&v);
    assert_eq!(v["paramDim"], 2);
}

#[test]
fn count_example() {
    let v = json(&["count", "z1 + z2 <= a", "--vars", "z1,z2,a", "--split", "2"]);
    assert_pwpoly(&v);
    assert_eq!(v["pieces"][0]["poly"]["text"], "1/2*b1^2 + 3/2*b1 + 1");
    let v = json(&["count", "a <= z", "--vars", "z,a", "--split", "1"]);
    assert_semilinear(&v["infinite"]);
    let (code, _, _) = run(&["count", "z <= a", "--vars", "z,a", "--split", "2"]);
    assert_eq!(code, 2);
}

#[test]
fn rank_and_iso() {
    let v = json(&["rank", "--domain", "x = x", "--order", "x < y", "--vars", "x,y"]);
    assert_eq!(v["rank"], 1);
    assert_eq!(v["classCount"], 1);
    let v = json(&["rank", "--domain", "x < 5", "--order", "x < y", "--vars", "x,y"]);
    assert_eq!(v["rank"], 0);
    let v = json(&[
        "rank",
        "--domain",
        "a1 = a1 & a2 = a2",
        "--order",
        "a1 < b1 | (a1 = b1 & a2 < b2)",
        "--vars",
        "a1,a2,b1,b2",
    ]);
    assert_eq!(v["rank"], 2);
    let v = json(&["iso", "--domain", "x == 0 mod 2", "--order", "x < y", "--vars", "x,y"]);
    assert_pwpoly(&v);
    assert_eq!(v["pieces"][0]["poly"]["text"], "1/2*b1");
    let (code, _, _) = run(&["rank", "--domain", "x = x", "--order", "x <= y", "--vars", "x,y"]);
    assert_eq!(code, 2);
}

#[test]
fn cantor_examples() {
    let (code, out, _) = run(&["cantor", "--i", "1", "--eval", "3,4"]);
    assert_eq!((code, out.trim()), (0, "32"));
    let (_, out, _) = run(&["cantor", "--i", "1", "--eval", "0,1"]);
    assert_eq!(out.trim(), "2");
    let (_, out, _) = run(&["cantor", "--i", "1", "--inverse", "31"]);
    assert_eq!(out.trim(), "4,3");
    let (code, _, _) = run(&["cantor", "--i", "3", "--eval", "0,0"]);
    assert_eq!(code, 2);
}

#[test]
fn cantor_experiment() {
    let (code, out, _) = run(&["cantor-exp", "--s", "2", "--i", "1", "--bound", "10000"]);
    assert_eq!(code, 0);
    assert!(out.contains("all bounds hold"), "{out}");
    let (code, _, err) = run(&["cantor-exp", "--s", "4", "--i", "1", "--bound", "10"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
}

#[test]
fn interp_subcommands() {
    let dir = std::env::temp_dir().join(format!("presburger-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let evens = dir.join("evens.json");
    std::fs::write(&evens, r#"{"m":1,"dom":"x == 0 mod 2","eq":"x = y","plus":"x = y + z"}"#).unwrap();
    let path = evens.to_str().unwrap();

    let v = json(&["interp", "verify", path]);
    assert_eq!(v["ok"], true);
    assert!(v["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == true && c["sentence"].is_string()));

    let v = json(&["interp", "certify", path]);
    let iso = presburger::formula::parse(v["iso"].as_str().unwrap()).unwrap();
    let want = presburger::formula::parse("y = 2*z").unwrap();
    assert!(presburger::qe::equivalent(&iso, &want));

    let v = json(&["interp", "normalize", path]);
    assert_eq!(v["kappa"]["m"], "1");
    assert!(v["kappa"]["plus"].is_string());

    let max = dir.join("max.json");
    std::fs::write(&max, r#"{"m":1,"dom":"x = x","eq":"x = y","plus":"(y <= z & x = z) | (z < y & x = y)"}"#).unwrap();
    let (code, _, err) = run(&["interp", "certify", max.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("not a model"), "{err}");

    let (code, _, _) = run(&["interp", "verify", dir.join("missing.json").to_str().unwrap()]);
    assert_eq!(code, 2);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn input_from_file() {
    let path = std::env::temp_dir().join(format!("presburger-formula-{}.txt", std::process::id()));
    std::fs::write(&path, "forall x. x + 0 = x\n").unwrap();
    let (code, out, _) = run(&["decide", "--file", path.to_str().unwrap()]);
    assert_eq!((code, out.trim()), (0, "true"));
    // a formula and a file at once is ambiguous
    let (code, _, _) = run(&["decide", "x = x", "--file", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    std::fs::remove_file(&path).ok();
}
