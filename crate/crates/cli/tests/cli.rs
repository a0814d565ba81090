use std::io::Write;
use std::process::Command;

use tempfile::NamedTempFile;

const RELATIONS: &str = "\
rel U(x, y, z) := (x = y & y < z) | (x = z & z < y) | (x = y & y = z)
rel X(x, y, z) := (x = y & y < z) | (x = z & z < y) | (y = z & y < x)
rel LE(x, y) := x <= y
rel NE(x, y) := x != y
";

fn file(text: &str) -> NamedTempFile {
    let mut f = NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tqcsp"))
        .args(args)
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
    )
}

fn path(f: &NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

#[test]
fn check_poly_verdicts() {
    let f = file(RELATIONS);
    assert_eq!(
        run(&["check-poly", path(&f), "U", "min"]),
        (0, "CLOSED\n".into())
    );
    let (code, out) = run(&["check-poly", path(&f), "U", "mx"]);
    assert_eq!(code, 1);
    assert!(out.starts_with("NOT CLOSED: mx(("), "{out}");
    let (code, out) = run(&["check-poly", path(&f), "LE", "mx"]);
    assert_eq!(code, 1);
    assert!(out.contains("outside the relation"), "{out}");
    let (code, out) = run(&["check-poly", path(&f), "NE", "min"]);
    assert_eq!(code, 1);
    assert!(out.contains("has orbit (0,0)"), "{out}");
}

#[test]
fn normalize_forms() {
    let f = file(RELATIONS);
    assert_eq!(
        run(&["normalize", path(&f), "U", "min"]),
        (0, "(x >= y | x >= z) & (y >= x) & (z >= x)\n".into())
    );
    let (code, out) = run(&["normalize", path(&f), "X", "mxaffine"]);
    assert_eq!(code, 0);
    assert!(out.contains("# scope (x,y,z), T = {001,010,100}"), "{out}");
    assert_eq!(
        run(&["normalize", path(&f), "NE", "min"]),
        (1, "NOT CLOSED\n".into())
    );
    assert_eq!(
        run(&["normalize", path(&f), "LE", "pp"]),
        (0, "(y >= x)\n".into())
    );
}

#[test]
fn normalized_output_reparses_to_the_same_relation() {
    let f = file(RELATIONS);
    let (_, form) = run(&["normalize", path(&f), "U", "min"]);
    let g = file(&format!("{RELATIONS}rel V(x, y, z) := {}", form.trim()));
    for form in ["min", "pp", "mxaffine"] {
        assert_eq!(
            run(&["normalize", path(&g), "V", form]),
            run(&["normalize", path(&g), "U", form])
        );
    }
}

#[test]
fn solve_csp_and_qcsp() {
    let x = file("rel X(x, y, z) := (x = y & y < z) | (x = z & z < y) | (y = z & y < x)\ncsp X(a, b, c) & a < c & b < c\n");
    let sat = (0, "SAT\na = 0\nb = 0\nc = 1\n".to_string());
    assert_eq!(run(&["solve", path(&x)]), sat);
    assert_eq!(run(&["--engine", "brute", "solve", path(&x)]), sat);
    assert_eq!(
        run(&["solve", path(&file("csp x > y & y > x"))]),
        (1, "UNSAT\n".into())
    );
    let q = file("qcsp forall y exists x : x > y");
    assert_eq!(run(&["solve", path(&q)]), (0, "TRUE\n".into()));
    assert_eq!(
        run(&["--engine", "brute", "solve", path(&q)]),
        (0, "TRUE\n".into())
    );
    let q = file("qcsp exists x forall y : x >= y");
    assert_eq!(
        run(&["--trace", "solve", path(&q)]),
        (1, "level 2: sat=NO, |w|=-, forall=-\nFALSE\n".into())
    );
    let (code, out) = run(&["--format", "structured", "solve", path(&q)]);
    assert_eq!((code, out.as_str()), (1, "verdict=FALSE\n"));
}

#[test]
fn fuzz_reports() {
    assert_eq!(run(&["fuzz", "--trials", "0"]), (0, "0/0 agree\n".into()));
    assert_eq!(
        run(&["--engine", "min", "fuzz", "--mode", "csp", "--trials", "300"]),
        (0, "300/300 agree\n".into())
    );
    let a = run(&[
        "--seed",
        "9",
        "--format",
        "structured",
        "fuzz",
        "--mode",
        "qcsp",
        "--trials",
        "100",
    ]);
    assert_eq!(
        a,
        run(&[
            "--seed",
            "9",
            "--format",
            "structured",
            "fuzz",
            "--mode",
            "qcsp",
            "--trials",
            "100"
        ])
    );
    assert_eq!(
        a,
        (0, "mode=qcsp trials=100 agree=100 mismatches=0\n".into())
    );
}

#[test]
fn fact_suite_all_pass() {
    let (code, out) = run(&["paper-facts"]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 13);
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{out}");
}

#[test]
fn usage_errors_exit_two() {
    let f = file(RELATIONS);
    assert_eq!(run(&["check-poly", path(&f), "Missing", "min"]).0, 2);
    assert_eq!(run(&["check-poly", path(&f), "U", "median"]).0, 2);
    assert_eq!(run(&["solve", path(&file("csp x <"))]).0, 2);
    assert_eq!(run(&["solve", path(&file(RELATIONS))]).0, 2);
    assert_eq!(run(&["solve", "/nonexistent/file"]).0, 2);
    assert_eq!(run(&["--engine", "brute", "fuzz"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    let b = file("rel B(x, y, z) := (x < y & y < z) | (z < y & y < x)\ncsp B(a, b, c)");
    assert_eq!(run(&["solve", path(&b)]).0, 2);
}
