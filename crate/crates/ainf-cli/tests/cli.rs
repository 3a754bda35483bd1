use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use ainf::ainf::Family;
use ainf::fixtures::{
    algebra, collapse_functor, complexes_category, copies, massey_spec, nondecreasing_family, Complex,
};
use ainf::hochschild::hh_dimensions;
use ainf::precat::GradedPreCategory;
use ainf::transfer::{cohomology_category, compute_splitting, transfer_minimal};
use ainf::{Field, Grading};
use ainf_cli::document::{from_instance, Document};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn ainf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ainf")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_doc(dir: &Path, name: &str, d: &Document) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, d.to_json()).unwrap();
    p
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Emitting a loaded document reproduces its bytes.
fn assert_round_trip(p: &Path) {
    let text = std::fs::read_to_string(p).unwrap();
    let doc = Document::parse(&text).unwrap();
    let again = doc.resolve().unwrap().to_document().to_json();
    assert_eq!(text, again, "round trip changed {}", p.display());
}

/// Canonical re-emission of a hand-written fixture.
fn canonical(dir: &Path, p: &Path) -> PathBuf {
    let d = Document::load(p).unwrap().resolve().unwrap().to_document();
    write_doc(dir, p.file_name().unwrap().to_str().unwrap(), &d)
}

fn dg_fixture() -> Document {
    let f = Field::Rational;
    let cx = [
        Complex {
            name: "P".into(),
            basis: vec![("p0".into(), 0), ("p1".into(), 1)],
            d: vec![vec![(1, f.int(2))], vec![]],
        },
        Complex { name: "Q".into(), basis: vec![("q0".into(), 0)], d: vec![vec![]] },
    ];
    from_instance(&complexes_category(f, Grading::Z, 3, &cx).unwrap())
}

fn massey_full(n: usize) -> ainf::AInfInstance {
    let m = algebra(Field::Rational, Grading::Z, n, &massey_spec(true)).unwrap();
    copies(&m, 2, Family::Full).unwrap()
}

/// Minimal Massey model restricted to the non-decreasing family, with the
/// cohomology category as ambient.
fn restricted_massey(n: usize) -> Document {
    let full = massey_full(n);
    let s = compute_splitting(&full).unwrap();
    let t = transfer_minimal(&full, &s).unwrap();
    let fam = nondecreasing_family(2, n + 3);
    let m = t.minimal.restrict(fam).unwrap();
    let mut d = from_instance(&m);
    d.ambient = Some(Box::new(from_instance(&cohomology_category(&full).unwrap())));
    d
}

#[test]
fn minimal_single_object_document_loads_without_warnings() {
    let o = ainf(&["check", fixture("dual_numbers.json").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).is_empty(), "{}", stderr(&o));
    let dir = tempfile::tempdir().unwrap();
    let c = canonical(dir.path(), &fixture("dual_numbers.json"));
    assert_round_trip(&c);
    assert_eq!(code(&ainf(&["check", c.to_str().unwrap()])), 0);
}

#[test]
fn non_closed_family_is_closed_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = ainf(&["check", fixture("not_closed.json").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let e = stderr(&o);
    assert!(e.contains("not closed") && e.contains("[X, Y]") && e.contains("[X, Z]") && e.contains("[Y, Z]"), "{e}");
    let r = read_json(&out);
    assert_eq!(r["warnings"].as_array().unwrap().len(), 1);
}

#[test]
fn inhomogeneous_table_is_an_input_error_naming_the_entry() {
    let o = ainf(&["check", fixture("inhomogeneous.json").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let e = stderr(&o);
    assert!(e.contains("ops[0]") && e.contains("[\"x\", \"x\"]"), "{e}");
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"field\": \"q\",\n  \"grading\": \n}\n").unwrap();
    let o = ainf(&["check", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn dangling_references_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut d = Document::load(&fixture("dual_numbers.json")).unwrap();
    d.ops[0].objects[1] = "B".into();
    d.homs.push(ainf_cli::document::HomDoc { source: "A".into(), target: "C".into(), basis: vec![] });
    let p = write_doc(dir.path(), "d.json", &d);
    let o = ainf(&["check", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("homs[1]"), "{}", stderr(&o));
    let o = ainf(&["hh", "/nonexistent/file.json"]);
    assert_eq!(code(&o), 2);
    let o = ainf(&["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn check_passes_on_dg_fixture_and_fails_after_perturbation() {
    let dir = tempfile::tempdir().unwrap();
    let mut d = dg_fixture();
    let p = write_doc(dir.path(), "dg.json", &d);
    assert_round_trip(&p);
    let out = dir.path().join("r.json");
    let o = ainf(&["check", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = read_json(&out);
    assert_eq!(r["relations"], Value::Array(vec![]));
    assert_eq!(r["passed"], Value::Bool(true));
    // Doubling one composition entry breaks associativity with the identities.
    let op = d.ops.iter_mut().find(|op| op.objects == ["P", "P", "Q"]).unwrap();
    for e in &mut op.entries {
        for t in &mut e.output {
            t.0 = ainf_cli::document::Coef::Int(2);
        }
    }
    let p = write_doc(dir.path(), "bad.json", &d);
    let o = ainf(&["check", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(!read_json(&out)["relations"].as_array().unwrap().is_empty());
}

#[test]
fn hh_of_dual_numbers_matches_the_library() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = ainf(&[
        "hh",
        fixture("dual_numbers.json").to_str().unwrap(),
        "--max-arity",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let table = read_json(&out)["table"].as_array().unwrap().clone();
    let row = table.iter().find(|r| r["i"] == 1 && r["j"] == 0).unwrap();
    assert_eq!(row["hh_dim"], 1);
    let a = algebra(Field::Rational, Grading::Z, 3, &ainf::fixtures::dual_numbers_spec()).unwrap();
    let pc = GradedPreCategory::new(a, Family::Full).unwrap();
    let lib = hh_dimensions(&pc, 3).unwrap();
    assert_eq!(table.len(), lib.len());
    for (r, e) in table.iter().zip(&lib) {
        assert_eq!((r["i"].as_u64().unwrap() as usize, r["j"].as_i64().unwrap()), (e.i, e.j));
        assert_eq!(r["hh_dim"].as_u64().unwrap() as usize, e.hh_dim);
        assert_eq!(r["final"].as_bool().unwrap(), e.is_final);
    }
}

#[test]
fn field_and_grading_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let o = ainf(&[
        "hh",
        fixture("dual_numbers.json").to_str().unwrap(),
        "--field",
        "f5",
        "--grading",
        "z2",
        "--max-arity",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = read_json(&out)["table"].as_array().unwrap().clone();
    assert!(table.iter().any(|r| r["i"] == 1 && r["j"] == 0 && r["hh_dim"] == 1));
    let o = ainf(&["check", fixture("dual_numbers.json").to_str().unwrap(), "--field", "f4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn minimize_emits_a_document_that_checks() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_doc(dir.path(), "massey.json", &from_instance(&massey_full(4)));
    let min = dir.path().join("min.json");
    let o = ainf(&["minimize", p.to_str().unwrap(), "--emit", min.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_round_trip(&min);
    let d = Document::load(&min).unwrap();
    assert_eq!(d.functors.len(), 2);
    assert!(d.ops.iter().any(|op| op.objects.len() == 4), "the Massey model has a nonzero m_3");
    let o = ainf(&["check", min.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn lift_round_trips_on_restricted_massey() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_doc(dir.path(), "pre.json", &restricted_massey(4));
    assert_round_trip(&p);
    let cat = dir.path().join("cat.json");
    let o = ainf(&["lift", p.to_str().unwrap(), "--emit", cat.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    assert_round_trip(&cat);
    let d = Document::load(&cat).unwrap();
    assert_eq!(d.family, ainf_cli::document::FamilyDoc::Full("full".into()));
    assert!(d.witnesses.as_ref().and_then(|w| w.homotopy.as_ref()).is_some());
    let o = ainf(&["check", cat.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn lift_rejects_non_minimal_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut d = dg_fixture();
    d.ambient = Some(Box::new(dg_fixture()));
    let p = write_doc(dir.path(), "dg.json", &d);
    let o = ainf(&["lift", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn pretr_and_mc_on_a_cone() {
    let dir = tempfile::tempdir().unwrap();
    let cone = canonical(dir.path(), &fixture("cone.json"));
    assert_round_trip(&cone);
    let o = ainf(&["mc", cone.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let pt = dir.path().join("pt.json");
    let o = ainf(&["pretr", cone.to_str().unwrap(), "--emit", pt.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_round_trip(&pt);
    let d = Document::load(&pt).unwrap();
    assert_eq!(d.objects, ["C", "X", "Y"]);
    let o = ainf(&["check", pt.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
}

#[test]
fn mc_detects_failures_and_checks_gauges() {
    let dir = tempfile::tempdir().unwrap();
    let mut d = Document::load(&fixture("cone.json")).unwrap().resolve().unwrap().to_document();
    let c = d.twisted[0].clone();
    // X[2] -> X[1] -> Y with both maps nonzero: m_2(f, 1) = f ≠ 0.
    let mut bad = c.clone();
    bad.name = "B".into();
    bad.objects = vec![("X".into(), 2), ("X".into(), 1), ("Y".into(), 0)];
    bad.alpha =
        serde_json::from_str(r#"[{"from":0,"to":1,"terms":[[1,"1X"]]},{"from":1,"to":2,"terms":[[1,"f"]]}]"#).unwrap();
    let mut twice = c.clone();
    twice.name = "C2".into();
    twice.alpha[0].terms[0].0 = ainf_cli::document::Coef::Text("2".into());
    d.twisted = vec![c.clone(), twice.clone()];
    d.witnesses = Some(serde_json::from_str(r#"{"gauge":[{"from":"C","to":"C","h":[]}]}"#).unwrap());
    let p = write_doc(dir.path(), "g.json", &d);
    assert_round_trip(&p);
    assert_eq!(code(&ainf(&["mc", p.to_str().unwrap()])), 0);
    d.witnesses = Some(serde_json::from_str(r#"{"gauge":[{"from":"C","to":"C2","h":[]}]}"#).unwrap());
    let p = write_doc(dir.path(), "g2.json", &d);
    assert_eq!(code(&ainf(&["mc", p.to_str().unwrap()])), 1);
    d.witnesses = None;
    d.twisted = vec![bad];
    let p = write_doc(dir.path(), "b.json", &d);
    let out = dir.path().join("r.json");
    assert_eq!(code(&ainf(&["mc", p.to_str().unwrap(), "--out", out.to_str().unwrap()])), 1);
    assert_eq!(read_json(&out)["complexes"][0]["maurer_cartan"], false);
    assert_eq!(code(&ainf(&["pretr", p.to_str().unwrap()])), 2);
}

/// Two non-decreasing copies of the dual numbers collapsing onto the algebra.
fn collapsed_dual_numbers(n: usize) -> Document {
    let alg = Arc::new(algebra(Field::Rational, Grading::Z, n, &ainf::fixtures::dual_numbers_spec()).unwrap());
    let c = Arc::new(copies(&alg, 2, nondecreasing_family(2, n + 3)).unwrap());
    let f = collapse_functor(c.clone(), alg).unwrap();
    let mut d = from_instance(&c);
    d.functors = vec![ainf_cli::document::functor_doc("collapse", &f, &c)];
    d
}

#[test]
fn resolve_q_is_acyclic_for_the_collapse_functor() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_doc(dir.path(), "c.json", &collapsed_dual_numbers(3));
    assert_round_trip(&p);
    let out = dir.path().join("r.json");
    let o = ainf(&["resolve-q", p.to_str().unwrap(), "--t-len", "3", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}{}", String::from_utf8_lossy(&o.stdout), stderr(&o));
    let r = read_json(&out);
    assert_eq!(r["results"].as_array().unwrap().len(), 3);
}

#[test]
fn resolve_q_reports_homology_when_sequences_are_missing() {
    // The identity of the pre-category cannot realize T = (X2, X1).
    let dir = tempfile::tempdir().unwrap();
    let mut d = collapsed_dual_numbers(3);
    d.functors.clear();
    let p = write_doc(dir.path(), "c.json", &d);
    let out = dir.path().join("r.json");
    let o = ainf(&["resolve-q", p.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let r = read_json(&out);
    let row = r["results"].as_array().unwrap().iter().find(|x| x["t"] == serde_json::json!(["X2", "X1"])).unwrap();
    assert!(row["status"].as_str().unwrap().starts_with("homology"), "{row}");
}
