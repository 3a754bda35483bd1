//! Subcommands. Each returns an [`Outcome`] on success or an [`InputError`]
//! when the document cannot be used for the requested command.

use ainf::ainf::{check_functor, check_relations, check_relations_up_to, Family, Violation};
use ainf::hochschild::{hh_dimensions, verify_q_resolution, QResolutionStatus};
use ainf::obstruction::precat_to_cat;
use ainf::precat::{check_extension_property, check_quasi_equivalence, GradedPreCategory};
use ainf::transfer::{compute_splitting, transfer_minimal};
use ainf::twisted::{build_pretr, end_plus};
use ainf::AInfInstance;
use serde_json::{json, Value};

use crate::document::{from_instance, functor_doc, homotopy_doc, Document, InputError, Loaded, WitnessDoc};

#[derive(Clone, Debug)]
pub struct Options {
    pub seed: u64,
    /// Collection bound for the extension property.
    pub bound: usize,
    /// Longest target sequence examined by `resolve-q`.
    pub t_len: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 1, bound: 2, t_len: 2 }
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub passed: bool,
    pub report: Value,
    pub lines: Vec<String>,
    pub document: Option<Document>,
}

const SHOWN: usize = 20;

fn input(path: &str) -> impl Fn(ainf::Error) -> InputError + '_ {
    move |e| InputError(vec![format!("{path}: {e}")])
}

fn violations_json(vs: &[Violation]) -> Value {
    Value::Array(vs.iter().map(|v| Value::String(v.to_string())).collect())
}

fn push_violations(lines: &mut Vec<String>, label: &str, vs: &[Violation]) {
    if vs.is_empty() {
        lines.push(format!("{label}: ok"));
    } else {
        lines.push(format!("{label}: {} violation(s)", vs.len()));
        lines.extend(vs.iter().take(SHOWN).map(|v| format!("  {v}")));
    }
}

fn failed(command: &str, msg: String, warnings: &[String]) -> Outcome {
    Outcome {
        passed: false,
        report: json!({ "command": command, "passed": false, "warnings": warnings, "error": msg }),
        lines: vec![format!("{command}: failed: {msg}")],
        document: None,
    }
}

/// The graded pre-category of a document: its family inside the ambient
/// block, or the document itself when it is a full graded category.
fn precategory(l: &Loaded) -> Result<GradedPreCategory, InputError> {
    match &l.ambient {
        Some(amb) => {
            GradedPreCategory::new(amb.as_ref().clone(), l.instance.family().clone()).map_err(input("ambient"))
        }
        None if l.instance.is_full() => {
            GradedPreCategory::new(l.instance.as_ref().clone(), Family::Full).map_err(input("ops"))
        }
        None => Err(InputError(vec!["ambient: an explicit family needs an ambient block".into()])),
    }
}

pub fn check(doc: &Document) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    let mut lines = Vec::new();
    let rel = check_relations(&l.instance);
    push_violations(&mut lines, "relations", &rel);
    let mut passed = rel.is_empty();
    let mut report = json!({ "command": "check", "warnings": l.warnings, "relations": violations_json(&rel) });
    if let Some(a) = &l.ambient {
        let v = check_relations(a);
        push_violations(&mut lines, "ambient relations", &v);
        passed &= v.is_empty();
        report["ambient_relations"] = violations_json(&v);
    }
    let mut fs = serde_json::Map::new();
    for (name, f) in &l.functors {
        let v = check_functor(f);
        push_violations(&mut lines, &format!("functor {name}"), &v);
        passed &= v.is_empty();
        fs.insert(name.clone(), violations_json(&v));
    }
    report["functors"] = Value::Object(fs);
    report["passed"] = json!(passed);
    Ok(Outcome { passed, report, lines, document: None })
}

pub fn hh(doc: &Document) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    let pc = precategory(&l)?;
    let table = hh_dimensions(&pc, l.instance.max_arity()).map_err(input("hh"))?;
    let mut lines = vec![format!("{:>3} {:>4} {:>6} {:>6} final", "i", "j", "CC", "HH")];
    let mut rows = Vec::new();
    for e in &table {
        lines.push(format!("{:>3} {:>4} {:>6} {:>6} {}", e.i, e.j, e.cc_dim, e.hh_dim, e.is_final));
        rows.push(json!({ "i": e.i, "j": e.j, "cc_dim": e.cc_dim, "hh_dim": e.hh_dim, "final": e.is_final }));
    }
    let report = json!({ "command": "hh", "passed": true, "warnings": l.warnings, "table": rows });
    Ok(Outcome { passed: true, report, lines, document: None })
}

pub fn minimize(doc: &Document) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    let a = l.instance.as_ref();
    let rel = check_relations(a);
    if !rel.is_empty() {
        return Ok(failed("minimize", format!("the input fails the relations: {}", rel[0]), &l.warnings));
    }
    let s = compute_splitting(a).map_err(input("homs"))?;
    let t = match transfer_minimal(a, &s) {
        Ok(t) => t,
        Err(e) => return Ok(failed("minimize", e.to_string(), &l.warnings)),
    };
    let min = t.minimal.as_ref();
    let rel = check_relations(min);
    let vf = check_functor(&t.f);
    let vg = check_functor(&t.g);
    let mut lines = Vec::new();
    push_violations(&mut lines, "minimal relations", &rel);
    push_violations(&mut lines, "functor f", &vf);
    push_violations(&mut lines, "functor g", &vg);
    let passed = rel.is_empty() && vf.is_empty() && vg.is_empty();
    let mut out = from_instance(min);
    out.functors = vec![functor_doc("f", &t.f, min), functor_doc("g", &t.g, min)];
    let dims: Vec<Value> = min
        .homs()
        .iter()
        .map(|(&(x, y), h)| json!({ "source": min.name(x), "target": min.name(y), "dim": h.dim() }))
        .collect();
    let report = json!({
        "command": "minimize",
        "passed": passed,
        "warnings": l.warnings,
        "cohomology_dims": dims,
        "relations": violations_json(&rel),
        "functor_f": violations_json(&vf),
        "functor_g": violations_json(&vg),
    });
    Ok(Outcome { passed, report, lines, document: Some(out) })
}

pub fn lift(doc: &Document, opts: &Options) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    if l.ambient.is_none() {
        return Err(InputError(vec!["ambient: lift needs an ambient graded category".into()]));
    }
    let pc = precategory(&l)?;
    let m = l.instance.as_ref();
    if !m.is_minimal() {
        return Err(InputError(vec!["ops: lift needs a minimal pre-category (no m_1)".into()]));
    }
    let under = pc.instance();
    if m.homs().len() != under.homs().len()
        || m.homs().iter().zip(under.homs()).any(|((k, a), (j, b))| k != j || !a.same_as(b))
    {
        return Err(InputError(vec!["homs: the pre-category homs must match the ambient ones".into()]));
    }
    let p = match precat_to_cat(&pc, m) {
        Ok(p) => p,
        Err(e) => return Ok(failed("lift", e.to_string(), &l.warnings)),
    };
    let cat = p.category.as_ref();
    let rel = check_relations(cat);
    let vf = check_functor(&p.functor);
    let qe = check_quasi_equivalence(&p.functor, opts.seed).map_err(input("lift"))?;
    let mut lines = Vec::new();
    push_violations(&mut lines, "category relations", &rel);
    push_violations(&mut lines, "extension functor", &vf);
    lines.push(format!("quasi-equivalence: {}", if qe.holds() { "ok" } else { "fails" }));
    let passed = rel.is_empty() && vf.is_empty() && qe.holds();
    let mut out = from_instance(cat);
    out.functors = vec![functor_doc("extension", &p.functor, cat)];
    out.witnesses = Some(WitnessDoc {
        homotopy: Some(homotopy_doc("extension", &p.homotopy, p.functor.source())),
        ..Default::default()
    });
    let report = json!({
        "command": "lift",
        "passed": passed,
        "warnings": l.warnings,
        "relations": violations_json(&rel),
        "functor": violations_json(&vf),
        "quasi_equivalence": qe.holds(),
    });
    Ok(Outcome { passed, report, lines, document: Some(out) })
}

/// Largest input count whose pre-tr relation only uses base relations that
/// hold in the truncated base.
fn safe_inputs(base: &AInfInstance, longest: usize) -> usize {
    let n = base.max_arity();
    if base.ops().keys().all(|s| s.len() <= 3) {
        return n;
    }
    (1..=n).rev().find(|&k| k + (k + 1) * longest.saturating_sub(1) <= n).unwrap_or(1)
}

pub fn pretr(doc: &Document) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    if l.twisted.is_empty() {
        return Err(InputError(vec!["twisted: pretr needs at least one twisted complex".into()]));
    }
    let longest = l.twisted.iter().map(|e| e.objects.len()).max().unwrap_or(1);
    let p = build_pretr(l.instance.clone(), l.twisted.clone()).map_err(input("twisted"))?;
    let k = safe_inputs(&l.instance, longest);
    let rel = check_relations_up_to(p.instance(), k);
    let mut lines = Vec::new();
    push_violations(&mut lines, &format!("pre-tr relations (up to {k} inputs)"), &rel);
    let passed = rel.is_empty();
    let report = json!({
        "command": "pretr",
        "passed": passed,
        "warnings": l.warnings,
        "checked_inputs": k,
        "relations": violations_json(&rel),
    });
    Ok(Outcome { passed, report, lines, document: Some(from_instance(p.instance())) })
}

pub fn mc(doc: &Document) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    let a = l.instance.as_ref();
    let mut lines = Vec::new();
    let mut passed = true;
    let mut complexes = Vec::new();
    for e in &l.twisted {
        let r = e.mc_residual(a).map_err(input("twisted"))?;
        let ok = r.is_empty();
        passed &= ok;
        lines.push(format!("{}: {}", e.name, if ok { "Maurer-Cartan" } else { "not Maurer-Cartan" }));
        complexes.push(json!({ "name": e.name, "maurer_cartan": ok, "residual_terms": r.len() }));
    }
    let mut gauges = Vec::new();
    for (from, to, h) in &l.gauges {
        let find = |n: &str| l.twisted.iter().find(|e| e.name == n).expect("resolved");
        let (ea, eb) = (find(from), find(to));
        let ep = end_plus(a, &ea.objects).map_err(input("witnesses.gauge"))?;
        let na = &ep.nilpotent;
        let av = ep.basis.to_vec(&ea.alpha).map_err(input("twisted"))?;
        let bv = ep.basis.to_vec(&eb.alpha).map_err(input("twisted"))?;
        let hv = ep.basis.to_vec(h).map_err(input("witnesses.gauge"))?;
        if hv.iter().any(|(i, _)| !a.grading().eq(na.degree(*i), 0)) {
            return Err(InputError(vec![format!("witnesses.gauge: h from {from} to {to} must have degree 0")]));
        }
        let ok = na.check_gauge(&av, &bv, &hv).map_err(input("witnesses.gauge"))?;
        passed &= ok;
        lines.push(format!("gauge {from} -> {to}: {}", if ok { "ok" } else { "fails" }));
        gauges.push(json!({ "from": from, "to": to, "holds": ok }));
    }
    if complexes.is_empty() && gauges.is_empty() {
        lines.push("no twisted complexes".into());
    }
    let report =
        json!({ "command": "mc", "passed": passed, "warnings": l.warnings, "complexes": complexes, "gauges": gauges });
    Ok(Outcome { passed, report, lines, document: None })
}

fn sequences(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|s| (0..n).map(move |x| [s.clone(), vec![x]].concat())).collect();
    }
    out
}

/// Uses the first functor block whose source is the document itself as
/// `F: C → D` and examines every sequence `T` of `D`-objects up to
/// `opts.t_len`; without such a block `F` is the identity of `C`.
pub fn resolve_q(doc: &Document, opts: &Options) -> Result<Outcome, InputError> {
    let l = doc.resolve()?;
    let c = l.instance.as_ref();
    let witnesses = match &l.extension {
        Some(w) => w.clone(),
        None => check_extension_property(c, opts.bound, opts.seed).map_err(input("resolve-q"))?.witnesses,
    };
    let functor = l.functors.iter().find(|(_, f)| f.source().same_data(c));
    let (object_map, d) = match functor {
        Some((_, f)) => (f.object_map().to_vec(), f.target().clone()),
        None => ((0..c.n_objects()).collect(), l.instance.clone()),
    };
    let mut lines = Vec::new();
    if let Some((name, _)) = functor {
        lines.push(format!("F = functor {name}"));
    }
    let mut rows = Vec::new();
    let mut passed = true;
    for len in 1..=opts.t_len {
        for t in sequences(d.n_objects(), len) {
            let r = verify_q_resolution(c, &object_map, &t, &witnesses).map_err(input("resolve-q"))?;
            let names = d.seq_names(&t);
            let status = match &r.status {
                QResolutionStatus::Acyclic => "acyclic".to_string(),
                QResolutionStatus::NotAcyclic { degree, dim } => {
                    format!("homology of dimension {dim} in degree {degree}")
                }
                QResolutionStatus::Inconclusive(m) => format!("inconclusive: {m}"),
            };
            passed &= r.status == QResolutionStatus::Acyclic;
            lines.push(format!("T = {names:?}: {status}"));
            let homology: Vec<Value> = r.homology.iter().map(|(m, d)| json!([m, d])).collect();
            rows.push(json!({ "t": names, "status": status, "homology": homology }));
        }
    }
    let report = json!({ "command": "resolve-q", "passed": passed, "warnings": l.warnings, "results": rows });
    Ok(Outcome { passed, report, lines, document: None })
}
