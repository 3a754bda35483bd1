//! JSON instance documents: schema, loading with positioned errors, and
//! canonical emission.
//!
//! Key order in emitted JSON follows the field order of the structs below, and
//! every list is sorted by object index and basis index, so emitting a loaded
//! document twice gives identical bytes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use ainf::ainf::Family;
use ainf::obstruction::GCElement;
use ainf::precat::{ExtensionWitnessTable, Witness};
use ainf::twisted::{PosElement, ShiftedObject, TwistedComplex};
use ainf::{AInfFunctor, AInfInstance, Field, GradedSpace, Grading, SparseVec, Table};
use serde::{Deserialize, Serialize};

/// A coefficient: an integer or a string `n` / `n/d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coef {
    Int(i64),
    Text(String),
}

impl Coef {
    fn text(&self) -> String {
        match self {
            Coef::Int(n) => n.to_string(),
            Coef::Text(s) => s.clone(),
        }
    }
}

/// `[coefficient, basis name]`.
pub type Term = (Coef, String);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilyDoc {
    /// The string `"full"`.
    Full(String),
    /// Transversal sequences of length at least two, by object name.
    Explicit(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomDoc {
    pub source: String,
    pub target: String,
    /// `[name, degree]` pairs.
    pub basis: Vec<(String, i64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryDoc {
    /// Basis names in written order `a_n, …, a_1`.
    pub inputs: Vec<String>,
    pub output: Vec<Term>,
}

/// One operation (or functor component) on an object sequence `X_0 … X_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpDoc {
    pub objects: Vec<String>,
    pub entries: Vec<EntryDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctorDoc {
    pub name: String,
    /// Source instance; this document when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Box<Document>>,
    /// Target instance; this document when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Box<Document>>,
    /// Image of each source object, by target name.
    pub object_map: Vec<String>,
    pub components: Vec<OpDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentDoc {
    /// Positions `i < j` in the object list.
    pub from: usize,
    pub to: usize,
    pub terms: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwistedDoc {
    pub name: String,
    /// `[object, shift]` pairs.
    pub objects: Vec<(String, i64)>,
    pub alpha: Vec<ComponentDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtensionDoc {
    pub collection: Vec<Vec<String>>,
    pub object: String,
    pub minus: String,
    pub plus: String,
    pub f_minus: Vec<Term>,
    pub f_plus: Vec<Term>,
}

/// Gauge witness `h` from complex `from` to complex `to` (same objects).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeDoc {
    pub from: String,
    pub to: String,
    pub h: Vec<ComponentDoc>,
}

/// Components `g_k`, `k ≥ 2`, of a homotopy on the source of `functor`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomotopyDoc {
    pub functor: String,
    pub components: Vec<OpDoc>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessDoc {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extension: Vec<ExtensionDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gauge: Vec<GaugeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homotopy: Option<HomotopyDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    /// `q` or `f<p>`.
    pub field: String,
    /// `z` or `z2`.
    pub grading: String,
    pub max_arity: usize,
    pub objects: Vec<String>,
    pub family: FamilyDoc,
    pub homs: Vec<HomDoc>,
    pub ops: Vec<OpDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ambient: Option<Box<Document>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub functors: Vec<FunctorDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub twisted: Vec<TwistedDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witnesses: Option<WitnessDoc>,
}

/// Input problems, each prefixed by its location.
#[derive(Debug, Clone)]
pub struct InputError(pub Vec<String>);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join("\n"))
    }
}

impl std::error::Error for InputError {}

fn err(path: &str, msg: impl fmt::Display) -> InputError {
    InputError(vec![format!("{path}: {msg}")])
}

pub fn parse_field(s: &str) -> Result<Field, String> {
    match s {
        "q" | "Q" => Ok(Field::Rational),
        _ => {
            let p = s.strip_prefix('f').or_else(|| s.strip_prefix('F')).and_then(|p| p.parse::<u64>().ok());
            match p {
                Some(p) => Field::prime(p).map_err(|e| e.to_string()),
                None => Err(format!("unknown field {s:?}; expected q or f<p>")),
            }
        }
    }
}

pub fn parse_grading(s: &str) -> Result<Grading, String> {
    match s {
        "z" | "Z" => Ok(Grading::Z),
        "z2" | "Z2" => Ok(Grading::Z2),
        _ => Err(format!("unknown grading {s:?}; expected z or z2")),
    }
}

pub fn field_name(f: Field) -> String {
    f.to_string()
}

pub fn grading_name(g: Grading) -> String {
    match g {
        Grading::Z => "z".into(),
        Grading::Z2 => "z2".into(),
    }
}

/// Command-line overrides applied to a document and everything it embeds.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub field: Option<Field>,
    pub grading: Option<Grading>,
    pub max_arity: Option<usize>,
}

impl Document {
    /// Parses JSON text; syntax errors carry line and column.
    pub fn parse(text: &str) -> Result<Document, InputError> {
        serde_json::from_str(text)
            .map_err(|e| InputError(vec![format!("line {}, column {}: {e}", e.line(), e.column())]))
    }

    pub fn load(path: &std::path::Path) -> Result<Document, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| err(&path.display().to_string(), e))?;
        Document::parse(&text)
    }

    /// Canonical pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        if let Some(f) = o.field {
            self.field = field_name(f);
        }
        if let Some(g) = o.grading {
            self.grading = grading_name(g);
        }
        if let Some(n) = o.max_arity {
            self.max_arity = n;
        }
        if let Some(a) = &mut self.ambient {
            a.apply_overrides(o);
        }
        for f in &mut self.functors {
            for d in [&mut f.source, &mut f.target].into_iter().flatten() {
                d.apply_overrides(o);
            }
        }
    }
}

/// A loaded document: the instance plus resolved optional blocks.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub instance: Arc<AInfInstance>,
    pub ambient: Option<Arc<AInfInstance>>,
    pub functors: Vec<(String, AInfFunctor)>,
    pub twisted: Vec<TwistedComplex>,
    pub extension: Option<ExtensionWitnessTable>,
    pub gauges: Vec<(String, String, PosElement)>,
    pub homotopy: Option<(String, GCElement)>,
    pub warnings: Vec<String>,
}

fn object(a: &AInfInstance, name: &str, path: &str) -> Result<usize, InputError> {
    a.object_index(name).ok_or_else(|| err(path, format!("unknown object {name:?}")))
}

fn terms_vector(space: &GradedSpace, field: Field, terms: &[Term], path: &str) -> Result<SparseVec, InputError> {
    let mut parsed = Vec::with_capacity(terms.len());
    for (k, (c, b)) in terms.iter().enumerate() {
        let s = field.parse(&c.text()).map_err(|e| err(&format!("{path}[{k}]"), e))?;
        let i =
            space.index_of(b).ok_or_else(|| err(&format!("{path}[{k}]"), format!("unknown basis element {b:?}")))?;
        parsed.push((i, s));
    }
    let mut v: SparseVec = Vec::new();
    for (i, s) in parsed {
        v = ainf::linalg::sparse_axpy(&v, &s, &vec![(i, field.one())]);
    }
    if space.vector_degree(&v).is_none() && !v.is_empty() {
        return Err(err(path, "terms are not homogeneous"));
    }
    Ok(v)
}

fn vector_terms(space: &GradedSpace, v: &SparseVec) -> Vec<Term> {
    v.iter().map(|(i, s)| (Coef::Text(s.to_text()), space.name(*i).to_string())).collect()
}

/// Builds a table for the sequence `seq` from entry blocks.
fn entries_table(
    entries: &[EntryDoc],
    sources: &[Arc<GradedSpace>],
    target: &GradedSpace,
    field: Field,
    path: &str,
    errors: &mut Vec<String>,
) -> Table {
    let mut table = Table::new();
    for (k, e) in entries.iter().enumerate() {
        let p = format!("{path}.entries[{k}]");
        if e.inputs.len() != sources.len() {
            errors.push(format!("{p}: expected {} inputs, found {}", sources.len(), e.inputs.len()));
            continue;
        }
        let key: Option<Vec<usize>> = e.inputs.iter().zip(sources).map(|(n, s)| s.index_of(n)).collect();
        let Some(key) = key else {
            errors.push(format!("{p}: unknown input basis element in {:?}", e.inputs));
            continue;
        };
        match terms_vector(target, field, &e.output, &format!("{p}.output")) {
            Ok(v) => {
                if table.insert(key, v).is_some() {
                    errors.push(format!("{p}: duplicate entry for inputs {:?}", e.inputs));
                }
            }
            Err(InputError(m)) => errors.extend(m),
        }
    }
    table
}

fn table_entries(table: &Table, sources: &[Arc<GradedSpace>], target: &GradedSpace) -> Vec<EntryDoc> {
    table
        .iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(key, v)| EntryDoc {
            inputs: key.iter().zip(sources).map(|(i, s)| s.name(*i).to_string()).collect(),
            output: vector_terms(target, v),
        })
        .collect()
}

fn seq_of(a: &AInfInstance, names: &[String], path: &str) -> Result<Vec<usize>, InputError> {
    names.iter().map(|n| object(a, n, path)).collect()
}

/// Builds the bare instance of a document, collecting every structural error.
fn build_instance(doc: &Document, warnings: &mut Vec<String>, prefix: &str) -> Result<AInfInstance, InputError> {
    let mut errors = Vec::new();
    let field = parse_field(&doc.field).map_err(|e| err(&format!("{prefix}field"), e))?;
    let grading = parse_grading(&doc.grading).map_err(|e| err(&format!("{prefix}grading"), e))?;
    let names = &doc.objects;
    let index: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    if index.len() != names.len() {
        return Err(err(&format!("{prefix}objects"), "duplicate object names"));
    }
    let family = match &doc.family {
        FamilyDoc::Full(s) if s == "full" => Family::Full,
        FamilyDoc::Full(s) => {
            return Err(err(&format!("{prefix}family"), format!("expected \"full\" or a list, found {s:?}")))
        }
        FamilyDoc::Explicit(seqs) => {
            let mut idx = Vec::new();
            for (k, s) in seqs.iter().enumerate() {
                let r: Option<Vec<usize>> = s.iter().map(|n| index.get(n.as_str()).copied()).collect();
                match r {
                    Some(v) => idx.push(v),
                    None => errors.push(format!("{prefix}family[{k}]: unknown object in {s:?}")),
                }
            }
            let given: BTreeSet<Vec<usize>> = idx.iter().filter(|s| s.len() > 1).cloned().collect();
            let (fam, added) = Family::closure(names.len(), idx);
            let added: Vec<_> = added.into_iter().filter(|s| !given.contains(s)).collect();
            if !added.is_empty() {
                let list: Vec<String> = added
                    .iter()
                    .map(|s| format!("[{}]", s.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join(", ")))
                    .collect();
                warnings.push(format!("{prefix}family: not closed under subsequences; added {}", list.join(" ")));
            }
            fam
        }
    };
    let mut homs = BTreeMap::new();
    for (k, h) in doc.homs.iter().enumerate() {
        let p = format!("{prefix}homs[{k}]");
        let (Some(&x), Some(&y)) = (index.get(h.source.as_str()), index.get(h.target.as_str())) else {
            errors.push(format!("{p}: unknown object in ({}, {})", h.source, h.target));
            continue;
        };
        match GradedSpace::new(grading, h.basis.clone()) {
            Ok(s) => {
                if homs.insert((x, y), s).is_some() {
                    errors.push(format!("{p}: duplicate hom ({}, {})", h.source, h.target));
                }
            }
            Err(e) => errors.push(format!("{p}: {e}")),
        }
    }
    if !errors.is_empty() {
        return Err(InputError(errors));
    }
    let mut a = AInfInstance::new(field, grading, doc.max_arity, names.clone(), family, homs)
        .map_err(|e| err(&format!("{prefix}homs"), e))?;
    for (k, op) in doc.ops.iter().enumerate() {
        let p = format!("{prefix}ops[{k}]");
        let seq = match seq_of(&a, &op.objects, &p) {
            Ok(s) => s,
            Err(InputError(m)) => {
                errors.extend(m);
                continue;
            }
        };
        if seq.len() < 2 || !a.is_transversal(&seq) {
            errors.push(format!("{p}: {:?} is not a transversal sequence of length at least 2", op.objects));
            continue;
        }
        if a.op(&seq).is_some() {
            errors.push(format!("{p}: duplicate operation on {:?}", op.objects));
            continue;
        }
        let srcs = a.written_sources(&seq).expect("transversal");
        let tgt = a.hom(seq[0], *seq.last().unwrap()).expect("transversal").clone();
        let table = entries_table(&op.entries, &srcs, &tgt, field, &p, &mut errors);
        if let Err(e) = a.set_op(&seq, table) {
            errors.push(format!("{p}: {e}"));
        }
    }
    if errors.is_empty() {
        Ok(a)
    } else {
        Err(InputError(errors))
    }
}

fn build_functor(
    f: &FunctorDoc,
    this: &Arc<AInfInstance>,
    warnings: &mut Vec<String>,
    path: &str,
) -> Result<AInfFunctor, InputError> {
    let side =
        |d: &Option<Box<Document>>, tag: &str, warnings: &mut Vec<String>| -> Result<Arc<AInfInstance>, InputError> {
            match d {
                Some(d) => Ok(Arc::new(build_instance(d, warnings, &format!("{path}.{tag}."))?)),
                None => Ok(this.clone()),
            }
        };
    let source = side(&f.source, "source", warnings)?;
    let target = side(&f.target, "target", warnings)?;
    if f.object_map.len() != source.n_objects() {
        return Err(err(&format!("{path}.object_map"), format!("expected {} images", source.n_objects())));
    }
    let map = seq_of(&target, &f.object_map, &format!("{path}.object_map"))?;
    let mut fun = AInfFunctor::new(source.clone(), target.clone(), map).map_err(|e| err(path, e))?;
    let mut errors = Vec::new();
    for (k, c) in f.components.iter().enumerate() {
        let p = format!("{path}.components[{k}]");
        let seq = seq_of(&source, &c.objects, &p)?;
        if seq.len() < 2 || !source.is_transversal(&seq) {
            errors.push(format!("{p}: {:?} is not a transversal sequence of length at least 2", c.objects));
            continue;
        }
        let srcs = source.written_sources(&seq).expect("transversal");
        let img = fun.map_seq(&seq);
        let tgt = target.hom(img[0], *img.last().unwrap()).map_err(|e| err(&p, e))?.clone();
        let table = entries_table(&c.entries, &srcs, &tgt, source.field(), &p, &mut errors);
        if let Err(e) = fun.set_comp(&seq, table) {
            errors.push(format!("{p}: {e}"));
        }
    }
    if errors.is_empty() {
        Ok(fun)
    } else {
        Err(InputError(errors))
    }
}

fn component_element(
    a: &AInfInstance,
    objects: &[ShiftedObject],
    comps: &[ComponentDoc],
    path: &str,
) -> Result<PosElement, InputError> {
    let mut e = PosElement::new();
    for (k, c) in comps.iter().enumerate() {
        let p = format!("{path}[{k}]");
        if c.from >= c.to || c.to >= objects.len() {
            return Err(err(
                &p,
                format!("positions ({}, {}) must satisfy from < to < {}", c.from, c.to, objects.len()),
            ));
        }
        let h = ainf::twisted::shifted_hom(a, objects[c.from], objects[c.to]).map_err(|e| err(&p, e))?;
        let v = terms_vector(&h, a.field(), &c.terms, &format!("{p}.terms"))?;
        if !v.is_empty() && e.insert((c.from, c.to), v).is_some() {
            return Err(err(&p, "duplicate component"));
        }
    }
    Ok(e)
}

fn element_components(a: &AInfInstance, objects: &[ShiftedObject], e: &PosElement) -> Vec<ComponentDoc> {
    e.iter()
        .filter(|(_, v)| !v.is_empty())
        .map(|(&(i, j), v)| {
            let h = ainf::twisted::shifted_hom(a, objects[i], objects[j]).expect("valid positions");
            ComponentDoc { from: i, to: j, terms: vector_terms(&h, v) }
        })
        .collect()
}

impl Document {
    /// Validates the whole document and resolves every block.
    pub fn resolve(&self) -> Result<Loaded, InputError> {
        let mut warnings = Vec::new();
        let instance = Arc::new(build_instance(self, &mut warnings, "")?);
        let ambient = match &self.ambient {
            Some(d) => {
                let amb = build_instance(d, &mut warnings, "ambient.")?;
                if amb.objects() != instance.objects() {
                    return Err(err("ambient.objects", "the ambient must have the same objects in the same order"));
                }
                Some(Arc::new(amb))
            }
            None => None,
        };
        let mut functors = Vec::new();
        let mut names = BTreeSet::new();
        for (k, f) in self.functors.iter().enumerate() {
            let p = format!("functors[{k}]");
            if !names.insert(f.name.clone()) {
                return Err(err(&p, format!("duplicate functor name {:?}", f.name)));
            }
            functors.push((f.name.clone(), build_functor(f, &instance, &mut warnings, &p)?));
        }
        let mut twisted = Vec::new();
        for (k, t) in self.twisted.iter().enumerate() {
            let p = format!("twisted[{k}]");
            let mut objs = Vec::new();
            for (n, s) in &t.objects {
                objs.push(ShiftedObject::new(instance.grading(), object(&instance, n, &format!("{p}.objects"))?, *s));
            }
            let alpha = component_element(&instance, &objs, &t.alpha, &format!("{p}.alpha"))?;
            if twisted.iter().any(|e: &TwistedComplex| e.name == t.name) {
                return Err(err(&p, format!("duplicate twisted complex name {:?}", t.name)));
            }
            twisted.push(TwistedComplex::new(t.name.clone(), objs, alpha));
        }
        let (mut extension, mut gauges, mut homotopy) = (None, Vec::new(), None);
        if let Some(w) = &self.witnesses {
            if !w.extension.is_empty() {
                extension = Some(resolve_extension(&instance, &w.extension)?);
            }
            for (k, g) in w.gauge.iter().enumerate() {
                let p = format!("witnesses.gauge[{k}]");
                let find = |n: &str| twisted.iter().find(|e: &&TwistedComplex| e.name == n);
                let (Some(a), Some(b)) = (find(&g.from), find(&g.to)) else {
                    return Err(err(&p, "gauge refers to an unknown twisted complex"));
                };
                if a.objects != b.objects {
                    return Err(err(&p, "gauge endpoints must have the same objects"));
                }
                let h = component_element(&instance, &a.objects, &g.h, &format!("{p}.h"))?;
                gauges.push((g.from.clone(), g.to.clone(), h));
            }
            if let Some(h) = &w.homotopy {
                let Some((_, f)) = functors.iter().find(|(n, _)| *n == h.functor) else {
                    return Err(err("witnesses.homotopy.functor", format!("unknown functor {:?}", h.functor)));
                };
                let src = f.source().clone();
                let mut errors = Vec::new();
                let mut g = GCElement::identity();
                for (k, c) in h.components.iter().enumerate() {
                    let p = format!("witnesses.homotopy.components[{k}]");
                    let seq = seq_of(&src, &c.objects, &p)?;
                    if seq.len() < 3 || !src.is_transversal(&seq) {
                        return Err(err(&p, "components need a transversal sequence of length at least 3"));
                    }
                    let srcs = src.written_sources(&seq).expect("transversal");
                    let tgt = src.hom(seq[0], *seq.last().unwrap()).expect("transversal").clone();
                    let t = entries_table(&c.entries, &srcs, &tgt, src.field(), &p, &mut errors);
                    if let Err(e) =
                        ainf::MultilinearOp::new(src.field(), srcs, tgt, 1 - (seq.len() as i64 - 1), t.clone())
                    {
                        errors.push(format!("{p}: {e}"));
                    }
                    g.comps.insert(seq, t);
                }
                if !errors.is_empty() {
                    return Err(InputError(errors));
                }
                homotopy = Some((h.functor.clone(), g));
            }
        }
        Ok(Loaded { instance, ambient, functors, twisted, extension, gauges, homotopy, warnings })
    }
}

fn resolve_extension(a: &AInfInstance, ws: &[ExtensionDoc]) -> Result<ExtensionWitnessTable, InputError> {
    let mut t = ExtensionWitnessTable::default();
    for (k, w) in ws.iter().enumerate() {
        let p = format!("witnesses.extension[{k}]");
        let coll: Vec<Vec<usize>> = w.collection.iter().map(|s| seq_of(a, s, &p)).collect::<Result<_, _>>()?;
        let x = object(a, &w.object, &p)?;
        let minus = object(a, &w.minus, &p)?;
        let plus = object(a, &w.plus, &p)?;
        let hm = a.hom(minus, x).map_err(|e| err(&p, e))?;
        let hp = a.hom(x, plus).map_err(|e| err(&p, e))?;
        let f_minus = terms_vector(hm, a.field(), &w.f_minus, &format!("{p}.f_minus"))?;
        let f_plus = terms_vector(hp, a.field(), &w.f_plus, &format!("{p}.f_plus"))?;
        t.entries.insert((coll, x), Witness { minus, plus, f_minus, f_plus });
    }
    Ok(t)
}

/// Canonical document of an instance.
pub fn from_instance(a: &AInfInstance) -> Document {
    let names = a.objects();
    let family = match a.family() {
        Family::Full => FamilyDoc::Full("full".into()),
        Family::Explicit(set) => FamilyDoc::Explicit(
            set.iter().filter(|s| s.len() > 1).map(|s| s.iter().map(|&i| names[i].clone()).collect()).collect(),
        ),
    };
    let homs = a
        .homs()
        .iter()
        .filter(|(_, h)| h.dim() > 0)
        .map(|(&(x, y), h)| HomDoc {
            source: names[x].clone(),
            target: names[y].clone(),
            basis: h.names().iter().cloned().zip(h.degrees().iter().copied()).collect(),
        })
        .collect();
    let ops = a
        .ops()
        .iter()
        .filter(|(_, op)| !op.is_zero())
        .map(|(seq, op)| OpDoc {
            objects: seq.iter().map(|&i| names[i].clone()).collect(),
            entries: table_entries(op.entries(), op.sources(), op.target()),
        })
        .collect();
    Document {
        field: field_name(a.field()),
        grading: grading_name(a.grading()),
        max_arity: a.max_arity(),
        objects: names.to_vec(),
        family,
        homs,
        ops,
        ambient: None,
        functors: Vec::new(),
        twisted: Vec::new(),
        witnesses: None,
    }
}

/// Functor block. `source`/`target` are embedded unless they carry the same
/// data as `this`.
pub fn functor_doc(name: &str, f: &AInfFunctor, this: &AInfInstance) -> FunctorDoc {
    let embed = |a: &Arc<AInfInstance>| (!a.same_data(this)).then(|| Box::new(from_instance(a)));
    let tnames = f.target().objects();
    FunctorDoc {
        name: name.into(),
        source: embed(f.source()),
        target: embed(f.target()),
        object_map: f.object_map().iter().map(|&i| tnames[i].clone()).collect(),
        components: f
            .comps()
            .iter()
            .filter(|(_, op)| !op.is_zero())
            .map(|(seq, op)| OpDoc {
                objects: seq.iter().map(|&i| f.source().name(i).to_string()).collect(),
                entries: table_entries(op.entries(), op.sources(), op.target()),
            })
            .collect(),
    }
}

/// Homotopy witness block for an element of `G_C` on `source`.
pub fn homotopy_doc(functor: &str, g: &GCElement, source: &AInfInstance) -> HomotopyDoc {
    let components = g
        .comps
        .iter()
        .filter(|(_, t)| t.values().any(|v| !v.is_empty()))
        .map(|(seq, t)| {
            let srcs = source.written_sources(seq).expect("transversal");
            let tgt = source.hom(seq[0], *seq.last().unwrap()).expect("transversal");
            OpDoc {
                objects: seq.iter().map(|&i| source.name(i).to_string()).collect(),
                entries: table_entries(t, &srcs, tgt),
            }
        })
        .collect();
    HomotopyDoc { functor: functor.into(), components }
}

/// Twisted complex block.
pub fn twisted_doc(a: &AInfInstance, e: &TwistedComplex) -> TwistedDoc {
    TwistedDoc {
        name: e.name.clone(),
        objects: e.objects.iter().map(|o| (a.name(o.base).to_string(), o.shift)).collect(),
        alpha: element_components(a, &e.objects, &e.alpha),
    }
}

impl Loaded {
    /// Canonical document carrying every resolved block.
    pub fn to_document(&self) -> Document {
        let a = self.instance.as_ref();
        let mut d = from_instance(a);
        d.ambient = self.ambient.as_ref().map(|x| Box::new(from_instance(x)));
        d.functors = self.functors.iter().map(|(n, f)| functor_doc(n, f, a)).collect();
        d.twisted = self.twisted.iter().map(|e| twisted_doc(a, e)).collect();
        let mut w = WitnessDoc::default();
        if let Some(t) = &self.extension {
            let names = |s: &[usize]| s.iter().map(|&i| a.name(i).to_string()).collect::<Vec<_>>();
            w.extension = t
                .entries
                .iter()
                .map(|((coll, x), wt)| ExtensionDoc {
                    collection: coll.iter().map(|s| names(s)).collect(),
                    object: a.name(*x).into(),
                    minus: a.name(wt.minus).into(),
                    plus: a.name(wt.plus).into(),
                    f_minus: vector_terms(a.hom(wt.minus, *x).expect("resolved"), &wt.f_minus),
                    f_plus: vector_terms(a.hom(*x, wt.plus).expect("resolved"), &wt.f_plus),
                })
                .collect();
        }
        for (from, to, h) in &self.gauges {
            let e = self.twisted.iter().find(|e| &e.name == from).expect("resolved");
            w.gauge.push(GaugeDoc { from: from.clone(), to: to.clone(), h: element_components(a, &e.objects, h) });
        }
        if let Some((name, g)) = &self.homotopy {
            let (_, f) = self.functors.iter().find(|(n, _)| n == name).expect("resolved");
            w.homotopy = Some(homotopy_doc(name, g, f.source()));
        }
        if w != WitnessDoc::default() {
            d.witnesses = Some(w);
        }
        d
    }
}
