//! Graded vector spaces and sparse multilinear operations.
//!
//! Operations take their inputs in written order: the leftmost slot is the
//! last morphism along a path, so `m_2(f, g)` is "f after g".

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{sparse_axpy, Field, Scalar, SparseVec};

/// Grading group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grading {
    Z,
    Z2,
}

impl Grading {
    pub fn reduce(self, d: i64) -> i64 {
        match self {
            Grading::Z => d,
            Grading::Z2 => d.rem_euclid(2),
        }
    }

    pub fn eq(self, a: i64, b: i64) -> bool {
        self.reduce(a) == self.reduce(b)
    }
}

/// A finite graded vector space with a named, ordered basis.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedSpace {
    grading: Grading,
    names: Vec<String>,
    degrees: Vec<i64>,
    index: HashMap<String, usize>,
}

impl GradedSpace {
    pub fn new(grading: Grading, basis: Vec<(String, i64)>) -> Result<GradedSpace> {
        let mut index = HashMap::new();
        let mut names = Vec::new();
        let mut degrees = Vec::new();
        for (i, (n, d)) in basis.into_iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate basis name {n}")));
            }
            names.push(n);
            degrees.push(grading.reduce(d));
        }
        Ok(GradedSpace { grading, names, degrees, index })
    }

    /// Convenience constructor from string slices.
    pub fn from_pairs(grading: Grading, basis: &[(&str, i64)]) -> Result<GradedSpace> {
        GradedSpace::new(grading, basis.iter().map(|(n, d)| (n.to_string(), *d)).collect())
    }

    pub fn zero(grading: Grading) -> GradedSpace {
        GradedSpace::new(grading, Vec::new()).unwrap()
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[i64] {
        &self.degrees
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Indices of basis elements in degree `d`.
    pub fn basis_in_degree(&self, d: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.grading.eq(self.degrees[i], d)).collect()
    }

    /// Distinct degrees occurring, ascending.
    pub fn occupied_degrees(&self) -> Vec<i64> {
        let mut ds = self.degrees.clone();
        ds.sort();
        ds.dedup();
        ds
    }

    /// `V[n]`: same names, every degree lowered by `n`.
    pub fn shift(&self, n: i64) -> GradedSpace {
        let basis = self.names.iter().cloned().zip(self.degrees.iter().map(|d| d - n)).collect();
        GradedSpace::new(self.grading, basis).unwrap()
    }

    /// Degree of a homogeneous sparse vector, or `None` for zero or mixed vectors.
    pub fn vector_degree(&self, v: &SparseVec) -> Option<i64> {
        let mut ds = v.iter().map(|(i, _)| self.degrees[*i]);
        let d = ds.next()?;
        ds.all(|e| e == d).then_some(d)
    }

    /// Same basis and grading, ignoring the name index.
    pub fn same_as(&self, o: &GradedSpace) -> bool {
        self.grading == o.grading && self.names == o.names && self.degrees == o.degrees
    }
}

/// Sparse structure constants: basis-index tuples to target vectors.
pub type Table = BTreeMap<Vec<usize>, SparseVec>;

/// Adds `c * v` into `table[key]`, dropping zero results.
pub fn table_add(table: &mut Table, key: Vec<usize>, c: &Scalar, v: &SparseVec) {
    if c.is_zero() || v.is_empty() {
        return;
    }
    let cur = table.remove(&key).unwrap_or_default();
    let new = sparse_axpy(&cur, c, v);
    if !new.is_empty() {
        table.insert(key, new);
    }
}

/// A multilinear map `sources[0] ⊗ … ⊗ sources[k-1] → target` of fixed degree.
#[derive(Clone, Debug)]
pub struct MultilinearOp {
    field: Field,
    sources: Vec<Arc<GradedSpace>>,
    target: Arc<GradedSpace>,
    degree: i64,
    entries: Table,
}

impl PartialEq for MultilinearOp {
    fn eq(&self, o: &Self) -> bool {
        self.field == o.field
            && self.degree_eq(o.degree)
            && self.sources.len() == o.sources.len()
            && self.sources.iter().zip(&o.sources).all(|(a, b)| a.same_as(b))
            && self.target.same_as(&o.target)
            && self.entries == o.entries
    }
}

impl MultilinearOp {
    /// Validating constructor; zero entries are dropped.
    pub fn new(
        field: Field,
        sources: Vec<Arc<GradedSpace>>,
        target: Arc<GradedSpace>,
        degree: i64,
        entries: Table,
    ) -> Result<MultilinearOp> {
        let g = target.grading();
        for (key, v) in &entries {
            if key.len() != sources.len() || key.iter().zip(&sources).any(|(i, s)| *i >= s.dim()) {
                return Err(Error::Space(format!("entry key {key:?} does not fit the sources")));
            }
            let din: i64 = key.iter().zip(&sources).map(|(i, s)| s.degree(*i)).sum();
            for (o, x) in v {
                if *o >= target.dim() {
                    return Err(Error::Space(format!("output index {o} out of range")));
                }
                if x.field() != field {
                    return Err(Error::Invalid("scalar from a different field".into()));
                }
                if !g.eq(target.degree(*o), din + degree) {
                    let names: Vec<&str> = key.iter().zip(&sources).map(|(i, s)| s.name(*i)).collect();
                    return Err(Error::Degree(format!(
                        "entry {:?} -> {} has degree {} but expected {}",
                        names,
                        target.name(*o),
                        target.degree(*o),
                        g.reduce(din + degree)
                    )));
                }
            }
        }
        let entries = entries.into_iter().filter(|(_, v)| !v.is_empty()).collect();
        Ok(MultilinearOp { field, sources, target, degree: g.reduce(degree), entries })
    }

    pub fn zero(field: Field, sources: Vec<Arc<GradedSpace>>, target: Arc<GradedSpace>, degree: i64) -> Self {
        let g = target.grading();
        MultilinearOp { field, sources, target, degree: g.reduce(degree), entries: Table::new() }
    }

    /// The arity-1 identity on `space`.
    pub fn identity(field: Field, space: Arc<GradedSpace>) -> MultilinearOp {
        let entries = (0..space.dim()).map(|i| (vec![i], vec![(i, field.one())])).collect();
        MultilinearOp { field, sources: vec![space.clone()], target: space, degree: 0, entries }
    }

    /// Arity-1 op from a matrix given as images of basis vectors.
    pub fn linear(
        field: Field,
        source: Arc<GradedSpace>,
        target: Arc<GradedSpace>,
        degree: i64,
        images: Vec<SparseVec>,
    ) -> Result<MultilinearOp> {
        let entries = images.into_iter().enumerate().map(|(i, v)| (vec![i], v)).collect();
        MultilinearOp::new(field, vec![source], target, degree, entries)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn arity(&self) -> usize {
        self.sources.len()
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    fn degree_eq(&self, d: i64) -> bool {
        self.target.grading().eq(self.degree, d)
    }

    pub fn sources(&self) -> &[Arc<GradedSpace>] {
        &self.sources
    }

    pub fn target(&self) -> &Arc<GradedSpace> {
        &self.target
    }

    pub fn entries(&self) -> &Table {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &[usize]) -> Option<&SparseVec> {
        self.entries.get(key)
    }

    /// Replaces the entries, revalidating homogeneity.
    pub fn with_entries(&self, entries: Table) -> Result<MultilinearOp> {
        MultilinearOp::new(self.field, self.sources.clone(), self.target.clone(), self.degree, entries)
    }

    /// Multilinear extension to arbitrary inputs.
    pub fn evaluate(&self, inputs: &[SparseVec]) -> Result<SparseVec> {
        if inputs.len() != self.arity() {
            return Err(Error::Dimension { expected: self.arity(), found: inputs.len() });
        }
        for (v, s) in inputs.iter().zip(&self.sources) {
            if v.iter().any(|(i, _)| *i >= s.dim()) {
                return Err(Error::Space("input vector outside its source".into()));
            }
        }
        Ok(self.evaluate_unchecked(inputs))
    }

    pub(crate) fn evaluate_unchecked(&self, inputs: &[SparseVec]) -> SparseVec {
        let mut out = Vec::new();
        if inputs.iter().any(|v| v.is_empty()) {
            return out;
        }
        let total: usize = inputs.iter().map(|v| v.len()).product();
        if total <= self.entries.len() {
            // Few input combinations: look each one up.
            let mut idx = vec![0usize; inputs.len()];
            let mut key = vec![0usize; inputs.len()];
            loop {
                let mut c = self.field.one();
                for (t, &k) in idx.iter().enumerate() {
                    key[t] = inputs[t][k].0;
                    c = &c * &inputs[t][k].1;
                }
                if let Some(v) = self.entries.get(&key) {
                    out = sparse_axpy(&out, &c, v);
                }
                if !advance(&mut idx, inputs) {
                    break;
                }
            }
        } else {
            let maps: Vec<HashMap<usize, &Scalar>> =
                inputs.iter().map(|v| v.iter().map(|(i, x)| (*i, x)).collect()).collect();
            'e: for (key, v) in &self.entries {
                let mut c = self.field.one();
                for (t, i) in key.iter().enumerate() {
                    match maps[t].get(i) {
                        Some(x) => c = &c * *x,
                        None => continue 'e,
                    }
                }
                out = sparse_axpy(&out, &c, v);
            }
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> MultilinearOp {
        let entries = if c.is_zero() {
            Table::new()
        } else {
            self.entries.iter().map(|(k, v)| (k.clone(), v.iter().map(|(i, x)| (*i, c * x)).collect())).collect()
        };
        MultilinearOp { entries, ..self.clone() }
    }

    pub fn add(&self, o: &MultilinearOp) -> Result<MultilinearOp> {
        self.check_same_shape(o)?;
        let mut entries = self.entries.clone();
        let one = self.field.one();
        for (k, v) in &o.entries {
            table_add(&mut entries, k.clone(), &one, v);
        }
        Ok(MultilinearOp { entries, ..self.clone() })
    }

    pub fn sub(&self, o: &MultilinearOp) -> Result<MultilinearOp> {
        self.add(&o.scale(&self.field.int(-1)))
    }

    fn check_same_shape(&self, o: &MultilinearOp) -> Result<()> {
        let same = self.arity() == o.arity()
            && self.sources.iter().zip(&o.sources).all(|(a, b)| a.same_as(b))
            && self.target.same_as(&o.target)
            && self.degree_eq(o.degree);
        if same {
            Ok(())
        } else {
            Err(Error::Space("operations of different shape".into()))
        }
    }

    /// Total input degree of a basis tuple.
    pub fn input_degree(&self, key: &[usize]) -> i64 {
        key.iter().zip(&self.sources).map(|(i, s)| s.degree(*i)).sum()
    }
}

fn advance(idx: &mut [usize], inputs: &[SparseVec]) -> bool {
    for t in (0..idx.len()).rev() {
        idx[t] += 1;
        if idx[t] < inputs[t].len() {
            return true;
        }
        idx[t] = 0;
    }
    false
}

/// Substitutes `inners[t]` into slot `t` of `outer` for every slot, without signs.
///
/// `None` marks an identity slot. Keys of the result concatenate the inner keys.
pub fn compose_table(outer: &MultilinearOp, inners: &[Option<&MultilinearOp>]) -> Table {
    assert_eq!(outer.arity(), inners.len());
    let field = outer.field();
    // Partial keys after substituting slots >= t, processed right to left.
    let mut partial: HashMap<Vec<usize>, Vec<(Vec<usize>, Scalar)>> = HashMap::new();
    for k in outer.entries().keys() {
        partial.entry(k.clone()).or_default().push((Vec::new(), field.one()));
    }
    for t in (0..inners.len()).rev() {
        let Some(inner) = inners[t] else {
            let mut next: HashMap<Vec<usize>, Vec<(Vec<usize>, Scalar)>> = HashMap::new();
            for (k, list) in partial {
                for (tail, c) in list {
                    let mut nt = Vec::with_capacity(tail.len() + 1);
                    nt.push(k[t]);
                    nt.extend(tail);
                    next.entry(k.clone()).or_default().push((nt, c));
                }
            }
            partial = next;
            continue;
        };
        // Reverse index of inner outputs.
        let mut rev: HashMap<usize, Vec<(&Vec<usize>, &Scalar)>> = HashMap::new();
        for (ik, iv) in inner.entries() {
            for (o, x) in iv {
                rev.entry(*o).or_default().push((ik, x));
            }
        }
        let mut next: HashMap<Vec<usize>, Vec<(Vec<usize>, Scalar)>> = HashMap::new();
        for (k, list) in partial {
            if let Some(srcs) = rev.get(&k[t]) {
                for (tail, c) in &list {
                    for (ik, x) in srcs {
                        let mut nt = Vec::with_capacity(ik.len() + tail.len());
                        nt.extend(ik.iter().copied());
                        nt.extend(tail.iter().copied());
                        next.entry(k.clone()).or_default().push((nt, c * *x));
                    }
                }
            }
        }
        partial = next;
    }
    let mut out = Table::new();
    for (k, list) in partial {
        let v = &outer.entries()[&k];
        for (key, c) in list {
            table_add(&mut out, key, &c, v);
        }
    }
    out
}

/// Applies `(-1)^{sign(key)}` to every entry.
pub fn signed_table(table: Table, sign: impl Fn(&[usize]) -> i64) -> Table {
    table
        .into_iter()
        .map(|(k, v)| {
            if sign(&k).rem_euclid(2) == 1 {
                let v = v.into_iter().map(|(i, x)| (i, -x)).collect();
                (k, v)
            } else {
                (k, v)
            }
        })
        .collect()
}

/// Sum of tables.
pub fn table_sum(field: Field, parts: impl IntoIterator<Item = Table>) -> Table {
    let one = field.one();
    let mut out = Table::new();
    for t in parts {
        for (k, v) in t {
            table_add(&mut out, k, &one, &v);
        }
    }
    out
}

/// Inserts `g` into slot `l` of `f` with sign `(-1)^{deg(g)·Σ_{s<l} deg a_s + constant}`,
/// where `a_s` are the written inputs left of `g`. For `g = m_j` the Koszul
/// factor `deg(g) = 2 - j` has the parity of `j`.
pub fn op_compose_insert(f: &MultilinearOp, g: &MultilinearOp, l: usize, constant: i64) -> Result<MultilinearOp> {
    if l >= f.arity() {
        return Err(Error::Invalid(format!("slot {l} out of range for arity {}", f.arity())));
    }
    if !g.target().same_as(&f.sources()[l]) {
        return Err(Error::Space("inner target differs from the outer slot".into()));
    }
    let mut inners: Vec<Option<&MultilinearOp>> = vec![None; f.arity()];
    inners[l] = Some(g);
    let j = g.degree();
    let table = compose_table(f, &inners);
    let srcs = f.sources().to_vec();
    let table = signed_table(table, |k| {
        let left: i64 = k[..l].iter().zip(&srcs).map(|(i, s)| s.degree(*i)).sum();
        j * left + constant
    });
    let mut sources: Vec<Arc<GradedSpace>> = f.sources()[..l].to_vec();
    sources.extend(g.sources().iter().cloned());
    sources.extend(f.sources()[l + 1..].iter().cloned());
    MultilinearOp::new(f.field(), sources, f.target().clone(), f.degree() + g.degree(), table)
}

/// `Σ_k (m - 1 - k)·deg x_k` over a list of degrees: the suspension sign of a tuple.
pub fn kappa(degrees: &[i64]) -> i64 {
    let m = degrees.len() as i64;
    degrees.iter().enumerate().map(|(k, d)| (m - 1 - k as i64) * d).sum()
}

/// A linear combination of named basis elements, for fixtures and tests.
pub fn vector(space: &GradedSpace, field: Field, terms: &[(i64, &str)]) -> Result<SparseVec> {
    let mut v = Vec::new();
    for (c, n) in terms {
        let i = space.index_of(n).ok_or_else(|| Error::Invalid(format!("unknown basis element {n}")))?;
        v = sparse_axpy(&v, &field.int(*c), &vec![(i, field.one())]);
    }
    Ok(v)
}
