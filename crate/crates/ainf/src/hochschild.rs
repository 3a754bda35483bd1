//! Hochschild cochains of graded pre-categories.
//!
//! An arity-`i` cochain has one component per transversal sequence
//! `(X_0, …, X_i)`, valued in the ambient hom `Hom(X_0, X_i)`. Components are
//! tables keyed by written-order input indices; arity-zero components use the
//! empty key. The differential of a degree-`p` cochain is
//!
//! ```text
//! ∂φ(a_{n+1},…,a_1) = Σ_i (-1)^{n-i} φ(…, a_{i+1}a_i, …)
//!                   + (-1)^n φ(a_{n+1},…,a_2) a_1
//!                   + (-1)^{p·|a_{n+1}|+1} a_{n+1} φ(a_n,…,a_1)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ainf::{for_each_tuple, AInfFunctor, AInfInstance};
use crate::error::{Error, Result};
use crate::graded::{table_add, Table};
use crate::linalg::{sparse_axpy, Field, Matrix, RowBasis, Scalar, SparseVec};
use crate::precat::{ExtensionWitnessTable, GradedPreCategory};

/// A homogeneous cochain of arity `arity` and internal degree `degree`.
#[derive(Clone, Debug, PartialEq)]
pub struct HochschildCochain {
    pub arity: usize,
    pub degree: i64,
    pub comps: BTreeMap<Vec<usize>, Table>,
}

impl HochschildCochain {
    pub fn zero(arity: usize, degree: i64) -> HochschildCochain {
        HochschildCochain { arity, degree, comps: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.values().all(|t| t.is_empty())
    }

    /// Value of the component on `seq` at a basis tuple.
    pub fn get(&self, seq: &[usize], key: &[usize]) -> SparseVec {
        self.comps.get(seq).and_then(|t| t.get(key)).cloned().unwrap_or_default()
    }
}

/// Multilinear evaluation of a component table on written-order vectors.
pub fn eval_table(table: &Table, inputs: &[SparseVec]) -> SparseVec {
    let mut out: SparseVec = Vec::new();
    'entries: for (key, v) in table {
        let mut c: Option<Scalar> = None;
        for (w, &k) in key.iter().enumerate() {
            match inputs[w].binary_search_by_key(&k, |e| e.0) {
                Ok(pos) => {
                    let x = &inputs[w][pos].1;
                    c = Some(match c {
                        None => x.clone(),
                        Some(y) => &y * x,
                    });
                }
                Err(_) => continue 'entries,
            }
        }
        match c {
            Some(c) => out = sparse_axpy(&out, &c, v),
            None => out = sparse_axpy(&out, &v_one(v), v),
        }
    }
    out
}

fn v_one(v: &SparseVec) -> Scalar {
    v[0].1.field().one()
}

/// How a term of the differential post-processes a value of `φ`.
#[derive(Clone, Debug)]
enum Post {
    Scale(Scalar),
    /// `sign · m_2(v, a)` on the ambient sequence.
    Right(Vec<usize>, SparseVec, Scalar),
    /// `sign · m_2(a, v)` on the ambient sequence.
    Left(Vec<usize>, SparseVec, Scalar),
}

#[derive(Clone, Debug)]
struct Term {
    seq: Vec<usize>,
    key: Vec<usize>,
    post: Post,
}

/// The Hochschild complex of a graded pre-category up to a maximal arity.
#[derive(Clone, Debug)]
pub struct HochschildComplex {
    pc: GradedPreCategory,
    max_arity: usize,
    /// `levels[i][j]`: coordinates `(seq, key, out)` of `CC^{i,j}`.
    levels: Vec<BTreeMap<i64, Vec<(Vec<usize>, Vec<usize>, usize)>>>,
    index: Vec<HashMap<(Vec<usize>, Vec<usize>, usize), usize>>,
}

/// One entry of an HH dimension table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HHEntry {
    pub i: usize,
    pub j: i64,
    pub cc_dim: usize,
    pub hh_dim: usize,
    /// False when `CC^{i+1}` was not built; `hh_dim` is then only an upper bound.
    pub is_final: bool,
}

impl HochschildComplex {
    /// Enumerates coordinates of `CC^{i,·}` for `i ≤ max_arity`.
    pub fn new(pc: &GradedPreCategory, max_arity: usize) -> Result<HochschildComplex> {
        let inst = pc.instance().clone();
        let amb = pc.ambient().clone();
        let g = inst.grading();
        let mut levels = Vec::new();
        let mut index = Vec::new();
        for i in 0..=max_arity {
            let mut lv: BTreeMap<i64, Vec<(Vec<usize>, Vec<usize>, usize)>> = BTreeMap::new();
            let mut idx = HashMap::new();
            for seq in inst.sequences(i + 1) {
                let srcs = inst.written_sources(&seq)?;
                let target = amb.hom(seq[0], seq[i])?.clone();
                let dims: Vec<usize> = srcs.iter().map(|s| s.dim()).collect();
                let mut keys = Vec::new();
                if i == 0 {
                    keys.push(Vec::new());
                } else {
                    for_each_tuple(&dims, |k| keys.push(k.to_vec()));
                }
                for key in keys {
                    let din: i64 = key.iter().zip(&srcs).map(|(k, s)| s.degree(*k)).sum();
                    for o in 0..target.dim() {
                        let j = g.reduce(target.degree(o) - din);
                        lv.entry(j).or_default().push((seq.clone(), key.clone(), o));
                    }
                }
            }
            for coords in lv.values() {
                for (n, c) in coords.iter().enumerate() {
                    idx.insert(c.clone(), n);
                }
            }
            levels.push(lv);
            index.push(idx);
        }
        Ok(HochschildComplex { pc: pc.clone(), max_arity, levels, index })
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub fn precategory(&self) -> &GradedPreCategory {
        &self.pc
    }

    pub fn field(&self) -> Field {
        self.pc.instance().field()
    }

    /// Internal degrees `j` with `CC^{i,j} ≠ 0`.
    pub fn occupied(&self, i: usize) -> Vec<i64> {
        self.levels[i].keys().copied().collect()
    }

    pub fn dim(&self, i: usize, j: i64) -> usize {
        self.levels.get(i).and_then(|l| l.get(&j)).map_or(0, |v| v.len())
    }

    /// Coordinates of `CC^{i,j}` in matrix order.
    pub fn coords(&self, i: usize, j: i64) -> &[(Vec<usize>, Vec<usize>, usize)] {
        self.levels.get(i).and_then(|l| l.get(&j)).map_or(&[], |v| v.as_slice())
    }

    fn coord(&self, i: usize, j: i64, c: &(Vec<usize>, Vec<usize>, usize)) -> Option<usize> {
        let idx = self.index.get(i)?.get(c)?;
        let coords = self.coords(i, j);
        (coords.get(*idx) == Some(c)).then_some(*idx)
    }

    fn terms(&self, seq: &[usize], key: &[usize], p: i64) -> Vec<Term> {
        let inst = self.pc.instance();
        let f = inst.field();
        let one = f.one();
        let n = seq.len() - 2;
        let mut out = Vec::new();
        for i in 1..=n {
            // a_{i+1} sits in written slot n-i, a_i in slot n+1-i.
            let prod = inst.apply(
                &[seq[i - 1], seq[i], seq[i + 1]],
                &[vec![(key[n - i], one.clone())], vec![(key[n + 1 - i], one.clone())]],
            );
            let mut cseq = seq.to_vec();
            cseq.remove(i);
            for (c, x) in prod {
                let mut k = key[..n - i].to_vec();
                k.push(c);
                k.extend_from_slice(&key[n + 2 - i..]);
                out.push(Term { seq: cseq.clone(), key: k, post: Post::Scale(&f.sign((n - i) as i64) * &x) });
            }
        }
        let a1 = vec![(key[n], one.clone())];
        out.push(Term {
            seq: seq[1..].to_vec(),
            key: key[..n].to_vec(),
            post: Post::Right(vec![seq[0], seq[1], seq[n + 1]], a1, f.sign(n as i64)),
        });
        let top = key[0];
        let dtop = inst.hom(seq[n], seq[n + 1]).map(|h| h.degree(top)).unwrap_or(0);
        out.push(Term {
            seq: seq[..=n].to_vec(),
            key: key[1..].to_vec(),
            post: Post::Left(vec![seq[0], seq[n], seq[n + 1]], vec![(top, one)], f.sign(p * dtop + 1)),
        });
        out
    }

    fn post(&self, post: &Post, v: &SparseVec) -> SparseVec {
        let amb = self.pc.ambient();
        match post {
            Post::Scale(c) => v.iter().map(|(i, x)| (*i, c * x)).collect(),
            Post::Right(s, a, c) => {
                let w = amb.apply(s, &[v.clone(), a.clone()]);
                w.into_iter().map(|(i, x)| (i, c * &x)).collect()
            }
            Post::Left(s, a, c) => {
                let w = amb.apply(s, &[a.clone(), v.clone()]);
                w.into_iter().map(|(i, x)| (i, c * &x)).collect()
            }
        }
    }

    /// The Hochschild differential of a cochain.
    pub fn differential(&self, phi: &HochschildCochain) -> Result<HochschildCochain> {
        let inst = self.pc.instance();
        let mut out = HochschildCochain::zero(phi.arity + 1, phi.degree);
        let one = inst.field().one();
        for seq in inst.sequences(phi.arity + 2) {
            let srcs = inst.written_sources(&seq)?;
            let dims: Vec<usize> = srcs.iter().map(|s| s.dim()).collect();
            let mut t = Table::new();
            for_each_tuple(&dims, |key| {
                let mut v: SparseVec = Vec::new();
                for term in self.terms(&seq, key, phi.degree) {
                    let val = phi.get(&term.seq, &term.key);
                    if !val.is_empty() {
                        v = sparse_axpy(&v, &one, &self.post(&term.post, &val));
                    }
                }
                table_add(&mut t, key.to_vec(), &one, &v);
            });
            if !t.is_empty() {
                out.comps.insert(seq, t);
            }
        }
        Ok(out)
    }

    /// Matrix of `∂: CC^{i,j} → CC^{i+1,j}`.
    pub fn differential_matrix(&self, i: usize, j: i64) -> Result<Matrix> {
        if i >= self.max_arity {
            return Err(Error::Invalid(format!("CC^{} was not built", i + 1)));
        }
        let f = self.field();
        let rows_c = self.coords(i + 1, j);
        let mut rows: Vec<SparseVec> = vec![Vec::new(); rows_c.len()];
        let amb = self.pc.ambient();
        let mut done: BTreeSet<(Vec<usize>, Vec<usize>)> = BTreeSet::new();
        for (seq, key, _) in rows_c {
            if !done.insert((seq.clone(), key.clone())) {
                continue;
            }
            let mut acc: BTreeMap<usize, SparseVec> = BTreeMap::new();
            for term in self.terms(seq, key, j) {
                let tgt = amb.hom(term.seq[0], *term.seq.last().unwrap())?;
                for o in 0..tgt.dim() {
                    let Some(col) = self.coord(i, j, &(term.seq.clone(), term.key.clone(), o)) else { continue };
                    for (out, x) in self.post(&term.post, &vec![(o, f.one())]) {
                        let e = acc.entry(out).or_default();
                        *e = sparse_axpy(e, &x, &vec![(col, f.one())]);
                    }
                }
            }
            for (out, row) in acc {
                if let Some(r) = self.coord(i + 1, j, &(seq.clone(), key.clone(), out)) {
                    rows[r] = row;
                } else if !row.is_empty() {
                    return Err(Error::Degree("differential leaves the internal degree".into()));
                }
            }
        }
        Ok(Matrix::from_rows(f, self.dim(i, j), rows))
    }

    /// Coordinates of a cochain in `CC^{i,j}`.
    pub fn to_vector(&self, phi: &HochschildCochain) -> Result<SparseVec> {
        let j = self.pc.instance().grading().reduce(phi.degree);
        let mut v: SparseVec = Vec::new();
        for (seq, t) in &phi.comps {
            for (key, val) in t {
                for (o, x) in val {
                    let c = self
                        .coord(phi.arity, j, &(seq.clone(), key.clone(), *o))
                        .ok_or_else(|| Error::Degree("cochain component of the wrong degree".into()))?;
                    v.push((c, x.clone()));
                }
            }
        }
        v.sort_by_key(|e| e.0);
        Ok(v)
    }

    /// Cochain with the given coordinates in `CC^{i,j}`.
    pub fn from_vector(&self, i: usize, j: i64, v: &SparseVec) -> HochschildCochain {
        let mut out = HochschildCochain::zero(i, j);
        let coords = self.coords(i, j);
        for (c, x) in v {
            let (seq, key, o) = &coords[*c];
            let t = out.comps.entry(seq.clone()).or_default();
            table_add(t, key.clone(), x, &vec![(*o, x.field().one())]);
        }
        out
    }

    /// Dimensions of `HH^{i,j}` for `i ≤ max_arity`; entries with `i = max_arity` are not final.
    pub fn hh_dimensions(&self) -> Result<Vec<HHEntry>> {
        let mut ranks: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        for i in 0..self.max_arity {
            for j in self.occupied(i) {
                ranks.insert((i, j), self.differential_matrix(i, j)?.rank());
            }
        }
        let mut out = Vec::new();
        for i in 0..=self.max_arity {
            for j in self.occupied(i) {
                let cc = self.dim(i, j);
                let r_out = ranks.get(&(i, j)).copied().unwrap_or(0);
                let r_in = if i == 0 { 0 } else { ranks.get(&(i - 1, j)).copied().unwrap_or(0) };
                out.push(HHEntry { i, j, cc_dim: cc, hh_dim: cc - r_out - r_in, is_final: i < self.max_arity });
            }
        }
        Ok(out)
    }

    /// Cocycles of `CC^{i,j}` representing a basis of `HH^{i,j}`.
    pub fn cohomology_representatives(&self, i: usize, j: i64) -> Result<Vec<SparseVec>> {
        let f = self.field();
        let mut b = self.boundaries(i, j)?;
        let z = if i < self.max_arity {
            self.differential_matrix(i, j)?.echelon().kernel_sparse()
        } else {
            return Err(Error::Invalid(format!("CC^{} was not built", i + 1)));
        };
        let _ = f;
        Ok(z.into_iter().filter(|v| b.insert(v.clone())).collect())
    }

    fn boundaries(&self, i: usize, j: i64) -> Result<RowBasis> {
        let mut b = RowBasis::new();
        if i > 0 {
            let d = self.differential_matrix(i - 1, j)?.transpose();
            for r in 0..d.nrows() {
                b.insert(d.row(r).clone());
            }
        }
        Ok(b)
    }
}

/// Convenience: the HH table of a graded pre-category up to arity `max_arity`.
pub fn hh_dimensions(pc: &GradedPreCategory, max_arity: usize) -> Result<Vec<HHEntry>> {
    HochschildComplex::new(pc, max_arity)?.hh_dimensions()
}

/// Dimensions of `CC^{i,j}` for `i ≤ max_arity`.
pub fn cc_dimensions(pc: &GradedPreCategory, max_arity: usize) -> Result<BTreeMap<(usize, i64), usize>> {
    let cx = HochschildComplex::new(pc, max_arity)?;
    let mut out = BTreeMap::new();
    for i in 0..=max_arity {
        for j in cx.occupied(i) {
            out.insert((i, j), cx.dim(i, j));
        }
    }
    Ok(out)
}

/// Restriction of cochains along a fully faithful functor of ambients that
/// carries the source family into the target family.
#[derive(Clone, Debug)]
pub struct Restriction {
    functor: AInfFunctor,
    /// Inverse of `f_1` per ambient pair of source objects, as basis images.
    inverse: BTreeMap<(usize, usize), Vec<SparseVec>>,
}

impl Restriction {
    pub fn new(functor: AInfFunctor, source: &GradedPreCategory, target: &GradedPreCategory) -> Result<Restriction> {
        let a = source.ambient();
        let b = target.ambient();
        if !a.same_data(functor.source()) || !b.same_data(functor.target()) {
            return Err(Error::Invalid("the functor must run between the two ambients".into()));
        }
        let f = a.field();
        let mut inverse = BTreeMap::new();
        for x in 0..a.n_objects() {
            for y in 0..a.n_objects() {
                let (fx, fy) = (functor.object_map()[x], functor.object_map()[y]);
                let cols = functor.linear_part(x, y);
                let n = b.hom(fx, fy)?.dim();
                if cols.len() != n || Matrix::from_cols(f, n, &cols).rank() != n {
                    return Err(Error::Invalid(format!("f_1 is not bijective on Hom({}, {})", a.name(x), a.name(y))));
                }
                let m = Matrix::from_cols(f, n, &cols);
                let inv = (0..n).map(|o| m.solve_sparse(&vec![(o, f.one())]).unwrap_or_default()).collect();
                inverse.insert((x, y), inv);
            }
        }
        for len in 1..=source.instance().max_arity() + 1 {
            for seq in source.instance().sequences(len) {
                let img = functor.map_seq(&seq);
                if !target.instance().is_transversal(&img) {
                    return Err(Error::NotTransversal(format!("image of {seq:?}")));
                }
            }
        }
        Ok(Restriction { functor, inverse })
    }

    fn images(&self, seq: &[usize], key: &[usize]) -> Vec<SparseVec> {
        let f = self.functor.source().field();
        (0..key.len())
            .map(|w| {
                let t = seq.len() - 2 - w;
                self.functor.apply(&[seq[t], seq[t + 1]], &[vec![(key[w], f.one())]])
            })
            .collect()
    }

    /// `F^*φ` for a cochain of the target.
    pub fn apply(&self, source: &GradedPreCategory, phi: &HochschildCochain) -> Result<HochschildCochain> {
        let inst = source.instance();
        let f = inst.field();
        let mut out = HochschildCochain::zero(phi.arity, phi.degree);
        for seq in inst.sequences(phi.arity + 1) {
            let img = self.functor.map_seq(&seq);
            let Some(t) = phi.comps.get(&img) else { continue };
            let srcs = inst.written_sources(&seq)?;
            let dims: Vec<usize> = srcs.iter().map(|s| s.dim()).collect();
            let inv = &self.inverse[&(seq[0], seq[phi.arity])];
            let mut tab = Table::new();
            let mut visit = |key: &[usize]| {
                let v = eval_table(t, &self.images(&seq, key));
                let w = crate::transfer::apply_linear(f, inv, &v);
                table_add(&mut tab, key.to_vec(), &f.one(), &w);
            };
            if phi.arity == 0 {
                visit(&[]);
            } else {
                for_each_tuple(&dims, visit);
            }
            if !tab.is_empty() {
                out.comps.insert(seq, tab);
            }
        }
        Ok(out)
    }

    /// Matrix of `F^*: CC^{i,j}(target) → CC^{i,j}(source)`.
    pub fn matrix(&self, src: &HochschildComplex, tgt: &HochschildComplex, i: usize, j: i64) -> Result<Matrix> {
        let f = src.field();
        let mut cols = Vec::new();
        for k in 0..tgt.dim(i, j) {
            let phi = tgt.from_vector(i, j, &vec![(k, f.one())]);
            cols.push(src.to_vector(&self.apply(src.precategory(), &phi)?)?);
        }
        Ok(Matrix::from_cols(f, src.dim(i, j), &cols))
    }
}

/// Whether `F^* ∂ = ∂ F^*` on `CC^{i,j}` as exact matrices.
pub fn restriction_commutes(
    r: &Restriction,
    src: &HochschildComplex,
    tgt: &HochschildComplex,
    i: usize,
    j: i64,
) -> Result<bool> {
    let lhs = r.matrix(src, tgt, i + 1, j)?.mul(&tgt.differential_matrix(i, j)?)?;
    let rhs = src.differential_matrix(i, j)?.mul(&r.matrix(src, tgt, i, j)?)?;
    Ok(lhs.sub(&rhs)?.is_zero())
}

/// Per-bidegree result of [`induced_hh_iso_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HHIsoEntry {
    pub i: usize,
    pub j: i64,
    pub dim_target: usize,
    pub dim_source: usize,
    pub iso: bool,
}

/// Checks that `F^*: HH^{i,j}(D) → HH^{i,j}(C)` is bijective for `i < max_arity`.
pub fn induced_hh_iso_check(
    r: &Restriction,
    src: &HochschildComplex,
    tgt: &HochschildComplex,
) -> Result<Vec<HHIsoEntry>> {
    let top = src.max_arity().min(tgt.max_arity());
    let mut out = Vec::new();
    for i in 0..top {
        let js: BTreeSet<i64> = src.occupied(i).into_iter().chain(tgt.occupied(i)).collect();
        for j in js {
            let reps = tgt.cohomology_representatives(i, j)?;
            let src_reps = src.cohomology_representatives(i, j)?;
            let m = r.matrix(src, tgt, i, j)?;
            let mut b = src.boundaries(i, j)?;
            let dsrc = if src.dim(i, j) > 0 { Some(src.differential_matrix(i, j)?) } else { None };
            let mut iso = reps.len() == src_reps.len();
            for v in &reps {
                let w = m.mul_sparse(v);
                if let Some(d) = &dsrc {
                    if !d.mul_sparse(&w).is_empty() {
                        iso = false;
                    }
                }
                if !b.insert(w) {
                    iso = false;
                }
            }
            out.push(HHIsoEntry { i, j, dim_target: reps.len(), dim_source: src_reps.len(), iso });
        }
    }
    Ok(out)
}

fn ambient_product(
    amb: &AInfInstance,
    ident: &SparseVec,
    objs: &[usize],
    a: &[SparseVec],
    lo: usize,
    hi: usize,
) -> SparseVec {
    // a_hi ⋯ a_{lo+1}; a[k-1] holds a_k in Hom(objs[k-1], objs[k]).
    let mut p = ident.clone();
    for k in lo + 1..=hi {
        p = amb.apply(&[objs[lo], objs[k - 1], objs[k]], &[a[k - 1].clone(), p]);
    }
    p
}

/// Action of a non-decreasing `f: [m] → [n]` on a component `φ^m` at
/// `f^*(tuple)`, evaluated on `a_n, …, a_1` given in written order.
pub fn simplicial_action(
    pc: &GradedPreCategory,
    f: &[usize],
    tuple: &[usize],
    phi: &Table,
    phi_degree: i64,
    inputs: &[SparseVec],
) -> Result<SparseVec> {
    let amb = pc.ambient();
    let n = tuple.len() - 1;
    let m = f.len() - 1;
    if f.windows(2).any(|w| w[0] > w[1]) || f.iter().any(|&v| v > n) {
        return Err(Error::Invalid(format!("{f:?} is not a non-decreasing map into [{n}]")));
    }
    if inputs.len() != n {
        return Err(Error::Dimension { expected: n, found: inputs.len() });
    }
    // a[k-1] = a_k, inputs are written a_n first.
    let a: Vec<SparseVec> = inputs.iter().rev().cloned().collect();
    let mut degs = Vec::with_capacity(n);
    for k in 1..=n {
        let h = amb.hom(tuple[k - 1], tuple[k])?;
        degs.push(h.vector_degree(&a[k - 1]).unwrap_or(0));
    }
    let id = |x: usize| pc.identity(x).clone();
    let mut args: Vec<SparseVec> = Vec::with_capacity(m);
    for l in (1..=m).rev() {
        args.push(ambient_product(amb, &id(tuple[f[l - 1]]), tuple, &a, f[l - 1], f[l]));
    }
    let mut v = eval_table(phi, &args);
    let right = ambient_product(amb, &id(tuple[0]), tuple, &a, 0, f[0]);
    v = amb.apply(&[tuple[0], tuple[f[0]], tuple[f[m]]], &[v, right]);
    let left = ambient_product(amb, &id(tuple[f[m]]), tuple, &a, f[m], n);
    v = amb.apply(&[tuple[0], tuple[f[m]], tuple[n]], &[left, v]);
    let nm = (n - m) as i64;
    let eps = phi_degree * degs[f[m]..].iter().sum::<i64>() + nm * (n as i64 + m as i64 + 1) / 2;
    let s = amb.field().sign(eps);
    Ok(v.into_iter().map(|(i, x)| (i, &s * &x)).collect())
}

/// Outcome of [`verify_q_resolution`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QResolutionStatus {
    Acyclic,
    NotAcyclic {
        degree: i64,
        dim: usize,
    },
    /// Homology vanishes but the witnesses could not build the contracting lifts.
    Inconclusive(String),
}

#[derive(Clone, Debug)]
pub struct QResolutionReport {
    pub status: QResolutionStatus,
    /// `(m, dim H_m)` for `m = -1 ..= max_arity - 1`.
    pub homology: Vec<(i64, usize)>,
    /// `dim Q_m` for `m = -1 ..= max_arity`.
    pub dims: Vec<(i64, usize)>,
}

type QBasis = Vec<(Vec<usize>, Vec<usize>)>;

fn q_basis(c: &AInfInstance, object_map: &[usize], t: &[usize], m: usize) -> QBasis {
    let n = t.len() - 1;
    let mut out = Vec::new();
    for s in c.sequences(m + 1) {
        let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
        while let Some(f) = stack.pop() {
            if f.len() == m + 1 {
                out.push((f, s.clone()));
                continue;
            }
            let lo = f.last().copied().unwrap_or(0);
            for v in (lo..=n).rev() {
                if t[v] == object_map[s[f.len()]] {
                    let mut g = f.clone();
                    g.push(v);
                    stack.push(g);
                }
            }
        }
    }
    out.sort();
    out
}

/// Whether the complex `Q_·(T)`, augmented by `Q_{-1} = k`,
/// is acyclic in degrees `-1 ..= N-1` where `N` is the arity bound of `c`.
///
/// Ranks decide acyclicity. The witness table additionally supplies objects
/// `Ỹ` used to build explicit preimages `H(a)` of closed elements, which are
/// verified to satisfy `∂H(a) = a`.
pub fn verify_q_resolution(
    c: &AInfInstance,
    object_map: &[usize],
    t: &[usize],
    witnesses: &ExtensionWitnessTable,
) -> Result<QResolutionReport> {
    if object_map.len() != c.n_objects() {
        return Err(Error::Dimension { expected: c.n_objects(), found: object_map.len() });
    }
    let field = c.field();
    let top = c.max_arity();
    // bases[m + 1] is the basis of Q_m; Q_{-1} has the single empty pair.
    let mut bases: Vec<QBasis> = vec![vec![(Vec::new(), Vec::new())]];
    for m in 0..=top {
        bases.push(q_basis(c, object_map, t, m));
    }
    let pos: Vec<HashMap<(Vec<usize>, Vec<usize>), usize>> =
        bases.iter().map(|b| b.iter().cloned().enumerate().map(|(i, x)| (x, i)).collect()).collect();
    // d[m + 1]: Q_m → Q_{m-1} as columns.
    let mut d: Vec<Matrix> = vec![Matrix::zeros(field, 0, 0)];
    for m in 0..=top {
        let mut cols = Vec::new();
        for (f, s) in &bases[m + 1] {
            let mut col: SparseVec = Vec::new();
            for i in 0..=m {
                let mut g = f.clone();
                g.remove(i);
                let mut r = s.clone();
                r.remove(i);
                let k = pos[m][&(g, r)];
                col = sparse_axpy(&col, &field.sign(i as i64), &vec![(k, field.one())]);
            }
            cols.push(col);
        }
        d.push(Matrix::from_cols(field, bases[m].len(), &cols));
    }
    let ranks: Vec<usize> = d.iter().map(|x| x.rank()).collect();
    let dims: Vec<(i64, usize)> = bases.iter().enumerate().map(|(k, b)| (k as i64 - 1, b.len())).collect();
    let mut homology = Vec::new();
    let mut status = None;
    for k in 0..=top {
        let m = k as i64 - 1;
        let h = bases[k].len() - ranks[k] - ranks[k + 1];
        homology.push((m, h));
        if h > 0 && status.is_none() {
            status = Some(QResolutionStatus::NotAcyclic { degree: m, dim: h });
        }
    }
    if status.is_none() {
        status = Some(match check_lifts(c, object_map, t, witnesses, &bases, &pos, &d) {
            Ok(()) => QResolutionStatus::Acyclic,
            Err(e) => QResolutionStatus::Inconclusive(e),
        });
    }
    Ok(QResolutionReport { status: status.unwrap(), homology, dims })
}

fn check_lifts(
    c: &AInfInstance,
    object_map: &[usize],
    t: &[usize],
    witnesses: &ExtensionWitnessTable,
    bases: &[QBasis],
    pos: &[HashMap<(Vec<usize>, Vec<usize>), usize>],
    d: &[Matrix],
) -> std::result::Result<(), String> {
    let field = c.field();
    let top = c.max_arity();
    let mut candidates: Vec<usize> = Vec::new();
    for ((_, x), w) in &witnesses.entries {
        if object_map[*x] == t[0] && object_map[w.minus] == t[0] && !candidates.contains(&w.minus) {
            candidates.push(w.minus);
        }
    }
    for k in 0..=top {
        // Closed elements of Q_{k-1}.
        let closed: Vec<SparseVec> = if k == 0 { vec![vec![(0, field.one())]] } else { d[k].echelon().kernel_sparse() };
        for a in closed {
            let seqs: Vec<&Vec<usize>> = a.iter().map(|(i, _)| &bases[k][*i].1).collect();
            let y = candidates.iter().copied().find(|&y| {
                seqs.iter().all(|s| {
                    let mut u = vec![y];
                    u.extend(s.iter());
                    c.is_transversal(&u)
                })
            });
            let Some(y) = y else {
                return Err(format!(
                    "no witness object makes every sequence of a closed element in degree {} transversal",
                    k as i64 - 1
                ));
            };
            let mut h: SparseVec = Vec::new();
            for (i, lam) in &a {
                let (f, s) = &bases[k][*i];
                let mut g = vec![0];
                g.extend(f.iter());
                let mut u = vec![y];
                u.extend(s.iter());
                let idx = pos[k + 1].get(&(g, u)).ok_or_else(|| "lift is not a basis element".to_string())?;
                h = sparse_axpy(&h, lam, &vec![(*idx, field.one())]);
            }
            if d[k + 1].mul_sparse(&h) != a {
                return Err(format!("the lift fails to contract in degree {}", k as i64 - 1));
            }
        }
    }
    Ok(())
}
