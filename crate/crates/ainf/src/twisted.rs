//! Shifted objects, nilpotent endomorphism algebras, Maurer–Cartan elements
//! and the pre-category of one-sided twisted complexes.
//!
//! All sequences of shifted objects are evaluated through the base instance:
//! the operation on `(X_0[n_0], …, X_k[n_k])` is `(-1)^{k n_k} m_k` on
//! `(X_0, …, X_k)`, with hom degrees lowered by `n_target - n_source`.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ainf::{AInfFunctor, AInfInstance, Family};
use crate::error::{Error, Result};
use crate::graded::{GradedSpace, Grading, Table};
use crate::linalg::{normalize, sparse_axpy, Field, SparseVec};

/// `X[n]` for an object index `X` of the base instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShiftedObject {
    pub base: usize,
    pub shift: i64,
}

impl ShiftedObject {
    pub fn new(grading: Grading, base: usize, shift: i64) -> ShiftedObject {
        ShiftedObject { base, shift: grading.reduce(shift) }
    }

    pub fn name(&self, c: &AInfInstance) -> String {
        if self.shift == 0 {
            c.name(self.base).to_string()
        } else {
            format!("{}[{}]", c.name(self.base), self.shift)
        }
    }
}

/// Sign exponent of the shifted operation on a sequence of shifted objects.
pub fn shift_sign(seq: &[ShiftedObject]) -> i64 {
    (seq.len() as i64 - 1) * seq.last().map_or(0, |o| o.shift)
}

/// Degree of a basis element of `Hom(x, y)` for shifted objects.
pub fn shifted_degree(c: &AInfInstance, x: ShiftedObject, y: ShiftedObject, i: usize) -> i64 {
    c.grading().reduce(c.basis_degree(x.base, y.base, i) - (y.shift - x.shift))
}

/// Shifted hom space.
pub fn shifted_hom(c: &AInfInstance, x: ShiftedObject, y: ShiftedObject) -> Result<GradedSpace> {
    let h = c.hom(x.base, y.base)?;
    let s = h.shift(y.shift - x.shift);
    let basis = s.names().iter().cloned().zip(s.degrees().iter().map(|d| c.grading().reduce(*d))).collect();
    GradedSpace::new(c.grading(), basis)
}

pub fn is_transversal_shifted(c: &AInfInstance, seq: &[ShiftedObject]) -> bool {
    c.is_transversal(&seq.iter().map(|o| o.base).collect::<Vec<_>>())
}

/// Applies the shifted operation to written-order inputs.
pub fn apply_shifted(c: &AInfInstance, seq: &[ShiftedObject], inputs: &[SparseVec]) -> SparseVec {
    let base: Vec<usize> = seq.iter().map(|o| o.base).collect();
    let out = c.apply(&base, inputs);
    if shift_sign(seq).rem_euclid(2) == 1 {
        out.into_iter().map(|(i, x)| (i, -x)).collect()
    } else {
        out
    }
}

/// The shift category on a finite window of shifts.
#[derive(Clone, Debug)]
pub struct ShiftCategory {
    pub instance: AInfInstance,
    pub objects: Vec<ShiftedObject>,
}

impl ShiftCategory {
    pub fn index(&self, o: ShiftedObject) -> Option<usize> {
        self.objects.iter().position(|p| *p == o)
    }
}

/// Materializes the shift category of `c` with shifts drawn from `window`.
pub fn build_shift_category(c: &AInfInstance, window: &[i64]) -> Result<ShiftCategory> {
    let g = c.grading();
    let shifts: BTreeSet<i64> = window.iter().map(|s| g.reduce(*s)).collect();
    let mut objects = Vec::new();
    for x in 0..c.n_objects() {
        for &s in &shifts {
            objects.push(ShiftedObject { base: x, shift: s });
        }
    }
    build_on_objects(c, objects)
}

/// Shift category restricted to the given shifted objects.
pub fn build_on_objects(c: &AInfInstance, objects: Vec<ShiftedObject>) -> Result<ShiftCategory> {
    let k = objects.len();
    let family = match c.family() {
        Family::Full => Family::Full,
        Family::Explicit(_) => {
            let mut set = BTreeSet::new();
            let mut frontier: Vec<Vec<usize>> = (0..k).map(|i| vec![i]).collect();
            while let Some(s) = frontier.pop() {
                let shifted: Vec<ShiftedObject> = s.iter().map(|&i| objects[i]).collect();
                if !is_transversal_shifted(c, &shifted) {
                    continue;
                }
                if s.len() <= c.max_arity() {
                    for i in 0..k {
                        let mut t = s.clone();
                        t.push(i);
                        frontier.push(t);
                    }
                }
                set.insert(s);
            }
            Family::Explicit(set)
        }
    };
    let mut homs = BTreeMap::new();
    for x in 0..k {
        for y in 0..k {
            if is_transversal_shifted(c, &[objects[x], objects[y]]) {
                homs.insert((x, y), shifted_hom(c, objects[x], objects[y])?);
            }
        }
    }
    let names = objects.iter().map(|o| o.name(c)).collect();
    let mut inst = AInfInstance::new(c.field(), c.grading(), c.max_arity(), names, family, homs)?;
    for len in 2..=c.max_arity() + 1 {
        for seq in inst.sequences(len) {
            let shifted: Vec<ShiftedObject> = seq.iter().map(|&i| objects[i]).collect();
            let base: Vec<usize> = shifted.iter().map(|o| o.base).collect();
            let Some(op) = c.op(&base) else { continue };
            let neg = shift_sign(&shifted).rem_euclid(2) == 1;
            let t: Table = op
                .entries()
                .iter()
                .map(|(key, v)| (key.clone(), if neg { v.iter().map(|(i, x)| (*i, -x)).collect() } else { v.clone() }))
                .collect();
            inst.set_op(&seq, t)?;
        }
    }
    Ok(ShiftCategory { instance: inst, objects })
}

/// Components of a morphism-like element on a sequence of positions:
/// `(from, to)` to a vector in `Hom(seq[from], seq[to])`.
pub type PosElement = BTreeMap<(usize, usize), SparseVec>;

/// Sign exponent of the twisted product for insertion counts `ks`
/// (`k_0, …, k_n`) and input degrees `degs` (`deg x_1, …, deg x_n`).
pub fn twist_sign(ks: &[usize], degs: &[i64]) -> i64 {
    let n = degs.len();
    let k = |i: usize| ks[i] as i64;
    let mut e = 0;
    for i in 1..=n {
        for j in 0..i {
            e += (degs[i - 1] + k(i)) * k(j);
        }
    }
    for i in 0..=n {
        e += k(i) * (k(i) + 1) / 2 + i as i64 * k(i);
    }
    e
}

type Adjacency = Vec<Vec<(usize, SparseVec)>>;

fn adjacency(len: usize, e: &PosElement) -> Adjacency {
    let mut adj = vec![Vec::new(); len];
    for ((p, q), v) in e {
        if !v.is_empty() {
            adj[*p].push((*q, v.clone()));
        }
    }
    adj
}

/// Signed sum over insertions of twisting elements between inputs.
///
/// `xs` are the inputs in source order, `alphas[i]` is inserted after `x_i`
/// (`alphas[0]` before `x_1`). `op` evaluates an operation on a position
/// path with written-order inputs. Returns components keyed by the first
/// and last position.
pub struct TwistEval<'a> {
    pub len: usize,
    pub max_arity: usize,
    pub field: Field,
    pub op: &'a dyn Fn(&[usize], &[SparseVec]) -> SparseVec,
    pub sign: &'a dyn Fn(&[usize], &[i64]) -> i64,
}

impl TwistEval<'_> {
    pub fn run(&self, alphas: &[&PosElement], xs: &[&PosElement], degs: &[i64]) -> PosElement {
        let aadj: Vec<Adjacency> = alphas.iter().map(|a| adjacency(self.len, a)).collect();
        let xadj: Vec<Adjacency> = xs.iter().map(|x| adjacency(self.len, x)).collect();
        let mut out = PosElement::new();
        let mut st = State { path: Vec::new(), inputs: Vec::new(), ks: vec![0; xs.len() + 1] };
        for s in 0..self.len {
            st.path.push(s);
            self.dfs(&aadj, &xadj, degs, 0, s, &mut st, &mut out);
            st.path.pop();
        }
        out.retain(|_, v| !v.is_empty());
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        &self,
        aadj: &[Adjacency],
        xadj: &[Adjacency],
        degs: &[i64],
        i: usize,
        pos: usize,
        st: &mut State,
        out: &mut PosElement,
    ) {
        let n = xadj.len();
        if i == n {
            let arity = st.inputs.len();
            if arity > 0 && arity <= self.max_arity {
                let written: Vec<SparseVec> = st.inputs.iter().rev().cloned().collect();
                let v = (self.op)(&st.path, &written);
                if !v.is_empty() {
                    let c = self.field.sign((self.sign)(&st.ks, degs));
                    let e = out.entry((st.path[0], pos)).or_default();
                    *e = sparse_axpy(e, &c, &v);
                }
            }
        } else if st.inputs.len() + n - i <= self.max_arity {
            for (q, v) in &xadj[i][pos] {
                st.inputs.push(v.clone());
                st.path.push(*q);
                self.dfs(aadj, xadj, degs, i + 1, *q, st, out);
                st.path.pop();
                st.inputs.pop();
            }
        }
        if st.inputs.len() + 1 + n - i <= self.max_arity {
            for (q, v) in &aadj[i][pos] {
                st.inputs.push(v.clone());
                st.path.push(*q);
                st.ks[i] += 1;
                self.dfs(aadj, xadj, degs, i, *q, st, out);
                st.ks[i] -= 1;
                st.path.pop();
                st.inputs.pop();
            }
        }
    }
}

struct State {
    path: Vec<usize>,
    inputs: Vec<SparseVec>,
    ks: Vec<usize>,
}

/// Basis of a direct sum of shifted homs indexed by position pairs.
#[derive(Clone, Debug, Default)]
pub struct ComponentBasis {
    pairs: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    dims: Vec<usize>,
    index: BTreeMap<(usize, usize), usize>,
    total: usize,
}

impl ComponentBasis {
    /// `pairs` index into `from` (first) and `to` (second) sequences.
    pub fn new(
        c: &AInfInstance,
        from: &[ShiftedObject],
        to: &[ShiftedObject],
        pairs: Vec<(usize, usize)>,
    ) -> Result<ComponentBasis> {
        let mut b = ComponentBasis::default();
        for (p, q) in pairs {
            let d = c.hom(from[p].base, to[q].base)?.dim();
            b.index.insert((p, q), b.pairs.len());
            b.pairs.push((p, q));
            b.offsets.push(b.total);
            b.dims.push(d);
            b.total += d;
        }
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        self.total
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn offset_of(&self, p: usize, q: usize) -> Option<usize> {
        self.index.get(&(p, q)).map(|&k| self.offsets[k])
    }

    /// Pair and hom index of a basis element.
    pub fn component(&self, i: usize) -> ((usize, usize), usize) {
        let k = self.offsets.partition_point(|&o| o <= i) - 1;
        (self.pairs[k], i - self.offsets[k])
    }

    pub fn to_pos(&self, v: &SparseVec) -> PosElement {
        let mut out = PosElement::new();
        for (i, x) in v {
            let (pq, j) = self.component(*i);
            out.entry(pq).or_default().push((j, x.clone()));
        }
        out
    }

    pub fn to_vec(&self, e: &PosElement) -> Result<SparseVec> {
        let mut out: SparseVec = Vec::new();
        for (pq, v) in e {
            if v.is_empty() {
                continue;
            }
            let k = *self.index.get(pq).ok_or_else(|| Error::Invalid(format!("component {pq:?} outside the basis")))?;
            out.extend(v.iter().map(|(j, x)| (self.offsets[k] + j, x.clone())));
        }
        out.sort_by_key(|(i, _)| *i);
        Ok(out)
    }

    /// Degrees and names of the basis, for the given sequences.
    pub fn space(&self, c: &AInfInstance, from: &[ShiftedObject], to: &[ShiftedObject]) -> Result<GradedSpace> {
        let mut basis = Vec::with_capacity(self.total);
        for &(p, q) in &self.pairs {
            let h = c.hom(from[p].base, to[q].base)?;
            for j in 0..h.dim() {
                basis.push((format!("{p}>{q}:{}", h.name(j)), shifted_degree(c, from[p], to[q], j)));
            }
        }
        GradedSpace::new(c.grading(), basis)
    }
}

/// A non-unital one-object A∞-algebra with a multiplicative decreasing
/// filtration given by basis weights: `F_r` is spanned by weights `≥ r`.
#[derive(Clone, Debug)]
pub struct NilpotentAInf {
    pub algebra: AInfInstance,
    pub weights: Vec<usize>,
    /// `F_length = 0`.
    pub length: usize,
}

impl NilpotentAInf {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn field(&self) -> Field {
        self.algebra.field()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.algebra.basis_degree(0, 0, i)
    }

    /// Entrywise check of `m_k(F_{r_1} ⊗ … ⊗ F_{r_k}) ⊆ F_{r_1 + … + r_k}`.
    pub fn filtration_violations(&self) -> Vec<(usize, Vec<usize>)> {
        let mut bad = Vec::new();
        if self.weights.iter().any(|&w| w == 0 || w >= self.length) {
            bad.push((0, Vec::new()));
        }
        for (seq, op) in self.algebra.ops() {
            for (key, v) in op.entries() {
                let w: usize = key.iter().map(|&i| self.weights[i]).sum();
                if v.iter().any(|(o, _)| self.weights[*o] < w) {
                    bad.push((seq.len() - 1, key.clone()));
                }
            }
        }
        bad
    }

    fn power_terms(&self, k: usize, inputs: &[SparseVec]) -> SparseVec {
        if k == 0 || k > self.algebra.max_arity() {
            return Vec::new();
        }
        self.algebra.apply(&vec![0; k + 1], inputs)
    }

    fn check_degree(&self, v: &SparseVec, d: i64, what: &str) -> Result<()> {
        let g = self.algebra.grading();
        if v.iter().any(|(i, _)| !g.eq(self.degree(*i), d)) {
            return Err(Error::Degree(format!("{what} must be homogeneous of degree {d}")));
        }
        Ok(())
    }

    /// `Σ_k (-1)^{k(k+1)/2} m_k(α, …, α)`; zero exactly for Maurer–Cartan elements.
    pub fn mc_residual(&self, alpha: &SparseVec) -> Result<SparseVec> {
        self.check_degree(alpha, 1, "a Maurer-Cartan element")?;
        let f = self.field();
        let mut out: SparseVec = Vec::new();
        for k in 1..self.length.max(2) {
            let t = self.power_terms(k, &vec![alpha.clone(); k]);
            let e = (k * (k + 1) / 2) as i64;
            out = sparse_axpy(&out, &f.sign(e), &t);
        }
        Ok(out)
    }

    pub fn is_mc(&self, alpha: &SparseVec) -> Result<bool> {
        Ok(self.mc_residual(alpha)?.is_empty())
    }

    /// `β - α + Σ_{k_0,k_1} ± m_{1+k_0+k_1}(β^{k_1}, h, α^{k_0})`, the
    /// differential of `1 + h` between the twisted objects `α` and `β`.
    pub fn gauge_residual(&self, alpha: &SparseVec, beta: &SparseVec, h: &SparseVec) -> Result<SparseVec> {
        self.check_degree(h, 0, "a gauge element")?;
        let f = self.field();
        let mut out = sparse_axpy(beta, &f.int(-1), alpha);
        out = sparse_axpy(&out, &f.one(), &self.gauge_terms(alpha, beta, h));
        Ok(out)
    }

    fn gauge_terms(&self, alpha: &SparseVec, beta: &SparseVec, h: &SparseVec) -> SparseVec {
        let f = self.field();
        let mut out: SparseVec = Vec::new();
        if h.is_empty() {
            return out;
        }
        for k0 in 0..self.length {
            for k1 in 0..self.length - k0 {
                let k = 1 + k0 + k1;
                if k > self.algebra.max_arity() {
                    continue;
                }
                let mut inputs = vec![beta.clone(); k1];
                inputs.push(h.clone());
                inputs.extend(std::iter::repeat_n(alpha.clone(), k0));
                let t = self.power_terms(k, &inputs);
                out = sparse_axpy(&out, &f.sign(twist_sign(&[k0, k1], &[0])), &t);
            }
        }
        out
    }

    /// True when `h` is a gauge morphism from `α` to `β` between Maurer–Cartan elements.
    pub fn check_gauge(&self, alpha: &SparseVec, beta: &SparseVec, h: &SparseVec) -> Result<bool> {
        self.check_degree(alpha, 1, "a Maurer-Cartan element")?;
        self.check_degree(beta, 1, "a Maurer-Cartan element")?;
        Ok(self.is_mc(alpha)? && self.is_mc(beta)? && self.gauge_residual(alpha, beta, h)?.is_empty())
    }

    /// The unique `β` with `h: α → β` a gauge morphism, by iteration over the filtration.
    pub fn gauge_act(&self, alpha: &SparseVec, h: &SparseVec) -> Result<SparseVec> {
        self.check_degree(h, 0, "a gauge element")?;
        let f = self.field();
        let mut beta = alpha.clone();
        for _ in 0..=self.length {
            let t = self.gauge_terms(alpha, &beta, h);
            let next = sparse_axpy(alpha, &f.int(-1), &t);
            if next == beta {
                return Ok(beta);
            }
            beta = next;
        }
        Err(Error::MaurerCartan("gauge iteration did not stabilize".into()))
    }

    /// Basis elements of weight `r` and degree `d`.
    pub fn graded_piece(&self, r: usize, d: i64) -> Vec<usize> {
        let g = self.algebra.grading();
        (0..self.dim()).filter(|&i| self.weights[i] == r && g.eq(self.degree(i), d)).collect()
    }
}

/// One-object instance on a component basis of a sequence, with products
/// twisted by a fixed `background` element.
fn positional_algebra(
    c: &AInfInstance,
    seq: &[ShiftedObject],
    basis: &ComponentBasis,
    background: &PosElement,
    max_arity: usize,
) -> Result<AInfInstance> {
    let space = basis.space(c, seq, seq)?;
    let mut homs = BTreeMap::new();
    homs.insert((0, 0), space.clone());
    let mut a = AInfInstance::new(c.field(), c.grading(), max_arity, vec!["A".into()], Family::Full, homs)?;
    let mut adj = vec![Vec::new(); seq.len()];
    for &(p, q) in basis.pairs() {
        adj[p].push((q, basis.offset_of(p, q).unwrap()));
    }
    let out_offset = |p: usize, q: usize| basis.offset_of(p, q);
    let op = |objs: &[ShiftedObject]| -> Option<(&Table, i64)> {
        let b: Vec<usize> = objs.iter().map(|o| o.base).collect();
        c.op(&b).map(|m| (m.entries(), shift_sign(objs)))
    };
    let degree = |p: usize, q: usize, i: usize| shifted_degree(c, seq[p], seq[q], i);
    let mut tables: BTreeMap<usize, Table> = BTreeMap::new();
    for k in 1..=max_arity {
        let pt = PathTables {
            field: c.field(),
            max_arity,
            cat: seq,
            alphas: vec![PathTables::adjacency_alpha(seq.len(), background); k + 1],
            xs: vec![adj.clone(); k],
            out_offset: &out_offset,
            op: &op,
            degree: &degree,
            sign: &twist_sign,
        };
        let t = pt.table();
        if !t.is_empty() {
            tables.insert(k, t);
        }
    }
    for (k, t) in tables {
        a.set_op(&vec![0; k + 1], t)?;
    }
    Ok(a)
}

/// `End_+(S) = ⊕_{i<j} Hom(S_i, S_j)` with weight `j - i`.
#[derive(Clone, Debug)]
pub struct EndPlus {
    pub nilpotent: NilpotentAInf,
    pub seq: Vec<ShiftedObject>,
    pub basis: ComponentBasis,
}

pub fn end_plus(c: &AInfInstance, seq: &[ShiftedObject]) -> Result<EndPlus> {
    if !is_transversal_shifted(c, seq) {
        return Err(Error::NotTransversal("End_+ needs a transversal sequence".into()));
    }
    let n = seq.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let basis = ComponentBasis::new(c, seq, seq, pairs)?;
    let algebra = positional_algebra(c, seq, &basis, &PosElement::new(), c.max_arity())?;
    let weights = (0..basis.dim()).map(|i| {
        let ((p, q), _) = basis.component(i);
        q - p
    });
    let nilpotent = NilpotentAInf { algebra, weights: weights.collect(), length: n.max(1) };
    Ok(EndPlus { nilpotent, seq: seq.to_vec(), basis })
}

/// A one-sided twisted complex: a sequence of shifted objects and a
/// strictly upper-triangular degree-one twisting element.
#[derive(Clone, Debug)]
pub struct TwistedComplex {
    pub name: String,
    pub objects: Vec<ShiftedObject>,
    /// Components `(i, j)` with `i < j`.
    pub alpha: PosElement,
}

impl TwistedComplex {
    pub fn new(name: impl Into<String>, objects: Vec<ShiftedObject>, alpha: PosElement) -> TwistedComplex {
        let alpha = alpha.into_iter().map(|(k, v)| (k, normalize(v))).filter(|(_, v)| !v.is_empty()).collect();
        TwistedComplex { name: name.into(), objects, alpha }
    }

    /// Maurer–Cartan residual of the twisting element in `End_+`.
    pub fn mc_residual(&self, c: &AInfInstance) -> Result<SparseVec> {
        if self.alpha.keys().any(|(i, j)| i >= j || *j >= self.objects.len()) {
            return Err(Error::Invalid(format!("{}: twisting components must be strictly upper", self.name)));
        }
        let e = end_plus(c, &self.objects)?;
        let v = e.basis.to_vec(&self.alpha)?;
        e.nilpotent.mc_residual(&v)
    }
}

/// `cone(f) = ((X[1], Y), f)` for a closed degree-zero `f: X → Y`.
pub fn cone(c: &AInfInstance, x: ShiftedObject, y: ShiftedObject, f: &SparseVec) -> Result<TwistedComplex> {
    let x1 = ShiftedObject::new(c.grading(), x.base, x.shift + 1);
    if !is_transversal_shifted(c, &[x1, y]) {
        return Err(Error::NotTransversal("cone needs (X[1], Y) transversal".into()));
    }
    if f.iter().any(|(i, _)| !c.grading().eq(shifted_degree(c, x, y, *i), 0)) {
        return Err(Error::Degree("cone needs a degree-zero morphism".into()));
    }
    let d = apply_shifted(c, &[x, y], std::slice::from_ref(f));
    if !d.is_empty() {
        return Err(Error::NotClosed("cone needs a closed morphism".into()));
    }
    let mut alpha = PosElement::new();
    if !f.is_empty() {
        alpha.insert((0, 1), f.clone());
    }
    Ok(TwistedComplex::new(format!("cone({},{})", x.name(c), y.name(c)), vec![x1, y], alpha))
}

/// The pre-category of twisted complexes over `base`, on a finite list of objects.
#[derive(Clone, Debug)]
pub struct PreTr {
    base: Arc<AInfInstance>,
    complexes: Vec<TwistedComplex>,
    homs: BTreeMap<(usize, usize), ComponentBasis>,
    instance: AInfInstance,
}

impl PreTr {
    pub fn base(&self) -> &Arc<AInfInstance> {
        &self.base
    }

    pub fn complexes(&self) -> &[TwistedComplex] {
        &self.complexes
    }

    pub fn instance(&self) -> &AInfInstance {
        &self.instance
    }

    pub fn hom_basis(&self, e1: usize, e2: usize) -> Result<&ComponentBasis> {
        self.homs.get(&(e1, e2)).ok_or_else(|| Error::NotTransversal(format!("({e1}, {e2})")))
    }

    fn concat(&self, seq: &[usize]) -> (Vec<ShiftedObject>, Vec<usize>) {
        let mut cat = Vec::new();
        let mut offsets = Vec::new();
        for &e in seq {
            offsets.push(cat.len());
            cat.extend(self.complexes[e].objects.iter().copied());
        }
        (cat, offsets)
    }

    /// Products on a transversal sequence of complexes, written-order inputs.
    pub fn apply(&self, seq: &[usize], written: &[SparseVec]) -> Result<SparseVec> {
        let n = seq.len() - 1;
        let (cat, offsets) = self.concat(seq);
        let mut xs = Vec::new();
        let mut degs = Vec::new();
        for i in 1..=n {
            let v = &written[n - i];
            let b = self.hom_basis(seq[i - 1], seq[i])?;
            let (o1, o2) = (offsets[i - 1], offsets[i]);
            let pos: PosElement = b.to_pos(v).into_iter().map(|((p, q), w)| ((p + o1, q + o2), w)).collect();
            degs.push(homogeneous_degree(&self.base, &cat, &pos)?);
            xs.push(pos);
        }
        let alphas: Vec<PosElement> = seq
            .iter()
            .zip(&offsets)
            .map(|(&e, &o)| self.complexes[e].alpha.iter().map(|((p, q), w)| ((p + o, q + o), w.clone())).collect())
            .collect();
        let base = &self.base;
        let op = |path: &[usize], inputs: &[SparseVec]| -> SparseVec {
            let objs: Vec<ShiftedObject> = path.iter().map(|&p| cat[p]).collect();
            apply_shifted(base, &objs, inputs)
        };
        let ev =
            TwistEval { len: cat.len(), max_arity: base.max_arity(), field: base.field(), op: &op, sign: &twist_sign };
        let ar: Vec<&PosElement> = alphas.iter().collect();
        let xr: Vec<&PosElement> = xs.iter().collect();
        let out = ev.run(&ar, &xr, &degs);
        let (o0, on) = (offsets[0], offsets[n]);
        let local: PosElement = out.into_iter().map(|((p, q), w)| ((p - o0, q - on), w)).collect();
        self.hom_basis(seq[0], seq[n])?.to_vec(&local)
    }
}

fn homogeneous_degree(c: &AInfInstance, cat: &[ShiftedObject], e: &PosElement) -> Result<i64> {
    let mut deg = None;
    for ((p, q), v) in e {
        for (i, _) in v {
            let d = shifted_degree(c, cat[*p], cat[*q], *i);
            match deg {
                None => deg = Some(d),
                Some(d0) if c.grading().eq(d0, d) => {}
                Some(_) => return Err(Error::Degree("inputs must be homogeneous".into())),
            }
        }
    }
    Ok(deg.unwrap_or(0))
}

/// Builds the twisted-complex pre-category on the given complexes, with
/// every operation up to the base truncation materialized.
pub fn build_pretr(base: Arc<AInfInstance>, complexes: Vec<TwistedComplex>) -> Result<PreTr> {
    let complexes: Vec<TwistedComplex> =
        complexes.into_iter().map(|e| TwistedComplex::new(e.name, e.objects, e.alpha)).collect();
    for e in &complexes {
        if !is_transversal_shifted(&base, &e.objects) {
            return Err(Error::NotTransversal(format!("{} is not a transversal sequence", e.name)));
        }
        if !e.mc_residual(&base)?.is_empty() {
            return Err(Error::MaurerCartan(format!("{} has a nonzero Maurer-Cartan residual", e.name)));
        }
    }
    let k = complexes.len();
    let n_max = base.max_arity();
    let concat_ok = |s: &[usize]| {
        let cat: Vec<ShiftedObject> = s.iter().flat_map(|&e| complexes[e].objects.iter().copied()).collect();
        is_transversal_shifted(&base, &cat)
    };
    let family = if base.is_full() {
        Family::Full
    } else {
        let mut set = BTreeSet::new();
        let mut stack: Vec<Vec<usize>> = (0..k).map(|e| vec![e]).collect();
        while let Some(s) = stack.pop() {
            if !concat_ok(&s) {
                continue;
            }
            if s.len() <= n_max {
                for e in 0..k {
                    let mut t = s.clone();
                    t.push(e);
                    stack.push(t);
                }
            }
            set.insert(s);
        }
        Family::Explicit(set)
    };
    let mut homs = BTreeMap::new();
    let mut spaces = BTreeMap::new();
    for e1 in 0..k {
        for e2 in 0..k {
            if !concat_ok(&[e1, e2]) {
                continue;
            }
            let (s1, s2) = (&complexes[e1].objects, &complexes[e2].objects);
            let pairs = (0..s1.len()).flat_map(|a| (0..s2.len()).map(move |b| (a, b))).collect();
            let b = ComponentBasis::new(&base, s1, s2, pairs)?;
            spaces.insert((e1, e2), b.space(&base, s1, s2)?);
            homs.insert((e1, e2), b);
        }
    }
    let names = complexes.iter().map(|e| e.name.clone()).collect();
    let instance = AInfInstance::new(base.field(), base.grading(), n_max, names, family, spaces)?;
    let mut out = PreTr { base, complexes, homs, instance };
    let mut inst = out.instance.clone();
    for len in 2..=n_max + 1 {
        for seq in inst.sequences(len) {
            let t = out.product_table(&seq)?;
            if !t.is_empty() {
                inst.set_op(&seq, t)?;
            }
        }
    }
    out.instance = inst;
    Ok(out)
}

impl PreTr {
    fn product_table(&self, seq: &[usize]) -> Result<Table> {
        let n = seq.len() - 1;
        let (cat, offsets) = self.concat(seq);
        let alphas: Vec<PosElement> = seq
            .iter()
            .zip(&offsets)
            .map(|(&e, &o)| self.complexes[e].alpha.iter().map(|((p, q), w)| ((p + o, q + o), w.clone())).collect())
            .collect();
        let mut xs = Vec::with_capacity(n);
        for i in 1..=n {
            let b = self.hom_basis(seq[i - 1], seq[i])?;
            let mut adj = vec![Vec::new(); cat.len()];
            for &(p, q) in b.pairs() {
                adj[p + offsets[i - 1]].push((q + offsets[i], b.offset_of(p, q).unwrap()));
            }
            xs.push(adj);
        }
        let out_basis = self.hom_basis(seq[0], seq[n])?;
        let (o0, on) = (offsets[0], offsets[n]);
        let out_offset = |s: usize, e: usize| {
            if s < o0 || e < on || s - o0 >= self.complexes[seq[0]].objects.len() {
                return None;
            }
            out_basis.offset_of(s - o0, e - on)
        };
        let base = self.base.as_ref();
        let op = |objs: &[ShiftedObject]| -> Option<(&Table, i64)> {
            let b: Vec<usize> = objs.iter().map(|o| o.base).collect();
            base.op(&b).map(|m| (m.entries(), shift_sign(objs)))
        };
        let degree = |p: usize, q: usize, i: usize| shifted_degree(base, cat[p], cat[q], i);
        let pt = PathTables {
            field: base.field(),
            max_arity: base.max_arity(),
            cat: &cat,
            alphas: alphas.iter().map(|a| PathTables::adjacency_alpha(cat.len(), a)).collect(),
            xs,
            out_offset: &out_offset,
            op: &op,
            degree: &degree,
            sign: &twist_sign,
        };
        Ok(pt.table())
    }
}

/// Builds operation tables of a twisted product by walking position paths
/// and reading the nonzero entries of the underlying operations, instead of
/// enumerating input tuples.
pub(crate) struct PathTables<'a> {
    pub field: Field,
    pub max_arity: usize,
    pub cat: &'a [ShiftedObject],
    /// Per block, `from -> [(to, vector)]`.
    pub alphas: Vec<Vec<Vec<(usize, &'a SparseVec)>>>,
    /// Per input, `from -> [(to, offset in the input basis)]`.
    pub xs: Vec<Vec<Vec<(usize, usize)>>>,
    /// Output offset of the component `(start, end)`.
    pub out_offset: &'a dyn Fn(usize, usize) -> Option<usize>,
    /// Operation on a shifted path with the sign exponent it carries.
    pub op: &'a dyn Fn(&[ShiftedObject]) -> Option<(&'a Table, i64)>,
    /// Degree of an input basis element on a component.
    pub degree: &'a dyn Fn(usize, usize, usize) -> i64,
    pub sign: &'a dyn Fn(&[usize], &[i64]) -> i64,
}

#[derive(Clone, Copy)]
enum Slot<'a> {
    Alpha(&'a SparseVec),
    X { offset: usize, from: usize, to: usize },
}

impl<'a> PathTables<'a> {
    pub fn adjacency_alpha(len: usize, e: &'a PosElement) -> Vec<Vec<(usize, &'a SparseVec)>> {
        let mut adj = vec![Vec::new(); len];
        for ((p, q), v) in e {
            if !v.is_empty() {
                adj[*p].push((*q, v));
            }
        }
        adj
    }

    pub fn table(&self) -> Table {
        let mut table = Table::new();
        let mut path = Vec::new();
        let mut slots = Vec::new();
        let mut ks = vec![0usize; self.xs.len() + 1];
        for s in 0..self.cat.len() {
            path.push(s);
            self.walk(0, s, &mut path, &mut slots, &mut ks, &mut table);
            path.pop();
        }
        table.retain(|_, v| !v.is_empty());
        table
    }

    fn walk(
        &self,
        i: usize,
        pos: usize,
        path: &mut Vec<usize>,
        slots: &mut Vec<Slot<'a>>,
        ks: &mut Vec<usize>,
        table: &mut Table,
    ) {
        let n = self.xs.len();
        if i == n {
            self.emit(path, slots, ks, table);
        } else if slots.len() + n - i <= self.max_arity {
            for &(q, offset) in &self.xs[i][pos] {
                slots.push(Slot::X { offset, from: pos, to: q });
                path.push(q);
                self.walk(i + 1, q, path, slots, ks, table);
                path.pop();
                slots.pop();
            }
        }
        if slots.len() + 1 + n - i <= self.max_arity {
            for &(q, v) in &self.alphas[i][pos] {
                slots.push(Slot::Alpha(v));
                path.push(q);
                ks[i] += 1;
                self.walk(i, q, path, slots, ks, table);
                ks[i] -= 1;
                path.pop();
                slots.pop();
            }
        }
    }

    fn emit(&self, path: &[usize], slots: &[Slot], ks: &[usize], table: &mut Table) {
        let k = slots.len();
        if k == 0 || k > self.max_arity {
            return;
        }
        let (start, end) = (path[0], *path.last().unwrap());
        let Some(out_off) = (self.out_offset)(start, end) else { return };
        let objs: Vec<ShiftedObject> = path.iter().map(|&p| self.cat[p]).collect();
        let Some((entries, extra)) = (self.op)(&objs) else { return };
        let mut degs = Vec::with_capacity(self.xs.len());
        let mut xkey = Vec::with_capacity(self.xs.len());
        'entry: for (key, out) in entries {
            let mut c = self.field.one();
            degs.clear();
            xkey.clear();
            // key is written order: key[w] belongs to source slot k - 1 - w.
            for (t, slot) in slots.iter().enumerate() {
                let idx = key[k - 1 - t];
                match slot {
                    Slot::Alpha(v) => match v.binary_search_by_key(&idx, |(j, _)| *j) {
                        Ok(p) => c = &c * &v[p].1,
                        Err(_) => continue 'entry,
                    },
                    Slot::X { offset, from, to } => {
                        degs.push((self.degree)(*from, *to, idx));
                        xkey.push(offset + idx);
                    }
                }
            }
            if ((self.sign)(ks, &degs) + extra).rem_euclid(2) == 1 {
                c = -c;
            }
            let w: Vec<usize> = xkey.iter().rev().copied().collect();
            let shifted: SparseVec = out.iter().map(|(j, x)| (out_off + j, x.clone())).collect();
            let cur = table.entry(w).or_default();
            *cur = sparse_axpy(cur, &c, &shifted);
        }
    }
}

/// Sign exponent carried by `f_k` on a path of shifted objects.
pub fn functor_shift_sign(seq: &[ShiftedObject]) -> i64 {
    (seq.len() as i64 - 2) * seq.last().map_or(0, |o| o.shift)
}

/// The functor induced on shift categories with the same objects.
pub fn shift_functor(f: &AInfFunctor, src: &ShiftCategory, tgt: &ShiftCategory) -> Result<AInfFunctor> {
    let map: Vec<usize> = src
        .objects
        .iter()
        .map(|o| {
            let image = ShiftedObject { base: f.object_map()[o.base], shift: o.shift };
            tgt.index(image)
                .ok_or_else(|| Error::Invalid(format!("{} has no image in the target window", o.name(f.source()))))
        })
        .collect::<Result<_>>()?;
    let mut out = AInfFunctor::new(Arc::new(src.instance.clone()), Arc::new(tgt.instance.clone()), map)?;
    for len in 2..=src.instance.max_arity() + 1 {
        for seq in src.instance.sequences(len) {
            let objs: Vec<ShiftedObject> = seq.iter().map(|&i| src.objects[i]).collect();
            let base: Vec<usize> = objs.iter().map(|o| o.base).collect();
            let Some(op) = f.comp(&base) else { continue };
            let neg = functor_shift_sign(&objs).rem_euclid(2) == 1;
            let t: Table = op
                .entries()
                .iter()
                .map(|(k, v)| (k.clone(), if neg { v.iter().map(|(i, x)| (*i, -x)).collect() } else { v.clone() }))
                .collect();
            out.set_comp(&seq, t)?;
        }
    }
    Ok(out)
}

/// Sign exponent of `f_{n+K}(α_n^{k_n}, x_n, …, x_1, α_0^{k_0})` in an induced
/// functor, `K = Σ k_i`. With inputs it agrees with the product sign. With none
/// it is `K(K+1)/2 + 1`, so `F_*(α) = Σ (-1)^{K(K+1)/2+1} f_K(α, …, α)`.
pub fn functor_twist_sign(ks: &[usize], degs: &[i64]) -> i64 {
    if degs.is_empty() {
        let k = ks.iter().sum::<usize>() as i64;
        k * (k + 1) / 2 + 1
    } else {
        twist_sign(ks, degs)
    }
}

/// Image of a twisted complex: `(F(S), Σ_k ± f_k(α, …, α))`.
pub fn pushforward_complex(f: &AInfFunctor, e: &TwistedComplex) -> Result<TwistedComplex> {
    pushforward_complex_with(f, e, &functor_twist_sign)
}

fn functor_path_op<'a>(
    f: &'a AInfFunctor,
    cat: &'a [ShiftedObject],
) -> impl Fn(&[usize], &[SparseVec]) -> SparseVec + 'a {
    move |path: &[usize], inputs: &[SparseVec]| {
        let objs: Vec<ShiftedObject> = path.iter().map(|&p| cat[p]).collect();
        let base: Vec<usize> = objs.iter().map(|o| o.base).collect();
        let v = f.apply(&base, inputs);
        if functor_shift_sign(&objs).rem_euclid(2) == 1 {
            v.into_iter().map(|(i, x)| (i, -x)).collect()
        } else {
            v
        }
    }
}

pub(crate) fn pushforward_complex_with(
    f: &AInfFunctor,
    e: &TwistedComplex,
    sign: &dyn Fn(&[usize], &[i64]) -> i64,
) -> Result<TwistedComplex> {
    let src = f.source();
    let op = functor_path_op(f, &e.objects);
    let ev = TwistEval { len: e.objects.len(), max_arity: src.max_arity(), field: src.field(), op: &op, sign };
    let alpha = ev.run(&[&e.alpha], &[], &[]);
    let objects = e.objects.iter().map(|o| ShiftedObject { base: f.object_map()[o.base], shift: o.shift }).collect();
    Ok(TwistedComplex::new(format!("F({})", e.name), objects, alpha))
}

/// The functor induced on twisted complexes. The target pre-category is
/// built on the images of the source complexes, in the same order.
pub fn induced_pretr_functor(f: &AInfFunctor, src: &PreTr) -> Result<(PreTr, AInfFunctor)> {
    induced_with(f, src, &functor_twist_sign)
}

pub(crate) fn induced_with(
    f: &AInfFunctor,
    src: &PreTr,
    sign: &dyn Fn(&[usize], &[i64]) -> i64,
) -> Result<(PreTr, AInfFunctor)> {
    if !Arc::ptr_eq(f.source(), src.base()) && !f.source().same_data(src.base()) {
        return Err(Error::Invalid("functor source differs from the pre-tr base".into()));
    }
    let images = src.complexes().iter().map(|e| pushforward_complex_with(f, e, sign)).collect::<Result<Vec<_>>>()?;
    for e in &images {
        if !e.mc_residual(f.target())?.is_empty() {
            return Err(Error::MaurerCartan(format!("{} is not a Maurer-Cartan image", e.name)));
        }
    }
    let tgt = build_pretr(f.target().clone(), images)?;
    let k = src.complexes().len();
    let si = Arc::new(src.instance().clone());
    let ti = Arc::new(tgt.instance().clone());
    let mut out = AInfFunctor::new(si.clone(), ti, (0..k).collect())?;
    let base = f.source().as_ref();
    for len in 2..=si.max_arity() + 1 {
        for seq in si.sequences(len) {
            let n = seq.len() - 1;
            let (cat, offsets) = src.concat(&seq);
            let alphas: Vec<PosElement> = seq
                .iter()
                .zip(&offsets)
                .map(|(&e, &o)| src.complexes[e].alpha.iter().map(|((p, q), w)| ((p + o, q + o), w.clone())).collect())
                .collect();
            let mut xs = Vec::with_capacity(n);
            for i in 1..=n {
                let b = src.hom_basis(seq[i - 1], seq[i])?;
                let mut adj = vec![Vec::new(); cat.len()];
                for &(p, q) in b.pairs() {
                    adj[p + offsets[i - 1]].push((q + offsets[i], b.offset_of(p, q).unwrap()));
                }
                xs.push(adj);
            }
            let out_basis = tgt.hom_basis(seq[0], seq[n])?;
            let (o0, on) = (offsets[0], offsets[n]);
            let len0 = src.complexes[seq[0]].objects.len();
            let out_offset = |s: usize, e: usize| {
                if s < o0 || e < on || s - o0 >= len0 {
                    return None;
                }
                out_basis.offset_of(s - o0, e - on)
            };
            let op = |objs: &[ShiftedObject]| -> Option<(&Table, i64)> {
                let b: Vec<usize> = objs.iter().map(|o| o.base).collect();
                f.comp(&b).map(|m| (m.entries(), functor_shift_sign(objs)))
            };
            let degree = |p: usize, q: usize, i: usize| shifted_degree(base, cat[p], cat[q], i);
            let pt = PathTables {
                field: base.field(),
                max_arity: base.max_arity(),
                cat: &cat,
                alphas: alphas.iter().map(|a| PathTables::adjacency_alpha(cat.len(), a)).collect(),
                xs,
                out_offset: &out_offset,
                op: &op,
                degree: &degree,
                sign,
            };
            let t = pt.table();
            if !t.is_empty() {
                out.set_comp(&seq, t)?;
            }
        }
    }
    Ok((tgt, out))
}

/// Filtration level `b - a` of the hom components between two complexes.
fn component_level(b: &ComponentBasis, i: usize) -> i64 {
    let ((p, q), _) = b.component(i);
    q as i64 - p as i64
}

/// Violations of `m_1(F_r Hom) ⊆ F_r Hom` for `Hom(E1, E2)`.
pub fn filtration_violations(p: &PreTr, e1: usize, e2: usize) -> Result<Vec<usize>> {
    let b = p.hom_basis(e1, e2)?;
    let d = p.instance().differential(e1, e2);
    Ok((0..b.dim()).filter(|&i| d[i].iter().any(|(j, _)| component_level(b, *j) < component_level(b, i))).collect())
}

/// Comparison of one filtration subquotient under an induced functor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubquotientEntry {
    pub level: i64,
    pub dim: usize,
    pub quasi_iso: bool,
}

fn graded_piece(space: &GradedSpace, d: &[SparseVec], keep: &[usize]) -> Result<(GradedSpace, Vec<SparseVec>)> {
    let pos: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let basis = keep.iter().map(|&i| (space.name(i).to_string(), space.degree(i))).collect();
    let images =
        keep.iter().map(|&i| d[i].iter().filter_map(|(j, x)| pos.get(j).map(|&k| (k, x.clone()))).collect()).collect();
    Ok((GradedSpace::new(space.grading(), basis)?, images))
}

/// For each filtration level of `Hom(E1, E2)`, whether the linear part of
/// the induced functor is a quasi-isomorphism on the subquotient.
pub fn subquotient_check(
    src: &PreTr,
    tgt: &PreTr,
    f: &AInfFunctor,
    e1: usize,
    e2: usize,
) -> Result<Vec<SubquotientEntry>> {
    let (bs, bt) = (src.hom_basis(e1, e2)?, tgt.hom_basis(e1, e2)?);
    let (ss, st) = (src.instance().hom(e1, e2)?, tgt.instance().hom(e1, e2)?);
    let (ds, dt) = (src.instance().differential(e1, e2), tgt.instance().differential(e1, e2));
    let phi = f.linear_part(e1, e2);
    let levels: BTreeSet<i64> =
        (0..bs.dim()).map(|i| component_level(bs, i)).chain((0..bt.dim()).map(|i| component_level(bt, i))).collect();
    let mut out = Vec::new();
    for r in levels {
        let ks: Vec<usize> = (0..bs.dim()).filter(|&i| component_level(bs, i) == r).collect();
        let kt: Vec<usize> = (0..bt.dim()).filter(|&i| component_level(bt, i) == r).collect();
        let (us, dus) = graded_piece(ss, &ds, &ks)?;
        let (ut, dut) = graded_piece(st, &dt, &kt)?;
        let pos: BTreeMap<usize, usize> = kt.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let phi_r: Vec<SparseVec> = ks
            .iter()
            .map(|&i| phi[i].iter().filter_map(|(j, x)| pos.get(j).map(|&k| (k, x.clone()))).collect())
            .collect();
        let quasi_iso = crate::precat::is_qis_of_complexes(src.base().field(), &us, &dus, &ut, &dut, &phi_r)?;
        out.push(SubquotientEntry { level: r, dim: ks.len(), quasi_iso });
    }
    Ok(out)
}

/// A filtered A∞-morphism between nilpotent algebras.
#[derive(Clone, Debug)]
pub struct FilteredMorphism {
    pub source: Arc<NilpotentAInf>,
    pub target: Arc<NilpotentAInf>,
    pub functor: AInfFunctor,
}

impl FilteredMorphism {
    /// Validates the functor equations and the filtration condition.
    pub fn new(
        source: Arc<NilpotentAInf>,
        target: Arc<NilpotentAInf>,
        functor: AInfFunctor,
    ) -> Result<FilteredMorphism> {
        let f = FilteredMorphism { source, target, functor };
        if let Some(v) = crate::ainf::check_functor(&f.functor).first() {
            return Err(Error::Relation(format!("not an A∞-morphism: {v}")));
        }
        for (seq, op) in f.functor.comps() {
            for (key, v) in op.entries() {
                let w: usize = key.iter().map(|&i| f.source.weights[i]).sum();
                if v.iter().any(|(o, _)| f.target.weights[*o] < w) {
                    return Err(Error::Invalid(format!(
                        "component of arity {} does not preserve the filtration",
                        seq.len() - 1
                    )));
                }
            }
        }
        Ok(f)
    }

    /// The strict morphism with linear part given by basis images.
    pub fn strict(
        source: Arc<NilpotentAInf>,
        target: Arc<NilpotentAInf>,
        images: Vec<SparseVec>,
    ) -> Result<FilteredMorphism> {
        let mut func = AInfFunctor::new(Arc::new(source.algebra.clone()), Arc::new(target.algebra.clone()), vec![0])?;
        let t: Table =
            images.into_iter().enumerate().filter(|(_, v)| !v.is_empty()).map(|(i, v)| (vec![i], v)).collect();
        func.set_comp(&[0, 0], t)?;
        FilteredMorphism::new(source, target, func)
    }

    /// `f_*(α) = Σ_k f_k(α, …, α)`.
    pub fn pushforward(&self, alpha: &SparseVec) -> SparseVec {
        let mut out: SparseVec = Vec::new();
        let one = self.source.field().one();
        for k in 1..=self.source.algebra.max_arity() {
            let t = self.functor.apply(&vec![0; k + 1], &vec![alpha.clone(); k]);
            out = sparse_axpy(&out, &one, &t);
        }
        out
    }

    /// Whether `f_1` is a quasi-isomorphism on every filtration subquotient.
    pub fn is_filtered_qis(&self) -> Result<bool> {
        let (s, t) = (&self.source, &self.target);
        let (ss, st) = (s.algebra.hom(0, 0)?, t.algebra.hom(0, 0)?);
        let (ds, dt) = (s.algebra.differential(0, 0), t.algebra.differential(0, 0));
        let phi = self.functor.linear_part(0, 0);
        for r in 1..s.length.max(t.length) {
            let ks: Vec<usize> = (0..s.dim()).filter(|&i| s.weights[i] == r).collect();
            let kt: Vec<usize> = (0..t.dim()).filter(|&i| t.weights[i] == r).collect();
            let (us, dus) = graded_piece(ss, &ds, &ks)?;
            let (ut, dut) = graded_piece(st, &dt, &kt)?;
            let pos: BTreeMap<usize, usize> = kt.iter().enumerate().map(|(k, &i)| (i, k)).collect();
            let phi_r: Vec<SparseVec> = ks
                .iter()
                .map(|&i| phi[i].iter().filter_map(|(j, x)| pos.get(j).map(|&k| (k, x.clone()))).collect())
                .collect();
            if !crate::precat::is_qis_of_complexes(s.field(), &us, &dus, &ut, &dut, &phi_r)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Result of [`mc_lift`]: `α` in the source and `h: f_*(α) → β` in the target.
#[derive(Clone, Debug, PartialEq)]
pub struct McLift {
    pub alpha: SparseVec,
    pub gauge: SparseVec,
}

fn weight_part(v: &SparseVec, weights: &[usize], r: usize) -> SparseVec {
    v.iter().filter(|(i, _)| weights[*i] == r).cloned().collect()
}

/// Lifts a Maurer–Cartan element `β` of the target along a filtered
/// quasi-isomorphism, one filtration weight at a time.
pub fn mc_lift(f: &FilteredMorphism, beta: &SparseVec) -> Result<McLift> {
    let (s, t) = (&f.source, &f.target);
    if !t.is_mc(beta)? {
        return Err(Error::MaurerCartan("β is not a Maurer-Cartan element".into()));
    }
    let field = s.field();
    let residual = |a: &SparseVec, h: &SparseVec| -> Result<(SparseVec, SparseVec)> {
        Ok((s.mc_residual(a)?, t.gauge_residual(&f.pushforward(a), beta, h)?))
    };
    let mut alpha: SparseVec = Vec::new();
    let mut h: SparseVec = Vec::new();
    for r in 1..s.length.max(t.length) {
        let (r0, g0) = residual(&alpha, &h)?;
        if (1..r).any(|w| !weight_part(&r0, &s.weights, w).is_empty() || !weight_part(&g0, &t.weights, w).is_empty()) {
            return Err(Error::Obstruction(format!("lower weights not solved before weight {r}")));
        }
        let rows_s: Vec<usize> = (0..s.dim()).filter(|&i| s.weights[i] == r).collect();
        let rows_t: Vec<usize> = (0..t.dim()).filter(|&i| t.weights[i] == r).collect();
        let row_of = |v: &SparseVec, g: &SparseVec| -> SparseVec {
            let mut out: SparseVec = Vec::new();
            for (k, &i) in rows_s.iter().enumerate() {
                if let Ok(p) = v.binary_search_by_key(&i, |(j, _)| *j) {
                    out.push((k, v[p].1.clone()));
                }
            }
            for (k, &i) in rows_t.iter().enumerate() {
                if let Ok(p) = g.binary_search_by_key(&i, |(j, _)| *j) {
                    out.push((rows_s.len() + k, g[p].1.clone()));
                }
            }
            out
        };
        let rhs = row_of(&r0, &g0);
        if rhs.is_empty() {
            continue;
        }
        let ua = s.graded_piece(r, 1);
        let uh = t.graded_piece(r, 0);
        let mut cols = Vec::new();
        for &i in &ua {
            let a1 = sparse_axpy(&alpha, &field.one(), &vec![(i, field.one())]);
            let (r1, g1) = residual(&a1, &h)?;
            cols.push(sparse_axpy(&row_of(&r1, &g1), &field.int(-1), &rhs));
        }
        for &j in &uh {
            let h1 = sparse_axpy(&h, &field.one(), &vec![(j, field.one())]);
            let (r1, g1) = residual(&alpha, &h1)?;
            cols.push(sparse_axpy(&row_of(&r1, &g1), &field.int(-1), &rhs));
        }
        let m = crate::linalg::Matrix::from_cols(field, rows_s.len() + rows_t.len(), &cols);
        let neg: SparseVec = rhs.iter().map(|(i, x)| (*i, -x)).collect();
        let sol =
            m.solve_sparse(&neg).ok_or_else(|| Error::Obstruction(format!("no Maurer-Cartan lift at weight {r}")))?;
        for (k, x) in sol {
            if k < ua.len() {
                alpha = sparse_axpy(&alpha, &x, &vec![(ua[k], field.one())]);
            } else {
                h = sparse_axpy(&h, &x, &vec![(uh[k - ua.len()], field.one())]);
            }
        }
    }
    if !s.is_mc(&alpha)? || !t.check_gauge(&f.pushforward(&alpha), beta, &h)? {
        return Err(Error::Obstruction("lifted data failed validation".into()));
    }
    Ok(McLift { alpha, gauge: h })
}

/// The bridge algebra between `End_+(X[1])` and `End_+(Y)` for morphisms
/// `F_i: X_i → Y_i`: the span of `Hom(X_i[1], X_j[1])`, `Hom(Y_i, Y_j)` and
/// `Hom(X_i[1], Y_j)` for `i < j` inside `End_+(X[1], Y)`, with products
/// twisted by `⊕ F_i`. Both projections are strict filtered morphisms.
#[derive(Clone, Debug)]
pub struct Bridge {
    pub algebra: Arc<NilpotentAInf>,
    pub seq: Vec<ShiftedObject>,
    pub basis: ComponentBasis,
    pub a1: EndPlus,
    pub a2: EndPlus,
    pub pi1: FilteredMorphism,
    pub pi2: FilteredMorphism,
}

pub fn bridge_algebra(
    c: &AInfInstance,
    xs: &[ShiftedObject],
    ys: &[ShiftedObject],
    fs: &[SparseVec],
) -> Result<Bridge> {
    let n = xs.len();
    if ys.len() != n || fs.len() != n {
        return Err(Error::Invalid("bridge needs one morphism per pair".into()));
    }
    let g = c.grading();
    let xs1: Vec<ShiftedObject> = xs.iter().map(|o| ShiftedObject::new(g, o.base, o.shift + 1)).collect();
    let seq: Vec<ShiftedObject> = xs1.iter().chain(ys).copied().collect();
    if !is_transversal_shifted(c, &seq) {
        return Err(Error::NotTransversal("(X_1, …, X_n, Y_1, …, Y_n) must be transversal".into()));
    }
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j));
            pairs.push((n + i, n + j));
            pairs.push((i, n + j));
        }
    }
    pairs.sort();
    let basis = ComponentBasis::new(c, &seq, &seq, pairs)?;
    let background: PosElement =
        fs.iter().enumerate().filter(|(_, v)| !v.is_empty()).map(|(i, v)| ((i, n + i), normalize(v.clone()))).collect();
    let algebra = positional_algebra(c, &seq, &basis, &background, c.max_arity())?;
    let weights = (0..basis.dim())
        .map(|i| {
            let ((p, q), _) = basis.component(i);
            (q % n.max(1)) - (p % n.max(1))
        })
        .collect();
    let algebra = Arc::new(NilpotentAInf { algebra, weights, length: n.max(1) });
    let a1 = end_plus(c, &xs1)?;
    let a2 = end_plus(c, ys)?;
    let mut im1 = Vec::with_capacity(basis.dim());
    let mut im2 = Vec::with_capacity(basis.dim());
    for i in 0..basis.dim() {
        let ((p, q), j) = basis.component(i);
        let one = c.field().one();
        im1.push(if q < n { vec![(a1.basis.offset_of(p, q).unwrap() + j, one.clone())] } else { Vec::new() });
        im2.push(if p >= n { vec![(a2.basis.offset_of(p - n, q - n).unwrap() + j, one)] } else { Vec::new() });
    }
    let pi1 = FilteredMorphism::strict(algebra.clone(), Arc::new(a1.nilpotent.clone()), im1)?;
    let pi2 = FilteredMorphism::strict(algebra.clone(), Arc::new(a2.nilpotent.clone()), im2)?;
    Ok(Bridge { algebra, seq, basis, a1, a2, pi1, pi2 })
}

/// Output of [`transport_mc`].
#[derive(Clone, Debug)]
pub struct Transport {
    /// Pre-tr on `[(X, α), (Y, π_2 β̃), (Y, β)]`.
    pub pretr: PreTr,
    /// `α` on `(X_1, …, X_n)`.
    pub alpha: PosElement,
    /// `G ∈ Hom((X, α), (Y, β))`.
    pub g: SparseVec,
    pub closed: bool,
    pub quasi_iso: bool,
    pub good: bool,
}

/// Given quasi-isomorphisms `F_i: X_i → Y_i` and a Maurer–Cartan `β` on
/// `(Y_1, …, Y_n)`, produces `α` on `(X_1, …, X_n)` and a quasi-isomorphism
/// `G: (X, α) → (Y, β)` through the bridge algebra.
pub fn transport_mc(
    c: Arc<AInfInstance>,
    xs: &[ShiftedObject],
    ys: &[ShiftedObject],
    fs: &[SparseVec],
    beta: &PosElement,
) -> Result<Transport> {
    let n = xs.len();
    let b = bridge_algebra(&c, xs, ys, fs)?;
    let beta_v = b.a2.basis.to_vec(beta)?;
    let lift = mc_lift(&b.pi2, &beta_v)?;
    let bt = b.basis.to_pos(&lift.alpha);
    let field = c.field();
    let mut alpha = PosElement::new();
    let mut beta_mid = PosElement::new();
    let mut g = PosElement::new();
    for (i, v) in fs.iter().enumerate() {
        if !v.is_empty() {
            g.insert((i, i), normalize(v.clone()));
        }
    }
    for ((p, q), v) in bt {
        let neg: SparseVec = v.iter().map(|(i, x)| (*i, -x)).collect();
        if q < n {
            alpha.insert((p, q), neg);
        } else if p >= n {
            beta_mid.insert((p - n, q - n), v);
        } else {
            g.insert((p, q - n), v);
        }
    }
    let e1 = TwistedComplex::new("E1", xs.to_vec(), alpha.clone());
    let e2 = TwistedComplex::new("E2", ys.to_vec(), beta_mid);
    let e3 = TwistedComplex::new("E3", ys.to_vec(), beta.clone());
    let pretr = build_pretr(c, vec![e1, e2, e3])?;
    let f_tot = pretr.hom_basis(0, 1)?.to_vec(&g)?;
    let h = pretr.hom_basis(1, 2)?.to_vec(&b.a2.basis.to_pos(&lift.gauge))?;
    let corr = if h.is_empty() { Vec::new() } else { pretr.apply(&[0, 1, 2], &[h, f_tot.clone()])? };
    let g_total = pretr.hom_basis(0, 2)?.to_vec(&pretr.hom_basis(0, 1)?.to_pos(&f_tot))?;
    let g_total = sparse_axpy(&g_total, &field.one(), &corr);
    let closed = pretr.instance().apply(&[0, 2], std::slice::from_ref(&g_total)).is_empty();
    let quasi_iso = closed && crate::precat::is_quasi_isomorphism(pretr.instance(), 0, 2, &g_total)?;
    let good = closed && is_good_qis(&pretr, 0, 2, &g_total)?;
    Ok(Transport { pretr, alpha, g: g_total, closed, quasi_iso, good })
}

/// Whether `f: E1 → E2` has equal-length complexes, vanishing components
/// below the diagonal and quasi-isomorphisms on the diagonal.
pub fn is_good_qis(p: &PreTr, e1: usize, e2: usize, f: &SparseVec) -> Result<bool> {
    let (s1, s2) = (&p.complexes()[e1].objects, &p.complexes()[e2].objects);
    if s1.len() != s2.len() {
        return Ok(false);
    }
    let comps = p.hom_basis(e1, e2)?.to_pos(f);
    if comps.iter().any(|((i, j), v)| i > j && !v.is_empty()) {
        return Ok(false);
    }
    let mut objects: Vec<ShiftedObject> = s1.iter().chain(s2).copied().collect();
    objects.sort();
    objects.dedup();
    let sc = build_on_objects(p.base(), objects)?;
    for i in 0..s1.len() {
        let v = comps.get(&(i, i)).cloned().unwrap_or_default();
        let (x, y) = (sc.index(s1[i]).unwrap(), sc.index(s2[i]).unwrap());
        match crate::precat::is_quasi_isomorphism(&sc.instance, x, y, &v) {
            Ok(true) => {}
            Ok(false) | Err(_) => return Ok(false),
        }
    }
    Ok(true)
}
