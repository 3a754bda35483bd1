//! A∞ instances, functors and homotopies with their defining equations.
//!
//! An operation on the object sequence `(X_0, …, X_n)` takes `n` inputs in
//! written order: written slot `w` lives in `Hom(X_{n-w-1}, X_{n-w})` and the
//! output lives in `Hom(X_0, X_n)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::graded::{compose_table, kappa, signed_table, table_add, GradedSpace, Grading, MultilinearOp, Table};
use crate::linalg::{Field, RowBasis, SparseVec};

/// Transversality family: which object sequences carry homs and operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    /// Every sequence is transversal (a genuine category).
    Full,
    /// An explicit subsequence-closed set containing every singleton.
    Explicit(BTreeSet<Vec<usize>>),
}

impl Family {
    /// Closes `seqs` under subsequences and adds singletons; returns the family
    /// together with the sequences that had to be added.
    pub fn closure(n_objects: usize, seqs: impl IntoIterator<Item = Vec<usize>>) -> (Family, Vec<Vec<usize>>) {
        let given: BTreeSet<Vec<usize>> = seqs.into_iter().filter(|s| !s.is_empty()).collect();
        let mut all = BTreeSet::new();
        for x in 0..n_objects {
            all.insert(vec![x]);
        }
        let mut stack: Vec<Vec<usize>> = given.iter().cloned().collect();
        while let Some(s) = stack.pop() {
            if s.is_empty() || !all.insert(s.clone()) {
                continue;
            }
            if s.len() > 1 {
                for k in 0..s.len() {
                    let mut t = s.clone();
                    t.remove(k);
                    stack.push(t);
                }
            }
        }
        let added = all.iter().filter(|s| !given.contains(*s) && s.len() > 1).cloned().collect();
        (Family::Explicit(all), added)
    }

    /// Validates an explicit family: singletons present, closed under deletion.
    pub fn validate(&self, n_objects: usize) -> Result<()> {
        if let Family::Explicit(set) = self {
            for x in 0..n_objects {
                if !set.contains(&vec![x]) {
                    return Err(Error::NotClosed(format!("[{x}]")));
                }
            }
            for s in set {
                if s.iter().any(|&x| x >= n_objects) {
                    return Err(Error::Invalid(format!("sequence {s:?} names unknown objects")));
                }
                if s.len() > 1 {
                    for k in 0..s.len() {
                        let mut t = s.clone();
                        t.remove(k);
                        if !set.contains(&t) {
                            return Err(Error::NotClosed(format!("{t:?}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A finite, arity-truncated non-unital A∞-(pre-)category.
#[derive(Clone, Debug)]
pub struct AInfInstance {
    field: Field,
    grading: Grading,
    max_arity: usize,
    objects: Vec<String>,
    family: Family,
    homs: BTreeMap<(usize, usize), Arc<GradedSpace>>,
    ops: BTreeMap<Vec<usize>, MultilinearOp>,
}

impl AInfInstance {
    /// Creates an instance without operations. `homs` must cover exactly the
    /// transversal pairs; missing pairs of a full family default to zero.
    pub fn new(
        field: Field,
        grading: Grading,
        max_arity: usize,
        objects: Vec<String>,
        family: Family,
        mut homs: BTreeMap<(usize, usize), GradedSpace>,
    ) -> Result<AInfInstance> {
        family.validate(objects.len())?;
        let names: BTreeSet<&String> = objects.iter().collect();
        if names.len() != objects.len() {
            return Err(Error::Invalid("duplicate object names".into()));
        }
        let n = objects.len();
        let mut out = BTreeMap::new();
        for x in 0..n {
            for y in 0..n {
                let tr = match &family {
                    Family::Full => true,
                    Family::Explicit(s) => s.contains(&vec![x, y]),
                };
                match homs.remove(&(x, y)) {
                    Some(h) if tr => {
                        if h.grading() != grading {
                            return Err(Error::Invalid("hom space with a different grading".into()));
                        }
                        out.insert((x, y), Arc::new(h));
                    }
                    Some(_) => {
                        return Err(Error::NotTransversal(format!("hom given on ({}, {})", objects[x], objects[y])))
                    }
                    None if tr => {
                        out.insert((x, y), Arc::new(GradedSpace::zero(grading)));
                    }
                    None => {}
                }
            }
        }
        if let Some(((x, y), _)) = homs.into_iter().next() {
            return Err(Error::Invalid(format!("hom on unknown pair ({x}, {y})")));
        }
        Ok(AInfInstance { field, grading, max_arity, objects, family, homs: out, ops: BTreeMap::new() })
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn object_index(&self, name: &str) -> Option<usize> {
        self.objects.iter().position(|o| o == name)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_full(&self) -> bool {
        self.family == Family::Full
    }

    pub fn ops(&self) -> &BTreeMap<Vec<usize>, MultilinearOp> {
        &self.ops
    }

    pub fn homs(&self) -> &BTreeMap<(usize, usize), Arc<GradedSpace>> {
        &self.homs
    }

    /// Returns a copy with a different truncation arity (higher operations are dropped).
    pub fn with_max_arity(&self, n: usize) -> AInfInstance {
        let mut out = self.clone();
        out.max_arity = n;
        out.ops.retain(|s, _| s.len() - 1 <= n);
        out
    }

    pub fn is_transversal(&self, seq: &[usize]) -> bool {
        if seq.is_empty() || seq.iter().any(|&x| x >= self.objects.len()) {
            return false;
        }
        match &self.family {
            Family::Full => true,
            Family::Explicit(s) => s.contains(seq),
        }
    }

    /// All transversal sequences of the given length, in lexicographic order.
    pub fn sequences(&self, len: usize) -> Vec<Vec<usize>> {
        match &self.family {
            Family::Full => {
                let n = self.objects.len();
                if len == 0 || n == 0 {
                    return Vec::new();
                }
                let mut out = Vec::new();
                let mut cur = vec![0usize; len];
                loop {
                    out.push(cur.clone());
                    let mut t = len;
                    loop {
                        if t == 0 {
                            return out;
                        }
                        t -= 1;
                        cur[t] += 1;
                        if cur[t] < n {
                            break;
                        }
                        cur[t] = 0;
                    }
                }
            }
            Family::Explicit(s) => s.iter().filter(|q| q.len() == len).cloned().collect(),
        }
    }

    pub fn hom(&self, x: usize, y: usize) -> Result<&Arc<GradedSpace>> {
        self.homs.get(&(x, y)).ok_or_else(|| Error::NotTransversal(format!("({}, {})", self.name(x), self.name(y))))
    }

    pub fn name(&self, x: usize) -> &str {
        self.objects.get(x).map(|s| s.as_str()).unwrap_or("?")
    }

    pub fn seq_names(&self, seq: &[usize]) -> Vec<String> {
        seq.iter().map(|&x| self.name(x).to_string()).collect()
    }

    /// Input spaces of an operation on `seq`, in written order.
    pub fn written_sources(&self, seq: &[usize]) -> Result<Vec<Arc<GradedSpace>>> {
        let n = seq.len() - 1;
        (0..n).map(|w| self.hom(seq[n - w - 1], seq[n - w]).cloned()).collect()
    }

    /// The operation `m_n` on `seq` (absent means zero).
    pub fn op(&self, seq: &[usize]) -> Option<&MultilinearOp> {
        self.ops.get(seq)
    }

    /// Sets `m_n` on `seq` from a table; validates transversality, arity and degree `2 - n`.
    pub fn set_op(&mut self, seq: &[usize], table: Table) -> Result<()> {
        let n = seq.len().saturating_sub(1);
        if n == 0 || n > self.max_arity {
            return Err(Error::Invalid(format!("operation arity {n} outside 1..={}", self.max_arity)));
        }
        if !self.is_transversal(seq) {
            return Err(Error::NotTransversal(format!("{:?}", self.seq_names(seq))));
        }
        let op = MultilinearOp::new(
            self.field,
            self.written_sources(seq)?,
            self.hom(seq[0], seq[n])?.clone(),
            2 - n as i64,
            table,
        )?;
        if op.is_zero() {
            self.ops.remove(seq);
        } else {
            self.ops.insert(seq.to_vec(), op);
        }
        Ok(())
    }

    /// Removes every operation of the given arity.
    pub fn clear_arity(&mut self, n: usize) {
        self.ops.retain(|s, _| s.len() != n + 1);
    }

    /// Sets an operation entry by basis names.
    pub fn set_entry(&mut self, seq: &[&str], inputs: &[&str], output: &[(i64, &str)]) -> Result<()> {
        let seq: Vec<usize> = seq
            .iter()
            .map(|s| self.object_index(s).ok_or_else(|| Error::Invalid(format!("unknown object {s}"))))
            .collect::<Result<_>>()?;
        let srcs = self.written_sources(&seq)?;
        if srcs.len() != inputs.len() {
            return Err(Error::Dimension { expected: srcs.len(), found: inputs.len() });
        }
        let key: Vec<usize> = inputs
            .iter()
            .zip(&srcs)
            .map(|(n, s)| s.index_of(n).ok_or_else(|| Error::Invalid(format!("unknown basis element {n}"))))
            .collect::<Result<_>>()?;
        let target = self.hom(seq[0], *seq.last().unwrap())?.clone();
        let v = crate::graded::vector(&target, self.field, output)?;
        let mut table = self.op(&seq).map(|o| o.entries().clone()).unwrap_or_default();
        table.remove(&key);
        if !v.is_empty() {
            table.insert(key, v);
        }
        self.set_op(&seq, table)
    }

    /// Restriction to a smaller family (used for pre-categories inside categories).
    pub fn restrict(&self, family: Family) -> Result<AInfInstance> {
        family.validate(self.objects.len())?;
        let mut out = self.clone();
        out.family = family;
        out.homs.retain(|(x, y), _| match &out.family {
            Family::Full => true,
            Family::Explicit(s) => s.contains(&vec![*x, *y]),
        });
        let fam = out.family.clone();
        out.ops.retain(|s, _| match &fam {
            Family::Full => true,
            Family::Explicit(set) => set.contains(s),
        });
        Ok(out)
    }

    /// True when `m_1` vanishes everywhere.
    pub fn is_minimal(&self) -> bool {
        self.ops.keys().all(|s| s.len() != 2)
    }

    /// Degree of a basis element of `Hom(x, y)`.
    pub fn basis_degree(&self, x: usize, y: usize, i: usize) -> i64 {
        self.homs[&(x, y)].degree(i)
    }

    /// Applies `m_n` on `seq` to vectors given in written order.
    pub fn apply(&self, seq: &[usize], inputs: &[SparseVec]) -> SparseVec {
        match self.op(seq) {
            Some(op) => op.evaluate_unchecked(inputs),
            None => Vec::new(),
        }
    }

    /// `m_1` on `Hom(x, y)` as images of basis vectors.
    pub fn differential(&self, x: usize, y: usize) -> Vec<SparseVec> {
        let dim = self.homs[&(x, y)].dim();
        (0..dim).map(|i| self.apply(&[x, y], &[vec![(i, self.field.one())]])).collect()
    }

    /// True when both instances carry identical data.
    pub fn same_data(&self, o: &AInfInstance) -> bool {
        self.field == o.field
            && self.grading == o.grading
            && self.objects == o.objects
            && self.family == o.family
            && self.homs.len() == o.homs.len()
            && self.homs.iter().zip(&o.homs).all(|((k, a), (l, b))| k == l && a.same_as(b))
            && self.ops == o.ops
    }
}

/// One failed equation, evaluated on a basis tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub equation: &'static str,
    pub seq: Vec<usize>,
    pub inputs: usize,
    pub tuple: Vec<usize>,
    pub residual: SparseVec,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r: Vec<String> = self.residual.iter().map(|(i, x)| format!("{x}*e{i}")).collect();
        write!(
            f,
            "{} with {} inputs on {:?}, tuple {:?}: {}",
            self.equation,
            self.inputs,
            self.seq,
            self.tuple,
            r.join(" + ")
        )
    }
}

/// Written block `[w0, w1)` of a sequence carrying `k` inputs, as a path subsequence.
pub(crate) fn block_seq(seq: &[usize], w0: usize, w1: usize) -> Vec<usize> {
    let k = seq.len() - 1;
    seq[k - w1..=k - w0].to_vec()
}

/// The sequence with the interior of written block `[w0, w1)` removed.
pub(crate) fn contract_seq(seq: &[usize], w0: usize, w1: usize) -> Vec<usize> {
    let k = seq.len() - 1;
    let mut out = seq[..=k - w1].to_vec();
    out.extend_from_slice(&seq[k - w0..]);
    out
}

/// Degrees of a basis tuple in written order.
pub(crate) fn tuple_degrees(srcs: &[Arc<GradedSpace>], key: &[usize]) -> Vec<i64> {
    key.iter().zip(srcs).map(|(i, s)| s.degree(*i)).collect()
}

/// Signed residual of the A∞ relation on `seq`, collecting terms `m_i(…, m_j(…), …)`.
/// `include(i, j)` filters which pairs participate.
pub fn relation_table(a: &AInfInstance, seq: &[usize], include: &dyn Fn(usize, usize) -> bool) -> Result<Table> {
    let k = seq.len() - 1;
    let srcs = a.written_sources(seq)?;
    let mut total = Table::new();
    let one = a.field.one();
    for j in 1..=k {
        let i = k + 1 - j;
        if !include(i, j) {
            continue;
        }
        for l in 0..i {
            let inner_seq = block_seq(seq, l, l + j);
            let outer_seq = contract_seq(seq, l, l + j);
            let (Some(inner), Some(outer)) = (a.op(&inner_seq), a.op(&outer_seq)) else {
                continue;
            };
            let mut inners: Vec<Option<&MultilinearOp>> = vec![None; i];
            inners[l] = Some(inner);
            let t = compose_table(outer, &inners);
            let (ii, jj, ll) = (i as i64, j as i64, l as i64);
            let t = signed_table(t, |key| {
                let left: i64 = tuple_degrees(&srcs[..l], &key[..l]).iter().sum();
                jj * left + ll * (jj - 1) + jj * (ii - 1)
            });
            for (key, v) in t {
                table_add(&mut total, key, &one, &v);
            }
        }
    }
    Ok(total)
}

/// Checks the A∞ relation for all input counts `1..=N`.
pub fn check_relations(a: &AInfInstance) -> Vec<Violation> {
    check_relations_up_to(a, a.max_arity)
}

/// Checks the A∞ relation for all input counts `1..=max_inputs`; operations above the
/// truncation arity count as zero.
pub fn check_relations_up_to(a: &AInfInstance, max_inputs: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    for k in 1..=max_inputs {
        for seq in a.sequences(k + 1) {
            let t = relation_table(a, &seq, &|_, _| true).expect("transversal sequence");
            for (tuple, residual) in t {
                out.push(Violation { equation: "relation", seq: seq.clone(), inputs: k, tuple, residual });
            }
        }
    }
    out
}

/// Exponent `γ_i` of the functor equation for a composition with written block sizes `sizes`.
pub fn gamma(sizes: &[usize], degs: &[i64]) -> i64 {
    let i = sizes.len();
    let mut g = 0i64;
    let mut start = 0usize;
    for p in 0..i.saturating_sub(1) {
        g += (i - 1 - p) as i64 * (sizes[p] as i64 - 1);
        let nu: i64 = sizes[p + 1..].iter().map(|&c| c as i64 - 1).sum();
        let bd: i64 = degs[start..start + sizes[p]].iter().sum();
        g += nu * bd;
        start += sizes[p];
    }
    g
}

/// All compositions of `n` into positive parts, in lexicographic order.
pub fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// An A∞-functor between instances.
#[derive(Clone, Debug)]
pub struct AInfFunctor {
    source: Arc<AInfInstance>,
    target: Arc<AInfInstance>,
    object_map: Vec<usize>,
    comps: BTreeMap<Vec<usize>, MultilinearOp>,
}

impl AInfFunctor {
    /// Functor with no components; the object map must preserve transversality.
    pub fn new(source: Arc<AInfInstance>, target: Arc<AInfInstance>, object_map: Vec<usize>) -> Result<AInfFunctor> {
        if object_map.len() != source.n_objects() || object_map.iter().any(|&y| y >= target.n_objects()) {
            return Err(Error::Invalid("object map does not fit the instances".into()));
        }
        if source.field != target.field {
            return Err(Error::Invalid("source and target over different fields".into()));
        }
        let f = AInfFunctor { source, target, object_map, comps: BTreeMap::new() };
        let n = f.source.max_arity + 1;
        for len in 1..=n {
            for s in f.source.sequences(len) {
                if !f.target.is_transversal(&f.map_seq(&s)) {
                    return Err(Error::NotTransversal(format!("image of {:?}", f.source.seq_names(&s))));
                }
            }
        }
        Ok(f)
    }

    /// Identity functor of an instance.
    pub fn identity(a: Arc<AInfInstance>) -> AInfFunctor {
        let mut f = AInfFunctor::new(a.clone(), a.clone(), (0..a.n_objects()).collect()).unwrap();
        for ((x, y), h) in a.homs() {
            let id = MultilinearOp::identity(a.field, h.clone());
            if !id.is_zero() {
                f.comps.insert(vec![*x, *y], id);
            }
        }
        f
    }

    pub fn source(&self) -> &Arc<AInfInstance> {
        &self.source
    }

    pub fn target(&self) -> &Arc<AInfInstance> {
        &self.target
    }

    pub fn object_map(&self) -> &[usize] {
        &self.object_map
    }

    pub fn comps(&self) -> &BTreeMap<Vec<usize>, MultilinearOp> {
        &self.comps
    }

    pub fn map_seq(&self, seq: &[usize]) -> Vec<usize> {
        seq.iter().map(|&x| self.object_map[x]).collect()
    }

    pub fn comp(&self, seq: &[usize]) -> Option<&MultilinearOp> {
        self.comps.get(seq)
    }

    /// Sets `f_n` on `seq`, degree `1 - n`.
    pub fn set_comp(&mut self, seq: &[usize], table: Table) -> Result<()> {
        let n = seq.len() - 1;
        if n == 0 || n > self.source.max_arity || !self.source.is_transversal(seq) {
            return Err(Error::Invalid(format!("bad component index {seq:?}")));
        }
        let op = MultilinearOp::new(
            self.source.field,
            self.source.written_sources(seq)?,
            self.target.hom(self.object_map[seq[0]], self.object_map[seq[n]])?.clone(),
            1 - n as i64,
            table,
        )?;
        if op.is_zero() {
            self.comps.remove(seq);
        } else {
            self.comps.insert(seq.to_vec(), op);
        }
        Ok(())
    }

    /// Same functor data with a replaced source or target instance (same objects and homs).
    pub fn rebase(&self, source: Arc<AInfInstance>, target: Arc<AInfInstance>) -> AInfFunctor {
        AInfFunctor { source, target, object_map: self.object_map.clone(), comps: self.comps.clone() }
    }

    /// Applies `f_n` on `seq` to written-order vectors.
    pub fn apply(&self, seq: &[usize], inputs: &[SparseVec]) -> SparseVec {
        match self.comp(seq) {
            Some(op) => op.evaluate_unchecked(inputs),
            None => Vec::new(),
        }
    }

    /// Componentwise equality of data.
    pub fn same_components(&self, o: &AInfFunctor) -> bool {
        self.object_map == o.object_map && self.comps == o.comps
    }

    /// `f_1` on the pair `(x, y)` as images of basis vectors.
    pub fn linear_part(&self, x: usize, y: usize) -> Vec<SparseVec> {
        let dim = self.source.homs[&(x, y)].dim();
        (0..dim).map(|i| self.apply(&[x, y], &[vec![(i, self.source.field.one())]])).collect()
    }
}

/// LHS minus RHS of the functor equation on `seq`. `include_lhs(i)`/`include_rhs(s, r)` filter terms.
pub fn functor_table(
    f: &AInfFunctor,
    seq: &[usize],
    include_lhs: &dyn Fn(&[usize]) -> bool,
    include_rhs: &dyn Fn(usize, usize) -> bool,
) -> Result<Table> {
    let a = &f.source;
    let b = &f.target;
    let k = seq.len() - 1;
    let srcs = a.written_sources(seq)?;
    let one = a.field.one();
    let mone = a.field.int(-1);
    let mut total = Table::new();
    for sizes in compositions(k) {
        if !include_lhs(&sizes) {
            continue;
        }
        let i = sizes.len();
        let mut bounds = vec![0usize];
        for c in &sizes {
            bounds.push(bounds.last().unwrap() + c);
        }
        let outer_seq: Vec<usize> = (0..=i).rev().map(|p| f.object_map[seq[k - bounds[p]]]).collect();
        let Some(outer) = b.op(&outer_seq) else { continue };
        let mut inner_ops = Vec::with_capacity(i);
        for p in 0..i {
            match f.comp(&block_seq(seq, bounds[p], bounds[p + 1])) {
                Some(op) => inner_ops.push(Some(op)),
                None => break,
            }
        }
        if inner_ops.len() < i {
            continue;
        }
        let t = compose_table(outer, &inner_ops);
        let t = signed_table(t, |key| gamma(&sizes, &tuple_degrees(&srcs, key)));
        for (key, v) in t {
            table_add(&mut total, key, &one, &v);
        }
    }
    for s in 1..=k {
        let r = k + 1 - s;
        if !include_rhs(s, r) {
            continue;
        }
        for j in 1..=s {
            let l = j - 1;
            let inner_seq = block_seq(seq, l, l + r);
            let outer_seq = contract_seq(seq, l, l + r);
            let (Some(inner), Some(outer)) = (a.op(&inner_seq), f.comp(&outer_seq)) else {
                continue;
            };
            let mut inners: Vec<Option<&MultilinearOp>> = vec![None; s];
            inners[l] = Some(inner);
            let t = compose_table(outer, &inners);
            let (rr, jj, ss) = (r as i64, j as i64, s as i64);
            let t = signed_table(t, |key| {
                let left: i64 = tuple_degrees(&srcs[..l], &key[..l]).iter().sum();
                rr * left + jj - 1 + rr * (ss - jj)
            });
            for (key, v) in t {
                table_add(&mut total, key, &mone, &v);
            }
        }
    }
    Ok(total)
}

/// Checks the functor equation for all input counts `1..=N`.
pub fn check_functor(f: &AInfFunctor) -> Vec<Violation> {
    check_functor_up_to(f, f.source.max_arity)
}

pub fn check_functor_up_to(f: &AInfFunctor, max_inputs: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    for k in 1..=max_inputs {
        for seq in f.source.sequences(k + 1) {
            let t = functor_table(f, &seq, &|_| true, &|_, _| true).expect("transversal sequence");
            for (tuple, residual) in t {
                out.push(Violation { equation: "functor", seq: seq.clone(), inputs: k, tuple, residual });
            }
        }
    }
    out
}

/// Composite `G∘F` with `(GF)_n = Σ (-1)^{γ_i} g_i(f_{l_1} ⊗ … ⊗ f_{l_i})`.
pub fn compose_functors(f: &AInfFunctor, g: &AInfFunctor) -> Result<AInfFunctor> {
    if !Arc::ptr_eq(&f.target, &g.source) && !f.target.same_data(&g.source) {
        return Err(Error::Invalid("target of the first functor is not the source of the second".into()));
    }
    let a = f.source.clone();
    let object_map: Vec<usize> = f.object_map.iter().map(|&y| g.object_map[y]).collect();
    let mut out = AInfFunctor { source: a.clone(), target: g.target.clone(), object_map, comps: BTreeMap::new() };
    let one = a.field.one();
    for k in 1..=a.max_arity {
        for seq in a.sequences(k + 1) {
            let srcs = a.written_sources(&seq)?;
            let mut total = Table::new();
            for sizes in compositions(k) {
                let i = sizes.len();
                let mut bounds = vec![0usize];
                for c in &sizes {
                    bounds.push(bounds.last().unwrap() + c);
                }
                let outer_seq: Vec<usize> = (0..=i).rev().map(|p| f.object_map[seq[k - bounds[p]]]).collect();
                let Some(outer) = g.comp(&outer_seq) else { continue };
                let inner_ops: Vec<Option<&MultilinearOp>> =
                    (0..i).map(|p| f.comp(&block_seq(&seq, bounds[p], bounds[p + 1]))).collect();
                if inner_ops.iter().any(|o| o.is_none()) {
                    continue;
                }
                let t = compose_table(outer, &inner_ops);
                let t = signed_table(t, |key| gamma(&sizes, &tuple_degrees(&srcs, key)));
                for (key, v) in t {
                    table_add(&mut total, key, &one, &v);
                }
            }
            if !total.is_empty() {
                out.set_comp(&seq, total)?;
            }
        }
    }
    Ok(out)
}

/// Pieces of a bar composite `O(G_1(B_1), …, G_r(B_r))` used for sign bookkeeping.
#[derive(Clone, Copy, Debug)]
pub struct BarBlock {
    pub len: usize,
    /// Degree of the inner operation; `None` marks an identity slot.
    pub op_degree: Option<i64>,
}

/// Sign exponent relating a composite in written convention to the same
/// composite of suspended maps.
pub fn bar_sign(blocks: &[BarBlock], degs: &[i64]) -> i64 {
    let mut e = 0i64;
    let mut start = 0usize;
    let mut before = 0i64;
    let mut outs = Vec::with_capacity(blocks.len());
    for b in blocks {
        let bd = &degs[start..start + b.len];
        let s: i64 = bd.iter().sum();
        match b.op_degree {
            Some(d) => {
                let bar = d + b.len as i64 - 1;
                e += bar * before + kappa(bd);
                outs.push(d + s);
            }
            None => outs.push(s),
        }
        before += bd.iter().map(|x| x - 1).sum::<i64>();
        start += b.len;
    }
    e + kappa(&outs)
}

/// A homotopy between two functors with the same object map; `h_n` has degree `-n`.
#[derive(Clone, Debug)]
pub struct FunctorHomotopy {
    pub from: AInfFunctor,
    pub to: AInfFunctor,
    comps: BTreeMap<Vec<usize>, MultilinearOp>,
}

impl FunctorHomotopy {
    pub fn new(from: AInfFunctor, to: AInfFunctor) -> Result<FunctorHomotopy> {
        if from.object_map != to.object_map {
            return Err(Error::Invalid("homotopic functors must agree on objects".into()));
        }
        Ok(FunctorHomotopy { from, to, comps: BTreeMap::new() })
    }

    pub fn comps(&self) -> &BTreeMap<Vec<usize>, MultilinearOp> {
        &self.comps
    }

    pub fn comp(&self, seq: &[usize]) -> Option<&MultilinearOp> {
        self.comps.get(seq)
    }

    pub fn set_comp(&mut self, seq: &[usize], table: Table) -> Result<()> {
        let op = homotopy_op(&self.from, seq, table)?;
        if op.is_zero() {
            self.comps.remove(seq);
        } else {
            self.comps.insert(seq.to_vec(), op);
        }
        Ok(())
    }
}

pub(crate) fn homotopy_op(f: &AInfFunctor, seq: &[usize], table: Table) -> Result<MultilinearOp> {
    let n = seq.len() - 1;
    if n == 0 || !f.source.is_transversal(seq) {
        return Err(Error::Invalid(format!("bad homotopy index {seq:?}")));
    }
    MultilinearOp::new(
        f.source.field,
        f.source.written_sources(seq)?,
        f.target.hom(f.object_map[seq[0]], f.object_map[seq[n]])?.clone(),
        -(n as i64),
        table,
    )
}

/// Terms of the homotopy identity on `seq` other than `f'_k - f_k`, i.e.
/// `Σ m(f…f ⊗ h ⊗ f'…f') + Σ h(1 ⊗ m ⊗ 1)` with bar-composite signs.
/// `hcomp` supplies the homotopy components.
pub(crate) fn homotopy_terms(
    f: &AInfFunctor,
    f2: &AInfFunctor,
    hcomp: &dyn Fn(&[usize]) -> Option<MultilinearOp>,
    seq: &[usize],
) -> Result<Table> {
    let a = &f.source;
    let b = &f.target;
    let k = seq.len() - 1;
    let srcs = a.written_sources(seq)?;
    let one = a.field.one();
    let mut total = Table::new();
    for sizes in compositions(k) {
        let i = sizes.len();
        let mut bounds = vec![0usize];
        for c in &sizes {
            bounds.push(bounds.last().unwrap() + c);
        }
        let outer_seq: Vec<usize> = (0..=i).rev().map(|p| f.object_map[seq[k - bounds[p]]]).collect();
        let Some(outer) = b.op(&outer_seq) else { continue };
        for u in 0..i {
            let mut owned: Vec<Option<MultilinearOp>> = Vec::with_capacity(i);
            for p in 0..i {
                let bs = block_seq(seq, bounds[p], bounds[p + 1]);
                let op = match p.cmp(&u) {
                    std::cmp::Ordering::Less => f.comp(&bs).cloned(),
                    std::cmp::Ordering::Equal => hcomp(&bs),
                    std::cmp::Ordering::Greater => f2.comp(&bs).cloned(),
                };
                owned.push(op);
            }
            if owned.iter().any(|o| o.is_none()) {
                continue;
            }
            let inners: Vec<Option<&MultilinearOp>> = owned.iter().map(|o| o.as_ref()).collect();
            let blocks: Vec<BarBlock> = (0..i)
                .map(|p| BarBlock {
                    len: sizes[p],
                    op_degree: Some(if p == u { -(sizes[p] as i64) } else { 1 - sizes[p] as i64 }),
                })
                .collect();
            let t = compose_table(outer, &inners);
            let t = signed_table(t, |key| {
                let degs = tuple_degrees(&srcs, key);
                kappa(&degs) + bar_sign(&blocks, &degs)
            });
            for (key, v) in t {
                table_add(&mut total, key, &one, &v);
            }
        }
    }
    for s in 1..=k {
        let r = k + 1 - s;
        for l in 0..s {
            let inner_seq = block_seq(seq, l, l + r);
            let outer_seq = contract_seq(seq, l, l + r);
            let (Some(inner), Some(outer)) = (a.op(&inner_seq), hcomp(&outer_seq)) else {
                continue;
            };
            let mut inners: Vec<Option<&MultilinearOp>> = vec![None; s];
            inners[l] = Some(inner);
            let mut blocks: Vec<BarBlock> = vec![BarBlock { len: 1, op_degree: None }; s];
            blocks[l] = BarBlock { len: r, op_degree: Some(2 - r as i64) };
            let t = compose_table(&outer, &inners);
            let t = signed_table(t, |key| {
                let degs = tuple_degrees(&srcs, key);
                kappa(&degs) + bar_sign(&blocks, &degs)
            });
            for (key, v) in t {
                table_add(&mut total, key, &one, &v);
            }
        }
    }
    Ok(total)
}

/// Checks `f'_k - f_k = Σ m(f…f ⊗ h ⊗ f'…f') + Σ h(1 ⊗ m ⊗ 1)` up to arity N.
pub fn check_homotopy(h: &FunctorHomotopy) -> Vec<Violation> {
    let a = &h.from.source;
    let mut out = Vec::new();
    let one = a.field.one();
    let mone = a.field.int(-1);
    for k in 1..=a.max_arity {
        for seq in a.sequences(k + 1) {
            let t = homotopy_terms(&h.from, &h.to, &|s| h.comp(s).cloned(), &seq).expect("transversal");
            let mut total = Table::new();
            for (key, v) in &t {
                table_add(&mut total, key.clone(), &mone, v);
            }
            if let Some(op) = h.from.comp(&seq) {
                for (key, v) in op.entries() {
                    table_add(&mut total, key.clone(), &mone, v);
                }
            }
            if let Some(op) = h.to.comp(&seq) {
                for (key, v) in op.entries() {
                    table_add(&mut total, key.clone(), &one, v);
                }
            }
            for (tuple, residual) in total {
                out.push(Violation { equation: "homotopy", seq: seq.clone(), inputs: k, tuple, residual });
            }
        }
    }
    out
}

/// Checks whether `e ∈ Hom^0(x, x)` is a strict identity.
pub fn is_strict_identity(a: &AInfInstance, x: usize, e: &SparseVec) -> Result<bool> {
    let hxx = a.hom(x, x)?.clone();
    if e.iter().any(|(i, _)| !a.grading.eq(hxx.degree(*i), 0)) {
        return Ok(false);
    }
    let one = a.field.one();
    for k in 1..=a.max_arity {
        for seq in a.sequences(k + 1) {
            let srcs = a.written_sources(&seq)?;
            for w in 0..k {
                let t = k - 1 - w;
                if seq[t] != x || seq[t + 1] != x {
                    continue;
                }
                let others: Vec<usize> = (0..k).filter(|&s| s != w).collect();
                let dims: Vec<usize> = others.iter().map(|&s| srcs[s].dim()).collect();
                let mut ok = true;
                for_each_tuple(&dims, |idx| {
                    let mut inputs: Vec<SparseVec> = vec![Vec::new(); k];
                    inputs[w] = e.clone();
                    for (o, &s) in others.iter().enumerate() {
                        inputs[s] = vec![(idx[o], one.clone())];
                    }
                    let v = a.apply(&seq, &inputs);
                    let expected = if k == 2 { inputs[1 - w].clone() } else { Vec::new() };
                    if v != expected {
                        ok = false;
                    }
                });
                if !ok {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Basis of `im m_1` on `Hom(x, y)` as a reduction basis.
pub(crate) fn boundary_basis(a: &AInfInstance, x: usize, y: usize) -> RowBasis {
    let mut b = RowBasis::new();
    for v in a.differential(x, y) {
        b.insert(v);
    }
    b
}

/// Basis of `ker m_1` on `Hom(x, y)`.
pub(crate) fn cocycle_basis(a: &AInfInstance, x: usize, y: usize) -> Vec<SparseVec> {
    let dim = a.homs[&(x, y)].dim();
    let cols = a.differential(x, y);
    crate::linalg::Matrix::from_cols(a.field, dim, &cols).echelon().kernel_sparse()
}

/// Checks whether `e ∈ Hom^0(x, x)` is a weak identity.
pub fn is_weak_identity(a: &AInfInstance, x: usize, e: &SparseVec) -> Result<bool> {
    let hxx = a.hom(x, x)?.clone();
    if e.iter().any(|(i, _)| !a.grading.eq(hxx.degree(*i), 0)) {
        return Ok(false);
    }
    if !a.apply(&[x, x], std::slice::from_ref(e)).is_empty() {
        return Ok(false);
    }
    let mone = a.field.int(-1);
    for y in 0..a.n_objects() {
        // Right unit: f·e = f for closed f: x → y.
        if a.is_transversal(&[x, x, y]) {
            let bnd = boundary_basis(a, x, y);
            for z in cocycle_basis(a, x, y) {
                let v = a.apply(&[x, x, y], &[z.clone(), e.clone()]);
                if !bnd.contains(&crate::linalg::sparse_axpy(&v, &mone, &z)) {
                    return Ok(false);
                }
            }
        }
        // Left unit: e·g = g for closed g: y → x.
        if a.is_transversal(&[y, x, x]) {
            let bnd = boundary_basis(a, y, x);
            for z in cocycle_basis(a, y, x) {
                let v = a.apply(&[y, x, x], &[e.clone(), z.clone()]);
                if !bnd.contains(&crate::linalg::sparse_axpy(&v, &mone, &z)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Calls `f` on every index tuple below `dims`, last index fastest.
pub fn for_each_tuple(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut t = dims.len();
        loop {
            if t == 0 {
                return;
            }
            t -= 1;
            idx[t] += 1;
            if idx[t] < dims[t] {
                break;
            }
            idx[t] = 0;
        }
    }
}
