//! Ready-made instances: DG categories of small complexes, small algebras,
//! copies of an algebra over several objects, and monotone families.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::ainf::{AInfFunctor, AInfInstance, Family};
use crate::error::{Error, Result};
use crate::graded::{GradedSpace, Grading, MultilinearOp, Table};
use crate::linalg::{Field, SparseVec};

/// A finite cochain complex: basis `(name, degree)` and `d` as images of basis vectors.
#[derive(Clone, Debug)]
pub struct Complex {
    pub name: String,
    pub basis: Vec<(String, i64)>,
    pub d: Vec<SparseVec>,
}

/// The DG category whose objects are the given complexes, with graded linear
/// maps as morphisms, `m_1(φ) = dφ - (-1)^{|φ|} φd` and `m_2` composition.
pub fn complexes_category(field: Field, grading: Grading, max_arity: usize, cx: &[Complex]) -> Result<AInfInstance> {
    let n = cx.len();
    let mut homs = BTreeMap::new();
    // Basis element (w, v) of Hom(V, W) sends v to w.
    let pairs = |x: usize, y: usize| -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for w in 0..cx[y].basis.len() {
            for v in 0..cx[x].basis.len() {
                out.push((w, v));
            }
        }
        out
    };
    for x in 0..n {
        for y in 0..n {
            let basis = pairs(x, y)
                .into_iter()
                .map(|(w, v)| {
                    (format!("{}<{}", cx[y].basis[w].0, cx[x].basis[v].0), cx[y].basis[w].1 - cx[x].basis[v].1)
                })
                .collect();
            homs.insert((x, y), GradedSpace::new(grading, basis)?);
        }
    }
    let objects = cx.iter().map(|c| c.name.clone()).collect();
    let mut a = AInfInstance::new(field, grading, max_arity, objects, Family::Full, homs)?;
    let idx = |x: usize, _y: usize, w: usize, v: usize| w * cx[x].basis.len() + v;
    for x in 0..n {
        for y in 0..n {
            let mut t = Table::new();
            for (w, v) in pairs(x, y) {
                let deg = cx[y].basis[w].1 - cx[x].basis[v].1;
                let mut out: SparseVec = Vec::new();
                // d_W ∘ E_{w,v}
                for (w2, c) in &cx[y].d[w] {
                    out = crate::linalg::sparse_axpy(&out, c, &vec![(idx(x, y, *w2, v), field.one())]);
                }
                // -(-1)^deg E_{w,v} ∘ d_V: u ↦ (coefficient of v in d u) w
                let s = field.sign(deg + 1);
                for (u, du) in cx[x].d.iter().enumerate() {
                    for (v2, c) in du {
                        if *v2 == v {
                            out = crate::linalg::sparse_axpy(&out, &(&s * c), &vec![(idx(x, y, w, u), field.one())]);
                        }
                    }
                }
                if !out.is_empty() {
                    t.insert(vec![idx(x, y, w, v)], out);
                }
            }
            a.set_op(&[x, y], t)?;
        }
    }
    if max_arity >= 2 {
        for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    let mut t = Table::new();
                    for (u, w) in pairs(y, z) {
                        for v in 0..cx[x].basis.len() {
                            t.insert(vec![idx(y, z, u, w), idx(x, y, w, v)], vec![(idx(x, z, u, v), field.one())]);
                        }
                    }
                    a.set_op(&[x, y, z], t)?;
                }
            }
        }
    }
    Ok(a)
}

/// Specification of a one-object algebra: basis, differential and products, by name.
#[derive(Clone, Debug, Default)]
pub struct AlgebraSpec<'a> {
    pub basis: Vec<(&'a str, i64)>,
    pub differential: Vec<(&'a str, Vec<(i64, &'a str)>)>,
    pub products: Vec<((&'a str, &'a str), Vec<(i64, &'a str)>)>,
}

/// One-object instance from an algebra specification.
pub fn algebra(field: Field, grading: Grading, max_arity: usize, spec: &AlgebraSpec) -> Result<AInfInstance> {
    let mut homs = BTreeMap::new();
    homs.insert((0, 0), GradedSpace::from_pairs(grading, &spec.basis)?);
    let mut a = AInfInstance::new(field, grading, max_arity, vec!["X".into()], Family::Full, homs)?;
    for (x, out) in &spec.differential {
        a.set_entry(&["X", "X"], &[x], out)?;
    }
    if max_arity >= 2 {
        for ((x, y), out) in &spec.products {
            a.set_entry(&["X", "X", "X"], &[x, y], out)?;
        }
    }
    Ok(a)
}

/// The seven-dimensional non-unital DG algebra carrying the Massey product
/// `⟨a, b, b⟩`: `d u = ab`, `d v = bb`, `ub = z`.
pub fn massey_spec(unital: bool) -> AlgebraSpec<'static> {
    let mut spec = AlgebraSpec {
        basis: vec![("a", 1), ("b", 1), ("u", 1), ("v", 1), ("x", 2), ("y", 2), ("z", 2)],
        differential: vec![("u", vec![(1, "x")]), ("v", vec![(1, "y")])],
        products: vec![(("a", "b"), vec![(1, "x")]), (("b", "b"), vec![(1, "y")]), (("u", "b"), vec![(1, "z")])],
    };
    if unital {
        add_unit(&mut spec);
    }
    spec
}

fn add_unit(spec: &mut AlgebraSpec<'static>) {
    let names: Vec<&'static str> = spec.basis.iter().map(|(n, _)| *n).collect();
    spec.basis.insert(0, ("1", 0));
    spec.products.push((("1", "1"), vec![(1, "1")]));
    for n in names {
        spec.products.push((("1", n), vec![(1, n)]));
        spec.products.push(((n, "1"), vec![(1, n)]));
    }
}

/// Dual numbers `k[ε]/ε²` with `deg ε = 0`.
pub fn dual_numbers_spec() -> AlgebraSpec<'static> {
    let mut spec = AlgebraSpec { basis: vec![("e", 0)], differential: vec![], products: vec![] };
    add_unit(&mut spec);
    spec
}

/// Exterior algebra on one generator `ξ` of degree 1.
pub fn exterior_spec() -> AlgebraSpec<'static> {
    let mut spec = AlgebraSpec { basis: vec![("xi", 1)], differential: vec![], products: vec![] };
    add_unit(&mut spec);
    spec
}

/// The ground field as a one-object category.
pub fn ground_field_spec() -> AlgebraSpec<'static> {
    AlgebraSpec { basis: vec![("1", 0)], differential: vec![], products: vec![(("1", "1"), vec![(1, "1")])] }
}

/// `k` objects `X1..Xk`, every transversal hom a copy of the algebra `alg`
/// (a one-object instance) and every operation copied from it.
pub fn copies(alg: &AInfInstance, k: usize, family: Family) -> Result<AInfInstance> {
    if alg.n_objects() != 1 {
        return Err(Error::Invalid("copies expects a one-object instance".into()));
    }
    let h = alg.hom(0, 0)?.as_ref().clone();
    let objects: Vec<String> = (1..=k).map(|i| format!("X{i}")).collect();
    let mut homs = BTreeMap::new();
    for x in 0..k {
        for y in 0..k {
            let tr = match &family {
                Family::Full => true,
                Family::Explicit(s) => s.contains(&vec![x, y]),
            };
            if tr {
                homs.insert((x, y), h.clone());
            }
        }
    }
    let mut out = AInfInstance::new(alg.field(), alg.grading(), alg.max_arity(), objects, family, homs)?;
    for n in 1..=alg.max_arity() {
        let Some(op) = alg.op(&vec![0; n + 1]) else { continue };
        for seq in out.sequences(n + 1) {
            out.set_op(&seq, op.entries().clone())?;
        }
    }
    Ok(out)
}

/// Non-decreasing sequences over `k` objects of length at most `max_len`.
pub fn nondecreasing_family(k: usize, max_len: usize) -> Family {
    let mut set = BTreeSet::new();
    let mut frontier: Vec<Vec<usize>> = (0..k).map(|x| vec![x]).collect();
    while let Some(s) = frontier.pop() {
        if s.len() < max_len {
            for x in *s.last().unwrap()..k {
                let mut t = s.clone();
                t.push(x);
                frontier.push(t);
            }
        }
        set.insert(s);
    }
    Family::Explicit(set)
}

/// Strictly increasing sequences over `k` objects.
pub fn increasing_family(k: usize) -> Family {
    let mut set = BTreeSet::new();
    for mask in 1u64..(1 << k) {
        set.insert((0..k).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>());
    }
    Family::Explicit(set)
}

/// Sequences of length at most `max_len` without repeated objects.
pub fn injective_family(k: usize, max_len: usize) -> Family {
    let mut set = BTreeSet::new();
    let mut frontier: Vec<Vec<usize>> = (0..k).map(|x| vec![x]).collect();
    while let Some(s) = frontier.pop() {
        if s.len() < max_len {
            for x in 0..k {
                if !s.contains(&x) {
                    let mut t = s.clone();
                    t.push(x);
                    frontier.push(t);
                }
            }
        }
        set.insert(s);
    }
    Family::Explicit(set)
}

/// The functor collapsing all copies onto the single object of `alg`, with
/// `f_1` the identity of the underlying algebra.
pub fn collapse_functor(copies: Arc<AInfInstance>, alg: Arc<AInfInstance>) -> Result<AInfFunctor> {
    let mut f = AInfFunctor::new(copies.clone(), alg.clone(), vec![0; copies.n_objects()])?;
    let h = alg.hom(0, 0)?.clone();
    let id = MultilinearOp::identity(alg.field(), h);
    for seq in copies.sequences(2) {
        f.set_comp(&seq, id.entries().clone())?;
    }
    Ok(f)
}

/// The identity-on-objects inclusion of a restriction into its ambient instance.
pub fn inclusion_functor(sub: Arc<AInfInstance>, ambient: Arc<AInfInstance>) -> Result<AInfFunctor> {
    let mut f = AInfFunctor::new(sub.clone(), ambient, (0..sub.n_objects()).collect())?;
    for seq in sub.sequences(2) {
        let id = MultilinearOp::identity(sub.field(), sub.hom(seq[0], seq[1])?.clone());
        f.set_comp(&seq, id.entries().clone())?;
    }
    Ok(f)
}
