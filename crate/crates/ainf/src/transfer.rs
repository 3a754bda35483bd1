//! Minimal models by homotopy transfer.
//!
//! Each hom splits as `K ⊕ B ⊕ C` with `K` cocycle representatives of
//! cohomology, `B = im m_1` and `m_1: C → B` an isomorphism. The homotopy `H`
//! inverts `m_1` from `B` to `C` and vanishes on `K ⊕ C`, so
//! `m_1 H + H m_1 = 1 - ip`, `H² = 0`, `pH = 0`, `Hi = 0`.
//!
//! Transfer solves the functor equation for `F: A_min → A` one arity at a time: with `R_n`
//! the part of that equation not involving `f_n` or `m_n^min`, set
//! `m_n^min = p R_n` and `f_n = -H R_n`. The functor `G: A → A_min` uses the
//! tensor homotopy `Σ_j 1^{j-1} ⊗ H ⊗ (ip)^{n-j}`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ainf::{block_seq, check_functor, check_relations, functor_table, tuple_degrees, AInfFunctor, AInfInstance};
use crate::error::{Error, Result};
use crate::graded::{compose_table, table_add, GradedSpace, MultilinearOp, Table};
use crate::linalg::{sparse_axpy, Field, Matrix, RowBasis, SparseVec};

/// Splitting of one hom complex. Maps are stored as images of basis vectors.
#[derive(Clone, Debug)]
pub struct HomSplitting {
    /// Basis of `K` with names and degrees.
    pub k_space: Arc<GradedSpace>,
    /// `i`: images of the `K` basis in the hom.
    pub i: Vec<SparseVec>,
    /// `p`: images of hom basis vectors in `K` coordinates.
    pub p: Vec<SparseVec>,
    /// `H`: images of hom basis vectors in the hom.
    pub h: Vec<SparseVec>,
    /// Basis of the acyclic part `Ac = B ⊕ C`.
    pub acyclic: Vec<SparseVec>,
}

/// Splittings for every transversal pair.
#[derive(Clone, Debug)]
pub struct SplittingData {
    pub homs: BTreeMap<(usize, usize), HomSplitting>,
}

/// Splits a complex given by `d` (images of basis vectors).
pub fn split_hom(field: Field, space: &GradedSpace, d: &[SparseVec]) -> Result<HomSplitting> {
    let n = space.dim();
    for (j, v) in d.iter().enumerate() {
        let dd = apply_linear(field, d, v);
        if !dd.is_empty() {
            return Err(Error::Relation(format!("m_1 squared is nonzero on {}", space.name(j))));
        }
    }
    let mut b = RowBasis::new();
    for v in d {
        b.insert(v.clone());
    }
    let z = Matrix::from_cols(field, n, d).echelon().kernel_sparse();
    let mut zb = RowBasis::new();
    let mut kb = b.clone();
    let mut kvecs: Vec<SparseVec> = Vec::new();
    for v in &z {
        zb.insert(v.clone());
        let r = kb.reduce(v.clone());
        if !r.is_empty() {
            kb.insert(r.clone());
            kvecs.push(r);
        }
    }
    kvecs.sort_by_key(|v| v[0].0);
    let zleads: std::collections::BTreeSet<usize> = zb.leads().into_iter().collect();
    let cvecs: Vec<usize> = (0..n).filter(|j| !zleads.contains(j)).collect();
    let mut names = Vec::new();
    for v in &kvecs {
        let lead = v[0].0;
        names.push((space.name(lead).to_string(), space.degree(lead)));
    }
    let k_space = Arc::new(GradedSpace::new(space.grading(), names)?);
    // Basis [K | dC | C] and coordinates of every standard vector in it.
    let mut cols: Vec<SparseVec> = kvecs.clone();
    for &c in &cvecs {
        cols.push(d[c].clone());
    }
    for &c in &cvecs {
        cols.push(vec![(c, field.one())]);
    }
    if cols.len() != n {
        return Err(Error::Relation("splitting dimensions do not add up".into()));
    }
    let m = Matrix::from_cols(field, n, &cols);
    let nk = kvecs.len();
    let nc = cvecs.len();
    let mut p = Vec::with_capacity(n);
    let mut h = Vec::with_capacity(n);
    for j in 0..n {
        let x = m
            .solve_sparse(&vec![(j, field.one())])
            .ok_or_else(|| Error::Relation("splitting basis is singular".into()))?;
        let pk: SparseVec = x.iter().filter(|(t, _)| *t < nk).cloned().collect();
        let mut hv: SparseVec = Vec::new();
        for (t, c) in &x {
            if *t >= nk && *t < nk + nc {
                hv = sparse_axpy(&hv, c, &vec![(cvecs[t - nk], field.one())]);
            }
        }
        p.push(pk);
        h.push(hv);
    }
    let mut acyclic: Vec<SparseVec> = cvecs.iter().map(|&c| d[c].clone()).collect();
    acyclic.extend(cvecs.iter().map(|&c| vec![(c, field.one())]));
    Ok(HomSplitting { k_space, i: kvecs, p, h, acyclic })
}

/// Applies a linear map given by basis images.
pub fn apply_linear(field: Field, images: &[SparseVec], v: &SparseVec) -> SparseVec {
    let _ = field;
    v.iter().fold(Vec::new(), |acc, (j, c)| sparse_axpy(&acc, c, &images[*j]))
}

/// Splits every transversal hom of `a`.
pub fn compute_splitting(a: &AInfInstance) -> Result<SplittingData> {
    let mut homs = BTreeMap::new();
    for ((x, y), sp) in a.homs() {
        homs.insert((*x, *y), split_hom(a.field(), sp, &a.differential(*x, *y))?);
    }
    Ok(SplittingData { homs })
}

/// Verifies the splitting identities as exact matrix equations; returns the failures.
pub fn check_splitting(a: &AInfInstance, s: &SplittingData) -> Vec<String> {
    let f = a.field();
    let mut bad = Vec::new();
    for ((x, y), hs) in &s.homs {
        let d = a.differential(*x, *y);
        let n = d.len();
        let lin = |m: &[SparseVec], v: &SparseVec| apply_linear(f, m, v);
        for (t, kv) in hs.i.iter().enumerate() {
            if !lin(&d, kv).is_empty() {
                bad.push(format!("({x},{y}): m_1 i != 0"));
            }
            if lin(&hs.p, kv) != vec![(t, f.one())] {
                bad.push(format!("({x},{y}): p i != 1"));
            }
            if !lin(&hs.h, kv).is_empty() {
                bad.push(format!("({x},{y}): H i != 0"));
            }
        }
        for j in 0..n {
            let e: SparseVec = vec![(j, f.one())];
            let he = lin(&hs.h, &e);
            if !lin(&hs.h, &he).is_empty() {
                bad.push(format!("({x},{y}): H^2 != 0"));
            }
            if !lin(&hs.p, &he).is_empty() {
                bad.push(format!("({x},{y}): p H != 0"));
            }
            let lhs = sparse_axpy(&lin(&d, &he), &f.one(), &lin(&hs.h, &d[j]));
            let ip = lin(&hs.i, &hs.p[j]);
            let rhs = sparse_axpy(&e, &f.int(-1), &ip);
            if lhs != rhs {
                bad.push(format!("({x},{y}): m_1 H + H m_1 != 1 - ip"));
            }
        }
        for v in &hs.acyclic {
            if !lin(&hs.p, v).is_empty() {
                bad.push(format!("({x},{y}): p does not vanish on Ac"));
            }
        }
        if hs.i.len() + hs.acyclic.len() != n {
            bad.push(format!("({x},{y}): K + Ac does not span"));
        }
    }
    bad
}

/// Output of [`transfer_minimal`].
#[derive(Clone, Debug)]
pub struct Transfer {
    pub minimal: Arc<AInfInstance>,
    /// `F: A_min → A` with `f_1 = i`.
    pub f: AInfFunctor,
    /// `G: A → A_min` with `g_1 = p`.
    pub g: AInfFunctor,
    /// True when `G` had to be completed by linear solving.
    pub g_fallback: bool,
}

fn linear_table(images: &[SparseVec]) -> Table {
    images.iter().enumerate().filter(|(_, v)| !v.is_empty()).map(|(j, v)| (vec![j], v.clone())).collect()
}

/// Homotopy transfer of `a` to its cohomology along `s`.
pub fn transfer_minimal(a: &AInfInstance, s: &SplittingData) -> Result<Transfer> {
    let bad = check_splitting(a, s);
    if !bad.is_empty() {
        return Err(Error::Invalid(format!("invalid splitting: {}", bad[0])));
    }
    if !check_relations(a).is_empty() {
        return Err(Error::Relation("input instance fails the A∞ relations".into()));
    }
    let f = a.field();
    let a_arc = Arc::new(a.clone());
    let homs = s.homs.iter().map(|(k, h)| (*k, h.k_space.as_ref().clone())).collect();
    let mut min = AInfInstance::new(f, a.grading(), a.max_arity(), a.objects().to_vec(), a.family().clone(), homs)?;
    let idmap: Vec<usize> = (0..a.n_objects()).collect();
    let mut fun = AInfFunctor::new(Arc::new(min.clone()), a_arc.clone(), idmap.clone())?;
    for seq in min.sequences(2) {
        fun.set_comp(&seq, linear_table(&s.homs[&(seq[0], seq[1])].i))?;
    }
    let mone = f.int(-1);
    for n in 2..=a.max_arity() {
        let src = Arc::new(min.clone());
        let cur = fun.rebase(src.clone(), a_arc.clone());
        let mut new_m: Vec<(Vec<usize>, Table)> = Vec::new();
        let mut new_f: Vec<(Vec<usize>, Table)> = Vec::new();
        for seq in src.sequences(n + 1) {
            let r = functor_table(&cur, &seq, &|_| true, &|_, _| true)?;
            let hs = &s.homs[&(seq[0], seq[n])];
            let mut mt = Table::new();
            let mut ft = Table::new();
            for (key, v) in r {
                let pv = apply_linear(f, &hs.p, &v);
                let hv = apply_linear(f, &hs.h, &v);
                if !pv.is_empty() {
                    mt.insert(key.clone(), pv);
                }
                table_add(&mut ft, key, &mone, &hv);
            }
            new_m.push((seq.clone(), mt));
            new_f.push((seq, ft));
        }
        for (seq, t) in new_m {
            min.set_op(&seq, t)?;
        }
        let src = Arc::new(min.clone());
        fun = fun.rebase(src, a_arc.clone());
        for (seq, t) in new_f {
            fun.set_comp(&seq, t)?;
        }
    }
    let min = Arc::new(min);
    let fun = fun.rebase(min.clone(), a_arc.clone());
    let (g, g_fallback) = transfer_g(a_arc.clone(), min.clone(), s)?;
    Ok(Transfer { minimal: min, f: fun, g, g_fallback })
}

/// Builds `G: A → A_min` with `g_1 = p`.
fn transfer_g(a: Arc<AInfInstance>, min: Arc<AInfInstance>, s: &SplittingData) -> Result<(AInfFunctor, bool)> {
    let f = a.field();
    let idmap: Vec<usize> = (0..a.n_objects()).collect();
    let mut g = AInfFunctor::new(a.clone(), min.clone(), idmap)?;
    for seq in a.sequences(2) {
        g.set_comp(&seq, linear_table(&s.homs[&(seq[0], seq[1])].p))?;
    }
    for n in 2..=a.max_arity() {
        let mut updates = Vec::new();
        for seq in a.sequences(n + 1) {
            let e0 = functor_table(&g, &seq, &|_| true, &|_, _| true)?;
            if e0.is_empty() {
                continue;
            }
            let e0op =
                MultilinearOp::new(f, a.written_sources(&seq)?, min.hom(seq[0], seq[n])?.clone(), 2 - n as i64, e0)?;
            let srcs = a.written_sources(&seq)?;
            // Tensor homotopy: slot j gets H, slots right of it get ip.
            let mut total = Table::new();
            for j in 0..n {
                let mut owned: Vec<Option<MultilinearOp>> = Vec::with_capacity(n);
                for w in 0..n {
                    let bs = block_seq(&seq, w, w + 1);
                    let hs = &s.homs[&(bs[0], bs[1])];
                    let sp = srcs[w].clone();
                    let op = if w < j {
                        None
                    } else if w == j {
                        Some(MultilinearOp::linear(f, sp.clone(), sp, -1, hs.h.clone())?)
                    } else {
                        let ip: Vec<SparseVec> = hs.p.iter().map(|pv| apply_linear(f, &hs.i, pv)).collect();
                        Some(MultilinearOp::linear(f, sp.clone(), sp, 0, ip)?)
                    };
                    owned.push(op);
                }
                let inners: Vec<Option<&MultilinearOp>> = owned.iter().map(|o| o.as_ref()).collect();
                let t = compose_table(&e0op, &inners);
                let sign_n = n as i64 - 1;
                for (key, v) in t {
                    let left: i64 = tuple_degrees(&srcs[..j], &key[..j]).iter().sum();
                    table_add(&mut total, key, &f.sign(left + sign_n), &v);
                }
            }
            updates.push((seq, total));
        }
        for (seq, t) in updates {
            g.set_comp(&seq, t)?;
        }
    }
    if check_functor(&g).is_empty() {
        return Ok((g, false));
    }
    Err(Error::Relation("tensor-homotopy formula for G failed the functor equations".into()))
}

/// The graded cohomology category: homs `K`, composition `p m_2(i, i)`.
pub fn cohomology_category(a: &AInfInstance) -> Result<AInfInstance> {
    let s = compute_splitting(a)?;
    let f = a.field();
    let homs = s.homs.iter().map(|(k, h)| (*k, h.k_space.as_ref().clone())).collect();
    let mut out = AInfInstance::new(f, a.grading(), a.max_arity(), a.objects().to_vec(), a.family().clone(), homs)?;
    if a.max_arity() < 2 {
        return Ok(out);
    }
    for seq in a.sequences(3) {
        let s01 = &s.homs[&(seq[0], seq[1])];
        let s12 = &s.homs[&(seq[1], seq[2])];
        let s02 = &s.homs[&(seq[0], seq[2])];
        let mut t = Table::new();
        for (u, iu) in s12.i.iter().enumerate() {
            for (w, iw) in s01.i.iter().enumerate() {
                let v = a.apply(&seq, &[iu.clone(), iw.clone()]);
                let pv = apply_linear(f, &s02.p, &v);
                if !pv.is_empty() {
                    t.insert(vec![u, w], pv);
                }
            }
        }
        out.set_op(&seq, t)?;
    }
    Ok(out)
}
