//! Obstruction theory for A∞-structures on graded pre-categories.
//!
//! A structure is an [`AInfInstance`] over the pre-category's objects and
//! homs with `m_1 = 0` and `m_2` the composition. Elements of the group `G_C`
//! are functor components `f_{≥2}` with `f_1 = id`; they act on structures by
//! transport. Lifting along an equivalence proceeds one arity at a time by
//! solving `∂m̃_n = Φ` and correcting with `G_C`.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::ainf::{
    check_relations_up_to, compose_functors, functor_table, homotopy_op, homotopy_terms, relation_table, AInfFunctor,
    AInfInstance,
};
use crate::error::{Error, Result};
use crate::graded::{table_add, MultilinearOp, Table};
use crate::hochschild::{HochschildCochain, HochschildComplex, Restriction};
use crate::linalg::{Matrix, SparseVec};
use crate::precat::GradedPreCategory;

/// Element of `G_C`: components `f_k`, `k ≥ 2`, keyed by sequence; `f_1 = id`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GCElement {
    pub comps: BTreeMap<Vec<usize>, Table>,
}

impl GCElement {
    pub fn identity() -> GCElement {
        GCElement::default()
    }

    /// Element whose only nonzero components are those of the cochain (arity ≥ 2).
    pub fn from_cochain(c: &HochschildCochain) -> GCElement {
        let comps = c.comps.iter().filter(|(_, t)| !t.is_empty()).map(|(s, t)| (s.clone(), t.clone())).collect();
        GCElement { comps }
    }

    pub fn is_identity(&self) -> bool {
        self.comps.values().all(|t| t.is_empty())
    }

    /// Arity-`k` components as a cochain of degree `1 - k`.
    pub fn component(&self, k: usize) -> HochschildCochain {
        let mut c = HochschildCochain::zero(k, 1 - k as i64);
        for (s, t) in &self.comps {
            if s.len() == k + 1 && !t.is_empty() {
                c.comps.insert(s.clone(), t.clone());
            }
        }
        c
    }
}

/// Arity-`n` operations of a structure as a cochain of degree `2 - n`.
pub fn op_cochain(m: &AInfInstance, n: usize) -> HochschildCochain {
    let mut c = HochschildCochain::zero(n, 2 - n as i64);
    for (s, op) in m.ops() {
        if s.len() == n + 1 && !op.is_zero() {
            c.comps.insert(s.clone(), op.entries().clone());
        }
    }
    c
}

/// Replaces the arity-`n` operations of `m` by the cochain `c`.
pub fn set_op_cochain(m: &mut AInfInstance, n: usize, c: &HochschildCochain) -> Result<()> {
    m.clear_arity(n);
    for (s, t) in &c.comps {
        if !t.is_empty() {
            m.set_op(s, t.clone())?;
        }
    }
    Ok(())
}

/// The graded pre-category data of a structure: its instance truncated to `m_2`.
pub fn underlying_graded(m: &AInfInstance) -> AInfInstance {
    let mut g = m.clone();
    for n in 3..=m.max_arity() {
        g.clear_arity(n);
    }
    g.clear_arity(1);
    g
}

/// The functor with `f_1 = id` and the element's higher components.
pub fn element_functor(source: Arc<AInfInstance>, target: Arc<AInfInstance>, g: &GCElement) -> Result<AInfFunctor> {
    let mut f = AInfFunctor::new(source.clone(), target, (0..source.n_objects()).collect())?;
    for seq in source.sequences(2) {
        let id = MultilinearOp::identity(source.field(), source.hom(seq[0], seq[1])?.clone());
        f.set_comp(&seq, id.entries().clone())?;
    }
    for (s, t) in &g.comps {
        if s.len() <= source.max_arity() + 1 && !t.is_empty() {
            f.set_comp(s, t.clone())?;
        }
    }
    Ok(f)
}

fn functor_element(f: &AInfFunctor) -> GCElement {
    let comps = f
        .comps()
        .iter()
        .filter(|(s, op)| s.len() > 2 && !op.is_zero())
        .map(|(s, op)| (s.clone(), op.entries().clone()))
        .collect();
    GCElement { comps }
}

/// The structure `m'` with `g: (C, m) → (C, m')` an A∞-functor, solved arity by arity.
pub fn act(g: &GCElement, m: &AInfInstance) -> Result<AInfInstance> {
    let src = Arc::new(m.clone());
    let mut target = m.clone();
    for n in 2..=m.max_arity() {
        target.clear_arity(n);
    }
    let mone = m.field().int(-1);
    for n in 2..=m.max_arity() {
        let f = element_functor(src.clone(), Arc::new(target.clone()), g)?;
        let mut new = Vec::new();
        for seq in m.sequences(n + 1) {
            let r = functor_table(&f, &seq, &|_| true, &|_, _| true)?;
            let mut t = Table::new();
            for (k, v) in r {
                table_add(&mut t, k, &mone, &v);
            }
            new.push((seq, t));
        }
        for (seq, t) in new {
            target.set_op(&seq, t)?;
        }
    }
    Ok(target)
}

/// Product `f·g` (apply `g` first), given by the composition formula.
pub fn group_compose(host: &AInfInstance, f: &GCElement, g: &GCElement) -> Result<GCElement> {
    let h = Arc::new(underlying_graded(host));
    let ff = element_functor(h.clone(), h.clone(), f)?;
    let gg = element_functor(h.clone(), h.clone(), g)?;
    Ok(functor_element(&compose_functors(&gg, &ff)?))
}

/// Inverse in `G_C`, solved recursively from `(f·f^{-1})_k = 0`.
pub fn group_invert(host: &AInfInstance, f: &GCElement) -> Result<GCElement> {
    let h = Arc::new(underlying_graded(host));
    let ff = element_functor(h.clone(), h.clone(), f)?;
    let mut inv = GCElement::identity();
    let mone = host.field().int(-1);
    for n in 2..=host.max_arity() {
        let gg = element_functor(h.clone(), h.clone(), &inv)?;
        let c = compose_functors(&gg, &ff)?;
        for seq in host.sequences(n + 1) {
            if let Some(op) = c.comp(&seq) {
                let mut t = Table::new();
                for (k, v) in op.entries() {
                    table_add(&mut t, k.clone(), &mone, v);
                }
                if !t.is_empty() {
                    inv.comps.insert(seq, t);
                }
            }
        }
    }
    Ok(inv)
}

fn cochain_from_table_map(arity: usize, degree: i64, tables: Vec<(Vec<usize>, Table)>) -> HochschildCochain {
    let mut c = HochschildCochain::zero(arity, degree);
    for (s, t) in tables {
        if !t.is_empty() {
            c.comps.insert(s, t);
        }
    }
    c
}

/// `Φ` for the partial structure `m_3, …, m_{n-1}` of `m`: the negated
/// relation at `n + 1` inputs with `m_{≥n}` removed. Arity `n + 1`, degree `2 - n`.
pub fn obstruction_phi(m: &AInfInstance, n: usize) -> Result<HochschildCochain> {
    let mut p = m.with_max_arity(m.max_arity().max(n));
    for k in n..=p.max_arity() {
        p.clear_arity(k);
    }
    p.clear_arity(1);
    if let Some(v) = check_relations_up_to(&p, n).first() {
        return Err(Error::Relation(format!("partial structure is invalid: {v}")));
    }
    let mone = m.field().int(-1);
    let mut tables = Vec::new();
    for seq in p.sequences(n + 2) {
        let r = relation_table(&p, &seq, &|_, _| true)?;
        let mut t = Table::new();
        for (k, v) in r {
            table_add(&mut t, k, &mone, &v);
        }
        tables.push((seq, t));
    }
    Ok(cochain_from_table_map(n + 1, 2 - n as i64, tables))
}

/// `Ψ` for the partial homotopy `f_2, …, f_{n-1}` of `g` between `m` and `m2`:
/// the functor equation at `n + 1` inputs with `f_{≥n}` removed.
/// Arity `n + 1`, degree `1 - n`.
pub fn obstruction_psi(g: &GCElement, m: &AInfInstance, m2: &AInfInstance, n: usize) -> Result<HochschildCochain> {
    let mut partial = g.clone();
    partial.comps.retain(|s, _| s.len() <= n);
    let f = element_functor(Arc::new(m.clone()), Arc::new(m2.clone()), &partial)?;
    let lower = crate::ainf::check_functor_up_to(&f, n.min(m.max_arity()));
    if let Some(v) = lower.first() {
        return Err(Error::Relation(format!("partial homotopy is invalid: {v}")));
    }
    let mut tables = Vec::new();
    for seq in m.sequences(n + 2) {
        tables.push((seq.clone(), functor_table(&f, &seq, &|_| true, &|_, _| true)?));
    }
    Ok(cochain_from_table_map(n + 1, 1 - n as i64, tables))
}

/// A cochain `χ` with `∂χ = ψ`, or `None` when `ψ` is not exact.
pub fn solve_primitive(cx: &HochschildComplex, psi: &HochschildCochain) -> Result<Option<HochschildCochain>> {
    if psi.arity == 0 {
        return Ok(if psi.is_zero() { Some(HochschildCochain::zero(0, psi.degree)) } else { None });
    }
    let i = psi.arity - 1;
    let j = cx.precategory().instance().grading().reduce(psi.degree);
    if psi.arity < cx.max_arity() && !cx.differential(psi)?.is_zero() {
        return Err(Error::NotClosed("the cochain is not a cocycle".into()));
    }
    let v = cx.to_vector(psi)?;
    if cx.dim(i, j) == 0 {
        return Ok(if v.is_empty() { Some(HochschildCochain::zero(i, psi.degree)) } else { None });
    }
    let d = cx.differential_matrix(i, j)?;
    Ok(d.solve_sparse(&v).map(|x| {
        let mut c = cx.from_vector(i, j, &x);
        c.degree = psi.degree;
        c
    }))
}

/// The functor `F'` homotopic to `f` through `h`, solved from the homotopy identity.
pub fn homotopy_extend(f: &AInfFunctor, h: &BTreeMap<Vec<usize>, Table>) -> Result<AInfFunctor> {
    let a = f.source().clone();
    let mut hops = BTreeMap::new();
    for (s, t) in h {
        hops.insert(s.clone(), homotopy_op(f, s, t.clone())?);
    }
    let mut out = f.clone();
    let one = a.field().one();
    for k in 1..=a.max_arity() {
        for seq in a.sequences(k + 1) {
            out.set_comp(&seq, Table::new())?;
        }
        let mut new = Vec::new();
        for seq in a.sequences(k + 1) {
            let terms = homotopy_terms(f, &out, &|s| hops.get(s).cloned(), &seq)?;
            let mut t = f.comp(&seq).map(|op| op.entries().clone()).unwrap_or_default();
            for (key, v) in terms {
                table_add(&mut t, key, &one, &v);
            }
            new.push((seq, t));
        }
        for (seq, t) in new {
            out.set_comp(&seq, t)?;
        }
    }
    Ok(out)
}

/// Pulls a structure on the target back along a fully faithful restriction.
pub fn pullback(r: &Restriction, c: &GradedPreCategory, m: &AInfInstance) -> Result<AInfInstance> {
    let mut out = underlying_graded(c.instance());
    out = out.with_max_arity(m.max_arity());
    for n in 3..=m.max_arity() {
        let pc = r.apply(c, &op_cochain(m, n))?;
        set_op_cochain(&mut out, n, &pc)?;
    }
    Ok(out)
}

/// Data for one class-matching step: complexes on both sides and the restriction.
pub struct Lifting<'a> {
    pub r: &'a Restriction,
    pub c: &'a GradedPreCategory,
    pub d: &'a GradedPreCategory,
    pub cx_c: &'a HochschildComplex,
    pub cx_d: &'a HochschildComplex,
}

impl Lifting<'_> {
    /// Finds a cocycle `z` on the target and `χ` on the source with
    /// `F^*(x0 + z) - target = ∂χ`, where `x0` lives in `CC^{i,j}(D)`.
    fn match_class(
        &self,
        x0: &HochschildCochain,
        target: &HochschildCochain,
    ) -> Result<Option<(HochschildCochain, HochschildCochain)>> {
        let i = x0.arity;
        let g = self.d.instance().grading();
        let j = g.reduce(x0.degree);
        let f = self.cx_c.field();
        let rmat = self.r.matrix(self.cx_c, self.cx_d, i, j)?;
        let zb: Vec<SparseVec> = if self.cx_d.dim(i, j) == 0 {
            Vec::new()
        } else {
            self.cx_d.differential_matrix(i, j)?.echelon().kernel_sparse()
        };
        let mut cols: Vec<SparseVec> = zb.iter().map(|z| rmat.mul_sparse(z)).collect();
        let nz = cols.len();
        if i > 0 && self.cx_c.dim(i - 1, j) > 0 {
            let dc = self.cx_c.differential_matrix(i - 1, j)?.transpose();
            for r in 0..dc.nrows() {
                cols.push(dc.row(r).iter().map(|(k, x)| (*k, -x)).collect());
            }
        }
        let lhs0 = self.cx_c.to_vector(&self.r.apply(self.c, x0)?)?;
        let tv = self.cx_c.to_vector(target)?;
        let rhs = crate::linalg::sparse_axpy(&tv, &f.int(-1), &lhs0);
        let m = Matrix::from_cols(f, self.cx_c.dim(i, j), &cols);
        let Some(sol) = m.solve_sparse(&rhs) else { return Ok(None) };
        let mut z: SparseVec = Vec::new();
        let mut chi: SparseVec = Vec::new();
        for (k, x) in sol {
            if k < nz {
                z = crate::linalg::sparse_axpy(&z, &x, &zb[k]);
            } else {
                chi.push((k - nz, x));
            }
        }
        let mut zc = self.cx_d.from_vector(i, j, &z);
        zc.degree = x0.degree;
        let mut cc = if i > 0 { self.cx_c.from_vector(i - 1, j, &chi) } else { HochschildCochain::zero(0, x0.degree) };
        cc.degree = x0.degree;
        Ok(Some((zc, cc)))
    }
}

fn add_cochains(a: &HochschildCochain, b: &HochschildCochain) -> HochschildCochain {
    let mut out = a.clone();
    for (s, t) in &b.comps {
        let e = out.comps.entry(s.clone()).or_default();
        for (k, v) in t {
            table_add(e, k.clone(), &v[0].1.field().one(), v);
        }
    }
    out.comps.retain(|_, t| !t.is_empty());
    out
}

/// Result of [`lift_structure`].
#[derive(Clone, Debug)]
pub struct LiftedStructure {
    /// The structure `m̃` on the target.
    pub structure: AInfInstance,
    /// `g` with `act(g, m) = F^*(m̃)`.
    pub homotopy: GCElement,
}

/// Lifts a structure `m` on the source of a fully faithful equivalence to a
/// structure `m̃` on the target with `F^*(m̃)` strongly homotopic to `m`.
pub fn lift_structure(l: &Lifting, m: &AInfInstance) -> Result<LiftedStructure> {
    let n_max = m.max_arity();
    let mut cur = m.clone();
    let mut total = GCElement::identity();
    let mut lifted = underlying_graded(l.d.instance()).with_max_arity(n_max);
    for n in 3..=n_max {
        let phi = obstruction_phi(&lifted, n)?;
        let x0 = solve_primitive(l.cx_d, &phi)?
            .ok_or_else(|| Error::Obstruction(format!("Φ at arity {n} is not exact on the target")))?;
        let target = op_cochain(&cur, n);
        let (z, chi) = l
            .match_class(&x0, &target)?
            .ok_or_else(|| Error::Obstruction(format!("arity {n} class does not pull back to the source class")))?;
        let mt = add_cochains(&x0, &z);
        set_op_cochain(&mut lifted, n, &mt)?;
        if !chi.is_zero() {
            let mut e = GCElement::from_cochain(&chi);
            e.comps.retain(|s, _| s.len() == n);
            cur = act(&e, &cur)?;
            total = group_compose(m, &e, &total)?;
        }
    }
    Ok(LiftedStructure { structure: lifted, homotopy: total })
}

/// Greedy search for `g ∈ G_C` with `act(g, m) = target` up to arity N.
pub fn find_strong_homotopy(
    cx: &HochschildComplex,
    m: &AInfInstance,
    target: &AInfInstance,
) -> Result<Option<GCElement>> {
    let mut cur = m.clone();
    let mut total = GCElement::identity();
    for n in 3..=m.max_arity() {
        let diff = add_cochains(&op_cochain(target, n), &negate(&op_cochain(&cur, n)));
        if diff.is_zero() {
            continue;
        }
        let Some(chi) = solve_primitive(cx, &diff)? else { return Ok(None) };
        let e = GCElement::from_cochain(&chi);
        cur = act(&e, &cur)?;
        total = group_compose(m, &e, &total)?;
    }
    Ok(Some(total))
}

fn negate(c: &HochschildCochain) -> HochschildCochain {
    let mut out = c.clone();
    for t in out.comps.values_mut() {
        for v in t.values_mut() {
            for (_, x) in v.iter_mut() {
                *x = -&*x;
            }
        }
    }
    out
}

/// A `G_C` element carrying `m` to `F^*(m2)`, if the greedy search finds one.
pub fn extendable(l: &Lifting, m: &AInfInstance, m2: &AInfInstance) -> Result<Option<GCElement>> {
    let target = pullback(l.r, l.c, m2)?;
    find_strong_homotopy(l.cx_c, m, &target)
}

/// Lifts a strong homotopy `g` between `F^*(m)` and `F^*(m2)` to one between
/// `m` and `m2` on the target.
pub fn lift_homotopy(l: &Lifting, g: &GCElement, m: &AInfInstance, m2: &AInfInstance) -> Result<GCElement> {
    let pm = Arc::new(pullback(l.r, l.c, m)?);
    let pm2 = Arc::new(pullback(l.r, l.c, m2)?);
    let mut cur = element_functor(pm.clone(), pm2.clone(), g)?;
    let mut lifted = GCElement::identity();
    for n in 2..=m.max_arity() {
        let psi = obstruction_psi(&lifted, m, m2, n)?;
        let x0 = solve_primitive(l.cx_d, &psi)?
            .ok_or_else(|| Error::Obstruction(format!("Ψ at arity {n} is not exact on the target")))?;
        let target = functor_element(&cur).component(n);
        let (z, chi) = l
            .match_class(&x0, &target)?
            .ok_or_else(|| Error::Obstruction(format!("arity {n} homotopy class does not pull back")))?;
        let fd = add_cochains(&x0, &z);
        for (s, t) in fd.comps {
            lifted.comps.insert(s, t);
        }
        if !chi.is_zero() {
            let h: BTreeMap<Vec<usize>, Table> = chi.comps.into_iter().filter(|(s, _)| s.len() == n).collect();
            cur = homotopy_extend(&cur, &h)?;
        }
    }
    Ok(lifted)
}

/// Output of [`precat_to_cat`].
#[derive(Clone, Debug)]
pub struct PrecatToCat {
    /// Minimal category on the ambient objects with the full family.
    pub category: Arc<AInfInstance>,
    /// Quasi-equivalence from the pre-category into `category`.
    pub functor: AInfFunctor,
    /// `g ∈ G_C` with `act(g, m) = ι^*(category)`.
    pub homotopy: GCElement,
}

/// Extends a minimal A∞-pre-category in the ambient model to a minimal
/// A∞-category on the full family, with the extension functor.
pub fn precat_to_cat(c: &GradedPreCategory, m: &AInfInstance) -> Result<PrecatToCat> {
    if !m.is_minimal() {
        return Err(Error::Invalid("the pre-category must be minimal".into()));
    }
    let d = GradedPreCategory::new(c.ambient().as_ref().clone(), crate::ainf::Family::Full)?;
    let id = AInfFunctor::identity(c.ambient().clone());
    let r = Restriction::new(id, c, &d)?;
    let n = m.max_arity();
    let cx_c = HochschildComplex::new(c, n + 1)?;
    let cx_d = HochschildComplex::new(&d, n + 1)?;
    let l = Lifting { r: &r, c, d: &d, cx_c: &cx_c, cx_d: &cx_d };
    let lifted = lift_structure(&l, m)?;
    let category = Arc::new(lifted.structure);
    let functor = element_functor(Arc::new(m.clone()), category.clone(), &lifted.homotopy)?;
    Ok(PrecatToCat { category, functor, homotopy: lifted.homotopy })
}
