//! Pre-category semantics: quasi-isomorphisms, the extension property and
//! graded pre-categories realised inside an ambient graded category.
//!
//! Spaces of closed degree-zero morphisms are infinite, so searches for
//! quasi-isomorphisms run over a finite candidate set: cocycle basis vectors,
//! their pairwise sums and a few seeded random combinations.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ainf::{check_relations, cocycle_basis, is_strict_identity, AInfFunctor, AInfInstance, Family};
use crate::error::{Error, Result};
use crate::graded::GradedSpace;
use crate::linalg::{sparse_axpy, Field, Matrix, RowBasis, SparseVec};
use crate::transfer::{apply_linear, split_hom};

/// Number of random combinations tried per hom in candidate searches.
pub const RANDOM_CANDIDATES: usize = 8;

/// Whether a degree-zero chain map `phi: U → V` induces an isomorphism on cohomology.
pub fn is_qis_of_complexes(
    field: Field,
    u: &GradedSpace,
    du: &[SparseVec],
    v: &GradedSpace,
    dv: &[SparseVec],
    phi: &[SparseVec],
) -> Result<bool> {
    let su = split_hom(field, u, du)?;
    let sv = split_hom(field, v, dv)?;
    if su.i.len() != sv.i.len() {
        return Ok(false);
    }
    let mut b = RowBasis::new();
    for w in dv {
        b.insert(w.clone());
    }
    for k in &su.i {
        if !b.insert(apply_linear(field, phi, k)) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn check_closed_degree_zero(a: &AInfInstance, x1: usize, x2: usize, f: &SparseVec) -> Result<()> {
    if !a.is_transversal(&[x1, x2]) {
        return Err(Error::NotTransversal(format!("({}, {})", a.name(x1), a.name(x2))));
    }
    let h = a.hom(x1, x2)?;
    if let Some((i, _)) = f.iter().find(|(i, _)| !a.grading().eq(h.degree(*i), 0)) {
        return Err(Error::Degree(format!("{} is not of degree 0", h.name(*i))));
    }
    if !a.apply(&[x1, x2], std::slice::from_ref(f)).is_empty() {
        return Err(Error::NotClosed(format!("m_1 does not vanish on the morphism {} -> {}", a.name(x1), a.name(x2))));
    }
    Ok(())
}

/// Images of the basis of `Hom(x0, x1)` under `m_2(f, ·)`.
fn left_mult(a: &AInfInstance, x0: usize, x1: usize, x2: usize, f: &SparseVec) -> Result<Vec<SparseVec>> {
    let d = a.hom(x0, x1)?.dim();
    let one = a.field().one();
    Ok((0..d).map(|j| a.apply(&[x0, x1, x2], &[f.clone(), vec![(j, one.clone())]])).collect())
}

/// Images of the basis of `Hom(x2, x3)` under `m_2(·, f)`.
fn right_mult(a: &AInfInstance, x1: usize, x2: usize, x3: usize, f: &SparseVec) -> Result<Vec<SparseVec>> {
    let d = a.hom(x2, x3)?.dim();
    let one = a.field().one();
    Ok((0..d).map(|j| a.apply(&[x1, x2, x3], &[vec![(j, one.clone())], f.clone()])).collect())
}

/// Whether a closed `f ∈ Hom^0(x1, x2)` is a quasi-isomorphism: composing
/// with `f` on either side induces isomorphisms on cohomology wherever the
/// composite is defined.
pub fn is_quasi_isomorphism(a: &AInfInstance, x1: usize, x2: usize, f: &SparseVec) -> Result<bool> {
    check_closed_degree_zero(a, x1, x2, f)?;
    let field = a.field();
    for x0 in 0..a.n_objects() {
        if a.is_transversal(&[x0, x1, x2]) {
            let phi = left_mult(a, x0, x1, x2, f)?;
            let (u, v) = (a.hom(x0, x1)?, a.hom(x0, x2)?);
            if !is_qis_of_complexes(field, u, &a.differential(x0, x1), v, &a.differential(x0, x2), &phi)? {
                return Ok(false);
            }
        }
    }
    for x3 in 0..a.n_objects() {
        if a.is_transversal(&[x1, x2, x3]) {
            let phi = right_mult(a, x1, x2, x3, f)?;
            let (u, v) = (a.hom(x2, x3)?, a.hom(x1, x3)?);
            if !is_qis_of_complexes(field, u, &a.differential(x2, x3), v, &a.differential(x1, x3), &phi)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Finite candidate set of closed degree-zero morphisms `x → y`.
pub fn quasi_iso_candidates(a: &AInfInstance, x: usize, y: usize, seed: u64) -> Vec<SparseVec> {
    if !a.is_transversal(&[x, y]) {
        return Vec::new();
    }
    let h = a.homs()[&(x, y)].clone();
    let g = a.grading();
    let basis: Vec<SparseVec> = cocycle_basis(a, x, y).into_iter().filter(|v| g.eq(h.degree(v[0].0), 0)).collect();
    let field = a.field();
    let one = field.one();
    let mut out: Vec<SparseVec> = basis.clone();
    for i in 0..basis.len() {
        for j in i + 1..basis.len() {
            out.push(sparse_axpy(&basis[i], &one, &basis[j]));
        }
    }
    if basis.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((x as u64) << 32) ^ (y as u64));
        for _ in 0..RANDOM_CANDIDATES {
            let mut v = Vec::new();
            for b in &basis {
                let c: i64 = rng.gen_range(-2..=2);
                v = sparse_axpy(&v, &field.int(c), b);
            }
            out.push(v);
        }
    }
    let mut seen = BTreeSet::new();
    out.retain(|v| !v.is_empty() && seen.insert(format!("{v:?}")));
    out
}

/// First quasi-isomorphism `x → y` among the candidates, if any.
pub fn find_quasi_isomorphism(a: &AInfInstance, x: usize, y: usize, seed: u64) -> Result<Option<SparseVec>> {
    for c in quasi_iso_candidates(a, x, y, seed) {
        if is_quasi_isomorphism(a, x, y, &c)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// Witness `(X_-, X_+, f_-, f_+)` for one collection and object.
#[derive(Clone, Debug, PartialEq)]
pub struct Witness {
    pub minus: usize,
    pub plus: usize,
    pub f_minus: SparseVec,
    pub f_plus: SparseVec,
}

/// Witnesses keyed by (collection of sequences, object).
#[derive(Clone, Debug, Default)]
pub struct ExtensionWitnessTable {
    pub entries: BTreeMap<(Vec<Vec<usize>>, usize), Witness>,
}

/// Result of a bounded extension-property check.
#[derive(Clone, Debug)]
pub struct ExtensionReport {
    /// Largest collection size examined.
    pub bound: usize,
    /// Longest sequence that can appear inside a witnessed sequence.
    pub max_sequence_len: usize,
    /// Number of (collection, object) pairs examined.
    pub checked: usize,
    pub missing: Vec<(Vec<Vec<usize>>, usize)>,
    pub witnesses: ExtensionWitnessTable,
}

impl ExtensionReport {
    pub fn holds(&self) -> bool {
        self.missing.is_empty()
    }
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return;
    }
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Bounded-exhaustive check of the extension property over collections of at
/// most `bound` transversal sequences, including the empty collection.
///
/// For an explicit family with longest sequence `L`, only sequences of length
/// at most `L - 2` can sit between `X_-` and `X_+`. For the full family every
/// extended sequence is transversal, so only the empty collection is examined.
pub fn check_extension_property(a: &AInfInstance, bound: usize, seed: u64) -> Result<ExtensionReport> {
    let n = a.n_objects();
    let mut into: Vec<Vec<(usize, SparseVec)>> = vec![Vec::new(); n];
    let mut out_of: Vec<Vec<(usize, SparseVec)>> = vec![Vec::new(); n];
    for x in 0..n {
        for y in 0..n {
            if let Some(f) = find_quasi_isomorphism(a, x, y, seed)? {
                out_of[x].push((y, f.clone()));
                into[y].push((x, f));
            }
        }
    }
    let (seqs, max_len) = match a.family() {
        Family::Full => (Vec::new(), usize::MAX),
        Family::Explicit(set) => {
            let l = set.iter().map(|s| s.len()).max().unwrap_or(0);
            let m = l.saturating_sub(2);
            (set.iter().filter(|s| s.len() <= m).cloned().collect::<Vec<_>>(), m)
        }
    };
    let limit = if matches!(a.family(), Family::Full) { 0 } else { bound.min(seqs.len()) };
    let mut report = ExtensionReport {
        bound,
        max_sequence_len: max_len,
        checked: 0,
        missing: Vec::new(),
        witnesses: ExtensionWitnessTable::default(),
    };
    for k in 0..=limit {
        let mut collections = Vec::new();
        combinations(seqs.len(), k, |idx| collections.push(idx.iter().map(|&i| seqs[i].clone()).collect::<Vec<_>>()));
        for coll in collections {
            for x in 0..n {
                report.checked += 1;
                let mut found = None;
                'search: for (m, fm) in &into[x] {
                    for (p, fp) in &out_of[x] {
                        let ok = coll.iter().all(|s| {
                            let mut t = vec![*m];
                            t.extend(s);
                            t.push(*p);
                            a.is_transversal(&t)
                        });
                        if ok {
                            found = Some(Witness { minus: *m, plus: *p, f_minus: fm.clone(), f_plus: fp.clone() });
                            break 'search;
                        }
                    }
                }
                match found {
                    Some(w) => {
                        report.witnesses.entries.insert((coll.clone(), x), w);
                    }
                    None => report.missing.push((coll.clone(), x)),
                }
            }
        }
    }
    Ok(report)
}

/// Restriction of a category to a subsequence-closed family.
pub fn restrict_from_ambient(d: &AInfInstance, family: Family) -> Result<AInfInstance> {
    family.validate(d.n_objects())?;
    if let Some(v) = check_relations(d).first() {
        return Err(Error::Relation(v.to_string()));
    }
    d.restrict(family)
}

/// Strict identity of `x` found by solving the unit equations for `m_2`.
pub fn find_strict_identity(a: &AInfInstance, x: usize) -> Result<Option<SparseVec>> {
    let field = a.field();
    let hxx = a.hom(x, x)?.clone();
    let unknowns: Vec<usize> = (0..hxx.dim()).filter(|&i| a.grading().eq(hxx.degree(i), 0)).collect();
    let one = field.one();
    let mut cols: Vec<SparseVec> = vec![Vec::new(); unknowns.len()];
    let mut rhs: SparseVec = Vec::new();
    let mut offset = 0;
    let mut push =
        |cols: &mut Vec<SparseVec>, rhs: &mut SparseVec, images: Vec<SparseVec>, target: &SparseVec, dim: usize| {
            for (c, im) in cols.iter_mut().zip(images) {
                c.extend(im.into_iter().map(|(i, s)| (i + offset, s)));
            }
            rhs.extend(target.iter().map(|(i, s)| (i + offset, s.clone())));
            offset += dim;
        };
    for y in 0..a.n_objects() {
        if a.is_transversal(&[y, x, x]) {
            let d = a.hom(y, x)?.dim();
            for j in 0..d {
                let phi: SparseVec = vec![(j, one.clone())];
                let images =
                    unknowns.iter().map(|&u| a.apply(&[y, x, x], &[vec![(u, one.clone())], phi.clone()])).collect();
                push(&mut cols, &mut rhs, images, &phi, d);
            }
        }
        if a.is_transversal(&[x, x, y]) {
            let d = a.hom(x, y)?.dim();
            for j in 0..d {
                let psi: SparseVec = vec![(j, one.clone())];
                let images =
                    unknowns.iter().map(|&u| a.apply(&[x, x, y], &[psi.clone(), vec![(u, one.clone())]])).collect();
                push(&mut cols, &mut rhs, images, &psi, d);
            }
        }
    }
    let m = Matrix::from_cols(field, offset, &cols);
    let Some(sol) = m.solve_sparse(&rhs) else { return Ok(None) };
    let e: SparseVec = sol.into_iter().map(|(k, s)| (unknowns[k], s)).collect();
    Ok(if is_strict_identity(a, x, &e)? { Some(e) } else { None })
}

/// A graded pre-category: a family inside an ambient graded category.
#[derive(Clone, Debug)]
pub struct GradedPreCategory {
    ambient: Arc<AInfInstance>,
    instance: Arc<AInfInstance>,
    identities: Vec<SparseVec>,
}

impl GradedPreCategory {
    /// Validates the ambient (full family, only `m_2`, associative, strict
    /// identities) and restricts it to `family`.
    pub fn new(ambient: AInfInstance, family: Family) -> Result<GradedPreCategory> {
        if !ambient.is_full() {
            return Err(Error::Invalid("the ambient category must use the full family".into()));
        }
        if let Some(seq) = ambient.ops().keys().find(|s| s.len() != 3) {
            return Err(Error::Invalid(format!("the ambient has a nonzero m_{}", seq.len() - 1)));
        }
        if let Some(v) = check_relations(&ambient).first() {
            return Err(Error::Relation(v.to_string()));
        }
        let mut identities = Vec::new();
        for x in 0..ambient.n_objects() {
            match find_strict_identity(&ambient, x)? {
                Some(e) => identities.push(e),
                None => return Err(Error::Invalid(format!("object {} has no strict identity", ambient.name(x)))),
            }
        }
        let instance = ambient.restrict(family)?;
        Ok(GradedPreCategory { ambient: Arc::new(ambient), instance: Arc::new(instance), identities })
    }

    pub fn ambient(&self) -> &Arc<AInfInstance> {
        &self.ambient
    }

    /// The pre-category itself: ambient data on transversal sequences.
    pub fn instance(&self) -> &Arc<AInfInstance> {
        &self.instance
    }

    pub fn identity(&self, x: usize) -> &SparseVec {
        &self.identities[x]
    }

    /// Two-sided inverse of `f: x1 → x2` under ambient composition.
    pub fn ambient_inverse(&self, x1: usize, x2: usize, f: &SparseVec) -> Result<Option<SparseVec>> {
        let a = &self.ambient;
        let field = a.field();
        let one = field.one();
        let h21 = a.hom(x2, x1)?;
        let unknowns: Vec<usize> = (0..h21.dim()).filter(|&i| a.grading().eq(h21.degree(i), 0)).collect();
        let cols: Vec<SparseVec> =
            unknowns.iter().map(|&u| a.apply(&[x1, x2, x1], &[vec![(u, one.clone())], f.clone()])).collect();
        let m = Matrix::from_cols(field, a.hom(x1, x1)?.dim(), &cols);
        let Some(sol) = m.solve_sparse(&self.identities[x1]) else { return Ok(None) };
        let g: SparseVec = sol.into_iter().map(|(k, s)| (unknowns[k], s)).collect();
        let back = a.apply(&[x2, x1, x2], &[f.clone(), g.clone()]);
        Ok(if back == self.identities[x2] { Some(g) } else { None })
    }

    /// Quasi-isomorphism test for zero differential: both composition maps
    /// are isomorphisms of graded spaces.
    pub fn is_quasi_isomorphism_graded(&self, x1: usize, x2: usize, f: &SparseVec) -> Result<bool> {
        let a = &self.instance;
        check_closed_degree_zero(a, x1, x2, f)?;
        let field = a.field();
        let iso = |images: Vec<SparseVec>, dim_out: usize| {
            images.len() == dim_out && Matrix::from_cols(field, dim_out, &images).rank() == dim_out
        };
        for x0 in 0..a.n_objects() {
            if a.is_transversal(&[x0, x1, x2]) && !iso(left_mult(a, x0, x1, x2, f)?, a.hom(x0, x2)?.dim()) {
                return Ok(false);
            }
        }
        for x3 in 0..a.n_objects() {
            if a.is_transversal(&[x1, x2, x3]) && !iso(right_mult(a, x1, x2, x3, f)?, a.hom(x1, x3)?.dim()) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Candidate quasi-isomorphisms of the pre-category that lack an ambient inverse.
    pub fn check_ambient_invertibility(&self, seed: u64) -> Result<Vec<(usize, usize, SparseVec)>> {
        let a = &self.instance;
        let mut bad = Vec::new();
        for seq in a.sequences(2) {
            for c in quasi_iso_candidates(a, seq[0], seq[1], seed) {
                if is_quasi_isomorphism(a, seq[0], seq[1], &c)? && self.ambient_inverse(seq[0], seq[1], &c)?.is_none() {
                    bad.push((seq[0], seq[1], c));
                }
            }
        }
        Ok(bad)
    }
}

/// Outcome of [`check_quasi_equivalence`].
#[derive(Clone, Debug, Default)]
pub struct QuasiEquivalenceReport {
    /// Transversal pairs on which `f_1` is not a quasi-isomorphism.
    pub bad_pairs: Vec<(usize, usize)>,
    /// Target objects not quasi-isomorphic to any image object.
    pub unreached: Vec<usize>,
}

impl QuasiEquivalenceReport {
    pub fn holds(&self) -> bool {
        self.bad_pairs.is_empty() && self.unreached.is_empty()
    }
}

/// Checks that `f_1` is a quasi-isomorphism on every transversal pair and
/// that every target object is quasi-isomorphic to an image object.
pub fn check_quasi_equivalence(f: &AInfFunctor, seed: u64) -> Result<QuasiEquivalenceReport> {
    let a = f.source();
    let b = f.target();
    let field = a.field();
    let mut report = QuasiEquivalenceReport::default();
    for seq in a.sequences(2) {
        let (x, y) = (seq[0], seq[1]);
        let (fx, fy) = (f.object_map()[x], f.object_map()[y]);
        let phi = f.linear_part(x, y);
        let ok = is_qis_of_complexes(
            field,
            a.hom(x, y)?,
            &a.differential(x, y),
            b.hom(fx, fy)?,
            &b.differential(fx, fy),
            &phi,
        )?;
        if !ok {
            report.bad_pairs.push((x, y));
        }
    }
    let image: BTreeSet<usize> = f.object_map().iter().copied().collect();
    for y in 0..b.n_objects() {
        if image.contains(&y) {
            continue;
        }
        let mut reached = false;
        for &x in &image {
            if find_quasi_isomorphism(b, x, y, seed)?.is_some() || find_quasi_isomorphism(b, y, x, seed)?.is_some() {
                reached = true;
                break;
            }
        }
        if !reached {
            report.unreached.push(y);
        }
    }
    Ok(report)
}
