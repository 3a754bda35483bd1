use std::sync::Arc;

use ainf::ainf::check_relations;
use ainf::fixtures::{complexes_category, Complex};
use ainf::linalg::{sparse_axpy, to_sparse};
use ainf::twisted::{build_pretr, cone, NilpotentAInf, PosElement, PreTr, ShiftedObject, TwistedComplex};
use ainf::{AInfInstance, Field, Grading, Matrix, SparseVec, Table};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{random_complex, rng};

/// Closed elements of base degree `d` in `Hom(x, y)`.
pub fn closed_elements(a: &AInfInstance, x: usize, y: usize, d: i64) -> Vec<SparseVec> {
    let h = a.hom(x, y).unwrap();
    let idx = h.basis_in_degree(d);
    let m1 = a.differential(x, y);
    let cols: Vec<SparseVec> = idx.iter().map(|&i| m1[i].clone()).collect();
    let m = Matrix::from_cols(a.field(), h.dim(), &cols);
    m.kernel_basis().iter().map(|k| to_sparse(k).into_iter().map(|(j, c)| (idx[j], c)).collect()).collect()
}

pub fn random_closed(r: &mut ChaCha8Rng, a: &AInfInstance, x: usize, y: usize, d: i64) -> SparseVec {
    let f = a.field();
    let mut out: SparseVec = Vec::new();
    for k in closed_elements(a, x, y, d) {
        out = sparse_axpy(&out, &f.int(r.gen_range(0..=2)), &k);
    }
    out
}

pub fn obj(g: Grading, base: usize, shift: i64) -> ShiftedObject {
    ShiftedObject::new(g, base, shift)
}

/// Random twisted complex of length one, two or three over a category of complexes.
pub fn random_twisted(r: &mut ChaCha8Rng, a: &AInfInstance, name: &str, kind: usize) -> TwistedComplex {
    let g = a.grading();
    let n = a.n_objects();
    let (x, y, z) = (r.gen_range(0..n), r.gen_range(0..n), r.gen_range(0..n));
    match kind {
        0 => TwistedComplex::new(name, vec![obj(g, x, r.gen_range(-1..=1))], PosElement::new()),
        1 => {
            let f = random_closed(r, a, x, y, 0);
            let mut e = cone(a, obj(g, x, 0), obj(g, y, 0), &f).unwrap();
            e.name = name.into();
            e
        }
        _ => {
            let f = random_closed(r, a, x, y, 0);
            let mut h = random_closed(r, a, y, z, 0);
            if !a.apply(&[x, y, z], &[h.clone(), f.clone()]).is_empty() {
                h.clear();
            }
            let mut alpha = PosElement::new();
            alpha.insert((0, 1), f);
            alpha.insert((1, 2), h);
            alpha.insert((0, 2), random_closed(r, a, x, z, -1));
            TwistedComplex::new(name, vec![obj(g, x, 2), obj(g, y, 1), obj(g, z, 0)], alpha)
        }
    }
}

/// The ordinary complex `⊕ S_i[n_i]` with differential `⊕ (-1)^{n_i} d_i + α`.
pub fn totalize(cx: &[Complex], e: &TwistedComplex, field: Field) -> (Complex, Vec<usize>) {
    let mut basis = Vec::new();
    let mut offsets = Vec::new();
    for (i, o) in e.objects.iter().enumerate() {
        offsets.push(basis.len());
        basis.extend(cx[o.base].basis.iter().map(|(s, d)| (format!("{s}.{i}"), d - o.shift)));
    }
    let mut d = vec![Vec::new(); basis.len()];
    for (i, o) in e.objects.iter().enumerate() {
        let s = field.sign(o.shift);
        for (v, dv) in cx[o.base].d.iter().enumerate() {
            d[offsets[i] + v] = dv.iter().map(|(w, c)| (offsets[i] + w, &s * c)).collect();
        }
    }
    for ((i, j), v) in &e.alpha {
        let dim_i = cx[e.objects[*i].base].basis.len();
        for (idx, c) in v {
            let (w, u) = (idx / dim_i, idx % dim_i);
            let col = offsets[*i] + u;
            d[col] = sparse_axpy(&d[col], c, &vec![(offsets[*j] + w, field.one())]);
        }
    }
    (Complex { name: e.name.clone(), basis, d }, offsets)
}

/// Index in the ordinary `Hom(Tot E1, Tot E2)` of each basis element of the twisted hom.
pub fn hom_map(p: &PreTr, cx: &[Complex], tots: &[(Complex, Vec<usize>)], e1: usize, e2: usize) -> Vec<usize> {
    let b = p.hom_basis(e1, e2).unwrap();
    let s1 = &p.complexes()[e1].objects;
    let dim1 = tots[e1].0.basis.len();
    (0..b.dim())
        .map(|i| {
            let ((a, c), j) = b.component(i);
            let n = cx[s1[a].base].basis.len();
            let (w, v) = (j / n, j % n);
            (tots[e2].1[c] + w) * dim1 + tots[e1].1[a] + v
        })
        .collect()
}

pub fn mapped_table(t: &Table, inputs: &[Vec<usize>], output: &[usize]) -> Table {
    t.iter()
        .map(|(k, v)| {
            let key = k.iter().zip(inputs).map(|(i, m)| m[*i]).collect();
            let mut out: SparseVec = v.iter().map(|(i, c)| (output[*i], c.clone())).collect();
            out.sort_by_key(|(i, _)| *i);
            (key, out)
        })
        .collect()
}

pub struct Fixture {
    pub base: Arc<AInfInstance>,
    pub cx: Vec<Complex>,
    pub pretr: PreTr,
}

pub fn fixture(salt: u64, field: Field, grading: Grading, n_complexes: usize, max_arity: usize) -> Fixture {
    let mut r = rng(salt);
    let n = r.gen_range(2..=3);
    let cx: Vec<Complex> = (0..n).map(|i| random_complex(&mut r, field, &format!("V{i}"))).collect();
    let base = Arc::new(complexes_category(field, grading, max_arity, &cx).unwrap());
    let es = (0..n_complexes)
        .map(|i| {
            let kind = r.gen_range(0..3);
            random_twisted(&mut r, &base, &format!("E{i}"), kind)
        })
        .collect();
    let pretr = build_pretr(base.clone(), es).unwrap();
    Fixture { base, cx, pretr }
}

/// Over a category of complexes, twisted complexes are their totalizations:
/// `m_1` is the ordinary differential of maps, `m_2` is composition, higher products vanish.
pub fn matches_totalization(fx: &Fixture) -> Result<(), String> {
    let field = fx.base.field();
    let tots: Vec<(Complex, Vec<usize>)> = fx.pretr.complexes().iter().map(|e| totalize(&fx.cx, e, field)).collect();
    let honest_cx: Vec<Complex> = tots.iter().map(|(c, _)| c.clone()).collect();
    let honest = complexes_category(field, fx.base.grading(), 2, &honest_cx).unwrap();
    if !check_relations(&honest).is_empty() {
        return Err("totalization is not a complex".into());
    }
    let inst = fx.pretr.instance();
    for len in 2..=inst.max_arity() + 1 {
        for seq in inst.sequences(len) {
            let got = inst.op(&seq).map(|o| o.entries().clone()).unwrap_or_default();
            if len > 3 {
                if !got.is_empty() {
                    return Err(format!("nonzero product on {seq:?}"));
                }
                continue;
            }
            let n = seq.len() - 1;
            let inputs: Vec<Vec<usize>> =
                (0..n).map(|w| hom_map(&fx.pretr, &fx.cx, &tots, seq[n - w - 1], seq[n - w])).collect();
            let output = hom_map(&fx.pretr, &fx.cx, &tots, seq[0], seq[n]);
            let want = honest.op(&seq).map(|o| o.entries().clone()).unwrap_or_default();
            if mapped_table(&got, &inputs, &output) != want {
                return Err(format!("products differ on {seq:?}"));
            }
        }
    }
    Ok(())
}

/// `dim = 2 rank` for the differential on `Hom(e1, e2)`.
pub fn hom_is_acyclic(p: &PreTr, e1: usize, e2: usize) -> bool {
    let inst = p.instance();
    let dim = inst.hom(e1, e2).unwrap().dim();
    let rank = Matrix::from_cols(inst.field(), dim, &inst.differential(e1, e2)).rank();
    dim == 2 * rank
}

/// Random degree-zero element of a nilpotent algebra.
pub fn random_gauge(r: &mut ChaCha8Rng, n: &NilpotentAInf) -> SparseVec {
    let f = n.field();
    let mut idx: Vec<usize> = (1..n.length).flat_map(|w| n.graded_piece(w, 0)).collect();
    idx.sort();
    idx.into_iter()
        .filter_map(|i| {
            let c = f.int(r.gen_range(0..=2));
            (!c.is_zero()).then_some((i, c))
        })
        .collect()
}

/// Sum of diagonal basis elements of `Hom(x, x)` in a category of complexes.
pub fn identity_of(a: &AInfInstance, x: usize) -> SparseVec {
    let n = (a.hom(x, x).unwrap().dim() as f64).sqrt() as usize;
    (0..n).map(|i| (i * n + i, a.field().one())).collect()
}

/// `1 + h` as a morphism between twisted complexes on the same objects.
pub fn one_plus(a: &AInfInstance, objects: &[ShiftedObject], h: &PosElement) -> PosElement {
    let mut out = h.clone();
    for (i, o) in objects.iter().enumerate() {
        out.insert((i, i), identity_of(a, o.base));
    }
    out
}

/// `X ⊕ (u → v)` with an acyclic pair in degrees `k`, `k + 1`.
pub fn with_acyclic_pair(x: &Complex, k: i64, field: Field) -> Complex {
    let n = x.basis.len();
    let mut basis = x.basis.clone();
    basis.push((format!("{}u", x.name), k));
    basis.push((format!("{}v", x.name), k + 1));
    let mut d = x.d.clone();
    d.push(vec![(n + 1, field.one())]);
    d.push(Vec::new());
    Complex { name: format!("{}'", x.name), basis, d }
}

/// Independent check that `g` is a chain map inducing an isomorphism on cohomology.
pub fn is_honest_qis(x: &Complex, y: &Complex, g: &SparseVec, field: Field) -> bool {
    let (dx, dy) = (Matrix::from_cols(field, x.basis.len(), &x.d), Matrix::from_cols(field, y.basis.len(), &y.d));
    let mut gm = Matrix::zeros(field, y.basis.len(), x.basis.len());
    for (idx, c) in g {
        gm.set(idx / x.basis.len(), idx % x.basis.len(), c.clone());
    }
    if !gm.mul(&dx).unwrap().sub(&dy.mul(&gm).unwrap()).unwrap().is_zero() {
        return false;
    }
    let hx = x.basis.len() - 2 * dx.rank();
    let hy = y.basis.len() - 2 * dy.rank();
    let z: Vec<SparseVec> = dx.kernel_basis().iter().map(|v| gm.mul_sparse(&to_sparse(v))).collect();
    let images = Matrix::from_cols(field, y.basis.len(), &z).hstack(&dy).unwrap();
    hx == hy && images.rank() - dy.rank() == hx
}
