mod common;

use std::sync::Arc;

use ainf::ainf::for_each_tuple;
use ainf::fixtures::{complexes_category, Complex};
use ainf::graded::{kappa, op_compose_insert, table_sum};
use ainf::linalg::{normalize, sparse_axpy};
use ainf::{Field, GradedSpace, Grading, MultilinearOp, SparseVec, Table};
use proptest::prelude::*;
use rand::Rng;

fn space(g: Grading, degs: &[i64], tag: &str) -> Arc<GradedSpace> {
    let basis = degs.iter().enumerate().map(|(i, d)| (format!("{tag}{i}"), *d)).collect();
    Arc::new(GradedSpace::new(g, basis).unwrap())
}

/// Random homogeneous operation of the given degree.
fn random_op(
    field: Field,
    sources: Vec<Arc<GradedSpace>>,
    target: Arc<GradedSpace>,
    degree: i64,
    salt: u64,
) -> MultilinearOp {
    let mut r = common::rng(salt);
    let dims: Vec<usize> = sources.iter().map(|s| s.dim()).collect();
    let g = target.grading();
    let mut t = Table::new();
    for_each_tuple(&dims, |key| {
        let din: i64 = key.iter().zip(&sources).map(|(i, s)| s.degree(*i)).sum();
        let outs: Vec<usize> = (0..target.dim()).filter(|&o| g.eq(target.degree(o), din + degree)).collect();
        let mut v: SparseVec = Vec::new();
        for o in outs {
            let c = r.gen_range(-2..=2);
            v = sparse_axpy(&v, &field.int(c), &vec![(o, field.one())]);
        }
        if !v.is_empty() {
            t.insert(key.to_vec(), v);
        }
    });
    MultilinearOp::new(field, sources, target, degree, t).unwrap()
}

fn random_vec(field: Field, dim: usize, r: &mut impl Rng) -> SparseVec {
    let mut v = Vec::new();
    for i in 0..dim {
        v = sparse_axpy(&v, &field.int(r.gen_range(-3..=3)), &vec![(i, field.one())]);
    }
    v
}

fn basis(field: Field, i: usize) -> SparseVec {
    vec![(i, field.one())]
}

fn degs() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-1i64..=2, 1..=3)
}

proptest! {
    #![proptest_config(common::proptest_config(256))]

    #[test]
    fn shifts_compose(d in degs(), a in -3i64..3, b in -3i64..3) {
        let v = space(Grading::Z, &d, "v");
        prop_assert!(v.shift(a).shift(b).same_as(&v.shift(a + b)));
        prop_assert!(v.shift(0).same_as(&v));
        for i in 0..v.dim() {
            prop_assert_eq!(v.shift(a).degree(i), v.degree(i) - a);
        }
    }

    #[test]
    fn evaluate_is_multilinear(d1 in degs(), d2 in degs(), dt in degs(), deg in -1i64..=1, salt in 0u64..1000, slot in 0usize..2) {
        let f = Field::Rational;
        let (s1, s2, t) = (space(Grading::Z, &d1, "a"), space(Grading::Z, &d2, "b"), space(Grading::Z, &dt, "c"));
        let op = random_op(f, vec![s1.clone(), s2.clone()], t, deg, salt);
        let mut r = common::rng(salt + 1);
        let dims = [s1.dim(), s2.dim()];
        let x: Vec<SparseVec> = dims.iter().map(|&n| random_vec(f, n, &mut r)).collect();
        let u = random_vec(f, dims[slot], &mut r);
        let (a, b) = (f.int(r.gen_range(-3..=3)), f.int(r.gen_range(-3..=3)));
        let mut mixed = x.clone();
        mixed[slot] = sparse_axpy(&normalize(x[slot].iter().map(|(i, c)| (*i, c * &a)).collect()), &b, &u);
        let mut with_u = x.clone();
        with_u[slot] = u;
        let lhs = op.evaluate(&mixed).unwrap();
        let rhs = sparse_axpy(&normalize(op.evaluate(&x).unwrap().iter().map(|(i, c)| (*i, c * &a)).collect()), &b, &op.evaluate(&with_u).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    /// Insertion agrees with evaluating `f` on the output of `g`, signed by
    /// `deg(g) · Σ(degrees left of the slot) + constant`.
    #[test]
    fn insertion_matches_substitution(
        df in prop::collection::vec(degs(), 2..=3),
        dg in prop::collection::vec(degs(), 1..=2),
        fdeg in -1i64..=1, gdeg in -1i64..=1, slot in 0usize..3, constant in 0i64..2, salt in 0u64..1000,
    ) {
        let f = Field::Prime(7);
        let fsrc: Vec<_> = df.iter().enumerate().map(|(k, d)| space(Grading::Z, d, &format!("s{k}_"))).collect();
        let l = slot % fsrc.len();
        let gsrc: Vec<_> = dg.iter().enumerate().map(|(k, d)| space(Grading::Z, d, &format!("g{k}_"))).collect();
        let fop = random_op(f, fsrc.clone(), space(Grading::Z, &[0, 1, 2], "t"), fdeg, salt);
        let gop = random_op(f, gsrc.clone(), fsrc[l].clone(), gdeg, salt + 7);
        let ins = op_compose_insert(&fop, &gop, l, constant).unwrap();
        let mut srcs: Vec<_> = fsrc[..l].to_vec();
        srcs.extend(gsrc.iter().cloned());
        srcs.extend(fsrc[l + 1..].iter().cloned());
        let dims: Vec<usize> = srcs.iter().map(|s| s.dim()).collect();
        let k = gsrc.len();
        let mut bad = 0;
        for_each_tuple(&dims, |key| {
            let inputs: Vec<SparseVec> = key.iter().map(|&i| basis(f, i)).collect();
            let inner = gop.evaluate(&inputs[l..l + k]).unwrap();
            let mut outer_in: Vec<SparseVec> = inputs[..l].to_vec();
            outer_in.push(inner);
            outer_in.extend(inputs[l + k..].iter().cloned());
            let left: i64 = key[..l].iter().zip(&srcs).map(|(i, s)| s.degree(*i)).sum();
            let s = f.sign(gdeg * left + constant);
            let expect: SparseVec = fop.evaluate(&outer_in).unwrap().into_iter().map(|(i, c)| (i, &c * &s)).collect();
            if ins.evaluate(&inputs).unwrap() != expect {
                bad += 1;
            }
        });
        prop_assert_eq!(bad, 0);
    }

    /// Sign exponents only depend on degree parities.
    #[test]
    fn z2_signs_match_z_signs(d in prop::collection::vec(-4i64..=4, 0..6), lift in prop::collection::vec(-2i64..=2, 6)) {
        let lifted: Vec<i64> = d.iter().zip(&lift).map(|(x, l)| x + 2 * l).collect();
        prop_assert_eq!(kappa(&d).rem_euclid(2), kappa(&lifted).rem_euclid(2));
        let reduced: Vec<i64> = d.iter().map(|x| Grading::Z2.reduce(*x)).collect();
        prop_assert_eq!(kappa(&d).rem_euclid(2), kappa(&reduced).rem_euclid(2));
    }

    /// Re-reading the same tables with Z/2 degrees leaves insertion unchanged.
    #[test]
    fn z2_insertion_tables_match(df in prop::collection::vec(degs(), 2..=2), dg in degs(), salt in 0u64..500, slot in 0usize..2) {
        let f = Field::Rational;
        let spaces = |g: Grading| {
            let fsrc: Vec<_> = df.iter().enumerate().map(|(k, d)| space(g, d, &format!("s{k}_"))).collect();
            (fsrc, space(g, &dg, "g"), space(g, &[-1, 0, 1, 2, 3], "t"))
        };
        let (fz, gz, tz) = spaces(Grading::Z);
        let fop = random_op(f, fz.clone(), tz, 0, salt);
        let gop = random_op(f, vec![gz], fz[slot].clone(), 1, salt + 3);
        let (f2, g2, t2) = spaces(Grading::Z2);
        let fop2 = MultilinearOp::new(f, f2.clone(), t2, 0, fop.entries().clone()).unwrap();
        let gop2 = MultilinearOp::new(f, vec![g2], f2[slot].clone(), 1, gop.entries().clone()).unwrap();
        let a = op_compose_insert(&fop, &gop, slot, 1).unwrap();
        let b = op_compose_insert(&fop2, &gop2, slot, 1).unwrap();
        prop_assert_eq!(a.entries(), b.entries());
    }
}

#[test]
fn inhomogeneous_tables_are_rejected() {
    let f = Field::Rational;
    let a = space(Grading::Z, &[0, 1], "a");
    let mut t = Table::new();
    t.insert(vec![1, 1], vec![(1, f.one())]);
    assert!(MultilinearOp::new(f, vec![a.clone(), a.clone()], a.clone(), 0, t.clone()).is_err());
    // In Z/2 mode the same entry has degree 2 ≡ 0 ≠ 1.
    let a2 = space(Grading::Z2, &[0, 1], "a");
    assert!(MultilinearOp::new(f, vec![a2.clone(), a2.clone()], a2.clone(), 0, t.clone()).is_err());
    // Degree -1 makes it homogeneous in both modes.
    assert!(MultilinearOp::new(f, vec![a.clone(), a.clone()], a.clone(), -1, t).is_ok());
}

#[test]
fn bilinear_example() {
    let f = Field::Rational;
    let (a, b, c) = (space(Grading::Z, &[1], "a"), space(Grading::Z, &[0], "b"), space(Grading::Z, &[1], "c"));
    let mut t = Table::new();
    t.insert(vec![0, 0], vec![(0, f.one())]);
    let op = MultilinearOp::new(f, vec![a, b], c, 0, t).unwrap();
    assert_eq!(op.evaluate(&[vec![(0, f.int(2))], vec![(0, f.int(3))]]).unwrap(), vec![(0, f.int(6))]);
}

/// The three insertion terms of the arity-two relation give the Leibniz rule.
#[test]
fn leibniz_from_insertions() {
    let f = Field::Rational;
    let cx = [
        Complex {
            name: "U".into(),
            basis: vec![("u0".into(), 0), ("u1".into(), 1)],
            d: vec![vec![(1, f.int(3))], vec![]],
        },
        Complex {
            name: "V".into(),
            basis: vec![("v0".into(), -1), ("v1".into(), 0)],
            d: vec![vec![(1, f.one())], vec![]],
        },
    ];
    let a = complexes_category(f, Grading::Z, 2, &cx).unwrap();
    for seq in a.sequences(3) {
        let m2 = a.op(&seq).unwrap();
        let m1_out = a.op(&[seq[0], seq[2]]).unwrap();
        let m1_left = a.op(&[seq[1], seq[2]]).unwrap();
        let m1_right = a.op(&[seq[0], seq[1]]).unwrap();
        let parts = [
            op_compose_insert(m1_out, m2, 0, 0).unwrap(),
            op_compose_insert(m2, m1_left, 0, 1).unwrap(),
            op_compose_insert(m2, m1_right, 1, 1).unwrap(),
        ];
        let sum = table_sum(f, parts.iter().map(|p| p.entries().clone()));
        assert!(sum.values().all(|v| v.is_empty()), "Leibniz fails on {seq:?}");
        // Direct expansion on basis elements.
        let (h1, h0) = (a.hom(seq[1], seq[2]).unwrap().clone(), a.hom(seq[0], seq[1]).unwrap().clone());
        for i in 0..h1.dim() {
            for j in 0..h0.dim() {
                let (p, q) = (basis(f, i), basis(f, j));
                let lhs = a.apply(&[seq[0], seq[2]], &[a.apply(&seq, &[p.clone(), q.clone()])]);
                let t1 = a.apply(&seq, &[a.apply(&[seq[1], seq[2]], std::slice::from_ref(&p)), q.clone()]);
                let t2 = a.apply(&seq, &[p.clone(), a.apply(&[seq[0], seq[1]], std::slice::from_ref(&q))]);
                let rhs = sparse_axpy(&t1, &f.sign(h1.degree(i)), &t2);
                assert_eq!(lhs, rhs);
            }
        }
    }
}
