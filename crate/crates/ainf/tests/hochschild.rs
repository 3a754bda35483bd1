mod common;

use ainf::ainf::for_each_tuple;
use ainf::fixtures::{
    algebra, collapse_functor, copies, dual_numbers_spec, exterior_spec, nondecreasing_family, AlgebraSpec,
};
use ainf::hochschild::{
    cc_dimensions, eval_table, hh_dimensions, induced_hh_iso_check, restriction_commutes, simplicial_action,
    HochschildComplex, Restriction,
};
use ainf::linalg::sparse_axpy;
use ainf::precat::GradedPreCategory;
use ainf::transfer::cohomology_category;
use ainf::{AInfFunctor, Family, Field, Grading, SparseVec};
use common::arc;
use proptest::prelude::*;
use rand::Rng;

fn one_object(f: Field, spec: &AlgebraSpec) -> GradedPreCategory {
    GradedPreCategory::new(algebra(f, Grading::Z, 2, spec).unwrap(), Family::Full).unwrap()
}

fn massey_cohomology(f: Field) -> GradedPreCategory {
    let a = algebra(f, Grading::Z, 2, &ainf::fixtures::massey_spec(true)).unwrap();
    GradedPreCategory::new(cohomology_category(&a).unwrap(), Family::Full).unwrap()
}

fn hh_column(pc: &GradedPreCategory, arity: usize, j: i64) -> Vec<usize> {
    let t = hh_dimensions(pc, arity).unwrap();
    (0..arity).map(|i| t.iter().find(|e| e.i == i && e.j == j).map_or(0, |e| e.hh_dim)).collect()
}

#[test]
fn dual_numbers_hochschild_cohomology() {
    // Characteristic zero: k[ε] has HH^0 = 2 and HH^n = 1 for n ≥ 1.
    assert_eq!(hh_column(&one_object(Field::Rational, &dual_numbers_spec()), 5, 0), vec![2, 1, 1, 1, 1]);
    // In characteristic two every HH^n is two-dimensional.
    assert_eq!(hh_column(&one_object(Field::Prime(2), &dual_numbers_spec()), 5, 0), vec![2, 2, 2, 2, 2]);
}

#[test]
fn table_entries_are_consistent() {
    let pc = one_object(Field::Rational, &exterior_spec());
    let t = hh_dimensions(&pc, 3).unwrap();
    for e in &t {
        assert!(e.hh_dim <= e.cc_dim);
        assert_eq!(e.is_final, e.i < 3);
    }
    // A two-dimensional algebra has 2^(i+1) coordinates in arity i.
    let cc = cc_dimensions(&pc, 3).unwrap();
    for i in 0..=3usize {
        let total: usize = cc.iter().filter(|((a, _), _)| *a == i).map(|(_, d)| d).sum();
        assert_eq!(total, 1 << (i + 1));
    }
}

#[test]
fn differential_squares_to_zero() {
    let cases = [
        one_object(Field::Rational, &dual_numbers_spec()),
        one_object(Field::Prime(3), &exterior_spec()),
        massey_cohomology(Field::Rational),
        GradedPreCategory::new(
            copies(&algebra(Field::Rational, Grading::Z, 2, &exterior_spec()).unwrap(), 2, Family::Full).unwrap(),
            nondecreasing_family(2, 4),
        )
        .unwrap(),
    ];
    for pc in &cases {
        let cx = HochschildComplex::new(pc, 3).unwrap();
        for i in 0..2 {
            for j in cx.occupied(i) {
                let d0 = cx.differential_matrix(i, j).unwrap();
                let d1 = cx.differential_matrix(i + 1, j).unwrap();
                assert!(d1.mul(&d0).unwrap().is_zero(), "∂∂ ≠ 0 at ({i}, {j})");
            }
        }
    }
}

/// The differential written out directly for a one-object algebra:
/// `Σ (-1)^{n-i} φ(…, a_{i+1}a_i, …) + (-1)^n φ(a_{n+1}, …, a_2)a_1
///  + (-1)^{p|a_{n+1}|+1} a_{n+1}φ(a_n, …, a_1)`.
fn oracle(pc: &GradedPreCategory, phi: &ainf::hochschild::HochschildCochain, key: &[usize]) -> SparseVec {
    let a = pc.ambient();
    let f = a.field();
    let h = a.hom(0, 0).unwrap().clone();
    let n = key.len() - 1;
    let basis = |i: usize| vec![(i, f.one())];
    let mul = |x: &SparseVec, y: &SparseVec| a.apply(&[0, 0, 0], &[x.clone(), y.clone()]);
    let table = |k: usize| phi.comps.get(&vec![0; k + 1]).cloned().unwrap_or_default();
    let phi_n = table(n);
    // a_k sits in written slot n + 1 - k.
    let arg = |k: usize| basis(key[n + 1 - k]);
    let mut out: SparseVec = Vec::new();
    for i in 1..=n {
        let mut ins: Vec<SparseVec> = Vec::new();
        for k in (1..=n + 1).rev() {
            if k == i + 1 {
                ins.push(mul(&arg(i + 1), &arg(i)));
            } else if k != i {
                ins.push(arg(k));
            }
        }
        out = sparse_axpy(&out, &f.sign((n - i) as i64), &eval_table(&phi_n, &ins));
    }
    let right: Vec<SparseVec> = (2..=n + 1).rev().map(arg).collect();
    out = sparse_axpy(&out, &f.sign(n as i64), &mul(&eval_table(&phi_n, &right), &arg(1)));
    let left: Vec<SparseVec> = (1..=n).rev().map(arg).collect();
    let top = h.degree(key[0]);
    out = sparse_axpy(&out, &f.sign(phi.degree * top + 1), &mul(&arg(n + 1), &eval_table(&phi_n, &left)));
    out
}

proptest! {
    #![proptest_config(common::proptest_config(32))]

    #[test]
    fn differential_matches_direct_formula(salt in 0u64..10_000, arity in 0usize..3, which in 0usize..2) {
        let spec = if which == 0 { exterior_spec() } else { dual_numbers_spec() };
        let pc = one_object(Field::Prime(7), &spec);
        let cx = HochschildComplex::new(&pc, 3).unwrap();
        let mut r = common::rng(salt);
        let js = cx.occupied(arity);
        let j = js[r.gen_range(0..js.len())];
        let f = Field::Prime(7);
        let v: SparseVec = (0..cx.dim(arity, j)).filter_map(|k| {
            let c = f.int(r.gen_range(-3..=3));
            (!c.is_zero()).then_some((k, c))
        }).collect();
        let phi = cx.from_vector(arity, j, &v);
        let dphi = cx.differential(&phi).unwrap();
        let dim = pc.ambient().hom(0, 0).unwrap().dim();
        let mut bad = 0;
        for_each_tuple(&vec![dim; arity + 1], |key| {
            if dphi.get(&vec![0; arity + 2], key) != oracle(&pc, &phi, key) {
                bad += 1;
            }
        });
        prop_assert_eq!(bad, 0);
        // The matrix form agrees with the cochain form.
        let m = cx.differential_matrix(arity, j).unwrap();
        prop_assert_eq!(m.mul_sparse(&v), cx.to_vector(&dphi).unwrap());
    }
}

#[test]
fn restriction_to_a_non_decreasing_family() {
    let f = Field::Rational;
    let d = arc(algebra(f, Grading::Z, 2, &dual_numbers_spec()).unwrap());
    let amb = arc(copies(&d, 3, Family::Full).unwrap());
    let src = GradedPreCategory::new(amb.as_ref().clone(), nondecreasing_family(3, 5)).unwrap();
    let tgt = GradedPreCategory::new(d.as_ref().clone(), Family::Full).unwrap();
    let collapse = collapse_functor(amb.clone(), d.clone()).unwrap();
    let r = Restriction::new(collapse, &src, &tgt).unwrap();
    let (cs, ct) = (HochschildComplex::new(&src, 3).unwrap(), HochschildComplex::new(&tgt, 3).unwrap());
    for i in 0..3 {
        for j in ct.occupied(i) {
            assert!(restriction_commutes(&r, &cs, &ct, i, j).unwrap());
        }
    }
    let iso = induced_hh_iso_check(&r, &cs, &ct).unwrap();
    assert!(!iso.is_empty());
    for e in &iso {
        assert!(e.iso, "{e:?}");
        assert_eq!(e.dim_source, e.dim_target);
    }
}

#[test]
fn restriction_requires_bijective_linear_part() {
    let f = Field::Rational;
    let d = arc(algebra(f, Grading::Z, 2, &dual_numbers_spec()).unwrap());
    let pc = GradedPreCategory::new(d.as_ref().clone(), Family::Full).unwrap();
    let zero = AInfFunctor::new(d.clone(), d.clone(), vec![0]).unwrap();
    assert!(Restriction::new(zero, &pc, &pc).is_err());
    assert!(Restriction::new(AInfFunctor::identity(d), &pc, &pc).is_ok());
}

#[test]
fn simplicial_action_of_identity() {
    let f = Field::Rational;
    let pc = one_object(f, &dual_numbers_spec());
    let cx = HochschildComplex::new(&pc, 2).unwrap();
    let mut r = common::rng(5);
    for arity in 1..=2usize {
        for j in cx.occupied(arity) {
            let v: SparseVec = (0..cx.dim(arity, j)).map(|k| (k, f.int(r.gen_range(1..=3)))).collect();
            let phi = cx.from_vector(arity, j, &v);
            let t = phi.comps.get(&vec![0; arity + 1]).cloned().unwrap_or_default();
            let tuple = vec![0; arity + 1];
            let ident: Vec<usize> = (0..=arity).collect();
            for_each_tuple(&vec![2; arity], |key| {
                let ins: Vec<SparseVec> = key.iter().map(|&i| vec![(i, f.one())]).collect();
                // The identity map acts trivially.
                assert_eq!(simplicial_action(&pc, &ident, &tuple, &t, j, &ins).unwrap(), eval_table(&t, &ins));
            });
        }
    }
    assert!(simplicial_action(&pc, &[1, 0], &[0, 0], &Default::default(), 0, &[vec![]]).is_err());
}
