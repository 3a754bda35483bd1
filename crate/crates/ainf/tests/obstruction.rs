mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use ainf::ainf::{check_functor, check_homotopy, check_relations};
use ainf::fixtures::{algebra, copies, massey_spec, nondecreasing_family};
use ainf::hochschild::{HochschildComplex, Restriction};
use ainf::obstruction::{
    act, element_functor, extendable, find_strong_homotopy, group_compose, group_invert, homotopy_extend,
    lift_homotopy, obstruction_phi, op_cochain, precat_to_cat, pullback, solve_primitive, GCElement, Lifting,
};
use ainf::precat::{check_quasi_equivalence, GradedPreCategory};
use ainf::transfer::{cohomology_category, compute_splitting, transfer_minimal};
use ainf::{AInfFunctor, AInfInstance, Family, Field, FunctorHomotopy, Grading, SparseVec};
use rand::Rng;

/// Minimal model of the unital Massey algebra and its graded cohomology category.
fn massey_minimal(n: usize) -> (AInfInstance, GradedPreCategory) {
    let a = algebra(Field::Rational, Grading::Z, n, &massey_spec(true)).unwrap();
    let t = transfer_minimal(&a, &compute_splitting(&a).unwrap()).unwrap();
    let pc = GradedPreCategory::new(cohomology_category(&a).unwrap(), Family::Full).unwrap();
    (t.minimal.as_ref().clone(), pc)
}

fn random_vec(n: usize, salt: u64) -> SparseVec {
    let f = Field::Rational;
    let mut r = common::rng(salt);
    (0..n).filter_map(|k| (r.gen_bool(0.3)).then(|| (k, f.int(r.gen_range(1..=3))))).collect()
}

/// Random element with components in arities `2..=top`.
fn random_element(cx: &HochschildComplex, top: usize, salt: u64) -> GCElement {
    let mut g = GCElement::identity();
    for k in 2..=top {
        let j = 1 - k as i64;
        let c = cx.from_vector(k, j, &random_vec(cx.dim(k, j), salt * 31 + k as u64));
        g.comps.extend(c.comps.into_iter().filter(|(_, t)| !t.is_empty()));
    }
    g
}

fn same_ops(a: &AInfInstance, b: &AInfInstance) -> bool {
    let nz = |x: &AInfInstance| -> BTreeMap<Vec<usize>, ainf::Table> {
        x.ops().iter().filter(|(_, o)| !o.is_zero()).map(|(s, o)| (s.clone(), o.entries().clone())).collect()
    };
    nz(a) == nz(b)
}

#[test]
fn group_laws() {
    let (m, pc) = massey_minimal(4);
    let cx = HochschildComplex::new(&pc, 4).unwrap();
    for salt in 0..4u64 {
        let (f, g, h) =
            (random_element(&cx, 3, salt), random_element(&cx, 3, salt + 10), random_element(&cx, 3, salt + 20));
        let e = GCElement::identity();
        assert_eq!(group_compose(&m, &f, &e).unwrap(), f);
        assert_eq!(group_compose(&m, &e, &f).unwrap(), f);
        let fi = group_invert(&m, &f).unwrap();
        assert!(group_compose(&m, &f, &fi).unwrap().is_identity());
        assert!(group_compose(&m, &fi, &f).unwrap().is_identity());
        let left = group_compose(&m, &group_compose(&m, &f, &g).unwrap(), &h).unwrap();
        let right = group_compose(&m, &f, &group_compose(&m, &g, &h).unwrap()).unwrap();
        assert_eq!(left, right);
    }
}

#[test]
fn action_is_a_group_action() {
    let (m, pc) = massey_minimal(4);
    let cx = HochschildComplex::new(&pc, 4).unwrap();
    assert!(same_ops(&act(&GCElement::identity(), &m).unwrap(), &m));
    for salt in 0..3u64 {
        let (f, g) = (random_element(&cx, 3, salt + 40), random_element(&cx, 3, salt + 50));
        let gm = act(&g, &m).unwrap();
        assert!(check_relations(&gm).is_empty());
        assert!(gm.is_minimal());
        let func = element_functor(Arc::new(m.clone()), Arc::new(gm.clone()), &g).unwrap();
        assert!(check_functor(&func).is_empty());
        let fg = group_compose(&m, &f, &g).unwrap();
        assert!(same_ops(&act(&fg, &m).unwrap(), &act(&f, &gm).unwrap()));
        // With a single top-arity component the greedy search must succeed.
        let mut top = g.clone();
        top.comps.retain(|s, _| s.len() == 4);
        let tm = act(&top, &m).unwrap();
        let found = find_strong_homotopy(&cx, &m, &tm).unwrap().expect("homotopy exists");
        assert!(same_ops(&act(&found, &m).unwrap(), &tm));
    }
}

#[test]
fn phi_is_the_differential_of_the_next_operation() {
    let (m, pc) = massey_minimal(4);
    let cx = HochschildComplex::new(&pc, 5).unwrap();
    for n in 3..=4 {
        let phi = obstruction_phi(&m, n).unwrap();
        assert_eq!(phi.arity, n + 1);
        let dm = cx.differential(&op_cochain(&m, n)).unwrap();
        assert_eq!(cx.to_vector(&dm).unwrap(), cx.to_vector(&phi).unwrap(), "arity {n}");
        // Φ is exact, with some primitive differing from m_n by a cocycle.
        let chi = solve_primitive(&cx, &phi).unwrap().expect("exact");
        assert_eq!(cx.to_vector(&cx.differential(&chi).unwrap()).unwrap(), cx.to_vector(&phi).unwrap());
    }
}

#[test]
fn solve_primitive_rejects_non_exact_and_non_closed_input() {
    let (_, pc) = massey_minimal(3);
    let cx = HochschildComplex::new(&pc, 3).unwrap();
    // The cochain 1 ↦ a is not closed: ∂φ(1, 1) = -a.
    let h = pc.instance().hom(0, 0).unwrap().clone();
    let (ione, ia) = (h.index_of("1").unwrap(), h.index_of("a").unwrap());
    let mut c = ainf::hochschild::HochschildCochain::zero(1, 1);
    c.comps.insert(vec![0, 0], [(vec![ione], vec![(ia, Field::Rational.one())])].into_iter().collect());
    assert!(solve_primitive(&cx, &c).is_err());
    // Representatives of nonzero classes have no primitive.
    let mut tried = 0;
    for j in cx.occupied(1) {
        for v in cx.cohomology_representatives(1, j).unwrap() {
            let mut z = cx.from_vector(1, j, &v);
            z.degree = j;
            assert!(solve_primitive(&cx, &z).unwrap().is_none());
            tried += 1;
        }
    }
    assert!(tried > 0);
}

#[test]
fn homotopy_extension_produces_homotopic_functors() {
    let (m, pc) = massey_minimal(3);
    let cx = HochschildComplex::new(&pc, 3).unwrap();
    let a = Arc::new(m);
    let id = AInfFunctor::identity(a.clone());
    for salt in 0..3u64 {
        let mut h: BTreeMap<Vec<usize>, ainf::Table> = BTreeMap::new();
        for n in 1..=2usize {
            let j = -(n as i64);
            let c = cx.from_vector(n, j, &random_vec(cx.dim(n, j), salt * 7 + n as u64));
            h.extend(c.comps.into_iter().filter(|(_, t)| !t.is_empty()));
        }
        let f2 = homotopy_extend(&id, &h).unwrap();
        assert!(check_functor(&f2).is_empty());
        let mut hom = FunctorHomotopy::new(id.clone(), f2).unwrap();
        for (s, t) in &h {
            hom.set_comp(s, t.clone()).unwrap();
        }
        assert!(check_homotopy(&hom).is_empty());
    }
}

/// Minimal two-copy Massey model on the non-decreasing family and its ambient.
fn restricted_massey(n: usize) -> (AInfInstance, GradedPreCategory) {
    let m = algebra(Field::Rational, Grading::Z, n, &massey_spec(true)).unwrap();
    let full = copies(&m, 2, Family::Full).unwrap();
    let t = transfer_minimal(&full, &compute_splitting(&full).unwrap()).unwrap();
    let fam = nondecreasing_family(2, n + 3);
    let pc = GradedPreCategory::new(cohomology_category(&full).unwrap(), fam.clone()).unwrap();
    (t.minimal.restrict(fam).unwrap(), pc)
}

#[test]
fn precategory_extends_to_a_category() {
    let (m, c) = restricted_massey(3);
    let out = precat_to_cat(&c, &m).unwrap();
    assert!(out.category.is_full());
    assert!(out.category.is_minimal());
    assert!(check_relations(&out.category).is_empty());
    assert!(check_functor(&out.functor).is_empty());
    assert!(check_quasi_equivalence(&out.functor, 1).unwrap().holds());
    // The category restricts back to a structure strongly homotopic to m.
    let d = GradedPreCategory::new(c.ambient().as_ref().clone(), Family::Full).unwrap();
    let r = Restriction::new(AInfFunctor::identity(c.ambient().clone()), &c, &d).unwrap();
    let back = pullback(&r, &c, &out.category).unwrap();
    assert!(same_ops(&act(&out.homotopy, &m).unwrap(), &back));

    let cx_c = HochschildComplex::new(&c, 4).unwrap();
    let cx_d = HochschildComplex::new(&d, 4).unwrap();
    let l = Lifting { r: &r, c: &c, d: &d, cx_c: &cx_c, cx_d: &cx_d };
    let g = extendable(&l, &m, &out.category).unwrap().expect("m extends to the category");
    assert!(same_ops(&act(&g, &m).unwrap(), &back));

    // A homotopy between restrictions lifts to one between the categories.
    // A top-arity element keeps the relations valid one arity beyond N.
    let mut k = random_element(&cx_d, 3, 9);
    k.comps.retain(|s, _| s.len() == 4);
    assert!(!k.is_identity());
    let moved = act(&k, &out.category).unwrap();
    let (p1, p2) = (pullback(&r, &c, &out.category).unwrap(), pullback(&r, &c, &moved).unwrap());
    let below = find_strong_homotopy(&cx_c, &p1, &p2).unwrap().expect("restrictions are homotopic");
    let lifted = lift_homotopy(&l, &below, &out.category, &moved).unwrap();
    let f = element_functor(out.category.clone(), Arc::new(moved), &lifted).unwrap();
    assert!(check_functor(&f).is_empty());
}

#[test]
fn precat_to_cat_requires_minimal_input() {
    let (m, c) = restricted_massey(3);
    let mut bad = m.clone();
    let h = m.hom(0, 0).unwrap().clone();
    let (ia, ib, iz) = (h.index_of("a").unwrap(), h.index_of("b").unwrap(), h.index_of("z").unwrap());
    // m_1 must raise degree by one.
    assert!(bad.set_op(&[0, 0], [(vec![ia], vec![(ib, Field::Rational.one())])].into_iter().collect()).is_err());
    bad.set_op(&[0, 0], [(vec![ia], vec![(iz, Field::Rational.one())])].into_iter().collect()).unwrap();
    assert!(precat_to_cat(&c, &bad).is_err());
}
