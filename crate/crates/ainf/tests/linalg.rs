mod common;

use ainf::linalg::{sparse_axpy, to_dense, to_sparse, Field, Matrix, Scalar};
use proptest::prelude::*;

fn fields() -> impl Strategy<Value = Field> {
    prop_oneof![Just(Field::Rational), Just(Field::Prime(2)), Just(Field::Prime(5)), Just(Field::Prime(7))]
}

fn matrix(field: Field, rows: usize, cols: usize, entries: &[i64]) -> Matrix {
    let rows: Vec<&[i64]> = entries.chunks(cols.max(1)).take(rows).collect();
    if cols == 0 {
        return Matrix::zeros(field, rows.len(), 0);
    }
    Matrix::from_ints(field, &rows)
}

fn arb_matrix() -> impl Strategy<Value = Matrix> {
    (fields(), 0usize..6, 0usize..6)
        .prop_flat_map(|(f, r, c)| prop::collection::vec(-3i64..=3, r * c).prop_map(move |e| matrix(f, r, c, &e)))
}

fn is_zero(v: &[Scalar]) -> bool {
    v.iter().all(|x| x.is_zero())
}

proptest! {
    #![proptest_config(common::proptest_config(256))]

    #[test]
    fn kernel_vectors_are_annihilated(m in arb_matrix()) {
        for v in m.kernel_basis() {
            prop_assert!(is_zero(&m.mul_vec(&v).unwrap()));
        }
    }

    #[test]
    fn rank_nullity(m in arb_matrix()) {
        prop_assert_eq!(m.rank() + m.kernel_basis().len(), m.ncols());
        prop_assert_eq!(m.rank(), m.transpose().rank());
    }

    #[test]
    fn solve_is_exact_or_certified_absent(m in arb_matrix(), seed in prop::collection::vec(-3i64..=3, 6)) {
        let f = m.field();
        let b: Vec<Scalar> = (0..m.nrows()).map(|i| f.int(seed[i])).collect();
        match m.solve(&b).unwrap() {
            Some(x) => prop_assert_eq!(m.mul_vec(&x).unwrap(), b),
            None => {
                let col = Matrix::from_cols(f, m.nrows(), &[to_sparse(&b)]);
                prop_assert_eq!(m.hstack(&col).unwrap().rank(), m.rank() + 1);
            }
        }
    }

    #[test]
    fn image_vectors_are_always_solvable(m in arb_matrix(), seed in prop::collection::vec(-3i64..=3, 6)) {
        let f = m.field();
        let x: Vec<Scalar> = (0..m.ncols()).map(|i| f.int(seed[i])).collect();
        let b = m.mul_vec(&x).unwrap();
        let y = m.solve(&b).unwrap().expect("b lies in the image");
        prop_assert_eq!(m.mul_vec(&y).unwrap(), b);
    }

    #[test]
    fn sparse_and_dense_agree(m in arb_matrix(), seed in prop::collection::vec(-3i64..=3, 6)) {
        let f = m.field();
        let x: Vec<Scalar> = (0..m.ncols()).map(|i| f.int(seed[i])).collect();
        let dense = m.mul_vec(&x).unwrap();
        let sparse = m.mul_sparse(&to_sparse(&x));
        prop_assert_eq!(to_dense(f, &sparse, m.nrows()), dense);
    }

    #[test]
    fn echelon_form_is_canonical(m in arb_matrix()) {
        // Row operations do not change the reduced form.
        if m.nrows() >= 2 {
            let f = m.field();
            let rows: Vec<_> = (0..m.nrows()).map(|i| m.row(i).clone()).collect();
            let mut shuffled = rows.clone();
            shuffled.swap(0, 1);
            shuffled[0] = sparse_axpy(&shuffled[0], &f.int(3), &rows[0]);
            let m2 = Matrix::from_rows(f, m.ncols(), shuffled);
            prop_assert_eq!(m.rank(), m2.rank());
            prop_assert_eq!(m.kernel_basis(), m2.kernel_basis());
        }
    }

    #[test]
    fn prime_field_inverses(a in 1i64..1000, p in prop_oneof![Just(2u64), Just(3), Just(5), Just(101)]) {
        let f = Field::Prime(p);
        let x = f.int(a);
        if !x.is_zero() {
            prop_assert!((&x * &x.inv()).is_one());
        }
    }

    #[test]
    fn rational_text_round_trip(n in -50i64..50, d in 1i64..20) {
        let f = Field::Rational;
        let x = f.parse(&format!("{n}/{d}")).unwrap();
        prop_assert_eq!(f.parse(&x.to_text()).unwrap(), x);
    }
}

#[test]
fn rank_over_f2_of_the_all_even_matrix_is_zero() {
    let f2 = Field::Prime(2);
    assert_eq!(Matrix::from_ints(f2, &[&[2, 4], &[0, 2]]).rank(), 0);
    assert_eq!(Matrix::from_ints(f2, &[&[2, 4], &[1, 2]]).rank(), 1);
    assert_eq!(Matrix::from_ints(Field::Rational, &[&[2, 4], &[1, 2]]).rank(), 1);
}

#[test]
fn rationals_do_not_overflow() {
    let f = Field::Rational;
    let mut x = f.one();
    for _ in 0..200 {
        x = &x * &f.int(1 << 40);
    }
    let y = x.inv();
    assert!((&x * &y).is_one());
}

#[test]
fn fixed_pivot_choice() {
    let f = Field::Rational;
    let m = Matrix::from_ints(f, &[&[0, 1, 1], &[0, 2, 3]]);
    let x = m.solve(&[f.int(1), f.int(1)]).unwrap().unwrap();
    assert_eq!(x, vec![f.int(0), f.int(2), f.int(-1)]);
}
