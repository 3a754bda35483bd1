//! Exact linear algebra over the rationals and prime fields.
//!
//! Matrices are stored as sorted sparse rows but behave as dense grids.
//! Elimination always reduces to the unique reduced row echelon form, so
//! every derived answer (rank, kernel basis, pivot solution) is canonical.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// The coefficient field of a computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    Rational,
    Prime(u64),
}

impl Field {
    /// Builds a prime field, rejecting non-primes.
    pub fn prime(p: u64) -> Result<Field> {
        if p < 2 || (2..).take_while(|d| d * d <= p).any(|d| p.is_multiple_of(d)) {
            return Err(Error::Invalid(format!("{p} is not prime")));
        }
        Ok(Field::Prime(p))
    }

    pub fn zero(self) -> Scalar {
        self.int(0)
    }

    pub fn one(self) -> Scalar {
        self.int(1)
    }

    pub fn int(self, n: i64) -> Scalar {
        match self {
            Field::Rational => Scalar::Q(BigRational::from_integer(BigInt::from(n))),
            Field::Prime(p) => Scalar::Fp(n.rem_euclid(p as i64) as u64, p),
        }
    }

    /// `(-1)^e` as a scalar.
    pub fn sign(self, e: i64) -> Scalar {
        self.int(if e.rem_euclid(2) == 0 { 1 } else { -1 })
    }

    /// Maps a rational into the field; fails when p divides the denominator.
    pub fn from_rational(self, q: &BigRational) -> Result<Scalar> {
        match self {
            Field::Rational => Ok(Scalar::Q(q.clone())),
            Field::Prime(p) => {
                let m = BigInt::from(p);
                let num = q.numer().mod_floor(&m).to_u64().unwrap();
                let den = q.denom().mod_floor(&m).to_u64().unwrap();
                if den == 0 {
                    return Err(Error::Invalid(format!("denominator of {q} vanishes mod {p}")));
                }
                Ok(Scalar::Fp(num * inv_mod(den, p) % p, p))
            }
        }
    }

    /// Parses `a` or `a/b` with integer a, b.
    pub fn parse(self, s: &str) -> Result<Scalar> {
        let bad = || Error::Invalid(format!("bad scalar literal {s:?}"));
        let (n, d) = match s.trim().split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        self.from_rational(&BigRational::new(n, d))
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Field::Rational => write!(f, "q"),
            Field::Prime(p) => write!(f, "f{p}"),
        }
    }
}

fn inv_mod(a: u64, p: u64) -> u64 {
    let (mut r0, mut r1) = (p as i128, a as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(p as i128) as u64
}

/// An exact field element. Mixing fields panics.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Scalar {
    Q(BigRational),
    Fp(u64, u64),
}

impl Scalar {
    pub fn field(&self) -> Field {
        match self {
            Scalar::Q(_) => Field::Rational,
            Scalar::Fp(_, p) => Field::Prime(*p),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_zero(),
            Scalar::Fp(v, _) => *v == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Q(q) => q.is_one(),
            Scalar::Fp(v, _) => *v == 1,
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn inv(&self) -> Scalar {
        assert!(!self.is_zero(), "inverse of zero");
        match self {
            Scalar::Q(q) => Scalar::Q(q.recip()),
            Scalar::Fp(v, p) => Scalar::Fp(inv_mod(*v, *p), *p),
        }
    }

    /// Canonical text form: `n` or `n/d` (rationals), `0..p-1` (prime fields).
    pub fn to_text(&self) -> String {
        match self {
            Scalar::Q(q) if q.is_integer() => q.numer().to_string(),
            Scalar::Q(q) => format!("{}/{}", q.numer(), q.denom()),
            Scalar::Fp(v, _) => v.to_string(),
        }
    }

    pub fn is_negative(&self) -> bool {
        matches!(self, Scalar::Q(q) if q.is_negative())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn mismatch() -> ! {
    panic!("scalars from different fields combined")
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a + b),
            (Scalar::Fp(a, p), Scalar::Fp(b, q)) if p == q => Scalar::Fp((a + b) % p, *p),
            _ => mismatch(),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a - b),
            (Scalar::Fp(a, p), Scalar::Fp(b, q)) if p == q => Scalar::Fp((a + p - b) % p, *p),
            _ => mismatch(),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, o: &Scalar) -> Scalar {
        match (self, o) {
            (Scalar::Q(a), Scalar::Q(b)) => Scalar::Q(a * b),
            (Scalar::Fp(a, p), Scalar::Fp(b, q)) if p == q => {
                Scalar::Fp(((*a as u128 * *b as u128) % *p as u128) as u64, *p)
            }
            _ => mismatch(),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Q(a) => Scalar::Q(-a),
            Scalar::Fp(a, p) => Scalar::Fp((p - a) % p, *p),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Scalar {
            type Output = Scalar;
            fn $m(self, o: Scalar) -> Scalar {
                (&self).$m(&o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

/// Sparse vector: strictly increasing indices, no stored zeros.
pub type SparseVec = Vec<(usize, Scalar)>;

/// `y += c * x` on sparse vectors.
pub fn sparse_axpy(y: &SparseVec, c: &Scalar, x: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(y.len() + x.len());
    let (mut i, mut j) = (0, 0);
    while i < y.len() || j < x.len() {
        if j == x.len() || (i < y.len() && y[i].0 < x[j].0) {
            out.push(y[i].clone());
            i += 1;
        } else if i == y.len() || x[j].0 < y[i].0 {
            let v = c * &x[j].1;
            if !v.is_zero() {
                out.push((x[j].0, v));
            }
            j += 1;
        } else {
            let v = &y[i].1 + &(c * &x[j].1);
            if !v.is_zero() {
                out.push((y[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Sorts by index, merges repeated indices and drops zeros.
pub fn normalize(mut v: SparseVec) -> SparseVec {
    v.sort_by_key(|(i, _)| *i);
    let mut out: SparseVec = Vec::with_capacity(v.len());
    for (i, x) in v {
        match out.last_mut() {
            Some((j, y)) if *j == i => *y = &*y + &x,
            _ => out.push((i, x)),
        }
    }
    out.retain(|(_, x)| !x.is_zero());
    out
}

/// Dense vector to sparse form.
pub fn to_sparse(v: &[Scalar]) -> SparseVec {
    v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i, x.clone())).collect()
}

/// Sparse vector to dense form of length `n`.
pub fn to_dense(field: Field, v: &SparseVec, n: usize) -> Vec<Scalar> {
    let mut out = vec![field.zero(); n];
    for (i, x) in v {
        out[*i] = x.clone();
    }
    out
}

/// An exact matrix with dense semantics and sparse row storage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matrix {
    field: Field,
    rows: usize,
    cols: usize,
    data: Vec<SparseVec>,
}

/// Reduced row echelon form: pivot columns and their normalized rows.
#[derive(Clone, Debug)]
pub struct Echelon {
    pub field: Field,
    pub cols: usize,
    pub pivots: Vec<usize>,
    pub rows: Vec<SparseVec>,
}

impl Matrix {
    pub fn zeros(field: Field, rows: usize, cols: usize) -> Matrix {
        Matrix { field, rows, cols, data: vec![Vec::new(); rows] }
    }

    pub fn identity(field: Field, n: usize) -> Matrix {
        let mut m = Matrix::zeros(field, n, n);
        for i in 0..n {
            m.data[i].push((i, field.one()));
        }
        m
    }

    pub fn from_rows(field: Field, cols: usize, rows: Vec<SparseVec>) -> Matrix {
        debug_assert!(rows.iter().all(|r| r.windows(2).all(|w| w[0].0 < w[1].0)));
        debug_assert!(rows.iter().all(|r| r.iter().all(|(c, x)| *c < cols && !x.is_zero())));
        Matrix { field, rows: rows.len(), cols, data: rows }
    }

    /// Builds from integer rows.
    pub fn from_ints(field: Field, rows: &[&[i64]]) -> Matrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let data = rows.iter().map(|r| to_sparse(&r.iter().map(|&x| field.int(x)).collect::<Vec<_>>())).collect();
        Matrix::from_rows(field, cols, data)
    }

    /// Builds from columns given as sparse vectors of length `rows`.
    pub fn from_cols(field: Field, rows: usize, cols: &[SparseVec]) -> Matrix {
        let mut data = vec![Vec::new(); rows];
        for (j, c) in cols.iter().enumerate() {
            for (i, x) in c {
                if !x.is_zero() {
                    data[*i].push((j, x.clone()));
                }
            }
        }
        Matrix { field, rows, cols: cols.len(), data }
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &SparseVec {
        &self.data[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        match self.data[i].binary_search_by_key(&j, |e| e.0) {
            Ok(k) => self.data[i][k].1.clone(),
            Err(_) => self.field.zero(),
        }
    }

    pub fn set(&mut self, i: usize, j: usize, x: Scalar) {
        let row = &mut self.data[i];
        match row.binary_search_by_key(&j, |e| e.0) {
            Ok(k) if x.is_zero() => {
                row.remove(k);
            }
            Ok(k) => row[k].1 = x,
            Err(k) if !x.is_zero() => row.insert(k, (j, x)),
            Err(_) => {}
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![Vec::new(); self.cols];
        for (i, r) in self.data.iter().enumerate() {
            for (j, x) in r {
                data[*j].push((i, x.clone()));
            }
        }
        Matrix { field: self.field, rows: self.cols, cols: self.rows, data }
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>> {
        if v.len() != self.cols {
            return Err(Error::Dimension { expected: self.cols, found: v.len() });
        }
        Ok(self.data.iter().map(|r| r.iter().fold(self.field.zero(), |acc, (j, x)| &acc + &(x * &v[*j]))).collect())
    }

    pub fn mul_sparse(&self, v: &SparseVec) -> SparseVec {
        let mut out = Vec::new();
        for (i, r) in self.data.iter().enumerate() {
            let (mut a, mut b) = (0, 0);
            let mut acc = self.field.zero();
            while a < r.len() && b < v.len() {
                match r[a].0.cmp(&v[b].0) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        acc = &acc + &(&r[a].1 * &v[b].1);
                        a += 1;
                        b += 1;
                    }
                }
            }
            if !acc.is_zero() {
                out.push((i, acc));
            }
        }
        out
    }

    pub fn mul(&self, o: &Matrix) -> Result<Matrix> {
        if self.cols != o.rows {
            return Err(Error::Dimension { expected: self.cols, found: o.rows });
        }
        let data = self
            .data
            .iter()
            .map(|r| r.iter().fold(Vec::new(), |acc, (k, x)| sparse_axpy(&acc, x, &o.data[*k])))
            .collect();
        Ok(Matrix { field: self.field, rows: self.rows, cols: o.cols, data })
    }

    pub fn sub(&self, o: &Matrix) -> Result<Matrix> {
        if (self.rows, self.cols) != (o.rows, o.cols) {
            return Err(Error::Dimension { expected: self.rows * self.cols, found: o.rows * o.cols });
        }
        let m1 = self.field.int(-1);
        let data = self.data.iter().zip(&o.data).map(|(a, b)| sparse_axpy(a, &m1, b)).collect();
        Ok(Matrix { field: self.field, rows: self.rows, cols: self.cols, data })
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    /// Horizontal concatenation `[self | o]`.
    pub fn hstack(&self, o: &Matrix) -> Result<Matrix> {
        if self.rows != o.rows {
            return Err(Error::Dimension { expected: self.rows, found: o.rows });
        }
        let data = self
            .data
            .iter()
            .zip(&o.data)
            .map(|(a, b)| {
                let mut r = a.clone();
                r.extend(b.iter().map(|(j, x)| (j + self.cols, x.clone())));
                r
            })
            .collect();
        Ok(Matrix { field: self.field, rows: self.rows, cols: self.cols + o.cols, data })
    }

    /// Reduced row echelon form of the row space.
    pub fn echelon(&self) -> Echelon {
        echelon_of_rows(self.field, self.cols, self.data.iter().cloned())
    }

    pub fn rank(&self) -> usize {
        // Rank is invariant under transposition; eliminate along the shorter side.
        let mut basis = RowBasis::new();
        if self.rows <= self.cols {
            for r in &self.data {
                basis.insert(r.clone());
            }
        } else {
            for r in &self.transpose().data {
                basis.insert(r.clone());
            }
        }
        basis.len()
    }

    /// Basis of the null space, one vector per free column, in column order.
    pub fn kernel_basis(&self) -> Vec<Vec<Scalar>> {
        self.echelon().kernel_sparse().into_iter().map(|v| to_dense(self.field, &v, self.cols)).collect()
    }

    /// Pivot solution of `M x = b` with free variables zero, or `None`.
    pub fn solve(&self, b: &[Scalar]) -> Result<Option<Vec<Scalar>>> {
        if b.len() != self.rows {
            return Err(Error::Dimension { expected: self.rows, found: b.len() });
        }
        Ok(self.solve_sparse(&to_sparse(b)).map(|x| to_dense(self.field, &x, self.cols)))
    }

    /// Sparse variant of [`Matrix::solve`].
    pub fn solve_sparse(&self, b: &SparseVec) -> Option<SparseVec> {
        let mut bcol = vec![None; self.rows];
        for (i, x) in b {
            bcol[*i] = Some(x.clone());
        }
        let aug = self.data.iter().zip(bcol).map(|(r, bi)| {
            let mut r = r.clone();
            if let Some(x) = bi {
                r.push((self.cols, x));
            }
            r
        });
        let ech = echelon_of_rows(self.field, self.cols + 1, aug);
        if ech.pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x: SparseVec = ech
            .pivots
            .iter()
            .zip(&ech.rows)
            .filter_map(|(p, r)| match r.last() {
                Some((c, v)) if *c == self.cols => Some((*p, v.clone())),
                _ => None,
            })
            .collect();
        x.sort_by_key(|e| e.0);
        Some(x)
    }
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    /// Null-space basis as sparse vectors.
    pub fn kernel_sparse(&self) -> Vec<SparseVec> {
        let field = self.field;
        let pivot_set: std::collections::HashSet<usize> = self.pivots.iter().copied().collect();
        (0..self.cols)
            .filter(|j| !pivot_set.contains(j))
            .map(|free| {
                let mut v: SparseVec = vec![(free, field.one())];
                for (p, r) in self.pivots.iter().zip(&self.rows) {
                    if let Ok(k) = r.binary_search_by_key(&free, |e| e.0) {
                        v.push((*p, -&r[k].1));
                    }
                }
                v.sort_by_key(|e| e.0);
                v
            })
            .collect()
    }
}

/// Incrementally maintained row-space basis with distinct leading columns.
#[derive(Clone, Debug, Default)]
pub struct RowBasis {
    by_lead: std::collections::BTreeMap<usize, SparseVec>,
}

impl RowBasis {
    pub fn new() -> RowBasis {
        RowBasis::default()
    }

    pub fn len(&self) -> usize {
        self.by_lead.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_lead.is_empty()
    }

    /// Reduces `v` against the basis; returns the residue (zero iff `v` is in the span).
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        let mut start = 0;
        loop {
            let k = v[start..].iter().position(|(c, _)| self.by_lead.contains_key(c));
            match k {
                None => return v,
                Some(k) => {
                    let idx = start + k;
                    let (c, x) = v[idx].clone();
                    let r = &self.by_lead[&c];
                    v = sparse_axpy(&v, &-&x, r);
                    start = idx.min(v.len());
                    while start < v.len() && v[start].0 < c {
                        start += 1;
                    }
                }
            }
        }
    }

    /// Inserts `v`; returns whether the rank grew.
    pub fn insert(&mut self, v: SparseVec) -> bool {
        let v = self.reduce(v);
        match v.first() {
            None => false,
            Some((lead, x)) => {
                let lead = *lead;
                let inv = x.inv();
                let v = v.into_iter().map(|(c, y)| (c, &y * &inv)).collect();
                self.by_lead.insert(lead, v);
                true
            }
        }
    }

    /// Leading columns in increasing order.
    pub fn leads(&self) -> Vec<usize> {
        self.by_lead.keys().copied().collect()
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_empty()
    }

    /// Consumes the basis, back-substituting into reduced echelon form.
    pub fn into_echelon(self, field: Field, cols: usize) -> Echelon {
        let mut pivots: Vec<usize> = Vec::new();
        let mut rows: Vec<SparseVec> = Vec::new();
        for (lead, row) in self.by_lead.into_iter().rev() {
            let mut r = row;
            for (p, pr) in pivots.iter().zip(&rows) {
                if let Ok(k) = r.binary_search_by_key(p, |e| e.0) {
                    let x = r[k].1.clone();
                    r = sparse_axpy(&r, &-&x, pr);
                }
            }
            pivots.push(lead);
            rows.push(r);
        }
        pivots.reverse();
        rows.reverse();
        Echelon { field, cols, pivots, rows }
    }
}

fn echelon_of_rows(field: Field, cols: usize, rows: impl Iterator<Item = SparseVec>) -> Echelon {
    let mut basis = RowBasis::new();
    for r in rows {
        basis.insert(r);
    }
    basis.into_echelon(field, cols)
}

/// Integer helper for sign exponents.
pub fn parity(e: i64) -> bool {
    e.rem_euclid(2) == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::zeros(Field::Rational, 0, 0).rank(), 0);
        assert_eq!(Matrix::identity(Field::Rational, 3).rank(), 3);
        let m = Matrix::from_ints(Field::Rational, &[&[2, 4], &[1, 2]]);
        assert_eq!(m.rank(), 1);
        // Mod 2 the matrix is [[0,0],[1,0]].
        let m2 = Matrix::from_ints(Field::Prime(2), &[&[2, 4], &[1, 2]]);
        assert_eq!(m2.rank(), 1);
        let m3 = Matrix::from_ints(Field::Prime(2), &[&[2, 4], &[0, 2]]);
        assert_eq!(m3.rank(), 0);
    }

    #[test]
    fn kernel_examples() {
        assert!(Matrix::identity(Field::Rational, 4).kernel_basis().is_empty());
        assert_eq!(Matrix::zeros(Field::Rational, 2, 3).kernel_basis().len(), 3);
        let m = Matrix::from_ints(Field::Rational, &[&[1, 1, 0]]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 2);
        for v in k {
            assert!(m.mul_vec(&v).unwrap().iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn solve_examples() {
        let f = Field::Rational;
        let id = Matrix::identity(f, 3);
        let b = vec![f.int(3), f.int(-1), f.int(7)];
        assert_eq!(id.solve(&b).unwrap().unwrap(), b);
        let m = Matrix::from_ints(f, &[&[1, 1]]);
        assert_eq!(m.solve(&[f.int(2)]).unwrap().unwrap(), vec![f.int(2), f.int(0)]);
        let z = Matrix::from_ints(f, &[&[0]]);
        assert_eq!(z.solve(&[f.int(1)]).unwrap(), None);
        assert!(m.solve(&[f.int(1), f.int(2)]).is_err());
    }

    #[test]
    fn prime_field_arithmetic() {
        let f = Field::prime(5).unwrap();
        assert_eq!(f.int(3).inv(), f.int(2));
        assert_eq!(f.parse("1/2").unwrap(), f.int(3));
        assert!(f.parse("1/5").is_err());
        assert!(Field::prime(6).is_err());
    }
}
