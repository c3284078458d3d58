use super::field::PrimeField;
use crate::error::{Error, Result};
use std::fmt;

/// Dense row-major matrix over F_p.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u32>,
    field: PrimeField,
}

impl FpMatrix {
    pub fn zeros(field: PrimeField, rows: usize, cols: usize) -> Self {
        FpMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
            field,
        }
    }

    pub fn identity(field: PrimeField, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn scalar_matrix(field: PrimeField, n: usize, c: i64) -> Self {
        Self::identity(field, n).scale(field.reduce(c))
    }

    pub fn from_fn(
        field: PrimeField,
        rows: usize,
        cols: usize,
        f: impl Fn(usize, usize) -> i64,
    ) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(field.reduce(f(i, j)));
            }
        }
        FpMatrix {
            rows,
            cols,
            data,
            field,
        }
    }

    /// Build from integer rows; negative entries are reduced mod p.
    pub fn from_rows(field: PrimeField, rows: &[Vec<i64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Self::from_fn(field, r, c, |i, j| rows[i][j]))
    }

    /// Build from already-reduced residues.
    pub fn from_residues(field: PrimeField, rows: usize, cols: usize, data: Vec<u32>) -> Self {
        assert_eq!(data.len(), rows * cols);
        debug_assert!(data.iter().all(|&v| v < field.p()));
        FpMatrix {
            rows,
            cols,
            data,
            field,
        }
    }

    pub fn column(field: PrimeField, v: &[u32]) -> Self {
        Self::from_residues(field, v.len(), 1, v.to_vec())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn field(&self) -> PrimeField {
        self.field
    }

    #[inline]
    pub fn data(&self) -> &[u32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.field.p();
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    pub fn to_i64_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&v| v as i64).collect())
            .collect()
    }

    fn same_shape(&self, other: &FpMatrix, op: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols || self.field != other.field {
            return Err(Error::DimensionMismatch(format!(
                "{op}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &FpMatrix) -> Result<FpMatrix> {
        self.same_shape(other, "add")?;
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.add(a, b))
            .collect();
        Ok(FpMatrix { data, ..*self })
    }

    pub fn sub(&self, other: &FpMatrix) -> Result<FpMatrix> {
        self.same_shape(other, "sub")?;
        let f = self.field;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f.sub(a, b))
            .collect();
        Ok(FpMatrix { data, ..*self })
    }

    pub fn neg(&self) -> FpMatrix {
        let f = self.field;
        FpMatrix {
            data: self.data.iter().map(|&a| f.neg(a)).collect(),
            ..*self
        }
    }

    pub fn scale(&self, c: u32) -> FpMatrix {
        let f = self.field;
        FpMatrix {
            data: self.data.iter().map(|&a| f.mul(a, c)).collect(),
            ..*self
        }
    }

    pub fn mul(&self, other: &FpMatrix) -> Result<FpMatrix> {
        if self.cols != other.rows || self.field != other.field {
            return Err(Error::DimensionMismatch(format!(
                "mul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let p = self.field.p() as u64;
        let mut out = FpMatrix::zeros(self.field, self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = 0u64;
                for l in 0..self.cols {
                    acc += self.get(i, l) as u64 * other.get(l, j) as u64;
                    if acc >= 1 << 62 {
                        acc %= p;
                    }
                }
                out.data[i * other.cols + j] = (acc % p) as u32;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch("mul_vec".into()));
        }
        let p = self.field.p() as u64;
        Ok((0..self.rows)
            .map(|i| {
                let acc: u64 = self
                    .row(i)
                    .iter()
                    .zip(v)
                    .map(|(&a, &b)| a as u64 * b as u64)
                    .sum();
                (acc % p) as u32
            })
            .collect())
    }

    pub fn transpose(&self) -> FpMatrix {
        let mut out = FpMatrix::zeros(self.field, self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn trace(&self) -> u32 {
        let f = self.field;
        (0..self.rows.min(self.cols)).fold(0, |acc, i| f.add(acc, self.get(i, i)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn is_skew(&self) -> bool {
        let f = self.field;
        self.is_square()
            && (0..self.rows)
                .all(|i| (0..=i).all(|j| self.get(i, j) == f.neg(self.get(j, i))))
    }

    pub fn pow(&self, mut e: u64) -> Result<FpMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("pow of non-square matrix".into()));
        }
        let mut base = self.clone();
        let mut acc = FpMatrix::identity(self.field, self.rows);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            base = base.mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    pub fn rref_in_place(&mut self) -> Vec<usize> {
        let f = self.field;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(piv) = (r..self.rows).find(|&i| self.get(i, c) != 0) else {
                continue;
            };
            if piv != r {
                for j in 0..self.cols {
                    self.data.swap(piv * self.cols + j, r * self.cols + j);
                }
            }
            let inv = f.inv(self.get(r, c)).expect("nonzero pivot");
            for j in c..self.cols {
                let v = f.mul(self.get(r, j), inv);
                self.data[r * self.cols + j] = v;
            }
            for i in 0..self.rows {
                if i == r {
                    continue;
                }
                let factor = self.get(i, c);
                if factor == 0 {
                    continue;
                }
                for j in c..self.cols {
                    let v = f.sub(self.get(i, j), f.mul(factor, self.get(r, j)));
                    self.data[i * self.cols + j] = v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref_in_place().len()
    }

    /// Basis of the right kernel {x : Ax = 0}.
    pub fn nullspace(&self) -> Vec<Vec<u32>> {
        let mut m = self.clone();
        let pivots = m.rref_in_place();
        let f = self.field;
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|c| !pivots.contains(c)) {
            let mut v = vec![0u32; self.cols];
            v[free] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(m.get(i, free));
            }
            basis.push(v);
        }
        basis
    }

    pub fn inverse(&self) -> Result<FpMatrix> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = FpMatrix::zeros(self.field, n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.data[i * 2 * n + j] = self.get(i, j);
            }
            aug.data[i * 2 * n + n + i] = 1;
        }
        let pivots = aug.rref_in_place();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        let mut out = FpMatrix::zeros(self.field, n, n);
        for i in 0..n {
            for j in 0..n {
                out.data[i * n + j] = aug.get(i, n + j);
            }
        }
        Ok(out)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn det(&self) -> Result<u32> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("det of non-square matrix".into()));
        }
        let f = self.field;
        let n = self.rows;
        let mut m = self.clone();
        let mut det = 1u32;
        for c in 0..n {
            let Some(piv) = (c..n).find(|&i| m.get(i, c) != 0) else {
                return Ok(0);
            };
            if piv != c {
                for j in 0..n {
                    m.data.swap(piv * n + j, c * n + j);
                }
                det = f.neg(det);
            }
            let pv = m.get(c, c);
            det = f.mul(det, pv);
            let inv = f.inv(pv).expect("nonzero pivot");
            for i in c + 1..n {
                let factor = f.mul(m.get(i, c), inv);
                if factor == 0 {
                    continue;
                }
                for j in c..n {
                    let v = f.sub(m.get(i, j), f.mul(factor, m.get(c, j)));
                    m.data[i * n + j] = v;
                }
            }
        }
        Ok(det)
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &FpMatrix) -> FpMatrix {
        let f = self.field;
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = FpMatrix::zeros(f, r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out.data[(i * other.rows + k) * c + j * other.cols + l] =
                            f.mul(a, other.get(k, l));
                    }
                }
            }
        }
        out
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> FpMatrix {
        FpMatrix::from_fn(self.field, rows, cols, |i, j| self.get(r0 + i, c0 + j) as i64)
    }

    /// Hilbert-Schmidt pairing tr(AᵀB).
    pub fn hs(&self, other: &FpMatrix) -> u32 {
        dot(self.field, &self.data, &other.data)
    }
}

pub fn dot(field: PrimeField, a: &[u32], b: &[u32]) -> u32 {
    let p = field.p() as u64;
    let mut acc = 0u64;
    for (&x, &y) in a.iter().zip(b) {
        acc += x as u64 * y as u64;
        if acc >= 1 << 62 {
            acc %= p;
        }
    }
    (acc % p) as u32
}

impl fmt::Display for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{:?}", self.row(i))?;
        }
        write!(f, "] mod {}", self.field.p())
    }
}

/// Inverse of a square matrix; `Singular` when it has none.
pub fn mat_inverse(a: &FpMatrix) -> Result<FpMatrix> {
    a.inverse()
}

pub fn mat_rank(a: &FpMatrix) -> usize {
    a.rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f5() -> PrimeField {
        PrimeField::new(5).unwrap()
    }

    fn m(field: PrimeField, rows: &[&[i64]]) -> FpMatrix {
        FpMatrix::from_rows(field, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn inverse_examples() {
        let f = f5();
        let rot = m(f, &[&[0, 4], &[1, 0]]);
        assert_eq!(mat_inverse(&rot).unwrap(), m(f, &[&[0, 1], &[4, 0]]));
        let id = FpMatrix::identity(f, 2);
        assert_eq!(mat_inverse(&id).unwrap(), id);
        assert!(matches!(
            mat_inverse(&m(f, &[&[1, 1], &[2, 2]])),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn rank_examples() {
        let f = f5();
        assert_eq!(mat_rank(&FpMatrix::zeros(f, 3, 3)), 0);
        assert_eq!(mat_rank(&m(f, &[&[1, 1], &[2, 2]])), 1);
        let f3 = PrimeField::new(3).unwrap();
        assert_eq!(mat_rank(&FpMatrix::identity(f3, 4)), 4);
    }

    #[test]
    fn det_and_nullspace() {
        let f = f5();
        let a = m(f, &[&[1, 2], &[3, 4]]);
        assert_eq!(a.det().unwrap(), f.reduce(-2));
        let s = m(f, &[&[1, 1], &[2, 2]]);
        let ns = s.nullspace();
        assert_eq!(ns.len(), 1);
        assert_eq!(s.mul_vec(&ns[0]).unwrap(), vec![0, 0]);
    }

    #[test]
    fn symmetry_predicates() {
        let f = f5();
        assert!(m(f, &[&[1, 2], &[2, 3]]).is_symmetric());
        assert!(m(f, &[&[0, 2], &[3, 0]]).is_skew());
        assert!(!m(f, &[&[1, 2], &[3, 0]]).is_skew());
    }
}
