//! Functions on `G^k = (F_p^n)^k` and k-symmetrized quadratic factors.
//!
//! A point of `G^k` is a k×n matrix X whose rows are the k components. It is
//! encoded as the integer `Σ X[i][j]·p^(i·n+j)`: row-major digits with
//! (row 0, column 0) least significant, so the digit string of an index is
//! exactly the row-major data of X.

mod factor;
mod io;

pub use factor::{
    conditional_expectation, factor_eval, factor_rank, linear_kernel_h, phase_block_factor,
    phase_function, FactorImage, LinearKernel, QuadraticFactor,
};
pub use io::{fn_read, fn_write, read_from, write_to};

use crate::error::{Error, Result};
use crate::ffalg::{checked_pow, decode_base, encode_base, FpMatrix, PrimeField};
use crate::guard::Guard;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

pub type Rational = Ratio<i64>;

pub fn to_big(q: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*q.numer()), BigInt::from(*q.denom()))
}

pub fn from_big(q: &BigRational) -> Result<Rational> {
    match (q.numer().to_i64(), q.denom().to_i64()) {
        (Some(a), Some(b)) => Ok(Rational::new(a, b)),
        _ => Err(Error::Overflow),
    }
}

pub fn big_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// "num/den" (or "num" for integers).
pub fn rational_string(q: &BigRational) -> String {
    if q.denom() == &BigInt::from(1) {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GridShape {
    field: PrimeField,
    k: usize,
    n: usize,
    len: usize,
}

impl GridShape {
    pub fn new(field: PrimeField, k: usize, n: usize) -> Result<Self> {
        Self::with_guard(field, k, n, &Guard::default())
    }

    pub fn with_guard(field: PrimeField, k: usize, n: usize, guard: &Guard) -> Result<Self> {
        let size = (field.p() as f64).powi((k * n) as i32);
        guard.check("grid", size)?;
        let len = checked_pow(field.p(), k * n).ok_or(Error::TooLarge {
            what: "grid".into(),
            size,
            limit: guard.limit(),
        })? as usize;
        Ok(GridShape { field, k, n, len })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn p(&self) -> u32 {
        self.field.p()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of coordinates, k·n.
    pub fn dim(&self) -> usize {
        self.k * self.n
    }

    /// Number of points, p^{kn}.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn decode(&self, idx: usize) -> GridPoint {
        let mut d = vec![0u32; self.dim()];
        decode_base(idx as u64, self.p(), &mut d);
        GridPoint {
            x: FpMatrix::from_residues(self.field, self.k, self.n, d),
            index: idx,
        }
    }

    pub fn decode_into(&self, idx: usize, out: &mut [u32]) {
        decode_base(idx as u64, self.p(), out);
    }

    pub fn encode(&self, x: &FpMatrix) -> Result<usize> {
        if x.rows() != self.k || x.cols() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "point is {}x{}, grid is {}x{}",
                x.rows(),
                x.cols(),
                self.k,
                self.n
            )));
        }
        Ok(encode_base(x.data(), self.p()) as usize)
    }

    pub fn encode_digits(&self, d: &[u32]) -> usize {
        encode_base(d, self.p()) as usize
    }

    /// Index of a + b.
    pub fn add_index(&self, a: usize, b: usize) -> usize {
        let p = self.p() as usize;
        let (mut a, mut b) = (a, b);
        let mut out = 0usize;
        let mut place = 1usize;
        for _ in 0..self.dim() {
            out += ((a % p + b % p) % p) * place;
            a /= p;
            b /= p;
            place *= p;
        }
        out
    }

    /// Index of −a.
    pub fn neg_index(&self, a: usize) -> usize {
        let p = self.p() as usize;
        let mut a = a;
        let mut out = 0usize;
        let mut place = 1usize;
        for _ in 0..self.dim() {
            out += ((p - a % p) % p) * place;
            a /= p;
            place *= p;
        }
        out
    }

    /// For each index of D, the index of C·D (C a k×k matrix).
    pub fn left_mul_table(&self, c: &FpMatrix) -> Result<Vec<u32>> {
        if c.rows() != self.k || c.cols() != self.k {
            return Err(Error::DimensionMismatch("multiplier must be k×k".into()));
        }
        let dim = self.dim();
        Ok((0..self.len)
            .into_par_iter()
            .map_init(
                || (vec![0u32; dim], vec![0u32; dim]),
                |(d, out), idx| {
                    self.decode_into(idx, d);
                    let f = self.field;
                    for i in 0..self.k {
                        for j in 0..self.n {
                            let mut acc = 0u32;
                            for l in 0..self.k {
                                acc = f.add(acc, f.mul(c.get(i, l), d[l * self.n + j]));
                            }
                            out[i * self.n + j] = acc;
                        }
                    }
                    self.encode_digits(out) as u32
                },
            )
            .collect())
    }
}

/// A point of G^k with its encoded index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub x: FpMatrix,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Rational,
    Float,
    Complex,
}

impl ValueKind {
    pub fn name(&self) -> &'static str {
        match self {
            ValueKind::Rational => "rational",
            ValueKind::Float => "float",
            ValueKind::Complex => "complex",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    Rational(Vec<Rational>),
    Float(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// Dense function on G^k.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    shape: GridShape,
    values: Values,
}

impl GridFunction {
    pub fn new(shape: GridShape, values: Values) -> Result<Self> {
        let len = match &values {
            Values::Rational(v) => v.len(),
            Values::Float(v) => v.len(),
            Values::Complex(v) => v.len(),
        };
        if len != shape.len() {
            return Err(Error::DimensionMismatch(format!(
                "{len} values for a grid of {} points",
                shape.len()
            )));
        }
        Ok(GridFunction { shape, values })
    }

    pub fn rational(shape: GridShape, v: Vec<Rational>) -> Result<Self> {
        Self::new(shape, Values::Rational(v))
    }

    pub fn float(shape: GridShape, v: Vec<f64>) -> Result<Self> {
        Self::new(shape, Values::Float(v))
    }

    pub fn complex(shape: GridShape, v: Vec<Complex64>) -> Result<Self> {
        Self::new(shape, Values::Complex(v))
    }

    fn tabulate<T: Send, F>(shape: GridShape, f: F) -> Vec<T>
    where
        F: Fn(&[u32]) -> T + Sync + Send,
    {
        let dim = shape.dim();
        (0..shape.len())
            .into_par_iter()
            .map_init(
                || vec![0u32; dim],
                |d, idx| {
                    shape.decode_into(idx, d);
                    f(d)
                },
            )
            .collect()
    }

    /// Rational function from the row-major digits of each point.
    pub fn from_fn_rational<F>(shape: GridShape, f: F) -> Self
    where
        F: Fn(&[u32]) -> Rational + Sync + Send,
    {
        GridFunction {
            shape,
            values: Values::Rational(Self::tabulate(shape, f)),
        }
    }

    pub fn from_fn_float<F>(shape: GridShape, f: F) -> Self
    where
        F: Fn(&[u32]) -> f64 + Sync + Send,
    {
        GridFunction {
            shape,
            values: Values::Float(Self::tabulate(shape, f)),
        }
    }

    pub fn from_fn_complex<F>(shape: GridShape, f: F) -> Self
    where
        F: Fn(&[u32]) -> Complex64 + Sync + Send,
    {
        GridFunction {
            shape,
            values: Values::Complex(Self::tabulate(shape, f)),
        }
    }

    /// 0/1 rational indicator.
    pub fn indicator<F>(shape: GridShape, pred: F) -> Self
    where
        F: Fn(&[u32]) -> bool + Sync + Send,
    {
        Self::from_fn_rational(shape, |d| Rational::from_integer(pred(d) as i64))
    }

    pub fn constant(shape: GridShape, c: Rational) -> Self {
        GridFunction {
            shape,
            values: Values::Rational(vec![c; shape.len()]),
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shape.is_empty()
    }

    pub fn kind(&self) -> ValueKind {
        match self.values {
            Values::Rational(_) => ValueKind::Rational,
            Values::Float(_) => ValueKind::Float,
            Values::Complex(_) => ValueKind::Complex,
        }
    }

    pub fn values(&self) -> &Values {
        &self.values
    }

    pub fn rational_values(&self) -> Option<&[Rational]> {
        match &self.values {
            Values::Rational(v) => Some(v),
            _ => None,
        }
    }

    pub fn float_values(&self) -> Option<&[f64]> {
        match &self.values {
            Values::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn complex_values(&self) -> Option<&[Complex64]> {
        match &self.values {
            Values::Complex(v) => Some(v),
            _ => None,
        }
    }

    /// Real value at an index; the real part for complex functions.
    pub fn get_f64(&self, i: usize) -> f64 {
        match &self.values {
            Values::Rational(v) => *v[i].numer() as f64 / *v[i].denom() as f64,
            Values::Float(v) => v[i],
            Values::Complex(v) => v[i].re,
        }
    }

    pub fn get_complex(&self, i: usize) -> Complex64 {
        match &self.values {
            Values::Complex(v) => v[i],
            _ => Complex64::new(self.get_f64(i), 0.0),
        }
    }

    pub fn to_float(&self) -> Result<GridFunction> {
        let v = match &self.values {
            Values::Complex(_) => {
                return Err(Error::Invalid("complex function has no real form".into()))
            }
            _ => (0..self.len()).map(|i| self.get_f64(i)).collect(),
        };
        GridFunction::float(self.shape, v)
    }

    pub fn to_complex(&self) -> GridFunction {
        GridFunction {
            shape: self.shape,
            values: Values::Complex((0..self.len()).map(|i| self.get_complex(i)).collect()),
        }
    }

    /// All values in [0, 1]; complex functions never qualify.
    pub fn is_unit_interval(&self) -> bool {
        match &self.values {
            Values::Rational(v) => v
                .iter()
                .all(|q| *q >= Rational::zero() && *q <= Rational::from_integer(1)),
            Values::Float(v) => v.iter().all(|&x| (0.0..=1.0).contains(&x)),
            Values::Complex(_) => false,
        }
    }

    /// All values of modulus at most 1.
    pub fn is_one_bounded(&self) -> bool {
        match &self.values {
            Values::Rational(v) => v.iter().all(|q| q.numer().abs() <= *q.denom()),
            Values::Float(v) => v.iter().all(|x| x.abs() <= 1.0),
            Values::Complex(v) => v.iter().all(|z| z.norm() <= 1.0 + 1e-12),
        }
    }

    /// Exact mean of a rational function.
    pub fn mean_exact(&self) -> Result<BigRational> {
        let v = self
            .rational_values()
            .ok_or_else(|| Error::Invalid("exact mean needs rational values".into()))?;
        let total = sum_rationals(v);
        Ok(total / BigRational::from_integer(BigInt::from(self.len())))
    }

    pub fn mean_f64(&self) -> f64 {
        self.mean_complex().re
    }

    pub fn mean_complex(&self) -> Complex64 {
        if let Ok(m) = self.mean_exact() {
            return Complex64::new(big_to_f64(&m), 0.0);
        }
        let n = self.len();
        let re = crate::guard::par_sum(n, |i| self.get_complex(i).re);
        let im = crate::guard::par_sum(n, |i| self.get_complex(i).im);
        Complex64::new(re, im) / n as f64
    }

    /// Exact E|f|² of a rational function.
    pub fn norm2_sq_exact(&self) -> Result<BigRational> {
        let v = self
            .rational_values()
            .ok_or_else(|| Error::Invalid("exact norm needs rational values".into()))?;
        let sq: Vec<BigRational> = v.iter().map(|q| to_big(&(q * q))).collect();
        let total = sq.into_iter().fold(BigRational::zero(), |a, b| a + b);
        Ok(total / BigRational::from_integer(BigInt::from(self.len())))
    }

    pub fn norm2_sq_f64(&self) -> f64 {
        let n = self.len();
        crate::guard::par_sum(n, |i| self.get_complex(i).norm_sqr()) / n as f64
    }

    /// Pointwise difference; both must have the same kind.
    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch("different grids".into()));
        }
        let values = match (&self.values, &other.values) {
            (Values::Rational(a), Values::Rational(b)) => {
                let mut out = Vec::with_capacity(a.len());
                for (x, y) in a.iter().zip(b) {
                    out.push(from_big(&(to_big(x) - to_big(y)))?);
                }
                Values::Rational(out)
            }
            (Values::Float(a), Values::Float(b)) => {
                Values::Float(a.iter().zip(b).map(|(x, y)| x - y).collect())
            }
            _ => Values::Complex(
                (0..self.len())
                    .map(|i| self.get_complex(i) - other.get_complex(i))
                    .collect(),
            ),
        };
        Ok(GridFunction {
            shape: self.shape,
            values,
        })
    }
}

/// Exact sum; groups by denominator to keep the big-integer work small.
pub fn sum_rationals(v: &[Rational]) -> BigRational {
    use std::collections::BTreeMap;
    let mut by_den: BTreeMap<i64, i128> = BTreeMap::new();
    let mut spill = BigRational::zero();
    for q in v {
        let e = by_den.entry(*q.denom()).or_insert(0);
        match e.checked_add(*q.numer() as i128) {
            Some(s) => *e = s,
            None => {
                spill += BigRational::new(BigInt::from(*e), BigInt::from(*q.denom()));
                *e = *q.numer() as i128;
            }
        }
    }
    by_den.into_iter().fold(spill, |acc, (d, s)| {
        acc + BigRational::new(BigInt::from(s), BigInt::from(d))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(p: u64, k: usize, n: usize) -> GridShape {
        GridShape::new(PrimeField::new(p).unwrap(), k, n).unwrap()
    }

    #[test]
    fn encoding_is_bijective() {
        let s = shape(3, 2, 2);
        for idx in 0..s.len() {
            let pt = s.decode(idx);
            assert_eq!(s.encode(&pt.x).unwrap(), idx);
        }
        let x = FpMatrix::from_rows(s.field(), &[vec![1, 0], vec![0, 0]]).unwrap();
        assert_eq!(s.encode(&x).unwrap(), 1);
        let x = FpMatrix::from_rows(s.field(), &[vec![0, 0], vec![1, 0]]).unwrap();
        assert_eq!(s.encode(&x).unwrap(), 9);
    }

    #[test]
    fn index_arithmetic() {
        let s = shape(5, 1, 3);
        for a in [0usize, 7, 33, 124] {
            assert_eq!(s.add_index(a, s.neg_index(a)), 0);
        }
        let two = FpMatrix::scalar_matrix(s.field(), 1, 2);
        let t = s.left_mul_table(&two).unwrap();
        assert_eq!(t[1], 2);
        assert_eq!(t[3], 1);
        assert_eq!(t[5], 10);
    }

    #[test]
    fn guard_rejects_big_grid() {
        let f = PrimeField::new(5).unwrap();
        assert!(matches!(
            GridShape::with_guard(f, 2, 10, &Guard::default()),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn means_and_flags() {
        let s = shape(3, 1, 2);
        let f = GridFunction::indicator(s, |d| d[0] == 0);
        assert_eq!(rational_string(&f.mean_exact().unwrap()), "1/3");
        assert!(f.is_unit_interval());
        let g = GridFunction::from_fn_complex(s, |d| Complex64::new(0.0, d[1] as f64));
        assert!(!g.is_one_bounded());
        assert!(!g.is_unit_interval());
        assert_eq!(sum_rationals(&[Rational::new(1, 2), Rational::new(1, 3)]).to_string(), "5/6");
    }
}
