use super::field::{FpScalar, PrimeField};
use super::matrix::FpMatrix;
use crate::error::{Error, Result};
use std::fmt;

/// Polynomial over F_p, coefficients lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FpPoly {
    coeffs: Vec<u32>,
    field: PrimeField,
}

impl FpPoly {
    pub fn new(field: PrimeField, coeffs: &[i64]) -> Self {
        Self::from_residues(field, coeffs.iter().map(|&c| field.reduce(c)).collect())
    }

    pub fn from_residues(field: PrimeField, mut coeffs: Vec<u32>) -> Self {
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        FpPoly { coeffs, field }
    }

    pub fn zero(field: PrimeField) -> Self {
        FpPoly {
            coeffs: Vec::new(),
            field,
        }
    }

    pub fn one(field: PrimeField) -> Self {
        FpPoly {
            coeffs: vec![1],
            field,
        }
    }

    /// The monic linear polynomial t - c.
    pub fn linear(field: PrimeField, c: i64) -> Self {
        Self::new(field, &[-c, 1])
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FpScalar {
        self.field
            .scalar(self.coeffs.get(i).copied().unwrap_or(0) as i64)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> u32 {
        self.coeffs.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.leading() == 1
    }

    pub fn monic(&self) -> FpPoly {
        if self.is_zero() {
            return self.clone();
        }
        let f = self.field;
        let inv = f.inv(self.leading()).expect("nonzero leading coefficient");
        FpPoly {
            coeffs: self.coeffs.iter().map(|&c| f.mul(c, inv)).collect(),
            field: f,
        }
    }

    pub fn add(&self, other: &FpPoly) -> FpPoly {
        let f = self.field;
        let len = self.coeffs.len().max(other.coeffs.len());
        let c = (0..len)
            .map(|i| {
                f.add(
                    self.coeffs.get(i).copied().unwrap_or(0),
                    other.coeffs.get(i).copied().unwrap_or(0),
                )
            })
            .collect();
        FpPoly::from_residues(f, c)
    }

    pub fn sub(&self, other: &FpPoly) -> FpPoly {
        self.add(&other.scale(self.field.neg(1)))
    }

    pub fn scale(&self, c: u32) -> FpPoly {
        let f = self.field;
        FpPoly::from_residues(f, self.coeffs.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, other: &FpPoly) -> FpPoly {
        if self.is_zero() || other.is_zero() {
            return FpPoly::zero(self.field);
        }
        let f = self.field;
        let mut c = vec![0u32; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                c[i + j] = f.add(c[i + j], f.mul(a, b));
            }
        }
        FpPoly::from_residues(f, c)
    }

    /// Quotient and remainder; panics on division by zero.
    pub fn div_rem(&self, divisor: &FpPoly) -> (FpPoly, FpPoly) {
        assert!(!divisor.is_zero(), "polynomial division by zero");
        let f = self.field;
        let dd = divisor.coeffs.len() - 1;
        let inv = f.inv(divisor.leading()).unwrap();
        let mut rem = self.coeffs.clone();
        if rem.len() <= dd {
            return (FpPoly::zero(f), self.clone());
        }
        let mut quot = vec![0u32; rem.len() - dd];
        for i in (0..quot.len()).rev() {
            let c = f.mul(rem[i + dd], inv);
            quot[i] = c;
            if c == 0 {
                continue;
            }
            for (j, &d) in divisor.coeffs.iter().enumerate() {
                rem[i + j] = f.sub(rem[i + j], f.mul(c, d));
            }
        }
        rem.truncate(dd);
        (FpPoly::from_residues(f, quot), FpPoly::from_residues(f, rem))
    }

    pub fn rem(&self, divisor: &FpPoly) -> FpPoly {
        self.div_rem(divisor).1
    }

    pub fn eval(&self, x: u32) -> u32 {
        let f = self.field;
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// Q(A) by Horner's rule.
    pub fn eval_matrix(&self, a: &FpMatrix) -> Result<FpMatrix> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("polynomial of non-square matrix".into()));
        }
        let n = a.rows();
        let mut acc = FpMatrix::zeros(self.field, n, n);
        for &c in self.coeffs.iter().rev() {
            acc = acc.mul(a)?.add(&FpMatrix::identity(self.field, n).scale(c))?;
        }
        Ok(acc)
    }

    /// Q(t) -> Q(-t), without renormalizing.
    pub fn negate_argument(&self) -> FpPoly {
        let f = self.field;
        FpPoly::from_residues(
            f,
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, &c)| if i % 2 == 1 { f.neg(c) } else { c })
                .collect(),
        )
    }
}

impl fmt::Display for FpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate().rev() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (i, c) {
                (0, _) => write!(f, "{c}")?,
                (1, 1) => write!(f, "t")?,
                (1, _) => write!(f, "{c}t")?,
                (_, 1) => write!(f, "t^{i}")?,
                _ => write!(f, "{c}t^{i}")?,
            }
        }
        Ok(())
    }
}

/// Monic gcd by the Euclidean algorithm.
pub fn poly_gcd(f: &FpPoly, g: &FpPoly) -> Result<FpPoly> {
    if f.is_zero() && g.is_zero() {
        return Err(Error::BothZero);
    }
    let (mut a, mut b) = (f.clone(), g.clone());
    while !b.is_zero() {
        let r = a.rem(&b);
        a = b;
        b = r;
    }
    Ok(a.monic())
}

pub fn negate_argument(f: &FpPoly) -> FpPoly {
    f.negate_argument()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_examples() {
        let f5 = PrimeField::new(5).unwrap();
        let q = FpPoly::new(f5, &[1, 0, 1]);
        assert_eq!(poly_gcd(&q, &q).unwrap(), q);
        let g = poly_gcd(&FpPoly::linear(f5, 2), &FpPoly::linear(f5, -2)).unwrap();
        assert_eq!(g, FpPoly::one(f5));
        let f3 = PrimeField::new(3).unwrap();
        let g = poly_gcd(&FpPoly::new(f3, &[-1, 0, 1]), &FpPoly::linear(f3, 1)).unwrap();
        assert_eq!(g, FpPoly::linear(f3, 1));
        assert!(matches!(
            poly_gcd(&FpPoly::zero(f3), &FpPoly::zero(f3)),
            Err(Error::BothZero)
        ));
    }

    #[test]
    fn negate_examples() {
        let f5 = PrimeField::new(5).unwrap();
        let q = FpPoly::new(f5, &[1, 0, 1]);
        assert_eq!(negate_argument(&q), q);
        let l = negate_argument(&FpPoly::linear(f5, 2));
        assert_eq!(l, FpPoly::new(f5, &[-2, -1]));
        assert_eq!(l.monic(), FpPoly::linear(f5, -2));
        let c = negate_argument(&FpPoly::new(f5, &[0, 0, 0, 1]));
        assert_eq!(c.monic(), FpPoly::new(f5, &[0, 0, 0, 1]));
    }

    #[test]
    fn division_identity() {
        let f7 = PrimeField::new(7).unwrap();
        let a = FpPoly::new(f7, &[3, 1, 4, 1, 5]);
        let b = FpPoly::new(f7, &[2, 6, 1]);
        let (q, r) = a.div_rem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < b.degree());
        assert_eq!(format!("{}", FpPoly::new(f7, &[1, 0, 1])), "t^2 + 1");
    }
}
