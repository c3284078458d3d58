use crate::error::{Error, Result};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// The prime field F_p for an odd prime p. Elements are carried around as
/// plain `u32` residues; this type owns the modulus and the arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

pub const MAX_MODULUS: u64 = 1_000_000;

fn is_prime_trial(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p == 2 || p > MAX_MODULUS || !is_prime_trial(p) {
            return Err(Error::NotOddPrime(p));
        }
        Ok(PrimeField { p: p as u32 })
    }

    #[inline]
    pub fn p(&self) -> u32 {
        self.p
    }

    #[inline]
    pub fn reduce(&self, v: i64) -> u32 {
        v.rem_euclid(self.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.p - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        ((a as u64 * b as u64) % self.p as u64) as u32
    }

    pub fn pow(&self, mut a: u32, mut e: u64) -> u32 {
        let mut r = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a.is_multiple_of(self.p) {
            None
        } else {
            Some(self.pow(a, self.p as u64 - 2))
        }
    }

    /// Centered representative in (-p/2, p/2].
    pub fn centered(&self, a: u32) -> i64 {
        let a = a as i64;
        let p = self.p as i64;
        if a > p / 2 {
            a - p
        } else {
            a
        }
    }

    pub fn scalar(&self, v: i64) -> FpScalar {
        FpScalar {
            value: self.reduce(v),
            field: *self,
        }
    }
}

/// A single element of F_p that knows its modulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FpScalar {
    value: u32,
    field: PrimeField,
}

impl FpScalar {
    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn inv(&self) -> Option<FpScalar> {
        self.field.inv(self.value).map(|value| FpScalar {
            value,
            field: self.field,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for FpScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

macro_rules! scalar_binop {
    ($tr:ident, $m:ident) => {
        impl $tr for FpScalar {
            type Output = FpScalar;
            fn $m(self, rhs: FpScalar) -> FpScalar {
                assert_eq!(self.field, rhs.field, "mixed moduli");
                FpScalar {
                    value: self.field.$m(self.value, rhs.value),
                    field: self.field,
                }
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);

impl Neg for FpScalar {
    type Output = FpScalar;
    fn neg(self) -> FpScalar {
        FpScalar {
            value: self.field.neg(self.value),
            field: self.field,
        }
    }
}
