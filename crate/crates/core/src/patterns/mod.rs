//! Four-point matrix patterns `{0, M1, M2, M1+M2}`: admissibility, the
//! spectral condition and the constraint subspaces attached to `J = M2·M1⁻¹`.

mod spaces;
mod subspace;

pub use spaces::{annihilator_bruteforce, constraint_spaces, ConstraintSpaces, Symmetry};
pub use subspace::{orth_complement, Ambient, AmbientKind, SubspaceBasis};

use crate::error::{Error, Result};
use crate::ffalg::{min_poly, negate_argument, poly_gcd, FpMatrix, PrimeField};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatternSpec {
    field: PrimeField,
    k: usize,
    m1: FpMatrix,
    m2: FpMatrix,
}

#[derive(Serialize, Deserialize)]
struct SpecJson {
    p: u64,
    k: usize,
    #[serde(rename = "M1")]
    m1: Vec<Vec<i64>>,
    #[serde(rename = "M2")]
    m2: Vec<Vec<i64>>,
}

impl PatternSpec {
    pub fn new(m1: FpMatrix, m2: FpMatrix) -> Result<Self> {
        let k = m1.rows();
        if !m1.is_square() || m2.rows() != k || m2.cols() != k || m1.field() != m2.field() {
            return Err(Error::DimensionMismatch(format!(
                "M1 is {}x{}, M2 is {}x{}",
                m1.rows(),
                m1.cols(),
                m2.rows(),
                m2.cols()
            )));
        }
        Ok(PatternSpec {
            field: m1.field(),
            k,
            m1,
            m2,
        })
    }

    pub fn from_rows(p: u64, m1: &[Vec<i64>], m2: &[Vec<i64>]) -> Result<Self> {
        let f = PrimeField::new(p)?;
        Self::new(FpMatrix::from_rows(f, m1)?, FpMatrix::from_rows(f, m2)?)
    }

    /// 1×1 pattern with scalar multipliers.
    pub fn scalar(p: u64, m1: i64, m2: i64) -> Result<Self> {
        Self::from_rows(p, &[vec![m1]], &[vec![m2]])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: SpecJson = serde_json::from_str(s)?;
        let spec = Self::from_rows(raw.p, &raw.m1, &raw.m2)?;
        if spec.k != raw.k {
            return Err(Error::DimensionMismatch(format!(
                "declared k = {} but matrices are {}x{}",
                raw.k, spec.k, spec.k
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.field.p(),
            "k": self.k,
            "M1": self.m1.to_i64_rows(),
            "M2": self.m2.to_i64_rows(),
        })
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

    pub fn m1(&self) -> &FpMatrix {
        &self.m1
    }

    pub fn m2(&self) -> &FpMatrix {
        &self.m2
    }

    pub fn m_sum(&self) -> FpMatrix {
        self.m1.add(&self.m2).expect("same shape")
    }

    /// J = M2·M1⁻¹.
    pub fn j(&self) -> Result<FpMatrix> {
        self.m2.mul(&self.m1.inverse()?)
    }
}

/// M1, M2, M1−M2 and M1+M2 all invertible.
pub fn check_admissible(spec: &PatternSpec) -> Result<bool> {
    let diff = spec.m1.sub(&spec.m2)?;
    let sum = spec.m1.add(&spec.m2)?;
    Ok([&spec.m1, &spec.m2, &diff, &sum]
        .iter()
        .all(|m| m.is_invertible()))
}

/// No two eigenvalues of `a` (over the algebraic closure) are negatives of
/// each other: gcd(Q(t), Q(−t)) = 1 for the minimal polynomial Q.
pub fn spectral_condition(a: &FpMatrix) -> Result<bool> {
    let q = min_poly(a)?;
    let g = poly_gcd(&q, &negate_argument(&q))?;
    Ok(g.degree() == Some(0))
}

/// Spectral condition for M1·M2⁻¹.
pub fn check_spectral(spec: &PatternSpec) -> Result<bool> {
    spectral_condition(&spec.m1.mul(&spec.m2.inverse()?)?)
}

/// (M1, M2) ↦ (I, M2·M1⁻¹).
pub fn reduce_to_identity_form(spec: &PatternSpec) -> Result<PatternSpec> {
    PatternSpec::new(FpMatrix::identity(spec.field, spec.k), spec.j()?)
}

/// Whether `a` lies in the span of I, A², A⁴, …, A^{2(k−1)}.
pub fn in_algebra_of_square(a: &FpMatrix) -> Result<bool> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("non-square matrix".into()));
    }
    let f = a.field();
    let k = a.rows();
    let sq = a.mul(a)?;
    let mut powers = vec![FpMatrix::identity(f, k)];
    for _ in 1..k {
        let next = powers.last().unwrap().mul(&sq)?;
        powers.push(next);
    }
    let ambient = Ambient::new(AmbientKind::General, k, 1);
    let rows: Vec<Vec<u32>> = powers.iter().map(|m| m.data().to_vec()).collect();
    Ok(SubspaceBasis::span(f, ambient, &rows)?.contains_vector(a.data()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rotated_square() -> PatternSpec {
        PatternSpec::from_rows(5, &[vec![1, 0], vec![0, 1]], &[vec![0, -1], vec![1, 0]]).unwrap()
    }

    #[test]
    fn admissible_examples() {
        assert!(check_admissible(&rotated_square()).unwrap());
        assert!(check_admissible(&PatternSpec::scalar(5, 1, 2).unwrap()).unwrap());
        assert!(!check_admissible(&PatternSpec::scalar(5, 1, 1).unwrap()).unwrap());
    }

    #[test]
    fn spectral_examples() {
        assert!(!check_spectral(&rotated_square()).unwrap());
        assert!(check_spectral(&PatternSpec::scalar(5, 1, 2).unwrap()).unwrap());
        assert!(matches!(
            check_spectral(&PatternSpec::scalar(5, 1, 0).unwrap()),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn reduction_examples() {
        let s = rotated_square();
        assert_eq!(reduce_to_identity_form(&s).unwrap(), s);
        let r = reduce_to_identity_form(&PatternSpec::scalar(5, 2, 4).unwrap()).unwrap();
        assert_eq!(r, PatternSpec::scalar(5, 1, 2).unwrap());
    }

    #[test]
    fn algebra_of_square_examples() {
        let f = PrimeField::new(5).unwrap();
        let j = FpMatrix::from_rows(f, &[vec![0, -1], vec![1, 0]]).unwrap();
        assert!(!in_algebra_of_square(&j).unwrap());
        assert!(in_algebra_of_square(&FpMatrix::identity(f, 2)).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let s = PatternSpec::from_json(r#"{"p":5,"k":2,"M1":[[1,0],[0,1]],"M2":[[0,-1],[1,0]]}"#)
            .unwrap();
        assert_eq!(s, rotated_square());
        let back = PatternSpec::from_json(&s.to_json().to_string()).unwrap();
        assert_eq!(back, s);
        assert!(PatternSpec::from_json(r#"{"p":5,"k":3,"M1":[[1]],"M2":[[2]]}"#).is_err());
    }
}
