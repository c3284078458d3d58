//! Exact arithmetic over prime fields.

mod digits;
mod field;
mod matrix;
mod poly;

pub use digits::{checked_pow, decode_base, encode_base};
pub use field::{FpScalar, PrimeField, MAX_MODULUS};
pub use matrix::{dot, mat_inverse, mat_rank, FpMatrix};
pub use poly::{negate_argument, poly_gcd, FpPoly};

use crate::error::{Error, Result};

/// Minimal polynomial: first linear dependence among I, A, A², ...
pub fn min_poly(a: &FpMatrix) -> Result<FpPoly> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("min_poly of non-square matrix".into()));
    }
    let field = a.field();
    let n = a.rows();
    let mut powers: Vec<FpMatrix> = vec![FpMatrix::identity(field, n)];
    loop {
        let d = powers.len();
        // columns are vec(A^0..A^{d-1}); solve for vec(A^d)
        let target = powers[d - 1].mul(a)?;
        let m = n * n;
        let sys = FpMatrix::from_fn(field, m, d + 1, |r, c| {
            if c < d {
                powers[c].data()[r] as i64
            } else {
                target.data()[r] as i64
            }
        });
        let ns = sys.nullspace();
        if let Some(v) = ns.iter().find(|v| v[d] != 0) {
            let inv = field.inv(v[d]).unwrap();
            let coeffs = v.iter().map(|&c| field.mul(c, inv)).collect();
            return Ok(FpPoly::from_residues(field, coeffs));
        }
        powers.push(target);
    }
}

/// Characteristic polynomial det(tI - A) by reduction to Hessenberg form.
pub fn char_poly(a: &FpMatrix) -> Result<FpPoly> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("char_poly of non-square matrix".into()));
    }
    let f = a.field();
    let n = a.rows();
    let mut h: Vec<Vec<u32>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    for c in 0..n.saturating_sub(2) {
        let Some(piv) = (c + 1..n).find(|&i| h[i][c] != 0) else {
            continue;
        };
        if piv != c + 1 {
            h.swap(piv, c + 1);
            for row in h.iter_mut() {
                row.swap(piv, c + 1);
            }
        }
        let inv = f.inv(h[c + 1][c]).unwrap();
        for i in c + 2..n {
            let m = f.mul(h[i][c], inv);
            if m == 0 {
                continue;
            }
            for j in 0..n {
                let v = f.sub(h[i][j], f.mul(m, h[c + 1][j]));
                h[i][j] = v;
            }
            for row in h.iter_mut() {
                let v = f.add(row[c + 1], f.mul(m, row[i]));
                row[c + 1] = v;
            }
        }
    }
    // p_0 = 1, p_{i+1} = (t - h_ii) p_i - sum_j h_{j,i} (prod sub-diag) p_j
    let mut ps: Vec<FpPoly> = vec![FpPoly::one(f)];
    for i in 0..n {
        let mut next = FpPoly::linear(f, h[i][i] as i64).mul(&ps[i]);
        let mut prod = 1u32;
        for j in (0..i).rev() {
            prod = f.mul(prod, h[j + 1][j]);
            let c = f.mul(prod, h[j][i]);
            if c != 0 {
                next = next.sub(&ps[j].scale(c));
            }
        }
        ps.push(next);
    }
    Ok(ps.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn field(p: u64) -> PrimeField {
        PrimeField::new(p).unwrap()
    }

    #[test]
    fn min_poly_examples() {
        let f5 = field(5);
        let j = FpMatrix::from_rows(f5, &[vec![0, -1], vec![1, 0]]).unwrap();
        assert_eq!(min_poly(&j).unwrap(), FpPoly::new(f5, &[1, 0, 1]));
        let id = FpMatrix::identity(f5, 2);
        assert_eq!(min_poly(&id).unwrap(), FpPoly::linear(f5, 1));
        let two = FpMatrix::scalar_matrix(f5, 1, 2);
        assert_eq!(min_poly(&two).unwrap(), FpPoly::linear(f5, 2));
    }

    #[test]
    fn char_poly_small() {
        let f7 = field(7);
        let a = FpMatrix::from_rows(f7, &[vec![1, 2], vec![3, 4]]).unwrap();
        // t^2 - 5t - 2
        assert_eq!(char_poly(&a).unwrap(), FpPoly::new(f7, &[-2, -5, 1]));
    }

    fn arb_matrix() -> impl Strategy<Value = FpMatrix> {
        (prop::sample::select(vec![3u64, 5, 7]), 1usize..=4).prop_flat_map(|(p, k)| {
            prop::collection::vec(0i64..p as i64, k * k).prop_map(move |v| {
                let f = PrimeField::new(p).unwrap();
                FpMatrix::from_fn(f, k, k, |i, j| v[i * k + j])
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn inverse_is_two_sided(a in arb_matrix()) {
            if let Ok(b) = mat_inverse(&a) {
                let id = FpMatrix::identity(a.field(), a.rows());
                prop_assert_eq!(a.mul(&b).unwrap(), id.clone());
                prop_assert_eq!(b.mul(&a).unwrap(), id);
            } else {
                prop_assert_eq!(a.det().unwrap(), 0);
            }
        }

        #[test]
        fn min_poly_annihilates(a in arb_matrix()) {
            let q = min_poly(&a).unwrap();
            prop_assert!(q.is_monic());
            prop_assert!(q.degree().unwrap() <= a.rows());
            prop_assert!(q.eval_matrix(&a).unwrap().is_zero());
            prop_assert!(char_poly(&a).unwrap().rem(&q).is_zero());
        }

        #[test]
        fn char_poly_annihilates(a in arb_matrix()) {
            let c = char_poly(&a).unwrap();
            prop_assert_eq!(c.degree(), Some(a.rows()));
            prop_assert!(c.eval_matrix(&a).unwrap().is_zero());
            let sign = if a.rows() % 2 == 0 { 1 } else { a.field().neg(1) };
            prop_assert_eq!(c.coeffs()[0], a.field().mul(sign, a.det().unwrap()));
        }

        #[test]
        fn rank_of_transpose(a in arb_matrix()) {
            prop_assert_eq!(mat_rank(&a), mat_rank(&a.transpose()));
        }

        #[test]
        fn gcd_divides_both(
            p in prop::sample::select(vec![3u64, 5, 7]),
            x in prop::collection::vec(-10i64..10, 0..6),
            y in prop::collection::vec(-10i64..10, 1..6),
        ) {
            let f = PrimeField::new(p).unwrap();
            let (a, b) = (FpPoly::new(f, &x), FpPoly::new(f, &y));
            prop_assume!(!(a.is_zero() && b.is_zero()));
            let g = poly_gcd(&a, &b).unwrap();
            prop_assert!(a.rem(&g).is_zero());
            prop_assert!(b.rem(&g).is_zero());
        }
    }
}
