use super::count::{normalize, product_sum, Backend, Table};
use super::Number;
use crate::error::{Error, Result};
use crate::ffalg::{dot, FpMatrix, PrimeField};
use crate::gridfn::{big_to_f64, linear_kernel_h, rational_string, GridFunction, GridShape, QuadraticFactor};
use crate::guard::{chunked_fold, Guard};
use crate::patterns::{constraint_spaces, spectral_condition};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::collections::HashMap;

#[derive(Clone, Debug)]
pub struct EquidistributionReport {
    /// Every observed cell lies in the predicted set.
    pub support_ok: bool,
    /// The observed cells are exactly the predicted set.
    pub support_exact: bool,
    pub predicted_dim: usize,
    pub predicted_cell_probability: BigRational,
    /// max over observed cells of |P(cell) / predicted − 1|.
    pub max_multiplicative_deviation: f64,
    pub cells_observed: usize,
    pub samples: u64,
    /// Dimension of the affine span of the observed cells.
    pub observed_support_dim: usize,
    /// Whether J passes the spectral test, where one is involved.
    pub spectral: Option<bool>,
}

impl EquidistributionReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "support_ok": self.support_ok,
            "support_exact": self.support_exact,
            "predicted_dim": self.predicted_dim,
            "predicted_cell_probability": rational_string(&self.predicted_cell_probability),
            "max_multiplicative_deviation": self.max_multiplicative_deviation,
            "cells_observed": self.cells_observed,
            "samples": self.samples,
            "observed_support_dim": self.observed_support_dim,
            "spectral": self.spectral,
        })
    }
}

fn check_width(p: u32, digits: usize) -> Result<()> {
    let bits = digits as f64 * (p as f64).log2();
    if bits > 127.0 {
        return Err(Error::TooLarge {
            what: "cell key width (bits)".into(),
            size: bits,
            limit: 127,
        });
    }
    Ok(())
}

fn pack(p: u32, digits: &[u32]) -> u128 {
    digits.iter().rev().fold(0u128, |acc, &d| acc * p as u128 + d as u128)
}

fn unpack(p: u32, mut key: u128, out: &mut [u32]) {
    for d in out.iter_mut() {
        *d = (key % p as u128) as u32;
        key /= p as u128;
    }
}

/// Exact histogram of `cell(t, buf)` over t in 0..len.
pub(crate) fn histogram<F>(len: usize, p: u32, cell: F) -> HashMap<u128, u64>
where
    F: Fn(usize, &mut Vec<u32>) + Sync + Send,
{
    chunked_fold(
        len,
        HashMap::new(),
        |range| {
            let mut local: HashMap<u128, u64> = HashMap::new();
            let mut buf = Vec::new();
            for t in range {
                cell(t, &mut buf);
                *local.entry(pack(p, &buf)).or_insert(0) += 1;
            }
            local
        },
        |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            a
        },
    )
}

/// Incremental row echelon form for rank counting.
struct Echelon {
    field: PrimeField,
    rows: Vec<(usize, Vec<u32>)>,
}

impl Echelon {
    fn new(field: PrimeField) -> Self {
        Echelon { field, rows: Vec::new() }
    }

    fn insert(&mut self, mut v: Vec<u32>) {
        let f = self.field;
        for (piv, row) in &self.rows {
            let c = v[*piv];
            if c != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = f.sub(*x, f.mul(c, r));
                }
            }
        }
        if let Some(piv) = v.iter().position(|&x| x != 0) {
            let inv = f.inv(v[piv]).unwrap();
            for x in v.iter_mut() {
                *x = f.mul(*x, inv);
            }
            for (_, row) in self.rows.iter_mut() {
                let c = row[piv];
                if c != 0 {
                    for (x, &r) in row.iter_mut().zip(&v) {
                        *x = f.sub(*x, f.mul(c, r));
                    }
                }
            }
            self.rows.push((piv, v));
        }
    }
}

pub(crate) fn finish<M>(
    field: PrimeField,
    width: usize,
    hist: HashMap<u128, u64>,
    predicted_dim: usize,
    spectral: Option<bool>,
    member: M,
) -> EquidistributionReport
where
    M: Fn(&[u32]) -> bool,
{
    let p = field.p();
    let samples: u64 = hist.values().sum();
    let predicted = BigInt::from(p).pow(predicted_dim as u32);
    let prob = BigRational::new(BigInt::one(), predicted.clone());
    let prob_f = big_to_f64(&prob);
    let mut keys: Vec<&u128> = hist.keys().collect();
    keys.sort();
    let mut support_ok = true;
    let mut dev = 0.0f64;
    let mut ech = Echelon::new(field);
    let mut base: Option<Vec<u32>> = None;
    let mut cell = vec![0u32; width];
    for key in keys {
        unpack(p, *key, &mut cell);
        if !member(&cell) {
            support_ok = false;
        }
        let obs = hist[key] as f64 / samples as f64;
        dev = dev.max((obs / prob_f - 1.0).abs());
        match &base {
            None => base = Some(cell.clone()),
            Some(b) if ech.rows.len() < width => {
                ech.insert(cell.iter().zip(b).map(|(&x, &y)| field.sub(x, y)).collect());
            }
            _ => {}
        }
    }
    let cells = hist.len();
    EquidistributionReport {
        support_ok,
        support_exact: support_ok && BigInt::from(cells) == predicted,
        predicted_dim,
        predicted_cell_probability: prob,
        max_multiplicative_deviation: dev,
        cells_observed: cells,
        samples,
        observed_support_dim: ech.rows.len(),
        spectral,
    }
}

/// Distribution of (Γ(x), Φ(x)) = ((r·x)_r, (xᵀMx)_M) over x ∈ F_p^n. The
/// prediction is uniform on Im Γ × F_p^{d₂}.
pub fn linear_quadratic_distribution(
    field: PrimeField,
    n: usize,
    gamma: &[Vec<u32>],
    phi: &[FpMatrix],
    guard: &Guard,
) -> Result<EquidistributionReport> {
    let factor = QuadraticFactor::new(field, n, gamma.to_vec(), phi.to_vec(), Vec::new())?;
    let shape = GridShape::with_guard(field, 1, n, guard)?;
    let (d1, d2) = (gamma.len(), phi.len());
    check_width(field.p(), d1 + d2)?;
    // c with Σ c_i (r_i·x) = 0 for all x
    let gm = FpMatrix::from_residues(field, d1, n, gamma.concat());
    let relations = if d1 == 0 { Vec::new() } else { gm.transpose().nullspace() };
    let rank = if d1 == 0 { 0 } else { gm.rank() };
    let hist = histogram(shape.len(), field.p(), |t, buf| {
        let mut x = vec![0u32; n];
        shape.decode_into(t, &mut x);
        factor.write_image(&x, 1, buf);
    });
    Ok(finish(field, d1 + d2, hist, rank + d2, None, |cell| {
        relations.iter().all(|c| dot(field, c, &cell[..d1]) == 0)
    }))
}

fn full_from_tri(field: PrimeField, k: usize, tri: &[u32], strict: bool, out: &mut Vec<u32>) {
    let start = out.len();
    out.resize(start + k * k, 0);
    let mut it = tri.iter();
    for i in 0..k {
        let lo = if strict { i + 1 } else { i };
        for j in lo..k {
            let v = *it.next().unwrap();
            out[start + i * k + j] = v;
            out[start + j * k + i] = if strict { field.neg(v) } else { v };
        }
    }
}

/// Per-point images of every grid point, flattened.
fn image_table(factor: &QuadraticFactor, shape: &GridShape) -> Vec<u32> {
    let len = factor.image_len(shape.k());
    let mut out = vec![0u32; shape.len() * len];
    let mut x = vec![0u32; shape.dim()];
    let mut buf = Vec::new();
    for (t, chunk) in out.chunks_mut(len.max(1)).enumerate().take(shape.len()) {
        shape.decode_into(t, &mut x);
        factor.write_image(&x, shape.k(), &mut buf);
        chunk[..len].copy_from_slice(&buf);
    }
    out
}

/// Joint distribution of the images of X, X+D, X+JD, X+(I+J)D. With
/// `restrict_to_h`, D ranges over H = {D : D r_i = 0}.
pub fn pattern_tuple_distribution(
    factor: &QuadraticFactor,
    j: &FpMatrix,
    restrict_to_h: bool,
    guard: &Guard,
) -> Result<EquidistributionReport> {
    let field = factor.field();
    let k = j.rows();
    if !j.is_square() || j.field() != field {
        return Err(Error::DimensionMismatch("J must be a square matrix over the factor's field".into()));
    }
    let shape = GridShape::with_guard(field, k, factor.n(), guard)?;
    guard.check("pattern tuple enumeration", (shape.len() as f64).powi(2))?;
    let spectral = spectral_condition(j)?;
    let cs = constraint_spaces(j)?;
    let (psi_perp, lambda, lambda_p) = (cs.psi_perp(), cs.lambda.clone(), cs.lambda_prime.clone());

    let l = factor.image_len(k);
    check_width(field.p(), 4 * l)?;
    let (d1, d2, d3) = factor.complexity();
    let mut segs: Vec<(usize, usize, u8)> = Vec::new();
    let mut at = 0;
    for (count, width, kind) in [(d1, k, 0u8), (d2, k * (k + 1) / 2, 1), (d3, k * (k.saturating_sub(1)) / 2, 2)] {
        for _ in 0..count {
            segs.push((at, width, kind));
            at += width;
        }
    }

    let images = image_table(factor, &shape);
    let jt = shape.left_mul_table(j)?;
    let ijt = shape.left_mul_table(&FpMatrix::identity(field, k).add(j)?)?;
    let ds: Vec<usize> = if restrict_to_h {
        let h = linear_kernel_h(factor, shape)?.h;
        (0..shape.len()).filter(|&d| h.get_f64(d) != 0.0).collect()
    } else {
        (0..shape.len()).collect()
    };
    let nd = ds.len();
    let hist = histogram(shape.len() * nd, field.p(), |t, buf| {
        let (x, d) = (t / nd, ds[t % nd]);
        let pts = [
            x,
            shape.add_index(x, d),
            shape.add_index(x, jt[d] as usize),
            shape.add_index(x, ijt[d] as usize),
        ];
        buf.clear();
        for &(start, width, _) in &segs {
            for &pt in &pts {
                buf.extend_from_slice(&images[pt * l + start..pt * l + start + width]);
            }
        }
    });

    let lin_dim = if restrict_to_h { k } else { cs.psi.dim() };
    let predicted =
        d1 * lin_dim + d2 * cs.lambda_perp().dim() + d3 * cs.lambda_prime_perp().dim();
    let member = |cell: &[u32]| {
        let mut at = 0;
        let mut full = Vec::new();
        for &(_, width, kind) in &segs {
            let part = &cell[at..at + 4 * width];
            at += 4 * width;
            let ok = match kind {
                0 => {
                    if restrict_to_h {
                        (1..4).all(|t| part[t * k..(t + 1) * k] == part[..k])
                    } else {
                        psi_perp.vectors().iter().all(|w| dot(field, w, part) == 0)
                    }
                }
                _ => {
                    full.clear();
                    for t in 0..4 {
                        full_from_tri(field, k, &part[t * width..(t + 1) * width], kind == 2, &mut full);
                    }
                    let space = if kind == 1 { &lambda } else { &lambda_p };
                    space.vectors().iter().all(|w| dot(field, w, &full) == 0)
                }
            };
            if !ok {
                return false;
            }
        }
        true
    };
    Ok(finish(field, 4 * l, hist, predicted, Some(spectral), member))
}

/// Distribution of (B(X), B(D), B′(X, D)) over all pairs, where B′ collects
/// the full k×k matrices X M Dᵀ and X N Dᵀ.
pub fn abstract_atom_distribution(
    factor: &QuadraticFactor,
    k: usize,
    guard: &Guard,
) -> Result<EquidistributionReport> {
    let field = factor.field();
    let n = factor.n();
    let shape = GridShape::with_guard(field, k, n, guard)?;
    guard.check("abstract atom enumeration", (shape.len() as f64).powi(2))?;
    let l = factor.image_len(k);
    let mats: Vec<&FpMatrix> = factor.sym().iter().chain(factor.skew()).collect();
    let width = 2 * l + k * k * mats.len();
    check_width(field.p(), width)?;
    let images = image_table(factor, &shape);
    let len = shape.len();
    let hist = histogram(len * len, field.p(), |t, buf| {
        let (x, d) = (t / len, t % len);
        buf.clear();
        buf.extend_from_slice(&images[x * l..(x + 1) * l]);
        buf.extend_from_slice(&images[d * l..(d + 1) * l]);
        let mut xs = vec![0u32; k * n];
        let mut dv = vec![0u32; k * n];
        shape.decode_into(x, &mut xs);
        shape.decode_into(d, &mut dv);
        for m in &mats {
            let md: Vec<Vec<u32>> = (0..k)
                .map(|b| m.mul_vec(&dv[b * n..(b + 1) * n]).expect("n×n"))
                .collect();
            for a in 0..k {
                for row in md.iter() {
                    buf.push(dot(field, &xs[a * n..(a + 1) * n], row));
                }
            }
        }
    });
    Ok(finish(field, width, hist, width, None, |_| true))
}

#[derive(Clone, Debug)]
pub struct StructuredAverage {
    pub lhs: Number,
    pub alpha: Number,
    pub h_density: BigRational,
    pub tuple_deviation: f64,
    pub atom_deviation: f64,
    pub tol: f64,
    pub bound: f64,
    pub holds: bool,
}

impl StructuredAverage {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lhs": self.lhs.to_json(),
            "lhs_f64": self.lhs.to_f64(),
            "alpha": self.alpha.to_json(),
            "h_density": rational_string(&self.h_density),
            "tuple_deviation": self.tuple_deviation,
            "atom_deviation": self.atom_deviation,
            "tol": self.tol,
            "bound": self.bound,
            "holds": self.holds,
        })
    }
}

/// E_{X,D} f(X) f(X+D) f(X+JD) f(X+(I+J)D) 1_H(D) for factor-measurable f,
/// against density(H)·(E f)⁴·(1 − tol). The tolerance comes from the
/// measured deviations of the tuple and atom distributions.
pub fn structured_pattern_average(
    f: &GridFunction,
    factor: &QuadraticFactor,
    j: &FpMatrix,
    guard: &Guard,
) -> Result<StructuredAverage> {
    let shape = f.shape();
    if j.rows() != shape.k() || !j.is_square() {
        return Err(Error::DimensionMismatch("J must be k×k".into()));
    }
    if !f.is_unit_interval() {
        return Err(Error::OutOfRange("f must take values in [0, 1]".into()));
    }
    if !factor.is_measurable(f)? {
        return Err(Error::NotMeasurable);
    }
    guard.check("structured pattern average", (shape.len() as f64).powi(2))?;
    let field = shape.field();
    let kernel = linear_kernel_h(factor, shape)?;
    let ds: Vec<usize> = (0..shape.len()).filter(|&d| kernel.h.get_f64(d) != 0.0).collect();
    let jt = shape.left_mul_table(j)?;
    let ijt = shape.left_mul_table(&FpMatrix::identity(field, shape.k()).add(j)?)?;
    let table = Table::new(f, Backend::Exact)?;
    let nd = ds.len();
    let sum = product_sum(
        &table,
        &shape,
        |t| t,
        shape.len() * nd,
        |t, idx| {
            let (x, d) = (t / nd, ds[t % nd]);
            idx[0] = x;
            idx[1] = shape.add_index(x, d);
            idx[2] = shape.add_index(x, jt[d] as usize);
            idx[3] = shape.add_index(x, ijt[d] as usize);
        },
        4,
    );
    let lhs = match normalize(&table, sum, 4, shape.len() * nd) {
        Number::Exact(q) => Number::Exact(q * &kernel.density),
        other => other,
    };
    let alpha = f.mean_exact()?;

    let tuple = pattern_tuple_distribution(factor, j, true, guard)?;
    let atoms = abstract_atom_distribution(factor, shape.k(), guard)?;
    let full = |r: &EquidistributionReport| {
        r.support_ok && BigInt::from(r.cells_observed) == BigInt::from(field.p()).pow(r.predicted_dim as u32)
    };
    let tol = if full(&tuple) && full(&atoms) {
        let (dt, da) = (tuple.max_multiplicative_deviation, atoms.max_multiplicative_deviation);
        (1.0 - (1.0 - dt) / (1.0 + da).powi(4)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let a4 = big_to_f64(&num_traits::pow(alpha.clone(), 4));
    let bound = big_to_f64(&kernel.density) * a4 * (1.0 - tol);
    let lhs_f = lhs.to_f64();
    let holds = lhs_f >= bound || (bound.is_zero() && lhs_f >= 0.0);
    Ok(StructuredAverage {
        lhs,
        alpha: Number::Exact(alpha),
        h_density: kernel.density,
        tuple_deviation: tuple.max_multiplicative_deviation,
        atom_deviation: atoms.max_multiplicative_deviation,
        tol,
        bound,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{conditional_expectation, Rational};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f5() -> PrimeField {
        PrimeField::new(5).unwrap()
    }

    fn identity_factor(field: PrimeField, n: usize, linear: Vec<Vec<u32>>) -> QuadraticFactor {
        QuadraticFactor::new(field, n, linear, vec![FpMatrix::identity(field, n)], Vec::new()).unwrap()
    }

    #[test]
    fn independent_linear_forms_are_uniform() {
        let g = Guard::default();
        let rep = linear_quadratic_distribution(f5(), 3, &[vec![1, 0, 0], vec![0, 1, 1]], &[], &g).unwrap();
        assert!(rep.support_exact);
        assert_eq!(rep.max_multiplicative_deviation, 0.0);
        assert_eq!(rep.cells_observed, 25);
    }

    #[test]
    fn dependent_linear_forms_collapse() {
        let g = Guard::default();
        let rep = linear_quadratic_distribution(f5(), 3, &[vec![1, 2, 0], vec![2, 4, 0]], &[], &g).unwrap();
        assert!(rep.support_ok && rep.support_exact);
        assert_eq!(rep.predicted_dim, 1);
        assert_eq!(rep.cells_observed, 5);
        assert_eq!(rep.observed_support_dim, 1);
    }

    #[test]
    fn quadratic_deviation_shrinks() {
        let g = Guard::default();
        let dev = |n: usize| {
            linear_quadratic_distribution(f5(), n, &[], &[FpMatrix::identity(f5(), n)], &g)
                .unwrap()
                .max_multiplicative_deviation
        };
        let (a, b, c) = (dev(3), dev(4), dev(5));
        assert!(a > b && b > c, "{a} {b} {c}");
        // x·x on F_5^3 hits 0 exactly 25 times
        assert!((a - 0.0).abs() > 0.0);
    }

    #[test]
    fn empty_factor_single_cell() {
        let g = Guard::default();
        let fac = QuadraticFactor::trivial(f5(), 2);
        let j = FpMatrix::scalar_matrix(f5(), 1, 2);
        let rep = pattern_tuple_distribution(&fac, &j, false, &g).unwrap();
        assert_eq!(rep.cells_observed, 1);
        assert_eq!(rep.max_multiplicative_deviation, 0.0);
        assert!(rep.support_exact);
        let rep = abstract_atom_distribution(&fac, 1, &g).unwrap();
        assert_eq!(rep.cells_observed, 1);
    }

    #[test]
    fn tuple_support_structure() {
        let g = Guard::default();
        let j = FpMatrix::scalar_matrix(f5(), 1, 2);
        let fac = identity_factor(f5(), 3, vec![]);
        let rep = pattern_tuple_distribution(&fac, &j, false, &g).unwrap();
        assert!(rep.support_ok);
        assert_eq!(rep.predicted_dim, 3);
        assert_eq!(rep.spectral, Some(true));
        let fac = identity_factor(f5(), 3, vec![vec![1, 1, 0]]);
        let rep = pattern_tuple_distribution(&fac, &j, true, &g).unwrap();
        assert!(rep.support_ok);
        assert_eq!(rep.predicted_dim, 4);
    }

    #[test]
    fn atoms_full_rank() {
        let g = Guard::default();
        let rep = |n| abstract_atom_distribution(&identity_factor(f5(), n, vec![]), 1, &g).unwrap();
        let (a, b) = (rep(3), rep(4));
        assert!(a.support_exact && b.support_exact);
        assert_eq!(a.predicted_dim, 3);
        assert!(b.max_multiplicative_deviation < a.max_multiplicative_deviation);
    }

    #[test]
    fn constant_trivial_factor() {
        let g = Guard::default();
        let s = GridShape::new(f5(), 1, 2).unwrap();
        let f = GridFunction::constant(s, Rational::new(1, 3));
        let j = FpMatrix::scalar_matrix(f5(), 1, 2);
        let out = structured_pattern_average(&f, &QuadraticFactor::trivial(f5(), 2), &j, &g).unwrap();
        assert_eq!(out.lhs.to_json(), serde_json::json!("1/81"));
        assert_eq!(out.tol, 0.0);
        assert!(out.holds);
    }

    #[test]
    fn conditional_expectation_of_random_set() {
        let g = Guard::default();
        let s = GridShape::new(f5(), 1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = GridFunction::rational(
            s,
            (0..s.len()).map(|_| Rational::from_integer(rng.gen_range(0..2))).collect(),
        )
        .unwrap();
        let fac = identity_factor(f5(), 3, vec![vec![1, 0, 0]]);
        let f = conditional_expectation(&set, &fac).unwrap();
        let j = FpMatrix::scalar_matrix(f5(), 1, 2);
        let out = structured_pattern_average(&f, &fac, &j, &g).unwrap();
        assert!(out.holds, "{out:?}");
        assert!(out.lhs.to_f64() > 0.0);
        assert!(matches!(
            structured_pattern_average(&set, &fac, &j, &g),
            Err(Error::NotMeasurable)
        ));
    }
}
