use super::{sum_rationals, from_big, GridFunction, GridShape, Rational, Values};
use crate::error::{Error, Result};
use crate::ffalg::{checked_pow, decode_base, dot, FpMatrix, PrimeField};
use crate::guard::{kahan_sum, Guard};
use crate::patterns::{Ambient, AmbientKind, SubspaceBasis};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Linear vectors r_i ∈ F_p^n, symmetric M_i and skew N_j (n×n). On G^k it
/// induces X ↦ (X r_i, X M_i Xᵀ, X N_j Xᵀ).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticFactor {
    field: PrimeField,
    n: usize,
    linear: Vec<Vec<u32>>,
    sym: Vec<FpMatrix>,
    skew: Vec<FpMatrix>,
}

#[derive(Serialize, Deserialize)]
struct FactorJson {
    p: u64,
    n: usize,
    linear: Vec<Vec<i64>>,
    symmetric: Vec<Vec<Vec<i64>>>,
    skew: Vec<Vec<Vec<i64>>>,
}

/// Value of a factor at one point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorImage {
    pub b1: Vec<Vec<u32>>,
    pub b2: Vec<FpMatrix>,
    pub b3: Vec<FpMatrix>,
}

impl QuadraticFactor {
    pub fn new(
        field: PrimeField,
        n: usize,
        linear: Vec<Vec<u32>>,
        sym: Vec<FpMatrix>,
        skew: Vec<FpMatrix>,
    ) -> Result<Self> {
        if linear.iter().any(|r| r.len() != n)
            || sym.iter().chain(&skew).any(|m| m.rows() != n || m.cols() != n)
        {
            return Err(Error::DimensionMismatch(format!(
                "factor entries must have length/size {n}"
            )));
        }
        if sym.iter().any(|m| !m.is_symmetric()) {
            return Err(Error::NotSymmetric);
        }
        if skew.iter().any(|m| !m.is_skew()) {
            return Err(Error::NotSkew);
        }
        let p = field.p();
        let linear = linear
            .into_iter()
            .map(|r| r.into_iter().map(|v| v % p).collect())
            .collect();
        Ok(QuadraticFactor {
            field,
            n,
            linear,
            sym,
            skew,
        })
    }

    pub fn trivial(field: PrimeField, n: usize) -> Self {
        QuadraticFactor {
            field,
            n,
            linear: Vec::new(),
            sym: Vec::new(),
            skew: Vec::new(),
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: FactorJson = serde_json::from_str(s)?;
        let f = PrimeField::new(raw.p)?;
        let linear = raw
            .linear
            .iter()
            .map(|r| r.iter().map(|&v| f.reduce(v)).collect())
            .collect();
        let mats = |ms: &[Vec<Vec<i64>>]| -> Result<Vec<FpMatrix>> {
            ms.iter().map(|m| FpMatrix::from_rows(f, m)).collect()
        };
        Self::new(f, raw.n, linear, mats(&raw.symmetric)?, mats(&raw.skew)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "p": self.field.p(),
            "n": self.n,
            "linear": self.linear,
            "symmetric": self.sym.iter().map(|m| m.to_i64_rows()).collect::<Vec<_>>(),
            "skew": self.skew.iter().map(|m| m.to_i64_rows()).collect::<Vec<_>>(),
        })
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn linear(&self) -> &[Vec<u32>] {
        &self.linear
    }

    pub fn sym(&self) -> &[FpMatrix] {
        &self.sym
    }

    pub fn skew(&self) -> &[FpMatrix] {
        &self.skew
    }

    /// (d1, d2, d3).
    pub fn complexity(&self) -> (usize, usize, usize) {
        (self.linear.len(), self.sym.len(), self.skew.len())
    }

    /// A copy with extra entries appended.
    pub fn refine(
        &self,
        linear: Vec<Vec<u32>>,
        sym: Vec<FpMatrix>,
        skew: Vec<FpMatrix>,
    ) -> Result<Self> {
        let mut l = self.linear.clone();
        l.extend(linear);
        let mut s = self.sym.clone();
        s.extend(sym);
        let mut t = self.skew.clone();
        t.extend(skew);
        Self::new(self.field, self.n, l, s, t)
    }

    /// Number of F_p digits in a flattened image on G^k.
    pub fn image_len(&self, k: usize) -> usize {
        let (d1, d2, d3) = self.complexity();
        k * d1 + k * (k + 1) / 2 * d2 + k * k.saturating_sub(1) / 2 * d3
    }

    /// Flattened image of the row-major k×n point `x`: each X r_i, then the
    /// upper triangle of each X M_i Xᵀ, then the strict upper triangle of
    /// each X N_j Xᵀ.
    pub fn write_image(&self, x: &[u32], k: usize, out: &mut Vec<u32>) {
        let f = self.field;
        let n = self.n;
        out.clear();
        for r in &self.linear {
            for i in 0..k {
                out.push(dot(f, &x[i * n..(i + 1) * n], r));
            }
        }
        let mut mx = vec![0u32; k * n];
        for (mats, strict) in [(&self.sym, false), (&self.skew, true)] {
            for m in mats.iter() {
                for j in 0..k {
                    let xj = &x[j * n..(j + 1) * n];
                    for a in 0..n {
                        mx[j * n + a] = dot(f, m.row(a), xj);
                    }
                }
                for i in 0..k {
                    let lo = if strict { i + 1 } else { i };
                    for j in lo..k {
                        out.push(dot(f, &x[i * n..(i + 1) * n], &mx[j * n..(j + 1) * n]));
                    }
                }
            }
        }
    }

    /// The flattened image packed as a base-p integer.
    pub fn atom_key(&self, x: &[u32], k: usize, buf: &mut Vec<u32>) -> u128 {
        self.write_image(x, k, buf);
        let p = self.field.p() as u128;
        buf.iter().rev().fold(0u128, |acc, &d| acc * p + d as u128)
    }

    fn check_key_width(&self, k: usize) -> Result<()> {
        let bits = self.image_len(k) as f64 * (self.field.p() as f64).log2();
        if bits > 127.0 {
            return Err(Error::TooLarge {
                what: "factor image width (bits)".into(),
                size: bits,
                limit: 127,
            });
        }
        Ok(())
    }

    /// Atom key of every point of the grid.
    pub fn atom_keys(&self, shape: GridShape) -> Result<Vec<u128>> {
        self.check_shape(shape)?;
        self.check_key_width(shape.k())?;
        let k = shape.k();
        Ok((0..shape.len())
            .into_par_iter()
            .map_init(
                || (vec![0u32; shape.dim()], Vec::new()),
                |(d, buf), idx| {
                    shape.decode_into(idx, d);
                    self.atom_key(d, k, buf)
                },
            )
            .collect())
    }

    /// Atoms as lists of point indices, ordered by key.
    pub fn atoms(&self, shape: GridShape) -> Result<Vec<Vec<usize>>> {
        let keys = self.atom_keys(shape)?;
        let mut map: BTreeMap<u128, Vec<usize>> = BTreeMap::new();
        for (i, key) in keys.into_iter().enumerate() {
            map.entry(key).or_default().push(i);
        }
        Ok(map.into_values().collect())
    }

    fn check_shape(&self, shape: GridShape) -> Result<()> {
        if shape.n() != self.n || shape.field() != self.field {
            return Err(Error::DimensionMismatch(format!(
                "factor on F_{}^{} used on grid F_{}^{}",
                self.field.p(),
                self.n,
                shape.p(),
                shape.n()
            )));
        }
        Ok(())
    }

    /// Whether `f` is constant on every atom.
    pub fn is_measurable(&self, f: &GridFunction) -> Result<bool> {
        for atom in self.atoms(f.shape())? {
            let first = atom[0];
            let same = match f.values() {
                Values::Rational(v) => atom.iter().all(|&i| v[i] == v[first]),
                Values::Float(v) => atom.iter().all(|&i| v[i] == v[first]),
                Values::Complex(v) => atom.iter().all(|&i| (v[i] - v[first]).norm() < 1e-9),
            };
            if !same {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

pub fn factor_eval(factor: &QuadraticFactor, x: &FpMatrix) -> Result<FactorImage> {
    if x.cols() != factor.n || x.field() != factor.field {
        return Err(Error::DimensionMismatch(format!(
            "point has {} columns, factor expects {}",
            x.cols(),
            factor.n
        )));
    }
    let k = x.rows();
    let xt = x.transpose();
    let b1 = factor
        .linear
        .iter()
        .map(|r| x.mul_vec(r))
        .collect::<Result<Vec<_>>>()?;
    let quad = |ms: &[FpMatrix]| -> Result<Vec<FpMatrix>> {
        ms.iter().map(|m| x.mul(m)?.mul(&xt)).collect()
    };
    let b2 = quad(&factor.sym)?;
    let b3 = quad(&factor.skew)?;
    assert!(b2.iter().all(|m| m.is_symmetric()));
    assert!(b3.iter().all(|m| m.is_skew()));
    debug_assert!(b2.iter().all(|m| m.rows() == k));
    Ok(FactorImage { b1, b2, b3 })
}

/// Largest r with independent linear part and every nontrivial combination
/// of the quadratic matrices of rank ≥ r; 0 if the linear part is dependent.
/// A factor with no quadratic part gets rank n.
pub fn factor_rank(factor: &QuadraticFactor, guard: &Guard) -> Result<usize> {
    let f = factor.field;
    let n = factor.n;
    if !factor.linear.is_empty() {
        let data: Vec<u32> = factor.linear.iter().flatten().copied().collect();
        let m = FpMatrix::from_residues(f, factor.linear.len(), n, data);
        if m.rank() < factor.linear.len() {
            return Ok(0);
        }
    }
    let mats: Vec<&FpMatrix> = factor.sym.iter().chain(&factor.skew).collect();
    if mats.is_empty() {
        return Ok(n);
    }
    let limit = Guard::new(guard.limit().min(10_000_000));
    let total = checked_pow(f.p(), mats.len()).ok_or(Error::Overflow)?;
    limit.check("factor rank combinations", total as f64)?;
    let best = (1..total)
        .into_par_iter()
        .map_init(
            || vec![0u32; mats.len()],
            |c, idx| {
                decode_base(idx, f.p(), c);
                let mut acc = FpMatrix::zeros(f, n, n);
                for (a, m) in c.iter().zip(&mats) {
                    if *a != 0 {
                        acc = acc.add(&m.scale(*a)).unwrap();
                    }
                }
                acc.rank()
            },
        )
        .min()
        .unwrap_or(n);
    Ok(best)
}

/// Exact (rational, float) or averaged (complex) conditional expectation.
pub fn conditional_expectation(f: &GridFunction, factor: &QuadraticFactor) -> Result<GridFunction> {
    let shape = f.shape();
    let atoms = factor.atoms(shape)?;
    let values = match f.values() {
        Values::Rational(v) => {
            let mut out = vec![Rational::from_integer(0); v.len()];
            for atom in &atoms {
                let vals: Vec<Rational> = atom.iter().map(|&i| v[i]).collect();
                let mean = sum_rationals(&vals)
                    / BigRational::from_integer(BigInt::from(atom.len()));
                let q = from_big(&mean)?;
                for &i in atom {
                    out[i] = q;
                }
            }
            Values::Rational(out)
        }
        Values::Float(v) => {
            let mut out = vec![0.0; v.len()];
            for atom in &atoms {
                let mean = kahan_sum(0..atom.len(), |t| v[atom[t]]) / atom.len() as f64;
                for &i in atom {
                    out[i] = mean;
                }
            }
            Values::Float(out)
        }
        Values::Complex(v) => {
            let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
            for atom in &atoms {
                let re = kahan_sum(0..atom.len(), |t| v[atom[t]].re);
                let im = kahan_sum(0..atom.len(), |t| v[atom[t]].im);
                let mean = Complex64::new(re, im) / atom.len() as f64;
                for &i in atom {
                    out[i] = mean;
                }
            }
            Values::Complex(out)
        }
    };
    GridFunction::new(shape, values)
}

/// H = {D : D r_i = 0 for all i} and the annihilating characters.
#[derive(Clone, Debug)]
pub struct LinearKernel {
    pub h: GridFunction,
    /// Spanned by the k×n matrices e_a r_iᵀ, flattened row-major.
    pub h_perp: SubspaceBasis,
    pub density: BigRational,
}

pub fn linear_kernel_h(factor: &QuadraticFactor, shape: GridShape) -> Result<LinearKernel> {
    factor.check_shape(shape)?;
    let f = factor.field;
    let (k, n) = (shape.k(), shape.n());
    let lin = factor.linear.clone();
    let h = GridFunction::indicator(shape, |d| {
        lin.iter()
            .all(|r| (0..k).all(|a| dot(f, &d[a * n..(a + 1) * n], r) == 0))
    });
    let mut gens = Vec::new();
    for r in &factor.linear {
        for a in 0..k {
            let mut v = vec![0u32; k * n];
            v[a * n..(a + 1) * n].copy_from_slice(r);
            gens.push(v);
        }
    }
    let h_perp = SubspaceBasis::span(f, Ambient::new(AmbientKind::Vectors, k * n, 1), &gens)?;
    let density = BigRational::new(
        BigInt::from(1),
        BigInt::from(f.p()).pow(h_perp.dim() as u32),
    );
    Ok(LinearKernel {
        h,
        h_perp,
        density,
    })
}

/// g(X) = e_p(rᵀx + xᵀMx) with x the row-major flattening of X.
pub fn phase_function(shape: GridShape, r: &[u32], m: &FpMatrix) -> Result<GridFunction> {
    let dim = shape.dim();
    if r.len() != dim || m.rows() != dim || m.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "phase data must have size {dim}"
        )));
    }
    if !m.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let f = shape.field();
    let p = f.p() as f64;
    Ok(GridFunction::from_fn_complex(shape, |x| {
        let lin = dot(f, r, x);
        let mx = m.mul_vec(x).expect("dimensions checked");
        let t = f.add(lin, dot(f, x, &mx));
        Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / p)
    }))
}

/// The factor on which `phase_function(shape, r, m)` is measurable: the
/// blocks r_i, the diagonal blocks M_ii, and the symmetric and skew parts of
/// the off-diagonal blocks M_ij (i < j).
pub fn phase_block_factor(shape: GridShape, r: &[u32], m: &FpMatrix) -> Result<QuadraticFactor> {
    let (k, n) = (shape.k(), shape.n());
    if r.len() != k * n || m.rows() != k * n || !m.is_symmetric() {
        return Err(Error::DimensionMismatch("phase data does not match grid".into()));
    }
    let f = shape.field();
    let half = f.inv(2).unwrap();
    let linear = (0..k).map(|i| r[i * n..(i + 1) * n].to_vec()).collect();
    let mut sym = Vec::new();
    let mut skew = Vec::new();
    for i in 0..k {
        sym.push(m.block(i * n, i * n, n, n));
    }
    for i in 0..k {
        for j in i + 1..k {
            let b = m.block(i * n, j * n, n, n);
            let bt = b.transpose();
            sym.push(b.add(&bt)?.scale(half));
            skew.push(b.sub(&bt)?.scale(half));
        }
    }
    QuadraticFactor::new(f, n, linear, sym, skew)
}
