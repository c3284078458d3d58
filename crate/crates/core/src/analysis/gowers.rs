use crate::error::{Error, Result};
use crate::ffalg::FpMatrix;
use crate::gridfn::{GridFunction, GridShape};
use crate::guard::{chunked_fold, Guard};
use num_complex::Complex64;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GowersMode {
    /// Sum over all parallelepipeds.
    Direct,
    /// Through ‖f‖^{2^s} = E_h ‖Δ_h f‖^{2^{s−1}}.
    Recursive,
}

/// Index addition, tabulated when the grid is small.
struct Adder {
    shape: GridShape,
    table: Option<Vec<u32>>,
}

impl Adder {
    fn new(shape: GridShape) -> Self {
        let n = shape.len();
        let table = (n <= 2048).then(|| {
            (0..n * n)
                .into_par_iter()
                .map(|t| shape.add_index(t / n, t % n) as u32)
                .collect()
        });
        Adder { shape, table }
    }

    #[inline]
    fn add(&self, a: usize, b: usize) -> usize {
        match &self.table {
            Some(t) => t[a * self.shape.len() + b] as usize,
            None => self.shape.add_index(a, b),
        }
    }
}

fn power_direct(vals: &[Complex64], s: usize, adder: &Adder) -> f64 {
    let n = vals.len();
    let total = n.pow(s as u32 + 1);
    let corners = 1usize << s;
    let sum = chunked_fold(
        total,
        Complex64::new(0.0, 0.0),
        |range| {
            let mut pts = vec![0usize; corners];
            let mut acc = Complex64::new(0.0, 0.0);
            for t in range {
                let mut rest = t;
                pts[0] = rest % n;
                rest /= n;
                for j in 0..s {
                    let h = rest % n;
                    rest /= n;
                    let bit = 1 << j;
                    for w in 0..bit {
                        pts[w | bit] = adder.add(pts[w], h);
                    }
                }
                let mut prod = Complex64::new(1.0, 0.0);
                for (w, &x) in pts.iter().enumerate() {
                    let v = vals[x];
                    prod *= if w.count_ones() % 2 == 1 { v.conj() } else { v };
                }
                acc += prod;
            }
            acc
        },
        |a, b| a + b,
    );
    sum.re / total as f64
}

fn power_recursive(vals: &[Complex64], s: usize, adder: &Adder, top: bool) -> f64 {
    let n = vals.len();
    if s == 1 {
        let m: Complex64 = vals.iter().sum::<Complex64>() / n as f64;
        return m.norm_sqr();
    }
    let term = |h: usize| {
        let d: Vec<Complex64> = (0..n).map(|x| vals[adder.add(x, h)] * vals[x].conj()).collect();
        power_recursive(&d, s - 1, adder, false)
    };
    let sum: f64 = if top {
        let parts: Vec<f64> = (0..n).into_par_iter().map(term).collect();
        parts.iter().sum()
    } else {
        (0..n).map(term).sum()
    };
    sum / n as f64
}

/// ‖f‖_{U^s} on G^k, s ≥ 1. U¹ is |E f|.
pub fn gowers_norm(f: &GridFunction, s: usize, mode: GowersMode, guard: &Guard) -> Result<f64> {
    if s == 0 {
        return Err(Error::OutOfRange("Gowers norms need s ≥ 1".into()));
    }
    let n = f.len() as f64;
    match mode {
        GowersMode::Direct => guard.check("Gowers norm (direct)", n.powi(s as i32 + 1) * (1u64 << s) as f64)?,
        GowersMode::Recursive => guard.check("Gowers norm (recursive)", 2.0 * n.powi(s as i32))?,
    }
    let vals: Vec<Complex64> = (0..f.len()).map(|i| f.get_complex(i)).collect();
    if s == 1 {
        return Ok(f.mean_complex().norm());
    }
    let adder = Adder::new(f.shape());
    let power = match mode {
        GowersMode::Direct => power_direct(&vals, s, &adder),
        GowersMode::Recursive => power_recursive(&vals, s, &adder, true),
    };
    Ok(power.max(0.0).powf(1.0 / (1u64 << s) as f64))
}

#[derive(Clone, Debug)]
pub struct VonNeumannReport {
    pub lhs: f64,
    pub norms: Vec<f64>,
    pub rhs: f64,
    pub holds: bool,
}

impl VonNeumannReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "lhs": self.lhs,
            "norms": self.norms,
            "rhs": self.rhs,
            "holds": self.holds,
        })
    }
}

/// |E_{x,d} Π f_i(x + A_i d)| against min_i ‖f_i‖_{U^{s−1}}, where the A_i
/// act on the flattened group G^k = F_p^{kn}.
pub fn von_neumann_check(
    fs: &[GridFunction],
    autos: &[FpMatrix],
    guard: &Guard,
) -> Result<VonNeumannReport> {
    let s = fs.len();
    if s < 2 || autos.len() != s {
        return Err(Error::Invalid(format!(
            "need s ≥ 2 functions and as many maps, got {} and {}",
            s,
            autos.len()
        )));
    }
    let shape = fs[0].shape();
    if fs.iter().any(|f| f.shape() != shape) {
        return Err(Error::DimensionMismatch("functions live on different grids".into()));
    }
    if fs.iter().any(|f| !f.is_one_bounded()) {
        return Err(Error::OutOfRange("functions must be 1-bounded".into()));
    }
    let dim = shape.dim();
    for (i, a) in autos.iter().enumerate() {
        if a.rows() != dim || a.cols() != dim || a.field() != shape.field() {
            return Err(Error::DimensionMismatch(format!("map {i} must be {dim}×{dim}")));
        }
        if !a.is_invertible() {
            return Err(Error::NotAutomorphism(format!("A_{}", i + 1)));
        }
        for (j, b) in autos.iter().enumerate().skip(i + 1) {
            if !a.sub(b)?.is_invertible() {
                return Err(Error::NotAutomorphism(format!("A_{} − A_{}", i + 1, j + 1)));
            }
        }
    }
    let len = shape.len();
    guard.check("von Neumann average", (len as f64).powi(2) * s as f64)?;

    let tables: Vec<Vec<u32>> = autos
        .iter()
        .map(|a| {
            (0..len)
                .into_par_iter()
                .map_init(
                    || vec![0u32; dim],
                    |d, idx| {
                        shape.decode_into(idx, d);
                        shape.encode_digits(&a.mul_vec(d).expect("square map")) as u32
                    },
                )
                .collect()
        })
        .collect();
    let vals: Vec<Vec<Complex64>> = fs
        .iter()
        .map(|f| (0..len).map(|i| f.get_complex(i)).collect())
        .collect();
    let adder = Adder::new(shape);
    let sum = chunked_fold(
        len * len,
        Complex64::new(0.0, 0.0),
        |range| {
            let mut acc = Complex64::new(0.0, 0.0);
            for t in range {
                let (x, d) = (t / len, t % len);
                let mut prod = Complex64::new(1.0, 0.0);
                for i in 0..s {
                    prod *= vals[i][adder.add(x, tables[i][d] as usize)];
                }
                acc += prod;
            }
            acc
        },
        |a, b| a + b,
    );
    let lhs = (sum / (len * len) as f64).norm();
    let norms = fs
        .iter()
        .map(|f| gowers_norm(f, s - 1, GowersMode::Recursive, guard))
        .collect::<Result<Vec<_>>>()?;
    let rhs = norms.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(VonNeumannReport {
        lhs,
        holds: lhs <= rhs + 1e-9,
        norms,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffalg::PrimeField;
    use crate::gridfn::{phase_function, Rational};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape(p: u64, k: usize, n: usize) -> GridShape {
        GridShape::new(PrimeField::new(p).unwrap(), k, n).unwrap()
    }

    #[test]
    fn constants_and_phases() {
        let g = Guard::default();
        let s = shape(5, 1, 2);
        let c = GridFunction::constant(s, Rational::new(3, 5));
        for k in 1..=3 {
            let v = gowers_norm(&c, k, GowersMode::Recursive, &g).unwrap();
            assert!((v - 0.6).abs() < 1e-12);
        }
        // a quadratic phase has U² norm p^{-rank/4} and U³ norm 1
        let f = PrimeField::new(5).unwrap();
        let m = FpMatrix::identity(f, 2);
        let q = phase_function(s, &[1, 0], &m).unwrap();
        let u2 = gowers_norm(&q, 2, GowersMode::Direct, &g).unwrap();
        assert!((u2 - 5f64.powf(-0.5)).abs() < 1e-12);
        let u3 = gowers_norm(&q, 3, GowersMode::Recursive, &g).unwrap();
        assert!((u3 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn u2_of_indicator_matches_fourier() {
        let s = shape(3, 1, 2);
        let set = |d: &[u32]| (d[0] + d[1] * d[1]).is_multiple_of(3) || d == [1, 1];
        let f = GridFunction::indicator(s, set);
        let u2 = gowers_norm(&f, 2, GowersMode::Direct, &Guard::default()).unwrap();
        // Σ_ξ |f̂(ξ)|^4
        let mut sum4 = 0.0;
        for xi in 0..9usize {
            let (a, b) = (xi % 3, xi / 3);
            let mut z = Complex64::new(0.0, 0.0);
            for x in 0..9usize {
                let (u, v) = (x % 3, x / 3);
                let ang = -2.0 * std::f64::consts::PI * ((a * u + b * v) % 3) as f64 / 3.0;
                z += f.get_complex(x) * Complex64::from_polar(1.0, ang);
            }
            sum4 += (z / 9.0).norm_sqr().powi(2);
        }
        assert!((u2.powi(4) - sum4).abs() < 1e-12);
    }

    #[test]
    fn von_neumann_examples() {
        let g = Guard::default();
        let s = shape(5, 1, 2);
        let f = PrimeField::new(5).unwrap();
        let maps: Vec<FpMatrix> = (1..4).map(|c| FpMatrix::scalar_matrix(f, 2, c)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fs: Vec<GridFunction> = (0..3)
            .map(|_| GridFunction::float(s, (0..25).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
            .collect();
        let rep = von_neumann_check(&fs, &maps, &g).unwrap();
        assert!(rep.holds, "{rep:?}");
        let bad: Vec<FpMatrix> = [1, 2, 2].iter().map(|&c| FpMatrix::scalar_matrix(f, 2, c)).collect();
        assert!(matches!(von_neumann_check(&fs, &bad, &g), Err(Error::NotAutomorphism(_))));
        // s = 2 with A_1 = 0 fails the automorphism condition; A = (1, 2) gives |E f1||E f2|
        let two = [FpMatrix::scalar_matrix(f, 2, 1), FpMatrix::scalar_matrix(f, 2, 2)];
        let rep = von_neumann_check(&fs[..2], &two, &g).unwrap();
        let prod = fs[0].mean_f64().abs() * fs[1].mean_f64().abs();
        assert!((rep.lhs - prod).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn direct_matches_recursive(seed in any::<u64>(), p in prop::sample::select(vec![3u64, 5])) {
            let s = shape(p, 1, 2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = GridFunction::complex(
                s,
                (0..s.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect(),
            ).unwrap();
            let g = Guard::default();
            let a = gowers_norm(&f, 2, GowersMode::Direct, &g).unwrap();
            let b = gowers_norm(&f, 2, GowersMode::Recursive, &g).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
