//! Three-point patterns `x, x+M1 d, x+M2 d` over finite abelian groups:
//! Bohr sets, the smoothing measure ν = μ_B ∗ μ_B, Fourier counting, the
//! regularity decomposition, popular-difference search and lifting from
//! integer boxes.

mod bohr;
mod fourier;
mod lift;
mod regularity;

pub use bohr::{bohr_set, derived_bohr, BohrSet, DerivedBohr, Group, SmoothingMeasure};
pub use fourier::dft;
pub use lift::{is_prime_u64, lift_to_interval, next_prime_in_window, LiftReport, LiftedTriple};
pub use regularity::{exp2_growth, regularity_decompose, RegularityContracts, RegularityDecomposition};

use crate::analysis::count::{normalize, product_sum, Sum, Table};
use crate::analysis::{popular_search, Backend, Number, PatternCountReport};
use crate::error::{Error, Result};
use crate::ffalg::FpMatrix;
use crate::gridfn::{GridFunction, GridShape};
use crate::guard::Guard;
use crate::patterns::PatternSpec;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use serde::Deserialize;

/// A finite group G = (F_p^n)^k with two automorphisms acting by left
/// multiplication. `Z_N` for prime N is the case k = n = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreePointSpec {
    shape: GridShape,
    pattern: PatternSpec,
}

#[derive(Deserialize)]
#[serde(tag = "kind")]
enum SpecJson {
    #[serde(rename = "Z_N")]
    Cyclic {
        #[serde(rename = "N")]
        n: u64,
        #[serde(rename = "M1")]
        m1: i64,
        #[serde(rename = "M2")]
        m2: i64,
    },
    #[serde(rename = "vector")]
    Vector {
        p: u64,
        n: usize,
        #[serde(rename = "M1")]
        m1: Vec<Vec<i64>>,
        #[serde(rename = "M2")]
        m2: Vec<Vec<i64>>,
    },
}

impl ThreePointSpec {
    pub fn new(pattern: PatternSpec, n: usize) -> Result<Self> {
        let shape = GridShape::new(pattern.field(), pattern.k(), n)?;
        check_three_point(&pattern)?;
        Ok(ThreePointSpec { shape, pattern })
    }

    /// Z_N with unit multipliers; N must be prime.
    pub fn cyclic(n: u64, m1: i64, m2: i64) -> Result<Self> {
        Self::new(PatternSpec::scalar(n, m1, m2)?, 1)
    }

    pub fn vector(p: u64, n: usize, m1: &[Vec<i64>], m2: &[Vec<i64>]) -> Result<Self> {
        Self::new(PatternSpec::from_rows(p, m1, m2)?, n)
    }

    /// `{"kind":"Z_N","N":101,"M1":2,"M2":3}` or
    /// `{"kind":"vector","p":5,"n":3,"M1":[[1]],"M2":[[2]]}`.
    pub fn from_json(s: &str) -> Result<Self> {
        match serde_json::from_str::<SpecJson>(s)? {
            SpecJson::Cyclic { n, m1, m2 } => Self::cyclic(n, m1, m2),
            SpecJson::Vector { p, n, m1, m2 } => Self::vector(p, n, &m1, &m2),
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        if self.shape.k() == 1 && self.shape.n() == 1 {
            serde_json::json!({
                "kind": "Z_N",
                "N": self.shape.p(),
                "M1": self.pattern.m1().get(0, 0),
                "M2": self.pattern.m2().get(0, 0),
            })
        } else {
            serde_json::json!({
                "kind": "vector",
                "p": self.shape.p(),
                "n": self.shape.n(),
                "M1": self.pattern.m1().to_i64_rows(),
                "M2": self.pattern.m2().to_i64_rows(),
            })
        }
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn pattern(&self) -> &PatternSpec {
        &self.pattern
    }

    pub fn group(&self) -> Group {
        Group::of_shape(&self.shape)
    }

    /// The automorphism M acting on the flattened group, i.e. M ⊗ I_n.
    pub(crate) fn flat(&self, m: &FpMatrix) -> FpMatrix {
        m.kron(&FpMatrix::identity(self.shape.field(), self.shape.n()))
    }
}

/// M1, M2 and M1 − M2 must all be invertible.
pub fn check_three_point(spec: &PatternSpec) -> Result<()> {
    let named = [
        ("M1", spec.m1().clone()),
        ("M2", spec.m2().clone()),
        ("M1 − M2", spec.m1().sub(spec.m2())?),
    ];
    for (name, m) in named {
        if m.det()? == 0 {
            return Err(Error::NotAutomorphism(name.to_string()));
        }
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CountMethod {
    Direct,
    Fourier,
}

impl CountMethod {
    pub fn name(&self) -> &'static str {
        match self {
            CountMethod::Direct => "direct",
            CountMethod::Fourier => "fourier",
        }
    }
}

/// E_{x,d} f(x) f(x+M1 d) f(x+M2 d) ν(d) with ν = μ_B ∗ μ_B.
///
/// The direct method sums over the support of ν and is exact for rational
/// f. The Fourier method evaluates
/// Σ_{η2,η3} f̂(−η2−η3) f̂(η2) f̂(η3) ν̂(−M1ᵀη2 − M2ᵀη3).
pub fn smoothed_3pt_count(
    f: &GridFunction,
    spec: &ThreePointSpec,
    b: &BohrSet,
    method: CountMethod,
    guard: &Guard,
) -> Result<Number> {
    let shape = spec.shape();
    if f.shape() != shape || b.group() != spec.group() {
        return Err(Error::DimensionMismatch(
            "function, Bohr set and pattern live on different groups".into(),
        ));
    }
    match method {
        CountMethod::Direct => smoothed_direct(f, spec, b, guard),
        CountMethod::Fourier => smoothed_fourier(f, spec, b, guard).map(Number::Float),
    }
}

fn smoothed_direct(
    f: &GridFunction,
    spec: &ThreePointSpec,
    b: &BohrSet,
    guard: &Guard,
) -> Result<Number> {
    let shape = spec.shape();
    let nu = SmoothingMeasure::new(b, guard)?;
    let support: Vec<usize> = (0..shape.len()).filter(|&d| nu.pairs[d] > 0).collect();
    guard.check(
        "smoothed three-point count",
        support.len() as f64 * shape.len() as f64,
    )?;
    let backend = if f.rational_values().is_some() {
        Backend::Exact
    } else {
        Backend::Float
    };
    let table = Table::new(f, backend)?;
    let t1 = shape.left_mul_table(spec.pattern.m1())?;
    let t2 = shape.left_mul_table(spec.pattern.m2())?;

    let mut exact = BigInt::from(0);
    let mut float = 0.0f64;
    for &d in &support {
        let (a, c) = (t1[d] as usize, t2[d] as usize);
        let s = product_sum(
            &table,
            &shape,
            |x| x,
            shape.len(),
            |x, out| {
                out[0] = x;
                out[1] = shape.add_index(x, a);
                out[2] = shape.add_index(x, c);
            },
            3,
        );
        match s {
            Sum::Int(v) => exact += v * BigInt::from(nu.pairs[d]),
            Sum::Float(v) => float += v * nu.pairs[d] as f64,
        }
    }
    // The normalization divides by N; the extra |B|² comes from ν.
    let b2 = (b.size() as u64).pow(2);
    Ok(match backend {
        Backend::Exact => match normalize(&table, Sum::Int(exact), 3, shape.len()) {
            Number::Exact(q) => Number::Exact(q / BigRational::from_integer(BigInt::from(b2))),
            other => other,
        },
        Backend::Float => Number::Float(float / (shape.len() as f64 * b2 as f64)),
    })
}

fn smoothed_fourier(
    f: &GridFunction,
    spec: &ThreePointSpec,
    b: &BohrSet,
    guard: &Guard,
) -> Result<f64> {
    let shape = spec.shape();
    let g = spec.group();
    let len = shape.len();
    guard.check("Fourier three-point count", (len as f64).powi(2))?;
    let fv: Vec<Complex64> = (0..len).map(|i| f.get_complex(i)).collect();
    let fh = dft(&g, &fv, false, guard)?;
    let mu_hat = dft(&g, &b.measure_density(), false, guard)?;
    let t1 = shape.left_mul_table(&spec.pattern.m1().transpose())?;
    let t2 = shape.left_mul_table(&spec.pattern.m2().transpose())?;

    let total = crate::guard::chunked_fold(
        len,
        Complex64::new(0.0, 0.0),
        |range| {
            let mut acc = Complex64::new(0.0, 0.0);
            for e2 in range {
                if fh[e2].norm_sqr() == 0.0 {
                    continue;
                }
                let m2 = shape.neg_index(e2);
                for e3 in 0..len {
                    let e1 = shape.add_index(m2, shape.neg_index(e3));
                    let xi = shape.neg_index(shape.add_index(t1[e2] as usize, t2[e3] as usize));
                    let nu_hat = mu_hat[xi] * mu_hat[xi];
                    acc += fh[e1] * fh[e2] * fh[e3] * nu_hat;
                }
            }
            acc
        },
        |a, b| a + b,
    );
    Ok(total.re)
}

/// Exhaustive search for popular differences of `x, x+M1 d, x+M2 d` at the
/// threshold α³ − ε.
pub fn popular_3pt_search(
    a: &GridFunction,
    spec: &ThreePointSpec,
    epsilon: f64,
    backend: Backend,
    guard: &Guard,
) -> Result<PatternCountReport> {
    if a.shape() != spec.shape() {
        return Err(Error::DimensionMismatch(
            "set and pattern live on different groups".into(),
        ));
    }
    popular_search(a, &spec.pattern, epsilon, 3, backend, guard)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Rational;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fn(shape: GridShape, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..shape.len())
            .map(|_| Rational::new(rng.gen_range(0..=20), 20))
            .collect();
        GridFunction::rational(shape, v).unwrap()
    }

    #[test]
    fn spec_json_roundtrip() {
        let s = ThreePointSpec::from_json(r#"{"kind":"Z_N","N":101,"M1":2,"M2":3}"#).unwrap();
        assert_eq!(s.shape().len(), 101);
        let t = ThreePointSpec::from_json(&s.to_json().to_string()).unwrap();
        assert_eq!(s, t);
        let v = ThreePointSpec::from_json(
            r#"{"kind":"vector","p":5,"n":2,"M1":[[1,0],[0,1]],"M2":[[0,1],[-1,0]]}"#,
        )
        .unwrap();
        assert_eq!(v.shape().len(), 625);
    }

    #[test]
    fn rejects_non_automorphisms() {
        assert!(matches!(
            ThreePointSpec::cyclic(7, 2, 2),
            Err(Error::NotAutomorphism(_))
        ));
        assert!(matches!(
            ThreePointSpec::cyclic(7, 0, 3),
            Err(Error::NotAutomorphism(_))
        ));
    }

    #[test]
    fn constant_gives_cube() {
        let spec = ThreePointSpec::cyclic(31, 1, 2).unwrap();
        let g = spec.group();
        let b = bohr_set(&g, &[vec![1]], Rational::new(1, 5)).unwrap();
        let f = GridFunction::constant(spec.shape(), Rational::new(2, 5));
        let v = smoothed_3pt_count(&f, &spec, &b, CountMethod::Direct, &Guard::default()).unwrap();
        assert_eq!(v.exact().unwrap(), &BigRational::new(8.into(), 125.into()));
        let w = smoothed_3pt_count(&f, &spec, &b, CountMethod::Fourier, &Guard::default()).unwrap();
        assert!((w.to_f64() - 0.064).abs() < 1e-12);
    }

    #[test]
    fn whole_group_is_plain_average() {
        let spec = ThreePointSpec::cyclic(13, 2, 5).unwrap();
        let b = bohr_set(&spec.group(), &[], Rational::new(1, 2)).unwrap();
        let f = random_fn(spec.shape(), 3);
        let v = smoothed_3pt_count(&f, &spec, &b, CountMethod::Direct, &Guard::default()).unwrap();
        let n = 13usize;
        let mut s = 0.0;
        for x in 0..n {
            for d in 0..n {
                s += f.get_f64(x) * f.get_f64((x + 2 * d) % n) * f.get_f64((x + 5 * d) % n);
            }
        }
        assert!((v.to_f64() - s / (n * n) as f64).abs() < 1e-12);
    }

    #[test]
    fn backends_agree_on_z31() {
        let spec = ThreePointSpec::cyclic(31, 2, 3).unwrap();
        for (seed, delta) in [(1u64, (1, 5)), (2, (1, 3)), (3, (1, 10))] {
            let f = random_fn(spec.shape(), seed);
            let b = bohr_set(&spec.group(), &[vec![1], vec![7]], Rational::new(delta.0, delta.1))
                .unwrap();
            let g = Guard::default();
            let d = smoothed_3pt_count(&f, &spec, &b, CountMethod::Direct, &g).unwrap();
            let h = smoothed_3pt_count(&f, &spec, &b, CountMethod::Fourier, &g).unwrap();
            assert!((d.to_f64() - h.to_f64()).abs() < 1e-9, "{:?} {:?}", d, h);
        }
    }

    #[test]
    fn backends_agree_on_vector_group() {
        let spec = ThreePointSpec::vector(5, 2, &[vec![1, 0], vec![0, 1]], &[vec![0, 1], vec![-1, 0]])
            .unwrap();
        let f = random_fn(spec.shape(), 9).to_float().unwrap();
        let chars = vec![vec![1, 0, 2, 0], vec![0, 1, 0, 3]];
        let b = bohr_set(&spec.group(), &chars, Rational::new(1, 4)).unwrap();
        let g = Guard::default();
        let d = smoothed_3pt_count(&f, &spec, &b, CountMethod::Direct, &g).unwrap();
        let h = smoothed_3pt_count(&f, &spec, &b, CountMethod::Fourier, &g).unwrap();
        assert!((d.to_f64() - h.to_f64()).abs() < 1e-9);
    }

    #[test]
    fn popular_search_full_set_and_subgroup() {
        let spec = ThreePointSpec::vector(5, 3, &[vec![1]], &[vec![2]]).unwrap();
        let full = GridFunction::constant(spec.shape(), Rational::from_integer(1));
        let r = popular_3pt_search(&full, &spec, 0.1, Backend::Exact, &Guard::default()).unwrap();
        assert_eq!(r.threshold_hits, 124);
        // The hyperplane x_0 = 0 is a subgroup: every d inside it gives α.
        let shape = spec.shape();
        let h = GridFunction::indicator(shape, |x| x[0] == 0);
        let r = popular_3pt_search(&h, &spec, 0.0, Backend::Exact, &Guard::default()).unwrap();
        for d in 1..shape.len() {
            let inside = shape.decode(d).x.get(0, 0) == 0;
            assert_eq!(inside, (r.counts[d] - 0.2).abs() < 1e-12);
        }
        assert_eq!(r.threshold_hits, 24);
    }
}
