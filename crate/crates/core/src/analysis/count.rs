use super::Number;
use crate::error::{Error, Result};
use crate::gridfn::{GridFunction, GridPoint, GridShape, Values};
use crate::guard::{chunked_fold, Guard};
use crate::patterns::PatternSpec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Float => "float",
        }
    }
}

/// Values prepared for product sums: integers over a common denominator,
/// or floats.
pub(crate) enum Table {
    Int { nums: Vec<i64>, den: i64 },
    Float(Vec<f64>),
}

impl Table {
    pub(crate) fn new(f: &GridFunction, backend: Backend) -> Result<Table> {
        match (backend, f.values()) {
            (Backend::Exact, Values::Rational(v)) => {
                let mut den: i64 = 1;
                for q in v {
                    let g = den.gcd(q.denom());
                    den = (den / g).checked_mul(*q.denom()).ok_or(Error::Overflow)?;
                }
                let nums = v
                    .iter()
                    .map(|q| q.numer().checked_mul(den / q.denom()).ok_or(Error::Overflow))
                    .collect::<Result<_>>()?;
                Ok(Table::Int { nums, den })
            }
            (Backend::Exact, _) => Err(Error::Invalid(
                "exact backend needs a rational function".into(),
            )),
            (Backend::Float, Values::Complex(_)) => Err(Error::Invalid(
                "pattern counts need a real-valued function".into(),
            )),
            (Backend::Float, _) => Ok(Table::Float((0..f.len()).map(|i| f.get_f64(i)).collect())),
        }
    }
}

/// Raw sum over x of Π_j f(x + o_j), for offset index lists.
pub(crate) enum Sum {
    Int(BigInt),
    Float(f64),
}

pub(crate) fn product_sum(
    table: &Table,
    shape: &GridShape,
    xs: impl Fn(usize) -> usize + Sync,
    nx: usize,
    points: impl Fn(usize, &mut [usize]) + Sync,
    m: usize,
) -> Sum {
    match table {
        Table::Int { nums, .. } => {
            let total = chunked_fold(
                nx,
                BigInt::zero(),
                |range| {
                    let mut idx = vec![0usize; m];
                    let mut acc: i128 = 0;
                    let mut big = BigInt::zero();
                    for t in range {
                        points(xs(t), &mut idx);
                        let mut prod: Option<i128> = Some(1);
                        for &i in idx.iter() {
                            let v = nums[i];
                            if v == 0 {
                                prod = Some(0);
                                break;
                            }
                            prod = prod.and_then(|p| p.checked_mul(v as i128));
                        }
                        match prod.and_then(|p| acc.checked_add(p)) {
                            Some(s) => acc = s,
                            None => {
                                let mut b = BigInt::one();
                                for &i in idx.iter() {
                                    b *= nums[i];
                                }
                                big += b;
                            }
                        }
                    }
                    big + BigInt::from(acc)
                },
                |a, b| a + b,
            );
            let _ = shape;
            Sum::Int(total)
        }
        Table::Float(vals) => {
            let total = chunked_fold(
                nx,
                0.0f64,
                |range| {
                    let mut idx = vec![0usize; m];
                    let (mut sum, mut comp) = (0.0f64, 0.0f64);
                    for t in range {
                        points(xs(t), &mut idx);
                        let v: f64 = idx.iter().map(|&i| vals[i]).product();
                        let y = v - comp;
                        let s = sum + y;
                        comp = (s - sum) - y;
                        sum = s;
                    }
                    sum
                },
                |a, b| a + b,
            );
            Sum::Float(total)
        }
    }
}

pub(crate) fn normalize(table: &Table, sum: Sum, m: usize, count: usize) -> Number {
    match (table, sum) {
        (Table::Int { den, .. }, Sum::Int(s)) => {
            let d = BigInt::from(*den).pow(m as u32) * BigInt::from(count);
            Number::Exact(BigRational::new(s, d))
        }
        (_, Sum::Float(s)) => Number::Float(s / count as f64),
        _ => unreachable!("table and sum kinds agree"),
    }
}

struct Offsets {
    tables: Vec<Vec<u32>>,
}

impl Offsets {
    fn new(spec: &PatternSpec, shape: &GridShape, points: usize) -> Result<Self> {
        if points != 3 && points != 4 {
            return Err(Error::Invalid(format!("pattern must have 3 or 4 points, got {points}")));
        }
        if spec.k() != shape.k() || spec.field() != shape.field() {
            return Err(Error::DimensionMismatch(format!(
                "pattern has k = {} over F_{}, function has k = {} over F_{}",
                spec.k(),
                spec.p(),
                shape.k(),
                shape.p()
            )));
        }
        let mut mats = vec![spec.m1().clone(), spec.m2().clone()];
        if points == 4 {
            mats.push(spec.m_sum());
        }
        let tables = mats
            .iter()
            .map(|m| shape.left_mul_table(m))
            .collect::<Result<_>>()?;
        Ok(Offsets { tables })
    }

    fn for_d(&self, d: usize) -> Vec<usize> {
        self.tables.iter().map(|t| t[d] as usize).collect()
    }
}

fn count_with(
    table: &Table,
    shape: &GridShape,
    offs: &[usize],
) -> Sum {
    let m = offs.len() + 1;
    product_sum(
        table,
        shape,
        |x| x,
        shape.len(),
        |x, idx| {
            idx[0] = x;
            for (slot, &o) in idx[1..].iter_mut().zip(offs) {
                *slot = shape.add_index(x, o);
            }
        },
        m,
    )
}

/// E_X f(X) f(X+M1 D) f(X+M2 D) [f(X+(M1+M2) D)]; the last factor only for
/// the 4-point pattern.
pub fn pattern_count(
    f: &GridFunction,
    spec: &PatternSpec,
    d: &GridPoint,
    points: usize,
    backend: Backend,
) -> Result<Number> {
    let shape = f.shape();
    let offs = Offsets::new(spec, &shape, points)?;
    let di = shape.encode(&d.x)?;
    let table = Table::new(f, backend)?;
    let sum = count_with(&table, &shape, &offs.for_d(di));
    Ok(normalize(&table, sum, points, shape.len()))
}

#[derive(Clone, Debug)]
pub struct PatternCountReport {
    pub points: usize,
    pub backend: Backend,
    pub alpha: Number,
    pub epsilon: f64,
    pub threshold: Number,
    /// β(d) for every encoded d, as floats.
    pub counts: Vec<f64>,
    pub beta_zero: Number,
    pub beta_max: Number,
    pub argmax_d: usize,
    pub threshold_hits: usize,
}

impl PatternCountReport {
    pub fn to_json(&self, shape: &GridShape) -> serde_json::Value {
        serde_json::json!({
            "points": self.points,
            "backend": self.backend.name(),
            "alpha": self.alpha.to_json(),
            "epsilon": self.epsilon,
            "threshold": self.threshold.to_json(),
            "beta_zero": self.beta_zero.to_json(),
            "beta_max": self.beta_max.to_json(),
            "max_d": self.beta_max.to_f64(),
            "argmax": self.argmax_d,
            "argmax_point": shape.decode(self.argmax_d).x.to_i64_rows(),
            "hits": self.threshold_hits,
        })
    }
}

fn pow_number(x: &Number, m: usize) -> Number {
    match x {
        Number::Exact(q) => Number::Exact(num_traits::pow(q.clone(), m)),
        Number::Float(v) => Number::Float(v.powi(m as i32)),
    }
}

/// Every d, with the popular threshold α^points − ε. Ties for the maximum
/// over d ≠ 0 go to the smallest encoded index.
pub fn popular_search(
    f: &GridFunction,
    spec: &PatternSpec,
    epsilon: f64,
    points: usize,
    backend: Backend,
    guard: &Guard,
) -> Result<PatternCountReport> {
    let shape = f.shape();
    guard.check("popular-difference search", (shape.len() as f64).powi(2))?;
    let offs = Offsets::new(spec, &shape, points)?;
    let table = Table::new(f, backend)?;

    let alpha = match &table {
        Table::Int { .. } => Number::Exact(f.mean_exact()?),
        Table::Float(v) => {
            Number::Float(crate::guard::kahan_sum(0..v.len(), |i| v[i]) / v.len() as f64)
        }
    };
    let threshold = match pow_number(&alpha, points) {
        Number::Exact(q) => Number::Exact(
            q - BigRational::from_float(epsilon)
                .ok_or_else(|| Error::Invalid("epsilon is not finite".into()))?,
        ),
        Number::Float(v) => Number::Float(v - epsilon),
    };

    let sums: Vec<Sum> = (0..shape.len())
        .into_par_iter()
        .map(|d| count_with(&table, &shape, &offs.for_d(d)))
        .collect();

    let counts: Vec<f64> = sums
        .iter()
        .map(|s| match (s, &table) {
            (Sum::Int(v), Table::Int { den, .. }) => {
                let d = (*den as f64).powi(points as i32) * shape.len() as f64;
                v.to_f64().unwrap_or(f64::NAN) / d
            }
            (Sum::Float(v), _) => v / shape.len() as f64,
            _ => unreachable!(),
        })
        .collect();

    let mut argmax = if shape.len() > 1 { 1 } else { 0 };
    let mut hits = 0usize;
    match &table {
        Table::Int { den, .. } => {
            let scale = BigInt::from(*den).pow(points as u32) * BigInt::from(shape.len());
            let thr = threshold.exact().unwrap() * BigRational::from_integer(scale);
            let ints: Vec<&BigInt> = sums
                .iter()
                .map(|s| match s {
                    Sum::Int(v) => v,
                    _ => unreachable!(),
                })
                .collect();
            for d in 1..shape.len() {
                if ints[d] > ints[argmax] {
                    argmax = d;
                }
                if BigRational::from_integer(ints[d].clone()) >= thr {
                    hits += 1;
                }
            }
        }
        Table::Float(_) => {
            let thr = threshold.to_f64() - 1e-9;
            for d in 1..shape.len() {
                if counts[d] > counts[argmax] {
                    argmax = d;
                }
                if counts[d] >= thr {
                    hits += 1;
                }
            }
        }
    }
    let exact_at = |d: usize| -> Number {
        let s = match &sums[d] {
            Sum::Int(v) => Sum::Int(v.clone()),
            Sum::Float(v) => Sum::Float(*v),
        };
        normalize(&table, s, points, shape.len())
    };
    let beta_max = exact_at(argmax);
    debug_assert!(beta_max.exact().is_none_or(|q| !q.is_negative()));
    Ok(PatternCountReport {
        points,
        backend,
        alpha,
        epsilon,
        threshold,
        beta_zero: exact_at(0),
        beta_max,
        argmax_d: argmax,
        threshold_hits: hits,
        counts,
    })
}
