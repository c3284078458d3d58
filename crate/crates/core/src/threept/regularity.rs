use super::{bohr_set, dft, BohrSet, Group, SmoothingMeasure, ThreePointSpec};
use crate::analysis::count::Table;
use crate::analysis::Backend;
use crate::error::{Error, Result};
use crate::gridfn::{GridFunction, Rational};
use crate::guard::Guard;
use num_complex::Complex64;
use num_integer::Integer;
use std::collections::BTreeSet;

/// The default growth function x ↦ 2^x.
pub fn exp2_growth(x: f64) -> f64 {
    x.exp2()
}

const MAX_DEN: i64 = 1_000_000_000_000_000;

/// Largest 1/q ≤ x (and at most 1/2), so radius bounds stay exact.
fn radius_below(x: f64) -> Rational {
    if x >= 0.5 {
        return Rational::new(1, 2);
    }
    let q = if x > 0.0 && (1.0 / x).is_finite() {
        ((1.0 / x).ceil() as i64).clamp(2, MAX_DEN)
    } else {
        MAX_DEN
    };
    Rational::new(1, q)
}

/// Measured versions of the four contracts.
#[derive(Clone, Debug)]
pub struct RegularityContracts {
    pub mean_preserved: bool,
    pub f1_unit_interval: bool,
    pub f2_l2: f64,
    pub f2_ok: bool,
    pub f3_fourier_max: f64,
    pub f3_ok: bool,
    /// max over x and r ∈ B(T, γ1) of |f1(x+r) − f1(x)|.
    pub lipschitz_measured: f64,
    /// C with measured ≤ C·ε, from max_r |B Δ (B+r)| / |B| ≥ ‖ν(·+r) − ν‖₁.
    pub lipschitz_constant: f64,
    pub lipschitz_ok: bool,
    pub s0_in_t: bool,
    pub reconstruction_error: f64,
    pub f2_sup: f64,
    pub f3_sup: f64,
}

impl RegularityContracts {
    pub fn all_hold(&self) -> bool {
        self.mean_preserved
            && self.f1_unit_interval
            && self.f2_ok
            && self.f3_ok
            && self.lipschitz_ok
            && self.s0_in_t
            && self.reconstruction_error < 1e-9
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean_preserved": self.mean_preserved,
            "f1_unit_interval": self.f1_unit_interval,
            "f2_l2": self.f2_l2,
            "f2_ok": self.f2_ok,
            "f3_fourier_max": self.f3_fourier_max,
            "f3_ok": self.f3_ok,
            "lipschitz_measured": self.lipschitz_measured,
            "lipschitz_constant": self.lipschitz_constant,
            "lipschitz_ok": self.lipschitz_ok,
            "s0_in_t": self.s0_in_t,
            "reconstruction_error": self.reconstruction_error,
            "f2_sup": self.f2_sup,
            "f3_sup": self.f3_sup,
            "all_hold": self.all_hold(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct RegularityDecomposition {
    pub f1: GridFunction,
    pub f2: GridFunction,
    pub f3: GridFunction,
    pub t: Vec<Vec<u32>>,
    pub gamma1: Rational,
    pub gamma2: f64,
    pub epsilon: f64,
    pub stages: usize,
    pub bohr: BohrSet,
    pub contracts: RegularityContracts,
}

impl RegularityDecomposition {
    /// max over r ∈ B′, x and i of |f1(x + M_i r) − f1(x)|, where B′ is the
    /// derived Bohr set of B(T, γ1).
    pub fn lipschitz_on_derived(&self, spec: &ThreePointSpec) -> Result<f64> {
        let derived = super::derived_bohr(&self.bohr, spec)?;
        let shape = spec.shape();
        let t1 = shape.left_mul_table(spec.pattern().m1())?;
        let t2 = shape.left_mul_table(spec.pattern().m2())?;
        let mut worst = 0.0f64;
        for r in derived.set.elements() {
            for t in [t1[r] as usize, t2[r] as usize] {
                for x in 0..shape.len() {
                    let d = (self.f1.get_f64(shape.add_index(x, t)) - self.f1.get_f64(x)).abs();
                    worst = worst.max(d);
                }
            }
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t": self.t,
            "gamma1": self.gamma1.to_string(),
            "gamma2": self.gamma2,
            "epsilon": self.epsilon,
            "stages": self.stages,
            "bohr_size": self.bohr.size(),
            "contracts": self.contracts.to_json(),
        })
    }
}

/// f = f1 + f2 + f3 with f1 = f ∗ ν for ν = μ_B ∗ μ_B, B = B(T, γ1); f3 the
/// part of f − f1 on coefficients of size at most γ2; f2 the rest.
///
/// Each stage sets γ1 = min(1/2, 1/ω1(|T| + 1/δ + 1/ε)) and γ2 = 1/ω2(1/γ1).
/// While ‖f2‖₂ > ε the large spectrum of f − f1 is added to T; if it adds
/// nothing new, γ1 is halved instead.
pub fn regularity_decompose(
    f: &GridFunction,
    epsilon: f64,
    delta: f64,
    s0: &[Vec<u32>],
    omega1: &dyn Fn(f64) -> f64,
    omega2: &dyn Fn(f64) -> f64,
    guard: &Guard,
) -> Result<RegularityDecomposition> {
    if !f.is_unit_interval() {
        return Err(Error::OutOfRange("function must take values in [0, 1]".into()));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) || !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::OutOfRange("need 0 < ε ≤ 1 and δ > 0".into()));
    }
    let shape = f.shape();
    let g = Group::of_shape(&shape);
    let cap = (1.0 / (epsilon * epsilon * delta * delta)).ceil() as usize;

    let mut t: Vec<Vec<u32>> = Vec::new();
    let mut seen = BTreeSet::new();
    for xi in s0 {
        if xi.len() != g.rank() {
            return Err(Error::DimensionMismatch("character length".into()));
        }
        let v: Vec<u32> = xi.iter().map(|&a| a % g.modulus()).collect();
        if seen.insert(v.clone()) {
            t.push(v);
        }
    }

    let mut halvings = 0i32;
    for stage in 1..=cap {
        let base = (1.0 / omega1(t.len() as f64 + 1.0 / delta + 1.0 / epsilon)).min(0.5);
        let gamma1 = radius_below(base * 0.5f64.powi(halvings));
        let g1 = *gamma1.numer() as f64 / *gamma1.denom() as f64;
        let gamma2 = 1.0 / omega2(1.0 / g1);

        let b = bohr_set(&g, &t, gamma1)?;
        let f1 = smooth(f, &b, guard)?;
        let rest: Vec<Complex64> = (0..shape.len())
            .map(|i| Complex64::new(f.get_f64(i) - f1.get_f64(i), 0.0))
            .collect();
        let hat = dft(&g, &rest, false, guard)?;
        let large: Vec<usize> = (0..hat.len()).filter(|&i| hat[i].norm() > gamma2).collect();
        let l2 = large.iter().map(|&i| hat[i].norm_sqr()).sum::<f64>().sqrt();

        if l2 <= epsilon {
            let small: Vec<Complex64> = hat
                .iter()
                .map(|z| if z.norm() > gamma2 { Complex64::new(0.0, 0.0) } else { *z })
                .collect();
            let f3v: Vec<f64> = dft(&g, &small, true, guard)?.iter().map(|z| z.re).collect();
            let f2v: Vec<f64> = (0..shape.len()).map(|i| rest[i].re - f3v[i]).collect();
            let f2 = GridFunction::float(shape, f2v)?;
            let f3 = GridFunction::float(shape, f3v)?;
            let contracts = measure_contracts(f, &f1, &f2, &f3, &b, s0, epsilon, gamma2, guard)?;
            return Ok(RegularityDecomposition {
                f1,
                f2,
                f3,
                t,
                gamma1,
                gamma2,
                epsilon,
                stages: stage,
                bohr: b,
                contracts,
            });
        }

        let before = t.len();
        for &i in &large {
            if i == 0 {
                continue;
            }
            let xi = g.decode(i);
            if seen.insert(xi.clone()) {
                t.push(xi);
            }
        }
        if t.len() == before {
            halvings += 1;
        }
    }
    Err(Error::NonConvergent(cap))
}

/// f ∗ ν: exact when f is rational.
fn smooth(f: &GridFunction, b: &BohrSet, guard: &Guard) -> Result<GridFunction> {
    let shape = f.shape();
    let g = b.group();
    let nu = SmoothingMeasure::new(b, guard)?;
    let support: Vec<usize> = (0..g.len()).filter(|&d| nu.pairs[d] > 0).collect();
    guard.check("smoothing", support.len() as f64 * g.len() as f64)?;
    let b2 = (b.size() as i128).pow(2);
    let shifted = |x: usize, y: usize| g.add(x, g.neg(y));
    if f.rational_values().is_some() {
        if let Table::Int { nums, den } = Table::new(f, Backend::Exact)? {
            let v = (0..g.len())
                .map(|x| {
                    let s: i128 = support
                        .iter()
                        .map(|&y| nums[shifted(x, y)] as i128 * nu.pairs[y] as i128)
                        .sum();
                    let d = den as i128 * b2;
                    let c = s.gcd(&d);
                    let (n, d) = (s / c, d / c);
                    if n > i64::MAX as i128 || d > i64::MAX as i128 {
                        return Err(Error::Overflow);
                    }
                    Ok(Rational::new(n as i64, d as i64))
                })
                .collect::<Result<Vec<_>>>()?;
            return GridFunction::rational(shape, v);
        }
    }
    let v = (0..g.len())
        .map(|x| {
            crate::guard::kahan_sum(0..support.len(), |j| {
                let y = support[j];
                f.get_f64(shifted(x, y)) * nu.pairs[y] as f64
            }) / b2 as f64
        })
        .collect();
    GridFunction::float(shape, v)
}

#[allow(clippy::too_many_arguments)]
fn measure_contracts(
    f: &GridFunction,
    f1: &GridFunction,
    f2: &GridFunction,
    f3: &GridFunction,
    b: &BohrSet,
    s0: &[Vec<u32>],
    epsilon: f64,
    gamma2: f64,
    guard: &Guard,
) -> Result<RegularityContracts> {
    let g = b.group();
    let len = g.len();
    let mean_preserved = match (f.rational_values(), f1.rational_values()) {
        (Some(_), Some(_)) => f.mean_exact()? == f1.mean_exact()?,
        _ => (f.mean_f64() - f1.mean_f64()).abs() < 1e-12,
    };
    let f1_unit_interval = f1.is_unit_interval();
    let f2_l2 = f2.norm2_sq_f64().sqrt();
    let f3c: Vec<Complex64> = (0..len).map(|i| f3.get_complex(i)).collect();
    let f3_fourier_max = dft(&g, &f3c, false, guard)?
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);

    let elems = b.elements();
    guard.check("Lipschitz check", elems.len() as f64 * len as f64)?;
    let mut measured = 0.0f64;
    let mut sym = 0usize;
    for &r in &elems {
        for x in 0..len {
            measured = measured.max((f1.get_f64(g.add(x, r)) - f1.get_f64(x)).abs());
        }
        let moved = elems.iter().filter(|&&y| !b.contains(g.add(y, r))).count();
        sym = sym.max(2 * moved);
    }
    let bound = sym as f64 / b.size() as f64;
    let lipschitz_constant = bound / epsilon;

    let reconstruction_error = (0..len)
        .map(|i| (f.get_f64(i) - f1.get_f64(i) - f2.get_f64(i) - f3.get_f64(i)).abs())
        .fold(0.0, f64::max);
    let sup = |h: &GridFunction| (0..len).map(|i| h.get_f64(i).abs()).fold(0.0, f64::max);
    let s0_in_t = s0.iter().all(|xi| {
        let v: Vec<u32> = xi.iter().map(|&a| a % g.modulus()).collect();
        b.chars().contains(&v)
    });
    Ok(RegularityContracts {
        mean_preserved,
        f1_unit_interval,
        f2_l2,
        f2_ok: f2_l2 <= epsilon + 1e-12,
        f3_fourier_max,
        f3_ok: f3_fourier_max <= gamma2 + 1e-12,
        lipschitz_measured: measured,
        lipschitz_constant,
        lipschitz_ok: measured <= bound + 1e-12,
        s0_in_t,
        reconstruction_error,
        f2_sup: sup(f2),
        f3_sup: sup(f3),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear(x: f64) -> f64 {
        x
    }

    fn random_fn(spec: &ThreePointSpec, seed: u64) -> GridFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = (0..spec.shape().len())
            .map(|_| Rational::new(rng.gen_range(0..=100), 100))
            .collect();
        GridFunction::rational(spec.shape(), v).unwrap()
    }

    #[test]
    fn radius_is_below_target() {
        assert_eq!(radius_below(0.7), Rational::new(1, 2));
        assert_eq!(radius_below(0.3), Rational::new(1, 4));
        assert_eq!(radius_below(0.0), Rational::new(1, MAX_DEN));
        assert_eq!(radius_below(f64::NAN), Rational::new(1, MAX_DEN));
    }

    #[test]
    fn constant_function() {
        let spec = ThreePointSpec::cyclic(31, 1, 2).unwrap();
        let f = GridFunction::constant(spec.shape(), Rational::new(3, 7));
        let d = regularity_decompose(&f, 0.2, 0.5, &[vec![1]], &linear, &linear, &Guard::default())
            .unwrap();
        assert!(d.contracts.all_hold());
        assert!((0..31).all(|i| d.f1.get_f64(i) == 3.0 / 7.0));
        assert!(d.f2.norm2_sq_f64() < 1e-24 && d.f3.norm2_sq_f64() < 1e-24);
    }

    #[test]
    fn random_functions_meet_contracts() {
        let spec = ThreePointSpec::cyclic(101, 2, 3).unwrap();
        for seed in 0..4 {
            let f = random_fn(&spec, seed);
            for (w1, w2) in [(&linear as &dyn Fn(f64) -> f64, &linear as &dyn Fn(f64) -> f64),
                             (&exp2_growth, &exp2_growth)] {
                let d = regularity_decompose(&f, 0.2, 0.5, &[vec![1]], w1, w2, &Guard::default())
                    .unwrap();
                assert!(d.contracts.all_hold(), "{:?}", d.contracts);
                let c = &d.contracts;
                assert!(d.lipschitz_on_derived(&spec).unwrap() <= c.lipschitz_constant * 0.2 + 1e-12);
            }
        }
    }

    #[test]
    fn linear_growth_smooths_nontrivially() {
        let spec = ThreePointSpec::cyclic(101, 2, 3).unwrap();
        let f = random_fn(&spec, 11);
        let d = regularity_decompose(&f, 0.2, 0.5, &[vec![1]], &linear, &linear, &Guard::default())
            .unwrap();
        assert!(d.bohr.size() > 1);
        assert!(d.f1.rational_values().is_some());
    }

    #[test]
    fn bohr_measurable_indicator() {
        // 1_{B(S0, ρ0)} with S0 = {1}, ρ0 = 1/4: f3 is small at once.
        let spec = ThreePointSpec::cyclic(101, 1, 2).unwrap();
        let b = bohr_set(&spec.group(), &[vec![1]], Rational::new(1, 4)).unwrap();
        let f = GridFunction::indicator(spec.shape(), |x| b.contains(x[0] as usize));
        let d = regularity_decompose(&f, 0.2, 0.5, &[vec![1]], &linear, &linear, &Guard::default())
            .unwrap();
        assert!(d.contracts.all_hold());
        assert!(d.contracts.f3_fourier_max <= d.gamma2);
    }

    #[test]
    fn stage_cap_reports_non_convergence() {
        // ε = 1/4 and δ = 4 allow a single stage; with γ2 = 0 every nonzero
        // coefficient of f − E f counts as large, and ‖f − E f‖₂ = 1/2.
        let spec = ThreePointSpec::cyclic(31, 1, 2).unwrap();
        let f = GridFunction::indicator(spec.shape(), |x| x[0] % 2 == 0);
        let flat = |_: f64| 1.0;
        let huge = |_: f64| f64::INFINITY;
        let r = regularity_decompose(&f, 0.25, 4.0, &[], &flat, &huge, &Guard::default());
        assert!(matches!(r, Err(Error::NonConvergent(1))));
    }
}
