use super::{bohr_set, Group, SmoothingMeasure};
use crate::error::{Error, Result};
use crate::gridfn::Rational;
use crate::guard::Guard;
use std::collections::HashSet;

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, m);
        }
        a = mul_mod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller–Rabin; these bases suffice for all of u64.
pub fn is_prime_u64(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let (mut d, mut s) = (n - 1, 0);
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'outer: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Smallest prime q with lo < q < hi.
pub fn next_prime_in_window(lo: u64, hi: f64) -> Result<u64> {
    let mut q = lo + 1;
    while (q as f64) < hi {
        if is_prime_u64(q) {
            return Ok(q);
        }
        q += 1;
    }
    Err(Error::NoPrimeInWindow {
        lo,
        hi: hi.ceil() as u64,
    })
}

/// Fraction-free elimination; exact for small integer matrices.
fn det_i128(m: &[Vec<i64>]) -> Result<i128> {
    let k = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for c in 0..k {
        if a[c][c] == 0 {
            match (c + 1..k).find(|&r| a[r][c] != 0) {
                Some(r) => {
                    a.swap(c, r);
                    sign = -sign;
                }
                None => return Ok(0),
            }
        }
        for r in c + 1..k {
            for j in c + 1..k {
                let v = a[r][j]
                    .checked_mul(a[c][c])
                    .and_then(|x| x.checked_sub(a[r][c].checked_mul(a[c][j])?))
                    .ok_or(Error::Overflow)?;
                a[r][j] = v / prev;
            }
            a[r][c] = 0;
        }
        prev = a[c][c];
    }
    Ok(sign * a[k - 1][k - 1])
}

fn mat_vec(m: &[Vec<i64>], v: &[i64]) -> Vec<i64> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedTriple {
    pub x: Vec<i64>,
    pub y: Vec<i64>,
    pub z: Vec<i64>,
    /// x lies in the inner box [εp/k, (1 − ε/k)p]^k, where the coordinate
    /// bound alone guarantees the triple stays in [0, p)^k.
    pub certified: bool,
}

#[derive(Clone, Debug)]
pub struct LiftReport {
    pub n: u64,
    pub k: usize,
    pub epsilon: f64,
    /// Equal to `epsilon` unless the prime window was empty and had to widen.
    pub epsilon_used: f64,
    pub p: u64,
    pub delta0: Rational,
    pub s0: Vec<Vec<u32>>,
    pub density: f64,
    /// Nonzero d in B(S0, δ0) + B(S0, δ0).
    pub candidates: usize,
    /// Candidates whose centered lift D satisfies |(M_i D)_j| ≤ εp/k.
    pub liftable: usize,
    pub best_d: Vec<i64>,
    pub mod_p_count: u64,
    pub certified_count: u64,
    pub lifted_count: u64,
    pub threshold: f64,
    pub triples: Vec<LiftedTriple>,
    pub audit_passed: usize,
}

impl LiftReport {
    pub fn audit_ok(&self) -> bool {
        self.audit_passed == self.triples.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "N": self.n,
            "k": self.k,
            "epsilon": self.epsilon,
            "epsilon_used": self.epsilon_used,
            "widened": self.epsilon_used != self.epsilon,
            "p": self.p,
            "delta0": self.delta0.to_string(),
            "s0": self.s0,
            "density": self.density,
            "candidates": self.candidates,
            "liftable": self.liftable,
            "best_d": self.best_d,
            "mod_p_count": self.mod_p_count,
            "certified_count": self.certified_count,
            "lifted_count": self.lifted_count,
            "threshold": self.threshold,
            "triples": self.triples.len(),
            "audit_passed": self.audit_passed,
            "audit_ok": self.audit_ok(),
        })
    }
}

fn centered(v: u32, p: u64) -> i64 {
    let v = v as i64;
    if 2 * v > p as i64 {
        v - p as i64
    } else {
        v
    }
}

/// Finds 3-point patterns x, x+M1 D, x+M2 D inside A ⊆ [0, N)^k by passing
/// to (Z/pZ)^k for a prime N < p < (1 + ε/k)N, searching differences in
/// the support of ν for the Bohr set on the rows of M1 and M2 with radius
/// ε/(2k), and lifting the best one back to the integers.
pub fn lift_to_interval(
    a: &[Vec<u64>],
    n: u64,
    m1: &[Vec<i64>],
    m2: &[Vec<i64>],
    epsilon: f64,
    guard: &Guard,
) -> Result<LiftReport> {
    let k = m1.len();
    if k == 0 || m1.iter().chain(m2).any(|r| r.len() != k) || m2.len() != k {
        return Err(Error::DimensionMismatch("M1 and M2 must be k×k".into()));
    }
    if n < 2 || !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange("need N ≥ 2 and ε > 0".into()));
    }
    guard.check("lifting box", (n as f64).powi(k as i32))?;
    let mut set = HashSet::new();
    for x in a {
        if x.len() != k || x.iter().any(|&c| c >= n) {
            return Err(Error::OutOfRange(format!("point {:?} outside [0, {})^{}", x, n, k)));
        }
        set.insert(x.iter().map(|&c| c as i64).collect::<Vec<_>>());
    }
    let diff: Vec<Vec<i64>> = m1
        .iter()
        .zip(m2)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect();
    let dets = [det_i128(m1)?, det_i128(m2)?, det_i128(&diff)?];
    for (name, d) in ["M1", "M2", "M1 − M2"].iter().zip(dets) {
        if d == 0 {
            return Err(Error::NotAutomorphism(format!("{} is singular over Q", name)));
        }
    }

    // Prime window, widened only if it holds no usable prime.
    let mut eps = epsilon;
    let p = loop {
        let hi = (1.0 + eps / k as f64) * n as f64;
        let mut lo = n;
        let found = loop {
            match next_prime_in_window(lo, hi) {
                Ok(q) if dets.iter().all(|&d| d % q as i128 != 0) => break Some(q),
                Ok(q) => lo = q,
                Err(_) => break None,
            }
        };
        if let Some(q) = found {
            break q;
        }
        eps *= 2.0;
    };
    if p > 1_000_000 {
        return Err(Error::OutOfRange(format!("prime {} above the supported range", p)));
    }

    let g = Group::new(p as u32, k)?;
    guard.check("lifted search", (g.len() as f64) * (n as f64).powi(k as i32))?;
    let delta0 = Rational::approximate_float((eps / (2 * k) as f64).min(0.5))
        .ok_or_else(|| Error::OutOfRange("ε".into()))?;
    let s0: Vec<Vec<u32>> = m1
        .iter()
        .chain(m2)
        .map(|r| r.iter().map(|&v| v.rem_euclid(p as i64) as u32).collect())
        .collect();
    let b0 = bohr_set(&g, &s0, delta0)?;
    let nu = SmoothingMeasure::new(&b0, guard)?;

    let bound = eps * p as f64 / k as f64;
    let in_a = |v: &[i64]| set.contains(v);
    let mut candidates = 0usize;
    let mut liftable = 0usize;
    // (mod-p count, D), ties to the smallest encoded index.
    let mut best: Option<(u64, Vec<i64>)> = None;
    for d in 1..g.len() {
        if nu.pairs[d] == 0 {
            continue;
        }
        candidates += 1;
        let dd: Vec<i64> = g.decode(d).iter().map(|&c| centered(c, p)).collect();
        let (v1, v2) = (mat_vec(m1, &dd), mat_vec(m2, &dd));
        if v1.iter().chain(&v2).any(|&c| c.abs() as f64 > bound) {
            continue;
        }
        liftable += 1;
        let mut count = 0u64;
        for x in set.iter() {
            let shift = |v: &[i64]| -> Vec<i64> {
                x.iter().zip(v).map(|(a, b)| (a + b).rem_euclid(p as i64)).collect()
            };
            if in_a(&shift(&v1)) && in_a(&shift(&v2)) {
                count += 1;
            }
        }
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            best = Some((count, dd));
        }
    }

    let (mod_p_count, best_d) = best.unwrap_or((0, vec![0; k]));
    let (v1, v2) = (mat_vec(m1, &best_d), mat_vec(m2, &best_d));
    let lo = eps / k as f64 * p as f64;
    let hi = (1.0 - eps / k as f64) * p as f64;
    let mut triples = Vec::new();
    if best_d.iter().any(|&c| c != 0) {
        let mut xs: Vec<&Vec<i64>> = set.iter().collect();
        xs.sort();
        for x in xs {
            let y: Vec<i64> = x.iter().zip(&v1).map(|(a, b)| a + b).collect();
            let z: Vec<i64> = x.iter().zip(&v2).map(|(a, b)| a + b).collect();
            if in_a(&y) && in_a(&z) {
                let certified = x.iter().all(|&c| c as f64 >= lo && c as f64 <= hi);
                triples.push(LiftedTriple {
                    x: x.clone(),
                    y,
                    z,
                    certified,
                });
            }
        }
    }
    let audit_passed = triples
        .iter()
        .filter(|t| {
            let inside = |v: &Vec<i64>| v.iter().all(|&c| c >= 0 && (c as u64) < n);
            let pattern = (0..k).all(|j| t.y[j] - t.x[j] == v1[j] && t.z[j] - t.x[j] == v2[j]);
            inside(&t.x)
                && inside(&t.y)
                && inside(&t.z)
                && in_a(&t.x)
                && in_a(&t.y)
                && in_a(&t.z)
                && pattern
        })
        .count();
    let total = (n as f64).powi(k as i32);
    let density = set.len() as f64 / total;
    Ok(LiftReport {
        n,
        k,
        epsilon,
        epsilon_used: eps,
        p,
        delta0,
        s0,
        density,
        candidates,
        liftable,
        best_d,
        mod_p_count,
        certified_count: triples.iter().filter(|t| t.certified).count() as u64,
        lifted_count: triples.len() as u64,
        threshold: (density.powi(3) - epsilon) * total,
        triples,
        audit_passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_small_and_large() {
        let small: Vec<u64> = (0..50).filter(|&q| is_prime_u64(q)).collect();
        assert_eq!(small, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47]);
        assert!(is_prime_u64(1_000_000_007));
        assert!(is_prime_u64(18_446_744_073_709_551_557));
        assert!(!is_prime_u64(3_215_031_751)); // strong pseudoprime to 2, 3, 5, 7
        assert!(!is_prime_u64(341));
    }

    #[test]
    fn prime_windows() {
        assert_eq!(next_prime_in_window(30, 37.5).unwrap(), 31);
        assert_eq!(next_prime_in_window(40, 50.0).unwrap(), 41);
        assert!(matches!(
            next_prime_in_window(24, 29.0),
            Err(Error::NoPrimeInWindow { lo: 24, hi: 29 })
        ));
    }

    #[test]
    fn determinants() {
        assert_eq!(det_i128(&[vec![0, 1], vec![-1, 0]]).unwrap(), 1);
        assert_eq!(det_i128(&[vec![2, 4], vec![1, 2]]).unwrap(), 0);
        assert_eq!(
            det_i128(&[vec![0, 2, 1], vec![3, 0, 1], vec![1, 1, 1]]).unwrap(),
            -(3 - 1) * 2 + (3)
        );
    }

    #[test]
    fn full_interval() {
        let n = 40u64;
        let a: Vec<Vec<u64>> = (0..n).map(|x| vec![x]).collect();
        let r = lift_to_interval(&a, n, &[vec![1]], &[vec![2]], 0.25, &Guard::default()).unwrap();
        assert_eq!(r.p, 41);
        assert!(r.audit_ok());
        // The best D is ±1, leaving N − 2 starting points.
        assert_eq!(r.best_d.iter().map(|c| c.abs()).sum::<i64>(), 1);
        assert_eq!(r.lifted_count, n - 2);
    }

    #[test]
    fn even_numbers() {
        let n = 40u64;
        let a: Vec<Vec<u64>> = (0..n).filter(|x| x % 2 == 0).map(|x| vec![x]).collect();
        let r = lift_to_interval(&a, n, &[vec![1]], &[vec![2]], 0.25, &Guard::default()).unwrap();
        assert!(r.audit_ok());
        assert!(r.lifted_count > 0);
        // Recount each triple by hand.
        for t in &r.triples {
            let d = t.y[0] - t.x[0];
            assert_eq!(t.z[0] - t.x[0], 2 * d);
            for v in [t.x[0], t.y[0], t.z[0]] {
                assert!((0..40).contains(&v) && v % 2 == 0);
            }
        }
    }

    #[test]
    fn two_dimensional_rotation() {
        let n = 12u64;
        let a: Vec<Vec<u64>> = (0..n)
            .flat_map(|x| (0..n).map(move |y| vec![x, y]))
            .filter(|v| (v[0] + v[1]) % 3 != 0)
            .collect();
        let m1 = [vec![1, 0], vec![0, 1]];
        let m2 = [vec![0, 1], vec![-1, 0]];
        let r = lift_to_interval(&a, n, &m1, &m2, 0.5, &Guard::default()).unwrap();
        assert!(r.audit_ok());
        assert!(r.lifted_count > 0);
    }

    #[test]
    fn widens_empty_window() {
        // (24, 24·1.05) holds no prime.
        let a: Vec<Vec<u64>> = (0..24).map(|x| vec![x]).collect();
        let r = lift_to_interval(&a, 24, &[vec![1]], &[vec![2]], 0.05, &Guard::default()).unwrap();
        assert!(r.epsilon_used > r.epsilon);
        assert!(r.p > 24 && (r.p as f64) < (1.0 + r.epsilon_used) * 24.0);
    }

    #[test]
    fn singular_patterns_rejected() {
        let a = vec![vec![0u64]];
        assert!(matches!(
            lift_to_interval(&a, 10, &[vec![2]], &[vec![2]], 0.3, &Guard::default()),
            Err(Error::NotAutomorphism(_))
        ));
    }
}
