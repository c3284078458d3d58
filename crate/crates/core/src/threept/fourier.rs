use super::Group;
use crate::error::Result;
use crate::guard::Guard;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::TAU;

/// Transform on (Z/mZ)^d, one axis at a time.
///
/// Forward: f̂(ξ) = E_x f(x) e(−ξ·x/m). Inverse: f(x) = Σ_ξ f̂(ξ) e(ξ·x/m).
pub fn dft(g: &Group, v: &[Complex64], inverse: bool, guard: &Guard) -> Result<Vec<Complex64>> {
    let m = g.modulus() as usize;
    guard.check(
        "discrete Fourier transform",
        g.len() as f64 * m as f64 * g.rank() as f64,
    )?;
    let sign = if inverse { 1.0 } else { -1.0 };
    let tw: Vec<Complex64> = (0..m)
        .map(|t| Complex64::from_polar(1.0, sign * TAU * t as f64 / m as f64))
        .collect();
    let scale = if inverse { 1.0 } else { 1.0 / m as f64 };

    let mut cur = v.to_vec();
    let mut stride = 1usize;
    for _ in 0..g.rank() {
        let block = stride * m;
        cur.par_chunks_mut(block).for_each(|chunk| {
            let mut line = vec![Complex64::new(0.0, 0.0); m];
            for inner in 0..stride {
                for (t, l) in line.iter_mut().enumerate() {
                    *l = chunk[t * stride + inner];
                }
                for eta in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (x, l) in line.iter().enumerate() {
                        acc += l * tw[(eta * x) % m];
                    }
                    chunk[eta * stride + inner] = acc * scale;
                }
            }
        });
        stride = block;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[Complex64], b: &[Complex64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).norm() < 1e-10)
    }

    #[test]
    fn roundtrip_and_direct_formula() {
        let g = Group::new(5, 2).unwrap();
        let v: Vec<Complex64> = (0..25)
            .map(|i| Complex64::new((i * 7 % 11) as f64, (i % 3) as f64))
            .collect();
        let guard = Guard::default();
        let h = dft(&g, &v, false, &guard).unwrap();
        assert!(close(&dft(&g, &h, true, &guard).unwrap(), &v));
        for xi in 0..25 {
            let a = g.decode(xi);
            let mut s = Complex64::new(0.0, 0.0);
            for x in 0..25 {
                let t = g.pairing(&a, &g.decode(x)) as f64;
                s += v[x] * Complex64::from_polar(1.0, -TAU * t / 5.0);
            }
            assert!((s / 25.0 - h[xi]).norm() < 1e-10);
        }
    }

    #[test]
    fn parseval() {
        let g = Group::cyclic(17).unwrap();
        let v: Vec<Complex64> = (0..17).map(|i| Complex64::new((i * i % 5) as f64, 0.0)).collect();
        let h = dft(&g, &v, false, &Guard::default()).unwrap();
        let lhs: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() / 17.0;
        let rhs: f64 = h.iter().map(|z| z.norm_sqr()).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
