//! Test-side oracles. Everything here is written against plain integer
//! arithmetic so it shares no code with the library it checks.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;

pub fn md(a: i64, p: i64) -> i64 {
    a.rem_euclid(p)
}

pub fn inv(a: i64, p: i64) -> i64 {
    // Fermat
    let mut r = 1i64;
    let mut b = md(a, p);
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Determinant mod p by Gaussian elimination.
pub fn det(m: &[Vec<i64>], p: i64) -> i64 {
    let n = m.len();
    let mut a: Vec<Vec<i64>> = m.iter().map(|r| r.iter().map(|&x| md(x, p)).collect()).collect();
    let mut d = 1i64;
    for c in 0..n {
        let Some(piv) = (c..n).find(|&r| a[r][c] != 0) else {
            return 0;
        };
        if piv != c {
            a.swap(piv, c);
            d = md(-d, p);
        }
        d = d * a[c][c] % p;
        let iv = inv(a[c][c], p);
        for r in c + 1..n {
            let f = a[r][c] * iv % p;
            for j in c..n {
                a[r][j] = md(a[r][j] - f * a[c][j], p);
            }
        }
    }
    d
}

pub fn rank(rows: &[Vec<i64>], p: i64) -> usize {
    let mut a: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|&x| md(x, p)).collect()).collect();
    if a.is_empty() {
        return 0;
    }
    let cols = a[0].len();
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..a.len()).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(piv, r);
        let iv = inv(a[r][c], p);
        for i in 0..a.len() {
            if i != r && a[i][c] != 0 {
                let f = a[i][c] * iv % p;
                for j in 0..cols {
                    a[i][j] = md(a[i][j] - f * a[r][j], p);
                }
            }
        }
        r += 1;
    }
    r
}

/// Same span: equal ranks and the union adds nothing.
pub fn same_span(a: &[Vec<i64>], b: &[Vec<i64>], p: i64) -> bool {
    let ra = rank(a, p);
    let rb = rank(b, p);
    let both: Vec<Vec<i64>> = a.iter().chain(b).cloned().collect();
    ra == rb && rank(&both, p) == ra
}

fn padd(a: &[i64], b: &[i64], p: i64) -> Vec<i64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| md(a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0), p))
        .collect()
}

fn pmul(a: &[i64], b: &[i64], p: i64) -> Vec<i64> {
    let mut out = vec![0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = md(out[i + j] + x * y, p);
        }
    }
    out
}

fn permutations(n: usize) -> Vec<(Vec<usize>, bool)> {
    if n == 0 {
        return vec![(vec![], true)];
    }
    let mut out = Vec::new();
    for (perm, even) in permutations(n - 1) {
        for pos in 0..=perm.len() {
            let mut q = perm.clone();
            q.insert(pos, n - 1);
            // inserting at pos moves the new element past len − pos others
            let flips = perm.len() - pos;
            out.push((q, even == (flips % 2 == 0)));
        }
    }
    out
}

/// det(tI − A) by the Leibniz expansion, coefficients low to high.
pub fn char_poly(a: &[Vec<i64>], p: i64) -> Vec<i64> {
    let k = a.len();
    let entry = |i: usize, j: usize| -> Vec<i64> {
        if i == j {
            vec![md(-a[i][j], p), 1]
        } else {
            vec![md(-a[i][j], p)]
        }
    };
    let mut total = vec![0i64];
    for (perm, even) in permutations(k) {
        let mut term = vec![1i64];
        for (i, &j) in perm.iter().enumerate() {
            term = pmul(&term, &entry(i, j), p);
        }
        if !even {
            term = term.iter().map(|&c| md(-c, p)).collect();
        }
        total = padd(&total, &term, p);
    }
    total
}

/// Resultant of f and g from the Sylvester matrix.
pub fn resultant(f: &[i64], g: &[i64], p: i64) -> i64 {
    let m = f.len() - 1;
    let n = g.len() - 1;
    let size = m + n;
    let mut s = vec![vec![0i64; size]; size];
    for r in 0..n {
        for (i, &c) in f.iter().rev().enumerate() {
            s[r][r + i] = c;
        }
    }
    for r in 0..m {
        for (i, &c) in g.iter().rev().enumerate() {
            s[n + r][r + i] = c;
        }
    }
    det(&s, p)
}

/// No eigenvalue pair λ, −λ: the characteristic polynomial and its
/// reflection share no root.
pub fn spectral_oracle(a: &[Vec<i64>], p: i64) -> bool {
    let c = char_poly(a, p);
    let r: Vec<i64> = c
        .iter()
        .enumerate()
        .map(|(i, &x)| if i % 2 == 1 { md(-x, p) } else { x })
        .collect();
    resultant(&c, &r, p) != 0
}

pub fn random_invertible<R: Rng>(rng: &mut R, p: i64, k: usize) -> Vec<Vec<i64>> {
    loop {
        let m: Vec<Vec<i64>> = (0..k).map(|_| (0..k).map(|_| rng.gen_range(0..p)).collect()).collect();
        if det(&m, p) != 0 {
            return m;
        }
    }
}

pub fn identity(k: usize) -> Vec<Vec<i64>> {
    (0..k).map(|i| (0..k).map(|j| (i == j) as i64).collect()).collect()
}

pub fn add(a: &[Vec<i64>], b: &[Vec<i64>], sign: i64, p: i64) -> Vec<Vec<i64>> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| md(u + sign * v, p)).collect())
        .collect()
}

/// Naive DFT over (Z/p)^d with digits least significant first, normalized
/// by 1/N.
pub fn dft(values: &[Complex64], p: u32, d: usize) -> Vec<Complex64> {
    let n = values.len();
    let digits = |mut i: usize| -> Vec<u32> {
        (0..d)
            .map(|_| {
                let r = (i % p as usize) as u32;
                i /= p as usize;
                r
            })
            .collect()
    };
    let pts: Vec<Vec<u32>> = (0..n).map(digits).collect();
    (0..n)
        .map(|xi| {
            let mut s = Complex64::new(0.0, 0.0);
            for (x, v) in values.iter().enumerate() {
                let dot: u32 = pts[xi].iter().zip(&pts[x]).map(|(a, b)| a * b).sum::<u32>() % p;
                let ang = -2.0 * std::f64::consts::PI * dot as f64 / p as f64;
                s += v * Complex64::from_polar(1.0, ang);
            }
            s / n as f64
        })
        .collect()
}

/// ‖f‖_{U²} = (Σ |f̂|⁴)^{1/4}.
pub fn u2_fourier(values: &[Complex64], p: u32, d: usize) -> f64 {
    dft(values, p, d).iter().map(|c| c.norm_sqr().powi(2)).sum::<f64>().powf(0.25)
}

pub fn random_set<R: Rng>(rng: &mut R, len: usize, density: f64) -> Vec<bool> {
    (0..len).map(|_| rng.gen_bool(density)).collect()
}
