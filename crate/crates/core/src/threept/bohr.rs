use super::ThreePointSpec;
use crate::error::{Error, Result};
use crate::ffalg::{decode_base, encode_base};
use crate::gridfn::{GridShape, Rational};
use crate::guard::Guard;
use num_complex::Complex64;
use num_rational::BigRational;
use rayon::prelude::*;
use std::collections::BTreeSet;

/// (Z/mZ)^d, elements encoded base m with coordinate 0 least significant.
/// Characters are vectors ξ in the same group, paired by ξ·x / m.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Group {
    m: u32,
    d: usize,
    len: usize,
}

impl Group {
    pub fn new(m: u32, d: usize) -> Result<Self> {
        if m < 1 {
            return Err(Error::Invalid("group modulus must be positive".into()));
        }
        let len = (0..d)
            .try_fold(1usize, |acc, _| acc.checked_mul(m as usize))
            .ok_or(Error::Overflow)?;
        Ok(Group { m, d, len })
    }

    pub fn cyclic(n: u32) -> Result<Self> {
        Self::new(n, 1)
    }

    pub fn of_shape(shape: &GridShape) -> Self {
        Group {
            m: shape.p(),
            d: shape.dim(),
            len: shape.len(),
        }
    }

    pub fn modulus(&self) -> u32 {
        self.m
    }

    pub fn rank(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn decode(&self, idx: usize) -> Vec<u32> {
        let mut out = vec![0u32; self.d];
        decode_base(idx as u64, self.m, &mut out);
        out
    }

    pub fn encode(&self, x: &[u32]) -> usize {
        encode_base(x, self.m) as usize
    }

    pub fn add(&self, a: usize, b: usize) -> usize {
        let m = self.m as usize;
        let (mut a, mut b, mut out, mut place) = (a, b, 0usize, 1usize);
        for _ in 0..self.d {
            out += ((a % m + b % m) % m) * place;
            a /= m;
            b /= m;
            place *= m;
        }
        out
    }

    pub fn neg(&self, a: usize) -> usize {
        let m = self.m as usize;
        let (mut a, mut out, mut place) = (a, 0usize, 1usize);
        for _ in 0..self.d {
            out += ((m - a % m) % m) * place;
            a /= m;
            place *= m;
        }
        out
    }

    /// ξ·x mod m.
    pub fn pairing(&self, xi: &[u32], x: &[u32]) -> u64 {
        let m = self.m as u64;
        xi.iter()
            .zip(x)
            .fold(0u64, |acc, (&a, &b)| (acc + a as u64 * b as u64) % m)
    }
}

/// B(S, δ) = {x : max_{ξ∈S} ‖ξ·x/m‖ < δ}, with the set enumerated.
#[derive(Clone, Debug, PartialEq)]
pub struct BohrSet {
    group: Group,
    chars: Vec<Vec<u32>>,
    delta: Rational,
    members: Vec<bool>,
    size: usize,
}

pub fn bohr_set(group: &Group, chars: &[Vec<u32>], delta: Rational) -> Result<BohrSet> {
    if delta <= Rational::from_integer(0) || delta > Rational::new(1, 2) {
        return Err(Error::OutOfRange(format!("radius {} not in (0, 1/2]", delta)));
    }
    let m = group.m as u64;
    let mut chars_red = Vec::with_capacity(chars.len());
    for xi in chars {
        if xi.len() != group.d {
            return Err(Error::DimensionMismatch(format!(
                "character of length {} on a rank-{} group",
                xi.len(),
                group.d
            )));
        }
        chars_red.push(xi.iter().map(|&a| (a as u64 % m) as u32).collect::<Vec<_>>());
    }
    // dist·den < num·m, with dist = min(t, m − t).
    let (num, den) = (*delta.numer() as i128, *delta.denom() as i128);
    let members: Vec<bool> = (0..group.len)
        .into_par_iter()
        .map(|idx| {
            let x = group.decode(idx);
            chars_red.iter().all(|xi| {
                let t = group.pairing(xi, &x);
                let dist = t.min(m - t) as i128;
                dist * den < num * m as i128
            })
        })
        .collect();
    let size = members.iter().filter(|&&b| b).count();
    Ok(BohrSet {
        group: *group,
        chars: chars_red,
        delta,
        members,
        size,
    })
}

impl BohrSet {
    pub fn group(&self) -> Group {
        self.group
    }

    pub fn chars(&self) -> &[Vec<u32>] {
        &self.chars
    }

    pub fn delta(&self) -> Rational {
        self.delta
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.members[idx]
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn elements(&self) -> Vec<usize> {
        (0..self.members.len()).filter(|&i| self.members[i]).collect()
    }

    pub fn measure(&self) -> BigRational {
        BigRational::new(self.size.into(), self.group.len.into())
    }

    pub fn measure_f64(&self) -> f64 {
        self.size as f64 / self.group.len as f64
    }

    /// μ_B = 1_B / μ(B), as complex values for transforms.
    pub fn measure_density(&self) -> Vec<Complex64> {
        let h = self.group.len as f64 / self.size as f64;
        self.members
            .iter()
            .map(|&b| Complex64::new(if b { h } else { 0.0 }, 0.0))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let elements = if self.group.len <= 10_000 {
            serde_json::json!(self.elements())
        } else {
            serde_json::Value::Null
        };
        serde_json::json!({
            "modulus": self.group.m,
            "rank": self.group.d,
            "chars": self.chars,
            "delta": self.delta.to_string(),
            "size": self.size,
            "measure": format!("{}/{}", self.size, self.group.len),
            "measure_f64": self.measure_f64(),
            "elements": elements,
        })
    }
}

/// ν = μ_B ∗ μ_B, stored as pair counts #{(y, z) ∈ B² : y + z = d};
/// ν(d) = N·pairs(d)/|B|².
#[derive(Clone, Debug)]
pub struct SmoothingMeasure {
    pub pairs: Vec<u64>,
    pub b_size: usize,
}

impl SmoothingMeasure {
    pub fn new(b: &BohrSet, guard: &Guard) -> Result<Self> {
        guard.check("smoothing measure", (b.size as f64).powi(2))?;
        let g = b.group;
        let elems = b.elements();
        let mut pairs = vec![0u64; g.len];
        for &y in &elems {
            for &z in &elems {
                pairs[g.add(y, z)] += 1;
            }
        }
        Ok(SmoothingMeasure {
            pairs,
            b_size: b.size,
        })
    }

    pub fn density(&self, d: usize) -> f64 {
        self.pairs.len() as f64 * self.pairs[d] as f64 / (self.b_size as f64).powi(2)
    }

    /// ∫ν dμ, which should be 1.
    pub fn total_mass(&self) -> BigRational {
        let s: u64 = self.pairs.iter().sum();
        BigRational::new(s.into(), ((self.b_size as u64).pow(2)).into())
    }

    pub fn sup(&self) -> f64 {
        (0..self.pairs.len())
            .map(|d| self.density(d))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
pub struct DerivedBohr {
    pub set: BohrSet,
    /// B(T′, γ) equals {r : M1 r ∈ B and M2 r ∈ B}, checked element by element.
    pub matches_direct: bool,
}

/// B′ = {r : M1 r, M2 r ∈ B(T, γ)}, realized as B(T′, γ) with
/// T′ = {M1ᵀξ} ∪ {M2ᵀξ}.
pub fn derived_bohr(b: &BohrSet, spec: &ThreePointSpec) -> Result<DerivedBohr> {
    if b.group != spec.group() {
        return Err(Error::DimensionMismatch(
            "Bohr set and pattern live on different groups".into(),
        ));
    }
    super::check_three_point(spec.pattern())?;
    let shape = spec.shape();
    let mut seen = BTreeSet::new();
    let mut chars = Vec::new();
    for m in [spec.pattern().m1(), spec.pattern().m2()] {
        let mt = spec.flat(m).transpose();
        for xi in &b.chars {
            let v = mt.mul_vec(xi)?;
            if seen.insert(v.clone()) {
                chars.push(v);
            }
        }
    }
    let set = bohr_set(&b.group, &chars, b.delta)?;
    let t1 = shape.left_mul_table(spec.pattern().m1())?;
    let t2 = shape.left_mul_table(spec.pattern().m2())?;
    let matches_direct = (0..shape.len())
        .all(|r| set.contains(r) == (b.contains(t1[r] as usize) && b.contains(t2[r] as usize)));
    Ok(DerivedBohr {
        set,
        matches_direct,
    })
}
