use crate::error::{Error, Result};
use crate::gridfn::rational_string;
use crate::guard::Guard;
use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ap3Method {
    ExhaustiveMax,
    Greedy,
    Behrend,
}

impl Ap3Method {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "exhaustive-max" => Some(Ap3Method::ExhaustiveMax),
            "greedy" => Some(Ap3Method::Greedy),
            "behrend" => Some(Ap3Method::Behrend),
            _ => None,
        }
    }
}

/// No t₁ + t₂ ≡ 2t₃ (mod L) with t₁, t₂, t₃ in the set other than
/// t₁ = t₂ = t₃. For odd L this is the absence of 3-term progressions; for
/// even L it also rules out 2t₃ ≡ 2t₃′.
pub fn is_ap3_free(set: &[u32], l: u32) -> bool {
    if l == 0 {
        return false;
    }
    let mut member = vec![false; l as usize];
    for &t in set {
        if t >= l || member[t as usize] {
            return false;
        }
        member[t as usize] = true;
    }
    let l = l as u64;
    for &a in set {
        for &b in set {
            for &c in set {
                if (a as u64 + b as u64) % l == (2 * c as u64) % l && !(a == b && b == c) {
                    return false;
                }
            }
        }
    }
    true
}

fn compatible(set: &[u32], c: u32, l: u32) -> bool {
    let l = l as u64;
    let bad = |a: u32, b: u32, m: u32| {
        (a as u64 + b as u64) % l == (2 * m as u64) % l && !(a == b && b == m)
    };
    let with = || set.iter().copied().chain(std::iter::once(c));
    // c as an outer term, and c as the middle term
    for b in with() {
        for m in with() {
            if bad(c, b, m) || bad(b, m, c) {
                return false;
            }
        }
    }
    true
}

fn exhaustive(l: u32) -> Vec<u32> {
    // the condition is translation invariant, so some maximum set contains 0
    fn go(l: u32, next: u32, cur: &mut Vec<u32>, best: &mut Vec<u32>) {
        if cur.len() > best.len() {
            *best = cur.clone();
        }
        if cur.len() + (l - next) as usize <= best.len() {
            return;
        }
        for c in next..l {
            if cur.len() + (l - c) as usize <= best.len() {
                return;
            }
            if compatible(cur, c, l) {
                cur.push(c);
                go(l, c + 1, cur, best);
                cur.pop();
            }
        }
    }
    let mut best = vec![0];
    let mut cur = vec![0];
    go(l, 1, &mut cur, &mut best);
    best
}

fn greedy(l: u32) -> Vec<u32> {
    let mut set = Vec::new();
    for c in 0..l {
        if compatible(&set, c, l) {
            set.push(c);
        }
    }
    set
}

/// Digit vectors with entries below d/2 on a common sphere, read in base d.
/// All elements lie below L/2, so sums never wrap mod L.
fn behrend(l: u32) -> Vec<u32> {
    let half = (l as u64).div_ceil(2);
    let mut best: Vec<u32> = if l > 0 { vec![0] } else { Vec::new() };
    for m in 1..=8u32 {
        let mut d = 2u64;
        while (d + 1).pow(m) <= half {
            d += 1;
        }
        if d.pow(m) > half {
            continue;
        }
        let top = (d - 1) / 2;
        let mut spheres: std::collections::BTreeMap<u64, Vec<u32>> = Default::default();
        let count = (top + 1).pow(m);
        for idx in 0..count {
            let (mut rest, mut value, mut place, mut norm) = (idx, 0u64, 1u64, 0u64);
            for _ in 0..m {
                let digit = rest % (top + 1);
                rest /= top + 1;
                value += digit * place;
                place *= d;
                norm += digit * digit;
            }
            spheres.entry(norm).or_default().push(value as u32);
        }
        if let Some(s) = spheres.into_values().max_by_key(|s| s.len()) {
            if s.len() > best.len() {
                best = s;
            }
        }
    }
    best.sort_unstable();
    best
}

pub fn ap3_free_set(l: u32, method: Ap3Method) -> Result<Vec<u32>> {
    if l == 0 {
        return Err(Error::OutOfRange("L must be at least 1".into()));
    }
    let set = match method {
        Ap3Method::ExhaustiveMax => {
            if l > 30 {
                return Err(Error::OutOfRange("exhaustive search is limited to L ≤ 30".into()));
            }
            exhaustive(l)
        }
        Ap3Method::Greedy => greedy(l),
        Ap3Method::Behrend => behrend(l),
    };
    debug_assert!(is_ap3_free(&set, l));
    if !is_ap3_free(&set, l) {
        return Err(Error::Invalid("construction produced a progression".into()));
    }
    Ok(set)
}

/// Triangles (s, s+t, s+2t) on U × V × W = (Z/L)³ for t in a progression-free Λ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hypergraphon {
    l: u32,
    lambda: Vec<u32>,
    member: Vec<bool>,
}

impl Hypergraphon {
    pub fn new(l: u32, lambda: Vec<u32>) -> Result<Self> {
        if !is_ap3_free(&lambda, l) {
            return Err(Error::Invalid(format!("{lambda:?} is not progression-free mod {l}")));
        }
        let mut member = vec![false; l as usize];
        for &t in &lambda {
            member[t as usize] = true;
        }
        Ok(Hypergraphon { l, lambda, member })
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    pub fn lambda(&self) -> &[u32] {
        &self.lambda
    }

    pub fn is_triangle(&self, u: u32, v: u32, w: u32) -> bool {
        let l = self.l;
        let t = (v + l - u % l) % l;
        self.member[t as usize] && (w + l - v % l) % l == t
    }

    pub fn triangles(&self) -> Vec<[u32; 3]> {
        let l = self.l;
        let mut out = Vec::with_capacity((l as usize) * self.lambda.len());
        for s in 0..l {
            for &t in &self.lambda {
                out.push([s, (s + t) % l, (s + 2 * t) % l]);
            }
        }
        out
    }

    /// The cell of a point of [0, 1], closed-open.
    pub fn cell(&self, u: f64) -> u32 {
        ((u * self.l as f64).floor() as i64).rem_euclid(self.l as i64) as u32
    }

    pub fn g2(&self, u: f64, v: f64, w: f64) -> bool {
        self.is_triangle(self.cell(u), self.cell(v), self.cell(w))
    }

    /// Each edge of each bipartite part lies in exactly one triangle.
    pub fn unique_triangles(&self) -> bool {
        let l = self.l;
        for s in 0..l {
            for &t in &self.lambda {
                let uv = (0..l).filter(|&w| self.is_triangle(s, (s + t) % l, w)).count();
                let vw = (0..l).filter(|&u| self.is_triangle(u, s, (s + t) % l)).count();
                let uw = (0..l).filter(|&v| self.is_triangle(s, v, (s + 2 * t) % l)).count();
                if uv != 1 || vw != 1 || uw != 1 {
                    return false;
                }
            }
        }
        true
    }

    /// Density of a tripartite pattern with at most 8 variables per part.
    /// Edge (i, j, m) means (u_i, v_j, w_m).
    pub fn pattern_density(&self, edges: &[[usize; 3]]) -> BigRational {
        let l = self.l as usize;
        let tri = self.triangles();
        let mut through = vec![vec![Vec::new(); l]; 3];
        for (i, t) in tri.iter().enumerate() {
            for p in 0..3 {
                through[p][t[p] as usize].push(i);
            }
        }
        // visit edges so that each one meets an earlier one where possible
        let mut order: Vec<[usize; 3]> = Vec::with_capacity(edges.len());
        let mut seen = [[false; 8]; 3];
        let mut rest = edges.to_vec();
        while !rest.is_empty() {
            let (pos, _) = rest
                .iter()
                .enumerate()
                .max_by_key(|(i, e)| ((0..3).filter(|&p| seen[p][e[p]]).count(), usize::MAX - i))
                .unwrap();
            let e = rest.remove(pos);
            for p in 0..3 {
                seen[p][e[p]] = true;
            }
            order.push(e);
        }
        let vars: usize = seen.iter().flatten().filter(|&&b| b).count();

        struct Ctx<'a> {
            tri: &'a [[u32; 3]],
            through: &'a [Vec<Vec<usize>>],
            all: Vec<usize>,
        }
        fn go(ctx: &Ctx, edges: &[[usize; 3]], assign: &mut [[Option<u32>; 8]; 3]) -> u64 {
            let Some((e, rest)) = edges.split_first() else {
                return 1;
            };
            let cands = match (0..3).find_map(|p| assign[p][e[p]].map(|v| (p, v))) {
                Some((p, v)) => &ctx.through[p][v as usize],
                None => &ctx.all,
            };
            let mut total = 0;
            for &i in cands {
                let t = ctx.tri[i];
                if (0..3).all(|p| assign[p][e[p]].is_none_or(|v| v == t[p])) {
                    let saved = [assign[0][e[0]], assign[1][e[1]], assign[2][e[2]]];
                    for p in 0..3 {
                        assign[p][e[p]] = Some(t[p]);
                    }
                    total += go(ctx, rest, assign);
                    for p in 0..3 {
                        assign[p][e[p]] = saved[p];
                    }
                }
            }
            total
        }
        let ctx = Ctx {
            tri: &tri,
            through: &through,
            all: (0..tri.len()).collect(),
        };
        let count = go(&ctx, &order, &mut [[None; 8]; 3]);
        BigRational::new(BigInt::from(count), BigInt::from(self.l).pow(vars as u32))
    }
}

/// (u₀,v₀,w₀), (u₁,v₀,w₁), (u₀,v₂,w₂), (u₁,v₂,w₀)
pub const PATTERN_A: [[usize; 3]; 4] = [[0, 0, 0], [1, 0, 1], [0, 2, 2], [1, 2, 0]];
/// (u₀,v₀,w₀), (u₁,v₁,w₁), (u₁,v₂,w₀), (u₃,v₀,w₁)
pub const PATTERN_B: [[usize; 3]; 4] = [[0, 0, 0], [1, 1, 1], [1, 2, 0], [3, 0, 1]];
/// (u₀,v₀,w₀), (u₀,v₁,w₁), (u₂,v₀,w₁), (u₂,v₁,w₃)
pub const PATTERN_C: [[usize; 3]; 4] = [[0, 0, 0], [0, 1, 1], [2, 0, 1], [2, 1, 3]];
/// (u₀,v₀,w₀), (u₁,v₁,w₀), (u₂,v₁,w₂), (u₀,v₃,w₂)
pub const PATTERN_D: [[usize; 3]; 4] = [[0, 0, 0], [1, 1, 0], [2, 1, 2], [0, 3, 2]];

#[derive(Clone, Debug)]
pub struct HypergraphReport {
    pub l: u32,
    pub lambda: Vec<u32>,
    pub mean_g2: BigRational,
    pub pattern_a: BigRational,
    pub pattern_a_expected: BigRational,
    pub pattern_b: BigRational,
    pub pattern_b_bound: BigRational,
    pub pattern_c: BigRational,
    pub pattern_d: BigRational,
    pub unique_triangles: bool,
}

impl HypergraphReport {
    pub fn pattern_a_ok(&self) -> bool {
        self.pattern_a == self.pattern_a_expected
    }

    pub fn pattern_b_ok(&self) -> bool {
        self.pattern_b <= self.pattern_b_bound
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "L": self.l,
            "lambda": self.lambda,
            "mean_g2": rational_string(&self.mean_g2),
            "pattern_a": rational_string(&self.pattern_a),
            "pattern_a_expected": rational_string(&self.pattern_a_expected),
            "pattern_a_ok": self.pattern_a_ok(),
            "pattern_b": rational_string(&self.pattern_b),
            "pattern_b_bound": rational_string(&self.pattern_b_bound),
            "pattern_b_ok": self.pattern_b_ok(),
            "pattern_c": rational_string(&self.pattern_c),
            "pattern_d": rational_string(&self.pattern_d),
            "unique_triangles": self.unique_triangles,
        })
    }
}

pub fn hypergraph_expectations(h: &Hypergraphon, guard: &Guard) -> Result<HypergraphReport> {
    let l = h.l();
    let size = h.lambda().len() as f64;
    guard.check("hypergraph pattern enumeration", l as f64 * size.powi(4))?;
    let big_l = BigInt::from(l);
    let size = BigInt::from(h.lambda().len());
    Ok(HypergraphReport {
        l,
        lambda: h.lambda().to_vec(),
        mean_g2: BigRational::new(size.clone(), big_l.pow(2)),
        pattern_a: h.pattern_density(&PATTERN_A),
        pattern_a_expected: BigRational::new(size, big_l.pow(6)),
        pattern_b: h.pattern_density(&PATTERN_B),
        pattern_b_bound: BigRational::new(BigInt::from(1), big_l.pow(4)),
        pattern_c: h.pattern_density(&PATTERN_C),
        pattern_d: h.pattern_density(&PATTERN_D),
        unique_triangles: h.unique_triangles(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validator() {
        assert!(is_ap3_free(&[1, 2], 5));
        assert!(!is_ap3_free(&[0, 1, 2], 7));
        assert!(!is_ap3_free(&[1, 1], 7));
        // 2·1 ≡ 2·4 mod 6
        assert!(!is_ap3_free(&[1, 4], 6));
    }

    #[test]
    fn constructions_validate() {
        for l in 1..=40 {
            for m in [Ap3Method::Greedy, Ap3Method::Behrend] {
                let s = ap3_free_set(l, m).unwrap();
                assert!(is_ap3_free(&s, l), "{m:?} {l}");
            }
        }
        assert!(ap3_free_set(20, Ap3Method::Greedy).unwrap().len() >= 4);
        assert!(ap3_free_set(1000, Ap3Method::Behrend).unwrap().len() >= 10);
    }

    #[test]
    fn exhaustive_is_maximum() {
        // compare with brute force over all subsets containing 0
        for l in 1..=12u32 {
            let best = ap3_free_set(l, Ap3Method::ExhaustiveMax).unwrap();
            let mut brute = 0;
            for mask in 0u32..(1 << l) {
                let s: Vec<u32> = (0..l).filter(|i| mask >> i & 1 == 1).collect();
                if s.len() > brute && is_ap3_free(&s, l) {
                    brute = s.len();
                }
            }
            assert_eq!(best.len(), brute, "L = {l}");
        }
    }

    #[test]
    fn small_hypergraphon() {
        let h = Hypergraphon::new(5, vec![1, 2]).unwrap();
        let r = hypergraph_expectations(&h, &Guard::default()).unwrap();
        assert_eq!(rational_string(&r.mean_g2), "2/25");
        assert_eq!(rational_string(&r.pattern_a), "2/15625");
        assert!(r.pattern_a_ok() && r.pattern_b_ok() && r.unique_triangles);
        assert!(Hypergraphon::new(7, vec![0, 1, 2]).is_err());
        assert!(h.g2(0.25, 0.45, 0.65));
        assert!(!h.g2(0.25, 0.45, 0.85));
    }
}
