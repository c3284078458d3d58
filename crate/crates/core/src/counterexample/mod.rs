//! The rotated-squares counterexample over F_5: the exact generic-direction
//! core, the Ruzsa–Szemerédi hypergraphon dressing for dependent directions,
//! and the final random affine assembly that handles axis directions.

mod dress;
mod hyper;

pub use dress::{
    cex_report, dress_and_measure, dressed_function, dressing_tables, final_assembly, AssemblyReport, CexReport,
    DependencyClass, DressReport, DressingParams, DressingTables, McStat, four_ap_exponent, four_ap_free_012,
};
pub use hyper::{
    ap3_free_set, hypergraph_expectations, is_ap3_free, Ap3Method, HypergraphReport, Hypergraphon,
};

use crate::analysis::equidist::{finish, histogram};
use crate::analysis::{pattern_count, Backend, EquidistributionReport};
use crate::error::{Error, Result};
use crate::ffalg::{dot, FpMatrix, PrimeField};
use crate::gridfn::{rational_string, GridFunction, GridShape, Rational};
use crate::guard::Guard;
use crate::patterns::{orth_complement, Ambient, AmbientKind, PatternSpec, SubspaceBasis};
use num_bigint::BigInt;
use num_rational::BigRational;

pub(crate) fn f5() -> PrimeField {
    PrimeField::new(5).expect("5 is prime")
}

/// The set S ⊂ F_5² whose indicator is g₁.
pub const CORE_SET: [(u32, u32); 10] = [
    (0, 2),
    (0, 3),
    (0, 4),
    (1, 0),
    (1, 3),
    (1, 4),
    (2, 1),
    (2, 2),
    (3, 0),
    (3, 1),
];

/// Λ₂′ is the orthogonal complement of these in F_5⁸.
pub const LAMBDA2_ORTHOGONAL: [[i64; 8]; 3] = [
    [1, 0, -1, 0, -1, 0, 1, 0],
    [0, 1, 0, -1, 0, -1, 0, 1],
    [1, 0, -3, 0, 3, 0, -1, 0],
];

pub const REMARK_VECTOR: [i64; 8] = [0, 0, 0, 1, 0, -4, 0, -3];

/// Offsets (c, e) of the diagonalized pattern (x + c·a, y + e·b).
pub const DIAGONAL_STEPS: [(i64, i64); 4] = [(0, 0), (1, 1), (2, -2), (3, -1)];

#[derive(Clone, Debug)]
pub struct CexCore {
    pub set: Vec<(u32, u32)>,
    pub lambda2: SubspaceBasis,
    g1: [[bool; 5]; 5],
}

impl CexCore {
    pub fn new() -> Self {
        let f = f5();
        let amb = Ambient::new(AmbientKind::Vectors, 8, 1);
        let ws: Vec<Vec<u32>> = LAMBDA2_ORTHOGONAL
            .iter()
            .map(|w| w.iter().map(|&x| f.reduce(x)).collect())
            .collect();
        let span = SubspaceBasis::span(f, amb, &ws).expect("vectors of length 8");
        let lambda2 = orth_complement(&span, &SubspaceBasis::full(f, amb)).expect("inside F_5^8");
        let mut g1 = [[false; 5]; 5];
        for &(a, b) in &CORE_SET {
            g1[a as usize][b as usize] = true;
        }
        CexCore {
            set: CORE_SET.to_vec(),
            lambda2,
            g1,
        }
    }

    pub fn g1(&self, u: u32, v: u32) -> bool {
        self.g1[u as usize % 5][v as usize % 5]
    }

    pub fn remark_vector(&self) -> Vec<u32> {
        REMARK_VECTOR.iter().map(|&x| f5().reduce(x)).collect()
    }
}

impl Default for CexCore {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug)]
pub struct CoreTable {
    /// Indexed by a·a ∈ F_5.
    pub values: Vec<BigRational>,
    pub sup: BigRational,
    pub mean_g1: BigRational,
    pub alpha4: BigRational,
    pub below_alpha4: bool,
}

impl CoreTable {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "table": self.values.iter().map(rational_string).collect::<Vec<_>>(),
            "sup": rational_string(&self.sup),
            "mean": rational_string(&self.mean_g1),
            "alpha4": rational_string(&self.alpha4),
            "sup_below_alpha4": self.below_alpha4,
        })
    }
}

/// E_{v∈Λ₂′} g₁(v₁,v₂) g₁(v₃+s,v₄) g₁(v₅+4s,v₆) g₁(v₇+9s,v₈) for each s = a·a.
pub fn core_expectation_table(core: &CexCore) -> CoreTable {
    core_table_from_basis(core, core.lambda2.vectors()).expect("RREF basis of Λ₂′")
}

/// The same table, enumerating Λ₂′ through the given basis.
pub fn core_table_from_basis(core: &CexCore, basis: &[Vec<u32>]) -> Result<CoreTable> {
    let f = f5();
    let amb = Ambient::new(AmbientKind::Vectors, 8, 1);
    let span = SubspaceBasis::span(f, amb, basis)?;
    if basis.len() != 5 || !span.same_as(&core.lambda2) {
        return Err(Error::Invalid("not a basis of Λ₂′".into()));
    }
    let mut counts = [0i64; 5];
    let mut coeffs = [0u32; 5];
    for idx in 0..3125u64 {
        crate::ffalg::decode_base(idx, 5, &mut coeffs);
        let mut v = [0u32; 8];
        for (c, b) in coeffs.iter().zip(basis) {
            for (x, &y) in v.iter_mut().zip(b) {
                *x = f.add(*x, f.mul(*c, y));
            }
        }
        for (s, count) in counts.iter_mut().enumerate() {
            let s = s as u32;
            if core.g1(v[0], v[1])
                && core.g1(v[2] + s, v[3])
                && core.g1(v[4] + 4 * s, v[5])
                && core.g1(v[6] + 9 * s, v[7])
            {
                *count += 1;
            }
        }
    }
    let values: Vec<BigRational> = counts
        .iter()
        .map(|&c| BigRational::new(BigInt::from(c), BigInt::from(3125)))
        .collect();
    let sup = values.iter().max().unwrap().clone();
    let mean_g1 = BigRational::new(BigInt::from(core.set.len()), BigInt::from(25));
    let alpha4 = num_traits::pow(mean_g1.clone(), 4);
    Ok(CoreTable {
        below_alpha4: sup < alpha4,
        values,
        sup,
        mean_g1,
        alpha4,
    })
}

/// f₁(x, y) = g₁(x·x, x·y) on (F_5ⁿ)², as a k = 2 grid function.
pub fn build_f1(core: &CexCore, n: usize, guard: &Guard) -> Result<GridFunction> {
    let f = f5();
    let shape = GridShape::with_guard(f, 2, n, guard)?;
    Ok(GridFunction::from_fn_rational(shape, |d| {
        let (x, y) = d.split_at(n);
        Rational::from_integer(core.g1(dot(f, x, x), dot(f, x, y)) as i64)
    }))
}

/// The diagonalized pattern (x,y), (x+a,y+b), (x+2a,y−2b), (x+3a,y−b).
pub fn diagonal_spec() -> PatternSpec {
    PatternSpec::from_rows(5, &[vec![1, 0], vec![0, 1]], &[vec![2, 0], vec![0, -2]])
        .expect("valid 2×2 data")
}

#[derive(Clone, Debug)]
pub struct Diagonalization {
    pub gamma: FpMatrix,
    pub rotated: PatternSpec,
    pub diagonal: PatternSpec,
    /// Γ M Γ⁻¹ equals the diagonal matrix for both M₁ and M₂.
    pub verified: bool,
}

/// Γ(x, y) = (x − 2y, x + 2y) turns the rotated square
/// (x,y), (x+a,y+b), (x+b,y−a), (x+a+b,y+b−a) into the diagonal pattern.
pub fn diagonalize_rotated_square() -> Diagonalization {
    let f = f5();
    let gamma = FpMatrix::from_rows(f, &[vec![1, -2], vec![1, 2]]).unwrap();
    let rotated =
        PatternSpec::from_rows(5, &[vec![1, 0], vec![0, 1]], &[vec![0, 1], vec![-1, 0]]).unwrap();
    let diagonal = diagonal_spec();
    let gi = gamma.inverse().expect("det Γ = 4");
    let conj = |m: &FpMatrix| gamma.mul(m).and_then(|x| x.mul(&gi)).unwrap();
    let verified = conj(rotated.m1()) == *diagonal.m1() && conj(rotated.m2()) == *diagonal.m2();
    Diagonalization {
        gamma,
        rotated,
        diagonal,
        verified,
    }
}

/// β₁(a, b) on the diagonal pattern, exactly.
pub fn beta_diagonal(f: &GridFunction, a: &[u32], b: &[u32]) -> Result<crate::analysis::Number> {
    let shape = f.shape();
    let d = FpMatrix::from_residues(shape.field(), 2, shape.n(), [a, b].concat());
    pattern_count(f, &diagonal_spec(), &shape.decode(shape.encode(&d)?), 4, Backend::Exact)
}

pub(crate) fn independent(a: &[u32], b: &[u32]) -> bool {
    let m = FpMatrix::from_residues(f5(), 2, a.len(), [a, b].concat());
    m.rank() == 2
}

/// Exact distribution of the 8-tuple (x+ca)·(x+ca), (x+ca)·(y+eb) over all
/// (x, y), shifted by (0,0,a·a,a·b,4a·a,−4a·b,9a·a,−3a·b) and compared with
/// the uniform distribution on Λ₂′.
pub fn eight_tuple_distribution(
    a: &[u32],
    b: &[u32],
    guard: &Guard,
) -> Result<EquidistributionReport> {
    let n = a.len();
    if b.len() != n || n == 0 {
        return Err(Error::DimensionMismatch("a and b must have the same length".into()));
    }
    if !independent(a, b) {
        return Err(Error::DependentDirections);
    }
    let f = f5();
    let shape = GridShape::with_guard(f, 1, n, guard)?;
    let len = shape.len();
    guard.check("eight-tuple enumeration", (len as f64).powi(2))?;
    let vecs: Vec<Vec<u32>> = (0..len)
        .map(|i| {
            let mut v = vec![0u32; n];
            shape.decode_into(i, &mut v);
            v
        })
        .collect();
    let forms: Vec<[u32; 4]> = vecs
        .iter()
        .map(|x| [dot(f, x, x), dot(f, x, a), dot(f, x, b), dot(f, a, x)])
        .collect();
    let hist = histogram(len * len, 5, |t, buf| {
        let (xi, yi) = (t / len, t % len);
        let [xx, xa, xb, _] = forms[xi];
        let ay = forms[yi][3];
        let xy = dot(f, &vecs[xi], &vecs[yi]);
        buf.clear();
        for &(c, e) in &DIAGONAL_STEPS {
            let (c, e) = (f.reduce(c), f.reduce(e));
            buf.push(f.add(xx, f.mul(f.mul(2, c), xa)));
            buf.push(f.add(f.add(xy, f.mul(e, xb)), f.mul(c, ay)));
        }
    });
    let core = CexCore::new();
    Ok(finish(f, 8, hist, 5, None, |cell| core.lambda2.contains_vector(cell)))
}
