use super::subspace::{orth_complement, rank_of, Ambient, AmbientKind, SubspaceBasis};
use crate::error::{Error, Result};
use crate::ffalg::{checked_pow, decode_base, dot, FpMatrix, PrimeField};
use crate::guard::{chunked_fold, Guard};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    Skew,
}

impl Symmetry {
    pub fn kind(self) -> AmbientKind {
        match self {
            Symmetry::Symmetric => AmbientKind::Symmetric,
            Symmetry::Skew => AmbientKind::Skew,
        }
    }
}

/// The subspaces attached to J. `xi` is `{A : JᵀA = AJ}`; the Λ spaces are
/// images of its symmetric and skew parts under A ↦ (−A, −AR, AR, A) with
/// R = (I+J)(I−J)⁻¹, the Ω spaces are the first two components of the same.
#[derive(Clone, Debug, Serialize)]
pub struct ConstraintSpaces {
    pub xi: SubspaceBasis,
    pub lambda: SubspaceBasis,
    pub lambda_prime: SubspaceBasis,
    pub psi: SubspaceBasis,
    pub omega: SubspaceBasis,
    pub omega_prime: SubspaceBasis,
}

impl ConstraintSpaces {
    fn perp(space: &SubspaceBasis) -> SubspaceBasis {
        let full = SubspaceBasis::full(space.field(), space.ambient());
        orth_complement(space, &full).expect("space lies in its own ambient")
    }

    /// Λ_J^⊥ inside (S_k)^4.
    pub fn lambda_perp(&self) -> SubspaceBasis {
        Self::perp(&self.lambda)
    }

    /// Λ'_J^⊥ inside (S'_k)^4.
    pub fn lambda_prime_perp(&self) -> SubspaceBasis {
        Self::perp(&self.lambda_prime)
    }

    pub fn psi_perp(&self) -> SubspaceBasis {
        Self::perp(&self.psi)
    }

    pub fn omega_perp(&self) -> SubspaceBasis {
        Self::perp(&self.omega)
    }

    pub fn omega_prime_perp(&self) -> SubspaceBasis {
        Self::perp(&self.omega_prime)
    }
}

fn combine(field: PrimeField, coeffs: &[u32], basis: &[Vec<u32>], len: usize) -> Vec<u32> {
    let mut v = vec![0u32; len];
    for (c, b) in coeffs.iter().zip(basis) {
        if *c == 0 {
            continue;
        }
        for (x, &y) in v.iter_mut().zip(b) {
            *x = field.add(*x, field.mul(*c, y));
        }
    }
    v
}

/// Matrices A of the given component kind with JᵀA = AJ.
fn xi_part(j: &FpMatrix, kind: AmbientKind) -> Result<Vec<FpMatrix>> {
    let f = j.field();
    let k = j.rows();
    let amb = Ambient::new(kind, k, 1);
    let basis = amb.basis(f);
    let jt = j.transpose();
    let images: Vec<FpMatrix> = basis
        .iter()
        .map(|b| {
            let a = FpMatrix::from_residues(f, k, k, b.clone());
            jt.mul(&a)?.sub(&a.mul(j)?)
        })
        .collect::<Result<_>>()?;
    let sys = FpMatrix::from_fn(f, (k * k).max(1), basis.len(), |r, c| {
        images[c].data().get(r).copied().unwrap_or(0) as i64
    });
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    Ok(sys
        .nullspace()
        .into_iter()
        .map(|c| FpMatrix::from_residues(f, k, k, combine(f, &c, &basis, k * k)))
        .collect())
}

fn concat(parts: &[FpMatrix]) -> Vec<u32> {
    parts.iter().flat_map(|m| m.data().iter().copied()).collect()
}

pub fn constraint_spaces(j: &FpMatrix) -> Result<ConstraintSpaces> {
    if !j.is_square() {
        return Err(Error::DimensionMismatch("J must be square".into()));
    }
    let f = j.field();
    let k = j.rows();
    let id = FpMatrix::identity(f, k);
    let plus = id.add(j)?;
    let minus = id.sub(j)?;
    if !plus.is_invertible() || !j.is_invertible() {
        return Err(Error::Singular);
    }
    let r = plus.mul(&minus.inverse()?)?;

    let xi_vecs: Vec<Vec<u32>> = xi_part(j, AmbientKind::General)?
        .iter()
        .map(|a| a.data().to_vec())
        .collect();
    let xi = SubspaceBasis::span(f, Ambient::new(AmbientKind::General, k, 1), &xi_vecs)?;

    let mut lam = Vec::new();
    let mut om = Vec::new();
    for sym in [Symmetry::Symmetric, Symmetry::Skew] {
        let mut l = Vec::new();
        let mut o = Vec::new();
        for a in xi_part(j, sym.kind())? {
            let ar = a.mul(&r)?;
            l.push(concat(&[a.neg(), ar.neg(), ar.clone(), a.clone()]));
            o.push(concat(&[a.neg(), ar.neg()]));
        }
        lam.push(SubspaceBasis::span(f, Ambient::new(sym.kind(), k, 4), &l)?);
        om.push(SubspaceBasis::span(f, Ambient::new(sym.kind(), k, 2), &o)?);
    }

    // x1 - x2 - x3 + x4 = 0 and x4 - x2 = J(x2 - x1)
    let mut rows = FpMatrix::zeros(f, 2 * k, 4 * k);
    for i in 0..k {
        for (part, c) in [(0, 1i64), (1, -1), (2, -1), (3, 1)] {
            rows.set(i, part * k + i, f.reduce(c));
        }
        rows.set(k + i, 3 * k + i, 1);
        rows.set(k + i, k + i, f.neg(1));
        for l in 0..k {
            let jl = j.get(i, l);
            let a = rows.get(k + i, k + l);
            rows.set(k + i, k + l, f.sub(a, jl));
            let b = rows.get(k + i, l);
            rows.set(k + i, l, f.add(b, jl));
        }
    }
    let psi = SubspaceBasis::span(
        f,
        Ambient::new(AmbientKind::Vectors, k, 4),
        &rows.nullspace(),
    )?;

    let mut lam = lam.into_iter();
    let mut om = om.into_iter();
    Ok(ConstraintSpaces {
        xi,
        lambda: lam.next().unwrap(),
        lambda_prime: lam.next().unwrap(),
        psi,
        omega: om.next().unwrap(),
        omega_prime: om.next().unwrap(),
    })
}

/// All tuples (A1..A4) of the given symmetry with
/// Σ tr(A_iᵀ Y_i M Y_iᵀ) = 0 for every X, D ∈ F_p^{k×n} and every M of that
/// symmetry, where Y = (X, X+D, X+JD, X+(I+J)D). Found by exhaustive
/// enumeration and a nullspace computation.
pub fn annihilator_bruteforce(
    j: &FpMatrix,
    n: usize,
    symmetry: Symmetry,
    guard: &Guard,
) -> Result<SubspaceBasis> {
    if !j.is_square() {
        return Err(Error::DimensionMismatch("J must be square".into()));
    }
    let f = j.field();
    let p = f.p();
    let k = j.rows();
    let kn = k * n;
    let total = checked_pow(p, 2 * kn).ok_or_else(|| Error::TooLarge {
        what: "annihilator enumeration".into(),
        size: (p as f64).powi(2 * kn as i32),
        limit: guard.limit(),
    })?;
    let m_basis: Vec<FpMatrix> = Ambient::new(symmetry.kind(), n, 1)
        .basis(f)
        .into_iter()
        .map(|b| FpMatrix::from_residues(f, n, n, b))
        .collect();
    guard.check(
        "annihilator enumeration",
        total as f64 * m_basis.len().max(1) as f64,
    )?;

    let ambient = Ambient::new(symmetry.kind(), k, 4);
    let unknowns = ambient.basis(f);
    let cols = unknowns.len();
    if cols == 0 {
        return Ok(SubspaceBasis::zero(f, ambient));
    }
    let id = FpMatrix::identity(f, k);
    let shifts = [
        FpMatrix::zeros(f, k, k),
        id.clone(),
        j.clone(),
        id.add(j)?,
    ];

    let reduce = |rows: Vec<Vec<u32>>| -> Vec<Vec<u32>> {
        if rows.is_empty() {
            return rows;
        }
        let data: Vec<u32> = rows.iter().flatten().copied().collect();
        let mut m = FpMatrix::from_residues(f, rows.len(), cols, data);
        let r = m.rref_in_place().len();
        (0..r).map(|i| m.row(i).to_vec()).collect()
    };

    let rows = chunked_fold(
        total as usize,
        Vec::new(),
        |range| {
            let mut digits = vec![0u32; 2 * kn];
            let mut acc: Vec<Vec<u32>> = Vec::new();
            for idx in range {
                decode_base(idx as u64, p, &mut digits);
                let x = FpMatrix::from_residues(f, k, n, digits[..kn].to_vec());
                let d = FpMatrix::from_residues(f, k, n, digits[kn..].to_vec());
                let ys: Vec<FpMatrix> = shifts
                    .iter()
                    .map(|c| x.add(&c.mul(&d).unwrap()).unwrap())
                    .collect();
                for m in &m_basis {
                    let q: Vec<u32> = ys
                        .iter()
                        .flat_map(|y| {
                            y.mul(m)
                                .unwrap()
                                .mul(&y.transpose())
                                .unwrap()
                                .data()
                                .to_vec()
                        })
                        .collect();
                    let row: Vec<u32> = unknowns.iter().map(|u| dot(f, u, &q)).collect();
                    if row.iter().any(|&v| v != 0) {
                        acc.push(row);
                    }
                }
                if acc.len() > 4 * cols {
                    acc = reduce(std::mem::take(&mut acc));
                }
            }
            reduce(acc)
        },
        |mut a, b| {
            a.extend(b);
            reduce(a)
        },
    );

    let sys = if rows.is_empty() {
        FpMatrix::zeros(f, 1, cols)
    } else {
        FpMatrix::from_residues(f, rows.len(), cols, rows.into_iter().flatten().collect())
    };
    let vecs: Vec<Vec<u32>> = sys
        .nullspace()
        .iter()
        .map(|c| combine(f, c, &unknowns, ambient.coord_len()))
        .collect();
    debug_assert_eq!(rank_of(f, ambient.coord_len(), &vecs), vecs.len());
    SubspaceBasis::span(f, ambient, &vecs)
}
