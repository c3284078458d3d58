use crate::error::{Error, Result};
use crate::ffalg::{dot, FpMatrix, PrimeField};
use serde::Serialize;

/// What each component of a tuple is.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbientKind {
    /// vectors in F_p^k
    Vectors,
    /// symmetric k×k matrices
    Symmetric,
    /// skew-symmetric k×k matrices
    Skew,
    /// arbitrary k×k matrices
    General,
}

/// A host space: `parts` copies of one component space, flattened
/// row-major and concatenated. The HS pairing is the plain dot product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Ambient {
    pub kind: AmbientKind,
    pub k: usize,
    pub parts: usize,
}

impl Ambient {
    pub fn new(kind: AmbientKind, k: usize, parts: usize) -> Self {
        Ambient { kind, k, parts }
    }

    /// Length of one flattened component.
    pub fn part_len(&self) -> usize {
        match self.kind {
            AmbientKind::Vectors => self.k,
            _ => self.k * self.k,
        }
    }

    /// Length of the flattened coordinate vector.
    pub fn coord_len(&self) -> usize {
        self.parts * self.part_len()
    }

    /// Dimension of one component space.
    pub fn part_dim(&self) -> usize {
        let k = self.k;
        match self.kind {
            AmbientKind::Vectors => k,
            AmbientKind::Symmetric => k * (k + 1) / 2,
            AmbientKind::Skew => k * k.saturating_sub(1) / 2,
            AmbientKind::General => k * k,
        }
    }

    pub fn dim(&self) -> usize {
        self.parts * self.part_dim()
    }

    fn part_basis(&self, field: PrimeField) -> Vec<Vec<u32>> {
        let k = self.k;
        let mut out = Vec::new();
        match self.kind {
            AmbientKind::Vectors => {
                for i in 0..k {
                    let mut v = vec![0; k];
                    v[i] = 1;
                    out.push(v);
                }
            }
            AmbientKind::General => {
                for i in 0..k * k {
                    let mut v = vec![0; k * k];
                    v[i] = 1;
                    out.push(v);
                }
            }
            AmbientKind::Symmetric | AmbientKind::Skew => {
                let skew = self.kind == AmbientKind::Skew;
                for i in 0..k {
                    for j in i..k {
                        if skew && i == j {
                            continue;
                        }
                        let mut v = vec![0; k * k];
                        v[i * k + j] = 1;
                        if i != j {
                            v[j * k + i] = if skew { field.neg(1) } else { 1 };
                        }
                        out.push(v);
                    }
                }
            }
        }
        out
    }

    /// Standard basis of the whole host space.
    pub fn basis(&self, field: PrimeField) -> Vec<Vec<u32>> {
        let pb = self.part_basis(field);
        let pl = self.part_len();
        let mut out = Vec::with_capacity(self.dim());
        for part in 0..self.parts {
            for b in &pb {
                let mut v = vec![0; self.coord_len()];
                v[part * pl..(part + 1) * pl].copy_from_slice(b);
                out.push(v);
            }
        }
        out
    }

    pub fn contains(&self, field: PrimeField, v: &[u32]) -> bool {
        if v.len() != self.coord_len() {
            return false;
        }
        let k = self.k;
        let pl = self.part_len();
        v.chunks(pl).all(|c| match self.kind {
            AmbientKind::Vectors | AmbientKind::General => true,
            AmbientKind::Symmetric => {
                (0..k).all(|i| (0..i).all(|j| c[i * k + j] == c[j * k + i]))
            }
            AmbientKind::Skew => (0..k)
                .all(|i| (0..=i).all(|j| c[i * k + j] == field.neg(c[j * k + i]))),
        })
    }
}

/// A subspace of an [`Ambient`], stored as reduced echelon rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubspaceBasis {
    #[serde(skip)]
    field: PrimeField,
    ambient: Ambient,
    basis: Vec<Vec<u32>>,
}

fn echelon_rows(field: PrimeField, cols: usize, rows: &[Vec<u32>]) -> Vec<Vec<u32>> {
    if rows.is_empty() || cols == 0 {
        return Vec::new();
    }
    let data: Vec<u32> = rows.iter().flatten().copied().collect();
    let mut m = FpMatrix::from_residues(field, rows.len(), cols, data);
    let r = m.rref_in_place().len();
    (0..r).map(|i| m.row(i).to_vec()).collect()
}

pub(crate) fn rank_of(field: PrimeField, cols: usize, rows: &[Vec<u32>]) -> usize {
    echelon_rows(field, cols, rows).len()
}

impl SubspaceBasis {
    /// Span of `vectors`; each must lie in the ambient.
    pub fn span(field: PrimeField, ambient: Ambient, vectors: &[Vec<u32>]) -> Result<Self> {
        if let Some(bad) = vectors.iter().find(|v| !ambient.contains(field, v)) {
            return Err(if bad.len() != ambient.coord_len() {
                Error::DimensionMismatch(format!(
                    "vector of length {} in ambient of length {}",
                    bad.len(),
                    ambient.coord_len()
                ))
            } else {
                Error::NotContained
            });
        }
        Ok(SubspaceBasis {
            field,
            ambient,
            basis: echelon_rows(field, ambient.coord_len(), vectors),
        })
    }

    pub fn zero(field: PrimeField, ambient: Ambient) -> Self {
        SubspaceBasis {
            field,
            ambient,
            basis: Vec::new(),
        }
    }

    pub fn full(field: PrimeField, ambient: Ambient) -> Self {
        Self::span(field, ambient, &ambient.basis(field)).expect("standard basis is contained")
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    pub fn ambient(&self) -> Ambient {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn vectors(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn contains_vector(&self, v: &[u32]) -> bool {
        if v.len() != self.ambient.coord_len() {
            return false;
        }
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        rank_of(self.field, self.ambient.coord_len(), &rows) == self.dim()
    }

    /// `other ⊆ self`, by a rank test.
    pub fn contains(&self, other: &SubspaceBasis) -> bool {
        if other.ambient.coord_len() != self.ambient.coord_len() {
            return false;
        }
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        rank_of(self.field, self.ambient.coord_len(), &rows) == self.dim()
    }

    /// Double containment.
    pub fn same_as(&self, other: &SubspaceBasis) -> bool {
        self.contains(other) && other.contains(self)
    }

    pub fn sum(&self, other: &SubspaceBasis) -> Result<SubspaceBasis> {
        let mut rows = self.basis.clone();
        rows.extend(other.basis.iter().cloned());
        Self::span(self.field, self.ambient, &rows)
    }

    /// Every element, in lexicographic order of coordinates over the basis.
    pub fn elements(&self) -> Vec<Vec<u32>> {
        let f = self.field;
        let p = f.p() as u64;
        let total = p.pow(self.dim() as u32);
        let len = self.ambient.coord_len();
        let mut coeffs = vec![0u32; self.dim()];
        (0..total)
            .map(|idx| {
                crate::ffalg::decode_base(idx, f.p(), &mut coeffs);
                let mut v = vec![0u32; len];
                for (c, b) in coeffs.iter().zip(&self.basis) {
                    if *c == 0 {
                        continue;
                    }
                    for (x, &y) in v.iter_mut().zip(b) {
                        *x = f.add(*x, f.mul(*c, y));
                    }
                }
                v
            })
            .collect()
    }
}

/// `{v ∈ ambient : ⟨v, w⟩ = 0 for all w ∈ space}`.
pub fn orth_complement(space: &SubspaceBasis, ambient: &SubspaceBasis) -> Result<SubspaceBasis> {
    if !ambient.contains(space) {
        return Err(Error::NotContained);
    }
    let f = ambient.field;
    let a = ambient.vectors();
    if a.is_empty() {
        return Ok(SubspaceBasis::zero(f, ambient.ambient));
    }
    // coefficients c with sum_i c_i <a_i, w_j> = 0 for every j
    let gram = FpMatrix::from_fn(f, space.dim().max(1), a.len(), |j, i| {
        if space.dim() == 0 {
            0
        } else {
            dot(f, &a[i], &space.vectors()[j]) as i64
        }
    });
    let vecs: Vec<Vec<u32>> = gram
        .nullspace()
        .into_iter()
        .map(|c| {
            let mut v = vec![0u32; ambient.ambient.coord_len()];
            for (ci, ai) in c.iter().zip(a) {
                for (x, &y) in v.iter_mut().zip(ai) {
                    *x = f.add(*x, f.mul(*ci, y));
                }
            }
            v
        })
        .collect();
    SubspaceBasis::span(f, ambient.ambient, &vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ambient_dims() {
        let f = PrimeField::new(5).unwrap();
        let s = Ambient::new(AmbientKind::Symmetric, 3, 4);
        assert_eq!(s.dim(), 24);
        assert_eq!(SubspaceBasis::full(f, s).dim(), 24);
        let sk = Ambient::new(AmbientKind::Skew, 1, 4);
        assert_eq!(SubspaceBasis::full(f, sk).dim(), 0);
    }

    #[test]
    fn complement_extremes() {
        let f = PrimeField::new(5).unwrap();
        let amb = Ambient::new(AmbientKind::Symmetric, 2, 2);
        let full = SubspaceBasis::full(f, amb);
        let zero = SubspaceBasis::zero(f, amb);
        assert!(orth_complement(&zero, &full).unwrap().same_as(&full));
        assert_eq!(orth_complement(&full, &full).unwrap().dim(), 0);
    }

    #[test]
    fn not_contained() {
        let f = PrimeField::new(5).unwrap();
        let amb = Ambient::new(AmbientKind::Symmetric, 2, 1);
        assert!(matches!(
            SubspaceBasis::span(f, amb, &[vec![0, 1, 0, 0]]),
            Err(Error::NotContained)
        ));
        let gen = SubspaceBasis::span(f, Ambient::new(AmbientKind::General, 2, 1), &[vec![0, 1, 0, 0]])
            .unwrap();
        assert!(matches!(
            orth_complement(&gen, &SubspaceBasis::full(f, amb)),
            Err(Error::NotContained)
        ));
    }

    #[test]
    fn elements_enumerate_span() {
        let f = PrimeField::new(3).unwrap();
        let amb = Ambient::new(AmbientKind::Vectors, 3, 1);
        let s = SubspaceBasis::span(f, amb, &[vec![1, 1, 0], vec![2, 2, 0]]).unwrap();
        assert_eq!(s.dim(), 1);
        let e = s.elements();
        assert_eq!(e.len(), 3);
        assert!(e.iter().all(|v| s.contains_vector(v)));
    }
}
