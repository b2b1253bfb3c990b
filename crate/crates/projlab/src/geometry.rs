//! Dense vector primitives, orthonormalization, and subspace/affine
//! projections. Everything else in the crate builds on this layer.
//!
//! The scale of interest is small (ambient dimension up to ~100), so the
//! linear algebra is hand-rolled: modified Gram-Schmidt with a single
//! re-orthogonalization pass is accurate enough here and keeps the crate
//! dependency-free.

use std::fmt;
use std::ops::{Add, Index, Sub};

use crate::error::{Error, Result};

/// Numerical tolerances used throughout the crate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Orthonormality checks and dependent-vector deflation.
    pub ortho_tol: f64,
    /// Constraint activity classification.
    pub active_tol: f64,
    /// One-dimensional root solves.
    pub root_tol: f64,
    /// Oracle and cross-route comparisons.
    pub equality_tol: f64,
}

impl Tolerances {
    pub fn new(ortho_tol: f64, active_tol: f64, root_tol: f64, equality_tol: f64) -> Result<Self> {
        let t = Tolerances {
            ortho_tol,
            active_tol,
            root_tol,
            equality_tol,
        };
        for (name, v) in [
            ("ortho_tol", ortho_tol),
            ("active_tol", active_tol),
            ("root_tol", root_tol),
            ("equality_tol", equality_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if root_tol > equality_tol {
            return Err(Error::InvalidParameter(format!(
                "root_tol ({root_tol}) must not exceed equality_tol ({equality_tol})"
            )));
        }
        Ok(t)
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ortho_tol: 1e-12,
            active_tol: 1e-9,
            root_tol: 1e-14,
            equality_tol: 1e-8,
        }
    }
}

/// A point of R^d. All coordinates are finite by construction.
#[derive(Clone, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Point { coords })
    }

    pub fn zeros(dim: usize) -> Self {
        Point {
            coords: vec![0.0; dim],
        }
    }

    /// Standard basis vector `e_i`.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut coords = vec![0.0; dim];
        coords[i] = 1.0;
        Point { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.clone()
    }

    pub fn dot(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn scaled(&self, t: f64) -> Point {
        Point {
            coords: self.coords.iter().map(|c| c * t).collect(),
        }
    }

    /// `self += t * other`, in place.
    pub fn add_scaled(&mut self, t: f64, other: &Point) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.coords.iter_mut().zip(&other.coords) {
            *a += t * b;
        }
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Point {
    type Output = Point;
    fn sub(self, other: &Point) -> Point {
        debug_assert_eq!(self.dim(), other.dim());
        Point {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point{:?}", self.coords)
    }
}

/// An orthonormal list of vectors spanning a subspace of R^d.
///
/// May be empty (the trivial subspace). Invariants are checked in
/// [`OrthoBasis::new`]; bases produced by [`orthonormalize`] satisfy them by
/// construction.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthoBasis {
    vectors: Vec<Point>,
    ambient_dim: usize,
}

impl OrthoBasis {
    pub fn new(vectors: Vec<Point>, ambient_dim: usize, tol: &Tolerances) -> Result<Self> {
        if vectors.len() > ambient_dim {
            return Err(Error::InvalidParameter(format!(
                "{} basis vectors exceed ambient dimension {}",
                vectors.len(),
                ambient_dim
            )));
        }
        for v in &vectors {
            v.check_dim(ambient_dim)?;
        }
        for (i, v) in vectors.iter().enumerate() {
            if (v.norm() - 1.0).abs() > tol.ortho_tol * 10.0 {
                return Err(Error::InvalidParameter(format!(
                    "basis vector {i} has norm {}, expected 1",
                    v.norm()
                )));
            }
            for (j, w) in vectors.iter().enumerate().skip(i + 1) {
                let ip = v.dot(w);
                if ip.abs() > tol.ortho_tol * 10.0 {
                    return Err(Error::InvalidParameter(format!(
                        "basis vectors {i} and {j} are not orthogonal (inner product {ip:e})"
                    )));
                }
            }
        }
        Ok(OrthoBasis {
            vectors,
            ambient_dim,
        })
    }

    pub fn empty(ambient_dim: usize) -> Self {
        OrthoBasis {
            vectors: Vec::new(),
            ambient_dim,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[Point] {
        &self.vectors
    }

    /// Coordinates of `x` relative to the basis.
    pub fn coords(&self, x: &Point) -> Result<Vec<f64>> {
        x.check_dim(self.ambient_dim)?;
        Ok(self.vectors.iter().map(|b| b.dot(x)).collect())
    }

    /// Linear combination of the basis vectors with the given coordinates.
    pub fn from_coords(&self, w: &[f64]) -> Result<Point> {
        if w.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: w.len(),
            });
        }
        let mut p = Point::zeros(self.ambient_dim);
        for (c, b) in w.iter().zip(&self.vectors) {
            p.add_scaled(*c, b);
        }
        Ok(p)
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self, tol: &Tolerances) -> OrthoBasis {
        let mut candidates = self.vectors.clone();
        for i in 0..self.ambient_dim {
            candidates.push(Point::unit(self.ambient_dim, i));
        }
        // MGS keeps the original basis first, so everything surviving after
        // position `self.len()` spans the complement.
        let full = orthonormalize_with_tol(&candidates, tol.ortho_tol)
            .expect("dimensions are consistent by construction");
        OrthoBasis {
            vectors: full.vectors[self.len()..].to_vec(),
            ambient_dim: self.ambient_dim,
        }
    }
}

/// Orthonormalize a list of vectors by modified Gram-Schmidt with one
/// re-orthogonalization pass. Vectors whose residual after deflation falls
/// below `ortho_tol` (relative to their original norm) are dropped.
pub fn orthonormalize(vectors: &[Point], tol: &Tolerances) -> Result<OrthoBasis> {
    if vectors.is_empty() {
        return Err(Error::InvalidParameter(
            "cannot infer ambient dimension from an empty vector list".into(),
        ));
    }
    let dim = vectors[0].dim();
    for v in vectors {
        v.check_dim(dim)?;
    }
    orthonormalize_with_tol(vectors, tol.ortho_tol)
}

fn orthonormalize_with_tol(vectors: &[Point], ortho_tol: f64) -> Result<OrthoBasis> {
    let dim = vectors[0].dim();
    let mut basis: Vec<Point> = Vec::new();
    for v in vectors {
        let original_norm = v.norm();
        if original_norm <= ortho_tol {
            continue;
        }
        let mut w = v.clone();
        // Two MGS sweeps: the second pass cleans up the rounding left by the
        // first when v is nearly dependent on the current basis.
        for _ in 0..2 {
            for b in &basis {
                let c = w.dot(b);
                w.add_scaled(-c, b);
            }
        }
        let res = w.norm();
        if res <= ortho_tol * original_norm.max(1.0) {
            continue; // numerically dependent on the span so far
        }
        basis.push(w.scaled(1.0 / res));
        if basis.len() == dim {
            break;
        }
    }
    Ok(OrthoBasis {
        vectors: basis,
        ambient_dim: dim,
    })
}

/// Orthogonal projection of `x` onto the span of `basis`.
pub fn project_subspace(basis: &OrthoBasis, x: &Point) -> Result<Point> {
    x.check_dim(basis.ambient_dim())?;
    let mut p = Point::zeros(basis.ambient_dim());
    for b in basis.vectors() {
        p.add_scaled(b.dot(x), b);
    }
    Ok(p)
}

/// Projection onto the affine set `offset + span(basis)`.
pub fn project_affine(basis: &OrthoBasis, offset: &Point, x: &Point) -> Result<Point> {
    x.check_dim(basis.ambient_dim())?;
    offset.check_dim(basis.ambient_dim())?;
    let shifted = x - offset;
    let p = project_subspace(basis, &shifted)?;
    Ok(offset + &p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_coordinates() {
        assert_eq!(Point::new(vec![1.0, f64::NAN]), Err(Error::NonFinite));
        assert_eq!(Point::new(vec![f64::INFINITY]), Err(Error::NonFinite));
    }

    #[test]
    fn tolerances_validate() {
        assert!(Tolerances::new(1e-12, 1e-9, 1e-14, 1e-8).is_ok());
        assert!(Tolerances::new(0.0, 1e-9, 1e-14, 1e-8).is_err());
        // root_tol must not exceed equality_tol
        assert!(Tolerances::new(1e-12, 1e-9, 1e-6, 1e-8).is_err());
    }

    #[test]
    fn orthonormalize_keeps_an_orthonormal_pair() {
        let tol = Tolerances::default();
        let b = orthonormalize(&[pt(&[1.0, 0.0]), pt(&[0.0, 1.0])], &tol).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b.vectors()[0], pt(&[1.0, 0.0]));
        assert_eq!(b.vectors()[1], pt(&[0.0, 1.0]));
    }

    #[test]
    fn orthonormalize_drops_dependent_vector() {
        let tol = Tolerances::default();
        let b = orthonormalize(&[pt(&[2.0, 0.0]), pt(&[4.0, 0.0])], &tol).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.vectors()[0].dist(&pt(&[1.0, 0.0])) < 1e-15);
    }

    #[test]
    fn orthonormalize_matches_hand_gram_schmidt() {
        // [(1,1),(1,0)] -> {(s,s),(s,-s)} with s = sqrt(2)/2
        let tol = Tolerances::default();
        let b = orthonormalize(&[pt(&[1.0, 1.0]), pt(&[1.0, 0.0])], &tol).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(b.len(), 2);
        assert!(b.vectors()[0].dist(&pt(&[s, s])) < 1e-15);
        assert!(b.vectors()[1].dist(&pt(&[s, -s])) < 1e-15);
    }

    #[test]
    fn orthonormalize_rejects_mixed_dimensions() {
        let tol = Tolerances::default();
        let err = orthonormalize(&[pt(&[1.0, 0.0]), pt(&[1.0, 0.0, 0.0])], &tol).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn project_onto_axis() {
        let tol = Tolerances::default();
        let y_axis = orthonormalize(&[pt(&[0.0, 1.0])], &tol).unwrap();
        let p = project_subspace(&y_axis, &pt(&[3.0, 5.0])).unwrap();
        assert_eq!(p, pt(&[0.0, 5.0]));
    }

    #[test]
    fn project_onto_odd_coordinate_subspace() {
        // Keeping odd coordinates of R^4 maps (1,2,3,4) to (0,2,0,4).
        let tol = Tolerances::default();
        let basis = orthonormalize(&[pt(&[0.0, 1.0, 0.0, 0.0]), pt(&[0.0, 0.0, 0.0, 1.0])], &tol)
            .unwrap();
        let p = project_subspace(&basis, &pt(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(p, pt(&[0.0, 2.0, 0.0, 4.0]));
    }

    #[test]
    fn project_onto_diagonal() {
        let tol = Tolerances::default();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag = orthonormalize(&[pt(&[s, s])], &tol).unwrap();
        let p = project_subspace(&diag, &pt(&[1.0, 0.0])).unwrap();
        assert!(p.dist(&pt(&[0.5, 0.5])) < 1e-15);
    }

    #[test]
    fn project_affine_horizontal_line() {
        // line y = 1 in R^2
        let tol = Tolerances::default();
        let basis = orthonormalize(&[pt(&[1.0, 0.0])], &tol).unwrap();
        let p = project_affine(&basis, &pt(&[0.0, 1.0]), &pt(&[3.0, 7.0])).unwrap();
        assert!(p.dist(&pt(&[3.0, 1.0])) < 1e-15);
    }

    #[test]
    fn project_affine_with_zero_offset_is_subspace_projection() {
        let tol = Tolerances::default();
        let basis = orthonormalize(&[pt(&[1.0, 1.0])], &tol).unwrap();
        let x = pt(&[2.0, 0.0]);
        let a = project_affine(&basis, &Point::zeros(2), &x).unwrap();
        let s = project_subspace(&basis, &x).unwrap();
        assert!(a.dist(&s) < 1e-15);
        // diagonal projection of (2,0) is (1,1)
        assert!(a.dist(&pt(&[1.0, 1.0])) < 1e-15);
    }

    #[test]
    fn project_dimension_mismatch() {
        let tol = Tolerances::default();
        let basis = orthonormalize(&[pt(&[1.0, 0.0])], &tol).unwrap();
        assert!(matches!(
            project_subspace(&basis, &pt(&[1.0, 2.0, 3.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn complement_of_a_plane_in_r3() {
        let tol = Tolerances::default();
        let b = orthonormalize(&[pt(&[1.0, 0.0, 0.0]), pt(&[0.0, 1.0, 0.0])], &tol).unwrap();
        let c = b.complement(&tol);
        assert_eq!(c.len(), 1);
        assert!(c.vectors()[0].dot(&pt(&[0.0, 0.0, 1.0])).abs() > 1.0 - 1e-12);
    }
}
