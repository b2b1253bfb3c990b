//! Descriptions of the closed convex sets the projectors operate on:
//! subspaces, affine sets, H-represented polyhedra, one-dimensional
//! epigraphs of the flat function family, and their homogenized cones.

use crate::error::{Error, Result};
use crate::geometry::{OrthoBasis, Point, Tolerances};

/// The flat function family `f(x) = exp(-beta * x^(-r))` on the compact
/// domain `[-delta, delta]`, `delta = (beta*r/(r+1))^(1/r)`.
///
/// `r` must be even and positive; `delta` is exactly the boundary of the
/// region where `f` is convex, so `f` is convex on its whole domain. The
/// family satisfies `f(0) = 0`, `f'(0) = 0`, `f > 0` elsewhere, and `f` is
/// even and supercoercive (compact domain).
#[derive(Clone, Debug, PartialEq)]
pub struct FlatFamily {
    beta: f64,
    r: u32,
    delta: f64,
}

impl FlatFamily {
    pub fn new(beta: f64, r: u32) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be strictly positive, got {beta}"
            )));
        }
        if r == 0 || r % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "r must be a positive even integer, got {r}"
            )));
        }
        let rf = f64::from(r);
        let delta = (beta * rf / (rf + 1.0)).powf(1.0 / rf);
        Ok(FlatFamily { beta, r, delta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Half-width of the domain.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn in_domain(&self, x: f64) -> bool {
        // a hair of slack so that x = delta survives its own rounding
        x.abs() <= self.delta * (1.0 + 1e-12)
    }

    /// `f(x)` and `f'(x)`.
    ///
    /// Both are evaluated in log space: near zero the exponent
    /// `beta * x^(-r)` reaches hundreds before `f` itself underflows, and the
    /// derivative pairs a huge power with a tiny exponential whose product
    /// must not be formed naively.
    pub fn evaluate(&self, x: f64) -> Result<(f64, f64)> {
        if x == 0.0 {
            return Ok((0.0, 0.0));
        }
        if !self.in_domain(x) {
            return Err(Error::DomainExceeded {
                x,
                delta: self.delta,
            });
        }
        let rf = f64::from(self.r);
        let ln_ax = x.abs().ln();
        let t = self.beta * (-rf * ln_ax).exp(); // beta * |x|^(-r)
        let f = (-t).exp();
        let fp = ((self.beta * rf).ln() - (rf + 1.0) * ln_ax - t).exp();
        Ok((f, fp.copysign(x)))
    }

    /// `f(x)` alone.
    pub fn value(&self, x: f64) -> Result<f64> {
        Ok(self.evaluate(x)?.0)
    }

    /// Second derivative, used by Newton refinement of the projection root
    /// solve. Nonnegative on the whole domain.
    pub(crate) fn second_derivative(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let rf = f64::from(self.r);
        let ln_ax = x.abs().ln();
        let t = self.beta * (-rf * ln_ax).exp();
        // f'' = beta*r*x^(-r-2)*exp(-t)*(r*t - (r+1)); the last factor is
        // >= 0 exactly up to the domain boundary.
        let magnitude = ((self.beta * rf).ln() - (rf + 2.0) * ln_ax - t).exp();
        magnitude * (rf * t - (rf + 1.0)).max(0.0)
    }

    /// Whether `(x, rho)` lies in the epigraph of `f`.
    pub fn epigraph_contains(&self, x: f64, rho: f64) -> bool {
        if !self.in_domain(x) {
            return false;
        }
        match self.value(x) {
            Ok(fx) => rho >= fx,
            Err(_) => false,
        }
    }
}

/// A polyhedron in H-representation: `{ x : a_i . x <= beta_i }`.
///
/// Feasibility is certified at construction by a witness point; the witness
/// is retained because downstream decompositions need a feasible point of
/// derived systems.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfspaceSystem {
    rows: Vec<(Point, f64)>,
    dim: usize,
    is_cone: bool,
    feasible_point: Point,
}

impl HalfspaceSystem {
    pub fn new(rows: Vec<(Point, f64)>, dim: usize, feasible: &Point, tol: &Tolerances) -> Result<Self> {
        feasible.check_dim(dim)?;
        for (a, b) in &rows {
            a.check_dim(dim)?;
            if !b.is_finite() {
                return Err(Error::NonFinite);
            }
            if a.norm() <= tol.ortho_tol {
                return Err(Error::InvalidParameter(
                    "halfspace normal must be nonzero".into(),
                ));
            }
        }
        let max_violation = rows
            .iter()
            .map(|(a, b)| a.dot(feasible) - b)
            .fold(f64::NEG_INFINITY, f64::max);
        if max_violation > tol.active_tol {
            return Err(Error::Infeasible { max_violation });
        }
        let is_cone = rows.iter().all(|(_, b)| *b == 0.0);
        Ok(HalfspaceSystem {
            rows,
            dim,
            is_cone,
            feasible_point: feasible.clone(),
        })
    }

    /// A polyhedral cone `{ x : a_i . x <= 0 }`; the origin certifies
    /// feasibility.
    pub fn cone(normals: Vec<Point>, dim: usize, tol: &Tolerances) -> Result<Self> {
        let rows = normals.into_iter().map(|a| (a, 0.0)).collect();
        Self::new(rows, dim, &Point::zeros(dim), tol)
    }

    pub fn rows(&self) -> &[(Point, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_cone(&self) -> bool {
        self.is_cone
    }

    pub fn feasible_point(&self) -> &Point {
        &self.feasible_point
    }

    /// Largest constraint violation at `x`; negative (or -inf for an empty
    /// row list) when `x` is strictly inside.
    pub fn max_violation(&self, x: &Point) -> f64 {
        self.rows
            .iter()
            .map(|(a, b)| a.dot(x) - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, x: &Point, tol: &Tolerances) -> bool {
        self.max_violation(x) <= tol.active_tol
    }

    /// Indices of rows active at `x` (residual within `active_tol`).
    pub fn active_set(&self, x: &Point, tol: &Tolerances) -> Vec<usize> {
        self.rows
            .iter()
            .enumerate()
            .filter(|(_, (a, b))| (a.dot(x) - b).abs() <= tol.active_tol)
            .map(|(i, _)| i)
            .collect()
    }
}

/// One application of a relaxed projector: which set, and with which
/// relaxation parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxedStep {
    pub set_index: usize,
    pub lambda: f64,
}

/// A closed convex set, tagged by the class that determines its projector.
#[derive(Clone, Debug)]
pub enum SetSpec {
    /// A linear subspace given by an orthonormal basis.
    Subspace(OrthoBasis),
    /// An affine set `offset + span(basis)`.
    Affine { basis: OrthoBasis, offset: Point },
    /// An H-represented polyhedron.
    PolyhedralH(HalfspaceSystem),
    /// The epigraph of a flat family member, a subset of R^2.
    Epigraph1D(FlatFamily),
    /// The homogenized cone of such an epigraph, a subset of R^3.
    HomogenizedCone(FlatFamily),
}

impl SetSpec {
    pub fn ambient_dim(&self) -> usize {
        match self {
            SetSpec::Subspace(b) => b.ambient_dim(),
            SetSpec::Affine { basis, .. } => basis.ambient_dim(),
            SetSpec::PolyhedralH(sys) => sys.dim(),
            SetSpec::Epigraph1D(_) => 2,
            SetSpec::HomogenizedCone(_) => 3,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SetSpec::Subspace(b) => format!("subspace(dim {} of R^{})", b.len(), b.ambient_dim()),
            SetSpec::Affine { basis, .. } => format!(
                "affine(dim {} of R^{})",
                basis.len(),
                basis.ambient_dim()
            ),
            SetSpec::PolyhedralH(sys) => format!(
                "polyhedron({} rows in R^{}{})",
                sys.len(),
                sys.dim(),
                if sys.is_cone() { ", cone" } else { "" }
            ),
            SetSpec::Epigraph1D(f) => format!("epigraph(beta={}, r={})", f.beta(), f.r()),
            SetSpec::HomogenizedCone(f) => {
                format!("homogenized_cone(beta={}, r={})", f.beta(), f.r())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_family_rejects_bad_parameters() {
        assert!(FlatFamily::new(0.0, 2).is_err());
        assert!(FlatFamily::new(1.0, 3).is_err());
        assert!(FlatFamily::new(1.0, 0).is_err());
        assert!(FlatFamily::new(-1.0, 2).is_err());
    }

    #[test]
    fn flat_family_delta() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        assert!((fam.delta() - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn flat_family_is_flat_at_zero() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        assert_eq!(fam.evaluate(0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn flat_family_matches_direct_formula_at_half() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let (f, fp) = fam.evaluate(0.5).unwrap();
        assert!((f - (-4.0f64).exp()).abs() < 1e-17);
        assert!((fp - 16.0 * (-4.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn flat_family_at_domain_boundary() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let (f, _) = fam.evaluate(fam.delta()).unwrap();
        assert!((f - (-1.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn flat_family_is_even_and_odd_in_derivative() {
        let fam = FlatFamily::new(1.5, 4).unwrap();
        let (f1, fp1) = fam.evaluate(0.3).unwrap();
        let (f2, fp2) = fam.evaluate(-0.3).unwrap();
        assert_eq!(f1, f2);
        assert_eq!(fp1, -fp2);
    }

    #[test]
    fn flat_family_domain_error() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        assert!(matches!(
            fam.evaluate(0.9),
            Err(Error::DomainExceeded { .. })
        ));
    }

    #[test]
    fn flat_family_second_derivative_matches_finite_differences() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let h = 1e-6;
        for &x in &[0.3, 0.5, 0.7] {
            let fd = (fam.evaluate(x + h).unwrap().1 - fam.evaluate(x - h).unwrap().1) / (2.0 * h);
            let exact = fam.second_derivative(x);
            assert!(
                (fd - exact).abs() <= 1e-5 * exact.abs().max(1.0),
                "x={x}: fd={fd}, exact={exact}"
            );
        }
    }

    #[test]
    fn flat_family_second_derivative_vanishes_at_boundary() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        // r*t - (r+1) = 0 exactly at |x| = delta
        assert!(fam.second_derivative(fam.delta()) < 1e-12);
    }

    #[test]
    fn halfspace_system_certifies_feasibility() {
        let tol = Tolerances::default();
        let rows = vec![(Point::new(vec![1.0, 0.0]).unwrap(), -1.0)];
        let witness = Point::new(vec![-2.0, 0.0]).unwrap();
        assert!(HalfspaceSystem::new(rows.clone(), 2, &witness, &tol).is_ok());
        let bad = Point::zeros(2);
        assert!(matches!(
            HalfspaceSystem::new(rows, 2, &bad, &tol),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn halfspace_system_rejects_zero_normal() {
        let tol = Tolerances::default();
        let rows = vec![(Point::zeros(2), 1.0)];
        assert!(HalfspaceSystem::new(rows, 2, &Point::zeros(2), &tol).is_err());
    }

    #[test]
    fn cone_flag_requires_zero_offsets() {
        let tol = Tolerances::default();
        let quadrant = HalfspaceSystem::cone(
            vec![
                Point::new(vec![-1.0, 0.0]).unwrap(),
                Point::new(vec![0.0, -1.0]).unwrap(),
            ],
            2,
            &tol,
        )
        .unwrap();
        assert!(quadrant.is_cone());

        let shifted = HalfspaceSystem::new(
            vec![(Point::new(vec![1.0, 0.0]).unwrap(), 1.0)],
            2,
            &Point::zeros(2),
            &tol,
        )
        .unwrap();
        assert!(!shifted.is_cone());
    }

    #[test]
    fn active_set_classification() {
        let tol = Tolerances::default();
        let quadrant = HalfspaceSystem::cone(
            vec![
                Point::new(vec![-1.0, 0.0]).unwrap(),
                Point::new(vec![0.0, -1.0]).unwrap(),
            ],
            2,
            &tol,
        )
        .unwrap();
        let on_y_axis = Point::new(vec![0.0, 2.0]).unwrap();
        assert_eq!(quadrant.active_set(&on_y_axis, &tol), vec![0]);
        assert_eq!(quadrant.active_set(&Point::zeros(2), &tol), vec![0, 1]);
        let interior = Point::new(vec![1.0, 2.0]).unwrap();
        assert!(quadrant.active_set(&interior, &tol).is_empty());
    }
}
