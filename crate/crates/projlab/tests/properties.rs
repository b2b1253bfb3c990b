//! Property tests for the crate-wide invariants: projection idempotence and
//! orthogonality, (firm) nonexpansiveness, gamma-sum monotonicity, and
//! ratio covariance.

use proptest::collection::vec;
use proptest::prelude::*;

use projlab::diagnostics::{asymptotic_ratio, gamma_partial_sums, AsymptoticModel};
use projlab::geometry::{orthonormalize, project_subspace};
use projlab::projectors::{project_epigraph, project_polyhedron_exact, relax};
use projlab::{FlatFamily, HalfspaceSystem, Point, SetSpec, Tolerances};

fn coords(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-10.0f64..10.0, dim)
}

fn point(dim: usize) -> impl Strategy<Value = Point> {
    coords(dim).prop_map(|c| Point::new(c).unwrap())
}

fn basis_vectors(dim: usize) -> impl Strategy<Value = Vec<Point>> {
    vec(coords(dim), 1..=dim).prop_map(|vs| {
        vs.into_iter()
            .map(|c| Point::new(c).unwrap())
            .collect::<Vec<_>>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn subspace_projection_is_idempotent(vs in basis_vectors(4), x in point(4)) {
        let tol = Tolerances::default();
        let basis = orthonormalize(&vs, &tol).unwrap();
        let p1 = project_subspace(&basis, &x).unwrap();
        let p2 = project_subspace(&basis, &p1).unwrap();
        prop_assert!(p1.dist(&p2) <= tol.equality_tol);
    }

    #[test]
    fn subspace_residual_is_orthogonal_to_basis(vs in basis_vectors(4), x in point(4)) {
        let tol = Tolerances::default();
        let basis = orthonormalize(&vs, &tol).unwrap();
        let p = project_subspace(&basis, &x).unwrap();
        let residual = &x - &p;
        for b in basis.vectors() {
            prop_assert!(residual.dot(b).abs() <= tol.equality_tol);
        }
    }

    #[test]
    fn subspace_projection_is_nonexpansive(
        vs in basis_vectors(3),
        x in point(3),
        y in point(3),
    ) {
        let tol = Tolerances::default();
        let basis = orthonormalize(&vs, &tol).unwrap();
        let px = project_subspace(&basis, &x).unwrap();
        let py = project_subspace(&basis, &y).unwrap();
        prop_assert!(px.dist(&py) <= x.dist(&y) + tol.equality_tol);
    }

    #[test]
    fn epigraph_projection_is_firmly_nonexpansive(
        x1 in -2.0f64..2.0, r1 in -2.0f64..2.0,
        x2 in -2.0f64..2.0, r2 in -2.0f64..2.0,
    ) {
        let tol = Tolerances::default();
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let p = project_epigraph(&fam, x1, r1, &tol).unwrap();
        let q = project_epigraph(&fam, x2, r2, &tol).unwrap();
        let dp = (p.y - q.y, p.value - q.value);
        let dx = (x1 - x2, r1 - r2);
        let lhs = dp.0 * dp.0 + dp.1 * dp.1;
        let rhs = dp.0 * dx.0 + dp.1 * dx.1;
        prop_assert!(lhs <= rhs + tol.equality_tol);
    }

    #[test]
    fn polyhedral_projection_is_firmly_nonexpansive(
        normals in vec(coords(3), 1..=4),
        xc in coords(3),
        yc in coords(3),
    ) {
        let tol = Tolerances::default();
        let normals: Vec<Point> = normals
            .into_iter()
            .filter_map(|c| {
                let p = Point::new(c).unwrap();
                let n = p.norm();
                (n > 1e-3).then(|| p.scaled(1.0 / n))
            })
            .collect();
        prop_assume!(!normals.is_empty());
        let sys = HalfspaceSystem::cone(normals, 3, &tol).unwrap();
        let x = Point::new(xc).unwrap();
        let y = Point::new(yc).unwrap();
        let px = project_polyhedron_exact(&sys, &x, &tol).unwrap().point;
        let py = project_polyhedron_exact(&sys, &y, &tol).unwrap().point;
        let lhs = px.dist_sq(&py);
        let rhs = (&px - &py).dot(&(&x - &y));
        prop_assert!(lhs <= rhs + tol.equality_tol);
    }

    #[test]
    fn relaxed_projector_is_quasi_nonexpansive_towards_members(
        vs in basis_vectors(3),
        x in point(3),
        lambda in 0.05f64..1.95,
    ) {
        // any point of the subspace is a fixed point; relaxed steps with
        // lambda in ]0,2[ must not move away from it
        let tol = Tolerances::default();
        let basis = orthonormalize(&vs, &tol).unwrap();
        let z = project_subspace(&basis, &x).unwrap(); // a member
        let spec = SetSpec::Subspace(basis);
        let stepped = relax(&spec, lambda, &x, &tol).unwrap();
        prop_assert!(stepped.dist(&z) <= x.dist(&z) + tol.equality_tol);
    }

    #[test]
    fn gamma_sums_are_monotone_in_gamma_and_checkpoint(
        norms in vec(0.0f64..1.0, 16..200),
    ) {
        let gammas = [0.25, 0.5, 1.0, 2.0];
        let n = norms.len();
        let cps = vec![n / 4, n / 2, n];
        let series = gamma_partial_sums(&norms, &gammas, &cps).unwrap();
        let sums = series.partial_sums();
        for g in 0..gammas.len() {
            // nondecreasing along checkpoints
            for c in 1..series.checkpoints().len() {
                prop_assert!(sums[g][c] >= sums[g][c - 1]);
            }
        }
        // norms <= 1: smaller gamma dominates
        for g in 1..gammas.len() {
            for c in 0..series.checkpoints().len() {
                prop_assert!(sums[g - 1][c] >= sums[g][c] - 1e-12);
            }
        }
    }

    #[test]
    fn asymptotic_ratio_scales_linearly(
        scale in 0.1f64..10.0,
        base in vec(0.01f64..10.0, 32..64),
    ) {
        let model = AsymptoticModel::new(-3.0, 2.0, 2.0, 2.0).unwrap();
        let scaled: Vec<f64> = base.iter().map(|v| v * scale).collect();
        let cps = [10usize, 20, 31];
        let r1 = asymptotic_ratio(&base, &model, &cps).unwrap();
        let r2 = asymptotic_ratio(&scaled, &model, &cps).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            prop_assert!((a * scale - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
