//! The acceptance suite: ten numbered criteria covering the limiting
//! examples, the positive polyhedral case, the face machinery, and the
//! homogenized-cone solver, each with pinned thresholds and runtime
//! budgets.
//!
//! Thresholds are literal constants here; the `Tolerances` argument feeds
//! the library routines only, so injecting corrupted tolerances makes the
//! affected criteria fail (a negative control for the suite itself).

use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::diagnostics::{asymptotic_ratio, gamma_partial_sums, growth_exponent, AsymptoticModel};
use crate::error::Result;
use crate::experiments::{
    conified_run, flat_recurrence_run, positive_polyhedral_run, ConifiedRunSpec,
    FlatRunSpec, L2CounterexampleSpec, PolyhedralRunSpec, POLYHEDRAL_GAMMAS,
};
use crate::faces::{face_span_projection_check, decompose_projection, partition_check};
use crate::geometry::{Point, Tolerances};
use crate::projectors::{project_homogenized_cone, project_polyhedron_exact, psi_derivative};
use crate::sets::{FlatFamily, HalfspaceSystem};

/// Outcome of one acceptance criterion.
#[derive(Clone, Debug)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub family: &'static str,
    pub passed: bool,
    pub details: String,
    pub runtime: Duration,
}

impl CriterionReport {
    pub fn summary_line(&self) -> String {
        format!(
            "[{}] criterion {:2} {:<28} ({:7.2?}) {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.runtime,
            self.details
        )
    }
}

/// Criterion families selectable via `--only`.
pub const FAMILIES: &[&str] = &[
    "l2",
    "flat",
    "conified",
    "cross",
    "polyhedral",
    "faces",
    "decomposition",
    "psi",
];

const CRITERIA: &[(u8, &str, &str, fn(&Tolerances) -> (bool, String), Option<Duration>)] = &[
    (1, "l2 closed-form agreement", "l2", c1_l2_closed_form, Some(Duration::from_secs(1))),
    (2, "l2 lower bound", "l2", c2_l2_lower_bound, Some(Duration::from_secs(30))),
    (3, "flat recurrence fidelity", "flat", c3_flat_fidelity, Some(Duration::from_secs(60))),
    (4, "flat asymptotics", "flat", c4_flat_asymptotics, None),
    (5, "conified structure", "conified", c5_conified_structure, Some(Duration::from_secs(300))),
    (6, "cross-section consistency", "cross", c6_cross_section, None),
    (7, "polyhedral positive case", "polyhedral", c7_polyhedral_positive, Some(Duration::from_secs(10))),
    (8, "face machinery", "faces", c8_face_machinery, Some(Duration::from_secs(30))),
    (9, "decomposition identity", "decomposition", c9_decomposition, Some(Duration::from_secs(10))),
    (10, "psi solver certification", "psi", c10_psi_certification, Some(Duration::from_secs(30))),
];

/// Run one criterion by id (1 through 10).
pub fn run_criterion(id: u8, tol: &Tolerances) -> Option<CriterionReport> {
    let (_, name, family, body, budget) = CRITERIA.iter().find(|(cid, ..)| *cid == id)?;
    let start = Instant::now();
    let (mut passed, mut details) = body(tol);
    let runtime = start.elapsed();
    if let Some(budget) = budget {
        if runtime > *budget {
            passed = false;
            details = format!("{details}; runtime {runtime:?} exceeds budget {budget:?}");
        }
    }
    Some(CriterionReport {
        id,
        name,
        family,
        passed,
        details,
        runtime,
    })
}

/// Run every criterion, or only those in the given family.
pub fn run_criteria(filter: Option<&str>, tol: &Tolerances) -> Result<Vec<CriterionReport>> {
    if let Some(f) = filter {
        if !FAMILIES.contains(&f) {
            return Err(crate::error::Error::InvalidParameter(format!(
                "unknown criterion family '{f}'; known families: {FAMILIES:?}"
            )));
        }
    }
    Ok(CRITERIA
        .iter()
        .filter(|(_, _, family, _, _)| filter.is_none_or(|f| f == *family))
        .map(|(id, ..)| run_criterion(*id, tol).expect("id comes from the table"))
        .collect())
}

fn flat_family() -> FlatFamily {
    FlatFamily::new(1.0, 2).expect("reference parameters are valid")
}

// 1. Simulated alternation (tiers = 5, 50 pairs) matches the closed forms
//    within 1e-10.
fn c1_l2_closed_form(tol: &Tolerances) -> (bool, String) {
    let spec = match L2CounterexampleSpec::new(5) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let traj = match spec.simulated(50, tol) {
        Ok(t) => t,
        Err(e) => return (false, e.to_string()),
    };
    let points = traj.full_points().expect("short runs keep full storage");
    let mut max_dev = 0.0f64;
    for n in 1..=50 {
        let (odd, even) = spec.closed_form(n).expect("n >= 1");
        max_dev = max_dev.max(points[2 * n - 1].dist(&odd));
        max_dev = max_dev.max(points[2 * n].dist(&even));
    }
    (max_dev <= 1e-10, format!("max coordinate deviation {max_dev:.3e} (<= 1e-10)"))
}

// 2. Step-norm lower bound for 3 <= n <= 1e4 at 30 tiers; doubling the tiers
//    changes each squared norm by < 1e-12 relatively.
fn c2_l2_lower_bound(_tol: &Tolerances) -> (bool, String) {
    let spec30 = L2CounterexampleSpec::new(30).expect("valid");
    let spec60 = L2CounterexampleSpec::new(60).expect("valid");
    let mut min_margin = f64::INFINITY;
    let mut max_rel_change = 0.0f64;
    for n in 3..=10_000 {
        let s30 = spec30.step_norm_sq(n).expect("n >= 1");
        let s60 = spec60.step_norm_sq(n).expect("n >= 1");
        let bound = s30.lower_bound.expect("n >= 3");
        min_margin = min_margin.min(s30.norm_sq / bound);
        max_rel_change = max_rel_change.max((s60.norm_sq - s30.norm_sq).abs() / s30.norm_sq);
    }
    let ok = min_margin >= 1.0 && max_rel_change < 1e-12;
    (
        ok,
        format!(
            "min norm2/bound ratio {min_margin:.4} (>= 1), max tier-doubling change {max_rel_change:.3e} (< 1e-12)"
        ),
    )
}

// 3. Flat recurrence (beta=1, r=2, u0=0.5, 1e6 steps): residual <= 1e-12 per
//    step, u strictly decreasing.
fn c3_flat_fidelity(tol: &Tolerances) -> (bool, String) {
    let spec = FlatRunSpec::new(flat_family(), 0.5, 1_000_000).expect("valid");
    let run = match flat_recurrence_run(&spec, tol) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let decreasing = run.u.windows(2).all(|w| w[1] < w[0]);
    let ok = run.max_residual <= 1e-12 && decreasing;
    (
        ok,
        format!(
            "max residual {:.3e} (<= 1e-12), strictly decreasing: {decreasing}",
            run.max_residual
        ),
    )
}

// 4. Flat asymptotics: |ratio - 1| strictly decreasing across the decades
//    1e3..1e6, gamma=1 growth exponent within the calibrated band
//    [0.30, 0.50], gamma=2 tail S(1e6) - S(5e5) < 1e-6.
fn c4_flat_asymptotics(tol: &Tolerances) -> (bool, String) {
    let fam = flat_family();
    let spec = FlatRunSpec::new(fam.clone(), 0.5, 1_000_000).expect("valid");
    let run = match flat_recurrence_run(&spec, tol) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let model = AsymptoticModel::for_flat_family(&fam);
    let ratios = match asymptotic_ratio(&run.u, &model, &[1_000, 10_000, 100_000, 1_000_000]) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let finite_positive = ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    let deviations: Vec<f64> = ratios.iter().map(|r| (r - 1.0).abs()).collect();
    let devs_decreasing = deviations.windows(2).all(|w| w[1] < w[0]);

    // gamma sums over the interleaved step norms, checkpoints at pair decades
    let step_cps: Vec<usize> = [10, 100, 1_000, 10_000, 100_000, 500_000, 1_000_000]
        .iter()
        .map(|n| 2 * n)
        .collect();
    let sums = match gamma_partial_sums(&run.step_norms, &[1.0, 2.0], &step_cps) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let slope = match growth_exponent(&sums, 1.0) {
        Ok(s) => s,
        Err(e) => return (false, e.to_string()),
    };
    let slope_ok = (0.30..=0.50).contains(&slope);
    let tail = sums
        .tail(2.0, 1_000_000, 2_000_000)
        .expect("checkpoints recorded");
    let tail_ok = tail < 1e-6;

    let ok = finite_positive && devs_decreasing && slope_ok && tail_ok;
    (
        ok,
        format!(
            "|ratio-1| {:?} decreasing: {devs_decreasing}; gamma=1 slope {slope:.3} in [0.30,0.50]: {slope_ok}; gamma=2 tail {tail:.3e} < 1e-6: {tail_ok}",
            deviations.iter().map(|d| (d * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    )
}

// 5. Conified structure over 1e5 pairs: monotone height/abscissa sequences,
//    ratio identity residual <= 1e-10, positive branch throughout, final
//    coordinates inside the paper's bands.
fn c5_conified_structure(tol: &Tolerances) -> (bool, String) {
    let spec = ConifiedRunSpec::new(flat_family(), 1.0, 0.3, 100_000).expect("valid");
    let run = match conified_run(&spec, tol) {
        Ok(r) => r,
        Err(e) => return (false, format!("run failed (zero branch or solver): {e}")),
    };
    let a_nondecreasing = run.a.windows(2).all(|w| w[1] >= w[0] - 1e-12);
    let b_decreasing = run.b.windows(2).all(|w| w[1] < w[0]);
    let residual_ok = run.max_ratio_residual <= 1e-10;
    let final_point = run.trajectory.final_point();
    let b_final = *run.b.last().expect("nonempty");
    let first_ok = final_point[0] < 10.0 * b_final;
    let third_ok = final_point[2] >= 1.0 * (1.0 - 0.3) && final_point[2] <= 1.0 * (1.0 + 0.3);
    let ok = a_nondecreasing && b_decreasing && residual_ok && first_ok && third_ok;
    (
        ok,
        format!(
            "a nondecreasing: {a_nondecreasing}, b decreasing: {b_decreasing}, max identity residual {:.3e} (<= 1e-10), final x1 {:.4} < {:.4}, final x3 {:.6} in [0.7, 1.3]",
            run.max_ratio_residual,
            final_point[0],
            10.0 * b_final,
            final_point[2]
        ),
    )
}

// 6. The flat and conified ratio sequences agree within 20% at n = 1e4.
fn c6_cross_section(tol: &Tolerances) -> (bool, String) {
    let fam = flat_family();
    let model = AsymptoticModel::for_flat_family(&fam);
    let flat = match flat_recurrence_run(&FlatRunSpec::new(fam.clone(), 0.5, 10_000).expect("valid"), tol)
    {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let conified = match conified_run(&ConifiedRunSpec::new(fam, 1.0, 0.3, 10_000).expect("valid"), tol)
    {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let ru = asymptotic_ratio(&flat.u, &model, &[10_000]).expect("in range")[0];
    let rb = asymptotic_ratio(&conified.b, &model, &[10_000]).expect("in range")[0];
    let gap = (ru - rb).abs() / ru.min(rb);
    (
        gap <= 0.20,
        format!("u-ratio {ru:.4}, b-ratio {rb:.4}, relative gap {gap:.4} (<= 0.20)"),
    )
}

// 7. Seeded polyhedral-cone run: every gamma tail S(1e4) - S(5e3) below 1e-6.
fn c7_polyhedral_positive(tol: &Tolerances) -> (bool, String) {
    let spec = PolyhedralRunSpec {
        seed: 1,
        dim: 4,
        n_cones: 3,
        rows_per_cone: 4,
        lambda_min: 0.3,
        n_steps: 10_000,
    };
    let run = match positive_polyhedral_run(&spec, tol) {
        Ok(r) => r,
        Err(e) => return (false, e.to_string()),
    };
    let mut ok = true;
    let mut parts = Vec::new();
    for g in POLYHEDRAL_GAMMAS {
        let tail = run.sums.tail(g, 5_000, 10_000).expect("checkpoints recorded");
        ok &= tail < 1e-6;
        parts.push(format!("gamma={g}: {tail:.2e}"));
    }
    (ok, format!("tails S(1e4)-S(5e3) [{}] all < 1e-6", parts.join(", ")))
}

fn random_unit(rng: &mut StdRng, dim: usize) -> Point {
    loop {
        let coords: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = Point::new(coords).expect("finite");
        let n = p.norm();
        if n > 1e-2 {
            return p.scaled(1.0 / n);
        }
    }
}

// 8. Face machinery on 100 random (cone, point) instances in dims 2..5:
//    projection through the minimal-face span within 1e-8, and the
//    relative-interior partition holds on 100 feasible samples per cone.
fn c8_face_machinery(tol: &Tolerances) -> (bool, String) {
    let mut rng = StdRng::seed_from_u64(20_260_811);
    let mut max_span_residual = 0.0f64;
    let mut partitions_ok = true;
    for _ in 0..100 {
        let dim = rng.random_range(2..=5);
        let m = rng.random_range(2..=6);
        let normals: Vec<Point> = (0..m).map(|_| random_unit(&mut rng, dim)).collect();
        let sys = match HalfspaceSystem::cone(normals, dim, tol) {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let x = Point::new((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .expect("finite");
        match face_span_projection_check(&sys, &x, tol) {
            Ok(check) => max_span_residual = max_span_residual.max(check.residual),
            Err(e) => return (false, e.to_string()),
        }
        let samples: Vec<Point> = (0..100)
            .map(|_| {
                let z = Point::new((0..dim).map(|_| rng.random_range(-2.0..2.0)).collect())
                    .expect("finite");
                project_polyhedron_exact(&sys, &z, tol)
                    .expect("projection succeeds")
                    .point
            })
            .collect();
        match partition_check(&sys, &samples, tol) {
            Ok(report) => partitions_ok &= report.pass,
            Err(e) => return (false, e.to_string()),
        }
    }
    let ok = max_span_residual <= 1e-8 && partitions_ok;
    (
        ok,
        format!(
            "max span-projection residual {max_span_residual:.3e} (<= 1e-8), partitions pass: {partitions_ok}"
        ),
    )
}

// 9. Decomposition identity on 100 random instances (half with a
//    nontrivial kernel), residual <= 1e-12.
fn c9_decomposition(tol: &Tolerances) -> (bool, String) {
    let mut rng = StdRng::seed_from_u64(90_210);
    let mut max_residual = 0.0f64;
    for case in 0..100 {
        let dim = rng.random_range(2..=5);
        let m = rng.random_range(1..=6);
        // even cases: rows confined to a proper subspace so the kernel K is
        // nontrivial; odd cases: unrestricted rows
        let frame_dim = if case % 2 == 0 && dim > 1 {
            rng.random_range(1..dim)
        } else {
            dim
        };
        let frame: Vec<Point> = (0..frame_dim).map(|_| random_unit(&mut rng, dim)).collect();
        let basis = match crate::geometry::orthonormalize(&frame, tol) {
            Ok(b) => b,
            Err(e) => return (false, e.to_string()),
        };
        let rows: Vec<Point> = (0..m)
            .map(|_| {
                let mut v = Point::zeros(dim);
                for b in basis.vectors() {
                    v.add_scaled(rng.random_range(-1.0..1.0), b);
                }
                let n = v.norm();
                if n > 1e-6 {
                    v.scaled(1.0 / n)
                } else {
                    basis.vectors()[0].clone()
                }
            })
            .collect();
        // half cones, half shifted feasible systems
        let sys = if case % 4 < 2 {
            HalfspaceSystem::cone(rows, dim, tol)
        } else {
            let witness =
                Point::new((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .expect("finite");
            let shifted: Vec<(Point, f64)> = rows
                .into_iter()
                .map(|a| {
                    let slack: f64 = rng.random_range(0.0..1.0);
                    let b = a.dot(&witness) + slack;
                    (a, b)
                })
                .collect();
            HalfspaceSystem::new(shifted, dim, &witness, tol)
        };
        let sys = match sys {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        let x = Point::new((0..dim).map(|_| rng.random_range(-3.0..3.0)).collect())
            .expect("finite");
        match decompose_projection(&sys, &x, tol) {
            Ok(check) => max_residual = max_residual.max(check.residual),
            Err(e) => return (false, format!("case {case}: {e}")),
        }
    }
    (
        max_residual <= 1e-12,
        format!("max decomposition residual {max_residual:.3e} (<= 1e-12)"),
    )
}

// 10. Homogenized-cone solver certification on 200 random inputs:
//     near-zero derivative at the minimizer, grid-search dominance, and a
//     finite-difference check of the derivative formula.
fn c10_psi_certification(tol: &Tolerances) -> (bool, String) {
    let mut rng = StdRng::seed_from_u64(6_180_339);
    let mut max_derivative = 0.0f64;
    let mut grid_ok = true;
    let mut max_fd_error = 0.0f64;
    for case in 0..200 {
        let beta = rng.random_range(0.5..2.0);
        let r = 2 * rng.random_range(1..=3);
        let fam = match FlatFamily::new(beta, r) {
            Ok(f) => f,
            Err(e) => return (false, e.to_string()),
        };
        let w = Point::new(vec![
            rng.random_range(-2.5..2.5),
            rng.random_range(-2.5..2.5),
            rng.random_range(-2.5..2.5),
        ])
        .expect("finite");
        let solve = match project_homogenized_cone(&fam, &w, tol) {
            Ok(s) => s,
            Err(e) => return (false, format!("case {case}: {e}")),
        };
        let y = Point::new(vec![w[0], w[1]]).expect("finite");
        if solve.alpha_star > 0.0 {
            match psi_derivative(&fam, &y, w[2], solve.alpha_star, tol) {
                Ok(d) => max_derivative = max_derivative.max(d.abs()),
                Err(e) => return (false, e.to_string()),
            }
        }
        // 50-point grid over [0, 4 alpha* + 1]
        let upper = 4.0 * solve.alpha_star + 1.0;
        for i in 0..=50 {
            let alpha = upper * i as f64 / 50.0;
            let value = psi_probe(&fam, &w, alpha, tol);
            if solve.psi_value > value + 1e-10 {
                grid_ok = false;
            }
        }
        // central differences at a generic positive alpha
        let alpha: f64 = rng.random_range(0.1..3.0);
        let h = 1e-5;
        let d = match psi_derivative(&fam, &y, w[2], alpha, tol) {
            Ok(d) => d,
            Err(e) => return (false, e.to_string()),
        };
        let fd = (psi_probe(&fam, &w, alpha + h, tol) - psi_probe(&fam, &w, alpha - h, tol))
            / (2.0 * h);
        max_fd_error = max_fd_error.max((d - fd).abs());
    }
    let derivative_ok = max_derivative <= 1e-13; // 10 * root_tol, pinned
    let fd_ok = max_fd_error <= 1e-6;
    let ok = derivative_ok && grid_ok && fd_ok;
    (
        ok,
        format!(
            "max |psi'(alpha*)| {max_derivative:.3e} (<= 1e-13), grid dominance: {grid_ok}, max finite-difference error {max_fd_error:.3e} (<= 1e-6)"
        ),
    )
}

/// Squared distance to the homogenized cone along the parameter, evaluated
/// through an independent composition of the public projectors.
fn psi_probe(fam: &FlatFamily, w: &Point, alpha: f64, tol: &Tolerances) -> f64 {
    if alpha == 0.0 {
        return w[0] * w[0] + w[1].min(0.0).powi(2) + w[2] * w[2];
    }
    let z1 = w[0] / alpha;
    let z2 = w[1] / alpha;
    let p = crate::projectors::project_epigraph(fam, z1, z2, tol).expect("finite input");
    let d_sq = (z1 - p.y) * (z1 - p.y) + (z2 - p.value) * (z2 - p.value);
    alpha * alpha * d_sq + (alpha - w[2]) * (alpha - w[2])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_filter_selects_subsets() {
        let tol = Tolerances::default();
        let reports = run_criteria(Some("l2"), &tol).unwrap();
        assert_eq!(reports.len(), 2);
        assert!(reports.iter().all(|r| r.family == "l2"));
    }

    #[test]
    fn unknown_family_is_rejected() {
        let tol = Tolerances::default();
        assert!(run_criteria(Some("nonsense"), &tol).is_err());
    }

    #[test]
    fn corrupted_root_tolerance_fails_psi_certification() {
        // negative control: a sloppy root tolerance must break the pinned
        // derivative threshold
        let bad = Tolerances::new(1e-12, 1e-9, 1e-2, 1e-1).unwrap();
        let report = run_criterion(10, &bad).unwrap();
        assert!(!report.passed, "{}", report.details);
    }

    #[test]
    fn corrupted_root_tolerance_fails_flat_fidelity() {
        let bad = Tolerances::new(1e-12, 1e-9, 1e-2, 1e-1).unwrap();
        let report = run_criterion(3, &bad).unwrap();
        assert!(!report.passed, "{}", report.details);
    }
}
