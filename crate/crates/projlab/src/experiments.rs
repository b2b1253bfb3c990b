//! Parameterized reproductions of the limiting alternating-projection
//! examples and the positive polyhedral-cone runs, each paired with an
//! independent closed-form or oracle route.
//!
//! - the sequence-space two-subspace example, handled by tier truncation
//!   plus exact closed forms for the iterates;
//! - the planar line/epigraph alternation, driven by a dedicated scalar
//!   recurrence;
//! - its homogenized three-dimensional counterpart, driven through the
//!   generic engine with per-step extraction;
//! - seeded random polyhedral-cone runs with relaxed projections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{decade_checkpoints, gamma_partial_sums, GammaSumSeries};
use crate::dynamics::{self, ControlPolicy, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::{OrthoBasis, Point, Tolerances};
use crate::numerics::newton_bisect;
use crate::sets::{FlatFamily, HalfspaceSystem, SetSpec};

/// The two-subspace counterexample, truncated to `tiers` coordinate pairs.
///
/// Tier `k` (1-based) occupies coordinates `2k-1` and `2k` of
/// `R^(2*tiers+1)`, carries the angle
/// `theta_k = arccos((k/(k+1))^(1/(4 e^k)))` and the weight
/// `x_{2k-1} = 1/k^2`. Tiers evolve independently under the alternation, so
/// truncation is exact per tier and its error is measurable through the
/// closed forms.
#[derive(Clone, Debug, PartialEq)]
pub struct L2CounterexampleSpec {
    tiers: usize,
}

/// One step-norm evaluation of the truncated counterexample.
#[derive(Clone, Copy, Debug)]
pub struct L2StepNorm {
    /// `||x^(2n) - x^(2n-1)||^2`, truncated to the spec's tiers.
    pub norm_sq: f64,
    /// The divergence-driving lower bound `1/(2n (ln n + 1)^5)`, defined for
    /// `n >= 3`.
    pub lower_bound: Option<f64>,
}

impl L2CounterexampleSpec {
    /// Simulation cap: beyond this many tiers the explicit bases stop being
    /// desk-scale.
    pub const SIMULATION_TIER_CAP: usize = 50;

    pub fn new(tiers: usize) -> Result<Self> {
        if tiers == 0 {
            return Err(Error::InvalidParameter("tiers must be positive".into()));
        }
        Ok(L2CounterexampleSpec { tiers })
    }

    pub fn tiers(&self) -> usize {
        self.tiers
    }

    pub fn ambient_dim(&self) -> usize {
        2 * self.tiers + 1
    }

    /// `ln cos^2(theta_k) = ln(k/(k+1)) / (2 e^k)`; every power of
    /// `cos(theta_k)` is formed from this in log space.
    fn ln_cos_sq(k: usize) -> f64 {
        let kf = k as f64;
        (kf / (kf + 1.0)).ln() / (2.0 * kf.exp())
    }

    /// Weight of tier `k`: `x_{2k-1} = 1/k^2`.
    pub fn weight(k: usize) -> f64 {
        let kf = k as f64;
        1.0 / (kf * kf)
    }

    /// `(cos(theta_k), sin(theta_k))`, with the sine computed through
    /// `expm1` — for deep tiers `cos(theta_k)` is within a few ulps of 1 and
    /// `1 - cos^2` would cancel catastrophically.
    pub fn tier_angle(k: usize) -> (f64, f64) {
        let ln_cos_sq = Self::ln_cos_sq(k);
        let cos = (0.5 * ln_cos_sq).exp();
        let sin = (-ln_cos_sq.exp_m1()).sqrt();
        (cos, sin)
    }

    /// The starting point: weight on each tier's first coordinate.
    pub fn initial_point(&self) -> Point {
        let mut coords = vec![0.0; self.ambient_dim()];
        for k in 1..=self.tiers {
            coords[2 * k - 1] = Self::weight(k);
        }
        Point::new(coords).expect("weights are finite")
    }

    /// Basis of the truncated rotated subspace: one unit vector
    /// `cos(theta_k) e_{2k-1} + sin(theta_k) e_{2k}` per tier.
    pub fn rotated_subspace(&self, tol: &Tolerances) -> Result<OrthoBasis> {
        let dim = self.ambient_dim();
        let mut vectors = Vec::with_capacity(self.tiers);
        for k in 1..=self.tiers {
            let (cos, sin) = Self::tier_angle(k);
            let mut coords = vec![0.0; dim];
            coords[2 * k - 1] = cos;
            coords[2 * k] = sin;
            vectors.push(Point::new(coords)?);
        }
        OrthoBasis::new(vectors, dim, tol)
    }

    /// Basis of the truncated odd-coordinate subspace.
    pub fn odd_coordinate_subspace(&self, tol: &Tolerances) -> Result<OrthoBasis> {
        let dim = self.ambient_dim();
        let vectors = (1..=self.tiers)
            .map(|k| Point::unit(dim, 2 * k - 1))
            .collect();
        OrthoBasis::new(vectors, dim, tol)
    }

    /// Closed forms of the iterates: `(x^(2n-1), x^(2n))` for `n >= 1`.
    ///
    /// Odd iterates carry `x_{2k-1} cos^(2n)` and
    /// `x_{2k-1} cos^(2n-1) sin` on tier `k`; even iterates zero the second
    /// tier coordinate.
    pub fn closed_form(&self, n: usize) -> Result<(Point, Point)> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "closed forms are stated for n >= 1".into(),
            ));
        }
        let dim = self.ambient_dim();
        let mut odd = vec![0.0; dim];
        let mut even = vec![0.0; dim];
        let nf = n as f64;
        for k in 1..=self.tiers {
            let w = Self::weight(k);
            let ln_cos_sq = Self::ln_cos_sq(k);
            let (_, sin) = Self::tier_angle(k);
            let cos_2n = (nf * ln_cos_sq).exp();
            let cos_2n_minus_1 = ((nf - 0.5) * ln_cos_sq).exp();
            odd[2 * k - 1] = w * cos_2n;
            odd[2 * k] = w * cos_2n_minus_1 * sin;
            even[2 * k - 1] = w * cos_2n;
        }
        Ok((Point::new(odd)?, Point::new(even)?))
    }

    /// `||x^(2n) - x^(2n-1)||^2` truncated to the spec's tiers, with the
    /// lower bound attached for `n >= 3`.
    pub fn step_norm_sq(&self, n: usize) -> Result<L2StepNorm> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "step norms are stated for n >= 1".into(),
            ));
        }
        let nf = n as f64;
        let mut sum = 0.0;
        for k in 1..=self.tiers {
            let w = Self::weight(k);
            let ln_cos_sq = Self::ln_cos_sq(k);
            // w^2 cos^(4n) (cos^(-2) - 1), all in log space
            let cos_4n = (2.0 * nf * ln_cos_sq).exp();
            let cos_minus2_minus_1 = (-ln_cos_sq).exp_m1();
            sum += w * w * cos_4n * cos_minus2_minus_1;
        }
        let lower_bound = if n >= 3 {
            Some(1.0 / (2.0 * nf * (nf.ln() + 1.0).powi(5)))
        } else {
            None
        };
        Ok(L2StepNorm {
            norm_sq: sum,
            lower_bound,
        })
    }

    /// Run the truncated alternation through the generic engine.
    pub fn simulated(&self, n_pairs: usize, tol: &Tolerances) -> Result<Trajectory> {
        if self.tiers > Self::SIMULATION_TIER_CAP {
            return Err(Error::InvalidParameter(format!(
                "simulation supports at most {} tiers, got {}",
                Self::SIMULATION_TIER_CAP,
                self.tiers
            )));
        }
        let rotated = SetSpec::Subspace(self.rotated_subspace(tol)?);
        let odd = SetSpec::Subspace(self.odd_coordinate_subspace(tol)?);
        dynamics::alternating(&rotated, &odd, &self.initial_point(), n_pairs, tol)
    }
}

/// Parameters of the planar line/epigraph alternation.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatRunSpec {
    pub fam: FlatFamily,
    pub u0: f64,
    /// Number of recurrence steps (projection pairs).
    pub n_steps: usize,
}

impl FlatRunSpec {
    pub fn new(fam: FlatFamily, u0: f64, n_steps: usize) -> Result<Self> {
        if !(u0 > 0.0 && u0 < fam.delta()) {
            return Err(Error::InvalidParameter(format!(
                "u0 must lie in ]0, delta[ = ]0, {}[, got {u0}",
                fam.delta()
            )));
        }
        // the integral-comparison argument needs the start inside the
        // decreasing interval of x -> x^q exp(alpha x^-p) with q = -r-1,
        // alpha = 2 beta, p = r
        let r = f64::from(fam.r());
        let decreasing_bound = (2.0 * fam.beta() * r / (r + 1.0)).powf(1.0 / r);
        if u0 >= decreasing_bound {
            return Err(Error::InvalidParameter(format!(
                "u0 must stay below the decreasing-interval bound {decreasing_bound}, got {u0}"
            )));
        }
        Ok(FlatRunSpec { fam, u0, n_steps })
    }
}

/// Output of the scalar recurrence run.
#[derive(Clone, Debug)]
pub struct FlatRunResult {
    /// `u_0, u_1, ..., u_N`, strictly decreasing.
    pub u: Vec<f64>,
    /// Interleaved step norms `||x^(2n-1) - x^(2n-2)||, ||x^(2n) - x^(2n-1)||`
    /// for each pair: `f(u_n) sqrt(1 + f'(u_n)^2)` followed by `f(u_n)`.
    pub step_norms: Vec<f64>,
    /// Largest per-step defect of `u_{n-1} = u_n + f(u_n) f'(u_n)`.
    pub max_residual: f64,
}

/// Solve the recurrence `u_{n-1} = u_n + f(u_n) f'(u_n)` forward.
///
/// Each step is the abscissa of the epigraph projection of `(u_{n-1}, 0)`;
/// a dedicated scalar Newton solve (warm-started from the previous value)
/// keeps million-step runs cheap.
pub fn flat_recurrence_run(spec: &FlatRunSpec, tol: &Tolerances) -> Result<FlatRunResult> {
    let fam = &spec.fam;
    let mut u = Vec::with_capacity(spec.n_steps + 1);
    let mut step_norms = Vec::with_capacity(2 * spec.n_steps);
    let mut max_residual = 0.0f64;
    u.push(spec.u0);
    let mut prev = spec.u0;
    let mut guess = spec.u0;
    for n in 0..spec.n_steps {
        let root = newton_bisect(
            |y| {
                let (f, fp) = fam.evaluate(y).expect("y stays inside the domain");
                let g = y + f * fp - prev;
                let gp = 1.0 + fp * fp + f * fam.second_derivative(y);
                (g, gp)
            },
            0.0,
            prev,
            guess.min(prev),
            tol.root_tol,
            f64::EPSILON * prev,
        )
        .map_err(|e| Error::StepFailed {
            step: n,
            source: Box::new(e),
        })?;
        let (f, fp) = fam.evaluate(root).expect("root is inside the domain");
        max_residual = max_residual.max((prev - root - f * fp).abs());
        step_norms.push(f * (1.0 + fp * fp).sqrt());
        step_norms.push(f);
        u.push(root);
        guess = root;
        prev = root;
    }
    Ok(FlatRunResult {
        u,
        step_norms,
        max_residual,
    })
}

/// Parameters of the homogenized three-dimensional alternation, starting
/// from `x^(0) = a0 (b0, 0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConifiedRunSpec {
    pub fam: FlatFamily,
    pub a0: f64,
    pub b0: f64,
    pub n_pairs: usize,
}

impl ConifiedRunSpec {
    pub fn new(fam: FlatFamily, a0: f64, b0: f64, n_pairs: usize) -> Result<Self> {
        if !(a0 > 0.0) || !a0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "a0 must be strictly positive, got {a0}"
            )));
        }
        // b0 < 1 keeps the limit height positive; b0 < delta keeps the
        // abscissa inside the domain
        if !(b0 > 0.0 && b0 < fam.delta().min(1.0)) {
            return Err(Error::InvalidParameter(format!(
                "b0 must lie in ]0, min(1, delta)[ = ]0, {}[, got {b0}",
                fam.delta().min(1.0)
            )));
        }
        let r = f64::from(fam.r());
        let decreasing_bound = (2.0 * fam.beta() * r / (r + 1.0)).powf(1.0 / r);
        if b0 >= decreasing_bound {
            return Err(Error::InvalidParameter(format!(
                "b0 must stay below the decreasing-interval bound {decreasing_bound}, got {b0}"
            )));
        }
        Ok(ConifiedRunSpec {
            fam,
            a0,
            b0,
            n_pairs,
        })
    }
}

/// Output of the homogenized alternation.
#[derive(Clone, Debug)]
pub struct ConifiedRunResult {
    /// Heights `a_0, ..., a_N` (third coordinates of even iterates),
    /// nondecreasing.
    pub a: Vec<f64>,
    /// Abscissas `b_0, ..., b_N`, strictly decreasing.
    pub b: Vec<f64>,
    /// Step norms of the underlying trajectory.
    pub step_norms: Vec<f64>,
    /// Largest defect of the height-ratio identity
    /// `a_{n-1}/a_n = 1 + f(b_n)(f(b_n) - f'(b_n) b_n)`.
    pub max_ratio_residual: f64,
    pub trajectory: Trajectory,
}

/// Alternate between the homogenized cone and the plane `x_2 = 0`,
/// extracting the height/abscissa sequences along the way.
///
/// The cone projection must stay on the positive-parameter branch at every
/// step (the plane limit point has positive height); a zero branch aborts
/// the run with the offending step index.
pub fn conified_run(spec: &ConifiedRunSpec, tol: &Tolerances) -> Result<ConifiedRunResult> {
    let cone = SetSpec::HomogenizedCone(spec.fam.clone());
    let plane = SetSpec::Subspace(OrthoBasis::new(
        vec![Point::unit(3, 0), Point::unit(3, 2)],
        3,
        tol,
    )?);
    let x0 = Point::new(vec![spec.a0 * spec.b0, 0.0, spec.a0])?;

    let mut a = Vec::with_capacity(spec.n_pairs + 1);
    let mut b = Vec::with_capacity(spec.n_pairs + 1);
    a.push(spec.a0);
    b.push(spec.b0);
    let mut max_ratio_residual = 0.0f64;
    let mut zero_branch_step: Option<usize> = None;

    let trajectory = dynamics::alternating_with_observer(
        &cone,
        &plane,
        &x0,
        spec.n_pairs,
        tol,
        |step, point| {
            if step == 0 {
                return;
            }
            if step % 2 == 1 {
                // odd iterate a_n (b_n, f(b_n), 1): the cone projection just
                // happened; its third coordinate is the minimizer
                if point[2] <= 0.0 && zero_branch_step.is_none() {
                    zero_branch_step = Some(step);
                }
            } else {
                let a_n = point[2];
                let b_n = point[0] / a_n;
                let a_prev = *a.last().expect("seeded with a0");
                if let Ok((f, fp)) = spec.fam.evaluate(b_n) {
                    let residual = (a_prev / a_n - 1.0 - f * (f - fp * b_n)).abs();
                    max_ratio_residual = max_ratio_residual.max(residual);
                }
                a.push(a_n);
                b.push(b_n);
            }
        },
    )?;

    if let Some(step) = zero_branch_step {
        return Err(Error::StepFailed {
            step,
            source: Box::new(Error::InvalidParameter(
                "homogenized-cone projection took the zero branch".into(),
            )),
        });
    }

    let step_norms = trajectory.step_norms().to_vec();
    Ok(ConifiedRunResult {
        a,
        b,
        step_norms,
        max_ratio_residual,
        trajectory,
    })
}

/// Parameters of a seeded random polyhedral-cone run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolyhedralRunSpec {
    pub seed: u64,
    pub dim: usize,
    pub n_cones: usize,
    pub rows_per_cone: usize,
    pub lambda_min: f64,
    pub n_steps: usize,
}

/// Output of a positive polyhedral-cone run: the trajectory and its
/// gamma-power sums at decade checkpoints (half-length and full length
/// included for tail reads).
#[derive(Clone, Debug)]
pub struct PolyhedralRunResult {
    pub trajectory: Trajectory,
    pub sums: GammaSumSeries,
    pub cones: Vec<HalfspaceSystem>,
}

/// Exponents reported by the polyhedral runs.
pub const POLYHEDRAL_GAMMAS: [f64; 4] = [0.25, 0.5, 1.0, 2.0];

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; the uniform draw is kept away from 0
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u1.ln()).sqrt() * u2.cos()
}

fn random_unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    loop {
        let coords: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
        let p = Point::new(coords).expect("normal draws are finite");
        let n = p.norm();
        if n > 1e-6 {
            return p.scaled(1.0 / n);
        }
    }
}

/// Random relaxed projections onto random polyhedral cones.
///
/// Rows are unit-sphere normals with zero offsets, so every cone contains
/// the origin and the collection has nonempty intersection. Everything —
/// cones, starting point, policy stream — derives from the single seed.
pub fn positive_polyhedral_run(spec: &PolyhedralRunSpec, tol: &Tolerances) -> Result<PolyhedralRunResult> {
    if spec.dim == 0 || spec.dim > 10 {
        return Err(Error::InvalidParameter(format!(
            "dim must lie in 1..=10, got {}",
            spec.dim
        )));
    }
    if spec.rows_per_cone > 8 {
        return Err(Error::InvalidParameter(format!(
            "rows_per_cone must stay within the exact-projection budget of 8, got {}",
            spec.rows_per_cone
        )));
    }
    if spec.n_cones == 0 {
        return Err(Error::InvalidParameter("n_cones must be positive".into()));
    }
    if spec.n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut cones = Vec::with_capacity(spec.n_cones);
    for _ in 0..spec.n_cones {
        let normals: Vec<Point> = (0..spec.rows_per_cone)
            .map(|_| random_unit_vector(&mut rng, spec.dim))
            .collect();
        cones.push(HalfspaceSystem::cone(normals, spec.dim, tol)?);
    }
    let x0 = Point::new((0..spec.dim).map(|_| 2.0 * standard_normal(&mut rng)).collect())?;
    let policy_seed: u64 = rng.random();

    let sets: Vec<SetSpec> = cones.iter().cloned().map(SetSpec::PolyhedralH).collect();
    let trajectory = dynamics::run(
        &sets,
        &ControlPolicy::Random {
            seed: policy_seed,
            lambda_min: spec.lambda_min,
        },
        &x0,
        spec.n_steps,
        tol,
    )?;

    let mut checkpoints = decade_checkpoints(spec.n_steps);
    checkpoints.push(spec.n_steps / 2);
    let sums = gamma_partial_sums(trajectory.step_norms(), &POLYHEDRAL_GAMMAS, &checkpoints)?;
    Ok(PolyhedralRunResult {
        trajectory,
        sums,
        cones,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::{asymptotic_ratio, AsymptoticModel};
    use crate::geometry::orthonormalize;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    // --- sequence-space counterexample ---

    #[test]
    fn first_tier_closed_form_value() {
        // n = 1, tier 1: (1/2)^(1/(2e)) ~ 0.88030
        let spec = L2CounterexampleSpec::new(1).unwrap();
        let (_, even) = spec.closed_form(1).unwrap();
        assert!((even[1] - 0.8802957937590925).abs() < 1e-15);
        assert!((even[1] - 0.88030).abs() < 1e-5);
    }

    #[test]
    fn even_iterates_have_zero_even_coordinates() {
        let spec = L2CounterexampleSpec::new(6).unwrap();
        let (_, even) = spec.closed_form(17).unwrap();
        for k in 0..=spec.tiers() {
            assert_eq!(even[2 * k], 0.0);
        }
    }

    #[test]
    fn coordinates_decay_to_zero() {
        let spec = L2CounterexampleSpec::new(3).unwrap();
        let (_, even_small) = spec.closed_form(10).unwrap();
        let (_, even_large) = spec.closed_form(1_000_000).unwrap();
        for k in 1..=spec.tiers() {
            assert!(even_large[2 * k - 1] < even_small[2 * k - 1]);
        }
        // tier 1 contracts fastest: cos^(2n) = (1/2)^(n/(2e))
        assert!(even_large[1] < 1e-10);
    }

    #[test]
    fn simulated_iterates_match_closed_forms() {
        let spec = L2CounterexampleSpec::new(5).unwrap();
        let traj = spec.simulated(50, &tol()).unwrap();
        let points = traj.full_points().unwrap();
        let mut max_dev = 0.0f64;
        for n in 1..=50 {
            let (odd, even) = spec.closed_form(n).unwrap();
            max_dev = max_dev.max(points[2 * n - 1].dist(&odd));
            max_dev = max_dev.max(points[2 * n].dist(&even));
        }
        assert!(max_dev < 1e-10, "max deviation {max_dev:e}");
    }

    #[test]
    fn initial_point_is_fixed_by_odd_subspace() {
        let spec = L2CounterexampleSpec::new(4).unwrap();
        let t = tol();
        let basis = spec.odd_coordinate_subspace(&t).unwrap();
        let x0 = spec.initial_point();
        let p = crate::geometry::project_subspace(&basis, &x0).unwrap();
        assert!(p.dist(&x0) < 1e-15);
    }

    #[test]
    fn projecting_odd_iterate_onto_rotated_subspace_is_idempotent() {
        let spec = L2CounterexampleSpec::new(4).unwrap();
        let t = tol();
        let basis = spec.rotated_subspace(&t).unwrap();
        let (odd, _) = spec.closed_form(1).unwrap();
        let p = crate::geometry::project_subspace(&basis, &odd).unwrap();
        assert!(p.dist(&odd) < 1e-15);
    }

    #[test]
    fn step_norm_lower_bound_value_at_three() {
        let spec = L2CounterexampleSpec::new(30).unwrap();
        let sn = spec.step_norm_sq(3).unwrap();
        let expected = 1.0 / (6.0 * (3f64.ln() + 1.0).powi(5));
        let bound = sn.lower_bound.unwrap();
        assert!((bound - expected).abs() < 1e-18);
        assert!((bound - 4.09e-3).abs() < 1e-4);
    }

    #[test]
    fn step_norm_exceeds_lower_bound_in_small_range() {
        let spec = L2CounterexampleSpec::new(30).unwrap();
        for n in 3..=500 {
            let sn = spec.step_norm_sq(n).unwrap();
            assert!(
                sn.norm_sq >= sn.lower_bound.unwrap(),
                "bound violated at n={n}"
            );
        }
    }

    #[test]
    fn single_tier_norm_matches_direct_subtraction() {
        let spec = L2CounterexampleSpec::new(1).unwrap();
        for n in 1..=40 {
            let (odd, even) = spec.closed_form(n).unwrap();
            let direct = even.dist_sq(&odd);
            let formula = spec.step_norm_sq(n).unwrap().norm_sq;
            assert!(
                (direct - formula).abs() <= 1e-15 * formula.max(1e-300),
                "n={n}: direct {direct:e} vs formula {formula:e}"
            );
        }
    }

    #[test]
    fn no_lower_bound_below_three() {
        let spec = L2CounterexampleSpec::new(2).unwrap();
        assert!(spec.step_norm_sq(2).unwrap().lower_bound.is_none());
        assert!(spec.step_norm_sq(0).is_err());
    }

    // --- flat recurrence ---

    #[test]
    fn recurrence_inverts_forward_evaluation() {
        // forward: 0.5 + f(0.5) f'(0.5) = 0.5053674...; solving back yields 0.5
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let (f, fp) = fam.evaluate(0.5).unwrap();
        let forward = 0.5 + f * fp;
        assert!((forward - 0.5053674).abs() < 1e-7);
        let spec = FlatRunSpec::new(fam, forward, 1).unwrap();
        let run = flat_recurrence_run(&spec, &tol()).unwrap();
        assert!((run.u[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn even_step_norm_is_f_of_u() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let spec = FlatRunSpec::new(fam.clone(), 0.5, 10).unwrap();
        let run = flat_recurrence_run(&spec, &tol()).unwrap();
        for n in 1..=10 {
            let f = fam.value(run.u[n]).unwrap();
            assert!((run.step_norms[2 * n - 1] - f).abs() < 1e-18);
        }
    }

    #[test]
    fn sequence_strictly_decreases_even_near_the_boundary() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let u0 = fam.delta() - 1e-9;
        let spec = FlatRunSpec::new(fam, u0, 200).unwrap();
        let run = flat_recurrence_run(&spec, &tol()).unwrap();
        for w in run.u.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(run.max_residual <= 1e-12);
    }

    #[test]
    fn recurrence_matches_generic_alternation() {
        // the dedicated scalar path and the full 2-D engine must agree
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let spec = FlatRunSpec::new(fam.clone(), 0.5, 25).unwrap();
        let run = flat_recurrence_run(&spec, &tol()).unwrap();
        let epi = SetSpec::Epigraph1D(fam);
        let line = SetSpec::Subspace(
            orthonormalize(&[Point::unit(2, 0)], &tol()).unwrap(),
        );
        let x0 = Point::new(vec![0.5, 0.0]).unwrap();
        let traj = dynamics::alternating(&epi, &line, &x0, 25, &tol()).unwrap();
        let points = traj.full_points().unwrap();
        for n in 1..=25 {
            assert!((points[2 * n][0] - run.u[n]).abs() < 1e-13);
        }
    }

    #[test]
    fn spec_validation_rejects_bad_starts() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        assert!(FlatRunSpec::new(fam.clone(), 0.0, 1).is_err());
        assert!(FlatRunSpec::new(fam.clone(), fam.delta(), 1).is_err());
        assert!(FlatRunSpec::new(fam, -0.1, 1).is_err());
    }

    // --- conified run ---

    #[test]
    fn conified_first_pair_structure() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let spec = ConifiedRunSpec::new(fam.clone(), 1.0, 0.3, 1).unwrap();
        let run = conified_run(&spec, &tol()).unwrap();
        assert!(run.a[1] >= 1.0);
        assert!(run.b[1] > 0.0 && run.b[1] < 0.3);
        // x^(1) = a_1 (b_1, f(b_1), 1)
        let points = run.trajectory.full_points().unwrap();
        let f_b1 = fam.value(run.b[1]).unwrap();
        assert!((points[1][1] - run.a[1] * f_b1).abs() < 1e-14);
    }

    #[test]
    fn conified_monotonicity_and_identity() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let spec = ConifiedRunSpec::new(fam, 1.0, 0.3, 300).unwrap();
        let run = conified_run(&spec, &tol()).unwrap();
        for w in run.a.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        for w in run.b.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(run.max_ratio_residual <= 1e-10);
    }

    #[test]
    fn conified_even_step_norms() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let spec = ConifiedRunSpec::new(fam.clone(), 1.0, 0.3, 50).unwrap();
        let run = conified_run(&spec, &tol()).unwrap();
        for n in 1..=50usize {
            let expected = run.a[n] * fam.value(run.b[n]).unwrap();
            let got = run.step_norms[2 * n - 1];
            assert!(
                (got - expected).abs() <= 1e-12 * expected.max(1e-30),
                "n={n}"
            );
        }
    }

    #[test]
    fn conified_limit_height_stays_in_paper_band() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let spec = ConifiedRunSpec::new(fam, 1.0, 0.3, 500).unwrap();
        let run = conified_run(&spec, &tol()).unwrap();
        let final_a = *run.a.last().unwrap();
        assert!(final_a >= 1.0 * (1.0 - 0.3) && final_a <= 1.0 * (1.0 + 0.3));
    }

    #[test]
    fn conified_validation() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        assert!(ConifiedRunSpec::new(fam.clone(), 0.0, 0.3, 1).is_err());
        assert!(ConifiedRunSpec::new(fam.clone(), 1.0, 0.9, 1).is_err());
        assert!(ConifiedRunSpec::new(fam, 1.0, 0.0, 1).is_err());
    }

    // --- cross-section consistency ---

    #[test]
    fn flat_and_conified_ratios_approach_each_other() {
        let fam = FlatFamily::new(1.0, 2).unwrap();
        let model = AsymptoticModel::for_flat_family(&fam);
        assert_eq!((model.q, model.p, model.alpha, model.c), (-3.0, 2.0, 2.0, 2.0));

        let flat = flat_recurrence_run(
            &FlatRunSpec::new(fam.clone(), 0.5, 2_000).unwrap(),
            &tol(),
        )
        .unwrap();
        let conified =
            conified_run(&ConifiedRunSpec::new(fam, 1.0, 0.3, 2_000).unwrap(), &tol()).unwrap();
        let ru = asymptotic_ratio(&flat.u, &model, &[2_000]).unwrap()[0];
        let rb = asymptotic_ratio(&conified.b, &model, &[2_000]).unwrap()[0];
        assert!((ru - rb).abs() / rb < 0.25, "ru={ru} rb={rb}");
    }

    // --- polyhedral runs ---

    #[test]
    fn orthogonal_subspaces_converge_geometrically() {
        let t = tol();
        // x-axis and y-axis of R^2 as degenerate cones (opposite row pairs)
        let x_axis = HalfspaceSystem::cone(
            vec![Point::unit(2, 1), Point::unit(2, 1).scaled(-1.0)],
            2,
            &t,
        )
        .unwrap();
        let y_axis = HalfspaceSystem::cone(
            vec![Point::unit(2, 0), Point::unit(2, 0).scaled(-1.0)],
            2,
            &t,
        )
        .unwrap();
        let sets = vec![SetSpec::PolyhedralH(x_axis), SetSpec::PolyhedralH(y_axis)];
        let traj = dynamics::run(
            &sets,
            &ControlPolicy::Cyclic { order: vec![0, 1] },
            &Point::new(vec![1.0, 1.0]).unwrap(),
            20,
            &t,
        )
        .unwrap();
        // orthogonal subspaces: everything lands on the intersection {0}
        // after two steps and stays there
        assert!(traj.step_norms()[3..].iter().all(|&n| n == 0.0));
        let sums = gamma_partial_sums(traj.step_norms(), &POLYHEDRAL_GAMMAS, &[10, 20]).unwrap();
        for g in POLYHEDRAL_GAMMAS {
            assert_eq!(sums.tail(g, 10, 20).unwrap(), 0.0);
        }
    }

    #[test]
    fn single_cone_projects_once_then_freezes() {
        let t = tol();
        let spec = PolyhedralRunSpec {
            seed: 4,
            dim: 3,
            n_cones: 1,
            rows_per_cone: 3,
            lambda_min: 1.0, // forces lambda = 1: plain projection
            n_steps: 10,
        };
        let run = positive_polyhedral_run(&spec, &t).unwrap();
        let norms = run.trajectory.step_norms();
        assert!(norms[1..].iter().all(|&n| n < 1e-14));
    }

    #[test]
    fn seeded_run_is_reproducible() {
        let t = tol();
        let spec = PolyhedralRunSpec {
            seed: 1,
            dim: 4,
            n_cones: 3,
            rows_per_cone: 4,
            lambda_min: 0.3,
            n_steps: 500,
        };
        let a = positive_polyhedral_run(&spec, &t).unwrap();
        let b = positive_polyhedral_run(&spec, &t).unwrap();
        assert_eq!(a.trajectory.step_norms(), b.trajectory.step_norms());
        assert_eq!(a.sums, b.sums);
    }

    #[test]
    fn polyhedral_run_validates_inputs() {
        let t = tol();
        let base = PolyhedralRunSpec {
            seed: 0,
            dim: 4,
            n_cones: 2,
            rows_per_cone: 4,
            lambda_min: 0.3,
            n_steps: 10,
        };
        assert!(positive_polyhedral_run(&PolyhedralRunSpec { dim: 11, ..base }, &t).is_err());
        assert!(
            positive_polyhedral_run(&PolyhedralRunSpec { rows_per_cone: 9, ..base }, &t).is_err()
        );
        assert!(positive_polyhedral_run(&PolyhedralRunSpec { n_cones: 0, ..base }, &t).is_err());
    }
}
