//! Series and asymptotics analysis of trajectories: power sums of step
//! norms at checkpoints, Fejér monotonicity checks, asymptotic-ratio
//! estimators, and growth-exponent fits.
//!
//! Finite runs cannot certify divergence; they can only exhibit the
//! predicted growth laws. Accordingly the estimators report numbers (growth
//! exponents, tails, ratios) rather than booleans.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::{Point, Tolerances};
use crate::numerics::KahanSum;
use crate::sets::FlatFamily;

/// Partial sums `S_gamma(N) = sum_{n < N} ||step_n||^gamma` for a list of
/// exponents, recorded at increasing checkpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSumSeries {
    gammas: Vec<f64>,
    checkpoints: Vec<usize>,
    /// `partial_sums[g][c]` is the sum for `gammas[g]` at `checkpoints[c]`.
    partial_sums: Vec<Vec<f64>>,
}

impl GammaSumSeries {
    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    pub fn partial_sums(&self) -> &[Vec<f64>] {
        &self.partial_sums
    }

    pub fn gamma_index(&self, gamma: f64) -> Option<usize> {
        self.gammas.iter().position(|&g| g == gamma)
    }

    /// Partial sum for `gamma` at the given checkpoint value.
    pub fn sum_at(&self, gamma: f64, checkpoint: usize) -> Option<f64> {
        let g = self.gamma_index(gamma)?;
        let c = self.checkpoints.iter().position(|&n| n == checkpoint)?;
        Some(self.partial_sums[g][c])
    }

    /// `S(b) - S(a)` for `gamma`, when both checkpoints are recorded.
    pub fn tail(&self, gamma: f64, a: usize, b: usize) -> Option<f64> {
        Some(self.sum_at(gamma, b)? - self.sum_at(gamma, a)?)
    }
}

/// Decade checkpoints `{10, 100, ...}` clipped to `len`, with `len` itself
/// appended. The asymptotics of interest are in `ln n`, so geometric
/// spacing is the informative grid.
pub fn decade_checkpoints(len: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut decade = 10usize;
    while decade <= len && decade <= 10_000_000 {
        out.push(decade);
        decade = decade.saturating_mul(10);
    }
    if out.last() != Some(&len) && len > 0 {
        out.push(len);
    }
    out
}

/// Compute gamma-power partial sums of `step_norms` at the checkpoints.
///
/// Powers are taken in log space (`exp(gamma ln x)`) so that millions of
/// tiny norms keep their relative accuracy, and accumulated with
/// compensated summation.
pub fn gamma_partial_sums(
    step_norms: &[f64],
    gammas: &[f64],
    checkpoints: &[usize],
) -> Result<GammaSumSeries> {
    if step_norms.is_empty() || gammas.is_empty() || checkpoints.is_empty() {
        return Err(Error::InvalidParameter(
            "gamma_partial_sums requires nonempty norms, gammas, and checkpoints".into(),
        ));
    }
    for &g in gammas {
        if !(g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be strictly positive, got {g}"
            )));
        }
    }
    let mut sorted = checkpoints.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if *sorted.last().expect("nonempty") > step_norms.len() {
        return Err(Error::InvalidParameter(format!(
            "checkpoint {} exceeds series length {}",
            sorted.last().expect("nonempty"),
            step_norms.len()
        )));
    }

    let mut partial_sums = vec![Vec::with_capacity(sorted.len()); gammas.len()];
    let mut accumulators = vec![KahanSum::default(); gammas.len()];
    let mut next = 0usize;
    for (n, &norm) in step_norms.iter().enumerate() {
        while next < sorted.len() && sorted[next] == n {
            for (g, acc) in accumulators.iter().enumerate() {
                partial_sums[g].push(acc.value());
            }
            next += 1;
        }
        if norm > 0.0 {
            let ln = norm.ln();
            for (g, &gamma) in gammas.iter().enumerate() {
                accumulators[g].add((gamma * ln).exp());
            }
        }
    }
    while next < sorted.len() {
        for (g, acc) in accumulators.iter().enumerate() {
            partial_sums[g].push(acc.value());
        }
        next += 1;
    }
    Ok(GammaSumSeries {
        gammas: gammas.to_vec(),
        checkpoints: sorted,
        partial_sums,
    })
}

/// Result of a Fejér monotonicity check against a reference point.
#[derive(Clone, Copy, Debug)]
pub struct FejerCheck {
    /// Largest single-step increase of the distance to the reference point
    /// over the stored points.
    pub max_increase: f64,
    pub pass: bool,
}

/// Verify that the distance to `z` never increases along the trajectory
/// (within `equality_tol`). For compressed trajectories the check runs on
/// the stored checkpoints.
pub fn fejer_check(traj: &Trajectory, z: &Point, tol: &Tolerances) -> Result<FejerCheck> {
    z.check_dim(traj.initial_point().dim())?;
    let sampled = traj.sampled_points();
    let mut max_increase = 0.0f64;
    let mut prev = sampled[0].1.dist(z);
    for (_, p) in sampled.iter().skip(1) {
        let d = p.dist(z);
        max_increase = max_increase.max(d - prev);
        prev = d;
    }
    Ok(FejerCheck {
        max_increase,
        pass: max_increase <= tol.equality_tol,
    })
}

/// Parameters of the asymptotic law `f(x) f'(x) ~ c x^q exp(-alpha x^(-p))`
/// governing the recurrence sequences, with predicted limit
/// `series_n / (alpha / ln n)^(1/p) -> 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticModel {
    pub q: f64,
    pub p: f64,
    pub alpha: f64,
    pub c: f64,
}

impl AsymptoticModel {
    pub fn new(q: f64, p: f64, alpha: f64, c: f64) -> Result<Self> {
        for (name, v) in [("p", p), ("alpha", alpha), ("c", c)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !q.is_finite() {
            return Err(Error::InvalidParameter("q must be finite".into()));
        }
        Ok(AsymptoticModel { q, p, alpha, c })
    }

    /// The model satisfied by a flat family: `q = -r-1`, `p = r`,
    /// `alpha = 2 beta`, `c = r beta`.
    pub fn for_flat_family(fam: &FlatFamily) -> Self {
        let r = f64::from(fam.r());
        AsymptoticModel {
            q: -r - 1.0,
            p: r,
            alpha: 2.0 * fam.beta(),
            c: r * fam.beta(),
        }
    }
}

/// Ratios `series[n] / (alpha / ln n)^(1/p)` at the given checkpoints.
pub fn asymptotic_ratio(
    series: &[f64],
    model: &AsymptoticModel,
    checkpoints: &[usize],
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(checkpoints.len());
    for &n in checkpoints {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {n} below the ln(n) > 1 regime"
            )));
        }
        let Some(&value) = series.get(n) else {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {n} exceeds series length {}",
                series.len()
            )));
        };
        if !(value > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "series entry at {n} must be strictly positive, got {value}"
            )));
        }
        let reference = (model.alpha / (n as f64).ln()).powf(1.0 / model.p);
        out.push(value / reference);
    }
    Ok(out)
}

/// Least-squares slope of `ln S(N)` against `ln N` over the checkpoints in
/// the last two decades of the series. Requires at least 3 checkpoints
/// spanning at least two decades overall.
pub fn growth_exponent(series: &GammaSumSeries, gamma: f64) -> Result<f64> {
    let g = series.gamma_index(gamma).ok_or_else(|| {
        Error::InvalidParameter(format!("gamma {gamma} not present in the series"))
    })?;
    let cps = series.checkpoints();
    if cps.len() < 3 {
        return Err(Error::InvalidParameter(
            "growth exponent needs at least 3 checkpoints".into(),
        ));
    }
    let max_n = *cps.last().expect("nonempty") as f64;
    let min_n = cps[0] as f64;
    if max_n / min_n < 99.0 {
        return Err(Error::InvalidParameter(
            "checkpoints must span at least two decades".into(),
        ));
    }
    let cutoff = max_n / 100.0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (c, &n) in cps.iter().enumerate() {
        let s = series.partial_sums()[g][c];
        if (n as f64) >= cutoff * (1.0 - 1e-9) && s > 0.0 {
            xs.push((n as f64).ln());
            ys.push(s.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::InvalidParameter(
            "not enough positive partial sums in the last two decades".into(),
        ));
    }
    let n = xs.len() as f64;
    let mean_x: f64 = xs.iter().sum::<f64>() / n;
    let mean_y: f64 = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - mean_x) * (y - mean_y);
        den += (x - mean_x) * (x - mean_x);
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{alternating, ControlPolicy};
    use crate::geometry::orthonormalize;
    use crate::sets::SetSpec;

    fn pt(coords: &[f64]) -> Point {
        Point::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn partial_sums_match_hand_arithmetic() {
        let norms = [1.0, 0.5, 0.25];
        let series = gamma_partial_sums(&norms, &[1.0, 2.0], &[3]).unwrap();
        assert!((series.sum_at(1.0, 3).unwrap() - 1.75).abs() < 1e-15);
        assert!((series.sum_at(2.0, 3).unwrap() - 1.3125).abs() < 1e-15);
    }

    #[test]
    fn partial_sums_of_zero_norms_vanish() {
        let norms = [0.0; 10];
        let series = gamma_partial_sums(&norms, &[0.5, 1.0, 2.0], &[5, 10]).unwrap();
        for g in [0.5, 1.0, 2.0] {
            assert_eq!(series.sum_at(g, 10).unwrap(), 0.0);
        }
    }

    #[test]
    fn partial_sums_reject_empty_input() {
        assert!(gamma_partial_sums(&[], &[1.0], &[1]).is_err());
        assert!(gamma_partial_sums(&[1.0], &[], &[1]).is_err());
        assert!(gamma_partial_sums(&[1.0], &[1.0], &[]).is_err());
        assert!(gamma_partial_sums(&[1.0], &[0.0], &[1]).is_err());
        assert!(gamma_partial_sums(&[1.0], &[1.0], &[5]).is_err());
    }

    #[test]
    fn smaller_gamma_dominates_for_norms_below_one() {
        let norms: Vec<f64> = (1..50).map(|n| 0.9f64.powi(n)).collect();
        let cps = vec![10, 20, 49];
        let series = gamma_partial_sums(&norms, &[0.5, 1.0, 2.0], &cps).unwrap();
        for c in 0..cps.len() {
            let s = &series.partial_sums();
            assert!(s[0][c] >= s[1][c]);
            assert!(s[1][c] >= s[2][c]);
        }
    }

    #[test]
    fn geometric_series_converges_cleanly() {
        // r = 0.5, gamma = 0.5: tail S(2N) - S(N) below 1e-6 at N = 1000
        let norms: Vec<f64> = (0..2000).map(|n| 0.5f64.powi(n)).collect();
        let series = gamma_partial_sums(&norms, &[0.5], &[10, 100, 1000, 2000]).unwrap();
        let tail = series.tail(0.5, 1000, 2000).unwrap();
        assert!(tail < 1e-6);
        let slope = growth_exponent(&series, 0.5).unwrap();
        assert!(slope.abs() < 1e-6);
    }

    #[test]
    fn fejer_check_constant_trajectory() {
        let tol = Tolerances::default();
        let x_axis = SetSpec::Subspace(orthonormalize(&[pt(&[1.0, 0.0])], &tol).unwrap());
        let y_axis = SetSpec::Subspace(orthonormalize(&[pt(&[0.0, 1.0])], &tol).unwrap());
        let traj = alternating(&x_axis, &y_axis, &Point::zeros(2), 10, &tol).unwrap();
        let check = fejer_check(&traj, &pt(&[0.0, 0.0]), &tol).unwrap();
        assert_eq!(check.max_increase, 0.0);
        assert!(check.pass);
    }

    #[test]
    fn fejer_check_detects_corruption() {
        // negative control: an explicitly built "trajectory" that steps away
        let tol = Tolerances::default();
        let x_axis = SetSpec::Subspace(orthonormalize(&[pt(&[1.0, 0.0])], &tol).unwrap());
        // a single relaxed step with lambda = 2 towards a set NOT containing z
        // moves away from z = (2, 0)
        let traj = crate::dynamics::run(
            &[x_axis],
            &ControlPolicy::Explicit {
                schedule: vec![crate::sets::RelaxedStep {
                    set_index: 0,
                    lambda: 2.0,
                }],
            },
            &pt(&[0.0, 1.0]),
            1,
            &tol,
        )
        .unwrap();
        let check = fejer_check(&traj, &pt(&[0.0, 1.0]), &tol).unwrap();
        assert!(!check.pass);
        assert!(check.max_increase > 0.5);
    }

    #[test]
    fn asymptotic_ratio_of_exact_law_is_one() {
        let model = AsymptoticModel::new(-3.0, 2.0, 2.0, 2.0).unwrap();
        let series: Vec<f64> = (0..2000)
            .map(|n| {
                if n < 3 {
                    1.0
                } else {
                    (model.alpha / (n as f64).ln()).powf(1.0 / model.p)
                }
            })
            .collect();
        let ratios = asymptotic_ratio(&series, &model, &[10, 100, 1000]).unwrap();
        for r in ratios {
            assert!((r - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_ratio_is_scale_covariant() {
        let model = AsymptoticModel::new(-3.0, 2.0, 2.0, 2.0).unwrap();
        let base: Vec<f64> = (0..200).map(|n| 1.0 / ((n + 2) as f64)).collect();
        let doubled: Vec<f64> = base.iter().map(|v| 2.0 * v).collect();
        let r1 = asymptotic_ratio(&base, &model, &[10, 100]).unwrap();
        let r2 = asymptotic_ratio(&doubled, &model, &[10, 100]).unwrap();
        for (a, b) in r1.iter().zip(&r2) {
            assert!((2.0 * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn asymptotic_ratio_validates_input() {
        let model = AsymptoticModel::new(-3.0, 2.0, 2.0, 2.0).unwrap();
        let series = vec![1.0; 100];
        assert!(asymptotic_ratio(&series, &model, &[2]).is_err());
        assert!(asymptotic_ratio(&series, &model, &[500]).is_err());
        let negative = vec![-1.0; 100];
        assert!(asymptotic_ratio(&negative, &model, &[10]).is_err());
    }

    #[test]
    fn model_constructor_validates() {
        assert!(AsymptoticModel::new(-3.0, 0.0, 2.0, 2.0).is_err());
        assert!(AsymptoticModel::new(-3.0, 2.0, -1.0, 2.0).is_err());
        assert!(AsymptoticModel::new(f64::NAN, 2.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn growth_exponent_of_sqrt_series() {
        // norms n^{-1/2} give S(N) ~ sqrt(N), slope 0.5
        let norms: Vec<f64> = (1..=10_000).map(|n| 0.5 / (n as f64).sqrt()).collect();
        let series = gamma_partial_sums(&norms, &[1.0], &[100, 1_000, 10_000]).unwrap();
        let slope = growth_exponent(&series, 1.0).unwrap();
        assert!((slope - 0.5).abs() < 0.02, "slope {slope}");
    }

    #[test]
    fn growth_exponent_of_logarithmic_series_is_near_zero() {
        // norms 1/n give S(N) ~ ln N: sub-polynomial divergence
        let norms: Vec<f64> = (1..=10_000).map(|n| 1.0 / n as f64).collect();
        let series = gamma_partial_sums(&norms, &[1.0], &[100, 1_000, 10_000]).unwrap();
        let slope = growth_exponent(&series, 1.0).unwrap();
        assert!(slope > 0.0 && slope < 0.2, "slope {slope}");
    }

    #[test]
    fn growth_exponent_needs_two_decades() {
        let norms = vec![0.5; 100];
        let series = gamma_partial_sums(&norms, &[1.0], &[10, 50, 100]).unwrap();
        assert!(growth_exponent(&series, 1.0).is_err());
        let series = gamma_partial_sums(&norms, &[1.0], &[50, 100]).unwrap();
        assert!(growth_exponent(&series, 1.0).is_err());
    }

    #[test]
    fn decade_checkpoints_clip_and_append() {
        assert_eq!(decade_checkpoints(1_000), vec![10, 100, 1_000]);
        assert_eq!(decade_checkpoints(2_500), vec![10, 100, 1_000, 2_500]);
        assert_eq!(decade_checkpoints(5), vec![5]);
    }
}
