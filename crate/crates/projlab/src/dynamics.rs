//! The iteration engine: generates trajectories `x_{n+1} = R_n x_n` under a
//! control policy selecting which set to project onto and with which
//! relaxation parameter.
//!
//! Runs are strictly sequential and bit-reproducible: the random policy uses
//! ChaCha8 seeded from a caller-supplied 64-bit value, drawing the set index
//! first and the relaxation parameter second at every step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point, Tolerances};
use crate::projectors::relax;
use crate::sets::{RelaxedStep, SetSpec};

/// Full point storage is kept up to this many steps; longer runs retain
/// periodic checkpoints only (plus the endpoints), so that multi-million
/// step series runs stay in memory.
pub const FULL_STORAGE_LIMIT: usize = 100_000;

/// Checkpoint stride for compressed trajectories.
pub const CHECKPOINT_STRIDE: usize = 1_000;

/// How the next relaxed projector is selected.
#[derive(Clone, Debug)]
pub enum ControlPolicy {
    /// Plain projections (`lambda = 1`) visiting the given indices cyclically.
    Cyclic { order: Vec<usize> },
    /// Set index uniform over the collection, relaxation parameter uniform
    /// over `[lambda_min, 2 - lambda_min]`.
    Random { seed: u64, lambda_min: f64 },
    /// A fixed schedule, repeated cyclically if shorter than the run.
    Explicit { schedule: Vec<RelaxedStep> },
}

impl ControlPolicy {
    fn validate(&self, n_sets: usize) -> Result<()> {
        match self {
            ControlPolicy::Cyclic { order } => {
                if order.is_empty() {
                    return Err(Error::InvalidParameter("cyclic order is empty".into()));
                }
                if let Some(&bad) = order.iter().find(|&&i| i >= n_sets) {
                    return Err(Error::InvalidParameter(format!(
                        "cyclic order references set {bad}, but only {n_sets} sets are given"
                    )));
                }
            }
            ControlPolicy::Random { lambda_min, .. } => {
                if !(*lambda_min > 0.0 && *lambda_min <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "lambda_min must lie in ]0, 1], got {lambda_min}"
                    )));
                }
            }
            ControlPolicy::Explicit { schedule } => {
                if schedule.is_empty() {
                    return Err(Error::InvalidParameter("explicit schedule is empty".into()));
                }
                for step in schedule {
                    if step.set_index >= n_sets {
                        return Err(Error::InvalidParameter(format!(
                            "schedule references set {}, but only {n_sets} sets are given",
                            step.set_index
                        )));
                    }
                    if !(step.lambda > 0.0 && step.lambda <= 2.0) {
                        return Err(Error::InvalidParameter(format!(
                            "schedule lambda {} outside ]0, 2]",
                            step.lambda
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match self {
            ControlPolicy::Cyclic { order } => format!("cyclic{order:?}"),
            ControlPolicy::Random { seed, lambda_min } => {
                format!("random(seed={seed}, lambda_min={lambda_min})")
            }
            ControlPolicy::Explicit { schedule } => format!("explicit({} steps)", schedule.len()),
        }
    }

    fn seed(&self) -> Option<u64> {
        match self {
            ControlPolicy::Random { seed, .. } => Some(*seed),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
enum Storage {
    Full(Vec<Point>),
    Sampled {
        samples: Vec<(usize, Point)>,
        last: Point,
    },
}

/// Metadata describing how a trajectory was produced.
#[derive(Clone, Debug)]
pub struct RunMeta {
    pub sets: Vec<String>,
    pub policy: String,
    pub seed: Option<u64>,
}

/// An iteration record: stored points, step norms, and the decisions that
/// produced them.
#[derive(Clone, Debug)]
pub struct Trajectory {
    storage: Storage,
    step_norms: Vec<f64>,
    decisions: Vec<RelaxedStep>,
    meta: RunMeta,
}

impl Trajectory {
    /// Number of points (steps + 1).
    pub fn len(&self) -> usize {
        self.step_norms.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false // a trajectory always contains its starting point
    }

    pub fn initial_point(&self) -> &Point {
        match &self.storage {
            Storage::Full(points) => &points[0],
            Storage::Sampled { samples, .. } => &samples[0].1,
        }
    }

    pub fn final_point(&self) -> &Point {
        match &self.storage {
            Storage::Full(points) => points.last().expect("nonempty by construction"),
            Storage::Sampled { last, .. } => last,
        }
    }

    /// All points, available only for fully stored runs.
    pub fn full_points(&self) -> Option<&[Point]> {
        match &self.storage {
            Storage::Full(points) => Some(points),
            Storage::Sampled { .. } => None,
        }
    }

    /// Stored (index, point) pairs: every point for short runs, periodic
    /// checkpoints plus endpoints for long ones.
    pub fn sampled_points(&self) -> Vec<(usize, &Point)> {
        match &self.storage {
            Storage::Full(points) => points.iter().enumerate().collect(),
            Storage::Sampled { samples, last, .. } => {
                let mut out: Vec<(usize, &Point)> =
                    samples.iter().map(|(i, p)| (*i, p)).collect();
                let last_index = self.step_norms.len();
                if out.last().map(|(i, _)| *i) != Some(last_index) {
                    out.push((last_index, last));
                }
                out
            }
        }
    }

    pub fn step_norms(&self) -> &[f64] {
        &self.step_norms
    }

    pub fn decisions(&self) -> &[RelaxedStep] {
        &self.decisions
    }

    pub fn meta(&self) -> &RunMeta {
        &self.meta
    }
}

/// Run the iteration for `n_steps` steps from `x0`.
pub fn run(
    sets: &[SetSpec],
    policy: &ControlPolicy,
    x0: &Point,
    n_steps: usize,
    tol: &Tolerances,
) -> Result<Trajectory> {
    run_with_observer(sets, policy, x0, n_steps, tol, |_, _| {})
}

/// Same as [`run`], invoking `observer(step_index, point)` after every step
/// (and once with the starting point at index 0). Lets callers extract
/// per-step data from runs too long for full point storage.
pub fn run_with_observer(
    sets: &[SetSpec],
    policy: &ControlPolicy,
    x0: &Point,
    n_steps: usize,
    tol: &Tolerances,
    mut observer: impl FnMut(usize, &Point),
) -> Result<Trajectory> {
    if sets.is_empty() {
        return Err(Error::InvalidParameter("no sets given".into()));
    }
    let dim = x0.dim();
    for set in sets {
        if set.ambient_dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: set.ambient_dim(),
            });
        }
    }
    policy.validate(sets.len())?;

    let mut rng = match policy {
        ControlPolicy::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
        _ => None,
    };
    let full = n_steps <= FULL_STORAGE_LIMIT;
    let mut points: Vec<Point> = Vec::with_capacity(if full { n_steps + 1 } else { 0 });
    let mut samples: Vec<(usize, Point)> = Vec::new();
    if full {
        points.push(x0.clone());
    } else {
        samples.push((0, x0.clone()));
    }
    let mut step_norms = Vec::with_capacity(n_steps);
    let mut decisions = Vec::with_capacity(n_steps);

    observer(0, x0);
    let mut x = x0.clone();
    for n in 0..n_steps {
        let decision = match policy {
            ControlPolicy::Cyclic { order } => RelaxedStep {
                set_index: order[n % order.len()],
                lambda: 1.0,
            },
            ControlPolicy::Random { lambda_min, .. } => {
                let rng = rng.as_mut().expect("random policy carries an rng");
                let set_index = rng.random_range(0..sets.len());
                let lambda = rng.random_range(*lambda_min..=(2.0 - *lambda_min));
                RelaxedStep { set_index, lambda }
            }
            ControlPolicy::Explicit { schedule } => schedule[n % schedule.len()],
        };
        let next = relax(&sets[decision.set_index], decision.lambda, &x, tol).map_err(|e| {
            Error::StepFailed {
                step: n,
                source: Box::new(e),
            }
        })?;
        step_norms.push(next.dist(&x));
        decisions.push(decision);
        x = next;
        observer(n + 1, &x);
        if full {
            points.push(x.clone());
        } else if (n + 1) % CHECKPOINT_STRIDE == 0 {
            samples.push((n + 1, x.clone()));
        }
    }

    let storage = if full {
        Storage::Full(points)
    } else {
        Storage::Sampled { samples, last: x }
    };
    Ok(Trajectory {
        storage,
        step_norms,
        decisions,
        meta: RunMeta {
            sets: sets.iter().map(SetSpec::describe).collect(),
            policy: policy.describe(),
            seed: policy.seed(),
        },
    })
}

/// Strict alternation `P_A, P_B, P_A, ...` for `n_pairs` projection pairs.
/// The limiting examples in this crate are all of this form.
pub fn alternating(
    set_a: &SetSpec,
    set_b: &SetSpec,
    x0: &Point,
    n_pairs: usize,
    tol: &Tolerances,
) -> Result<Trajectory> {
    alternating_with_observer(set_a, set_b, x0, n_pairs, tol, |_, _| {})
}

/// [`alternating`] with a per-step observer.
pub fn alternating_with_observer(
    set_a: &SetSpec,
    set_b: &SetSpec,
    x0: &Point,
    n_pairs: usize,
    tol: &Tolerances,
    observer: impl FnMut(usize, &Point),
) -> Result<Trajectory> {
    let sets = [set_a.clone(), set_b.clone()];
    let policy = ControlPolicy::Explicit {
        schedule: vec![
            RelaxedStep {
                set_index: 0,
                lambda: 1.0,
            },
            RelaxedStep {
                set_index: 1,
                lambda: 1.0,
            },
        ],
    };
    run_with_observer(&sets, &policy, x0, 2 * n_pairs, tol, observer)
}
