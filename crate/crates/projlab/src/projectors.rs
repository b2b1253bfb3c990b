//! Exact projection operators for every set class, plus the relaxed
//! projector `(1-lambda) Id + lambda P`.
//!
//! Polyhedral projections come in two independent flavors: an exact
//! active-set enumeration (which doubles as the face machinery's engine) and
//! a cyclic Dykstra iteration that serves as its oracle on larger systems.

use crate::error::{Error, Result};
use crate::faces::{self, FaceDescriptor};
use crate::geometry::{orthonormalize, project_subspace, Point, Tolerances};
use crate::numerics::{newton_bisect, nnls, solve_consistent};
use crate::sets::{FlatFamily, HalfspaceSystem, SetSpec};

/// Exhaustive active-set enumeration is capped at this many rows; larger
/// systems must go through [`project_polyhedron_dykstra`].
pub const ENUMERATION_ROW_CAP: usize = 20;

/// Result of projecting a planar point onto the epigraph of a flat family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpigraphProjection {
    /// Abscissa of the nearest epigraph point.
    pub y: f64,
    /// Ordinate of the nearest epigraph point.
    pub value: f64,
    /// True when the input already belonged to the epigraph (in which case
    /// `(y, value)` echoes the input unchanged).
    pub inside: bool,
}

impl EpigraphProjection {
    pub fn point(&self) -> Point {
        Point::new(vec![self.y, self.value]).expect("projection coordinates are finite")
    }
}

/// Project `(x, rho)` onto `epi f`.
///
/// In the interior case (`|x| <= delta`, point below the graph) the nearest
/// point is `(y, f(y))` where `y` solves `x = y + (f(y) - rho) f'(y)`; the
/// root is bracketed on `[0, x]` (the equation's residual is `-x` at 0 and
/// positive at `x`) and polished by safeguarded Newton. Outside the domain,
/// or when the bracket carries no sign change, the candidate nearest points
/// are the graph root (when present) and the vertical boundary ray
/// `(delta, max(rho, f(delta)))`; the closer one wins.
pub fn project_epigraph(
    fam: &FlatFamily,
    x: f64,
    rho: f64,
    tol: &Tolerances,
) -> Result<EpigraphProjection> {
    if !x.is_finite() || !rho.is_finite() {
        return Err(Error::NonFinite);
    }
    if fam.epigraph_contains(x, rho) {
        return Ok(EpigraphProjection {
            y: x,
            value: rho,
            inside: true,
        });
    }
    if x == 0.0 {
        return Ok(EpigraphProjection {
            y: 0.0,
            value: 0.0,
            inside: false,
        });
    }
    let ax = x.abs();
    let (y, value) = epigraph_nearest_abs(fam, ax, rho, tol)?;
    Ok(EpigraphProjection {
        y: y.copysign(x),
        value,
        inside: false,
    })
}

/// Nearest epigraph point for `x = ax > 0`, comparing the interior graph
/// root (when bracketed) against the boundary-ray candidate.
fn epigraph_nearest_abs(fam: &FlatFamily, ax: f64, rho: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    debug_assert!(ax > 0.0);
    let delta = fam.delta();
    let ub = ax.min(delta);
    let eval = |y: f64| fam.evaluate(y).expect("y stays inside the domain");

    let mut best: Option<(f64, f64, f64)> = None; // (dist_sq, y, value)
    let consider = |y: f64, value: f64, best: &mut Option<(f64, f64, f64)>| {
        let d2 = (ax - y) * (ax - y) + (rho - value) * (rho - value);
        if best.map_or(true, |(bd, _, _)| d2 < bd) {
            *best = Some((d2, y, value));
        }
    };

    let (f_ub, fp_ub) = eval(ub);
    let g_ub = ub + (f_ub - rho) * fp_ub - ax;
    if g_ub >= 0.0 {
        let start = 0.5 * ub;
        let root = newton_bisect(
            |y| {
                let (f, fp) = eval(y);
                let g = y + (f - rho) * fp - ax;
                let gp = 1.0 + fp * fp + (f - rho) * fam.second_derivative(y);
                (g, gp)
            },
            0.0,
            ub,
            start,
            tol.root_tol,
            f64::EPSILON * ub,
        )?;
        consider(root, eval(root).0, &mut best);
    }
    // vertical boundary ray at +delta
    let f_delta = fam.value(delta).expect("delta is in the domain");
    consider(delta, rho.max(f_delta), &mut best);

    let (_, y, value) = best.expect("at least the boundary candidate exists");
    Ok((y, value))
}

/// KKT data certifying a polyhedral projection: `x - p = sum mu_i a_i` over
/// the rows active at `p`, with `mu_i >= 0`.
#[derive(Clone, Debug)]
pub struct KktCertificate {
    /// Row indices active at the projection.
    pub active_set: Vec<usize>,
    /// Nonnegative multipliers, aligned with `active_set`.
    pub multipliers: Vec<f64>,
    /// Norm of `x - p - sum mu_i a_i`.
    pub residual: f64,
}

/// An exact polyhedral projection together with the minimal face containing
/// it and its KKT certificate.
#[derive(Clone, Debug)]
pub struct PolyhedralProjection {
    pub point: Point,
    pub face: FaceDescriptor,
    pub kkt: KktCertificate,
}

/// Exact projection onto an H-polyhedron by exhaustive active-set
/// enumeration.
///
/// Every subset of rows is treated as an equality system; `x` is projected
/// onto the resulting affine set, infeasible candidates are discarded, and
/// the closest survivor is the projection (the true projection always
/// appears as the candidate of its own active set). Exact at desk scale;
/// the row cap keeps the enumeration honest.
pub fn project_polyhedron_exact(
    sys: &HalfspaceSystem,
    x: &Point,
    tol: &Tolerances,
) -> Result<PolyhedralProjection> {
    x.check_dim(sys.dim())?;
    if sys.len() > ENUMERATION_ROW_CAP {
        return Err(Error::RowCapExceeded {
            rows: sys.len(),
            cap: ENUMERATION_ROW_CAP,
        });
    }
    let point = polyhedral_nearest(sys.rows(), sys.dim(), x, tol).ok_or(Error::Infeasible {
        max_violation: f64::INFINITY,
    })?;
    let kkt = kkt_certificate(sys, x, &point, tol)?;
    let face = faces::identify_face(sys, &point, tol)?;
    Ok(PolyhedralProjection { point, face, kkt })
}

/// Nearest point of `{ z : a_i . z <= b_i }` to `x`, or `None` when the
/// system is empty (no candidate from any equality subset is feasible).
pub(crate) fn polyhedral_nearest(
    rows: &[(Point, f64)],
    dim: usize,
    x: &Point,
    tol: &Tolerances,
) -> Option<Point> {
    let m = rows.len();
    debug_assert!(m <= ENUMERATION_ROW_CAP);
    let mut best: Option<(f64, Point)> = None;
    for mask in 0u32..(1u32 << m) {
        let Some(p) = affine_subset_projection(rows, dim, mask, x, tol) else {
            continue;
        };
        let feasible = rows.iter().all(|(a, b)| a.dot(&p) - b <= tol.active_tol);
        if !feasible {
            continue;
        }
        let d2 = x.dist_sq(&p);
        if best.as_ref().map_or(true, |(bd, _)| d2 < *bd) {
            best = Some((d2, p));
        }
    }
    best.map(|(_, p)| p)
}

/// Projection of `x` onto the affine set `{ z : a_i . z = b_i, i in mask }`,
/// or `None` when that equality system is inconsistent.
fn affine_subset_projection(
    rows: &[(Point, f64)],
    dim: usize,
    mask: u32,
    x: &Point,
    tol: &Tolerances,
) -> Option<Point> {
    if mask == 0 {
        return Some(x.clone());
    }
    let mut normals: Vec<Point> = Vec::new();
    let mut a: Vec<Vec<f64>> = Vec::new();
    let mut b: Vec<f64> = Vec::new();
    for (i, (ai, bi)) in rows.iter().enumerate() {
        if mask & (1 << i) != 0 {
            normals.push(ai.clone());
            a.push(ai.to_vec());
            b.push(*bi);
        }
    }
    let x0 = Point::new(solve_consistent(&a, &b, tol.ortho_tol)?).ok()?;
    let normal_span = orthonormalize(&normals, tol).ok()?;
    // p = x - P_N(x - x0) where N is the span of the active normals
    let shifted = x - &x0;
    let in_span = project_subspace(&normal_span, &shifted).ok()?;
    let mut p = x.clone();
    p.add_scaled(-1.0, &in_span);
    debug_assert_eq!(p.dim(), dim);
    Some(p)
}

fn kkt_certificate(
    sys: &HalfspaceSystem,
    x: &Point,
    p: &Point,
    tol: &Tolerances,
) -> Result<KktCertificate> {
    let active_set = sys.active_set(p, tol);
    let columns: Vec<Vec<f64>> = active_set
        .iter()
        .map(|&i| sys.rows()[i].0.to_vec())
        .collect();
    let v = x - p;
    let multipliers = nnls(&columns, v.as_slice(), tol.ortho_tol);
    let mut r = v.to_vec();
    for (mu, col) in multipliers.iter().zip(&columns) {
        for (ri, ci) in r.iter_mut().zip(col) {
            *ri -= mu * ci;
        }
    }
    let residual = r.iter().map(|c| c * c).sum::<f64>().sqrt();
    if residual > 1e-6 * v.norm().max(1.0) {
        return Err(Error::IterationBudget {
            op: "kkt_certificate",
            iterations: 0,
            last: Some(p.clone()),
        });
    }
    Ok(KktCertificate {
        active_set,
        multipliers,
        residual,
    })
}

/// Cyclic Dykstra iteration over the halfspaces, the independent oracle for
/// the exact projector. Rows are visited in fixed order for determinism;
/// the loop stops when the change across a full cycle drops below
/// `root_tol`.
pub fn project_polyhedron_dykstra(
    sys: &HalfspaceSystem,
    x: &Point,
    max_iter: usize,
    tol: &Tolerances,
) -> Result<Point> {
    x.check_dim(sys.dim())?;
    if sys.is_empty() {
        return Ok(x.clone());
    }
    let norms_sq: Vec<f64> = sys.rows().iter().map(|(a, _)| a.norm_sq()).collect();
    let mut z = x.clone();
    let mut corrections = vec![Point::zeros(sys.dim()); sys.len()];
    for _cycle in 0..max_iter {
        let z_prev = z.clone();
        for (i, (a, b)) in sys.rows().iter().enumerate() {
            let mut w = z.clone();
            w.add_scaled(1.0, &corrections[i]);
            let violation = a.dot(&w) - b;
            let mut projected = w.clone();
            if violation > 0.0 {
                projected.add_scaled(-violation / norms_sq[i], a);
            }
            corrections[i] = &w - &projected;
            z = projected;
        }
        if z.dist(&z_prev) < tol.root_tol {
            return Ok(z);
        }
    }
    Err(Error::IterationBudget {
        op: "project_polyhedron_dykstra",
        iterations: max_iter,
        last: Some(z),
    })
}

/// Result of projecting a point of R^3 onto the homogenized cone
/// `cl cone(epi f x {1})`.
#[derive(Clone, Debug)]
pub struct PsiSolveResult {
    /// The minimizing homogenization parameter, `>= 0`.
    pub alpha_star: f64,
    /// The projection onto the cone.
    pub projected: Point,
    /// Minimal value of the auxiliary function, i.e. the squared distance to
    /// the cone.
    pub psi_value: f64,
    /// Derivative evaluations spent by the solve.
    pub iterations: usize,
}

/// The auxiliary function value at `alpha >= 0` for the point `(y1, y2, s)`.
///
/// `alpha = 0` uses the recession cone of the epigraph, which for the
/// supercoercive flat family is `{0} x R+`.
fn psi_value_at(fam: &FlatFamily, y1: f64, y2: f64, s: f64, alpha: f64, tol: &Tolerances) -> Result<f64> {
    if alpha == 0.0 {
        return Ok(y1 * y1 + y2.min(0.0).powi(2) + s * s);
    }
    let z1 = y1 / alpha;
    let z2 = y2 / alpha;
    let p = project_epigraph(fam, z1, z2, tol)?;
    let d_sq = (z1 - p.y) * (z1 - p.y) + (z2 - p.value) * (z2 - p.value);
    Ok(alpha * alpha * d_sq + (alpha - s) * (alpha - s))
}

/// Derivative of the auxiliary function at `alpha > 0`:
/// `-2 alpha <P(y/alpha), y/alpha - P(y/alpha)> + 2 (alpha - s)`.
pub fn psi_derivative(
    fam: &FlatFamily,
    y: &Point,
    s: f64,
    alpha: f64,
    tol: &Tolerances,
) -> Result<f64> {
    y.check_dim(2)?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "psi derivative requires alpha > 0, got {alpha}"
        )));
    }
    psi_derivative_inner(fam, y[0], y[1], s, alpha, tol)
}

fn psi_derivative_inner(
    fam: &FlatFamily,
    y1: f64,
    y2: f64,
    s: f64,
    alpha: f64,
    tol: &Tolerances,
) -> Result<f64> {
    let z1 = y1 / alpha;
    let z2 = y2 / alpha;
    let p = project_epigraph(fam, z1, z2, tol)?;
    let inner = p.y * (z1 - p.y) + p.value * (z2 - p.value);
    Ok(-2.0 * alpha * inner + 2.0 * (alpha - s))
}

/// Right-hand limit of the auxiliary derivative at `alpha = 0`, computed in
/// closed form. Its sign decides whether the minimizer sits at zero.
///
/// For directions inside the recession cone the projector term vanishes;
/// for `y2 > 0` the inner projection escapes along a vertical boundary ray
/// and only the `delta |y1|` part survives; otherwise the projection
/// converges to the graph point supporting the direction `y`.
fn psi_slope_at_zero(fam: &FlatFamily, y1: f64, y2: f64, s: f64, tol: &Tolerances) -> f64 {
    let ay1 = y1.abs();
    if ay1 == 0.0 && y2 >= 0.0 {
        return -2.0 * s;
    }
    let delta = fam.delta();
    if y2 > 0.0 {
        return -2.0 * (delta * ay1 + s);
    }
    // y2 <= 0 and y != 0: support point maximizes ay1*t - |y2|*f(t) on [0, delta]
    let t_star = if ay1 == 0.0 {
        0.0
    } else if y2 == 0.0 {
        delta
    } else {
        let ratio = ay1 / (-y2);
        let fp_delta = fam.evaluate(delta).expect("delta is in the domain").1;
        if fp_delta <= ratio {
            delta
        } else {
            crate::numerics::bisect(
                |t| fam.evaluate(t).expect("t stays in the domain").1 - ratio,
                0.0,
                delta,
                tol.root_tol,
            )
        }
    };
    let f_t = fam.value(t_star).expect("t_star is in the domain");
    let support = ay1 * t_star + y2 * f_t;
    -2.0 * (support + s)
}

/// Project a point of R^3 onto the homogenized cone of `epi f`.
///
/// The minimizer `alpha*` of the strictly convex, supercoercive auxiliary
/// function is located by sign bisection on its derivative: the zero branch
/// is decided from the closed-form right-hand slope at 0, an upper bracket
/// is expanded geometrically from `max(s, root_tol)`, and the bracket is
/// then bisected to machine resolution.
pub fn project_homogenized_cone(
    fam: &FlatFamily,
    point: &Point,
    tol: &Tolerances,
) -> Result<PsiSolveResult> {
    point.check_dim(3)?;
    let (y1, y2, s) = (point[0], point[1], point[2]);

    if psi_slope_at_zero(fam, y1, y2, s, tol) >= 0.0 {
        let projected = Point::new(vec![0.0, y2.max(0.0), 0.0])?;
        let psi_value = psi_value_at(fam, y1, y2, s, 0.0, tol)?;
        return Ok(PsiSolveResult {
            alpha_star: 0.0,
            projected,
            psi_value,
            iterations: 0,
        });
    }

    let scale = 1.0f64.max(y1.abs()).max(y2.abs()).max(s.abs());
    let mut iterations = 0usize;
    let eval = |alpha: f64, iterations: &mut usize| -> Result<f64> {
        *iterations += 1;
        psi_derivative_inner(fam, y1, y2, s, alpha, tol)
    };

    let mut hi = s.max(tol.root_tol);
    let mut expansions = 0;
    while eval(hi, &mut iterations)? <= 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 300 {
            return Err(Error::IterationBudget {
                op: "project_homogenized_cone (bracket expansion)",
                iterations,
                last: None,
            });
        }
    }
    let mut lo = hi * 0.5;
    while lo > 0.0 && eval(lo, &mut iterations)? > 0.0 {
        hi = lo;
        lo *= 0.5;
        if lo < 1e-300 * scale {
            break;
        }
    }

    // bisect the sign change of the (increasing) derivative
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid, &mut iterations)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let alpha_star = 0.5 * (lo + hi);

    let p = project_epigraph(fam, y1 / alpha_star, y2 / alpha_star, tol)?;
    let projected = Point::new(vec![alpha_star * p.y, alpha_star * p.value, alpha_star])?;
    let psi_value = psi_value_at(fam, y1, y2, s, alpha_star, tol)?;
    Ok(PsiSolveResult {
        alpha_star,
        projected,
        psi_value,
        iterations,
    })
}

/// The relaxed projector `(1 - lambda) x + lambda P(x)` for
/// `lambda in ]0, 2]`.
///
/// Evaluated as `x + lambda (P(x) - x)` so that fixed points of the
/// projector are fixed points of the relaxation exactly, with no rounding
/// jitter once an iteration has converged.
pub fn relax(spec: &SetSpec, lambda: f64, x: &Point, tol: &Tolerances) -> Result<Point> {
    if !(lambda > 0.0 && lambda <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation parameter must lie in ]0, 2], got {lambda}"
        )));
    }
    let p = spec.project(x, tol)?;
    if lambda == 1.0 {
        return Ok(p);
    }
    let mut out = x.clone();
    out.add_scaled(lambda, &(&p - x));
    Ok(out)
}

impl SetSpec {
    /// Orthogonal projection onto the set.
    ///
    /// Polyhedral systems within the enumeration cap use the exact
    /// projector; larger ones fall back to Dykstra.
    pub fn project(&self, x: &Point, tol: &Tolerances) -> Result<Point> {
        match self {
            SetSpec::Subspace(basis) => project_subspace(basis, x),
            SetSpec::Affine { basis, offset } => crate::geometry::project_affine(basis, offset, x),
            SetSpec::PolyhedralH(sys) => {
                if sys.len() <= ENUMERATION_ROW_CAP {
                    Ok(project_polyhedron_exact(sys, x, tol)?.point)
                } else {
                    project_polyhedron_dykstra(sys, x, 200_000, tol)
                }
            }
            SetSpec::Epigraph1D(fam) => {
                x.check_dim(2)?;
                let p = project_epigraph(fam, x[0], x[1], tol)?;
                Ok(p.point())
            }
            SetSpec::HomogenizedCone(fam) => {
                Ok(project_homogenized_cone(fam, x, tol)?.projected)
            }
        }
    }

    /// Distance from `x` to the set.
    pub fn distance(&self, x: &Point, tol: &Tolerances) -> Result<f64> {
        Ok(self.project(x, tol)?.dist(x))
    }
}
