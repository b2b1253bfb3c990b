//! Face-lattice machinery for H-represented polyhedra: enumeration,
//! minimal-face identification, the projection-through-face-hull
//! equivalence, and the subspace decomposition of the polyhedral projector.
//!
//! Faces are canonicalized by their implied-equality sets: a face is stored
//! under the full set of rows tight on all of it, which is exactly the
//! active set at any of its relative-interior points. Relative-interior
//! points are constructed by projecting an anchor into the face and then
//! averaging it with one strictly-slack witness per remaining active row.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::{orthonormalize, project_affine, project_subspace, OrthoBasis, Point, Tolerances};
use crate::numerics::solve_consistent;
use crate::projectors::{polyhedral_nearest, project_polyhedron_exact, ENUMERATION_ROW_CAP};
use crate::sets::HalfspaceSystem;

/// A face of an H-polyhedron: its canonical (implied-equality) active set
/// and an orthonormal basis of its affine hull's direction space.
///
/// For cones the affine hull passes through the origin and equals the span
/// of the face, so no offset is stored.
#[derive(Clone, Debug)]
pub struct FaceDescriptor {
    active_set: Vec<usize>,
    basis: OrthoBasis,
    offset: Option<Point>,
}

impl FaceDescriptor {
    /// Canonical active set: rows tight on the whole face, sorted.
    pub fn active_set(&self) -> &[usize] {
        &self.active_set
    }

    /// Direction space of the face's affine hull (equals `span F` for cone
    /// faces).
    pub fn basis(&self) -> &OrthoBasis {
        &self.basis
    }

    /// A point on the affine hull, absent for cone faces (the hull contains
    /// the origin).
    pub fn offset(&self) -> Option<&Point> {
        self.offset.as_ref()
    }

    /// Dimension of the face.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Projection onto the affine hull of the face: `span F` for cones,
    /// `aff F` in general.
    pub fn project_onto_hull(&self, x: &Point) -> Result<Point> {
        match &self.offset {
            None => project_subspace(&self.basis, x),
            Some(offset) => project_affine(&self.basis, offset, x),
        }
    }
}

/// The complete, canonical face lattice of a polyhedron.
#[derive(Clone, Debug)]
pub struct FaceLattice {
    faces: Vec<FaceDescriptor>,
}

impl FaceLattice {
    pub fn faces(&self) -> &[FaceDescriptor] {
        &self.faces
    }

    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// Face whose canonical active set equals `active` exactly.
    pub fn find_by_active_set(&self, active: &[usize]) -> Option<usize> {
        self.faces.iter().position(|f| f.active_set() == active)
    }
}

fn descriptor_from_active(
    sys: &HalfspaceSystem,
    mut active: Vec<usize>,
    anchor: &Point,
    tol: &Tolerances,
) -> Result<FaceDescriptor> {
    active.sort_unstable();
    active.dedup();
    let basis = if active.is_empty() {
        OrthoBasis::empty(sys.dim()).complement(tol)
    } else {
        let normals: Vec<Point> = active.iter().map(|&i| sys.rows()[i].0.clone()).collect();
        orthonormalize(&normals, tol)?.complement(tol)
    };
    let offset = if sys.is_cone() {
        None
    } else {
        Some(anchor.clone())
    };
    Ok(FaceDescriptor {
        active_set: active,
        basis,
        offset,
    })
}

/// Minimal face containing `c`: the intersection of the polyhedron with the
/// rows active at `c` turned into equalities. `c` automatically lies in its
/// relative interior (every inactive row is strictly slack at `c`).
pub fn identify_face(sys: &HalfspaceSystem, c: &Point, tol: &Tolerances) -> Result<FaceDescriptor> {
    c.check_dim(sys.dim())?;
    let violation = sys.max_violation(c);
    if violation > tol.active_tol {
        return Err(Error::PointOutsideSet { violation });
    }
    let active = sys.active_set(c, tol);
    descriptor_from_active(sys, active, c, tol)
}

enum Reduction {
    Empty,
    Face {
        forced: Vec<usize>,
        x0: Point,
        w_basis: OrthoBasis,
        rows: Vec<(usize, Point, f64)>,
    },
}

/// Restrict the system to the affine set where the subset rows hold with
/// equality, expressed in an orthonormal coordinate frame of that set.
fn reduce(sys: &HalfspaceSystem, subset: &[usize], tol: &Tolerances) -> Reduction {
    let (x0, w_basis) = if subset.is_empty() {
        (
            Point::zeros(sys.dim()),
            OrthoBasis::empty(sys.dim()).complement(tol),
        )
    } else {
        let a: Vec<Vec<f64>> = subset.iter().map(|&i| sys.rows()[i].0.to_vec()).collect();
        let b: Vec<f64> = subset.iter().map(|&i| sys.rows()[i].1).collect();
        let Some(x0) = solve_consistent(&a, &b, tol.ortho_tol) else {
            return Reduction::Empty;
        };
        let normals: Vec<Point> = subset.iter().map(|&i| sys.rows()[i].0.clone()).collect();
        let span = orthonormalize(&normals, tol).expect("dimensions agree");
        (
            Point::new(x0).expect("solver output is finite"),
            span.complement(tol),
        )
    };

    let mut forced = Vec::new();
    let mut rows = Vec::new();
    for (j, (a, b)) in sys.rows().iter().enumerate() {
        if subset.contains(&j) {
            continue;
        }
        let h = b - a.dot(&x0);
        let g = w_basis
            .coords(a)
            .expect("row dimension matches the system");
        let g_norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
        if g_norm <= tol.active_tol * a.norm().max(1.0) {
            // the row is constant on the affine set
            if h < -tol.active_tol {
                return Reduction::Empty;
            }
            if h <= tol.active_tol {
                forced.push(j);
            }
            continue;
        }
        let g = Point::new(g).expect("coordinates are finite");
        rows.push((j, g, h));
    }
    Reduction::Face {
        forced,
        x0,
        w_basis,
        rows,
    }
}

/// A relative-interior point of `{ w : g_j . w <= h_j }` together with the
/// rows tight on the whole set, or `None` when the set is empty.
///
/// One strictly-slack witness is sought per row active at an initial
/// feasible point; rows admitting no witness down to the smallest margin
/// are classified as implied equalities. For cone-like systems (all
/// `h = 0`) a single unit margin is exact, since witnesses scale.
fn relint_point(
    rows: &[(usize, Point, f64)],
    dim: usize,
    tol: &Tolerances,
) -> Option<(Point, Vec<usize>)> {
    let plain: Vec<(Point, f64)> = rows.iter().map(|(_, g, h)| (g.clone(), *h)).collect();
    let anchor = Point::zeros(dim);
    let p0 = polyhedral_nearest(&plain, dim, &anchor, tol)?;

    let h_scale = rows.iter().fold(1.0f64, |acc, (_, _, h)| acc.max(h.abs()));
    let conic = rows.iter().all(|(_, _, h)| *h == 0.0);
    let margins: &[f64] = if conic { &[1.0] } else { &[1e-1, 1e-3, 1e-6] };

    let mut witnesses: Vec<Point> = Vec::new();
    for (k, (_, g, h)) in rows.iter().enumerate() {
        if (g.dot(&p0) - h).abs() > tol.active_tol {
            continue; // already strictly slack at p0
        }
        let mut anchor_k = p0.clone();
        anchor_k.add_scaled(-1.0, g);
        for &m in margins {
            let margin = m * h_scale;
            let mut tightened = plain.clone();
            tightened[k].1 = h - margin;
            if let Some(w) = polyhedral_nearest(&tightened, dim, &anchor_k, tol) {
                witnesses.push(w);
                break;
            }
        }
        // no witness at any margin: the row is implied, handled below by the
        // activity classification at the averaged point
    }

    let mut q = p0;
    for w in &witnesses {
        q.add_scaled(1.0, w);
    }
    let q = q.scaled(1.0 / (1.0 + witnesses.len() as f64));

    let implied: Vec<usize> = rows
        .iter()
        .filter(|(_, g, h)| (g.dot(&q) - h).abs() <= tol.active_tol)
        .map(|(j, _, _)| *j)
        .collect();
    Some((q, implied))
}

/// Enumerate every face of the polyhedron, canonicalized by implied-equality
/// closure, each certified by a relative-interior point.
pub fn enumerate_faces(sys: &HalfspaceSystem, tol: &Tolerances) -> Result<FaceLattice> {
    let m = sys.len();
    if m > ENUMERATION_ROW_CAP {
        return Err(Error::RowCapExceeded {
            rows: m,
            cap: ENUMERATION_ROW_CAP,
        });
    }
    let mut seen: BTreeMap<Vec<usize>, FaceDescriptor> = BTreeMap::new();
    for mask in 0u32..(1u32 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let (forced, x0, w_basis, rows) = match reduce(sys, &subset, tol) {
            Reduction::Empty => continue,
            Reduction::Face {
                forced,
                x0,
                w_basis,
                rows,
            } => (forced, x0, w_basis, rows),
        };
        let (relint, extra) = if w_basis.is_empty() {
            (x0.clone(), Vec::new())
        } else {
            let Some((q_reduced, implied)) = relint_point(&rows, w_basis.len(), tol) else {
                continue; // the face is empty
            };
            let mut q = x0.clone();
            for (c, b) in q_reduced.as_slice().iter().zip(w_basis.vectors()) {
                q.add_scaled(*c, b);
            }
            (q, implied)
        };
        let mut canonical = subset;
        canonical.extend(forced);
        canonical.extend(extra);
        canonical.sort_unstable();
        canonical.dedup();
        if !seen.contains_key(&canonical) {
            let descriptor = descriptor_from_active(sys, canonical.clone(), &relint, tol)?;
            seen.insert(canonical, descriptor);
        }
    }
    let mut faces: Vec<FaceDescriptor> = seen.into_values().collect();
    faces.sort_by(|a, b| {
        (a.active_set.len(), &a.active_set).cmp(&(b.active_set.len(), &b.active_set))
    });
    Ok(FaceLattice { faces })
}

/// Both routes to a polyhedral projection: directly, and through the affine
/// hull (span, for cones) of the minimal face of the projection.
#[derive(Clone, Debug)]
pub struct SpanProjectionCheck {
    pub direct: Point,
    pub via_face_hull: Point,
    pub residual: f64,
}

/// Verify that projecting onto the polyhedron agrees with projecting onto
/// the affine hull of the minimal face containing the projection.
pub fn face_span_projection_check(
    sys: &HalfspaceSystem,
    x: &Point,
    tol: &Tolerances,
) -> Result<SpanProjectionCheck> {
    let proj = project_polyhedron_exact(sys, x, tol)?;
    let via_face_hull = proj.face.project_onto_hull(x)?;
    let residual = proj.point.dist(&via_face_hull);
    Ok(SpanProjectionCheck {
        direct: proj.point,
        via_face_hull,
        residual,
    })
}

/// Both routes of the decomposition `P_C = P_K + P_D P_{K_perp}`, where `K`
/// is the intersection of the row kernels and `D = C` restricted to
/// `K_perp`.
#[derive(Clone, Debug)]
pub struct DecompositionCheck {
    pub direct: Point,
    pub composed: Point,
    pub residual: f64,
}

/// Compare the direct polyhedral projection against the composition through
/// the kernel subspace `K` and the reduced polyhedron `D` living in
/// `K_perp`.
pub fn decompose_projection(
    sys: &HalfspaceSystem,
    x: &Point,
    tol: &Tolerances,
) -> Result<DecompositionCheck> {
    x.check_dim(sys.dim())?;
    let direct = project_polyhedron_exact(sys, x, tol)?.point;

    let composed = if sys.is_empty() {
        // no rows: K is the whole space and the projector is the identity
        x.clone()
    } else {
        let normals: Vec<Point> = sys.rows().iter().map(|(a, _)| a.clone()).collect();
        let row_span = orthonormalize(&normals, tol)?; // orthonormal frame of K_perp
        let reduced_rows: Vec<(Point, f64)> = sys
            .rows()
            .iter()
            .map(|(a, b)| Ok((Point::new(row_span.coords(a)?)?, *b)))
            .collect::<Result<_>>()?;
        let reduced_feasible = Point::new(row_span.coords(sys.feasible_point())?)?;
        let reduced_sys =
            HalfspaceSystem::new(reduced_rows, row_span.len(), &reduced_feasible, tol)?;

        let w = row_span.coords(x)?;
        let d_proj = project_polyhedron_exact(&reduced_sys, &Point::new(w.clone())?, tol)?.point;

        // P_K x = x - P_{K_perp} x
        let mut composed = x.clone();
        composed.add_scaled(-1.0, &row_span.from_coords(&w)?);
        composed.add_scaled(1.0, &row_span.from_coords(d_proj.as_slice())?);
        composed
    };

    let residual = direct.dist(&composed);
    Ok(DecompositionCheck {
        direct,
        composed,
        residual,
    })
}

/// For each sample, the index of the unique face whose relative interior
/// contains it (`None` when no unique face matches, which fails the check).
#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub face_of_sample: Vec<Option<usize>>,
    pub pass: bool,
}

/// Verify that the relative interiors of the enumerated faces partition the
/// polyhedron, by matching each sample's active set against the canonical
/// active sets of the lattice.
pub fn partition_check(
    sys: &HalfspaceSystem,
    samples: &[Point],
    tol: &Tolerances,
) -> Result<PartitionReport> {
    let lattice = enumerate_faces(sys, tol)?;
    let mut face_of_sample = Vec::with_capacity(samples.len());
    for sample in samples {
        sample.check_dim(sys.dim())?;
        let violation = sys.max_violation(sample);
        if violation > tol.active_tol {
            return Err(Error::PointOutsideSet { violation });
        }
        let active = sys.active_set(sample, tol);
        let matches: Vec<usize> = lattice
            .faces()
            .iter()
            .enumerate()
            .filter(|(_, f)| f.active_set() == active.as_slice())
            .map(|(i, _)| i)
            .collect();
        face_of_sample.push(if matches.len() == 1 {
            Some(matches[0])
        } else {
            None
        });
    }
    let pass = face_of_sample.iter().all(Option::is_some);
    Ok(PartitionReport {
        face_of_sample,
        pass,
    })
}
