//! OPNS geometric primitives: construction from points, duality, the meet
//! operator with intersection classification, plane normals and
//! point-to-plane projection.
//!
//! Primitives are stored unnormalized (homogeneous); every predicate is
//! scale-invariant.  A primitive X represents the set of conformal points P
//! with P ∧ X = 0 (outer product null space).

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::ga::{blade, embed_point, extract_point, mask, Multivector};
use crate::motor::Motor;

/// Coefficient-norm threshold below which a construction is degenerate.
const DEGENERACY_TOL: f64 = 1e-12;

/// Tagged OPNS primitive kinds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PrimitiveKind {
    Point,
    PointPair,
    Line,
    Circle,
    Plane,
    Sphere,
}

impl PrimitiveKind {
    /// Static blade set of this primitive kind.
    pub fn mask(&self) -> u32 {
        match self {
            PrimitiveKind::Point => mask::POINT,
            PrimitiveKind::PointPair => mask::POINT_PAIR,
            PrimitiveKind::Line => mask::LINE,
            PrimitiveKind::Circle => mask::CIRCLE,
            PrimitiveKind::Plane => mask::PLANE,
            PrimitiveKind::Sphere => mask::SPHERE,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PrimitiveKind::Point => "point",
            PrimitiveKind::PointPair => "pointpair",
            PrimitiveKind::Line => "line",
            PrimitiveKind::Circle => "circle",
            PrimitiveKind::Plane => "plane",
            PrimitiveKind::Sphere => "sphere",
        }
    }
}

/// A tagged OPNS primitive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Primitive {
    pub kind: PrimitiveKind,
    pub mv: Multivector,
}

impl Primitive {
    /// Motor-transform the primitive (the sandwich preserves its kind).
    pub fn transformed(&self, m: &Motor) -> Primitive {
        Primitive { kind: self.kind, mv: m.sandwich(&self.mv).restricted(self.kind.mask()) }
    }

    /// Scale-invariant OPNS incidence residual of a conformal point:
    /// ‖P ∧ X‖ / (‖P‖·‖X‖).
    pub fn incidence(&self, p: &Multivector) -> f64 {
        p.outer(&self.mv).coeff_norm() / (p.coeff_norm() * self.mv.coeff_norm()).max(1e-300)
    }
}

fn check_degenerate(kind: PrimitiveKind, mv: Multivector) -> Result<Primitive> {
    let norm = mv.coeff_norm();
    let mut degenerate = norm < DEGENERACY_TOL;
    // Collinear circle / coplanar sphere constructions wedge to a flat
    // (line/plane-like) blade containing e∞ as a factor rather than to zero.
    if !degenerate && matches!(kind, PrimitiveKind::Circle | PrimitiveKind::Sphere) {
        let flat = Multivector::basis(blade::EI).outer(&mv).coeff_norm();
        degenerate = flat < DEGENERACY_TOL * norm;
    }
    if degenerate {
        return Err(Error::Degenerate {
            what: kind.name(),
            detail: "constructing points are coincident/collinear/coplanar".into(),
        });
    }
    Ok(Primitive { kind, mv: mv.restricted(kind.mask()) })
}

pub fn make_point(x: Vector3<f64>) -> Primitive {
    Primitive { kind: PrimitiveKind::Point, mv: embed_point(x) }
}

/// PP = P1 ∧ P2.
pub fn make_point_pair(p1: &Multivector, p2: &Multivector) -> Result<Primitive> {
    check_degenerate(PrimitiveKind::PointPair, p1.outer(p2))
}

/// L = P1 ∧ P2 ∧ e∞.
pub fn make_line(p1: &Multivector, p2: &Multivector) -> Result<Primitive> {
    check_degenerate(
        PrimitiveKind::Line,
        p1.outer(p2).outer(&Multivector::basis(blade::EI)),
    )
}

/// C = P1 ∧ P2 ∧ P3.
pub fn make_circle(p1: &Multivector, p2: &Multivector, p3: &Multivector) -> Result<Primitive> {
    check_degenerate(PrimitiveKind::Circle, p1.outer(p2).outer(p3))
}

/// E = P1 ∧ P2 ∧ P3 ∧ e∞.
pub fn make_plane(p1: &Multivector, p2: &Multivector, p3: &Multivector) -> Result<Primitive> {
    check_degenerate(
        PrimitiveKind::Plane,
        p1.outer(p2).outer(p3).outer(&Multivector::basis(blade::EI)),
    )
}

/// S = P1 ∧ P2 ∧ P3 ∧ P4.
pub fn make_sphere(
    p1: &Multivector,
    p2: &Multivector,
    p3: &Multivector,
    p4: &Multivector,
) -> Result<Primitive> {
    check_degenerate(PrimitiveKind::Sphere, p1.outer(p2).outer(p3).outer(p4))
}

/// The meet (intersection) operator V = (B* ∧ A*)*.
pub fn meet(a: &Multivector, b: &Multivector) -> Multivector {
    b.dual().outer(&a.dual()).dual()
}

/// Result of splitting a point pair into its constituent points.
#[derive(Clone, Debug)]
pub struct PointPairSplit {
    pub p1: Multivector,
    pub p2: Multivector,
    /// Squared radius of the pair; < 0 flags an imaginary pair (e.g. the
    /// meet of a line with a sphere it misses), in which case `p1` and `p2`
    /// both hold the real center surrogate.
    pub squared_radius: f64,
}

/// Decompose a point pair T into its two points via the standard split
/// P± = (T ± √⟨T⊗T⟩₀) ⊗ n⁻¹ with n = e∞ · T.
pub fn point_pair_decompose(pp: &Multivector) -> Result<PointPairSplit> {
    let t = pp.restricted(mask::POINT_PAIR);
    let n = Multivector::basis(blade::EI).inner(&t);
    let n2 = n.scalar_pair(&n);
    let scale2 = t.coeff_norm().powi(2);
    if n2.abs() < DEGENERACY_TOL * scale2.max(DEGENERACY_TOL) {
        return Err(Error::Domain(
            "point pair has degenerate e∞ contraction (flat point / direction pair)".into(),
        ));
    }
    let n_inv = n * (1.0 / n2);
    let disc = t.geometric(&t).scalar_part();
    let squared_radius = disc / n2;
    let s = disc.max(0.0).sqrt();
    let extract = |shift: f64| -> Multivector {
        let q = (t + Multivector::scalar(shift)).geometric(&n_inv);
        q.restricted(mask::POINT)
    };
    Ok(PointPairSplit { p1: extract(s), p2: extract(-s), squared_radius })
}

/// Unit normal of a plane per n = E* − ½(E*·e0)e∞, read as a Euclidean
/// direction.
pub fn plane_normal(e: &Primitive) -> Result<Vector3<f64>> {
    let dual = e.mv.dual();
    let corr = dual.inner(&Multivector::basis(blade::E0)).scalar_part();
    let n = dual - Multivector::basis(blade::EI) * (0.5 * corr);
    let v = Vector3::new(n.coeff(blade::E1), n.coeff(blade::E2), n.coeff(blade::E3));
    let len = v.norm();
    if len < DEGENERACY_TOL {
        return Err(Error::Domain("degenerate plane: zero normal".into()));
    }
    Ok(v / len)
}

/// Orthogonal projection of a point onto a plane: P' = (E·P) ⊗ E⁻¹,
/// renormalized to an exact conformal point.
pub fn project_point_to_plane(p: &Multivector, e: &Primitive) -> Result<Multivector> {
    let e2 = e.mv.geometric(&e.mv).scalar_part();
    if e2.abs() < DEGENERACY_TOL * e.mv.coeff_norm().powi(2).max(DEGENERACY_TOL) {
        return Err(Error::Domain("plane is not invertible (zero E⊗E scalar part)".into()));
    }
    let e_inv = e.mv * (1.0 / e2);
    let proj = e.mv.inner(p).geometric(&e_inv).grade_project(1)?;
    let x = extract_point(&proj)?;
    Ok(embed_point(x))
}

/// Squared radius of a sphere, from its normalized dual σ: r² = σ·σ.
pub fn sphere_squared_radius(s: &Primitive) -> Result<f64> {
    let dual = s.mv.dual();
    let w = dual.coeff(blade::E0);
    if w.abs() < DEGENERACY_TOL {
        return Err(Error::Domain("degenerate sphere dual".into()));
    }
    let sigma = dual * (1.0 / w);
    Ok(sigma.inner(&sigma).scalar_part())
}

/// Geometric data of a circle: center, unit axis (carrier-plane normal) and
/// radius, recovered from the OPNS representation.
pub struct CircleGeometry {
    pub center: Vector3<f64>,
    pub axis: Vector3<f64>,
    pub radius: f64,
}

/// Recover center/axis/radius of a circle.  The carrier plane is C ∧ e∞;
/// the center is the sphere-center formula applied to the dual pair, read
/// via the sandwich C e∞ C.
pub fn circle_geometry(c: &Primitive) -> Result<CircleGeometry> {
    let carrier = Primitive {
        kind: PrimitiveKind::Plane,
        mv: c.mv.outer(&Multivector::basis(blade::EI)).restricted(mask::PLANE),
    };
    if carrier.mv.coeff_norm() < DEGENERACY_TOL {
        return Err(Error::Domain("degenerate circle: collinear construction".into()));
    }
    let axis = plane_normal(&carrier)?;
    // Center: C e∞ C is a scaled conformal point at the circle's center.
    let z = c.mv.geometric(&Multivector::basis(blade::EI)).geometric(&c.mv);
    let center = extract_point(&z.grade_project(1)?)?;
    // Squared radius of a round: r² = ⟨C⊗C⟩₀ / ⟨n⊗n⟩₀ with n = e∞·C.
    let n = Multivector::basis(blade::EI).inner(&c.mv);
    let n2 = n.scalar_pair(&n);
    if n2.abs() < DEGENERACY_TOL {
        return Err(Error::Domain("degenerate circle: flat".into()));
    }
    let r2 = c.mv.geometric(&c.mv).scalar_part() / n2;
    if r2 < 0.0 {
        return Err(Error::Domain("imaginary circle".into()));
    }
    Ok(CircleGeometry { center, axis, radius: r2.sqrt() })
}

/// Parse a CLI primitive literal:
/// `point:x,y,z`, `pointpair:p1;p2`, `line:p1;p2`, `circle:p1;p2;p3`,
/// `plane:p1;p2;p3`, `sphere:p1;p2;p3;p4` with each point `x,y,z`.
pub fn parse_primitive(text: &str) -> Result<Primitive> {
    let (kind, rest) = text
        .split_once(':')
        .ok_or_else(|| Error::Config(format!("primitive literal '{text}' missing ':'")))?;
    let points: Vec<Vector3<f64>> = rest
        .split(';')
        .map(|p| {
            let coords: Vec<f64> = p
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| {
                        Error::Config(format!("bad coordinate '{c}' in primitive literal"))
                    })
                })
                .collect::<Result<_>>()?;
            if coords.len() != 3 {
                return Err(Error::Config(format!("point '{p}' needs exactly 3 coordinates")));
            }
            Ok(Vector3::new(coords[0], coords[1], coords[2]))
        })
        .collect::<Result<_>>()?;
    let expect = |n: usize| -> Result<()> {
        if points.len() != n {
            Err(Error::Config(format!("{kind} literal needs {n} points, got {}", points.len())))
        } else {
            Ok(())
        }
    };
    let embed = |i: usize| embed_point(points[i]);
    match kind {
        "point" => {
            expect(1)?;
            Ok(make_point(points[0]))
        }
        "pointpair" => {
            expect(2)?;
            make_point_pair(&embed(0), &embed(1))
        }
        "line" => {
            expect(2)?;
            make_line(&embed(0), &embed(1))
        }
        "circle" => {
            expect(3)?;
            make_circle(&embed(0), &embed(1), &embed(2))
        }
        "plane" => {
            expect(3)?;
            make_plane(&embed(0), &embed(1), &embed(2))
        }
        "sphere" => {
            expect(4)?;
            make_sphere(&embed(0), &embed(1), &embed(2), &embed(3))
        }
        other => Err(Error::Config(format!("unknown primitive kind '{other}'"))),
    }
}
