//! Scene geometry for RIS placement.
//!
//! The room is an axis-aligned box containing a source `S`, a destination
//! `D`, an eavesdropper `E`, and a planar rectangular obstacle that blocks
//! the direct `S`-`D` path. A candidate RIS position must see both `S` and
//! `D` past the obstacle. Visibility is modelled with two half-space tests:
//! the plane through `S` and the obstacle's free vertical edge, and the
//! plane through `D` and the same edge. A point on the open `S` side of the
//! first plane has an unobstructed `S` link, and symmetrically for `D`.
//! The half-space tests are what the placement search optimizes against;
//! [`segment_blocked`] is the exact segment-rectangle intersection used to
//! cross-check them.

use serde::Deserialize;
use thiserror::Error;

/// A point or direction in 3-space, in metres.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Deserialized from the three-element array form `[x, y, z]`.
impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D>(deserializer: D) -> Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        let [x, y, z] = <[f64; 3]>::deserialize(deserializer)?;
        Ok(Vec3::new(x, y, z))
    }
}

impl Vec3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl std::ops::Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

/// Euclidean distance between two points.
pub fn distance(a: Vec3, b: Vec3) -> f64 {
    (a - b).norm()
}

/// The four corners of the planar rectangular obstacle.
///
/// `lower_left`/`upper_left` are the bottom and top of the free edge the
/// search can route around; `lower_right`/`upper_right` usually sit against
/// a wall. The corners must be coplanar.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct Obstacle {
    pub lower_left: Vec3,
    pub upper_left: Vec3,
    pub lower_right: Vec3,
    pub upper_right: Vec3,
}

impl Obstacle {
    pub fn centre(&self) -> Vec3 {
        (self.lower_left + self.upper_left + self.lower_right + self.upper_right) * 0.25
    }
}

/// Closed axis-aligned box the RIS may be mounted in.
#[derive(Clone, Copy, Debug, Deserialize)]
pub struct Bounds {
    pub x: (f64, f64),
    pub y: (f64, f64),
    pub z: (f64, f64),
}

impl Bounds {
    pub fn contains(&self, p: Vec3) -> bool {
        self.x.0 <= p.x
            && p.x <= self.x.1
            && self.y.0 <= p.y
            && p.y <= self.y.1
            && self.z.0 <= p.z
            && p.z <= self.z.1
    }

    /// The eight corner points of the box.
    pub fn corners(&self) -> [Vec3; 8] {
        let (x0, x1) = self.x;
        let (y0, y1) = self.y;
        let (z0, z1) = self.z;
        [
            Vec3::new(x0, y0, z0),
            Vec3::new(x0, y0, z1),
            Vec3::new(x0, y1, z0),
            Vec3::new(x0, y1, z1),
            Vec3::new(x1, y0, z0),
            Vec3::new(x1, y0, z1),
            Vec3::new(x1, y1, z0),
            Vec3::new(x1, y1, z1),
        ]
    }
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("{node} position {position:?} is outside the room")]
    NodeOutsideRoom { node: &'static str, position: Vec3 },
    #[error("obstacle corners are not coplanar (off-plane distance {distance:.3e} m)")]
    ObstacleNotPlanar { distance: f64 },
    #[error("RIS bounds box is empty or extends outside the room")]
    InvalidBounds,
    #[error("far-field radius must be positive, got {0}")]
    InvalidFarField(f64),
    #[error("{node} is coplanar with the obstacle edge; the visibility plane is degenerate")]
    DegeneratePlane { node: &'static str },
}

/// Static description of the deployment: room, node positions, obstacle,
/// RIS mounting bounds, and the far-field radius every link must respect.
#[derive(Clone, Debug)]
pub struct Scene {
    pub room: Vec3,
    pub source: Vec3,
    pub destination: Vec3,
    pub eavesdropper: Vec3,
    pub obstacle: Obstacle,
    pub bounds: Bounds,
    pub far_field: f64,
}

/// Maximum distance a corner of the obstacle may sit off the plane of the
/// other three before the scene is rejected.
const COPLANARITY_TOL: f64 = 1e-9;

impl Scene {
    pub fn new(
        room: Vec3,
        source: Vec3,
        destination: Vec3,
        eavesdropper: Vec3,
        obstacle: Obstacle,
        bounds: Bounds,
        far_field: f64,
    ) -> Result<Scene, GeometryError> {
        let scene = Scene {
            room,
            source,
            destination,
            eavesdropper,
            obstacle,
            bounds,
            far_field,
        };
        scene.validate()?;
        Ok(scene)
    }

    fn validate(&self) -> Result<(), GeometryError> {
        let room_box = Bounds {
            x: (0.0, self.room.x),
            y: (0.0, self.room.y),
            z: (0.0, self.room.z),
        };
        for (node, p) in [
            ("source", self.source),
            ("destination", self.destination),
            ("eavesdropper", self.eavesdropper),
        ] {
            if !room_box.contains(p) {
                return Err(GeometryError::NodeOutsideRoom { node, position: p });
            }
        }

        let o = &self.obstacle;
        let n = (o.lower_right - o.lower_left).cross(o.upper_left - o.lower_left);
        let nn = n.norm();
        if nn > 0.0 {
            let d = (o.upper_right - o.lower_left).dot(n).abs() / nn;
            if d > COPLANARITY_TOL {
                return Err(GeometryError::ObstacleNotPlanar { distance: d });
            }
        }

        let b = &self.bounds;
        let ordered = b.x.0 <= b.x.1 && b.y.0 <= b.y.1 && b.z.0 <= b.z.1;
        let inside = room_box.contains(Vec3::new(b.x.0, b.y.0, b.z.0))
            && room_box.contains(Vec3::new(b.x.1, b.y.1, b.z.1));
        if !ordered || !inside {
            return Err(GeometryError::InvalidBounds);
        }

        if !(self.far_field > 0.0) {
            return Err(GeometryError::InvalidFarField(self.far_field));
        }
        Ok(())
    }

    /// Source-destination distance.
    pub fn d_sd(&self) -> f64 {
        distance(self.source, self.destination)
    }
}

/// Calibrated normals of the two visibility planes. `beta1` belongs to the
/// plane through the source and the obstacle's free edge; a candidate point
/// `p` has a clear source link when `beta1 . (p - p_S) > 0`. `beta2` belongs
/// to the plane through the destination and the same edge; the destination
/// link is clear when `beta2 . (p - p_D) < 0`.
#[derive(Clone, Copy, Debug)]
pub struct PlaneNormals {
    pub beta1: Vec3,
    pub beta2: Vec3,
}

/// Builds the two visibility-plane normals.
///
/// Each normal is the cross product of the vectors from the node to the
/// obstacle's lower-left and upper-left corners. Signs are calibrated
/// against the obstacle centre, which is blocked on both links by
/// construction: the centre must evaluate non-positive through `beta1`
/// (source side) and non-negative through `beta2` (destination side).
pub fn plane_normals(scene: &Scene) -> Result<PlaneNormals, GeometryError> {
    let o = &scene.obstacle;
    let centre = o.centre();

    let build = |node: Vec3, name: &'static str, blocked_sign: f64| {
        let u = o.lower_left - node;
        let v = o.upper_left - node;
        let beta = u.cross(v);
        let scale = u.norm() * v.norm();
        if beta.norm() <= 1e-12 * scale.max(1e-300) {
            return Err(GeometryError::DegeneratePlane { node: name });
        }
        let probe = beta.dot(centre - node);
        if probe.abs() <= 1e-9 * beta.norm() * (centre - node).norm() {
            return Err(GeometryError::DegeneratePlane { node: name });
        }
        // Flip so the obstacle centre lands on the blocked side.
        if probe * blocked_sign < 0.0 {
            Ok(beta * -1.0)
        } else {
            Ok(beta)
        }
    };

    Ok(PlaneNormals {
        beta1: build(scene.source, "source", -1.0)?,
        beta2: build(scene.destination, "destination", 1.0)?,
    })
}

/// Half-space line-of-sight tests for a candidate RIS position.
///
/// Returns `(source_clear, destination_clear)`. Both tests are strict:
/// points exactly on a visibility plane are classified not-clear.
pub fn los_clear(p: Vec3, scene: &Scene, normals: &PlaneNormals) -> (bool, bool) {
    (
        normals.beta1.dot(p - scene.source) > 0.0,
        normals.beta2.dot(p - scene.destination) < 0.0,
    )
}

/// Exact geometric occlusion test: does the open segment `(a, b)` intersect
/// the closed obstacle rectangle?
///
/// A segment lying inside the obstacle's plane counts as blocked where it
/// overlaps the rectangle. Degenerate segments (`a == b`) are never blocked.
pub fn segment_blocked(a: Vec3, b: Vec3, scene: &Scene) -> bool {
    let o = &scene.obstacle;
    let origin = o.lower_left;
    let e1 = o.lower_right - origin;
    let e2 = o.upper_left - origin;
    let n = e1.cross(e2);
    let dir = b - a;
    let seg_len = dir.norm();
    if seg_len == 0.0 {
        return false;
    }

    let denom = n.dot(dir);
    if denom.abs() <= 1e-14 * n.norm() * seg_len {
        // Segment parallel to the obstacle plane.
        let off = n.dot(a - origin).abs();
        if off > 1e-12 * n.norm() * (1.0 + seg_len) {
            return false;
        }
        return coplanar_overlap(a, b, origin, e1, e2);
    }

    let t = n.dot(origin - a) / denom;
    if t <= 0.0 || t >= 1.0 {
        return false;
    }
    let p = a + dir * t;
    let s1 = (p - origin).dot(e1) / e1.dot(e1);
    let s2 = (p - origin).dot(e2) / e2.dot(e2);
    (0.0..=1.0).contains(&s1) && (0.0..=1.0).contains(&s2)
}

/// Clips an in-plane segment against the rectangle's parameter square.
fn coplanar_overlap(a: Vec3, b: Vec3, origin: Vec3, e1: Vec3, e2: Vec3) -> bool {
    let coords = |p: Vec3| {
        (
            (p - origin).dot(e1) / e1.dot(e1),
            (p - origin).dot(e2) / e2.dot(e2),
        )
    };
    let (a1, a2) = coords(a);
    let (b1, b2) = coords(b);
    // Liang-Barsky interval clip of the segment against [0,1]^2.
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p0, d) in [(a1, b1 - a1), (a2, b2 - a2)] {
        if d == 0.0 {
            if p0 < 0.0 || p0 > 1.0 {
                return false;
            }
            continue;
        }
        let (mut lo, mut hi) = ((0.0 - p0) / d, (1.0 - p0) / d);
        if lo > hi {
            std::mem::swap(&mut lo, &mut hi);
        }
        t0 = t0.max(lo);
        t1 = t1.min(hi);
        if t0 > t1 {
            return false;
        }
    }
    // The segment is open, so demand a crossing with positive extent inside.
    t1 > 0.0 && t0 < 1.0
}

/// Far-field check: the candidate must be at least the far-field radius away
/// from the source, the destination, and the eavesdropper. The comparison is
/// closed (exactly the radius passes).
pub fn far_field_ok(p: Vec3, scene: &Scene) -> bool {
    distance(p, scene.source) >= scene.far_field
        && distance(p, scene.destination) >= scene.far_field
        && distance(p, scene.eavesdropper) >= scene.far_field
}

/// Largest source distance and largest destination distance over the eight
/// corners of the RIS bounds box. These cap the placement search's distance
/// grids.
pub fn corner_distances(scene: &Scene) -> (f64, f64) {
    let mut d_si_max: f64 = 0.0;
    let mut d_id_max: f64 = 0.0;
    for c in scene.bounds.corners() {
        d_si_max = d_si_max.max(distance(scene.source, c));
        d_id_max = d_id_max.max(distance(scene.destination, c));
    }
    (d_si_max, d_id_max)
}

/// Merge threshold for near-tangent intersection pairs, in metres.
const TANGENT_MERGE: f64 = 1e-9;

/// Intersects the sphere of radius `d_si` around the source with the sphere
/// of radius `d_id` around the destination, restricted to the horizontal
/// plane at height `z`. Returns zero, one, or two candidate points; a
/// near-tangent pair closer than [`TANGENT_MERGE`] collapses to one point.
pub fn circle_intersection(z: f64, d_si: f64, d_id: f64, scene: &Scene) -> Vec<Vec3> {
    if d_si <= 0.0 || d_id <= 0.0 {
        return Vec::new();
    }
    let rs2 = d_si * d_si - (z - scene.source.z) * (z - scene.source.z);
    let rd2 = d_id * d_id - (z - scene.destination.z) * (z - scene.destination.z);
    if rs2 < 0.0 || rd2 < 0.0 {
        return Vec::new();
    }

    let (cx, cy) = (scene.source.x, scene.source.y);
    let (dx, dy) = (
        scene.destination.x - cx,
        scene.destination.y - cy,
    );
    let d2 = dx * dx + dy * dy;
    if d2 <= 1e-24 {
        // Concentric circles: either nothing or a full circle; no discrete
        // candidates to enumerate.
        return Vec::new();
    }
    let d = d2.sqrt();

    let along = (rs2 - rd2 + d2) / (2.0 * d);
    let h2 = rs2 - along * along;
    // Floating-point slack proportional to the magnitudes entering h2.
    let fp_tol = 1e-13 * (rs2 + rd2 + d2 + 1.0);
    if h2 < -fp_tol {
        return Vec::new();
    }
    let h = h2.max(0.0).sqrt();

    let (ux, uy) = (dx / d, dy / d);
    let base = Vec3::new(cx + along * ux, cy + along * uy, z);
    if h2 <= fp_tol || 2.0 * h <= TANGENT_MERGE {
        return vec![base];
    }
    // Perpendicular offsets, fixed order for determinism.
    let perp = Vec3::new(-uy, ux, 0.0);
    vec![base + perp * h, base + perp * (-h)]
}
