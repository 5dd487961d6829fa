//! Planar polygon types over lon/lat degrees and the point-in-polygon kernel.
//!
//! Coordinates are treated as planar; block groups are small enough that the
//! distortion is irrelevant for containment and adjacency.

use thiserror::Error;

/// `[lon, lat]` in degrees.
pub type Coord = [f64; 2];

/// Snapping resolution used for exact topology tests: 1e-9 degrees.
pub const SNAP_SCALE: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("ring is not closed (first and last positions differ)")]
    Unclosed,
    #[error("ring has {distinct} distinct vertices, at least 3 are required")]
    Degenerate { distinct: usize },
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("ring self-intersects")]
    SelfIntersecting,
    #[error("geometry has no polygons")]
    Empty,
    #[error("unsupported geometry type `{0}` (expected Polygon or MultiPolygon)")]
    Unsupported(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub const EMPTY: BBox = BBox {
        min_x: f64::INFINITY,
        min_y: f64::INFINITY,
        max_x: f64::NEG_INFINITY,
        max_y: f64::NEG_INFINITY,
    };

    pub fn extend(&mut self, c: Coord) {
        self.min_x = self.min_x.min(c[0]);
        self.min_y = self.min_y.min(c[1]);
        self.max_x = self.max_x.max(c[0]);
        self.max_y = self.max_y.max(c[1]);
    }

    pub fn union(mut self, other: &BBox) -> BBox {
        self.min_x = self.min_x.min(other.min_x);
        self.min_y = self.min_y.min(other.min_y);
        self.max_x = self.max_x.max(other.max_x);
        self.max_y = self.max_y.max(other.max_y);
        self
    }

    pub fn contains(&self, p: Coord) -> bool {
        p[0] >= self.min_x && p[0] <= self.max_x && p[1] >= self.min_y && p[1] <= self.max_y
    }
}

/// A closed ring: the first and last positions are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring(Vec<Coord>);

impl Ring {
    /// Builds a ring, closing it if the last position does not repeat the first.
    pub fn closed(mut coords: Vec<Coord>) -> Ring {
        if let (Some(first), Some(last)) = (coords.first().copied(), coords.last().copied()) {
            if first != last {
                coords.push(first);
            }
        }
        Ring(coords)
    }

    /// Wraps positions as given; [`Ring::validate`] reports an unclosed ring.
    pub fn from_positions(coords: Vec<Coord>) -> Ring {
        Ring(coords)
    }

    pub fn coords(&self) -> &[Coord] {
        &self.0
    }

    /// Consecutive vertex pairs, closing segment included.
    pub fn segments(&self) -> impl Iterator<Item = (Coord, Coord)> + '_ {
        self.0.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn distinct_vertices(&self) -> usize {
        let mut keys: Vec<(u64, u64)> = self
            .0
            .iter()
            .map(|c| ((c[0] + 0.0).to_bits(), (c[1] + 0.0).to_bits()))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }

    /// Closure, finiteness and the 3-distinct-vertex minimum.
    pub fn check_basic(&self) -> Result<(), GeometryError> {
        if self.0.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let distinct = self.distinct_vertices();
        if distinct < 3 {
            return Err(GeometryError::Degenerate { distinct });
        }
        if self.0.first() != self.0.last() {
            return Err(GeometryError::Unclosed);
        }
        Ok(())
    }

    /// Full validation: [`Ring::check_basic`] plus a simple-ring test on the
    /// snapped coordinates.
    pub fn validate(&self) -> Result<(), GeometryError> {
        self.check_basic()?;
        if ring_self_intersects(&self.snapped()) {
            return Err(GeometryError::SelfIntersecting);
        }
        Ok(())
    }

    /// Vertices snapped to the 1e-9 degree grid with consecutive duplicates
    /// removed. The result is closed.
    pub fn snapped(&self) -> Vec<SnapCoord> {
        let mut out: Vec<SnapCoord> = Vec::with_capacity(self.0.len());
        for c in &self.0 {
            let s = snap(*c);
            if out.last() != Some(&s) {
                out.push(s);
            }
        }
        out
    }

    fn on_boundary(&self, p: Coord) -> bool {
        self.segments().any(|(a, b)| point_on_segment(p, a, b))
    }

    fn crossings_toggle(&self, p: Coord) -> bool {
        let mut inside = false;
        for (a, b) in self.segments() {
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub exterior: Ring,
    pub holes: Vec<Ring>,
}

impl Polygon {
    pub fn new(exterior: Ring, holes: Vec<Ring>) -> Polygon {
        Polygon { exterior, holes }
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        std::iter::once(&self.exterior).chain(self.holes.iter())
    }

    /// Even-odd containment; boundary points (hole boundaries included) are inside.
    pub fn contains(&self, p: Coord) -> bool {
        if self.rings().any(|r| r.on_boundary(p)) {
            return true;
        }
        self.rings().fold(false, |acc, r| acc ^ r.crossings_toggle(p))
    }
}

/// The geometry of one block group: a polygon or a multipolygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    polygons: Vec<Polygon>,
    multi: bool,
    bbox: BBox,
}

impl Region {
    pub fn polygon(polygon: Polygon) -> Region {
        Region::build(vec![polygon], false)
    }

    pub fn multi_polygon(polygons: Vec<Polygon>) -> Region {
        Region::build(polygons, true)
    }

    fn build(polygons: Vec<Polygon>, multi: bool) -> Region {
        let bbox = polygons
            .iter()
            .flat_map(|p| p.exterior.coords())
            .fold(BBox::EMPTY, |mut b, c| {
                b.extend(*c);
                b
            });
        Region { polygons, multi, bbox }
    }

    /// Axis-aligned square `[x0, x0+size] x [y0, y0+size]`, counter-clockwise.
    pub fn square(x0: f64, y0: f64, size: f64) -> Region {
        Region::polygon(Polygon::new(
            Ring::closed(vec![[x0, y0], [x0 + size, y0], [x0 + size, y0 + size], [x0, y0 + size]]),
            vec![],
        ))
    }

    pub fn polygons(&self) -> &[Polygon] {
        &self.polygons
    }

    pub fn is_multi(&self) -> bool {
        self.multi
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    pub fn rings(&self) -> impl Iterator<Item = &Ring> {
        self.polygons.iter().flat_map(|p| p.rings())
    }

    /// Checks every ring for closure, finiteness, degeneracy and
    /// self-intersection.
    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.polygons.is_empty() {
            return Err(GeometryError::Empty);
        }
        self.rings().try_for_each(Ring::validate)
    }

    /// Containment for a validated region. Points on the boundary are inside.
    pub fn contains(&self, p: Coord) -> bool {
        self.bbox.contains(p) && self.polygons.iter().any(|poly| poly.contains(p))
    }
}

/// Even-odd point-in-polygon test with boundary points counted as inside.
///
/// ```
/// use atlas_core::geo::{point_in_polygon, Region};
///
/// let unit = Region::square(0.0, 0.0, 1.0);
/// assert!(point_in_polygon([0.5, 0.5], &unit).unwrap());
/// assert!(point_in_polygon([1.0, 0.5], &unit).unwrap());
/// assert!(!point_in_polygon([2.0, 2.0], &unit).unwrap());
/// ```
pub fn point_in_polygon(p: Coord, region: &Region) -> Result<bool, GeometryError> {
    if region.polygons.is_empty() {
        return Err(GeometryError::Empty);
    }
    region.rings().try_for_each(Ring::check_basic)?;
    Ok(region.contains(p))
}

fn point_on_segment(p: Coord, a: Coord, b: Coord) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    cross == 0.0
        && p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

// ---------------------------------------------------------------------------
// Exact integer predicates on snapped coordinates.

pub type SnapCoord = (i64, i64);

pub fn snap(c: Coord) -> SnapCoord {
    ((c[0] * SNAP_SCALE).round() as i64, (c[1] * SNAP_SCALE).round() as i64)
}

pub(crate) fn orient(a: SnapCoord, b: SnapCoord, c: SnapCoord) -> i8 {
    let v = (b.0 - a.0) as i128 * (c.1 - a.1) as i128 - (b.1 - a.1) as i128 * (c.0 - a.0) as i128;
    v.signum() as i8
}

fn within(a: SnapCoord, b: SnapCoord, p: SnapCoord) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed segments share at least one point.
pub(crate) fn segments_touch(p1: SnapCoord, p2: SnapCoord, q1: SnapCoord, q2: SnapCoord) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if d1 * d2 < 0 && d3 * d4 < 0 {
        return true;
    }
    (d1 == 0 && within(q1, q2, p1))
        || (d2 == 0 && within(q1, q2, p2))
        || (d3 == 0 && within(p1, p2, q1))
        || (d4 == 0 && within(p1, p2, q2))
}

/// Segments are collinear and overlap along a positive length.
pub(crate) fn segments_overlap(p1: SnapCoord, p2: SnapCoord, q1: SnapCoord, q2: SnapCoord) -> bool {
    if p1 == p2 || q1 == q2 || orient(p1, p2, q1) != 0 || orient(p1, p2, q2) != 0 {
        return false;
    }
    let (pa, pb, qa, qb) = if p1.0 != p2.0 {
        (p1.0, p2.0, q1.0, q2.0)
    } else {
        (p1.1, p2.1, q1.1, q2.1)
    };
    let lo = pa.min(pb).max(qa.min(qb));
    let hi = pa.max(pb).min(qa.max(qb));
    lo < hi
}

/// Simple-ring test on a closed, deduplicated snapped vertex list.
fn ring_self_intersects(v: &[SnapCoord]) -> bool {
    let m = v.len().saturating_sub(1);
    if m < 3 {
        return false;
    }
    let segs: Vec<(SnapCoord, SnapCoord)> = (0..m).map(|i| (v[i], v[i + 1])).collect();
    let adjacent = |i: usize, j: usize| j == i + 1 || (i == 0 && j == m - 1);

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| segs[i].0 .0.min(segs[i].1 .0));
    for (oi, &i) in order.iter().enumerate() {
        let (a, b) = segs[i];
        let max_x = a.0.max(b.0);
        for &j in &order[oi + 1..] {
            let (c, d) = segs[j];
            if c.0.min(d.0) > max_x {
                break;
            }
            if a.1.max(b.1) < c.1.min(d.1) || c.1.max(d.1) < a.1.min(b.1) {
                continue;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            if adjacent(lo, hi) {
                // Neighbouring edges meet at one vertex; a collinear fold-back is a spike.
                if segments_overlap(a, b, c, d) {
                    return true;
                }
            } else if segments_touch(a, b, c, d) {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Region {
        Region::square(0.0, 0.0, 1.0)
    }

    #[test]
    fn unit_square_cases() {
        assert!(point_in_polygon([0.5, 0.5], &unit()).unwrap());
        assert!(!point_in_polygon([2.0, 2.0], &unit()).unwrap());
        assert!(point_in_polygon([1.0, 0.5], &unit()).unwrap());
        assert!(point_in_polygon([0.0, 0.0], &unit()).unwrap());
        assert!(point_in_polygon([1.0, 1.0], &unit()).unwrap());
        assert!(!point_in_polygon([1.0 + 1e-12, 0.5], &unit()).unwrap());
    }

    #[test]
    fn holes_and_multipolygons() {
        let outer = Ring::closed(vec![[0.0, 0.0], [4.0, 0.0], [4.0, 4.0], [0.0, 4.0]]);
        let hole = Ring::closed(vec![[1.0, 1.0], [3.0, 1.0], [3.0, 3.0], [1.0, 3.0]]);
        let donut = Region::polygon(Polygon::new(outer, vec![hole]));
        assert!(donut.contains([0.5, 0.5]));
        assert!(!donut.contains([2.0, 2.0]));
        // hole boundary is polygon boundary
        assert!(donut.contains([1.0, 2.0]));

        let multi = Region::multi_polygon(vec![
            Polygon::new(Ring::closed(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), vec![]),
            Polygon::new(Ring::closed(vec![[5.0, 5.0], [6.0, 5.0], [6.0, 6.0], [5.0, 6.0]]), vec![]),
        ]);
        assert!(multi.contains([5.5, 5.5]));
        assert!(multi.contains([0.5, 0.5]));
        assert!(!multi.contains([3.0, 3.0]));
    }

    #[test]
    fn degenerate_polygon_is_an_error() {
        let flat = Region::polygon(Polygon::new(
            Ring::from_positions(vec![[0.0, 0.0], [1.0, 1.0], [0.0, 0.0]]),
            vec![],
        ));
        assert_eq!(
            point_in_polygon([0.5, 0.5], &flat),
            Err(GeometryError::Degenerate { distinct: 2 })
        );
    }

    #[test]
    fn validation_rejects_bow_tie_and_unclosed() {
        let bow = Ring::closed(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(bow.validate(), Err(GeometryError::SelfIntersecting));
        let open = Ring::from_positions(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert_eq!(open.validate(), Err(GeometryError::Unclosed));
        let spike = Ring::closed(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert_eq!(spike.validate(), Err(GeometryError::SelfIntersecting));
        assert!(Ring::closed(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
            .validate()
            .is_ok());
    }

    #[test]
    fn concave_ring_is_simple() {
        let l_shape = Ring::closed(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [2.0, 1.0],
            [1.0, 1.0],
            [1.0, 2.0],
            [0.0, 2.0],
        ]);
        assert!(l_shape.validate().is_ok());
        let r = Region::polygon(Polygon::new(l_shape, vec![]));
        assert!(!r.contains([1.5, 1.5]));
        assert!(r.contains([0.5, 1.5]));
    }

    #[test]
    fn exact_segment_predicates() {
        assert!(segments_touch((0, 0), (2, 0), (2, 0), (2, 2)));
        assert!(!segments_overlap((0, 0), (2, 0), (2, 0), (2, 2)));
        assert!(segments_overlap((0, 0), (2, 0), (1, 0), (3, 0)));
        assert!(!segments_overlap((0, 0), (2, 0), (2, 0), (3, 0)));
        assert!(!segments_touch((0, 0), (1, 0), (0, 1), (1, 1)));
    }
}
