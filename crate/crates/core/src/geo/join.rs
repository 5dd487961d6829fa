use rayon::prelude::*;

use super::geometry::{BBox, Coord, Region};
use crate::ingest::{CityDataset, CrimeIncident};

/// Uniform grid over the union of region bounding boxes. Each cell lists, in
/// ascending order, the regions whose bounding box overlaps it.
#[derive(Debug, Clone)]
pub struct GridIndex {
    bbox: BBox,
    nx: usize,
    ny: usize,
    cells: Vec<Vec<u32>>,
}

impl GridIndex {
    pub fn build(regions: &[Region]) -> GridIndex {
        let bbox = regions.iter().fold(BBox::EMPTY, |b, r| b.union(&r.bbox()));
        if regions.is_empty() {
            return GridIndex { bbox, nx: 1, ny: 1, cells: vec![Vec::new()] };
        }
        let (w, h) = (bbox.max_x - bbox.min_x, bbox.max_y - bbox.min_y);
        let target = (regions.len() * 4) as f64;
        let (nx, ny) = if w > 0.0 && h > 0.0 {
            let nx = (target * w / h).sqrt().ceil().clamp(1.0, 4096.0) as usize;
            let ny = (target / nx as f64).ceil().clamp(1.0, 4096.0) as usize;
            (nx, ny)
        } else {
            (1, 1)
        };
        let mut index = GridIndex { bbox, nx, ny, cells: vec![Vec::new(); nx * ny] };
        for (k, r) in regions.iter().enumerate() {
            let rb = r.bbox();
            let (x0, x1) = (index.col(rb.min_x), index.col(rb.max_x));
            let (y0, y1) = (index.row(rb.min_y), index.row(rb.max_y));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    index.cells[y * nx + x].push(k as u32);
                }
            }
        }
        index
    }

    // Same monotone mapping for points and boxes, so a point inside a region's
    // box always falls in one of that region's cells.
    fn col(&self, x: f64) -> usize {
        axis_cell(x, self.bbox.min_x, self.bbox.max_x, self.nx)
    }

    fn row(&self, y: f64) -> usize {
        axis_cell(y, self.bbox.min_y, self.bbox.max_y, self.ny)
    }

    pub fn candidates(&self, p: Coord) -> &[u32] {
        if !self.bbox.contains(p) {
            return &[];
        }
        &self.cells[self.row(p[1]) * self.nx + self.col(p[0])]
    }

    /// Index of the first region (lowest index) containing `p`.
    pub fn locate(&self, regions: &[Region], p: Coord) -> Option<usize> {
        self.candidates(p)
            .iter()
            .map(|&k| k as usize)
            .find(|&k| regions[k].contains(p))
    }
}

fn axis_cell(v: f64, lo: f64, hi: f64, n: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let t = ((v - lo) / (hi - lo) * n as f64).floor();
    (t.max(0.0) as usize).min(n - 1)
}

/// Per-block-group incident counts, aligned with the city's block-group order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinResult {
    pub counts: Vec<u64>,
    pub unassigned: u64,
}

impl JoinResult {
    /// Incidents that landed in some block group.
    pub fn assigned(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Every incident joined, assigned or not.
    pub fn total(&self) -> u64 {
        self.assigned() + self.unassigned
    }

    pub fn count_for(&self, city: &CityDataset, geoid: &str) -> Option<u64> {
        city.position(geoid).map(|i| self.counts[i])
    }
}

/// Assigns each point to the lowest-index region containing it.
///
/// Runs on the current rayon pool; the result does not depend on the number
/// of threads.
pub fn assign_points(points: &[Coord], regions: &[Region]) -> Vec<Option<usize>> {
    let index = GridIndex::build(regions);
    points.par_iter().map(|&p| index.locate(regions, p)).collect()
}

/// Counts incidents per block group. Block groups are sorted by geoid, so a
/// point on a shared boundary goes to the smallest geoid.
pub fn spatial_join(incidents: &[CrimeIncident], city: &CityDataset) -> JoinResult {
    let points: Vec<Coord> = incidents.iter().map(|i| [i.lon, i.lat]).collect();
    tally(&assign_points(&points, city.geometries()), city.len())
}

pub(crate) fn tally(assignments: &[Option<usize>], n: usize) -> JoinResult {
    let mut counts = vec![0u64; n];
    let mut unassigned = 0;
    for a in assignments {
        match a {
            Some(k) => counts[*k] += 1,
            None => unassigned += 1,
        }
    }
    JoinResult { counts, unassigned }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn outside_point_is_unassigned() {
        let regions = vec![Region::square(0.0, 0.0, 1.0)];
        let a = assign_points(&[[5.0, 5.0]], &regions);
        let j = tally(&a, 1);
        assert_eq!(j, JoinResult { counts: vec![0], unassigned: 1 });
    }

    #[test]
    fn shared_edge_goes_to_lowest_index() {
        let regions = vec![Region::square(0.0, 0.0, 1.0), Region::square(1.0, 0.0, 1.0)];
        assert_eq!(assign_points(&[[1.0, 0.5]], &regions), vec![Some(0)]);
        assert_eq!(assign_points(&[[2.0, 1.0]], &regions), vec![Some(1)]);
    }

    #[test]
    fn degenerate_extent_uses_single_cell() {
        let index = GridIndex::build(&[]);
        assert!(index.candidates([0.0, 0.0]).is_empty());
    }
}
