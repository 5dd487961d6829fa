//! Contiguity-based spatial weights.
//!
//! Adjacency is decided on coordinates snapped to 1e-9 degrees with exact
//! integer predicates. Queen neighbours share at least one boundary point;
//! rook neighbours share a boundary stretch of positive length. Shared
//! boundaries do not need matching vertex lists on both sides.

use serde::{Deserialize, Serialize};

use super::geometry::{segments_overlap, segments_touch, snap, Region, SnapCoord};
use crate::ingest::CityDataset;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Queen,
    Rook,
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "queen" => Ok(Scheme::Queen),
            "rook" => Ok(Scheme::Rook),
            other => Err(format!("unknown weights scheme `{other}` (expected queen or rook)")),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Queen => "queen",
            Scheme::Rook => "rook",
        })
    }
}

/// Sparse neighbour lists with non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    n: usize,
    neighbors: Vec<Vec<(usize, f64)>>,
    row_standardized: bool,
    s0: f64,
}

impl SpatialWeights {
    /// Binary weights from adjacency lists. Self-loops and duplicates are
    /// dropped; lists are sorted. Panics if an index is out of range.
    pub fn from_adjacency(adjacency: Vec<Vec<usize>>) -> SpatialWeights {
        let n = adjacency.len();
        let neighbors = adjacency
            .into_iter()
            .enumerate()
            .map(|(i, mut row)| {
                assert!(row.iter().all(|&j| j < n), "neighbour index out of range");
                row.sort_unstable();
                row.dedup();
                row.into_iter().filter(|&j| j != i).map(|j| (j, 1.0)).collect()
            })
            .collect();
        SpatialWeights::from_weighted(neighbors, false)
    }

    fn from_weighted(neighbors: Vec<Vec<(usize, f64)>>, row_standardized: bool) -> SpatialWeights {
        let s0 = neighbors.iter().flatten().map(|&(_, w)| w).sum();
        SpatialWeights { n: neighbors.len(), neighbors, row_standardized, s0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn is_row_standardized(&self) -> bool {
        self.row_standardized
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn neighbor_ids(&self, i: usize) -> Vec<usize> {
        self.neighbors[i].iter().map(|&(j, _)| j).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.neighbors.iter().map(Vec::as_slice)
    }

    /// Regions without neighbours.
    pub fn islands(&self) -> Vec<usize> {
        (0..self.n).filter(|&i| self.neighbors[i].is_empty()).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.neighbors.iter().enumerate().all(|(i, row)| {
            row.iter()
                .all(|&(j, _)| self.neighbors[j].binary_search_by_key(&i, |&(k, _)| k).is_ok())
        })
    }

    /// Restricts the weights to the regions in `keep` (indices into this
    /// structure), renumbering them `0..keep.len()`. Binary weights are
    /// carried over; standardized weights are re-standardized.
    pub fn subset(&self, keep: &[usize]) -> SpatialWeights {
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let adjacency = keep
            .iter()
            .map(|&i| {
                self.neighbors[i]
                    .iter()
                    .filter_map(|&(j, _)| (new_index[j] != usize::MAX).then_some(new_index[j]))
                    .collect()
            })
            .collect();
        let binary = SpatialWeights::from_adjacency(adjacency);
        if self.row_standardized {
            row_standardize(&binary)
        } else {
            binary
        }
    }
}

/// Scales each non-empty row to sum to one. Islands stay empty.
pub fn row_standardize(w: &SpatialWeights) -> SpatialWeights {
    let neighbors = w
        .neighbors
        .iter()
        .map(|row| {
            let total: f64 = row.iter().map(|&(_, v)| v).sum();
            if total > 0.0 {
                row.iter().map(|&(j, v)| (j, v / total)).collect()
            } else {
                row.clone()
            }
        })
        .collect();
    SpatialWeights::from_weighted(neighbors, true)
}

/// Binary contiguity weights over a city's block groups, in dataset order.
pub fn contiguity_weights(city: &CityDataset, scheme: Scheme) -> SpatialWeights {
    contiguity_weights_for(city.geometries(), scheme)
}

struct Snapped {
    segments: Vec<(SnapCoord, SnapCoord)>,
    min: SnapCoord,
    max: SnapCoord,
}

fn snapped_region(region: &Region) -> Snapped {
    let mut segments = Vec::new();
    let (mut min, mut max) = ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN));
    for ring in region.rings() {
        for (a, b) in ring.segments() {
            let (a, b) = (snap(a), snap(b));
            for p in [a, b] {
                min = (min.0.min(p.0), min.1.min(p.1));
                max = (max.0.max(p.0), max.1.max(p.1));
            }
            if a != b {
                segments.push((a, b));
            }
        }
    }
    Snapped { segments, min, max }
}

fn segment_in_box(s: &(SnapCoord, SnapCoord), min: SnapCoord, max: SnapCoord) -> bool {
    let (a, b) = s;
    a.0.max(b.0) >= min.0 && a.0.min(b.0) <= max.0 && a.1.max(b.1) >= min.1 && a.1.min(b.1) <= max.1
}

fn adjacent(a: &Snapped, b: &Snapped, scheme: Scheme) -> bool {
    let lo = (a.min.0.max(b.min.0), a.min.1.max(b.min.1));
    let hi = (a.max.0.min(b.max.0), a.max.1.min(b.max.1));
    let near_b: Vec<_> = b.segments.iter().filter(|s| segment_in_box(s, lo, hi)).collect();
    if near_b.is_empty() {
        return false;
    }
    a.segments.iter().filter(|s| segment_in_box(s, lo, hi)).any(|&(p1, p2)| {
        near_b.iter().any(|&&(q1, q2)| match scheme {
            Scheme::Queen => segments_touch(p1, p2, q1, q2),
            Scheme::Rook => segments_overlap(p1, p2, q1, q2),
        })
    })
}

/// Contiguity weights for an arbitrary region list.
pub fn contiguity_weights_for(regions: &[Region], scheme: Scheme) -> SpatialWeights {
    let snapped: Vec<Snapped> = regions.iter().map(snapped_region).collect();
    let mut order: Vec<usize> = (0..regions.len()).collect();
    order.sort_by_key(|&i| (snapped[i].min.0, i));

    let mut adjacency = vec![Vec::new(); regions.len()];
    for (oi, &i) in order.iter().enumerate() {
        let a = &snapped[i];
        for &j in &order[oi + 1..] {
            let b = &snapped[j];
            if b.min.0 > a.max.0 {
                break;
            }
            if b.min.1 > a.max.1 || a.min.1 > b.max.1 {
                continue;
            }
            if adjacent(a, b, scheme) {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    SpatialWeights::from_adjacency(adjacency)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::geometry::{Polygon, Ring};

    fn grid(rows: usize, cols: usize) -> Vec<Region> {
        (0..rows)
            .flat_map(|r| (0..cols).map(move |c| Region::square(c as f64, r as f64, 1.0)))
            .collect()
    }

    #[test]
    fn disjoint_squares_are_islands() {
        let w = contiguity_weights_for(
            &[Region::square(0.0, 0.0, 1.0), Region::square(5.0, 5.0, 1.0)],
            Scheme::Queen,
        );
        assert_eq!(w.islands(), vec![0, 1]);
        assert_eq!(w.s0(), 0.0);
    }

    #[test]
    fn two_by_two_grid_neighbor_counts() {
        let queen = contiguity_weights_for(&grid(2, 2), Scheme::Queen);
        let rook = contiguity_weights_for(&grid(2, 2), Scheme::Rook);
        for i in 0..4 {
            assert_eq!(queen.neighbors(i).len(), 3);
            assert_eq!(rook.neighbors(i).len(), 2);
        }
        assert!(queen.is_symmetric() && rook.is_symmetric());
        // cell 0 is (0,0); its rook neighbours are 1 (right) and 2 (above)
        assert_eq!(rook.neighbor_ids(0), vec![1, 2]);
    }

    #[test]
    fn corner_touch_is_queen_only() {
        let regions = [Region::square(0.0, 0.0, 1.0), Region::square(1.0, 1.0, 1.0)];
        assert_eq!(contiguity_weights_for(&regions, Scheme::Queen).neighbor_ids(0), vec![1]);
        assert!(contiguity_weights_for(&regions, Scheme::Rook).neighbor_ids(0).is_empty());
    }

    #[test]
    fn t_junction_shares_an_edge() {
        // the right rectangle's left edge spans both left squares without a vertex at y = 1
        let regions = [
            Region::square(0.0, 0.0, 1.0),
            Region::square(0.0, 1.0, 1.0),
            Region::polygon(Polygon::new(
                Ring::closed(vec![[1.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, 2.0]]),
                vec![],
            )),
        ];
        let rook = contiguity_weights_for(&regions, Scheme::Rook);
        assert_eq!(rook.neighbor_ids(2), vec![0, 1]);
    }

    #[test]
    fn near_coincident_vertices_snap_together() {
        let regions = [Region::square(0.0, 0.0, 1.0), Region::square(1.0 + 1e-11, 0.0, 1.0)];
        assert_eq!(contiguity_weights_for(&regions, Scheme::Rook).neighbor_ids(0), vec![1]);
    }

    #[test]
    fn row_standardize_cases() {
        let w = SpatialWeights::from_adjacency(vec![vec![1, 2], vec![0], vec![0], vec![]]);
        let r = row_standardize(&w);
        assert_eq!(r.neighbors(0), &[(1, 0.5), (2, 0.5)]);
        assert!(r.neighbors(3).is_empty());
        assert!(r.is_row_standardized());
        assert_eq!(r.s0(), 3.0);

        let rook = row_standardize(&contiguity_weights_for(&grid(2, 2), Scheme::Rook));
        assert!((rook.s0() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn subset_renumbers() {
        let w = contiguity_weights_for(&grid(1, 3), Scheme::Rook);
        let s = w.subset(&[0, 2]);
        assert_eq!(s.n(), 2);
        assert_eq!(s.islands(), vec![0, 1]);
        let s = w.subset(&[1, 2]);
        assert_eq!(s.neighbor_ids(0), vec![1]);
    }
}
