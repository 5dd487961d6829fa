//! Independent oracles and fixture helpers shared by the integration tests
//! and the acceptance harness. Nothing here calls the algorithms it checks.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use atlas_core::app::RunConfig;
use atlas_core::geo::Region;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/two_city")
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/two_city")
}

/// The fixture config with outputs redirected to `out`.
pub fn fixture_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixture_dir().join("config.json")).expect("fixture config");
    cfg.output_dir = out.to_path_buf();
    cfg
}

pub fn facts() -> serde_json::Value {
    let text = std::fs::read_to_string(fixture_dir().join("facts.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

/// Queen adjacency of a `rows x cols` lattice numbered row-major, from index
/// arithmetic alone.
pub fn lattice_queen(rows: usize, cols: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); rows * cols];
    for r in 0..rows as i64 {
        for c in 0..cols as i64 {
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (nr, nc) = (r + dr, c + dc);
                    if (dr, dc) != (0, 0) && (0..rows as i64).contains(&nr) && (0..cols as i64).contains(&nc) {
                        adj[(r * cols as i64 + c) as usize].push((nr * cols as i64 + nc) as usize);
                    }
                }
            }
        }
    }
    adj
}

/// Rook adjacency of the same lattice.
pub fn lattice_rook(rows: usize, cols: usize) -> Vec<Vec<usize>> {
    lattice_queen(rows, cols)
        .into_iter()
        .enumerate()
        .map(|(i, ns)| {
            ns.into_iter()
                .filter(|&j| i / cols == j / cols || i % cols == j % cols)
                .collect()
        })
        .collect()
}

/// Dense row-standardized weights from adjacency lists.
pub fn dense_row_standardized(adj: &[Vec<usize>]) -> Vec<Vec<f64>> {
    adj.iter()
        .map(|ns| {
            let mut row = vec![0.0; adj.len()];
            for &j in ns {
                row[j] = 1.0 / ns.len() as f64;
            }
            row
        })
        .collect()
}

/// Moran's I as the plain double sum over a dense matrix.
pub fn naive_moran(x: &[f64], w: &[Vec<f64>]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut num, mut s0, mut den) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        den += (x[i] - mean) * (x[i] - mean);
        for j in 0..x.len() {
            num += w[i][j] * (x[i] - mean) * (x[j] - mean);
            s0 += w[i][j];
        }
    }
    n / s0 * num / den
}

/// Minimum total within-class SSD over every partition of the sorted values
/// into `k` non-empty contiguous classes.
pub fn exhaustive_jenks_ssd(xs: &[f64], k: usize) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    fn ssd(s: &[f64]) -> f64 {
        let m = s.iter().sum::<f64>() / s.len() as f64;
        s.iter().map(|x| (x - m) * (x - m)).sum()
    }
    fn best(v: &[f64], k: usize) -> f64 {
        if k == 1 {
            return ssd(v);
        }
        (1..=v.len() - (k - 1))
            .map(|e| ssd(&v[..e]) + best(&v[e..], k - 1))
            .fold(f64::INFINITY, f64::min)
    }
    best(&v, k)
}

/// Total within-class SSD of the classes induced by `breaks` (class maxima).
pub fn ssd_for_breaks(xs: &[f64], breaks: &[f64]) -> f64 {
    let mut classes = vec![Vec::new(); breaks.len() + 1];
    for &x in xs {
        classes[breaks.iter().filter(|&&b| b < x).count()].push(x);
    }
    classes
        .iter()
        .filter(|c| !c.is_empty())
        .map(|c| {
            let m = c.iter().sum::<f64>() / c.len() as f64;
            c.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
        })
        .sum()
}

/// Winding-number containment with explicit on-segment detection, so
/// boundary points count as inside.
pub fn winding_contains(region: &Region, p: [f64; 2]) -> bool {
    region.polygons().iter().any(|poly| {
        let rings: Vec<&[[f64; 2]]> = poly.rings().map(|r| r.coords()).collect();
        if rings.iter().any(|r| on_ring(r, p)) {
            return true;
        }
        let inside_outer = winding(rings[0], p) != 0;
        inside_outer && !rings[1..].iter().any(|h| winding(h, p) != 0)
    })
}

fn on_ring(ring: &[[f64; 2]], p: [f64; 2]) -> bool {
    ring.windows(2).any(|s| {
        let (a, b) = (s[0], s[1]);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        cross == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
    })
}

fn winding(ring: &[[f64; 2]], p: [f64; 2]) -> i32 {
    let mut wn = 0;
    for s in ring.windows(2) {
        let (a, b) = (s[0], s[1]);
        let side = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if a[1] <= p[1] {
            if b[1] > p[1] && side > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && side < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Index of the first region (in slice order) containing `p`, by testing
/// every region.
pub fn naive_locate(regions: &[Region], p: [f64; 2]) -> Option<usize> {
    regions.iter().position(|r| winding_contains(r, p))
}

/// Median by full sort.
pub fn sort_median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 }
}

/// Every file under `dir` as (relative path, bytes), sorted.
pub fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(base, &path, out);
            } else {
                let rel = path.strip_prefix(base).unwrap().to_string_lossy().replace('\\', "/");
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

/// Copies the tree at `from` to `to`, replacing `to`.
pub fn replace_tree(from: &Path, to: &Path) {
    if to.exists() {
        std::fs::remove_dir_all(to).unwrap();
    }
    for (rel, bytes) in read_tree(from) {
        let dest = to.join(rel);
        std::fs::create_dir_all(dest.parent().unwrap()).unwrap();
        std::fs::write(dest, bytes).unwrap();
    }
}
