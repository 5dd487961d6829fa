mod common;

use atlas_core::geo::{assign_points, spatial_join, GridIndex};
use atlas_core::ingest::{filter_abr, load_block_groups, load_crimes};
use rand::Rng;

fn city_a() -> atlas_core::ingest::CityDataset {
    let dir = common::fixture_dir().join("citya");
    load_block_groups("citya", &dir.join("attributes.csv"), &dir.join("blockgroups.geojson")).unwrap()
}

#[test]
fn fixture_counts_match_construction() {
    let city = city_a();
    let crimes = load_crimes(&common::fixture_dir().join("citya/crimes.csv")).unwrap();
    let abr = filter_abr(&crimes.incidents);
    let join = spatial_join(&abr, &city);
    let facts = common::facts();
    assert_eq!(join.unassigned, facts["citya_unassigned"].as_u64().unwrap());
    for (geoid, count) in facts["citya_abr_counts"].as_object().unwrap() {
        assert_eq!(join.count_for(&city, geoid), count.as_u64(), "{geoid}");
    }
    assert_eq!(join.assigned() + join.unassigned, abr.len() as u64);
    assert_eq!(join.total(), abr.len() as u64);
}

#[test]
fn random_points_match_naive_oracle() {
    let city = city_a();
    let regions = city.geometries();
    let mut rng = common::rng(7);
    let mut points: Vec<[f64; 2]> = (0..5_000)
        .map(|_| [rng.gen_range(-87.72..-87.58), rng.gen_range(41.78..41.87)])
        .collect();
    // exact vertices and edge midpoints land on shared boundaries
    for r in regions.iter().take(12) {
        for c in r.polygons()[0].exterior.coords() {
            points.push(*c);
        }
        let [a, b] = [r.polygons()[0].exterior.coords()[0], r.polygons()[0].exterior.coords()[1]];
        points.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
    }
    let got = assign_points(&points, regions);
    let index = GridIndex::build(regions);
    for (p, g) in points.iter().zip(&got) {
        let want = common::naive_locate(regions, *p);
        assert_eq!(*g, want, "{p:?}");
        assert_eq!(index.locate(regions, *p), want);
    }
}
