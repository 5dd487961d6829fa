mod common;

use atlas_core::app::{load_city, prepare_reference};
use atlas_core::indices::build_index_bundle;
use atlas_core::selection::{
    median_table, select_top_deprived, select_trivariate, zscore_table, Group, MedianTriple, TopMode,
};
use atlas_core::Variable;
use proptest::prelude::*;

struct Fixture {
    reference: atlas_core::app::Reference,
    city: atlas_core::ingest::CityDataset,
    bundle: atlas_core::indices::IndexBundle,
}

fn fixture() -> Fixture {
    let out = tempfile::tempdir().unwrap();
    let cfg = common::fixture_config(out.path());
    let reference = prepare_reference(&cfg).unwrap();
    let loaded = load_city(cfg.city("citya").unwrap()).unwrap();
    let bundle = build_index_bundle(&loaded.dataset, &reference.loaded.dataset, &loaded.join).unwrap();
    Fixture { reference, city: loaded.dataset, bundle }
}

/// The three criteria straight from the bundle, for the brute-force filter.
fn criteria(f: &Fixture) -> Vec<(String, f64, f64, f64)> {
    f.bundle
        .rows
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let bg = &f.city.block_groups()[r];
            (bg.geoid.clone(), bg.perc_snap, f.bundle.abrpop[k], bg.perc_vac)
        })
        .collect()
}

fn brute_force(rows: &[(String, f64, f64, f64)], m: &MedianTriple) -> Vec<String> {
    rows.iter()
        .filter(|r| r.1 > m.med_snap && r.2 > m.med_abr && r.3 > m.med_vac)
        .map(|r| r.0.clone())
        .collect()
}

#[test]
fn reference_medians_match_sort_oracle() {
    let f = fixture();
    let rb = &f.reference.bundle;
    let rc = &f.reference.loaded.dataset;
    let snap: Vec<f64> = rb.rows.iter().map(|&r| rc.block_groups()[r].perc_snap).collect();
    let vac: Vec<f64> = rb.rows.iter().map(|&r| rc.block_groups()[r].perc_vac).collect();
    let m = &f.reference.medians;
    assert_eq!(m.med_snap, common::sort_median(&snap));
    assert_eq!(m.med_abr, common::sort_median(&rb.abrpop));
    assert_eq!(m.med_vac, common::sort_median(&vac));
    let facts = common::facts();
    let want: Vec<f64> = facts["reference_medians"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(vec![m.med_snap, m.med_abr, m.med_vac], want);
}

#[test]
fn trivariate_selects_the_engineered_nine() {
    let f = fixture();
    let sel = select_trivariate(&f.city, &f.bundle, &f.reference.medians).unwrap();
    let facts = common::facts();
    let want: Vec<String> =
        facts["citya_selected"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().into()).collect();
    assert_eq!(sel.geoids.iter().cloned().collect::<Vec<_>>(), want);
    assert_eq!(brute_force(&criteria(&f), &f.reference.medians), want);
    assert!(!sel.contains(facts["citya_equal_to_medians"].as_str().unwrap()));
    assert!(!sel.contains(facts["citya_zero_population"].as_str().unwrap()));
    assert_eq!(sel.n_eligible, 49);
}

#[test]
fn top_deprived_matches_sort_oracle() {
    let f = fixture();
    let mut order: Vec<(f64, String)> =
        f.bundle.sd4det.iter().copied().zip(f.bundle.geoids.iter().cloned()).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for n in [1, 5, 9, 49] {
        let sel = select_top_deprived(&f.city, &f.bundle, TopMode::Count(n)).unwrap();
        let mut want: Vec<String> = order[..n].iter().map(|o| o.1.clone()).collect();
        want.sort();
        assert_eq!(sel.geoids.into_iter().collect::<Vec<_>>(), want);
    }
    // 10% of 49 rounds to 5
    let frac = select_top_deprived(&f.city, &f.bundle, TopMode::Fraction(0.10)).unwrap();
    assert_eq!(frac.n_selected, 5);
    // same-size groups generally differ in membership
    let tri = select_trivariate(&f.city, &f.bundle, &f.reference.medians).unwrap();
    let same = select_top_deprived(&f.city, &f.bundle, TopMode::Count(tri.n_selected)).unwrap();
    assert_eq!(same.n_selected, tri.n_selected);
    assert_ne!(same.geoids, tri.geoids);
}

#[test]
fn tables_against_oracles() {
    let f = fixture();
    let tri = select_trivariate(&f.city, &f.bundle, &f.reference.medians).unwrap();
    let vars = Variable::COMPARISON;
    let t = median_table(&f.city, &f.bundle, &[Group::city("City"), Group::selected("Selected", &tri)], &vars).unwrap();
    for (row, &var) in vars.iter().enumerate() {
        let column = f.bundle.column(&f.city, var);
        let all: Vec<f64> = column.iter().flatten().copied().collect();
        let sel: Vec<f64> = column
            .iter()
            .zip(&f.bundle.geoids)
            .filter(|(_, g)| tri.contains(g))
            .filter_map(|(v, _)| *v)
            .collect();
        assert_eq!(t.cells[row][0], Some(common::sort_median(&all)), "{var}");
        assert_eq!(t.cells[row][1], Some(common::sort_median(&sel)), "{var}");
        // every selected value strictly exceeds the reference median on the criteria
        let floor = match var {
            Variable::PercSnap => Some(f.reference.medians.med_snap),
            Variable::AbrPop => Some(f.reference.medians.med_abr),
            Variable::PercVac => Some(f.reference.medians.med_vac),
            _ => None,
        };
        if let Some(floor) = floor {
            assert!(t.cells[row][1].unwrap() >= floor);
        }
    }
    let all = select_top_deprived(&f.city, &f.bundle, TopMode::Count(f.bundle.len())).unwrap();
    let z = zscore_table(&f.city, &f.bundle, "All", &all, &vars).unwrap();
    for row in &z.cells {
        assert!(row[0].unwrap().abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn selection_equals_brute_force_and_is_monotone(
        snap in 0.0f64..100.0, abr in 0.0f64..0.02, vac in 0.0f64..100.0,
        d_snap in 0.0f64..20.0, d_abr in 0.0f64..0.005, d_vac in 0.0f64..20.0,
    ) {
        let f = fixture_cached();
        let m = MedianTriple { source_city: "refcity".into(), med_snap: snap, med_abr: abr, med_vac: vac };
        let sel = select_trivariate(&f.city, &f.bundle, &m).unwrap();
        prop_assert_eq!(sel.geoids.iter().cloned().collect::<Vec<_>>(), brute_force(&criteria(f), &m));
        let raised = MedianTriple { med_snap: snap + d_snap, med_abr: abr + d_abr, med_vac: vac + d_vac, ..m };
        let smaller = select_trivariate(&f.city, &f.bundle, &raised).unwrap();
        prop_assert!(smaller.geoids.is_subset(&sel.geoids));
    }
}

fn fixture_cached() -> &'static Fixture {
    static CELL: std::sync::OnceLock<Fixture> = std::sync::OnceLock::new();
    CELL.get_or_init(fixture)
}
