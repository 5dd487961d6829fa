//! Per-block-group derived measures: ABR crimes per capita and the three
//! deprivation indices.
//!
//! The standard-deviation-weighted index is
//! `DEP = POV/σ_pov + SNAP/σ_snap + UNEMP/σ_unemp + NOHS/σ_nohs`,
//! evaluated with either the city's own σ (SD4OWN) or the reference city's σ
//! (SD4DET). PCA4 is the first principal component score of the four
//! standardized components, computed per city.

use thiserror::Error;

use crate::geo::JoinResult;
use crate::ingest::{BlockGroup, CityDataset};
use crate::stats::{self, pca_first_component, StatsError};
use crate::variable::Variable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("{city}: {variable} has zero variance; cannot weight by its standard deviation")]
    ZeroVariance { city: String, variable: Variable },
    #[error("{city}: need at least 2 block groups to compute standard deviations, got {got}")]
    TooFewBlockGroups { city: String, got: usize },
    #[error("block group {geoid} has population 0; per-capita rate undefined")]
    ZeroPopulation { geoid: String },
    #[error("join counts cover {got} block groups, city has {expected}")]
    JoinMismatch { expected: usize, got: usize },
    #[error("{city}: principal component: {source}")]
    Pca {
        city: String,
        #[source]
        source: StatsError,
    },
}

/// Sample standard deviations of the four deprivation components.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaVector {
    pub source_city: String,
    pub sigma_pov: f64,
    pub sigma_snap: f64,
    pub sigma_unemp: f64,
    pub sigma_nohs: f64,
}

impl SigmaVector {
    /// Panics unless every σ is finite and strictly positive.
    pub fn new(source_city: impl Into<String>, sigmas: [f64; 4]) -> SigmaVector {
        assert!(
            sigmas.iter().all(|s| s.is_finite() && *s > 0.0),
            "sigmas must be positive: {sigmas:?}"
        );
        let [sigma_pov, sigma_snap, sigma_unemp, sigma_nohs] = sigmas;
        SigmaVector { source_city: source_city.into(), sigma_pov, sigma_snap, sigma_unemp, sigma_nohs }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.sigma_pov, self.sigma_snap, self.sigma_unemp, self.sigma_nohs]
    }
}

const COMPONENTS: [Variable; 4] =
    [Variable::PercPov, Variable::PercSnap, Variable::Unemp, Variable::PercNohs];

/// σ of POV, SNAP, UNEMP and NOHS over every block group of the city,
/// population-0 rows included.
pub fn compute_sigmas(city: &CityDataset) -> Result<SigmaVector, IndexError> {
    let bgs = city.block_groups();
    if bgs.len() < 2 {
        return Err(IndexError::TooFewBlockGroups { city: city.name().into(), got: bgs.len() });
    }
    let mut sigmas = [0.0; 4];
    for (k, var) in COMPONENTS.iter().enumerate() {
        let column: Vec<f64> = bgs.iter().map(|bg| bg.deprivation_components()[k]).collect();
        let s = stats::std_dev(&column).expect("length checked");
        if s == 0.0 {
            return Err(IndexError::ZeroVariance { city: city.name().into(), variable: *var });
        }
        sigmas[k] = s;
    }
    Ok(SigmaVector::new(city.name(), sigmas))
}

/// Evaluates the σ-weighted index on raw component percentages.
pub fn deprivation_score(components: [f64; 4], s: &SigmaVector) -> f64 {
    components
        .iter()
        .zip(s.as_array())
        .map(|(x, sigma)| x / sigma)
        .sum()
}

/// σ-weighted deprivation index of one block group.
///
/// ```
/// use atlas_core::indices::{deprivation_score, SigmaVector};
/// let s = SigmaVector::new("ref", [10.0, 20.0, 5.0, 10.0]);
/// assert_eq!(deprivation_score([10.0, 20.0, 5.0, 10.0], &s), 4.0);
/// ```
pub fn deprivation_index(bg: &BlockGroup, s: &SigmaVector) -> f64 {
    deprivation_score(bg.deprivation_components(), s)
}

/// ABR incidents per resident. Population-0 block groups are an error the
/// caller turns into an exclusion.
pub fn abr_per_capita(abr_count: u64, bg: &BlockGroup) -> Result<f64, IndexError> {
    if bg.population == 0 {
        return Err(IndexError::ZeroPopulation { geoid: bg.geoid.clone() });
    }
    Ok(abr_count as f64 / bg.population as f64)
}

/// Derived columns for one city, over its eligible (population > 0) block
/// groups in dataset order.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexBundle {
    pub city: String,
    pub reference_city: String,
    /// Dataset indices of the rows below.
    pub rows: Vec<usize>,
    pub geoids: Vec<String>,
    pub abr_counts: Vec<u64>,
    pub abrpop: Vec<f64>,
    pub sd4own: Vec<f64>,
    pub sd4det: Vec<f64>,
    pub pca4: Vec<f64>,
    pub own_sigmas: SigmaVector,
    pub reference_sigmas: SigmaVector,
    pub pca_loadings: Vec<f64>,
    pub pca_eigenvalue: f64,
}

impl IndexBundle {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of `var` aligned with the bundle rows; `None` where an optional
    /// attribute is missing.
    pub fn column(&self, city: &CityDataset, var: Variable) -> Vec<Option<f64>> {
        let derived = match var {
            Variable::Sd4Own => Some(&self.sd4own),
            Variable::Sd4Det => Some(&self.sd4det),
            Variable::Pca4 => Some(&self.pca4),
            Variable::AbrPop => Some(&self.abrpop),
            _ => None,
        };
        match derived {
            Some(values) => values.iter().map(|v| Some(*v)).collect(),
            None => self
                .rows
                .iter()
                .map(|&r| city.block_groups()[r].attribute(var))
                .collect(),
        }
    }

    /// Like [`IndexBundle::column`] but only present values, with their row
    /// positions.
    pub fn present(&self, city: &CityDataset, var: Variable) -> (Vec<usize>, Vec<f64>) {
        self.column(city, var)
            .into_iter()
            .enumerate()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .unzip()
    }

    pub fn position(&self, geoid: &str) -> Option<usize> {
        self.geoids.binary_search_by(|g| g.as_str().cmp(geoid)).ok()
    }
}

/// Builds SD4OWN, SD4DET, PCA4 and ABRPOP for `city`, with `reference`
/// supplying the SD4DET weights. `join` holds ABR counts aligned with
/// `city`'s block groups. When the two cities share a name SD4DET is SD4OWN.
pub fn build_index_bundle(
    city: &CityDataset,
    reference: &CityDataset,
    join: &JoinResult,
) -> Result<IndexBundle, IndexError> {
    if join.counts.len() != city.len() {
        return Err(IndexError::JoinMismatch { expected: city.len(), got: join.counts.len() });
    }
    let own_sigmas = compute_sigmas(city)?;
    let reference_sigmas = if city.name() == reference.name() {
        own_sigmas.clone()
    } else {
        compute_sigmas(reference)?
    };

    let rows = city.eligible_indices();
    let bgs = city.block_groups();
    let eligible: Vec<&BlockGroup> = rows.iter().map(|&r| &bgs[r]).collect();

    let abr_counts: Vec<u64> = rows.iter().map(|&r| join.counts[r]).collect();
    let abrpop = eligible
        .iter()
        .zip(&abr_counts)
        .map(|(bg, &c)| abr_per_capita(c, bg))
        .collect::<Result<Vec<_>, _>>()?;
    let sd4own: Vec<f64> = eligible.iter().map(|bg| deprivation_index(bg, &own_sigmas)).collect();
    let sd4det: Vec<f64> = eligible
        .iter()
        .map(|bg| deprivation_index(bg, &reference_sigmas))
        .collect();

    let columns: Vec<Vec<f64>> = (0..4)
        .map(|k| eligible.iter().map(|bg| bg.deprivation_components()[k]).collect())
        .collect();
    let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    let pca = pca_first_component(&refs)
        .map_err(|source| IndexError::Pca { city: city.name().into(), source })?;

    Ok(IndexBundle {
        city: city.name().into(),
        reference_city: reference.name().into(),
        geoids: eligible.iter().map(|bg| bg.geoid.clone()).collect(),
        rows,
        abr_counts,
        abrpop,
        sd4own,
        sd4det,
        pca4: pca.scores,
        own_sigmas,
        reference_sigmas,
        pca_loadings: pca.loadings,
        pca_eigenvalue: pca.eigenvalue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Region;
    use std::collections::BTreeMap;

    pub(crate) fn bg(geoid: &str, pop: u64, pct: [f64; 5]) -> BlockGroup {
        BlockGroup {
            geoid: geoid.into(),
            population: pop,
            housing_units: 10,
            perc_pov: pct[0],
            perc_snap: pct[1],
            unemp: pct[2],
            perc_nohs: pct[3],
            perc_vac: pct[4],
            extras: BTreeMap::new(),
        }
    }

    fn city(name: &str, bgs: Vec<BlockGroup>) -> CityDataset {
        let parts = bgs
            .into_iter()
            .enumerate()
            .map(|(k, b)| (b, Region::square(k as f64, 0.0, 1.0)))
            .collect();
        CityDataset::from_parts(name, parts)
    }

    #[test]
    fn sigma_of_two_block_groups() {
        let c = city("x", vec![bg("a", 1, [0.0, 1.0, 2.0, 3.0, 0.0]), bg("b", 1, [20.0, 2.0, 3.0, 4.0, 0.0])]);
        let s = compute_sigmas(&c).unwrap();
        assert!((s.sigma_pov - 200f64.sqrt()).abs() < 1e-12);
        assert!((s.sigma_pov - 14.142).abs() < 1e-3);
    }

    #[test]
    fn identical_block_groups_fail() {
        let c = city("x", vec![bg("a", 1, [1.0; 5]), bg("b", 1, [1.0; 5])]);
        assert_eq!(
            compute_sigmas(&c),
            Err(IndexError::ZeroVariance { city: "x".into(), variable: Variable::PercPov })
        );
    }

    #[test]
    fn index_cases() {
        let s = SigmaVector::new("r", [10.0, 20.0, 5.0, 10.0]);
        assert_eq!(deprivation_index(&bg("a", 1, [0.0; 5]), &s), 0.0);
        assert_eq!(deprivation_index(&bg("a", 1, [10.0, 20.0, 5.0, 10.0, 0.0]), &s), 4.0);
    }

    #[test]
    fn sigma_scaling_scales_contribution() {
        let base = SigmaVector::new("r", [10.0, 20.0, 5.0, 10.0]);
        let scaled = SigmaVector::new("r", [40.0, 20.0, 5.0, 10.0]);
        let b = bg("a", 1, [12.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((deprivation_index(&b, &scaled) - deprivation_index(&b, &base) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn per_capita() {
        let b = bg("a", 500, [0.0; 5]);
        assert_eq!(abr_per_capita(0, &b).unwrap(), 0.0);
        assert!((abr_per_capita(35, &b).unwrap() - 0.07).abs() < 1e-15);
        assert!(abr_per_capita(3, &bg("z", 0, [0.0; 5])).is_err());
    }

    #[test]
    fn reference_bundle_has_sd4det_equal_sd4own() {
        let bgs: Vec<BlockGroup> = (0..8)
            .map(|i| {
                let f = i as f64;
                bg(&format!("g{i}"), if i == 3 { 0 } else { 100 }, [
                    10.0 + 3.0 * f,
                    20.0 + 2.0 * f + (f * 1.3).sin(),
                    5.0 + f + (f * 0.7).cos(),
                    8.0 + 1.5 * f + (f * 2.1).sin(),
                    30.0,
                ])
            })
            .collect();
        let c = city("ref", bgs);
        let join = JoinResult { counts: (0..8).collect(), unassigned: 0 };
        let bundle = build_index_bundle(&c, &c, &join).unwrap();
        assert_eq!(bundle.sd4det, bundle.sd4own);
        assert_eq!(bundle.len(), 7);
        assert!(!bundle.geoids.contains(&"g3".to_string()));
        assert_eq!(bundle.abrpop[3], 4.0 / 100.0);
        assert!(bundle.pca_loadings[0] >= 0.0);
    }
}
