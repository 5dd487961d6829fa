//! Reference-city-like block-group selection.
//!
//! A block group is selected when it strictly exceeds the reference city's
//! medians of PERCSNAP, ABRPOP and PERCVAC at the same time. The
//! deprivation-only selections pick the block groups with the highest SD4DET
//! instead, either a fraction of the city or a fixed count.
//!
//! Only eligible block groups (population > 0) are ever candidates, and all
//! comparison tables are computed over eligible block groups.

mod tables;

use std::collections::BTreeSet;

use thiserror::Error;

use crate::indices::IndexBundle;
use crate::ingest::CityDataset;
use crate::stats;
use crate::variable::Variable;

pub use tables::{
    higher_lower, median_table, zscore_table, Cell, ComparisonTable, Group, HigherLower, Statistic,
    LOW_N,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("{city}: no eligible block groups (population > 0)")]
    NoEligible { city: String },
    #[error("requested {requested} block groups but only {eligible} are eligible")]
    TooMany { requested: usize, eligible: usize },
    #[error("top fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("group `{0}` is empty")]
    EmptyGroup(String),
    #[error("tables do not match: {0}")]
    TableMismatch(String),
    #[error("bundle for `{bundle}` does not belong to city `{city}`")]
    WrongCity { bundle: String, city: String },
}

/// The reference city's medians of the three selection criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianTriple {
    pub source_city: String,
    pub med_snap: f64,
    pub med_abr: f64,
    pub med_vac: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionKind {
    Trivariate,
    TopFraction(f64),
    TopN(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TopMode {
    Fraction(f64),
    Count(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub kind: SelectionKind,
    pub geoids: BTreeSet<String>,
    pub n_selected: usize,
    pub n_eligible: usize,
}

impl SelectionResult {
    fn new(kind: SelectionKind, geoids: BTreeSet<String>, n_eligible: usize) -> SelectionResult {
        SelectionResult { kind, n_selected: geoids.len(), geoids, n_eligible }
    }

    /// `n_selected / n_eligible`, 0 when nothing is eligible.
    pub fn share(&self) -> f64 {
        if self.n_eligible == 0 {
            0.0
        } else {
            self.n_selected as f64 / self.n_eligible as f64
        }
    }

    pub fn contains(&self, geoid: &str) -> bool {
        self.geoids.contains(geoid)
    }

    pub fn is_empty(&self) -> bool {
        self.geoids.is_empty()
    }
}

fn check_bundle(city: &CityDataset, bundle: &IndexBundle) -> Result<(), SelectionError> {
    if city.name() != bundle.city {
        return Err(SelectionError::WrongCity { bundle: bundle.city.clone(), city: city.name().into() });
    }
    Ok(())
}

/// Medians of PERCSNAP, ABRPOP and PERCVAC over the reference city's eligible
/// block groups.
pub fn reference_medians(
    ref_bundle: &IndexBundle,
    ref_city: &CityDataset,
) -> Result<MedianTriple, SelectionError> {
    check_bundle(ref_city, ref_bundle)?;
    if ref_bundle.is_empty() {
        return Err(SelectionError::NoEligible { city: ref_city.name().into() });
    }
    let med = |var| {
        let (_, values) = ref_bundle.present(ref_city, var);
        stats::median(&values).expect("bundle is non-empty")
    };
    Ok(MedianTriple {
        source_city: ref_city.name().into(),
        med_snap: med(Variable::PercSnap),
        med_abr: med(Variable::AbrPop),
        med_vac: med(Variable::PercVac),
    })
}

/// Eligible block groups with PERCSNAP, ABRPOP and PERCVAC all strictly above
/// the reference medians.
pub fn select_trivariate(
    city: &CityDataset,
    bundle: &IndexBundle,
    m: &MedianTriple,
) -> Result<SelectionResult, SelectionError> {
    check_bundle(city, bundle)?;
    let bgs = city.block_groups();
    let geoids = bundle
        .rows
        .iter()
        .zip(&bundle.abrpop)
        .filter(|&(&r, &abr)| {
            let bg = &bgs[r];
            bg.perc_snap > m.med_snap && abr > m.med_abr && bg.perc_vac > m.med_vac
        })
        .map(|(&r, _)| bgs[r].geoid.clone())
        .collect();
    Ok(SelectionResult::new(SelectionKind::Trivariate, geoids, bundle.len()))
}

/// Size of a fractional selection: `f * n` rounded to the nearest integer
/// (halves up), at least one when anything is eligible.
pub fn top_fraction_count(f: f64, n_eligible: usize) -> usize {
    if n_eligible == 0 {
        return 0;
    }
    let raw = f * n_eligible as f64;
    // absorb representation error such as 0.1 * 875 = 87.50000000000001
    let count = (raw * 1e9).round() / 1e9;
    ((count + 0.5).floor() as usize).clamp(1, n_eligible)
}

/// The eligible block groups with the highest SD4DET. Ties at the cutoff go
/// to the smaller geoid.
pub fn select_top_deprived(
    city: &CityDataset,
    bundle: &IndexBundle,
    mode: TopMode,
) -> Result<SelectionResult, SelectionError> {
    check_bundle(city, bundle)?;
    let n_eligible = bundle.len();
    let (kind, count) = match mode {
        TopMode::Fraction(f) => {
            if !(f > 0.0 && f <= 1.0) {
                return Err(SelectionError::InvalidFraction(f));
            }
            (SelectionKind::TopFraction(f), top_fraction_count(f, n_eligible))
        }
        TopMode::Count(n) => {
            if n > n_eligible {
                return Err(SelectionError::TooMany { requested: n, eligible: n_eligible });
            }
            (SelectionKind::TopN(n), n)
        }
    };
    let mut order: Vec<usize> = (0..n_eligible).collect();
    order.sort_by(|&a, &b| {
        bundle.sd4det[b]
            .total_cmp(&bundle.sd4det[a])
            .then_with(|| bundle.geoids[a].cmp(&bundle.geoids[b]))
    });
    let geoids = order[..count].iter().map(|&k| bundle.geoids[k].clone()).collect();
    Ok(SelectionResult::new(kind, geoids, n_eligible))
}
