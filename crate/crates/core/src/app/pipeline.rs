//! The full multi-city run.
//!
//! The reference city is loaded first: its medians drive the selection and
//! its natural breaks classify every city's maps. The remaining cities are
//! then processed concurrently. A failure in one city is reported with the
//! city and stage and leaves the other cities' outputs intact.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;

use super::choropleth::{export_choropleth, to_geojson};
use super::config::{CityConfig, RunConfig};
use super::report::{fmt_raw, write_text, Table};
use crate::error::Error;
use crate::geo::{contiguity_weights, row_standardize, spatial_join, JoinResult, Scheme, SpatialWeights};
use crate::indices::{build_index_bundle, IndexBundle};
use crate::ingest::{filter_abr, load_block_groups, load_crimes, load_vacancy_index, CityDataset};
use crate::selection::{
    higher_lower, median_table, reference_medians, select_top_deprived, select_trivariate,
    zscore_table, ComparisonTable, Group, HigherLower, MedianTriple, SelectionResult, Statistic,
    TopMode,
};
use crate::stats::{self, jenks_breaks, morans_i, pearson, spearman};
use crate::variable::Variable;

/// Variables mapped and tested for spatial autocorrelation.
pub const MAP_VARIABLES: [Variable; 4] =
    [Variable::Sd4Det, Variable::PercSnap, Variable::AbrPop, Variable::PercVac];

/// Rows of the per-city summary-statistics table.
pub const SUMMARY_VARIABLES: [Variable; 9] = [
    Variable::AbrPop,
    Variable::Sd4Own,
    Variable::Sd4Det,
    Variable::Pca4,
    Variable::PercNohs,
    Variable::PercPov,
    Variable::PercSnap,
    Variable::PercVac,
    Variable::Unemp,
];

/// Variables correlated with SD4DET.
pub const CORRELATION_VARIABLES: [Variable; 6] = [
    Variable::Pca4,
    Variable::Sd4Own,
    Variable::PercNohs,
    Variable::PercPov,
    Variable::PercSnap,
    Variable::Unemp,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    Join,
    Indices,
    Selection,
    Statistics,
    Export,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Ingest => "ingest",
            Stage::Join => "join",
            Stage::Indices => "indices",
            Stage::Selection => "selection",
            Stage::Statistics => "statistics",
            Stage::Export => "export",
        })
    }
}

/// A per-city error tagged with where it happened.
#[derive(Debug, thiserror::Error)]
#[error("{city}: {stage} failed: {source}")]
pub struct CityFailure {
    pub city: String,
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl CityFailure {
    pub fn exit_code(&self) -> i32 {
        self.source.exit_code()
    }
}

fn at<T, E: Into<Error>>(city: &str, stage: Stage, r: Result<T, E>) -> Result<T, CityFailure> {
    r.map_err(|e| CityFailure { city: city.into(), stage, source: e.into() })
}

/// A city's inputs after ingest and the spatial join.
#[derive(Debug, Clone)]
pub struct LoadedCity {
    pub dataset: CityDataset,
    pub crimes_read: usize,
    pub crimes_excluded: usize,
    pub abr_incidents: usize,
    pub join: JoinResult,
}

pub fn load_city(c: &CityConfig) -> Result<LoadedCity, CityFailure> {
    let name = c.name.as_str();
    info!("{name}: loading block groups");
    let dataset = at(name, Stage::Ingest, load_block_groups(name, &c.attr_path, &c.geom_path))?;
    let crimes = at(name, Stage::Ingest, load_crimes(&c.crimes_path))?;
    let abr = filter_abr(&crimes.incidents);
    info!("{name}: joining {} ABR incidents to {} block groups", abr.len(), dataset.len());
    let join = spatial_join(&abr, &dataset);
    if join.unassigned > 0 {
        warn!("{name}: {} ABR incidents fall outside every block group", join.unassigned);
    }
    Ok(LoadedCity {
        crimes_read: crimes.incidents.len() + crimes.exclusions.len(),
        crimes_excluded: crimes.exclusions.len(),
        abr_incidents: abr.len(),
        dataset,
        join,
    })
}

/// Everything derived from the reference city that other cities need.
#[derive(Debug, Clone)]
pub struct Reference {
    pub loaded: LoadedCity,
    pub bundle: IndexBundle,
    pub medians: MedianTriple,
    /// Natural breaks per mapped variable.
    pub breaks: BTreeMap<Variable, Vec<f64>>,
}

/// Natural breaks of each mapped variable over a city's eligible block groups.
pub fn map_breaks(
    city: &CityDataset,
    bundle: &IndexBundle,
    class_count: usize,
) -> Result<BTreeMap<Variable, Vec<f64>>, Error> {
    MAP_VARIABLES
        .iter()
        .map(|&var| {
            let (_, values) = bundle.present(city, var);
            Ok((var, jenks_breaks(&values, class_count)?))
        })
        .collect()
}

pub fn prepare_reference(cfg: &RunConfig) -> Result<Reference, CityFailure> {
    let loaded = load_city(cfg.reference())?;
    let name = loaded.dataset.name().to_string();
    let ds = &loaded.dataset;
    let bundle = at(&name, Stage::Indices, build_index_bundle(ds, ds, &loaded.join))?;
    let medians = at(&name, Stage::Selection, reference_medians(&bundle, ds))?;
    info!(
        "{name}: reference medians PERCSNAP {} ABRPOP {} PERCVAC {}",
        medians.med_snap, medians.med_abr, medians.med_vac
    );
    let breaks = at(&name, Stage::Statistics, map_breaks(ds, &bundle, cfg.class_count))?;
    Ok(Reference { loaded, bundle, medians, breaks })
}

/// Selections of one city.
#[derive(Debug, Clone)]
pub struct Selections {
    pub trivariate: SelectionResult,
    pub top_fraction: SelectionResult,
    /// Same size as the trivariate selection; `None` when that is empty.
    pub top_n: Option<SelectionResult>,
}

pub fn select_all(
    city: &CityDataset,
    bundle: &IndexBundle,
    medians: &MedianTriple,
    top_fraction: f64,
) -> Result<Selections, Error> {
    let trivariate = select_trivariate(city, bundle, medians)?;
    let top_fraction = select_top_deprived(city, bundle, TopMode::Fraction(top_fraction))?;
    let top_n = match trivariate.n_selected {
        0 => None,
        n => Some(select_top_deprived(city, bundle, TopMode::Count(n))?),
    };
    Ok(Selections { trivariate, top_fraction, top_n })
}

/// Binary contiguity restricted to eligible block groups, row-standardized.
pub fn eligible_weights(city: &CityDataset, bundle: &IndexBundle, scheme: Scheme) -> SpatialWeights {
    row_standardize(&contiguity_weights(city, scheme).subset(&bundle.rows))
}

/// Moran's I of `var` over eligible block groups.
pub fn morans_i_for(
    city: &CityDataset,
    bundle: &IndexBundle,
    w: &SpatialWeights,
    var: Variable,
) -> Result<f64, Error> {
    let column = bundle.column(city, var);
    if column.iter().any(Option::is_none) {
        return Err(stats::StatsError::NonFinite(format!("{var} has missing values")).into());
    }
    let values: Vec<f64> = column.into_iter().flatten().collect();
    Ok(morans_i(&values, w)?)
}

/// All tables for one city, in memory.
#[derive(Debug, Clone)]
pub struct CityAnalysis {
    pub city: String,
    pub summary: Table,
    pub correlations: Table,
    pub morans_i: Table,
    pub vacancy_validation: Option<Table>,
    pub medians: ComparisonTable,
    pub medians_deprived: ComparisonTable,
    pub zscores: ComparisonTable,
    pub higher_lower: HigherLower,
    pub selections: Selections,
}

fn summary_table(city: &CityDataset, bundle: &IndexBundle) -> Table {
    let cells = SUMMARY_VARIABLES
        .iter()
        .map(|&var| {
            let (_, values) = bundle.present(city, var);
            vec![stats::mean(&values).ok(), stats::std_dev(&values).ok()]
        })
        .collect();
    Table::numeric(
        "Variable",
        vec![format!("Mean (N={})", bundle.len()), "SD".into()],
        SUMMARY_VARIABLES.iter().map(|v| v.to_string()).collect(),
        cells,
    )
}

fn correlation_table(city: &CityDataset, bundle: &IndexBundle) -> Table {
    let cells = CORRELATION_VARIABLES
        .iter()
        .map(|&var| {
            let (rows, values) = bundle.present(city, var);
            let dep: Vec<f64> = rows.iter().map(|&k| bundle.sd4det[k]).collect();
            pearson(&dep, &values).ok()
        })
        .collect();
    Table::numeric(
        "City",
        CORRELATION_VARIABLES.iter().map(|v| v.to_string()).collect(),
        vec![city.name().to_string()],
        vec![cells],
    )
}

fn moran_table(city: &CityDataset, bundle: &IndexBundle, scheme: Scheme) -> Table {
    let w = eligible_weights(city, bundle, scheme);
    let cells = MAP_VARIABLES
        .iter()
        .map(|&var| match morans_i_for(city, bundle, &w, var) {
            Ok(i) => Some(i),
            Err(e) => {
                warn!("{}: Moran's I of {var} unavailable: {e}", city.name());
                None
            }
        })
        .collect();
    Table::numeric(
        "City",
        MAP_VARIABLES.iter().map(|v| v.to_string()).collect(),
        vec![city.name().to_string()],
        vec![cells],
    )
}

/// Pearson and Spearman correlations of PERCVAC with an external vacancy
/// measure, over every block group present in both.
fn vacancy_table(city: &CityDataset, path: &Path) -> Result<Table, Error> {
    let (records, excluded) = load_vacancy_index(path)?;
    if !excluded.is_empty() {
        warn!("{}: excluded {} vacancy index rows", city.name(), excluded.len());
    }
    let mut vac = Vec::new();
    let mut measures = [Vec::new(), Vec::new(), Vec::new()];
    for r in &records {
        if let Some(pos) = city.position(&r.geoid) {
            vac.push(city.block_groups()[pos].perc_vac);
            measures[0].push(r.likely);
            measures[1].push(r.very_likely);
            measures[2].push(r.likely + r.very_likely);
        }
    }
    let p = measures.iter().map(|m| pearson(&vac, m).ok()).collect();
    let s = measures.iter().map(|m| spearman(&vac, m).ok()).collect();
    Ok(Table::numeric(
        &format!("PERCVAC vs (N={})", vac.len()),
        vec!["Likely".into(), "Very Likely".into(), "Likely + Very Likely".into()],
        vec!["Pearson".into(), "Spearman".into()],
        vec![p, s],
    ))
}

/// A table with every cell unavailable, for groups that came out empty.
fn unavailable(statistic: Statistic, group: &str, vars: &[Variable]) -> ComparisonTable {
    ComparisonTable {
        statistic,
        variables: vars.to_vec(),
        groups: vec![group.into()],
        group_sizes: vec![0],
        cells: vec![vec![None]; vars.len()],
    }
}

fn percent_label(f: f64) -> String {
    format!("Top {}%", (f * 100.0 * 1e6).round() / 1e6)
}

pub fn analyze_city(
    c: &CityConfig,
    loaded: &LoadedCity,
    bundle: &IndexBundle,
    reference: &Reference,
    cfg: &RunConfig,
) -> Result<CityAnalysis, CityFailure> {
    let name = c.name.as_str();
    let city = &loaded.dataset;
    let vars = &Variable::COMPARISON[..];
    let sel = at(name, Stage::Selection, select_all(city, bundle, &reference.medians, cfg.top_fraction))?;
    info!(
        "{name}: {} of {} eligible block groups selected",
        sel.trivariate.n_selected, sel.trivariate.n_eligible
    );

    let tables = || -> Result<_, Error> {
        let whole = Group::city("City");
        let selected = Group::selected("Selected", &sel.trivariate);
        let medians = if sel.trivariate.is_empty() {
            median_table(city, bundle, &[whole], vars)?
        } else {
            median_table(city, bundle, &[whole, selected], vars)?
        };
        let frac_label = percent_label(cfg.top_fraction);
        let mut deprived = vec![Group::selected(&frac_label, &sel.top_fraction)];
        if let Some(top_n) = &sel.top_n {
            deprived.push(Group::selected("Same N", top_n));
        }
        let medians_deprived = median_table(city, bundle, &deprived, vars)?;
        let (zscores, hl) = match &sel.top_n {
            Some(top_n) => {
                let z = zscore_table(city, bundle, "Selected", &sel.trivariate, vars)?;
                let a = median_table(city, bundle, &[Group::selected("Selection", &sel.trivariate)], vars)?;
                let b = median_table(city, bundle, &[Group::selected("Deprivation", top_n)], vars)?;
                (z, higher_lower(&a, &b, "Selection", "Deprivation")?)
            }
            None => {
                let a = unavailable(Statistic::Median, "Selection", vars);
                let b = unavailable(Statistic::Median, "Deprivation", vars);
                (
                    unavailable(Statistic::ZScore, "Selected", vars),
                    higher_lower(&a, &b, "Selection", "Deprivation")?,
                )
            }
        };
        Ok((medians, medians_deprived, zscores, hl))
    };
    let (medians, medians_deprived, zscores, higher_lower) = at(name, Stage::Statistics, tables())?;
    let vacancy_validation = match &c.vacancy_index_path {
        Some(path) => Some(at(name, Stage::Ingest, vacancy_table(city, path))?),
        None => None,
    };
    Ok(CityAnalysis {
        city: name.into(),
        summary: summary_table(city, bundle),
        correlations: correlation_table(city, bundle),
        morans_i: moran_table(city, bundle, cfg.weights_scheme),
        vacancy_validation,
        medians,
        medians_deprived,
        zscores,
        higher_lower,
        selections: sel,
    })
}

/// Values of `var` aligned with every block group of the city.
pub fn aligned(city: &CityDataset, bundle: &IndexBundle, var: Variable) -> Vec<Option<f64>> {
    let mut out = vec![None; city.len()];
    for (&r, v) in bundle.rows.iter().zip(bundle.column(city, var)) {
        out[r] = v;
    }
    out
}

fn selection_csv(city: &CityDataset, bundle: &IndexBundle, sel: &Selections) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    let header = [
        "geoid", "population", "eligible", "perc_snap", "abrpop", "perc_vac", "sd4det",
        "trivariate", "top_fraction", "top_n",
    ];
    w.write_record(header).expect("in memory");
    let abrpop = aligned(city, bundle, Variable::AbrPop);
    let sd4det = aligned(city, bundle, Variable::Sd4Det);
    let flag = |s: Option<&SelectionResult>, g: &str| u8::from(s.is_some_and(|s| s.contains(g))).to_string();
    for (r, bg) in city.block_groups().iter().enumerate() {
        w.write_record([
            bg.geoid.clone(),
            bg.population.to_string(),
            u8::from(bg.is_eligible()).to_string(),
            fmt_raw(Some(bg.perc_snap)),
            fmt_raw(abrpop[r]),
            fmt_raw(Some(bg.perc_vac)),
            fmt_raw(sd4det[r]),
            flag(Some(&sel.trivariate), &bg.geoid),
            flag(Some(&sel.top_fraction), &bg.geoid),
            flag(sel.top_n.as_ref(), &bg.geoid),
        ])
        .expect("in memory");
    }
    String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
}

fn values_csv(city: &CityDataset, bundle: &IndexBundle, join: &JoinResult) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    let mut header = vec!["geoid".to_string(), "abr_count".to_string()];
    header.extend(Variable::ALL.iter().map(|v| v.to_string()));
    w.write_record(&header).expect("in memory");
    let columns: Vec<Vec<Option<f64>>> = Variable::ALL
        .iter()
        .map(|&var| match var.column() {
            Some(_) => city.block_groups().iter().map(|bg| bg.attribute(var)).collect(),
            None => aligned(city, bundle, var),
        })
        .collect();
    for (r, bg) in city.block_groups().iter().enumerate() {
        let mut line = vec![bg.geoid.clone(), join.counts[r].to_string()];
        line.extend(columns.iter().map(|c| fmt_raw(c[r])));
        w.write_record(&line).expect("in memory");
    }
    String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
}

/// Writes one city's artifact directory, replacing any previous one.
pub fn write_city(
    dir: &Path,
    loaded: &LoadedCity,
    bundle: &IndexBundle,
    a: &CityAnalysis,
    reference: &Reference,
    cfg: &RunConfig,
) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let city = &loaded.dataset;
    a.summary.write_all(dir, "summary")?;
    a.correlations.write_all(dir, "correlations")?;
    a.morans_i.write_all(dir, "morans_i")?;
    if let Some(t) = &a.vacancy_validation {
        t.write_all(dir, "vacancy_validation")?;
    }
    Table::from(&a.medians).write_all(dir, "medians")?;
    Table::from(&a.medians_deprived).write_all(dir, "medians_deprived")?;
    Table::from(&a.zscores).write_all(dir, "zscores")?;
    Table::from(&a.higher_lower).write_all(dir, "higher_lower")?;
    write_text(&dir.join("selection.csv"), &selection_csv(city, bundle, &a.selections))?;
    write_text(&dir.join("values_raw.csv"), &values_csv(city, bundle, &loaded.join))?;

    let own = if cfg.per_city_breaks { Some(map_breaks(city, bundle, cfg.class_count)?) } else { None };
    for var in MAP_VARIABLES {
        let (breaks, source) = match &own {
            Some(b) => (&b[&var], city.name()),
            None => (&reference.breaks[&var], reference.loaded.dataset.name()),
        };
        let values = aligned(city, bundle, var);
        let export = export_choropleth(city, var, &values, breaks, source, Some(&a.selections.trivariate));
        let path = dir.join(format!("choropleth_{}.geojson", var.label().to_ascii_lowercase()));
        write_text(&path, &to_geojson(&export, city))?;
    }
    Ok(())
}

/// Headline numbers for one successfully processed city.
#[derive(Debug, Clone, PartialEq)]
pub struct CityReport {
    pub city: String,
    pub block_groups: usize,
    pub excluded_rows: usize,
    pub eligible: usize,
    pub crimes_read: usize,
    pub crimes_excluded: usize,
    pub abr_incidents: usize,
    pub abr_unassigned: u64,
    pub selected: usize,
    pub selected_share: f64,
    pub top_fraction_n: usize,
}

#[derive(Debug)]
pub struct RunReport {
    /// One entry per configured city, in config order.
    pub cities: Vec<Result<CityReport, CityFailure>>,
}

impl RunReport {
    /// 0 when every city succeeded, otherwise the largest failure code.
    pub fn exit_code(&self) -> i32 {
        self.failures().map(CityFailure::exit_code).max().unwrap_or(0)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CityFailure> {
        self.cities.iter().filter_map(|c| c.as_ref().err())
    }
}

fn process_city(c: &CityConfig, reference: &Reference, cfg: &RunConfig) -> Result<CityReport, CityFailure> {
    let dir = cfg.output_dir.join(&c.name);
    if dir.exists() {
        at(&c.name, Stage::Export, fs::remove_dir_all(&dir).map_err(|e| Error::io(&dir, e)))?;
    }
    let own;
    let (loaded, bundle) = if c.name == cfg.reference_city {
        (&reference.loaded, &reference.bundle)
    } else {
        let loaded = load_city(c)?;
        let bundle = at(
            &c.name,
            Stage::Indices,
            build_index_bundle(&loaded.dataset, &reference.loaded.dataset, &loaded.join),
        )?;
        own = (loaded, bundle);
        (&own.0, &own.1)
    };
    let analysis = analyze_city(c, loaded, bundle, reference, cfg)?;
    at(&c.name, Stage::Export, write_city(&dir, loaded, bundle, &analysis, reference, cfg))?;
    let t = &analysis.selections;
    Ok(CityReport {
        city: c.name.clone(),
        block_groups: loaded.dataset.len(),
        excluded_rows: loaded.dataset.excluded_count(),
        eligible: bundle.len(),
        crimes_read: loaded.crimes_read,
        crimes_excluded: loaded.crimes_excluded,
        abr_incidents: loaded.abr_incidents,
        abr_unassigned: loaded.join.unassigned,
        selected: t.trivariate.n_selected,
        selected_share: t.trivariate.share(),
        top_fraction_n: t.top_fraction.n_selected,
    })
}

fn summary_csv(report: &RunReport) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record([
        "city", "status", "block_groups", "excluded_rows", "eligible", "crimes_read",
        "crimes_excluded", "abr_incidents", "abr_unassigned", "selected", "selected_pct",
        "top_fraction_n",
    ])
    .expect("in memory");
    for c in &report.cities {
        let line = match c {
            Ok(r) => vec![
                r.city.clone(),
                "ok".into(),
                r.block_groups.to_string(),
                r.excluded_rows.to_string(),
                r.eligible.to_string(),
                r.crimes_read.to_string(),
                r.crimes_excluded.to_string(),
                r.abr_incidents.to_string(),
                r.abr_unassigned.to_string(),
                r.selected.to_string(),
                format!("{:.1}", 100.0 * r.selected_share),
                r.top_fraction_n.to_string(),
            ],
            Err(f) => {
                let mut line = vec![f.city.clone(), format!("failed ({})", f.stage)];
                line.resize(12, String::new());
                line
            }
        };
        w.write_record(&line).expect("in memory");
    }
    String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
}

fn breaks_csv(reference: &Reference) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    w.write_record(["variable", "source", "class", "upper_bound"]).expect("in memory");
    for var in MAP_VARIABLES {
        for (k, b) in reference.breaks[&var].iter().enumerate() {
            w.write_record([var.label(), reference.loaded.dataset.name(), &k.to_string(), &fmt_raw(Some(*b))])
                .expect("in memory");
        }
    }
    String::from_utf8(w.into_inner().expect("in memory")).expect("utf-8")
}

/// Thread pool sized by `ATLAS_THREADS` when set.
pub fn thread_pool() -> rayon::ThreadPool {
    let threads = std::env::var("ATLAS_THREADS").ok().and_then(|v| v.parse().ok()).unwrap_or(0);
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool")
}

/// Runs every configured city. An `Err` means the reference city itself
/// failed, so nothing could be computed.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, CityFailure> {
    let pool = thread_pool();
    pool.install(|| {
        let reference = prepare_reference(cfg)?;
        let out = &cfg.output_dir;
        let r = &cfg.reference_city;
        at(r, Stage::Export, fs::create_dir_all(out).map_err(|e| Error::io(out, e)))?;
        let cities: Vec<Result<CityReport, CityFailure>> =
            cfg.cities.par_iter().map(|c| process_city(c, &reference, cfg)).collect();
        let report = RunReport { cities };
        for f in report.failures() {
            log::error!("{f}");
        }
        at(r, Stage::Export, write_text(&out.join("summary.csv"), &summary_csv(&report)))?;
        at(r, Stage::Export, write_text(&out.join("breaks.csv"), &breaks_csv(&reference)))?;
        Ok(report)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(percent_label(0.1), "Top 10%");
        assert_eq!(percent_label(0.125), "Top 12.5%");
        assert_eq!(Stage::Statistics.to_string(), "statistics");
    }
}
