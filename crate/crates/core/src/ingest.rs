//! Loading and validating block-group attributes, geometries and crime
//! incidents.
//!
//! Rows that fail validation are excluded and recorded as [`Exclusion`]s
//! rather than dropped silently. Structural problems (missing columns,
//! duplicate or unmatched geoids, invalid geometry) are errors.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::warn;
use thiserror::Error;

use crate::geo::{GeometryError, Polygon, Region, Ring};
use crate::variable::Variable;

/// Required attribute columns, in order.
pub const ATTRIBUTE_COLUMNS: [&str; 8] = [
    "geoid",
    "population",
    "housing_units",
    "perc_pov",
    "perc_snap",
    "unemp",
    "perc_nohs",
    "perc_vac",
];

pub const CRIME_COLUMNS: [&str; 4] = ["id", "category", "lon", "lat"];

const MAX_LISTED: usize = 10;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV in {what}: {source}")]
    Csv {
        what: String,
        #[source]
        source: csv::Error,
    },
    #[error("{what}: missing required column `{column}`")]
    MissingColumn { what: String, column: String },
    #[error("{what}: duplicate geoid `{geoid}`")]
    DuplicateGeoid { what: String, geoid: String },
    #[error("invalid GeoJSON: {0}")]
    GeoJson(String),
    #[error("geometry for geoid `{geoid}`: {source}")]
    Geometry {
        geoid: String,
        #[source]
        source: GeometryError,
    },
    #[error(
        "attribute/geometry join failed: {} geoid(s) without geometry {:?}, {} geoid(s) without attributes {:?}",
        .missing_geometry_total, .missing_geometry, .missing_attributes_total, .missing_attributes
    )]
    Join {
        missing_geometry: Vec<String>,
        missing_geometry_total: usize,
        missing_attributes: Vec<String>,
        missing_attributes_total: usize,
    },
}

/// A data row that was read but not kept.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exclusion {
    /// 1-based line number in the source file (header is line 1).
    pub line: u64,
    pub key: Option<String>,
    pub reason: String,
}

/// One census block group.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGroup {
    pub geoid: String,
    pub population: u64,
    pub housing_units: u64,
    pub perc_pov: f64,
    pub perc_snap: f64,
    pub unemp: f64,
    pub perc_nohs: f64,
    pub perc_vac: f64,
    /// Optional columns present for this row, keyed by variable.
    pub extras: BTreeMap<Variable, f64>,
}

impl BlockGroup {
    /// Per-capita and selection analyses only use populated block groups.
    pub fn is_eligible(&self) -> bool {
        self.population > 0
    }

    /// Raw attribute value; `None` for derived variables or absent extras.
    pub fn attribute(&self, var: Variable) -> Option<f64> {
        match var {
            Variable::PercPov => Some(self.perc_pov),
            Variable::PercSnap => Some(self.perc_snap),
            Variable::Unemp => Some(self.unemp),
            Variable::PercNohs => Some(self.perc_nohs),
            Variable::PercVac => Some(self.perc_vac),
            v if v.is_extra() => self.extras.get(&v).copied(),
            _ => None,
        }
    }

    /// The four deprivation components in index order: POV, SNAP, UNEMP, NOHS.
    pub fn deprivation_components(&self) -> [f64; 4] {
        [self.perc_pov, self.perc_snap, self.unemp, self.perc_nohs]
    }
}

/// Block groups of one city joined to their geometries, sorted by geoid.
#[derive(Debug, Clone, PartialEq)]
pub struct CityDataset {
    name: String,
    block_groups: Vec<BlockGroup>,
    geometries: Vec<Region>,
    exclusions: Vec<Exclusion>,
}

impl CityDataset {
    /// Builds a dataset from already-validated parts. Sorts by geoid.
    ///
    /// Panics if the lengths differ or a geoid repeats.
    pub fn from_parts(name: impl Into<String>, parts: Vec<(BlockGroup, Region)>) -> CityDataset {
        let mut parts = parts;
        parts.sort_by(|a, b| a.0.geoid.cmp(&b.0.geoid));
        assert!(
            parts.windows(2).all(|w| w[0].0.geoid != w[1].0.geoid),
            "duplicate geoid"
        );
        let (block_groups, geometries) = parts.into_iter().unzip();
        CityDataset { name: name.into(), block_groups, geometries, exclusions: Vec::new() }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn block_groups(&self) -> &[BlockGroup] {
        &self.block_groups
    }

    /// Geometries aligned with [`CityDataset::block_groups`].
    pub fn geometries(&self) -> &[Region] {
        &self.geometries
    }

    pub fn exclusions(&self) -> &[Exclusion] {
        &self.exclusions
    }

    pub fn excluded_count(&self) -> usize {
        self.exclusions.len()
    }

    pub fn len(&self) -> usize {
        self.block_groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.block_groups.is_empty()
    }

    pub fn position(&self, geoid: &str) -> Option<usize> {
        self.block_groups
            .binary_search_by(|bg| bg.geoid.as_str().cmp(geoid))
            .ok()
    }

    /// Indices of block groups with population > 0.
    pub fn eligible_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.block_groups[i].is_eligible()).collect()
    }
}

fn open(path: &Path) -> Result<File, IngestError> {
    File::open(path).map_err(|source| IngestError::Io { path: path.to_path_buf(), source })
}

/// Loads and joins an attribute CSV and a GeoJSON FeatureCollection.
pub fn load_block_groups(
    name: &str,
    attr_path: &Path,
    geom_path: &Path,
) -> Result<CityDataset, IngestError> {
    let attrs = open(attr_path)?;
    let mut geojson = String::new();
    open(geom_path)?
        .read_to_string(&mut geojson)
        .map_err(|source| IngestError::Io { path: geom_path.to_path_buf(), source })?;
    read_block_groups(name, attrs, &geojson)
}

/// Reader-based form of [`load_block_groups`].
pub fn read_block_groups<R: Read>(
    name: &str,
    attributes: R,
    geojson: &str,
) -> Result<CityDataset, IngestError> {
    let parsed = parse_attributes(name, attributes)?;
    let geometries = parse_geometries(geojson)?;

    let attr_ids: BTreeSet<&str> = parsed.seen.iter().map(String::as_str).collect();
    let missing_geometry: Vec<String> = attr_ids
        .iter()
        .filter(|g| !geometries.contains_key(**g))
        .map(|g| g.to_string())
        .collect();
    let missing_attributes: Vec<String> = geometries
        .keys()
        .filter(|g| !attr_ids.contains(g.as_str()))
        .cloned()
        .collect();
    if !missing_geometry.is_empty() || !missing_attributes.is_empty() {
        return Err(IngestError::Join {
            missing_geometry_total: missing_geometry.len(),
            missing_attributes_total: missing_attributes.len(),
            missing_geometry: missing_geometry.into_iter().take(MAX_LISTED).collect(),
            missing_attributes: missing_attributes.into_iter().take(MAX_LISTED).collect(),
        });
    }

    let mut geometries = geometries;
    let mut block_groups = parsed.rows;
    block_groups.sort_by(|a, b| a.geoid.cmp(&b.geoid));
    let regions = block_groups
        .iter()
        .map(|bg| geometries.remove(&bg.geoid).expect("joined above"))
        .collect();

    for ex in &parsed.exclusions {
        warn!(
            "{name}: excluded attribute row at line {} ({}): {}",
            ex.line,
            ex.key.as_deref().unwrap_or("?"),
            ex.reason
        );
    }
    for bg in block_groups.iter().filter(|bg| !bg.is_eligible()) {
        warn!("{name}: block group {} has population 0; kept for housing statistics only", bg.geoid);
    }

    Ok(CityDataset {
        name: name.to_string(),
        block_groups,
        geometries: regions,
        exclusions: parsed.exclusions,
    })
}

struct ParsedAttributes {
    rows: Vec<BlockGroup>,
    exclusions: Vec<Exclusion>,
    /// Every geoid read, kept or excluded.
    seen: Vec<String>,
}

fn parse_attributes<R: Read>(name: &str, reader: R) -> Result<ParsedAttributes, IngestError> {
    let what = format!("{name} attributes");
    let csv_err = |source| IngestError::Csv { what: what.clone(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);

    let mut required = [0usize; 8];
    for (slot, column) in required.iter_mut().zip(ATTRIBUTE_COLUMNS) {
        *slot = col(column).ok_or_else(|| IngestError::MissingColumn {
            what: what.clone(),
            column: column.to_string(),
        })?;
    }
    let extras: Vec<(Variable, usize)> = Variable::EXTRAS
        .iter()
        .filter_map(|&v| col(v.column().expect("extras have columns")).map(|i| (v, i)))
        .collect();

    let mut rows = Vec::new();
    let mut exclusions = Vec::new();
    let mut seen = Vec::new();
    let mut seen_set = BTreeSet::new();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(k as u64 + 2, |p| p.line());
        let geoid = record.get(required[0]).unwrap_or("").to_string();
        if geoid.is_empty() {
            exclusions.push(Exclusion { line, key: None, reason: "empty geoid".into() });
            continue;
        }
        if !seen_set.insert(geoid.clone()) {
            return Err(IngestError::DuplicateGeoid { what, geoid });
        }
        seen.push(geoid.clone());
        match parse_attribute_row(&record, &required, &extras, geoid.clone()) {
            Ok(bg) => rows.push(bg),
            Err(reason) => exclusions.push(Exclusion { line, key: Some(geoid), reason }),
        }
    }
    Ok(ParsedAttributes { rows, exclusions, seen })
}

fn parse_attribute_row(
    record: &csv::StringRecord,
    required: &[usize; 8],
    extras: &[(Variable, usize)],
    geoid: String,
) -> Result<BlockGroup, String> {
    let field = |i: usize| record.get(i).unwrap_or("");
    let count = |i: usize, column: &str| -> Result<u64, String> {
        field(i)
            .parse::<u64>()
            .map_err(|_| format!("{column}: `{}` is not a non-negative integer", field(i)))
    };
    let percentage = |i: usize, column: &str| -> Result<f64, String> {
        let v = parse_real(field(i), column)?;
        check_percentage(v, column)
    };

    let mut bg = BlockGroup {
        geoid,
        population: count(required[1], "population")?,
        housing_units: count(required[2], "housing_units")?,
        perc_pov: percentage(required[3], "perc_pov")?,
        perc_snap: percentage(required[4], "perc_snap")?,
        unemp: percentage(required[5], "unemp")?,
        perc_nohs: percentage(required[6], "perc_nohs")?,
        perc_vac: percentage(required[7], "perc_vac")?,
        extras: BTreeMap::new(),
    };
    for &(var, i) in extras {
        let column = var.column().expect("extras have columns");
        if field(i).is_empty() {
            continue;
        }
        let v = parse_real(field(i), column)?;
        let v = if var.is_percentage() {
            check_percentage(v, column)?
        } else if v < 0.0 {
            return Err(format!("{column}: {v} is negative"));
        } else {
            v
        };
        bg.extras.insert(var, v);
    }
    Ok(bg)
}

fn parse_real(s: &str, column: &str) -> Result<f64, String> {
    if s.is_empty() {
        return Err(format!("{column}: missing value"));
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("{column}: `{s}` is not a finite number")),
    }
}

fn check_percentage(v: f64, column: &str) -> Result<f64, String> {
    if (0.0..=100.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{column}: {v} outside [0, 100]"))
    }
}

fn parse_geometries(text: &str) -> Result<HashMap<String, Region>, IngestError> {
    use geojson::{GeoJson, Value};

    let gj: GeoJson = text.parse().map_err(|e: geojson::Error| IngestError::GeoJson(e.to_string()))?;
    let GeoJson::FeatureCollection(fc) = gj else {
        return Err(IngestError::GeoJson("expected a FeatureCollection".into()));
    };
    let mut out = HashMap::with_capacity(fc.features.len());
    for (k, feature) in fc.features.into_iter().enumerate() {
        let geoid = match feature.property("geoid") {
            Some(serde_json::Value::String(s)) if !s.is_empty() => s.clone(),
            _ => {
                return Err(IngestError::GeoJson(format!(
                    "feature {k} lacks a string `geoid` property"
                )))
            }
        };
        let geometry_err = |source| IngestError::Geometry { geoid: geoid.clone(), source };
        let value = feature
            .geometry
            .map(|g| g.value)
            .ok_or_else(|| geometry_err(GeometryError::Empty))?;
        let region = match value {
            Value::Polygon(rings) => Region::polygon(to_polygon(rings)),
            Value::MultiPolygon(polys) => {
                Region::multi_polygon(polys.into_iter().map(to_polygon).collect())
            }
            other => return Err(geometry_err(GeometryError::Unsupported(other.type_name().into()))),
        };
        region.validate().map_err(geometry_err)?;
        if out.insert(geoid.clone(), region).is_some() {
            return Err(IngestError::DuplicateGeoid { what: "geometry".into(), geoid });
        }
    }
    Ok(out)
}

fn to_polygon(rings: Vec<Vec<Vec<f64>>>) -> Polygon {
    let mut rings = rings.into_iter().map(|ring| {
        Ring::from_positions(
            ring.into_iter()
                .map(|pos| [pos.first().copied().unwrap_or(f64::NAN), pos.get(1).copied().unwrap_or(f64::NAN)])
                .collect(),
        )
    });
    let exterior = rings.next().unwrap_or_else(|| Ring::from_positions(Vec::new()));
    Polygon::new(exterior, rings.collect())
}

// ---------------------------------------------------------------------------
// Crimes

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CrimeCategory {
    Assault,
    Burglary,
    Robbery,
    Other,
}

impl CrimeCategory {
    /// Case-insensitive lookup in the fixed alias table; anything else is
    /// [`CrimeCategory::Other`].
    pub fn from_label(label: &str) -> CrimeCategory {
        let norm: String = label
            .trim()
            .to_ascii_lowercase()
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        match norm.as_str() {
            "assault" | "agg assault" | "aggravated assault" | "simple assault"
            | "agg. assault" | "assault & battery" | "aggravated battery" => CrimeCategory::Assault,
            "burglary" | "breaking and entering" | "breaking & entering" | "b&e"
            | "residential burglary" | "commercial burglary" => CrimeCategory::Burglary,
            "robbery" | "armed robbery" | "strong arm robbery" | "strongarm robbery" => {
                CrimeCategory::Robbery
            }
            _ => CrimeCategory::Other,
        }
    }

    pub fn is_abr(self) -> bool {
        self != CrimeCategory::Other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrimeIncident {
    pub id: String,
    pub category: CrimeCategory,
    /// Category string as it appeared in the source file.
    pub raw_category: String,
    pub lon: f64,
    pub lat: f64,
    pub date: Option<NaiveDate>,
}

/// Parsed incidents plus what was dropped or flagged on the way.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrimeLoad {
    pub incidents: Vec<CrimeIncident>,
    pub exclusions: Vec<Exclusion>,
    /// Kept incidents whose category did not match the alias table.
    pub unrecognized: usize,
}

pub fn load_crimes(path: &Path) -> Result<CrimeLoad, IngestError> {
    read_crimes(open(path)?)
}

pub fn read_crimes<R: Read>(reader: R) -> Result<CrimeLoad, IngestError> {
    let what = "crimes".to_string();
    let csv_err = |source| IngestError::Csv { what: what.clone(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() {
        return Ok(CrimeLoad::default());
    }
    let mut cols = [0usize; 4];
    for (slot, column) in cols.iter_mut().zip(CRIME_COLUMNS) {
        *slot = headers.iter().position(|h| h == column).ok_or_else(|| {
            IngestError::MissingColumn { what: what.clone(), column: column.to_string() }
        })?;
    }
    let date_col = headers.iter().position(|h| h == "date");

    let mut load = CrimeLoad::default();
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(k as u64 + 2, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let id = get(cols[0]).to_string();
        let coord = |i: usize, limit: f64| {
            get(i).parse::<f64>().ok().filter(|v| v.is_finite() && v.abs() <= limit)
        };
        let (Some(lon), Some(lat)) = (coord(cols[2], 180.0), coord(cols[3], 90.0)) else {
            load.exclusions.push(Exclusion {
                line,
                key: Some(id),
                reason: format!("coordinate out of range: lon `{}`, lat `{}`", get(cols[2]), get(cols[3])),
            });
            continue;
        };
        let raw_category = get(cols[1]).to_string();
        let category = CrimeCategory::from_label(&raw_category);
        if category == CrimeCategory::Other {
            load.unrecognized += 1;
        }
        let date = date_col
            .map(get)
            .filter(|s| !s.is_empty())
            .and_then(|s| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok());
        load.incidents.push(CrimeIncident { id, category, raw_category, lon, lat, date });
    }
    if !load.exclusions.is_empty() {
        warn!("excluded {} crime rows with invalid coordinates", load.exclusions.len());
    }
    Ok(load)
}

/// Keeps assaults, burglaries and robberies, in input order.
pub fn filter_abr(incidents: &[CrimeIncident]) -> Vec<CrimeIncident> {
    incidents.iter().filter(|i| i.category.is_abr()).cloned().collect()
}

// ---------------------------------------------------------------------------
// External vacancy measure

/// One block group's external vacancy estimates (shares of parcels judged
/// likely and very likely vacant).
#[derive(Debug, Clone, PartialEq)]
pub struct VacancyRecord {
    pub geoid: String,
    pub likely: f64,
    pub very_likely: f64,
}

/// Reads a `geoid,likely,very_likely` CSV. Rows with unparseable numbers are
/// excluded.
pub fn load_vacancy_index(path: &Path) -> Result<(Vec<VacancyRecord>, Vec<Exclusion>), IngestError> {
    read_vacancy_index(open(path)?)
}

pub fn read_vacancy_index<R: Read>(
    reader: R,
) -> Result<(Vec<VacancyRecord>, Vec<Exclusion>), IngestError> {
    let what = "vacancy index".to_string();
    let csv_err = |source| IngestError::Csv { what: what.clone(), source };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let mut cols = [0usize; 3];
    for (slot, column) in cols.iter_mut().zip(["geoid", "likely", "very_likely"]) {
        *slot = headers.iter().position(|h| h == column).ok_or_else(|| {
            IngestError::MissingColumn { what: what.clone(), column: column.to_string() }
        })?;
    }
    let mut seen = BTreeSet::new();
    let (mut records, mut exclusions) = (Vec::new(), Vec::new());
    for (k, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(k as u64 + 2, |p| p.line());
        let get = |i: usize| record.get(i).unwrap_or("");
        let geoid = get(cols[0]).to_string();
        if !seen.insert(geoid.clone()) {
            return Err(IngestError::DuplicateGeoid { what, geoid });
        }
        match (parse_real(get(cols[1]), "likely"), parse_real(get(cols[2]), "very_likely")) {
            (Ok(likely), Ok(very_likely)) => records.push(VacancyRecord { geoid, likely, very_likely }),
            (Err(reason), _) | (_, Err(reason)) => {
                exclusions.push(Exclusion { line, key: Some(geoid), reason })
            }
        }
    }
    Ok((records, exclusions))
}
