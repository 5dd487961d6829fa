//! Classified GeoJSON export for choropleth maps.

use geojson::{Feature, FeatureCollection, Geometry, JsonObject, JsonValue};

use crate::geo::{Polygon, Region};
use crate::ingest::CityDataset;
use crate::selection::SelectionResult;
use crate::stats::classify;
use crate::variable::Variable;

#[derive(Debug, Clone, PartialEq)]
pub struct ChoroplethFeature {
    pub geoid: String,
    pub value: Option<f64>,
    /// 0-based class; `None` when the value is unavailable.
    pub class: Option<usize>,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoroplethExport {
    pub city: String,
    pub variable: Variable,
    /// Class upper bounds; the last class is open-ended.
    pub breaks: Vec<f64>,
    /// City whose values produced the breaks.
    pub breaks_source: String,
    pub features: Vec<ChoroplethFeature>,
}

impl ChoroplethExport {
    /// Number of features per class.
    pub fn histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.breaks.len() + 1];
        for c in self.features.iter().filter_map(|f| f.class) {
            h[c] += 1;
        }
        h
    }
}

/// Classifies every block group of `city` against `breaks`. `values` is
/// aligned with the city's block groups. Panics if the lengths differ or the
/// breaks are not strictly increasing.
pub fn export_choropleth(
    city: &CityDataset,
    variable: Variable,
    values: &[Option<f64>],
    breaks: &[f64],
    breaks_source: &str,
    selection: Option<&SelectionResult>,
) -> ChoroplethExport {
    assert_eq!(values.len(), city.len(), "values must align with block groups");
    assert!(breaks.windows(2).all(|w| w[0] < w[1]), "breaks must be strictly increasing");
    let features = city
        .block_groups()
        .iter()
        .zip(values)
        .map(|(bg, &value)| ChoroplethFeature {
            geoid: bg.geoid.clone(),
            value,
            class: value.map(|v| classify(v, breaks)),
            selected: selection.is_some_and(|s| s.contains(&bg.geoid)),
        })
        .collect();
    ChoroplethExport {
        city: city.name().into(),
        variable,
        breaks: breaks.to_vec(),
        breaks_source: breaks_source.into(),
        features,
    }
}

fn polygon_coords(p: &Polygon) -> Vec<Vec<Vec<f64>>> {
    p.rings().map(|r| r.coords().iter().map(|c| c.to_vec()).collect()).collect()
}

fn geometry(region: &Region) -> Geometry {
    let value = if region.is_multi() {
        geojson::Value::MultiPolygon(region.polygons().iter().map(polygon_coords).collect())
    } else {
        geojson::Value::Polygon(polygon_coords(&region.polygons()[0]))
    };
    Geometry::new(value)
}

fn number(v: Option<f64>) -> JsonValue {
    v.map_or(JsonValue::Null, JsonValue::from)
}

/// The export as a GeoJSON FeatureCollection with the breaks and
/// classification metadata as foreign members.
pub fn to_geojson(export: &ChoroplethExport, city: &CityDataset) -> String {
    let features = export
        .features
        .iter()
        .zip(city.geometries())
        .map(|(f, region)| {
            let mut props = JsonObject::new();
            props.insert("geoid".into(), f.geoid.clone().into());
            props.insert("value".into(), number(f.value));
            props.insert("class".into(), f.class.map_or(JsonValue::Null, JsonValue::from));
            props.insert("selected".into(), f.selected.into());
            Feature {
                bbox: None,
                geometry: Some(geometry(region)),
                id: None,
                properties: Some(props),
                foreign_members: None,
            }
        })
        .collect();
    let mut meta = JsonObject::new();
    meta.insert("city".into(), export.city.clone().into());
    meta.insert("variable".into(), export.variable.label().into());
    meta.insert("method".into(), "fisher-jenks".into());
    meta.insert("class_count".into(), (export.breaks.len() + 1).into());
    meta.insert("breaks".into(), export.breaks.clone().into());
    meta.insert("breaks_source".into(), export.breaks_source.clone().into());
    let fc = FeatureCollection { bbox: None, features, foreign_members: Some(meta) };
    let mut text = serde_json::to_string_pretty(&fc).expect("serializable");
    text.push('\n');
    text
}
