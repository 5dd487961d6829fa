//! Configuration, the multi-city pipeline, table and map export, and the
//! `atlas` command line.

mod choropleth;
pub mod cli;
mod config;
mod pipeline;
mod report;

pub use choropleth::{export_choropleth, to_geojson, ChoroplethExport, ChoroplethFeature};
pub use config::{CityConfig, ConfigError, RunConfig};
pub use pipeline::{
    aligned, analyze_city, eligible_weights, load_city, map_breaks, morans_i_for,
    prepare_reference, run_pipeline, select_all, thread_pool, CityAnalysis, CityFailure,
    CityReport, LoadedCity, Reference, RunReport, Selections, Stage, CORRELATION_VARIABLES,
    MAP_VARIABLES, SUMMARY_VARIABLES,
};
pub use report::{fmt3, fmt_raw, group_header, write_table, Format, Table, Value};
