use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use super::{
    eligible_weights, load_city, morans_i_for, prepare_reference, run_pipeline,
    select_all, CityFailure, RunConfig, Stage,
};
use crate::error::Error;
use crate::geo::Scheme;
use crate::indices::build_index_bundle;
use crate::variable::Variable;

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Compare block groups across cities against a reference city")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectMode {
    /// Exceeds all three reference medians.
    Trivariate,
    /// Highest SD4DET, `top_fraction` of the city.
    TopFraction,
    /// Highest SD4DET, as many as the trivariate selection.
    TopN,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every city and write all tables and maps.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print the geoids selected in one city.
    Select {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        city: String,
        #[arg(long, value_enum, default_value_t = SelectMode::Trivariate)]
        mode: SelectMode,
    },
    /// Print Moran's I of one variable in one city.
    Moran {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        city: String,
        #[arg(long)]
        var: Variable,
        #[arg(long)]
        scheme: Option<Scheme>,
    },
    /// Print natural breaks of a mapped variable.
    Breaks {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        var: Variable,
        #[arg(long)]
        k: Option<usize>,
        /// Defaults to the reference city.
        #[arg(long)]
        city: Option<String>,
    },
}

fn fail(f: CityFailure) -> i32 {
    eprintln!("error: {f}");
    f.exit_code()
}

fn fail_plain(e: Error) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}

/// Executes a parsed command, printing results to stdout and diagnostics to
/// stderr. Returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    let config = match &cli.command {
        Command::Run { config }
        | Command::Select { config, .. }
        | Command::Moran { config, .. }
        | Command::Breaks { config, .. } => config,
    };
    let mut cfg = match RunConfig::load(config) {
        Ok(cfg) => cfg,
        Err(e) => return fail_plain(e.into()),
    };
    match cli.command {
        Command::Run { .. } => match run_pipeline(&cfg) {
            Ok(report) => {
                for c in &report.cities {
                    match c {
                        Ok(r) => println!(
                            "{}: {} of {} eligible block groups selected ({:.1}%)",
                            r.city, r.selected, r.eligible, 100.0 * r.selected_share
                        ),
                        Err(f) => eprintln!("error: {f}"),
                    }
                }
                report.exit_code()
            }
            Err(f) => fail(f),
        },
        Command::Select { city, mode, .. } => {
            let run = || -> Result<Vec<String>, CityFailure> {
                let c = cfg.city(&city).map_err(|e| CityFailure {
                    city: city.clone(),
                    stage: Stage::Ingest,
                    source: e.into(),
                })?;
                let reference = prepare_reference(&cfg)?;
                let loaded = load_city(c)?;
                let bundle = build_index_bundle(&loaded.dataset, &reference.loaded.dataset, &loaded.join)
                    .map_err(|e| CityFailure { city: city.clone(), stage: Stage::Indices, source: e.into() })?;
                let sel = select_all(&loaded.dataset, &bundle, &reference.medians, cfg.top_fraction)
                    .map_err(|source| CityFailure { city: city.clone(), stage: Stage::Selection, source })?;
                let chosen = match mode {
                    SelectMode::Trivariate => Some(sel.trivariate),
                    SelectMode::TopFraction => Some(sel.top_fraction),
                    SelectMode::TopN => sel.top_n,
                };
                Ok(chosen.map(|s| s.geoids.into_iter().collect()).unwrap_or_default())
            };
            match run() {
                Ok(ids) => {
                    for id in ids {
                        println!("{id}");
                    }
                    0
                }
                Err(f) => fail(f),
            }
        }
        Command::Moran { city, var, scheme, .. } => {
            let run = || -> Result<f64, CityFailure> {
                let c = cfg.city(&city).map_err(|e| CityFailure {
                    city: city.clone(),
                    stage: Stage::Ingest,
                    source: e.into(),
                })?;
                let stage = |stage| {
                    let city = city.clone();
                    move |e: Error| CityFailure { city, stage, source: e }
                };
                let reference = load_city(cfg.reference())?;
                let loaded = load_city(c)?;
                let bundle = build_index_bundle(&loaded.dataset, &reference.dataset, &loaded.join)
                    .map_err(|e| stage(Stage::Indices)(e.into()))?;
                let w = eligible_weights(&loaded.dataset, &bundle, scheme.unwrap_or(cfg.weights_scheme));
                morans_i_for(&loaded.dataset, &bundle, &w, var).map_err(stage(Stage::Statistics))
            };
            match run() {
                Ok(i) => {
                    println!("{i}");
                    0
                }
                Err(f) => fail(f),
            }
        }
        Command::Breaks { var, k, city, .. } => {
            if let Some(k) = k {
                cfg.class_count = k;
                if let Err(e) = cfg.validate() {
                    return fail_plain(e.into());
                }
            }
            let name = city.unwrap_or_else(|| cfg.reference_city.clone());
            let run = || -> Result<Vec<f64>, CityFailure> {
                let reference = load_city(cfg.reference())?;
                let c = cfg.city(&name).map_err(|e| CityFailure {
                    city: name.clone(),
                    stage: Stage::Ingest,
                    source: e.into(),
                })?;
                let loaded = if c.name == cfg.reference_city { reference.clone() } else { load_city(c)? };
                let bundle = build_index_bundle(&loaded.dataset, &reference.dataset, &loaded.join)
                    .map_err(|e| CityFailure { city: name.clone(), stage: Stage::Indices, source: e.into() })?;
                let (_, values) = bundle.present(&loaded.dataset, var);
                crate::stats::jenks_breaks(&values, cfg.class_count).map_err(|e| CityFailure {
                    city: name.clone(),
                    stage: Stage::Statistics,
                    source: e.into(),
                })
            };
            match run() {
                Ok(breaks) => {
                    for b in breaks {
                        println!("{b}");
                    }
                    0
                }
                Err(f) => fail(f),
            }
        }
    }
}
