use crate::indices::IndexBundle;
use crate::ingest::CityDataset;
use crate::stats;
use crate::variable::Variable;

use super::{SelectionError, SelectionResult};

/// Groups smaller than this are reported but flagged as low-N.
pub const LOW_N: usize = 5;

/// A table cell; `None` marks an unavailable statistic.
pub type Cell = Option<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Median,
    ZScore,
    Mean,
}

/// A column of a comparison table: the whole city or a selection.
#[derive(Debug, Clone, Copy)]
pub struct Group<'a> {
    pub label: &'a str,
    pub members: Option<&'a SelectionResult>,
}

impl<'a> Group<'a> {
    pub fn city(label: &'a str) -> Group<'a> {
        Group { label, members: None }
    }

    pub fn selected(label: &'a str, sel: &'a SelectionResult) -> Group<'a> {
        Group { label, members: Some(sel) }
    }
}

/// Variables as rows, groups as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub statistic: Statistic,
    pub variables: Vec<Variable>,
    pub groups: Vec<String>,
    pub group_sizes: Vec<usize>,
    /// `cells[v][g]`
    pub cells: Vec<Vec<Cell>>,
}

impl ComparisonTable {
    pub fn cell(&self, var: Variable, group: usize) -> Cell {
        let row = self.variables.iter().position(|v| *v == var)?;
        self.cells[row].get(group).copied().flatten()
    }

    pub fn is_low_n(&self, group: usize) -> bool {
        self.group_sizes[group] < LOW_N
    }

    /// `"**"` for |Z| > 2, `"*"` for |Z| > 1, empty otherwise. Only Z-score
    /// tables carry flags.
    pub fn flag(&self, row: usize, group: usize) -> &'static str {
        match (self.statistic, self.cells[row][group]) {
            (Statistic::ZScore, Some(z)) if z.abs() > 2.0 => "**",
            (Statistic::ZScore, Some(z)) if z.abs() > 1.0 => "*",
            _ => "",
        }
    }
}

/// Bundle rows belonging to a group.
fn member_rows(bundle: &IndexBundle, group: &Group) -> Vec<usize> {
    match group.members {
        None => (0..bundle.len()).collect(),
        Some(sel) => (0..bundle.len()).filter(|&k| sel.contains(&bundle.geoids[k])).collect(),
    }
}

fn check(city: &CityDataset, bundle: &IndexBundle) -> Result<(), SelectionError> {
    if city.name() != bundle.city {
        return Err(SelectionError::WrongCity { bundle: bundle.city.clone(), city: city.name().into() });
    }
    Ok(())
}

/// Per-variable, per-group medians over eligible block groups. Missing
/// optional attributes are skipped; a cell with no values left is
/// unavailable.
pub fn median_table(
    city: &CityDataset,
    bundle: &IndexBundle,
    groups: &[Group],
    vars: &[Variable],
) -> Result<ComparisonTable, SelectionError> {
    check(city, bundle)?;
    let members: Vec<Vec<usize>> = groups.iter().map(|g| member_rows(bundle, g)).collect();
    for (g, rows) in groups.iter().zip(&members) {
        if rows.is_empty() {
            return Err(SelectionError::EmptyGroup(g.label.to_string()));
        }
    }
    let cells = vars
        .iter()
        .map(|&var| {
            let column = bundle.column(city, var);
            members
                .iter()
                .map(|rows| {
                    let values: Vec<f64> = rows.iter().filter_map(|&k| column[k]).collect();
                    stats::median(&values).ok()
                })
                .collect()
        })
        .collect();
    Ok(ComparisonTable {
        statistic: Statistic::Median,
        variables: vars.to_vec(),
        groups: groups.iter().map(|g| g.label.to_string()).collect(),
        group_sizes: members.iter().map(Vec::len).collect(),
        cells,
    })
}

/// `(mean over sel - mean over city) / SD over city` per variable, as a
/// one-column table. Cells are unavailable when the city SD is zero or a
/// missing attribute leaves too few values.
pub fn zscore_table(
    city: &CityDataset,
    bundle: &IndexBundle,
    label: &str,
    sel: &SelectionResult,
    vars: &[Variable],
) -> Result<ComparisonTable, SelectionError> {
    check(city, bundle)?;
    let group = Group::selected(label, sel);
    let rows = member_rows(bundle, &group);
    if rows.is_empty() {
        return Err(SelectionError::EmptyGroup(label.to_string()));
    }
    let cells = vars
        .iter()
        .map(|&var| {
            let column = bundle.column(city, var);
            let all: Vec<f64> = column.iter().flatten().copied().collect();
            let selected: Vec<f64> = rows.iter().filter_map(|&k| column[k]).collect();
            let z = (|| {
                let sd = stats::std_dev(&all).ok()?;
                stats::z_score(stats::mean(&selected).ok()?, stats::mean(&all).ok()?, sd).ok()
            })();
            vec![z]
        })
        .collect();
    Ok(ComparisonTable {
        statistic: Statistic::ZScore,
        variables: vars.to_vec(),
        groups: vec![label.to_string()],
        group_sizes: vec![rows.len()],
        cells,
    })
}

/// Per-variable outcome of comparing two single-group median tables.
#[derive(Debug, Clone, PartialEq)]
pub struct HigherLower {
    pub label_a: String,
    pub label_b: String,
    pub variables: Vec<Variable>,
    /// `label_a`, `label_b`, `"tie"`, or `"n/a"` when either median is
    /// unavailable.
    pub labels: Vec<String>,
}

/// For each variable, the label of the table with the larger median.
pub fn higher_lower(
    table_a: &ComparisonTable,
    table_b: &ComparisonTable,
    label_a: &str,
    label_b: &str,
) -> Result<HigherLower, SelectionError> {
    for t in [table_a, table_b] {
        if t.statistic != Statistic::Median || t.groups.len() != 1 {
            return Err(SelectionError::TableMismatch(
                "expected single-group median tables".into(),
            ));
        }
    }
    if table_a.variables != table_b.variables {
        return Err(SelectionError::TableMismatch("variable lists differ".into()));
    }
    let labels = table_a
        .cells
        .iter()
        .zip(&table_b.cells)
        .map(|(a, b)| match (a[0], b[0]) {
            (Some(a), Some(b)) if a > b => label_a.to_string(),
            (Some(a), Some(b)) if a < b => label_b.to_string(),
            (Some(_), Some(_)) => "tie".to_string(),
            _ => "n/a".to_string(),
        })
        .collect();
    Ok(HigherLower {
        label_a: label_a.into(),
        label_b: label_b.into(),
        variables: table_a.variables.clone(),
        labels,
    })
}
