//! Table serialization: three-decimal CSV and Markdown plus a full-precision
//! CSV sidecar.

use std::fs;
use std::path::Path;

use crate::error::Error;
use crate::selection::{Cell, ComparisonTable, HigherLower};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Markdown,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(Cell),
    Text(String),
}

/// A rendered table: row labels down the side, one header per column.
/// Each column may carry a flag column (`*`/`**`).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub corner: String,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
    pub cells: Vec<Vec<Value>>,
    pub flags: Option<Vec<Vec<&'static str>>>,
}

/// Three decimals, with negative zero printed as `0.000`; `NA` when
/// unavailable.
pub fn fmt3(v: Cell) -> String {
    match v {
        None => "NA".into(),
        Some(v) => {
            let s = format!("{v:.3}");
            if s == "-0.000" {
                "0.000".into()
            } else {
                s
            }
        }
    }
}

/// Shortest representation that round-trips.
pub fn fmt_raw(v: Cell) -> String {
    v.map_or_else(|| "NA".into(), |v| format!("{v:?}"))
}

impl Table {
    pub fn numeric(corner: &str, columns: Vec<String>, rows: Vec<String>, cells: Vec<Vec<Cell>>) -> Table {
        Table {
            corner: corner.into(),
            columns,
            rows,
            cells: cells.into_iter().map(|r| r.into_iter().map(Value::Num).collect()).collect(),
            flags: None,
        }
    }

    fn render_cell(v: &Value, raw: bool) -> String {
        match v {
            Value::Num(c) if raw => fmt_raw(*c),
            Value::Num(c) => fmt3(*c),
            Value::Text(t) => t.clone(),
        }
    }

    fn csv_lines(&self, raw: bool) -> Vec<Vec<String>> {
        let mut header = vec![self.corner.clone()];
        for c in &self.columns {
            header.push(c.clone());
            if self.flags.is_some() {
                header.push(format!("{c} flag"));
            }
        }
        let mut lines = vec![header];
        for (r, label) in self.rows.iter().enumerate() {
            let mut line = vec![label.clone()];
            for (c, v) in self.cells[r].iter().enumerate() {
                line.push(Table::render_cell(v, raw));
                if let Some(flags) = &self.flags {
                    line.push(flags[r][c].to_string());
                }
            }
            lines.push(line);
        }
        lines
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => to_csv(self.csv_lines(false)),
            Format::Markdown => {
                let mut out = String::new();
                let mut header = vec![self.corner.clone()];
                header.extend(self.columns.iter().cloned());
                out.push_str(&md_row(&header));
                let mut rule = vec!["---".to_string()];
                rule.extend(self.columns.iter().map(|_| "---:".to_string()));
                out.push_str(&md_row(&rule));
                for (r, label) in self.rows.iter().enumerate() {
                    let mut line = vec![label.clone()];
                    for (c, v) in self.cells[r].iter().enumerate() {
                        let flag = self.flags.as_ref().map_or("", |f| f[r][c]);
                        line.push(format!("{}{flag}", Table::render_cell(v, false)));
                    }
                    out.push_str(&md_row(&line));
                }
                out
            }
        }
    }

    /// Full-precision CSV used by tests and downstream tools.
    pub fn render_raw(&self) -> String {
        to_csv(self.csv_lines(true))
    }

    /// Writes `<stem>.csv`, `<stem>.md` and `<stem>_raw.csv` into `dir`.
    pub fn write_all(&self, dir: &Path, stem: &str) -> Result<(), Error> {
        write_text(&dir.join(format!("{stem}.csv")), &self.render(Format::Csv))?;
        write_text(&dir.join(format!("{stem}.md")), &self.render(Format::Markdown))?;
        write_text(&dir.join(format!("{stem}_raw.csv")), &self.render_raw())
    }
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn to_csv(lines: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(vec![]);
    for line in lines {
        w.write_record(&line).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("utf-8 input")
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// `label (N=n)`, with low-N groups marked.
pub fn group_header(label: &str, n: usize, low_n: bool) -> String {
    if low_n {
        format!("{label} (N={n}, low-N)")
    } else {
        format!("{label} (N={n})")
    }
}

impl From<&ComparisonTable> for Table {
    fn from(t: &ComparisonTable) -> Table {
        let columns = t
            .groups
            .iter()
            .enumerate()
            .map(|(g, label)| group_header(label, t.group_sizes[g], t.is_low_n(g)))
            .collect();
        let mut table = Table::numeric(
            "Variable",
            columns,
            t.variables.iter().map(|v| v.label().to_string()).collect(),
            t.cells.clone(),
        );
        if t.statistic == crate::selection::Statistic::ZScore {
            table.flags = Some(
                (0..t.variables.len())
                    .map(|r| (0..t.groups.len()).map(|g| t.flag(r, g)).collect())
                    .collect(),
            );
        }
        table
    }
}

impl From<&HigherLower> for Table {
    fn from(h: &HigherLower) -> Table {
        Table {
            corner: "Variable".into(),
            columns: vec![format!("Higher median ({} vs {})", h.label_a, h.label_b)],
            rows: h
                .variables
                .iter()
                .map(|v| if v.starred() { format!("{v}*") } else { v.to_string() })
                .collect(),
            cells: h.labels.iter().map(|l| vec![Value::Text(l.clone())]).collect(),
            flags: None,
        }
    }
}

/// Serializes a comparison table to `path` in the given format.
pub fn write_table(table: &ComparisonTable, format: Format, path: &Path) -> Result<(), Error> {
    write_text(path, &Table::from(table).render(format))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::Statistic;
    use crate::variable::Variable;

    fn z_table() -> ComparisonTable {
        ComparisonTable {
            statistic: Statistic::ZScore,
            variables: vec![Variable::PercSnap, Variable::PercVac, Variable::MedVal, Variable::AbrPop],
            groups: vec!["Selected".into()],
            group_sizes: vec![19],
            cells: vec![vec![Some(1.361)], vec![Some(2.693)], vec![Some(-0.0001)], vec![None]],
        }
    }

    #[test]
    fn number_formatting() {
        assert_eq!(fmt3(Some(-0.0004)), "0.000");
        assert_eq!(fmt3(Some(2.6934)), "2.693");
        assert_eq!(fmt3(Some(41500.0)), "41500.000");
        assert_eq!(fmt3(None), "NA");
        assert_eq!(fmt_raw(Some(0.1)), "0.1");
    }

    #[test]
    fn one_by_one_csv() {
        let t = ComparisonTable {
            statistic: Statistic::Median,
            variables: vec![Variable::PercSnap],
            groups: vec!["City".into()],
            group_sizes: vec![63],
            cells: vec![vec![Some(55.42)]],
        };
        assert_eq!(Table::from(&t).render(Format::Csv), "Variable,City (N=63)\nPERCSNAP,55.420\n");
    }

    #[test]
    fn z_flags() {
        let t = Table::from(&z_table());
        let csv = t.render(Format::Csv);
        assert_eq!(
            csv,
            "Variable,Selected (N=19),Selected (N=19) flag\n\
             PERCSNAP,1.361,*\nPERCVAC,2.693,**\nMEDVAL,0.000,\nABRPOP,NA,\n"
        );
        let md = t.render(Format::Markdown);
        assert!(md.contains("| PERCVAC | 2.693** |"));
        assert!(md.contains("| PERCSNAP | 1.361* |"));
        assert!(md.contains("| ABRPOP | NA |"));
    }

    #[test]
    fn higher_lower_rows_are_starred() {
        let h = HigherLower {
            label_a: "Selection".into(),
            label_b: "Deprivation".into(),
            variables: vec![Variable::MedVal, Variable::PercVac],
            labels: vec!["Deprivation".into(), "Selection".into()],
        };
        let csv = Table::from(&h).render(Format::Csv);
        assert_eq!(
            csv,
            "Variable,Higher median (Selection vs Deprivation)\nMEDVAL*,Deprivation\nPERCVAC,Selection\n"
        );
    }

    #[test]
    fn low_n_header() {
        assert_eq!(group_header("Selected", 1, true), "Selected (N=1, low-N)");
    }
}
