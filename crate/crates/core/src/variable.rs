use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Named per-block-group measures that appear in the comparison tables.
///
/// Display names are the upper-case table labels (`PERCSNAP`, `SD4DET`, ...).
/// Parsing is case-insensitive and also accepts the attribute CSV column names
/// (`perc_snap`, `medval`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    Sd4Own,
    Sd4Det,
    Pca4,
    AbrPop,
    PercPov,
    PercSnap,
    Unemp,
    PercNohs,
    PercVac,
    MedVal,
    Perc40Comm,
    PercBlack,
    PercHous30k,
    PercPubTra,
    PercRent,
    PercWhite,
    RevComm,
}

impl Variable {
    pub const ALL: [Variable; 17] = [
        Variable::Sd4Own,
        Variable::Sd4Det,
        Variable::Pca4,
        Variable::AbrPop,
        Variable::PercPov,
        Variable::PercSnap,
        Variable::Unemp,
        Variable::PercNohs,
        Variable::PercVac,
        Variable::MedVal,
        Variable::Perc40Comm,
        Variable::PercBlack,
        Variable::PercHous30k,
        Variable::PercPubTra,
        Variable::PercRent,
        Variable::PercWhite,
        Variable::RevComm,
    ];

    /// Optional attribute columns, in CSV column order.
    pub const EXTRAS: [Variable; 8] = [
        Variable::MedVal,
        Variable::Perc40Comm,
        Variable::PercBlack,
        Variable::PercHous30k,
        Variable::PercPubTra,
        Variable::PercRent,
        Variable::PercWhite,
        Variable::RevComm,
    ];

    /// Rows of the median and Z-score comparison tables.
    pub const COMPARISON: [Variable; 12] = [
        Variable::Sd4Det,
        Variable::AbrPop,
        Variable::MedVal,
        Variable::Perc40Comm,
        Variable::PercBlack,
        Variable::PercHous30k,
        Variable::PercPubTra,
        Variable::PercRent,
        Variable::PercSnap,
        Variable::PercVac,
        Variable::PercWhite,
        Variable::RevComm,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variable::Sd4Own => "SD4OWN",
            Variable::Sd4Det => "SD4DET",
            Variable::Pca4 => "PCA4",
            Variable::AbrPop => "ABRPOP",
            Variable::PercPov => "PERCPOV",
            Variable::PercSnap => "PERCSNAP",
            Variable::Unemp => "UNEMP",
            Variable::PercNohs => "PERCNOHS",
            Variable::PercVac => "PERCVAC",
            Variable::MedVal => "MEDVAL",
            Variable::Perc40Comm => "PERC40COMM",
            Variable::PercBlack => "PERCBLACK",
            Variable::PercHous30k => "PERCHOUS30K",
            Variable::PercPubTra => "PERCPUBTRA",
            Variable::PercRent => "PERCRENT",
            Variable::PercWhite => "PERCWHITE",
            Variable::RevComm => "REVCOMM",
        }
    }

    /// Column name in the attribute CSV, for variables read from it.
    pub fn column(self) -> Option<&'static str> {
        Some(match self {
            Variable::PercPov => "perc_pov",
            Variable::PercSnap => "perc_snap",
            Variable::Unemp => "unemp",
            Variable::PercNohs => "perc_nohs",
            Variable::PercVac => "perc_vac",
            Variable::MedVal => "medval",
            Variable::Perc40Comm => "perc40comm",
            Variable::PercBlack => "percblack",
            Variable::PercHous30k => "perchous30k",
            Variable::PercPubTra => "percpubtra",
            Variable::PercRent => "percrent",
            Variable::PercWhite => "percwhite",
            Variable::RevComm => "revcomm",
            Variable::Sd4Own | Variable::Sd4Det | Variable::Pca4 | Variable::AbrPop => return None,
        })
    }

    pub fn is_extra(self) -> bool {
        Variable::EXTRAS.contains(&self)
    }

    /// Whether valid values are bounded to `[0, 100]`.
    pub fn is_percentage(self) -> bool {
        self.column().is_some() && self != Variable::MedVal
    }

    /// Variables whose "lower is the notable direction" star is carried as
    /// display metadata in the higher/lower table.
    pub fn starred(self) -> bool {
        matches!(self, Variable::MedVal | Variable::PercWhite)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown variable `{0}`")]
pub struct UnknownVariable(pub String);

impl FromStr for Variable {
    type Err = UnknownVariable;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let wanted = s.trim();
        Variable::ALL
            .iter()
            .copied()
            .find(|v| {
                v.label().eq_ignore_ascii_case(wanted)
                    || v.column().is_some_and(|c| c.eq_ignore_ascii_case(wanted))
            })
            .or(match wanted.to_ascii_uppercase().as_str() {
                "POV" => Some(Variable::PercPov),
                "SNAP" => Some(Variable::PercSnap),
                "NOHS" => Some(Variable::PercNohs),
                "VAC" => Some(Variable::PercVac),
                "ABR" => Some(Variable::AbrPop),
                _ => None,
            })
            .ok_or_else(|| UnknownVariable(s.to_string()))
    }
}
