use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::PerceptId;

/// Named brain regions addressed by the primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Region {
    #[serde(rename = "ATL")]
    Atl,
    #[serde(rename = "TPS")]
    Tps,
    Hippocampus,
    #[serde(rename = "DLPFC")]
    Dlpfc,
    #[serde(rename = "VLPFC")]
    Vlpfc,
    #[serde(rename = "rPFC")]
    Rpfc,
    #[serde(rename = "FFA")]
    Ffa,
    #[serde(rename = "VMPFC")]
    Vmpfc,
    #[serde(rename = "OFC")]
    Ofc,
    SensoryBuffer,
    MotorBuffer,
}

impl Region {
    pub const ALL: [Region; 11] = [
        Region::Atl,
        Region::Tps,
        Region::Hippocampus,
        Region::Dlpfc,
        Region::Vlpfc,
        Region::Rpfc,
        Region::Ffa,
        Region::Vmpfc,
        Region::Ofc,
        Region::SensoryBuffer,
        Region::MotorBuffer,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Region::Atl => "ATL",
            Region::Tps => "TPS",
            Region::Hippocampus => "Hippocampus",
            Region::Dlpfc => "DLPFC",
            Region::Vlpfc => "VLPFC",
            Region::Rpfc => "rPFC",
            Region::Ffa => "FFA",
            Region::Vmpfc => "VMPFC",
            Region::Ofc => "OFC",
            Region::SensoryBuffer => "SensoryBuffer",
            Region::MotorBuffer => "MotorBuffer",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Region {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Region::ALL
            .into_iter()
            .find(|r| r.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown region `{s}`"))
    }
}

/// Working contents of one region.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RegionState {
    pub contents: BTreeSet<PerceptId>,
    /// Result of the last propagate through this region.
    pub output: BTreeSet<PerceptId>,
    pub protected: bool,
}
