//! Canonical systems shipped with the crate, one per tabulated case, and the config-file wrapper they use.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{Degeneracy, ReducedSystem, SystemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub name: String,
    pub family: Degeneracy,
    /// Declared sign tuple; must equal what case selection computes.
    pub case: Vec<i8>,
    pub system: ReducedSystem,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureFile {
    name: String,
    family: String,
    case: Vec<i8>,
    system: Value,
}

pub fn parse_family(s: &str) -> Result<Degeneracy> {
    match s.to_ascii_lowercase().as_str() {
        "nondegenerate" => Ok(Degeneracy::NonDegenerate),
        "deltazero" => Ok(Degeneracy::DeltaZero),
        "thetazero" => Ok(Degeneracy::ThetaZero),
        "doublydegenerate" => Ok(Degeneracy::DoublyDegenerate),
        other => Err(Error::Config(format!("unknown family {other:?}"))),
    }
}

/// A config text is either a bare system spec or a fixture wrapper around one.
pub fn parse_config(text: &str) -> Result<(ReducedSystem, Option<Fixture>)> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if v.get("system").is_some() {
        let f: FixtureFile = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        let spec: SystemSpec = serde_json::from_value(f.system).map_err(|e| Error::Config(e.to_string()))?;
        let system = spec.to_reduced()?;
        let fx = Fixture { name: f.name, family: parse_family(&f.family)?, case: f.case, system: system.clone() };
        Ok((system, Some(fx)))
    } else {
        let spec: SystemSpec = serde_json::from_value(v).map_err(|e| Error::Config(e.to_string()))?;
        Ok((spec.to_reduced()?, None))
    }
}

pub fn parse_fixture(text: &str) -> Result<Fixture> {
    parse_config(text)?.1.ok_or_else(|| Error::Config("not a fixture file (no \"system\" key)".into()))
}

macro_rules! bundled {
    ($($f:literal),* $(,)?) => {
        [$(($f, include_str!(concat!("../fixtures/", $f, ".json")))),*]
    };
}

const BUNDLED: [(&str, &str); 22] = bundled!(
    "nd_theta0.5_delta0.5",
    "nd_theta2_delta1",
    "nd_theta-0.5_delta0.5",
    "nd_theta-2_delta-1",
    "nd_theta-0.5_delta-0.5",
    "nd_theta0.5_delta-0.5",
    "dz_theta1_delta1_1.2",
    "dz_theta1_delta1_4",
    "dz_theta1_delta1_0.8",
    "dz_theta-1_delta1_1.2",
    "dz_theta-1_delta1_4",
    "dz_theta-1_delta1_0.8",
    "dz_theta1_delta1_-1",
    "dz_theta-1_delta1_-1",
    "tz_delta1_theta2_1.2",
    "tz_delta1_theta2_4",
    "tz_delta1_theta2_0.8",
    "tz_delta-1_theta2_1.2",
    "tz_delta-1_theta2_4",
    "tz_delta-1_theta2_0.8",
    "tz_delta1_theta2_-1",
    "tz_delta-1_theta2_-1",
);

pub fn canonical() -> Vec<Fixture> {
    BUNDLED.iter().map(|(name, text)| parse_fixture(text).unwrap_or_else(|e| panic!("bundled fixture {name}: {e}"))).collect()
}

pub fn canonical_family(family: Degeneracy) -> Vec<Fixture> {
    canonical().into_iter().filter(|f| f.family == family).collect()
}

pub fn by_name(name: &str) -> Option<Fixture> {
    canonical().into_iter().find(|f| f.name == name)
}

/// Every `*.json` fixture in a directory, sorted by file name.
pub fn load_dir(dir: &std::path::Path) -> Result<Vec<Fixture>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::Config(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            parse_fixture(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        })
        .collect()
}
