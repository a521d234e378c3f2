//! Settings shared by the config file and the command line.
//!
//! Every command has a `*Flags` struct (clap, all optional) and a
//! `*Settings` struct (serde, with defaults). Resolution overlays the flags
//! that were given on the config file's JSON object and deserialises the
//! result, so flags override file values and the resolved settings echo back
//! as a config file that reproduces the run.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use debias_bench::toy_bench::BenchMethod;
use debias_core::tuning::{DEFAULT_ALPHA, DEFAULT_N_BOOT};
use debias_core::{CoefficientKind, DEFAULT_R_MAX};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

/// `auto` or a fixed value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Auto {
    #[default]
    Auto,
    Value(f64),
}

impl Auto {
    pub fn value(self) -> Option<f64> {
        match self {
            Auto::Auto => None,
            Auto::Value(v) => Some(v),
        }
    }
}

impl FromStr for Auto {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(Auto::Auto);
        }
        s.trim().parse::<f64>().map(Auto::Value).map_err(|_| format!("expected 'auto' or a number, got '{s}'"))
    }
}

impl Serialize for Auto {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Auto::Auto => s.serialize_str("auto"),
            Auto::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Auto {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Auto::Value(v)),
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// `log`, `reciprocal` or `custom:<coefficient file>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum FunctionChoice {
    Log,
    Reciprocal,
    Custom(PathBuf),
}

impl FromStr for FunctionChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "log" => Ok(FunctionChoice::Log),
            "reciprocal" => Ok(FunctionChoice::Reciprocal),
            _ => match s.strip_prefix("custom:") {
                Some(path) if !path.is_empty() => Ok(FunctionChoice::Custom(PathBuf::from(path))),
                _ => Err(format!("unknown function '{s}' (expected log, reciprocal or custom:<file>)")),
            },
        }
    }
}

impl fmt::Display for FunctionChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionChoice::Log => f.write_str("log"),
            FunctionChoice::Reciprocal => f.write_str("reciprocal"),
            FunctionChoice::Custom(path) => write!(f, "custom:{}", path.display()),
        }
    }
}

impl TryFrom<String> for FunctionChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<FunctionChoice> for String {
    fn from(f: FunctionChoice) -> String {
        f.to_string()
    }
}

/// `gaussian:<mean>,<var>`, `toy-lvm:<d>,<theta>[,<y_1>,...,<y_d>]` or `stdin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SourceChoice {
    Gaussian { mean: f64, var: f64 },
    ToyLvm { d: usize, theta: f64, y: Option<Vec<f64>> },
    Stdin,
}

fn numbers(list: &str, what: &str) -> Result<Vec<f64>, String> {
    list.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| format!("{what}: '{v}' is not a number"))).collect()
}

impl FromStr for SourceChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "stdin" {
            return Ok(SourceChoice::Stdin);
        }
        let (kind, args) = s.split_once(':').ok_or_else(|| {
            format!("unknown source '{s}' (expected gaussian:<mean>,<var>, toy-lvm:<d>,<theta>[,y...] or stdin)")
        })?;
        match kind {
            "gaussian" => match numbers(args, "gaussian source")?[..] {
                [mean, var] => Ok(SourceChoice::Gaussian { mean, var }),
                _ => Err(format!("gaussian source needs <mean>,<var>, got '{args}'")),
            },
            "toy-lvm" => {
                let (d, rest) =
                    args.split_once(',').ok_or_else(|| format!("toy-lvm source needs <d>,<theta>, got '{args}'"))?;
                let d: usize = d.trim().parse().map_err(|_| format!("toy-lvm source: d = '{d}' is not a count"))?;
                let vals = numbers(rest, "toy-lvm source")?;
                match vals.len() {
                    1 => Ok(SourceChoice::ToyLvm { d, theta: vals[0], y: None }),
                    n if n == d + 1 => Ok(SourceChoice::ToyLvm { d, theta: vals[0], y: Some(vals[1..].to_vec()) }),
                    n => Err(format!("toy-lvm source: expected theta and either 0 or {d} entries of y, got {}", n - 1)),
                }
            }
            _ => Err(format!("unknown source kind '{kind}'")),
        }
    }
}

impl fmt::Display for SourceChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceChoice::Gaussian { mean, var } => write!(f, "gaussian:{mean},{var}"),
            SourceChoice::ToyLvm { d, theta, y } => {
                write!(f, "toy-lvm:{d},{theta}")?;
                for v in y.iter().flatten() {
                    write!(f, ",{v}")?;
                }
                Ok(())
            }
            SourceChoice::Stdin => f.write_str("stdin"),
        }
    }
}

impl TryFrom<String> for SourceChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SourceChoice> for String {
    fn from(s: SourceChoice) -> String {
        s.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    /// One JSON object per line.
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TuneSettings {
    pub source: Option<SourceChoice>,
    pub n0: usize,
    pub alpha: f64,
    pub n_boot: usize,
    pub seed: u64,
}

impl Default for TuneSettings {
    fn default() -> Self {
        Self { source: None, n0: 10, alpha: DEFAULT_ALPHA, n_boot: DEFAULT_N_BOOT, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateSettings {
    pub function: FunctionChoice,
    pub estimator: CoefficientKind,
    pub x0: Auto,
    pub p: Auto,
    pub n0: usize,
    pub alpha: f64,
    pub n_boot: usize,
    pub replicates: u64,
    pub seed: u64,
    pub r_max: usize,
    pub source: Option<SourceChoice>,
    pub gradient: bool,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub meta: Option<PathBuf>,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self {
            function: FunctionChoice::Log,
            estimator: CoefficientKind::Cycling,
            x0: Auto::Auto,
            p: Auto::Auto,
            n0: 10,
            alpha: DEFAULT_ALPHA,
            n_boot: DEFAULT_N_BOOT,
            replicates: 1,
            seed: 0,
            r_max: DEFAULT_R_MAX,
            source: None,
            gradient: false,
            output: None,
            format: Format::Csv,
            meta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyBenchSettings {
    pub d: usize,
    pub n: usize,
    pub theta: f64,
    pub budget: f64,
    pub methods: Vec<BenchMethod>,
    pub replicates: u64,
    pub seed: u64,
    pub p_tilde: f64,
    pub max_cost: u64,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub meta: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl Default for ToyBenchSettings {
    fn default() -> Self {
        Self {
            d: 2,
            n: 10,
            theta: 0.0,
            budget: 6.0,
            methods: BenchMethod::ALL.to_vec(),
            replicates: 100,
            seed: 0,
            p_tilde: debias_bench::mlmc::DEFAULT_P_TILDE,
            max_cost: debias_bench::mlmc::DEFAULT_MAX_COST,
            output: None,
            format: Format::Csv,
            meta: None,
            svg: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudySettings {
    pub function: FunctionChoice,
    pub source: SourceChoice,
    pub x0: Auto,
    pub p: Vec<f64>,
    pub estimators: Vec<CoefficientKind>,
    pub replicates: u64,
    pub seed: u64,
    pub n0: usize,
    pub r_max: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub meta: Option<PathBuf>,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            function: FunctionChoice::Reciprocal,
            source: SourceChoice::Gaussian { mean: 1.0, var: 1.0 },
            x0: Auto::Auto,
            p: vec![0.1, 0.01, 0.001],
            estimators: CoefficientKind::ALL.to_vec(),
            replicates: 1000,
            seed: 0,
            n0: 0,
            r_max: DEFAULT_R_MAX,
            output: None,
            format: Format::Csv,
            meta: None,
        }
    }
}

fn read_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read config file {}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(CliError::Input(format!("config file {} must hold a JSON object", path.display()))),
        Err(e) => Err(CliError::Input(format!("config file {}: {e}", path.display()))),
    }
}

/// Overlays the non-empty fields of `flags` on the config file (if any) and
/// deserialises the result.
pub fn resolve<F: Serialize, S: DeserializeOwned>(config: Option<&Path>, flags: &F) -> CliResult<S> {
    let mut merged = match config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    let Value::Object(given) = serde_json::to_value(flags).map_err(|e| CliError::Config(e.to_string()))? else {
        return Err(CliError::Config("flags must serialise to an object".into()));
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_strings_round_trip() {
        for s in ["gaussian:1,0.5", "toy-lvm:2,0", "toy-lvm:2,0.5,1,-1", "stdin"] {
            let parsed: SourceChoice = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
        assert!("toy-lvm:2,0,1".parse::<SourceChoice>().is_err());
        assert!("gaussian:1".parse::<SourceChoice>().is_err());
        assert!("poisson:1".parse::<SourceChoice>().is_err());
    }

    #[test]
    fn auto_accepts_keyword_and_numbers() {
        assert_eq!("auto".parse::<Auto>().unwrap(), Auto::Auto);
        assert_eq!("2.5".parse::<Auto>().unwrap(), Auto::Value(2.5));
        let v: Auto = serde_json::from_str("0.1").unwrap();
        assert_eq!(v, Auto::Value(0.1));
        assert_eq!(serde_json::to_string(&Auto::Auto).unwrap(), "\"auto\"");
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"n0": 50, "seed": 3, "source": "gaussian:1,1"}"#).unwrap();
        #[derive(Serialize)]
        struct Flags {
            seed: Option<u64>,
            n0: Option<usize>,
        }
        let s: TuneSettings = resolve(Some(&path), &Flags { seed: Some(9), n0: None }).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.n0, 50);
        assert_eq!(s.source, Some(SourceChoice::Gaussian { mean: 1.0, var: 1.0 }));
        std::fs::write(&path, r#"{"n_zero": 50}"#).unwrap();
        assert!(resolve::<_, TuneSettings>(Some(&path), &Flags { seed: None, n0: None }).is_err());
    }
}
