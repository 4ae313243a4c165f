//! Line-based run configuration: UTF-8, `#` comments, `[section]` headers,
//! `key = value` entries. Unknown sections or keys are rejected; every
//! default is materialized so the effective configuration can be echoed into
//! output headers.

use crate::expr::C;
use crate::field::{Point, Polydisc, PolyVectorField};
use crate::scenario::find_scenario;
use crate::variety::AnalyticSetModel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    BadLine(usize),
    #[error("line {0}: unknown section {1:?}")]
    UnknownSection(usize, String),
    #[error("line {0}: unknown key {1:?} in section {2:?}")]
    UnknownKey(usize, String, String),
    #[error("line {0}: bad value for {1:?}: {2}")]
    BadValue(usize, String, String),
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("custom scenario section is missing required key {0:?}")]
    MissingCustomKey(&'static str),
    #[error("seed is required for sampling subcommands")]
    MissingSeed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Text,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "csv" => Some(OutputFormat::Csv),
            "text" => Some(OutputFormat::Text),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Text => "text",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ConeCfg {
    pub point: Option<Vec<C>>,
    pub scales: usize,
    pub samples_per_scale: usize,
    pub base_scale: Option<f64>,
}

impl Default for ConeCfg {
    fn default() -> Self {
        ConeCfg { point: None, scales: 21, samples_per_scale: 1600, base_scale: None }
    }
}

#[derive(Clone, Debug)]
pub struct TransversalCfg {
    pub point: Option<Vec<C>>,
    pub theta_min: f64,
    pub nbhd_radius: Option<f64>,
}

impl Default for TransversalCfg {
    fn default() -> Self {
        TransversalCfg { point: None, theta_min: crate::cone::THETA_MIN_DEFAULT, nbhd_radius: None }
    }
}

#[derive(Clone, Debug)]
pub struct EtaCfg {
    pub sequence: Option<String>,
    pub point: Option<Vec<C>>,
    pub horizon: usize,
}

impl Default for EtaCfg {
    fn default() -> Self {
        EtaCfg { sequence: None, point: None, horizon: 100 }
    }
}

#[derive(Clone, Debug)]
pub struct ScanCfg {
    pub grid: usize,
    /// Absolute gap tolerance; `None` means 0.1 * max(s).
    pub gap_tol: Option<f64>,
}

impl Default for ScanCfg {
    fn default() -> Self {
        ScanCfg { grid: 12, gap_tol: None }
    }
}

#[derive(Clone, Debug)]
pub struct CompleteCfg {
    pub target: Option<Vec<C>>,
    pub kmax: usize,
}

impl Default for CompleteCfg {
    fn default() -> Self {
        CompleteCfg { target: None, kmax: 20 }
    }
}

#[derive(Clone, Debug)]
pub struct ConvergeCfg {
    pub family: String,
    pub steps: usize,
    pub u_scale: f64,
    pub compact_scale: f64,
}

impl Default for ConvergeCfg {
    fn default() -> Self {
        ConvergeCfg { family: "shrink".into(), steps: 64, u_scale: 0.45, compact_scale: 0.3 }
    }
}

#[derive(Clone, Debug)]
pub struct Ex32Cfg {
    pub k: u32,
    pub rho: f64,
    pub grid: usize,
}

impl Default for Ex32Cfg {
    fn default() -> Self {
        Ex32Cfg { k: 1, rho: 0.5, grid: 8 }
    }
}

/// A scenario defined inline in the configuration (cone/transversality
/// subcommands only; no leaf charts are registered).
#[derive(Clone, Debug)]
pub struct CustomScenario {
    pub id: String,
    pub n: usize,
    pub field_src: String,
    pub center: Vec<C>,
    pub radii: Vec<f64>,
    pub pieces: Vec<String>,
}

impl CustomScenario {
    pub fn build(&self) -> Result<(PolyVectorField, AnalyticSetModel), String> {
        let domain = Polydisc::new(Point::new(self.center.clone()), self.radii.clone());
        let field = PolyVectorField::parse(&self.field_src, domain).map_err(|e| e.to_string())?;
        let pieces: Result<Vec<_>, _> = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, src)| AnalyticSetModel::parse_piece(src, &format!("piece{i}")))
            .collect();
        Ok((field, AnalyticSetModel::new(pieces.map_err(|e| e.to_string())?)))
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub scenario: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub format: Option<OutputFormat>,
    pub cone: ConeCfg,
    pub transversal: TransversalCfg,
    pub eta: EtaCfg,
    pub scan: ScanCfg,
    pub complete: CompleteCfg,
    pub converge: ConvergeCfg,
    pub ex32: Ex32Cfg,
    pub custom: Option<CustomScenario>,
}

impl RunConfig {
    pub fn effective_format(&self) -> OutputFormat {
        self.format.unwrap_or(OutputFormat::Text)
    }

    pub fn require_seed(&self) -> Result<u64, ConfigError> {
        self.seed.ok_or(ConfigError::MissingSeed)
    }

    /// Echo of every effective value, used as the output header.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("# {k} = {v}\n"));
        kv("scenario", self.scenario.clone().unwrap_or_else(|| "(unset)".into()));
        kv("seed", self.seed.map(|s| s.to_string()).unwrap_or_else(|| "(unset)".into()));
        kv("out", self.out.clone().unwrap_or_else(|| "(stdout)".into()));
        kv("format", self.effective_format().label().into());
        kv("cone.scales", self.cone.scales.to_string());
        kv("cone.samples_per_scale", self.cone.samples_per_scale.to_string());
        kv(
            "cone.base_scale",
            self.cone.base_scale.map(|v| v.to_string()).unwrap_or_else(|| "auto".into()),
        );
        kv("transversal.theta_min", self.transversal.theta_min.to_string());
        kv(
            "transversal.nbhd_radius",
            self.transversal
                .nbhd_radius
                .map(|v| v.to_string())
                .unwrap_or_else(|| "auto".into()),
        );
        kv("eta.horizon", self.eta.horizon.to_string());
        kv("scan.grid", self.scan.grid.to_string());
        kv(
            "scan.gap_tol",
            self.scan.gap_tol.map(|v| v.to_string()).unwrap_or_else(|| "0.1*max(s)".into()),
        );
        kv("complete.kmax", self.complete.kmax.to_string());
        kv("converge.family", self.converge.family.clone());
        kv("converge.steps", self.converge.steps.to_string());
        kv("converge.u_scale", self.converge.u_scale.to_string());
        kv("converge.compact_scale", self.converge.compact_scale.to_string());
        kv("ex32.k", self.ex32.k.to_string());
        kv("ex32.rho", self.ex32.rho.to_string());
        kv("ex32.grid", self.ex32.grid.to_string());
        out
    }
}

fn parse_point_value(v: &str) -> Result<Vec<C>, String> {
    crate::expr::parse_tuple(v).map_err(|e| e.to_string())
}

/// Parse a configuration file body.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut section = String::from("run");
    let mut custom_id: Option<String> = None;
    let mut custom_n: Option<usize> = None;
    let mut custom_field: Option<String> = None;
    let mut custom_center: Option<Vec<C>> = None;
    let mut custom_radii: Option<Vec<f64>> = None;
    let mut custom_pieces: Vec<String> = Vec::new();
    let mut saw_custom = false;

    for (ln, raw) in text.lines().enumerate() {
        let lineno = ln + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or(ConfigError::BadLine(lineno))?
                .trim()
                .to_string();
            match name.as_str() {
                "run" | "cone" | "transversal" | "eta" | "scan" | "complete" | "converge"
                | "ex32" | "scenario" => {
                    if name == "scenario" {
                        saw_custom = true;
                    }
                    section = name;
                }
                other => return Err(ConfigError::UnknownSection(lineno, other.to_string())),
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::BadLine(lineno))?;
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: &str| ConfigError::BadValue(lineno, key.to_string(), msg.to_string());
        macro_rules! parse {
            ($t:ty) => {
                value.parse::<$t>().map_err(|e| bad(&e.to_string()))?
            };
        }
        match (section.as_str(), key) {
            ("run", "scenario") => cfg.scenario = Some(value.to_string()),
            ("run", "seed") => cfg.seed = Some(parse!(u64)),
            ("run", "out") => cfg.out = Some(value.to_string()),
            ("run", "format") => {
                cfg.format =
                    Some(OutputFormat::parse(value).ok_or_else(|| bad("expected csv|text"))?)
            }
            ("cone", "point") => {
                cfg.cone.point = Some(parse_point_value(value).map_err(|e| bad(&e))?)
            }
            ("cone", "scales") => cfg.cone.scales = parse!(usize),
            ("cone", "samples_per_scale") => cfg.cone.samples_per_scale = parse!(usize),
            ("cone", "base_scale") => cfg.cone.base_scale = Some(parse!(f64)),
            ("transversal", "point") => {
                cfg.transversal.point = Some(parse_point_value(value).map_err(|e| bad(&e))?)
            }
            ("transversal", "theta_min") => cfg.transversal.theta_min = parse!(f64),
            ("transversal", "nbhd_radius") => cfg.transversal.nbhd_radius = Some(parse!(f64)),
            ("eta", "sequence") => cfg.eta.sequence = Some(value.to_string()),
            ("eta", "point") => cfg.eta.point = Some(parse_point_value(value).map_err(|e| bad(&e))?),
            ("eta", "horizon") => cfg.eta.horizon = parse!(usize),
            ("scan", "grid") => cfg.scan.grid = parse!(usize),
            ("scan", "gap_tol") => {
                if value == "auto" {
                    cfg.scan.gap_tol = None;
                } else {
                    cfg.scan.gap_tol = Some(parse!(f64));
                }
            }
            ("complete", "target") => {
                cfg.complete.target = Some(parse_point_value(value).map_err(|e| bad(&e))?)
            }
            ("complete", "kmax") => cfg.complete.kmax = parse!(usize),
            ("converge", "family") => cfg.converge.family = value.to_string(),
            ("converge", "steps") => cfg.converge.steps = parse!(usize),
            ("converge", "u_scale") => cfg.converge.u_scale = parse!(f64),
            ("converge", "compact_scale") => cfg.converge.compact_scale = parse!(f64),
            ("ex32", "k") => cfg.ex32.k = parse!(u32),
            ("ex32", "rho") => cfg.ex32.rho = parse!(f64),
            ("ex32", "grid") => cfg.ex32.grid = parse!(usize),
            ("scenario", "id") => custom_id = Some(value.to_string()),
            ("scenario", "n") => custom_n = Some(parse!(usize)),
            ("scenario", "field") => custom_field = Some(value.to_string()),
            ("scenario", "domain_center") => {
                custom_center = Some(parse_point_value(value).map_err(|e| bad(&e))?)
            }
            ("scenario", "domain_radii") => {
                let coords = parse_point_value(value).map_err(|e| bad(&e))?;
                custom_radii = Some(coords.iter().map(|c| c.re).collect());
            }
            ("scenario", "piece") => custom_pieces.push(value.to_string()),
            (sec, k) => {
                return Err(ConfigError::UnknownKey(lineno, k.to_string(), sec.to_string()))
            }
        }
    }

    if saw_custom {
        let n = custom_n.ok_or(ConfigError::MissingCustomKey("n"))?;
        let field_src = custom_field.ok_or(ConfigError::MissingCustomKey("field"))?;
        let radii = custom_radii.unwrap_or_else(|| vec![1.0; n]);
        let center = custom_center.unwrap_or_else(|| vec![C::new(0.0, 0.0); n]);
        cfg.custom = Some(CustomScenario {
            id: custom_id.unwrap_or_else(|| "custom".into()),
            n,
            field_src,
            center,
            radii,
            pieces: custom_pieces,
        });
    } else if let Some(id) = &cfg.scenario {
        if find_scenario(id).is_err() {
            return Err(ConfigError::UnknownScenario(id.clone()));
        }
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_materializes_defaults() {
        let cfg = parse_config("[run]\nscenario = E1.4\nseed = 7\n").unwrap();
        assert_eq!(cfg.scenario.as_deref(), Some("E1.4"));
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.transversal.theta_min, 0.1);
        assert_eq!(cfg.scan.grid, 12);
        let echo = cfg.echo();
        assert!(echo.contains("# transversal.theta_min = 0.1"));
        assert!(echo.contains("# scan.grid = 12"));
    }

    #[test]
    fn theta_min_override_is_echoed() {
        let cfg =
            parse_config("[run]\nscenario = E1.4\nseed = 1\n[transversal]\ntheta_min = 0.2\n")
                .unwrap();
        assert!(cfg.echo().contains("# transversal.theta_min = 0.2"));
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let err = parse_config("[run]\nscenario = E9.9\nseed = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownScenario(s) if s == "E9.9"));
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(matches!(
            parse_config("[run]\nbogus = 1\n"),
            Err(ConfigError::UnknownKey(..))
        ));
        assert!(matches!(
            parse_config("[nope]\nx = 1\n"),
            Err(ConfigError::UnknownSection(..))
        ));
    }

    #[test]
    fn comments_and_points_parse() {
        let cfg = parse_config(
            "# header\n[run]\nscenario = E1.16 # builtin\nseed = 3\n[cone]\npoint = (0, 0.3, 0)\n",
        )
        .unwrap();
        let p = cfg.cone.point.unwrap();
        assert_eq!(p[1], C::new(0.3, 0.0));
    }

    #[test]
    fn custom_scenario_builds() {
        let cfg = parse_config(
            "[scenario]\nid = mine\nn = 3\nfield = x ; z*y ; z*y\ndomain_radii = (1, 0.9, 0.8)\npiece = linear base=(0,0,0) span=(0,1,0)\npiece = linear base=(0,0,0) span=(0,0,1)\n",
        )
        .unwrap();
        let custom = cfg.custom.unwrap();
        let (field, e) = custom.build().unwrap();
        assert_eq!(field.dim(), 3);
        assert_eq!(e.pieces().len(), 2);
    }

    #[test]
    fn missing_seed_is_detected_on_demand() {
        let cfg = parse_config("[run]\nscenario = E1.4\n").unwrap();
        assert!(matches!(cfg.require_seed(), Err(ConfigError::MissingSeed)));
    }
}
