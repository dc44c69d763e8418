//! Closed-loop evaluation: episodes over scenario files, metrics, artifacts
//! and the four-mode ablation matrix.

mod fixtures;
mod metrics;
mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::CostWeights;
use crate::planner::{plan_episode, EpisodeConfig, EpisodeLog, PlanError, PlannerConfig, PlannerVariant};
use crate::scene::{load_scenario, Scenario, ScenarioError};
use crate::trajgen::SamplingConfig;

pub use fixtures::{bundled, bundled_names, EVALUATION_SCENES};
pub use metrics::{compute_metrics, Metrics, CSV_HEADER};
pub use svg::render as render_svg;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario '{name}': {source}")]
    Scenario {
        name: String,
        #[source]
        source: ScenarioError,
    },
    #[error("scenario '{0}' is neither a readable file nor a bundled scene")]
    UnknownScenario(String),
    #[error("scenario name '{0}' appears twice in one batch")]
    DuplicateScenario(String),
    #[error("config {path}: {message}")]
    Config { path: String, message: String },
    #[error("scenario '{name}': {source}")]
    Plan {
        name: String,
        #[source]
        source: PlanError,
    },
    #[error("no scenarios given")]
    NoScenarios,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// The four evaluation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum AblationMode {
    /// Full planner with the configured predictor.
    #[default]
    #[serde(rename = "PS")]
    Ps,
    /// Full planner with constant-speed lane following as the predictor.
    #[serde(rename = "PS-Rule")]
    PsRule,
    /// Agents predicted once per decision instead of along every branch.
    #[serde(rename = "PS-Niter")]
    PsNiter,
    /// Fixed kinematic action profiles instead of Frenet trajectories.
    #[serde(rename = "PS-Fixed")]
    PsFixed,
}

impl AblationMode {
    /// Row order of the ablation table.
    pub const ALL: [AblationMode; 4] = [
        AblationMode::PsRule,
        AblationMode::PsNiter,
        AblationMode::PsFixed,
        AblationMode::Ps,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AblationMode::Ps => "PS",
            AblationMode::PsRule => "PS-Rule",
            AblationMode::PsNiter => "PS-Niter",
            AblationMode::PsFixed => "PS-Fixed",
        }
    }

    /// Episode config for this mode derived from the PS config.
    pub fn apply(self, base: &EpisodeConfig) -> EpisodeConfig {
        let mut cfg = base.clone();
        match self {
            AblationMode::Ps => {}
            AblationMode::PsRule => cfg.predictor = "lane_follow".into(),
            AblationMode::PsNiter => cfg.planner.variant = PlannerVariant::PredictOnce,
            AblationMode::PsFixed => cfg.planner.variant = PlannerVariant::FixedProfiles,
        }
        cfg
    }
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AblationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AblationMode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mode '{s}' (expected PS, PS-Rule, PS-Niter or PS-Fixed)"))
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_predictor() -> String {
    EpisodeConfig::default().predictor
}

fn default_world() -> String {
    EpisodeConfig::default().world
}

/// TOML run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario files or bundled scene names (`s1` .. `s4`, `empty_straight`, ...).
    pub scenarios: Vec<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub mode: AblationMode,
    #[serde(default = "default_predictor")]
    pub predictor: String,
    #[serde(default = "default_world")]
    pub world: String,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub cost: CostWeights,
    #[serde(default)]
    pub sampling: SamplingConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenarios: Vec::new(),
            out: default_out(),
            mode: AblationMode::Ps,
            predictor: default_predictor(),
            world: default_world(),
            planner: PlannerConfig::default(),
            cost: CostWeights::default(),
            sampling: SamplingConfig::default(),
        }
    }
}

impl RunConfig {
    /// Parses a TOML file. Relative scenario paths and the output directory
    /// are taken relative to the file's directory.
    pub fn from_toml_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| HarnessError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        for s in &mut cfg.scenarios {
            let candidate = base.join(&*s);
            if Path::new(s).is_relative() && candidate.is_file() {
                *s = candidate.display().to_string();
            }
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    /// The PS episode config before the ablation mode is applied.
    pub fn base_episode(&self) -> EpisodeConfig {
        EpisodeConfig {
            predictor: self.predictor.clone(),
            world: self.world.clone(),
            planner: self.planner.clone(),
            cost: self.cost,
            sampling: self.sampling,
        }
    }

    pub fn episode(&self) -> EpisodeConfig {
        self.mode.apply(&self.base_episode())
    }
}

/// Loads a scenario from a file path, falling back to the bundled scenes.
pub fn resolve_scenario(spec: &str) -> Result<Scenario, HarnessError> {
    let path = Path::new(spec);
    if path.is_file() {
        return load_scenario(path).map_err(|source| HarnessError::Scenario {
            name: spec.to_string(),
            source,
        });
    }
    match bundled(spec) {
        Some(r) => r.map_err(|source| HarnessError::Scenario {
            name: spec.to_string(),
            source,
        }),
        None => Err(HarnessError::UnknownScenario(spec.to_string())),
    }
}

/// Result of one episode plus where its artifacts went.
#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub log: EpisodeLog,
    pub metrics: Metrics,
    pub dir: PathBuf,
}

/// Runs one episode and writes `episode.jsonl`, `metrics.json` and
/// `trajectory.svg` into `dir`.
pub fn run_episode(scenario: &Scenario, cfg: &EpisodeConfig, dir: &Path) -> Result<EpisodeOutcome, HarnessError> {
    let log = plan_episode(scenario, cfg).map_err(|source| HarnessError::Plan {
        name: scenario.name.clone(),
        source,
    })?;
    let metrics = compute_metrics(&log);
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, text: String| -> Result<(), HarnessError> {
        let p = dir.join(name);
        fs::write(&p, text).map_err(io_err(&p))
    };
    write("episode.jsonl", log.to_jsonl())?;
    write(
        "metrics.json",
        serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n",
    )?;
    write("trajectory.svg", render_svg(scenario, &log))?;
    log::info!(
        "{}: {} after {:.1} s, A.V. {:.2} m/s",
        scenario.name,
        metrics.status,
        metrics.completion_time,
        metrics.avg_velocity
    );
    Ok(EpisodeOutcome {
        log,
        metrics,
        dir: dir.to_path_buf(),
    })
}

fn load_all(specs: &[String]) -> Result<Vec<Scenario>, HarnessError> {
    if specs.is_empty() {
        return Err(HarnessError::NoScenarios);
    }
    let scenarios = specs
        .iter()
        .map(|s| resolve_scenario(s))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, s) in scenarios.iter().enumerate() {
        if scenarios[..i].iter().any(|o| o.name == s.name) {
            return Err(HarnessError::DuplicateScenario(s.name.clone()));
        }
    }
    Ok(scenarios)
}

/// Runs every scenario of `cfg` and writes `metrics.csv` next to the
/// per-scenario directories.
pub fn run(cfg: &RunConfig) -> Result<Vec<EpisodeOutcome>, HarnessError> {
    let scenarios = load_all(&cfg.scenarios)?;
    let episode = cfg.episode();
    fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut outcomes = Vec::new();
    for sc in &scenarios {
        let o = run_episode(sc, &episode, &cfg.out.join(&sc.name))?;
        csv.push_str(&o.metrics.csv_row(cfg.mode.name()));
        csv.push('\n');
        outcomes.push(o);
    }
    let p = cfg.out.join("metrics.csv");
    fs::write(&p, csv).map_err(io_err(&p))?;
    Ok(outcomes)
}

/// One cell group of the ablation table.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub mode: AblationMode,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub scenes: Vec<String>,
    /// Mode-major, in [`AblationMode::ALL`] order, scenes in input order.
    pub rows: Vec<AblationRow>,
}

impl AblationTable {
    pub fn get(&self, mode: AblationMode, scene: &str) -> Option<&Metrics> {
        self.rows
            .iter()
            .find(|r| r.mode == mode && r.metrics.scenario == scene)
            .map(|r| &r.metrics)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.metrics.csv_row(r.mode.name()));
            out.push('\n');
        }
        out
    }

    /// Modes as rows, scenes as column groups of C.T. / A.V. / C.D.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| |");
        for (i, _) in self.scenes.iter().enumerate() {
            out.push_str(&format!(" Scene {} C.T. (s) | A.V. (m/s) | C.D. (m) |", i + 1));
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(3 * self.scenes.len()));
        out.push('\n');
        for mode in AblationMode::ALL {
            out.push_str(&format!("| {} |", mode.name()));
            for scene in &self.scenes {
                match self.get(mode, scene) {
                    Some(m) => {
                        let cd = m
                            .collision_distance
                            .map_or_else(|| "-".to_string(), |c| format!("{c:.2}"));
                        let flag = if m.status == crate::planner::EpisodeStatus::Reached {
                            String::new()
                        } else {
                            format!(" ({})", m.status)
                        };
                        out.push_str(&format!(
                            " {:.2}{flag} | {:.2} | {cd} |",
                            m.completion_time, m.avg_velocity
                        ));
                    }
                    None => out.push_str(" - | - | - |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Runs the 4-mode matrix over `scenes`. Artifacts go to
/// `out/<mode>/<scene>/`; `ablation.csv` and `ablation.md` to `out`.
pub fn ablate(scenes: &[String], base: &EpisodeConfig, out: &Path) -> Result<AblationTable, HarnessError> {
    let scenarios = load_all(scenes)?;
    let mut rows = Vec::new();
    for mode in AblationMode::ALL {
        let cfg = mode.apply(base);
        for sc in &scenarios {
            let o = run_episode(sc, &cfg, &out.join(mode.name()).join(&sc.name))?;
            rows.push(AblationRow {
                mode,
                metrics: o.metrics,
            });
        }
    }
    let table = AblationTable {
        scenes: scenarios.iter().map(|s| s.name.clone()).collect(),
        rows,
    };
    fs::create_dir_all(out).map_err(io_err(out))?;
    let p = out.join("ablation.csv");
    fs::write(&p, table.to_csv()).map_err(io_err(&p))?;
    let p = out.join("ablation.md");
    fs::write(&p, table.to_markdown()).map_err(io_err(&p))?;
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_names_round_trip() {
        for m in AblationMode::ALL {
            assert_eq!(m.name().parse::<AblationMode>().unwrap(), m);
        }
        assert!("PS-Fix".parse::<AblationMode>().is_err());
    }

    #[test]
    fn run_config_from_toml() {
        let cfg: RunConfig = toml::from_str(
            r#"
scenarios = ["s1"]
mode = "PS-Niter"
predictor = "constant_velocity"
[planner]
iterations = 50
[cost]
w5 = -20.0
"#,
        )
        .unwrap();
        assert_eq!(cfg.mode, AblationMode::PsNiter);
        assert_eq!(cfg.planner.iterations, 50);
        assert_eq!(cfg.planner.max_depth, 3);
        assert_eq!(cfg.cost.w5, -20.0);
        assert_eq!(cfg.episode().planner.variant, PlannerVariant::PredictOnce);
        assert!(toml::from_str::<RunConfig>("scenarios = []\nbogus = 1\n").is_err());
    }
}
