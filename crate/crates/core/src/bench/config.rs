//! Benchmark configuration: per-kind defaults, a TOML file, and dotted
//! `section.key=value` overrides, merged in that order.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::controllers::{
    Cem, CemConfig, Controller, GlobalKind, Mppi, MppiConfig, OtMpc, OtMpcConfig, ParticleInit, ProposalConfig,
};
use crate::envs::{
    bimodal_field, generate_obstacle_field, BicycleEnv, BicycleParams, Difficulty, DoubleIntegratorEnv,
    DoubleIntegratorParams, Environment, FieldSpec, ObstacleField, TaskCostWeights, DEFAULT_STEP_CAP,
};
use crate::error::{Error, Result};
use crate::scd::{EpsilonRule, ScdConfig};
use crate::transport::SinkhornConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvironmentKind {
    /// Bicycle in a random obstacle field.
    Car,
    /// Bicycle on the fixed symmetric single-obstacle instance.
    Bimodal,
    /// Double integrator in a random obstacle field.
    DoubleIntegrator,
    /// Double integrator on the fixed symmetric instance.
    BimodalDoubleIntegrator,
}

impl EnvironmentKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "car" => Some(Self::Car),
            "bimodal" => Some(Self::Bimodal),
            "double-integrator" => Some(Self::DoubleIntegrator),
            "bimodal-double-integrator" => Some(Self::BimodalDoubleIntegrator),
            _ => None,
        }
    }

    fn is_bimodal(self) -> bool {
        matches!(self, Self::Bimodal | Self::BimodalDoubleIntegrator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ControllerKind {
    Otmpc,
    Mppi,
    Cem,
}

impl ControllerKind {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "otmpc" => Some(Self::Otmpc),
            "mppi" => Some(Self::Mppi),
            "cem" => Some(Self::Cem),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Otmpc => "otmpc",
            Self::Mppi => "mppi",
            Self::Cem => "cem",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonKind {
    /// ε = epsilon × median cost entry.
    Median,
    /// ε = epsilon × largest cost entry.
    Max,
    /// ε = epsilon.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub kind: EnvironmentKind,
    pub difficulty: Difficulty,
    pub max_obstacles: usize,
    pub min_obstacles: usize,
    pub dt: f64,
    pub wheelbase: f64,
    pub accel_max: f64,
    pub steer_max: f64,
    pub v_max: f64,
    pub initial_speed: f64,
    pub inflation: f64,
}

impl EnvironmentConfig {
    pub fn defaults(kind: EnvironmentKind) -> Self {
        let p = BicycleParams::default();
        Self {
            kind,
            difficulty: Difficulty::Easy,
            max_obstacles: 50,
            min_obstacles: 0,
            dt: p.dt,
            wheelbase: p.wheelbase,
            accel_max: p.accel_max,
            steer_max: p.steer_max,
            v_max: p.v_max,
            initial_speed: if kind.is_bimodal() { 1.0 } else { 0.0 },
            inflation: 0.0,
        }
    }

    /// Task label used in summaries, e.g. `car-easy`.
    pub fn task_name(&self) -> String {
        let diff = match self.difficulty {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        };
        match self.kind {
            EnvironmentKind::Car => format!("car-{diff}"),
            EnvironmentKind::DoubleIntegrator => format!("double-integrator-{diff}"),
            EnvironmentKind::Bimodal => "bimodal".into(),
            EnvironmentKind::BimodalDoubleIntegrator => "bimodal-double-integrator".into(),
        }
    }

    fn field(&self, seed: u64) -> Result<ObstacleField> {
        if self.kind.is_bimodal() {
            return Ok(bimodal_field());
        }
        let mut spec = FieldSpec::for_difficulty(self.difficulty);
        spec.max_obstacles = self.max_obstacles;
        spec.min_obstacles = self.min_obstacles;
        generate_obstacle_field(&spec, seed)
    }

    /// Builds the environment; random fields are drawn from `seed`.
    pub fn build(&self, seed: u64) -> Result<Box<dyn Environment>> {
        let field = self.field(seed)?;
        Ok(match self.kind {
            EnvironmentKind::Car | EnvironmentKind::Bimodal => {
                let params = BicycleParams {
                    dt: self.dt,
                    wheelbase: self.wheelbase,
                    accel_max: self.accel_max,
                    steer_max: self.steer_max,
                    v_min: 0.0,
                    v_max: self.v_max,
                };
                Box::new(
                    BicycleEnv::new(field, params)
                        .with_initial_speed(self.initial_speed)
                        .with_inflation(self.inflation),
                )
            }
            EnvironmentKind::DoubleIntegrator | EnvironmentKind::BimodalDoubleIntegrator => {
                let params = DoubleIntegratorParams {
                    dt: self.dt,
                    accel_max: self.accel_max,
                };
                Box::new(DoubleIntegratorEnv::new(field, params))
            }
        })
    }

    fn violations(&self, out: &mut Vec<String>) {
        let positive = [
            ("environment.dt", self.dt),
            ("environment.wheelbase", self.wheelbase),
            ("environment.accel_max", self.accel_max),
            ("environment.steer_max", self.steer_max),
            ("environment.v_max", self.v_max),
        ];
        for (k, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                out.push(format!("{k} must be finite and > 0, got {v}"));
            }
        }
        if self.steer_max > crate::envs::STEER_SINGULARITY_MARGIN {
            out.push(format!(
                "environment.steer_max must not exceed {} rad",
                crate::envs::STEER_SINGULARITY_MARGIN
            ));
        }
        if !(self.initial_speed >= 0.0 && self.initial_speed <= self.v_max) {
            out.push("environment.initial_speed must lie in [0, v_max]".into());
        }
        if !(self.inflation >= 0.0 && self.inflation.is_finite()) {
            out.push("environment.inflation must be finite and >= 0".into());
        }
        if self.min_obstacles > self.max_obstacles {
            out.push("environment.min_obstacles must not exceed max_obstacles".into());
        }
    }
}

/// Flat controller settings; fields irrelevant to `kind` are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSettings {
    pub kind: ControllerKind,
    pub horizon: usize,
    pub iterations: usize,
    pub num_samples: usize,
    pub beta: f64,
    pub num_particles: usize,
    pub epsilon_rule: EpsilonKind,
    pub epsilon: f64,
    pub eta: f64,
    pub sinkhorn_tolerance: f64,
    pub sinkhorn_max_iterations: usize,
    pub particle_init: ParticleInit,
    pub rho: f64,
    pub local_sigma: Vec<f64>,
    pub temporal_correlation: f64,
    pub global_kind: GlobalKind,
    pub global_scale: Vec<f64>,
    pub elite_fraction: f64,
    pub alpha: f64,
    pub init_std: Vec<f64>,
    pub min_std: f64,
    pub w_goal: f64,
    pub w_obstacle: f64,
    pub w_control: f64,
    pub w_terminal_goal: f64,
}

impl ControllerSettings {
    pub fn defaults(kind: ControllerKind, env: EnvironmentKind) -> Self {
        let ot = OtMpcConfig::car_defaults();
        let mppi = MppiConfig::car_defaults();
        let cem = CemConfig::car_defaults();
        let (horizon, iterations, num_samples, beta, w) = match kind {
            ControllerKind::Otmpc => (ot.horizon, ot.inner_iterations, ot.num_proposals, ot.beta, ot.weights),
            ControllerKind::Mppi => (mppi.horizon, mppi.iterations, mppi.num_samples, mppi.beta, mppi.weights),
            ControllerKind::Cem => (cem.horizon, cem.iterations, cem.num_samples, 1.0, cem.weights),
        };
        let mut s = Self {
            kind,
            horizon,
            iterations,
            num_samples,
            beta,
            num_particles: ot.num_particles,
            epsilon_rule: EpsilonKind::Median,
            epsilon: 0.05,
            eta: ot.scd.eta,
            sinkhorn_tolerance: ot.scd.sinkhorn.tolerance,
            sinkhorn_max_iterations: ot.scd.sinkhorn.max_iterations,
            particle_init: ot.init,
            rho: if kind == ControllerKind::Otmpc { ot.proposal.rho } else { 0.0 },
            local_sigma: ot.proposal.local_sigma.clone(),
            temporal_correlation: ot.proposal.temporal_correlation,
            global_kind: ot.proposal.global_kind,
            global_scale: ot.proposal.global_scale.clone(),
            elite_fraction: cem.elite_fraction,
            alpha: cem.alpha,
            init_std: cem.init_std.clone(),
            min_std: cem.min_std,
            w_goal: w.goal,
            w_obstacle: w.obstacle,
            w_control: w.control,
            w_terminal_goal: w.terminal_goal,
        };
        if env.is_bimodal() {
            s.apply_bimodal_defaults();
        }
        if matches!(env, EnvironmentKind::DoubleIntegrator | EnvironmentKind::BimodalDoubleIntegrator) {
            s.local_sigma = vec![0.5, 0.5];
            s.global_scale = vec![1.0, 1.0];
            s.init_std = vec![1.0, 1.0];
        }
        s
    }

    /// Matched budgets on the symmetric toy: 8 particles × 200 proposals
    /// against 1600 MPPI / CEM samples, shared weights and temperature.
    fn apply_bimodal_defaults(&mut self) {
        self.horizon = 30;
        self.iterations = 3;
        self.num_particles = 8;
        self.num_samples = match self.kind {
            ControllerKind::Otmpc => 200,
            _ => 1600,
        };
        self.beta = 0.02;
        self.w_goal = 1.0;
        self.w_terminal_goal = 1.0;
        self.w_obstacle = 500.0;
        self.w_control = 0.05;
        self.rho = 0.0;
        self.particle_init = ParticleInit::Random;
    }

    pub fn weights(&self) -> TaskCostWeights {
        TaskCostWeights {
            goal: self.w_goal,
            obstacle: self.w_obstacle,
            control: self.w_control,
            terminal_goal: self.w_terminal_goal,
        }
    }

    pub fn proposal(&self) -> ProposalConfig {
        ProposalConfig {
            rho: self.rho,
            local_sigma: self.local_sigma.clone(),
            temporal_correlation: self.temporal_correlation,
            global_kind: self.global_kind,
            global_scale: self.global_scale.clone(),
        }
    }

    pub fn otmpc(&self) -> OtMpcConfig {
        let rule = match self.epsilon_rule {
            EpsilonKind::Median => EpsilonRule::MedianCost(self.epsilon),
            EpsilonKind::Max => EpsilonRule::MaxCost(self.epsilon),
            EpsilonKind::Absolute => EpsilonRule::Absolute(self.epsilon),
        };
        let mut scd = ScdConfig::new(rule);
        scd.eta = self.eta;
        scd.displacement_tol = 0.0;
        scd.sinkhorn = SinkhornConfig::new(1.0)
            .with_tolerance(self.sinkhorn_tolerance)
            .with_max_iterations(self.sinkhorn_max_iterations);
        OtMpcConfig {
            num_particles: self.num_particles,
            num_proposals: self.num_samples,
            inner_iterations: self.iterations,
            beta: self.beta,
            horizon: self.horizon,
            scd,
            proposal: self.proposal(),
            init: self.particle_init,
            weights: self.weights(),
        }
    }

    pub fn mppi(&self) -> MppiConfig {
        MppiConfig {
            num_samples: self.num_samples,
            iterations: self.iterations,
            beta: self.beta,
            horizon: self.horizon,
            proposal: self.proposal(),
            weights: self.weights(),
        }
    }

    pub fn cem(&self) -> CemConfig {
        CemConfig {
            num_samples: self.num_samples,
            iterations: self.iterations,
            horizon: self.horizon,
            elite_fraction: self.elite_fraction,
            alpha: self.alpha,
            init_std: self.init_std.clone(),
            min_std: self.min_std,
            weights: self.weights(),
        }
    }

    pub fn build(&self) -> Box<dyn Controller> {
        match self.kind {
            ControllerKind::Otmpc => Box::new(OtMpc::new(self.otmpc())),
            ControllerKind::Mppi => Box::new(Mppi::new(self.mppi())),
            ControllerKind::Cem => Box::new(Cem::new(self.cem())),
        }
    }

    fn violations(&self, control_dim: usize, out: &mut Vec<String>) {
        let r = match self.kind {
            ControllerKind::Otmpc => self.otmpc().validate(control_dim),
            ControllerKind::Mppi => self.mppi().validate(control_dim),
            ControllerKind::Cem => self.cem().validate(control_dim),
        };
        if let Err(Error::Config(msg)) = r {
            out.extend(msg.split("; ").map(|m| format!("controller: {m}")));
        } else if let Err(e) = r {
            out.push(format!("controller: {e}"));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessConfig {
    pub num_trials: usize,
    pub base_seed: u64,
    pub step_cap: usize,
    pub output_dir: String,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// When false, wall times are written as 0 so records are byte-stable.
    pub record_wall_time: bool,
    pub dump_trajectories: bool,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            num_trials: 100,
            base_seed: 0,
            step_cap: DEFAULT_STEP_CAP,
            output_dir: "otmpc-out".into(),
            workers: 0,
            record_wall_time: true,
            dump_trajectories: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub environment: EnvironmentConfig,
    pub controller: ControllerSettings,
    pub harness: HarnessConfig,
}

/// One documented configuration key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KeyDoc {
    pub key: &'static str,
    pub unit: &'static str,
    pub doc: &'static str,
}

const fn k(key: &'static str, unit: &'static str, doc: &'static str) -> KeyDoc {
    KeyDoc { key, unit, doc }
}

/// Every accepted key, in display order.
pub const SCHEMA: &[KeyDoc] = &[
    k("environment.kind", "-", "car | bimodal | double-integrator | bimodal-double-integrator"),
    k("environment.difficulty", "-", "easy | hard obstacle field"),
    k("environment.max_obstacles", "count", "obstacle placement target"),
    k("environment.min_obstacles", "count", "fewer placements is a generation error"),
    k("environment.dt", "s", "integration step"),
    k("environment.wheelbase", "m", "bicycle wheelbase"),
    k("environment.accel_max", "m/s^2", "acceleration bound"),
    k("environment.steer_max", "rad", "steering bound"),
    k("environment.v_max", "m/s", "speed cap"),
    k("environment.initial_speed", "m/s", "speed at episode start"),
    k("environment.inflation", "m", "obstacle growth for the collision test"),
    k("controller.kind", "-", "otmpc | mppi | cem"),
    k("controller.horizon", "steps", "plan length"),
    k("controller.iterations", "count", "inner iterations per cycle"),
    k("controller.num_samples", "count", "proposals or samples per iteration"),
    k("controller.beta", "1/cost", "inverse temperature of the Gibbs weights"),
    k("controller.num_particles", "count", "OT-MPC particles"),
    k("controller.epsilon_rule", "-", "median | max | absolute"),
    k("controller.epsilon", "factor or cost", "entropic regularization"),
    k("controller.eta", "-", "relaxation step toward the barycenter"),
    k("controller.sinkhorn_tolerance", "mass", "row marginal L1 exit threshold"),
    k("controller.sinkhorn_max_iterations", "count", "Sinkhorn iteration cap"),
    k("controller.particle_init", "-", "zeros | random"),
    k("controller.rho", "probability", "global proposal rate"),
    k("controller.local_sigma", "control units", "per-dimension perturbation std"),
    k("controller.temporal_correlation", "-", "AR(1) coefficient of perturbations"),
    k("controller.global_kind", "-", "uniform-in-bounds | broad-gaussian"),
    k("controller.global_scale", "control units", "per-dimension std of the broad Gaussian"),
    k("controller.elite_fraction", "fraction", "CEM elite share"),
    k("controller.alpha", "-", "CEM smoothing toward the elite statistics"),
    k("controller.init_std", "control units", "CEM per-dimension initial std"),
    k("controller.min_std", "control units", "CEM std floor"),
    k("controller.w_goal", "1/m^2", "running goal distance weight"),
    k("controller.w_obstacle", "cost", "crash indicator weight"),
    k("controller.w_control", "cost", "control effort weight"),
    k("controller.w_terminal_goal", "1/m^2", "final goal distance weight"),
    k("harness.num_trials", "count", "trials per benchmark"),
    k("harness.base_seed", "-", "root of every trial seed"),
    k("harness.step_cap", "steps", "episode length cap"),
    k("harness.output_dir", "path", "artifact directory"),
    k("harness.workers", "threads", "0 uses every core"),
    k("harness.record_wall_time", "bool", "false writes 0 s for byte-stable records"),
    k("harness.dump_trajectories", "bool", "write per-trial trajectory files"),
];

fn valid_keys() -> String {
    SCHEMA.iter().map(|d| d.key).collect::<Vec<_>>().join(", ")
}

fn lookup<'a>(table: &'a toml::Table, section: &str, key: &str) -> Option<&'a toml::Value> {
    table.get(section)?.as_table()?.get(key)
}

/// Parses the right-hand side of an override; bare words become strings.
fn parse_value(raw: &str) -> toml::Value {
    let wrapped = format!("v = {raw}");
    match wrapped.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Applies `section.key=value` overrides to a raw table.
pub fn apply_overrides(table: &mut toml::Table, overrides: &[String]) -> Result<()> {
    let mut problems = Vec::new();
    for o in overrides {
        let Some((key, value)) = o.split_once('=') else {
            problems.push(format!("override `{o}` is not of the form key=value"));
            continue;
        };
        let key = key.trim();
        if !SCHEMA.iter().any(|d| d.key == key) {
            problems.push(format!("unknown key `{key}`"));
            continue;
        }
        let (section, field) = key.split_once('.').expect("schema keys are dotted");
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match entry.as_table_mut() {
            Some(t) => {
                t.insert(field.to_string(), parse_value(value.trim()));
            }
            None => problems.push(format!("`{section}` must be a table")),
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "{}\nvalid keys: {}",
            problems.join("\n"),
            valid_keys()
        )))
    }
}

fn kind_of<T>(table: &toml::Table, section: &str, parse: fn(&str) -> Option<T>, default: T) -> Result<T> {
    match lookup(table, section, "kind") {
        None => Ok(default),
        Some(toml::Value::String(s)) => {
            parse(s).ok_or_else(|| Error::Config(format!("{section}.kind: unknown kind `{s}`")))
        }
        Some(v) => Err(Error::Config(format!("{section}.kind must be a string, got {v}"))),
    }
}

impl BenchmarkConfig {
    pub fn defaults(env: EnvironmentKind, controller: ControllerKind) -> Self {
        Self {
            environment: EnvironmentConfig::defaults(env),
            controller: ControllerSettings::defaults(controller, env),
            harness: HarnessConfig::default(),
        }
    }

    /// Resolves a raw table: kinds pick the defaults, then every given key
    /// replaces its default. Unknown keys and invalid values are all reported.
    pub fn from_table(mut table: toml::Table) -> Result<Self> {
        let env = kind_of(&table, "environment", EnvironmentKind::parse, EnvironmentKind::Car)?;
        let ctrl = kind_of(&table, "controller", ControllerKind::parse, ControllerKind::Otmpc)?;

        let mut problems = Vec::new();
        for (section, value) in &table {
            match value.as_table() {
                Some(t) => {
                    for key in t.keys() {
                        let full = format!("{section}.{key}");
                        if !SCHEMA.iter().any(|d| d.key == full) {
                            problems.push(format!("unknown key `{full}`"));
                        }
                    }
                }
                None => problems.push(format!("unknown section `{section}`")),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Config(format!(
                "{}\nvalid keys: {}",
                problems.join("\n"),
                valid_keys()
            )));
        }

        let defaults = toml::Table::try_from(Self::defaults(env, ctrl))
            .map_err(|e| Error::Config(format!("cannot tabulate defaults: {e}")))?;
        let mut merged = defaults;
        for (section, value) in std::mem::take(&mut table) {
            if let (Some(dst), toml::Value::Table(src)) = (merged.get_mut(&section).and_then(|v| v.as_table_mut()), value) {
                dst.extend(src);
            }
        }
        let text = toml::to_string(&merged).map_err(|e| Error::Config(e.to_string()))?;
        let cfg: Self = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        apply_overrides(&mut table, overrides)?;
        Self::from_table(table)
    }

    /// Reads `path` (or starts empty) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides).map_err(|e| match (e, path) {
            (Error::Config(msg), Some(p)) => Error::Config(format!("{}: {msg}", p.display())),
            (e, _) => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        self.environment.violations(&mut problems);
        self.controller.violations(2, &mut problems);
        if self.harness.num_trials == 0 {
            problems.push("harness.num_trials must be >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("\n")))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON of everything that affects a trial's
    /// outcome (trial count, output location and worker count excluded).
    pub fn config_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            environment: &'a EnvironmentConfig,
            controller: &'a ControllerSettings,
            base_seed: u64,
            step_cap: usize,
        }
        let canonical = serde_json::to_string(&Hashed {
            environment: &self.environment,
            controller: &self.controller,
            base_seed: self.harness.base_seed,
            step_cap: self.harness.step_cap,
        })
        .expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Human-readable key table with units and per-controller defaults.
pub fn schema_help() -> String {
    let cfgs: Vec<toml::Table> = [ControllerKind::Otmpc, ControllerKind::Mppi, ControllerKind::Cem]
        .iter()
        .map(|&c| toml::Table::try_from(BenchmarkConfig::defaults(EnvironmentKind::Car, c)).expect("tabulates"))
        .collect();
    let show = |t: &toml::Table, key: &str| {
        let (s, f) = key.split_once('.').expect("dotted");
        lookup(t, s, f).map(|v| v.to_string()).unwrap_or_default()
    };
    let mut out = String::from("Configuration keys (defaults for the car task; otmpc / mppi / cem where they differ):\n");
    for d in SCHEMA {
        let vals: Vec<String> = cfgs.iter().map(|t| show(t, d.key)).collect();
        let default = if vals.iter().all(|v| v == &vals[0]) {
            vals[0].clone()
        } else {
            vals.join(" / ")
        };
        out.push_str(&format!("  {:<36} [{}] default {}  {}\n", d.key, d.unit, default, d.doc));
    }
    out
}
