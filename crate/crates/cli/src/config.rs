//! The experiment configuration: a strict TOML schema. Unknown keys are
//! rejected by serde; everything else is validated here with a diagnostic
//! per offending key, so a typo cannot silently change an experiment.

use esq_core::model::{PerCountTail, StateFactor};
use esq_core::simulator::SimError;
use esq_core::{ArrivalLaw, LyapunovParams, ServiceLaw, SimMode, SimulatorConfig, SystemState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovConfig>,
    pub sim: SimConfig,
    #[serde(default)]
    pub initial: InitialStateConfig,
    #[serde(default)]
    pub binner: BinnerConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    #[serde(default)]
    pub hitting: HittingConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<CouplingConfig>,
    #[serde(default)]
    pub constants: ConstantsConfig,
    #[serde(default)]
    pub drift_check: DriftCheckConfig,
    #[serde(default)]
    pub convergence: ConvergenceConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub arrival: ArrivalConfig,
    pub service: ServiceConfig,
}

/// One struct for all arrival families; `kind` selects which optional
/// fields are required. Kept flat (rather than a tagged enum) so unknown
/// and misplaced keys still get precise diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalConfig {
    /// "constant" | "per_count" | "count_times_factor"
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    /// per_count extension beyond the listed counts: "hold_last" | "zero"
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<String>,
    /// count_times_factor modulation: "one" | "exp_decay_x0"
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    /// "exponential" | "pareto_hazard" | "weibull" | "table"
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// piecewise-linear hazard knots [[t, h], ...]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knots: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    pub c0: f64,
    pub m: f64,
    pub a: f64,
    pub ell: f64,
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon: f64,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    /// "agenda" | "hazard_thinning"
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
}

fn default_replicas() -> usize {
    1
}
fn default_mode() -> String {
    "agenda".to_string()
}
fn default_max_events() -> usize {
    esq_core::simulator::DEFAULT_MAX_EVENTS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateConfig {
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub elapsed: Vec<f64>,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self {
            x0: 0.0,
            elapsed: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinnerConfig {
    /// "by_count" | "by_count_and_mean_elapsed"
    pub scheme: String,
    #[serde(default = "default_bin_width")]
    pub width: f64,
    #[serde(default = "default_bin_cap")]
    pub cap: u32,
}

fn default_bin_width() -> f64 {
    0.25
}
fn default_bin_cap() -> u32 {
    40
}

impl Default for BinnerConfig {
    fn default() -> Self {
        Self {
            scheme: "by_count".to_string(),
            width: default_bin_width(),
            cap: default_bin_cap(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub cycles: usize,
    /// fraction of the horizon dropped before the long-run time average
    pub warmup: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            cycles: 1000,
            warmup: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HittingConfig {
    /// moment powers reported for both hitting times
    pub powers: Vec<f64>,
}

impl Default for HittingConfig {
    fn default() -> Self {
        Self { powers: vec![1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    #[serde(default = "default_coupling_horizon")]
    pub horizon: f64,
    #[serde(default = "default_coupling_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub x_initial: InitialStateConfig,
    #[serde(default)]
    pub y_initial: InitialStateConfig,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_coupling_horizon() -> f64 {
    1000.0
}
fn default_coupling_replicas() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    /// population size entering the return-probability constant
    pub n_threshold: usize,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self { n_threshold: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftCheckConfig {
    pub states: usize,
    pub max_n: usize,
    pub max_elapsed: f64,
}

impl Default for DriftCheckConfig {
    fn default() -> Self {
        Self {
            states: 10_000,
            max_n: 20,
            max_elapsed: 50.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    /// comparison times for the distance bracket
    pub times: Vec<f64>,
    /// replicas per plain ensemble feeding the lower bound
    pub replicas: usize,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self {
            times: vec![1.0, 2.0, 5.0, 10.0, 20.0],
            replicas: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: String,
}

/// All constraint violations found in a parsed document, one line per
/// offending key.
#[derive(Debug, thiserror::Error)]
#[error("{}", diagnostics.join("\n"))]
pub struct ConfigError {
    pub diagnostics: Vec<String>,
}

impl ConfigError {
    fn one(path: &str, msg: impl Into<String>) -> Self {
        Self {
            diagnostics: vec![format!("{path}: {}", msg.into())],
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
        diagnostics: e.to_string().lines().map(str::to_string).collect(),
    })?;
    cfg.validate()?;
    Ok(cfg)
}

struct Check {
    diagnostics: Vec<String>,
}

impl Check {
    fn claim(&mut self, path: &str, ok: bool, msg: &str) {
        if !ok {
            self.diagnostics.push(format!("{path}: {msg}"));
        }
    }

    /// A field that must be present for the chosen kind.
    fn require<T: Copy>(&mut self, path: &str, v: Option<T>, kind: &str) -> Option<T> {
        if v.is_none() {
            self.diagnostics
                .push(format!("{path}: required for kind \"{kind}\""));
        }
        v
    }

    /// A field that means nothing for the chosen kind; rejected so a typo
    /// cannot sit silently in the file.
    fn forbid<T>(&mut self, path: &str, v: &Option<T>, kind: &str) {
        if v.is_some() {
            self.diagnostics
                .push(format!("{path}: meaningless for kind \"{kind}\""));
        }
    }
}

fn positive(c: &mut Check, path: &str, v: f64) {
    c.claim(
        path,
        v.is_finite() && v > 0.0,
        "must be positive and finite",
    );
}

fn sorted_times(c: &mut Check, path: &str, times: &[f64], horizon: f64) {
    c.claim(
        path,
        times.windows(2).all(|w| w[0] <= w[1]),
        "must be sorted ascending",
    );
    c.claim(
        path,
        times
            .iter()
            .all(|&t| t.is_finite() && t >= 0.0 && t <= horizon),
        "every time must lie within [0, horizon]",
    );
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut c = Check {
            diagnostics: Vec::new(),
        };

        self.model.arrival.validate(&mut c);
        self.model.service.validate(&mut c);

        if let Some(l) = &self.lyapunov {
            positive(&mut c, "lyapunov.c0", l.c0);
            c.claim("lyapunov.m", l.m > 1.0 && l.m.is_finite(), "must exceed 1");
            // a = 1 satisfies the bare drift inequality but carries no
            // polynomial rate; the convergence machinery needs a > 1
            c.claim("lyapunov.a", l.a > 1.0 && l.a.is_finite(), "must exceed 1");
            positive(&mut c, "lyapunov.ell", l.ell);
            c.claim(
                "lyapunov.k",
                l.k > 0.0 && l.k < l.ell,
                "must lie strictly between 0 and ell",
            );
        }

        let s = &self.sim;
        positive(&mut c, "sim.horizon", s.horizon);
        c.claim("sim.replicas", s.replicas >= 1, "need at least one replica");
        c.claim(
            "sim.mode",
            matches!(s.mode.as_str(), "agenda" | "hazard_thinning"),
            "must be \"agenda\" or \"hazard_thinning\"",
        );
        c.claim("sim.max_events", s.max_events >= 1, "must be positive");
        sorted_times(&mut c, "sim.snapshot_times", &s.snapshot_times, s.horizon);

        self.initial.validate(&mut c, "initial");

        let b = &self.binner;
        c.claim(
            "binner.scheme",
            matches!(b.scheme.as_str(), "by_count" | "by_count_and_mean_elapsed"),
            "must be \"by_count\" or \"by_count_and_mean_elapsed\"",
        );
        if b.scheme == "by_count_and_mean_elapsed" {
            positive(&mut c, "binner.width", b.width);
            c.claim("binner.cap", b.cap >= 1, "need at least one bin");
        }

        c.claim(
            "stationary.cycles",
            self.stationary.cycles >= 1,
            "need at least one cycle",
        );
        c.claim(
            "stationary.warmup",
            (0.0..1.0).contains(&self.stationary.warmup),
            "must lie in [0, 1)",
        );

        c.claim(
            "hitting.powers",
            !self.hitting.powers.is_empty() && self.hitting.powers.iter().all(|&p| p > 0.0),
            "need at least one positive power",
        );

        if let Some(cp) = &self.coupling {
            positive(&mut c, "coupling.horizon", cp.horizon);
            c.claim(
                "coupling.replicas",
                cp.replicas >= 1,
                "need at least one coupled pair",
            );
            cp.x_initial.validate(&mut c, "coupling.x_initial");
            cp.y_initial.validate(&mut c, "coupling.y_initial");
            sorted_times(
                &mut c,
                "coupling.snapshot_times",
                &cp.snapshot_times,
                cp.horizon,
            );
            sorted_times(
                &mut c,
                "convergence.times",
                &self.convergence.times,
                cp.horizon,
            );
        }

        c.claim(
            "constants.n_threshold",
            self.constants.n_threshold >= 1,
            "must be positive",
        );

        let d = &self.drift_check;
        c.claim("drift_check.states", d.states >= 1, "must be positive");
        c.claim(
            "drift_check.max_n",
            d.max_n >= 1,
            "need at least one customer",
        );
        positive(&mut c, "drift_check.max_elapsed", d.max_elapsed);

        c.claim(
            "convergence.times",
            !self.convergence.times.is_empty(),
            "need at least one comparison time",
        );
        c.claim(
            "convergence.replicas",
            self.convergence.replicas >= 1,
            "need at least one replica",
        );

        c.claim(
            "output.dir",
            !self.output.dir.is_empty(),
            "must not be empty",
        );

        if c.diagnostics.is_empty() {
            Ok(())
        } else {
            Err(ConfigError {
                diagnostics: c.diagnostics,
            })
        }
    }

    pub fn arrival_law(&self) -> Result<ArrivalLaw, ConfigError> {
        self.model.arrival.build()
    }

    pub fn service_law(&self) -> Result<ServiceLaw, ConfigError> {
        self.model.service.build()
    }

    pub fn lyapunov_params(&self) -> Result<LyapunovParams, ConfigError> {
        let l = self
            .lyapunov
            .as_ref()
            .ok_or_else(|| ConfigError::one("lyapunov", "block required by this command"))?;
        LyapunovParams::new(l.c0, l.m, l.a, l.ell, l.k)
            .map_err(|e| ConfigError::one("lyapunov", e.to_string()))
    }

    pub fn sim_mode(&self) -> SimMode {
        match self.sim.mode.as_str() {
            "agenda" => SimMode::Agenda,
            _ => SimMode::HazardThinning,
        }
    }

    pub fn simulator_config(&self) -> Result<SimulatorConfig, SimError> {
        SimulatorConfig::new(self.sim.seed, self.sim.horizon, self.sim_mode())?
            .with_snapshots(self.sim.snapshot_times.clone())?
            .with_max_events(self.sim.max_events)
    }

    pub fn initial_state(&self) -> Result<SystemState, ConfigError> {
        self.initial.build("initial")
    }

    pub fn binner(&self) -> Result<esq_core::analysis::StateBinner, ConfigError> {
        match self.binner.scheme.as_str() {
            "by_count" => Ok(esq_core::analysis::StateBinner::ByCount),
            _ => esq_core::analysis::StateBinner::by_count_and_mean(
                self.binner.width,
                self.binner.cap,
            )
            .map_err(|e| ConfigError::one("binner", e.to_string())),
        }
    }

    pub fn coupling_block(&self) -> Result<&CouplingConfig, ConfigError> {
        self.coupling
            .as_ref()
            .ok_or_else(|| ConfigError::one("coupling", "block required by this command"))
    }
}

impl InitialStateConfig {
    fn validate(&self, c: &mut Check, path: &str) {
        c.claim(
            &format!("{path}.x0"),
            self.x0.is_finite() && self.x0 >= 0.0,
            "must be finite and nonnegative",
        );
        c.claim(
            &format!("{path}.elapsed"),
            self.elapsed.iter().all(|&t| t.is_finite() && t >= 0.0),
            "every elapsed time must be finite and nonnegative",
        );
    }

    pub fn build(&self, path: &str) -> Result<SystemState, ConfigError> {
        SystemState::new(self.x0, self.elapsed.clone())
            .map_err(|e| ConfigError::one(path, e.to_string()))
    }
}

impl ArrivalConfig {
    fn validate(&self, c: &mut Check) {
        const P: &str = "model.arrival";
        match self.kind.as_str() {
            "constant" => {
                if let Some(r) = c.require(&format!("{P}.rate"), self.rate, "constant") {
                    positive(c, &format!("{P}.rate"), r);
                }
                c.forbid(&format!("{P}.rates"), &self.rates, "constant");
                c.forbid(&format!("{P}.tail"), &self.tail, "constant");
                c.forbid(&format!("{P}.factor"), &self.factor, "constant");
                c.forbid(&format!("{P}.floor"), &self.floor, "constant");
                c.forbid(&format!("{P}.decay"), &self.decay, "constant");
            }
            "per_count" => {
                if let Some(rates) = &self.rates {
                    c.claim(
                        &format!("{P}.rates"),
                        !rates.is_empty() && rates.iter().all(|r| r.is_finite() && *r >= 0.0),
                        "must be a nonempty list of finite nonnegative rates",
                    );
                    if let Some(&r0) = rates.first() {
                        // an empty system must keep a strictly positive
                        // intensity, or regeneration never happens
                        c.claim(
                            &format!("{P}.rates"),
                            r0 > 0.0,
                            "the empty-system intensity (first entry) must be positive",
                        );
                    }
                } else {
                    c.require(&format!("{P}.rates"), self.rates.as_deref(), "per_count");
                }
                if let Some(t) = &self.tail {
                    c.claim(
                        &format!("{P}.tail"),
                        matches!(t.as_str(), "hold_last" | "zero"),
                        "must be \"hold_last\" or \"zero\"",
                    );
                }
                c.forbid(&format!("{P}.rate"), &self.rate, "per_count");
                c.forbid(&format!("{P}.factor"), &self.factor, "per_count");
                c.forbid(&format!("{P}.floor"), &self.floor, "per_count");
                c.forbid(&format!("{P}.decay"), &self.decay, "per_count");
            }
            "count_times_factor" => {
                if let Some(r) = c.require(&format!("{P}.rate"), self.rate, "count_times_factor") {
                    positive(c, &format!("{P}.rate"), r);
                }
                let factor = self.factor.as_deref().unwrap_or("one");
                c.claim(
                    &format!("{P}.factor"),
                    matches!(factor, "one" | "exp_decay_x0"),
                    "must be \"one\" or \"exp_decay_x0\"",
                );
                if factor == "exp_decay_x0" {
                    if let Some(f) =
                        c.require(&format!("{P}.floor"), self.floor, "count_times_factor")
                    {
                        // floor = 0 would let the idle intensity decay to
                        // zero and the queue lose its regeneration supply
                        c.claim(
                            &format!("{P}.floor"),
                            f > 0.0 && f <= 1.0,
                            "must lie in (0, 1]; the idle intensity needs a positive lower bound",
                        );
                    }
                    if let Some(d) =
                        c.require(&format!("{P}.decay"), self.decay, "count_times_factor")
                    {
                        positive(c, &format!("{P}.decay"), d);
                    }
                } else {
                    c.forbid(&format!("{P}.floor"), &self.floor, "count_times_factor/one");
                    c.forbid(&format!("{P}.decay"), &self.decay, "count_times_factor/one");
                }
                c.forbid(&format!("{P}.rates"), &self.rates, "count_times_factor");
                c.forbid(&format!("{P}.tail"), &self.tail, "count_times_factor");
            }
            other => c.claim(
                &format!("{P}.kind"),
                false,
                &format!(
                    "unknown kind \"{other}\"; expected constant, per_count or count_times_factor"
                ),
            ),
        }
    }

    pub fn build(&self) -> Result<ArrivalLaw, ConfigError> {
        const P: &str = "model.arrival";
        let r = match self.kind.as_str() {
            "constant" => ArrivalLaw::constant(self.rate.unwrap()),
            "per_count" => {
                let tail = match self.tail.as_deref().unwrap_or("hold_last") {
                    "hold_last" => PerCountTail::HoldLast,
                    _ => PerCountTail::Zero,
                };
                ArrivalLaw::per_count(self.rates.clone().unwrap(), tail)
            }
            _ => {
                let factor = match self.factor.as_deref().unwrap_or("one") {
                    "one" => StateFactor::One,
                    _ => StateFactor::ExpDecayX0 {
                        floor: self.floor.unwrap(),
                        rate: self.decay.unwrap(),
                    },
                };
                ArrivalLaw::count_times_factor(self.rate.unwrap(), factor)
            }
        };
        r.map_err(|e| ConfigError::one(P, e.to_string()))
    }
}

impl ServiceConfig {
    fn validate(&self, c: &mut Check) {
        const P: &str = "model.service";
        match self.kind.as_str() {
            "exponential" => {
                if let Some(mu) = c.require(&format!("{P}.mu"), self.mu, "exponential") {
                    positive(c, &format!("{P}.mu"), mu);
                }
                c.forbid(&format!("{P}.alpha"), &self.alpha, "exponential");
                c.forbid(&format!("{P}.shape"), &self.shape, "exponential");
                c.forbid(&format!("{P}.scale"), &self.scale, "exponential");
                c.forbid(&format!("{P}.knots"), &self.knots, "exponential");
            }
            "pareto_hazard" => {
                if let Some(a) = c.require(&format!("{P}.alpha"), self.alpha, "pareto_hazard") {
                    c.claim(
                        &format!("{P}.alpha"),
                        a > 1.0 && a.is_finite(),
                        "must exceed 1, or the mean service time diverges",
                    );
                }
                c.forbid(&format!("{P}.mu"), &self.mu, "pareto_hazard");
                c.forbid(&format!("{P}.shape"), &self.shape, "pareto_hazard");
                c.forbid(&format!("{P}.scale"), &self.scale, "pareto_hazard");
                c.forbid(&format!("{P}.knots"), &self.knots, "pareto_hazard");
            }
            "weibull" => {
                if let Some(s) = c.require(&format!("{P}.shape"), self.shape, "weibull") {
                    positive(c, &format!("{P}.shape"), s);
                }
                if let Some(s) = c.require(&format!("{P}.scale"), self.scale, "weibull") {
                    positive(c, &format!("{P}.scale"), s);
                }
                c.forbid(&format!("{P}.mu"), &self.mu, "weibull");
                c.forbid(&format!("{P}.alpha"), &self.alpha, "weibull");
                c.forbid(&format!("{P}.knots"), &self.knots, "weibull");
            }
            "table" => {
                c.require(&format!("{P}.knots"), self.knots.as_deref(), "table");
                c.forbid(&format!("{P}.mu"), &self.mu, "table");
                c.forbid(&format!("{P}.alpha"), &self.alpha, "table");
                c.forbid(&format!("{P}.shape"), &self.shape, "table");
                c.forbid(&format!("{P}.scale"), &self.scale, "table");
            }
            other => c.claim(
                &format!("{P}.kind"),
                false,
                &format!(
                    "unknown kind \"{other}\"; expected exponential, pareto_hazard, weibull or table"
                ),
            ),
        }
    }

    pub fn build(&self) -> Result<ServiceLaw, ConfigError> {
        const P: &str = "model.service";
        let r = match self.kind.as_str() {
            "exponential" => ServiceLaw::exponential(self.mu.unwrap()),
            "pareto_hazard" => ServiceLaw::pareto_hazard(self.alpha.unwrap()),
            "weibull" => ServiceLaw::weibull(self.shape.unwrap(), self.scale.unwrap()),
            _ => {
                let knots: Vec<(f64, f64)> = self
                    .knots
                    .clone()
                    .unwrap()
                    .into_iter()
                    .map(|[t, h]| (t, h))
                    .collect();
                ServiceLaw::table(&knots)
            }
        };
        r.map_err(|e| ConfigError::one(P, e.to_string()))
    }
}
