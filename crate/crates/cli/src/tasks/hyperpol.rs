//! Feedback stabilisation of the TLS bath: forward simulation and joint fits.

use fluxkit::io::read_decay_curve;
use fluxkit::noise::DecayCurve;
use fluxkit::tlsbath::{
    cross_relaxation_rates, fit_hyperpolarization, run_stabilization, run_stabilization_stepwise,
    simulate_traces, simulate_traces_at, BathState, HyperpolParams, HyperpolTrace, Level, ProtocolConfig, TlsLadder,
};
use serde::{Deserialize, Serialize};

use super::{gaussian, to_table, Synthetic, TaskOutput};
use crate::config::{section, Context};
use crate::error::CliError;
use crate::report::{Convergence, Quantity};
use crate::table::Table;

/// TLS ladder; rates and detunings in 1/s. Give at most one of `coupling`
/// and `total_rate`; with neither, `ΣΓ_qt` is 45 kHz.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderCfg {
    #[serde(default = "defaults::count")]
    pub count: usize,
    #[serde(default = "defaults::spacing")]
    pub spacing: f64,
    #[serde(default = "defaults::offset")]
    pub offset: f64,
    #[serde(default = "defaults::gamma2")]
    pub gamma2: f64,
    #[serde(default = "defaults::gamma_t")]
    pub gamma_t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_rate: Option<f64>,
}

mod defaults {
    use fluxkit::tlsbath::TlsLadder;

    pub fn count() -> usize {
        TlsLadder::default().count
    }
    pub fn spacing() -> f64 {
        TlsLadder::default().spacing
    }
    pub fn offset() -> f64 {
        TlsLadder::default().offset
    }
    pub fn gamma2() -> f64 {
        TlsLadder::default().gamma2
    }
    pub fn gamma_t() -> f64 {
        TlsLadder::default().gamma_t
    }
}

pub const DEFAULT_TOTAL_RATE: f64 = 45e3;

impl LadderCfg {
    fn with_total(count: usize, total: f64) -> Self {
        Self {
            count,
            spacing: defaults::spacing(),
            offset: defaults::offset(),
            gamma2: defaults::gamma2(),
            gamma_t: defaults::gamma_t(),
            coupling: None,
            total_rate: Some(total),
        }
    }

    fn build(&self, path: &str) -> Result<TlsLadder, CliError> {
        let base = |g| TlsLadder::new(self.count, self.spacing, self.offset, g, self.gamma2, self.gamma_t);
        match (self.coupling, self.total_rate) {
            (Some(_), Some(_)) => Err(CliError::schema(path, "give either `coupling` or `total_rate`, not both")),
            (Some(g), None) => Ok(base(g)?),
            (None, total) => Ok(base(1.0)?.with_total_rate(total.unwrap_or(DEFAULT_TOTAL_RATE))?),
        }
    }
}

/// Qubit rate (1/s), thermal population and ladder.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCfg {
    pub gamma_q: f64,
    pub p_th: f64,
    pub ladder: LadderCfg,
}

impl ModelCfg {
    fn build(&self, path: &str) -> Result<HyperpolParams, CliError> {
        let ladder = self.ladder.build(&format!("{path}.ladder"))?;
        Ok(HyperpolParams { gamma_q: self.gamma_q, ladder, p_th: self.p_th })
    }
}

fn both_targets() -> Vec<ProtocolConfig> {
    [(Level::Excited, Level::Ground), (Level::Ground, Level::Excited)]
        .into_iter()
        .map(|(target, init)| ProtocolConfig { target, init, ..Default::default() })
        .collect()
}

fn eight_traces() -> Vec<ProtocolConfig> {
    [1, 10, 100, 10_000]
        .into_iter()
        .flat_map(|n| both_targets().into_iter().map(move |c| ProtocolConfig { repetitions: n, ..c }))
        .collect()
}

fn level(l: Level) -> &'static str {
    match l {
        Level::Excited => "excited",
        Level::Ground => "ground",
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimParams {
    model: ModelCfg,
    #[serde(default = "both_targets")]
    protocols: Vec<ProtocolConfig>,
    /// Also run the cycle-by-cycle reference and report the largest difference.
    #[serde(default)]
    stepwise_check: bool,
}

pub fn simulate(params: &toml::Table) -> Result<TaskOutput, CliError> {
    let p: SimParams = section("parameters", params)?;
    let model = p.model.build("parameters.model")?;
    for (i, c) in p.protocols.iter().enumerate() {
        c.validate().map_err(|e| CliError::schema(format!("parameters.protocols[{i}]"), e.to_string()))?;
    }
    let sims = simulate_traces(&model, &p.protocols)?;
    let mut out = TaskOutput::default();
    out.set("gamma_q", Quantity::new(model.gamma_q, "1/s"));
    out.set("total_cross_relaxation", Quantity::new(model.total_cross_relaxation(), "1/s"));
    out.set("gamma1", Quantity::new(model.gamma1(), "1/s"));
    out.set("t1", Quantity::new(1.0 / model.gamma1(), "s"));
    out.set("coupling", Quantity::new(model.ladder.coupling, "1/s"));

    for (i, (cfg, sim)) in p.protocols.iter().zip(&sims).enumerate() {
        let mut t = Table::new(&["t_s", "population", "reference_population"]);
        let mut excess = (f64::INFINITY, f64::NEG_INFINITY);
        for ((time, y), r) in sim.curve.iter().zip(&sim.reference) {
            t.push(&[time, y, *r]);
            excess = (excess.0.min(y - r), excess.1.max(y - r));
        }
        out.set(format!("trace_{i}_max_excess"), Quantity::new(excess.1, "1"));
        out.set(format!("trace_{i}_min_excess"), Quantity::new(excess.0, "1"));
        out.table(format!("trace_{i}_{}_n{}.csv", level(cfg.target), cfg.repetitions), t);
    }

    let cr = cross_relaxation_rates(&model.ladder);
    let mut t = Table::new(&["index", "detuning_per_s", "rate_per_s"]);
    for ((k, d), r) in cr.indices.iter().zip(model.ladder.detunings()).zip(&cr.rates) {
        t.push_cells(vec![k.to_string(), d.to_string(), r.to_string()]);
    }
    out.table("cross_relaxation.csv", t);

    if p.stepwise_check {
        let thermal = BathState::thermal(model.ladder.count, model.p_th)?;
        let mut worst = 0.0f64;
        for cfg in &p.protocols {
            let a = run_stabilization(&model.ladder, model.gamma_q, model.p_th, cfg)?;
            let b = run_stabilization_stepwise(&model.ladder, model.gamma_q, &thermal, cfg)?;
            worst = worst.max((a.p_q - b.p_q).abs());
            for (x, y) in a.p_t.iter().zip(&b.p_t) {
                worst = worst.max((x - y).abs());
            }
        }
        out.set("stepwise_max_difference", Quantity::new(worst, "1"));
    }
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceCfg {
    /// `t_s,population[,weight]`.
    data: String,
    #[serde(default)]
    protocol: ProtocolConfig,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitParams {
    traces: Vec<TraceCfg>,
    /// Starting point; the TLS count is held fixed.
    init: ModelCfg,
}

pub fn fit(params: &toml::Table, ctx: &mut Context) -> Result<TaskOutput, CliError> {
    let p: FitParams = section("parameters", params)?;
    let init = p.init.build("parameters.init")?;
    let mut traces = Vec::with_capacity(p.traces.len());
    for (i, t) in p.traces.iter().enumerate() {
        t.protocol
            .validate()
            .map_err(|e| CliError::schema(format!("parameters.traces[{i}].protocol"), e.to_string()))?;
        let bytes = ctx.read_input(&t.data)?;
        let curve = read_decay_curve(&bytes[..])
            .map_err(|e| CliError::Data { path: ctx.resolve(&t.data), message: e.to_string() })?;
        traces.push(HyperpolTrace { protocol: t.protocol, curve });
    }
    let fit = fit_hyperpolarization(&traces, &init)?;
    let (v, se) = (&fit.params, &fit.stderr);
    let mut out = TaskOutput::default();
    out.set("gamma_q", Quantity::fitted(v.gamma_q, se.gamma_q, "1/s"));
    out.set("coupling", Quantity::fitted(v.ladder.coupling, se.coupling, "1/s"));
    out.set("gamma2", Quantity::fitted(v.ladder.gamma2, se.gamma2, "1/s"));
    out.set("spacing", Quantity::fitted(v.ladder.spacing, se.spacing, "1/s"));
    out.set("offset", Quantity::fitted(v.ladder.offset, se.offset, "1/s"));
    out.set("gamma_t", Quantity::fitted(v.ladder.gamma_t, se.gamma_t, "1/s"));
    out.set("p_th", Quantity::fitted(v.p_th, se.p_th, "1"));
    out.set(
        "total_cross_relaxation",
        Quantity::fitted(fit.total_cross_relaxation, se.total_cross_relaxation, "1/s"),
    );
    out.set("gamma1", Quantity::fitted(fit.gamma1, se.gamma1, "1/s"));
    out.convergence = Some(Convergence::from(&fit.fit));
    out.warnings = fit.warnings.clone();

    let protocols: Vec<ProtocolConfig> = traces.iter().map(|t| t.protocol).collect();
    let times: Vec<Vec<f64>> = traces.iter().map(|t| t.curve.times().to_vec()).collect();
    let model = simulate_traces_at(&fit.params, &protocols, &times)?;
    let mut t = Table::new(&["trace", "t_s", "population", "model_population"]);
    for (i, (data, sim)) in traces.iter().zip(&model).enumerate() {
        for ((time, y), ym) in data.curve.iter().zip(sim.curve.populations()) {
            t.push_cells(vec![i.to_string(), time.to_string(), y.to_string(), ym.to_string()]);
        }
    }
    out.table("hyperpol_fit.csv", t);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Truth {
    model: ModelCfg,
    /// Fit starting point; defaults to Γ_q = 100 kHz, p_th = 0.25 and the
    /// default ladder shape at ΣΓ_qt = 30 kHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<ModelCfg>,
    /// Defaults to N = 1, 10, 100, 10⁴ towards each level.
    #[serde(default = "eight_traces")]
    protocols: Vec<ProtocolConfig>,
    /// Gaussian population noise.
    #[serde(default)]
    noise: f64,
}

pub fn generate(synthetic: &toml::Table, seed: u64) -> Result<Synthetic, CliError> {
    let s: Truth = section("synthetic", synthetic)?;
    if !(s.noise >= 0.0) {
        return Err(CliError::schema("synthetic.noise", "must be >= 0"));
    }
    let truth = s.model.build("synthetic.model")?;
    for (i, c) in s.protocols.iter().enumerate() {
        c.validate().map_err(|e| CliError::schema(format!("synthetic.protocols[{i}]"), e.to_string()))?;
    }
    let sims = simulate_traces(&truth, &s.protocols)?;
    let mut draw = gaussian(seed);
    let mut tables = Vec::new();
    let mut traces = Vec::new();
    for (i, (cfg, sim)) in s.protocols.iter().zip(&sims).enumerate() {
        let mut t = Table::new(&["t_s", "population"]);
        let noisy: Vec<f64> =
            sim.curve.populations().iter().map(|p| (p + s.noise * draw()).clamp(0.0, 1.0)).collect();
        // round-trip through the curve type so the file is valid fit input
        let curve = DecayCurve::new(sim.curve.times().to_vec(), noisy, None)?;
        for (time, y) in curve.iter() {
            t.push(&[time, y]);
        }
        let file = format!("trace_{i}.csv");
        tables.push((file.clone(), t));
        traces.push(TraceCfg { data: file, protocol: *cfg });
    }
    let init = s.start.clone().unwrap_or(ModelCfg {
        gamma_q: 100e3,
        p_th: 0.25,
        ladder: LadderCfg::with_total(s.model.ladder.count, 30e3),
    });
    let fit = FitParams { traces, init };
    let mut sidecar = serde_json::to_value(&s).expect("truth serialises");
    sidecar["derived"] = serde_json::json!({
        "coupling": truth.ladder.coupling,
        "total_cross_relaxation": truth.total_cross_relaxation(),
        "gamma1": truth.gamma1(),
    });
    Ok(Synthetic { tables, truth: sidecar, fit_parameters: to_table(&fit) })
}
