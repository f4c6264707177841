mod args;
mod output;

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use hemonet_core::mitigation::{tank_distribution, DrawMode, TankModel, TankPolicy, TankSpec, TANK_WARMUP};
use hemonet_core::model::{default_network, load_network, CirculationNetwork, NetworkFile, DEFAULT_NETWORK_JSON};
use hemonet_core::netflow::{validate_network, ValidationReport};
use hemonet_core::par::{self, Execution};
use hemonet_core::scenarios::{coronary_report, portal_trace, spleen_trace, RouteTrace};
use hemonet_core::sensitivity::{run_ensemble, ConstraintSet};
use hemonet_core::stats::Histogram;
use hemonet_core::transport::{ConsumptionPolicy, SegmentTrace, SwarmConfig, TraceSample, TransportContext};
use serde::Serialize;
use serde_json::json;

use args::{Cli, Command, NetworkArg, Policy, Scenario, TankArgs};
use output::{num, OutDir, Table};

const DEFAULT_SEED: u64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("network failed validation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] hemonet_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn internal(e: impl std::fmt::Display) -> Self {
        CliError::Internal(e.to_string())
    }
}

#[derive(Serialize)]
struct RunMeta<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    inputs: serde_json::Value,
    seed: Option<u64>,
    network: String,
    constants: hemonet_core::model::PhysicalConstants,
    outputs: &'a [String],
}

struct Loaded {
    net: CirculationNetwork,
    source: String,
}

fn load(arg: &NetworkArg) -> Result<Loaded, CliError> {
    let (net, source) = match arg.network.as_deref() {
        None => (default_network(), "built-in".to_string()),
        Some(p) if p == Path::new("-") => {
            let mut text = String::new();
            std::io::stdin().read_to_string(&mut text).map_err(|e| CliError::io(p, e))?;
            (NetworkFile::from_json(&text)?.into_network()?, "stdin".to_string())
        }
        Some(p) => (load_network(p)?, p.display().to_string()),
    };
    Ok(Loaded { net, source })
}

fn require_valid(net: &CirculationNetwork) -> Result<ValidationReport, CliError> {
    let report = validate_network(net);
    if report.pass {
        Ok(report)
    } else {
        Err(CliError::Invalid(report.failures().join(", ")))
    }
}

fn finish(mut out: OutDir, command: &str, inputs: serde_json::Value, seed: Option<u64>, loaded: Option<&Loaded>) -> Result<(), CliError> {
    let constants = loaded.map_or_else(|| default_network().constants, |l| l.net.constants);
    let mut outputs = out.written.clone();
    outputs.push("run_meta.json".into());
    let meta = RunMeta {
        tool: "hemonet",
        version: env!("CARGO_PKG_VERSION"),
        command,
        inputs,
        seed,
        network: loaded.map_or_else(|| "built-in".into(), |l| l.source.clone()),
        constants,
        outputs: &outputs,
    };
    out.json("run_meta.json", &meta)?;
    eprintln!("wrote {}", outputs.join(", "));
    Ok(())
}

const TRACE_HEADER: [&str; 10] = [
    "segment",
    "time_s",
    "robot_time_s",
    "total_oxygen_molecules_per_m3",
    "concentration_molecules_per_m3",
    "saturation",
    "hematocrit",
    "robot_power_w",
    "relative_tissue_power",
    "robot_count",
];

fn trace_row(segment: &str, s: &TraceSample, robots: f64) -> Vec<String> {
    vec![
        segment.to_string(),
        num(s.time),
        num(s.robot_time),
        num(s.total_oxygen),
        num(s.state.plasma_concentration),
        num(s.state.cell_saturation),
        num(s.state.local_hematocrit),
        num(s.robot_power),
        num(s.relative_tissue_power),
        num(robots),
    ]
}

fn segment_table(trace: &SegmentTrace, robots: f64) -> Table {
    let mut t = Table::new(&TRACE_HEADER);
    for s in &trace.samples {
        t.push(trace_row(&trace.segment, s, robots));
    }
    t
}

fn route_table(route: &RouteTrace, robots: f64) -> Table {
    let mut t = Table::new(&TRACE_HEADER);
    for (seg, s) in route.samples() {
        t.push(trace_row(seg, &s, robots));
    }
    t
}

fn histogram_table(h: &Histogram) -> Table {
    let mut t = Table::new(&["bin_left_edge", "count"]);
    for (edge, c) in h.left_edges().iter().zip(&h.counts) {
        t.push(vec![num(*edge), c.to_string()]);
    }
    t
}

fn validate(network: &NetworkArg, out: Option<&Path>) -> Result<(), CliError> {
    let loaded = load(network)?;
    let report = validate_network(&loaded.net);
    println!("{}", serde_json::to_string_pretty(&report).map_err(CliError::internal)?);
    if let Some(dir) = out {
        let mut o = OutDir::create(dir)?;
        o.json("validation.json", &report)?;
        finish(o, "validate", json!({}), None, Some(&loaded))?;
    }
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Invalid(report.failures().join(", ")))
    }
}

fn sweep(network: &NetworkArg, robots: &[f64], policy: Option<&Path>, traces: bool, out: &Path) -> Result<(), CliError> {
    let loaded = load(network)?;
    require_valid(&loaded.net)?;
    let policy: ConsumptionPolicy = match policy {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(hemonet_core::Error::from)?
        }
        None => ConsumptionPolicy::default(),
    };
    let net = &loaded.net;
    let ctx = TransportContext::new(net)?;
    let mut segments = Table::new(&[
        "robot_count",
        "segment",
        "kind",
        "flow_m3_per_s",
        "transit_time_s",
        "inlet_concentration_molecules_per_m3",
        "end_concentration_molecules_per_m3",
        "end_saturation",
        "inlet_total_oxygen_molecules_per_m3",
        "outlet_total_oxygen_molecules_per_m3",
        "robot_consumed_molecules_per_m3",
        "tissue_consumed_molecules_per_m3",
        "min_robot_power_w",
        "min_robot_power_time_s",
        "max_robot_power_w",
        "capillary_exit_robot_power_w",
        "capillary_exit_relative_tissue_power",
        "min_relative_tissue_power",
    ]);
    let mut summary = Table::new(&[
        "robot_count",
        "min_robot_power_w",
        "min_robot_power_segment",
        "max_robot_power_w",
        "max_robot_power_segment",
        "min_end_concentration_molecules_per_m3",
        "min_end_concentration_segment",
        "min_relative_tissue_power",
        "min_relative_tissue_power_segment",
        "mean_capillary_exit_power_w",
    ]);
    let mut trace_table = Table::new(&TRACE_HEADER);
    for &n in robots {
        let swarm = SwarmConfig::new(n, &net.constants).with_policy(policy.clone());
        let r = ctx.sweep(&swarm)?;
        for (s, seg) in r.segments.iter().zip(net.segments()) {
            let o = &s.outcome;
            let opt = |x: Option<f64>| x.map_or_else(String::new, num);
            segments.push(vec![
                num(n),
                s.id.clone(),
                s.kind.as_str().to_string(),
                num(s.flow),
                num(seg.transit_time),
                num(o.inlet.plasma_concentration),
                num(o.outlet.plasma_concentration),
                num(o.outlet.cell_saturation),
                num(o.inlet_total_oxygen),
                num(o.outlet_total_oxygen),
                num(o.robot_consumed),
                num(o.tissue_consumed),
                num(o.min_robot_power),
                num(o.min_robot_power_time),
                num(o.max_robot_power),
                opt(s.capillary_exit().map(|e| e.robot_power)),
                opt(s.capillary_exit().and_then(|e| e.relative_tissue_power)),
                opt(o.min_relative_tissue_power),
            ]);
            if traces {
                for x in &o.trace.samples {
                    trace_table.push(trace_row(&s.id, x, n));
                }
            }
        }
        let t = r.min_relative_tissue_power.as_ref();
        summary.push(vec![
            num(n),
            num(r.min_robot_power.value),
            r.min_robot_power.segment.clone(),
            num(r.max_robot_power.value),
            r.max_robot_power.segment.clone(),
            num(r.min_end_concentration.value),
            r.min_end_concentration.segment.clone(),
            t.map_or_else(String::new, |e| num(e.value)),
            t.map_or_else(String::new, |e| e.segment.clone()),
            num(r.mean_capillary_exit_power()),
        ]);
    }
    let mut o = OutDir::create(out)?;
    o.csv("segments.csv", segments)?;
    o.csv("summary.csv", summary)?;
    if traces {
        o.csv("traces.csv", trace_table)?;
    }
    finish(o, "sweep", json!({ "robots": robots, "policy": policy, "traces": traces }), None, Some(&loaded))
}

fn scenario(which: Scenario, network: &NetworkArg, robots: f64, out: &Path) -> Result<(), CliError> {
    let loaded = load(network)?;
    require_valid(&loaded.net)?;
    let net = &loaded.net;
    let swarm = SwarmConfig::new(robots, &net.constants);
    let mut o = OutDir::create(out)?;
    let name = match which {
        Scenario::Portal => {
            let r = portal_trace(net, &swarm)?;
            o.csv("portal_trace.csv", route_table(&r.portal, robots))?;
            o.csv("hepatic_trace.csv", route_table(&r.hepatic, robots))?;
            let mut m = Table::new(&["route", "segment", "time_s", "power_before_w", "power_after_w"]);
            for (route, t) in [("portal", &r.portal), ("hepatic", &r.hepatic)] {
                for j in &t.merges {
                    m.push(vec![route.into(), j.segment.clone(), num(j.time), num(j.power_before), num(j.power_after)]);
                }
            }
            o.csv("merges.csv", m)?;
            "portal"
        }
        Scenario::Spleen => {
            let r = spleen_trace(net, &swarm)?;
            o.csv("spleen_trace.csv", segment_table(&r.trace, robots))?;
            o.json(
                "spleen.json",
                &json!({
                    "robot_count": r.robot_count,
                    "inlet_saturation": r.inlet_saturation,
                    "exit_saturation": r.exit_saturation,
                    "min_saturation": r.min_saturation,
                    "fully_desaturated": r.fully_desaturated,
                    "end_robot_power_w": r.end_robot_power,
                }),
            )?;
            "spleen"
        }
        Scenario::Coronary => {
            let r = coronary_report(net, &swarm)?;
            o.csv("coronary_trace.csv", segment_table(&r.trace, robots))?;
            o.json(
                "coronary.json",
                &json!({
                    "robot_count": r.robot_count,
                    "window_s": [r.window.0, r.window.1],
                    "window_exit_fraction": r.window_exit_fraction,
                    "min_relative_tissue_power": r.min_relative_tissue_power,
                    "tissue_share": r.tissue_share,
                }),
            )?;
            "coronary"
        }
    };
    finish(o, &format!("scenario {name}"), json!({ "scenario": name, "robots": robots }), None, Some(&loaded))
}

fn tank(a: &TankArgs) -> Result<(), CliError> {
    let loaded = load(&a.network)?;
    require_valid(&loaded.net)?;
    let net = &loaded.net;
    let seed = a.seed.unwrap_or(DEFAULT_SEED);
    let policy = match a.policy {
        Policy::Always => TankPolicy::Always,
        Policy::WhenFull => TankPolicy::WhenFull,
    };
    let spec = TankSpec { policy, draw: if a.supplement { DrawMode::Supplement } else { DrawMode::TankOnly }, ..TankSpec::default() };
    let mut model = TankModel::new(net, &SwarmConfig::new(a.swarm, &net.constants), spec)?;
    if !a.avoid.is_empty() {
        let weights = a.avoid.iter().map(|id| (id.clone(), 0.0)).collect();
        model = model.with_path_weights(&weights)?;
    }
    let horizon = a.minutes * 60.0;
    let dist = tank_distribution(&model, a.robots_sim, horizon, seed, Execution::Parallel)?;
    let trace = model.simulate(TANK_WARMUP + horizon, 0.0, &mut par::substream(seed, 0));
    let mut t = Table::new(&["time_s", "path", "fill_fraction", "drawn_molecules"]);
    for e in &trace.events {
        t.push(vec![num(e.time), e.path.clone(), num(e.fill_fraction), num(e.drawn)]);
    }
    let mut o = OutDir::create(&a.out)?;
    o.csv("tank_trace.csv", t)?;
    o.csv("tank_hist.csv", histogram_table(&dist.histogram))?;
    let inputs = json!({
        "policy": policy,
        "draw": spec.draw,
        "robots_sim": a.robots_sim,
        "minutes": a.minutes,
        "warmup_s": TANK_WARMUP,
        "swarm": a.swarm,
        "avoid": a.avoid,
        "tank": spec,
        "fill_fraction_per_pass": model.fill_fraction_per_pass(),
        "passes_to_fill": model.passes_to_fill(),
        "full_tank_duration_s": model.full_tank_duration(),
        "trace": "history 0, including warmup",
    });
    finish(o, "tank", inputs, Some(seed), Some(&loaded))
}

fn sensitivity(samples: usize, robots: &[f64], seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let base = default_network();
    let constraints = ConstraintSet::resting(&base);
    let e = run_ensemble(&constraints, &base, samples, robots, seed, Execution::Parallel)?;
    let mut t = Table::new(&[
        "sample",
        "robot_count",
        "mean_capillary_exit_power_w",
        "min_concentration_molecules_per_m3",
        "min_concentration_segment",
        "min_relative_tissue_power",
        "min_relative_tissue_power_segment",
    ]);
    for m in &e.metrics {
        t.push(vec![
            m.sample.to_string(),
            num(m.robot_count),
            num(m.mean_power),
            num(m.min_concentration),
            m.min_concentration_segment.clone(),
            num(m.min_tissue_power),
            m.min_tissue_power_segment.clone(),
        ]);
    }
    let mut o = OutDir::create(out)?;
    o.csv("samples.csv", t)?;
    for s in &e.summaries {
        let tag = num(s.robot_count);
        o.csv(&format!("hist_power_{tag}.csv"), histogram_table(&s.power_histogram))?;
        o.csv(&format!("hist_concentration_{tag}.csv"), histogram_table(&s.concentration_histogram))?;
        o.csv(&format!("hist_tissue_power_{tag}.csv"), histogram_table(&s.tissue_power_histogram))?;
    }
    o.json("summary.json", &e.summaries)?;
    let inputs = json!({
        "samples": samples,
        "robots": robots,
        "constraints": constraints,
        "sampling": "uniform within bounds, rejection of draws violating any bound",
        "rejections": e.rejections,
    });
    finish(o, "sensitivity", inputs, Some(seed), None)
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        par::set_threads(n)?;
    }
    match cli.command {
        Command::ExportDefault { out } => match out {
            Some(p) => output::write_atomic(&p, DEFAULT_NETWORK_JSON.as_bytes()),
            None => {
                print!("{DEFAULT_NETWORK_JSON}");
                Ok(())
            }
        },
        Command::Validate { network, out } => validate(&network, out.as_deref()),
        Command::Sweep { network, robots, policy, traces, out } => sweep(&network, &robots, policy.as_deref(), traces, &out),
        Command::Scenario { which, network, robots, out } => scenario(which, &network, robots, &out),
        Command::Tank(a) => tank(&a),
        Command::Sensitivity { samples, robots, seed, out } => sensitivity(samples, &robots, seed, &out),
        Command::MixingReport => {
            let net = default_network();
            let report = hemonet_core::mixing::mixing_report(&net.constants, net.globals.total_volume)?;
            println!("{}", serde_json::to_string_pretty(&report).map_err(CliError::internal)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hemonet: {e}");
            match e {
                CliError::Core(hemonet_core::Error::Domain(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
