//! Subcommand implementations.
//!
//! The sweep builders return finished CSV documents so the figure presets
//! can reuse them verbatim; the `run_` wrappers parse arguments and route
//! the documents to stdout or a file. Sweep points are evaluated in
//! parallel but collected in grid order, and every point derives its
//! random streams from the task label and index alone, so output bytes do
//! not depend on the thread count.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use pacot_core::capacity::capacity_for_mix;
use pacot_core::detection::{sweep_point, Experiment};
use pacot_core::energy::energy_point;
use pacot_core::estimator::{clipped, for_scenario};
use pacot_core::kinetics::{build_generator, channels_from_scenario, simulate_trace, steady_state};
use pacot_core::params::{element, Scenario};
use pacot_core::release::{release_point, SweepVariable};
use pacot_core::rng::substream;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{csv_document, write_output};

pub const CAPACITY_HEADER: &str = "mix,r_m,m,c_tm";
pub const TRACE_HEADER: &str = "state,dwell_s";
pub const DETECT_HEADER: &str = "x,bep,pb_bit0,pb_bit1,lambda,mean0,var0,mean1,var1";
pub const RELEASE_HEADER: &str = "x,Q_m3s,u_ms,t_analytic_s,t_sim_mean_s,t_sim_std_s";
pub const ENERGY_HEADER: &str = "variable,t_s,deltaP_Pa,Q_m3s,E_J";

/// Stream label standalone trace exports draw from, indexed by bit.
pub const TRACE_STREAM: &str = "kinetics-trace";

fn fmt(value: f64) -> String {
    format!("{value}")
}

/// Parses a particle mix like `zn=0.4,cd=0.3,hg=0.3` into symbol and
/// fraction pairs, rejecting unknown elements and repeats.
pub fn parse_mix(spec: &str) -> Result<Vec<(&'static str, f64)>> {
    let mut mix: Vec<(&'static str, f64)> = Vec::new();
    for part in spec.split(',') {
        let Some((symbol, fraction)) = part.split_once('=') else {
            bail!("mix entry {part:?} must have the form symbol=fraction");
        };
        let symbol = symbol.trim().to_ascii_lowercase();
        let entry = element(&symbol)
            .with_context(|| format!("unknown element {symbol:?} in mix"))?;
        if mix.iter().any(|&(existing, _)| existing == entry.symbol) {
            bail!("element {symbol:?} appears twice in mix");
        }
        let fraction: f64 = fraction
            .trim()
            .parse()
            .with_context(|| format!("mix fraction {fraction:?} is not a number"))?;
        mix.push((entry.symbol, fraction));
    }
    Ok(mix)
}

/// One-row capacity report for a particle mix.
pub fn capacity_csv(mix_spec: &str, device_radius_m: f64, device_length_m: f64) -> Result<String> {
    let mix = parse_mix(mix_spec)?;
    let pairs: Vec<(f64, f64)> = mix
        .iter()
        .map(|&(symbol, fraction)| {
            (fraction, element(symbol).expect("parse_mix returns known symbols").radius_pm * 1e-12)
        })
        .collect();
    let report = capacity_for_mix(device_radius_m, device_length_m, &pairs)
        .map_err(anyhow::Error::new)?;
    let echo: Vec<String> =
        mix.iter().map(|&(symbol, fraction)| format!("{symbol}={fraction}")).collect();
    let row = vec![
        echo.join(","),
        fmt(report.mean_radius_m),
        report.rings_per_layer.to_string(),
        fmt(report.capacity),
    ];
    Ok(csv_document(CAPACITY_HEADER, &[row]))
}

pub fn run_capacity(
    mix_spec: &str,
    device_radius_m: f64,
    device_length_m: f64,
    out: Option<&Path>,
) -> Result<()> {
    write_output(out, &capacity_csv(mix_spec, device_radius_m, device_length_m)?)
}

/// Simulated dwell trace as `state,dwell_s` rows, one per dwell interval.
pub fn trace_csv(scenario: &Scenario, cycles: usize, bit: u8) -> Result<String> {
    let channels = channels_from_scenario(scenario, bit).map_err(anyhow::Error::new)?;
    let mut rng = substream(scenario.seed, TRACE_STREAM, u64::from(bit));
    let trace = simulate_trace(&channels, cycles, &mut rng).map_err(anyhow::Error::new)?;
    let rows: Vec<Vec<String>> = trace
        .steps
        .iter()
        .map(|step| {
            let state = match step.channel {
                None => "U".to_string(),
                Some(index) => channels[index].label.clone(),
            };
            vec![state, fmt(step.dwell_s)]
        })
        .collect();
    Ok(csv_document(TRACE_HEADER, &rows))
}

pub fn run_kinetics_trace(
    scenario: &Scenario,
    cycles: usize,
    bit: u8,
    out: Option<&Path>,
) -> Result<()> {
    write_output(out, &trace_csv(scenario, cycles, bit)?)
}

#[derive(Debug, Serialize)]
struct StateProbability {
    state: String,
    probability: f64,
}

#[derive(Debug, Serialize)]
struct SteadyReport {
    bit: u8,
    p_u: f64,
    p_b: f64,
    theta: Vec<StateProbability>,
}

pub fn run_kinetics_steady(scenario: &Scenario, bit: u8, out: Option<&Path>) -> Result<()> {
    let channels = channels_from_scenario(scenario, bit).map_err(anyhow::Error::new)?;
    let generator = build_generator(&channels).map_err(anyhow::Error::new)?;
    let theta = steady_state(&generator).map_err(anyhow::Error::new)?;
    let report = SteadyReport {
        bit,
        p_u: theta[0],
        p_b: 1.0 - theta[0],
        theta: generator
            .states
            .iter()
            .zip(&theta)
            .map(|(state, &probability)| StateProbability {
                state: state.clone(),
                probability,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(out, &text)
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    multiple: f64,
    species: Vec<String>,
    thresholds_s: Vec<f64>,
    q: Vec<Vec<f64>>,
    condition: f64,
    events: u64,
    n_b: Vec<u64>,
    alpha_hat: Vec<f64>,
    alpha_clipped: Vec<f64>,
    clipped: bool,
    var_alpha: Vec<f64>,
}

/// Reads a `state,dwell_s` trace back and returns the bound dwell times.
fn read_bound_dwells(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read trace file {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == TRACE_HEADER => {}
        Some((_, header)) => {
            bail!("{}: expected header {TRACE_HEADER:?}, got {header:?}", path.display())
        }
        None => bail!("{}: trace file is empty", path.display()),
    }
    let mut dwells = Vec::new();
    for (index, line) in lines {
        let line_no = index + 1;
        let Some((state, dwell)) = line.split_once(',') else {
            bail!("{}:{line_no}: expected state,dwell_s", path.display());
        };
        let dwell: f64 = dwell
            .trim()
            .parse()
            .with_context(|| format!("{}:{line_no}: dwell {dwell:?} is not a number", path.display()))?;
        if state.trim() != "U" {
            dwells.push(dwell);
        }
    }
    Ok(dwells)
}

pub fn run_estimate(
    scenario: &Scenario,
    trace_path: &Path,
    multiple: f64,
    out: Option<&Path>,
) -> Result<()> {
    let dwells = read_bound_dwells(trace_path)?;
    let estimator = for_scenario(scenario, multiple).map_err(anyhow::Error::new)?;
    let counts = estimator.model.count_events(dwells.iter());
    let events: u64 = counts.iter().sum();
    let alpha_hat = estimator.model.estimate_ratios(&counts).map_err(anyhow::Error::new)?;
    let (alpha_clipped, was_clipped) = clipped(&alpha_hat);
    let var_alpha = estimator
        .model
        .estimator_variance(&alpha_clipped, events as usize)
        .map_err(anyhow::Error::new)?;
    let q = (0..estimator.model.q.nrows())
        .map(|row| (0..estimator.model.q.ncols()).map(|col| estimator.model.q[(row, col)]).collect())
        .collect();
    let report = EstimateReport {
        multiple,
        species: estimator
            .species_order
            .iter()
            .map(|&index| scenario.species[index].name.clone())
            .collect(),
        thresholds_s: estimator.model.scheme.thresholds_s().to_vec(),
        q,
        condition: estimator.model.condition,
        events,
        n_b: counts,
        alpha_hat,
        alpha_clipped,
        clipped: was_clipped,
        var_alpha,
    };
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    write_output(out, &text)
}

/// Detection sweep as a CSV document with the fixed nine-column header.
pub fn detect_sweep_csv(
    scenario: &Scenario,
    experiment: Experiment,
    grid: &[f64],
    saturated: bool,
) -> Result<String> {
    let points = grid
        .par_iter()
        .map(|&x| sweep_point(scenario, experiment, x, saturated))
        .collect::<pacot_core::Result<Vec<_>>>()
        .map_err(anyhow::Error::new)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|row| {
            vec![
                fmt(row.x),
                fmt(row.stats.analytic_bep),
                fmt(row.bound_probability_bit0),
                fmt(row.bound_probability_bit1),
                fmt(row.stats.threshold),
                fmt(row.stats.bit0.mean),
                fmt(row.stats.bit0.variance),
                fmt(row.stats.bit1.mean),
                fmt(row.stats.bit1.variance),
            ]
        })
        .collect();
    Ok(csv_document(DETECT_HEADER, &rows))
}

pub fn run_detect_sweep(
    scenario: &Scenario,
    experiment: Experiment,
    grid: &[f64],
    saturated: bool,
    out: Option<&Path>,
) -> Result<()> {
    write_output(out, &detect_sweep_csv(scenario, experiment, grid, saturated)?)
}

/// Release sweep as a CSV document with the fixed six-column header.
pub fn release_sweep_csv(
    scenario: &Scenario,
    variable: SweepVariable,
    grid: &[f64],
    particles: usize,
    dt_s: Option<f64>,
) -> Result<String> {
    let points = grid
        .par_iter()
        .map(|&x| release_point(scenario, variable, x, particles, dt_s, scenario.seed))
        .collect::<pacot_core::Result<Vec<_>>>()
        .map_err(anyhow::Error::new)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|row| {
            vec![
                fmt(row.x),
                fmt(row.flow_m3_s),
                fmt(row.velocity_m_s),
                fmt(row.analytic_time_s),
                fmt(row.simulated_mean_s),
                fmt(row.simulated_std_s),
            ]
        })
        .collect();
    Ok(csv_document(RELEASE_HEADER, &rows))
}

pub fn run_release_sweep(
    scenario: &Scenario,
    variable: SweepVariable,
    grid: &[f64],
    particles: usize,
    dt_s: Option<f64>,
    out: Option<&Path>,
) -> Result<()> {
    write_output(out, &release_sweep_csv(scenario, variable, grid, particles, dt_s)?)
}

/// Evenly spaced times from zero to `t_max_s` inclusive.
pub fn time_grid(t_max_s: f64, steps: usize) -> Result<Vec<f64>> {
    if !t_max_s.is_finite() || t_max_s <= 0.0 {
        bail!("t-max must be finite and positive, got {t_max_s}");
    }
    if steps < 2 {
        bail!("t-steps must be at least 2, got {steps}");
    }
    Ok((0..steps)
        .map(|k| if k == steps - 1 { t_max_s } else { t_max_s * k as f64 / (steps - 1) as f64 })
        .collect())
}

/// Energy sweep as a CSV document: one row per swept value and time.
pub fn energy_sweep_csv(
    scenario: &Scenario,
    variable: SweepVariable,
    grid: &[f64],
    times: &[f64],
) -> Result<String> {
    let mut rows = Vec::with_capacity(grid.len() * times.len());
    for &x in grid {
        for &t in times {
            let point = energy_point(scenario, variable, x, t).map_err(anyhow::Error::new)?;
            rows.push(vec![
                fmt(point.x),
                fmt(point.duration_s),
                fmt(point.pressure_loss_pa),
                fmt(point.flow_m3_s),
                fmt(point.energy_j),
            ]);
        }
    }
    Ok(csv_document(ENERGY_HEADER, &rows))
}

pub fn run_energy_sweep(
    scenario: &Scenario,
    variable: SweepVariable,
    grid: &[f64],
    times: &[f64],
    out: Option<&Path>,
) -> Result<()> {
    write_output(out, &energy_sweep_csv(scenario, variable, grid, times)?)
}
