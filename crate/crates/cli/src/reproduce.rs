//! Bundled result-set presets.
//!
//! Each preset regenerates one standard artifact set from the resolved
//! scenario: capacity curves (fig4), pump energy over time (fig6), release
//! times (fig7), and detection error sweeps (fig8, fig9, fig10). A
//! manifest with scenario provenance, substream ids, and artifact digests
//! is written alongside the CSVs.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use pacot_core::capacity::capacity_for_mix;
use pacot_core::detection::{Experiment, POPULATION_STREAM};
use pacot_core::params::{Scenario, ELEMENTS};
use pacot_core::release::{SweepVariable, PARTICLE_STREAM};

use crate::commands::{detect_sweep_csv, energy_sweep_csv, release_sweep_csv, time_grid};
use crate::config::FileConfig;
use crate::grid::parse_grid;
use crate::manifest::{render, scenario_records, ArtifactRecord, Manifest, SubstreamRecord};
use crate::output::{csv_document, write_file};

/// Particle count the release presets simulate per sweep point.
pub const RELEASE_PARTICLES: usize = 10_000;

/// One regenerable result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    Fig4,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
}

impl Figure {
    pub const ALL: [Figure; 6] =
        [Figure::Fig4, Figure::Fig6, Figure::Fig7, Figure::Fig8, Figure::Fig9, Figure::Fig10];
}

const FIG4_HEADER: &str = "element,fraction,r_m,m,c_tm";

/// Capacity versus the concentration fraction of each metal: one curve per
/// element, with the remaining fraction split evenly over the other four.
fn fig4_csv(scenario: &Scenario) -> Result<String> {
    let fractions: Vec<f64> = (0..21).map(|k| f64::from(k) / 20.0).collect();
    let mut rows = Vec::with_capacity(ELEMENTS.len() * fractions.len());
    for focus in &ELEMENTS {
        for &fraction in &fractions {
            let rest = (1.0 - fraction) / (ELEMENTS.len() - 1) as f64;
            let mix: Vec<(f64, f64)> = ELEMENTS
                .iter()
                .map(|entry| {
                    let share = if entry.symbol == focus.symbol { fraction } else { rest };
                    (share, entry.radius_pm * 1e-12)
                })
                .collect();
            let report =
                capacity_for_mix(scenario.device_radius_m, scenario.device_length_m, &mix)
                    .map_err(anyhow::Error::new)?;
            rows.push(vec![
                focus.symbol.to_string(),
                format!("{fraction}"),
                format!("{}", report.mean_radius_m),
                report.rings_per_layer.to_string(),
                format!("{}", report.capacity),
            ]);
        }
    }
    Ok(csv_document(FIG4_HEADER, &rows))
}

fn fig6_artifacts(scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let times = time_grid(10.0, 101)?;
    let sweeps = [
        ("fig6a.csv", SweepVariable::Rpm, "100:1000:100"),
        ("fig6b.csv", SweepVariable::RadiusRatio, "0.1:0.9:0.1"),
        ("fig6c.csv", SweepVariable::AspectRatio, "0.1:2:0.1"),
    ];
    sweeps
        .into_iter()
        .map(|(name, variable, grid)| {
            Ok((name, energy_sweep_csv(scenario, variable, &parse_grid(grid)?, &times)?))
        })
        .collect()
}

fn fig7_artifacts(scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let sweeps = [
        ("fig7a.csv", SweepVariable::Rpm, "50:1000:50"),
        ("fig7b.csv", SweepVariable::RadiusRatio, "0.1:0.95:0.05"),
        ("fig7c.csv", SweepVariable::AspectRatio, "0.1:2:0.1"),
    ];
    sweeps
        .into_iter()
        .map(|(name, variable, grid)| {
            let csv = release_sweep_csv(
                scenario,
                variable,
                &parse_grid(grid)?,
                RELEASE_PARTICLES,
                None,
            )?;
            Ok((name, csv))
        })
        .collect()
}

fn fig8_artifacts(scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let grid = parse_grid("0.1:0.95:0.05")?;
    Ok(vec![(
        "fig8.csv",
        detect_sweep_csv(scenario, Experiment::AffinityRatio, &grid, false)?,
    )])
}

fn fig9_artifacts(scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let grid = parse_grid("0.1:0.99:19")?;
    Ok(vec![
        ("fig9a.csv", detect_sweep_csv(scenario, Experiment::BitRatio, &grid, false)?),
        ("fig9b.csv", detect_sweep_csv(scenario, Experiment::BitRatio, &grid, true)?),
    ])
}

fn fig10_artifacts(scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let grid = parse_grid("8:20:19")?;
    let panels = [
        ("fig10a.csv", 0.2, false),
        ("fig10b.csv", 0.5, false),
        ("fig10c.csv", 0.8, false),
        ("fig10d.csv", 0.2, true),
        ("fig10e.csv", 0.5, true),
        ("fig10f.csv", 0.8, true),
    ];
    panels
        .into_iter()
        .map(|(name, affinity_ratio, saturated)| {
            let mut config = scenario.config.clone();
            config.affinity_ratio = affinity_ratio;
            let panel = Scenario::from_config(&config).map_err(anyhow::Error::new)?;
            Ok((name, detect_sweep_csv(&panel, Experiment::InterfererMean, &grid, saturated)?))
        })
        .collect()
}

fn figure_artifacts(figure: Figure, scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    match figure {
        Figure::Fig4 => Ok(vec![("fig4.csv", fig4_csv(scenario)?)]),
        Figure::Fig6 => fig6_artifacts(scenario),
        Figure::Fig7 => fig7_artifacts(scenario),
        Figure::Fig8 => fig8_artifacts(scenario),
        Figure::Fig9 => fig9_artifacts(scenario),
        Figure::Fig10 => fig10_artifacts(scenario),
    }
}

fn substreams_for(figures: &[Figure]) -> Vec<SubstreamRecord> {
    let mut records = Vec::new();
    if figures.iter().any(|f| matches!(f, Figure::Fig8 | Figure::Fig9 | Figure::Fig10)) {
        records.push(SubstreamRecord::new(POPULATION_STREAM, 0, 2));
    }
    if figures.contains(&Figure::Fig7) {
        records.push(SubstreamRecord::new(PARTICLE_STREAM, 0, RELEASE_PARTICLES as u64));
    }
    records
}

/// Regenerates the given result sets under `outdir` and writes
/// `manifest.json` describing the run.
pub fn run_reproduce(
    figures: &[Figure],
    file: &FileConfig,
    scenario: &Scenario,
    outdir: &Path,
    command: Vec<String>,
) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(outdir)
        .with_context(|| format!("cannot create output directory {}", outdir.display()))?;
    let mut artifacts = Vec::new();
    for &figure in figures {
        for (name, content) in figure_artifacts(figure, scenario)? {
            write_file(&outdir.join(name), &content)?;
            artifacts.push(ArtifactRecord::for_content(Path::new(name), &content));
        }
    }
    let manifest = Manifest {
        command,
        master_seed: scenario.seed,
        threads: rayon::current_num_threads(),
        duration_ms: start.elapsed().as_millis() as u64,
        scenario: scenario_records(file, scenario),
        substreams: substreams_for(figures),
        artifacts,
    };
    write_file(&outdir.join("manifest.json"), &render(&manifest)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacity_curves_cover_every_element_and_fraction() {
        let scenario = Scenario::default();
        let doc = fig4_csv(&scenario).unwrap();
        let lines: Vec<&str> = doc.lines().collect();
        assert_eq!(lines[0], FIG4_HEADER);
        assert_eq!(lines.len(), 1 + 5 * 21);
        assert!(lines[1].starts_with("zn,0,"));
        assert!(lines[21].starts_with("zn,1,"));
    }

    #[test]
    fn heavier_focus_elements_lower_the_capacity() {
        let scenario = Scenario::default();
        let doc = fig4_csv(&scenario).unwrap();
        let capacity = |element: &str, fraction: &str| -> f64 {
            doc.lines()
                .find(|line| line.starts_with(&format!("{element},{fraction},")))
                .unwrap()
                .split(',')
                .last()
                .unwrap()
                .parse()
                .unwrap()
        };
        assert!(capacity("hg", "1") < capacity("hg", "0.5"));
        assert!(capacity("hg", "1") < capacity("zn", "1"));
        assert!(capacity("zn", "1") > capacity("zn", "0"));
    }

    #[test]
    fn substream_records_match_the_requested_figures() {
        let records = substreams_for(&[Figure::Fig4, Figure::Fig6]);
        assert!(records.is_empty());
        let records = substreams_for(&[Figure::Fig7, Figure::Fig9]);
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].task, POPULATION_STREAM);
        assert_eq!(records[1].task, PARTICLE_STREAM);
        assert_eq!(records[1].count, RELEASE_PARTICLES as u64);
    }
}
