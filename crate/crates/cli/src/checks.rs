//! Scenario invariant checks behind `pacot validate`.
//!
//! Each check inspects the raw config so a broken value is reported under
//! its own name with the file line that set it, even when the scenario
//! would refuse to build. The final checks build the scenario and the
//! estimator, so anything the targeted checks miss still surfaces.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Result};
use pacot_core::estimator::{for_scenario, CONDITION_LIMIT, DEFAULT_THRESHOLD_MULTIPLE};
use pacot_core::params::config_entries;
use pacot_core::release::{ASPECT_RATIO_RANGE, RADIUS_RATIO_RANGE, RPM_RANGE};

use crate::config::{build_scenario, FileConfig};
use crate::manifest::scenario_records;
use crate::output::write_output;

/// One named invariant check with its verdict.
#[derive(Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn describe(file: &FileConfig, key: &str, value: f64) -> String {
    format!("{key} = {value} ({})", file.source(key))
}

fn correlation_check(file: &FileConfig) -> Check {
    let c = &file.config;
    let pairs =
        [("rho_zn_cd", c.rho_zn_cd), ("rho_zn_in", c.rho_zn_in), ("rho_cd_in", c.rho_cd_in)];
    let described: Vec<String> =
        pairs.iter().map(|&(key, value)| describe(file, key, value)).collect();
    for &(key, value) in &pairs {
        if !value.is_finite() || value.abs() >= 1.0 {
            return Check {
                name: "correlation_psd",
                passed: false,
                detail: format!(
                    "{} must lie strictly inside (-1, 1) for a positive definite \
                     correlation matrix",
                    describe(file, key, value)
                ),
            };
        }
    }
    let (a, b, d) = (c.rho_zn_cd, c.rho_zn_in, c.rho_cd_in);
    let det = 1.0 + 2.0 * a * b * d - a * a - b * b - d * d;
    if det <= 0.0 {
        return Check {
            name: "correlation_psd",
            passed: false,
            detail: format!(
                "correlation matrix from {} has determinant {det}, so it is not \
                 positive definite",
                described.join(", ")
            ),
        };
    }
    Check {
        name: "correlation_psd",
        passed: true,
        detail: format!("correlation matrix is positive definite (determinant {det})"),
    }
}

fn ordering_check(file: &FileConfig) -> Check {
    let c = &file.config;
    let detail = format!(
        "{} vs {}",
        describe(file, "bit0_kd", c.bit0_kd),
        describe(file, "bit1_kd", c.bit1_kd)
    );
    let passed = c.bit0_kd.is_finite()
        && c.bit1_kd.is_finite()
        && c.bit0_kd > 0.0
        && c.bit0_kd < c.bit1_kd;
    Check {
        name: "bit_level_ordering",
        passed,
        detail: if passed {
            format!("bit-0 level sits below bit-1: {detail}")
        } else {
            format!("bit-0 level must be positive and below bit-1: {detail}")
        },
    }
}

fn range_check(file: &FileConfig) -> Check {
    let c = &file.config;
    let ratio = c.pump_inner_radius_mm / c.pump_outer_radius_mm;
    let items = [
        ("pump_rpm", c.pump_rpm, RPM_RANGE, describe(file, "pump_rpm", c.pump_rpm)),
        (
            "radius ratio",
            ratio,
            RADIUS_RATIO_RANGE,
            format!(
                "{} / {}",
                describe(file, "pump_inner_radius_mm", c.pump_inner_radius_mm),
                describe(file, "pump_outer_radius_mm", c.pump_outer_radius_mm)
            ),
        ),
        (
            "pump_aspect_ratio",
            c.pump_aspect_ratio,
            ASPECT_RATIO_RANGE,
            describe(file, "pump_aspect_ratio", c.pump_aspect_ratio),
        ),
    ];
    let mut broken = Vec::new();
    for (name, value, (lo, hi), source) in &items {
        if !value.is_finite() || *value < *lo || *value > *hi {
            broken.push(format!("{name} {value} outside [{lo}, {hi}] from {source}"));
        }
    }
    Check {
        name: "sweep_ranges",
        passed: broken.is_empty(),
        detail: if broken.is_empty() {
            format!(
                "pump_rpm {} in [{}, {}], radius ratio {ratio} in [{}, {}], \
                 pump_aspect_ratio {} in [{}, {}]",
                c.pump_rpm,
                RPM_RANGE.0,
                RPM_RANGE.1,
                RADIUS_RATIO_RANGE.0,
                RADIUS_RATIO_RANGE.1,
                c.pump_aspect_ratio,
                ASPECT_RATIO_RANGE.0,
                ASPECT_RATIO_RANGE.1
            )
        } else {
            broken.join("; ")
        },
    }
}

fn positivity_check(file: &FileConfig) -> Check {
    let c = &file.config;
    let items = [
        ("k_on_zn", c.k_on_zn),
        ("kd_zn", c.kd_zn),
        ("k_on_cd", c.k_on_cd),
        ("kd_cd", c.kd_cd),
        ("k_on_in", c.k_on_in),
        ("volume_l", c.volume_l),
        ("count_cov", c.count_cov),
        ("interferer_mean_kd", c.interferer_mean_kd),
        ("cd_mean_kd", c.cd_mean_kd),
    ];
    let broken: Vec<String> = items
        .iter()
        .filter(|&&(_, value)| !value.is_finite() || value <= 0.0)
        .map(|&(key, value)| describe(file, key, value))
        .collect();
    let affinity_ok =
        c.affinity_ratio.is_finite() && c.affinity_ratio > 0.0 && c.affinity_ratio <= 1.0;
    let mut detail = if broken.is_empty() {
        "rates, levels, and covariance scales are positive".to_string()
    } else {
        format!("must be positive: {}", broken.join(", "))
    };
    if !affinity_ok {
        let _ = write!(
            detail,
            "; {} must lie in (0, 1]",
            describe(file, "affinity_ratio", c.affinity_ratio)
        );
    }
    Check { name: "rate_positivity", passed: broken.is_empty() && affinity_ok, detail }
}

fn water_fraction_check(file: &FileConfig) -> Check {
    let value = file.config.water_volume_fraction;
    let passed = value.is_finite() && value > 0.0 && value <= 1.0;
    Check {
        name: "water_fraction",
        passed,
        detail: format!(
            "{} {} (0, 1]",
            describe(file, "water_volume_fraction", value),
            if passed { "lies in" } else { "must lie in" }
        ),
    }
}

/// Runs every invariant check against the loaded config.
pub fn run_checks(file: &FileConfig) -> Vec<Check> {
    let mut checks = vec![
        correlation_check(file),
        ordering_check(file),
        range_check(file),
        positivity_check(file),
        water_fraction_check(file),
    ];
    match build_scenario(file, None) {
        Err(err) => checks.push(Check {
            name: "scenario_build",
            passed: false,
            detail: format!("{err:#}"),
        }),
        Ok(scenario) => {
            checks.push(Check {
                name: "scenario_build",
                passed: true,
                detail: "scenario builds and validates".to_string(),
            });
            checks.push(match for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE) {
                Ok(estimator) => Check {
                    name: "estimator_conditioning",
                    passed: true,
                    detail: format!(
                        "interval scheme condition {:.3e} under limit {CONDITION_LIMIT:.1e}",
                        estimator.model.condition
                    ),
                },
                Err(err) => Check {
                    name: "estimator_conditioning",
                    passed: false,
                    detail: format!("{err}"),
                },
            });
        }
    }
    checks
}

/// Runs all checks, writes the report, and fails when any check failed.
pub fn run_validate(file: &FileConfig, print_params: bool, out: Option<&Path>) -> Result<()> {
    let mut report = String::new();
    if print_params {
        match build_scenario(file, None) {
            Ok(scenario) => {
                for record in scenario_records(file, &scenario) {
                    let _ = writeln!(
                        report,
                        "{} = {} [{}] ({})",
                        record.key, record.value, record.unit, record.provenance
                    );
                }
            }
            Err(_) => {
                for entry in config_entries(&file.config) {
                    let _ = writeln!(
                        report,
                        "{} = {} [{}] ({})",
                        entry.key,
                        entry.value.as_f64(),
                        entry.unit,
                        file.source(&entry.key)
                    );
                }
            }
        }
        report.push('\n');
    }
    let checks = run_checks(file);
    let failed = checks.iter().filter(|check| !check.passed).count();
    for check in &checks {
        let verdict = if check.passed { "ok" } else { "FAIL" };
        let _ = writeln!(report, "{verdict} {}: {}", check.name, check.detail);
    }
    let _ = writeln!(report, "{} of {} checks passed", checks.len() - failed, checks.len());
    write_output(out, &report)?;
    if failed > 0 {
        bail!("{failed} of {} validation checks failed", checks.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::load_config;

    fn with_overrides(pairs: &[(&str, &str)]) -> FileConfig {
        let mut file = load_config(None).unwrap();
        for (index, &(key, value)) in pairs.iter().enumerate() {
            file.config.apply_key(key, value).unwrap();
            file.lines.insert(key.to_string(), index + 1);
        }
        file
    }

    fn check<'a>(checks: &'a [Check], name: &str) -> &'a Check {
        checks.iter().find(|check| check.name == name).unwrap()
    }

    #[test]
    fn default_scenario_passes_every_check() {
        let checks = run_checks(&load_config(None).unwrap());
        assert!(checks.iter().all(|check| check.passed), "{checks:?}");
        assert_eq!(checks.len(), 7);
    }

    #[test]
    fn oversized_correlation_names_the_key_and_line() {
        let file = with_overrides(&[("rho_zn_cd", "1.5")]);
        let checks = run_checks(&file);
        let psd = check(&checks, "correlation_psd");
        assert!(!psd.passed);
        assert!(psd.detail.contains("rho_zn_cd = 1.5"), "{}", psd.detail);
        assert!(psd.detail.contains("line 1"), "{}", psd.detail);
    }

    #[test]
    fn negative_determinant_is_caught_with_all_entries_in_range() {
        let file =
            with_overrides(&[("rho_zn_cd", "0.9"), ("rho_zn_in", "0.9"), ("rho_cd_in", "-0.9")]);
        let psd_checks = run_checks(&file);
        let psd = check(&psd_checks, "correlation_psd");
        assert!(!psd.passed);
        assert!(psd.detail.contains("determinant"), "{}", psd.detail);
    }

    #[test]
    fn inverted_bit_levels_fail_the_ordering_check() {
        let file = with_overrides(&[("bit0_kd", "6")]);
        let checks = run_checks(&file);
        let ordering = check(&checks, "bit_level_ordering");
        assert!(!ordering.passed);
        assert!(ordering.detail.contains("bit0_kd = 6 (line 1)"), "{}", ordering.detail);
    }

    #[test]
    fn out_of_range_rpm_fails_the_range_check() {
        let file = with_overrides(&[("pump_rpm", "2000")]);
        let checks = run_checks(&file);
        assert!(!check(&checks, "sweep_ranges").passed);
    }

    #[test]
    fn validate_reports_and_fails_on_broken_config() {
        let file = with_overrides(&[("rho_zn_cd", "1.5")]);
        assert!(run_validate(&file, false, None).is_err());
        assert!(run_validate(&load_config(None).unwrap(), true, None).is_ok());
    }
}
