//! Binary concentration-shift-keying detection built on the ratio
//! estimator.
//!
//! The transmitter signals a bit by holding the detected metal at one of
//! two concentrations. The receiver estimates the metal's concentration
//! ratio from a fixed number of binding events and thresholds it. Because
//! the interferer and background metal populations fluctuate, the estimate
//! is doubly stochastic: a Gaussian population model is conditioned on the
//! transmitted level, sampled, and each sampled population contributes the
//! estimator's analytic inner variance while the spread of the sampled true
//! ratios contributes the outer variance. The two moments per bit feed the
//! equal-likelihood threshold and the bit error probability.
//!
//! Sweeps reuse the same draw stream at every grid point, so adjacent
//! points differ only through the model and sweep curves are smooth
//! deterministic functions of the swept variable; results stay independent
//! of scheduling order. At the default event count the analytic error
//! probability has a shallow dip at small interferer means (extra
//! interferer events starve the ill-conditioned metal bins faster than the
//! ratio separation collapses) before rising monotonically; the bundled
//! interferer sweep starts beyond the dip.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::estimator::{for_scenario, ScenarioEstimator, DEFAULT_THRESHOLD_MULTIPLE};
use crate::kinetics::{simulate_trace, BindingChannel};
use crate::params::{concentration_from_counts, Scenario};
use crate::rng::{substream, Stream};
use crate::stats::Moments;
use crate::{Error, Result};

/// Joint Gaussian model of per-species molecule counts for one transmitted
/// bit: means with the detected slot at the bit's count, covariance from
/// the shared coefficient of variation and the correlation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationModel {
    pub labels: Vec<String>,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

/// Builds the population model for `bit`.
pub fn population_model(scenario: &Scenario, bit: u8) -> Result<PopulationModel> {
    let n = scenario.species.len();
    let mut mean = DVector::from_iterator(n, scenario.mean_counts.iter().copied());
    mean[scenario.detected] = scenario.bit_count(bit);
    let deviations: Vec<f64> = mean.iter().map(|&m| scenario.count_cov * m).collect();
    let covariance = DMatrix::from_fn(n, n, |i, j| {
        scenario.correlations[(i, j)] * deviations[i] * deviations[j]
    });
    if covariance.clone().cholesky().is_none() {
        return Err(Error::Numeric("population covariance is not positive definite".to_string()));
    }
    Ok(PopulationModel {
        labels: scenario.species.iter().map(|s| s.name.clone()).collect(),
        mean,
        covariance,
    })
}

/// The population model with one species pinned to an observed value:
/// remaining means shift along the regression of the pinned species and the
/// covariance shrinks by its Schur complement.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalPopulation {
    /// Indices of the species that remain random, in original order.
    pub kept: Vec<usize>,
    pub labels: Vec<String>,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    cholesky_lower: DMatrix<f64>,
}

/// Conditions `population` on species `index` taking `value`.
pub fn condition(
    population: &PopulationModel,
    index: usize,
    value: f64,
) -> Result<ConditionalPopulation> {
    let n = population.mean.len();
    if index >= n {
        return Err(Error::Domain(format!(
            "condition index {index} out of range for {n} species"
        )));
    }
    if n < 2 {
        return Err(Error::Domain("need at least two species to condition".to_string()));
    }
    let pinned_variance = population.covariance[(index, index)];
    if pinned_variance <= 0.0 {
        return Err(Error::Numeric("pinned species has non-positive variance".to_string()));
    }
    let kept: Vec<usize> = (0..n).filter(|&i| i != index).collect();
    let shift = (value - population.mean[index]) / pinned_variance;
    let mean = DVector::from_iterator(
        kept.len(),
        kept.iter()
            .map(|&i| population.mean[i] + population.covariance[(i, index)] * shift),
    );
    let covariance = DMatrix::from_fn(kept.len(), kept.len(), |a, b| {
        let (i, j) = (kept[a], kept[b]);
        population.covariance[(i, j)]
            - population.covariance[(i, index)] * population.covariance[(index, j)]
                / pinned_variance
    });
    let cholesky = covariance
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("conditional covariance is not positive definite".to_string()))?;
    Ok(ConditionalPopulation {
        labels: kept.iter().map(|&i| population.labels[i].clone()).collect(),
        kept,
        mean,
        covariance,
        cholesky_lower: cholesky.l(),
    })
}

/// One sampled population: counts for the kept species, floored at zero,
/// with a flag recording whether flooring happened.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCounts {
    pub counts: Vec<f64>,
    pub floored: bool,
}

/// Draws one population from the conditional Gaussian via its Cholesky
/// factor. Negative counts are floored at zero and flagged.
pub fn sample_counts(conditional: &ConditionalPopulation, rng: &mut Stream) -> SampledCounts {
    let n = conditional.mean.len();
    let z = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let raw = &conditional.mean + &conditional.cholesky_lower * z;
    let mut floored = false;
    let counts = raw
        .iter()
        .map(|&c| {
            if c < 0.0 {
                floored = true;
                0.0
            } else {
                c
            }
        })
        .collect();
    SampledCounts { counts, floored }
}

/// Moments of the estimated detected-metal ratio under one transmitted
/// bit, split into the estimator's averaged inner variance and the
/// population-driven outer variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMoments {
    pub mean: f64,
    pub variance: f64,
    pub mean_inner_variance: f64,
    pub outer_variance: f64,
    /// Fraction of draws that needed a negative count floored.
    pub floor_rate: f64,
    pub samples: usize,
    /// Shape diagnostics of the sampled true-ratio distribution.
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Estimates the ratio moments for `bit` by sampling the conditional
/// population `scenario.population_samples` times.
pub fn ratio_moments(
    scenario: &Scenario,
    estimator: &ScenarioEstimator,
    bit: u8,
    rng: &mut Stream,
) -> Result<RatioMoments> {
    let population = population_model(scenario, bit)?;
    let pinned = scenario.bit_count(bit);
    let conditional = condition(&population, scenario.detected, pinned)?;
    let samples = scenario.population_samples;

    let mut outer = Moments::new();
    let mut inner_variance_sum = 0.0;
    let mut floored = 0usize;
    let mut scenario_ratios = alloc::vec![0.0f64; scenario.species.len()];
    for _ in 0..samples {
        let draw = sample_counts(&conditional, rng);
        if draw.floored {
            floored += 1;
        }
        let mut total = pinned;
        for &c in &draw.counts {
            total += c;
        }
        scenario_ratios[scenario.detected] = pinned / total;
        for (&species, &count) in conditional.kept.iter().zip(&draw.counts) {
            scenario_ratios[species] = count / total;
        }
        let ordered = estimator.map_ratios(&scenario_ratios);
        let inner =
            estimator.model.estimator_variance(&ordered, scenario.num_events)?;
        inner_variance_sum += inner[estimator.detected_column];
        outer.push(scenario_ratios[scenario.detected]);
    }
    let mean_inner_variance = inner_variance_sum / samples as f64;
    let outer_variance = outer.variance();
    Ok(RatioMoments {
        mean: outer.mean(),
        variance: mean_inner_variance + outer_variance,
        mean_inner_variance,
        outer_variance,
        floor_rate: floored as f64 / samples as f64,
        samples,
        skewness: outer.skewness(),
        excess_kurtosis: outer.excess_kurtosis(),
    })
}

/// Decision threshold minimizing the bit error probability between two
/// Gaussian hypotheses: the equal-likelihood point, or the midpoint when
/// the variances coincide.
pub fn optimal_threshold(mean0: f64, var0: f64, mean1: f64, var1: f64) -> Result<f64> {
    validate_moments(mean0, var0, mean1, var1)?;
    if (var1 - var0).abs() <= 1e-12 * var0.max(var1) {
        return Ok(0.5 * (mean0 + mean1));
    }
    // Equal likelihood under both hypotheses reduces to
    // A x^2 + B x + C = 0 after multiplying through by 2 v0 v1.
    let a = var0 - var1;
    let b = 2.0 * (mean0 * var1 - mean1 * var0);
    let c = var0 * mean1 * mean1 - var1 * mean0 * mean0 - var0 * var1 * Float::ln(var0 / var1);
    let discriminant = b * b - 4.0 * a * c;
    if discriminant < 0.0 {
        return Err(Error::DetectionSetup(
            "hypothesis densities never intersect (negative discriminant)".to_string(),
        ));
    }
    let sqrt_disc = Float::sqrt(discriminant);
    let q = -0.5 * (b + if b >= 0.0 { sqrt_disc } else { -sqrt_disc });
    let roots = [q / a, if q != 0.0 { c / q } else { q / a }];
    let mut best: Option<(f64, f64)> = None;
    for root in roots {
        if !root.is_finite() {
            continue;
        }
        let error = bit_error_probability(mean0, var0, mean1, var1, root)?;
        if best.map_or(true, |(_, e)| error < e) {
            best = Some((root, error));
        }
    }
    best.map(|(root, _)| root).ok_or_else(|| {
        Error::DetectionSetup("no finite equal-likelihood threshold".to_string())
    })
}

/// Bit error probability of thresholding at `threshold` between Gaussian
/// hypotheses, with equiprobable bits:
/// (erfc((t - m0) / sqrt(2 v0)) + erfc((m1 - t) / sqrt(2 v1))) / 4.
pub fn bit_error_probability(
    mean0: f64,
    var0: f64,
    mean1: f64,
    var1: f64,
    threshold: f64,
) -> Result<f64> {
    validate_moments(mean0, var0, mean1, var1)?;
    if !threshold.is_finite() {
        return Err(Error::DetectionSetup(format!("threshold must be finite, got {threshold}")));
    }
    let miss0 = libm::erfc((threshold - mean0) / Float::sqrt(2.0 * var0));
    let miss1 = libm::erfc((mean1 - threshold) / Float::sqrt(2.0 * var1));
    Ok(0.25 * (miss0 + miss1))
}

fn validate_moments(mean0: f64, var0: f64, mean1: f64, var1: f64) -> Result<()> {
    for (label, value) in [("mean0", mean0), ("mean1", mean1)] {
        if !value.is_finite() {
            return Err(Error::DetectionSetup(format!("{label} must be finite, got {value}")));
        }
    }
    for (label, value) in [("var0", var0), ("var1", var1)] {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::DetectionSetup(format!(
                "{label} must be finite and positive, got {value}"
            )));
        }
    }
    if mean1 <= mean0 {
        return Err(Error::DetectionSetup(format!(
            "bit-1 mean ({mean1}) must exceed bit-0 mean ({mean0})"
        )));
    }
    Ok(())
}

/// Per-bit ratio moments with the resulting threshold and analytic error
/// probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionStats {
    pub bit0: RatioMoments,
    pub bit1: RatioMoments,
    pub threshold: f64,
    pub analytic_bep: f64,
}

/// Stream label detection sweeps draw their populations from; the label is
/// shared across grid points deliberately (see the module docs).
pub const POPULATION_STREAM: &str = "detect-population";

/// Computes both bits' ratio moments, the optimal threshold, and the
/// analytic error probability for one scenario.
pub fn detection_point(scenario: &Scenario, estimator: &ScenarioEstimator) -> Result<DetectionStats> {
    let mut stream0 = substream(scenario.seed, POPULATION_STREAM, 0);
    let mut stream1 = substream(scenario.seed, POPULATION_STREAM, 1);
    let bit0 = ratio_moments(scenario, estimator, 0, &mut stream0)?;
    let bit1 = ratio_moments(scenario, estimator, 1, &mut stream1)?;
    let threshold = optimal_threshold(bit0.mean, bit0.variance, bit1.mean, bit1.variance)?;
    let analytic_bep =
        bit_error_probability(bit0.mean, bit0.variance, bit1.mean, bit1.variance, threshold)?;
    Ok(DetectionStats { bit0, bit1, threshold, analytic_bep })
}

/// The variable a detection sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Interferer affinity ratio (unbinding-rate ratio), in (0, 1].
    AffinityRatio,
    /// Bit-0 level as a fraction of the bit-1 level, in (0, 1).
    BitRatio,
    /// Interferer population mean in interferer dissociation constants.
    InterfererMean,
    /// Binding events per decision.
    EventCount,
}

/// One detection sweep row: the swept value, the detection stats, and the
/// receptor's bound probability at each bit's mean concentrations.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub stats: DetectionStats,
    pub bound_probability_bit0: f64,
    pub bound_probability_bit1: f64,
    pub estimator_condition: f64,
}

/// Applies `experiment = x` to a base scenario (optionally pushed into
/// receptor saturation first) and evaluates the detection point.
pub fn sweep_point(
    base: &Scenario,
    experiment: Experiment,
    x: f64,
    saturated: bool,
) -> Result<SweepRow> {
    let stage = if saturated { base.saturated()? } else { base.clone() };
    let scenario = match experiment {
        Experiment::AffinityRatio => stage.with_affinity_ratio(x)?,
        Experiment::BitRatio => stage.with_bit_ratio(x)?,
        Experiment::InterfererMean => stage.with_interferer_mean(x)?,
        Experiment::EventCount => {
            let rounded = x.round();
            if !(x.is_finite() && (x - rounded).abs() < 1e-9 && rounded >= 1.0) {
                return Err(Error::Config(format!(
                    "event count must be a positive integer, got {x}"
                )));
            }
            stage.with_num_events(rounded as usize)?
        }
    };
    let estimator = for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE)?;
    let stats = detection_point(&scenario, &estimator)?;
    let mut bound = [0.0f64; 2];
    for bit in 0..2u8 {
        let concentrations: Vec<f64> = scenario
            .species
            .iter()
            .enumerate()
            .map(|(i, _)| {
                if i == scenario.detected {
                    Ok(scenario.bit_concentration_molar(bit))
                } else {
                    concentration_from_counts(scenario.mean_counts[i], scenario.volume_l)
                }
            })
            .collect::<Result<_>>()?;
        let kds: Vec<f64> = scenario.species.iter().map(|s| s.k_d_molar()).collect();
        bound[bit as usize] = crate::kinetics::bound_probability(&concentrations, &kds)?;
    }
    Ok(SweepRow {
        x,
        stats,
        bound_probability_bit0: bound[0],
        bound_probability_bit1: bound[1],
        estimator_condition: estimator.model.condition,
    })
}

/// Evaluates a detection sweep over a grid, in grid order.
pub fn sweep(
    base: &Scenario,
    experiment: Experiment,
    grid: &[f64],
    saturated: bool,
) -> Result<Vec<SweepRow>> {
    grid.iter().map(|&x| sweep_point(base, experiment, x, saturated)).collect()
}

/// Result of a trace-level Monte Carlo bit-error measurement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloBep {
    pub bits: usize,
    pub errors: usize,
    pub rate: f64,
    pub floor_rate: f64,
}

/// Stream label per-bit Monte Carlo decisions draw from, indexed by bit
/// position so bits are independent.
pub const BIT_STREAM: &str = "detect-bit";

/// Measures the bit error rate end to end: per transmitted bit, sample a
/// population, run the exact binding simulation for the scenario's event
/// count, estimate the ratio, and threshold it. Bits alternate 0, 1.
pub fn monte_carlo_bep(
    scenario: &Scenario,
    estimator: &ScenarioEstimator,
    threshold: f64,
    bits: usize,
    master_seed: u64,
) -> Result<MonteCarloBep> {
    if bits == 0 || bits % 2 != 0 {
        return Err(Error::Domain(format!(
            "bit count must be positive and even so bits balance, got {bits}"
        )));
    }
    if !threshold.is_finite() {
        return Err(Error::DetectionSetup(format!("threshold must be finite, got {threshold}")));
    }
    let mut conditionals = Vec::with_capacity(2);
    let mut pinned = [0.0f64; 2];
    for bit in 0..2u8 {
        let population = population_model(scenario, bit)?;
        pinned[bit as usize] = scenario.bit_count(bit);
        conditionals.push(condition(&population, scenario.detected, pinned[bit as usize])?);
    }
    let k_offs: Vec<f64> = scenario.species.iter().map(|s| s.k_off_per_s).collect();
    let labels: Vec<String> = scenario.species.iter().map(|s| s.name.clone()).collect();

    let mut errors = 0usize;
    let mut floored = 0usize;
    for index in 0..bits {
        let bit = (index % 2) as u8;
        let mut rng = substream(master_seed, BIT_STREAM, index as u64);
        let conditional = &conditionals[bit as usize];
        let draw = sample_counts(conditional, &mut rng);
        if draw.floored {
            floored += 1;
        }
        let mut total = pinned[bit as usize];
        for &c in &draw.counts {
            total += c;
        }
        // Identical-binding-rate convention: each event picks its species
        // with probability equal to its concentration ratio, so the ratios
        // scaled by any common factor serve as binding rates.
        let mut channels = Vec::with_capacity(scenario.species.len());
        channels.push(BindingChannel {
            label: labels[scenario.detected].clone(),
            binding_rate_per_s: pinned[bit as usize] / total,
            unbinding_rate_per_s: k_offs[scenario.detected],
        });
        for (&species, &count) in conditional.kept.iter().zip(&draw.counts) {
            if count > 0.0 {
                channels.push(BindingChannel {
                    label: labels[species].clone(),
                    binding_rate_per_s: count / total,
                    unbinding_rate_per_s: k_offs[species],
                });
            }
        }
        let trace = simulate_trace(&channels, scenario.num_events, &mut rng)?;
        let dwells: Vec<f64> = trace.bound_dwells().map(|(_, d)| d).collect();
        let estimates = estimator.model.estimate(dwells.iter())?;
        let decided = estimates[estimator.detected_column] > threshold;
        if decided != (bit == 1) {
            errors += 1;
        }
    }
    Ok(MonteCarloBep {
        bits,
        errors,
        rate: errors as f64 / bits as f64,
        floor_rate: floored as f64 / bits as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn population_model_places_bit_count_and_scales_covariance() {
        let scenario = Scenario::default();
        for bit in 0..2u8 {
            let model = population_model(&scenario, bit).unwrap();
            assert_relative_eq!(model.mean[0], scenario.bit_count(bit), max_relative = 1e-12);
            assert_relative_eq!(model.mean[1], scenario.mean_counts[1], max_relative = 1e-12);
            for i in 0..3 {
                let sigma = 0.1 * model.mean[i];
                assert_relative_eq!(model.covariance[(i, i)], sigma * sigma, max_relative = 1e-12);
                for j in 0..3 {
                    assert_relative_eq!(
                        model.covariance[(i, j)],
                        model.covariance[(j, i)],
                        max_relative = 1e-12
                    );
                }
            }
            let rho = model.covariance[(0, 1)]
                / (model.covariance[(0, 0)].sqrt() * model.covariance[(1, 1)].sqrt());
            assert_relative_eq!(rho, 0.7, max_relative = 1e-12);
        }
    }

    #[test]
    fn conditioning_at_the_mean_keeps_means_and_shrinks_variance() {
        let scenario = Scenario::default();
        let model = population_model(&scenario, 0).unwrap();
        let conditional = condition(&model, 0, model.mean[0]).unwrap();
        assert_eq!(conditional.kept, alloc::vec![1, 2]);
        assert_relative_eq!(conditional.mean[0], model.mean[1], max_relative = 1e-12);
        assert_relative_eq!(conditional.mean[1], model.mean[2], max_relative = 1e-12);
        for a in 0..2 {
            assert!(conditional.covariance[(a, a)] < model.covariance[(a + 1, a + 1)]);
        }
        // Schur complement, checked entry-wise against the direct formula.
        for a in 0..2 {
            for b in 0..2 {
                let (i, j) = (a + 1, b + 1);
                let expected = model.covariance[(i, j)]
                    - model.covariance[(i, 0)] * model.covariance[(0, j)]
                        / model.covariance[(0, 0)];
                assert_relative_eq!(conditional.covariance[(a, b)], expected, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn conditioning_shifts_along_the_regression_line() {
        let model = PopulationModel {
            labels: alloc::vec!["x".to_string(), "y".to_string()],
            mean: DVector::from_vec(alloc::vec![10.0, 20.0]),
            covariance: DMatrix::from_row_slice(2, 2, &[4.0, 3.0, 3.0, 9.0]),
        };
        let conditional = condition(&model, 0, 12.0).unwrap();
        // mu_y + cov_xy / var_x * (x* - mu_x) = 20 + 3/4 * 2.
        assert_relative_eq!(conditional.mean[0], 21.5, max_relative = 1e-12);
        // var_y - cov_xy^2 / var_x = 9 - 9/4.
        assert_relative_eq!(conditional.covariance[(0, 0)], 6.75, max_relative = 1e-12);
    }

    #[test]
    fn sampled_counts_match_the_conditional_distribution() {
        let scenario = Scenario::default();
        let model = population_model(&scenario, 0).unwrap();
        let conditional = condition(&model, 0, model.mean[0]).unwrap();
        let mut rng = substream(42, "detect-test", 0);
        let n = 20_000;
        let mut sums = [0.0f64; 2];
        let mut cross = [[0.0f64; 2]; 2];
        for _ in 0..n {
            let draw = sample_counts(&conditional, &mut rng);
            for a in 0..2 {
                sums[a] += draw.counts[a];
            }
            for a in 0..2 {
                for b in 0..2 {
                    cross[a][b] += (draw.counts[a] - conditional.mean[a])
                        * (draw.counts[b] - conditional.mean[b]);
                }
            }
        }
        for a in 0..2 {
            let mean = sums[a] / n as f64;
            let tolerance = 4.0 * (conditional.covariance[(a, a)] / n as f64).sqrt();
            assert!((mean - conditional.mean[a]).abs() < tolerance);
            for b in 0..2 {
                let sample_cov = cross[a][b] / n as f64;
                let scale = (conditional.covariance[(a, a)] * conditional.covariance[(b, b)])
                    .sqrt();
                let off = (sample_cov - conditional.covariance[(a, b)]).abs() / scale;
                assert!(off < 0.05, "covariance ({a},{b}) off by {off} of scale");
            }
        }
    }

    #[test]
    fn heavy_population_noise_floors_counts_without_negatives() {
        let mut config = crate::params::ScenarioConfig::default();
        config.count_cov = 0.8;
        config.population_samples = 2_000;
        let scenario = Scenario::from_config(&config).unwrap();
        let model = population_model(&scenario, 0).unwrap();
        let conditional = condition(&model, 0, model.mean[0]).unwrap();
        let mut rng = substream(42, "detect-floor", 0);
        let mut floored = 0;
        for _ in 0..2_000 {
            let draw = sample_counts(&conditional, &mut rng);
            assert!(draw.counts.iter().all(|&c| c >= 0.0));
            if draw.floored {
                floored += 1;
            }
        }
        assert!(floored > 0, "expected some draws to need flooring at cov 0.8");
    }

    #[test]
    fn ratio_moments_collapse_to_inner_variance_when_population_is_rigid() {
        let mut config = crate::params::ScenarioConfig::default();
        config.count_cov = 1e-9;
        config.population_samples = 500;
        let scenario = Scenario::from_config(&config).unwrap();
        let estimator = for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE).unwrap();
        let mut rng = substream(42, "detect-rigid", 0);
        let moments = ratio_moments(&scenario, &estimator, 0, &mut rng).unwrap();
        assert_relative_eq!(moments.mean, 0.20725388601036268, max_relative = 1e-6);
        assert!(moments.outer_variance < 1e-12);
        assert_relative_eq!(
            moments.variance,
            0.4360904080098915 / 1000.0 * 1000.0,
            max_relative = 1e-4
        );
        assert_eq!(moments.samples, 500);
    }

    #[test]
    fn ratio_moments_split_total_variance_exactly() {
        let scenario = Scenario::default();
        let estimator = for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE).unwrap();
        let mut rng = substream(42, "detect-split", 0);
        let moments = ratio_moments(&scenario, &estimator, 1, &mut rng).unwrap();
        assert_relative_eq!(
            moments.variance,
            moments.mean_inner_variance + moments.outer_variance,
            max_relative = 1e-12
        );
        assert!(moments.outer_variance > 0.0);
        assert!(moments.mean_inner_variance > moments.outer_variance);
    }

    #[test]
    fn optimal_threshold_matches_hand_value_for_unequal_variances() {
        let threshold = optimal_threshold(0.0, 1.0, 1.0, 4.0).unwrap();
        assert_relative_eq!(threshold, 1.180878318298509, max_relative = 1e-9);
        let bep = bit_error_probability(0.0, 1.0, 1.0, 4.0, threshold).unwrap();
        assert_relative_eq!(bep, 0.3274282065023232, max_relative = 1e-9);
    }

    #[test]
    fn optimal_threshold_beats_a_fine_grid_scan() {
        let cases = [(0.0, 1.0, 1.0, 4.0), (0.2, 0.3, 0.9, 0.05), (-1.0, 2.0, 3.0, 2.5)];
        for (m0, v0, m1, v1) in cases {
            let threshold = optimal_threshold(m0, v0, m1, v1).unwrap();
            let best = bit_error_probability(m0, v0, m1, v1, threshold).unwrap();
            let lo = m0 - 5.0 * v0.sqrt();
            let hi = m1 + 5.0 * v1.sqrt();
            for i in 0..=2_000 {
                let t = lo + (hi - lo) * i as f64 / 2_000.0;
                let e = bit_error_probability(m0, v0, m1, v1, t).unwrap();
                assert!(
                    best <= e + 1e-12,
                    "grid point {t} beats threshold {threshold} for case ({m0},{v0},{m1},{v1})"
                );
            }
        }
    }

    #[test]
    fn equal_variances_take_the_midpoint() {
        let threshold = optimal_threshold(0.0, 1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(threshold, 1.0, max_relative = 1e-12);
        let bep = bit_error_probability(0.0, 1.0, 2.0, 1.0, threshold).unwrap();
        // One-sigma separation on each side: Q(1).
        assert_relative_eq!(bep, 0.15865525393145707, max_relative = 1e-9);
    }

    #[test]
    fn threshold_is_affine_equivariant() {
        let base = optimal_threshold(0.0, 1.0, 1.0, 4.0).unwrap();
        let shifted = optimal_threshold(5.0, 1.0, 6.0, 4.0).unwrap();
        assert_relative_eq!(shifted, base + 5.0, max_relative = 1e-9);
        let scaled = optimal_threshold(0.0, 9.0, 3.0, 36.0).unwrap();
        assert_relative_eq!(scaled, 3.0 * base, max_relative = 1e-9);
    }

    #[test]
    fn threshold_rejects_unusable_moments() {
        assert!(optimal_threshold(1.0, 1.0, 0.0, 1.0).is_err());
        assert!(optimal_threshold(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(optimal_threshold(0.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(bit_error_probability(0.0, 1.0, 1.0, 1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn far_separated_hypotheses_have_negligible_error() {
        let bep = bit_error_probability(0.0, 1.0, 100.0, 1.0, 50.0).unwrap();
        assert!(bep < 1e-100);
    }

    #[test]
    fn detection_point_reproduces_known_default_regime() {
        let scenario = Scenario::default();
        let estimator = for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE).unwrap();
        let stats = detection_point(&scenario, &estimator).unwrap();
        assert!((stats.bit0.mean - 0.20725388601036268).abs() < 0.01);
        assert!((stats.bit1.mean - 0.24630541871921185).abs() < 0.01);
        assert!(stats.bit1.mean > stats.bit0.mean);
        // The unequal variances push the equal-likelihood point off centre;
        // it must still do at least as well as the naive midpoint.
        let midpoint = 0.5 * (stats.bit0.mean + stats.bit1.mean);
        let midpoint_bep = bit_error_probability(
            stats.bit0.mean,
            stats.bit0.variance,
            stats.bit1.mean,
            stats.bit1.variance,
            midpoint,
        )
        .unwrap();
        assert!(stats.analytic_bep <= midpoint_bep + 1e-12);
        // Inner estimator noise dominates at the default event count, so the
        // analytic error probability sits close to one half.
        assert!(stats.analytic_bep > 0.40 && stats.analytic_bep < 0.50);
    }

    #[test]
    fn detection_point_is_deterministic_for_a_seed() {
        let scenario = Scenario::default();
        let estimator = for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE).unwrap();
        let a = detection_point(&scenario, &estimator).unwrap();
        let b = detection_point(&scenario, &estimator).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweep_points_apply_their_experiment() {
        let base = Scenario::default();
        let row = sweep_point(&base, Experiment::AffinityRatio, 0.5, false).unwrap();
        assert_eq!(row.x, 0.5);
        assert!(row.stats.analytic_bep > 0.0 && row.stats.analytic_bep < 0.5);
        assert!(row.bound_probability_bit1 > row.bound_probability_bit0);

        // Saturated bit 1 pins zinc at 40 K_D; with cadmium at 3 and the
        // interferer at 2 the closed-form bound probability is 45/46.
        let saturated = sweep_point(&base, Experiment::BitRatio, 0.5, true).unwrap();
        assert_relative_eq!(
            saturated.bound_probability_bit1,
            45.0 / 46.0,
            max_relative = 1e-9
        );
        assert!(saturated.bound_probability_bit0 > 0.9);

        let events = sweep_point(&base, Experiment::EventCount, 4000.0, false).unwrap();
        assert!(events.stats.analytic_bep < row.stats.analytic_bep + 0.1);
        assert!(sweep_point(&base, Experiment::EventCount, 2.5, false).is_err());
    }

    #[test]
    fn event_count_sweep_reduces_error_probability() {
        let base = Scenario::default();
        let small = sweep_point(&base, Experiment::EventCount, 500.0, false).unwrap();
        let large = sweep_point(&base, Experiment::EventCount, 8000.0, false).unwrap();
        assert!(
            large.stats.analytic_bep < small.stats.analytic_bep,
            "more events should sharpen detection: {} vs {}",
            large.stats.analytic_bep,
            small.stats.analytic_bep
        );
    }

    #[test]
    fn monte_carlo_bep_is_deterministic_and_bounded() {
        let scenario = Scenario::default().with_num_events(200).unwrap();
        let estimator = for_scenario(&scenario, DEFAULT_THRESHOLD_MULTIPLE).unwrap();
        let stats = detection_point(&scenario, &estimator).unwrap();
        let a = monte_carlo_bep(&scenario, &estimator, stats.threshold, 200, 42).unwrap();
        let b = monte_carlo_bep(&scenario, &estimator, stats.threshold, 200, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.bits, 200);
        assert!(a.rate >= 0.0 && a.rate <= 1.0);
        assert!(monte_carlo_bep(&scenario, &estimator, stats.threshold, 201, 42).is_err());
    }
}
