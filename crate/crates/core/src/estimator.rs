//! Method-of-moments estimation of ligand concentration ratios from
//! receptor dwell times.
//!
//! Bound dwell times are a mixture of exponentials, one component per
//! species, weighted by the concentration ratios. Counting dwells into
//! duration bins turns the mixture into a linear system: the expected bin
//! fractions are `Q alpha`, where column `j` of `Q` holds the probability
//! mass species `j` leaves in each bin. Inverting `Q` recovers the ratios
//! from observed counts without iterative fitting.
//!
//! For `n` species sorted by descending unbinding rate there are `n - 1`
//! finite bin edges, one per rate except the slowest, at `multiple / rate`.
//! That keeps `Q` square, column-stochastic, and invertible as long as the
//! rates are distinct; near-duplicate rates make the inversion explode,
//! which the condition-number guard rejects.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use num_traits::Float;

use crate::params::Scenario;
use crate::{Error, Result};

/// Default bin-edge position in units of mean dwell times: edge `l` sits at
/// `3 / k_l`, three mean dwells of the species it separates.
pub const DEFAULT_THRESHOLD_MULTIPLE: f64 = 3.0;

/// Largest acceptable one-norm condition number of `Q`.
pub const CONDITION_LIMIT: f64 = 1e8;

/// Ascending finite bin edges for dwell-time counting. Dwells at or beyond
/// the last edge fall into the overflow bin, so `n` edges define `n + 1` bins.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalScheme {
    thresholds_s: Vec<f64>,
    multiple: f64,
}

impl IntervalScheme {
    /// The finite bin edges in seconds, ascending.
    #[must_use]
    pub fn thresholds_s(&self) -> &[f64] {
        &self.thresholds_s
    }

    /// The edge position in units of mean dwell times.
    #[must_use]
    pub fn multiple(&self) -> f64 {
        self.multiple
    }

    /// Number of bins, one more than the number of finite edges.
    #[must_use]
    pub fn bins(&self) -> usize {
        self.thresholds_s.len() + 1
    }

    /// Bin index of a dwell time: bin `l` covers `[T_l, T_{l+1})` with
    /// `T_0 = 0` and the last bin unbounded.
    #[must_use]
    pub fn bin_of(&self, dwell_s: f64) -> usize {
        self.thresholds_s.iter().take_while(|&&t| dwell_s >= t).count()
    }
}

/// Builds the interval scheme for unbinding rates sorted in strictly
/// descending order: one edge per rate except the slowest, at
/// `multiple / rate`, so every species except the last gets a bin that its
/// dwells have mostly left by the next edge.
pub fn interval_thresholds(
    unbinding_rates_desc: &[f64],
    multiple: f64,
) -> Result<IntervalScheme> {
    if unbinding_rates_desc.is_empty() {
        return Err(Error::Domain("need at least one unbinding rate".to_string()));
    }
    if !multiple.is_finite() || multiple <= 0.0 {
        return Err(Error::Domain(format!(
            "threshold multiple must be finite and positive, got {multiple}"
        )));
    }
    for &rate in unbinding_rates_desc {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::DegenerateScheme(format!(
                "unbinding rates must be finite and positive, got {rate}"
            )));
        }
    }
    for pair in unbinding_rates_desc.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::DegenerateScheme(format!(
                "unbinding rates must be strictly descending, got {} before {}",
                pair[0], pair[1]
            )));
        }
    }
    let thresholds_s = unbinding_rates_desc[..unbinding_rates_desc.len() - 1]
        .iter()
        .map(|&rate| multiple / rate)
        .collect();
    Ok(IntervalScheme { thresholds_s, multiple })
}

/// Bin-occupancy matrix: entry `(l, j)` is the probability that a dwell of
/// species `j` (rate `k_j`) lands in bin `l`, namely
/// `exp(-k_j T_l) - exp(-k_j T_{l+1})`. Columns sum to one.
#[must_use]
pub fn bin_occupancy_matrix(
    scheme: &IntervalScheme,
    unbinding_rates_desc: &[f64],
) -> DMatrix<f64> {
    let bins = scheme.bins();
    let n = unbinding_rates_desc.len();
    let mut q = DMatrix::zeros(bins, n);
    for (j, &rate) in unbinding_rates_desc.iter().enumerate() {
        let mut previous = 1.0;
        for (l, &threshold) in scheme.thresholds_s().iter().enumerate() {
            let survival = Float::exp(-rate * threshold);
            q[(l, j)] = previous - survival;
            previous = survival;
        }
        q[(bins - 1, j)] = previous;
    }
    q
}

/// One-norm condition number estimate `||Q||_1 * ||Q^-1||_1`.
#[must_use]
pub fn condition_number(q: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    one_norm(q) * one_norm(w)
}

fn one_norm(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for col in 0..m.ncols() {
        let sum: f64 = (0..m.nrows()).map(|row| m[(row, col)].abs()).sum();
        worst = worst.max(sum);
    }
    worst
}

/// The assembled ratio estimator: interval scheme, occupancy matrix, its
/// inverse, and the condition number that was checked at build time.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimator {
    pub unbinding_rates_desc: Vec<f64>,
    pub scheme: IntervalScheme,
    pub q: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub condition: f64,
}

impl RatioEstimator {
    /// Builds the estimator for rates sorted strictly descending, rejecting
    /// schemes whose inversion would be numerically meaningless.
    pub fn new(unbinding_rates_desc: &[f64], multiple: f64) -> Result<Self> {
        let scheme = interval_thresholds(unbinding_rates_desc, multiple)?;
        let q = bin_occupancy_matrix(&scheme, unbinding_rates_desc);
        let w = q
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Numeric("bin occupancy matrix is singular".to_string()))?;
        let condition = condition_number(&q, &w);
        if !condition.is_finite() || condition > CONDITION_LIMIT {
            return Err(Error::IllConditioned { cond: condition, limit: CONDITION_LIMIT });
        }
        Ok(RatioEstimator {
            unbinding_rates_desc: unbinding_rates_desc.to_vec(),
            scheme,
            q,
            w,
            condition,
        })
    }

    /// Counts dwell times into the scheme's bins.
    #[must_use]
    pub fn count_events<'a>(&self, dwells_s: impl Iterator<Item = &'a f64>) -> Vec<u64> {
        let mut counts = alloc::vec![0u64; self.scheme.bins()];
        for &dwell in dwells_s {
            counts[self.scheme.bin_of(dwell)] += 1;
        }
        counts
    }

    /// Ratio estimates from bin counts: `alpha_hat = W n / M`. Unbiased but
    /// unbounded; components may fall outside [0, 1].
    pub fn estimate_ratios(&self, counts: &[u64]) -> Result<Vec<f64>> {
        if counts.len() != self.scheme.bins() {
            return Err(Error::Domain(format!(
                "expected {} bin counts, got {}",
                self.scheme.bins(),
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Domain("need at least one counted event".to_string()));
        }
        let m = total as f64;
        let estimates = (0..self.w.nrows())
            .map(|row| {
                (0..self.w.ncols())
                    .map(|col| self.w[(row, col)] * counts[col] as f64)
                    .sum::<f64>()
                    / m
            })
            .collect();
        Ok(estimates)
    }

    /// Full pipeline from dwell times to ratio estimates.
    pub fn estimate<'a>(&self, dwells_s: impl Iterator<Item = &'a f64>) -> Result<Vec<f64>> {
        let counts = self.count_events(dwells_s);
        self.estimate_ratios(&counts)
    }

    /// Analytic per-component estimator variance at true ratios `ratios`
    /// with `events` counted dwells: `(sum_i w_li^2 p_i - alpha_l^2) / M`
    /// where `p = Q alpha`.
    pub fn estimator_variance(&self, ratios: &[f64], events: usize) -> Result<Vec<f64>> {
        if ratios.len() != self.q.ncols() {
            return Err(Error::Domain(format!(
                "expected {} ratios, got {}",
                self.q.ncols(),
                ratios.len()
            )));
        }
        if events == 0 {
            return Err(Error::Domain("need at least one event".to_string()));
        }
        let p = self.bin_probabilities(ratios);
        let m = events as f64;
        Ok((0..self.w.nrows())
            .map(|row| {
                let second_moment: f64 =
                    (0..self.w.ncols()).map(|col| self.w[(row, col)].powi(2) * p[col]).sum();
                (second_moment - ratios[row] * ratios[row]) / m
            })
            .collect())
    }

    /// Expected bin probabilities `p = Q alpha` at true ratios.
    #[must_use]
    pub fn bin_probabilities(&self, ratios: &[f64]) -> Vec<f64> {
        (0..self.q.nrows())
            .map(|row| (0..self.q.ncols()).map(|col| self.q[(row, col)] * ratios[col]).sum())
            .collect()
    }
}

/// Multinomial covariance of bin counts at bin probabilities `p` over
/// `events` draws: `M (diag(p) - p p')`.
#[must_use]
pub fn counts_covariance(bin_probabilities: &[f64], events: usize) -> DMatrix<f64> {
    let n = bin_probabilities.len();
    let m = events as f64;
    DMatrix::from_fn(n, n, |row, col| {
        let direct = if row == col { bin_probabilities[row] } else { 0.0 };
        m * (direct - bin_probabilities[row] * bin_probabilities[col])
    })
}

/// Clamps ratio estimates into [0, 1] and renormalizes to sum one,
/// reporting whether any component needed clipping.
#[must_use]
pub fn clipped(ratios: &[f64]) -> (Vec<f64>, bool) {
    let mut any = false;
    let mut clamped: Vec<f64> = ratios
        .iter()
        .map(|&a| {
            let c = a.clamp(0.0, 1.0);
            if c != a {
                any = true;
            }
            c
        })
        .collect();
    let total: f64 = clamped.iter().sum();
    if total > 0.0 {
        for value in &mut clamped {
            *value /= total;
        }
    }
    (clamped, any)
}

/// A ratio estimator bound to a scenario's species, tracking the
/// permutation between scenario order (metals first, interferer last) and
/// estimator order (descending unbinding rate).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioEstimator {
    pub model: RatioEstimator,
    /// Estimator column -> scenario species index.
    pub species_order: Vec<usize>,
    /// Scenario species index -> estimator column.
    pub column_of_species: Vec<usize>,
    /// Estimator column of the detected metal.
    pub detected_column: usize,
}

impl ScenarioEstimator {
    /// Reorders scenario-ordered ratios into estimator column order.
    #[must_use]
    pub fn map_ratios(&self, scenario_ratios: &[f64]) -> Vec<f64> {
        self.species_order.iter().map(|&i| scenario_ratios[i]).collect()
    }
}

/// Builds the estimator for a scenario's species at the given edge multiple.
pub fn for_scenario(scenario: &Scenario, multiple: f64) -> Result<ScenarioEstimator> {
    let mut order: Vec<usize> = (0..scenario.species.len()).collect();
    order.sort_by(|&a, &b| {
        scenario.species[b]
            .k_off_per_s
            .partial_cmp(&scenario.species[a].k_off_per_s)
            .expect("validated rates are comparable")
    });
    let rates: Vec<f64> = order.iter().map(|&i| scenario.species[i].k_off_per_s).collect();
    let model = RatioEstimator::new(&rates, multiple)?;
    let mut column_of_species = alloc::vec![0usize; order.len()];
    for (column, &species) in order.iter().enumerate() {
        column_of_species[species] = column;
    }
    let detected_column = column_of_species[scenario.detected];
    Ok(ScenarioEstimator { model, species_order: order, column_of_species, detected_column })
}
