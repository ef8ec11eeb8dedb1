//! Continuous-time Markov model of one receptor shared by competing
//! ligand species.
//!
//! The receptor is either unbound or bound to exactly one species, giving a
//! star-shaped state space: unbound in the centre, one bound state per
//! species. Species `i` binds at rate `k_on_i * c_i` and unbinds at rate
//! `k_off_i`. The module builds the generator matrix, solves its steady
//! state (also available in closed form), samples exact dwell-time traces,
//! and evaluates the dwell-time likelihood the estimator chain rests on.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::params::{concentration_from_counts, Scenario};
use crate::rng::Stream;
use crate::{Error, Result};

/// One binding channel of the receptor: a species with its effective
/// binding rate `k_on * c` (1/s) and unbinding rate `k_off` (1/s).
#[derive(Debug, Clone, PartialEq)]
pub struct BindingChannel {
    pub label: String,
    pub binding_rate_per_s: f64,
    pub unbinding_rate_per_s: f64,
}

impl BindingChannel {
    fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("binding rate", self.binding_rate_per_s),
            ("unbinding rate", self.unbinding_rate_per_s),
        ] {
            if !rate.is_finite() || rate <= 0.0 {
                return Err(Error::Domain(format!(
                    "channel {}: {name} must be finite and positive, got {rate}",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

/// Binding channels for a scenario with the detected metal at its `bit`
/// level and every other species at its population mean. The interferer
/// channel comes first, mirroring the generator's state order.
pub fn channels_from_scenario(scenario: &Scenario, bit: u8) -> Result<Vec<BindingChannel>> {
    let mut channels = Vec::with_capacity(scenario.species.len());
    let interferer = scenario.interferer();
    let interferer_concentration = concentration_from_counts(
        scenario.mean_counts[scenario.species.len() - 1],
        scenario.volume_l,
    )?;
    channels.push(BindingChannel {
        label: interferer.name.clone(),
        binding_rate_per_s: interferer.k_on_per_molar_s * interferer_concentration,
        unbinding_rate_per_s: interferer.k_off_per_s,
    });
    for (index, metal) in scenario.metals().iter().enumerate() {
        let concentration = if index == scenario.detected {
            scenario.bit_concentration_molar(bit)
        } else {
            concentration_from_counts(scenario.mean_counts[index], scenario.volume_l)?
        };
        channels.push(BindingChannel {
            label: metal.name.clone(),
            binding_rate_per_s: metal.k_on_per_molar_s * concentration,
            unbinding_rate_per_s: metal.k_off_per_s,
        });
    }
    Ok(channels)
}

/// Generator matrix of the receptor chain with its state labels. State 0 is
/// unbound; state `i + 1` is bound to channel `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    pub states: Vec<String>,
    pub rates: DMatrix<f64>,
}

/// Builds the star-topology generator for the given channels.
pub fn build_generator(channels: &[BindingChannel]) -> Result<GeneratorMatrix> {
    if channels.is_empty() {
        return Err(Error::Domain("need at least one binding channel".to_string()));
    }
    for channel in channels {
        channel.validate()?;
    }
    let n = channels.len() + 1;
    let mut rates = DMatrix::zeros(n, n);
    let total_binding: f64 = channels.iter().map(|c| c.binding_rate_per_s).sum();
    rates[(0, 0)] = -total_binding;
    for (i, channel) in channels.iter().enumerate() {
        rates[(0, i + 1)] = channel.binding_rate_per_s;
        rates[(i + 1, 0)] = channel.unbinding_rate_per_s;
        rates[(i + 1, i + 1)] = -channel.unbinding_rate_per_s;
    }
    let mut states = Vec::with_capacity(n);
    states.push("U".to_string());
    for channel in channels {
        states.push(format!("B_{}", channel.label));
    }
    Ok(GeneratorMatrix { states, rates })
}

/// Stationary distribution of a generator: solves theta' R = 0 with the
/// normalization sum(theta) = 1 by replacing one balance equation.
pub fn steady_state(generator: &GeneratorMatrix) -> Result<Vec<f64>> {
    let n = generator.rates.nrows();
    let mut system = generator.rates.transpose();
    for col in 0..n {
        system[(n - 1, col)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let solution = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular steady-state system".to_string()))?;
    let mut probabilities = Vec::with_capacity(n);
    for &p in solution.iter() {
        if !(p).is_finite() || p < -1e-9 {
            return Err(Error::Numeric(format!(
                "steady-state solve produced invalid probability {p}"
            )));
        }
        probabilities.push(p.max(0.0));
    }
    Ok(probabilities)
}

/// Closed-form probability that the receptor is unbound:
/// 1 / (1 + sum_i c_i / K_D_i).
pub fn unbound_probability(concentrations_molar: &[f64], k_ds_molar: &[f64]) -> Result<f64> {
    if concentrations_molar.len() != k_ds_molar.len() || concentrations_molar.is_empty() {
        return Err(Error::Domain(format!(
            "need matching non-empty concentration and K_D lists, got {} and {}",
            concentrations_molar.len(),
            k_ds_molar.len()
        )));
    }
    let mut load = 0.0;
    for (&c, &kd) in concentrations_molar.iter().zip(k_ds_molar) {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::Domain(format!(
                "concentrations must be finite and non-negative, got {c}"
            )));
        }
        if !kd.is_finite() || kd <= 0.0 {
            return Err(Error::Domain(format!(
                "dissociation constants must be finite and positive, got {kd}"
            )));
        }
        load += c / kd;
    }
    Ok(1.0 / (1.0 + load))
}

/// Closed-form probability that the receptor is bound to any species.
pub fn bound_probability(concentrations_molar: &[f64], k_ds_molar: &[f64]) -> Result<f64> {
    Ok(1.0 - unbound_probability(concentrations_molar, k_ds_molar)?)
}

/// One dwell interval of a simulated trace. `channel` is `None` while the
/// receptor is unbound, otherwise the index of the bound channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceStep {
    pub channel: Option<usize>,
    pub dwell_s: f64,
}

/// An exact stochastic trajectory of the receptor over full bind/unbind
/// cycles, starting unbound.
#[derive(Debug, Clone, PartialEq)]
pub struct BindingTrace {
    pub steps: Vec<TraceStep>,
    pub num_channels: usize,
}

impl BindingTrace {
    /// Bound dwell times with their channel index, in order.
    pub fn bound_dwells(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.steps.iter().filter_map(|step| step.channel.map(|c| (c, step.dwell_s)))
    }

    /// Total time spent unbound.
    #[must_use]
    pub fn total_unbound_time(&self) -> f64 {
        self.steps
            .iter()
            .filter(|step| step.channel.is_none())
            .map(|step| step.dwell_s)
            .sum()
    }

    /// Number of completed bind/unbind cycles.
    #[must_use]
    pub fn cycles(&self) -> usize {
        self.steps.iter().filter(|step| step.channel.is_some()).count()
    }
}

/// Samples `cycles` full unbound/bound cycles from the star chain: the
/// unbound dwell is exponential in the total binding rate, the binding
/// species is drawn in proportion to its binding rate, and the bound dwell
/// is exponential in that species' unbinding rate.
pub fn simulate_trace(
    channels: &[BindingChannel],
    cycles: usize,
    rng: &mut Stream,
) -> Result<BindingTrace> {
    if channels.is_empty() {
        return Err(Error::Domain("need at least one binding channel".to_string()));
    }
    if cycles == 0 {
        return Err(Error::Domain("need at least one cycle".to_string()));
    }
    for channel in channels {
        channel.validate()?;
    }
    let total_binding: f64 = channels.iter().map(|c| c.binding_rate_per_s).sum();
    let unbound_dwell = Exp::new(total_binding)
        .map_err(|_| Error::Numeric("invalid total binding rate".to_string()))?;
    let bound_dwells: Vec<Exp<f64>> = channels
        .iter()
        .map(|c| {
            Exp::new(c.unbinding_rate_per_s)
                .map_err(|_| Error::Numeric("invalid unbinding rate".to_string()))
        })
        .collect::<Result<_>>()?;

    let mut steps = Vec::with_capacity(2 * cycles);
    for _ in 0..cycles {
        steps.push(TraceStep { channel: None, dwell_s: unbound_dwell.sample(rng) });
        let mut pick = rng.random::<f64>() * total_binding;
        let mut chosen = channels.len() - 1;
        for (i, channel) in channels.iter().enumerate() {
            pick -= channel.binding_rate_per_s;
            if pick <= 0.0 {
                chosen = i;
                break;
            }
        }
        steps.push(TraceStep { channel: Some(chosen), dwell_s: bound_dwells[chosen].sample(rng) });
    }
    Ok(BindingTrace { steps, num_channels: channels.len() })
}

/// Bound dwell-time density: the mixture sum_i alpha_i k_i exp(-k_i tau).
pub fn dwell_pdf(ratios: &[f64], unbinding_rates: &[f64], tau_s: f64) -> Result<f64> {
    if ratios.len() != unbinding_rates.len() || ratios.is_empty() {
        return Err(Error::Domain(format!(
            "need matching non-empty ratio and rate lists, got {} and {}",
            ratios.len(),
            unbinding_rates.len()
        )));
    }
    if !tau_s.is_finite() || tau_s < 0.0 {
        return Err(Error::Domain(format!("dwell time must be non-negative, got {tau_s}")));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("ratios must sum to 1, got {total}")));
    }
    let mut density = 0.0;
    for (&alpha, &k) in ratios.iter().zip(unbinding_rates) {
        if !(0.0..=1.0 + 1e-12).contains(&alpha) {
            return Err(Error::Domain(format!("ratios must lie in [0, 1], got {alpha}")));
        }
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::Domain(format!(
                "unbinding rates must be finite and positive, got {k}"
            )));
        }
        density += alpha * k * Float::exp(-k * tau_s);
    }
    Ok(density)
}

/// Log-likelihood of a trace under shared binding rate `k_on`, total ligand
/// concentration `c_tot`, and bound-dwell mixture `(ratios, rates)`, split
/// into the three terms of its analytic decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwellLikelihood {
    /// M ln(k_on c_tot) from the unbound dwell normalizations.
    pub rate_term: f64,
    /// -k_on c_tot T_u from the total unbound exposure.
    pub exposure_term: f64,
    /// Sum of log mixture densities over bound dwells.
    pub mixture_term: f64,
}

impl DwellLikelihood {
    #[must_use]
    pub fn total(&self) -> f64 {
        self.rate_term + self.exposure_term + self.mixture_term
    }
}

/// Evaluates the dwell-time log-likelihood of `trace`.
pub fn log_likelihood(
    trace: &BindingTrace,
    k_on_per_molar_s: f64,
    total_concentration_molar: f64,
    ratios: &[f64],
    unbinding_rates: &[f64],
) -> Result<DwellLikelihood> {
    if !k_on_per_molar_s.is_finite() || k_on_per_molar_s <= 0.0 {
        return Err(Error::Domain(format!(
            "binding rate constant must be finite and positive, got {k_on_per_molar_s}"
        )));
    }
    if !total_concentration_molar.is_finite() || total_concentration_molar <= 0.0 {
        return Err(Error::Domain(format!(
            "total concentration must be finite and positive, got {total_concentration_molar}"
        )));
    }
    let cycles = trace.cycles() as f64;
    let binding_rate = k_on_per_molar_s * total_concentration_molar;
    let mut mixture_term = 0.0;
    for (_, dwell) in trace.bound_dwells() {
        mixture_term += Float::ln(dwell_pdf(ratios, unbinding_rates, dwell)?);
    }
    Ok(DwellLikelihood {
        rate_term: cycles * Float::ln(binding_rate),
        exposure_term: -binding_rate * trace.total_unbound_time(),
        mixture_term,
    })
}
