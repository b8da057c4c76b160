//! Model specifications, parameter scaling, and the samplers for the planted
//! random energy model and the two-community weighted (hyper)graph block
//! models.
//!
//! All three families share one representation: a universe of nodes, a
//! hyperedge cardinality `h`, and one Gaussian weight per `h`-subset stored
//! flat at its colexicographic rank. The energy model is the `h = 1` case
//! over `M + k` states.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Purpose};
use crate::subset::{binomial, for_each_subset, SubsetCodec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Prem,
    Wsbm,
    Hwsbm,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Prem => "prem",
            Family::Wsbm => "wsbm",
            Family::Hwsbm => "hwsbm",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "prem" => Ok(Family::Prem),
            "wsbm" => Ok(Family::Wsbm),
            "hwsbm" => Ok(Family::Hwsbm),
            other => Err(Error::spec(format!("unknown family `{other}`"))),
        }
    }
}

/// Family plus hatted parameters and sizes.
///
/// `size` is `M` (the number of unbiased states) for the energy model and
/// the node count `N` for the graph families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub size: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
}

impl ModelSpec {
    pub fn prem(mu_hat: f64, sigma_hat: f64, m: usize, k: usize) -> Result<Self> {
        Self {
            family: Family::Prem,
            mu_hat,
            sigma_hat,
            size: m,
            k,
            h: None,
        }
        .validated()
    }

    pub fn wsbm(mu_hat: f64, sigma_hat: f64, n: usize, k: usize) -> Result<Self> {
        Self {
            family: Family::Wsbm,
            mu_hat,
            sigma_hat,
            size: n,
            k,
            h: Some(2),
        }
        .validated()
    }

    pub fn hwsbm(mu_hat: f64, sigma_hat: f64, n: usize, k: usize, h: usize) -> Result<Self> {
        Self {
            family: Family::Hwsbm,
            mu_hat,
            sigma_hat,
            size: n,
            k,
            h: Some(h),
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_hat > 0.0 && self.mu_hat.is_finite()) {
            return Err(Error::spec(format!("mu_hat must be positive, got {}", self.mu_hat)));
        }
        if !(self.sigma_hat > 0.0 && self.sigma_hat.is_finite()) {
            return Err(Error::spec(format!("sigma_hat must be positive, got {}", self.sigma_hat)));
        }
        match self.family {
            Family::Prem => {
                if self.size < 1 || self.k < 1 {
                    return Err(Error::spec("PREM needs M >= 1 and k >= 1"));
                }
                if self.h.is_some_and(|h| h != 1) {
                    return Err(Error::spec("PREM has no hyperedge cardinality"));
                }
            }
            Family::Wsbm => {
                if self.h.is_some_and(|h| h != 2) {
                    return Err(Error::spec("WSBM has edge cardinality 2"));
                }
                if self.k < 2 || self.k + 1 > self.size {
                    return Err(Error::spec(format!(
                        "WSBM needs 2 <= k <= N - 1, got N = {}, k = {}",
                        self.size, self.k
                    )));
                }
            }
            Family::Hwsbm => {
                let h = self.h.ok_or_else(|| Error::spec("HWSBM needs h"))?;
                if h < 2 || h > self.k || self.k + 1 > self.size {
                    return Err(Error::spec(format!(
                        "HWSBM needs 2 <= h <= k <= N - 1, got N = {}, k = {}, h = {h}",
                        self.size, self.k
                    )));
                }
            }
        }
        Ok(())
    }

    /// Hyperedge cardinality; 1 for the energy model.
    pub fn edge_cardinality(&self) -> usize {
        match self.family {
            Family::Prem => 1,
            Family::Wsbm => 2,
            Family::Hwsbm => self.h.unwrap_or(2),
        }
    }

    /// Number of nodes (or states) from which the planted set is drawn.
    pub fn universe(&self) -> usize {
        match self.family {
            Family::Prem => self.size + self.k,
            _ => self.size,
        }
    }

    /// Length of the weight array: `M + k` or `C(N, h)`.
    pub fn num_weights(&self) -> u128 {
        binomial(self.universe() as u64, self.edge_cardinality() as u64)
    }

    /// Number of weights carrying the bias: `k` or `C(k, h)`.
    pub fn num_biased(&self) -> u128 {
        binomial(self.k as u64, self.edge_cardinality() as u64)
    }

    /// Signal-to-noise ratio `mu_hat / sigma_hat`.
    pub fn gamma(&self) -> f64 {
        self.mu_hat / self.sigma_hat
    }

    pub fn with_mu_hat(mut self, mu_hat: f64) -> Self {
        self.mu_hat = mu_hat;
        self
    }
}

/// Actual mean and standard deviation of the biased Gaussian weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledParams {
    pub mu: f64,
    pub sigma: f64,
}

impl ScaledParams {
    /// `mu = mu_hat ln(size)`, `sigma = sigma_hat sqrt(ln(size) / 2)`.
    ///
    /// `size` is real-valued so the scaling can be evaluated off the integer
    /// lattice; it must be at least 2.
    pub fn from_hatted(mu_hat: f64, sigma_hat: f64, size: f64) -> Result<Self> {
        if !(mu_hat > 0.0) || !(sigma_hat > 0.0) {
            return Err(Error::spec("mu_hat and sigma_hat must be positive"));
        }
        if !(size >= 2.0) {
            return Err(Error::DegenerateSize(size));
        }
        let log = size.ln();
        Ok(Self {
            mu: mu_hat * log,
            sigma: sigma_hat * (log / 2.0).sqrt(),
        })
    }
}

pub fn scale_parameters(spec: &ModelSpec) -> Result<ScaledParams> {
    spec.validate()?;
    ScaledParams::from_hatted(spec.mu_hat, spec.sigma_hat, spec.size as f64)
}

/// A sampled (or loaded) instance: one weight per hyperedge plus the planted
/// set. Immutable once built.
#[derive(Debug, Clone)]
pub struct Instance {
    spec: ModelSpec,
    codec: SubsetCodec,
    weights: Vec<f64>,
    planted: Vec<usize>,
    seed: u64,
}

impl Instance {
    /// Builds an instance from explicit weights, e.g. read from a file.
    pub fn from_parts(spec: ModelSpec, weights: Vec<f64>, planted: Vec<usize>, seed: u64) -> Result<Self> {
        spec.validate()?;
        let codec = codec_for(&spec)?;
        if weights.len() != codec.len() {
            return Err(Error::spec(format!(
                "expected {} weights, got {}",
                codec.len(),
                weights.len()
            )));
        }
        let planted = checked_planted(&spec, planted)?;
        Ok(Self {
            spec,
            codec,
            weights,
            planted,
            seed,
        })
    }

    /// Zero-noise instance: biased weights equal `mu`, all others 0.
    pub fn noiseless(spec: ModelSpec, planted: Vec<usize>) -> Result<Self> {
        let params = scale_parameters(&spec)?;
        let codec = codec_for(&spec)?;
        let planted = checked_planted(&spec, planted)?;
        let mut weights = vec![0.0; codec.len()];
        for_each_subset(&planted, codec.h(), |e| weights[codec.rank_unchecked(e)] = params.mu);
        Ok(Self {
            spec,
            codec,
            weights,
            planted,
            seed: 0,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn codec(&self) -> &SubsetCodec {
        &self.codec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn planted(&self) -> &[usize] {
        &self.planted
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn num_nodes(&self) -> usize {
        self.codec.n()
    }

    pub fn edge_cardinality(&self) -> usize {
        self.codec.h()
    }

    pub fn k(&self) -> usize {
        self.spec.k
    }

    #[inline]
    pub(crate) fn weight_of(&self, sorted_edge: &[usize]) -> f64 {
        self.weights[self.codec.rank_unchecked(sorted_edge)]
    }
}

fn codec_for(spec: &ModelSpec) -> Result<SubsetCodec> {
    let count = spec.num_weights();
    if count > (1u128 << 32) {
        return Err(Error::spec(format!("{count} weights is beyond desk scale")));
    }
    SubsetCodec::new(spec.universe(), spec.edge_cardinality())
}

fn checked_planted(spec: &ModelSpec, mut planted: Vec<usize>) -> Result<Vec<usize>> {
    planted.sort_unstable();
    let universe = spec.universe();
    if planted.len() != spec.k {
        return Err(Error::spec(format!(
            "planted set has {} elements, expected k = {}",
            planted.len(),
            spec.k
        )));
    }
    if planted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::spec("planted set has repeated indices"));
    }
    if planted.last().is_some_and(|&v| v >= universe) {
        return Err(Error::spec(format!("planted index outside [0, {universe})")));
    }
    Ok(planted)
}

/// Uniform `k`-subset of `0..universe`, sorted, from the planted stream of
/// `seed`. This is the planted set [`sample_instance`] draws.
pub fn sample_planted(universe: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, Purpose::Planted, 0, 0);
    let mut planted = index::sample(&mut rng, universe, k).into_vec();
    planted.sort_unstable();
    planted
}

/// Draws an instance. The planted set is drawn uniformly from the seeded
/// stream unless supplied; weights are drawn in rank order from a second
/// stream, so equal `(spec, seed, planted)` always gives equal weights.
pub fn sample_instance(spec: &ModelSpec, seed: u64, planted: Option<Vec<usize>>) -> Result<Instance> {
    spec.validate()?;
    let params = scale_parameters(spec).map_err(|err| match err {
        // M = 1 is a valid energy model but has no logarithmic scaling
        Error::DegenerateSize(_) => Error::spec("size must be at least 2 to scale parameters"),
        other => other,
    })?;
    let codec = codec_for(spec)?;
    let planted = match planted {
        Some(p) => checked_planted(spec, p)?,
        None => sample_planted(codec.n(), spec.k, seed),
    };

    let mut rng = rng::stream(seed, Purpose::Weights, 0, 0);
    let sigma = params.sigma;
    let mut weights: Vec<f64> = (0..codec.len())
        .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut rng))
        .collect::<Vec<f64>>();
    for_each_subset(&planted, codec.h(), |e| weights[codec.rank_unchecked(e)] += params.mu);

    Ok(Instance {
        spec: *spec,
        codec,
        weights,
        planted,
        seed,
    })
}

/// Total weight of the hyperedges inside `subset`, each counted once.
///
/// For the energy model this is the plain sum of the selected states.
pub fn solution_weight(instance: &Instance, subset: &[usize]) -> Result<f64> {
    let h = instance.edge_cardinality();
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::index("subset has repeated indices"));
    }
    if let Some(&v) = sorted.last() {
        if v >= instance.num_nodes() {
            return Err(Error::index(format!("index {v} outside [0, {})", instance.num_nodes())));
        }
    }
    if sorted.len() < h {
        return Err(Error::EmptySupport { size: sorted.len(), h });
    }
    Ok(weight_of_sorted(instance, &sorted))
}

/// Canonical summation used everywhere a solution weight is reported:
/// hyperedges visited in lexicographic order.
pub(crate) fn weight_of_sorted(instance: &Instance, sorted: &[usize]) -> f64 {
    let mut total = 0.0;
    for_each_subset(sorted, instance.edge_cardinality(), |e| total += instance.weight_of(e));
    total
}
