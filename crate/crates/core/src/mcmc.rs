//! Posterior sampling for `(lambda0, beta)`.
//!
//! The likelihood is linear in `lambda0`, so its full conditional under a
//! Gamma(a1, b1) shape-rate prior is Gamma(a1 + k, b1 + C(beta)) with
//! `C(beta)` the unit-baseline integrated intensity; that step is an exact
//! Gibbs draw. Each regression coefficient is updated by a Gaussian
//! random-walk Metropolis step whose scale adapts during burn-in
//! (Robbins-Monro on the log scale, targeting acceptance near 0.35) and is
//! frozen afterward, so the post-burn-in kernel is fixed.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::covariate::CovariateField;
use crate::error::{Error, Result};
use crate::geom::{PointPattern, QuadratureGrid};
use crate::likelihood::{Design, ModelSpec, Theta};

/// Priors: `beta_j ~ N(0, sigma0_sq)` i.i.d. and `lambda0 ~ Gamma(a1, b1)`
/// in shape-rate form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub sigma0_sq: f64,
    pub a1: f64,
    pub b1: f64,
}

impl PriorSpec {
    pub fn new(sigma0_sq: f64, a1: f64, b1: f64) -> Result<Self> {
        if !(sigma0_sq > 0.0 && a1 > 0.0 && b1 > 0.0) {
            return Err(Error::Config(
                "prior parameters must all be positive".into(),
            ));
        }
        Ok(PriorSpec { sigma0_sq, a1, b1 })
    }

    /// Weakly informative reference prior: `sigma0_sq = 100`, `a1 = b1 = 0.01`.
    pub fn reference() -> Self {
        PriorSpec {
            sigma0_sq: 100.0,
            a1: 0.01,
            b1: 0.01,
        }
    }

    /// Simulation-study prior: `sigma0_sq = 100`, `lambda0 ~ Gamma(1, 1)`.
    pub fn simulation() -> Self {
        PriorSpec {
            sigma0_sq: 100.0,
            a1: 1.0,
            b1: 1.0,
        }
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self::reference()
    }
}

/// Random-walk proposal scale: one value for all components or one per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProposalScale {
    Scalar(f64),
    PerComponent(Vec<f64>),
}

impl ProposalScale {
    fn resolve(&self, p: usize) -> Result<Vec<f64>> {
        let sds = match self {
            ProposalScale::Scalar(s) => vec![*s; p],
            ProposalScale::PerComponent(v) => {
                if v.len() != p {
                    return Err(Error::Config(format!(
                        "proposal_sd has {} entries but the model has {} coefficients",
                        v.len(),
                        p
                    )));
                }
                v.clone()
            }
        };
        if sds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config(
                "proposal_sd entries must be finite and >= 0".into(),
            ));
        }
        Ok(sds)
    }
}

/// Chain-length, proposal, and seeding configuration.
///
/// A proposal sd of exactly 0 freezes that coefficient at its initial value
/// (used by the conjugacy checks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub n_iter: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub proposal_sd: ProposalScale,
    pub adapt: bool,
    pub seed: u64,
}

impl McmcConfig {
    pub fn new(n_iter: usize, burn_in: usize, thin: usize, seed: u64) -> Result<Self> {
        let cfg = McmcConfig {
            n_iter,
            burn_in,
            thin,
            proposal_sd: ProposalScale::Scalar(0.1),
            adapt: true,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(Error::Config(format!(
                "n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        self.proposal_sd.resolve(0).ok();
        Ok(())
    }

    /// 20,000 iterations, 10,000 burn-in, no thinning: the simulation-study profile.
    pub fn sim2018(seed: u64) -> Self {
        McmcConfig::new(20_000, 10_000, 1, seed).expect("valid profile")
    }

    /// 30,000 burn-in then 2,000 kept at thinning 10: the earthquake-analysis profile.
    pub fn paper51(seed: u64) -> Self {
        McmcConfig::new(50_000, 30_000, 10, seed).expect("valid profile")
    }

    /// 10,000 burn-in then 8,000 kept: the multi-resolution-analysis profile.
    pub fn paper52(seed: u64) -> Self {
        McmcConfig::new(18_000, 10_000, 1, seed).expect("valid profile")
    }

    /// Number of kept samples `B = floor((n_iter - burn_in) / thin)`.
    pub fn n_kept(&self) -> usize {
        (self.n_iter - self.burn_in) / self.thin
    }
}

/// Thinned post-burn-in posterior sample with sampler diagnostics.
#[derive(Debug, Clone)]
pub struct Chain {
    samples: Vec<Theta>,
    param_names: Vec<String>,
    acceptance_rate_beta: Vec<f64>,
    proposal_sd_final: Vec<f64>,
    tuning_warning: Option<String>,
    burn_in: usize,
    thin: usize,
}

impl Chain {
    /// Build a chain directly from samples (a fixture or an imported file);
    /// sampler diagnostics are left empty.
    pub fn from_samples(samples: Vec<Theta>) -> Result<Chain> {
        let Some(first) = samples.first() else {
            return Err(Error::Config(
                "chain must contain at least one sample".into(),
            ));
        };
        let p = first.beta.len();
        if samples.iter().any(|t| t.beta.len() != p) {
            return Err(Error::Config(
                "chain samples have inconsistent dimensions".into(),
            ));
        }
        let mut param_names = vec!["lambda0".to_string()];
        param_names.extend((1..=p).map(|j| format!("beta_{j}")));
        Ok(Chain {
            samples,
            param_names,
            acceptance_rate_beta: Vec::new(),
            proposal_sd_final: Vec::new(),
            tuning_warning: None,
            burn_in: 0,
            thin: 1,
        })
    }

    pub fn samples(&self) -> &[Theta] {
        &self.samples
    }

    pub fn n_kept(&self) -> usize {
        self.samples.len()
    }

    /// Parameter names: `lambda0` then the active `beta_<j>`s.
    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    /// Post-burn-in acceptance rate per coefficient.
    pub fn acceptance_rate_beta(&self) -> &[f64] {
        &self.acceptance_rate_beta
    }

    /// Proposal sd per coefficient after burn-in adaptation froze.
    pub fn proposal_sd_final(&self) -> &[f64] {
        &self.proposal_sd_final
    }

    pub fn tuning_warning(&self) -> Option<&str> {
        self.tuning_warning.as_deref()
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn thin(&self) -> usize {
        self.thin
    }

    /// Original iteration number of kept sample `i`.
    pub fn iteration_of(&self, i: usize) -> usize {
        self.burn_in + i * self.thin + self.thin - 1
    }

    pub fn lambda0_samples(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|t| t.lambda0)
    }

    /// Componentwise posterior mean on the natural scale.
    pub fn mean_theta(&self) -> Result<Theta> {
        if self.samples.is_empty() {
            return Err(Error::Config("empty chain".into()));
        }
        let n = self.samples.len() as f64;
        let p = self.samples[0].beta.len();
        let lambda0 = self.samples.iter().map(|t| t.lambda0).sum::<f64>() / n;
        let mut beta = vec![0.0; p];
        for t in &self.samples {
            for (b, v) in beta.iter_mut().zip(&t.beta) {
                *b += v;
            }
        }
        for b in &mut beta {
            *b /= n;
        }
        Theta::new(lambda0, beta)
    }
}

/// Shape-rate parameters of the exact full conditional of `lambda0`:
/// `Gamma(a1 + k, b1 + C(beta))`.
pub fn lambda0_full_conditional(
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
    beta: &[f64],
    prior: &PriorSpec,
) -> Result<(f64, f64)> {
    if beta.len() != spec.dim() {
        return Err(Error::Config(format!(
            "beta has {} entries but the model has {} active covariates",
            beta.len(),
            spec.dim()
        )));
    }
    let design = Design::new(spec, fields, pattern, grid)?;
    let shape = prior.a1 + pattern.len() as f64;
    let rate = prior.b1 + design.unit_integral(beta);
    Ok((shape, rate))
}

const ADAPT_TARGET: f64 = 0.35;
const LOG_SD_MIN: f64 = -12.0;
const LOG_SD_MAX: f64 = 3.0;

/// One Metropolis-within-Gibbs sampler, advanced one full scan at a time.
pub struct Sampler {
    design: Design,
    prior: PriorSpec,
    config: McmcConfig,
    rng: ChaCha8Rng,
    theta: Theta,
    /// `beta . z_c` per quadrature cell for the current beta.
    cell_dots: Vec<f64>,
    scratch: Vec<f64>,
    /// Current `C(beta)`.
    unit_int: f64,
    event_sums: Vec<f64>,
    log_sd: Vec<f64>,
    frozen: Vec<bool>,
    t: usize,
    accept_burn: Vec<usize>,
    accept_kept: Vec<usize>,
}

impl Sampler {
    pub fn new(
        pattern: &PointPattern,
        spec: &ModelSpec,
        fields: &[CovariateField],
        prior: &PriorSpec,
        config: &McmcConfig,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        config.validate()?;
        let design = Design::new(spec, fields, pattern, grid)?;
        let p = spec.dim();
        let sds = config.proposal_sd.resolve(p)?;

        // Method-of-moments HPP start; prior mean when the pattern is empty.
        let lambda0_init = if pattern.is_empty() {
            prior.a1 / prior.b1
        } else {
            pattern.len() as f64 / pattern.region().area()
        };
        let theta = Theta::new(lambda0_init, vec![0.0; p])?;

        let cell_dots = vec![0.0; design.n_cells()];
        let unit_int = design.n_cells() as f64 * design.cell_area();
        let event_sums = design.event_row_sums();

        let init_ll = design.log_likelihood(&theta).map_err(|e| {
            Error::Init(format!("log-likelihood not finite at initialization: {e}"))
        })?;
        if !init_ll.is_finite() {
            return Err(Error::Init(
                "log-likelihood not finite at initialization".into(),
            ));
        }

        let frozen: Vec<bool> = sds.iter().map(|&s| s == 0.0).collect();
        let log_sd: Vec<f64> = sds
            .iter()
            .map(|&s| if s == 0.0 { f64::NEG_INFINITY } else { s.ln() })
            .collect();

        Ok(Sampler {
            design,
            prior: *prior,
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            theta,
            scratch: cell_dots.clone(),
            cell_dots,
            unit_int,
            event_sums,
            log_sd,
            frozen,
            t: 0,
            accept_burn: vec![0; p],
            accept_kept: vec![0; p],
        })
    }

    /// Proposal sd per coefficient at the current iteration.
    pub fn proposal_sd(&self) -> Vec<f64> {
        self.log_sd
            .iter()
            .map(|&l| if l.is_finite() { l.exp() } else { 0.0 })
            .collect()
    }

    pub fn current(&self) -> &Theta {
        &self.theta
    }

    /// Advance the chain one full scan: a Gibbs draw of `lambda0` followed by
    /// one Metropolis step per coefficient.
    pub fn step(&mut self) {
        let k = self.design.n_events() as f64;
        let shape = self.prior.a1 + k;
        let rate = self.prior.b1 + self.unit_int;
        let gamma = Gamma::new(shape, 1.0 / rate).expect("valid gamma parameters");
        self.theta.lambda0 = gamma.sample(&mut self.rng);

        let p = self.theta.beta.len();
        let in_burn_in = self.t < self.config.burn_in;
        let cell_area = self.design.cell_area();
        for j in 0..p {
            if self.frozen[j] {
                continue;
            }
            let sd = self.log_sd[j].exp();
            let delta: f64 = Normal::new(0.0, sd)
                .expect("positive sd")
                .sample(&mut self.rng);
            let beta_j = self.theta.beta[j];
            let beta_j_new = beta_j + delta;

            let mut acc = 0.0;
            for c in 0..self.design.n_cells() {
                let d = self.cell_dots[c] + delta * self.design.cell_row(c)[j];
                self.scratch[c] = d;
                acc += d.exp();
            }
            let unit_new = acc * cell_area;

            let log_ratio = delta * self.event_sums[j]
                - self.theta.lambda0 * (unit_new - self.unit_int)
                + (beta_j * beta_j - beta_j_new * beta_j_new) / (2.0 * self.prior.sigma0_sq);
            let alpha = log_ratio.min(0.0).exp();
            let u: f64 = self.rng.random();
            if u < alpha {
                self.theta.beta[j] = beta_j_new;
                std::mem::swap(&mut self.cell_dots, &mut self.scratch);
                self.unit_int = unit_new;
                if in_burn_in {
                    self.accept_burn[j] += 1;
                } else {
                    self.accept_kept[j] += 1;
                }
            }
            if in_burn_in && self.config.adapt {
                let gain = ((self.t + 1) as f64).powf(-0.6);
                self.log_sd[j] =
                    (self.log_sd[j] + gain * (alpha - ADAPT_TARGET)).clamp(LOG_SD_MIN, LOG_SD_MAX);
            }
        }
        self.t += 1;
    }

    /// Run the configured number of iterations and collect the thinned chain.
    pub fn run(mut self) -> Result<Chain> {
        let cfg = self.config.clone();
        let mut samples = Vec::with_capacity(cfg.n_kept());
        for t in 0..cfg.n_iter {
            self.step();
            if t >= cfg.burn_in && (t - cfg.burn_in) % cfg.thin == cfg.thin - 1 {
                samples.push(self.theta.clone());
            }
        }

        let p = self.theta.beta.len();
        let post_iters = (cfg.n_iter - cfg.burn_in) as f64;
        let acceptance_rate_beta: Vec<f64> = (0..p)
            .map(|j| self.accept_kept[j] as f64 / post_iters)
            .collect();

        let mut tuning_warning = None;
        if cfg.burn_in > 0 {
            for j in 0..p {
                if self.frozen[j] {
                    continue;
                }
                let rate = self.accept_burn[j] as f64 / cfg.burn_in as f64;
                if rate == 0.0 || rate == 1.0 {
                    tuning_warning = Some(format!(
                        "coefficient {j} had burn-in acceptance rate {rate}; proposal scale may need tuning"
                    ));
                }
            }
        }

        Ok(Chain {
            samples,
            param_names: self.design.spec().param_names(),
            acceptance_rate_beta,
            proposal_sd_final: self.proposal_sd(),
            tuning_warning,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
        })
    }
}

/// Draw a posterior chain; deterministic given `(data, config, seed)`.
pub fn sample_posterior(
    pattern: &PointPattern,
    spec: &ModelSpec,
    fields: &[CovariateField],
    prior: &PriorSpec,
    config: &McmcConfig,
    grid: &QuadratureGrid,
) -> Result<Chain> {
    Sampler::new(pattern, spec, fields, prior, config, grid)?.run()
}

/// Summary of one scalar parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub hpd_lower: f64,
    pub hpd_upper: f64,
}

/// Posterior means, standard deviations, and HPD intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub level: f64,
    pub params: Vec<ParamSummary>,
}

/// Narrowest interval of consecutive order statistics containing
/// `ceil(level * B)` samples; ties break to the lowest start.
pub fn hpd_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "HPD level must be in (0,1), got {level}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::Config("HPD of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let b = sorted.len();
    let m = ((level * b as f64).ceil() as usize).clamp(1, b);
    let mut best = (sorted[m - 1] - sorted[0], 0usize);
    for i in 1..=(b - m) {
        let width = sorted[i + m - 1] - sorted[i];
        if width < best.0 {
            best = (width, i);
        }
    }
    Ok((sorted[best.1], sorted[best.1 + m - 1]))
}

/// Per-parameter mean, sd, and HPD interval from a chain with at least 10
/// kept samples.
pub fn posterior_summary(chain: &Chain, level: f64) -> Result<PosteriorSummary> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Config(format!(
            "HPD level must be in (0,1), got {level}"
        )));
    }
    if chain.n_kept() < 10 {
        return Err(Error::Config(format!(
            "posterior summary needs at least 10 kept samples, got {}",
            chain.n_kept()
        )));
    }
    let b = chain.n_kept();
    let p = chain.samples[0].beta.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(p + 1);
    columns.push(chain.lambda0_samples().collect());
    for j in 0..p {
        columns.push(chain.samples.iter().map(|t| t.beta[j]).collect());
    }

    let params = chain
        .param_names
        .iter()
        .zip(&columns)
        .map(|(name, col)| {
            let mean = col.iter().sum::<f64>() / b as f64;
            let var = if b > 1 {
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64
            } else {
                0.0
            };
            let (hpd_lower, hpd_upper) = hpd_interval(col, level).expect("validated inputs");
            ParamSummary {
                name: name.clone(),
                mean,
                sd: var.sqrt(),
                hpd_lower,
                hpd_upper,
            }
        })
        .collect();

    Ok(PosteriorSummary { level, params })
}
