//! Model-comparison criteria over a posterior chain: DIC and LPML.
//!
//! The deviance is `-2 * log_likelihood`; `DIC = 2 * mean(Dev) - Dev(mean)`
//! with the plug-in at the componentwise posterior mean on the natural scale.
//! The LPML event term uses the posterior harmonic mean of the intensity at
//! each event and the integral term the posterior mean intensity surface,
//! both over the kept samples; the region-area constant is dropped. With a
//! single kept sample both criteria collapse onto the log-likelihood at that
//! sample, exactly, because the integral of the mean surface is computed as
//! the mean of the per-sample midpoint integrals.
//!
//! [`lpml_partition_oracle`] is the independent check of the same quantity:
//! it evaluates the count-based CPO of each cell of a partition against a
//! unit-intensity reference process and converges to [`lpml`] as the
//! partition refines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariate::CovariateField;
use crate::error::{Error, Result};
use crate::geom::{count_in_cells, PointPattern, QuadratureGrid};
use crate::likelihood::{dot, Design, ModelSpec, Theta};
use crate::mcmc::Chain;

/// Log-intensities below this count as a zero intensity.
const LOG_ZERO: f64 = -745.0;

/// Largest per-cell integrated intensity the partition oracle will exponentiate.
const MAX_CELL_EXPONENT: f64 = 700.0;

/// DIC decomposition; `dic = 2 * mean_dev - dev_at_mean` and
/// `p_d = mean_dev - dev_at_mean` by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DicResult {
    pub dic: f64,
    pub p_d: f64,
    pub dev_at_mean: f64,
    pub mean_dev: f64,
}

/// LPML decomposition; `lpml = sum(event_terms) - integral_term`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpmlResult {
    pub lpml: f64,
    /// Per-event `log` of the posterior harmonic-mean intensity.
    pub event_terms: Vec<f64>,
    /// Integral of the posterior mean intensity over the region.
    pub integral_term: f64,
}

/// `-2 * log_likelihood(theta)`.
pub fn deviance(
    theta: &Theta,
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Ok(-2.0 * crate::likelihood::log_likelihood(theta, spec, fields, pattern, grid)?)
}

fn check_chain(chain: &Chain, spec: &ModelSpec) -> Result<()> {
    if chain.n_kept() == 0 {
        return Err(Error::Config("criteria need a nonempty chain".into()));
    }
    if chain.samples()[0].beta.len() != spec.dim() {
        return Err(Error::Config(format!(
            "chain has {} coefficients but the model has {}",
            chain.samples()[0].beta.len(),
            spec.dim()
        )));
    }
    Ok(())
}

/// `C(beta_b)` for every kept sample, in sample order.
fn unit_integrals(design: &Design, chain: &Chain) -> Vec<f64> {
    chain
        .samples()
        .par_iter()
        .map(|t| design.unit_integral(&t.beta))
        .collect()
}

fn dic_from(design: &Design, chain: &Chain, unit_ints: &[f64]) -> Result<DicResult> {
    let k = design.n_events() as f64;
    let event_sums = design.event_row_sums();
    let b = chain.n_kept() as f64;

    let mut mean_dev = 0.0;
    for (t, &c) in chain.samples().iter().zip(unit_ints) {
        let event_part = k * t.lambda0.ln() + dot(&t.beta, &event_sums);
        mean_dev += -2.0 * (event_part - t.lambda0 * c);
    }
    mean_dev /= b;

    let mean = chain.mean_theta()?;
    let event_part = k * mean.lambda0.ln() + dot(&mean.beta, &event_sums);
    let dev_at_mean = -2.0 * (event_part - mean.lambda0 * design.unit_integral(&mean.beta));

    Ok(DicResult {
        dic: 2.0 * mean_dev - dev_at_mean,
        p_d: mean_dev - dev_at_mean,
        dev_at_mean,
        mean_dev,
    })
}

fn lpml_from(design: &Design, chain: &Chain, unit_ints: &[f64]) -> Result<LpmlResult> {
    let b = chain.n_kept();
    let log_b = (b as f64).ln();
    let log_lambda0: Vec<f64> = chain.samples().iter().map(|t| t.lambda0.ln()).collect();

    // Harmonic mean per event, accumulated in log space.
    let mut event_terms = Vec::with_capacity(design.n_events());
    let mut neg_logs = vec![0.0; b];
    for j in 0..design.n_events() {
        let row = design.event_row(j);
        let mut max_neg = f64::NEG_INFINITY;
        for (s, t) in chain.samples().iter().enumerate() {
            let log_lambda = log_lambda0[s] + dot(&t.beta, row);
            if !log_lambda.is_finite() || log_lambda < LOG_ZERO {
                return Err(Error::ZeroIntensity {
                    event: j,
                    sample: s,
                });
            }
            neg_logs[s] = -log_lambda;
            if neg_logs[s] > max_neg {
                max_neg = neg_logs[s];
            }
        }
        let sum_exp: f64 = neg_logs.iter().map(|v| (v - max_neg).exp()).sum();
        // log lambda~(s_j) = log B - logsumexp_b(-log lambda_b(s_j))
        event_terms.push(log_b - (max_neg + sum_exp.ln()));
    }

    let integral_term = chain
        .samples()
        .iter()
        .zip(unit_ints)
        .map(|(t, &c)| t.lambda0 * c)
        .sum::<f64>()
        / b as f64;

    Ok(LpmlResult {
        lpml: event_terms.iter().sum::<f64>() - integral_term,
        event_terms,
        integral_term,
    })
}

/// DIC over a chain: posterior-mean deviance and the plug-in at the
/// componentwise posterior mean.
pub fn dic(
    chain: &Chain,
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<DicResult> {
    check_chain(chain, spec)?;
    let design = Design::new(spec, fields, pattern, grid)?;
    let unit_ints = unit_integrals(&design, chain);
    dic_from(&design, chain, &unit_ints)
}

/// Monte Carlo LPML: harmonic-mean event terms minus the integrated
/// posterior-mean intensity.
pub fn lpml(
    chain: &Chain,
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<LpmlResult> {
    check_chain(chain, spec)?;
    let design = Design::new(spec, fields, pattern, grid)?;
    let unit_ints = unit_integrals(&design, chain);
    lpml_from(&design, chain, &unit_ints)
}

/// Both criteria from a single sweep over the chain; identical values to
/// [`dic`] and [`lpml`] called separately.
pub fn dic_and_lpml(
    chain: &Chain,
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<(DicResult, LpmlResult)> {
    check_chain(chain, spec)?;
    let design = Design::new(spec, fields, pattern, grid)?;
    let unit_ints = unit_integrals(&design, chain);
    Ok((
        dic_from(&design, chain, &unit_ints)?,
        lpml_from(&design, chain, &unit_ints)?,
    ))
}

/// Partition-count estimate of the LPML.
///
/// For each partition cell, the cell CPO against a unit-intensity reference
/// process is estimated by a posterior Monte Carlo average. The integrated
/// intensity `lambda(A_i)` in the exponential factor is approximated by
/// center-value times area; the count factor `(lambda(A_i)/|A_i|)^(-N_i)`
/// is evaluated at the event locations themselves (the same points the
/// limit argument uses), which keeps the estimate free of cell-center
/// offset noise at the events. The result is `sum_i log CPO_i - |B|` and
/// converges to [`lpml`] as the partition refines.
pub fn lpml_partition_oracle(
    chain: &Chain,
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    partition: &QuadratureGrid,
) -> Result<f64> {
    check_chain(chain, spec)?;
    let counts = count_in_cells(pattern, partition)?;
    let design = Design::new(spec, fields, pattern, partition)?;
    let b = chain.n_kept();
    let log_b = (b as f64).ln();
    let area = partition.cell_area();
    let log_lambda0: Vec<f64> = chain.samples().iter().map(|t| t.lambda0.ln()).collect();

    // Per-cell sums of the event design rows, so the per-sample product of
    // event intensities in a cell is one dot product.
    let p = spec.dim();
    let mut event_row_sums = vec![0.0f64; partition.n_cells() * p.max(1)];
    for (j, s) in pattern.points().iter().enumerate() {
        let cell = partition.cell_index(*s).expect("pattern point in region");
        let row = design.event_row(j);
        for (q, v) in row.iter().enumerate() {
            event_row_sums[cell * p + q] += v;
        }
    }

    let log_cpos: Vec<f64> = (0..partition.n_cells())
        .into_par_iter()
        .map_init(
            || vec![0.0f64; b],
            |terms, i| -> Result<f64> {
                let row = design.cell_row(i);
                let n_i = counts[i] as f64;
                let ev_sum = &event_row_sums[i * p..i * p + p];
                let mut max_t = f64::NEG_INFINITY;
                for (s, t) in chain.samples().iter().enumerate() {
                    let log_lambda_center = log_lambda0[s] + dot(&t.beta, row);
                    let cell_mass = log_lambda_center.exp() * area;
                    if cell_mass > MAX_CELL_EXPONENT {
                        return Err(Error::PartitionOverflow { cell: i, sample: s });
                    }
                    // sum over events in the cell of log lambda_b(s_j)
                    let log_events = n_i * log_lambda0[s] + dot(&t.beta, ev_sum);
                    let term = -log_events + (cell_mass - area);
                    terms[s] = term;
                    if term > max_t {
                        max_t = term;
                    }
                }
                let sum_exp: f64 = terms.iter().map(|v| (v - max_t).exp()).sum();
                // log CPO_i = -(logsumexp_b - log B)
                Ok(log_b - (max_t + sum_exp.ln()))
            },
        )
        .collect::<Result<Vec<f64>>>()?;

    Ok(log_cpos.iter().sum::<f64>() - pattern.region().area())
}
