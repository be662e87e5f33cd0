//! Candidate-model enumeration, scoring, and replication studies.
//!
//! Each candidate is fitted independently (its MCMC seed derived from the
//! base seed and the candidate index) and scored by DIC and LPML. Winners
//! are the smallest DIC and the largest LPML; exact ties break toward the
//! smaller subset, then lexicographically. Replicate studies regenerate the
//! data per replicate, fit every candidate, and aggregate selection
//! percentages and criterion differences against the designated reference
//! model. Candidate fits and replicates run concurrently; every task seed is
//! a pure function of (master seed, replicate, candidate), so reports do not
//! depend on scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariate::CovariateField;
use crate::criteria::{dic_and_lpml, DicResult, LpmlResult};
use crate::error::{Error, Result};
use crate::geom::{PointPattern, QuadratureGrid};
use crate::likelihood::{size_lex_subsets, ModelSpec};
use crate::mcmc::{posterior_summary, sample_posterior, McmcConfig, PosteriorSummary, PriorSpec};
use crate::seed::{derive_seed, derive_seed2};
use crate::simulate::{simulate_nhpp, ScenarioPreset, SimMethod};

/// An ordered list of candidate models without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    models: Vec<ModelSpec>,
}

impl CandidateSet {
    pub fn new(models: Vec<ModelSpec>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::Config("candidate set must be nonempty".into()));
        }
        for i in 0..models.len() {
            for j in (i + 1)..models.len() {
                if models[i] == models[j] {
                    return Err(Error::Config(format!(
                        "duplicate candidate subset at positions {i} and {j}"
                    )));
                }
            }
        }
        Ok(CandidateSet { models })
    }

    pub fn models(&self) -> &[ModelSpec] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }
}

/// All `2^p - 1` nonempty covariate subsets in size-then-lexicographic
/// order, with the homogeneous model appended when requested.
pub fn enumerate_models(p: usize, include_homogeneous: bool) -> Result<CandidateSet> {
    if p == 0 || p > 20 {
        return Err(Error::Config(format!(
            "model enumeration supports 1..=20 covariates, got {p}"
        )));
    }
    let mut models: Vec<ModelSpec> = size_lex_subsets(p)
        .into_iter()
        .map(|s| ModelSpec::new(s, p).expect("valid enumeration"))
        .collect();
    if include_homogeneous {
        models.push(ModelSpec::homogeneous());
    }
    CandidateSet::new(models)
}

/// One fitted and scored candidate.
#[derive(Debug, Clone, Serialize)]
pub struct ScoredModel {
    pub label: String,
    pub spec: ModelSpec,
    pub dic: DicResult,
    pub lpml: LpmlResult,
    /// Present when the chain keeps at least 10 samples.
    pub summary: Option<PosteriorSummary>,
    pub acceptance_rate_beta: Vec<f64>,
}

/// Fit one model and compute both criteria on the resulting chain.
pub fn fit_and_score(
    pattern: &PointPattern,
    fields: &[CovariateField],
    model: &ModelSpec,
    prior: &PriorSpec,
    config: &McmcConfig,
    grid: &QuadratureGrid,
) -> Result<ScoredModel> {
    let label = model.label(fields);
    let chain = sample_posterior(pattern, model, fields, prior, config, grid)
        .map_err(|e| Error::Config(format!("model '{label}': {e}")))?;
    let (dic, lpml) = dic_and_lpml(&chain, model, fields, pattern, grid)?;
    let summary = if chain.n_kept() >= 10 {
        Some(posterior_summary(&chain, 0.95)?)
    } else {
        None
    };
    Ok(ScoredModel {
        label,
        spec: model.clone(),
        dic,
        lpml,
        summary,
        acceptance_rate_beta: chain.acceptance_rate_beta().to_vec(),
    })
}

/// Outcome of one candidate within a selection run.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ScoreOutcome {
    Scored(Box<ScoredModel>),
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateRow {
    pub label: String,
    pub spec: ModelSpec,
    #[serde(flatten)]
    pub outcome: ScoreOutcome,
}

impl CandidateRow {
    pub fn scored(&self) -> Option<&ScoredModel> {
        match &self.outcome {
            ScoreOutcome::Scored(s) => Some(s),
            ScoreOutcome::Failed { .. } => None,
        }
    }
}

/// Scores for every candidate plus the two winners.
#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub rows: Vec<CandidateRow>,
    /// Index of the smallest-DIC candidate among the scored rows.
    pub winner_dic: Option<usize>,
    /// Index of the largest-LPML candidate among the scored rows.
    pub winner_lpml: Option<usize>,
}

/// Tie-break: smaller subset first, then lexicographic indices.
fn prefer_on_tie(a: &ModelSpec, b: &ModelSpec) -> bool {
    (a.dim(), a.indices()) < (b.dim(), b.indices())
}

fn argbest(
    rows: &[CandidateRow],
    score: impl Fn(&ScoredModel) -> f64,
    smaller_is_better: bool,
) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in rows.iter().enumerate() {
        let Some(s) = row.scored() else { continue };
        let v = score(s);
        match best {
            None => best = Some((i, v)),
            Some((bi, bv)) => {
                let better = if smaller_is_better { v < bv } else { v > bv };
                let tie = v == bv && prefer_on_tie(&row.spec, &rows[bi].spec);
                if better || tie {
                    best = Some((i, v));
                }
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Fit and score every candidate; failures mark their row without aborting
/// the rest.
pub fn select(
    pattern: &PointPattern,
    fields: &[CovariateField],
    candidates: &CandidateSet,
    prior: &PriorSpec,
    config: &McmcConfig,
    grid: &QuadratureGrid,
) -> Result<SelectionReport> {
    let rows: Vec<CandidateRow> = candidates
        .models()
        .par_iter()
        .enumerate()
        .map(|(m, model)| {
            let mut cfg = config.clone();
            cfg.seed = derive_seed(config.seed, m as u64);
            let label = model.label(fields);
            match fit_and_score(pattern, fields, model, prior, &cfg, grid) {
                Ok(s) => CandidateRow {
                    label,
                    spec: model.clone(),
                    outcome: ScoreOutcome::Scored(Box::new(s)),
                },
                Err(e) => CandidateRow {
                    label,
                    spec: model.clone(),
                    outcome: ScoreOutcome::Failed {
                        error: e.to_string(),
                    },
                },
            }
        })
        .collect();

    let winner_dic = argbest(&rows, |s| s.dic.dic, true);
    let winner_lpml = argbest(&rows, |s| s.lpml.lpml, false);
    Ok(SelectionReport {
        rows,
        winner_dic,
        winner_lpml,
    })
}

/// Raw scores of one study replicate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub n_events: usize,
    /// Per-candidate DIC in candidate order (empty when excluded).
    pub dic: Vec<f64>,
    /// Per-candidate LPML in candidate order (empty when excluded).
    pub lpml: Vec<f64>,
    pub winner_dic: Option<usize>,
    pub winner_lpml: Option<usize>,
    pub error: Option<String>,
}

/// Aggregated study results for one candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRow {
    pub label: String,
    pub avg_dic: f64,
    pub avg_lpml: f64,
    pub dic_sel_pct: f64,
    pub lpml_sel_pct: f64,
    /// Median and quartiles of `dic(model) - dic(reference)` over replicates.
    pub dic_diff_median: f64,
    pub dic_diff_q1: f64,
    pub dic_diff_q3: f64,
    pub lpml_diff_median: f64,
    pub lpml_diff_q1: f64,
    pub lpml_diff_q3: f64,
}

/// A full replication study: per-candidate aggregates plus the raw
/// per-replicate scores for auditing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub reference_index: usize,
    pub n_replicates: usize,
    pub n_excluded: usize,
    pub replicates: Vec<ReplicateRecord>,
}

/// Linear-interpolation sample quantile of already-sorted data.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.len() == 1 {
        return sorted[0];
    }
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    (
        quantile_sorted(&sorted, 0.25),
        quantile_sorted(&sorted, 0.5),
        quantile_sorted(&sorted, 0.75),
    )
}

/// Generate `replicates` data sets from the preset, fit every candidate on
/// each, and aggregate winners and criterion differences against the
/// preset's reference model. Failed replicates are excluded and counted.
pub fn replicate_study(
    preset: &ScenarioPreset,
    replicates: usize,
    master_seed: u64,
    mcmc: &McmcConfig,
    method: SimMethod,
) -> Result<StudyReport> {
    if replicates == 0 {
        return Err(Error::Config("a study needs at least one replicate".into()));
    }
    let candidates = CandidateSet::new(preset.candidates.clone())?;
    let labels = preset.candidate_labels(&preset.realize(derive_seed2(master_seed, 0, 0))?.fields);
    let n_models = candidates.len();
    let (gx, gy) = preset.sim_grid;

    let records: Vec<ReplicateRecord> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let run = || -> Result<ReplicateRecord> {
                let data = preset.realize(derive_seed2(master_seed, rep as u64, 0))?;
                let pattern = simulate_nhpp(
                    &data.intensity,
                    &preset.region,
                    method,
                    derive_seed2(master_seed, rep as u64, 1),
                )?;
                let grid = QuadratureGrid::new(preset.region, gx, gy)?;

                let scores: Vec<(f64, f64)> = candidates
                    .models()
                    .par_iter()
                    .enumerate()
                    .map(|(m, model)| {
                        let mut cfg = mcmc.clone();
                        cfg.seed = derive_seed2(master_seed, rep as u64, 2 + m as u64);
                        let s = fit_and_score(
                            &pattern,
                            &data.fields,
                            model,
                            &preset.prior,
                            &cfg,
                            &grid,
                        )?;
                        Ok((s.dic.dic, s.lpml.lpml))
                    })
                    .collect::<Result<Vec<_>>>()?;

                let dic: Vec<f64> = scores.iter().map(|s| s.0).collect();
                let lpml: Vec<f64> = scores.iter().map(|s| s.1).collect();
                let winner_dic = argmin_with_ties(&dic, candidates.models(), true);
                let winner_lpml = argmin_with_ties(&lpml, candidates.models(), false);
                Ok(ReplicateRecord {
                    replicate: rep,
                    n_events: pattern.len(),
                    dic,
                    lpml,
                    winner_dic: Some(winner_dic),
                    winner_lpml: Some(winner_lpml),
                    error: None,
                })
            };
            run().unwrap_or_else(|e| ReplicateRecord {
                replicate: rep,
                n_events: 0,
                dic: Vec::new(),
                lpml: Vec::new(),
                winner_dic: None,
                winner_lpml: None,
                error: Some(e.to_string()),
            })
        })
        .collect();

    let included: Vec<&ReplicateRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let n_excluded = replicates - included.len();
    if included.is_empty() {
        return Err(Error::Config(
            "every replicate failed; no study aggregation possible".into(),
        ));
    }

    let n_inc = included.len() as f64;
    let reference = preset.dgm_index;
    let rows: Vec<StudyRow> = (0..n_models)
        .map(|m| {
            let avg_dic = included.iter().map(|r| r.dic[m]).sum::<f64>() / n_inc;
            let avg_lpml = included.iter().map(|r| r.lpml[m]).sum::<f64>() / n_inc;
            let dic_sel = included.iter().filter(|r| r.winner_dic == Some(m)).count() as f64;
            let lpml_sel = included.iter().filter(|r| r.winner_lpml == Some(m)).count() as f64;
            let dic_diffs: Vec<f64> = included
                .iter()
                .map(|r| r.dic[m] - r.dic[reference])
                .collect();
            let lpml_diffs: Vec<f64> = included
                .iter()
                .map(|r| r.lpml[m] - r.lpml[reference])
                .collect();
            let (dq1, dmed, dq3) = quartiles(&dic_diffs);
            let (lq1, lmed, lq3) = quartiles(&lpml_diffs);
            StudyRow {
                label: labels[m].clone(),
                avg_dic,
                avg_lpml,
                dic_sel_pct: 100.0 * dic_sel / n_inc,
                lpml_sel_pct: 100.0 * lpml_sel / n_inc,
                dic_diff_median: dmed,
                dic_diff_q1: dq1,
                dic_diff_q3: dq3,
                lpml_diff_median: lmed,
                lpml_diff_q1: lq1,
                lpml_diff_q3: lq3,
            }
        })
        .collect();

    Ok(StudyReport {
        rows,
        reference_index: reference,
        n_replicates: replicates,
        n_excluded,
        replicates: records,
    })
}

fn argmin_with_ties(scores: &[f64], specs: &[ModelSpec], smaller_is_better: bool) -> usize {
    let mut best = 0usize;
    for i in 1..scores.len() {
        let better = if smaller_is_better {
            scores[i] < scores[best]
        } else {
            scores[i] > scores[best]
        };
        let tie = scores[i] == scores[best] && prefer_on_tie(&specs[i], &specs[best]);
        if better || tie {
            best = i;
        }
    }
    best
}
