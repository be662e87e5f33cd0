//! The four simulation-study presets.
//!
//! Each preset bundles a generating intensity, the covariate list handed to
//! fitting, the ordered candidate-model table, and the study priors.
//! Presets with random covariates (scenarios 3 and 4) draw fresh fields per
//! realization from seeds derived off the replicate seed; scenario 4's
//! latent field stays out of the fitting covariates.

use serde::{Deserialize, Serialize};

use crate::covariate::{CovariateField, Raster};
use crate::error::{Error, Result};
use crate::geom::Region;
use crate::likelihood::{size_lex_subsets, ModelSpec};
use crate::mcmc::PriorSpec;
use crate::seed::derive_seed;
use crate::simulate::{simulate_grf, GrfSpec, IntensitySpec, IntensityTerm};

/// How a preset obtains its fitting covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gen", rename_all = "snake_case")]
pub enum CovariateGen {
    /// Deterministic analytic covariates.
    Fixed { fields: Vec<CovariateField> },
    /// Independent Gaussian random fields, one per covariate.
    Grf { spec: GrfSpec, count: usize },
    /// Cellwise i.i.d. U(0,1) rasters.
    UniformRaster { nx: usize, ny: usize, count: usize },
}

impl CovariateGen {
    fn count(&self) -> usize {
        match self {
            CovariateGen::Fixed { fields } => fields.len(),
            CovariateGen::Grf { count, .. } => *count,
            CovariateGen::UniformRaster { count, .. } => *count,
        }
    }
}

/// A realized replicate: concrete covariates and the generating intensity.
#[derive(Debug, Clone)]
pub struct ScenarioData {
    pub fields: Vec<CovariateField>,
    pub intensity: IntensitySpec,
}

/// A replication-study design: data-generating model, fitting covariates,
/// candidate table, and priors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPreset {
    pub id: u8,
    pub region: Region,
    pub lambda0: f64,
    pub covariates: CovariateGen,
    /// `(covariate index, coefficient)` terms of the generating intensity.
    pub gen_terms: Vec<(usize, f64)>,
    /// Latent log-intensity field, generated per replicate and never fitted.
    pub latent: Option<GrfSpec>,
    /// Candidate models in table order.
    pub candidates: Vec<ModelSpec>,
    /// Position of the data-generating model among the candidates.
    pub dgm_index: usize,
    pub prior: PriorSpec,
    /// Generation grid (also the default fitting grid).
    pub sim_grid: (usize, usize),
}

impl ScenarioPreset {
    /// A user-defined study design with the same invariants as the built-ins.
    #[allow(clippy::too_many_arguments)]
    pub fn custom(
        region: Region,
        lambda0: f64,
        covariates: CovariateGen,
        gen_terms: Vec<(usize, f64)>,
        latent: Option<GrfSpec>,
        candidates: Vec<ModelSpec>,
        dgm_index: usize,
        prior: PriorSpec,
        sim_grid: (usize, usize),
    ) -> Result<Self> {
        let preset = ScenarioPreset {
            id: 0,
            region,
            lambda0,
            covariates,
            gen_terms,
            latent,
            candidates,
            dgm_index,
            prior,
            sim_grid,
        };
        preset.validate()?;
        Ok(preset)
    }

    fn validate(&self) -> Result<()> {
        let p = self.covariates.count();
        if self.candidates.is_empty() {
            return Err(Error::Config("preset has no candidate models".into()));
        }
        if self.dgm_index >= self.candidates.len() {
            return Err(Error::Config("dgm_index out of range".into()));
        }
        for (i, c) in self.gen_terms.iter() {
            if *i >= p {
                return Err(Error::Config(format!(
                    "generating term uses covariate {i} but only {p} exist"
                )));
            }
            if !c.is_finite() {
                return Err(Error::Config("generating coefficient not finite".into()));
            }
        }
        for m in &self.candidates {
            if let Some(&max) = m.indices().last() {
                if max >= p {
                    return Err(Error::Config(format!(
                        "candidate uses covariate {max} but only {p} exist"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Draw the covariates for one replicate and assemble the generating
    /// intensity; deterministic given the seed.
    pub fn realize(&self, seed: u64) -> Result<ScenarioData> {
        let fields = match &self.covariates {
            CovariateGen::Fixed { fields } => fields.clone(),
            CovariateGen::Grf { spec, count } => (0..*count)
                .map(|i| {
                    let f = simulate_grf(spec, &self.region, derive_seed(seed, 10 + i as u64))?;
                    Ok(rename(f, format!("z{}", i + 1)))
                })
                .collect::<Result<Vec<_>>>()?,
            CovariateGen::UniformRaster { nx, ny, count } => (0..*count)
                .map(|i| {
                    use rand::prelude::*;
                    let mut rng =
                        rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 10 + i as u64));
                    let values: Vec<f64> = (0..nx * ny).map(|_| rng.random::<f64>()).collect();
                    let raster = Raster::new(*nx, *ny, self.region, values)?;
                    Ok(CovariateField::raster(format!("u{}", i + 1), raster))
                })
                .collect::<Result<Vec<_>>>()?,
        };

        let terms = self
            .gen_terms
            .iter()
            .map(|&(i, coef)| IntensityTerm {
                field: fields[i].clone(),
                coef,
            })
            .collect();
        let mut intensity = IntensitySpec::new(self.lambda0, terms)?;
        intensity.latent = self.latent;
        Ok(ScenarioData { fields, intensity })
    }

    /// Candidate labels in table order.
    pub fn candidate_labels(&self, fields: &[CovariateField]) -> Vec<String> {
        self.candidates.iter().map(|m| m.label(fields)).collect()
    }
}

fn rename(field: CovariateField, name: String) -> CovariateField {
    match field.as_raster() {
        Some(r) => CovariateField::raster(name, r.clone()),
        None => field,
    }
}

fn subsets_as_specs(p: usize) -> Vec<ModelSpec> {
    size_lex_subsets(p)
        .into_iter()
        .map(|s| ModelSpec::new(s, p).expect("valid enumeration"))
        .collect()
}

/// The four built-in study designs.
///
/// 1. `lambda(s) = 30 exp(2x + 0y + 1xy)`, candidates all 7 nonempty subsets
///    of (x, y, xy); the generating model is (x, xy).
/// 2. `lambda(s) = 50 exp(4x^2)`, candidates: (x^2), (x), (y), (x, y).
/// 3. `lambda(s) = exp(2 z1 + z2)` with four GRF covariates (mean 1,
///    variance 1, scale 1, nugget 0.2); 15 candidate subsets.
/// 4. `lambda(s) = exp(4 u1 + 4 u2 + W)` with three U(0,1) raster covariates
///    and an unobserved centered GRF `W`; 7 candidate subsets.
pub fn scenario_preset(id: u8) -> Result<ScenarioPreset> {
    let region = Region::unit_square();
    let sim_grid = (100usize, 100usize);
    let prior = PriorSpec::simulation();
    let preset = match id {
        1 => {
            let fields = vec![
                CovariateField::coord_x(),
                CovariateField::coord_y(),
                CovariateField::product(),
            ];
            let candidates = subsets_as_specs(3);
            ScenarioPreset {
                id,
                region,
                lambda0: 30.0,
                covariates: CovariateGen::Fixed { fields },
                gen_terms: vec![(0, 2.0), (2, 1.0)],
                latent: None,
                candidates,
                dgm_index: 4,
                prior,
                sim_grid,
            }
        }
        2 => {
            let fields = vec![
                CovariateField::square_x(),
                CovariateField::coord_x(),
                CovariateField::coord_y(),
            ];
            let candidates = vec![
                ModelSpec::new(vec![0], 3).unwrap(),
                ModelSpec::new(vec![1], 3).unwrap(),
                ModelSpec::new(vec![2], 3).unwrap(),
                ModelSpec::new(vec![1, 2], 3).unwrap(),
            ];
            ScenarioPreset {
                id,
                region,
                lambda0: 50.0,
                covariates: CovariateGen::Fixed { fields },
                gen_terms: vec![(0, 4.0)],
                latent: None,
                candidates,
                dgm_index: 0,
                prior,
                sim_grid,
            }
        }
        3 => {
            let grf = GrfSpec::new(1.0, 1.0, 1.0, 0.2, 100, 100)?;
            ScenarioPreset {
                id,
                region,
                lambda0: 1.0,
                covariates: CovariateGen::Grf {
                    spec: grf,
                    count: 4,
                },
                gen_terms: vec![(0, 2.0), (1, 1.0)],
                latent: None,
                candidates: subsets_as_specs(4),
                dgm_index: 4,
                prior,
                sim_grid,
            }
        }
        4 => {
            let latent = GrfSpec::new(0.0, 1.0, 1.0, 0.2, 100, 100)?;
            ScenarioPreset {
                id,
                region,
                lambda0: 1.0,
                covariates: CovariateGen::UniformRaster {
                    nx: 100,
                    ny: 100,
                    count: 3,
                },
                gen_terms: vec![(0, 4.0), (1, 4.0)],
                latent: Some(latent),
                candidates: subsets_as_specs(3),
                dgm_index: 3,
                prior,
                sim_grid,
            }
        }
        other => {
            return Err(Error::Config(format!(
                "unknown scenario preset {other}; valid presets are 1-4"
            )))
        }
    };
    preset.validate()?;
    Ok(preset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_nhpp, SimMethod};

    #[test]
    fn candidate_counts_match_tables() {
        assert_eq!(scenario_preset(1).unwrap().candidates.len(), 7);
        assert_eq!(scenario_preset(2).unwrap().candidates.len(), 4);
        assert_eq!(scenario_preset(3).unwrap().candidates.len(), 15);
        assert_eq!(scenario_preset(4).unwrap().candidates.len(), 7);
        assert!(scenario_preset(9).is_err());
        assert!(scenario_preset(0).is_err());
    }

    #[test]
    fn dgm_rows_are_the_generating_subsets() {
        let p1 = scenario_preset(1).unwrap();
        assert_eq!(p1.candidates[p1.dgm_index].indices(), &[0, 2]);
        let p2 = scenario_preset(2).unwrap();
        assert_eq!(p2.candidates[p2.dgm_index].indices(), &[0]);
        let p3 = scenario_preset(3).unwrap();
        assert_eq!(p3.candidates[p3.dgm_index].indices(), &[0, 1]);
        let p4 = scenario_preset(4).unwrap();
        assert_eq!(p4.candidates[p4.dgm_index].indices(), &[0, 1]);
    }

    #[test]
    fn scenario1_table_order() {
        let p = scenario_preset(1).unwrap();
        let order: Vec<&[usize]> = p.candidates.iter().map(|m| m.indices()).collect();
        let expect: Vec<Vec<usize>> = vec![
            vec![0],
            vec![1],
            vec![2],
            vec![0, 1],
            vec![0, 2],
            vec![1, 2],
            vec![0, 1, 2],
        ];
        assert_eq!(
            order,
            expect.iter().map(|v| v.as_slice()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn scenario2_expected_count() {
        // Mean count over 100 replicates within the CLT band around the
        // quadrature value of 50 * integral exp(4x^2).
        let preset = scenario_preset(2).unwrap();
        let data = preset.realize(0).unwrap();
        let reps = 100usize;
        let mut total = 0usize;
        for s in 0..reps {
            let pat = simulate_nhpp(
                &data.intensity,
                &preset.region,
                SimMethod::PerCell {
                    nx: preset.sim_grid.0,
                    ny: preset.sim_grid.1,
                },
                derive_seed(12, s as u64),
            )
            .unwrap();
            total += pat.len();
        }
        let mean = total as f64 / reps as f64;
        let target = 413.5;
        let bound = 3.0 * (target / reps as f64).sqrt();
        assert!(
            (mean - target).abs() < bound,
            "scenario-2 mean count {mean} outside {target} +/- {bound}"
        );
    }

    #[test]
    fn scenario4_excludes_latent_from_fitting() {
        let preset = scenario_preset(4).unwrap();
        let data = preset.realize(5).unwrap();
        assert_eq!(data.fields.len(), 3);
        assert!(data.intensity.latent.is_some());
        assert_eq!(data.intensity.terms.len(), 2);
    }

    #[test]
    fn realizations_are_deterministic_and_seed_sensitive() {
        let preset = scenario_preset(3).unwrap();
        let a = preset.realize(11).unwrap();
        let b = preset.realize(11).unwrap();
        let c = preset.realize(12).unwrap();
        assert_eq!(a.fields, b.fields);
        assert_ne!(a.fields, c.fields);
    }
}
