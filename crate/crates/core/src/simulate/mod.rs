//! NHPP data generation and the simulation-study presets.
//!
//! Two generators are provided: per-cell (a Poisson count in each grid cell
//! with the intensity frozen at the cell center, points placed uniformly in
//! the cell) and thinning against a constant dominating rate. The generating
//! intensity may include an unobserved Gaussian random field added to the
//! log-intensity; it is drawn per call and never handed to fitting.

mod grf;
mod scenario;

pub use grf::{simulate_grf, GrfSpec};
pub use scenario::{scenario_preset, CovariateGen, ScenarioData, ScenarioPreset};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::covariate::{covariate_at, CovariateField};
use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, QuadratureGrid, Region};
use crate::seed::derive_seed;

/// One covariate term of a generating intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityTerm {
    pub field: CovariateField,
    pub coef: f64,
}

/// A generating intensity `lambda(s) = lambda0 * exp(sum coef_j Z_j(s) + W(s))`
/// with an optional latent field `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySpec {
    pub lambda0: f64,
    pub terms: Vec<IntensityTerm>,
    /// Unobserved field added to the log-intensity during generation only.
    pub latent: Option<GrfSpec>,
}

impl IntensitySpec {
    pub fn new(lambda0: f64, terms: Vec<IntensityTerm>) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::Config(format!(
                "lambda0 must be positive and finite, got {lambda0}"
            )));
        }
        if terms.iter().any(|t| !t.coef.is_finite()) {
            return Err(Error::Config("intensity coefficient not finite".into()));
        }
        Ok(IntensitySpec {
            lambda0,
            terms,
            latent: None,
        })
    }

    pub fn with_latent(mut self, latent: GrfSpec) -> Self {
        self.latent = Some(latent);
        self
    }

    fn log_intensity_at(
        &self,
        region: &Region,
        s: Point,
        latent: Option<&CovariateField>,
    ) -> Result<f64> {
        let mut acc = self.lambda0.ln();
        for term in &self.terms {
            acc += term.coef * covariate_at(&term.field, region, s)?;
        }
        if let Some(w) = latent {
            acc += covariate_at(w, region, s)?;
        }
        Ok(acc)
    }
}

/// Point generation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SimMethod {
    /// Poisson count per grid cell, points uniform within the cell.
    PerCell { nx: usize, ny: usize },
    /// Homogeneous dominating process thinned by `lambda(s) / lambda_max`.
    Thinning,
}

/// Inflation applied to the probed maximum to get the dominating rate.
const THINNING_INFLATION: f64 = 1.2;
const THINNING_PROBE: usize = 200;

/// Generate one pattern; deterministic given `(spec, method, seed)`.
pub fn simulate_nhpp(
    spec: &IntensitySpec,
    region: &Region,
    method: SimMethod,
    seed: u64,
) -> Result<PointPattern> {
    let latent = match &spec.latent {
        Some(g) => Some(simulate_grf(g, region, derive_seed(seed, 1))?),
        None => None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 2));

    match method {
        SimMethod::PerCell { nx, ny } => {
            let grid = QuadratureGrid::new(*region, nx, ny)?;
            let area = grid.cell_area();
            let (dx, dy) = (grid.dx(), grid.dy());
            let mut points = Vec::new();
            for c in 0..grid.n_cells() {
                let center = grid.cell_center(c);
                let mu = spec
                    .log_intensity_at(region, center, latent.as_ref())?
                    .exp()
                    * area;
                if !mu.is_finite() {
                    return Err(Error::Numeric(format!(
                        "cell {c} has non-finite expected count"
                    )));
                }
                if mu <= 0.0 {
                    continue;
                }
                let count = Poisson::new(mu)
                    .map_err(|e| Error::Numeric(format!("Poisson({mu}): {e}")))?
                    .sample(&mut rng) as usize;
                let x0 = center.x - dx / 2.0;
                let y0 = center.y - dy / 2.0;
                for _ in 0..count {
                    let x = x0 + rng.random::<f64>() * dx;
                    let y = y0 + rng.random::<f64>() * dy;
                    points.push(Point::new(x, y));
                }
            }
            PointPattern::new(points, *region)
        }
        SimMethod::Thinning => {
            let probe = QuadratureGrid::new(*region, THINNING_PROBE, THINNING_PROBE)?;
            let mut max_rate = 0.0f64;
            for c in probe.centers() {
                let lam = spec.log_intensity_at(region, c, latent.as_ref())?.exp();
                max_rate = max_rate.max(lam);
            }
            let lambda_max = max_rate * THINNING_INFLATION;
            if lambda_max <= 0.0 {
                return Ok(PointPattern::empty(*region));
            }
            let total_mean = lambda_max * region.area();
            let n = Poisson::new(total_mean)
                .map_err(|e| Error::Numeric(format!("Poisson({total_mean}): {e}")))?
                .sample(&mut rng) as usize;
            let mut points = Vec::new();
            for _ in 0..n {
                let x = region.xmin + rng.random::<f64>() * region.width();
                let y = region.ymin + rng.random::<f64>() * region.height();
                let u: f64 = rng.random();
                let s = Point::new(x, y);
                let lam = spec.log_intensity_at(region, s, latent.as_ref())?.exp();
                if lam > lambda_max {
                    return Err(Error::Numeric(format!(
                        "intensity {lam} exceeds the dominating bound {lambda_max}; increase the inflation factor"
                    )));
                }
                if u < lam / lambda_max {
                    points.push(s);
                }
            }
            PointPattern::new(points, *region)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Region {
        Region::unit_square()
    }

    fn hpp_spec(lambda0: f64) -> IntensitySpec {
        IntensitySpec::new(lambda0, vec![]).unwrap()
    }

    #[test]
    fn near_zero_intensity_gives_empty_patterns() {
        // lambda = lambda0 * exp(-40) <= 1e-12 over the whole square.
        let spec = IntensitySpec::new(
            1.0,
            vec![IntensityTerm {
                field: CovariateField::coord_x(),
                coef: 0.0,
            }],
        )
        .unwrap();
        let tiny = IntensitySpec::new(1e-13, spec.terms.clone()).unwrap();
        for seed in 0..10 {
            let pc =
                simulate_nhpp(&tiny, &unit(), SimMethod::PerCell { nx: 10, ny: 10 }, seed).unwrap();
            assert_eq!(pc.len(), 0);
            let th = simulate_nhpp(&tiny, &unit(), SimMethod::Thinning, seed).unwrap();
            assert_eq!(th.len(), 0);
        }
    }

    #[test]
    fn hpp_mean_count_clt() {
        let spec = hpp_spec(100.0);
        let reps = 200usize;
        let mut total = 0usize;
        for s in 0..reps {
            total += simulate_nhpp(
                &spec,
                &unit(),
                SimMethod::PerCell { nx: 50, ny: 50 },
                s as u64,
            )
            .unwrap()
            .len();
        }
        let mean = total as f64 / reps as f64;
        let bound = 3.0 * (100.0f64 / reps as f64).sqrt();
        assert!(
            (mean - 100.0).abs() < bound,
            "mean count {mean} outside 100 +/- {bound}"
        );
    }

    #[test]
    fn thinning_and_per_cell_agree_on_scenario1_intensity() {
        // lambda(s) = 30 exp(2x + xy), expected count about 137.
        let spec = IntensitySpec::new(
            30.0,
            vec![
                IntensityTerm {
                    field: CovariateField::coord_x(),
                    coef: 2.0,
                },
                IntensityTerm {
                    field: CovariateField::product(),
                    coef: 1.0,
                },
            ],
        )
        .unwrap();
        let reps = 100usize;
        let mut sum_pc = 0usize;
        let mut sum_th = 0usize;
        for s in 0..reps {
            sum_pc += simulate_nhpp(
                &spec,
                &unit(),
                SimMethod::PerCell { nx: 100, ny: 100 },
                s as u64,
            )
            .unwrap()
            .len();
            sum_th += simulate_nhpp(&spec, &unit(), SimMethod::Thinning, 10_000 + s as u64)
                .unwrap()
                .len();
        }
        let mean_pc = sum_pc as f64 / reps as f64;
        let mean_th = sum_th as f64 / reps as f64;
        let joint = 3.0 * (2.0 * 137.2 / reps as f64).sqrt();
        assert!(
            (mean_pc - mean_th).abs() < joint,
            "per-cell {mean_pc} vs thinning {mean_th} (bound {joint})"
        );
    }

    #[test]
    fn deterministic_given_seed_and_method() {
        let spec = hpp_spec(50.0);
        for method in [SimMethod::PerCell { nx: 20, ny: 20 }, SimMethod::Thinning] {
            let a = simulate_nhpp(&spec, &unit(), method, 77).unwrap();
            let b = simulate_nhpp(&spec, &unit(), method, 77).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn latent_field_changes_generation_only_through_seed() {
        let latent = GrfSpec::new(0.0, 1.0, 1.0, 0.2, 50, 50).unwrap();
        let spec = hpp_spec(50.0).with_latent(latent);
        let a = simulate_nhpp(&spec, &unit(), SimMethod::PerCell { nx: 50, ny: 50 }, 3).unwrap();
        let b = simulate_nhpp(&spec, &unit(), SimMethod::PerCell { nx: 50, ny: 50 }, 3).unwrap();
        assert_eq!(a, b);
        // The latent field inflates counts: E[exp(W)] > 1 for a centered field.
        let reps = 60usize;
        let mut with_latent = 0usize;
        let mut without = 0usize;
        for s in 0..reps {
            with_latent += simulate_nhpp(
                &spec,
                &unit(),
                SimMethod::PerCell { nx: 50, ny: 50 },
                s as u64,
            )
            .unwrap()
            .len();
            without += simulate_nhpp(
                &hpp_spec(50.0),
                &unit(),
                SimMethod::PerCell { nx: 50, ny: 50 },
                s as u64,
            )
            .unwrap()
            .len();
        }
        assert!(with_latent > without);
    }
}
