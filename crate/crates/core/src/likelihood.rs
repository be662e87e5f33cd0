//! Log-linear intensity regression and the point-process log-likelihood.
//!
//! The intensity is `lambda(s) = lambda0 * exp(beta . Z(s))` over an active
//! covariate subset, and the log-likelihood of an observed pattern is
//! `sum_i log lambda(s_i) - integral of lambda over the region`, the integral
//! taken by the midpoint rule on a uniform grid. [`Design`] caches the design
//! rows at the event locations and at the quadrature cell centers once, so
//! repeated evaluations (one per MCMC iteration) cost one dot product and one
//! `exp` per cell.

use serde::{Deserialize, Serialize};

use crate::covariate::CovariateField;
use crate::error::{Error, Result};
use crate::geom::{Point, PointPattern, QuadratureGrid, Region};

/// Log-intensities below this underflow to zero in `exp`.
const LOG_UNDERFLOW: f64 = -745.0;

/// An active covariate subset; the empty subset is the homogeneous model.
///
/// Indices are zero-based positions into the full covariate list. The
/// baseline `lambda0` is always present and not selectable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    indices: Vec<usize>,
}

impl ModelSpec {
    /// Build a spec from covariate indices; duplicates are rejected and the
    /// indices are kept sorted.
    pub fn new(mut indices: Vec<usize>, n_fields: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("duplicate covariate index in model".into()));
        }
        if let Some(&max) = indices.last() {
            if max >= n_fields {
                return Err(Error::Config(format!(
                    "covariate index {max} out of range for {n_fields} fields"
                )));
            }
        }
        Ok(ModelSpec { indices })
    }

    pub fn homogeneous() -> Self {
        ModelSpec {
            indices: Vec::new(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of active covariates.
    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.indices.is_empty()
    }

    /// Human-readable label from the covariate names, e.g. `x+xy`.
    pub fn label(&self, fields: &[CovariateField]) -> String {
        if self.indices.is_empty() {
            return "homogeneous".to_string();
        }
        self.indices
            .iter()
            .map(|&i| fields[i].name())
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Parameter names: `lambda0` then `beta_<j>` with one-based covariate indices.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = vec!["lambda0".to_string()];
        names.extend(self.indices.iter().map(|&i| format!("beta_{}", i + 1)));
        names
    }
}

/// All nonempty subsets of `{0, .., p-1}` ordered by size, then
/// lexicographically: the order the candidate tables use.
pub fn size_lex_subsets(p: usize) -> Vec<Vec<usize>> {
    let mut subsets: Vec<Vec<usize>> = (1u32..(1u32 << p))
        .map(|mask| (0..p).filter(|j| mask & (1 << j) != 0).collect())
        .collect();
    subsets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    subsets
}

/// Model parameters: baseline intensity and regression coefficients for the
/// active covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theta {
    pub lambda0: f64,
    pub beta: Vec<f64>,
}

impl Theta {
    pub fn new(lambda0: f64, beta: Vec<f64>) -> Result<Self> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(Error::Config(format!(
                "lambda0 must be positive, got {lambda0}"
            )));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Config("beta contains a non-finite value".into()));
        }
        Ok(Theta { lambda0, beta })
    }

    fn check_dim(&self, spec: &ModelSpec) -> Result<()> {
        if self.beta.len() != spec.dim() {
            return Err(Error::Config(format!(
                "theta has {} coefficients but the model has {} active covariates",
                self.beta.len(),
                spec.dim()
            )));
        }
        Ok(())
    }
}

/// Cached design rows for one (model, pattern, grid) triple.
///
/// Rows are stored flat: `event_rows[i*p..(i+1)*p]` is the active-covariate
/// row at event `i`, and likewise for quadrature cell centers.
#[derive(Debug, Clone)]
pub struct Design {
    spec: ModelSpec,
    n_events: usize,
    n_cells: usize,
    event_rows: Vec<f64>,
    cell_rows: Vec<f64>,
    cell_area: f64,
}

impl Design {
    pub fn new(
        spec: &ModelSpec,
        fields: &[CovariateField],
        pattern: &PointPattern,
        grid: &QuadratureGrid,
    ) -> Result<Self> {
        if pattern.region() != grid.region() {
            return Err(Error::Config(
                "pattern and grid regions do not match".into(),
            ));
        }
        if let Some(&max) = spec.indices().last() {
            if max >= fields.len() {
                return Err(Error::Config(format!(
                    "model uses covariate index {max} but only {} fields are given",
                    fields.len()
                )));
            }
        }
        let region = pattern.region();
        let active: Vec<&CovariateField> = spec.indices().iter().map(|&i| &fields[i]).collect();
        for f in &active {
            f.check_region(&region)?;
        }
        let p = active.len();

        let mut event_rows = Vec::with_capacity(pattern.len() * p);
        for s in pattern.points() {
            for f in &active {
                event_rows.push(crate::covariate::covariate_at(f, &region, *s)?);
            }
        }
        let mut cell_rows = Vec::with_capacity(grid.n_cells() * p);
        for c in grid.centers() {
            for f in &active {
                cell_rows.push(crate::covariate::covariate_at(f, &region, c)?);
            }
        }
        Ok(Design {
            spec: spec.clone(),
            n_events: pattern.len(),
            n_cells: grid.n_cells(),
            event_rows,
            cell_rows,
            cell_area: grid.cell_area(),
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n_events(&self) -> usize {
        self.n_events
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_area
    }

    pub fn event_row(&self, i: usize) -> &[f64] {
        let p = self.spec.dim();
        &self.event_rows[i * p..(i + 1) * p]
    }

    pub fn cell_row(&self, c: usize) -> &[f64] {
        let p = self.spec.dim();
        &self.cell_rows[c * p..(c + 1) * p]
    }

    /// Per-component sums of the event rows, `S_j = sum_i Z_j(s_i)`.
    pub fn event_row_sums(&self) -> Vec<f64> {
        let p = self.spec.dim();
        let mut sums = vec![0.0; p];
        for i in 0..self.n_events {
            let row = self.event_row(i);
            for j in 0..p {
                sums[j] += row[j];
            }
        }
        sums
    }

    /// `log lambda(s_i) = log lambda0 + beta . z_i` at event `i`.
    pub fn log_intensity_at_event(&self, theta: &Theta, i: usize) -> f64 {
        theta.lambda0.ln() + dot(&theta.beta, self.event_row(i))
    }

    /// `C(beta) = integral of exp(beta . Z(s)) ds` by the midpoint rule;
    /// the integrated intensity with `lambda0 = 1`.
    pub fn unit_integral(&self, beta: &[f64]) -> f64 {
        let p = self.spec.dim();
        if p == 0 {
            return self.cell_area * self.n_cells as f64;
        }
        let mut total = 0.0;
        for c in 0..self.n_cells {
            total += dot(beta, self.cell_row(c)).exp();
        }
        total * self.cell_area
    }

    /// Midpoint-rule integral of the intensity over the region.
    pub fn integrated_intensity(&self, theta: &Theta) -> Result<f64> {
        theta.check_dim(&self.spec)?;
        Ok(theta.lambda0 * self.unit_integral(&theta.beta))
    }

    /// Log-likelihood of the pattern under `theta`.
    pub fn log_likelihood(&self, theta: &Theta) -> Result<f64> {
        theta.check_dim(&self.spec)?;
        let mut event_sum = 0.0;
        for i in 0..self.n_events {
            let ll = self.log_intensity_at_event(theta, i);
            if !ll.is_finite() || ll < LOG_UNDERFLOW {
                return Err(Error::IntensityUnderflow { event: i });
            }
            event_sum += ll;
        }
        Ok(event_sum - theta.lambda0 * self.unit_integral(&theta.beta))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log lambda(s) = log lambda0 + sum_j beta_j Z_j(s)` over the active covariates.
pub fn log_intensity(
    theta: &Theta,
    spec: &ModelSpec,
    fields: &[CovariateField],
    region: &Region,
    s: Point,
) -> Result<f64> {
    theta.check_dim(spec)?;
    let mut acc = theta.lambda0.ln();
    for (j, &idx) in spec.indices().iter().enumerate() {
        acc += theta.beta[j] * crate::covariate::covariate_at(&fields[idx], region, s)?;
    }
    Ok(acc)
}

/// Midpoint-rule estimate of the integrated intensity over the grid's region.
pub fn integrated_intensity(
    theta: &Theta,
    spec: &ModelSpec,
    fields: &[CovariateField],
    grid: &QuadratureGrid,
) -> Result<f64> {
    let pattern = PointPattern::empty(grid.region());
    Design::new(spec, fields, &pattern, grid)?.integrated_intensity(theta)
}

/// NHPP log-likelihood: event-sum minus integrated intensity.
pub fn log_likelihood(
    theta: &Theta,
    spec: &ModelSpec,
    fields: &[CovariateField],
    pattern: &PointPattern,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Design::new(spec, fields, pattern, grid)?.log_likelihood(theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit() -> Region {
        Region::unit_square()
    }

    fn xy_fields() -> Vec<CovariateField> {
        vec![
            CovariateField::coord_x(),
            CovariateField::coord_y(),
            CovariateField::product(),
        ]
    }

    /// Composite Gauss-Legendre (5-point) quadrature of f on [0, 1]:
    /// the independent 1-D oracle for the exp-family integrands.
    fn gl5(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
        // 5-point Gauss-Legendre nodes/weights on [-1, 1].
        const NODES: [f64; 5] = [
            -0.906179845938664,
            -0.5384693101056831,
            0.0,
            0.5384693101056831,
            0.906179845938664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.23692688505618908,
            0.47862867049936647,
            0.5688888888888889,
            0.47862867049936647,
            0.23692688505618908,
        ];
        let h = 1.0 / panels as f64;
        let mut total = 0.0;
        for k in 0..panels {
            let a = k as f64 * h;
            let mid = a + h / 2.0;
            for (t, w) in NODES.iter().zip(WEIGHTS) {
                total += w * f(mid + t * h / 2.0);
            }
        }
        total * h / 2.0
    }

    #[test]
    fn oracle_matches_closed_form() {
        // Sanity-check the oracle itself on a closed form.
        let v = gl5(|x| (2.0 * x).exp(), 64);
        assert_relative_eq!(
            v,
            (2.0f64.exp().powi(1) * 1.0f64.exp().powi(0) - 1.0) / 2.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            v,
            (std::f64::consts::E.powi(2) - 1.0) / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn log_intensity_homogeneous() {
        let theta = Theta::new(2.0, vec![]).unwrap();
        let spec = ModelSpec::homogeneous();
        let v = log_intensity(&theta, &spec, &[], &unit(), Point::new(0.3, 0.7)).unwrap();
        assert_relative_eq!(v, 2.0f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn log_intensity_single_covariate() {
        let theta = Theta::new(1.0, vec![2.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 3).unwrap();
        let v = log_intensity(&theta, &spec, &xy_fields(), &unit(), Point::new(0.5, 0.9)).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn log_intensity_scenario1_corner() {
        // lambda0=30, beta=(2,1) on (x, xy) evaluated at (1,1): log 30 + 3.
        let theta = Theta::new(30.0, vec![2.0, 1.0]).unwrap();
        let spec = ModelSpec::new(vec![0, 2], 3).unwrap();
        let v = log_intensity(&theta, &spec, &xy_fields(), &unit(), Point::new(1.0, 1.0)).unwrap();
        assert_relative_eq!(v, 30.0f64.ln() + 3.0, max_relative = 1e-14);
        assert!((v - 6.4012).abs() < 1e-4);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let theta = Theta::new(1.0, vec![2.0, 3.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 3).unwrap();
        assert!(matches!(
            log_intensity(&theta, &spec, &xy_fields(), &unit(), Point::new(0.5, 0.5)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn integral_constant_intensity_exact() {
        let theta = Theta::new(2.0, vec![]).unwrap();
        let spec = ModelSpec::homogeneous();
        for &(nx, ny) in &[(1usize, 1usize), (7, 3), (100, 100)] {
            let grid = QuadratureGrid::new(unit(), nx, ny).unwrap();
            let v = integrated_intensity(&theta, &spec, &[], &grid).unwrap();
            assert_relative_eq!(v, 2.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn integral_scenario2_integrand() {
        // lambda(s) = 50 exp(4 x^2): reference from the 1-D oracle.
        let oracle = 50.0 * gl5(|x| (4.0 * x * x).exp(), 64);
        let theta = Theta::new(50.0, vec![4.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 1).unwrap();
        let fields = vec![CovariateField::square_x()];
        let grid = QuadratureGrid::new(unit(), 200, 200).unwrap();
        let v = integrated_intensity(&theta, &spec, &fields, &grid).unwrap();
        assert_relative_eq!(v, oracle, max_relative = 1e-3);
        // Frozen oracle value for reference: 50 * 8.226313882753615.
        assert_relative_eq!(oracle, 411.3156941376808, max_relative = 1e-12);
    }

    #[test]
    fn integral_exp2x_closed_form() {
        let closed = (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        let theta = Theta::new(1.0, vec![2.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 1).unwrap();
        let fields = vec![CovariateField::coord_x()];
        let grid = QuadratureGrid::new(unit(), 200, 200).unwrap();
        let v = integrated_intensity(&theta, &spec, &fields, &grid).unwrap();
        assert_relative_eq!(v, closed, max_relative = 1e-4);
        assert!((closed - 3.19453).abs() < 1e-5);
    }

    #[test]
    fn quadrature_error_decreases_as_grid_refines() {
        let oracle = 50.0 * gl5(|x| (4.0 * x * x).exp(), 64);
        let theta = Theta::new(50.0, vec![4.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 1).unwrap();
        let fields = vec![CovariateField::square_x()];
        let mut prev_err = f64::INFINITY;
        for n in [25usize, 50, 100, 200, 400] {
            let grid = QuadratureGrid::new(unit(), n, n).unwrap();
            let v = integrated_intensity(&theta, &spec, &fields, &grid).unwrap();
            let err = ((v - oracle) / oracle).abs();
            assert!(
                err < prev_err,
                "error did not decrease at n={n}: {err} vs {prev_err}"
            );
            if n == 200 {
                assert!(err < 1e-3);
            }
            prev_err = err;
        }
    }

    #[test]
    fn log_likelihood_hpp_single_point() {
        let r = unit();
        let pattern = PointPattern::new(vec![Point::new(0.5, 0.5)], r).unwrap();
        let grid = QuadratureGrid::new(r, 50, 50).unwrap();
        let theta = Theta::new(2.0, vec![]).unwrap();
        let v = log_likelihood(&theta, &ModelSpec::homogeneous(), &[], &pattern, &grid).unwrap();
        assert_relative_eq!(v, 2.0f64.ln() - 2.0, max_relative = 1e-12);
        assert!((v + 1.30685).abs() < 1e-5);
    }

    #[test]
    fn log_likelihood_empty_pattern() {
        let r = unit();
        let pattern = PointPattern::empty(r);
        let grid = QuadratureGrid::new(r, 10, 10).unwrap();
        let theta = Theta::new(1.0, vec![]).unwrap();
        let v = log_likelihood(&theta, &ModelSpec::homogeneous(), &[], &pattern, &grid).unwrap();
        assert_relative_eq!(v, -1.0, max_relative = 1e-13);
    }

    #[test]
    fn log_likelihood_exp2x_point_at_corner() {
        let r = unit();
        let pattern = PointPattern::new(vec![Point::new(1.0, 0.0)], r).unwrap();
        let grid = QuadratureGrid::new(r, 200, 200).unwrap();
        let theta = Theta::new(1.0, vec![2.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 1).unwrap();
        let fields = vec![CovariateField::coord_x()];
        let v = log_likelihood(&theta, &spec, &fields, &pattern, &grid).unwrap();
        let closed = 2.0 - (std::f64::consts::E.powi(2) - 1.0) / 2.0;
        assert_relative_eq!(v, closed, max_relative = 1e-3);
        assert!((closed + 1.19453).abs() < 1e-5);
    }

    #[test]
    fn underflow_reports_event_index() {
        let r = unit();
        let pattern =
            PointPattern::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0)], r).unwrap();
        let grid = QuadratureGrid::new(r, 10, 10).unwrap();
        // beta so negative that the corner event at x=1 underflows.
        let theta = Theta::new(1.0, vec![-800.0]).unwrap();
        let spec = ModelSpec::new(vec![0], 1).unwrap();
        let fields = vec![CovariateField::coord_x()];
        match log_likelihood(&theta, &spec, &fields, &pattern, &grid) {
            Err(Error::IntensityUnderflow { event }) => assert_eq!(event, 1),
            other => panic!("expected underflow error, got {other:?}"),
        }
    }

    #[test]
    fn model_spec_validation() {
        assert!(ModelSpec::new(vec![0, 0], 3).is_err());
        assert!(ModelSpec::new(vec![3], 3).is_err());
        let m = ModelSpec::new(vec![2, 0], 3).unwrap();
        assert_eq!(m.indices(), &[0, 2]);
        assert_eq!(m.param_names(), vec!["lambda0", "beta_1", "beta_3"]);
    }

    #[test]
    fn labels() {
        let fields = xy_fields();
        assert_eq!(ModelSpec::homogeneous().label(&fields), "homogeneous");
        assert_eq!(
            ModelSpec::new(vec![0, 2], 3).unwrap().label(&fields),
            "x+xy"
        );
    }

    proptest! {
        // Shift-rescale invariance: Z -> Z + c with lambda0 -> lambda0 e^{-beta c}
        // leaves the likelihood unchanged.
        #[test]
        fn shift_rescale_invariance(beta in -2.0f64..2.0, c in -1.0f64..1.0, seed in 0u64..50) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r = unit();
            let pts: Vec<Point> = (0..20)
                .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let pattern = PointPattern::new(pts, r).unwrap();
            let grid = QuadratureGrid::new(r, 40, 40).unwrap();

            // Shifted covariate x + c as a raster evaluated at the same nodes.
            let base = CovariateField::coord_x();
            let shifted_values: Vec<f64> = grid.centers().map(|p| p.x + c).collect();
            // The raster agrees with x + c at cell centers but is piecewise
            // constant, so compare through the raster for both routes.
            let base_values: Vec<f64> = grid.centers().map(|p| p.x).collect();
            let _ = base;
            let f_base = CovariateField::raster(
                "z",
                crate::covariate::Raster::new(40, 40, r, base_values).unwrap(),
            );
            let f_shift = CovariateField::raster(
                "zs",
                crate::covariate::Raster::new(40, 40, r, shifted_values).unwrap(),
            );
            let spec = ModelSpec::new(vec![0], 1).unwrap();
            let lambda0 = 3.0;
            let t1 = Theta::new(lambda0, vec![beta]).unwrap();
            let t2 = Theta::new(lambda0 * (-beta * c).exp(), vec![beta]).unwrap();
            let l1 = log_likelihood(&t1, &spec, &[f_base], &pattern, &grid).unwrap();
            let l2 = log_likelihood(&t2, &spec, &[f_shift], &pattern, &grid).unwrap();
            prop_assert!((l1 - l2).abs() <= 1e-12 * l1.abs().max(1.0));
        }

        // The event-sum term splits over arbitrary sub-patterns.
        #[test]
        fn additive_over_split_patterns(split in 0usize..=30, seed in 0u64..20) {
            use rand::prelude::*;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r = unit();
            let pts: Vec<Point> = (0..30)
                .map(|_| Point::new(rng.random::<f64>(), rng.random::<f64>()))
                .collect();
            let grid = QuadratureGrid::new(r, 20, 20).unwrap();
            let spec = ModelSpec::new(vec![0, 1], 2).unwrap();
            let fields = vec![CovariateField::coord_x(), CovariateField::coord_y()];
            let theta = Theta::new(5.0, vec![1.0, -0.5]).unwrap();

            let full = PointPattern::new(pts.clone(), r).unwrap();
            let left = PointPattern::new(pts[..split].to_vec(), r).unwrap();
            let right = PointPattern::new(pts[split..].to_vec(), r).unwrap();
            let integral = integrated_intensity(&theta, &spec, &fields, &grid).unwrap();
            let l_full = log_likelihood(&theta, &spec, &fields, &full, &grid).unwrap();
            let l_left = log_likelihood(&theta, &spec, &fields, &left, &grid).unwrap();
            let l_right = log_likelihood(&theta, &spec, &fields, &right, &grid).unwrap();
            // Event sums add; the integral is counted once in each piece.
            prop_assert!((l_full - (l_left + l_right + integral)).abs() < 1e-9);
        }
    }
}
