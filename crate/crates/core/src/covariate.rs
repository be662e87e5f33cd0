//! Spatial covariates: analytic surfaces and gridded rasters.
//!
//! A covariate is a scalar field `Z_j(s)` evaluated at event locations and at
//! quadrature nodes. Rasters use nearest-cell lookup (piecewise constant),
//! matching pixel-incidence covariates; ties on interior cell edges resolve
//! to the higher-index cell, the same rule the quadrature grid uses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point, QuadratureGrid, Region};

/// Closed-form covariate surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalyticKind {
    /// `Z(s) = x`
    CoordX,
    /// `Z(s) = y`
    CoordY,
    /// `Z(s) = x * y`
    Product,
    /// `Z(s) = x^2`
    SquareX,
    /// `Z(s) = ||s - (cx, cy)||`
    DistanceTo { cx: f64, cy: f64 },
}

impl AnalyticKind {
    fn eval(&self, s: Point) -> f64 {
        match *self {
            AnalyticKind::CoordX => s.x,
            AnalyticKind::CoordY => s.y,
            AnalyticKind::Product => s.x * s.y,
            AnalyticKind::SquareX => s.x * s.x,
            AnalyticKind::DistanceTo { cx, cy } => s.dist(Point::new(cx, cy)),
        }
    }
}

/// A gridded covariate with one value per cell, row-major from the
/// minimum-y row upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    nx: usize,
    ny: usize,
    region: Region,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(nx: usize, ny: usize, region: Region, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "raster dimensions must be >= 1 (got {nx} x {ny})"
            )));
        }
        if values.len() != nx * ny {
            return Err(Error::Config(format!(
                "raster needs {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("raster value {i} is not finite")));
        }
        Ok(Raster {
            nx,
            ny,
            region,
            values,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of the cell containing `s` (nearest-cell rule).
    pub fn value_at(&self, s: Point) -> Result<f64> {
        self.region.check_contains(s)?;
        let grid = QuadratureGrid::new(self.region, self.nx, self.ny)?;
        let idx = grid.cell_index(s).expect("containment checked");
        Ok(self.values[idx])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum FieldKind {
    Analytic(AnalyticKind),
    Raster(Raster),
}

/// A named spatial covariate `Z_j(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateField {
    name: String,
    #[serde(flatten)]
    kind: FieldKind,
}

impl CovariateField {
    pub fn analytic(name: impl Into<String>, kind: AnalyticKind) -> Self {
        CovariateField {
            name: name.into(),
            kind: FieldKind::Analytic(kind),
        }
    }

    pub fn coord_x() -> Self {
        Self::analytic("x", AnalyticKind::CoordX)
    }

    pub fn coord_y() -> Self {
        Self::analytic("y", AnalyticKind::CoordY)
    }

    pub fn product() -> Self {
        Self::analytic("xy", AnalyticKind::Product)
    }

    pub fn square_x() -> Self {
        Self::analytic("x2", AnalyticKind::SquareX)
    }

    pub fn distance_to(name: impl Into<String>, cx: f64, cy: f64) -> Self {
        Self::analytic(name, AnalyticKind::DistanceTo { cx, cy })
    }

    pub fn raster(name: impl Into<String>, raster: Raster) -> Self {
        CovariateField {
            name: name.into(),
            kind: FieldKind::Raster(raster),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The raster backing this field, if any.
    pub fn as_raster(&self) -> Option<&Raster> {
        match &self.kind {
            FieldKind::Raster(r) => Some(r),
            FieldKind::Analytic(_) => None,
        }
    }

    /// Check the field can be evaluated anywhere in `region`; rasters must
    /// cover exactly that region.
    pub fn check_region(&self, region: &Region) -> Result<()> {
        if let FieldKind::Raster(r) = &self.kind {
            if r.region != *region {
                return Err(Error::Config(format!(
                    "raster covariate '{}' region does not match the analysis region",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

/// Evaluate `Z(s)` for a point inside `region`.
pub fn covariate_at(field: &CovariateField, region: &Region, s: Point) -> Result<f64> {
    region.check_contains(s)?;
    field.check_region(region)?;
    match &field.kind {
        FieldKind::Analytic(kind) => Ok(kind.eval(s)),
        FieldKind::Raster(raster) => raster.value_at(s),
    }
}

/// Evaluate `(Z_1(s), ..., Z_p(s))` in field order.
pub fn design_row(fields: &[CovariateField], region: &Region, s: Point) -> Result<Vec<f64>> {
    fields.iter().map(|f| covariate_at(f, region, s)).collect()
}
