//! Observation windows, point patterns, and quadrature grids.
//!
//! All analysis happens on an axis-aligned rectangle. A [`QuadratureGrid`]
//! partitions the rectangle into `nx * ny` equal cells whose centers serve
//! as midpoint-rule quadrature nodes; the same cell geometry backs raster
//! covariate lookup and the counting process used by the partition oracle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A location in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A bounded rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Region {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        if !(xmax > xmin && ymax > ymin)
            || !(xmin.is_finite() && xmax.is_finite() && ymin.is_finite() && ymax.is_finite())
        {
            return Err(Error::Config(format!(
                "invalid region: [{xmin}, {xmax}] x [{ymin}, {ymax}]"
            )));
        }
        Ok(Region {
            xmin,
            xmax,
            ymin,
            ymax,
        })
    }

    pub fn unit_square() -> Self {
        Region {
            xmin: 0.0,
            xmax: 1.0,
            ymin: 0.0,
            ymax: 1.0,
        }
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    /// Boundary-inclusive containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub(crate) fn check_contains(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::PointOutsideRegion {
                x: p.x,
                y: p.y,
                xmin: self.xmin,
                xmax: self.xmax,
                ymin: self.ymin,
                ymax: self.ymax,
            })
        }
    }
}

/// An observed realization of a spatial point process in a region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointPattern {
    points: Vec<Point>,
    region: Region,
}

impl PointPattern {
    /// Build a pattern, checking every point lies in the region (boundary-inclusive).
    pub fn new(points: Vec<Point>, region: Region) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !region.contains(*p) {
                return Err(Error::Config(format!(
                    "point {i} at ({}, {}) lies outside the pattern region",
                    p.x, p.y
                )));
            }
        }
        Ok(PointPattern { points, region })
    }

    pub fn empty(region: Region) -> Self {
        PointPattern {
            points: Vec::new(),
            region,
        }
    }

    /// Number of events `k`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn region(&self) -> Region {
        self.region
    }
}

/// A uniform `nx * ny` partition of a region into equal-area cells.
///
/// Cells are indexed row-major from the minimum-y row upward: cell `i`
/// has column `i % nx` and row `i / nx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid {
    region: Region,
    nx: usize,
    ny: usize,
}

impl QuadratureGrid {
    pub fn new(region: Region, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::Config(format!(
                "grid dimensions must be >= 1 (got {nx} x {ny})"
            )));
        }
        Ok(QuadratureGrid { region, nx, ny })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Uniform cell area `|A_i| = area(region) / (nx * ny)`.
    pub fn cell_area(&self) -> f64 {
        self.region.area() / (self.nx as f64 * self.ny as f64)
    }

    pub fn dx(&self) -> f64 {
        self.region.width() / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        self.region.height() / self.ny as f64
    }

    /// Center of cell `index` (row-major from the minimum-y row).
    pub fn cell_center(&self, index: usize) -> Point {
        debug_assert!(index < self.n_cells());
        let ix = index % self.nx;
        let iy = index / self.nx;
        Point {
            x: self.region.xmin + (ix as f64 + 0.5) * self.dx(),
            y: self.region.ymin + (iy as f64 + 0.5) * self.dy(),
        }
    }

    /// Iterate over all cell centers in index order.
    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.n_cells()).map(move |i| self.cell_center(i))
    }

    /// Index of the cell containing `p`, or `None` if `p` is outside the region.
    ///
    /// Points exactly on an interior cell edge belong to the higher-index cell;
    /// points on the region's max edges belong to the last cell in that direction.
    pub fn cell_index(&self, p: Point) -> Option<usize> {
        if !self.region.contains(p) {
            return None;
        }
        let ix = (((p.x - self.region.xmin) / self.dx()) as usize).min(self.nx - 1);
        let iy = (((p.y - self.region.ymin) / self.dy()) as usize).min(self.ny - 1);
        Some(iy * self.nx + ix)
    }
}

/// Per-cell event counts `N_Y(A_i)`, row-major; the counts sum to `k`.
pub fn count_in_cells(pattern: &PointPattern, grid: &QuadratureGrid) -> Result<Vec<u64>> {
    if pattern.region() != grid.region() {
        return Err(Error::Config(
            "pattern and grid regions do not match".into(),
        ));
    }
    let mut counts = vec![0u64; grid.n_cells()];
    for p in pattern.points() {
        // Containment was checked at pattern construction.
        let idx = grid
            .cell_index(*p)
            .expect("pattern point inside its own region");
        counts[idx] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn region_validates() {
        assert!(Region::new(0.0, 1.0, 0.0, 1.0).is_ok());
        assert!(Region::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(Region::new(0.0, 1.0, 2.0, 2.0).is_err());
        assert!(Region::new(0.0, f64::INFINITY, 0.0, 1.0).is_err());
    }

    #[test]
    fn area_and_containment() {
        let r = Region::new(0.0, 2.0, 1.0, 4.0).unwrap();
        assert_eq!(r.area(), 6.0);
        assert!(r.contains(Point::new(0.0, 1.0)));
        assert!(r.contains(Point::new(2.0, 4.0)));
        assert!(!r.contains(Point::new(2.1, 1.0)));
    }

    #[test]
    fn pattern_rejects_outside_points() {
        let r = Region::unit_square();
        let err = PointPattern::new(vec![Point::new(1.5, 0.5)], r);
        assert!(err.is_err());
    }

    #[test]
    fn single_cell_count() {
        let r = Region::unit_square();
        let pat = PointPattern::new(vec![Point::new(0.5, 0.5)], r).unwrap();
        let grid = QuadratureGrid::new(r, 1, 1).unwrap();
        assert_eq!(count_in_cells(&pat, &grid).unwrap(), vec![1]);
    }

    #[test]
    fn empty_pattern_counts_are_zero() {
        let r = Region::unit_square();
        let pat = PointPattern::empty(r);
        let grid = QuadratureGrid::new(r, 4, 4).unwrap();
        assert_eq!(count_in_cells(&pat, &grid).unwrap(), vec![0; 16]);
    }

    #[test]
    fn lower_left_quadrant_counts() {
        // Three points in the lower-left quadrant of a 2x2 grid: cell 0 gets all three.
        let r = Region::unit_square();
        let pat = PointPattern::new(
            vec![
                Point::new(0.1, 0.2),
                Point::new(0.3, 0.1),
                Point::new(0.45, 0.45),
            ],
            r,
        )
        .unwrap();
        let grid = QuadratureGrid::new(r, 2, 2).unwrap();
        assert_eq!(count_in_cells(&pat, &grid).unwrap(), vec![3, 0, 0, 0]);
    }

    #[test]
    fn counts_reject_region_mismatch() {
        let pat = PointPattern::empty(Region::unit_square());
        let grid = QuadratureGrid::new(Region::new(0.0, 2.0, 0.0, 2.0).unwrap(), 2, 2).unwrap();
        assert!(matches!(count_in_cells(&pat, &grid), Err(Error::Config(_))));
    }

    #[test]
    fn boundary_ties_go_to_higher_index_cell() {
        let r = Region::unit_square();
        let grid = QuadratureGrid::new(r, 2, 2).unwrap();
        // On the interior vertical edge: belongs to column 1.
        assert_eq!(grid.cell_index(Point::new(0.5, 0.25)), Some(1));
        // On the interior horizontal edge: belongs to row 1.
        assert_eq!(grid.cell_index(Point::new(0.25, 0.5)), Some(2));
        // Region max corner clamps to the last cell.
        assert_eq!(grid.cell_index(Point::new(1.0, 1.0)), Some(3));
        assert_eq!(grid.cell_index(Point::new(1.1, 0.5)), None);
    }

    #[test]
    fn cell_areas_sum_to_region_area() {
        let r = Region::new(-1.0, 2.5, 0.3, 1.9).unwrap();
        for &(nx, ny) in &[(1usize, 1usize), (3, 7), (13, 5)] {
            let grid = QuadratureGrid::new(r, nx, ny).unwrap();
            let total = grid.cell_area() * grid.n_cells() as f64;
            assert!((total - r.area()).abs() <= 1e-12 * r.area());
        }
    }

    proptest! {
        // Partition completeness: counts always sum to k.
        #[test]
        fn counts_sum_to_k(
            pts in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 0..200),
            nx in 1usize..12,
            ny in 1usize..12,
        ) {
            let r = Region::unit_square();
            let pattern = PointPattern::new(
                pts.iter().map(|&(x, y)| Point::new(x, y)).collect(),
                r,
            ).unwrap();
            let grid = QuadratureGrid::new(r, nx, ny).unwrap();
            let counts = count_in_cells(&pattern, &grid).unwrap();
            prop_assert_eq!(counts.iter().sum::<u64>() as usize, pattern.len());
        }

        // Every point maps into exactly the cell whose bounds contain it.
        #[test]
        fn cell_index_matches_center_cell(x in 0.0f64..=1.0, y in 0.0f64..=1.0, nx in 1usize..9, ny in 1usize..9) {
            let grid = QuadratureGrid::new(Region::unit_square(), nx, ny).unwrap();
            let idx = grid.cell_index(Point::new(x, y)).unwrap();
            let c = grid.cell_center(idx);
            prop_assert!((x - c.x).abs() <= grid.dx() / 2.0 + 1e-12);
            prop_assert!((y - c.y).abs() <= grid.dy() / 2.0 + 1e-12);
        }
    }
}
