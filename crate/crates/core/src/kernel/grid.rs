use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of lattice sites a grid may carry by default.
pub const DEFAULT_SITE_CAP: usize = 4096;

/// Regular lattice of cell centres in a `dim`-dimensional box
/// `[-extent, extent]^dim`.
///
/// Sites are ordered row-major with the first axis slowest. Unused
/// coordinates of `positions` (beyond `dim`) are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct SpatialGrid {
    dim: usize,
    n_per_axis: usize,
    extent: f64,
    positions: Vec<[f64; 3]>,
    cell_weight: f64,
}

/// Serialized form of a grid; positions are rebuilt on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub n_per_axis: usize,
    #[serde(serialize_with = "crate::numeric::f17::serialize")]
    pub extent: f64,
}

impl TryFrom<GridSpec> for SpatialGrid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        build_grid(s.dim, s.n_per_axis, s.extent)
    }
}

impl From<SpatialGrid> for GridSpec {
    fn from(g: SpatialGrid) -> Self {
        g.spec()
    }
}

pub fn build_grid(dim: usize, n_per_axis: usize, extent: f64) -> Result<SpatialGrid> {
    build_grid_capped(dim, n_per_axis, extent, DEFAULT_SITE_CAP)
}

pub fn build_grid_capped(
    dim: usize,
    n_per_axis: usize,
    extent: f64,
    cap: usize,
) -> Result<SpatialGrid> {
    if !(1..=3).contains(&dim) {
        return Err(Error::validation(
            "grid.dim",
            format!("must be 1, 2 or 3, got {dim}"),
        ));
    }
    if n_per_axis < 2 {
        return Err(Error::validation(
            "grid.n_per_axis",
            format!("must be at least 2, got {n_per_axis}"),
        ));
    }
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(Error::validation(
            "grid.extent",
            format!("must be positive, got {extent}"),
        ));
    }
    let total = n_per_axis
        .checked_pow(dim as u32)
        .filter(|&t| t <= cap)
        .ok_or(Error::Sizing {
            what: "spatial grid",
            requested: n_per_axis.saturating_pow(dim as u32),
            cap,
            hint: "use fewer sites per axis or a lower dimension",
        })?;

    let spacing = 2.0 * extent / n_per_axis as f64;
    let coord = |i: usize| -extent + spacing * (i as f64 + 0.5);
    let mut positions = Vec::with_capacity(total);
    for idx in 0..total {
        let mut p = [0.0; 3];
        let mut rem = idx;
        for axis in (0..dim).rev() {
            p[axis] = coord(rem % n_per_axis);
            rem /= n_per_axis;
        }
        positions.push(p);
    }
    Ok(SpatialGrid {
        dim,
        n_per_axis,
        extent,
        positions,
        cell_weight: spacing.powi(dim as i32),
    })
}

impl SpatialGrid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_per_axis(&self) -> usize {
        self.n_per_axis
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn position(&self, site: usize) -> [f64; 3] {
        self.positions[site]
    }

    /// Quadrature weight of one cell, `spacing^dim`.
    pub fn cell_weight(&self) -> f64 {
        self.cell_weight
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.n_per_axis as f64
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (p, q) = (self.positions[a], self.positions[b]);
        ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
    }

    /// Per-axis lattice indices of a site.
    pub fn axis_indices(&self, site: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut rem = site;
        for axis in (0..self.dim).rev() {
            out[axis] = rem % self.n_per_axis;
            rem /= self.n_per_axis;
        }
        out
    }

    pub fn site_index(&self, axis_indices: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.n_per_axis + axis_indices[axis])
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            dim: self.dim,
            n_per_axis: self.n_per_axis,
            extent: self.extent,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_dimensional_lattice_centres() {
        let g = build_grid(1, 8, 4.0).unwrap();
        assert_eq!(g.len(), 8);
        let xs: Vec<f64> = g.positions().iter().map(|p| p[0]).collect();
        let want = [-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5];
        for (x, w) in xs.iter().zip(want) {
            assert!((x - w).abs() < 1e-15);
        }
        assert_eq!(g.cell_weight(), 1.0);
    }

    #[test]
    fn three_dimensional_lattice() {
        let g = build_grid(3, 5, 2.5).unwrap();
        assert_eq!(g.len(), 125);
        assert!((g.cell_weight() - 1.0).abs() < 1e-15);
        let idx = g.site_index([1, 2, 3]);
        assert_eq!(g.axis_indices(idx), [1, 2, 3]);
        assert_eq!(g.position(idx), [-1.0, 0.0, 1.0]);
    }

    #[test]
    fn site_cap_is_inclusive() {
        assert_eq!(build_grid(2, 64, 1.0).unwrap().len(), 4096);
        match build_grid(2, 65, 1.0) {
            Err(Error::Sizing { requested, cap, .. }) => {
                assert_eq!(requested, 65 * 65);
                assert_eq!(cap, 4096);
            }
            other => panic!("expected sizing error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_grid(0, 4, 1.0).is_err());
        assert!(build_grid(4, 4, 1.0).is_err());
        assert!(build_grid(1, 1, 1.0).is_err());
        assert!(build_grid(1, 4, 0.0).is_err());
        assert!(build_grid(1, 4, -1.0).is_err());
    }

    #[test]
    fn serde_round_trip_rebuilds_positions() {
        let g = build_grid(2, 3, 1.5).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(
            s,
            r#"{"dim":2,"n_per_axis":3,"extent":1.5000000000000000e0}"#
        );
        let back: SpatialGrid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
