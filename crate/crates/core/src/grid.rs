//! Radial grids on a truncated exterior interval and scalar fields on them.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};

const MIN_NODES: usize = 16;
const MAX_GRADING_RATIO: f64 = 1.05;

/// How the node spacing varies across the interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Grading {
    Uniform,
    /// Consecutive spacings grow by a constant ratio (finest near the inner
    /// boundary, where profiles vary fastest).
    Geometric { ratio: f64 },
    /// Arbitrary strictly increasing nodes supplied by the caller.
    Explicit,
}

/// Discretization of `[r0, r_max]` by strictly increasing nodes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    grading: Grading,
}

impl RadialGrid {
    pub fn uniform(r0: f64, r_max: f64, n_nodes: usize) -> Result<Self> {
        check_extent(r0, r_max, n_nodes)?;
        let h = (r_max - r0) / (n_nodes - 1) as f64;
        let mut nodes: Vec<f64> = (0..n_nodes).map(|i| r0 + i as f64 * h).collect();
        nodes[n_nodes - 1] = r_max;
        Ok(Self {
            nodes,
            grading: Grading::Uniform,
        })
    }

    /// Geometric grid with the given spacing ratio in `[1, 1.05]`.
    pub fn geometric(r0: f64, r_max: f64, n_nodes: usize, ratio: f64) -> Result<Self> {
        check_extent(r0, r_max, n_nodes)?;
        if !(1.0..=MAX_GRADING_RATIO).contains(&ratio) {
            return Err(Error::InvalidGrid(format!(
                "grading ratio {ratio} outside [1, {MAX_GRADING_RATIO}]"
            )));
        }
        if ratio == 1.0 {
            return Self::uniform(r0, r_max, n_nodes);
        }
        let m = (n_nodes - 1) as f64;
        let h0 = (r_max - r0) * (ratio - 1.0) / (ratio.powf(m) - 1.0);
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut r = r0;
        let mut h = h0;
        nodes.push(r0);
        for _ in 1..n_nodes {
            r += h;
            h *= ratio;
            nodes.push(r);
        }
        nodes[n_nodes - 1] = r_max;
        Ok(Self {
            nodes,
            grading: Grading::Geometric { ratio },
        })
    }

    /// Geometric grid chosen so the first spacing equals `h0`; the ratio is
    /// solved for and must land in `[1, 1.05]`.
    pub fn geometric_from_first_spacing(
        r0: f64,
        r_max: f64,
        n_nodes: usize,
        h0: f64,
    ) -> Result<Self> {
        check_extent(r0, r_max, n_nodes)?;
        let length = r_max - r0;
        let m = (n_nodes - 1) as f64;
        if !(h0 > 0.0) {
            return Err(Error::InvalidGrid("first spacing must be positive".into()));
        }
        if h0 * m < length {
            // Total extent as a function of the ratio is strictly increasing;
            // bisect for the ratio that reaches r_max.
            let extent = |q: f64| h0 * (q.powf(m) - 1.0) / (q - 1.0);
            if extent(MAX_GRADING_RATIO) < length {
                return Err(Error::InvalidGrid(format!(
                    "first spacing {h0} too small: needs grading ratio above {MAX_GRADING_RATIO}"
                )));
            }
            let (mut lo, mut hi) = (1.0 + 1e-12, MAX_GRADING_RATIO);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if extent(mid) < length {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Self::geometric(r0, r_max, n_nodes, 0.5 * (lo + hi))
        } else if (h0 * m - length).abs() <= 1e-9 * length {
            Self::uniform(r0, r_max, n_nodes)
        } else {
            Err(Error::InvalidGrid(format!(
                "first spacing {h0} too large for {n_nodes} nodes over [{r0}, {r_max}]"
            )))
        }
    }

    /// Wrap explicit nodes. They must be strictly increasing with at least
    /// [`MIN_NODES`] entries.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if !nodes.iter().all(|r| r.is_finite()) {
            return Err(Error::InvalidGrid("nodes must be finite".into()));
        }
        if !nodes.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidGrid("nodes must be strictly increasing".into()));
        }
        Ok(Self {
            nodes,
            grading: Grading::Explicit,
        })
    }

    /// Every other node, keeping both endpoints. The result is the exact 2x
    /// coarsening used by refinement studies.
    pub fn coarsen(&self) -> Result<Self> {
        let n = self.nodes.len();
        if n % 2 == 0 {
            return Err(Error::InvalidGrid(
                "coarsening needs an odd node count so both endpoints survive".into(),
            ));
        }
        Self::from_nodes(self.nodes.iter().copied().step_by(2).collect())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r0(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn min_spacing(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

fn check_extent(r0: f64, r_max: f64, n_nodes: usize) -> Result<()> {
    if !(r0.is_finite() && r_max.is_finite() && r_max > r0) {
        return Err(Error::InvalidGrid(format!(
            "need finite r_max > r0, got [{r0}, {r_max}]"
        )));
    }
    if n_nodes < MIN_NODES {
        return Err(Error::InvalidGrid(format!(
            "need at least {MIN_NODES} nodes, got {n_nodes}"
        )));
    }
    Ok(())
}

/// A scalar field sampled on the nodes of a [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "profile length {} does not match grid length {}",
                values.len(),
                grid.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidGrid("profile values must be finite".into()));
        }
        Ok(Self { grid, values })
    }

    /// Build from a function of r.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_hits_endpoints() {
        let g = RadialGrid::uniform(1.0, 60.0, 100).unwrap();
        assert_eq!(g.r0(), 1.0);
        assert_eq!(g.r_max(), 60.0);
        assert_eq!(g.len(), 100);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn geometric_grid_has_constant_ratio() {
        let g = RadialGrid::geometric(1.0, 60.0, 200, 1.02).unwrap();
        let h: Vec<f64> = g.nodes().windows(2).map(|w| w[1] - w[0]).collect();
        for w in h.windows(2) {
            assert!((w[1] / w[0] - 1.02).abs() < 1e-9);
        }
        assert!((g.r_max() - 60.0).abs() < 1e-12);
    }

    #[test]
    fn geometric_from_first_spacing_matches_request() {
        let g = RadialGrid::geometric_from_first_spacing(1.0, 60.0, 2000, 4e-4).unwrap();
        let h0 = g.nodes()[1] - g.nodes()[0];
        assert!((h0 - 4e-4).abs() < 1e-7, "h0 = {h0}");
        match g.grading() {
            Grading::Geometric { ratio } => assert!(ratio > 1.0 && ratio <= 1.05),
            other => panic!("expected geometric grading, got {other:?}"),
        }
    }

    #[test]
    fn rejects_small_and_inverted_grids() {
        assert!(RadialGrid::uniform(1.0, 60.0, 8).is_err());
        assert!(RadialGrid::uniform(2.0, 1.0, 100).is_err());
        assert!(RadialGrid::geometric(1.0, 60.0, 100, 1.2).is_err());
    }

    #[test]
    fn coarsen_keeps_endpoints() {
        let g = RadialGrid::uniform(1.0, 2.0, 33).unwrap();
        let c = g.coarsen().unwrap();
        assert_eq!(c.len(), 17);
        assert_eq!(c.r0(), g.r0());
        assert_eq!(c.r_max(), g.r_max());
    }

    #[test]
    fn profile_validates_length_and_finiteness() {
        let g = Arc::new(RadialGrid::uniform(1.0, 2.0, 16).unwrap());
        assert!(Profile::new(g.clone(), vec![0.0; 15]).is_err());
        let mut vals = vec![0.0; 16];
        vals[3] = f64::NAN;
        assert!(Profile::new(g.clone(), vals).is_err());
        assert!(Profile::from_fn(g, |r| r * r).is_ok());
    }
}
