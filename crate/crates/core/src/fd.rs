//! Finite-difference stencils and quadrature on (possibly graded) radial grids.

use crate::grid::RadialGrid;

/// Fornberg weights for the `m`-th derivative at `z` from the nodes `x`.
///
/// Returns one row of weights per derivative order `0..=m`. The nodes may be
/// arbitrarily spaced; accuracy is `len(x) - m` on smooth data.
pub fn fornberg_weights(z: f64, x: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    assert!(n > m, "need more nodes than the derivative order");
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// `m`-th derivative of grid samples using sliding stencils of `width` nodes.
///
/// Interior points use centered windows, points near the ends fall back to
/// one-sided windows of the same width, so the formal order `width - m` is
/// uniform across the grid.
pub fn derivative(grid: &RadialGrid, values: &[f64], m: usize, width: usize) -> Vec<f64> {
    let nodes = grid.nodes();
    let n = nodes.len();
    assert_eq!(values.len(), n);
    assert!(width > m && width <= n);
    let half = width / 2;
    let mut out = vec![0.0; n];
    for i in 0..n {
        let lo = i.saturating_sub(half).min(n - width);
        let xs = &nodes[lo..lo + width];
        let w = fornberg_weights(nodes[i], xs, m);
        out[i] = w[m]
            .iter()
            .zip(&values[lo..lo + width])
            .map(|(wk, vk)| wk * vk)
            .sum();
    }
    out
}

/// Trapezoid rule over the whole grid.
pub fn trapezoid(grid: &RadialGrid, values: &[f64]) -> f64 {
    let nodes = grid.nodes();
    assert_eq!(values.len(), nodes.len());
    let mut acc = 0.0;
    for i in 1..nodes.len() {
        acc += 0.5 * (values[i] + values[i - 1]) * (nodes[i] - nodes[i - 1]);
    }
    acc
}

/// Running trapezoid integral from the left endpoint: `out[i] = ∫_{r0}^{r_i}`.
pub fn cumtrapz(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    assert_eq!(values.len(), nodes.len());
    let mut out = vec![0.0; nodes.len()];
    for i in 1..nodes.len() {
        out[i] = out[i - 1] + 0.5 * (values[i] + values[i - 1]) * (nodes[i] - nodes[i - 1]);
    }
    out
}

/// Running trapezoid integral from the right endpoint: `out[i] = ∫_{r_i}^{r_max}`.
pub fn cumtrapz_from_right(grid: &RadialGrid, values: &[f64]) -> Vec<f64> {
    let nodes = grid.nodes();
    assert_eq!(values.len(), nodes.len());
    let n = nodes.len();
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * (values[i] + values[i + 1]) * (nodes[i + 1] - nodes[i]);
    }
    out
}
