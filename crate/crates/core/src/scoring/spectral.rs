use super::ScoringError;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy)]
pub struct SpectralOptions {
    /// Relative change of the eigenvalue estimate that stops the iteration.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        SpectralOptions {
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

/// Largest adjacency eigenvalue of `graph` with node `removed` (if any)
/// deleted, by power iteration on `A + I`.
///
/// The unit shift keeps the dominant eigenvalue strictly largest in modulus
/// on bipartite graphs. The estimate is the Rayleigh quotient.
pub fn spectral_radius(
    graph: &Graph,
    removed: Option<usize>,
    opts: SpectralOptions,
) -> Result<f64, ScoringError> {
    let n = graph.node_count();
    let alive = |i: usize| Some(i) != removed;
    let mut x: Vec<f64> = (0..n).map(|i| if alive(i) { 1.0 } else { 0.0 }).collect();
    let norm0 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm0 == 0.0 {
        return Ok(0.0);
    }
    x.iter_mut().for_each(|v| *v /= norm0);
    let mut y = vec![0.0; n];
    let mut previous = f64::NAN;
    for _ in 0..opts.max_iterations {
        for i in 0..n {
            y[i] = if alive(i) {
                x[i] + graph
                    .neighbors(i)
                    .iter()
                    .filter(|&&j| alive(j))
                    .map(|&j| x[j])
                    .sum::<f64>()
            } else {
                0.0
            };
        }
        // x is unit norm, so x.y is the Rayleigh quotient of A + I
        let estimate = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - 1.0;
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (estimate - previous).abs() <= opts.tolerance * estimate.abs().max(1.0) {
            return Ok(estimate);
        }
        previous = estimate;
    }
    Err(ScoringError::NoConvergence {
        iterations: opts.max_iterations,
    })
}

/// Drop of the spectral radius when node `i` is removed.
pub fn score_lrsr(graph: &Graph, i: usize, opts: SpectralOptions) -> Result<f64, ScoringError> {
    let full = spectral_radius(graph, None, opts)?;
    let without = spectral_radius(graph, Some(i), opts)?;
    Ok(full - without)
}

/// Spectral drops for every node. Nodes whose power iteration fails fall
/// back to their degree; the number of fallbacks is returned alongside.
pub fn lrsr_scores(graph: &Graph, opts: SpectralOptions) -> (Vec<f64>, usize) {
    let full = spectral_radius(graph, None, opts);
    let mut fallbacks = 0;
    let scores = (0..graph.node_count())
        .map(|i| {
            match (&full, spectral_radius(graph, Some(i), opts)) {
                (Ok(full), Ok(without)) => full - without,
                _ => {
                    fallbacks += 1;
                    graph.degree(i) as f64
                }
            }
        })
        .collect();
    (scores, fallbacks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn dense_top_eigenvalue(graph: &Graph, removed: Option<usize>) -> f64 {
        let n = graph.node_count();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (u, v) in graph.edges() {
            if Some(u) != removed && Some(v) != removed {
                m[(u, v)] = 1.0;
                m[(v, u)] = 1.0;
            }
        }
        m.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::MIN, f64::max)
    }

    #[test]
    fn star_center_beats_leaf() {
        let g = Graph::from_edges(6, (1..6).map(|i| (0, i))).unwrap();
        let opts = SpectralOptions::default();
        let center = score_lrsr(&g, 0, opts).unwrap();
        let leaf = score_lrsr(&g, 1, opts).unwrap();
        assert!(center > leaf);
        assert!((center - 5f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn triangle_drop_is_one() {
        let g = Graph::from_edges(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        for i in 0..3 {
            let s = score_lrsr(&g, i, SpectralOptions::default()).unwrap();
            assert!((s - 1.0).abs() < 1e-7, "{s}");
        }
    }

    #[test]
    fn matches_dense_eigensolver_on_random_graphs() {
        for trial in 0..20 {
            let g = crate::graph::generate_erdos_renyi(8, 0.45, trial).unwrap();
            for i in 0..8 {
                let dense = dense_top_eigenvalue(&g, None) - dense_top_eigenvalue(&g, Some(i));
                let power = score_lrsr(&g, i, SpectralOptions::default()).unwrap();
                assert!((dense - power).abs() < 1e-6, "trial {trial} node {i}: {dense} vs {power}");
                assert!(power >= -1e-9);
            }
        }
    }

    #[test]
    fn bipartite_graph_converges() {
        // 4-cycle has eigenvalues 2, 0, 0, -2
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let r = spectral_radius(&g, None, SpectralOptions::default()).unwrap();
        assert!((r - 2.0).abs() < 1e-7);
    }

    #[test]
    fn non_convergence_reported_and_falls_back() {
        let g = crate::graph::generate_barabasi_albert(60, 2, 0).unwrap();
        let opts = SpectralOptions {
            tolerance: 0.0,
            max_iterations: 3,
        };
        assert!(matches!(
            spectral_radius(&g, None, opts),
            Err(ScoringError::NoConvergence { .. })
        ));
        let (scores, fallbacks) = lrsr_scores(&g, opts);
        assert_eq!(fallbacks, 60);
        assert_eq!(scores[0], g.degree(0) as f64);
    }
}
