use ndarray::Array2;

use crate::graph::SignedGraph;

/// `D^-1/2 (A + I) D^-1/2` where `D` sums absolute values of `A + I`, so
/// negative edges keep their sign while degrees stay positive.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency(pub Array2<f64>);

impl NormalizedAdjacency {
    pub fn matrix(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }
}

pub fn normalize_adjacency(g: &SignedGraph) -> NormalizedAdjacency {
    let mut a = g.adjacency();
    let n = a.nrows();
    for i in 0..n {
        a[[i, i]] += 1.0;
    }
    let degree: Vec<f64> = a
        .outer_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .collect();
    for ((i, j), v) in a.indexed_iter_mut() {
        if *v != 0.0 {
            *v /= (degree[i] * degree[j]).sqrt();
        }
    }
    NormalizedAdjacency(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Edge, EdgeSet};
    use ndarray::array;
    use proptest::prelude::*;

    fn pair(weight: f64) -> SignedGraph {
        SignedGraph::new(
            vec![Edge {
                source: 0,
                target: 1,
                weight,
            }],
            Array2::zeros((2, 1)),
        )
        .unwrap()
    }

    #[test]
    fn single_node_is_identity() {
        let g = SignedGraph::new(vec![], Array2::zeros((1, 1))).unwrap();
        assert_eq!(normalize_adjacency(&g).0, array![[1.0]]);
    }

    #[test]
    fn positive_and_negative_pairs() {
        assert_eq!(
            normalize_adjacency(&pair(1.0)).0,
            array![[0.5, 0.5], [0.5, 0.5]]
        );
        assert_eq!(
            normalize_adjacency(&pair(-1.0)).0,
            array![[0.5, -0.5], [-0.5, 0.5]]
        );
    }

    proptest! {
        #[test]
        fn symmetric_bounded_and_matches_dense_formula(
            pairs in proptest::collection::vec((0usize..9, 0usize..9, any::<bool>()), 0..30)
        ) {
            let mut set = EdgeSet::default();
            for (i, j, pos) in pairs {
                set.add(i, j, if pos { 1.0 } else { -1.0 });
            }
            let g = SignedGraph::new(set.into_edges(), Array2::zeros((9, 1))).unwrap();
            let norm = normalize_adjacency(&g).0;
            let a = g.adjacency();
            let deg: Vec<f64> = (0..9)
                .map(|i| 1.0 + (0..9).map(|j| a[[i, j]].abs()).sum::<f64>())
                .collect();
            for i in 0..9 {
                for j in 0..9 {
                    prop_assert!((norm[[i, j]] - norm[[j, i]]).abs() < 1e-12);
                    prop_assert!(norm[[i, j]].abs() <= 1.0);
                    let hat = a[[i, j]] + if i == j { 1.0 } else { 0.0 };
                    let expected = hat / (deg[i] * deg[j]).sqrt();
                    prop_assert!((norm[[i, j]] - expected).abs() < 1e-12);
                }
                // absolute row mass weighted back by degrees equals the degree
                let mass: f64 = (0..9).map(|j| norm[[i, j]].abs() * (deg[j] / deg[i]).sqrt()).sum();
                prop_assert!((mass - 1.0).abs() < 1e-12);
            }
        }
    }
}
