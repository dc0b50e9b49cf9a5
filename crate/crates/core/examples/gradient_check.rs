//! Compare backpropagated gradients with central differences on a small
//! subgraph with every loss term active.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subgraph_ssl::builder::build_training_subgraph;
use subgraph_ssl::io::{generate_synthetic, SyntheticSpec};
use subgraph_ssl::knn::compute_distances;
use subgraph_ssl::nn::{normalize_adjacency, GcnModel, ModelConfig};
use subgraph_ssl::trainer::{gradient_check, loss_and_gradients, ssl_instances};
use subgraph_ssl::{Metric, SslTask, SubgraphConfig};

fn main() -> subgraph_ssl::Result<()> {
    let spec = SyntheticSpec {
        classes: 3,
        per_class: 10,
        dim: 5,
        label_fraction: 0.3,
        ..SyntheticSpec::default()
    };
    let ds = generate_synthetic(&spec)?;
    let dm = compute_distances(ds.features(), Metric::Euclidean)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let batch = build_training_subgraph(
        &ds,
        &dm,
        &SubgraphConfig::new(1, 3, 3),
        &ds.unlabeled_indices(),
        &mut rng,
    )?;
    let adj = normalize_adjacency(&batch.graph);
    let instances = ssl_instances(
        &SslTask::ALL,
        batch.graph.node_features(),
        0.1,
        0.3,
        &mut rng,
    )?;
    let model = GcnModel::new(ModelConfig::new(5, 3, &SslTask::ALL).with_hidden(8), 2)?;
    let (losses, grads) = loss_and_gradients(&model, &batch, &adj, &instances, 0.01, 0.1)?;
    println!(
        "total {:.6} ce {:.6} entropy {:.6}",
        losses.total, losses.ce, losses.entropy
    );
    let objective = |m: &GcnModel| {
        loss_and_gradients(m, &batch, &adj, &instances, 0.01, 0.1).map(|(l, _)| l.total)
    };
    for (tensor, err) in gradient_check(&model, &grads, 1e-5, objective)? {
        println!("{tensor:<24} max relative error {err:.2e}");
    }
    Ok(())
}
