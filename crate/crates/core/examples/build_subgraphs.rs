//! One epoch of class-balanced signed k-NN training subgraphs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subgraph_ssl::builder::build_training_subgraph;
use subgraph_ssl::io::{generate_synthetic, SyntheticSpec};
use subgraph_ssl::knn::compute_distances;
use subgraph_ssl::{EpochSampler, Metric, SubgraphConfig};

fn main() -> subgraph_ssl::Result<()> {
    let spec = SyntheticSpec {
        label_fraction: 0.3,
        ..SyntheticSpec::default()
    };
    let ds = generate_synthetic(&spec)?;
    let dm = compute_distances(ds.features(), Metric::Euclidean)?;
    let cfg = SubgraphConfig::iemocap();
    let sampler = EpochSampler::new(ds.unlabeled_indices(), cfg.unlabeled_count);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    println!(
        "{} subgraphs per epoch of {} nodes",
        sampler.steps_per_epoch(),
        cfg.subgraph_size(spec.classes)
    );
    for chunk in sampler.epoch(&mut rng).into_iter().take(3) {
        let batch = build_training_subgraph(&ds, &dm, &cfg, &chunk, &mut rng)?;
        let (pos, neg) = batch.graph.edges().iter().fold((0, 0), |(p, n), e| {
            if e.weight > 0.0 {
                (p + 1, n)
            } else {
                (p, n + 1)
            }
        });
        println!(
            "nodes {} true labels per class {:?} edges +{pos} -{neg}",
            batch.node_count(),
            batch.true_label_counts(spec.classes)
        );
    }
    Ok(())
}
