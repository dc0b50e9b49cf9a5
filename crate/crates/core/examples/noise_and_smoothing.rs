//! Accuracy under Gaussian feature noise and per-layer MAD of a trained
//! model.

use subgraph_ssl::eval::{mad_per_layer, noise_robustness};
use subgraph_ssl::io::{generate_split, SyntheticSpec};
use subgraph_ssl::{Pipeline, RunSettings, SslTask, SubgraphConfig};

fn main() -> subgraph_ssl::Result<()> {
    let spec = SyntheticSpec {
        classes: 3,
        separation: 5.0,
        ..SyntheticSpec::default()
    };
    let (train, test) = generate_split(&spec, 40)?;
    let test = test.expect("held-out rows");
    let mut settings = RunSettings::new(spec.classes).with_seed(3);
    settings.subgraph = SubgraphConfig::new(spec.labeled_per_class(), 5, spec.classes);
    settings.train.tasks = SslTask::ALL.to_vec();
    settings.train.epochs = 20;
    settings.train.hidden = 64;
    settings.train.affine_classifier = true;
    settings.inference.repeats = 10;
    let (pipeline, _) = Pipeline::fit(&train, None, &settings)?;

    for level in noise_robustness(&pipeline, &test, &[0.0, 0.5, 1.0, 2.0], 3)? {
        println!(
            "sigma {:.1} accuracy {:.3} drop {:.3}",
            level.sigma, level.accuracy, level.drop
        );
    }
    let mad = mad_per_layer(
        &pipeline.model,
        &pipeline.train_data,
        &pipeline.distances,
        &settings.subgraph,
        10,
    )?;
    println!("MAD per layer {mad:.4?}");
    Ok(())
}
