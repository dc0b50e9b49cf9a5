//! Train on a synthetic mixture and classify held-out rows.

use subgraph_ssl::io::{generate_split, SyntheticSpec};
use subgraph_ssl::{Pipeline, RunSettings, SslTask, SubgraphConfig};

fn main() -> subgraph_ssl::Result<()> {
    let spec = SyntheticSpec {
        classes: 3,
        separation: 5.0,
        ..SyntheticSpec::default()
    };
    let (train, test) = generate_split(&spec, 50)?;
    let test = test.expect("held-out rows");

    let mut settings = RunSettings::new(spec.classes).with_seed(1);
    settings.subgraph = SubgraphConfig::new(spec.labeled_per_class(), 5, spec.classes);
    settings.train.tasks = vec![SslTask::Denoise];
    settings.train.epochs = 30;
    settings.train.hidden = 64;
    settings.train.affine_classifier = true;
    settings.inference.repeats = 10;

    let (pipeline, report) = Pipeline::fit(&train, None, &settings)?;
    println!(
        "trained {} epochs of {} subgraphs, {} pseudolabels",
        report.epochs.len(),
        report.steps_per_epoch,
        pipeline.pseudolabels.len()
    );
    let preds = pipeline.predict(test.features(), test.ids(), 7)?;
    for p in preds.iter().take(5) {
        println!("{} -> class {} {:.3?}", p.id, p.class, p.probabilities);
    }
    let metrics = pipeline.evaluate(&test, 7)?;
    println!(
        "accuracy {:.3}, unweighted {:.3}, mAP {:.3}",
        metrics.accuracy_overall,
        metrics.accuracy_unweighted,
        metrics.map.unwrap_or(f64::NAN)
    );
    Ok(())
}
