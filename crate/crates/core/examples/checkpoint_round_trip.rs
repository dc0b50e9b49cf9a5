//! Save a trained model, load it back and restore a pipeline from it.

use subgraph_ssl::io::{generate_synthetic, parse_binary, to_binary, SyntheticSpec};
use subgraph_ssl::{Checkpoint, Pipeline, RunSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SyntheticSpec::default();
    let ds = generate_synthetic(&spec)?;
    let bytes = to_binary(&ds);
    assert_eq!(to_binary(&parse_binary(&bytes)?), bytes);
    println!("dataset: {} bytes, round trip identical", bytes.len());

    let mut settings = RunSettings::new(spec.classes).with_seed(2);
    settings.train.epochs = 3;
    settings.train.hidden = 16;
    let (pipeline, _) = Pipeline::fit(&ds, None, &settings)?;

    let dir = std::env::temp_dir().join("subgraph-ssl-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("checkpoint.bin");
    pipeline.checkpoint().save(&path)?;
    let loaded = Checkpoint::load(&path)?;
    println!(
        "checkpoint: {} bytes, identical after reload: {}",
        loaded.to_bytes().len(),
        loaded.to_bytes() == pipeline.checkpoint().to_bytes()
    );

    let restored = Pipeline::restore(loaded, &ds, Some(pipeline.pseudolabels.clone()), &settings)?;
    let rows = ds.features().slice(ndarray::s![..5, ..]).to_owned();
    let ids = &ds.ids()[..5];
    let same = pipeline.predict(&rows, ids, 1)? == restored.predict(&rows, ids, 1)?;
    println!("restored pipeline predicts identically: {same}");
    Ok(())
}
