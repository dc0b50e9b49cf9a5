//! Accuracy, average precision, MAD and silhouette on hand-made inputs.

use ndarray::array;
use subgraph_ssl::eval::{
    accuracy, average_precision, mad, mean_average_precision, silhouette, AccuracyMode,
};

fn main() -> subgraph_ssl::Result<()> {
    let preds = [0, 0, 1, 1, 1];
    let truths = [0, 1, 1, 1, 1];
    println!(
        "accuracy {:.3} unweighted {:.3}",
        accuracy(&preds, &truths, AccuracyMode::Overall)?,
        accuracy(&preds, &truths, AccuracyMode::Unweighted)?
    );
    let ap = average_precision(array![0.9, 0.8, 0.7].view(), &[true, false, true])?;
    println!("AP {ap:.4}");
    let scores = array![[0.8, 0.2], [0.4, 0.6], [0.3, 0.7], [0.6, 0.4]];
    let (per_class, map) = mean_average_precision(&scores, &[0, 1, 1, 0])?;
    println!("per-class AP {per_class:?} mAP {map:.3}");
    let emb = array![[1.0, 0.0], [0.9, 0.1], [0.0, 1.0], [0.1, 0.9]];
    println!(
        "MAD {:.4} silhouette {:.4}",
        mad(&emb)?,
        silhouette(&emb, &[0, 0, 1, 1])?
    );
    Ok(())
}
