//! The three self-supervised corruptions and their losses at a perfect and
//! at a trivial prediction.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subgraph_ssl::io::{generate_synthetic, SyntheticSpec};
use subgraph_ssl::ssl::{make_instance, ssl_loss, SslTarget};
use subgraph_ssl::SslTask;

fn main() -> subgraph_ssl::Result<()> {
    let spec = SyntheticSpec {
        per_class: 3,
        dim: 4,
        ..SyntheticSpec::default()
    };
    let x = generate_synthetic(&spec)?.features().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for task in SslTask::ALL {
        let inst = make_instance(task, &x, 0.1, 0.3, &mut rng)?;
        let (perfect, trivial) = match &inst.target {
            SslTarget::Denoise { .. } | SslTarget::Completion { .. } => {
                (x.clone(), Array2::zeros(x.dim()))
            }
            SslTarget::Shuffle {
                shuffled,
                unchanged,
            } => {
                let mut logits = Array2::zeros((x.nrows(), 1));
                for (&i, &u) in shuffled.iter().zip(unchanged) {
                    logits[[i, 0]] = if u == 1.0 { 30.0 } else { -30.0 };
                }
                (logits, Array2::zeros((x.nrows(), 1)))
            }
        };
        println!(
            "{:<10} perfect {:.3e} trivial {:.4}",
            task.name(),
            ssl_loss(&perfect, &inst)?,
            ssl_loss(&trivial, &inst)?
        );
    }
    Ok(())
}
