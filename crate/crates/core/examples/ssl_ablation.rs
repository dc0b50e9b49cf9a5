//! Small seeded comparison of SSL task sets against a full-graph baseline.
//! Pass `--standard` for the full-size protocol, which takes minutes.

use subgraph_ssl::experiment::{run_arms, Arm, Protocol};

fn main() -> subgraph_ssl::Result<()> {
    let mut protocol = Protocol::standard();
    if !std::env::args().any(|a| a == "--standard") {
        protocol.seeds = vec![0, 1];
        protocol.hidden = 64;
        protocol.epochs = 20;
        protocol.repeats = 5;
        protocol.validation_per_class = 25;
        protocol.test_per_class = 50;
    }
    let mut arms = Arm::ssl_variants();
    arms.push(Arm::full_graph("full_graph", &[]));
    for r in run_arms(&protocol, &arms)? {
        println!(
            "{:<11} accuracy {:.3} noise drop {:.3} per seed {:.3?}",
            r.name,
            r.mean_accuracy(),
            r.mean_noise_drop(),
            r.accuracy
        );
    }
    Ok(())
}
