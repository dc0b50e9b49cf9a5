//! How many random edges a test node needs so that at least one reaches a
//! true-labeled node with a given probability.

use subgraph_ssl::builder::true_label_hit_probability;
use subgraph_ssl::min_test_edges;

fn main() -> subgraph_ssl::Result<()> {
    for (n_true, m_pseudo) in [(66, 5), (48, 5), (8, 5), (2, 40)] {
        for p in [0.9, 0.99, 0.999] {
            let t = min_test_edges(n_true, m_pseudo, p)?;
            println!(
                "true {n_true:>3} pseudo {m_pseudo:>3} target {p}: T = {t} (hit {:.5})",
                true_label_hit_probability(n_true, m_pseudo, t)
            );
        }
    }
    Ok(())
}
