//! Minimum distance of the built-in high coding gain patterns.
use signal_codes::lattice::TABLE1;
use signal_codes::spectrum::{min_distance, mirror_symmetric, SearchOptions};

fn main() {
    let rows: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let n_max: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(16);
    for (i, row) in TABLE1.iter().enumerate().take(rows) {
        let t = std::time::Instant::now();
        let md = min_distance(&row.pattern(), n_max, &SearchOptions::default()).unwrap();
        println!(
            "row {}: d2_min {:.4} n_min {} (expected {:.2}, {}) nodes {} symmetric {} in {:.1?}",
            i + 1,
            md.d2_min,
            md.n_min,
            row.d2_min,
            row.n_min,
            md.nodes_examined,
            mirror_symmetric(&md.event),
            t.elapsed()
        );
    }
}
