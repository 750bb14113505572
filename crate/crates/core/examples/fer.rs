//! Frame-error run: `fer [stack|bidir] [blocks] [snr_db...]`.

use signal_codes::channel::{run_simulation, DecoderKind, SimConfig};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut cfg = SimConfig::default();
    if let Some(k) = args.first() {
        cfg.decoder.kind = if k == "bidir" { DecoderKind::Bidirectional } else { DecoderKind::Stack };
    }
    if let Some(b) = args.get(1) {
        cfg.blocks = b.parse().expect("block count");
    }
    if args.len() > 2 {
        cfg.snr_db = args[2..].iter().map(|s| s.parse().expect("snr")).collect();
    }
    let r = run_simulation(&cfg).expect("simulation");
    println!("snr_db  fer      errors  mean_comp  max_comp  cpl");
    for p in &r.points {
        println!(
            "{:6.2}  {:.5}  {:6}  {:9.2}  {:8.1}  {}",
            p.snr_db, p.fer, p.frame_errors, p.mean_comp, p.max_comp, p.cpl_count
        );
    }
    println!("tail {:.1} bits, {:.3} dB; {:.1} s", r.tail_bits_mean, r.tail_rate_loss_db, r.wall_time_s);
}
