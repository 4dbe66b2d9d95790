//! Writes a photon-count spin-pumping trace with a 111 ns decay and
//! Poisson noise, for exercising `fss fit exp_decay`.
//!
//! cargo run -p fss-core --example pumping_synthetic -- data/pumping_synthetic.csv

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

const TAU_NS: f64 = 111.0;
const PEAK_COUNTS: f64 = 4000.0;
const FLOOR_COUNTS: f64 = 150.0;
const BIN_NS: f64 = 4.0;
const BINS: usize = 250;
const SEED: u64 = 111;

fn main() -> std::io::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "data/pumping_synthetic.csv".into());
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut out = String::new();
    let _ = writeln!(out, "# spin-pumping decay, tau = {TAU_NS} ns, Poisson counts, seed {SEED}");
    out.push_str("t_ns,counts,counts_err\n");
    for k in 0..BINS {
        let t = (k as f64 + 0.5) * BIN_NS;
        let mean = PEAK_COUNTS * (-t / TAU_NS).exp() + FLOOR_COUNTS;
        let n: f64 = Poisson::new(mean).expect("positive mean").sample(&mut rng);
        let _ = writeln!(out, "{t},{n},{}", n.max(1.0).sqrt());
    }
    std::fs::write(&path, out)?;
    println!("wrote {path}");
    Ok(())
}
