//! The constructive descent step: from a corrupted pattern, flip the
//! deeply unstable disagreeing sites and measure the exact energy drop.
//!
//! Run: cargo run --release -p hopcap --example descent_probe

use hopcap::hopfield::{descent_probe, energy, flip_config, gen_patterns};

fn main() {
    let ps = gen_patterns(2000, 200, 7).expect("valid dims");
    let s = flip_config(&ps, 0, 0.01).expect("on shell");
    println!("start: distance {} sites, energy {:.4}", s.distance_to(&ps, 0), energy(&ps, &s));
    let eps = 0.002;
    let (next, drop) = descent_probe(&ps, &s, 0, eps).expect("valid");
    if drop > 0.0 {
        println!(
            "probe fired: energy drop {drop:.4} (>= eps^2 N (1-2a) = {:.4}), new distance {}",
            eps * eps * 2000.0 * (1.0 - 2.0 * 0.1),
            next.distance_to(&ps, 0)
        );
    } else {
        println!("probe did not fire: no deeply unstable sites at eps = {eps}");
    }
}
