//! Sweep the barrier objective Phi0 across the load axis and watch it
//! cross zero just above alpha = 0.113.
//!
//! Run: cargo run --release -p hopcap --example capacity_sweep

use hopcap::saddle::phi0;

fn main() {
    println!("{:>8} {:>14} {:>8}", "alpha", "Phi0(0,a,d)", "U*");
    let delta = 0.00645;
    for i in 0..=10 {
        let alpha = 0.105 + 0.001 * f64::from(i);
        let (value, u) = phi0(0.0, alpha, delta).expect("well-posed");
        println!("{alpha:>8.3} {value:>14.6e} {u:>8.4}");
    }
}
