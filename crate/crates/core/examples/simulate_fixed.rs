//! Monte Carlo probability that a slightly corrupted pattern is a strict
//! fixed point, next to the analytic rate bound.
//!
//! Run: cargo run --release -p hopcap --example simulate_fixed

use hopcap::capacity::delta_c_asym;
use hopcap::functional::ModelParams;
use hopcap::hopfield::mc_fixed_probability;
use hopcap::saddle::rate_exponent;

fn main() {
    let (n, alpha, delta, trials, seed) = (400, 0.1, 0.004, 5000, 2);
    let run = mc_fixed_probability(n, alpha, delta, trials, seed).expect("valid");
    let e = run.estimate;
    println!(
        "n = {n}, p = {}, delta = {delta}: {} / {} stable (p_hat = {:.4e}, 95% CI [{:.3e}, {:.3e}])",
        run.p, e.successes, e.trials, e.p_hat, e.ci_low, e.ci_high
    );
    let params = ModelParams::barrier(alpha, delta, 0.0).unwrap();
    let rate = rate_exponent(&params).unwrap();
    let lhs = e.p_hat.max(1.0 / trials as f64).ln() / n as f64;
    println!("(1/n) log p_hat = {lhs:.5}  vs  rate bound {rate:.5}");
    println!("asymptotic minimal flip fraction at this load: {:.3e}", delta_c_asym(alpha).unwrap());
}
