//! Locate the critical pair: the load and flip fraction where the
//! negativity window of the barrier objective collapses to a point.
//!
//! Run: cargo run --release -p hopcap --example critical_point

use hopcap::capacity::critical_pair;

fn main() {
    let cp = critical_pair(0.11, 0.008).expect("seeds in basin");
    println!("alpha_c = {:.8}", cp.alpha_c);
    println!("delta_c = {:.8}", cp.delta_c);
    println!(
        "residuals: |Phi0| = {:.2e}, |dPhi0/ddelta| = {:.2e}",
        cp.residual_phi, cp.residual_dphi
    );
}
