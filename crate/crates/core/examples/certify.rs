//! Certify the energy-barrier condition at the published operating point
//! and at the replica-theory load where the bound cannot reach.
//!
//! Run: cargo run --release -p hopcap --example certify

use hopcap::capacity::{certify_theorem3, Verdict};

fn main() {
    for (alpha, delta) in [(0.113, 0.00645), (0.138, 0.00645)] {
        let cert = certify_theorem3(alpha, delta, 0.131, 1e-3).expect("valid parameters");
        println!(
            "alpha = {alpha:<6} delta = {delta:<8} verdict = {:?}",
            cert.verdict
        );
        println!(
            "  worst margin {:.3e} at q = {:.4}; side conditions: small-U {}, endpoint {:?}, q-cap {}",
            cert.worst_margin, cert.worst_q, cert.cond_t317, cert.cond_t318, cert.prop3_q0_ok
        );
        if cert.verdict == Verdict::Holds {
            println!("  -> a barrier of positive height surrounds the pattern at this load");
        }
    }
}
