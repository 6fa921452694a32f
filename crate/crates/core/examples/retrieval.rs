//! Relax stored patterns under the zero-temperature dynamics and compare
//! the final error against the asymptotic minimal flip fraction.
//!
//! Run: cargo run --release -p hopcap --example retrieval

use hopcap::capacity::delta_c_asym;
use hopcap::hopfield::retrieval_error;

fn main() {
    let (n, alpha, trials, seed) = (10_000, 0.08, 20, 1);
    let st = retrieval_error(n, alpha, trials, seed).expect("valid");
    println!(
        "n = {n}, p = {}: one-step unstable fraction {:.3e} (+- {:.1e})",
        st.p, st.mean_onestep, st.se_onestep
    );
    println!(
        "final relative error {:.3e} (+- {:.1e}), {} non-converged",
        st.mean_error, st.se_error, st.nonconverged
    );
    println!("asymptote: {:.3e}", delta_c_asym(alpha).unwrap());
}
