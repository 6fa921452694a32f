//! The negativity window in the flip fraction: where the barrier objective
//! is provably negative, and how the window shrinks toward the critical
//! load.
//!
//! Run: cargo run --release -p hopcap --example delta_window

use hopcap::capacity::delta_window;

fn main() {
    for alpha in [0.10, 0.11, 0.113] {
        match delta_window(alpha) {
            Ok((d1, d2, d3)) => println!(
                "alpha = {alpha:<6}: negative on [0, {d1:.5}] and [{d2:.5}, {d3:.5}] (width {:.5})",
                d3 - d2
            ),
            Err(e) => println!("alpha = {alpha:<6}: {e}"),
        }
    }
}
