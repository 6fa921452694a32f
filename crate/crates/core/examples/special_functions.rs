//! Tour of the Gaussian-tail numerics: stable log H at extreme arguments,
//! the hazard function and its derivative band, and the sup of x A(-x).
//!
//! Run: cargo run --release -p hopcap --example special_functions

use hopcap::specfun::{gauss_tail, log_gauss_tail, mills_a, mills_a_prime, sup_x_a_neg};

fn main() {
    println!("H(0)      = {}", gauss_tail(0.0).unwrap());
    println!("H(1)      = {:.15}", gauss_tail(1.0).unwrap());
    println!("log H(40) = {:.10}  (no underflow)", log_gauss_tail(40.0).unwrap());
    println!("log H(-40)= {:e}   (strictly negative)", log_gauss_tail(-40.0).unwrap());
    println!("A(0)      = {:.15}", mills_a(0.0).unwrap());
    println!("A(50)     = {:.12}  (~ x + 1/x)", mills_a(50.0).unwrap());
    for x in [-5.0, 0.0, 5.0] {
        println!("A'({x:>4}) = {:.6}  (inside (0,1))", mills_a_prime(x).unwrap());
    }
    println!("sup x A(-x) = {:.12} < 0.3", sup_x_a_neg().unwrap());
}
