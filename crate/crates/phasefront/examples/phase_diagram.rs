//! Bulk densities of the binary mixture across the critical point.

use phasefront::bulk::{beta_c_closed_form, bulk_phases_fast, find_beta_c, LocalFreeEnergy};

fn main() -> phasefront::Result<()> {
    let (lambda, jhat) = (1.0, 1.0);
    let bc = find_beta_c(lambda, jhat)?;
    println!("β_c by bisection {bc:.10}, closed form {:.10}", beta_c_closed_form(lambda, jhat));
    println!("{:>8} {:>12} {:>12} {:>12}", "β/β_c", "ρ-", "ρ+", "g");
    for i in 0..=12 {
        let beta = bc * (0.7 + 0.1 * i as f64);
        let b = bulk_phases_fast(&LocalFreeEnergy::new(beta, lambda, jhat)?)?;
        println!("{:>8.2} {:>12.8} {:>12.8} {:>12.8}", beta / bc, b.rho_minus, b.rho_plus, b.g);
    }
    Ok(())
}
