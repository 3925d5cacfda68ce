//! Integrates the Bloch equations for one shaped drive pulse and prints the
//! excited-state population next to the long-time steady state.
//!
//!     cargo run --release --example bloch_trajectory

use nv_optics::bloch::{derive_rates, integrate, predicted_damping, steady_state};
use nv_optics::experiments::ExperimentConfig;
use nv_optics::pulse::{power_to_rabi, ShapedPulse};
use nv_optics::units::rad_per_ns_to_mhz;

fn main() -> nv_optics::Result<()> {
    let emitter = ExperimentConfig::default().emitter;
    let rates = derive_rates(&emitter)?;
    let omega = power_to_rabi(38.0, emitter.kappa)?;
    let pulse = ShapedPulse::new(30.0, 1.3, 1.3)?;

    let t: Vec<f64> = (0..=200).map(|i| i as f64 * 0.25).collect();
    let traj = integrate(&emitter, &pulse, omega, 0.0, &t)?;

    println!(
        "Omega0 = {:.1} MHz, tau = {:.3} ns",
        rad_per_ns_to_mhz(omega),
        predicted_damping(&emitter)?
    );
    println!("steady state rho_ee = {:.4}", steady_state(omega, 0.0, &rates));
    println!("{:>8} {:>8}", "t_ns", "rho_ee");
    for (t, r) in traj.t_grid.iter().zip(&traj.rho_ee).step_by(4) {
        println!("{t:8.2} {r:8.4}");
    }
    Ok(())
}
