//! Simulation and fitting toolkit for Schottky-barrier MOSFET current
//! sources and the capacitor integrate-and-fire neurons built from them.
//!
//! * [`sbmodel`]: drain-current compact model and sweeps.
//! * [`extract`]: g_m / µ_eff / R_SD / V_T extraction, device fits and the
//!   calibrated voltage-to-current map used by the neuron.
//! * [`neuron`]: capacitor neuron simulation and frequency measurement.
//! * [`snn`]: 16×3 rate-coded spiking classifier for Fisher's Iris.
//! * [`cli`]: the `sbneuro` command-line front end.

pub mod cli;
pub mod extract;
pub mod io;
pub mod neuron;
pub mod sbmodel;
pub mod snn;
pub mod stats;
