//! Time per sweep of a 1000-site chain at ε = 0.25, N = 4, β = 20.

use std::time::Instant;

use ctd_core::lattice::{init_lattice, InitPolicy, WellKernel};
use ctd_core::{Mode, ModelParams, WellLedger};

fn main() {
    let sweeps = 20_000u32;
    let ledger = WellLedger::new(ModelParams::new(0.25, 4, Mode::Exact).unwrap()).unwrap();
    let kernel = WellKernel::new(&ledger).unwrap();
    let mut s = init_lattice(&[1000], 20.0, 1, InitPolicy::Random).unwrap();
    let t = Instant::now();
    for _ in 0..sweeps {
        s.sweep(&kernel);
    }
    println!("{:?} per sweep, acceptance {:.3}", t.elapsed() / sweeps, s.acceptance_rate());
}
