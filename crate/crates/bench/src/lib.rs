//! Shared inputs for the solver benchmarks.

use levirotor::dynamics::{simulate_spindown, DampingModel, SpinDownConfig, SpinDownTrace};
use levirotor::eddy::levitated_midplane;
use levirotor::{DiskSpec, MagnetStack};

pub struct Fixture {
    pub disk: DiskSpec,
    pub stack: MagnetStack,
    /// Disk midplane at the levitation height [m].
    pub plane_z: f64,
}

impl Fixture {
    pub fn reference() -> Self {
        let disk = DiskSpec::reference();
        let stack = MagnetStack::reference();
        let plane_z = levitated_midplane(&disk, &stack).expect("default stack levitates the disk");
        Self {
            disk,
            stack,
            plane_z,
        }
    }
}

/// Ten minutes of noisy 100 Hz marker samples.
pub fn noisy_trace() -> SpinDownTrace {
    let cfg = SpinDownConfig {
        position_noise: 40e-6,
        seed: 5,
        ..SpinDownConfig::default()
    };
    simulate_spindown(&DampingModel::Constant(1e-3), &cfg).expect("valid spin-down config")
}
