//! Benchmark fixtures shared by the criterion targets.

use aoi_mpr::{AccessConfig, TopologySpec};

/// A mid-sized stable configuration at the 5 dB reference geometry.
pub fn reference_case(n_secondary: usize) -> (TopologySpec, AccessConfig) {
    let topo = TopologySpec::reference(n_secondary, 5.0);
    let access = AccessConfig::new(0.2, 0.9, 0.1).expect("valid access");
    (topo, access)
}
