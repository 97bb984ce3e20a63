//! Centralized numerical configuration.
//!
//! Every tolerance, margin and resolution knob used across the crate lives
//! in one record, so property tests and the CLI tune a single object.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Config {
    /// Tolerance for idempotency and self-adjointness of projection fields.
    pub proj_tol: f64,
    /// Tolerance for equivariance checks (`eta_eqv`).
    pub eqv_tol: f64,
    /// A fiberwise map counts as an isomorphism when its smallest singular
    /// value exceeds this (`sigma_iso`).
    pub sigma_iso: f64,
    /// Barycentric sample resolution per simplex (lattice denominator).
    pub resolution: u32,
    /// Angular margin (radians) required between a candidate direction and
    /// every normalized antipodal boundary sample.
    pub missed_direction_margin: f64,
    /// Random draws before the missed-direction search gives up.
    pub missed_direction_retries: usize,
    /// Whole-pass retries (with randomized starting directions) when a peel
    /// loses the interpolation gap or a margin.
    pub extension_attempts: usize,
    /// Sections with smaller pointwise norm (or pair singular value) are
    /// rejected as too close to vanishing.
    pub min_margin: f64,
    /// Fields whose measured interpolation gap at 1/2 drops below this fail
    /// with `GapLost`.
    pub min_gap: f64,
    /// Minimal distance of Hamiltonian spectra from the Fermi level.
    pub fermi_gap: f64,
    /// Number of steps of the transport grid along the cylinder direction.
    pub transport_steps: usize,
    /// Maximal number of transport-grid halvings before giving up.
    pub transport_refinements: usize,
    /// Seed for the missed-direction search and the scenario generators.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            proj_tol: 1e-10,
            eqv_tol: 1e-10,
            sigma_iso: 1e-8,
            resolution: 2,
            missed_direction_margin: 0.1,
            missed_direction_retries: 64,
            extension_attempts: 8,
            min_margin: 1e-9,
            min_gap: 1e-6,
            fermi_gap: 1e-6,
            transport_steps: 64,
            transport_refinements: 3,
            seed: 0,
        }
    }
}

impl Config {
    pub fn with_seed(seed: u64) -> Self {
        Config { seed, ..Config::default() }
    }

    pub fn with_resolution(resolution: u32) -> Self {
        Config { resolution, ..Config::default() }
    }
}
