//! Grid simulation of periodic coarse-grained preparation and measurement.
//!
//! States are sampled on a self-dual grid, rotated in phase space with a
//! fractional Fourier transform and coarse-grained by periodic bin masks.

mod frft;
mod grid;
mod mask;
mod measure;

pub use frft::{frft, frft_with, reduce_angle, FrftMethod, OscillatorBasis};
pub use grid::{fourier_transform, gaussian_state, Grid, GridState, DEFAULT_GRID_LEN};
pub use mask::BinMask;
pub use measure::{
    direction_mask, experiment_beam_width, intensity_profile, measure_masks, measure_probs, prepare, Measurement,
    OutcomeDistribution, Simulation, BEAM_RADIUS, GUARD_FRACTION, LOSS_LIMIT, LOSS_NOTICE,
};
