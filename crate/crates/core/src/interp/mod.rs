//! Interpolation methods: particle data to globally defined velocity fields.

mod field;
mod gram;
mod spectral;
mod state;

pub use field::{
    eval_field_k0, eval_field_k1, eval_grad_k0, eval_grad_k1, eval_hessian_k1, gram_k0, gram_k1,
    jet_block, solve_k0, solve_k1, InterpOptions, KernelField, VelocityField,
};
pub use gram::{GramFactor, MAX_CONDITION};
pub use spectral::{solve_spectral, SpectralBasis, SpectralField};
pub use state::{closest_pair, JetParticleState, ParticleState};
pub(crate) use state::{dist2, write_row_major};
