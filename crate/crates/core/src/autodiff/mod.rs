//! Second-order jets, network models, and PDE residual assembly.

mod jet;
mod mlp;
mod residual;

pub use jet::{Jet2, JetCotangent, Scalar};
pub use mlp::{
    forward_jet, init_params, Activation, JetModel, Mlp, MlpSpec, ParameterVector, PolynomialModel,
};
pub use residual::{empirical_loss, residual_bundle, residual_vector, ResidualBundle};
