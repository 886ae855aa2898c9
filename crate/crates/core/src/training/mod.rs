//! Adversarial reconstruction training: an encoder maps a photo to a code,
//! the generator turns it into a view-space volume, and the volume must both
//! reproduce the photo from the canonical view and fool an image
//! discriminator from freshly sampled views.

mod adam;
mod config;
mod loss;
mod run;
mod step;

pub use adam::{Adam, AdamState};
pub use config::{parse_key_values, ArchPreset, Freeze, RecReduction, TrainConfig};
pub use loss::{
    discriminator_loss, discriminator_loss_var, generator_loss, generator_loss_var, reconstruction_loss,
    reconstruction_loss_var,
};
pub use run::{checkpoint_name, train, HeldOut, TrainOutcome, LOG_HEADER};
pub use step::{element_losses, generator_objective_var, train_step, ElementLosses, StepReport, Trainer};
