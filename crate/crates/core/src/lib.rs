//! Synthetic subharmonic voice generation and period classification.
//!
//! The pipeline runs from a kinematic vocal-fold model ([`kinematics`])
//! through a transmission-line synthesizer ([`waveguide`]) to labelled
//! training data ([`dataset`]), and from there to fully convolutional
//! period classifiers ([`fcn`]) built on a small CPU tensor library ([`nn`]).

pub mod cli;
pub mod dataset;
pub mod dsp;
pub mod error;
pub mod fcn;
pub mod kinematics;
pub mod nn;
pub mod signal;
pub mod waveguide;

pub use error::{Error, ErrorCategory, Result};
pub use signal::{Signal, FCN_RATE, SIM_RATE};
