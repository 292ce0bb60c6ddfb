//! Hand-posture affordance learning with zero-shot transfer to tools.
//!
//! The pipeline turns manipulator and object silhouettes into 13 shape
//! descriptors ([`shape`]), compresses each block with a two-component PCA
//! and median split ([`reduce`]), and learns a discrete Bayesian network
//! predicting the 5x5 distribution of object displacement bins given the
//! manipulator, the object and the action ([`affordance`]). A model trained
//! on hand postures alone can then rank unseen tools ([`tasks`]).
//!
//! [`data`] handles CSV datasets, viewpoint augmentation and model files;
//! [`synthworld`] is a seeded desk-scale stand-in for the robot.

pub mod affordance;
pub mod data;
pub mod error;
pub mod reduce;
pub mod shape;
pub mod synthworld;
pub mod tasks;

pub use error::{Error, Result};
