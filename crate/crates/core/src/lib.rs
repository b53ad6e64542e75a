//! Parseval K-frames in finite dimensions.
//!
//! Frames and K-frames of `C^n`, their bounds and dilations, the K-dual
//! family with its error identity, and the subspace correspondence for
//! Parseval K-frames. All linear algebra is dense and complex.

pub mod cli;
pub mod document;
pub mod error;
pub mod frames;
pub mod kduals;
pub mod kframes;
pub mod opcore;
pub mod sampling;

pub use document::Document;
pub use error::{FrameError, Result};
pub use frames::{FrameBounds, FrameSystem};
pub use kframes::KFrameInstance;
pub use opcore::{CMatrix, CVector, Operator, Subspace, Tolerance, C64};
