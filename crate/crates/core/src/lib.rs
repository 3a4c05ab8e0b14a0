//! Cascade factorization of delayed-feedback linear quantum transfer functions.
//!
//! The crate is organised bottom-up:
//!
//! * [`algebra`]: the indefinite metric `J`, doubled-up structure and basis completion.
//! * [`lti`]: rational doubled-up transfer functions built from state-space realizations.
//! * [`delay`]: closing feedback loops through commensurate delays.
//! * [`roots`]: argument-principle counting and refinement of zeros and poles.
//! * [`factor`]: elementary two-port factors matching a zero/pole pair.
//! * [`cascade`]: sequential detachment, truncated products and the constant remainder.
//! * [`example`]: the squeezer/beamsplitter/delay preset.
//! * [`io`]: JSON documents for models, networks, records and cascades.

pub mod algebra;
pub mod cascade;
pub mod delay;
pub mod error;
pub mod example;
pub mod factor;
pub mod io;
pub mod linalg;
pub mod lti;
pub mod roots;

pub use algebra::{DoubledUpMatrix, Layout, Residual, SignatureMatrix};

pub use delay::{DelayNetwork, DelaySpec, SearchStrip, Which};
pub use error::{Error, Result};

pub use linalg::{CMat, CVec, C64};
pub use lti::{RationalTf, SlhModel, StateSpaceModel};
pub use roots::{Kind, Rect, ZeroPoleRecord};
pub use cascade::{CascadeResult, CascadeTerm, Degeneracy, FactorizationPlan, FactorizeOptions, Truncation};
pub use factor::{CanonicalFactor, FactorVariant, SlhParams};
