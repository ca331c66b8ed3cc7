//! Latent/embedding geometry selector shared by the trained models.

use crate::error::{Error, Result};

/// Which space the trainable locations live in: the Lorentz model of
/// hyperbolic space, or plain Euclidean space (the control/baseline).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    Hyperbolic,
    Euclidean,
}

impl Geometry {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hyperbolic" => Ok(Geometry::Hyperbolic),
            "euclidean" => Ok(Geometry::Euclidean),
            other => Err(Error::InvalidConfig(format!(
                "unknown geometry '{other}' (expected hyperbolic|euclidean)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Geometry::Hyperbolic => "hyperbolic",
            Geometry::Euclidean => "euclidean",
        }
    }
}
