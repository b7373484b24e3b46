//! Visual processing stream: a layered feature hierarchy whose units learn
//! with the complementary plasticity kernel, plus excitatory lateral links
//! that bind positions into invariant cell assemblies and anti-Hebbian
//! inhibitory links that decorrelate competing assemblies.

mod assembly;
mod hierarchy;
mod stimulus;

pub use assembly::{maximal_cliques, CellAssembly};
pub use hierarchy::{
    Hierarchy, LayerActivity, MovingObjectProtocol, Presentation, ProtocolReport, VisualUnit,
    VpsParams, LAYER_NAMES,
};
pub use stimulus::{FeatureCell, FeatureStimulus, Rect, ShapeCell, ShapeTemplate};

use thiserror::Error;

use crate::cph::CphError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VpsError {
    #[error("stimulus is {got_w}x{got_h} but the hierarchy expects {want_w}x{want_h}")]
    DimensionMismatch { want_w: usize, want_h: usize, got_w: usize, got_h: usize },
    #[error("cell ({x},{y}) lies outside the grid")]
    OutOfBounds { x: i64, y: i64 },
    #[error("layer {0} does not exist")]
    NoSuchLayer(usize),
    #[error("unknown visual unit `{0}`")]
    UnknownUnit(String),
    #[error("duplicate visual unit name `{0}`")]
    DuplicateUnit(String),
    #[error("lateral links need two distinct units in the same layer")]
    BadLateral,
    #[error("trajectory never enters any receptive field")]
    DegenerateProtocol,
    #[error(transparent)]
    Cph(#[from] CphError),
}
