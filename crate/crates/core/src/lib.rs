pub mod constants;
pub mod error;
pub mod export;
pub mod geodesic;
pub mod interferometer;
pub mod littlegroup;
pub mod ode;
pub mod quadrature;
pub mod spacetime;
pub mod symmetry;
pub mod tetrad;
pub mod wigner;

pub use error::{Error, Result};

/// The mdbook guide, compiled here so its snippets run as doc-tests.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/spacetime.md")]
    pub mod spacetime {}
    #[doc = include_str!("../../../book/src/geodesics.md")]
    pub mod geodesics {}
    #[doc = include_str!("../../../book/src/tetrads.md")]
    pub mod tetrads {}
    #[doc = include_str!("../../../book/src/little-group.md")]
    pub mod little_group {}
    #[doc = include_str!("../../../book/src/wigner-rotation.md")]
    pub mod wigner_rotation {}
    #[doc = include_str!("../../../book/src/symmetry.md")]
    pub mod symmetry {}
    #[doc = include_str!("../../../book/src/interferometer.md")]
    pub mod interferometer {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
