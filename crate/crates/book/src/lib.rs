//! Compiles the guide's code blocks as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/stationary.md")]
pub mod stationary {}

#[doc = include_str!("../../../book/src/bifurcation.md")]
pub mod bifurcation {}

#[doc = include_str!("../../../book/src/evolution.md")]
pub mod evolution {}

#[doc = include_str!("../../../book/src/eikonal.md")]
pub mod eikonal {}

#[doc = include_str!("../../../book/src/linearized.md")]
pub mod linearized {}

#[doc = include_str!("../../../book/src/particles.md")]
pub mod particles {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
