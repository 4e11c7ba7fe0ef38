//! Desk-scale small vision-language model pipeline.
//!
//! The crate is split along the data path:
//!
//! * [`tensor`]: dense row-major tensors and a reverse-mode gradient tape.
//! * [`vision`]: PPM I/O, longest-edge capping, image tiling, frame sampling and patchify.
//! * [`compress`]: pixel shuffle (space-to-depth) over visual feature maps.
//! * [`prompt`]: vocabulary with positional/media tokens, chat rendering and loss masks.
//! * [`model`]: a toy encoder + projector + RoPE decoder that trains on CPU.
//! * [`budget`]: analytic token, KV-cache, RAM and data-mixture accounting.

pub mod budget;
pub mod compress;
pub mod kv;
pub mod model;
pub mod prompt;
pub mod tensor;
pub mod vision;

pub use tensor::{Tensor, TensorError};
