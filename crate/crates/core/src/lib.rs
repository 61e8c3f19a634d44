//! Intra-frame block codec for 8-bit YCbCr 4:2:0 images with six
//! toggleable coding tools on top of an AV1-like baseline, plus a BD-rate
//! experiment harness.

pub mod bitio;
pub mod ccso;
pub mod codec;
pub mod frame;
pub mod harness;
pub mod intra;
pub mod linalg;
pub mod partition;
pub mod quant;
pub mod transform;
