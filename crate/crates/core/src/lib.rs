//! Rateless lossy compression by coding with random orthogonal matrices.
//!
//! Each round rotates the residual with a fresh orthogonal matrix, sends the
//! indices of its `k` largest coordinates and subtracts a scaled direction
//! vector. Any prefix of the message stream decodes.
//!
//! ```
//! use crom_core::{crom_encode, decode_prefix, CromParams, SchemeKind, TransformScheme};
//!
//! let n = 256;
//! let scheme = TransformScheme::new(SchemeKind::SparseGivensThenDct, 7, n).unwrap();
//! let params = CromParams::new(n, 1, 0.5, scheme).unwrap();
//! let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
//! let enc = crom_encode(&x, &params).unwrap();
//! let xhat = decode_prefix(&enc.messages[..10], &params).unwrap();
//! assert_eq!(xhat.len(), n);
//! ```

pub mod channel_dual;
pub mod codec_io;
pub mod crom;
pub mod error;
pub mod harness;
pub mod sparc;
pub mod stats;
pub mod topk;
pub mod transform;
pub mod zero_rate;

pub use channel_dual::ChannelCode;
pub use codec_io::{read_stream, write_stream, DecodedStream};
pub use crom::{crom_encode, decode_prefix, distortion_trace, CromEncoding, CromParams, Schedule};
pub use error::{Error, Result};
pub use harness::{generate_block, run_experiment, CodecSpec, ExperimentSpec, SourceKind, SourceSpec};
pub use sparc::{sparc_decode, sparc_encode, SparcParams};
pub use topk::{g_k, IndexMessage};
pub use transform::{OrthogonalTransform, SchemeKind, TransformScheme};
pub use zero_rate::ZeroRateCode;
