//! Double-annotation service: per-annotator sessions over a corpus, a durable
//! decision log, live agreement and merging into gold labels.

pub mod error;
pub mod guidelines;
pub mod http;
pub mod store;

pub use error::{AnnotationError, Result};
pub use guidelines::{guidelines, Guidelines, GUIDELINE_VERSION};
pub use http::{router, serve};
pub use store::{GoldLabels, LiveKappa, MergePolicy, NextItem, Progress, Resolution, Session, Store};
