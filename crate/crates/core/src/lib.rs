//! Pre-OCR pipeline for identity documents: deskew, card crop, photo
//! masking, background cleaning, text segmentation and MRZ reading.

mod detmath;

pub mod adapter;
pub mod autocrop;
pub mod cleanse;
pub mod deskew;
pub mod error;
pub mod mrz;
pub mod photoid;
pub mod pipeline;
pub mod raster;
pub mod synthcard;
pub mod textseg;

pub use error::{Error, Result};
