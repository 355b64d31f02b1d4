//! Lag-resolved push-response analysis of event-time mid-price series.
//!
//! The pipeline runs ingest, cleaning, lag moments, surface accumulation and
//! decomposition. Each stage is a module; [`synthetic`] generates series with
//! known structure for testing.

pub mod cleaning;
pub mod decomposition;
pub mod ingest;
pub mod lags;
pub mod prms;
pub mod series;
pub mod stats;
pub mod surface;
pub mod synthetic;

pub use series::{MidSeries, Session};

// Book chapters compiled as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/series.md")]
    mod series {}
    #[doc = include_str!("../../../book/src/cleaning.md")]
    mod cleaning {}
    #[doc = include_str!("../../../book/src/surface.md")]
    mod surface {}
    #[doc = include_str!("../../../book/src/decomposition.md")]
    mod decomposition {}
    #[doc = include_str!("../../../book/src/bootstrap.md")]
    mod bootstrap {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
