//! Library side of the `pairforge` command line.

pub mod output;
pub mod pipeline;
pub mod records;
