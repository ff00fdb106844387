//! Pipeline behind the `anonlab` command-line tool.

pub mod pipeline;
