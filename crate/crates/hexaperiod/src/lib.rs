//! Command line, rendering and file formats on top of `hexaperiod-core`.

pub mod checks;
pub mod cli;
pub mod io;
pub mod num;
pub mod par;
pub mod render;
