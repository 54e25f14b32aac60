//! Library side of the `cgft` command: base parsing, I/O, subcommands and the
//! invariant suites run by `cgft verify`.

pub mod base_spec;
pub mod commands;
pub mod io;
pub mod suites;
