//! Library side of the `ainf` command-line tool: the JSON instance format and
//! the subcommands.

pub mod commands;
pub mod document;
