//! Library surface of the `opo` command-line tool, shared with the
//! integration tests.

pub mod commands;
pub mod csvout;
pub mod manifest;
pub mod verify;
