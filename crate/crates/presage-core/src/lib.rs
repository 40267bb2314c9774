#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod alphabet;
pub mod exec;
pub mod label;
pub mod oracle;
