//! Fixtures and brute-force oracles shared by the core tests and the
//! acceptance runner. Each `check_*` returns a short summary on success and
//! the first mismatch on failure.

#![allow(dead_code)]

pub mod fixtures;
pub mod gradcheck;
pub mod metrics;
pub mod retrieval;
pub mod shaping;

pub type Check = Result<String, String>;

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}
