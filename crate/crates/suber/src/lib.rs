//! File formats, the HTTP rater client and the experiment runners behind the
//! `suber` command.

pub mod commands;
pub mod config;
pub mod data;
pub mod llm;
pub mod report;
