#![allow(dead_code)]

pub mod benchmark;
pub mod oracle;
pub mod props;
