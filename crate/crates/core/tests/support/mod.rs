#![allow(dead_code)]

pub mod linalg;
pub mod oracle;
pub mod synth;
