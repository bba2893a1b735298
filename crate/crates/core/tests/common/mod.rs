#![allow(dead_code)]

pub mod approx;
pub mod density;
