#![allow(dead_code)]

pub mod hermite;
