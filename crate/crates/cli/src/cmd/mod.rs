pub mod check;
pub mod dp;
pub mod mc;
pub mod synth;
pub mod tables;
