pub mod sample_fbm;
pub mod scan;
pub mod selftest;
pub mod simulate;
pub mod special;
pub mod theory;
