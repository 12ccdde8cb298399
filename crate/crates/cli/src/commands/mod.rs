pub mod bench;
pub mod eval;
pub mod map;
pub mod render;
pub mod serve;
