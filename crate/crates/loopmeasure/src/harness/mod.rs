pub mod experiment;
pub mod ks;
pub mod special;
pub mod verify;
