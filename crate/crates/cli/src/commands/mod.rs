pub mod simulate;
pub mod sweep;
pub mod transform;
pub mod verify;
