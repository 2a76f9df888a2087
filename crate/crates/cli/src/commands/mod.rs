pub mod arith;
pub mod bsdp;
pub mod gemv;
pub mod transfer;
