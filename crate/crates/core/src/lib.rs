//! Fractional residue number system arithmetic and a cycle-level model of a
//! digit-slice systolic matrix unit.
//!
//! Values are held as one residue per modulus of a [`ModuliSet`]. Addition,
//! subtraction and multiplication act on each residue on its own, so they
//! finish in one step no matter how wide the word is. Fixed-point fractions
//! ([`RnsFixed`]) put the fractional moduli first; rescaling a product
//! ([`RawProduct::normalize`]) is the one operation that needs all digits
//! together.

#![no_std]

extern crate alloc;

pub mod cost;
pub mod error;
pub mod fixed;
pub mod moduli;
pub mod rns;
pub mod simulator;

pub use cost::{CycleMeter, FixedOp};
pub use error::{Result, RnsError};
pub use fixed::{
    mac_capacity_check, parse_rational, CapacityViolation, FixedValue, RawProduct, RnsFixed,
    Signum,
};
pub use moduli::{
    digit_add, digit_mul, digit_neg, digit_sub, mod_inverse, ModuliSet, DEFAULT_DIGIT_WIDTH,
    DEFAULT_FRAC_COUNT, DEFAULT_MODULI,
};
pub use rns::{MixedRadixDigits, RnsInt};
pub use simulator::{
    model_conversion_pipelines, relu_activate, resource_report, Activation, ConversionPipeline,
    CycleReport, DigitSlice, MatMulJob, MatMulOutput, ResourceReport, Simulator, SliceTrace,
    SystolicConfig,
};

pub use num_bigint::{BigInt, BigUint};
pub use num_rational::BigRational;
