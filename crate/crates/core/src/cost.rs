//! Clock accounting for fractional residue operations.
//!
//! Digit-parallel operations take one clock regardless of how many digits a
//! word has. Normalization walks the mixed-radix digits and takes one clock
//! per digit. A full fractional multiply is one raw multiply plus one
//! normalization, so `D + 1` clocks for a `D`-digit word.

use core::cmp::Ordering;

use crate::error::Result;
use crate::fixed::{RawProduct, RnsFixed, Signum};
use crate::moduli::ModuliSet;
use crate::rns::RnsInt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FixedOp {
    Add,
    Sub,
    Negate,
    Scale,
    MultiplyRaw,
    Accumulate,
    Normalize,
    Multiply,
    /// Sign detection or signed comparison; walks the mixed-radix digits.
    Compare,
}

impl FixedOp {
    pub const ALL: [FixedOp; 9] = [
        FixedOp::Add,
        FixedOp::Sub,
        FixedOp::Negate,
        FixedOp::Scale,
        FixedOp::MultiplyRaw,
        FixedOp::Accumulate,
        FixedOp::Normalize,
        FixedOp::Multiply,
        FixedOp::Compare,
    ];

    /// Clocks taken by this operation on a `digits`-wide word.
    pub fn cycles(self, digits: usize) -> u64 {
        let d = digits as u64;
        match self {
            FixedOp::Add
            | FixedOp::Sub
            | FixedOp::Negate
            | FixedOp::Scale
            | FixedOp::MultiplyRaw
            | FixedOp::Accumulate => 1,
            FixedOp::Normalize | FixedOp::Compare => d,
            FixedOp::Multiply => d + 1,
        }
    }

    pub fn is_parallel(self) -> bool {
        self.cycles(2) == 1
    }
}

/// Runs fractional operations while tallying their clock cost.
#[derive(Debug, Clone)]
pub struct CycleMeter {
    digits: usize,
    cycles: u64,
    ops: u64,
}

impl CycleMeter {
    pub fn new(set: &ModuliSet) -> Self {
        CycleMeter { digits: set.len(), cycles: 0, ops: 0 }
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn ops(&self) -> u64 {
        self.ops
    }

    pub fn reset(&mut self) {
        self.cycles = 0;
        self.ops = 0;
    }

    fn charge(&mut self, op: FixedOp) {
        self.cycles += op.cycles(self.digits);
        self.ops += 1;
    }

    pub fn add(&mut self, a: &RnsFixed, b: &RnsFixed) -> Result<RnsFixed> {
        self.charge(FixedOp::Add);
        a.add(b)
    }

    pub fn sub(&mut self, a: &RnsFixed, b: &RnsFixed) -> Result<RnsFixed> {
        self.charge(FixedOp::Sub);
        a.sub(b)
    }

    pub fn negate(&mut self, a: &RnsFixed) -> RnsFixed {
        self.charge(FixedOp::Negate);
        a.neg()
    }

    pub fn scale(&mut self, k: &RnsInt, a: &RnsFixed) -> Result<RnsFixed> {
        self.charge(FixedOp::Scale);
        a.scale_by_integer(k)
    }

    pub fn multiply_raw(&mut self, a: &RnsFixed, b: &RnsFixed) -> Result<RawProduct> {
        self.charge(FixedOp::MultiplyRaw);
        a.multiply_raw(b)
    }

    pub fn accumulate(&mut self, acc: &RawProduct, term: &RawProduct) -> Result<RawProduct> {
        self.charge(FixedOp::Accumulate);
        acc.accumulate(term)
    }

    /// Subtracting a raw term costs the same as accumulating it.
    pub fn deduct(&mut self, acc: &RawProduct, term: &RawProduct) -> Result<RawProduct> {
        self.charge(FixedOp::Accumulate);
        acc.subtract(term)
    }

    pub fn normalize(&mut self, p: &RawProduct) -> Result<RnsFixed> {
        self.charge(FixedOp::Normalize);
        p.normalize()
    }

    pub fn normalize_with_sign(&mut self, p: &RawProduct) -> Result<(RnsFixed, Signum)> {
        self.charge(FixedOp::Normalize);
        p.normalize_with_sign()
    }

    pub fn multiply(&mut self, a: &RnsFixed, b: &RnsFixed) -> Result<RnsFixed> {
        self.charge(FixedOp::Multiply);
        a.multiply(b)
    }

    pub fn compare_raw(&mut self, a: &RawProduct, b: &RawProduct) -> Result<Ordering> {
        self.charge(FixedOp::Compare);
        a.compare_signed(b)
    }

    pub fn compare(&mut self, a: &RnsFixed, b: &RnsFixed) -> Result<Ordering> {
        self.charge(FixedOp::Compare);
        a.compare_signed(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn costs() {
        for d in [2, 6, 10, 18] {
            for op in [
                FixedOp::Add,
                FixedOp::Sub,
                FixedOp::Negate,
                FixedOp::Scale,
                FixedOp::MultiplyRaw,
                FixedOp::Accumulate,
            ] {
                assert_eq!(op.cycles(d), 1);
                assert!(op.is_parallel());
            }
            assert_eq!(FixedOp::Normalize.cycles(d), d as u64);
            assert_eq!(FixedOp::Multiply.cycles(d), d as u64 + 1);
        }
        assert_eq!(FixedOp::Multiply.cycles(18), 19);
    }

    #[test]
    fn meter_tallies() {
        let s = ModuliSet::with_fractional(&[2, 3, 5, 7, 11, 13], &[5, 7], 8).unwrap();
        let a = RnsFixed::encode_str("0.5", &s).unwrap();
        let mut m = CycleMeter::new(&s);
        let p = m.multiply_raw(&a, &a).unwrap();
        let p = m.accumulate(&p, &p).unwrap();
        assert_eq!(m.cycles(), 2);
        m.normalize(&p).unwrap();
        assert_eq!(m.cycles(), 8);
        m.multiply(&a, &a).unwrap();
        assert_eq!(m.cycles(), 15);
        assert_eq!(m.ops(), 4);
        m.reset();
        assert_eq!(m.cycles(), 0);
    }
}
