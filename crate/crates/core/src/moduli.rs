//! Moduli sets and single-digit modular arithmetic.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::error::{Result, RnsError};

/// Ten pairwise-coprime 8-bit moduli. The first four form the fractional
/// range (about 31.9 bits); the full product spans 79 bits.
pub const DEFAULT_MODULI: [u32; 10] = [256, 255, 253, 251, 247, 241, 239, 233, 229, 227];
pub const DEFAULT_FRAC_COUNT: usize = 4;
pub const DEFAULT_DIGIT_WIDTH: u32 = 8;

/// `(a + b) mod m` for reduced operands.
#[inline]
pub fn digit_add(a: u32, b: u32, m: u32) -> u32 {
    let s = a as u64 + b as u64;
    let m = m as u64;
    (if s >= m { s - m } else { s }) as u32
}

/// `(a - b) mod m` for reduced operands.
#[inline]
pub fn digit_sub(a: u32, b: u32, m: u32) -> u32 {
    if a >= b {
        a - b
    } else {
        (a as u64 + m as u64 - b as u64) as u32
    }
}

/// `(a * b) mod m` for reduced operands.
#[inline]
pub fn digit_mul(a: u32, b: u32, m: u32) -> u32 {
    ((a as u64 * b as u64) % m as u64) as u32
}

#[inline]
pub fn digit_neg(a: u32, m: u32) -> u32 {
    if a == 0 {
        0
    } else {
        m - a
    }
}

/// Multiplicative inverse of `a` modulo `m`.
pub fn mod_inverse(a: u64, m: u64) -> Result<u64> {
    if m < 2 {
        return Err(RnsError::NoInverse { value: a, modulus: m });
    }
    let (mut old_r, mut r) = ((a % m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(RnsError::NoInverse { value: a, modulus: m });
    }
    Ok(old_s.rem_euclid(m as i128) as u64)
}

/// A validated set of pairwise-coprime moduli split into a fractional
/// prefix and a whole-number suffix.
///
/// Cloning is cheap; all clones share the same precomputed tables.
#[derive(Clone)]
pub struct ModuliSet {
    inner: Arc<Tables>,
}

struct Tables {
    moduli: Vec<u32>,
    frac_count: usize,
    digit_width_bits: u32,
    // elimination order: fractional digits first, then the rest in
    // declared order; order[k] is a digit index
    order: Vec<usize>,
    // moduli permuted into elimination order
    radices: Vec<u32>,
    range: BigUint,
    frac_range: BigUint,
    whole_range: BigUint,
    // M / m_i
    crt_weights: Vec<BigUint>,
    // (M / m_i)^-1 mod m_i
    crt_inverses: Vec<u32>,
    // mrc_inverses[a][b] = radix_a^-1 mod radix_b, for b > a
    mrc_inverses: Vec<Vec<u32>>,
    // ceil(M / 2): first raw value interpreted as negative
    half: BigUint,
    half_mixed_radix: Vec<u32>,
}

impl ModuliSet {
    /// Builds a set whose first `frac_count` moduli are fractional.
    pub fn new(moduli: &[u32], frac_count: usize, digit_width_bits: u32) -> Result<Self> {
        Self::validate(moduli, digit_width_bits)?;
        if frac_count == 0 || frac_count >= moduli.len() {
            return Err(RnsError::BadPartition { frac_count, digits: moduli.len() });
        }
        Ok(Self::build(moduli, (0..frac_count).collect(), digit_width_bits))
    }

    /// Builds a set with an explicit choice of fractional moduli, which may
    /// sit anywhere in the digit order. Mixed-radix conversion visits them
    /// first.
    pub fn with_fractional(moduli: &[u32], fractional: &[u32], digit_width_bits: u32) -> Result<Self> {
        Self::validate(moduli, digit_width_bits)?;
        let bad = || RnsError::BadPartition { frac_count: fractional.len(), digits: moduli.len() };
        if fractional.is_empty() || fractional.len() >= moduli.len() {
            return Err(bad());
        }
        let mut positions = Vec::with_capacity(fractional.len());
        for f in fractional {
            let p = moduli.iter().position(|m| m == f).ok_or_else(bad)?;
            if positions.contains(&p) {
                return Err(bad());
            }
            positions.push(p);
        }
        positions.sort_unstable();
        Ok(Self::build(moduli, positions, digit_width_bits))
    }

    fn validate(moduli: &[u32], digit_width_bits: u32) -> Result<()> {
        if moduli.is_empty() {
            return Err(RnsError::EmptyModuli);
        }
        if !(1..=31).contains(&digit_width_bits) {
            return Err(RnsError::BadDigitWidth(digit_width_bits));
        }
        let limit = 1u64 << digit_width_bits;
        for (i, &m) in moduli.iter().enumerate() {
            if m < 2 {
                return Err(RnsError::ModulusTooSmall { index: i, value: m as u64 });
            }
            if m as u64 > limit {
                return Err(RnsError::DigitTooWide(i));
            }
        }
        for i in 0..moduli.len() {
            for j in i + 1..moduli.len() {
                if moduli[i].gcd(&moduli[j]) != 1 {
                    return Err(RnsError::NotCoprime(i, j));
                }
            }
        }
        Ok(())
    }

    fn build(moduli: &[u32], frac_positions: Vec<usize>, digit_width_bits: u32) -> Self {
        let frac_count = frac_positions.len();
        let rest: Vec<usize> = (0..moduli.len()).filter(|i| !frac_positions.contains(i)).collect();
        let mut order = frac_positions;
        order.extend(rest);
        let radices: Vec<u32> = order.iter().map(|&i| moduli[i]).collect();

        let product = |ms: &[u32]| ms.iter().fold(BigUint::one(), |acc, &m| acc * m);
        let range = product(moduli);
        let frac_range = product(&radices[..frac_count]);
        let whole_range = product(&radices[frac_count..]);

        let mut crt_weights = Vec::with_capacity(moduli.len());
        let mut crt_inverses = Vec::with_capacity(moduli.len());
        for &m in moduli {
            let w = &range / m;
            let r = (&w % m).to_u64().expect("residue fits");
            let inv = mod_inverse(r, m as u64).expect("moduli are coprime");
            crt_inverses.push(inv as u32);
            crt_weights.push(w);
        }

        let mrc_inverses = (0..radices.len())
            .map(|a| {
                (0..radices.len())
                    .map(|b| {
                        if b > a {
                            mod_inverse(radices[a] as u64, radices[b] as u64)
                                .expect("moduli are coprime") as u32
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();

        let half: BigUint = (&range + 1u32) >> 1u32;
        let mut rest = half.clone();
        let mut half_mixed_radix = Vec::with_capacity(moduli.len());
        for &m in &radices {
            let (q, r) = rest.div_rem(&BigUint::from(m));
            half_mixed_radix.push(r.to_u32().expect("residue fits"));
            rest = q;
        }

        ModuliSet {
            inner: Arc::new(Tables {
                moduli: moduli.to_vec(),
                frac_count,
                digit_width_bits,
                order,
                radices,
                range,
                frac_range,
                whole_range,
                crt_weights,
                crt_inverses,
                mrc_inverses,
                half,
                half_mixed_radix,
            }),
        }
    }

    /// The ten-modulus 8-bit set with four fractional digits.
    pub fn default_set() -> Self {
        Self::new(&DEFAULT_MODULI, DEFAULT_FRAC_COUNT, DEFAULT_DIGIT_WIDTH)
            .expect("default moduli are valid")
    }

    pub fn moduli(&self) -> &[u32] {
        &self.inner.moduli
    }

    pub fn modulus(&self, i: usize) -> u32 {
        self.inner.moduli[i]
    }

    /// Number of residue digits.
    pub fn len(&self) -> usize {
        self.inner.moduli.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn frac_count(&self) -> usize {
        self.inner.frac_count
    }

    pub fn digit_width_bits(&self) -> u32 {
        self.inner.digit_width_bits
    }

    /// `M`, the product of all moduli.
    pub fn range(&self) -> &BigUint {
        &self.inner.range
    }

    /// `M_F`, the product of the fractional moduli.
    pub fn frac_range(&self) -> &BigUint {
        &self.inner.frac_range
    }

    /// `M_W`, the product of the whole-number moduli.
    pub fn whole_range(&self) -> &BigUint {
        &self.inner.whole_range
    }

    /// `ceil(M / 2)`.
    pub fn half_range(&self) -> &BigUint {
        &self.inner.half
    }

    pub(crate) fn half_mixed_radix(&self) -> &[u32] {
        &self.inner.half_mixed_radix
    }

    pub fn crt_weight(&self, i: usize) -> &BigUint {
        &self.inner.crt_weights[i]
    }

    pub fn crt_inverse(&self, i: usize) -> u32 {
        self.inner.crt_inverses[i]
    }

    /// Digit indices in mixed-radix elimination order.
    pub fn elimination_order(&self) -> &[usize] {
        &self.inner.order
    }

    /// Moduli in elimination order; these are the mixed-radix radices.
    pub fn radices(&self) -> &[u32] {
        &self.inner.radices
    }

    /// Moduli designated as fractional, in declared order.
    pub fn fractional_moduli(&self) -> &[u32] {
        &self.inner.radices[..self.inner.frac_count]
    }

    /// `radix_a^-1 mod radix_b` for elimination positions `a < b`.
    pub fn mrc_inverse(&self, a: usize, b: usize) -> u32 {
        debug_assert!(a < b);
        self.inner.mrc_inverses[a][b]
    }

    /// `floor(log2(M_F))`.
    pub fn fractional_bits(&self) -> u64 {
        self.inner.frac_range.bits() - 1
    }

    /// `floor(log2(M))`.
    pub fn range_bits(&self) -> u64 {
        self.inner.range.bits() - 1
    }

    pub fn position(&self, modulus: u32) -> Option<usize> {
        self.inner.moduli.iter().position(|&m| m == modulus)
    }

    /// Two sets are the same if they declare the same moduli in the same
    /// order with the same fractional split.
    pub fn same_as(&self, other: &ModuliSet) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.moduli == other.inner.moduli
                && self.inner.frac_count == other.inner.frac_count
                && self.inner.order == other.inner.order)
    }

    pub(crate) fn check_same(&self, other: &ModuliSet) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(RnsError::SetMismatch)
        }
    }
}

impl PartialEq for ModuliSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl Eq for ModuliSet {}

impl fmt::Debug for ModuliSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModuliSet")
            .field("moduli", &self.inner.moduli)
            .field("fractional", &self.fractional_moduli())
            .finish()
    }
}
