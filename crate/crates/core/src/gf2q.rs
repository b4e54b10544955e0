//! Arithmetic in the binary extension fields GF(2^q), 2 ≤ q ≤ 16.
//!
//! Elements are stored as integers whose bit `i` is the coefficient of `x^i`.
//! External bit sequences are read most significant bit first, so the
//! leftmost bit of a sequence is the highest-degree coefficient.

use std::fmt;

use crate::error::{contract, Error, Result};

pub const MIN_WIDTH: u32 = 2;
pub const MAX_WIDTH: u32 = 16;

/// Reduction polynomial per width, including the leading `x^q` term.
const POLYNOMIALS: [u32; 15] = [
    0b111,      // q=2:  x^2 + x + 1
    0b1011,     // q=3:  x^3 + x + 1
    0b10011,    // q=4:  x^4 + x + 1
    0b100101,   // q=5:  x^5 + x^2 + 1
    0b1000011,  // q=6:  x^6 + x + 1
    0b10000011, // q=7:  x^7 + x + 1
    0x11B,      // q=8:  x^8 + x^4 + x^3 + x + 1
    0x211,      // q=9:  x^9 + x^4 + 1
    0x409,      // q=10: x^10 + x^3 + 1
    0x805,      // q=11: x^11 + x^2 + 1
    0x1053,     // q=12: x^12 + x^6 + x^4 + x + 1
    0x201B,     // q=13: x^13 + x^4 + x^3 + x + 1
    0x4443,     // q=14: x^14 + x^10 + x^6 + x + 1
    0x8003,     // q=15: x^15 + x + 1
    0x1100B,    // q=16: x^16 + x^12 + x^3 + x + 1
];

/// Degree-`q` irreducible polynomial defining GF(2^q).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReductionPolynomial {
    width: u32,
    mask: u32,
}

impl ReductionPolynomial {
    pub fn for_width(width: u32) -> Result<Self> {
        check_width(width)?;
        Ok(Self {
            width,
            mask: POLYNOMIALS[(width - MIN_WIDTH) as usize],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Coefficient mask including the leading term.
    pub fn mask(&self) -> u32 {
        self.mask
    }

    /// Trial division by every polynomial of degree 1..=q/2.
    pub fn is_irreducible(&self) -> bool {
        let degree = self.width;
        for d in 1..=degree / 2 {
            for divisor in (1u32 << d)..(1u32 << (d + 1)) {
                if poly_mod(self.mask, divisor) == 0 {
                    return false;
                }
            }
        }
        true
    }
}

fn poly_degree(p: u32) -> u32 {
    31 - p.leading_zeros()
}

fn poly_mod(mut a: u32, divisor: u32) -> u32 {
    let dd = poly_degree(divisor);
    while a != 0 && poly_degree(a) >= dd {
        a ^= divisor << (poly_degree(a) - dd);
    }
    a
}

fn check_width(width: u32) -> Result<()> {
    contract!(
        (MIN_WIDTH..=MAX_WIDTH).contains(&width),
        "field width {width} outside [{MIN_WIDTH}, {MAX_WIDTH}]"
    );
    Ok(())
}

/// An element of GF(2^q).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    width: u32,
}

impl FieldElement {
    pub fn new(value: u32, width: u32) -> Result<Self> {
        check_width(width)?;
        contract!(
            value < (1 << width),
            "value {value:#x} does not fit in {width} bits"
        );
        Ok(Self { value, width })
    }

    pub fn zero(width: u32) -> Result<Self> {
        Self::new(0, width)
    }

    pub fn one(width: u32) -> Result<Self> {
        Self::new(1, width)
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    /// Field addition (bitwise XOR).
    pub fn add(self, other: Self) -> Result<Self> {
        same_width(self, other)?;
        Ok(Self {
            value: self.value ^ other.value,
            width: self.width,
        })
    }

    pub fn mul(self, other: Self) -> Result<Self> {
        gf_mul(self, other)
    }

    pub fn inv(self) -> Result<Self> {
        gf_inv(self)
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF(2^{})[{:#x}]", self.width, self.value)
    }
}

fn same_width(a: FieldElement, b: FieldElement) -> Result<()> {
    contract!(
        a.width == b.width,
        "field width mismatch: {} vs {}",
        a.width,
        b.width
    );
    Ok(())
}

/// Carry-less product reduced modulo the width's polynomial.
///
/// Operates on raw values; callers must guarantee `a, b < 2^width`.
#[inline]
pub(crate) fn mul_raw(mut a: u32, mut b: u32, width: u32, mask: u32) -> u32 {
    let top = 1u32 << width;
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & top != 0 {
            a ^= mask;
        }
    }
    acc
}

pub fn gf_mul(a: FieldElement, b: FieldElement) -> Result<FieldElement> {
    same_width(a, b)?;
    let poly = ReductionPolynomial::for_width(a.width)?;
    Ok(FieldElement {
        value: mul_raw(a.value, b.value, a.width, poly.mask),
        width: a.width,
    })
}

/// Multiplicative inverse via `a^(2^q - 2)`.
pub fn gf_inv(a: FieldElement) -> Result<FieldElement> {
    if a.is_zero() {
        return Err(Error::NonInvertible(0));
    }
    let mask = ReductionPolynomial::for_width(a.width)?.mask;
    let mut exponent = (1u32 << a.width) - 2;
    let mut base = a.value;
    let mut acc = 1u32;
    while exponent != 0 {
        if exponent & 1 == 1 {
            acc = mul_raw(acc, base, a.width, mask);
        }
        base = mul_raw(base, base, a.width, mask);
        exponent >>= 1;
    }
    Ok(FieldElement {
        value: acc,
        width: a.width,
    })
}

/// Reads `bits` (each 0 or 1) MSB first into an element of width `bits.len()`.
pub fn bits_to_element(bits: &[u8]) -> Result<FieldElement> {
    let width = bits.len() as u32;
    check_width(width)?;
    FieldElement::new(bits_to_value(bits)?, width)
}

pub fn element_to_bits(e: FieldElement) -> Vec<u8> {
    value_to_bits(e.value, e.width as usize)
}

/// MSB-first packing of a 0/1 sequence. Accepts any length up to 32.
pub fn bits_to_value(bits: &[u8]) -> Result<u32> {
    contract!(bits.len() <= 32, "bit sequence too long ({})", bits.len());
    bits.iter().try_fold(0u32, |acc, &bit| {
        contract!(bit <= 1, "bit value {bit} is not 0 or 1");
        Ok((acc << 1) | bit as u32)
    })
}

pub fn value_to_bits(value: u32, len: usize) -> Vec<u8> {
    (0..len).rev().map(|i| ((value >> i) & 1) as u8).collect()
}
