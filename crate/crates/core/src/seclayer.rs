//! Seeded 2-universal hash security layer.
//!
//! The encoder maps a secret message `m` (k bits) and fresh randomization
//! `b` (q−k bits) to `s⁻¹ ⊙ (m‖b)` in GF(2^q); the decoder hashes a q-bit
//! word `v` to the k most significant bits of `s ⊙ v`. `m` occupies the high
//! end of the concatenation, so `ψ_s(φ_s(m, b)) = m` for every `b`.

use rand::Rng;

use crate::error::{contract, Error, Result};
use crate::gf2q::{
    bits_to_value, gf_inv, mul_raw, value_to_bits, FieldElement, ReductionPolynomial,
};

/// Hash seed: a nonzero field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Seed(FieldElement);

impl Seed {
    pub fn new(element: FieldElement) -> Result<Self> {
        if element.is_zero() {
            return Err(Error::NonInvertible(0));
        }
        Ok(Self(element))
    }

    pub fn from_value(value: u32, width: u32) -> Result<Self> {
        Self::new(FieldElement::new(value, width)?)
    }

    pub fn element(&self) -> FieldElement {
        self.0
    }

    pub fn width(&self) -> u32 {
        self.0.width()
    }

    /// Every valid seed of the given width, in increasing order.
    pub fn all(width: u32) -> Result<Vec<Seed>> {
        (1..(1u32 << width))
            .map(|v| Seed::from_value(v, width))
            .collect()
    }
}

macro_rules! bit_word {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, Hash)]
        pub struct $name(Vec<u8>);

        impl $name {
            pub fn new(bits: Vec<u8>) -> Result<Self> {
                contract!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
                Ok(Self(bits))
            }

            pub fn from_value(value: u32, len: usize) -> Self {
                Self(value_to_bits(value, len))
            }

            pub fn bits(&self) -> &[u8] {
                &self.0
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }

            /// MSB-first integer value.
            pub fn value(&self) -> u32 {
                bits_to_value(&self.0).expect("validated on construction")
            }
        }
    };
}

bit_word!(
    /// Secret message `m ∈ {0,1}^k`.
    SecretMessage
);
bit_word!(
    /// Randomization `b ∈ {0,1}^(q−k)`.
    RandomizationBits
);
bit_word!(
    /// Output of the preimage map, `v ∈ {0,1}^q`.
    RandomizedWord
);

pub fn encode_secure(m: &SecretMessage, b: &RandomizationBits, s: &Seed) -> Result<RandomizedWord> {
    let q = s.width() as usize;
    contract!(
        !m.is_empty() && m.len() < q,
        "message length {} must lie in [1, {q})",
        m.len()
    );
    contract!(
        m.len() + b.len() == q,
        "message ({}) and randomization ({}) lengths must sum to q={q}",
        m.len(),
        b.len()
    );
    let concat = FieldElement::new((m.value() << b.len()) | b.value(), q as u32)?;
    let v = gf_inv(s.element())?.mul(concat)?;
    Ok(RandomizedWord::from_value(v.value(), q))
}

/// `ψ_s`: truncation of `s ⊙ v` to its `k` most significant bits.
pub fn decode_secure(v: &RandomizedWord, s: &Seed, k: usize) -> Result<SecretMessage> {
    let q = s.width() as usize;
    contract!(v.len() == q, "word length {} != q={q}", v.len());
    contract!(k >= 1 && k < q, "k={k} must lie in [1, {q})");
    let product = s.element().mul(FieldElement::new(v.value(), q as u32)?)?;
    Ok(SecretMessage::from_value(product.value() >> (q - k), k))
}

pub fn sample_randomization<R: Rng + ?Sized>(rng: &mut R, k: usize, q: usize) -> RandomizationBits {
    RandomizationBits((0..q - k).map(|_| rng.random_range(0..=1u8)).collect())
}

/// Table-driven security layer for a fixed `(k, q, s)`, operating on
/// integer words for the Monte-Carlo hot paths.
#[derive(Debug, Clone)]
pub struct SecurityLayer {
    k: usize,
    seed: Seed,
    preimage: Vec<u32>,
    hash: Vec<u32>,
}

impl SecurityLayer {
    pub fn new(k: usize, seed: Seed) -> Result<Self> {
        let q = seed.width();
        contract!(k >= 1 && (k as u32) < q, "k={k} must lie in [1, {q})");
        let mask = ReductionPolynomial::for_width(q)?.mask();
        let s = seed.element().value();
        let s_inv = gf_inv(seed.element())?.value();
        let size = 1u32 << q;
        let preimage = (0..size).map(|x| mul_raw(s_inv, x, q, mask)).collect();
        let hash = (0..size)
            .map(|v| mul_raw(s, v, q, mask) >> (q as usize - k))
            .collect();
        Ok(Self {
            k,
            seed,
            preimage,
            hash,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q(&self) -> usize {
        self.seed.width() as usize
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    /// `φ_s(m, b)` on integers: `m < 2^k`, `b < 2^(q−k)`.
    #[inline]
    pub fn encode_index(&self, m: u32, b: u32) -> u32 {
        self.preimage[((m << (self.q() - self.k)) | b) as usize]
    }

    /// `ψ_s(v)` on integers.
    #[inline]
    pub fn decode_index(&self, v: u32) -> u32 {
        self.hash[v as usize]
    }

    pub fn encode(&self, m: &SecretMessage, b: &RandomizationBits) -> Result<RandomizedWord> {
        contract!(
            m.len() == self.k,
            "message length {} != k={}",
            m.len(),
            self.k
        );
        contract!(
            b.len() == self.q() - self.k,
            "randomization length {} != q-k={}",
            b.len(),
            self.q() - self.k
        );
        Ok(RandomizedWord::from_value(
            self.encode_index(m.value(), b.value()),
            self.q(),
        ))
    }

    pub fn decode(&self, v: &RandomizedWord) -> Result<SecretMessage> {
        contract!(
            v.len() == self.q(),
            "word length {} != q={}",
            v.len(),
            self.q()
        );
        Ok(SecretMessage::from_value(
            self.decode_index(v.value()),
            self.k,
        ))
    }
}
