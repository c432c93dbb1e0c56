use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::optics::BitValue;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KeyError {
    #[error("key length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid bit character {0:?}")]
    BadBit(char),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyRole {
    Raw,
    Sifted,
    Final,
}

/// A bit string together with who holds it and what stage it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyMaterial {
    bits: Vec<bool>,
    role: KeyRole,
    owner: String,
    public: bool,
}

impl KeyMaterial {
    pub fn new(owner: impl Into<String>, role: KeyRole, bits: Vec<bool>) -> Self {
        KeyMaterial {
            bits,
            role,
            owner: owner.into(),
            public: false,
        }
    }

    pub fn from_bit_values(
        owner: impl Into<String>,
        role: KeyRole,
        bits: impl IntoIterator<Item = BitValue>,
    ) -> Self {
        Self::new(
            owner,
            role,
            bits.into_iter().map(BitValue::as_bool).collect(),
        )
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bit(&self, i: usize) -> Option<BitValue> {
        self.bits.get(i).copied().map(BitValue::from_bool)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn role(&self) -> KeyRole {
        self.role
    }

    pub fn owner(&self) -> &str {
        &self.owner
    }

    /// True for strings that were announced over the public channel.
    pub fn is_public(&self) -> bool {
        self.public
    }

    pub fn owned_by(mut self, owner: impl Into<String>) -> Self {
        self.owner = owner.into();
        self
    }

    pub fn with_role(mut self, role: KeyRole) -> Self {
        self.role = role;
        self
    }

    pub fn into_public(mut self) -> Self {
        self.public = true;
        self
    }

    pub fn truncated(&self, len: usize) -> Self {
        let mut k = self.clone();
        k.bits.truncate(len);
        k
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Number of positions where the two keys differ.
    pub fn mismatches(&self, other: &KeyMaterial) -> Result<usize, KeyError> {
        self.check_len(other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Bitwise exclusive-or. The result keeps `self`'s owner and role.
    pub fn xor(&self, other: &KeyMaterial) -> Result<KeyMaterial, KeyError> {
        self.check_len(other)?;
        let bits = self
            .bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| a ^ b)
            .collect();
        Ok(KeyMaterial {
            bits,
            role: self.role,
            owner: self.owner.clone(),
            public: false,
        })
    }

    pub fn same_bits(&self, other: &KeyMaterial) -> bool {
        self.bits == other.bits
    }

    /// SHA-256 of the packed bit string, hex encoded. Used in reports instead
    /// of the key itself.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.bits.len() as u64).to_le_bytes());
        for chunk in self.bits.chunks(8) {
            let byte = chunk
                .iter()
                .enumerate()
                .fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << i));
            hasher.update([byte]);
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn check_len(&self, other: &KeyMaterial) -> Result<(), KeyError> {
        if self.len() != other.len() {
            return Err(KeyError::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for KeyMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Parses a `0`/`1` string into an ownerless raw key.
impl FromStr for KeyMaterial {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(KeyError::BadBit(other)),
            })
            .collect::<Result<_, _>>()?;
        Ok(KeyMaterial::new("", KeyRole::Raw, bits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(s: &str) -> KeyMaterial {
        s.parse().unwrap()
    }

    #[test]
    fn xor_small() {
        assert_eq!(k("1010").xor(&k("0110")).unwrap().to_string(), "1100");
        assert_eq!(k("1011").xor(&k("1011")).unwrap().to_string(), "0000");
    }

    #[test]
    fn xor_rejects_length_mismatch() {
        assert_eq!(
            k("101").xor(&k("1010")).unwrap_err(),
            KeyError::LengthMismatch { left: 3, right: 4 }
        );
    }

    #[test]
    fn parse_rejects_garbage() {
        assert_eq!(
            "10a".parse::<KeyMaterial>().unwrap_err(),
            KeyError::BadBit('a')
        );
    }

    #[test]
    fn digest_depends_on_length_and_content() {
        assert_ne!(k("0").digest(), k("00").digest());
        assert_ne!(k("01").digest(), k("10").digest());
        assert_eq!(k("0110").digest(), k("0110").owned_by("x").digest());
        assert_eq!(k("").digest().len(), 64);
    }

    #[test]
    fn mismatches_counts_differences() {
        assert_eq!(k("0000").mismatches(&k("0110")).unwrap(), 2);
    }
}
