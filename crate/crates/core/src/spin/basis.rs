use crate::{Error, Result};

/// Largest chain handled by the dense backend. A 12-spin operator is a
/// 4096 x 4096 complex matrix (256 MiB).
pub const MAX_SPINS: usize = 12;

/// Hilbert-space dimension `2^n_spins`, rejecting chains the dense backend
/// cannot hold.
pub fn dimension(n_spins: usize) -> Result<usize> {
    if n_spins == 0 {
        return Err(Error::invalid("a chain needs at least one spin"));
    }
    if n_spins > MAX_SPINS {
        return Err(Error::TooManySpins { n: n_spins, max: MAX_SPINS });
    }
    Ok(1 << n_spins)
}

/// A z-basis product state `|k_1 ... k_N>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinBasisState {
    bits: Vec<u8>,
}

impl SpinBasisState {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        dimension(bits.len())?;
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::invalid(format!("basis bit {b} is not 0 or 1")));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n_spins: usize) -> Self {
        Self { bits: vec![0; n_spins] }
    }

    /// The state whose basis index is `index` (site `i` = bit `i - 1`).
    pub fn from_index(n_spins: usize, index: usize) -> Self {
        Self {
            bits: (0..n_spins).map(|i| ((index >> i) & 1) as u8).collect(),
        }
    }

    pub fn index(&self) -> usize {
        self.bits
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &b)| acc | ((b as usize) << i))
    }

    pub fn n_spins(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Bit of site `site` (1-based).
    pub fn bit(&self, site: usize) -> u8 {
        self.bits[site - 1]
    }

    pub fn hamming_distance(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }
}
