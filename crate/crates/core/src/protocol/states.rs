use crate::spin::SpinBasisState;
use crate::{Error, Result};

/// The initial states `E_n = {k_0, ..., k_{2^n - 1}}`, where `k_s` is the
/// reverse N-bit binary representation of `s` (site 1 carries the lowest bit).
/// With the crate's bit convention the basis index of `k_s` is `s` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialStateFamily {
    pub order: usize,
    pub states: Vec<SpinBasisState>,
}

impl InitialStateFamily {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Hamming distance `D[k_0, k_s]`.
    pub fn distance(&self, s: usize) -> usize {
        s.count_ones() as usize
    }
}

pub fn enumerate_initial_states(n_spins: usize, order: usize) -> Result<InitialStateFamily> {
    crate::spin::dimension(n_spins)?;
    if order > n_spins {
        return Err(Error::invalid(format!("order {order} exceeds chain length {n_spins}")));
    }
    Ok(InitialStateFamily {
        order,
        states: (0..1usize << order).map(|s| SpinBasisState::from_index(n_spins, s)).collect(),
    })
}

/// `(-2)^{-d}`.
pub fn hamming_weight(distance: usize) -> f64 {
    (-0.5f64).powi(distance as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_zero_is_reference_state_only() {
        let fam = enumerate_initial_states(10, 0).unwrap();
        assert_eq!(fam.states, vec![SpinBasisState::zeros(10)]);
    }

    #[test]
    fn order_two_flips_first_two_sites() {
        let fam = enumerate_initial_states(10, 2).unwrap();
        let flipped: Vec<Vec<usize>> = fam
            .states
            .iter()
            .map(|k| (1..=10).filter(|&i| k.bit(i) == 1).collect())
            .collect();
        assert_eq!(flipped, vec![vec![], vec![1], vec![2], vec![1, 2]]);
        let zero = SpinBasisState::zeros(10);
        let d: Vec<usize> = fam.states.iter().map(|k| k.hamming_distance(&zero)).collect();
        assert_eq!(d, vec![0, 1, 1, 2]);
        assert_eq!((0..4).map(|s| fam.distance(s)).collect::<Vec<_>>(), d);
    }

    #[test]
    fn full_order_spans_basis() {
        let fam = enumerate_initial_states(4, 4).unwrap();
        assert_eq!(fam.len(), 16);
        for (s, k) in fam.states.iter().enumerate() {
            assert_eq!(k.index(), s);
        }
        assert!(enumerate_initial_states(4, 5).is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(hamming_weight(0), 1.0);
        assert_eq!(hamming_weight(1), -0.5);
        assert_eq!(hamming_weight(2), 0.25);
    }
}
