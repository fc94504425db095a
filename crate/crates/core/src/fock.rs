//! Truncated two-species occupation-number basis and its charge sectors.
//!
//! States carry per-mode occupations for particles and anti-particles with
//! total occupation at most `n_max`. The ordering is lexicographic by
//! (total, occ_plus, occ_minus), which makes every assembled matrix
//! reproducible and diffable.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

pub const DEFAULT_DIMENSION_CAP: usize = 200_000;

/// One occupation-number state: particle and anti-particle occupations per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockState {
    pub occ_plus: Vec<u32>,
    pub occ_minus: Vec<u32>,
}

impl FockState {
    pub fn vacuum(modes: usize) -> Self {
        FockState {
            occ_plus: vec![0; modes],
            occ_minus: vec![0; modes],
        }
    }

    pub fn total(&self) -> u32 {
        self.occ_plus.iter().sum::<u32>() + self.occ_minus.iter().sum::<u32>()
    }

    /// Charge index z = (number of particles) - (number of anti-particles).
    pub fn charge_index(&self) -> i64 {
        self.occ_plus.iter().sum::<u32>() as i64 - self.occ_minus.iter().sum::<u32>() as i64
    }

    fn sort_key(&self) -> (u32, &[u32], &[u32]) {
        (self.total(), &self.occ_plus, &self.occ_minus)
    }
}

/// Enumerated basis with index maps and the charge-sector partition.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    n_max: u32,
    states: Vec<FockState>,
    index: HashMap<FockState, usize>,
    sectors: std::collections::BTreeMap<i64, Vec<usize>>,
    totals: Vec<u32>,
    charges: Vec<i64>,
}

/// Closed-form dimension: sum over n + n' <= n_max of
/// C(n + M - 1, M - 1) * C(n' + M - 1, M - 1), which telescopes to
/// C(n_max + 2M, 2M).
pub fn dimension(modes: usize, n_max: u32) -> u128 {
    binomial(n_max as u128 + 2 * modes as u128, 2 * modes as u128)
}

pub fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All occupation pairs with total <= n_max, ordered as documented; refuses
/// to enumerate past `cap` states.
pub fn enumerate_basis(modes: usize, n_max: u32, cap: usize) -> Result<FockBasis> {
    if modes == 0 {
        return Err(Error::Basis("mode count must be at least 1".into()));
    }
    let dim = dimension(modes, n_max);
    if dim > cap as u128 {
        return Err(Error::DimensionCap { dim, cap });
    }
    let mut states = Vec::with_capacity(dim as usize);
    let mut occ = vec![0u32; 2 * modes];
    fill(&mut states, &mut occ, 0, n_max, modes);
    states.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    debug_assert_eq!(states.len() as u128, dim);

    let mut index = HashMap::with_capacity(states.len());
    let mut sectors: std::collections::BTreeMap<i64, Vec<usize>> = Default::default();
    let mut totals = Vec::with_capacity(states.len());
    let mut charges = Vec::with_capacity(states.len());
    for (i, s) in states.iter().enumerate() {
        index.insert(s.clone(), i);
        sectors.entry(s.charge_index()).or_default().push(i);
        totals.push(s.total());
        charges.push(s.charge_index());
    }
    Ok(FockBasis {
        modes,
        n_max,
        states,
        index,
        sectors,
        totals,
        charges,
    })
}

fn fill(states: &mut Vec<FockState>, occ: &mut Vec<u32>, slot: usize, budget: u32, modes: usize) {
    if slot == occ.len() {
        states.push(FockState {
            occ_plus: occ[..modes].to_vec(),
            occ_minus: occ[modes..].to_vec(),
        });
        return;
    }
    for n in 0..=budget {
        occ[slot] = n;
        fill(states, occ, slot + 1, budget - n, modes);
    }
    occ[slot] = 0;
}

impl FockBasis {
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[FockState] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &FockState {
        &self.states[i]
    }

    pub fn index_of(&self, s: &FockState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn total(&self, i: usize) -> u32 {
        self.totals[i]
    }

    pub fn charge_index(&self, i: usize) -> i64 {
        self.charges[i]
    }

    /// Charge-sector partition: z -> ordered index list.
    pub fn sectors(&self) -> &std::collections::BTreeMap<i64, Vec<usize>> {
        &self.sectors
    }

    pub fn sector(&self, z: i64) -> Option<&[usize]> {
        self.sectors.get(&z).map(|v| v.as_slice())
    }

    pub fn vacuum_index(&self) -> usize {
        self.index_of(&FockState::vacuum(self.modes))
            .expect("vacuum always enumerated")
    }

    /// Mask of states with total <= n_max - margin (empty when margin > n_max).
    pub fn interior_mask(&self, margin: u32) -> Vec<bool> {
        match self.n_max.checked_sub(margin) {
            Some(cut) => self.totals.iter().map(|&t| t <= cut).collect(),
            None => vec![false; self.dim()],
        }
    }

    pub fn interior_indices(&self, margin: u32) -> Vec<usize> {
        self.interior_mask(margin)
            .iter()
            .enumerate()
            .filter_map(|(i, &keep)| keep.then_some(i))
            .collect()
    }

    /// Diagonal 0/1 projector onto the interior subspace.
    pub fn interior_projector(&self, margin: u32) -> SparseOperator {
        let mask = self.interior_mask(margin);
        let diag: Vec<f64> = mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        SparseOperator::diagonal_real(&diag)
    }

    /// Probability mass of a normalized vector on states with
    /// total > n_max - depth (the truncation boundary shell).
    pub fn boundary_shell_mass(&self, vector: &[num_complex::Complex64], depth: u32) -> f64 {
        let cut = self.n_max.saturating_sub(depth);
        vector
            .iter()
            .enumerate()
            .filter(|(i, _)| self.totals[*i] > cut)
            .map(|(_, v)| v.norm_sqr())
            .sum()
    }
}
