//! Occupation-number basis of fixed (N, M) sectors.

use std::fmt;

use rustc_hash::FxHashMap;

use crate::combinatorics::SystemShape;
use crate::error::{domain, Result};

/// Occupation numbers `n_m`, indexed by `m + ℓ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationState {
    occ: Vec<u8>,
}

impl OccupationState {
    pub fn vacuum(ell: u32) -> Self {
        Self {
            occ: vec![0; 2 * ell as usize + 1],
        }
    }

    pub fn from_occupations(occ: Vec<u8>) -> Self {
        assert!(occ.len() % 2 == 1, "need 2ℓ+1 substates");
        Self { occ }
    }

    pub fn ell(&self) -> u32 {
        (self.occ.len() / 2) as u32
    }

    pub fn occupations(&self) -> &[u8] {
        &self.occ
    }

    /// Occupation of substate `m`.
    pub fn get(&self, m: i32) -> u8 {
        self.occ[(m + self.ell() as i32) as usize]
    }

    pub fn particles(&self) -> u32 {
        self.occ.iter().map(|&c| c as u32).sum()
    }

    pub fn m_total(&self) -> i64 {
        let ell = self.ell() as i64;
        self.occ
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as i64 - ell) * c as i64)
            .sum()
    }

    fn key(&self) -> PackedKey {
        PackedKey::pack(&self.occ)
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (i, c) in self.occ.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ">")
    }
}

/// Single bosonic ladder operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(i32),
    Annihilate(i32),
}

/// Applies ladder operators to a basis state, in list order (the first
/// element acts first). Returns the resulting state and the bosonic
/// amplitude; amplitude 0 means some annihilator hit an empty substate.
pub fn apply_monomial(state: &OccupationState, ops: &[Ladder]) -> (OccupationState, f64) {
    let mut out = state.clone();
    let ell = state.ell() as i32;
    let mut amp = 1.0;
    for op in ops {
        match *op {
            Ladder::Create(m) => {
                let slot = &mut out.occ[(m + ell) as usize];
                *slot += 1;
                amp *= (*slot as f64).sqrt();
            }
            Ladder::Annihilate(m) => {
                let slot = &mut out.occ[(m + ell) as usize];
                if *slot == 0 {
                    return (state.clone(), 0.0);
                }
                amp *= (*slot as f64).sqrt();
                *slot -= 1;
            }
        }
    }
    (out, amp)
}

/// Occupation vector packed at 8 bits per substate (up to 32 substates).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct PackedKey([u64; 4]);

impl PackedKey {
    #[inline]
    pub(crate) fn pack(occ: &[u8]) -> Self {
        debug_assert!(occ.len() <= 32);
        let mut words = [0u64; 4];
        for (i, &c) in occ.iter().enumerate() {
            words[i / 8] |= (c as u64) << (8 * (i % 8));
        }
        Self(words)
    }
}

/// All occupation states of one (N, M) sector in lexicographic order of
/// `(n_{-ℓ}, …, n_ℓ)`, with a reverse index.
#[derive(Debug, Clone)]
pub struct SectorBasis {
    shape: SystemShape,
    m_total: i64,
    width: usize,
    // states stored contiguously, `width` bytes each
    occ: Vec<u8>,
    index: FxHashMap<PackedKey, u32>,
}

impl SectorBasis {
    pub fn shape(&self) -> SystemShape {
        self.shape
    }

    pub fn m_total(&self) -> i64 {
        self.m_total
    }

    pub fn ell(&self) -> u32 {
        self.shape.ell()
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    /// Raw occupations of the basis state at `i`.
    #[inline]
    pub fn occupations(&self, i: usize) -> &[u8] {
        &self.occ[i * self.width..(i + 1) * self.width]
    }

    pub fn state(&self, i: usize) -> OccupationState {
        OccupationState {
            occ: self.occupations(i).to_vec(),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = OccupationState> + '_ {
        (0..self.len()).map(|i| self.state(i))
    }

    pub fn position(&self, state: &OccupationState) -> Option<usize> {
        self.index.get(&state.key()).map(|&i| i as usize)
    }

    #[inline]
    pub(crate) fn position_raw(&self, occ: &[u8]) -> Option<usize> {
        self.index.get(&PackedKey::pack(occ)).map(|&i| i as usize)
    }
}

/// Enumerates the sector with `N = shape.n()` particles and projection `m_total`.
pub fn enumerate_sector(shape: SystemShape, m_total: i64) -> Result<SectorBasis> {
    let jm = shape.j_max() as i64;
    if m_total.abs() > jm {
        return domain(format!("|M|={} exceeds Nℓ={jm}", m_total.abs()));
    }
    let width = shape.substates();
    let ell = shape.ell() as i64;
    let mut occ_store = Vec::new();
    let mut current = vec![0u8; width];

    // Depth-first over substates m = -ℓ..ℓ with ascending occupation,
    // pruning branches whose remaining projection is unreachable.
    fn descend(
        pos: usize,
        left: i64,
        need: i64,
        ell: i64,
        current: &mut Vec<u8>,
        out: &mut Vec<u8>,
    ) {
        let width = current.len();
        let m = pos as i64 - ell;
        if pos == width - 1 {
            if need == left * m {
                current[pos] = left as u8;
                out.extend_from_slice(current);
            }
            return;
        }
        for c in 0..=left {
            let rest = left - c;
            let rest_need = need - c * m;
            // remaining particles sit in substates m+1..=ℓ
            if rest_need < rest * (m + 1) || rest_need > rest * ell {
                continue;
            }
            current[pos] = c as u8;
            descend(pos + 1, rest, rest_need, ell, current, out);
        }
        current[pos] = 0;
    }

    let n = shape.n() as i64;
    if n == 0 {
        if m_total == 0 {
            occ_store.extend_from_slice(&current);
        }
    } else {
        descend(0, n, m_total, ell, &mut current, &mut occ_store);
    }

    let count = occ_store.len() / width;
    let mut index = FxHashMap::with_capacity_and_hasher(count, Default::default());
    for i in 0..count {
        index.insert(PackedKey::pack(&occ_store[i * width..(i + 1) * width]), i as u32);
    }
    Ok(SectorBasis {
        shape,
        m_total,
        width,
        occ: occ_store,
        index,
    })
}
