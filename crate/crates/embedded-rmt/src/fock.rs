//! Many-body state spaces and second-quantized operator actions.
//!
//! Fermionic states are bit-sets over `l` single-particle levels; bosonic
//! states pack per-level multiplicities into 4-bit nibbles. A state
//! `{j_1 < ... < j_m}` is defined as `a+_{j_1} ... a+_{j_m} |0>`, which makes
//! the annihilation sign `(-1)^(number of occupied levels strictly below the
//! target)` and therefore popcount-computable.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigUint;

use crate::combinatorics::binomial;
use crate::error::{Error, Result};

/// Hard limits of the packed representations.
pub const MAX_FERMIONIC_LEVELS: u16 = 64;
pub const MAX_BOSONIC_LEVELS: u16 = 16;
pub const MAX_BOSONIC_OCCUPANCY: u8 = 15;

/// Default cap on enumerated basis sizes.
pub const DEFAULT_BASIS_CAP: u128 = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Fermionic,
    Bosonic,
}

/// A strictly increasing tuple of 1-based level indices, the bold j / bold i
/// labelling one slot of the k-body potential.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexTuple(Vec<u16>);

impl IndexTuple {
    pub fn new(indices: Vec<u16>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) || indices.iter().any(|&x| x == 0) {
            return Err(Error::InvalidParams(format!(
                "index tuple must be strictly increasing and 1-based, got {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[u16] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bitmask with bit (level - 1) set for each index.
    pub fn mask(&self) -> u64 {
        self.0.iter().fold(0u64, |acc, &x| acc | 1 << (x - 1))
    }

    /// Image under a level permutation (re-sorted to increasing order).
    pub fn map_levels(&self, sigma: impl Fn(u16) -> u16) -> IndexTuple {
        let mut v: Vec<u16> = self.0.iter().map(|&x| sigma(x)).collect();
        v.sort_unstable();
        IndexTuple(v)
    }
}

impl fmt::Display for IndexTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, ")")
    }
}

/// All strictly increasing k-tuples over levels 1..=l, lexicographic.
pub fn all_index_tuples(l: u16, k: u16) -> Vec<IndexTuple> {
    let mut out = Vec::new();
    let mut cur: Vec<u16> = (1..=k).collect();
    if k > l {
        return out;
    }
    if k == 0 {
        out.push(IndexTuple(Vec::new()));
        return out;
    }
    loop {
        out.push(IndexTuple(cur.clone()));
        // advance the combination
        let mut i = k as usize;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < l - (k - 1 - i as u16) {
                cur[i] += 1;
                for j in i + 1..k as usize {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// One many-body basis state over `l` levels: a fermionic bit-set or a
/// bosonic multiset (4-bit occupancies).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupationState {
    statistics: Statistics,
    levels: u16,
    bits: u64,
}

impl OccupationState {
    pub fn vacuum(statistics: Statistics, levels: u16) -> Result<Self> {
        match statistics {
            Statistics::Fermionic if levels > MAX_FERMIONIC_LEVELS => Err(Error::InvalidParams(
                format!("fermionic level count {levels} exceeds {MAX_FERMIONIC_LEVELS}"),
            )),
            Statistics::Bosonic if levels > MAX_BOSONIC_LEVELS => Err(Error::InvalidParams(
                format!("bosonic level count {levels} exceeds {MAX_BOSONIC_LEVELS}"),
            )),
            _ => Ok(Self { statistics, levels, bits: 0 }),
        }
    }

    pub fn fermionic_from_levels(levels: u16, occupied: &[u16]) -> Result<Self> {
        let mut s = Self::vacuum(Statistics::Fermionic, levels)?;
        for &x in occupied {
            if x == 0 || x > levels {
                return Err(Error::InvalidParams(format!("level {x} out of range 1..={levels}")));
            }
            if s.bits & (1 << (x - 1)) != 0 {
                return Err(Error::InvalidParams(format!("level {x} repeated in fermionic state")));
            }
            s.bits |= 1 << (x - 1);
        }
        Ok(s)
    }

    pub fn bosonic_from_occupancies(levels: u16, occ: &[u8]) -> Result<Self> {
        if occ.len() != levels as usize {
            return Err(Error::InvalidParams("occupancy list length must equal level count".into()));
        }
        let mut s = Self::vacuum(Statistics::Bosonic, levels)?;
        for (i, &n) in occ.iter().enumerate() {
            if n > MAX_BOSONIC_OCCUPANCY {
                return Err(Error::InvalidParams(format!("occupancy {n} exceeds nibble capacity")));
            }
            s.bits |= (n as u64) << (4 * i);
        }
        Ok(s)
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn levels(&self) -> u16 {
        self.levels
    }

    /// Raw packed representation; unique per (statistics, levels).
    pub fn key(&self) -> u64 {
        self.bits
    }

    pub fn occupancy(&self, level: u16) -> u8 {
        debug_assert!(level >= 1 && level <= self.levels);
        match self.statistics {
            Statistics::Fermionic => ((self.bits >> (level - 1)) & 1) as u8,
            Statistics::Bosonic => ((self.bits >> (4 * (level - 1))) & 0xF) as u8,
        }
    }

    /// Total particle count.
    pub fn particle_count(&self) -> u16 {
        match self.statistics {
            Statistics::Fermionic => self.bits.count_ones() as u16,
            Statistics::Bosonic => {
                (0..self.levels).map(|i| ((self.bits >> (4 * i)) & 0xF) as u16).sum()
            }
        }
    }

    /// Occupied levels in increasing order, with multiplicity for bosons.
    pub fn occupied_levels(&self) -> Vec<u16> {
        let mut v = Vec::new();
        for x in 1..=self.levels {
            for _ in 0..self.occupancy(x) {
                v.push(x);
            }
        }
        v
    }

    /// Distinct occupied levels in increasing order.
    pub fn support(&self) -> Vec<u16> {
        (1..=self.levels).filter(|&x| self.occupancy(x) > 0).collect()
    }

    fn fermionic_parity_below(&self, level: u16) -> i8 {
        let below = self.bits & ((1u64 << (level - 1)) - 1);
        if below.count_ones() % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// Lexicographic comparison on the occupied-level lists, which is the
    /// canonical basis order.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.occupied_levels().cmp(&other.occupied_levels())
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, x) in self.occupied_levels().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "}}")
    }
}

/// Amplitude of an operator-string application: `sign * sqrt(radicand)`.
/// Fermionic paths keep `radicand = 1`; bosonic occupation factors accumulate
/// under the square root exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Amplitude {
    pub sign: i8,
    pub radicand: u128,
}

impl Amplitude {
    pub const ONE: Amplitude = Amplitude { sign: 1, radicand: 1 };

    pub fn combine(self, other: Amplitude) -> Amplitude {
        Amplitude {
            sign: self.sign * other.sign,
            radicand: self
                .radicand
                .checked_mul(other.radicand)
                .expect("bosonic amplitude radicand overflow"),
        }
    }

    pub fn value(&self) -> f64 {
        self.sign as f64 * (self.radicand as f64).sqrt()
    }

    /// Exact integer value of a closed-walk amplitude, whose radicand is
    /// always a perfect square. Panics if it is not.
    pub fn exact_integer(&self) -> i128 {
        let r = integer_sqrt(self.radicand);
        assert_eq!(r * r, self.radicand, "closed-walk radicand must be a perfect square");
        self.sign as i128 * r as i128
    }
}

fn integer_sqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x.saturating_mul(x) > n {
        x -= 1;
    }
    while (x + 1).saturating_mul(x + 1) <= n {
        x += 1;
    }
    x
}

/// Apply a single annihilation operator `a_level`. `None` is the kill value.
pub fn apply_annihilation(state: &OccupationState, level: u16) -> Option<(Amplitude, OccupationState)> {
    let n = state.occupancy(level);
    if n == 0 {
        return None;
    }
    let mut out = *state;
    match state.statistics {
        Statistics::Fermionic => {
            out.bits &= !(1 << (level - 1));
            Some((Amplitude { sign: state.fermionic_parity_below(level), radicand: 1 }, out))
        }
        Statistics::Bosonic => {
            out.bits -= 1u64 << (4 * (level - 1));
            Some((Amplitude { sign: 1, radicand: n as u128 }, out))
        }
    }
}

/// Apply a single creation operator `a+_level`.
pub fn apply_creation(state: &OccupationState, level: u16) -> Option<(Amplitude, OccupationState)> {
    let n = state.occupancy(level);
    let mut out = *state;
    match state.statistics {
        Statistics::Fermionic => {
            if n != 0 {
                return None;
            }
            out.bits |= 1 << (level - 1);
            Some((Amplitude { sign: state.fermionic_parity_below(level), radicand: 1 }, out))
        }
        Statistics::Bosonic => {
            if n >= MAX_BOSONIC_OCCUPANCY {
                return None;
            }
            out.bits += 1u64 << (4 * (level - 1));
            Some((Amplitude { sign: 1, radicand: (n + 1) as u128 }, out))
        }
    }
}

/// Apply the annihilation string `a_t = a_{t_k} ... a_{t_1}` (the factor
/// closest to the ket, `a_{t_1}`, acts first).
pub fn apply_annihilation_string(
    state: &OccupationState,
    t: &IndexTuple,
) -> Option<(Amplitude, OccupationState)> {
    let mut amp = Amplitude::ONE;
    let mut cur = *state;
    for &x in t.indices() {
        let (a, next) = apply_annihilation(&cur, x)?;
        amp = amp.combine(a);
        cur = next;
    }
    Some((amp, cur))
}

/// Apply the creation string `a+_t = a+_{t_1} ... a+_{t_k}` (the factor
/// closest to the ket, `a+_{t_k}`, acts first).
pub fn apply_creation_string(
    state: &OccupationState,
    t: &IndexTuple,
) -> Option<(Amplitude, OccupationState)> {
    let mut amp = Amplitude::ONE;
    let mut cur = *state;
    for &x in t.indices().iter().rev() {
        let (a, next) = apply_creation(&cur, x)?;
        amp = amp.combine(a);
        cur = next;
    }
    Some((amp, cur))
}

/// Apply the full monomial `a+_j a_i` to `|nu>`, returning the resulting
/// state and amplitude.
pub fn apply_monomial(
    nu: &OccupationState,
    j: &IndexTuple,
    i: &IndexTuple,
) -> Option<(Amplitude, OccupationState)> {
    let (a1, mid) = apply_annihilation_string(nu, i)?;
    let (a2, out) = apply_creation_string(&mid, j)?;
    Some((a1.combine(a2), out))
}

/// Mask form of `apply_annihilation_string`: levels are the set bits of
/// `i_mask` (bit x is level x + 1), annihilated in increasing order.
pub fn apply_annihilation_mask(
    state: &OccupationState,
    i_mask: u64,
) -> Option<(Amplitude, OccupationState)> {
    let mut cur = *state;
    match state.statistics {
        Statistics::Fermionic => {
            if cur.bits & i_mask != i_mask {
                return None;
            }
            let mut sign = 1i8;
            let mut rest = i_mask;
            while rest != 0 {
                let bit = rest & rest.wrapping_neg();
                let below = cur.bits & (bit - 1);
                if below.count_ones() % 2 == 1 {
                    sign = -sign;
                }
                cur.bits ^= bit;
                rest ^= bit;
            }
            Some((Amplitude { sign, radicand: 1 }, cur))
        }
        Statistics::Bosonic => {
            let mut radicand: u128 = 1;
            let mut rest = i_mask;
            while rest != 0 {
                let level = rest.trailing_zeros() as u16 + 1;
                let n = cur.occupancy(level);
                if n == 0 {
                    return None;
                }
                radicand *= n as u128;
                cur.bits -= 1u64 << (4 * (level - 1));
                rest &= rest - 1;
            }
            Some((Amplitude { sign: 1, radicand }, cur))
        }
    }
}

/// Mask form of `apply_creation_string`: levels created in decreasing order,
/// which matches applying `a+_{j_1} ... a+_{j_k}` right to left.
pub fn apply_creation_mask(
    state: &OccupationState,
    j_mask: u64,
) -> Option<(Amplitude, OccupationState)> {
    let mut cur = *state;
    match state.statistics {
        Statistics::Fermionic => {
            if cur.bits & j_mask != 0 {
                return None;
            }
            let mut sign = 1i8;
            let mut rest = j_mask;
            while rest != 0 {
                // highest set bit first
                let bit = 1u64 << (63 - rest.leading_zeros());
                let below = cur.bits & (bit - 1);
                if below.count_ones() % 2 == 1 {
                    sign = -sign;
                }
                cur.bits |= bit;
                rest ^= bit;
            }
            Some((Amplitude { sign, radicand: 1 }, cur))
        }
        Statistics::Bosonic => {
            let mut radicand: u128 = 1;
            let mut rest = j_mask;
            while rest != 0 {
                let level = 63 - rest.leading_zeros();
                let lv = level as u16 + 1;
                let n = cur.occupancy(lv);
                if n >= MAX_BOSONIC_OCCUPANCY {
                    return None;
                }
                radicand *= (n + 1) as u128;
                cur.bits += 1u64 << (4 * (lv - 1));
                rest ^= 1u64 << level;
            }
            Some((Amplitude { sign: 1, radicand }, cur))
        }
    }
}

/// Mask form of the monomial `a+_j a_i`.
pub fn apply_monomial_masks(
    nu: &OccupationState,
    j_mask: u64,
    i_mask: u64,
) -> Option<(Amplitude, OccupationState)> {
    let (a1, mid) = apply_annihilation_mask(nu, i_mask)?;
    let (a2, out) = apply_creation_mask(&mid, j_mask)?;
    Some((a1.combine(a2), out))
}

/// Visit every k-element submask of `mask` exactly once; `f` returning false
/// stops the enumeration.
pub fn for_each_k_submask(mask: u64, k: u16, f: &mut impl FnMut(u64) -> bool) -> bool {
    fn rec(bits: &[u8], k: usize, start: usize, acc: u64, f: &mut impl FnMut(u64) -> bool) -> bool {
        if k == 0 {
            return f(acc);
        }
        if bits.len() - start < k {
            return true;
        }
        for i in start..=bits.len() - k {
            if !rec(bits, k - 1, i + 1, acc | (1u64 << bits[i]), f) {
                return false;
            }
        }
        true
    }
    let mut positions = [0u8; 64];
    let mut count = 0usize;
    let mut rest = mask;
    while rest != 0 {
        positions[count] = rest.trailing_zeros() as u8;
        count += 1;
        rest &= rest - 1;
    }
    rec(&positions[..count], k as usize, 0, 0, f)
}

/// `<mu| a+_{j_1}...a+_{j_k} a_{i_k}...a_{i_1} |nu>`, composed from the two
/// string operations. Zero unless the strings map `nu` exactly onto `mu`.
pub fn monomial_element(
    mu: &OccupationState,
    j: &IndexTuple,
    i: &IndexTuple,
    nu: &OccupationState,
) -> Amplitude {
    assert_eq!(j.len(), i.len(), "creation and annihilation tuples must have equal order");
    match apply_monomial(nu, j, i) {
        Some((amp, out)) if out == *mu => amp,
        _ => Amplitude { sign: 0, radicand: 0 },
    }
}

/// All C(m, k) increasing k-tuples drawn from the occupied set. For bosonic
/// states the tuples are drawn from the support (strictly increasing tuples
/// never repeat a level).
pub fn k_subsets(state: &OccupationState, k: u16) -> Vec<IndexTuple> {
    let support = state.support();
    let mut out = Vec::new();
    let n = support.len();
    if (k as usize) > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k as usize).collect();
    loop {
        out.push(IndexTuple(idx.iter().map(|&i| support[i]).collect()));
        let mut i = k as usize;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - (k as usize - i) {
                idx[i] += 1;
                for j in i + 1..k as usize {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// An ordered, duplicate-free many-body basis.
#[derive(Debug, Clone)]
pub struct Basis {
    states: Vec<OccupationState>,
    index: std::collections::HashMap<u64, usize>,
    levels: u16,
    particles: u16,
    statistics: Statistics,
}

impl Basis {
    pub fn states(&self) -> &[OccupationState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn levels(&self) -> u16 {
        self.levels
    }

    pub fn particles(&self) -> u16 {
        self.particles
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn index_of(&self, state: &OccupationState) -> Option<usize> {
        self.index.get(&state.key()).copied()
    }
}

/// Number of basis states without enumerating them: C(l, m) for fermions,
/// C(l+m-1, m) for bosons.
pub fn basis_size(l: u16, m: u16, statistics: Statistics) -> BigUint {
    match statistics {
        Statistics::Fermionic => binomial(l as u64, m as i64),
        Statistics::Bosonic => {
            if l == 0 {
                return if m == 0 { num_traits::One::one() } else { num_traits::Zero::zero() };
            }
            binomial(l as u64 + m as u64 - 1, m as i64)
        }
    }
}

/// Enumerate the complete basis in lexicographic order on occupied-level
/// lists.
pub fn enumerate_basis(l: u16, m: u16, statistics: Statistics) -> Result<Basis> {
    enumerate_basis_capped(l, m, statistics, DEFAULT_BASIS_CAP)
}

pub fn enumerate_basis_capped(
    l: u16,
    m: u16,
    statistics: Statistics,
    cap: u128,
) -> Result<Basis> {
    match statistics {
        Statistics::Fermionic => {
            if m > l {
                return Err(Error::InvalidParams(format!(
                    "fermionic particle count {m} exceeds level count {l}"
                )));
            }
            if l > MAX_FERMIONIC_LEVELS {
                return Err(Error::InvalidParams(format!(
                    "fermionic level count {l} exceeds {MAX_FERMIONIC_LEVELS}"
                )));
            }
        }
        Statistics::Bosonic => {
            if l == 0 && m > 0 {
                return Err(Error::InvalidParams("bosonic basis needs at least one level".into()));
            }
            if l > MAX_BOSONIC_LEVELS {
                return Err(Error::InvalidParams(format!(
                    "bosonic level count {l} exceeds {MAX_BOSONIC_LEVELS}"
                )));
            }
            if m as u8 > MAX_BOSONIC_OCCUPANCY {
                return Err(Error::InvalidParams(format!(
                    "bosonic particle count {m} exceeds nibble capacity"
                )));
            }
        }
    }
    let size = basis_size(l, m, statistics);
    let size128: u128 = size
        .try_into()
        .map_err(|_| Error::BasisTooLarge { size: u128::MAX, cap })?;
    if size128 > cap {
        return Err(Error::BasisTooLarge { size: size128, cap });
    }

    let mut states = Vec::with_capacity(size128 as usize);
    match statistics {
        Statistics::Fermionic => {
            // lexicographic combinations
            if m == 0 {
                states.push(OccupationState::vacuum(statistics, l)?);
            } else {
                let mut cur: Vec<u16> = (1..=m).collect();
                loop {
                    states.push(OccupationState::fermionic_from_levels(l, &cur)?);
                    let mut i = m as usize;
                    let mut advanced = false;
                    while i > 0 {
                        i -= 1;
                        if cur[i] < l - (m - 1 - i as u16) {
                            cur[i] += 1;
                            for j in i + 1..m as usize {
                                cur[j] = cur[j - 1] + 1;
                            }
                            advanced = true;
                            break;
                        }
                    }
                    if !advanced {
                        break;
                    }
                }
            }
        }
        Statistics::Bosonic => {
            // lexicographic multiset combinations (non-decreasing level lists)
            fn rec(
                l: u16,
                m: u16,
                start: u16,
                occ: &mut Vec<u8>,
                states: &mut Vec<OccupationState>,
            ) {
                if m == 0 {
                    states.push(
                        OccupationState::bosonic_from_occupancies(l, occ)
                            .expect("occupancies validated"),
                    );
                    return;
                }
                for x in start..=l {
                    occ[(x - 1) as usize] += 1;
                    rec(l, m - 1, x, occ, states);
                    occ[(x - 1) as usize] -= 1;
                }
            }
            let mut occ = vec![0u8; l as usize];
            rec(l, m, 1, &mut occ, &mut states);
        }
    }
    debug_assert_eq!(states.len() as u128, size128);
    debug_assert!(states.windows(2).all(|w| w[0].lex_cmp(&w[1]) == Ordering::Less));

    let index = states.iter().enumerate().map(|(i, s)| (s.key(), i)).collect();
    Ok(Basis { states, index, levels: l, particles: m, statistics })
}
