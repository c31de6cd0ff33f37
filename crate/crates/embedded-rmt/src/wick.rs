//! Exact Wick-sum trace oracles.
//!
//! Ensemble-averaged traces tr(H^2n) reduce, by Wick's theorem, to sums over
//! perfect matchings of the 2n potential factors; each matching constrains
//! the tuple labels through the second-moment kernel and the remaining sum
//! over basis walks is carried out exactly in integer arithmetic. This module
//! is what makes every closed form in the crate falsifiable.
//!
//! It also houses the k = m cycle calculus: matchings induce cycles on the
//! trace labels, leading-order matchings map to Dyck words, and the counts
//! reproduce the Catalan numbers.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::combinatorics::{binomial, BigCount};
use crate::ensemble::Beta;
use crate::error::{Error, Result};
use crate::fock::{enumerate_basis, Amplitude, Basis, OccupationState, Statistics};

/// Hard guard on the matching order: (12-1)!! = 10395 matchings.
pub const MAX_PAIRING_ORDER: usize = 12;

/// Default operation budget for the walk oracle.
pub const DEFAULT_BUDGET: u128 = 50_000_000_000;

/// A perfect matching on the slots {1..2n}, stored as a partner table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairingPartition {
    partner: Vec<usize>,
}

impl PairingPartition {
    pub fn from_partner(partner: Vec<usize>) -> Result<Self> {
        let n2 = partner.len();
        for (x, &y) in partner.iter().enumerate() {
            if y >= n2 || y == x || partner[y] != x {
                return Err(Error::InvalidParams("not a fixed-point free involution".into()));
            }
        }
        Ok(Self { partner })
    }

    pub fn order(&self) -> usize {
        self.partner.len()
    }

    pub fn partner(&self, slot: usize) -> usize {
        self.partner[slot]
    }

    /// Matched pairs (a, b) with a < b, in increasing a.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.partner.len()).filter(|&x| x < self.partner[x]).map(|x| (x, self.partner[x])).collect()
    }

    /// Chords (a,b), (c,d) cross iff exactly one of c, d lies between a and b.
    pub fn is_crossing(&self) -> bool {
        let pairs = self.pairs();
        for (i, &(a, b)) in pairs.iter().enumerate() {
            for &(c, d) in &pairs[i + 1..] {
                let c_in = a < c && c < b;
                let d_in = a < d && d < b;
                if c_in != d_in {
                    return true;
                }
            }
        }
        false
    }
}

impl std::fmt::Display for PairingPartition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (a, b) in self.pairs() {
            write!(f, "({},{})", a + 1, b + 1)?;
        }
        Ok(())
    }
}

/// All (n2-1)!! perfect matchings of {1..n2}, deterministic order: the lowest
/// unmatched slot is paired with each larger slot in turn.
pub fn enumerate_pairings(n2: usize) -> Result<Vec<PairingPartition>> {
    if n2 == 0 || n2 % 2 != 0 || n2 > MAX_PAIRING_ORDER {
        return Err(Error::PairingOrder { got: n2, max: MAX_PAIRING_ORDER });
    }
    let mut out = Vec::new();
    let mut partner = vec![usize::MAX; n2];
    fn rec(partner: &mut Vec<usize>, out: &mut Vec<PairingPartition>) {
        let first = match partner.iter().position(|&x| x == usize::MAX) {
            Some(x) => x,
            None => {
                out.push(PairingPartition { partner: partner.clone() });
                return;
            }
        };
        for y in first + 1..partner.len() {
            if partner[y] == usize::MAX {
                partner[first] = y;
                partner[y] = first;
                rec(partner, out);
                partner[first] = usize::MAX;
                partner[y] = usize::MAX;
            }
        }
    }
    rec(&mut partner, &mut out);
    Ok(out)
}

/// Orbits of the trace labels {1..2n} induced by the delta chain of a
/// matching: pairing slots a and b identifies t_a with t_{b+1} and t_{a+1}
/// with t_b (indices cyclic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleDecomposition {
    /// Disjoint covering orbits, each sorted, ordered by smallest element.
    pub orbits: Vec<Vec<usize>>,
}

impl CycleDecomposition {
    pub fn orbit_count(&self) -> usize {
        self.orbits.len()
    }

    /// True when two orbits interleave around the cycle.
    pub fn is_crossing(&self) -> bool {
        for (i, o1) in self.orbits.iter().enumerate() {
            for o2 in &self.orbits[i + 1..] {
                // crossing: a < b < c < d with a, c in o1 and b, d in o2
                for &a in o1 {
                    for &c in o1 {
                        if a >= c {
                            continue;
                        }
                        let between = o2.iter().any(|&b| a < b && b < c);
                        let outside = o2.iter().any(|&d| d < a || d > c);
                        if between && outside {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

impl std::fmt::Display for CycleDecomposition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for orbit in &self.orbits {
            write!(f, "(")?;
            for (i, x) in orbit.iter().enumerate() {
                if i > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", x + 1)?;
            }
            write!(f, ")")?;
        }
        Ok(())
    }
}

pub fn pairing_to_cycles(p: &PairingPartition) -> CycleDecomposition {
    let n2 = p.order();
    let mut uf = UnionFind::new(n2);
    for (a, b) in p.pairs() {
        uf.union(a, (b + 1) % n2);
        uf.union((a + 1) % n2, b);
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for x in 0..n2 {
        groups.entry(uf.find(x)).or_default().push(x);
    }
    let mut orbits: Vec<Vec<usize>> = groups.into_values().collect();
    for o in &mut orbits {
        o.sort_unstable();
    }
    orbits.sort();
    CycleDecomposition { orbits }
}

/// tr(H^n2) at k = m as a polynomial in the dimension N: a map from orbit
/// count to the number of matchings inducing that many orbits.
pub fn km_trace_polynomial(n2: usize) -> Result<std::collections::BTreeMap<usize, BigCount>> {
    let mut out = std::collections::BTreeMap::new();
    for p in enumerate_pairings(n2)? {
        let orbits = pairing_to_cycles(&p).orbit_count();
        *out.entry(orbits).or_insert_with(BigUint::zero) += BigUint::one();
    }
    Ok(out)
}

/// A balanced word over {X, Y} in which every prefix has at least as many X
/// as Y.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct DyckWord(pub String);

impl std::fmt::Display for DyckWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Translate a leading-order cycle decomposition of 2n labels into its
/// 2n + 2 letter Dyck word: in label order, an orbit minimum opens a bracket
/// and an orbit maximum closes one. Crossing decompositions and those with
/// the wrong orbit count are rejected.
pub fn cycle_to_dyck(c: &CycleDecomposition) -> Result<DyckWord> {
    let n2: usize = c.orbits.iter().map(|o| o.len()).sum();
    if n2 % 2 != 0 {
        return Err(Error::CrossingCycle("odd label count".into()));
    }
    if c.orbit_count() != n2 / 2 + 1 {
        return Err(Error::CrossingCycle(format!(
            "{} orbits on {} labels is not leading order",
            c.orbit_count(),
            n2
        )));
    }
    if c.is_crossing() {
        return Err(Error::CrossingCycle(format!("{c} has interleaving orbits")));
    }
    let mut word = String::with_capacity(n2 + 2);
    for x in 0..n2 {
        let orbit = c.orbits.iter().find(|o| o.contains(&x)).expect("covering orbits");
        if *orbit.first().unwrap() == x {
            word.push('X');
        }
        if *orbit.last().unwrap() == x {
            word.push('Y');
        }
    }
    debug_assert_eq!(word.len(), n2 + 2);
    Ok(DyckWord(word))
}

/// All catalan(n) Dyck words of length 2n, lexicographic (X before Y).
pub fn dyck_words(n: usize) -> Result<Vec<DyckWord>> {
    if n > 14 {
        return Err(Error::PairingOrder { got: n, max: 14 });
    }
    let mut out = Vec::new();
    let mut cur = String::with_capacity(2 * n);
    fn rec(cur: &mut String, open: usize, close: usize, n: usize, out: &mut Vec<DyckWord>) {
        if open == n && close == n {
            out.push(DyckWord(cur.clone()));
            return;
        }
        if open < n {
            cur.push('X');
            rec(cur, open + 1, close, n, out);
            cur.pop();
        }
        if close < open {
            cur.push('Y');
            rec(cur, open, close + 1, n, out);
            cur.pop();
        }
    }
    rec(&mut cur, 0, 0, n, &mut out);
    Ok(out)
}

/// Walk-cost estimate for one trace evaluation, used as a deterministic
/// budget guard independent of scheduling. Fermionic walks start from a
/// single representative state (see `walk_sum`), bosonic walks from every
/// basis state.
pub fn estimated_walk_ops(l: u16, m: u16, k: u16, n2: usize, statistics: Statistics) -> BigUint {
    let n_starts = match statistics {
        Statistics::Fermionic => BigUint::one(),
        Statistics::Bosonic => crate::fock::basis_size(l, m, statistics),
    };
    let per_free_slot = match statistics {
        Statistics::Fermionic => {
            binomial(m as u64, k as i64) * binomial((l - m + k) as u64, k as i64)
        }
        // bosonic walks branch over support subsets times any creation tuple
        Statistics::Bosonic => {
            binomial(m as u64, k as i64) * binomial(l as u64, k as i64)
        }
    };
    let pairings = crate::combinatorics::double_factorial_odd(n2 as u64 / 2);
    let mut cost = pairings * n_starts * BigUint::from(n2 as u64);
    for _ in 0..n2 / 2 {
        cost *= per_free_slot.clone();
    }
    cost
}

/// Configuration for the exact trace oracle.
#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub beta: Beta,
    pub statistics: Statistics,
    pub budget: u128,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { beta: Beta::Unitary, statistics: Statistics::Fermionic, budget: DEFAULT_BUDGET }
    }
}

/// Exact integer value of tr(mean H^n2) at unit coupling scale, summing over
/// all Wick matchings and all delta-constrained basis walks. No floating
/// point enters.
pub fn exact_even_trace(l: u16, m: u16, k: u16, n2: usize, config: &OracleConfig) -> Result<BigCount> {
    let pairings = enumerate_pairings(n2)?;
    check_budget(l, m, k, n2, config)?;
    let walker = Walker::new(l, m, config)?;
    let mut total = BigInt::zero();
    for p in &pairings {
        total += walker.trace(k, p, config.beta);
    }
    debug_assert!(!total.is_negative(), "averaged even trace must be nonnegative");
    total
        .to_biguint()
        .ok_or_else(|| Error::InvalidParams("negative averaged trace".into()))
}

/// Exact contribution of a single matching to tr(mean H^n2); may be negative
/// for individual matchings in principle, hence the signed return.
pub fn exact_trace_for_pairing(
    l: u16,
    m: u16,
    k: u16,
    pairing: &PairingPartition,
    config: &OracleConfig,
) -> Result<BigInt> {
    check_budget(l, m, k, pairing.order(), config)?;
    let walker = Walker::new(l, m, config)?;
    Ok(walker.trace(k, pairing, config.beta))
}

fn check_budget(l: u16, m: u16, k: u16, n2: usize, config: &OracleConfig) -> Result<()> {
    let needed = estimated_walk_ops(l, m, k, n2, config.statistics);
    let needed128: u128 = needed.clone().try_into().unwrap_or(u128::MAX);
    if needed128 > config.budget {
        return Err(Error::BudgetExceeded { needed: needed128, budget: config.budget });
    }
    Ok(())
}

/// Start-state source for closed-walk sums. Fermionic start states are all
/// equivalent under level relabeling (the kernel constraints are
/// permutation-covariant and the relabeling signs of a closed walk cancel
/// pairwise), so the walk runs from one representative state and scales by
/// the dimension without ever enumerating the basis. Bosonic occupancy
/// patterns are not equivalent, so every start state is visited.
enum Walker {
    Fermionic { representative: OccupationState, dimension: BigInt },
    Bosonic { basis: Basis },
}

impl Walker {
    fn new(l: u16, m: u16, config: &OracleConfig) -> Result<Self> {
        match config.statistics {
            Statistics::Fermionic => {
                if m > l {
                    return Err(Error::InvalidParams(format!(
                        "fermionic particle count {m} exceeds level count {l}"
                    )));
                }
                let levels: Vec<u16> = (1..=m).collect();
                let representative =
                    crate::fock::OccupationState::fermionic_from_levels(l, &levels)?;
                let dimension = BigInt::from(crate::fock::basis_size(l, m, config.statistics));
                Ok(Walker::Fermionic { representative, dimension })
            }
            Statistics::Bosonic => {
                Ok(Walker::Bosonic { basis: enumerate_basis(l, m, config.statistics)? })
            }
        }
    }

    /// Sum over closed basis walks for one matching. Slots are processed
    /// from the rightmost factor (the one hitting the ket first) leftward;
    /// the first slot of each matched pair ranges over all tuple
    /// assignments, the partner slot is then fixed by the kernel deltas
    /// (with the extra swap/equal branch for beta = 1). Tuples are handled
    /// as level masks throughout.
    fn trace(&self, k: u16, pairing: &PairingPartition, beta: Beta) -> BigInt {
        let n2 = pairing.order();
        let per_start = |start: &OccupationState| -> BigInt {
            let mut acc = 0i128;
            let mut big_acc = BigInt::zero();
            let mut assigned: Vec<(u64, u64)> = vec![(u64::MAX, u64::MAX); n2];
            walk_rec(
                k,
                pairing,
                beta,
                start,
                *start,
                n2,
                Amplitude::ONE,
                &mut assigned,
                &mut acc,
                &mut big_acc,
            );
            big_acc + BigInt::from(acc)
        };
        match self {
            Walker::Fermionic { representative, dimension } => {
                // split the topmost free slot for parallelism
                let start = representative;
                let mut branches: Vec<(u64, u64, Amplitude, OccupationState)> = Vec::new();
                crate::fock::for_each_k_submask(support_mask(start), k, &mut |i_mask| {
                    if let Some((ai, mid)) = crate::fock::apply_annihilation_mask(start, i_mask) {
                        crate::fock::for_each_k_submask(creation_pool(&mid), k, &mut |j_mask| {
                            if let Some((aj, next)) = crate::fock::apply_creation_mask(&mid, j_mask)
                            {
                                branches.push((j_mask, i_mask, ai.combine(aj), next));
                            }
                            true
                        });
                    }
                    true
                });
                let total: BigInt = branches
                    .par_iter()
                    .map(|&(j, i, amp, next)| {
                        let mut acc = 0i128;
                        let mut big_acc = BigInt::zero();
                        let mut assigned: Vec<(u64, u64)> = vec![(u64::MAX, u64::MAX); n2];
                        assigned[n2 - 1] = (j, i);
                        walk_rec(
                            k,
                            pairing,
                            beta,
                            start,
                            next,
                            n2 - 1,
                            amp,
                            &mut assigned,
                            &mut acc,
                            &mut big_acc,
                        );
                        big_acc + BigInt::from(acc)
                    })
                    .reduce(BigInt::zero, |a, b| a + b);
                total * dimension
            }
            Walker::Bosonic { basis } => basis
                .states()
                .par_iter()
                .map(per_start)
                .reduce(BigInt::zero, |a, b| a + b),
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn walk_rec(
    k: u16,
    pairing: &PairingPartition,
    beta: Beta,
    start: &OccupationState,
    current: OccupationState,
    slots_left: usize,
    amp: Amplitude,
    assigned: &mut Vec<(u64, u64)>,
    acc: &mut i128,
    big_acc: &mut BigInt,
) {
    if slots_left == 0 {
        if current == *start {
            let v = amp.exact_integer();
            match acc.checked_add(v) {
                Some(next) => *acc = next,
                None => {
                    *big_acc += BigInt::from(*acc);
                    *acc = v;
                }
            }
        }
        return;
    }
    let slot = slots_left - 1;
    let partner = pairing.partner(slot);
    if assigned[partner].0 != u64::MAX {
        let (jp, ip) = assigned[partner];
        // kernel delta: swapped tuples always; for beta = 1 also the equal pair
        let count = if beta == Beta::Orthogonal && jp != ip { 2 } else { 1 };
        for option in 0..count {
            let (j, i) = if option == 0 { (ip, jp) } else { (jp, ip) };
            if let Some((a, next)) = crate::fock::apply_monomial_masks(&current, j, i) {
                let amp2 = amp.combine(a);
                assigned[slot] = (j, i);
                walk_rec(k, pairing, beta, start, next, slot, amp2, assigned, acc, big_acc);
                assigned[slot] = (u64::MAX, u64::MAX);
            }
        }
        // beta = 1 with jp == ip: both kernel deltas fire on the same tuple
        // assignment, doubling the weight
        if beta == Beta::Orthogonal && jp == ip {
            if let Some((a, next)) = crate::fock::apply_monomial_masks(&current, ip, jp) {
                let amp2 = amp.combine(a);
                assigned[slot] = (ip, jp);
                walk_rec(k, pairing, beta, start, next, slot, amp2, assigned, acc, big_acc);
                assigned[slot] = (u64::MAX, u64::MAX);
            }
        }
    } else {
        // free slot: range over annihilation masks present in the state and
        // any creation mask that survives
        let occ_mask = support_mask(&current);
        crate::fock::for_each_k_submask(occ_mask, k, &mut |i_mask| {
            if let Some((ai, mid)) = crate::fock::apply_annihilation_mask(&current, i_mask) {
                let pool = creation_pool(&mid);
                crate::fock::for_each_k_submask(pool, k, &mut |j_mask| {
                    if let Some((aj, next)) = crate::fock::apply_creation_mask(&mid, j_mask) {
                        let amp2 = amp.combine(ai).combine(aj);
                        assigned[slot] = (j_mask, i_mask);
                        walk_rec(
                            k, pairing, beta, start, next, slot, amp2, assigned, acc, big_acc,
                        );
                        assigned[slot] = (u64::MAX, u64::MAX);
                    }
                    true
                });
            }
            true
        });
    }
}

fn support_mask(state: &OccupationState) -> u64 {
    match state.statistics() {
        Statistics::Fermionic => state.key(),
        Statistics::Bosonic => {
            let mut mask = 0u64;
            for x in 1..=state.levels() {
                if state.occupancy(x) > 0 {
                    mask |= 1 << (x - 1);
                }
            }
            mask
        }
    }
}

fn creation_pool(state: &OccupationState) -> u64 {
    let all = if state.levels() == 64 { u64::MAX } else { (1u64 << state.levels()) - 1 };
    match state.statistics() {
        Statistics::Fermionic => all & !state.key(),
        Statistics::Bosonic => all,
    }
}

/// Exact normalized moment beta_2n(l) = tr(mean H^2n) N^{n-1} / tr(mean H^2)^n
/// at finite l, as an exact ratio.
pub fn exact_normalized_moment(
    l: u16,
    m: u16,
    k: u16,
    n2: usize,
    config: &OracleConfig,
) -> Result<crate::combinatorics::ExactRatio> {
    use num_rational::BigRational;
    let n = n2 / 2;
    let tr2 = exact_even_trace(l, m, k, 2, config)?;
    let tr2n = exact_even_trace(l, m, k, n2, config)?;
    let dim = crate::fock::basis_size(l, m, config.statistics);
    // beta_2n = (tr2n / N) / (tr2 / N)^n
    let num = BigInt::from(tr2n) * BigInt::from(dim.pow(n as u32 - 1));
    let den = BigInt::from(tr2).pow(n as u32);
    Ok(BigRational::new(num, den))
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}
