//! Random coupling generation under the beta = 1/2/4 symmetry constraints and
//! k-body Hamiltonian assembly on a chosen basis.
//!
//! The second-moment kernel at unit scale is
//! `E[v_ji v_j'i'] = d(j,i') d(i,j') + d_b1 d(j,j') d(i,i') + d_b4 sgn(j,i) d(j,s(j')) d(i,s(i'))`,
//! with the beta = 4 sign determined by which of the two time-reversal
//! conditions the tuple pair inherits from the cells it participates in; a
//! pair inheriting both with opposite signs is a symplectic zero.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fock::{
    all_index_tuples, basis_size, enumerate_basis, k_subsets, Basis, IndexTuple, OccupationState,
    Statistics,
};
use crate::rng::entry_rng;

/// Default cap on assembled matrix dimensions.
pub const DEFAULT_DIMENSION_CAP: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub enum Beta {
    Orthogonal,
    Unitary,
    Symplectic,
}

impl Beta {
    pub fn dyson_index(&self) -> u8 {
        match self {
            Beta::Orthogonal => 1,
            Beta::Unitary => 2,
            Beta::Symplectic => 4,
        }
    }

    pub fn from_dyson_index(beta: u8) -> Result<Self> {
        match beta {
            1 => Ok(Beta::Orthogonal),
            2 => Ok(Beta::Unitary),
            4 => Ok(Beta::Symplectic),
            other => Err(Error::InvalidParams(format!("beta must be 1, 2 or 4, got {other}"))),
        }
    }
}

/// An involutive pairwise permutation of the levels 1..=l, no fixed points.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairMap {
    sigma: Vec<u16>,
}

impl PairMap {
    pub fn new(sigma: Vec<u16>) -> Result<Self> {
        let l = sigma.len() as u16;
        for (i, &s) in sigma.iter().enumerate() {
            let x = i as u16 + 1;
            if s == 0 || s > l || s == x {
                return Err(Error::InvalidParams(format!(
                    "pair map must be fixed-point free onto 1..={l}, got sigma({x}) = {s}"
                )));
            }
            if sigma[(s - 1) as usize] != x {
                return Err(Error::InvalidParams(format!(
                    "pair map must be an involution, sigma(sigma({x})) != {x}"
                )));
            }
        }
        Ok(Self { sigma })
    }

    /// The canonical map exchanging (1,2), (3,4), ...
    pub fn adjacent(l: u16) -> Result<Self> {
        if l % 2 != 0 {
            return Err(Error::InvalidParams("pairwise map needs an even level count".into()));
        }
        let sigma = (1..=l).map(|x| if x % 2 == 1 { x + 1 } else { x - 1 }).collect();
        Self::new(sigma)
    }

    pub fn apply(&self, x: u16) -> u16 {
        self.sigma[(x - 1) as usize]
    }

    pub fn apply_tuple(&self, t: &IndexTuple) -> IndexTuple {
        t.map_levels(|x| self.apply(x))
    }
}

/// Parameters of one embedded ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleParams {
    pub beta: Beta,
    pub k: u16,
    pub m: u16,
    pub l: u16,
    pub statistics: Statistics,
    pub v0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_map: Option<PairMap>,
}

impl EnsembleParams {
    pub fn new(beta: Beta, k: u16, m: u16, l: u16, statistics: Statistics) -> Result<Self> {
        let p = Self { beta, k, m, l, statistics, v0: 1.0, pair_map: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_pair_map(mut self, map: PairMap) -> Result<Self> {
        self.pair_map = Some(map);
        self.validate()?;
        Ok(self)
    }

    pub fn with_scale(mut self, v0: f64) -> Self {
        self.v0 = v0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k > self.m {
            return Err(Error::InvalidParams(format!("k = {} exceeds m = {}", self.k, self.m)));
        }
        if self.m > self.l && self.statistics == Statistics::Fermionic {
            return Err(Error::InvalidParams(format!("m = {} exceeds l = {}", self.m, self.l)));
        }
        if self.beta == Beta::Symplectic && self.pair_map.is_none() {
            return Err(Error::InvalidParams("beta = 4 requires an attached pair map".into()));
        }
        if let Some(map) = &self.pair_map {
            if map.sigma.len() != self.l as usize {
                return Err(Error::InvalidParams("pair map level count mismatch".into()));
            }
        }
        if !(self.v0 >= 0.0) {
            return Err(Error::InvalidParams("coupling scale must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn basis(&self) -> Result<Basis> {
        enumerate_basis(self.l, self.m, self.statistics)
    }
}

/// Exact ensemble average of `v_ji v_j'i'` at unit scale: one of -1, 0, +1, +2.
pub fn second_moment_kernel(
    params: &EnsembleParams,
    j: &IndexTuple,
    i: &IndexTuple,
    j2: &IndexTuple,
    i2: &IndexTuple,
) -> Result<i32> {
    let mut acc = 0i32;
    if j == i2 && i == j2 {
        acc += 1;
    }
    match params.beta {
        Beta::Unitary => {}
        Beta::Orthogonal => {
            if j == j2 && i == i2 {
                acc += 1;
            }
        }
        Beta::Symplectic => {
            let map = params
                .pair_map
                .as_ref()
                .ok_or_else(|| Error::InvalidParams("beta = 4 requires a pair map".into()))?;
            if *j == map.apply_tuple(j2) && *i == map.apply_tuple(i2) {
                acc += symplectic_sign(params, j, i)? as i32;
            }
        }
    }
    Ok(acc)
}

/// Sign of the purely symplectic delta for the tuple pair (j, i): +1 when
/// every matrix cell the pair participates in imposes the plain conjugation
/// condition, -1 when every cell imposes the sign-flipped one, and 0 when
/// cells of both kinds occur (a symplectic zero).
///
/// A cell (mu, nu) = (j + rest, i + rest) imposes the plain condition when mu
/// and nu sit on the same side of the time-reversal pairing of basis states
/// (both lexicographically before their sigma-images or both after), and the
/// flipped condition otherwise. This mirrors the block pattern of the
/// canonical symplectic form; self-paired states count as first. Overlaps can
/// only arise for k < m, where a tuple pair is shared by many cells.
pub fn symplectic_sign(params: &EnsembleParams, j: &IndexTuple, i: &IndexTuple) -> Result<i8> {
    if params.statistics != Statistics::Fermionic {
        return Err(Error::InvalidParams("symplectic classification is fermionic".into()));
    }
    let map = params
        .pair_map
        .as_ref()
        .ok_or_else(|| Error::InvalidParams("beta = 4 requires a pair map".into()))?;
    let m = params.m;
    let k = params.k;
    debug_assert_eq!(j.len(), k as usize);
    debug_assert_eq!(i.len(), k as usize);

    let is_first = |levels: &[u16]| -> bool {
        let image: Vec<u16> = {
            let mut v: Vec<u16> = levels.iter().map(|&x| map.apply(x)).collect();
            v.sort_unstable();
            v
        };
        levels <= &image[..]
    };

    // Levels available for the shared remainder of the two states.
    let used = j.mask() | i.mask();
    let free: Vec<u16> = (1..=params.l).filter(|&x| used & (1 << (x - 1)) == 0).collect();
    let need = (m - k) as usize;
    if free.len() < need {
        // The pair participates in no matrix cell; plain conjugation.
        return Ok(1);
    }

    let mut saw_plus = false;
    let mut saw_minus = false;
    let mut rest_idx: Vec<usize> = (0..need).collect();
    loop {
        let mut mu: Vec<u16> = j.indices().to_vec();
        let mut nu: Vec<u16> = i.indices().to_vec();
        for &ix in &rest_idx {
            mu.push(free[ix]);
            nu.push(free[ix]);
        }
        mu.sort_unstable();
        nu.sort_unstable();
        if is_first(&mu) == is_first(&nu) {
            saw_plus = true;
        } else {
            saw_minus = true;
        }
        if saw_plus && saw_minus {
            return Ok(0);
        }
        // next combination
        let n = free.len();
        let mut ii = need;
        let mut advanced = false;
        while ii > 0 {
            ii -= 1;
            if rest_idx[ii] < n - (need - ii) {
                rest_idx[ii] += 1;
                for jj in ii + 1..need {
                    rest_idx[jj] = rest_idx[jj - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced || need == 0 {
            break;
        }
    }
    Ok(if saw_minus { -1 } else { 1 })
}

/// The random coefficients v_{j,i} of one realization, with the symmetry
/// constraints of the class baked in.
#[derive(Debug, Clone)]
pub struct CouplingKernel {
    params: EnsembleParams,
    tuples: Vec<IndexTuple>,
    values: Vec<Complex64>,
}

impl CouplingKernel {
    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn tuples(&self) -> &[IndexTuple] {
        &self.tuples
    }

    pub fn tuple_count(&self) -> usize {
        self.tuples.len()
    }

    pub fn value(&self, j_idx: usize, i_idx: usize) -> Complex64 {
        self.values[j_idx * self.tuples.len() + i_idx]
    }

    /// Deterministic JSON form for regression fixtures: parameters, the
    /// sorted tuple list and row-major coefficient table.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let tuples: Vec<String> = self.tuples.iter().map(|t| t.to_string()).collect();
        let values: Vec<[f64; 2]> = self.values.iter().map(|v| [v.re, v.im]).collect();
        Ok(serde_json::json!({
            "schema_version": 1,
            "params": serde_json::to_value(&self.params)?,
            "tuples": tuples,
            "values": values,
        }))
    }
}

/// Draw one coupling realization. Streams are keyed per entry so the result
/// is independent of evaluation order. Beta = 4 sampling is out of scope;
/// its kernel is available through `second_moment_kernel`.
pub fn sample_couplings(params: &EnsembleParams, seed: u64) -> Result<CouplingKernel> {
    sample_couplings_for_sample(params, seed, 0)
}

/// As `sample_couplings`, with an extra stream coordinate so Monte Carlo
/// samples get independent kernels from one master seed.
pub fn sample_couplings_for_sample(
    params: &EnsembleParams,
    seed: u64,
    sample: u64,
) -> Result<CouplingKernel> {
    params.validate()?;
    if params.beta == Beta::Symplectic {
        return Err(Error::InvalidParams(
            "beta = 4 coupling sampling is not supported; only its kernel is".into(),
        ));
    }
    let tuples = all_index_tuples(params.l, params.k);
    let t = tuples.len();
    let mut values = vec![Complex64::new(0.0, 0.0); t * t];
    let v0 = params.v0;
    for a in 0..t {
        for b in a..t {
            let entry = (a * t + b) as u64;
            let mut rng = entry_rng(seed, sample, entry);
            let g1: f64 = rng.sample(StandardNormal);
            let g2: f64 = rng.sample(StandardNormal);
            match params.beta {
                Beta::Unitary => {
                    if a == b {
                        values[a * t + b] = Complex64::new(v0 * g1, 0.0);
                    } else {
                        let re = v0 * g1 / 2f64.sqrt();
                        let im = v0 * g2 / 2f64.sqrt();
                        values[a * t + b] = Complex64::new(re, im);
                        values[b * t + a] = Complex64::new(re, -im);
                    }
                }
                Beta::Orthogonal => {
                    if a == b {
                        values[a * t + b] = Complex64::new(v0 * 2f64.sqrt() * g1, 0.0);
                    } else {
                        values[a * t + b] = Complex64::new(v0 * g1, 0.0);
                        values[b * t + a] = Complex64::new(v0 * g1, 0.0);
                    }
                }
                Beta::Symplectic => unreachable!(),
            }
        }
    }
    Ok(CouplingKernel { params: params.clone(), tuples, values })
}

/// Dense Hermitian matrix produced by assembling a coupling kernel on a basis.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    data: DMatrix<Complex64>,
}

impl HermitianMatrix {
    pub fn dimension(&self) -> usize {
        self.data.nrows()
    }

    pub fn data(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn from_dense(data: DMatrix<Complex64>) -> Result<Self> {
        let n = data.nrows();
        if n != data.ncols() {
            return Err(Error::InvalidParams("matrix must be square".into()));
        }
        let mut scale: f64 = 1e-300;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let x = data[(r, c)];
                scale = scale.max(x.norm());
                dev = dev.max((x - data[(c, r)].conj()).norm());
            }
        }
        if dev > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidParams(format!(
                "matrix deviates from Hermitian symmetry by {dev:e}"
            )));
        }
        Ok(Self { data })
    }
}

/// Assemble `H_{mu nu} = sum_{j,i} v(j,i) <mu| a+_j a_i |nu>` over the basis.
pub fn build_hamiltonian(kernel: &CouplingKernel, basis: &Basis) -> Result<HermitianMatrix> {
    build_hamiltonian_capped(kernel, basis, DEFAULT_DIMENSION_CAP)
}

pub fn build_hamiltonian_capped(
    kernel: &CouplingKernel,
    basis: &Basis,
    cap: usize,
) -> Result<HermitianMatrix> {
    let params = kernel.params();
    if basis.levels() != params.l || basis.statistics() != params.statistics {
        return Err(Error::InvalidParams("kernel and basis disagree on (l, statistics)".into()));
    }
    if params.k > basis.particles() {
        return Err(Error::InvalidParams("interaction order k exceeds particle count".into()));
    }
    let n = basis.len();
    if n > cap {
        return Err(Error::DimensionTooLarge { dim: n, cap });
    }
    let tuple_index: HashMap<&IndexTuple, usize> =
        kernel.tuples().iter().enumerate().map(|(ix, t)| (t, ix)).collect();

    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for (col, nu) in basis.states().iter().enumerate() {
        for i in k_subsets(nu, params.k) {
            let i_idx = tuple_index[&i];
            let (amp_i, mid) = match crate::fock::apply_annihilation_string(nu, &i) {
                Some(x) => x,
                None => continue,
            };
            // any creation tuple not blocked by the remaining occupation
            for j in creation_tuples(&mid, params.k) {
                let j_idx = tuple_index[&j];
                if let Some((amp_j, out)) = crate::fock::apply_creation_string(&mid, &j) {
                    if let Some(row) = basis.index_of(&out) {
                        let amp = amp_i.combine(amp_j);
                        h[(row, col)] += kernel.value(j_idx, i_idx) * amp.value();
                    }
                }
            }
        }
    }
    HermitianMatrix::from_dense(h)
}

/// Creation tuples that do not die on `state`: for fermions, k-subsets of the
/// unoccupied levels; for bosons, any increasing k-tuple below the occupancy
/// cap.
fn creation_tuples(state: &OccupationState, k: u16) -> Vec<IndexTuple> {
    match state.statistics() {
        Statistics::Fermionic => {
            let l = state.levels();
            let free: Vec<u16> = (1..=l).filter(|&x| state.occupancy(x) == 0).collect();
            increasing_tuples_from(&free, k)
        }
        Statistics::Bosonic => all_index_tuples(state.levels(), k),
    }
}

fn increasing_tuples_from(pool: &[u16], k: u16) -> Vec<IndexTuple> {
    let n = pool.len();
    let mut out = Vec::new();
    if (k as usize) > n {
        return out;
    }
    if k == 0 {
        out.push(IndexTuple::new(Vec::new()).unwrap());
        return out;
    }
    let mut idx: Vec<usize> = (0..k as usize).collect();
    loop {
        out.push(IndexTuple::new(idx.iter().map(|&i| pool[i]).collect()).unwrap());
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

/// Expected dimension of the ensemble's basis without enumerating it.
pub fn ensemble_dimension(params: &EnsembleParams) -> num_bigint::BigUint {
    basis_size(params.l, params.m, params.statistics)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::enumerate_basis;

    fn tup(v: &[u16]) -> IndexTuple {
        IndexTuple::new(v.to_vec()).unwrap()
    }

    fn unitary_params(k: u16, m: u16, l: u16) -> EnsembleParams {
        EnsembleParams::new(Beta::Unitary, k, m, l, Statistics::Fermionic).unwrap()
    }

    #[test]
    fn kernel_values_beta2() {
        let p = unitary_params(1, 2, 3);
        // swapped tuples correlate
        assert_eq!(
            second_moment_kernel(&p, &tup(&[1]), &tup(&[2]), &tup(&[2]), &tup(&[1])).unwrap(),
            1
        );
        // unrelated tuples are independent zero-mean gaussians
        assert_eq!(
            second_moment_kernel(&p, &tup(&[1]), &tup(&[2]), &tup(&[1]), &tup(&[3])).unwrap(),
            0
        );
    }

    #[test]
    fn kernel_values_beta1() {
        let p = EnsembleParams::new(Beta::Orthogonal, 1, 2, 3, Statistics::Fermionic).unwrap();
        // both deltas fire on a diagonal pair
        assert_eq!(
            second_moment_kernel(&p, &tup(&[1]), &tup(&[1]), &tup(&[1]), &tup(&[1])).unwrap(),
            2
        );
        assert_eq!(
            second_moment_kernel(&p, &tup(&[1]), &tup(&[2]), &tup(&[1]), &tup(&[2])).unwrap(),
            1
        );
    }

    #[test]
    fn beta4_requires_pair_map() {
        let p = EnsembleParams::new(Beta::Symplectic, 1, 2, 4, Statistics::Fermionic);
        assert!(p.is_err());
        let p = EnsembleParams::new(Beta::Unitary, 1, 2, 4, Statistics::Fermionic)
            .unwrap()
            .with_pair_map(PairMap::adjacent(4).unwrap())
            .unwrap();
        assert!(p.pair_map.is_some());
    }

    #[test]
    fn symplectic_zero_exists_below_k_equals_m() {
        // k < m admits tuple pairs inheriting both conditions; k = m cannot.
        let map = PairMap::adjacent(6).unwrap();
        let base = EnsembleParams::new(Beta::Unitary, 1, 3, 6, Statistics::Fermionic).unwrap();
        let p = EnsembleParams { beta: Beta::Symplectic, pair_map: Some(map), ..base };
        let tuples = all_index_tuples(6, 1);
        let mut zeros = 0;
        for j in &tuples {
            for i in &tuples {
                if symplectic_sign(&p, j, i).unwrap() == 0 {
                    zeros += 1;
                }
            }
        }
        assert!(zeros > 0, "expected at least one symplectic zero for k < m");
        // zero kernel value surfaces through the compound expression
        let j = tup(&[1]);
        let i = tup(&[4]);
        assert_eq!(symplectic_sign(&p, &j, &i).unwrap(), 0);
        let sj = p.pair_map.as_ref().unwrap().apply_tuple(&j);
        let si = p.pair_map.as_ref().unwrap().apply_tuple(&i);
        assert_eq!(second_moment_kernel(&p, &j, &i, &sj, &si).unwrap(), 0);

        for m in [1u16, 2, 3] {
            let base =
                EnsembleParams::new(Beta::Unitary, m, m, 6, Statistics::Fermionic).unwrap();
            let p = EnsembleParams {
                beta: Beta::Symplectic,
                pair_map: Some(PairMap::adjacent(6).unwrap()),
                ..base
            };
            let tuples = all_index_tuples(6, m);
            for j in &tuples {
                for i in &tuples {
                    assert_ne!(symplectic_sign(&p, j, i).unwrap(), 0, "no zeros at k = m");
                }
            }
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let p = unitary_params(1, 2, 4);
        let k1 = sample_couplings(&p, 42).unwrap();
        let k2 = sample_couplings(&p, 42).unwrap();
        assert_eq!(k1.values, k2.values);
        let k3 = sample_couplings(&p, 43).unwrap();
        assert_ne!(k1.values, k3.values);
    }

    #[test]
    fn beta1_values_are_real_and_symmetric() {
        let p = EnsembleParams::new(Beta::Orthogonal, 2, 3, 5, Statistics::Fermionic).unwrap();
        let kern = sample_couplings(&p, 7).unwrap();
        let t = kern.tuple_count();
        for a in 0..t {
            for b in 0..t {
                assert_eq!(kern.value(a, b).im, 0.0);
                assert_eq!(kern.value(a, b), kern.value(b, a));
            }
        }
    }

    #[test]
    fn beta2_hermitian_symmetry() {
        let p = unitary_params(2, 3, 5);
        let kern = sample_couplings(&p, 11).unwrap();
        let t = kern.tuple_count();
        for a in 0..t {
            for b in 0..t {
                assert_eq!(kern.value(a, b), kern.value(b, a).conj());
            }
        }
    }

    #[test]
    fn free_parameter_count_beta2_k1_l2() {
        // two real diagonals + one complex off-diagonal pair = 4 reals, 3 free
        // gaussian parameter slots (the conjugate entry is determined)
        let p = unitary_params(1, 1, 2);
        let kern = sample_couplings(&p, 3).unwrap();
        assert_eq!(kern.tuple_count(), 2);
        assert_eq!(kern.value(0, 1), kern.value(1, 0).conj());
        assert_eq!(kern.value(0, 0).im, 0.0);
        assert_eq!(kern.value(1, 1).im, 0.0);
    }

    #[test]
    fn empirical_second_moments_match_kernel() {
        // E v_ji v_j'i' over many draws within 5 standard errors of the kernel
        let p = unitary_params(1, 2, 3);
        let tuples = all_index_tuples(3, 1);
        let t = tuples.len();
        let samples = 20000usize;
        let mut acc = vec![Complex64::new(0.0, 0.0); t * t * t * t];
        for s in 0..samples {
            let kern = sample_couplings_for_sample(&p, 99, s as u64).unwrap();
            for a in 0..t {
                for b in 0..t {
                    for c in 0..t {
                        for d in 0..t {
                            acc[((a * t + b) * t + c) * t + d] +=
                                kern.value(a, b) * kern.value(c, d);
                        }
                    }
                }
            }
        }
        let se = 5.0 * 2.0 / (samples as f64).sqrt();
        for a in 0..t {
            for b in 0..t {
                for c in 0..t {
                    for d in 0..t {
                        let mean = acc[((a * t + b) * t + c) * t + d] / samples as f64;
                        let expect = second_moment_kernel(
                            &p, &tuples[a], &tuples[b], &tuples[c], &tuples[d],
                        )
                        .unwrap() as f64;
                        assert!(
                            (mean.re - expect).abs() < se && mean.im.abs() < se,
                            "E[v({a},{b}) v({c},{d})] = {mean}, want {expect}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn zero_kernel_builds_zero_matrix() {
        let p = unitary_params(1, 2, 3);
        let tuples = all_index_tuples(3, 1);
        let kern = CouplingKernel {
            params: p.clone(),
            values: vec![Complex64::new(0.0, 0.0); tuples.len() * tuples.len()],
            tuples,
        };
        let basis = enumerate_basis(3, 2, Statistics::Fermionic).unwrap();
        let h = build_hamiltonian(&kern, &basis).unwrap();
        assert!(h.data().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn k_equals_m_reshapes_coupling_table() {
        // at k = m the entry is the single coefficient v_{mu nu}
        let p = unitary_params(2, 2, 4);
        let kern = sample_couplings(&p, 5).unwrap();
        let basis = enumerate_basis(4, 2, Statistics::Fermionic).unwrap();
        let h = build_hamiltonian(&kern, &basis).unwrap();
        for (r, mu) in basis.states().iter().enumerate() {
            for (c, nu) in basis.states().iter().enumerate() {
                let jt = IndexTuple::new(mu.occupied_levels()).unwrap();
                let it = IndexTuple::new(nu.occupied_levels()).unwrap();
                let j_idx = kern.tuples().iter().position(|t| *t == jt).unwrap();
                let i_idx = kern.tuples().iter().position(|t| *t == it).unwrap();
                assert_eq!(h.data()[(r, c)], kern.value(j_idx, i_idx));
            }
        }
    }

    #[test]
    fn hamiltonian_matches_naive_triple_loop() {
        // independent naive assembly: loop over all (j, i, mu, nu) and use
        // monomial_element directly
        let p = unitary_params(1, 2, 3);
        let kern = sample_couplings(&p, 12345).unwrap();
        let basis = enumerate_basis(3, 2, Statistics::Fermionic).unwrap();
        let h = build_hamiltonian(&kern, &basis).unwrap();
        let tuples = all_index_tuples(3, 1);
        for (r, mu) in basis.states().iter().enumerate() {
            for (c, nu) in basis.states().iter().enumerate() {
                let mut want = Complex64::new(0.0, 0.0);
                for (a, j) in tuples.iter().enumerate() {
                    for (b, i) in tuples.iter().enumerate() {
                        let amp = crate::fock::monomial_element(mu, j, i, nu);
                        want += kern.value(a, b) * amp.value();
                    }
                }
                let got = h.data()[(r, c)];
                assert!((got - want).norm() < 1e-12, "entry ({r},{c}): {got} vs {want}");
            }
        }
    }

    #[test]
    fn kernel_json_dump_is_deterministic() {
        let p = unitary_params(1, 2, 3);
        let a = sample_couplings(&p, 4).unwrap().to_json().unwrap();
        let b = sample_couplings(&p, 4).unwrap().to_json().unwrap();
        assert_eq!(a.to_string(), b.to_string());
    }
}
