//! The particle-diagram calculus.
//!
//! An averaged trace tr(mean H^2n) expands over Wick matchings into products
//! of A-factors `A_{abcd} = mean(<a|H|d><c|H|b>)`. Each factor constrains its
//! four states through four bonds (two of k shared levels, two of m-k), and
//! factors with a repeated index collapse into tails contributing an exact
//! scalar. What remains is a diagram of nodes and bonds; admissible loops on
//! it carry the degrees of freedom, per-bond conservation equations pin the
//! loop sizes, and maximizing the total loop size yields the leading power of
//! l together with the complete family of optimal integer solutions. Summing
//! multinomials over that family and normalizing reassembles the closed-form
//! limit moments.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::combinatorics::{binomial, factorial, BigCount, BinomialProduct, ExactRatio};
use crate::error::{Error, Result};
use crate::wick::{enumerate_pairings, PairingPartition};

/// Size class of a bond: k shared levels (dashed) or m-k (solid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum BondClass {
    K,
    MK,
}

/// One bond of a particle diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub class: BondClass,
    pub factor: usize,
}

/// A contraction pattern: the A-factorization of one Wick matching, with
/// repeated-index identifications propagated to a fixpoint.
#[derive(Debug, Clone)]
pub struct ContractionPattern {
    pub n2: usize,
    pub pairing: PairingPartition,
    /// Factors as 4-tuples of node classes (1st..4th index of A).
    pub factors: Vec<[usize; 4]>,
    pub node_count: usize,
}

impl ContractionPattern {
    /// True for factors whose first/second (and hence third/fourth) indices
    /// coincide.
    pub fn is_tail_factor(f: &[usize; 4]) -> bool {
        f[0] == f[1]
    }
}

/// Result of stripping tails off a pattern: the number of stripped tail
/// factors and the remaining core diagram, if any.
#[derive(Debug, Clone)]
pub struct ReducedPattern {
    pub tail_count: usize,
    pub core: Option<ParticleDiagram>,
}

/// The core multigraph of a pattern: nodes and factor-tagged bonds.
#[derive(Debug, Clone)]
pub struct ParticleDiagram {
    pub node_count: usize,
    pub bonds: Vec<Bond>,
    /// Core factors as node 4-tuples, for reporting and canonical labeling.
    pub factors: Vec<[usize; 4]>,
}

/// Build the contraction pattern of one matching: pairing slots x and y
/// yields the factor `A_{a_x, a_{y+1}, a_y, a_{x+1}}` over the cyclic trace
/// labels, then every factor with coinciding first/second indices forces its
/// third/fourth to coincide and vice versa, propagated to a fixpoint.
pub fn pairing_to_pattern(pairing: &PairingPartition, n2: usize) -> Result<ContractionPattern> {
    if pairing.order() != n2 {
        return Err(Error::InvalidParams("pairing order mismatch".into()));
    }
    let mut parent: Vec<usize> = (0..n2).collect();
    fn find(parent: &mut Vec<usize>, x: usize) -> usize {
        if parent[x] != x {
            let r = find(parent, parent[x]);
            parent[x] = r;
        }
        parent[x]
    }
    let raw: Vec<[usize; 4]> = pairing
        .pairs()
        .iter()
        .map(|&(x, y)| [x, (y + 1) % n2, y, (x + 1) % n2])
        .collect();
    // propagate repeated-index identifications
    loop {
        let mut changed = false;
        for f in &raw {
            let a = find(&mut parent, f[0]);
            let b = find(&mut parent, f[1]);
            let c = find(&mut parent, f[2]);
            let d = find(&mut parent, f[3]);
            if a == b && c != d {
                parent[c.max(d)] = c.min(d);
                changed = true;
            }
            if c == d && a != b {
                parent[a.max(b)] = a.min(b);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // compact class ids
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut factors = Vec::with_capacity(raw.len());
    for f in &raw {
        let mut g = [0usize; 4];
        for (slot, &x) in f.iter().enumerate() {
            let root = find(&mut parent, x);
            let next = remap.len();
            g[slot] = *remap.entry(root).or_insert(next);
        }
        factors.push(g);
    }
    Ok(ContractionPattern { n2, pairing: pairing.clone(), factors, node_count: remap.len() })
}

/// Strip pendant tails: a tail factor `A_{aabb}` whose node a or b occurs in
/// no other factor contributes an exact scalar and disappears. What remains
/// is the core diagram (or nothing, for the fully collapsing matchings).
pub fn reduce_pattern(pattern: &ContractionPattern) -> Result<ReducedPattern> {
    let mut factors: Vec<[usize; 4]> = pattern.factors.clone();
    let mut tail_count = 0usize;
    loop {
        let mut occurrences: HashMap<usize, usize> = HashMap::new();
        for f in &factors {
            for &x in f {
                *occurrences.entry(x).or_default() += 1;
            }
        }
        let strip = factors.iter().position(|f| {
            ContractionPattern::is_tail_factor(f)
                && (occurrences[&f[0]] == 2 || occurrences[&f[2]] == 2)
        });
        match strip {
            Some(ix) => {
                factors.remove(ix);
                tail_count += 1;
            }
            None => break,
        }
    }
    if factors.is_empty() {
        return Ok(ReducedPattern { tail_count, core: None });
    }
    if factors.iter().any(ContractionPattern::is_tail_factor) {
        return Err(Error::InvalidParams(format!(
            "unstrippable tail factor in pattern of {}",
            pattern.pairing
        )));
    }
    // compact the core's node ids
    let mut remap: HashMap<usize, usize> = HashMap::new();
    let mut core_factors = Vec::with_capacity(factors.len());
    for f in &factors {
        let mut g = [0usize; 4];
        for (slot, &x) in f.iter().enumerate() {
            let next = remap.len();
            g[slot] = *remap.entry(x).or_insert(next);
        }
        core_factors.push(g);
    }
    let mut bonds = Vec::new();
    for (fid, f) in core_factors.iter().enumerate() {
        let [a, b, c, d] = *f;
        for (x, y, class) in
            [(a, b, BondClass::K), (c, d, BondClass::K), (a, d, BondClass::MK), (b, c, BondClass::MK)]
        {
            if x == y {
                return Err(Error::InvalidParams(format!(
                    "degenerate self-bond in core of {}",
                    pattern.pairing
                )));
            }
            bonds.push(Bond { a: x.min(y), b: x.max(y), class, factor: fid });
        }
    }
    Ok(ReducedPattern {
        tail_count,
        core: Some(ParticleDiagram { node_count: remap.len(), bonds, factors: core_factors }),
    })
}

/// An admissible loop: a cyclic bond sequence visiting each node at most
/// once, with consecutive bonds at every shared node (including the closing
/// node) belonging to different factors. Each single-particle label of a
/// diagram instance travels around exactly one such loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Loop {
    /// Bond indices in traversal order.
    pub bonds: Vec<usize>,
    /// Visited nodes in traversal order (same length as `bonds`).
    pub nodes: Vec<usize>,
}

impl Loop {
    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }
}

/// All admissible loops, deduplicated up to rotation and reflection,
/// deterministic order.
pub fn enumerate_loops(diagram: &ParticleDiagram) -> Vec<Loop> {
    let n = diagram.node_count;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (ix, b) in diagram.bonds.iter().enumerate() {
        incident[b.a].push(ix);
        incident[b.b].push(ix);
    }
    let other = |bond: usize, node: usize| -> usize {
        let b = &diagram.bonds[bond];
        if b.a == node {
            b.b
        } else {
            b.a
        }
    };

    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut loops: Vec<Loop> = Vec::new();

    // depth-first closed walks from each start node, restricted to nodes not
    // smaller than the start; node-simple; factor alternation at every node
    #[allow(clippy::too_many_arguments)]
    fn dfs(
        diagram: &ParticleDiagram,
        incident: &[Vec<usize>],
        other: &dyn Fn(usize, usize) -> usize,
        start: usize,
        node: usize,
        visited: &mut Vec<bool>,
        path_bonds: &mut Vec<usize>,
        path_nodes: &mut Vec<usize>,
        seen: &mut BTreeSet<Vec<usize>>,
        loops: &mut Vec<Loop>,
    ) {
        for &bx in &incident[node] {
            if path_bonds.contains(&bx) {
                continue;
            }
            if let Some(&last) = path_bonds.last() {
                if diagram.bonds[last].factor == diagram.bonds[bx].factor {
                    continue;
                }
            }
            let next = other(bx, node);
            if next == start {
                if path_bonds.len() >= 1 {
                    // closing: the first and last bonds meet at start
                    let first = path_bonds[0];
                    if diagram.bonds[first].factor != diagram.bonds[bx].factor {
                        let mut key: Vec<usize> = path_bonds.clone();
                        key.push(bx);
                        key.sort_unstable();
                        if seen.insert(key) {
                            let mut bonds = path_bonds.clone();
                            bonds.push(bx);
                            let mut nodes = path_nodes.clone();
                            nodes.push(node);
                            loops.push(Loop { bonds, nodes });
                        }
                    }
                }
                continue;
            }
            if next < start || visited[next] {
                continue;
            }
            visited[next] = true;
            path_bonds.push(bx);
            path_nodes.push(node);
            dfs(diagram, incident, other, start, next, visited, path_bonds, path_nodes, seen, loops);
            path_nodes.pop();
            path_bonds.pop();
            visited[next] = false;
        }
    }

    for start in 0..n {
        let mut visited = vec![false; n];
        let mut pb = Vec::new();
        let mut pn = Vec::new();
        dfs(diagram, &incident, &other, start, start, &mut visited, &mut pb, &mut pn, &mut seen, &mut loops);
    }
    // 2-loops come out of the walk as bond pairs; longer loops likewise.
    // Deterministic order: by length, then by sorted bond sets.
    loops.sort_by(|x, y| {
        (x.bonds.len(), sorted(&x.bonds)).cmp(&(y.bonds.len(), sorted(&y.bonds)))
    });
    loops
}

fn sorted(v: &[usize]) -> Vec<usize> {
    let mut s = v.to_vec();
    s.sort_unstable();
    s
}

/// The loop system of a diagram: per-bond conservation equations over the
/// loop-size variables, with the total size as objective.
#[derive(Debug, Clone)]
pub struct LoopSystem {
    pub loops: Vec<Loop>,
    /// Per bond: the loops passing through it.
    pub bond_loops: Vec<Vec<usize>>,
    /// Per bond: size class.
    pub bond_class: Vec<BondClass>,
}

pub fn build_loop_system(diagram: &ParticleDiagram) -> Result<LoopSystem> {
    let loops = enumerate_loops(diagram);
    let mut bond_loops: Vec<Vec<usize>> = vec![Vec::new(); diagram.bonds.len()];
    for (lx, lp) in loops.iter().enumerate() {
        for &bx in &lp.bonds {
            bond_loops[bx].push(lx);
        }
    }
    if bond_loops.iter().any(|v| v.is_empty()) {
        return Err(Error::InfeasibleLoopSystem("a bond is covered by no loop".into()));
    }
    let bond_class = diagram.bonds.iter().map(|b| b.class).collect();
    Ok(LoopSystem { loops, bond_loops, bond_class })
}

/// Linear form a*m + b*k + c in the symbolic parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct LinearForm {
    pub m_coeff: i64,
    pub k_coeff: i64,
    pub constant: i64,
}

impl std::fmt::Display for LinearForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut terms = Vec::new();
        if self.m_coeff != 0 {
            terms.push(if self.m_coeff == 1 { "m".into() } else { format!("{}m", self.m_coeff) });
        }
        if self.k_coeff != 0 {
            terms.push(if self.k_coeff == 1 { "k".into() } else { format!("{}k", self.k_coeff) });
        }
        if self.constant != 0 || terms.is_empty() {
            terms.push(format!("{}", self.constant));
        }
        write!(f, "{}", terms.join("+"))
    }
}

/// The maximal-argument family of a loop system at concrete (m, k).
#[derive(Debug, Clone)]
pub struct LeadingTerm {
    pub m: u16,
    pub k: u16,
    pub max_argument: u64,
    /// Every nonnegative-integer loop-size assignment attaining the maximum.
    pub solutions: Vec<Vec<u64>>,
    /// Certified symbolic argument, when established over a parameter grid.
    pub symbolic: Option<LinearForm>,
}

/// Exhaustively maximize the total loop size subject to the conservation
/// equations, by constraint-propagated depth-first search, returning every
/// optimal solution. Deterministic enumeration order.
pub fn maximize_argument(system: &LoopSystem, m: u16, k: u16) -> Result<LeadingTerm> {
    let nloops = system.loops.len();
    let nbonds = system.bond_loops.len();
    let target: Vec<i64> = system
        .bond_class
        .iter()
        .map(|c| match c {
            BondClass::K => k as i64,
            BondClass::MK => (m - k) as i64,
        })
        .collect();

    // order: repeatedly commit all loops of the tightest uncovered bond
    let order = solver_order(system);
    let position: Vec<usize> = {
        let mut pos = vec![0usize; nloops];
        for (p, &lx) in order.iter().enumerate() {
            pos[lx] = p;
        }
        pos
    };
    // per bond, the order position after which it must balance exactly
    let bond_close: Vec<usize> = system
        .bond_loops
        .iter()
        .map(|ls| ls.iter().map(|&lx| position[lx]).max().unwrap())
        .collect();
    let mut close_at: Vec<Vec<usize>> = vec![Vec::new(); nloops];
    for (bx, &p) in bond_close.iter().enumerate() {
        close_at[p].push(bx);
    }

    struct Dfs<'a> {
        system: &'a LoopSystem,
        order: &'a [usize],
        close_at: &'a [Vec<usize>],
        residual: Vec<i64>,
        assign: Vec<u64>,
        best: i64,
        solutions: Vec<Vec<u64>>,
    }

    impl Dfs<'_> {
        fn bound(&self, pos: usize) -> i64 {
            let mut extra = 0i64;
            for &lx in &self.order[pos..] {
                let ub = self.system.loops[lx]
                    .bonds
                    .iter()
                    .map(|&bx| self.residual[bx])
                    .min()
                    .unwrap_or(0);
                extra += ub.max(0);
            }
            extra
        }

        fn run(&mut self, pos: usize, sum: i64) {
            if pos == self.order.len() {
                debug_assert!(self.residual.iter().all(|&r| r == 0));
                if sum > self.best {
                    self.best = sum;
                    self.solutions.clear();
                }
                if sum == self.best {
                    self.solutions.push(self.assign.clone());
                }
                return;
            }
            if sum + self.bound(pos) < self.best {
                return;
            }
            let lx = self.order[pos];
            let ub = self.system.loops[lx]
                .bonds
                .iter()
                .map(|&bx| self.residual[bx])
                .min()
                .unwrap_or(0);
            if ub < 0 {
                return;
            }
            for v in (0..=ub as u64).rev() {
                for &bx in &self.system.loops[lx].bonds {
                    self.residual[bx] -= v as i64;
                }
                self.assign[lx] = v;
                let closes_ok = self.close_at[pos].iter().all(|&bx| self.residual[bx] == 0);
                if closes_ok {
                    self.run(pos + 1, sum + v as i64);
                }
                self.assign[lx] = 0;
                for &bx in &self.system.loops[lx].bonds {
                    self.residual[bx] += v as i64;
                }
            }
        }
    }

    let mut dfs = Dfs {
        system,
        order: &order,
        close_at: &close_at,
        residual: target.clone(),
        assign: vec![0; nloops],
        best: -1,
        solutions: Vec::new(),
    };
    dfs.run(0, 0);
    if dfs.best < 0 {
        return Err(Error::InfeasibleLoopSystem(format!(
            "no nonnegative integer solution for m = {m}, k = {k} over {nbonds} bonds"
        )));
    }
    Ok(LeadingTerm {
        m,
        k,
        max_argument: dfs.best as u64,
        solutions: dfs.solutions,
        symbolic: None,
    })
}

fn solver_order(system: &LoopSystem) -> Vec<usize> {
    let nloops = system.loops.len();
    let mut chosen = vec![false; nloops];
    let mut order = Vec::with_capacity(nloops);
    loop {
        // bond with fewest unchosen loops
        let mut best: Option<(usize, usize)> = None;
        for (bx, ls) in system.bond_loops.iter().enumerate() {
            let rem = ls.iter().filter(|&&lx| !chosen[lx]).count();
            if rem > 0 && best.map_or(true, |(r, _)| rem < r) {
                best = Some((rem, bx));
            }
        }
        match best {
            Some((_, bx)) => {
                for &lx in &system.bond_loops[bx] {
                    if !chosen[lx] {
                        chosen[lx] = true;
                        order.push(lx);
                    }
                }
            }
            None => break,
        }
    }
    // isolated loops (in no bond) cannot exist by construction
    debug_assert_eq!(order.len(), nloops);
    order
}

/// Certify a symbolic linear form for the maximal argument by solving the
/// system across a grid of (m, k) with 2k <= m and fitting a*m + b*k + c.
pub fn certify_argument(diagram: &ParticleDiagram, max_m: u16) -> Result<Option<LinearForm>> {
    let system = build_loop_system(diagram)?;
    let mut points = Vec::new();
    for m in 1..=max_m {
        for k in 0..=m / 2 {
            let term = maximize_argument(&system, m, k)?;
            points.push((m as i64, k as i64, term.max_argument as i64));
        }
    }
    // fit on three independent points, verify everywhere
    // arg = a*m + b*k + c using points (1,0), (2,0), (2,1) when available
    let lookup = |m: i64, k: i64| points.iter().find(|p| p.0 == m && p.1 == k).map(|p| p.2);
    let (p10, p20, p21) = match (lookup(1, 0), lookup(2, 0), lookup(2, 1)) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Ok(None),
    };
    let a = p20 - p10;
    let c = p10 - a;
    let b = p21 - 2 * a - c;
    let form = LinearForm { m_coeff: a, k_coeff: b, constant: c };
    for &(m, k, arg) in &points {
        if a * m + b * k + c != arg {
            return Ok(None);
        }
    }
    Ok(Some(form))
}

/// Evaluate the leading term at concrete l: the sum over all optimal
/// solutions of multinomial(l; loop sizes).
pub fn leading_term_value(term: &LeadingTerm, l: u64) -> Result<BigCount> {
    let mut total = BigUint::zero();
    for sol in &term.solutions {
        let parts: Vec<u64> = sol.iter().copied().filter(|&s| s > 0).collect();
        total += crate::combinatorics::multinomial(l, &parts)?;
    }
    Ok(total)
}

/// Rational coefficient of l^max_argument in the leading term: the sum over
/// optimal solutions of prod 1/size!.
pub fn leading_term_coefficient(term: &LeadingTerm) -> ExactRatio {
    let mut total = BigRational::zero();
    for sol in &term.solutions {
        let mut denom = BigUint::one();
        for &s in sol {
            denom *= factorial(s);
        }
        total += BigRational::new(BigInt::one(), BigInt::from(denom));
    }
    total
}

/// One equivalence class of Wick matchings: a representative pattern and the
/// number of matchings it stands for.
#[derive(Debug, Clone)]
pub struct DiagramClass {
    pub pattern: ContractionPattern,
    pub multiplicity: usize,
}

/// Group the (n2-1)!! matchings into the published equivalence classes. For
/// n2 = 4 and 6 patterns are grouped by isomorphism of the full factor
/// structure; for n2 = 8 the fully collapsing patterns all take the same
/// value and are pooled, so grouping is by tail count plus core isomorphism.
pub fn canonical_classes(n2: usize) -> Result<Vec<DiagramClass>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Vec<DiagramClass>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(v) = cache.lock().unwrap().get(&n2) {
        return Ok(v.clone());
    }
    if !matches!(n2, 2 | 4 | 6 | 8) {
        return Err(Error::UnsupportedOrder(n2 as u32));
    }
    let mut groups: BTreeMap<String, DiagramClass> = BTreeMap::new();
    for pairing in enumerate_pairings(n2)? {
        let pattern = pairing_to_pattern(&pairing, n2)?;
        let key = if n2 <= 6 {
            format!("full:{}", canonical_factor_key(&pattern.factors, pattern.node_count))
        } else {
            let reduced = reduce_pattern(&pattern)?;
            match &reduced.core {
                None => format!("tails:{}", reduced.tail_count),
                Some(core) => format!(
                    "tails:{};core:{}",
                    reduced.tail_count,
                    canonical_factor_key(&core.factors, core.node_count)
                ),
            }
        };
        groups
            .entry(key)
            .and_modify(|c| c.multiplicity += 1)
            .or_insert(DiagramClass { pattern, multiplicity: 1 });
    }
    let classes: Vec<DiagramClass> = groups.into_values().collect();
    debug_assert_eq!(
        classes.iter().map(|c| c.multiplicity).sum::<usize>(),
        crate::combinatorics::double_factorial_odd(n2 as u64 / 2)
            .try_into()
            .map(|x: u64| x as usize)
            .unwrap_or(usize::MAX)
    );
    cache.lock().unwrap().insert(n2, classes.clone());
    Ok(classes)
}

/// Canonical string for a factor multiset under node relabeling and the
/// four-fold index symmetry of each A-factor.
fn canonical_factor_key(factors: &[[usize; 4]], node_count: usize) -> String {
    let normalize = |f: &[usize; 4]| -> [usize; 4] {
        let [a, b, c, d] = *f;
        // A_{abcd} = A_{cdab} = A_{dcba} = A_{badc}
        [[a, b, c, d], [c, d, a, b], [d, c, b, a], [b, a, d, c]].into_iter().min().unwrap()
    };
    let mut best: Option<Vec<[usize; 4]>> = None;
    let mut perm: Vec<usize> = (0..node_count).collect();
    permute(&mut perm, 0, &mut |perm| {
        let mut relabeled: Vec<[usize; 4]> = factors
            .iter()
            .map(|f| normalize(&[perm[f[0]], perm[f[1]], perm[f[2]], perm[f[3]]]))
            .collect();
        relabeled.sort_unstable();
        if best.as_ref().map_or(true, |b| relabeled < *b) {
            best = Some(relabeled);
        }
    });
    format!("{:?}", best.unwrap())
}

fn permute(perm: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == perm.len() {
        visit(perm);
        return;
    }
    for i in at..perm.len() {
        perm.swap(at, i);
        permute(perm, at + 1, visit);
        perm.swap(at, i);
    }
}

/// Full analysis of one class at concrete (m, k): the reduced structure, the
/// core loop solution and the exact rational contribution of the class to
/// the limit moment.
#[derive(Debug, Clone)]
pub struct ClassAnalysis {
    pub multiplicity: usize,
    pub tail_count: usize,
    pub core: Option<ParticleDiagram>,
    pub leading: Option<LeadingTerm>,
    /// The class contribution to the limit of beta_2n, already including the
    /// multiplicity.
    pub contribution: ExactRatio,
}

/// Analyze one class. `n` is the half order (beta_2n with n2 = 2n slots).
pub fn analyze_class(class: &DiagramClass, n: u32, m: u16, k: u16) -> Result<ClassAnalysis> {
    let reduced = reduce_pattern(&class.pattern)?;
    let mult = BigRational::from_integer(BigInt::from(class.multiplicity));
    match reduced.core {
        None => {
            // exact: C(l,m) [C(m,k) C(l-m+k,k)]^n over the same normalization
            Ok(ClassAnalysis {
                multiplicity: class.multiplicity,
                tail_count: reduced.tail_count,
                core: None,
                leading: None,
                contribution: mult,
            })
        }
        Some(core) => {
            let system = build_loop_system(&core)?;
            let term = maximize_argument(&system, m, k)?;
            let tails = reduced.tail_count as u64;
            // numerator argument of [T^tails * core / N], T = C(m,k) C(l-m+k,k)
            let num_arg = tails * k as u64 + term.max_argument;
            let den_arg = m as u64 + n as u64 * k as u64;
            let contribution = if num_arg < den_arg {
                BigRational::zero()
            } else if num_arg > den_arg {
                return Err(Error::InvalidParams(format!(
                    "class argument {num_arg} exceeds normalization {den_arg}; \
                     the moment would diverge"
                )));
            } else {
                // coefficient of the matching powers of l
                let cmk = BigRational::from_integer(BigInt::from(binomial(m as u64, k as i64)));
                let kfac = BigRational::from_integer(BigInt::from(factorial(k as u64)));
                let mfac = BigRational::from_integer(BigInt::from(factorial(m as u64)));
                let t_coeff = cmk.clone() / kfac.clone(); // per tail
                let mut num = leading_term_coefficient(&term) * mfac;
                for _ in 0..tails {
                    num *= t_coeff.clone();
                }
                let mut den = BigRational::one();
                for _ in 0..n {
                    den *= cmk.clone() / kfac.clone();
                }
                mult * num / den
            };
            Ok(ClassAnalysis {
                multiplicity: class.multiplicity,
                tail_count: reduced.tail_count,
                core: Some(core),
                leading: Some(term),
                contribution,
            })
        }
    }
}

/// Assemble the limit moment beta_2n from the diagram calculus: sum over
/// canonical classes of their contributions. Exact rational in (m, k).
pub fn assemble_moment(n: u32, m: u16, k: u16) -> Result<ExactRatio> {
    if !(1..=4).contains(&n) {
        return Err(Error::UnsupportedOrder(n));
    }
    if k > m {
        return Err(Error::InvalidParams(format!("k = {k} exceeds m = {m}")));
    }
    let classes = canonical_classes(2 * n as usize)?;
    let mut total = BigRational::zero();
    for class in &classes {
        total += analyze_class(class, n, m, k)?.contribution;
    }
    Ok(total)
}

/// The crossed four-node diagram carrying the nontrivial fourth-moment
/// contribution.
pub fn standard_diagram() -> Result<ParticleDiagram> {
    for class in canonical_classes(4)? {
        let reduced = reduce_pattern(&class.pattern)?;
        if let Some(core) = reduced.core {
            return Ok(core);
        }
    }
    unreachable!("the crossing matching of four slots always has a core")
}

/// The six-node prism diagram of the sixth moment (the multiplicity-three
/// class without tails).
pub fn prism_diagram() -> Result<ParticleDiagram> {
    for class in canonical_classes(6)? {
        let reduced = reduce_pattern(&class.pattern)?;
        if class.multiplicity == 3 && reduced.tail_count == 0 {
            if let Some(core) = reduced.core {
                return Ok(core);
            }
        }
    }
    unreachable!("the prism class is a fixed feature of order six")
}

/// The six-node octahedron diagram of the sixth moment (multiplicity one).
pub fn octahedron_diagram() -> Result<ParticleDiagram> {
    for class in canonical_classes(6)? {
        let reduced = reduce_pattern(&class.pattern)?;
        if class.multiplicity == 1 && reduced.tail_count == 0 {
            if let Some(core) = reduced.core {
                return Ok(core);
            }
        }
    }
    unreachable!("the octahedron class is a fixed feature of order six")
}

/// Symbolic leading value of a reduced class as a binomial product in l, for
/// cross-checks against finite-l oracles: tails times the given solution's
/// multinomial. Only meaningful per optimal solution.
pub fn solution_binomial_product(term: &LeadingTerm, tails: usize, m: u16, k: u16) -> BinomialProduct {
    let mut p = BinomialProduct::new();
    for _ in 0..tails {
        p.push((m - k) as i64, k as u64, 1);
    }
    if let Some(sol) = term.solutions.first() {
        let parts: Vec<u64> = sol.iter().copied().filter(|&s| s > 0).collect();
        p.push_multinomial(&parts);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    fn pairing(pairs: &[(usize, usize)], n2: usize) -> PairingPartition {
        let mut partner = vec![usize::MAX; n2];
        for &(a, b) in pairs {
            partner[a - 1] = b - 1;
            partner[b - 1] = a - 1;
        }
        PairingPartition::from_partner(partner).unwrap()
    }

    #[test]
    fn pattern_for_adjacent_pairing_is_all_tail() {
        let p = pairing(&[(1, 2), (3, 4)], 4);
        let pat = pairing_to_pattern(&p, 4).unwrap();
        let red = reduce_pattern(&pat).unwrap();
        assert_eq!(red.tail_count, 2);
        assert!(red.core.is_none());
    }

    #[test]
    fn pattern_for_crossing_pairing_is_standard() {
        let p = pairing(&[(1, 3), (2, 4)], 4);
        let pat = pairing_to_pattern(&p, 4).unwrap();
        assert_eq!(pat.node_count, 4);
        let red = reduce_pattern(&pat).unwrap();
        assert_eq!(red.tail_count, 0);
        let core = red.core.unwrap();
        assert_eq!(core.node_count, 4);
        assert_eq!(core.bonds.len(), 8);
    }

    #[test]
    fn chain_pairing_of_six_collapses() {
        let p = pairing(&[(1, 2), (3, 4), (5, 6)], 6);
        let red = reduce_pattern(&pairing_to_pattern(&p, 6).unwrap()).unwrap();
        assert_eq!(red.tail_count, 3);
        assert!(red.core.is_none());
    }

    #[test]
    fn standard_diagram_has_six_loops() {
        let core = standard_diagram().unwrap();
        let loops = enumerate_loops(&core);
        assert_eq!(loops.len(), 6);
        let two = loops.iter().filter(|l| l.len() == 2).count();
        let four = loops.iter().filter(|l| l.len() == 4).count();
        assert_eq!((two, four), (4, 2));
    }

    #[test]
    fn prism_diagram_has_eleven_loops() {
        let core = prism_diagram().unwrap();
        assert_eq!(core.node_count, 6);
        assert_eq!(core.bonds.len(), 12);
        let loops = enumerate_loops(&core);
        assert_eq!(loops.len(), 11);
    }

    #[test]
    fn class_multiplicities() {
        let m4: Vec<usize> = canonical_classes(4)
            .unwrap()
            .iter()
            .map(|c| c.multiplicity)
            .collect();
        let mut m4s = m4.clone();
        m4s.sort_unstable();
        assert_eq!(m4s, vec![1, 2]);

        let mut m6: Vec<usize> = canonical_classes(6)
            .unwrap()
            .iter()
            .map(|c| c.multiplicity)
            .collect();
        m6.sort_unstable();
        assert_eq!(m6, vec![1, 2, 3, 3, 6]);

        let mut m8: Vec<usize> = canonical_classes(8)
            .unwrap()
            .iter()
            .map(|c| c.multiplicity)
            .collect();
        m8.sort_unstable();
        assert_eq!(m8, vec![1, 2, 4, 4, 4, 8, 8, 8, 14, 24, 28]);
    }

    #[test]
    fn standard_diagram_solution() {
        let core = standard_diagram().unwrap();
        let system = build_loop_system(&core).unwrap();
        let (m, k) = (6u16, 2u16);
        let term = maximize_argument(&system, m, k).unwrap();
        assert_eq!(term.max_argument, (m + 2 * k) as u64);
        assert_eq!(term.solutions.len(), 1);
        let sol = &term.solutions[0];
        // four 2-loops of size k, the solid 4-loop of size m-2k, the dashed
        // 4-loop of size 0
        for (lx, lp) in system.loops.iter().enumerate() {
            if lp.len() == 2 {
                assert_eq!(sol[lx], k as u64);
            } else {
                let all_solid = lp
                    .bonds
                    .iter()
                    .all(|&bx| system.bond_class[bx] == BondClass::MK);
                assert_eq!(sol[lx], if all_solid { (m - 2 * k) as u64 } else { 0 });
            }
        }
    }

    #[test]
    fn standard_leading_value_is_multinomial() {
        let core = standard_diagram().unwrap();
        let system = build_loop_system(&core).unwrap();
        let term = maximize_argument(&system, 4, 1).unwrap();
        assert_eq!(
            leading_term_value(&term, 10).unwrap(),
            BigUint::from(75600u32)
        );
    }

    #[test]
    fn prism_solution_matches_vandermonde_collapse() {
        let core = prism_diagram().unwrap();
        let system = build_loop_system(&core).unwrap();
        for (l, m, k) in
            [(12u64, 4u16, 1u16), (16, 5, 2), (20, 6, 2), (18, 6, 3), (18, 4, 2), (25, 7, 3)]
        {
            let term = maximize_argument(&system, m, k).unwrap();
            assert_eq!(term.max_argument, (m + 3 * k) as u64, "m={m} k={k}");
            let got = leading_term_value(&term, l).unwrap();
            let want = crate::combinatorics::multinomial(
                l,
                &[k as u64, k as u64, k as u64, k as u64, (m - k) as u64],
            )
            .unwrap()
                * binomial((m - k) as u64, k as i64).pow(2);
            assert_eq!(got, want, "l={l} m={m} k={k}");
        }
    }

    #[test]
    fn symbolic_arguments_certified() {
        let std = standard_diagram().unwrap();
        let form = certify_argument(&std, 10).unwrap().unwrap();
        assert_eq!(form, LinearForm { m_coeff: 1, k_coeff: 2, constant: 0 });

        let prism = prism_diagram().unwrap();
        let form = certify_argument(&prism, 10).unwrap().unwrap();
        assert_eq!(form, LinearForm { m_coeff: 1, k_coeff: 3, constant: 0 });
    }

    #[test]
    fn assembled_fourth_moment() {
        // 2 + C(m-k,k)/C(m,k)
        let got = assemble_moment(2, 4, 1).unwrap();
        assert_eq!(got, BigRational::new(BigInt::from(11), BigInt::from(4)));
        // canonical domain locks to the Catalan value
        let got = assemble_moment(2, 5, 3).unwrap();
        assert_eq!(got, BigRational::from_integer(BigInt::from(2)));
    }

    #[test]
    fn assembled_sixth_moment() {
        let got = assemble_moment(3, 4, 1).unwrap();
        assert_eq!(got, BigRational::new(BigInt::from(185), BigInt::from(16)));
        let got = assemble_moment(3, 6, 4).unwrap();
        assert_eq!(got, BigRational::from_integer(BigInt::from(5)));
    }

    #[test]
    fn k_equals_m_reduces_to_catalan() {
        for n in 1..=4u32 {
            for m in 1..=6u16 {
                let got = assemble_moment(n, m, m).unwrap();
                let want = BigRational::from_integer(BigInt::from(
                    crate::combinatorics::catalan(n as u64).to_u64().unwrap(),
                ));
                assert_eq!(got, want, "n={n} m={m}");
            }
        }
    }

    #[test]
    fn conservation_holds_on_optimal_solutions() {
        for core in [standard_diagram().unwrap(), prism_diagram().unwrap()] {
            let system = build_loop_system(&core).unwrap();
            let (m, k) = (7u16, 2u16);
            let term = maximize_argument(&system, m, k).unwrap();
            for sol in &term.solutions {
                for (bx, loops) in system.bond_loops.iter().enumerate() {
                    let total: u64 = loops.iter().map(|&lx| sol[lx]).sum();
                    let want = match system.bond_class[bx] {
                        BondClass::K => k as u64,
                        BondClass::MK => (m - k) as u64,
                    };
                    assert_eq!(total, want);
                }
            }
        }
    }
}
