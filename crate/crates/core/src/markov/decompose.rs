use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap};

use num_traits::{One, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::distfn::{DistributionProfile, ThresholdGrid};
use crate::error::{Error, Result};
use crate::linalg::solve;
use crate::markov::chain::{MarkovChain, PairChain};
use crate::scalar::{format_rational, Rational};

/// Closed classes, transient states, stationary laws and absorption
/// probabilities of a finite chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainDecomposition {
    /// Closed communicating classes, each sorted by state index.
    pub closed_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    /// Stationary law of each closed class, aligned with its state list.
    pub stationary: Vec<Vec<Rational>>,
    /// For every state, the probability of ending in each closed class
    /// (sparse, nonzero entries only).
    pub hitting: Vec<Vec<(usize, Rational)>>,
    class_of: Vec<Option<usize>>,
    position: Vec<usize>,
}

fn stationary_law(chain: &MarkovChain, class: &[usize], position: &[usize]) -> Result<Vec<Rational>> {
    let c = class.len();
    if c == 1 {
        return Ok(vec![Rational::one()]);
    }
    // Row j of the system is sum_i pi_i P_ij - pi_j = 0; the last row is
    // replaced by the normalization.
    let mut a = vec![vec![Rational::zero(); c]; c];
    for (col, &i) in class.iter().enumerate() {
        for (j, m) in chain.row(i) {
            a[position[*j]][col] += m;
        }
    }
    for (k, row) in a.iter_mut().enumerate() {
        row[k] -= Rational::one();
    }
    a[c - 1] = vec![Rational::one(); c];
    let mut b = vec![Rational::zero(); c];
    b[c - 1] = Rational::one();
    solve(a, b)
}

type Sparse = BTreeMap<usize, Rational>;

fn add_scaled(dst: &mut Sparse, src: &Sparse, factor: &Rational) {
    for (k, v) in src {
        let e = dst.entry(*k).or_insert_with(Rational::zero);
        *e += factor * v;
        if e.is_zero() {
            dst.remove(k);
        }
    }
}

/// Absorption probabilities of the states of one transient component,
/// given those of every component it can move to. Solves
/// `h_i = sum_j P_ij h_j` by eliminating states one at a time (cheapest
/// first), which keeps the sparse rows of the pair chain sparse.
fn solve_transient(
    chain: &MarkovChain,
    comp: &[usize],
    k: usize,
    scc_of: &[usize],
    hitting: &[Vec<(usize, Rational)>],
) -> Vec<Vec<(usize, Rational)>> {
    let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(a, &s)| (s, a)).collect();
    let m = comp.len();
    // h_a = sum_b coef[a][b] h_b + rhs[a], with b inside the component and
    // rhs a sparse vector over closed classes.
    let mut coef: Vec<Sparse> = vec![Sparse::new(); m];
    let mut rhs: Vec<Sparse> = vec![Sparse::new(); m];
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); m];
    for (a, &i) in comp.iter().enumerate() {
        for (j, pr) in chain.row(i) {
            if scc_of[*j] == k {
                let b = local[j];
                *coef[a].entry(b).or_insert_with(Rational::zero) += pr;
                preds[b].insert(a);
            } else {
                for (l, h) in &hitting[*j] {
                    *rhs[a].entry(*l).or_insert_with(Rational::zero) += pr * h;
                }
            }
        }
    }
    let mut done = vec![false; m];
    let mut order = Vec::with_capacity(m);
    let cost = |a: usize, coef: &[Sparse], preds: &[BTreeSet<usize>]| {
        let outs = coef[a].keys().filter(|&&b| b != a).count();
        let ins = preds[a].iter().filter(|&&b| b != a).count();
        outs * ins
    };
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m).map(|a| Reverse((cost(a, &coef, &preds), a))).collect();
    while let Some(Reverse((c, a))) = heap.pop() {
        if done[a] || c != cost(a, &coef, &preds) {
            continue;
        }
        done[a] = true;
        order.push(a);
        // Solve row a for h_a in terms of the remaining states.
        let stay = coef[a].remove(&a).unwrap_or_else(Rational::zero);
        preds[a].remove(&a);
        if !stay.is_zero() {
            let scale = (Rational::one() - stay).recip();
            coef[a].values_mut().for_each(|v| *v *= &scale);
            rhs[a].values_mut().for_each(|v| *v *= &scale);
        }
        let (row_a, rhs_a) = (coef[a].clone(), rhs[a].clone());
        for &b in &row_a.keys().copied().collect::<Vec<_>>() {
            preds[b].remove(&a);
        }
        let touched: Vec<usize> = std::mem::take(&mut preds[a]).into_iter().filter(|&u| !done[u]).collect();
        for u in touched {
            let w = coef[u].remove(&a).expect("predecessor has an entry");
            add_scaled(&mut coef[u], &row_a, &w);
            add_scaled(&mut rhs[u], &rhs_a, &w);
            for b in row_a.keys() {
                if coef[u].contains_key(b) {
                    preds[*b].insert(u);
                } else {
                    preds[*b].remove(&u);
                }
            }
            heap.push(Reverse((cost(u, &coef, &preds), u)));
        }
        for b in row_a.keys() {
            if !done[*b] {
                heap.push(Reverse((cost(*b, &coef, &preds), *b)));
            }
        }
    }
    // Each eliminated row refers only to states eliminated after it.
    let mut value: Vec<Sparse> = vec![Sparse::new(); m];
    for &a in order.iter().rev() {
        let mut v = rhs[a].clone();
        for (b, w) in &coef[a] {
            add_scaled(&mut v, &value[*b], w);
        }
        value[a] = v;
    }
    value.into_iter().map(|v| v.into_iter().collect()).collect()
}

/// Decomposes the chain into closed classes and transient states and
/// solves for stationary laws and absorption probabilities exactly.
pub fn decompose(chain: &MarkovChain) -> Result<ChainDecomposition> {
    let n = chain.len();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, 2 * n);
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for (i, row) in chain.rows().iter().enumerate() {
        for (j, _) in row {
            graph.add_edge(nodes[i], nodes[*j], ());
        }
    }
    // Components come out in reverse topological order: every edge leaving
    // a component points to one listed earlier.
    let mut sccs: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|c| {
            let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
            v.sort_unstable();
            v
        })
        .collect();
    let mut scc_of = vec![0usize; n];
    for (k, c) in sccs.iter().enumerate() {
        for &s in c {
            scc_of[s] = k;
        }
    }
    let mut position = vec![0usize; n];
    for c in &sccs {
        for (k, &s) in c.iter().enumerate() {
            position[s] = k;
        }
    }
    let is_closed = |k: usize, c: &[usize]| c.iter().all(|&s| chain.row(s).iter().all(|(j, _)| scc_of[*j] == k));

    let mut class_of = vec![None; n];
    let mut closed_classes = Vec::new();
    let mut stationary = Vec::new();
    let mut hitting: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); n];
    let mut transient = Vec::new();
    for (k, c) in sccs.iter_mut().enumerate() {
        if is_closed(k, c) {
            let l = closed_classes.len();
            for &s in c.iter() {
                class_of[s] = Some(l);
                hitting[s] = vec![(l, Rational::one())];
            }
            stationary.push(stationary_law(chain, c, &position)?);
            closed_classes.push(std::mem::take(c));
            continue;
        }
        transient.extend_from_slice(c);
        // Absorption is certain, so a single reachable class takes all mass.
        let mut targets: Vec<usize> = c
            .iter()
            .flat_map(|&i| chain.row(i).iter().filter(|(j, _)| scc_of[*j] != k))
            .flat_map(|(j, _)| hitting[*j].iter().map(|e| e.0))
            .collect();
        targets.sort_unstable();
        targets.dedup();
        if let [only] = targets[..] {
            for &i in c.iter() {
                hitting[i] = vec![(only, Rational::one())];
            }
            continue;
        }
        let solved = solve_transient(chain, c, k, &scc_of, &hitting);
        for (i, h) in c.iter().zip(solved) {
            hitting[*i] = h;
        }
    }
    transient.sort_unstable();
    // Renumber classes by their smallest state for a stable order.
    let mut order: Vec<usize> = (0..closed_classes.len()).collect();
    order.sort_by_key(|&l| closed_classes[l][0]);
    let mut rank = vec![0usize; order.len()];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let closed_classes: Vec<Vec<usize>> = order.iter().map(|&l| closed_classes[l].clone()).collect();
    let stationary: Vec<Vec<Rational>> = order.iter().map(|&l| stationary[l].clone()).collect();
    for c in class_of.iter_mut().flatten() {
        *c = rank[*c];
    }
    for row in &mut hitting {
        for e in row.iter_mut() {
            e.0 = rank[e.0];
        }
        row.sort_by_key(|e| e.0);
    }
    Ok(ChainDecomposition {
        closed_classes,
        transient,
        stationary,
        hitting,
        class_of,
        position,
    })
}

impl ChainDecomposition {
    pub fn states(&self) -> usize {
        self.class_of.len()
    }

    /// Index of the closed class containing `s`, if any.
    pub fn class_of(&self, s: usize) -> Option<usize> {
        self.class_of.get(s).copied().flatten()
    }

    fn check(&self, s: usize) -> Result<()> {
        if s >= self.states() {
            return Err(Error::UnknownState(format!("{s} (chain has {} states)", self.states())));
        }
        Ok(())
    }

    /// Stationary mass of `j` within its class (zero for transient states).
    pub fn stationary_mass(&self, j: usize) -> Rational {
        match self.class_of[j] {
            Some(l) => self.stationary[l][self.position[j]].clone(),
            None => Rational::zero(),
        }
    }

    /// `lim (1/n) sum_{k<n} P(Z_k = j | Z_0 = i)`.
    pub fn cesaro_limit(&self, i: usize, j: usize) -> Result<Rational> {
        self.check(i)?;
        self.check(j)?;
        let Some(l) = self.class_of[j] else {
            return Ok(Rational::zero());
        };
        let reach = self.hitting[i]
            .iter()
            .find(|e| e.0 == l)
            .map_or_else(Rational::zero, |e| e.1.clone());
        Ok(reach * self.stationary_mass(j))
    }

    /// `sum_j cesaro_limit(i, j)` for every state `i`, computed from the
    /// class totals without expanding rows.
    pub fn limit_row_sums(&self) -> Vec<Rational> {
        let totals: Vec<Rational> = self
            .stationary
            .iter()
            .map(|pi| pi.iter().fold(Rational::zero(), |acc, x| acc + x))
            .collect();
        self.hitting
            .iter()
            .map(|h| h.iter().fold(Rational::zero(), |acc, (l, v)| acc + v * &totals[*l]))
            .collect()
    }

    /// Full row of Cesàro limits from `i`.
    pub fn cesaro_row(&self, i: usize) -> Result<Vec<Rational>> {
        self.check(i)?;
        let mut row = vec![Rational::zero(); self.states()];
        for (l, h) in &self.hitting[i] {
            for (k, &j) in self.closed_classes[*l].iter().enumerate() {
                row[j] = h * &self.stationary[*l][k];
            }
        }
        Ok(row)
    }

    pub fn to_json(&self) -> DecompositionJson {
        DecompositionJson {
            closed_classes: self.closed_classes.clone(),
            transient: self.transient.clone(),
            stationary: self
                .stationary
                .iter()
                .map(|v| v.iter().map(format_rational).collect())
                .collect(),
            hitting: self
                .transient
                .iter()
                .map(|&i| {
                    (
                        i,
                        self.hitting[i].iter().map(|(l, h)| (*l, format_rational(h))).collect(),
                    )
                })
                .collect(),
        }
    }
}

/// JSON form of a decomposition; `hitting` lists, per transient state, the
/// pairs `(class, probability)`.
#[derive(Clone, Debug, Serialize)]
pub struct DecompositionJson {
    pub closed_classes: Vec<Vec<usize>>,
    pub transient: Vec<usize>,
    pub stationary: Vec<Vec<String>>,
    pub hitting: Vec<(usize, Vec<(usize, String)>)>,
}

/// Exact `lim F^(n)(t)` for the pair in state `start`: the Cesàro mass of
/// the states at distance below `t`.
pub fn exact_f_limit(pc: &PairChain, dec: &ChainDecomposition, start: usize, t: &Rational) -> Result<Rational> {
    Ok(exact_f_limits(pc, dec, start, std::slice::from_ref(t))?.remove(0))
}

/// [`exact_f_limit`] at several thresholds.
pub fn exact_f_limits(
    pc: &PairChain,
    dec: &ChainDecomposition,
    start: usize,
    thresholds: &[Rational],
) -> Result<Vec<Rational>> {
    dec.check(start)?;
    let mut out = vec![Rational::zero(); thresholds.len()];
    for (l, h) in &dec.hitting[start] {
        for (k, &j) in dec.closed_classes[*l].iter().enumerate() {
            let d = pc.distance(j);
            let mass = h * &dec.stationary[*l][k];
            for (o, t) in out.iter_mut().zip(thresholds) {
                if d < *t {
                    *o += &mass;
                }
            }
        }
    }
    Ok(out)
}

/// Profile whose lower and upper envelopes both equal the exact limit.
pub fn limit_profile(
    pc: &PairChain,
    dec: &ChainDecomposition,
    start: usize,
    grid: &ThresholdGrid,
) -> Result<DistributionProfile<Rational>> {
    DistributionProfile::from_limit(grid, exact_f_limits(pc, dec, start, grid.values())?)
}
