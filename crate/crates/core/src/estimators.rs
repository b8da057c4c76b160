//! Exact maximum-likelihood decoders.
//!
//! Under uniform planting the ML estimate is the MAP estimate: the `k`
//! largest states for the energy model and the densest `k`-sub(hyper)graph
//! for the block models. Ties, which have probability zero under the model
//! but can come from file input, go to the lexicographically smallest subset
//! in every solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{solution_weight, weight_of_sorted, Family, Instance};
use crate::subset::{binomial, for_each_subset, RevolvingDoor, SubsetCodec};

pub const DEFAULT_BUDGET: u128 = 100_000_000;

// Incremental weights are re-summed from scratch this often.
const RESYNC_INTERVAL: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "topk")]
    TopK,
    #[serde(rename = "exhaustive")]
    Exhaustive,
    #[serde(rename = "bnb")]
    BranchAndBound,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::TopK => "topk",
            Method::Exhaustive => "exhaustive",
            Method::BranchAndBound => "bnb",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "topk" => Ok(Method::TopK),
            "exhaustive" => Ok(Method::Exhaustive),
            "bnb" => Ok(Method::BranchAndBound),
            other => Err(Error::spec(format!("unknown estimator `{other}` (topk|exhaustive|bnb)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub subset: Vec<usize>,
    pub weight: f64,
    pub explored: u64,
    pub method: Method,
}

/// Runs the estimator named by `method`.
pub fn estimate(instance: &Instance, method: Method, budget: u128) -> Result<Estimate> {
    match method {
        Method::TopK => ml_prem(instance),
        Method::Exhaustive => ml_densest_exhaustive_with_budget(instance, budget),
        Method::BranchAndBound => ml_densest_bnb(instance),
    }
}

/// Indices of the `k` largest states, ties toward smaller indices.
pub fn ml_prem(instance: &Instance) -> Result<Estimate> {
    if instance.spec().family != Family::Prem {
        return Err(Error::spec("top-k decoding applies to the energy model only"));
    }
    let w = instance.weights();
    let k = instance.k();
    let mut order: Vec<usize> = (0..w.len()).collect();
    let by_weight = |a: &usize, b: &usize| w[*b].total_cmp(&w[*a]).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k - 1, by_weight);
    }
    let mut subset = order[..k].to_vec();
    subset.sort_unstable();
    let weight = weight_of_sorted(instance, &subset);
    Ok(Estimate {
        subset,
        weight,
        explored: w.len() as u64,
        method: Method::TopK,
    })
}

fn require_graph(instance: &Instance) -> Result<()> {
    match instance.spec().family {
        Family::Wsbm | Family::Hwsbm => Ok(()),
        Family::Prem => Err(Error::spec("densest-subgraph search needs a (hyper)graph instance")),
    }
}

/// Tracks the best subset under the canonical solution weight.
///
/// Candidates arrive with an incrementally maintained weight. Anything
/// within `tol` of the incumbent is re-summed exactly before comparing, so
/// float drift never decides the winner.
struct Incumbent<'a> {
    instance: &'a Instance,
    subset: Vec<usize>,
    exact: f64,
    tol: f64,
}

impl<'a> Incumbent<'a> {
    fn new(instance: &'a Instance, first: Vec<usize>) -> Self {
        let scale = instance.weights().iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let edges = binomial(instance.k() as u64, instance.edge_cardinality() as u64) as f64;
        let exact = weight_of_sorted(instance, &first);
        Self {
            instance,
            subset: first,
            exact,
            tol: 1e-9 * (1.0 + scale * edges),
        }
    }

    #[inline]
    fn floor(&self) -> f64 {
        self.exact - self.tol
    }

    fn offer(&mut self, sorted: &[usize], approx: f64) {
        if approx < self.floor() {
            return;
        }
        let exact = weight_of_sorted(self.instance, sorted);
        if exact > self.exact || (exact == self.exact && sorted < self.subset.as_slice()) {
            self.exact = exact;
            self.subset.clear();
            self.subset.extend_from_slice(sorted);
        }
    }
}

/// Colex rank of the sorted union of `parts` (pairwise disjoint).
#[inline]
fn union_rank(codec: &SubsetCodec, parts: &[&[usize]], scratch: &mut Vec<usize>) -> usize {
    scratch.clear();
    for p in parts {
        scratch.extend_from_slice(p);
    }
    scratch.sort_unstable();
    codec.rank_unchecked(scratch)
}

/// Densest `k`-subset by full enumeration with the default budget.
pub fn ml_densest_exhaustive(instance: &Instance) -> Result<Estimate> {
    ml_densest_exhaustive_with_budget(instance, DEFAULT_BUDGET)
}

/// Densest `k`-subset by revolving-door enumeration.
///
/// Consecutive subsets differ by one swap, so only the hyperedges through
/// the removed and added nodes are touched at each step.
pub fn ml_densest_exhaustive_with_budget(instance: &Instance, budget: u128) -> Result<Estimate> {
    require_graph(instance)?;
    let n = instance.num_nodes();
    let k = instance.k();
    let h = instance.edge_cardinality();
    let candidates = binomial(n as u64, k as u64);
    if candidates > budget {
        return Err(Error::Budget { candidates, budget });
    }
    let codec = instance.codec();
    let w = instance.weights();

    let mut door = RevolvingDoor::new(n, k);
    let mut best = Incumbent::new(instance, door.current().to_vec());
    let mut current = best.exact;
    let mut explored: u64 = 1;
    let mut common: Vec<usize> = Vec::with_capacity(k);
    let mut scratch = Vec::with_capacity(h);

    while let Some(swap) = door.advance() {
        explored += 1;
        if explored.is_multiple_of(RESYNC_INTERVAL) {
            current = weight_of_sorted(instance, door.current());
        } else {
            common.clear();
            common.extend(door.current().iter().copied().filter(|&v| v != swap.added));
            let mut delta = 0.0;
            for_each_subset(&common, h - 1, |t| {
                delta += w[union_rank(codec, &[t, &[swap.added]], &mut scratch)];
                delta -= w[union_rank(codec, &[t, &[swap.removed]], &mut scratch)];
            });
            current += delta;
        }
        best.offer(door.current(), current);
    }

    Ok(Estimate {
        weight: best.exact,
        subset: best.subset,
        explored,
        method: Method::Exhaustive,
    })
}

/// Densest `k`-subset by depth-first branch and bound.
///
/// Nodes are branched on in order of decreasing total incident weight. A
/// partial set `P` with remaining candidates `R` and `r` nodes still to
/// pick is pruned when `W(P)` plus the sum of the `r` largest per-node
/// bounds cannot reach the incumbent. The per-node bound of `v` splits every
/// hyperedge evenly among its nodes outside `P`; with `j` such nodes there
/// are exactly `C(r-1, j-1) C(|P|, h-j)` hyperedges through `v` in any
/// completion, so the largest that many candidate weights bound their sum.
pub fn ml_densest_bnb(instance: &Instance) -> Result<Estimate> {
    require_graph(instance)?;
    let n = instance.num_nodes();
    let h = instance.edge_cardinality();

    let mut incident = vec![0.0f64; n];
    let mut edge = vec![0usize; h];
    for (rank, &w) in instance.weights().iter().enumerate() {
        instance.codec().unrank_into(rank, &mut edge);
        for &v in &edge {
            incident[v] += w;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| incident[b].total_cmp(&incident[a]).then(a.cmp(&b)));

    let mut first = order[..instance.k()].to_vec();
    first.sort_unstable();
    let mut search = Search {
        instance,
        order,
        best: Incumbent::new(instance, first),
        explored: 0,
        chosen: Vec::with_capacity(instance.k()),
        scratch: Vec::with_capacity(h),
        values: Vec::new(),
    };
    search.descend(0, 0.0);

    Ok(Estimate {
        weight: search.best.exact,
        subset: search.best.subset,
        explored: search.explored,
        method: Method::BranchAndBound,
    })
}

struct Search<'a> {
    instance: &'a Instance,
    order: Vec<usize>,
    best: Incumbent<'a>,
    explored: u64,
    // sorted node ids of the partial set
    chosen: Vec<usize>,
    scratch: Vec<usize>,
    values: Vec<f64>,
}

impl Search<'_> {
    /// Explores completions of `chosen` using nodes at `order[start..]`.
    fn descend(&mut self, start: usize, partial: f64) {
        let k = self.instance.k();
        let r = k - self.chosen.len();
        let pool: Vec<usize> = self.order[start..].to_vec();
        if pool.len() < r {
            return;
        }

        let link: Vec<f64> = pool.iter().map(|&v| self.link(v)).collect();
        if r == 1 {
            for (i, &v) in pool.iter().enumerate() {
                let total = partial + link[i];
                if total < self.best.floor() {
                    continue;
                }
                self.explored += 1;
                let mut set = self.chosen.clone();
                insert_sorted(&mut set, v);
                self.best.offer(&set, total);
            }
            return;
        }

        let mut bounds: Vec<f64> = pool
            .iter()
            .zip(&link)
            .map(|(&v, &l)| l + self.shared_bound(v, &pool, r))
            .collect();
        bounds.sort_by(|a, b| b.total_cmp(a));
        let bound: f64 = partial + bounds[..r].iter().sum::<f64>();
        if bound < self.best.floor() {
            return;
        }

        for (i, &v) in pool.iter().enumerate() {
            if pool.len() - i < r {
                break;
            }
            let pos = insert_sorted(&mut self.chosen, v);
            self.descend(start + i + 1, partial + link[i]);
            self.chosen.remove(pos);
        }
    }

    /// Total weight of hyperedges made of `v` and `h - 1` chosen nodes.
    fn link(&mut self, v: usize) -> f64 {
        let h = self.instance.edge_cardinality();
        let codec = self.instance.codec();
        let w = self.instance.weights();
        let scratch = &mut self.scratch;
        let mut total = 0.0;
        for_each_subset(&self.chosen, h - 1, |t| {
            total += w[union_rank(codec, &[t, &[v]], scratch)];
        });
        total
    }

    /// Bound on `v`'s share of hyperedges with at least two nodes outside
    /// the partial set.
    fn shared_bound(&mut self, v: usize, pool: &[usize], r: usize) -> f64 {
        let h = self.instance.edge_cardinality();
        let p = self.chosen.len();
        let codec = self.instance.codec();
        let w = self.instance.weights();
        let others: Vec<usize> = {
            let mut o: Vec<usize> = pool.iter().copied().filter(|&u| u != v).collect();
            o.sort_unstable();
            o
        };
        let mut total = 0.0;
        for j in 2..=h.min(r) {
            let count = binomial((r - 1) as u64, (j - 1) as u64) * binomial(p as u64, (h - j) as u64);
            if count == 0 {
                continue;
            }
            self.values.clear();
            let values = &mut self.values;
            let scratch = &mut self.scratch;
            let chosen = &self.chosen;
            for_each_subset(&others, j - 1, |tr| {
                for_each_subset(chosen, h - j, |tp| {
                    values.push(w[union_rank(codec, &[tr, tp, &[v]], scratch)]);
                });
            });
            let count = (count as usize).min(values.len());
            if count < values.len() {
                values.select_nth_unstable_by(count - 1, |a, b| b.total_cmp(a));
            }
            total += values[..count].iter().sum::<f64>() / j as f64;
        }
        total
    }
}

fn insert_sorted(set: &mut Vec<usize>, v: usize) -> usize {
    let pos = set.partition_point(|&u| u < v);
    set.insert(pos, v);
    pos
}

/// Naive reference decoder for cross-checking the two fast solvers.
///
/// Recursively lists the `k`-subsets in lexicographic order and sums each
/// one's hyperedges from scratch through checked ranking; the first
/// strictly heaviest subset wins.
pub fn oracle_best(instance: &Instance) -> Result<Estimate> {
    require_graph(instance)?;
    let n = instance.num_nodes();
    let k = instance.k();
    let h = instance.edge_cardinality();

    fn subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            subsets(n, k, v + 1, cur, out);
            cur.pop();
        }
    }

    let mut all_k = Vec::new();
    subsets(n, k, 0, &mut Vec::new(), &mut all_k);

    let mut best: Option<(f64, Vec<usize>)> = None;
    for cand in &all_k {
        let mut edges = Vec::new();
        subsets(k, h, 0, &mut Vec::new(), &mut edges);
        let mut total = 0.0;
        for positions in edges {
            let e: Vec<usize> = positions.iter().map(|&p| cand[p]).collect();
            total += instance.weights()[instance.codec().rank(&e)?];
        }
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, cand.clone()));
        }
    }
    let (_, subset) = best.expect("at least one k-subset exists");
    Ok(Estimate {
        weight: solution_weight(instance, &subset)?,
        subset,
        explored: all_k.len() as u64,
        method: Method::Exhaustive,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_instance, ModelSpec};
    use proptest::prelude::*;

    fn prem(weights: Vec<f64>, k: usize) -> Instance {
        let m = weights.len() - k;
        let spec = ModelSpec::prem(1.0, 1.0, m, k).unwrap();
        Instance::from_parts(spec, weights, (0..k).collect(), 0).unwrap()
    }

    #[test]
    fn top_k_examples() {
        assert_eq!(ml_prem(&prem(vec![0.1, 5.0, -0.3], 1)).unwrap().subset, vec![1]);
        let est = ml_prem(&prem(vec![3.0, 1.0, 2.0, 5.0], 2)).unwrap();
        assert_eq!(est.subset, vec![0, 3]);
        assert_eq!(est.weight, 8.0);
        assert_eq!(ml_prem(&prem(vec![1.0, 1.0, 0.0], 1)).unwrap().subset, vec![0]);
        assert_eq!(ml_prem(&prem(vec![0.0, 2.0, 2.0, 2.0], 2)).unwrap().subset, vec![1, 2]);
    }

    #[test]
    fn top_k_separates_inside_from_outside() {
        let spec = ModelSpec::prem(1.0, 1.0, 200, 7).unwrap();
        for seed in 0..20 {
            let inst = sample_instance(&spec, seed, None).unwrap();
            let est = ml_prem(&inst).unwrap();
            let w = inst.weights();
            let inside = est.subset.iter().map(|&i| w[i]).fold(f64::INFINITY, f64::min);
            let outside = (0..w.len())
                .filter(|i| !est.subset.contains(i))
                .map(|i| w[i])
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(inside >= outside);
        }
    }

    #[test]
    fn three_node_example() {
        let spec = ModelSpec::wsbm(1.0, 1.0, 3, 2).unwrap();
        // colex ranks: {0,1} = 0, {0,2} = 1, {1,2} = 2
        let inst = Instance::from_parts(spec, vec![1.0, 5.0, 2.0], vec![0, 1], 0).unwrap();
        for est in [
            ml_densest_exhaustive(&inst).unwrap(),
            ml_densest_bnb(&inst).unwrap(),
            oracle_best(&inst).unwrap(),
        ] {
            assert_eq!(est.subset, vec![0, 2]);
            assert_eq!(est.weight, 5.0);
        }
    }

    #[test]
    fn noiseless_instances_return_planted() {
        let specs = [
            ModelSpec::wsbm(1.0, 1.0, 9, 3).unwrap(),
            ModelSpec::hwsbm(1.0, 1.0, 9, 4, 3).unwrap(),
            ModelSpec::hwsbm(1.0, 1.0, 8, 3, 3).unwrap(),
        ];
        for spec in specs {
            let inst = Instance::noiseless(spec, vec![1, 4, 6, 7][..spec.k].to_vec()).unwrap();
            for est in [ml_densest_exhaustive(&inst).unwrap(), ml_densest_bnb(&inst).unwrap()] {
                assert_eq!(est.subset, inst.planted());
            }
        }
    }

    #[test]
    fn ties_go_to_lexicographically_smallest() {
        let spec = ModelSpec::hwsbm(1.0, 1.0, 7, 3, 2).unwrap();
        let inst = Instance::from_parts(spec, vec![1.0; 21], vec![4, 5, 6], 0).unwrap();
        for est in [
            ml_densest_exhaustive(&inst).unwrap(),
            ml_densest_bnb(&inst).unwrap(),
            oracle_best(&inst).unwrap(),
        ] {
            assert_eq!(est.subset, vec![0, 1, 2]);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let spec = ModelSpec::wsbm(1.0, 1.0, 12, 6).unwrap();
        let inst = sample_instance(&spec, 1, None).unwrap();
        match ml_densest_exhaustive_with_budget(&inst, 100) {
            Err(Error::Budget { candidates, budget }) => {
                assert_eq!(candidates, 924);
                assert_eq!(budget, 100);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn wrong_family_is_rejected() {
        let inst = prem(vec![1.0, 2.0, 3.0], 1);
        assert!(ml_densest_exhaustive(&inst).is_err());
        assert!(ml_densest_bnb(&inst).is_err());
        let spec = ModelSpec::wsbm(1.0, 1.0, 4, 2).unwrap();
        let graph = Instance::noiseless(spec, vec![0, 1]).unwrap();
        assert!(ml_prem(&graph).is_err());
    }

    #[test]
    fn exhaustive_explores_every_subset() {
        let spec = ModelSpec::wsbm(1.0, 1.0, 10, 4).unwrap();
        let inst = sample_instance(&spec, 5, None).unwrap();
        assert_eq!(ml_densest_exhaustive(&inst).unwrap().explored, 210);
        assert!(ml_densest_bnb(&inst).unwrap().explored <= 210);
    }

    #[test]
    fn long_enumeration_stays_exact() {
        // crosses many resync intervals
        let spec = ModelSpec::wsbm(0.3, 1.0, 16, 5).unwrap();
        let inst = sample_instance(&spec, 3, None).unwrap();
        let a = ml_densest_exhaustive(&inst).unwrap();
        let b = ml_densest_bnb(&inst).unwrap();
        assert_eq!(a.explored, 4368);
        assert_eq!((a.subset.clone(), a.weight), (b.subset, b.weight));
        assert_eq!(a.weight, solution_weight(&inst, &a.subset).unwrap());
    }

    fn permuted(inst: &Instance, perm: &[usize]) -> Instance {
        let codec = inst.codec();
        let mut weights = vec![0.0; codec.len()];
        for (rank, &w) in inst.weights().iter().enumerate() {
            let mut e: Vec<usize> = codec.unrank(rank).unwrap().iter().map(|&v| perm[v]).collect();
            e.sort_unstable();
            weights[codec.rank(&e).unwrap()] = w;
        }
        let planted = inst.planted().iter().map(|&v| perm[v]).collect();
        Instance::from_parts(*inst.spec(), weights, planted, inst.seed()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn solvers_agree(seed in any::<u64>(), n in 5usize..10, k_off in 0usize..3, h in 2usize..4, gamma in 0.0f64..2.0) {
            let k = (h + k_off).min(n - 1);
            let spec = ModelSpec::hwsbm(gamma + 0.01, 1.0, n, k, h).unwrap();
            let inst = sample_instance(&spec, seed, None).unwrap();
            let a = ml_densest_exhaustive(&inst).unwrap();
            let b = ml_densest_bnb(&inst).unwrap();
            let c = oracle_best(&inst).unwrap();
            prop_assert_eq!(&a.subset, &c.subset);
            prop_assert_eq!(&b.subset, &c.subset);
            prop_assert_eq!(a.weight, c.weight);
            prop_assert_eq!(b.weight, c.weight);
            prop_assert!(b.explored <= a.explored);
        }

        #[test]
        fn estimate_is_label_equivariant(seed in any::<u64>(), shuffle in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let spec = ModelSpec::hwsbm(0.8, 1.0, 8, 3, 2).unwrap();
            let inst = sample_instance(&spec, seed, None).unwrap();
            let mut perm: Vec<usize> = (0..8).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle));
            let moved = permuted(&inst, &perm);
            let before = ml_densest_bnb(&inst).unwrap();
            let after = ml_densest_bnb(&moved).unwrap();
            let mut mapped: Vec<usize> = before.subset.iter().map(|&v| perm[v]).collect();
            mapped.sort_unstable();
            prop_assert_eq!(mapped, after.subset);
        }

        #[test]
        fn constant_shift_keeps_argmax(seed in any::<u64>(), shift in 0.1f64..50.0) {
            let spec = ModelSpec::hwsbm(0.5, 1.0, 8, 4, 3).unwrap();
            let inst = sample_instance(&spec, seed, None).unwrap();
            let shifted: Vec<f64> = inst.weights().iter().map(|w| w + shift).collect();
            let moved = Instance::from_parts(*inst.spec(), shifted, inst.planted().to_vec(), 0).unwrap();
            prop_assert_eq!(ml_densest_exhaustive(&inst).unwrap().subset, ml_densest_exhaustive(&moved).unwrap().subset);
        }
    }
}
