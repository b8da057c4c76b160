//! Independent-coverage groups and the reduction of a (hyper)graph instance
//! to a planted energy model.
//!
//! A group fixes an intersection `I` of `m` planted nodes and pairs it with
//! disjoint blocks of `k - m` nodes from outside the planted set. Members
//! share exactly the hyperedges inside `I`, so after subtracting `W(I)` their
//! weights are sums over disjoint hyperedge sets.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{weight_of_sorted, Instance, ModelSpec};
use crate::subset::{binomial, for_each_subset, SubsetCodec};
use crate::thresholds::{ell, group_size};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGroup {
    pub n: usize,
    pub k: usize,
    pub h: usize,
    pub m: usize,
    pub intersection: Vec<usize>,
    pub members: Vec<Vec<usize>>,
    /// Hyperedges per member outside the intersection.
    pub reduced_ell: u64,
}

/// Builds the group whose blocks are consecutive runs of the nodes outside
/// `planted`, in ascending order. Leftover nodes are not used.
pub fn build_coverage(
    n: usize,
    k: usize,
    h: usize,
    m: usize,
    planted: &[usize],
    intersection: &[usize],
) -> Result<CoverageGroup> {
    let inside: HashSet<usize> = planted.iter().copied().collect();
    let outside: Vec<usize> = (0..n).filter(|v| !inside.contains(v)).collect();
    build_coverage_from_order(n, k, h, m, planted, intersection, &outside)
}

/// As [`build_coverage`], cutting blocks from `outside_order`, which must be
/// a permutation of the nodes outside `planted`.
pub fn build_coverage_from_order(
    n: usize,
    k: usize,
    h: usize,
    m: usize,
    planted: &[usize],
    intersection: &[usize],
    outside_order: &[usize],
) -> Result<CoverageGroup> {
    if h < 1 || h > k || k + 1 > n {
        return Err(Error::spec(format!("need 1 <= h <= k <= N - 1, got N = {n}, k = {k}, h = {h}")));
    }
    if m >= k {
        return Err(Error::spec(format!("overlap m = {m} must be below k = {k}")));
    }
    let s: BTreeSet<usize> = planted.iter().copied().collect();
    if s.len() != k || planted.len() != k || s.iter().any(|&v| v >= n) {
        return Err(Error::spec(format!("planted set must hold {k} distinct nodes below {n}")));
    }
    let mut i_sorted = intersection.to_vec();
    i_sorted.sort_unstable();
    i_sorted.dedup();
    if i_sorted.len() != m || intersection.len() != m || !i_sorted.iter().all(|v| s.contains(v)) {
        return Err(Error::spec(format!("intersection must be {m} distinct planted nodes")));
    }
    let mut check = outside_order.to_vec();
    check.sort_unstable();
    let expected: Vec<usize> = (0..n).filter(|v| !s.contains(v)).collect();
    if check != expected {
        return Err(Error::spec("outside order must list every non-planted node once"));
    }

    let block = k - m;
    let groups = group_size(n, k, m);
    if groups == 0 {
        return Err(Error::DegenerateCoverage { n, k, m, groups });
    }
    let members = outside_order
        .chunks_exact(block)
        .take(groups)
        .map(|chunk| {
            let mut member = i_sorted.clone();
            member.extend_from_slice(chunk);
            member.sort_unstable();
            member
        })
        .collect();
    Ok(CoverageGroup {
        n,
        k,
        h,
        m,
        intersection: i_sorted,
        members,
        reduced_ell: ell(k, h, m),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Intersection { reason: String },
    MemberShape { member: usize, reason: String },
    MissesIntersection { member: usize },
    PlantedOverlap { member: usize, overlap: Vec<usize> },
    SharedNodes { a: usize, b: usize, shared: Vec<usize> },
    SharedHyperedges { a: usize, b: usize, expected: usize, found: usize },
    Cardinality { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub passed: bool,
    pub violation: Option<Violation>,
    pub pairs_checked: usize,
    /// Hyperedges shared by every pair, `C(m, h)`, when the check passed.
    pub shared_per_pair: Option<usize>,
}

impl CoverageReport {
    fn fail(violation: Violation, pairs_checked: usize) -> Self {
        Self {
            passed: false,
            violation: Some(violation),
            pairs_checked,
            shared_per_pair: None,
        }
    }
}

/// Checks every group invariant, down to the hyperedge level: any two
/// members share exactly the `h`-subsets of the intersection. Reports the
/// first violation found.
pub fn verify_coverage(group: &CoverageGroup, planted: &[usize]) -> CoverageReport {
    let (n, k, h, m) = (group.n, group.k, group.h, group.m);
    let s: BTreeSet<usize> = planted.iter().copied().collect();
    let i: BTreeSet<usize> = group.intersection.iter().copied().collect();
    if i.len() != m || group.intersection.len() != m || !i.is_subset(&s) {
        return CoverageReport::fail(
            Violation::Intersection {
                reason: format!("intersection must be {m} distinct planted nodes"),
            },
            0,
        );
    }
    let codec = match (h >= 1 && h <= n).then(|| SubsetCodec::new(n, h)) {
        Some(Ok(c)) => c,
        _ => {
            return CoverageReport::fail(
                Violation::Intersection {
                    reason: format!("no hyperedges of cardinality {h} on {n} nodes"),
                },
                0,
            )
        }
    };

    let mut edge_sets: Vec<HashSet<usize>> = Vec::with_capacity(group.members.len());
    for (idx, member) in group.members.iter().enumerate() {
        let sorted = member.windows(2).all(|w| w[0] < w[1]);
        if member.len() != k || !sorted || member.iter().any(|&v| v >= n) {
            return CoverageReport::fail(
                Violation::MemberShape {
                    member: idx,
                    reason: format!("members must be {k} increasing nodes below {n}"),
                },
                0,
            );
        }
        let set: BTreeSet<usize> = member.iter().copied().collect();
        if !i.is_subset(&set) {
            return CoverageReport::fail(Violation::MissesIntersection { member: idx }, 0);
        }
        let overlap: Vec<usize> = set.intersection(&s).copied().collect();
        if overlap.len() != m {
            return CoverageReport::fail(Violation::PlantedOverlap { member: idx, overlap }, 0);
        }
        let mut edges = HashSet::new();
        for_each_subset(member, h, |e| {
            edges.insert(codec.rank_unchecked(e));
        });
        edge_sets.push(edges);
    }

    let mut inner = HashSet::new();
    for_each_subset(&group.intersection, h, |e| {
        inner.insert(codec.rank_unchecked(e));
    });

    let mut pairs = 0;
    for a in 0..group.members.len() {
        for b in a + 1..group.members.len() {
            pairs += 1;
            let shared: Vec<usize> = group.members[a]
                .iter()
                .filter(|v| group.members[b].contains(v))
                .copied()
                .collect();
            if shared != group.intersection {
                return CoverageReport::fail(Violation::SharedNodes { a, b, shared }, pairs);
            }
            let common: HashSet<usize> = edge_sets[a].intersection(&edge_sets[b]).copied().collect();
            if common != inner {
                return CoverageReport::fail(
                    Violation::SharedHyperedges {
                        a,
                        b,
                        expected: inner.len(),
                        found: common.len(),
                    },
                    pairs,
                );
            }
        }
    }

    let expected = if k > m && n >= k { group_size(n, k, m) } else { 0 };
    if group.members.len() != expected {
        return CoverageReport::fail(
            Violation::Cardinality {
                expected,
                found: group.members.len(),
            },
            pairs,
        );
    }
    CoverageReport {
        passed: true,
        violation: None,
        pairs_checked: pairs,
        shared_per_pair: Some(inner.len()),
    }
}

/// Groups whose union contains every `k`-subset overlapping `planted` in
/// exactly `m` nodes. Exponential in size; meant for small `N`.
///
/// For each intersection, every not-yet-covered outside block seeds a new
/// group: that block first, the remaining outside nodes after it in
/// ascending order.
pub fn seed_family(n: usize, k: usize, h: usize, m: usize, planted: &[usize]) -> Result<Vec<CoverageGroup>> {
    let mut s = planted.to_vec();
    s.sort_unstable();
    let outside: Vec<usize> = (0..n).filter(|v| s.binary_search(v).is_err()).collect();
    let mut intersections = Vec::new();
    for_each_subset(&s, m, |i| intersections.push(i.to_vec()));
    let mut blocks = Vec::new();
    for_each_subset(&outside, k - m, |b| blocks.push(b.to_vec()));

    let mut family = Vec::new();
    for i in &intersections {
        let mut covered: HashSet<Vec<usize>> = HashSet::new();
        for block in &blocks {
            if covered.contains(block) {
                continue;
            }
            let mut order = block.clone();
            order.extend(outside.iter().copied().filter(|v| !block.contains(v)));
            let group = build_coverage_from_order(n, k, h, m, &s, i, &order)?;
            for chunk in order.chunks_exact(k - m).take(group.members.len()) {
                let mut c = chunk.to_vec();
                c.sort_unstable();
                covered.insert(c);
            }
            family.push(group);
        }
    }
    Ok(family)
}

/// Number of `k`-subsets overlapping the planted set in exactly `m` nodes.
pub fn overlap_count(n: usize, k: usize, m: usize) -> u128 {
    binomial(k as u64, m as u64) * binomial((n - k) as u64, (k - m) as u64)
}

/// Reduces an instance to a single-state energy model over one group.
///
/// State `j < M_m` is member `j` with weight `W(member) - W(I)`; the last
/// state is the planted set with weight `W(S) - W(I)` and is the planted
/// index of the result. The result's scaled parameters are `ell_m mu` and
/// `sqrt(ell_m) sigma` over `M_m` unbiased states.
pub fn reduce_to_prem(instance: &Instance, group: &CoverageGroup) -> Result<Instance> {
    let spec = instance.spec();
    if group.n != instance.num_nodes() || group.k != spec.k || group.h != instance.edge_cardinality() {
        return Err(Error::spec("coverage group was built for a different model"));
    }
    if !group.intersection.iter().all(|v| instance.planted().contains(v)) {
        return Err(Error::spec("intersection is not inside the planted set"));
    }
    let states = group.members.len();
    if states < 2 {
        return Err(Error::DegenerateCoverage {
            n: group.n,
            k: group.k,
            m: group.m,
            groups: states,
        });
    }
    let base = weight_of_sorted(instance, &group.intersection);
    let mut weights: Vec<f64> = group
        .members
        .iter()
        .map(|member| weight_of_sorted(instance, member) - base)
        .collect();
    weights.push(weight_of_sorted(instance, instance.planted()) - base);

    let ell = group.reduced_ell as f64;
    let log_n = (instance.num_nodes() as f64).ln();
    let log_states = (states as f64).ln();
    let reduced = ModelSpec::prem(
        ell * spec.mu_hat * log_n / log_states,
        ell.sqrt() * spec.sigma_hat * (log_n / log_states).sqrt(),
        states,
        1,
    )?;
    Instance::from_parts(reduced, weights, vec![states], instance.seed())
}
