//! Binomial coefficients, colexicographic subset ranking, and the subset
//! iterators used to walk hyperedges and candidate solutions.

use crate::error::{Error, Result};

/// `C(n, k)` in 128-bit arithmetic, saturating at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Bijection between the `h`-subsets of `{0, .., n-1}` and `[0, C(n, h))`
/// in colexicographic order.
#[derive(Debug, Clone)]
pub struct SubsetCodec {
    n: usize,
    h: usize,
    // table[v][j] = C(v, j) for v <= n, j <= h
    table: Vec<Vec<usize>>,
    count: usize,
}

impl SubsetCodec {
    pub fn new(n: usize, h: usize) -> Result<Self> {
        if n == 0 || h == 0 || h > n {
            return Err(Error::index(format!("codec needs 1 <= h <= n, got n = {n}, h = {h}")));
        }
        let count = binomial(n as u64, h as u64);
        if count > usize::MAX as u128 {
            return Err(Error::index(format!("C({n}, {h}) does not fit in memory indices")));
        }
        let mut table = vec![vec![0usize; h + 1]; n + 1];
        for v in 0..=n {
            table[v][0] = 1;
            for j in 1..=h.min(v) {
                table[v][j] = table[v - 1][j - 1] + if j < v { table[v - 1][j] } else { 0 };
            }
        }
        Ok(Self {
            n,
            h,
            table,
            count: count as usize,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// Number of subsets, `C(n, h)`.
    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub(crate) fn choose(&self, v: usize, j: usize) -> usize {
        if j > v {
            0
        } else {
            self.table[v][j]
        }
    }

    pub fn rank(&self, subset: &[usize]) -> Result<usize> {
        if subset.len() != self.h {
            return Err(Error::index(format!(
                "subset has {} elements, codec expects {}",
                subset.len(),
                self.h
            )));
        }
        for (i, &v) in subset.iter().enumerate() {
            if v >= self.n {
                return Err(Error::index(format!("element {v} outside [0, {})", self.n)));
            }
            if i > 0 && subset[i - 1] >= v {
                return Err(Error::index("subset must be strictly increasing"));
            }
        }
        Ok(self.rank_unchecked(subset))
    }

    /// Colex rank of a strictly increasing in-range subset of size `h`.
    #[inline]
    pub(crate) fn rank_unchecked(&self, subset: &[usize]) -> usize {
        subset
            .iter()
            .enumerate()
            .map(|(i, &v)| self.choose(v, i + 1))
            .sum()
    }

    pub fn unrank(&self, rank: usize) -> Result<Vec<usize>> {
        if rank >= self.count {
            return Err(Error::index(format!("rank {rank} outside [0, {})", self.count)));
        }
        let mut out = vec![0usize; self.h];
        self.unrank_into(rank, &mut out);
        Ok(out)
    }

    pub(crate) fn unrank_into(&self, mut rank: usize, out: &mut [usize]) {
        let mut v = self.n;
        for j in (1..=self.h).rev() {
            // largest v with C(v, j) <= rank
            v -= 1;
            while self.choose(v, j) > rank {
                v -= 1;
            }
            out[j - 1] = v;
            rank -= self.choose(v, j);
        }
    }
}

/// Calls `f` on every `h`-subset of the sorted slice `set`, in
/// lexicographic order of positions. Nothing is called when `h > set.len()`.
pub fn for_each_subset<F: FnMut(&[usize])>(set: &[usize], h: usize, mut f: F) {
    let n = set.len();
    if h > n {
        return;
    }
    if h == 0 {
        f(&[]);
        return;
    }
    let mut pos: Vec<usize> = (0..h).collect();
    let mut buf: Vec<usize> = pos.iter().map(|&p| set[p]).collect();
    loop {
        f(&buf);
        let mut i = h;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if pos[i] < n - h + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        pos[i] += 1;
        buf[i] = set[pos[i]];
        for j in i + 1..h {
            pos[j] = pos[j - 1] + 1;
            buf[j] = set[pos[j]];
        }
    }
}

/// A single step of [`RevolvingDoor`]: `removed` leaves the current subset
/// and `added` joins it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Swap {
    pub removed: usize,
    pub added: usize,
}

/// Revolving-door enumeration of the `t`-subsets of `{0, .., n-1}`:
/// consecutive subsets differ by exactly one swapped element.
///
/// Follows Knuth's Algorithm R (TAOCP 7.2.1.3). The subset is kept sorted.
#[derive(Debug, Clone)]
pub struct RevolvingDoor {
    // c[0..t] is the subset, c[t] = n is a sentinel
    c: Vec<usize>,
    t: usize,
    done: bool,
}

impl RevolvingDoor {
    pub fn new(n: usize, t: usize) -> Self {
        assert!(t >= 1 && t <= n, "revolving door needs 1 <= t <= n");
        let mut c: Vec<usize> = (0..t).collect();
        c.push(n);
        Self { c, t, done: false }
    }

    pub fn current(&self) -> &[usize] {
        &self.c[..self.t]
    }

    /// Moves to the next subset and reports the swap, or `None` once every
    /// subset has been visited.
    pub fn advance(&mut self) -> Option<Swap> {
        if self.done {
            return None;
        }
        let t = self.t;
        let c = &mut self.c;
        // 1-based indices from the algorithm map to c[j - 1]
        let mut j;
        let mut try_decrease;
        if t % 2 == 1 {
            if c[0] + 1 < c[1] {
                let removed = c[0];
                c[0] += 1;
                return Some(Swap { removed, added: c[0] });
            }
            j = 2;
            try_decrease = true;
        } else {
            if c[0] > 0 {
                let removed = c[0];
                c[0] -= 1;
                return Some(Swap { removed, added: c[0] });
            }
            j = 2;
            try_decrease = false;
        }
        loop {
            if j > t {
                self.done = true;
                return None;
            }
            if try_decrease {
                // c_j = c_{j-1} + 1 here
                if c[j - 1] >= j {
                    let removed = c[j - 1];
                    c[j - 1] = c[j - 2];
                    c[j - 2] = j - 2;
                    return Some(Swap { removed, added: j - 2 });
                }
                j += 1;
                try_decrease = false;
            } else {
                // c_{j-1} = j - 2 here
                if c[j - 1] + 1 < c[j] {
                    let removed = c[j - 2];
                    c[j - 2] = c[j - 1];
                    c[j - 1] += 1;
                    return Some(Swap { removed, added: c[j - 1] });
                }
                j += 1;
                try_decrease = true;
            }
        }
    }
}
