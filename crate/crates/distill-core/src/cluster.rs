//! Complete-linkage agglomerative clustering with a global height cut.

/// One merge step: the two clusters joined and the linkage distance.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub n: usize,
    /// Merges in order; step k creates cluster id `n + k`.
    pub merges: Vec<Merge>,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Builds the full dendrogram. Complete linkage: cluster distance is the
/// maximum pairwise point distance. Ties pick the pair whose lowest member
/// index is smallest (then the other member's index).
pub fn complete_linkage(points: &[Vec<f64>]) -> Dendrogram {
    let n = points.len();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    // Active clusters: (cluster id, member point indices sorted ascending).
    let mut active: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut next_id = n;

    let dist = |a: &[usize], b: &[usize]| -> f64 {
        let mut d = 0.0f64;
        for &i in a {
            for &j in b {
                d = d.max(euclidean(&points[i], &points[j]));
            }
        }
        d
    };

    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for ai in 0..active.len() {
            for bi in ai + 1..active.len() {
                let d = dist(&active[ai].1, &active[bi].1);
                let better = match best {
                    None => true,
                    Some((bd, bai, bbi)) => {
                        d < bd
                            || (d == bd
                                && (active[ai].1[0], active[bi].1[0])
                                    < (active[bai].1[0], active[bbi].1[0]))
                    }
                };
                if better {
                    best = Some((d, ai, bi));
                }
            }
        }
        let (h, ai, bi) = best.unwrap();
        let (rid, rmembers) = active.remove(bi);
        let (lid, lmembers) = active.remove(ai);
        merges.push(Merge { left: lid, right: rid, height: h });
        let mut members = lmembers;
        members.extend(rmembers);
        members.sort_unstable();
        active.push((next_id, members));
        next_id += 1;
    }
    Dendrogram { n, merges }
}

impl Dendrogram {
    /// Cluster memberships after undoing every merge with height > `h`
    /// (merges at exactly `h` are kept). Each cluster lists its point
    /// indices ascending; clusters are ordered by lowest member.
    pub fn cut_at(&self, h: f64) -> Vec<Vec<usize>> {
        let mut parent: Vec<Option<usize>> = vec![None; self.n + self.merges.len()];
        for (k, m) in self.merges.iter().enumerate() {
            if m.height <= h {
                parent[m.left] = Some(self.n + k);
                parent[m.right] = Some(self.n + k);
            }
        }
        let root = |mut i: usize| {
            while let Some(p) = parent[i] {
                i = p;
            }
            i
        };
        let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
        for i in 0..self.n {
            let r = root(i);
            match groups.iter_mut().find(|(g, _)| *g == r) {
                Some((_, v)) => v.push(i),
                None => groups.push((r, vec![i])),
            }
        }
        groups.sort_by_key(|(_, v)| v[0]);
        groups.into_iter().map(|(_, v)| v).collect()
    }

    /// Largest cut height producing at least `k` clusters. Equal merge
    /// heights collapse together, so the achieved count can exceed `k`.
    pub fn cut_into_at_least(&self, k: usize) -> Vec<Vec<usize>> {
        if self.n == 0 {
            return Vec::new();
        }
        let k = k.max(1);
        if k >= self.n {
            return (0..self.n).map(|i| vec![i]).collect();
        }
        // Candidate heights, descending; cutting just below a merge height
        // undoes that merge and every equal-height one above it.
        let mut heights: Vec<f64> = self.merges.iter().map(|m| m.height).collect();
        heights.sort_by(|a, b| b.partial_cmp(a).unwrap());
        heights.dedup();
        let mut best = self.cut_at(f64::INFINITY);
        for h in heights {
            if best.len() >= k {
                break;
            }
            // Cut strictly below h.
            let below = self
                .merges
                .iter()
                .map(|m| m.height)
                .filter(|&x| x < h)
                .fold(f64::NEG_INFINITY, f64::max);
            best = self.cut_at(if below.is_finite() { below } else { -1.0 });
        }
        best
    }
}
