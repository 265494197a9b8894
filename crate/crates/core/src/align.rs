//! Label switching: relabel sampled partitions onto a reference partition.

/// Minimum-cost perfect assignment on a square cost matrix (Hungarian method
/// with potentials). Returns `assignment[row] = column` and the total cost.
pub fn min_cost_assignment(cost: &[Vec<i64>]) -> (Vec<usize>, i64) {
    let n = cost.len();
    if n == 0 {
        return (Vec::new(), 0);
    }
    // 1-based arrays; p[j] = row matched to column j
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    let total = (0..n).map(|i| cost[i][assignment[i]]).sum();
    (assignment, total)
}

/// `overlap[a][c]` = number of vertices with sample label `a` and reference label `c`.
pub fn overlap_matrix(sample: &[usize], reference: &[usize], num_blocks: usize) -> Vec<Vec<i64>> {
    let mut overlap = vec![vec![0i64; num_blocks]; num_blocks];
    for (&a, &c) in sample.iter().zip(reference) {
        overlap[a][c] += 1;
    }
    overlap
}

/// Label permutation `perm[a] = c` maximising total overlap with the reference.
/// Among optimal permutations the lexicographically smallest is returned, so
/// ties resolve towards the lowest labels.
pub fn best_permutation(sample: &[usize], reference: &[usize], num_blocks: usize) -> Vec<usize> {
    let overlap = overlap_matrix(sample, reference, num_blocks);
    let max = overlap.iter().flatten().copied().max().unwrap_or(0);
    let cost: Vec<Vec<i64>> = overlap
        .iter()
        .map(|row| row.iter().map(|&o| max - o).collect())
        .collect();
    let (_, optimum) = min_cost_assignment(&cost);

    let mut perm = vec![usize::MAX; num_blocks];
    let mut used = vec![false; num_blocks];
    let mut fixed_cost = 0i64;
    for a in 0..num_blocks {
        for c in 0..num_blocks {
            if used[c] {
                continue;
            }
            let rows: Vec<usize> = (a + 1..num_blocks).collect();
            let cols: Vec<usize> = (0..num_blocks).filter(|&x| !used[x] && x != c).collect();
            let sub: Vec<Vec<i64>> = rows
                .iter()
                .map(|&r| cols.iter().map(|&x| cost[r][x]).collect())
                .collect();
            let (_, rest) = min_cost_assignment(&sub);
            if fixed_cost + cost[a][c] + rest == optimum {
                perm[a] = c;
                used[c] = true;
                fixed_cost += cost[a][c];
                break;
            }
        }
        debug_assert_ne!(perm[a], usize::MAX);
    }
    perm
}

/// Relabels `sample` by the permutation that best matches `reference`.
pub fn align_labels(sample: &[usize], reference: &[usize], num_blocks: usize) -> Vec<usize> {
    let perm = best_permutation(sample, reference, num_blocks);
    sample.iter().map(|&a| perm[a]).collect()
}

/// Relabels blocks in order of first appearance, giving one representative
/// per equivalence class under label permutation.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&b| match map.iter().find(|(from, _)| *from == b) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((b, to));
                to
            }
        })
        .collect()
}
