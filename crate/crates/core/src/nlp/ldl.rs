//! Sparse symmetric indefinite factorization `P A Pᵀ = L D Lᵀ` for KKT
//! matrices, with `D` made of 1×1 and 2×2 blocks.
//!
//! The matrix is assembled in envelope (skyline) layout under a fixed
//! ordering. Factorization runs a frontal elimination over that ordering:
//! an index may be pivoted once every row coupled to it has been assembled,
//! and among those a threshold test picks 1×1 or 2×2 pivots. A pivot that
//! fails the test is delayed, which only widens the front. The ordering is
//! reverse Cuthill–McKee on the graph of the whole KKT matrix, which keeps
//! the front small for the block-banded systems produced by collocation.

use std::collections::VecDeque;

/// Eigenvalue signs of the last factored matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
}

/// Pivot threshold `(1 + √17) / 8`.
const BK_ALPHA: f64 = 0.640_388_203_202_208_4;

/// Threshold `u` for pivots chosen before the whole matrix is assembled.
/// Larger values bound `L` more tightly but delay more pivots.
const PIVOT_THRESHOLD: f64 = 0.1;

/// A pivot is singular when it falls below this fraction of the largest
/// original entry in its row.
const ZERO_PIVOT_REL: f64 = 1e-15;

#[derive(Clone, Copy, Debug)]
enum Block {
    One {
        p: usize,
        inv: f64,
    },
    /// Inverse of `[[a, b], [b, c]]` stored as `(a', b', c')`.
    Two {
        p: usize,
        q: usize,
        inv: [f64; 3],
    },
}

#[derive(Clone, Debug)]
struct Step {
    block: Block,
    /// Range into `l_idx`; values start at `vstart` in `l_val`.
    start: usize,
    end: usize,
    vstart: usize,
}

#[derive(Clone, Debug)]
pub struct SymmetricLdl {
    n: usize,
    /// `perm[new] = old`
    perm: Vec<usize>,
    /// `iperm[old] = new`
    iperm: Vec<usize>,
    /// first column of each (permuted) row
    first: Vec<usize>,
    /// offset of row `i` in the value buffer; row `i` holds columns `first[i]..=i`
    start: Vec<usize>,
    /// last row coupled to each (permuted) column
    last: Vec<usize>,
    len: usize,
    steps: Vec<Step>,
    l_idx: Vec<usize>,
    /// one value per entry of `l_idx` for 1×1 steps, two for 2×2 steps
    l_val: Vec<f64>,
}

/// Dense symmetric front, both triangles stored.
struct Front {
    cap: usize,
    a: Vec<f64>,
    /// local -> permuted index
    glob: Vec<usize>,
    /// permuted index -> local, `usize::MAX` when absent
    loc: Vec<usize>,
}

impl Front {
    fn new(cap: usize, n: usize) -> Self {
        Self {
            cap,
            a: vec![0.0; cap * cap],
            glob: Vec::with_capacity(cap),
            loc: vec![usize::MAX; n],
        }
    }

    fn len(&self) -> usize {
        self.glob.len()
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cap + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.cap + j]
    }

    fn push(&mut self, g: usize) -> usize {
        let f = self.len();
        if f == self.cap {
            let cap = 2 * self.cap;
            let mut a = vec![0.0; cap * cap];
            for i in 0..f {
                a[i * cap..i * cap + f].copy_from_slice(&self.a[i * self.cap..i * self.cap + f]);
            }
            self.a = a;
            self.cap = cap;
        }
        for j in 0..=f {
            *self.at_mut(f, j) = 0.0;
            *self.at_mut(j, f) = 0.0;
        }
        self.glob.push(g);
        self.loc[g] = f;
        f
    }

    /// Remove local index `k` by moving the last one into its place.
    fn remove(&mut self, k: usize) {
        let last = self.len() - 1;
        if k != last {
            for j in 0..=last {
                let v = self.at(last, j);
                *self.at_mut(k, j) = v;
            }
            for j in 0..=last {
                let v = self.at(j, last);
                *self.at_mut(j, k) = v;
            }
            let v = self.at(last, last);
            *self.at_mut(k, k) = v;
            self.loc[self.glob[k]] = usize::MAX;
            self.glob[k] = self.glob[last];
            self.loc[self.glob[k]] = k;
        } else {
            self.loc[self.glob[k]] = usize::MAX;
        }
        self.glob.pop();
    }

    /// `(max_{i != k} |F[i][k]|, argmax)`
    fn col_max(&self, k: usize, skip: usize) -> (f64, usize) {
        let mut best = (0.0, usize::MAX);
        for i in 0..self.len() {
            if i != k && i != skip {
                let v = self.at(i, k).abs();
                if v > best.0 || best.1 == usize::MAX {
                    best = (v, i);
                }
            }
        }
        best
    }
}

impl SymmetricLdl {
    /// Symbolic setup for an `n × n` matrix whose nonzeros (either triangle,
    /// original indexing) are listed in `pattern`.
    pub fn new(n: usize, pattern: &[(usize, usize)], perm: Vec<usize>) -> Self {
        assert_eq!(perm.len(), n);
        let mut iperm = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for &(i, j) in pattern {
            let (a, b) = (iperm[i], iperm[j]);
            let (r, c) = if a >= b { (a, b) } else { (b, a) };
            first[r] = first[r].min(c);
        }
        let mut start = Vec::with_capacity(n + 1);
        let mut total = 0;
        let mut last: Vec<usize> = (0..n).collect();
        for i in 0..n {
            start.push(total);
            total += i - first[i] + 1;
            for c in first[i]..i {
                last[c] = last[c].max(i);
            }
        }
        start.push(total);
        Self {
            n,
            perm,
            iperm,
            first,
            start,
            last,
            len: total,
            steps: Vec::new(),
            l_idx: Vec::new(),
            l_val: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored entries in the envelope.
    pub fn envelope_size(&self) -> usize {
        self.len
    }

    /// Storage slot for entry `(i, j)` in original indexing.
    pub fn slot(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.iperm[i], self.iperm[j]);
        let (r, c) = if a >= b { (a, b) } else { (b, a) };
        debug_assert!(c >= self.first[r]);
        self.start[r] + c - self.first[r]
    }

    /// Zeroed value buffer matching the envelope layout.
    pub fn zeros(&self) -> Vec<f64> {
        vec![0.0; self.len]
    }

    /// `y = A x` for an assembled (unfactored) value buffer.
    pub fn mul(&self, a: &[f64], x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.n {
            let (fr, s) = (self.first[r], self.start[r]);
            let orow = self.perm[r];
            for c in fr..r {
                let v = a[s + c - fr];
                if v != 0.0 {
                    let ocol = self.perm[c];
                    y[orow] += v * x[ocol];
                    y[ocol] += v * x[orow];
                }
            }
            y[orow] += a[s + r - fr] * x[orow];
        }
    }

    /// Factor the assembled matrix `a` (envelope layout) and return its
    /// inertia. Singular pivots are counted as zero eigenvalues.
    pub fn factor(&mut self, a: &[f64]) -> Inertia {
        let n = self.n;
        self.steps.clear();
        self.l_idx.clear();
        self.l_val.clear();
        let mut inertia = Inertia::default();

        // largest original entry per row, for the singularity test
        let mut row_max = vec![0.0f64; n];
        for r in 0..n {
            let (fr, s) = (self.first[r], self.start[r]);
            for c in fr..=r {
                let v = a[s + c - fr].abs();
                row_max[r] = row_max[r].max(v);
                row_max[c] = row_max[c].max(v);
            }
        }

        let band = (0..n).map(|r| r - self.first[r]).max().unwrap_or(0);
        let mut front = Front::new(band + 8, n);
        let mut memo = Memo {
            clock: 1,
            touched: vec![0; n],
            failed: vec![0; n],
            partner: vec![usize::MAX; n],
            partner_summed: vec![false; n],
        };
        let mut next_in = 0;
        let mut done = 0;
        while done < n {
            let pivot = self.choose_pivot(&front, next_in, &mut memo);
            match pivot {
                Some(block) => {
                    memo.clock += 1;
                    self.eliminate(&mut front, block, &row_max, &mut inertia, &mut memo);
                    done += if matches!(block, Pick::Two(..)) { 2 } else { 1 };
                }
                None => {
                    // nothing changes until another front member becomes fully summed
                    let target = (0..front.len())
                        .map(|k| self.last[front.glob[k]])
                        .filter(|&l| l >= next_in)
                        .min()
                        .unwrap_or(next_in);
                    assert!(next_in < n, "no admissible pivot with the whole matrix assembled");
                    memo.clock += 1;
                    while next_in <= target && next_in < n {
                        self.assemble(&mut front, a, next_in, &mut memo);
                        next_in += 1;
                    }
                }
            }
        }
        inertia
    }

    fn assemble(&self, front: &mut Front, a: &[f64], i: usize, memo: &mut Memo) {
        let loc = front.push(i);
        memo.touched[i] = memo.clock;
        let (fr, s) = (self.first[i], self.start[i]);
        for c in fr..=i {
            let v = a[s + c - fr];
            if v == 0.0 {
                continue;
            }
            let lc = if c == i {
                loc
            } else {
                let l = front.loc[c];
                assert!(l != usize::MAX, "coupled column left the front");
                l
            };
            *front.at_mut(loc, lc) += v;
            if lc != loc {
                *front.at_mut(lc, loc) += v;
                memo.touched[c] = memo.clock;
            }
        }
    }

    /// Threshold pivot search over fully summed indices: a 1×1 pivot must
    /// be at least `u` times its largest off-diagonal entry, and a 2×2 pivot
    /// with the column maximum must keep the multipliers below `1/u`.
    /// Indices that pass neither test are delayed.
    fn choose_pivot(&self, front: &Front, next_in: usize, memo: &mut Memo) -> Option<Pick> {
        let u = PIVOT_THRESHOLD;
        let summed = |k: usize| self.last[front.glob[k]] < next_in;
        let mut candidates: Vec<usize> = (0..front.len()).filter(|&k| summed(k)).collect();
        candidates.sort_by_key(|&k| front.glob[k]);
        for k in candidates {
            let g = front.glob[k];
            if memo.failed[g] != 0 {
                let p = memo.partner[g];
                let partner_changed = p != usize::MAX
                    && (memo.touched[p] >= memo.failed[g] || (!memo.partner_summed[g] && self.last[p] < next_in));
                if memo.touched[g] < memo.failed[g] && !partner_changed {
                    continue;
                }
            }
            memo.failed[g] = memo.clock;
            let (lambda, r) = front.col_max(k, usize::MAX);
            memo.partner[g] = if r == usize::MAX { usize::MAX } else { front.glob[r] };
            memo.partner_summed[g] = r != usize::MAX && summed(r);
            let akk = front.at(k, k);
            if lambda == 0.0 || akk.abs() >= u * lambda {
                return Some(Pick::One(k));
            }
            if !summed(r) {
                continue;
            }
            let (akr, arr) = (front.at(r, k), front.at(r, r));
            let det = akk * arr - akr * akr;
            if det == 0.0 {
                continue;
            }
            let (gk, _) = front.col_max(k, r);
            let (gr, _) = front.col_max(r, k);
            let bound_k = (arr.abs() * gk + akr.abs() * gr) / det.abs();
            let bound_r = (akr.abs() * gk + akk.abs() * gr) / det.abs();
            if bound_k.max(bound_r) * u <= 1.0 {
                return Some(Pick::Two(k, r));
            }
        }
        if next_in < self.n {
            return None;
        }
        // everything assembled: plain Bunch–Kaufman always finds a pivot
        let k = (0..front.len()).min_by_key(|&k| front.glob[k])?;
        let (lambda, r) = front.col_max(k, usize::MAX);
        let akk = front.at(k, k).abs();
        if lambda == 0.0 || akk >= BK_ALPHA * lambda {
            return Some(Pick::One(k));
        }
        let (sigma, _) = front.col_max(r, usize::MAX);
        if akk * sigma >= BK_ALPHA * lambda * lambda {
            Some(Pick::One(k))
        } else if front.at(r, r).abs() >= BK_ALPHA * sigma {
            Some(Pick::One(r))
        } else {
            Some(Pick::Two(k, r))
        }
    }

    fn eliminate(&mut self, front: &mut Front, pick: Pick, row_max: &[f64], inertia: &mut Inertia, memo: &mut Memo) {
        let f = front.len();
        let start = self.l_idx.len();
        let vstart = self.l_val.len();
        match pick {
            Pick::One(k) => {
                let d = front.at(k, k);
                let g = front.glob[k];
                let inv = if !d.is_finite() || d.abs() <= ZERO_PIVOT_REL * row_max[g] {
                    inertia.zero += 1;
                    0.0
                } else {
                    if d > 0.0 {
                        inertia.positive += 1;
                    } else {
                        inertia.negative += 1;
                    }
                    1.0 / d
                };
                let others: Vec<usize> = (0..f).filter(|&i| i != k && front.at(i, k) != 0.0).collect();
                for &i in &others {
                    memo.touched[front.glob[i]] = memo.clock;
                }
                let l: Vec<f64> = others.iter().map(|&i| front.at(i, k) * inv).collect();
                for (a, &i) in others.iter().enumerate() {
                    let li = l[a];
                    for &j in &others {
                        let v = li * front.at(k, j);
                        *front.at_mut(i, j) -= v;
                    }
                }
                for (a, &i) in others.iter().enumerate() {
                    self.l_idx.push(front.glob[i]);
                    self.l_val.push(l[a]);
                }
                self.steps.push(Step {
                    block: Block::One { p: g, inv },
                    start,
                    end: self.l_idx.len(),
                    vstart,
                });
                front.remove(k);
            }
            Pick::Two(k, r) => {
                let (a11, a21, a22) = (front.at(k, k), front.at(r, k), front.at(r, r));
                let det = a11 * a22 - a21 * a21;
                let scale = row_max[front.glob[k]].max(row_max[front.glob[r]]);
                let inv = if !det.is_finite() || det.abs() <= ZERO_PIVOT_REL * scale * scale {
                    inertia.zero += 2;
                    [0.0; 3]
                } else {
                    if det < 0.0 {
                        inertia.positive += 1;
                        inertia.negative += 1;
                    } else if a11 + a22 > 0.0 {
                        inertia.positive += 2;
                    } else {
                        inertia.negative += 2;
                    }
                    [a22 / det, -a21 / det, a11 / det]
                };
                let others: Vec<usize> = (0..f)
                    .filter(|&i| i != k && i != r && (front.at(i, k) != 0.0 || front.at(i, r) != 0.0))
                    .collect();
                for &i in &others {
                    memo.touched[front.glob[i]] = memo.clock;
                }
                let l: Vec<[f64; 2]> = others
                    .iter()
                    .map(|&i| {
                        let (x, y) = (front.at(i, k), front.at(i, r));
                        [x * inv[0] + y * inv[1], x * inv[1] + y * inv[2]]
                    })
                    .collect();
                for (a, &i) in others.iter().enumerate() {
                    let [lk, lr] = l[a];
                    for &j in &others {
                        let v = lk * front.at(k, j) + lr * front.at(r, j);
                        *front.at_mut(i, j) -= v;
                    }
                }
                for (a, &i) in others.iter().enumerate() {
                    self.l_idx.push(front.glob[i]);
                    self.l_val.extend_from_slice(&l[a]);
                }
                self.steps.push(Step {
                    block: Block::Two {
                        p: front.glob[k],
                        q: front.glob[r],
                        inv,
                    },
                    start,
                    end: self.l_idx.len(),
                    vstart,
                });
                // remove the higher local index first so the other stays valid
                let (hi, lo) = if k > r { (k, r) } else { (r, k) };
                front.remove(hi);
                front.remove(lo);
            }
        }
    }

    /// Solve `A x = b` in place (original indexing) with the last factorization.
    pub fn solve(&self, b: &mut [f64]) {
        let mut x: Vec<f64> = self.perm.iter().map(|&o| b[o]).collect();
        for st in &self.steps {
            match st.block {
                Block::One { p, .. } => {
                    let xp = x[p];
                    for (e, &i) in self.l_idx[st.start..st.end].iter().enumerate() {
                        x[i] -= self.l_val[st.vstart + e] * xp;
                    }
                }
                Block::Two { p, q, .. } => {
                    let (xp, xq) = (x[p], x[q]);
                    for (e, &i) in self.l_idx[st.start..st.end].iter().enumerate() {
                        let v = st.vstart + 2 * e;
                        x[i] -= self.l_val[v] * xp + self.l_val[v + 1] * xq;
                    }
                }
            }
        }
        for st in &self.steps {
            match st.block {
                Block::One { p, inv } => x[p] *= inv,
                Block::Two { p, q, inv } => {
                    let (xp, xq) = (x[p], x[q]);
                    x[p] = inv[0] * xp + inv[1] * xq;
                    x[q] = inv[1] * xp + inv[2] * xq;
                }
            }
        }
        for st in self.steps.iter().rev() {
            match st.block {
                Block::One { p, .. } => {
                    let mut acc = 0.0;
                    for (e, &i) in self.l_idx[st.start..st.end].iter().enumerate() {
                        acc += self.l_val[st.vstart + e] * x[i];
                    }
                    x[p] -= acc;
                }
                Block::Two { p, q, .. } => {
                    let (mut ap, mut aq) = (0.0, 0.0);
                    for (e, &i) in self.l_idx[st.start..st.end].iter().enumerate() {
                        let v = st.vstart + 2 * e;
                        ap += self.l_val[v] * x[i];
                        aq += self.l_val[v + 1] * x[i];
                    }
                    x[p] -= ap;
                    x[q] -= aq;
                }
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old] = x[new];
        }
    }
}

/// Pivot candidates that failed and have not changed since.
struct Memo {
    clock: u64,
    /// clock of the last update to each column
    touched: Vec<u64>,
    /// clock at which each candidate last failed, 0 if never
    failed: Vec<u64>,
    /// column maximum at that failure, and whether it was fully summed
    partner: Vec<usize>,
    partner_summed: Vec<bool>,
}

#[derive(Clone, Copy, Debug)]
enum Pick {
    One(usize),
    Two(usize, usize),
}

/// Reverse Cuthill–McKee ordering of an undirected graph given as
/// adjacency lists. Returns `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (degree[v], v));

    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(adj, &degree, seed);
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], root: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[root] = 0;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    level
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], seed: usize) -> usize {
    let mut root = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, root);
        let far = level.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
        if far <= ecc && ecc > 0 {
            break;
        }
        ecc = far;
        let candidate = (0..adj.len())
            .filter(|&v| level[v] == far)
            .min_by_key(|&v| (degree[v], v))
            .unwrap_or(root);
        if candidate == root {
            break;
        }
        root = candidate;
    }
    root
}

/// Ordering for a KKT matrix with `nx` primal unknowns followed by one
/// unknown per constraint row: reverse Cuthill–McKee on the graph of the
/// whole matrix. `hess` holds primal couplings, `rows[r]` the primal columns
/// of constraint `r`. Returns `perm[new] = old`.
pub fn kkt_ordering(nx: usize, hess: &[(usize, usize)], rows: &[Vec<usize>]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nx + rows.len()];
    for &(i, j) in hess {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for (r, cols) in rows.iter().enumerate() {
        for &c in cols {
            adj[nx + r].push(c);
            adj[c].push(nx + r);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    reverse_cuthill_mckee(&adj)
}
