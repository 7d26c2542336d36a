//! Regression trees with three growth strategies.
//!
//! * depthwise: exact greedy splits on presorted feature columns, grown
//!   depth-first to `max_depth`;
//! * leafwise: histogram-binned features, always expanding the leaf with the
//!   largest gain until `max_leaves`;
//! * oblivious: one (feature, threshold) condition shared by every node of a
//!   level, giving a balanced tree.
//!
//! Every split maximizes the reduction of weighted squared error. Rows go left
//! when `x[feature] <= threshold`.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthMode {
    Depthwise,
    Leafwise,
    Oblivious,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        /// Weighted squared-error reduction achieved by this split.
        gain: f64,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub mode: GrowthMode,
    /// Root first.
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf(mode: GrowthMode, value: f64) -> Self {
        Self {
            mode,
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn predict_row(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => at = if x[(row, feature)] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows()).map(|i| self.predict_row(x, i)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.level_conditions().len()
    }

    /// Distinct `(feature, threshold)` conditions used at each depth.
    pub fn level_conditions(&self) -> Vec<Vec<(usize, f64)>> {
        let mut levels: Vec<Vec<(usize, f64)>> = Vec::new();
        let mut frontier = vec![0];
        while !frontier.is_empty() {
            let mut here: Vec<(usize, f64)> = Vec::new();
            let mut next = Vec::new();
            for &i in &frontier {
                if let Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } = self.nodes[i]
                {
                    if !here.iter().any(|&(f, t)| f == feature && t.to_bits() == threshold.to_bits()) {
                        here.push((feature, threshold));
                    }
                    next.extend([left, right]);
                }
            }
            if here.is_empty() {
                break;
            }
            levels.push(here);
            frontier = next;
        }
        levels
    }

    /// Adds each split's gain to its feature's slot.
    pub fn accumulate_gain(&self, out: &mut [f64]) {
        for n in &self.nodes {
            if let Node::Split { feature, gain, .. } = *n {
                out[feature] += gain;
            }
        }
    }

    pub(crate) fn scale_leaves(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Node::Leaf { value } = n {
                *value *= factor;
            }
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.nodes.iter().all(|n| matches!(n, Node::Leaf { value } if *value == 0.0))
    }
}

/// Growth controls; fields irrelevant to the chosen mode are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub mode: GrowthMode,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    /// Fraction of features examined at each node (depthwise only).
    pub max_features: f64,
    /// Draw one uniform threshold per feature instead of scanning all (depthwise only).
    pub random_splits: bool,
    pub max_leaves: usize,
    pub max_bins: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            mode: GrowthMode::Depthwise,
            max_depth: 3,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: 1.0,
            random_splits: false,
            max_leaves: 31,
            max_bins: 255,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub gain: f64,
}

/// Splits whose gain does not clear this fraction of `Σ w·g²` are rounding noise.
const MIN_RELATIVE_GAIN: f64 = 1e-10;

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) * 0.5;
    if m < b {
        m
    } else {
        a
    }
}

/// Reduction of weighted squared error when `(W, S)` splits into `(wl, sl)` and the rest.
fn gain(w: f64, s: f64, wl: f64, sl: f64) -> f64 {
    let (wr, sr) = (w - wl, s - sl);
    sl * sl / wl + sr * sr / wr - s * s / w
}

/// Per-fit preprocessing shared by all trees of an ensemble.
pub(crate) enum Prepared {
    /// Row indices sorted by value for each feature (ties by row index).
    Sorted(Vec<Vec<u32>>),
    Binned(Binned),
}

impl Prepared {
    pub fn new(x: &DMatrix<f64>, params: &TreeParams) -> Self {
        match params.mode {
            GrowthMode::Depthwise => Prepared::Sorted(presort(x)),
            GrowthMode::Leafwise | GrowthMode::Oblivious => Prepared::Binned(Binned::new(x, params.max_bins)),
        }
    }
}

fn presort(x: &DMatrix<f64>) -> Vec<Vec<u32>> {
    (0..x.ncols())
        .map(|f| {
            let col = x.column(f);
            let mut idx: Vec<u32> = (0..x.nrows() as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
            idx
        })
        .collect()
}

pub(crate) struct Binned {
    /// Per feature, per row: bin code. A row is in bin `b` iff exactly `b` cuts lie below its value.
    codes: Vec<Vec<u16>>,
    /// Per feature: increasing cut points; splitting after bin `b` uses threshold `cuts[b]`.
    cuts: Vec<Vec<f64>>,
}

impl Binned {
    fn new(x: &DMatrix<f64>, max_bins: usize) -> Self {
        let n = x.nrows();
        let max_bins = max_bins.clamp(2, u16::MAX as usize);
        let mut codes = Vec::with_capacity(x.ncols());
        let mut all_cuts = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mut sorted: Vec<f64> = col.iter().copied().collect();
            sorted.sort_by(f64::total_cmp);
            let mut distinct: Vec<(f64, usize)> = Vec::new();
            for v in sorted {
                match distinct.last_mut() {
                    Some((d, c)) if *d == v => *c += 1,
                    _ => distinct.push((v, 1)),
                }
            }
            let mut cuts = Vec::new();
            if distinct.len() <= max_bins {
                cuts.extend(distinct.windows(2).map(|w| midpoint(w[0].0, w[1].0)));
            } else {
                // Greedy equal-frequency boundaries between distinct values.
                let per_bin = n as f64 / max_bins as f64;
                let mut seen = 0usize;
                for w in distinct.windows(2) {
                    seen += w[0].1;
                    if cuts.len() + 1 >= max_bins {
                        break;
                    }
                    if seen as f64 >= per_bin * (cuts.len() + 1) as f64 {
                        cuts.push(midpoint(w[0].0, w[1].0));
                    }
                }
            }
            codes.push(col.iter().map(|&v| cuts.partition_point(|&c| c < v) as u16).collect());
            all_cuts.push(cuts);
        }
        Self { codes, cuts: all_cuts }
    }

    fn n_bins(&self, f: usize) -> usize {
        self.cuts[f].len() + 1
    }
}

/// Fits one tree to targets `g` with non-negative row weights `w`; rows with zero weight are ignored.
pub(crate) fn grow(
    params: &TreeParams,
    x: &DMatrix<f64>,
    prep: &Prepared,
    g: &[f64],
    w: &[f64],
    rng: &mut ChaCha8Rng,
) -> Tree {
    let rows: Vec<u32> = (0..x.nrows() as u32).filter(|&r| w[r as usize] > 0.0).collect();
    let (wsum, ssum) = rows
        .iter()
        .fold((0.0, 0.0), |(a, b), &r| (a + w[r as usize], b + w[r as usize] * g[r as usize]));
    if rows.is_empty() || x.ncols() == 0 {
        let value = if wsum > 0.0 { ssum / wsum } else { 0.0 };
        return Tree::leaf(params.mode, value);
    }
    match (params.mode, prep) {
        (GrowthMode::Depthwise, Prepared::Sorted(sorted)) => {
            let lists: Vec<Vec<u32>> = sorted
                .iter()
                .map(|l| l.iter().copied().filter(|&r| w[r as usize] > 0.0).collect())
                .collect();
            let mut b = Depthwise {
                x,
                g,
                w,
                params,
                rng,
                nodes: Vec::new(),
                goes_left: vec![false; x.nrows()],
            };
            b.node(lists, 0);
            Tree {
                mode: GrowthMode::Depthwise,
                nodes: b.nodes,
            }
        }
        (GrowthMode::Leafwise, Prepared::Binned(binned)) => leafwise(params, binned, g, w, rows),
        (GrowthMode::Oblivious, Prepared::Binned(binned)) => oblivious(params, binned, g, w, &rows),
        _ => unreachable!("preprocessing does not match growth mode"),
    }
}

struct Depthwise<'a> {
    x: &'a DMatrix<f64>,
    g: &'a [f64],
    w: &'a [f64],
    params: &'a TreeParams,
    rng: &'a mut ChaCha8Rng,
    nodes: Vec<Node>,
    goes_left: Vec<bool>,
}

impl Depthwise<'_> {
    fn node(&mut self, lists: Vec<Vec<u32>>, depth: usize) -> usize {
        let (w, g) = (self.w, self.g);
        let rows = &lists[0];
        let (mut wsum, mut ssum, mut sq) = (0.0, 0.0, 0.0);
        for &r in rows {
            let r = r as usize;
            wsum += w[r];
            ssum += w[r] * g[r];
            sq += w[r] * g[r] * g[r];
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { value: ssum / wsum });

        let n = rows.len();
        let p = self.params;
        if depth >= p.max_depth || n < p.min_samples_split || n < 2 * p.min_samples_leaf {
            return idx;
        }
        let features = self.candidate_features();
        let best = if p.random_splits {
            self.random_split(&lists, &features, wsum, ssum)
        } else {
            best_sorted_split(self.x, g, w, &lists, &features, p.min_samples_leaf, wsum, ssum)
        };
        let Some(split) = best.filter(|s| s.gain > MIN_RELATIVE_GAIN * sq) else {
            return idx;
        };

        let mut n_left = 0;
        for &r in rows {
            let left = self.x[(r as usize, split.feature)] <= split.threshold;
            self.goes_left[r as usize] = left;
            n_left += left as usize;
        }
        // A child that cannot split only needs its row set.
        let terminal = |m: usize| depth + 1 >= p.max_depth || m < p.min_samples_split || m < 2 * p.min_samples_leaf;
        let (keep_left, keep_right) = (!terminal(n_left), !terminal(n - n_left));
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for (f, list) in lists.into_iter().enumerate() {
            if f > 0 && !keep_left && !keep_right {
                break;
            }
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| self.goes_left[r as usize]);
            if f == 0 || keep_left {
                left_lists.push(l);
            }
            if f == 0 || keep_right {
                right_lists.push(r);
            }
        }
        let left = self.node(left_lists, depth + 1);
        let right = self.node(right_lists, depth + 1);
        self.nodes[idx] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
            gain: split.gain,
        };
        idx
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.ncols();
        let m = ((self.params.max_features * p as f64).ceil() as usize).clamp(1, p);
        if m == p {
            return (0..p).collect();
        }
        let mut chosen = index::sample(self.rng, p, m).into_vec();
        chosen.sort_unstable();
        chosen
    }

    fn random_split(&mut self, lists: &[Vec<u32>], features: &[usize], wsum: f64, ssum: f64) -> Option<Split> {
        let (x, w, g) = (self.x, self.w, self.g);
        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<Split> = None;
        for &f in features {
            let list = &lists[f];
            let lo = x[(list[0] as usize, f)];
            let hi = x[(*list.last().expect("non-empty node") as usize, f)];
            if lo >= hi {
                continue;
            }
            let t = self.rng.random_range(lo..hi);
            let n_left = list.partition_point(|&r| x[(r as usize, f)] <= t);
            if n_left < min_leaf || list.len() - n_left < min_leaf {
                continue;
            }
            let (wl, sl) = list[..n_left]
                .iter()
                .fold((0.0, 0.0), |(a, b), &r| (a + w[r as usize], b + w[r as usize] * g[r as usize]));
            let gn = gain(wsum, ssum, wl, sl);
            if gn > best.map_or(0.0, |s| s.gain) {
                best = Some(Split {
                    feature: f,
                    threshold: t,
                    gain: gn,
                });
            }
        }
        best
    }
}

/// Exhaustive scan over presorted lists. Lowest feature, then lowest threshold, wins ties.
#[allow(clippy::too_many_arguments)]
fn best_sorted_split(
    x: &DMatrix<f64>,
    g: &[f64],
    w: &[f64],
    lists: &[Vec<u32>],
    features: &[usize],
    min_leaf: usize,
    wsum: f64,
    ssum: f64,
) -> Option<Split> {
    let mut best: Option<Split> = None;
    for &f in features {
        let list = &lists[f];
        let n = list.len();
        let (mut wl, mut sl) = (0.0, 0.0);
        for i in 0..n.saturating_sub(1) {
            let r = list[i] as usize;
            wl += w[r];
            sl += w[r] * g[r];
            let n_left = i + 1;
            if n_left < min_leaf {
                continue;
            }
            if n - n_left < min_leaf {
                break;
            }
            let a = x[(r, f)];
            let b = x[(list[i + 1] as usize, f)];
            if a == b {
                continue;
            }
            let gn = gain(wsum, ssum, wl, sl);
            if gn > best.map_or(0.0, |s| s.gain) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(a, b),
                    gain: gn,
                });
            }
        }
    }
    best
}

/// Best variance-reducing split of `rows` over all features, or `None` when no
/// admissible split improves the fit.
pub fn cart_best_split(x: &DMatrix<f64>, y: &[f64], rows: &[usize], min_samples_leaf: usize) -> Option<Split> {
    let min_leaf = min_samples_leaf.max(1);
    if rows.len() < 2 * min_leaf {
        return None;
    }
    let w = vec![1.0; x.nrows()];
    let lists: Vec<Vec<u32>> = (0..x.ncols())
        .map(|f| {
            let mut l: Vec<u32> = rows.iter().map(|&r| r as u32).collect();
            l.sort_by(|&a, &b| x[(a as usize, f)].total_cmp(&x[(b as usize, f)]).then(a.cmp(&b)));
            l
        })
        .collect();
    let ssum: f64 = rows.iter().map(|&r| y[r]).sum();
    let sq: f64 = rows.iter().map(|&r| y[r] * y[r]).sum();
    let features: Vec<usize> = (0..x.ncols()).collect();
    best_sorted_split(x, y, &w, &lists, &features, min_leaf, rows.len() as f64, ssum)
        .filter(|s| s.gain > MIN_RELATIVE_GAIN * sq)
}

struct HistSplit {
    feature: usize,
    bin: usize,
    gain: f64,
}

/// Best bin boundary for one node from per-feature histograms.
fn best_hist_split(binned: &Binned, g: &[f64], w: &[f64], rows: &[u32], min_leaf: usize) -> Option<HistSplit> {
    let (mut wsum, mut ssum) = (0.0, 0.0);
    for &r in rows {
        wsum += w[r as usize];
        ssum += w[r as usize] * g[r as usize];
    }
    let mut best: Option<HistSplit> = None;
    let mut hist: Vec<(f64, f64, usize)> = Vec::new();
    for f in 0..binned.codes.len() {
        let nb = binned.n_bins(f);
        if nb < 2 {
            continue;
        }
        hist.clear();
        hist.resize(nb, (0.0, 0.0, 0));
        let codes = &binned.codes[f];
        for &r in rows {
            let r = r as usize;
            let h = &mut hist[codes[r] as usize];
            h.0 += w[r];
            h.1 += w[r] * g[r];
            h.2 += 1;
        }
        let (mut wl, mut sl, mut nl) = (0.0, 0.0, 0);
        for (b, h) in hist[..nb - 1].iter().enumerate() {
            wl += h.0;
            sl += h.1;
            nl += h.2;
            if h.2 == 0 || nl < min_leaf {
                continue;
            }
            if rows.len() - nl < min_leaf {
                break;
            }
            let gn = gain(wsum, ssum, wl, sl);
            if gn > best.as_ref().map_or(0.0, |s| s.gain) {
                best = Some(HistSplit { feature: f, bin: b, gain: gn });
            }
        }
    }
    best
}

fn leafwise(params: &TreeParams, binned: &Binned, g: &[f64], w: &[f64], rows: Vec<u32>) -> Tree {
    struct Open {
        node: usize,
        depth: usize,
        rows: Vec<u32>,
        split: Option<HistSplit>,
    }
    let stats = |rows: &[u32]| {
        rows.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &r| {
            let (wr, gr) = (w[r as usize], g[r as usize]);
            (a + wr, b + wr * gr, c + wr * gr * gr)
        })
    };
    let min_leaf = params.min_samples_leaf.max(1);
    let admissible = |rows: &[u32], depth: usize| {
        let (_, _, sq) = stats(rows);
        if depth >= params.max_depth || rows.len() < 2 * min_leaf || rows.len() < params.min_samples_split {
            return None;
        }
        best_hist_split(binned, g, w, rows, min_leaf).filter(|s| s.gain > MIN_RELATIVE_GAIN * sq)
    };

    let (w0, s0, _) = stats(&rows);
    let mut nodes = vec![Node::Leaf { value: s0 / w0 }];
    let split = admissible(&rows, 0);
    let mut open = vec![Open {
        node: 0,
        depth: 0,
        rows,
        split,
    }];
    let mut n_leaves = 1;
    while n_leaves < params.max_leaves {
        let mut pick: Option<usize> = None;
        for (i, o) in open.iter().enumerate() {
            if let Some(s) = &o.split {
                if pick.is_none_or(|p| s.gain > open[p].split.as_ref().expect("picked").gain) {
                    pick = Some(i);
                }
            }
        }
        let Some(i) = pick else { break };
        let leaf = open.swap_remove(i);
        let s = leaf.split.expect("picked leaf has a split");
        let codes = &binned.codes[s.feature];
        let (lrows, rrows): (Vec<u32>, Vec<u32>) = leaf.rows.into_iter().partition(|&r| codes[r as usize] as usize <= s.bin);
        let mut child = |rows: Vec<u32>| {
            let (wc, sc, _) = stats(&rows);
            let idx = nodes.len();
            nodes.push(Node::Leaf { value: sc / wc });
            let split = admissible(&rows, leaf.depth + 1);
            open.push(Open {
                node: idx,
                depth: leaf.depth + 1,
                rows,
                split,
            });
            idx
        };
        let left = child(lrows);
        let right = child(rrows);
        nodes[leaf.node] = Node::Split {
            feature: s.feature,
            threshold: binned.cuts[s.feature][s.bin],
            left,
            right,
            gain: s.gain,
        };
        n_leaves += 1;
        // Keep candidates in creation order so gain ties resolve to the oldest leaf.
        open.sort_by_key(|o| o.node);
    }
    Tree {
        mode: GrowthMode::Leafwise,
        nodes,
    }
}

fn oblivious(params: &TreeParams, binned: &Binned, g: &[f64], w: &[f64], rows: &[u32]) -> Tree {
    let n_rows = g.len();
    let mut code = vec![0usize; n_rows];
    let sq_total: f64 = rows.iter().map(|&r| w[r as usize] * g[r as usize] * g[r as usize]).sum();
    let mut conditions: Vec<(usize, usize, Vec<f64>)> = Vec::new();

    for level in 0..params.max_depth {
        let groups = 1usize << level;
        if groups > n_rows.max(1) * 2 {
            break;
        }
        // (feature, bin, total gain, per-group gains)
        let mut best: Option<(usize, usize, f64, Vec<f64>)> = None;
        let mut group_tot = vec![(0.0, 0.0); groups];
        for &r in rows {
            let t = &mut group_tot[code[r as usize]];
            t.0 += w[r as usize];
            t.1 += w[r as usize] * g[r as usize];
        }
        for f in 0..binned.codes.len() {
            let nb = binned.n_bins(f);
            if nb < 2 {
                continue;
            }
            let mut hist = vec![(0.0, 0.0); groups * nb];
            let codes = &binned.codes[f];
            for &r in rows {
                let r = r as usize;
                let h = &mut hist[code[r] * nb + codes[r] as usize];
                h.0 += w[r];
                h.1 += w[r] * g[r];
            }
            let mut left = vec![(0.0, 0.0); groups];
            for b in 0..nb - 1 {
                let mut total = 0.0;
                for (grp, acc) in left.iter_mut().enumerate() {
                    let h = hist[grp * nb + b];
                    acc.0 += h.0;
                    acc.1 += h.1;
                    let (wt, st) = group_tot[grp];
                    if acc.0 > 0.0 && wt - acc.0 > 0.0 {
                        total += gain(wt, st, acc.0, acc.1);
                    }
                }
                if total > best.as_ref().map_or(0.0, |s| s.2) {
                    let per_group = (0..groups)
                        .map(|grp| {
                            let (wt, st) = group_tot[grp];
                            let (wl, sl) = (0..=b).fold((0.0, 0.0), |(a, c), k| {
                                let h = hist[grp * nb + k];
                                (a + h.0, c + h.1)
                            });
                            if wl > 0.0 && wt - wl > 0.0 {
                                gain(wt, st, wl, sl)
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    best = Some((f, b, total, per_group));
                }
            }
        }
        let Some((f, b, total, per_group)) = best else { break };
        if total <= MIN_RELATIVE_GAIN * sq_total {
            break;
        }
        for &r in rows {
            let r = r as usize;
            code[r] = code[r] * 2 + usize::from(binned.codes[f][r] as usize > b);
        }
        conditions.push((f, b, per_group));
    }

    // Group means per level; empty groups inherit their parent's value.
    let depth = conditions.len();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(depth + 1);
    for level in 0..=depth {
        let groups = 1usize << level;
        let mut acc = vec![(0.0, 0.0); groups];
        for &r in rows {
            let r = r as usize;
            let grp = code[r] >> (depth - level);
            acc[grp].0 += w[r];
            acc[grp].1 += w[r] * g[r];
        }
        let vals = (0..groups)
            .map(|grp| {
                if acc[grp].0 > 0.0 {
                    acc[grp].1 / acc[grp].0
                } else {
                    values[level - 1][grp >> 1]
                }
            })
            .collect();
        values.push(vals);
    }

    let mut nodes = Vec::new();
    fn build(
        level: usize,
        grp: usize,
        conditions: &[(usize, usize, Vec<f64>)],
        cuts: &[Vec<f64>],
        values: &[Vec<f64>],
        nodes: &mut Vec<Node>,
    ) -> usize {
        let idx = nodes.len();
        nodes.push(Node::Leaf {
            value: values[level][grp],
        });
        if level < conditions.len() {
            let (f, b, ref per_group) = conditions[level];
            let left = build(level + 1, grp * 2, conditions, cuts, values, nodes);
            let right = build(level + 1, grp * 2 + 1, conditions, cuts, values, nodes);
            nodes[idx] = Node::Split {
                feature: f,
                threshold: cuts[f][b],
                left,
                right,
                gain: per_group[grp],
            };
        }
        idx
    }
    build(0, 0, &conditions, &binned.cuts, &values, &mut nodes);
    Tree {
        mode: GrowthMode::Oblivious,
        nodes,
    }
}
