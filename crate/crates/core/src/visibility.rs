//! Natural (VG) and horizontal (HVG) visibility graphs, directed along the
//! time arrow, and their in/out degree statistics.
//!
//! Node `t` is datum `x[t]`. In the VG, `i < j` are linked when every
//! intermediate datum lies strictly below the straight line joining
//! `(i, x[i])` and `(j, x[j])`. In the HVG every intermediate datum must be
//! strictly below `min(x[i], x[j])`. Each link points from the earlier node
//! to the later one.
//!
//! The VG line test is evaluated exactly: a floating-point filter decides
//! the clear cases and anything within rounding distance of collinear is
//! re-evaluated in rational arithmetic. The naive and divide-and-conquer
//! builders therefore return identical edge sets even though they anchor
//! their scans at different endpoints.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    Vg,
    Hvg,
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GraphKind::Vg => "vg",
            GraphKind::Hvg => "hvg",
        })
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vg" => Ok(GraphKind::Vg),
            "hvg" => Ok(GraphKind::Hvg),
            other => Err(Error::Config(format!("unknown graph kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VgAlgorithm {
    /// O(n^2) pairwise scan, used as the reference.
    Naive,
    #[default]
    DivideAndConquer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HvgAlgorithm {
    Naive,
    #[default]
    Stack,
}

/// Directed visibility graph stored as per-node sorted successor lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectedVisibilityGraph {
    kind: GraphKind,
    successors: Vec<Vec<u32>>,
}

impl DirectedVisibilityGraph {
    fn from_lists(kind: GraphKind, mut successors: Vec<Vec<u32>>) -> Self {
        for list in &mut successors {
            list.sort_unstable();
        }
        Self { kind, successors }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn n_nodes(&self) -> usize {
        self.successors.len()
    }

    pub fn n_edges(&self) -> usize {
        self.successors.iter().map(Vec::len).sum()
    }

    /// Later neighbours of node `i`, ascending.
    pub fn successors(&self, i: usize) -> &[u32] {
        &self.successors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < j && i < self.successors.len() && self.successors[i].binary_search(&(j as u32)).is_ok()
    }

    /// All edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.successors
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j as usize)))
    }

    /// Edge list as `source,target` CSV.
    pub fn to_edge_csv(&self) -> String {
        let mut out = String::from("source,target\n");
        for (i, j) in self.edges() {
            out.push_str(&format!("{i},{j}\n"));
        }
        out
    }
}

/// `k_in[t]`: links arriving from the past; `k_out[t]`: links leaving to
/// the future.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSequences {
    pub k_in: Vec<usize>,
    pub k_out: Vec<usize>,
}

impl DegreeSequences {
    /// Undirected degree `k_in + k_out` per node.
    pub fn total(&self) -> Vec<usize> {
        self.k_in
            .iter()
            .zip(&self.k_out)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// Empirical probability mass over observed degree values.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeDistribution {
    support: Vec<usize>,
    mass: Vec<f64>,
}

impl DegreeDistribution {
    /// Builds a distribution from `(degree, probability)` pairs. Degrees may
    /// come in any order but must be distinct; masses must be non-negative
    /// and sum to 1 within 1e-12.
    pub fn from_pairs(mut pairs: Vec<(usize, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Size("empty distribution".into()));
        }
        pairs.sort_by_key(|p| p.0);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain("duplicate degree in distribution".into()));
        }
        if pairs.iter().any(|p| !(p.1.is_finite() && p.1 >= 0.0)) {
            return Err(Error::Domain("masses must be finite and >= 0".into()));
        }
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("masses sum to {total}, not 1")));
        }
        let (support, mass) = pairs.into_iter().unzip();
        Ok(Self { support, mass })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Probability of degree `k`, zero when unobserved.
    pub fn get(&self, k: usize) -> f64 {
        self.support
            .binary_search(&k)
            .map_or(0.0, |idx| self.mass[idx])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }
}

/// Relative frequencies of the values in `seq`.
pub fn degree_distribution(seq: &[usize]) -> Result<DegreeDistribution> {
    if seq.is_empty() {
        return Err(Error::Size("degree sequence is empty".into()));
    }
    let mut sorted = seq.to_vec();
    sorted.sort_unstable();
    let n = seq.len() as f64;
    let mut support = Vec::new();
    let mut mass = Vec::new();
    for chunk in sorted.chunk_by(|a, b| a == b) {
        support.push(chunk[0]);
        mass.push(chunk.len() as f64 / n);
    }
    Ok(DegreeDistribution { support, mass })
}

pub fn degree_sequences(g: &DirectedVisibilityGraph) -> DegreeSequences {
    let n = g.n_nodes();
    let mut k_in = vec![0usize; n];
    let mut k_out = vec![0usize; n];
    for (i, list) in g.successors.iter().enumerate() {
        k_out[i] = list.len();
        for &j in list {
            k_in[j as usize] += 1;
        }
    }
    DegreeSequences { k_in, k_out }
}

fn check_len(x: &[f64]) -> Result<()> {
    if x.len() < 2 {
        return Err(Error::Size(format!(
            "visibility graph needs at least 2 points, got {}",
            x.len()
        )));
    }
    if x.len() > u32::MAX as usize {
        return Err(Error::Size("series too long for u32 node ids".into()));
    }
    Ok(())
}

/// Sign of `(j - i) * (x[k] - x[i]) - (k - i) * (x[j] - x[i])` for
/// `i < k < j`. Negative means `x[k]` lies strictly below the segment
/// joining `i` and `j`.
fn orientation(x: &[f64], i: usize, k: usize, j: usize) -> Ordering {
    let dj = (j - i) as f64;
    let dk = (k - i) as f64;
    let a = dj * (x[k] - x[i]);
    let b = dk * (x[j] - x[i]);
    let det = a - b;
    // Each operand carries at most two roundings, the difference one more.
    let bound = 4.0 * f64::EPSILON * (a.abs() + b.abs());
    if det.is_finite() && bound.is_finite() && det.abs() > bound {
        return if det < 0.0 {
            Ordering::Less
        } else {
            Ordering::Greater
        };
    }
    exact_orientation(x, i, k, j)
}

#[cold]
fn exact_orientation(x: &[f64], i: usize, k: usize, j: usize) -> Ordering {
    let r = |v: f64| BigRational::from_f64(v).expect("finite value");
    let int = |v: usize| BigRational::from_integer(BigInt::from(v));
    let (xi, xk, xj) = (r(x[i]), r(x[k]), r(x[j]));
    let det = int(j - i) * (xk - &xi) - int(k - i) * (xj - xi);
    if det.is_zero() {
        Ordering::Equal
    } else if det.is_negative() {
        Ordering::Less
    } else {
        Ordering::Greater
    }
}

#[inline]
fn strictly_below(x: &[f64], i: usize, k: usize, j: usize) -> bool {
    orientation(x, i, k, j) == Ordering::Less
}

/// Links from `anchor` to every later node in `(anchor, hi]` it sees.
/// `blocker` is the intermediate point with the steepest slope from the
/// anchor; a new node is visible iff the blocker is strictly below the
/// anchor-node segment.
fn scan_forward(x: &[f64], anchor: usize, hi: usize, out: &mut Vec<u32>) {
    if anchor >= hi {
        return;
    }
    out.push((anchor + 1) as u32);
    let mut blocker = anchor + 1;
    for j in anchor + 2..=hi {
        if strictly_below(x, anchor, blocker, j) {
            out.push(j as u32);
            blocker = j;
        }
    }
}

/// Mirror image of [`scan_forward`]: nodes in `[lo, anchor)` that see
/// `anchor`, found by walking leftwards.
fn scan_backward(x: &[f64], lo: usize, anchor: usize, mut visit: impl FnMut(usize)) {
    if anchor <= lo {
        return;
    }
    visit(anchor - 1);
    let mut blocker = anchor - 1;
    for i in (lo..anchor - 1).rev() {
        if strictly_below(x, i, blocker, anchor) {
            visit(i);
            blocker = i;
        }
    }
}

/// Builds the directed natural visibility graph of `x`.
pub fn vg_build(x: &[f64], algorithm: VgAlgorithm) -> Result<DirectedVisibilityGraph> {
    check_len(x)?;
    if let Some(pos) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("non-finite value at index {pos}")));
    }
    let n = x.len();
    let mut successors = vec![Vec::new(); n];
    match algorithm {
        VgAlgorithm::Naive => {
            for (i, out) in successors.iter_mut().enumerate() {
                scan_forward(x, i, n - 1, out);
            }
        }
        VgAlgorithm::DivideAndConquer => {
            // No edge crosses the maximum of a segment, so each segment only
            // contributes the edges incident to its maximum.
            let mut pending = vec![(0usize, n - 1)];
            while let Some((lo, hi)) = pending.pop() {
                let mut pivot = lo;
                for t in lo + 1..=hi {
                    if x[t] > x[pivot] {
                        pivot = t;
                    }
                }
                let mut right = std::mem::take(&mut successors[pivot]);
                scan_forward(x, pivot, hi, &mut right);
                successors[pivot] = right;
                scan_backward(x, lo, pivot, |i| successors[i].push(pivot as u32));
                if pivot > lo + 1 {
                    pending.push((lo, pivot - 1));
                }
                if pivot + 1 < hi {
                    pending.push((pivot + 1, hi));
                }
            }
        }
    }
    Ok(DirectedVisibilityGraph::from_lists(
        GraphKind::Vg,
        successors,
    ))
}

/// Builds the directed horizontal visibility graph of `x`.
pub fn hvg_build(x: &[f64], algorithm: HvgAlgorithm) -> Result<DirectedVisibilityGraph> {
    check_len(x)?;
    if let Some(pos) = x.iter().position(|v| v.is_nan()) {
        return Err(Error::Domain(format!("NaN at index {pos}")));
    }
    let n = x.len();
    let mut successors = vec![Vec::new(); n];
    match algorithm {
        HvgAlgorithm::Naive => {
            for (i, out) in successors.iter_mut().enumerate() {
                // Running maximum of the intermediate data.
                let mut ceiling = f64::NEG_INFINITY;
                for j in i + 1..n {
                    if ceiling < x[i].min(x[j]) {
                        out.push(j as u32);
                    }
                    ceiling = ceiling.max(x[j]);
                    if ceiling >= x[i] {
                        break;
                    }
                }
            }
        }
        HvgAlgorithm::Stack => {
            // Stack holds the nodes still able to see the future; values
            // along it are non-increasing from bottom to top.
            let mut stack: Vec<usize> = Vec::new();
            for j in 0..n {
                while let Some(&top) = stack.last() {
                    if x[top] < x[j] {
                        successors[top].push(j as u32);
                        stack.pop();
                    } else {
                        break;
                    }
                }
                if let Some(&top) = stack.last() {
                    successors[top].push(j as u32);
                    if x[top] == x[j] {
                        stack.pop();
                    }
                }
                stack.push(j);
            }
        }
    }
    Ok(DirectedVisibilityGraph::from_lists(
        GraphKind::Hvg,
        successors,
    ))
}

/// Builds a graph of `kind` with the fast algorithm for that kind.
pub fn build(x: &[f64], kind: GraphKind) -> Result<DirectedVisibilityGraph> {
    match kind {
        GraphKind::Vg => vg_build(x, VgAlgorithm::DivideAndConquer),
        GraphKind::Hvg => hvg_build(x, HvgAlgorithm::Stack),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    /// Literal transcription of both criteria over all pairs and all
    /// intermediate points.
    fn brute_force(x: &[f64], kind: GraphKind) -> BTreeSet<(usize, usize)> {
        let mut edges = BTreeSet::new();
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let visible = (i + 1..j).all(|k| match kind {
                    // multiplied through by (j - i) > 0 so integer data
                    // stays exact
                    GraphKind::Vg => {
                        (x[k] - x[i]) * ((j - i) as f64) < (x[j] - x[i]) * ((k - i) as f64)
                    }
                    GraphKind::Hvg => x[k] < x[i].min(x[j]),
                });
                if visible {
                    edges.insert((i, j));
                }
            }
        }
        edges
    }

    fn edge_set(g: &DirectedVisibilityGraph) -> BTreeSet<(usize, usize)> {
        g.edges().collect()
    }

    fn set(edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
        edges.iter().copied().collect()
    }

    fn all_vg(x: &[f64]) -> [DirectedVisibilityGraph; 2] {
        [
            vg_build(x, VgAlgorithm::Naive).unwrap(),
            vg_build(x, VgAlgorithm::DivideAndConquer).unwrap(),
        ]
    }

    fn all_hvg(x: &[f64]) -> [DirectedVisibilityGraph; 2] {
        [
            hvg_build(x, HvgAlgorithm::Naive).unwrap(),
            hvg_build(x, HvgAlgorithm::Stack).unwrap(),
        ]
    }

    #[test]
    fn vg_collinear_blocks() {
        for g in all_vg(&[1.0, 2.0, 3.0]) {
            assert_eq!(edge_set(&g), set(&[(0, 1), (1, 2)]));
        }
    }

    #[test]
    fn vg_valley() {
        for g in all_vg(&[2.0, 1.0, 2.0]) {
            assert_eq!(edge_set(&g), set(&[(0, 1), (1, 2), (0, 2)]));
        }
    }

    #[test]
    fn hvg_hand_examples() {
        for g in all_hvg(&[3.0, 1.0, 2.0]) {
            assert_eq!(edge_set(&g), set(&[(0, 1), (1, 2), (0, 2)]));
        }
        for g in all_hvg(&[1.0, 3.0, 2.0, 4.0]) {
            assert_eq!(edge_set(&g), set(&[(0, 1), (1, 2), (2, 3), (1, 3)]));
        }
        for g in all_hvg(&[5.0, 5.0, 5.0]) {
            assert_eq!(edge_set(&g), set(&[(0, 1), (1, 2)]));
        }
        for g in all_hvg(&[2.0, 4.0, 3.0, 1.0, 5.0]) {
            assert_eq!(
                edge_set(&g),
                set(&[(0, 1), (1, 2), (2, 3), (3, 4), (1, 4), (2, 4)])
            );
        }
    }

    #[test]
    fn plateaus_and_equal_peaks() {
        let x = [3.0, 1.0, 3.0, 3.0, 0.0, 3.0, 2.0, 2.0, 2.0, 5.0];
        for g in all_vg(&x) {
            assert_eq!(edge_set(&g), brute_force(&x, GraphKind::Vg));
        }
        for g in all_hvg(&x) {
            assert_eq!(edge_set(&g), brute_force(&x, GraphKind::Hvg));
        }
    }

    #[test]
    fn degree_examples() {
        let g = hvg_build(&[3.0, 1.0, 2.0], HvgAlgorithm::Stack).unwrap();
        let d = degree_sequences(&g);
        assert_eq!(d.k_in, vec![0, 1, 2]);
        assert_eq!(d.k_out, vec![2, 1, 0]);

        let path = vg_build(&[1.0, 2.0, 3.0, 4.0], VgAlgorithm::Naive).unwrap();
        let d = degree_sequences(&path);
        assert_eq!(d.k_in, vec![0, 1, 1, 1]);
        assert_eq!(d.k_out, vec![1, 1, 1, 0]);
    }

    #[test]
    fn distribution_examples() {
        let p = degree_distribution(&[0, 1, 2]).unwrap();
        assert_eq!(p.support(), &[0, 1, 2]);
        assert_eq!(p.mass(), &[1.0 / 3.0; 3]);

        let p = degree_distribution(&[1, 1, 1, 1]).unwrap();
        assert_eq!(p.iter().collect::<Vec<_>>(), vec![(1, 1.0)]);

        let g = hvg_build(&[2.0, 4.0, 3.0, 1.0, 5.0], HvgAlgorithm::Stack).unwrap();
        let d = degree_sequences(&g);
        assert_eq!(d.k_in, vec![0, 1, 1, 1, 3]);
        let p = degree_distribution(&d.k_in).unwrap();
        assert_eq!(
            p.iter().collect::<Vec<_>>(),
            vec![(0, 0.2), (1, 0.6), (3, 0.2)]
        );

        assert!(matches!(degree_distribution(&[]), Err(Error::Size(_))));
    }

    #[test]
    fn from_pairs_validation() {
        assert!(DegreeDistribution::from_pairs(vec![(0, 0.5), (0, 0.5)]).is_err());
        assert!(DegreeDistribution::from_pairs(vec![(0, 0.5), (1, 0.4)]).is_err());
        assert!(DegreeDistribution::from_pairs(vec![(0, -0.5), (1, 1.5)]).is_err());
        let p = DegreeDistribution::from_pairs(vec![(3, 0.25), (1, 0.75)]).unwrap();
        assert_eq!(p.support(), &[1, 3]);
        assert_eq!(p.get(3), 0.25);
        assert_eq!(p.get(2), 0.0);
    }

    #[test]
    fn too_short() {
        assert!(matches!(
            vg_build(&[1.0], VgAlgorithm::Naive),
            Err(Error::Size(_))
        ));
        assert!(matches!(
            hvg_build(&[], HvgAlgorithm::Stack),
            Err(Error::Size(_))
        ));
    }

    #[test]
    fn exact_predicate_resolves_rounding() {
        // 0.1 + 0.2 != 0.3 in binary; the middle point is a hair above the
        // chord joining its neighbours, so it blocks the long link.
        let x = [0.1, 0.2, 0.3];
        let exact = exact_orientation(&x, 0, 1, 2);
        assert_eq!(orientation(&x, 0, 1, 2), exact);
        for g in all_vg(&x) {
            assert_eq!(g.has_edge(0, 2), exact == Ordering::Less);
        }
    }

    #[test]
    fn edge_csv() {
        let g = vg_build(&[2.0, 1.0, 2.0], VgAlgorithm::Naive).unwrap();
        assert_eq!(g.to_edge_csv(), "source,target\n0,1\n0,2\n1,2\n");
    }

    fn series_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop_oneof![
            prop::collection::vec(-100.0f64..100.0, 2..80),
            // coarse integer grids exercise ties and exact collinearity
            prop::collection::vec((-4i32..5).prop_map(f64::from), 2..80),
        ]
    }

    proptest! {
        #[test]
        fn algorithms_match_brute_force(x in series_strategy()) {
            let vg = brute_force(&x, GraphKind::Vg);
            for g in all_vg(&x) {
                prop_assert_eq!(&edge_set(&g), &vg);
            }
            let hvg = brute_force(&x, GraphKind::Hvg);
            for g in all_hvg(&x) {
                prop_assert_eq!(&edge_set(&g), &hvg);
            }
            prop_assert!(hvg.is_subset(&vg));
        }

        #[test]
        fn handshake_and_adjacency(x in series_strategy()) {
            for g in [build(&x, GraphKind::Vg).unwrap(), build(&x, GraphKind::Hvg).unwrap()] {
                let d = degree_sequences(&g);
                prop_assert_eq!(d.k_in.iter().sum::<usize>(), g.n_edges());
                prop_assert_eq!(d.k_out.iter().sum::<usize>(), g.n_edges());
                prop_assert_eq!(d.k_in[0], 0);
                prop_assert_eq!(d.k_out[x.len() - 1], 0);
                for t in 0..x.len() - 1 {
                    prop_assert!(g.has_edge(t, t + 1));
                }
            }
        }

        #[test]
        fn reversal_swaps_degree_sequences(x in series_strategy()) {
            let mut rev = x.clone();
            rev.reverse();
            for kind in [GraphKind::Vg, GraphKind::Hvg] {
                let fwd = degree_sequences(&build(&x, kind).unwrap());
                let bwd = degree_sequences(&build(&rev, kind).unwrap());
                let mut k_out_rev = bwd.k_out.clone();
                k_out_rev.reverse();
                prop_assert_eq!(&fwd.k_in, &k_out_rev);
                prop_assert_eq!(
                    degree_distribution(&fwd.k_in).unwrap(),
                    degree_distribution(&bwd.k_out).unwrap()
                );
                prop_assert_eq!(
                    degree_distribution(&fwd.k_out).unwrap(),
                    degree_distribution(&bwd.k_in).unwrap()
                );
            }
        }
    }
}
