//! Entity-level summaries (score, variance, ranking) and the year-level
//! views: feature matrices, PCA and complete-linkage clustering.

use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::irreversibility::IrreversibilityProfile;

/// Mean of the annual values.
pub fn score(annual: &IrreversibilityProfile) -> Result<f64> {
    if annual.is_empty() {
        return Err(Error::InsufficientData(format!(
            "`{}` has no annual values",
            annual.entity
        )));
    }
    let v = annual.values();
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Population variance `<I^2> - <I>^2` of the annual values.
pub fn irr_variance(annual: &IrreversibilityProfile) -> Result<f64> {
    if annual.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "`{}` has {} annual values, need 2",
            annual.entity,
            annual.len()
        )));
    }
    let v = annual.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let mean_sq = v.iter().map(|x| x * x).sum::<f64>() / n;
    Ok((mean_sq - mean * mean).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompanyReport {
    pub entity: String,
    pub score: f64,
    pub irr_variance: f64,
    pub avg_volatility: f64,
    /// 1-based; 0 until [`rank_entities`] fills it.
    pub rank: usize,
}

/// Orders by descending score, ties by entity id, and numbers the ranks.
pub fn rank_entities(mut reports: Vec<CompanyReport>) -> Vec<CompanyReport> {
    reports.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.entity.cmp(&b.entity))
    });
    for (i, r) in reports.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    reports
}

pub fn reports_to_csv(reports: &[CompanyReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["entity", "score", "irr_variance", "avg_volatility", "rank"])?;
    for r in reports {
        w.write_record([
            r.entity.clone(),
            r.score.to_string(),
            r.irr_variance.to_string(),
            r.avg_volatility.to_string(),
            r.rank.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

/// Squared Pearson correlation.
pub fn pearson_r2(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Size(format!(
            "need equal lengths >= 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Degenerate("zero variance".into()));
    }
    Ok((sxy * sxy / (sxx * syy)).min(1.0))
}

/// Observations (rows, e.g. years) by features (columns, e.g. entities).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: Vec<String>,
    columns: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<String>, columns: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != rows.len() {
            return Err(Error::Dimension(format!(
                "{} row labels for {} rows",
                rows.len(),
                values.len()
            )));
        }
        for (label, row) in rows.iter().zip(&values) {
            if row.len() != columns.len() {
                return Err(Error::Dimension(format!(
                    "row `{label}` has {} entries, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!(
                    "row `{label}` has a non-finite entry"
                )));
            }
        }
        Ok(Self {
            rows,
            columns,
            values,
        })
    }

    /// Years as rows, one column per profile. Every profile must have a
    /// value for every requested year.
    pub fn from_annual(profiles: &[IrreversibilityProfile], years: &[i64]) -> Result<Self> {
        let mut values = Vec::with_capacity(years.len());
        for &year in years {
            let row = profiles
                .iter()
                .map(|p| {
                    p.get(year).ok_or_else(|| {
                        Error::Dimension(format!("no value for `{}` in {year}", p.entity))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(
            years.iter().map(i64::to_string).collect(),
            profiles.iter().map(|p| p.entity.clone()).collect(),
            values,
        )
    }

    pub fn rows(&self) -> &[String] {
        &self.rows
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub labels: Vec<String>,
    /// Unit principal directions, one per component.
    pub components: Vec<Vec<f64>>,
    /// Rows of the (centred) data in component coordinates.
    pub projections: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaResult {
    pub fn to_json(&self) -> Value {
        json!({
            "labels": self.labels,
            "projections": self.projections,
            "explained_variance_ratio": self.explained_variance_ratio,
        })
    }
}

/// PCA by eigendecomposition of the scatter matrix of the column-centred
/// data. With `standardize`, columns are also divided by their sample standard deviation (constant columns are
/// left at zero). Each component is signed so that its largest-magnitude
/// coordinate is positive.
pub fn pca(fm: &FeatureMatrix, m: usize, standardize: bool) -> Result<PcaResult> {
    let (r, c) = (fm.n_rows(), fm.n_columns());
    if m == 0 || r < 2 || m > (r - 1).min(c) {
        return Err(Error::Dimension(format!(
            "{m} components requested from a {r}x{c} matrix"
        )));
    }
    let mut x = DMatrix::from_fn(r, c, |i, j| fm.values[i][j]);
    for j in 0..c {
        let mut col = x.column_mut(j);
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        if standardize {
            let sd = (col.norm_squared() / (r - 1) as f64).sqrt();
            if sd > 0.0 {
                col /= sd;
            }
        }
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("all columns are constant".into()));
    }
    let eig = (x.transpose() * &x).symmetric_eigen();
    let ev = eig.eigenvalues.map(|v| v.max(0.0));
    let mut order: Vec<usize> = (0..ev.len()).collect();
    order.sort_by(|&a, &b| ev[b].total_cmp(&ev[a]).then(a.cmp(&b)));
    let total = x.norm_squared();

    let mut components = Vec::with_capacity(m);
    let mut ratios = Vec::with_capacity(m);
    for &idx in order.iter().take(m) {
        let mut dir: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = dir.iter().enumerate().fold(
            0,
            |best, (k, v)| if v.abs() > dir[best].abs() { k } else { best },
        );
        if dir[lead] < 0.0 {
            dir.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(dir);
        ratios.push(ev[idx] / total);
    }
    let projections = (0..r)
        .map(|i| {
            components
                .iter()
                .map(|dir| (0..c).map(|j| x[(i, j)] * dir[j]).sum())
                .collect()
        })
        .collect();
    Ok(PcaResult {
        labels: fm.rows.clone(),
        components,
        projections,
        explained_variance_ratio: ratios,
    })
}

/// Euclidean distances between rows.
pub fn distance_matrix(fm: &FeatureMatrix) -> Vec<Vec<f64>> {
    let n = fm.n_rows();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let dist = fm.values[i]
                .iter()
                .zip(&fm.values[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            d[i][j] = dist;
            d[j][i] = dist;
        }
    }
    d
}

/// One agglomeration step. Leaves are `0..n`, the cluster created by merge
/// `i` is `n + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    fn n_leaves(&self) -> usize {
        self.labels.len()
    }

    /// Leaf indices under cluster `id`, ascending.
    pub fn leaves(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < self.n_leaves() {
                out.push(c);
            } else {
                let m = &self.merges[c - self.n_leaves()];
                stack.push(m.left);
                stack.push(m.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// Leaf sets of every internal node, in merge order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        (0..self.merges.len())
            .map(|i| self.leaves(self.n_leaves() + i))
            .collect()
    }

    /// Flat partition into `k` groups obtained by undoing the last `k - 1`
    /// merges. Groups are sorted by their smallest leaf.
    pub fn cut(&self, k: usize) -> Vec<Vec<usize>> {
        let n = self.n_leaves();
        let k = k.clamp(1, n);
        let kept = n - k;
        let mut roots: Vec<usize> = (0..n + kept)
            .filter(|&id| {
                // a cluster is a root if nothing among the kept merges absorbs it
                !self.merges[..kept]
                    .iter()
                    .any(|m| m.left == id || m.right == id)
            })
            .collect();
        roots.sort_unstable();
        let mut groups: Vec<Vec<usize>> = roots.into_iter().map(|r| self.leaves(r)).collect();
        groups.sort();
        groups
    }

    fn node_json(&self, id: usize) -> Value {
        if id < self.n_leaves() {
            json!({ "label": self.labels[id], "height": 0.0 })
        } else {
            let m = &self.merges[id - self.n_leaves()];
            json!({
                "left": self.node_json(m.left),
                "right": self.node_json(m.right),
                "height": m.height,
            })
        }
    }

    /// Nested `{left, right, height}` tree with `{label, height}` leaves.
    pub fn to_json(&self) -> Value {
        match self.merges.len() {
            0 if self.n_leaves() == 1 => self.node_json(0),
            0 => Value::Null,
            len => self.node_json(self.n_leaves() + len - 1),
        }
    }

    fn newick_node(&self, id: usize, parent_height: f64, out: &mut String) {
        let height = if id < self.n_leaves() {
            out.push_str(&newick_label(&self.labels[id]));
            0.0
        } else {
            let m = &self.merges[id - self.n_leaves()];
            out.push('(');
            self.newick_node(m.left, m.height, out);
            out.push(',');
            self.newick_node(m.right, m.height, out);
            out.push(')');
            m.height
        };
        out.push(':');
        out.push_str(&(parent_height - height).to_string());
    }

    /// Newick text with branch lengths equal to height differences.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        if self.merges.is_empty() {
            if let Some(l) = self.labels.first() {
                out.push_str(&newick_label(l));
            }
        } else {
            let root = self.n_leaves() + self.merges.len() - 1;
            let m = &self.merges[root - self.n_leaves()];
            out.push('(');
            self.newick_node(m.left, m.height, &mut out);
            out.push(',');
            self.newick_node(m.right, m.height, &mut out);
            out.push(')');
        }
        out.push(';');
        out
    }
}

fn newick_label(label: &str) -> String {
    if label
        .chars()
        .any(|c| c.is_whitespace() || "()[]':;,".contains(c))
    {
        format!("'{}'", label.replace('\'', "''"))
    } else {
        label.to_string()
    }
}

/// Agglomerative clustering with complete linkage (cluster distance = the
/// largest pairwise member distance). Equal distances are resolved in
/// favour of the pair whose members come first in sorted label order.
pub fn cluster_complete(d: &[Vec<f64>], labels: &[String]) -> Result<Dendrogram> {
    let n = d.len();
    if labels.len() != n {
        return Err(Error::Matrix(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    if n == 0 {
        return Err(Error::Matrix("empty distance matrix".into()));
    }
    for (i, row) in d.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Matrix(format!("row {i} has {} entries", row.len())));
        }
        for (j, &v) in row.iter().enumerate() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Matrix(format!("entry ({i},{j}) = {v}")));
            }
            if v != d[j][i] {
                return Err(Error::Matrix(format!("not symmetric at ({i},{j})")));
            }
        }
        if row[i] != 0.0 {
            return Err(Error::Matrix(format!("non-zero diagonal at {i}")));
        }
    }

    let mut by_label: Vec<usize> = (0..n).collect();
    by_label.sort_by(|&a, &b| labels[a].cmp(&labels[b]).then(a.cmp(&b)));
    let mut rank = vec![0; n];
    for (r, &i) in by_label.iter().enumerate() {
        rank[i] = r;
    }

    struct Active {
        id: usize,
        key: usize,
        size: usize,
    }
    let mut active: Vec<Active> = (0..n)
        .map(|i| Active {
            id: i,
            key: rank[i],
            size: 1,
        })
        .collect();
    // dist[a][b] between active slots, maintained by the complete-linkage
    // update max(d(a,k), d(b,k))
    let mut dist: Vec<Vec<f64>> = d.to_vec();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    while active.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..active.len() {
            for b in a + 1..active.len() {
                let h = dist[a][b];
                let ka = active[a].key.min(active[b].key);
                let kb = active[a].key.max(active[b].key);
                let better = match best {
                    None => true,
                    Some((bh, bkey, _, _)) => match h.total_cmp(&bh) {
                        Ordering::Less => true,
                        Ordering::Equal => (ka, kb) < bkey,
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((h, (ka, kb), a, b));
                }
            }
        }
        let (height, _, a, b) = best.expect("two active clusters");
        let (first, second) = if active[a].key <= active[b].key {
            (a, b)
        } else {
            (b, a)
        };
        merges.push(Merge {
            left: active[first].id,
            right: active[second].id,
            height,
            size: active[a].size + active[b].size,
        });
        for k in 0..active.len() {
            let v = dist[a][k].max(dist[b][k]);
            dist[a][k] = v;
            dist[k][a] = v;
        }
        dist[a][a] = 0.0;
        active[a] = Active {
            id: n + merges.len() - 1,
            key: active[a].key.min(active[b].key),
            size: active[a].size + active[b].size,
        };
        active.remove(b);
        dist.remove(b);
        for row in &mut dist {
            row.remove(b);
        }
    }
    Ok(Dendrogram {
        labels: labels.to_vec(),
        merges,
    })
}
