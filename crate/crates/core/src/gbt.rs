//! Gradient-boosted regression trees with squared-error loss.
//!
//! Exact greedy split search over presorted feature columns, grown level by
//! level. Every tree sees a random subset of the features (and optionally of
//! the rows); the random stream is seeded, so a fit is reproducible bit for bit.

use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Format tag written into every model file.
pub const MODEL_FORMAT: &str = "qotplan-gbt/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub lambda_l2: f64,
    pub feature_subsample: f64,
    pub row_subsample: f64,
    /// Rounds without validation improvement before stopping; 0 disables.
    pub patience: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 400,
            max_depth: 6,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            lambda_l2: 1.0,
            feature_subsample: 0.8,
            row_subsample: 1.0,
            patience: 30,
        }
    }
}

impl Hyperparams {
    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.lambda_l2 >= 0.0
            && self.min_child_weight >= 0.0
            && self.feature_subsample > 0.0
            && self.feature_subsample <= 1.0
            && self.row_subsample > 0.0
            && self.row_subsample <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid hyperparameters {self:?}")))
        }
    }
}

/// Row-major feature matrix with labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub n_features: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(n_features: usize) -> Self {
        Dataset {
            n_features,
            ..Default::default()
        }
    }

    pub fn push(&mut self, features: &[f64], label: f64) -> Result<()> {
        if features.len() != self.n_features {
            return Err(Error::Width {
                expected: self.n_features,
                got: features.len(),
            });
        }
        self.x.extend_from_slice(features);
        self.y.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    fn check(&self, what: &str) -> Result<()> {
        if self.n_features == 0 || self.x.len() != self.y.len() * self.n_features {
            return Err(Error::Data(format!("{what}: malformed matrix")));
        }
        for i in 0..self.len() {
            if !self.y[i].is_finite() {
                return Err(Error::Data(format!("{what}: non-finite label in row {i}")));
            }
            if let Some(j) = self.row(i).iter().position(|v| !v.is_finite()) {
                return Err(Error::Data(format!("{what}: non-finite feature {j} in row {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    /// `x[feature] < threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
        gain: f64,
    },
    Leaf { value: f64 },
}

/// Binary regression tree; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_value(&self, x: &[f64]) -> f64 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    i = if x[*feature] < *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    }
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(t, *left as usize).max(walk(t, *right as usize))
                }
            }
        }
        walk(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub format: String,
    pub n_features: usize,
    pub base_score: f64,
    pub learning_rate: f64,
    pub hyperparams: Hyperparams,
    pub trees: Vec<Tree>,
}

/// Loss curves and importance of one fit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Training MSE after each round.
    pub train_loss: Vec<f64>,
    /// Validation MSE after each round (empty without validation data).
    pub val_loss: Vec<f64>,
    /// Number of trees kept.
    pub best_round: usize,
    pub importance: Vec<f64>,
}

impl TrainReport {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["round", "train_mse", "val_mse", "kept"])?;
        for (i, t) in self.train_loss.iter().enumerate() {
            let v = self.val_loss.get(i).map(|v| v.to_string()).unwrap_or_default();
            let kept = (i < self.best_round) as u8;
            w.write_record([(i + 1).to_string(), t.to_string(), v, kept.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<train report>", e))?;
        Ok(())
    }
}

impl GbtModel {
    /// A model without trees; predicts `base_score`.
    pub fn constant(n_features: usize, base_score: f64) -> Self {
        GbtModel {
            format: MODEL_FORMAT.to_string(),
            n_features,
            base_score,
            learning_rate: 1.0,
            hyperparams: Hyperparams::default(),
            trees: Vec::new(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::Width {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    pub fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for t in &self.trees {
            s += t.leaf_value(x);
        }
        self.base_score + self.learning_rate * s
    }

    /// Total split gain per feature.
    pub fn importance(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for t in &self.trees {
            for n in &t.nodes {
                if let Node::Split { feature, gain, .. } = n {
                    out[*feature] += gain;
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format")
            .and_then(|v| v.as_str())
            .unwrap_or("<missing>")
            .to_string();
        if found != MODEL_FORMAT {
            return Err(Error::Version {
                found,
                expected: MODEL_FORMAT.to_string(),
            });
        }
        let model: GbtModel = serde_json::from_value(value)?;
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        for (ti, t) in self.trees.iter().enumerate() {
            if t.nodes.is_empty() {
                return Err(Error::Data(format!("tree {ti} has no nodes")));
            }
            for n in &t.nodes {
                if let Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } = n
                {
                    let len = t.nodes.len() as u32;
                    if *feature >= self.n_features || *left >= len || *right >= len {
                        return Err(Error::Data(format!("tree {ti} has a dangling split")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        GbtModel::from_json(&text)
    }
}

fn mse(preds: &[f64], y: &[f64]) -> f64 {
    preds
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / y.len().max(1) as f64
}

/// Per-node split candidate.
#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

/// Scratch state of a node while its level is being scanned.
#[derive(Clone, Copy, Default)]
struct Scan {
    g: f64,
    h: f64,
    last: f64,
    started: bool,
}

struct Builder<'a> {
    data: &'a Dataset,
    /// Row indices sorted by each feature's value.
    sorted: Vec<Vec<u32>>,
    hp: &'a Hyperparams,
}

impl<'a> Builder<'a> {
    fn new(data: &'a Dataset, hp: &'a Hyperparams) -> Self {
        let nf = data.n_features;
        let sorted = (0..nf)
            .map(|f| {
                let mut idx: Vec<u32> = (0..data.len() as u32).collect();
                idx.sort_by(|&a, &b| {
                    data.row(a as usize)[f]
                        .total_cmp(&data.row(b as usize)[f])
                        .then(a.cmp(&b))
                });
                idx
            })
            .collect();
        Builder { data, sorted, hp }
    }

    fn leaf(&self, g: f64, h: f64) -> f64 {
        -g / (h + self.hp.lambda_l2)
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.hp.lambda_l2)
    }

    /// Grows one tree on gradients `grad` (hessian 1) of rows with `in_bag`.
    fn grow(&self, grad: &[f64], in_bag: &[bool], features: &[usize]) -> Tree {
        let n = self.data.len();
        // node index each row currently sits in; u32::MAX = out of bag or finished
        let mut pos = vec![u32::MAX; n];
        let (mut g0, mut h0) = (0.0, 0.0);
        for i in 0..n {
            if in_bag[i] {
                pos[i] = 0;
                g0 += grad[i];
                h0 += 1.0;
            }
        }
        let mut nodes = vec![Node::Leaf { value: self.leaf(g0, h0) }];
        let mut stats = vec![(g0, h0)];
        let mut frontier: Vec<u32> = vec![0];

        for _depth in 0..self.hp.max_depth {
            if frontier.is_empty() {
                break;
            }
            // map node id -> slot in this level's scratch arrays
            let mut slot = vec![u32::MAX; nodes.len()];
            for (s, &id) in frontier.iter().enumerate() {
                slot[id as usize] = s as u32;
            }
            let mut best: Vec<Option<Best>> = vec![None; frontier.len()];
            let mut scan = vec![Scan::default(); frontier.len()];
            for &f in features {
                scan.iter_mut().for_each(|s| *s = Scan::default());
                for &r in &self.sorted[f] {
                    let r = r as usize;
                    let p = pos[r];
                    if p == u32::MAX {
                        continue;
                    }
                    let s = slot[p as usize];
                    if s == u32::MAX {
                        continue;
                    }
                    let s = s as usize;
                    let v = self.data.row(r)[f];
                    let sc = &mut scan[s];
                    if sc.started && v > sc.last {
                        let (gt, ht) = stats[frontier[s] as usize];
                        let (gl, hl) = (sc.g, sc.h);
                        let (gr, hr) = (gt - gl, ht - hl);
                        if hl >= self.hp.min_child_weight && hr >= self.hp.min_child_weight {
                            let gain = 0.5
                                * (self.score(gl, hl) + self.score(gr, hr) - self.score(gt, ht));
                            let better = match best[s] {
                                None => gain > 0.0,
                                Some(b) => gain > b.gain,
                            };
                            if better {
                                best[s] = Some(Best {
                                    gain,
                                    feature: f,
                                    threshold: 0.5 * (sc.last + v),
                                });
                            }
                        }
                    }
                    sc.g += grad[r];
                    sc.h += 1.0;
                    sc.last = v;
                    sc.started = true;
                }
            }

            let mut next = Vec::new();
            let mut child_of = vec![(u32::MAX, u32::MAX); frontier.len()];
            for (s, &id) in frontier.iter().enumerate() {
                let Some(b) = best[s] else { continue };
                let (l, r) = (nodes.len() as u32, nodes.len() as u32 + 1);
                nodes[id as usize] = Node::Split {
                    feature: b.feature,
                    threshold: b.threshold,
                    left: l,
                    right: r,
                    gain: b.gain,
                };
                nodes.push(Node::Leaf { value: 0.0 });
                nodes.push(Node::Leaf { value: 0.0 });
                stats.push((0.0, 0.0));
                stats.push((0.0, 0.0));
                child_of[s] = (l, r);
                next.push(l);
                next.push(r);
            }
            for i in 0..n {
                let p = pos[i];
                if p == u32::MAX {
                    continue;
                }
                let s = slot[p as usize];
                if s == u32::MAX {
                    pos[i] = u32::MAX;
                    continue;
                }
                let (l, r) = child_of[s as usize];
                if l == u32::MAX {
                    pos[i] = u32::MAX;
                    continue;
                }
                let Node::Split {
                    feature, threshold, ..
                } = nodes[p as usize]
                else {
                    unreachable!()
                };
                let c = if self.data.row(i)[feature] < threshold { l } else { r };
                pos[i] = c;
                stats[c as usize].0 += grad[i];
                stats[c as usize].1 += 1.0;
            }
            for &c in &next {
                let (g, h) = stats[c as usize];
                nodes[c as usize] = Node::Leaf { value: self.leaf(g, h) };
            }
            frontier = next;
        }
        Tree { nodes }
    }
}

/// Fits a boosted ensemble; early-stops on `val` when given.
pub fn fit(
    train: &Dataset,
    val: Option<&Dataset>,
    hp: &Hyperparams,
    seed: u64,
) -> Result<(GbtModel, TrainReport)> {
    hp.validate()?;
    if train.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    train.check("training set")?;
    if let Some(v) = val {
        v.check("validation set")?;
        if v.n_features != train.n_features {
            return Err(Error::Width {
                expected: train.n_features,
                got: v.n_features,
            });
        }
    }
    let n = train.len();
    let nf = train.n_features;
    let base = train.y.iter().sum::<f64>() / n as f64;
    let mut model = GbtModel {
        format: MODEL_FORMAT.to_string(),
        n_features: nf,
        base_score: base,
        learning_rate: hp.learning_rate,
        hyperparams: hp.clone(),
        trees: Vec::new(),
    };
    let builder = Builder::new(train, hp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pred = vec![base; n];
    let mut val_pred: Vec<f64> = val.map(|v| vec![base; v.len()]).unwrap_or_default();
    let mut report = TrainReport::default();
    let mut grad = vec![0.0; n];
    let n_feat = ((hp.feature_subsample * nf as f64).ceil() as usize).clamp(1, nf);
    let n_rows = ((hp.row_subsample * n as f64).ceil() as usize).clamp(1, n);
    let (mut best_loss, mut best_round) = (f64::INFINITY, 0usize);

    for round in 0..hp.n_trees {
        let mut features = sample(&mut rng, nf, n_feat).into_vec();
        features.sort_unstable();
        let mut in_bag = vec![n_rows == n; n];
        if n_rows < n {
            for i in sample(&mut rng, n, n_rows) {
                in_bag[i] = true;
            }
        }
        for i in 0..n {
            grad[i] = pred[i] - train.y[i];
        }
        let tree = builder.grow(&grad, &in_bag, &features);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += hp.learning_rate * tree.leaf_value(train.row(i));
        }
        report.train_loss.push(mse(&pred, &train.y));
        if let Some(v) = val {
            for (i, p) in val_pred.iter_mut().enumerate() {
                *p += hp.learning_rate * tree.leaf_value(v.row(i));
            }
            let loss = mse(&val_pred, &v.y);
            report.val_loss.push(loss);
            if loss < best_loss {
                best_loss = loss;
                best_round = round + 1;
            }
        }
        model.trees.push(tree);
        if val.is_some() && hp.patience > 0 && round + 1 - best_round >= hp.patience {
            log::debug!("early stop at round {}, best {}", round + 1, best_round);
            break;
        }
    }
    if val.is_some() {
        model.trees.truncate(best_round);
    }
    report.best_round = model.trees.len();
    report.importance = model.importance();
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn linear(n: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut d = Dataset::new(3);
        for _ in 0..n {
            let x: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
            d.push(&x, 3.0 * x[0]).unwrap();
        }
        d
    }

    #[test]
    fn constant_labels() {
        let mut d = Dataset::new(2);
        for i in 0..50 {
            d.push(&[i as f64, (i * 7 % 11) as f64], 4.25).unwrap();
        }
        let (m, _) = fit(&d, None, &Hyperparams { n_trees: 5, ..Default::default() }, 1).unwrap();
        for i in 0..50 {
            assert!((m.predict(d.row(i)).unwrap() - 4.25).abs() < 1e-12);
        }
        assert!(m.trees.iter().all(|t| t.nodes.len() == 1));
        assert!(m.importance().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn hand_built_stump() {
        let m = GbtModel {
            trees: vec![Tree {
                nodes: vec![
                    Node::Split { feature: 0, threshold: 0.5, left: 1, right: 2, gain: 1.0 },
                    Node::Leaf { value: -1.0 },
                    Node::Leaf { value: 1.0 },
                ],
            }],
            ..GbtModel::constant(1, 0.0)
        };
        assert_eq!(m.predict(&[0.2]).unwrap(), -1.0);
        assert_eq!(m.predict(&[0.5]).unwrap(), 1.0);
        assert!(matches!(m.predict(&[0.1, 0.2]), Err(Error::Width { expected: 1, got: 2 })));
        assert_eq!(GbtModel::constant(3, 2.5).predict(&[0.0; 3]).unwrap(), 2.5);
    }

    #[test]
    fn training_loss_never_increases() {
        let d = linear(300, 3);
        let hp = Hyperparams { n_trees: 60, max_depth: 3, ..Default::default() };
        let (_, rep) = fit(&d, None, &hp, 9).unwrap();
        for w in rep.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{w:?}");
        }
    }

    #[test]
    fn early_stop_keeps_best_round() {
        let d = linear(400, 5);
        let mut v = linear(100, 6);
        // noisy validation labels so that the curve turns up eventually
        for (i, y) in v.y.iter_mut().enumerate() {
            *y += if i % 2 == 0 { 0.3 } else { -0.3 };
        }
        let hp = Hyperparams { n_trees: 300, max_depth: 6, patience: 10, ..Default::default() };
        let (m, rep) = fit(&d, Some(&v), &hp, 2).unwrap();
        assert_eq!(m.trees.len(), rep.best_round);
        let at_stop = rep.val_loss[rep.best_round - 1];
        assert!(rep.val_loss.iter().all(|&l| at_stop <= l));
    }

    #[test]
    fn rejects_non_finite() {
        let mut d = linear(10, 1);
        d.x[7 * 3 + 1] = f64::NAN;
        let err = fit(&d, None, &Hyperparams::default(), 0).unwrap_err().to_string();
        assert!(err.contains("row 7"), "{err}");
        assert!(fit(&Dataset::new(3), None, &Hyperparams::default(), 0).is_err());
    }

    #[test]
    fn version_tag_checked() {
        let m = GbtModel::constant(2, 1.0);
        let text = m.to_json().replace(MODEL_FORMAT, "qotplan-gbt/99");
        assert!(matches!(GbtModel::from_json(&text), Err(Error::Version { .. })));
        let json = m.to_json();
        assert!(GbtModel::from_json(&json[..json.len() / 2]).is_err());
        assert_eq!(GbtModel::from_json(&json).unwrap(), m);
    }

    #[test]
    fn split_ties_prefer_lowest_feature() {
        // identical columns: the split must land on feature 0
        let mut d = Dataset::new(2);
        for i in 0..20 {
            let x = i as f64;
            d.push(&[x, x], if i < 10 { 0.0 } else { 1.0 }).unwrap();
        }
        let hp = Hyperparams { n_trees: 1, max_depth: 1, feature_subsample: 1.0, ..Default::default() };
        let (m, _) = fit(&d, None, &hp, 0).unwrap();
        match &m.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 9.5);
            }
            other => panic!("expected a split, got {other:?}"),
        }
    }
}
