use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::generators::seeded_rng;

/// How to divide nodes into train/validation/test sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitSpec {
    /// Fractions of all nodes; must sum to at most 1.
    Fractions { train: f64, val: f64, test: f64 },
    /// A fixed number of training nodes per class, then fixed-size
    /// validation and test sets drawn from the remainder.
    PerClass {
        train_per_class: usize,
        val: usize,
        test: usize,
    },
}

impl SplitSpec {
    pub fn fractions(train: f64, val: f64, test: f64) -> Self {
        SplitSpec::Fractions { train, val, test }
    }
}

/// Disjoint node masks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMask {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMask {
    /// Checks disjointness, equal lengths and a non-empty training set.
    pub fn new(train: Vec<bool>, val: Vec<bool>, test: Vec<bool>) -> Result<Self> {
        let n = train.len();
        if val.len() != n || test.len() != n {
            return Err(Error::InvalidArgument("mask lengths differ".into()));
        }
        if let Some(i) =
            (0..n).find(|&i| u8::from(train[i]) + u8::from(val[i]) + u8::from(test[i]) > 1)
        {
            return Err(Error::InvalidArgument(format!(
                "node {i} is in more than one split"
            )));
        }
        if !train.iter().any(|&t| t) {
            return Err(Error::EmptyMask);
        }
        Ok(Self { train, val, test })
    }

    pub fn n_nodes(&self) -> usize {
        self.train.len()
    }

    pub fn sizes(&self) -> (usize, usize, usize) {
        let count = |m: &[bool]| m.iter().filter(|&&b| b).count();
        (count(&self.train), count(&self.val), count(&self.test))
    }
}

/// Seeded split, stratified by label when labels are given.
pub fn split(n: usize, labels: Option<&[usize]>, spec: SplitSpec, seed: u64) -> Result<SplitMask> {
    if let Some(l) = labels {
        if l.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {n} nodes",
                l.len()
            )));
        }
    }
    let mut rng = seeded_rng(seed);
    let mut train = vec![false; n];
    let mut val = vec![false; n];
    let mut test = vec![false; n];

    match spec {
        SplitSpec::Fractions {
            train: ft,
            val: fv,
            test: fs,
        } => {
            if [ft, fv, fs].iter().any(|f| !(0.0..=1.0).contains(f)) || ft + fv + fs > 1.0 + 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "invalid split fractions ({ft}, {fv}, {fs})"
                )));
            }
            let n_train = (ft * n as f64).round() as usize;
            let n_val = ((fv * n as f64).round() as usize).min(n - n_train);
            let n_test = if (ft + fv + fs - 1.0).abs() < 1e-9 {
                n - n_train - n_val
            } else {
                ((fs * n as f64).round() as usize).min(n - n_train - n_val)
            };
            let order = stratified_order(n, labels, &mut rng);
            for &v in &order[..n_train] {
                train[v] = true;
            }
            for &v in &order[n_train..n_train + n_val] {
                val[v] = true;
            }
            for &v in &order[n_train + n_val..n_train + n_val + n_test] {
                test[v] = true;
            }
        }
        SplitSpec::PerClass {
            train_per_class,
            val: n_val,
            test: n_test,
        } => {
            let labels = labels.ok_or(Error::MissingLabels)?;
            let mut rest = Vec::new();
            for (class, mut members) in by_class(labels) {
                if members.len() < train_per_class {
                    return Err(Error::InvalidArgument(format!(
                        "class {class} has {} nodes, fewer than {train_per_class}",
                        members.len()
                    )));
                }
                members.shuffle(&mut rng);
                for &v in &members[..train_per_class] {
                    train[v] = true;
                }
                rest.extend_from_slice(&members[train_per_class..]);
            }
            rest.sort_unstable();
            rest.shuffle(&mut rng);
            if n_val + n_test > rest.len() {
                return Err(Error::InvalidArgument(format!(
                    "only {} nodes left for {n_val} validation and {n_test} test nodes",
                    rest.len()
                )));
            }
            for &v in &rest[..n_val] {
                val[v] = true;
            }
            for &v in &rest[n_val..n_val + n_test] {
                test[v] = true;
            }
        }
    }
    SplitMask::new(train, val, test)
}

fn by_class(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (v, &c) in labels.iter().enumerate() {
        classes.entry(c).or_default().push(v);
    }
    classes
}

/// Random node order whose every prefix is (close to) class-balanced:
/// nodes are shuffled within each class and interleaved by their relative
/// position `(rank + 0.5) / class_size`.
fn stratified_order(n: usize, labels: Option<&[usize]>, rng: &mut impl rand::Rng) -> Vec<usize> {
    match labels {
        None => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            order
        }
        Some(labels) => {
            let mut keyed = Vec::with_capacity(n);
            for (class, mut members) in by_class(labels) {
                members.shuffle(rng);
                let size = members.len() as f64;
                for (rank, v) in members.into_iter().enumerate() {
                    keyed.push(((rank as f64 + 0.5) / size, class, v));
                }
            }
            keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            keyed.into_iter().map(|(_, _, v)| v).collect()
        }
    }
}
