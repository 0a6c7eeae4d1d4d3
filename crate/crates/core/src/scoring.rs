//! Unsupervised difficulty scores and curriculum orderings.
//!
//! Lower score means easier. All scores are defined on the `[-1, 1]` unit
//! view, except `entropy`, which reads raw bytes; `stddev` is evaluated from
//! exact integer pixel moments.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{NormalizedDataset, Split};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Stddev,
    Entropy,
    Norm,
    ClassNorm,
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stddev" => Ok(Scorer::Stddev),
            "entropy" => Ok(Scorer::Entropy),
            "norm" => Ok(Scorer::Norm),
            "class_norm" | "class-norm" => Ok(Scorer::ClassNorm),
            other => Err(Error::InvalidArgument(format!("unknown scorer '{other}'"))),
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scorer::Stddev => "stddev",
            Scorer::Entropy => "entropy",
            Scorer::Norm => "norm",
            Scorer::ClassNorm => "class_norm",
        })
    }
}

/// `Plus` sorts by the statistic ascending; `Minus` by its negation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Plus,
    Minus,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Plus => 1.0,
            Direction::Minus => -1.0,
        }
    }

    pub fn suffix(self) -> char {
        match self {
            Direction::Plus => '+',
            Direction::Minus => '-',
        }
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Direction::Plus),
            "-" | "minus" => Ok(Direction::Minus),
            other => Err(Error::InvalidArgument(format!("unknown direction '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub scorer: Scorer,
    pub direction: Direction,
    pub values: Vec<f64>,
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn name(&self) -> String {
        format!("{}{}", self.scorer, self.direction.suffix())
    }
}

/// A permutation of `0..N`, easiest first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CurriculumOrder {
    pub perm: Vec<usize>,
    pub class_balanced: bool,
}

impl CurriculumOrder {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            class_balanced: false,
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `rank[i]` is the position of example `i` in the order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut rank = vec![0; self.perm.len()];
        for (pos, &i) in self.perm.iter().enumerate() {
            rank[i] = pos;
        }
        rank
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.perm.len()];
        self.perm
            .iter()
            .all(|&i| i < seen.len() && !std::mem::replace(&mut seen[i], true))
    }
}

/// Population standard deviation of the pixel values.
pub fn stddev_score(image: &[f64]) -> f64 {
    let d = image.len() as f64;
    let mean = image.iter().sum::<f64>() / d;
    (image.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / d).sqrt()
}

/// Stddev of the unit view computed from exact integer pixel moments:
/// `sqrt(d Σp² - (Σp)²) / (127.5 d)`. Equal-variance images get bit-identical
/// scores and rankings survive positive affine pixel maps exactly.
pub fn stddev_score_bytes(image: &[u8]) -> f64 {
    let d = image.len() as u128;
    let (s, sq) = image.iter().fold((0u128, 0u128), |(s, sq), &p| {
        (s + p as u128, sq + (p as u128) * (p as u128))
    });
    ((d * sq - s * s) as f64).sqrt() / (127.5 * d as f64)
}

/// Shannon entropy (bits) of the 256-bin byte histogram, pooled over channels.
pub fn entropy_score(image: &[u8]) -> f64 {
    let mut counts = [0usize; 256];
    for &p in image {
        counts[p as usize] += 1;
    }
    let n = image.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    // a single occupied bin gives -0.0
    h.max(0.0)
}

pub fn norm_score(image: &[f64]) -> f64 {
    crate::linalg::norm2(image)
}

pub fn class_norm_score(image: &[f64], class_mean: &[f64]) -> f64 {
    image
        .iter()
        .zip(class_mean)
        .map(|(x, m)| (x - m).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Per-class mean image of the unit view.
pub fn class_means(nds: &NormalizedDataset) -> Vec<Vec<f64>> {
    let d = nds.dim();
    let k = nds.num_classes();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    let mut row = vec![0.0; d];
    for i in 0..nds.len() {
        let c = nds.labels()[i];
        nds.unit_row_into(i, &mut row);
        crate::linalg::axpy(1.0, &row, &mut sums[c]);
        counts[c] += 1;
    }
    for (s, &c) in sums.iter_mut().zip(&counts) {
        if c > 0 {
            s.iter_mut().for_each(|v| *v /= c as f64);
        }
    }
    sums
}

/// Score every example of a train split.
pub fn score_dataset(nds: &NormalizedDataset, scorer: Scorer, direction: Direction) -> Result<ScoreVector> {
    let means = match scorer {
        Scorer::ClassNorm => {
            if nds.base().split() != Split::Train {
                return Err(Error::InvalidArgument(
                    "class_norm scores use train-split class means; score the train split".into(),
                ));
            }
            Some(class_means(nds))
        }
        _ => None,
    };
    let sign = direction.sign();
    let values = (0..nds.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; nds.dim()],
            |row, i| {
                let v = match scorer {
                    Scorer::Entropy => entropy_score(nds.base().image(i)),
                    Scorer::Stddev => stddev_score_bytes(nds.base().image(i)),
                    Scorer::Norm => {
                        nds.unit_row_into(i, row);
                        norm_score(row)
                    }
                    Scorer::ClassNorm => {
                        nds.unit_row_into(i, row);
                        class_norm_score(row, &means.as_ref().unwrap()[nds.labels()[i]])
                    }
                };
                sign * v
            },
        )
        .collect();
    Ok(ScoreVector {
        scorer,
        direction,
        values,
    })
}

fn sort_by_score(indices: &mut [usize], values: &[f64]) {
    indices.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
}

/// Plain ascending order of the scores, ties by index.
pub fn ascending_order(values: &[f64]) -> CurriculumOrder {
    let mut perm: Vec<usize> = (0..values.len()).collect();
    sort_by_score(&mut perm, values);
    CurriculumOrder {
        perm,
        class_balanced: false,
    }
}

/// Round-robin over classes (ascending class id), each class contributing its
/// next-easiest remaining example per round.
pub fn class_balanced_order(scores: &ScoreVector, labels: &[usize]) -> Result<CurriculumOrder> {
    if labels.len() != scores.len() {
        return Err(Error::DimensionMismatch {
            what: "label count",
            expected: scores.len(),
            got: labels.len(),
        });
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        per_class[l].push(i);
    }
    for list in &mut per_class {
        sort_by_score(list, &scores.values);
    }
    let mut perm = Vec::with_capacity(labels.len());
    let longest = per_class.iter().map(Vec::len).max().unwrap_or(0);
    for round in 0..longest {
        for list in &per_class {
            if let Some(&i) = list.get(round) {
                perm.push(i);
            }
        }
    }
    Ok(CurriculumOrder {
        perm,
        class_balanced: true,
    })
}

/// CSV `index,label,score,rank`; `rank` is the position in `order`.
pub fn write_score_csv<W: Write>(
    mut w: W,
    scores: &ScoreVector,
    labels: &[usize],
    order: &CurriculumOrder,
) -> std::io::Result<()> {
    let ranks = order.ranks();
    writeln!(w, "index,label,score,rank")?;
    for (i, (&v, &l)) in scores.values.iter().zip(labels).enumerate() {
        writeln!(w, "{i},{l},{v},{}", ranks[i])?;
    }
    Ok(())
}
