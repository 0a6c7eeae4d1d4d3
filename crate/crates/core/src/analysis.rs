//! Diagnostics: median pixel distance, rho/stddev correlation and the order in
//! which examples get learned.

use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{unit_value, Dataset, NormalizedDataset};
use crate::scoring::{ascending_order, score_dataset, CurriculumOrder, Direction, Scorer};
use crate::stats::student_t_two_sided;
use crate::{Error, Result};

/// Pixel scaling used when reporting pixel statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelScale {
    /// `p / 255`
    #[serde(rename = "0,1")]
    ZeroOne,
    /// `p / 127.5 - 1`
    #[serde(rename = "-1,1")]
    Unit,
}

impl PixelScale {
    pub fn value(self, p: u8) -> f64 {
        match self {
            PixelScale::ZeroOne => p as f64 / 255.0,
            PixelScale::Unit => unit_value(p),
        }
    }
}

impl fmt::Display for PixelScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PixelScale::ZeroOne => "[0,1]",
            PixelScale::Unit => "[-1,1]",
        })
    }
}

/// Median of the pixel multiset described by a byte histogram. Even counts
/// average the two middle values.
pub fn histogram_median(counts: &[u64; 256], scale: PixelScale) -> Option<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return None;
    }
    let nth = |k: u64| -> u8 {
        let mut acc = 0;
        for (v, &c) in counts.iter().enumerate() {
            acc += c;
            if acc > k {
                return v as u8;
            }
        }
        255
    };
    let lo = scale.value(nth((total - 1) / 2));
    let hi = scale.value(nth(total / 2));
    Some((lo + hi) / 2.0)
}

fn histogram<'a>(images: impl Iterator<Item = &'a [u8]>) -> [u64; 256] {
    let mut counts = [0u64; 256];
    for img in images {
        for &p in img {
            counts[p as usize] += 1;
        }
    }
    counts
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianDistance {
    /// Median over every pixel of the dataset.
    pub m: f64,
    /// `|M - median(first b images)|`
    pub m_plus: f64,
    /// `|M - median(last b images)|`
    pub m_minus: f64,
}

impl MedianDistance {
    /// Direction whose first batch sits farther from the dataset median;
    /// ties go to `Plus`.
    pub fn selected(&self) -> Direction {
        if self.m_minus > self.m_plus {
            Direction::Minus
        } else {
            Direction::Plus
        }
    }
}

/// `order` is expected to be the plain ascending stddev order; the first `b`
/// entries then form the first `stddev+` batch and the last `b` the first
/// `stddev-` batch.
pub fn median_pixel_distance(
    ds: &Dataset,
    order: &CurriculumOrder,
    b: usize,
    scale: PixelScale,
) -> Result<MedianDistance> {
    if order.len() != ds.len() {
        return Err(Error::DimensionMismatch {
            what: "order length",
            expected: ds.len(),
            got: order.len(),
        });
    }
    if b == 0 || b > ds.len() {
        return Err(Error::InvalidArgument(format!("b = {b} must be in [1, {}]", ds.len())));
    }
    let med = |idx: &[usize]| histogram_median(&histogram(idx.iter().map(|&i| ds.image(i))), scale).unwrap();
    let m = histogram_median(&histogram(std::iter::once(ds.images())), scale).unwrap();
    let first = med(&order.perm[..b]);
    let last = med(&order.perm[ds.len() - b..]);
    Ok(MedianDistance {
        m,
        m_plus: (m - first).abs(),
        m_minus: (m - last).abs(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub dataset: String,
    pub scale: PixelScale,
    pub b: usize,
    pub m: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    pub selected: String,
}

/// Median pixel distances of the stddev curricula on both pixel scales.
pub fn table1_rows(nds: &NormalizedDataset, b: usize) -> Result<Vec<Table1Row>> {
    let scores = score_dataset(nds, Scorer::Stddev, Direction::Plus)?;
    let order = ascending_order(&scores.values);
    [PixelScale::ZeroOne, PixelScale::Unit]
        .into_iter()
        .map(|scale| {
            let d = median_pixel_distance(nds.base(), &order, b, scale)?;
            Ok(Table1Row {
                dataset: nds.base().name().to_string(),
                scale,
                b,
                m: d.m,
                m_plus: d.m_plus,
                m_minus: d.m_minus,
                selected: format!("stddev{}", d.selected().suffix()),
            })
        })
        .collect()
}

pub fn write_table1_csv<W: Write>(mut w: W, rows: &[Table1Row]) -> std::io::Result<()> {
    writeln!(w, "dataset,scale,b,M,M_plus,M_minus,selected")?;
    for r in rows {
        writeln!(
            w,
            "{},\"{}\",{},{},{},{},{}",
            r.dataset, r.scale, r.b, r.m, r.m_plus, r.m_minus, r.selected
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub r: f64,
    pub p: f64,
    pub n: usize,
}

/// Sample Pearson correlation with a two-sided t-test p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "correlation sample length",
            expected: x.len(),
            got: y.len(),
        });
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!("pearson needs n >= 3, got {n}")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    if !(sxx.is_finite() && syy.is_finite() && sxy.is_finite()) {
        return Err(Error::NonFinite);
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p = if r.abs() == 1.0 {
        0.0
    } else {
        student_t_two_sided(r * (df / (1.0 - r * r)).sqrt(), df)
    };
    Ok(CorrelationResult { r, p, n })
}

/// First epoch from which each example stays correctly classified; the
/// number of epochs if it never does.
pub fn learned_order(per_epoch_correct: &[Vec<bool>]) -> Result<Vec<usize>> {
    let epochs = per_epoch_correct.len();
    let n = per_epoch_correct.first().map_or(0, Vec::len);
    if let Some(row) = per_epoch_correct.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "correctness row length",
            expected: n,
            got: row.len(),
        });
    }
    let mut learned = vec![epochs; n];
    for (i, slot) in learned.iter_mut().enumerate() {
        for e in (0..epochs).rev() {
            if !per_epoch_correct[e][i] {
                break;
            }
            *slot = e;
        }
    }
    Ok(learned)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStddev {
    pub scale: PixelScale,
    pub early: f64,
    pub late: f64,
}

/// Mean per-image stddev of the earliest- and latest-learned `quantile`
/// fractions (at least one example each), on both pixel scales.
pub fn stddev_by_learned_group(ds: &Dataset, learned: &[usize], quantile: f64) -> Result<[GroupStddev; 2]> {
    if learned.len() != ds.len() {
        return Err(Error::DimensionMismatch {
            what: "learned-order length",
            expected: ds.len(),
            got: learned.len(),
        });
    }
    if !(quantile > 0.0 && quantile < 0.5) {
        return Err(Error::InvalidArgument(format!(
            "quantile must be in (0, 0.5), got {quantile}"
        )));
    }
    if ds.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.sort_by_key(|&i| (learned[i], i));
    let g = ((quantile * ds.len() as f64).floor() as usize).max(1);
    let byte_std = |i: usize| {
        let img = ds.image(i);
        let d = img.len() as f64;
        let m = img.iter().map(|&p| p as f64).sum::<f64>() / d;
        (img.iter().map(|&p| (p as f64 - m).powi(2)).sum::<f64>() / d).sqrt()
    };
    let group_mean = |ids: &[usize]| ids.iter().map(|&i| byte_std(i)).sum::<f64>() / ids.len() as f64;
    let early = group_mean(&idx[..g]);
    let late = group_mean(&idx[idx.len() - g..]);
    // both scales are affine in the byte value: [0,1] divides by 255, [-1,1] by 127.5
    Ok([
        GroupStddev {
            scale: PixelScale::ZeroOne,
            early: early / 255.0,
            late: late / 255.0,
        },
        GroupStddev {
            scale: PixelScale::Unit,
            early: early / 127.5,
            late: late / 127.5,
        },
    ])
}
