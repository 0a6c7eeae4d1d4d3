use rayon::prelude::*;

use super::backprop::row_pass;
use super::model::FcnModel;
use crate::data::NormalizedDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub mean_loss: f64,
    pub accuracy: f64,
    pub correct: Vec<bool>,
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean loss and top-1 accuracy of `model` on the std view of `nds`.
pub fn evaluate(model: &FcnModel, nds: &NormalizedDataset) -> Result<EvalResult> {
    let arch = model.arch();
    if nds.dim() != arch.d_in {
        return Err(Error::DimensionMismatch {
            what: "dataset dimension",
            expected: arch.d_in,
            got: nds.dim(),
        });
    }
    if let Some(&label) = nds.labels().iter().find(|&&l| l >= arch.classes) {
        return Err(Error::LabelOutOfRange {
            label,
            classes: arch.classes,
        });
    }
    let per_row: Vec<(f64, bool)> = (0..nds.len())
        .into_par_iter()
        .map_init(
            || vec![0.0; arch.d_in],
            |x, i| {
                nds.std_row_into(i, x);
                let y = nds.labels()[i];
                let pass = row_pass(model, x, y);
                (pass.loss, argmax(&pass.probs) == y)
            },
        )
        .collect();
    let n = per_row.len() as f64;
    let mean_loss = per_row.iter().map(|r| r.0).sum::<f64>() / n;
    let correct: Vec<bool> = per_row.into_iter().map(|r| r.1).collect();
    let accuracy = correct.iter().filter(|&&c| c).count() as f64 / n;
    Ok(EvalResult {
        mean_loss,
        accuracy,
        correct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{normalize, Dataset, Shape, Split};
    use crate::nn::model::FcnArch;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.1, 0.7, 0.7]), 1);
    }

    #[test]
    fn uniform_model_accuracy_is_label_zero_fraction() {
        let labels = vec![0, 1, 1, 0, 1, 1];
        let ds = Dataset::new("t", Split::Train, Shape::new(1, 2, 1), 2, (0..12).collect(), labels).unwrap();
        let (tr, _) = normalize(ds.clone(), ds).unwrap();
        let m = FcnModel::zeros(FcnArch::new(2, 3, 2, true).unwrap());
        let r = evaluate(&m, &tr).unwrap();
        assert!((r.accuracy - 2.0 / 6.0).abs() < 1e-15);
        assert!((r.mean_loss - 2f64.ln()).abs() < 1e-12);
        assert_eq!(r.correct, vec![true, false, false, true, false, false]);
    }
}
