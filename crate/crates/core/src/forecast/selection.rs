use nalgebra::DVector;

use super::ModelKind;
use crate::numfmt::round12;
use crate::{Error, Result};

pub fn mse(pred: &DVector<f64>, y: &DVector<f64>) -> f64 {
    pred.iter().zip(y.iter()).map(|(p, v)| (p - v) * (p - v)).sum::<f64>() / y.len().max(1) as f64
}

pub fn mae(pred: &DVector<f64>, y: &DVector<f64>) -> f64 {
    pred.iter().zip(y.iter()).map(|(p, v)| (p - v).abs()).sum::<f64>() / y.len().max(1) as f64
}

/// Equal-weight mean of the OLS, EN, RF and NN forecasts.
pub fn ensemble_predict(constituents: &[(ModelKind, DVector<f64>)]) -> Result<DVector<f64>> {
    let mut sum: Option<DVector<f64>> = None;
    for kind in [ModelKind::Ols, ModelKind::En, ModelKind::Rf, ModelKind::Nn] {
        let (_, pred) = constituents
            .iter()
            .find(|(k, _)| *k == kind)
            .ok_or_else(|| Error::MissingModel(kind.to_string()))?;
        sum = Some(match sum {
            None => pred.clone(),
            Some(s) if s.len() == pred.len() => s + pred,
            Some(_) => return Err(Error::Dimension("constituent forecasts differ in length".into())),
        });
    }
    Ok(sum.expect("four constituents") / 4.0)
}

/// Test-sample errors per kind, in [`ModelKind::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindErrors {
    pub mse: [f64; 5],
    pub mae: [f64; 5],
}

/// Kind with the smallest MSE compared at 12 significant digits; ties go
/// to the earlier kind in [`ModelKind::TIE_PRIORITY`].
pub fn select_winner(mse: &[f64; 5]) -> ModelKind {
    let mut best = ModelKind::TIE_PRIORITY[0];
    for kind in ModelKind::TIE_PRIORITY {
        if round12(mse[kind.index()]) < round12(mse[best.index()]) {
            best = kind;
        }
    }
    best
}

/// Score all five kinds on the test rows and pick the winner.
pub fn evaluate_and_select(predictions: &[(ModelKind, DVector<f64>)], y: &DVector<f64>) -> Result<(KindErrors, ModelKind)> {
    let mut errors = KindErrors {
        mse: [0.0; 5],
        mae: [0.0; 5],
    };
    for kind in ModelKind::ALL {
        let (_, pred) = predictions
            .iter()
            .find(|(k, _)| *k == kind)
            .ok_or_else(|| Error::MissingModel(kind.to_string()))?;
        errors.mse[kind.index()] = mse(pred, y);
        errors.mae[kind.index()] = mae(pred, y);
    }
    Ok((errors, select_winner(&errors.mse)))
}
