use super::analytic::AnalyticFunction;
use super::functional::{TestedFunctional, WickFunctional};
use crate::error::{invalid, Error, Result};
use crate::field::FieldSample;
use crate::green::GreenOperator;

#[derive(Clone, Debug, PartialEq)]
pub struct GibbsEstimate {
    pub estimate: f64,
    pub ess: f64,
    /// Raw weights `e^{−⟨:V(γΦ):, g⟩}` per replica.
    pub weights: Vec<f64>,
}

/// Self-normalised importance estimate of `E_μ[O]` for the Gibbs measure with
/// Hamiltonian `⟨:V(γΦ_n):, g⟩`, from free-field replicas.
pub fn gibbs_reweight(
    fields: &[FieldSample],
    green: &GreenOperator,
    v: &AnalyticFunction,
    gamma: f64,
    g: &[f64],
    observable: &[f64],
) -> Result<GibbsEstimate> {
    if fields.len() < 2 {
        return Err(invalid("need at least two replicas"));
    }
    if observable.len() != fields.len() {
        return Err(invalid("one observable value per replica"));
    }
    let tf = TestedFunctional::new(green, &WickFunctional::new(v.clone(), gamma, g.to_vec()))?;
    let weights: Vec<f64> = fields.iter().map(|f| tf.eval(f).map(|h| (-h).exp())).collect::<Result<_>>()?;
    let top = weights.iter().copied().fold(0.0, f64::max);
    if !(top > 0.0) {
        return Err(Error::WeightUnderflow);
    }
    // Normalising by the largest weight makes equal weights exactly one.
    let norm: Vec<f64> = weights.iter().map(|w| w / top).collect();
    let total: f64 = norm.iter().sum();
    let estimate = norm.iter().zip(observable).map(|(w, o)| w * o).sum::<f64>() / total;
    let ess = total * total / norm.iter().map(|w| w * w).sum::<f64>();
    Ok(GibbsEstimate { estimate, ess, weights })
}
