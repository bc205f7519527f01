//! Finite-difference verification of analytic gradients.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::rng::SeedRng;

/// A named collection of flat parameter tensors that can be perturbed one
/// coordinate at a time. Only learnable tensors belong here.
pub trait ParamSet {
    type Scalar: Scalar;

    fn tensor_names(&self) -> Vec<String>;

    fn tensor_len(&self, name: &str) -> usize;

    fn get(&self, name: &str, idx: usize) -> Self::Scalar;

    fn set(&mut self, name: &str, idx: usize, v: Self::Scalar);
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub coords_checked: usize,
    /// Max relative error seen per tensor, in tensor-name order.
    pub per_tensor: Vec<(String, f64)>,
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients against central differences of `eval`.
///
/// Checks every coordinate of every tensor, or `samples_per_tensor` random
/// coordinates of each when set. Returns the max relative error
/// |analytic − central| / max(|analytic|, |central|, 1e-8) over checked
/// coordinates. `eval` must be a pure function of the parameters.
pub fn finite_diff_check<P, F, G>(
    params: &mut P,
    mut eval: F,
    analytic: G,
    epsilon: f64,
    samples_per_tensor: Option<usize>,
    seed: u64,
) -> Result<GradCheckReport>
where
    P: ParamSet,
    F: FnMut(&P) -> Result<P::Scalar>,
    G: Fn(&str, usize) -> P::Scalar,
{
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference epsilon {} outside [1e-7, 1e-3]",
            epsilon
        )));
    }
    let eps = P::Scalar::from_f64(epsilon);
    let mut rng = SeedRng::new(seed);
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        coords_checked: 0,
        per_tensor: Vec::new(),
    };

    for name in params.tensor_names() {
        let len = params.tensor_len(&name);
        let indices: Vec<usize> = match samples_per_tensor {
            Some(k) if k < len => {
                let mut all: Vec<usize> = (0..len).collect();
                rng.shuffle(&mut all);
                all.truncate(k);
                all.sort_unstable();
                all
            }
            _ => (0..len).collect(),
        };

        let mut tensor_max = 0.0f64;
        for idx in indices {
            let orig = params.get(&name, idx);
            params.set(&name, idx, orig + eps);
            let up = eval(params);
            params.set(&name, idx, orig - eps);
            let down = eval(params);
            params.set(&name, idx, orig);
            let (up, down) = (up?, down?);
            if !up.is_finite() || !down.is_finite() {
                return Err(Error::NonFinite {
                    context: format!("objective at perturbed {}[{}]", name, idx),
                });
            }
            let numeric = (up - down).as_f64() / (2.0 * epsilon);
            let a = analytic(&name, idx).as_f64();
            let e = rel_err(a, numeric);
            report.coords_checked += 1;
            if e > tensor_max {
                tensor_max = e;
            }
            if e > report.max_rel_err {
                report.max_rel_err = e;
                report.worst_tensor = name.clone();
                report.worst_index = idx;
            }
        }
        report.per_tensor.push((name, tensor_max));
    }
    Ok(report)
}
