use super::train::Trainable;
use super::{NnError, Result};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Floor for the relative-error denominator. Partials smaller than this are
/// compared on an absolute scale, where finite-difference truncation error
/// (order `FD_STEP^2`) would otherwise dominate.
const DENOMINATOR_FLOOR: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct GradMismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub failures: usize,
    pub max_relative_error: f64,
    /// Largest errors first, at most ten.
    pub worst: Vec<GradMismatch>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub fn describe_worst(&self) -> String {
        self.worst
            .iter()
            .take(3)
            .map(|m| {
                format!(
                    "{}[{}] analytic {:.6e} numeric {:.6e} (rel {:.2e})",
                    m.param, m.index, m.analytic, m.numeric, m.relative_error
                )
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

pub(crate) fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOMINATOR_FLOOR)
}

/// Compares every analytic partial of the loss at `(input, label)` with a
/// central finite difference. Fails with the worst offenders when any
/// relative error exceeds `tolerance`.
pub fn grad_check<M>(
    model: &M,
    input: &M::Input,
    label: usize,
    tolerance: f64,
) -> Result<GradCheckReport>
where
    M: Trainable + Clone,
{
    let mut grads = model.zero_gradients();
    model.accumulate_gradients(input, label, &mut grads)?;
    let mut probe = model.clone();
    let mut mismatches = Vec::new();
    let mut checked = 0;
    let mut max_relative_error: f64 = 0.0;
    let names: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();
    for (k, name) in names.iter().enumerate() {
        for idx in 0..grads.tensors[k].len() {
            let original = probe.params()[k].value[idx];
            probe.params_mut()[k].value[idx] = original + FD_STEP;
            let plus = probe.loss(input, label)?;
            probe.params_mut()[k].value[idx] = original - FD_STEP;
            let minus = probe.loss(input, label)?;
            probe.params_mut()[k].value[idx] = original;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let analytic = grads.tensors[k][idx];
            let rel = relative_error(analytic, numeric);
            max_relative_error = max_relative_error.max(rel);
            checked += 1;
            if rel > tolerance || rel.is_nan() {
                mismatches.push(GradMismatch {
                    param: name.clone(),
                    index: idx,
                    analytic,
                    numeric,
                    relative_error: rel,
                });
            }
        }
    }
    let failures = mismatches.len();
    mismatches.sort_by(|a, b| b.relative_error.total_cmp(&a.relative_error));
    mismatches.truncate(10);
    let report = GradCheckReport {
        checked,
        failures,
        max_relative_error,
        worst: mismatches,
    };
    if report.passed() {
        Ok(report)
    } else {
        Err(NnError::GradCheck {
            tolerance,
            report: Box::new(report),
        })
    }
}
