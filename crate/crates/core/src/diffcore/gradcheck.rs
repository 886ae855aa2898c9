use super::{NdArray, Tape, Var};

/// Outcome of comparing tape gradients with central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheck {
    /// `max |analytic - numeric| / max(1, |analytic|)` over checked coordinates.
    pub max_rel_error: f64,
    /// Coordinate attaining the maximum.
    pub worst_index: usize,
    pub checked: usize,
    /// False when the function or its gradient produced a non-finite value.
    pub finite: bool,
}

impl GradCheck {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.finite && self.max_rel_error < tolerance
    }
}

fn eval<F>(f: &F, x: &NdArray<f64>) -> f64
where
    F: for<'t> Fn(&'t Tape<f64>, Var<'t, f64>) -> Var<'t, f64>,
{
    let tape = Tape::new();
    let v = f(&tape, tape.leaf(x.clone())).value();
    if v.is_scalar() {
        v.item()
    } else {
        f64::NAN
    }
}

/// Checks every coordinate of `x`.
pub fn finite_difference_check<F>(f: F, x: &NdArray<f64>, h: f64) -> GradCheck
where
    F: for<'t> Fn(&'t Tape<f64>, Var<'t, f64>) -> Var<'t, f64>,
{
    let all: Vec<usize> = (0..x.len()).collect();
    finite_difference_check_at(f, x, h, &all)
}

/// Checks only the listed coordinates; used for large parameter arrays.
pub fn finite_difference_check_at<F>(f: F, x: &NdArray<f64>, h: f64, coords: &[usize]) -> GradCheck
where
    F: for<'t> Fn(&'t Tape<f64>, Var<'t, f64>) -> Var<'t, f64>,
{
    assert!(h > 0.0, "finite difference step must be positive");
    let failed = |i| GradCheck {
        max_rel_error: f64::INFINITY,
        worst_index: i,
        checked: coords.len(),
        finite: false,
    };
    let tape = Tape::new();
    let leaf = tape.leaf(x.clone());
    let out = f(&tape, leaf);
    let analytic = match tape.backward(out) {
        Ok(g) => g.wrt(leaf),
        Err(_) => return failed(0),
    };
    if !out.value().is_finite() || !analytic.is_finite() {
        return failed(0);
    }
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst_index: 0,
        checked: coords.len(),
        finite: true,
    };
    let mut probe = x.clone();
    for &i in coords {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + h;
        let plus = eval(&f, &probe);
        probe.as_mut_slice()[i] = orig - h;
        let minus = eval(&f, &probe);
        probe.as_mut_slice()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return failed(i);
        }
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic.as_slice()[i];
        let err = (a - numeric).abs() / a.abs().max(1.0);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = i;
        }
    }
    report
}
