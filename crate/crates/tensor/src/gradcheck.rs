//! Central-difference gradient checking.

use crate::{ParamId, ParamStore, Tape, TensorError, Var};

#[derive(Debug, Clone, Copy)]
pub struct GradCheck {
    pub h: f64,
    /// Check at most this many evenly spaced elements per parameter.
    pub max_per_param: Option<usize>,
    /// Lower bound on the denominator of the relative error.
    pub floor: f64,
}

impl Default for GradCheck {
    fn default() -> Self {
        GradCheck { h: 1e-6, max_per_param: None, floor: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn rel_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

impl GradCheck {
    /// Compares the tape gradient of `f` with finite differences in every
    /// parameter of `store`. `f` records a scalar loss.
    pub fn run(
        &self,
        store: &mut ParamStore,
        f: impl Fn(&mut Tape) -> Var,
    ) -> Result<GradCheckReport, TensorError> {
        let grads = {
            let mut t = Tape::new(store);
            let loss = f(&mut t);
            t.backward(loss)?
        };
        let eval = |s: &ParamStore| {
            let mut t = Tape::new(s);
            let l = f(&mut t);
            t.value(l).item()
        };
        let mut report = GradCheckReport { max_rel_error: 0.0, worst: None, checked: 0 };
        for k in 0..store.len() {
            let id = ParamId(k);
            let g = grads.get_or_zeros(store, id);
            let n = g.len();
            let stride = match self.max_per_param {
                Some(m) if m > 0 && n > m => n.div_ceil(m),
                _ => 1,
            };
            for i in (0..n).step_by(stride) {
                let orig = store.value(id).data[i];
                store.get_mut(id).value.data[i] = orig + self.h;
                let up = eval(store);
                store.get_mut(id).value.data[i] = orig - self.h;
                let down = eval(store);
                store.get_mut(id).value.data[i] = orig;
                let numeric = (up - down) / (2.0 * self.h);
                let e = rel_error(g.data[i], numeric, self.floor);
                report.checked += 1;
                if report.worst.is_none() || e > report.max_rel_error {
                    report.max_rel_error = e;
                    report.worst = Some((store.get(id).name.clone(), i));
                }
            }
        }
        Ok(report)
    }
}
