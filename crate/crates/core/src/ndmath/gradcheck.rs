use super::graph::{Graph, Var};
use super::params::ParamStore;
use super::tensor::Real;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Parameter name and flat index of the worst entry.
    pub worst: Option<(String, usize)>,
    pub entries_checked: usize,
}

/// Compare backward gradients to central finite differences for every
/// parameter entry. Relative error is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<T, F>(build_loss: F, params: &ParamStore<T>, eps: f64) -> Result<GradCheckReport>
where
    T: Real,
    F: for<'a> Fn(&mut Graph<'a, T>, &'a ParamStore<T>) -> Result<Var>,
{
    if !(1e-6..=1e-2).contains(&eps) {
        return Err(Error::Config(format!("grad_check eps {eps} outside [1e-6, 1e-2]")));
    }
    let analytic = {
        let mut g = Graph::new();
        let loss = build_loss(&mut g, params)?;
        g.backward(loss)?
    };

    let eval = |store: &ParamStore<T>| -> Result<f64> {
        let mut g = Graph::new();
        let loss = build_loss(&mut g, store)?;
        Ok(g.value(loss).item().to_f64().unwrap_or(f64::NAN))
    };

    let mut work = params.clone();
    let names: Vec<String> = params.names().map(str::to_owned).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: 0,
    };
    let step = T::lit(eps);
    for name in names {
        let n = params.get(&name)?.len();
        for i in 0..n {
            let orig = work.get(&name)?.data()[i];
            work.get_mut(&name)?.data_mut()[i] = orig + step;
            let plus = eval(&work)?;
            work.get_mut(&name)?.data_mut()[i] = orig - step;
            let minus = eval(&work)?;
            work.get_mut(&name)?.data_mut()[i] = orig;

            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic
                .get(&name)
                .map(|g| g.data()[i].to_f64().unwrap_or(f64::NAN))
                .unwrap_or(0.0);
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            report.entries_checked += 1;
            if rel > report.max_rel_error || rel.is_nan() {
                report.max_rel_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}
