use std::fmt::Write as _;

use wavehar_nn::metrics::{Confusion, Metrics};
use wavehar_nn::{Network, Sample};

use crate::error::Result;

/// Mean loss, macro metrics and the confusion matrix on one sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub loss: f64,
    pub metrics: Metrics,
    pub confusion: Confusion,
}

pub fn evaluate(net: &Network<f32>, samples: &[Sample]) -> Result<EvalReport> {
    let (loss, confusion) = wavehar_nn::evaluate(net, samples)?;
    for c in confusion.never_predicted() {
        log::warn!("class {c} is never predicted; its precision is reported as 0");
    }
    Ok(EvalReport {
        loss,
        metrics: confusion.metrics(),
        confusion,
    })
}

/// `actual\predicted` matrix with class names on both axes.
pub fn confusion_csv(confusion: &Confusion, class_names: &[String]) -> String {
    let name = |i: usize| class_names.get(i).cloned().unwrap_or_else(|| i.to_string());
    let k = confusion.n_classes();
    let mut out = String::from("actual\\predicted");
    for j in 0..k {
        write!(out, ",{}", name(j)).unwrap();
    }
    out.push('\n');
    for (i, row) in confusion.counts().iter().enumerate() {
        out.push_str(&name(i));
        for v in row {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn metrics_text(report: &EvalReport, n_samples: usize) -> String {
    let m = &report.metrics;
    let mut out = String::new();
    writeln!(out, "samples:   {n_samples}").unwrap();
    writeln!(out, "loss:      {:.6}", report.loss).unwrap();
    writeln!(out, "accuracy:  {:.6}", m.accuracy).unwrap();
    writeln!(out, "precision: {:.6} (macro average)", m.precision).unwrap();
    writeln!(out, "recall:    {:.6} (macro average)", m.recall).unwrap();
    writeln!(out, "f1:        {:.6}", m.f1).unwrap();
    let never = report.confusion.never_predicted();
    if !never.is_empty() {
        writeln!(out, "never predicted classes (precision 0): {never:?}").unwrap();
    }
    out
}
