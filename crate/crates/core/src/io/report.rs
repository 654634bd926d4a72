use std::fmt::Write;

use serde::Serialize;

use crate::am::{rate_report, ConvergenceRecord, RateReport, SolveResult, Termination};

/// Pass/fail summary of the convergence checks. `None` when the run has too
/// few iterates to check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdicts {
    pub sufficient_decrease: Option<bool>,
    pub monotone: Option<bool>,
    pub global_rate_prefixes: Option<bool>,
    /// Heuristic only.
    pub local_rate_envelope: Option<bool>,
}

/// Everything a run produced apart from the trajectory itself.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub termination: Termination,
    pub degenerate_segment: Option<usize>,
    pub iterates: usize,
    pub delta: f64,
    pub initial_cost: f64,
    pub final_cost: f64,
    pub total_duration: f64,
    pub durations: Vec<f64>,
    pub notices: Vec<String>,
    pub verdicts: Verdicts,
    pub records: Vec<ConvergenceRecord>,
    pub rate: Option<RateReport>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "termination: {}", self.termination.as_str());
        if let Some(m) = self.degenerate_segment {
            let _ = writeln!(w, "degenerate segment: {m}");
        }
        for n in &self.notices {
            let _ = writeln!(w, "notice: {n}");
        }
        let _ = writeln!(w, "iterates: {}", self.iterates);
        let _ = writeln!(w, "cost: {:.12e} -> {:.12e}", self.initial_cost, self.final_cost);
        let _ = writeln!(w, "total duration: {:.9}", self.total_duration);
        let _ = writeln!(
            w,
            "\n{:>5}  {:>20}  {:>12}  {:>12}  {:>12}",
            "k", "J_k", "|grad|_F", "sigma_P", "decrease"
        );
        for r in &self.records {
            let res = r
                .decrease_residual
                .map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
            let _ = writeln!(
                w,
                "{:>5}  {:>20.12e}  {:>12.4e}  {:>12.4e}  {:>12}",
                r.iteration, r.cost, r.grad_norm, r.sigma_p, res
            );
        }
        let verdict = |v: Option<bool>| match v {
            Some(true) => "pass",
            Some(false) => "FAIL",
            None => "n/a",
        };
        let _ = writeln!(w);
        if let Some(rate) = &self.rate {
            let _ = writeln!(w, "M_c = max 4 sigma_P: {:.6e}", rate.m_c);
        }
        let v = &self.verdicts;
        let _ = writeln!(w, "sufficient decrease:        {}", verdict(v.sufficient_decrease));
        let _ = writeln!(w, "monotone cost:              {}", verdict(v.monotone));
        let _ = writeln!(w, "global rate (all prefixes): {}", verdict(v.global_rate_prefixes));
        let _ = writeln!(w, "local rate envelope:        {} (heuristic)", verdict(v.local_rate_envelope));
        if let Some(rate) = &self.rate {
            for k in &rate.decrease_violations {
                let _ = writeln!(w, "  decrease violated at k = {k}");
            }
            for k in &rate.monotonicity_violations {
                let _ = writeln!(w, "  cost increased at k = {k}");
            }
            for k in rate.prefix_violations() {
                let _ = writeln!(w, "  rate bound violated at K = {k}");
            }
        }
        out
    }
}

pub fn emit_report(result: &SolveResult) -> Report {
    let rate = rate_report(&result.records).ok();
    let verdicts = match &rate {
        Some(r) => Verdicts {
            sufficient_decrease: Some(r.decrease_violations.is_empty()),
            monotone: Some(r.monotonicity_violations.is_empty()),
            global_rate_prefixes: Some(r.prefix.iter().all(|p| p.passed)),
            local_rate_envelope: r.envelope.applicable.then_some(r.envelope.passed),
        },
        None => Verdicts {
            sufficient_decrease: None,
            monotone: None,
            global_rate_prefixes: None,
            local_rate_envelope: None,
        },
    };
    Report {
        termination: result.termination,
        degenerate_segment: result.degenerate_segment,
        iterates: result.records.len(),
        delta: result.delta,
        initial_cost: result.records.first().map_or(f64::NAN, |r| r.cost),
        final_cost: result.final_cost(),
        total_duration: result.total_duration(),
        durations: result.durations.to_vec(),
        notices: result.notices.iter().map(|n| n.to_string()).collect(),
        verdicts,
        records: result.records.clone(),
        rate,
    }
}
