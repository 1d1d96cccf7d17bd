//! Plain-text tables for stdout.

use std::fmt::Write;

use decoherent_histories::consistency::{BruteForceVerdict, ProbabilityAssignment};
use decoherent_histories::{AnomalyCertificate, ConsistencyReport, DecoherenceFunctional, C64};

/// Larger functionals are left to the JSON report.
const MAX_PRINTED_HISTORIES: usize = 16;

pub fn complex(z: C64) -> String {
    // Avoid printing -0.
    let re = if z.re == 0.0 { 0.0 } else { z.re };
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    format!("{re:.6}{im:+.6}i")
}

pub fn functional(d: &DecoherenceFunctional) -> String {
    let mut s = String::new();
    let n = d.len();
    if n > MAX_PRINTED_HISTORIES {
        let _ = writeln!(s, "D(α′, α): {n}×{n}, see report");
        return s;
    }
    let labels: Vec<String> = d.labels().iter().map(ToString::to_string).collect();
    let first = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0).max(6);
    let _ = writeln!(s, "D(α′, α)  rows α′, columns α");
    let _ = write!(s, "{:first$}", "");
    for l in &labels {
        let _ = write!(s, "  {l:>20}");
    }
    s.push('\n');
    for (r, l) in labels.iter().enumerate() {
        let _ = write!(s, "{l:first$}");
        for c in 0..n {
            let _ = write!(s, "  {:>20}", complex(d.at(r, c)));
        }
        s.push('\n');
    }
    s
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn verdicts(r: &ConsistencyReport) -> String {
    let mut s = String::new();
    let pair = |p: &Option<decoherent_histories::consistency::IndexPair>| p.as_ref().map_or("-".into(), |p| p.to_string());
    let _ = writeln!(s, "{:<16} {:<5} {:>14}  extremal", "criterion", "holds", "value");
    let _ = writeln!(s, "{:<16} {:<5} {:>14.6e}  {}", "strong", yes(r.strong.holds), r.strong.max_off_diagonal, pair(&r.strong.extremal));
    let _ = writeln!(s, "{:<16} {:<5} {:>14.6e}  {}", "weak", yes(r.weak.holds), r.weak.max_off_diagonal, pair(&r.weak.extremal));
    let _ = writeln!(
        s,
        "{:<16} {:<5} {:>14.6e}  {}",
        "linear-positive",
        yes(r.linear_positive.holds),
        r.linear_positive.min_value,
        r.linear_positive.extremal
    );
    let _ = writeln!(s, "max |Im D| off-diagonal: {:.6e}", r.max_off_diagonal_imag);
    s
}

pub fn probabilities(standard: &ProbabilityAssignment, linear: &ProbabilityAssignment) -> String {
    let mut s = String::new();
    let width = standard.labels.iter().map(|l| l.to_string().chars().count()).max().unwrap_or(0).max(7);
    let _ = writeln!(s, "{:width$}  {:>14}  {:>14}", "history", "p (D diagonal)", "p (Re<C>)");
    for (i, l) in standard.labels.iter().enumerate() {
        let _ = writeln!(s, "{:width$}  {:>14.9}  {:>14.9}", l.to_string(), standard.raw[i], linear.raw[i]);
    }
    let _ = writeln!(s, "{:width$}  {:>14.9}  {:>14.9}", "total", standard.total, linear.total);
    s
}

pub fn brute_force(v: &BruteForceVerdict) -> String {
    match &v.failing {
        None => format!("sum rules: all {} pairwise merges pass\n", v.residuals.len()),
        Some((a, b)) => {
            let worst = v.worst.as_ref().map_or(f64::NAN, |w| w.residual);
            format!("sum rules: merging {a} and {b} fails, residual {worst:.6e}\n")
        }
    }
}

pub fn certificate(c: &AnomalyCertificate) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "certificate {}: {} = {:.12} at {}", c.kind, c.quantity, c.value, c.offending_label());
    for i in &c.ingredients {
        let _ = writeln!(s, "  ingredient {}: {} = {:.6e} ({})", i.name, i.criterion, i.value, if i.holds { "holds" } else { "fails" });
    }
    if let Some(k) = &c.kick {
        let couplings: Vec<String> = k.couplings.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(s, "  kick at event {}: λ = ({})", k.event, couplings.join(", "));
    }
    s
}
