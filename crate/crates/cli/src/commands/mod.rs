//! One module per subcommand. Each `run` takes a validated config, writes
//! its artifacts through a [`RunContext`](crate::manifest::RunContext)
//! (which seals them into the manifest), and returns a one-screen summary
//! for stdout. Audit failures still write everything first.

pub mod constants;
pub mod convergence;
pub mod couple;
pub mod drift_check;
pub mod hitting;
pub mod simulate;
pub mod stationary;
pub mod validate;

use esq_core::SystemState;

/// Shortest round-tripping decimal; the same bits always print the same
/// bytes, which is what makes reruns byte-identical.
pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// The shared state row: `replica,time,n,x0,elapsed` with the elapsed
/// times semicolon-joined (empty field when idle).
pub(crate) fn state_row(out: &mut String, replica: usize, time: f64, x: &SystemState) {
    let elapsed = x
        .elapsed()
        .iter()
        .map(|&t| num(t))
        .collect::<Vec<_>>()
        .join(";");
    out.push_str(&format!(
        "{replica},{},{},{},{elapsed}\n",
        num(time),
        x.n(),
        num(x.x0())
    ));
}

pub(crate) const STATE_HEADER: &str = "replica,time,n,x0,elapsed\n";
