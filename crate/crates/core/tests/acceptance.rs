//! Full acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are printed even when the suite passes.

use std::process::ExitCode;

use torsion_core::experiments::{acceptance_suite, Verdict};

fn main() -> ExitCode {
    let verdicts: Vec<Verdict> = acceptance_suite();
    for v in &verdicts {
        println!("{}", v.summary_line());
        if let Some(e) = &v.error {
            println!("  {} error: {e}", v.id);
        }
        for c in v.checks.iter().filter(|c| !c.passed) {
            println!("  {} failing check: {c}", v.id);
        }
    }
    let failed = verdicts.iter().filter(|v| !v.passed).count();
    if verdicts.len() != 13 || failed > 0 {
        println!("acceptance: {failed} of {} criteria failed", verdicts.len());
        return ExitCode::FAILURE;
    }
    println!("acceptance: all {} criteria passed", verdicts.len());
    ExitCode::SUCCESS
}
