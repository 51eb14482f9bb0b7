//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Criteria 1 to 10 are the property suites. Criterion 11 arms each prescribed
//! fault in turn and requires some suite to fail under it.

use std::process::ExitCode;
use std::time::Instant;

use biorder::mutation::{with_mutation, Mutation};
use biorder::sample::DEFAULT_SEED;
use biorder::suites::{first_failure, SUITES};

fn main() -> ExitCode {
    let mut all_ok = true;
    for suite in SUITES {
        let outcome = suite(DEFAULT_SEED);
        all_ok &= outcome.passed;
        println!(
            "{}  {:>6.2}s / {}s",
            outcome.header(),
            outcome.elapsed.as_secs_f64(),
            outcome.budget.as_secs()
        );
        for msg in &outcome.failures {
            println!("    {msg}");
        }
    }

    let start = Instant::now();
    let default_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut missed = Vec::new();
    let mut caught_by = Vec::new();
    for m in Mutation::ALL {
        match with_mutation(m, || first_failure(DEFAULT_SEED)) {
            Some(outcome) => caught_by.push(format!("{m:?} -> criterion {}", outcome.id)),
            None => missed.push(format!("{m:?}")),
        }
    }
    std::panic::set_hook(default_hook);
    let ok = missed.is_empty();
    all_ok &= ok;
    println!(
        "{} criterion 11 {:<36} {:>6} faults  {:>6.2}s",
        if ok { "PASS" } else { "FAIL" },
        "mutation sensitivity",
        Mutation::ALL.len(),
        start.elapsed().as_secs_f64()
    );
    for line in &caught_by {
        println!("    {line}");
    }
    for m in &missed {
        println!("    {m} was not caught by any suite");
    }

    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
