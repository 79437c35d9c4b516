//! All twelve acceptance criteria at full budgets, one line each.
//!
//! `POLYLAB_SUITE=fast` switches to smoke-sized budgets; `POLYLAB_ONLY=3,7`
//! restricts the run to the listed criteria.

use polylab_verify::{run, Suite};

fn main() {
    let suite = match std::env::var("POLYLAB_SUITE").as_deref() {
        Ok("fast") => Suite::Fast,
        _ => Suite::Full,
    };
    let ids: Vec<u8> = match std::env::var("POLYLAB_ONLY") {
        Ok(s) => s.split(',').filter_map(|t| t.trim().parse().ok()).collect(),
        Err(_) => (1..=12).collect(),
    };
    println!("acceptance ({suite:?} suite)");
    let mut failed = Vec::new();
    for id in ids {
        let check = run(id, suite);
        println!("{check}");
        if !check.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
