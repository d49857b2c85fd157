//! Samples A1-A5 from a placeholder pool and prints the frozen plans.
//!
//!     cargo run --example plan_study -- 42

use cemis::demo::{demo_pool, DemoPoolSizes};
use cemis::domain::{GroupingPolicy, StudyConfig};
use cemis::study::create_study;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(42);
    let pool = demo_pool(0, DemoPoolSizes::default());

    for policy in [GroupingPolicy::HomogeneousSourceCategory, GroupingPolicy::HomogeneousSourceMixed] {
        let mut config = StudyConfig::new("example", seed);
        config.grouping_policy = policy;
        let study = create_study(config, pool.clone())?;
        println!("{}\n", study.summary());
    }
    Ok(())
}
