//! A ten-expert simulated panel run through a full study, then the
//! realness tests on its responses.

use std::sync::Arc;
use std::time::Instant;

use cemis::demo::{demo_pool, DemoPoolSizes};
use cemis::domain::StudyConfig;
use cemis::report::{realness_inference, ReportInput};
use cemis::session::{Engine, SteppingClock};
use cemis::simulator::{simulate_panel, RunMode, SkillProfile};
use cemis::study::create_study;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let study = create_study(StudyConfig::new("sim", 2024), demo_pool(11, DemoPoolSizes::default()))?;
    let engine = Engine::in_memory(study, Arc::new(SteppingClock::new(1_700_000_000)));
    let start = Instant::now();
    for e in simulate_panel(&engine, &SkillProfile::reference_panel(77), RunMode::Concurrent)? {
        println!("{} ({} years): {} answers", e.expert_id, e.years_experience, e.answered);
    }
    println!("{} responses in {:.2?}\n", engine.responses().len(), start.elapsed());

    let (responses, profiles) = (engine.responses(), engine.profiles());
    let input = ReportInput { study: engine.study(), responses: &responses, profiles: &profiles };
    for row in realness_inference(input)? {
        print!(
            "{} {:<9} {:>4}/{:<4} p̂={:.4} CI [{:.4}, {:.4}]",
            row.procedure, row.subset, row.correct, row.n, row.p_hat, row.ci_lower, row.ci_upper
        );
        match (row.test, row.p_value) {
            (Some(test), Some(p)) => println!("  {test}: p = {p:.3e}"),
            _ => println!(),
        }
    }
    Ok(())
}
