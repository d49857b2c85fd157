//! Every report kind for a simulated study, exported as CSV (or JSON with
//! `-- json`).

use std::sync::Arc;

use cemis::demo::{demo_pool, DemoPoolSizes};
use cemis::domain::StudyConfig;
use cemis::report::{export, render, ExportFormat, ReportInput, ReportKind};
use cemis::session::{Engine, SteppingClock};
use cemis::simulator::{simulate_panel, RunMode, SkillProfile};
use cemis::study::create_study;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let format: ExportFormat = std::env::args().nth(1).as_deref().unwrap_or("csv").parse()?;
    let study = create_study(StudyConfig::new("reports", 5), demo_pool(3, DemoPoolSizes::default()))?;
    let engine = Engine::in_memory(study, Arc::new(SteppingClock::new(1_700_000_000)));
    simulate_panel(&engine, &SkillProfile::reference_panel(9), RunMode::Sequential)?;

    let (responses, profiles) = (engine.responses(), engine.profiles());
    let input = ReportInput { study: engine.study(), responses: &responses, profiles: &profiles };
    for kind in ReportKind::ALL {
        let envelope = render(kind, input, chrono::Utc::now())?;
        println!("== {kind}");
        print!("{}", String::from_utf8(export(&envelope, format)?)?);
        for note in &envelope.footnotes {
            println!("# {note}");
        }
        println!();
    }
    Ok(())
}
