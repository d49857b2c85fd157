//! One expert's session: immutable answers, idempotent retries, ordering
//! and recovery from the on-disk log.

use std::sync::Arc;

use cemis::demo::{write_demo_manifest, DemoPoolSizes};
use cemis::domain::catalog::question_text;
use cemis::domain::{Answer, StudyConfig};
use cemis::session::{Engine, SteppingClock};
use cemis::storage::DataDir;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let manifest = write_demo_manifest(&dir.path().join("pool"), 1, DemoPoolSizes::default())?;
    let data = DataDir::new(dir.path().join("data"));
    data.ingest_manifest("walk", &manifest)?;
    let clock = Arc::new(SteppingClock::new(1_700_000_000));
    let engine = Engine::create(&data, StudyConfig::new("walk", 7), clock.clone())?;
    let expert = engine.enroll(15)?;
    let token = &expert.session_token;
    println!("enrolled {}", expert.expert_id);

    for _ in 0..3 {
        let next = engine.next_task(token)?;
        let task = next.task().expect("session is active");
        println!("{} [{}] {}", task.task_id, task.kind.label(), question_text(task.procedure, task.kind)?);
        for (i, option) in task.options.iter().enumerate() {
            println!("  {i}: {option}");
        }
        let answer = if task.multi_select { Answer::Multi(vec![0, 1]) } else { Answer::Single(0) };
        let receipt = engine.submit(token, &task.task_id, &answer)?;
        println!(
            "  -> {} (progress {}/{})",
            receipt.response_id,
            receipt.next.progress().answered,
            receipt.next.progress().total
        );
    }

    let first = engine.responses()[0].clone();
    let retry = engine.submit(token, &first.task_id, &first.answer)?;
    println!("retry of {}: replayed = {}", first.task_id, retry.replayed);
    let change = engine.submit(token, &first.task_id, &Answer::Single(1)).unwrap_err();
    println!("changing it: {}: {change}", change.category());

    drop(engine);
    let reopened = Engine::open(&data, "walk", clock)?;
    println!("after reopen: {:?}", reopened.state(token)?.progress);
    Ok(())
}
