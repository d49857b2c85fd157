//! Serves a demo study over HTTP with one enrolled expert.
//!
//!     cargo run --example serve
//!     curl localhost:8080/api/sessions/<token>/task

use std::sync::Arc;

use cemis::api::{serve, AppState};
use cemis::demo::{write_demo_manifest, DemoPoolSizes};
use cemis::domain::StudyConfig;
use cemis::session::{Engine, SystemClock};
use cemis::storage::DataDir;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let manifest = write_demo_manifest(&dir.path().join("pool"), 0, DemoPoolSizes::default())?;
    let data = DataDir::new(dir.path().join("data"));
    data.ingest_manifest("demo", &manifest)?;
    let engine = Engine::create(&data, StudyConfig::new("demo", 1), Arc::new(SystemClock))?;
    let expert = engine.enroll(12)?;
    drop(engine);

    let admin = "change-me";
    let state = Arc::new(AppState::open(data, admin, Arc::new(SystemClock))?);
    println!("admin token: {admin}");
    println!("expert {} session token: {}", expert.expert_id, expert.session_token);
    serve(state, "127.0.0.1:8080").await?;
    Ok(())
}
