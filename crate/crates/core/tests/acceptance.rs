//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Tolerances are the constants below.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tower::ServiceExt;

use cemis::api::{router, AppState, ADMIN_HEADER};
use cemis::demo::{demo_pool, write_demo_manifest, DemoPoolSizes};
use cemis::domain::{
    Answer, Category, ExpertId, GroupingPolicy, Payload, Procedure, ProcedureCounts, Provenance, Question, Response,
    Source, StudyConfig, TaskId,
};
use cemis::report::{render, Cell, ReportInput, ReportKind};
use cemis::session::{Engine, EngineError, NextTask, SteppingClock};
use cemis::simulator::{simulate_panel, Rater, RunMode, SkillProfile};
use cemis::stats::{
    binom_test, chi2_gof, confusion_from_log, metrics, round2, wald_ci_from_rate, ConfusionCounts, Sidedness,
};
use cemis::storage::DataDir;
use cemis::study::create_study;

/// Wald bounds must equal the published bounds after rounding to 2 dp.
const WALD_CASES: [(f64, u64, [f64; 2]); 3] =
    [(0.65, 250, [0.59, 0.71]), (0.466, 500, [0.42, 0.51]), (0.664, 500, [0.62, 0.70])];
const WALD_MAX_RUNTIME: Duration = Duration::from_millis(1);
const BINOM_LOWER_RANGE: (f64, f64) = (0.06, 0.08);
const BINOM_TWO_SIDED_RANGE: (f64, f64) = (5e-14, 5e-13);
const ORACLE_REL_TOL: f64 = 1e-9;
const SAMPLING_SEEDS: usize = 100;
const CONVERGENCE_SIGMAS: f64 = 3.0;
const CONVERGENCE_MAX_RUNTIME: Duration = Duration::from_secs(60);
const METRIC_LOGS: usize = 1000;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 7] = [
        ("wald_ci_reproduction", wald_ci_reproduction),
        ("exact_binomial", exact_binomial),
        ("chi_square_oracle", chi_square_oracle),
        ("sampling_structure", sampling_structure),
        ("protocol_integrity", protocol_integrity),
        ("statistical_convergence", statistical_convergence),
        ("metric_oracle", metric_oracle),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(format!("panicked: {}", e.downcast_ref::<String>().cloned().unwrap_or_else(|| format!("{e:?}"))))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.2}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} ({secs:.2}s): {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

// ---------------------------------------------------------------- intervals

fn wald_ci_reproduction() -> Outcome {
    let mut lines = Vec::new();
    let mut misses = Vec::new();
    for (p_hat, n, want) in WALD_CASES {
        let start = Instant::now();
        let ci = wald_ci_from_rate(p_hat, n, 0.95).map_err(|e| e.to_string())?;
        let took = start.elapsed();
        let got = [round2(ci.lower), round2(ci.upper)];
        let line = format!(
            "p={p_hat} n={n} -> [{:.4}, {:.4}] ~ [{:.2}, {:.2}] want [{:.2}, {:.2}]",
            ci.lower, ci.upper, got[0], got[1], want[0], want[1]
        );
        if got != want || took > WALD_MAX_RUNTIME {
            misses.push(format!("{line} in {took:?}"));
        }
        lines.push(line);
    }
    if misses.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(misses.join("; "))
    }
}

// ---------------------------------------------------------------- binomial

/// Exact binomial pmf numerators over a common denominator for p0 = a/b:
/// C(n,i) a^i (b-a)^(n-i), denominator b^n.
fn exact_pmf(n: u64, a: u64, b: u64) -> (Vec<BigUint>, BigUint) {
    let mut terms = Vec::with_capacity(n as usize + 1);
    let mut binom = BigUint::one();
    for i in 0..=n {
        if i > 0 {
            binom = binom * BigUint::from(n - i + 1) / BigUint::from(i);
        }
        terms.push(&binom * BigUint::from(a).pow(i as u32) * BigUint::from(b - a).pow((n - i) as u32));
    }
    (terms, BigUint::from(b).pow(n as u32))
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    // scale so the quotient carries ~128 significant bits
    let shift = (den.bits() as i64 - num.bits() as i64 + 128).max(0) as u64;
    let q = (num << shift) / den;
    q.to_f64().expect("finite") * 2f64.powi(-(shift as i32))
}

fn oracle_binom(k: u64, n: u64, a: u64, b: u64, sidedness: Sidedness) -> f64 {
    let (terms, den) = exact_pmf(n, a, b);
    let k = k as usize;
    let num: BigUint = match sidedness {
        Sidedness::OneSidedLower => terms[..=k].iter().sum(),
        Sidedness::UpperTail => terms[k..].iter().sum(),
        Sidedness::TwoSided => terms.iter().filter(|t| **t <= terms[k]).sum(),
    };
    ratio(&num, &den).min(1.0)
}

fn exact_binomial() -> Outcome {
    let lower = binom_test(233, 500, 0.5, Sidedness::OneSidedLower).map_err(|e| e.to_string())?.p_value;
    let two = binom_test(332, 500, 0.5, Sidedness::TwoSided).map_err(|e| e.to_string())?.p_value;
    check(BINOM_LOWER_RANGE.0 <= lower && lower <= BINOM_LOWER_RANGE.1, || format!("one-sided p = {lower:e}"))?;
    check(BINOM_TWO_SIDED_RANGE.0 <= two && two <= BINOM_TWO_SIDED_RANGE.1, || format!("two-sided p = {two:e}"))?;

    let mut worst = 0.0f64;
    let mut cases = vec![(233, 500, 1, 2, Sidedness::OneSidedLower), (332, 500, 1, 2, Sidedness::TwoSided)];
    let mut rng = ChaCha8Rng::seed_from_u64(0xB1);
    for _ in 0..200 {
        let n = rng.random_range(1..=300u64);
        let k = rng.random_range(0..=n);
        let (a, b) = [(1, 2), (1, 4), (3, 10), (7, 8)][rng.random_range(0..4)];
        let s = [Sidedness::OneSidedLower, Sidedness::TwoSided, Sidedness::UpperTail][rng.random_range(0..3)];
        cases.push((k, n, a, b, s));
    }
    for (k, n, a, b, s) in &cases {
        let got = binom_test(*k, *n, *a as f64 / *b as f64, *s).map_err(|e| e.to_string())?.p_value;
        let want = oracle_binom(*k, *n, *a, *b, *s);
        let err = rel_err(got, want);
        check(err <= ORACLE_REL_TOL, || format!("k={k} n={n} p0={a}/{b} {s:?}: got {got:e}, exact {want:e}"))?;
        worst = worst.max(err);
    }
    Ok(format!(
        "p(233/500, lower) = {lower:.6}, p(332/500, two-sided) = {two:.4e}; {} cases vs exact rational sums, worst rel err {worst:.1e}",
        cases.len()
    ))
}

// ---------------------------------------------------------------- chi-square

fn chi_square_oracle() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/chi2_oracle.json");
    let cases: Vec<Value> =
        serde_json::from_str(&std::fs::read_to_string(&path).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    check(cases.len() == 100, || format!("{} oracle cases", cases.len()))?;
    let mut worst = 0.0f64;
    let mut dfs = BTreeSet::new();
    for (i, c) in cases.iter().enumerate() {
        let nums = |key: &str| -> Vec<f64> { c[key].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect() };
        let want_stat: f64 = c["statistic"].as_str().unwrap().parse().unwrap();
        let want_p: f64 = c["p_value"].as_str().unwrap().parse().unwrap();
        let r = chi2_gof(&nums("observed"), &nums("expected")).map_err(|e| format!("case {i}: {e}"))?;
        check(r.df == Some(c["df"].as_u64().unwrap() as u32), || format!("case {i}: df {:?}", r.df))?;
        dfs.insert(r.df.unwrap());
        let err = rel_err(r.statistic, want_stat).max(rel_err(r.p_value, want_p));
        check(err <= ORACLE_REL_TOL, || {
            format!("case {i}: stat {} vs {want_stat}, p {:e} vs {want_p:e}", r.statistic, r.p_value)
        })?;
        worst = worst.max(err);
    }
    Ok(format!(
        "100 cases, df {}..={}, worst rel err {worst:.1e}; the published A1 p-value is not checked (needs unpublished per-expert counts)",
        dfs.first().unwrap(),
        dfs.last().unwrap()
    ))
}

// ---------------------------------------------------------------- sampling

fn sampling_structure() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5A);
    for _ in 0..SAMPLING_SEEDS {
        let (pool_seed, seed): (u64, u64) = (rng.random(), rng.random());
        let pool = demo_pool(pool_seed, DemoPoolSizes::default());
        let mut config = StudyConfig::new("acc", seed);
        config.grouping_policy = GroupingPolicy::HomogeneousSourceMixed;
        let study = create_study(config.clone(), pool.clone()).map_err(|e| format!("seed {seed}: {e}"))?;
        let ctx = |m: String| format!("seed {seed}: {m}");
        let plans = study.plans();
        let rec = |id| study.record(id).unwrap();

        let a1: Vec<_> = plans.a1.images.iter().map(rec).collect();
        check(a1.len() == 50, || ctx(format!("A1 has {} images", a1.len())))?;
        for (name, count) in [
            ("real", a1.iter().filter(|r| r.source == Source::Real).count()),
            ("TIDE-II", a1.iter().filter(|r| r.provenance() == Provenance::Synthetic(config.target_generator)).count()),
            ("normal", a1.iter().filter(|r| r.category == Category::Normal).count()),
            ("KID", a1.iter().filter(|r| r.origin == cemis::domain::Origin::Kid).count()),
        ] {
            check(count == 25, || ctx(format!("A1 {name} margin {count}")))?;
        }
        for (label, set, source) in [("A2", &plans.a2, Source::Synthetic), ("A3", &plans.a3, Source::Real)] {
            let rs: Vec<_> = set.images.iter().map(rec).collect();
            check(rs.len() == 50, || ctx(format!("{label} has {} images", rs.len())))?;
            check(rs.iter().all(|r| r.source == source), || ctx(format!("{label} mixes sources")))?;
            let normal = rs.iter().filter(|r| r.category == Category::Normal).count();
            let kid = rs.iter().filter(|r| r.origin == cemis::domain::Origin::Kid).count();
            check(normal == 25 && kid == 25, || ctx(format!("{label} margins normal={normal} KID={kid}")))?;
        }
        check(plans.a4.pairs.len() == 50, || ctx(format!("{} A4 pairs", plans.a4.pairs.len())))?;
        for p in &plans.a4.pairs {
            let (x, y) = (rec(&p.slot1), rec(&p.slot2));
            check(x.source != y.source && x.category == y.category && x.origin == y.origin, || {
                ctx(format!("unmatched pair {} / {}", x.image_id, y.image_id))
            })?;
        }
        let groups = &plans.a5.groups.groups;
        check(groups.len() == 60, || ctx(format!("{} A5 groups", groups.len())))?;
        let mut per_source: BTreeMap<Provenance, usize> = BTreeMap::new();
        for g in groups {
            check(g.images.len() == 10, || ctx(format!("group of {}", g.images.len())))?;
            check(g.images.iter().all(|i| rec(i).provenance() == g.label.source), || ctx("mixed-source group".into()))?;
            *per_source.entry(g.label.source).or_default() += 1;
        }
        check(per_source.get(&Provenance::Real) == Some(&30), || ctx(format!("{per_source:?}")))?;
        check(per_source.len() == 7 && per_source.iter().all(|(s, n)| *s == Provenance::Real || *n == 5), || {
            ctx(format!("{per_source:?}"))
        })?;
        let again = create_study(config, pool).map_err(|e| e.to_string())?;
        check(again.plan_bytes() == study.plan_bytes(), || ctx("plans differ across identical runs".into()))?;
    }
    Ok(format!("{SAMPLING_SEEDS} seeds: A1 50 (25/25 margins), A2/A3 50, A4 50 matched pairs, A5 60 groups (30 real, 5 x 6 generators), byte-identical reruns"))
}

// ---------------------------------------------------------------- protocol

fn protocol_integrity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let manifest =
        write_demo_manifest(&dir.path().join("pool"), 3, DemoPoolSizes::default()).map_err(|e| e.to_string())?;
    let data = DataDir::new(dir.path().join("data"));
    data.ingest_manifest("proto", &manifest).map_err(|e| e.to_string())?;
    let clock = Arc::new(SteppingClock::new(1_700_000_000));
    let engine = Engine::create(&data, StudyConfig::new("proto", 21), clock.clone()).map_err(|e| e.to_string())?;
    let profiles = SkillProfile::reference_panel(5);
    let tokens: Vec<String> = profiles[..3]
        .iter()
        .map(|p| engine.enroll(p.years_experience.into()).map(|e| e.session_token))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    for (token, profile) in tokens.iter().zip(&profiles) {
        let mut rater = Rater::new(profile, 21);
        for _ in 0..40 {
            let NextTask::Task { task, .. } = engine.next_task(token).map_err(|e| e.to_string())? else { break };
            engine.submit(token, &task.task_id, &rater.answer(engine.study(), &task)).map_err(|e| e.to_string())?;
        }
    }
    let log_path = data.log_path("proto").map_err(|e| e.to_string())?;
    let log_len = || std::fs::metadata(&log_path).map(|m| m.len()).unwrap_or(0);

    // a changed answer to an accepted task is refused and nothing moves
    let first = engine.responses()[0].clone();
    let token = &tokens[0];
    let task = engine.study().task(&first.task_id).unwrap().clone();
    let other = Answer::Single((first.answer.single().unwrap() + 1) % task.options.len());
    let before = log_len();
    let err = engine.submit(token, &first.task_id, &other).unwrap_err();
    check(matches!(err, EngineError::Immutable(_)), || format!("changed answer gave {err:?}"))?;
    check(engine.responses()[0] == first && log_len() == before, || "stored answer or log changed".into())?;
    let retry = engine.submit(token, &first.task_id, &first.answer).map_err(|e| e.to_string())?;
    check(retry.replayed && retry.response_id == first.response_id && log_len() == before, || {
        "retry not idempotent".into()
    })?;

    // skipping ahead is refused
    let current = engine.next_task(token).map_err(|e| e.to_string())?.task().unwrap().clone();
    let ahead = engine.study().tasks().iter().find(|t| t.procedure == Procedure::A5).unwrap().task_id.clone();
    let err = engine.submit(token, &ahead, &Answer::Single(0)).unwrap_err();
    check(matches!(err, EngineError::Ordering { .. }), || format!("out-of-order gave {err:?}"))?;
    check(engine.next_task(token).map_err(|e| e.to_string())?.task() == Some(&current), || "cursor moved".into())?;

    // crash: no shutdown path runs; state must come back from disk alone
    let snapshot = engine.snapshot();
    std::mem::forget(engine);
    let reopened = Engine::open(&data, "proto", clock).map_err(|e| e.to_string())?;
    check(reopened.snapshot() == snapshot, || "replayed state differs from pre-crash state".into())?;
    check(reopened.next_task(token).map_err(|e| e.to_string())?.task() == Some(&current), || "cursor lost".into())?;
    let replayed_count = snapshot.log.len();

    let leaks = wire_schema_scan()?;
    Ok(format!(
        "changed answer refused (log untouched), identical retry replayed, skip-ahead refused, {replayed_count} responses replayed identically after crash; {leaks}"
    ))
}

/// Drives one expert through a whole study over HTTP and scans every task
/// body for ground-truth fields or values.
fn wire_schema_scan() -> Outcome {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(|e| e.to_string())?;
    rt.block_on(async {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let manifest =
            write_demo_manifest(&dir.path().join("pool"), 4, DemoPoolSizes::default()).map_err(|e| e.to_string())?;
        let data = DataDir::new(dir.path().join("data"));
        data.ingest_manifest("wire", &manifest).map_err(|e| e.to_string())?;
        let state =
            Arc::new(AppState::open(data, "admin", Arc::new(SteppingClock::new(0))).map_err(|e| e.to_string())?);
        let app = router(state.clone());
        let call = |req: Request<Body>| {
            let app = app.clone();
            async move {
                let resp = app.oneshot(req).await.unwrap();
                let status = resp.status();
                let bytes = resp.into_body().collect().await.unwrap().to_bytes();
                (status, serde_json::from_slice::<Value>(&bytes).unwrap_or(Value::Null))
            }
        };
        let admin_post = |uri: &str, body: Value| {
            Request::post(uri)
                .header(ADMIN_HEADER, "admin")
                .header("content-type", "application/json")
                .body(Body::from(body.to_string()))
                .unwrap()
        };
        let (s, _) = call(admin_post("/api/studies", serde_json::to_value(StudyConfig::new("wire", 8)).unwrap())).await;
        check(s == StatusCode::CREATED, || format!("create study: {s}"))?;
        let (s, enrolled) =
            call(admin_post("/api/studies/wire/experts", serde_json::json!({"years_experience": 14}))).await;
        check(s == StatusCode::CREATED, || format!("enroll: {s}"))?;
        let token = enrolled["session_token"].as_str().unwrap().to_string();

        let engine = state.engine("wire").map_err(|e| e.message)?;
        let study = engine.study();
        let forbidden_keys =
            ["source", "generator", "category", "lesion", "origin", "path", "image_id", "truth", "item_index"];
        let mut forbidden_values: HashSet<String> = HashSet::new();
        for r in study.pool().records() {
            forbidden_values.insert(r.image_id.to_string());
            forbidden_values.insert(r.path.display().to_string());
            forbidden_values.insert(r.provenance().label().to_string());
            forbidden_values.insert(r.origin.label().to_string());
            forbidden_values.insert(r.category.label().to_string());
        }
        let profile = SkillProfile::reference(14, 1);
        let mut rater = Rater::new(&profile, 8);
        let (_, mut next) =
            call(Request::get(format!("/api/sessions/{token}/task")).body(Body::empty()).unwrap()).await;
        let mut scanned = 0;
        while next["status"] == "active" {
            let mut task = next["task"].clone();
            let obj = task.as_object_mut().unwrap();
            // protocol wording is public; everything else must be opaque
            for public in ["options", "question", "notice"] {
                obj.remove(public);
            }
            let mut leaks = Vec::new();
            scan(&task, &forbidden_keys, &forbidden_values, &mut leaks);
            check(leaks.is_empty(), || format!("{} leaks {leaks:?}", next["task"]["task_id"]))?;
            scanned += 1;

            let id = TaskId(next["task"]["task_id"].as_str().unwrap().to_string());
            let answer = rater.answer(study, study.task(&id).unwrap());
            let body = serde_json::json!({"task_id": id, "answer": answer});
            let req = Request::post(format!("/api/sessions/{token}/responses"))
                .header("content-type", "application/json")
                .body(Body::from(body.to_string()))
                .unwrap();
            let (s, receipt) = call(req).await;
            check(s == StatusCode::OK, || format!("submit {id}: {s} {receipt}"))?;
            next = receipt["next"].clone();
        }
        check(scanned == study.tasks().len(), || format!("scanned {scanned} of {}", study.tasks().len()))?;
        Ok(format!("{scanned} wire tasks of a full session carry no ground-truth keys or values"))
    })
}

fn scan(v: &Value, keys: &[&str], values: &HashSet<String>, leaks: &mut Vec<String>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                if keys.contains(&k.as_str()) {
                    leaks.push(format!("key {k}"));
                }
                scan(x, keys, values, leaks);
            }
        }
        Value::Array(a) => a.iter().for_each(|x| scan(x, keys, values, leaks)),
        Value::String(s) if values.contains(s) => leaks.push(format!("value {s}")),
        _ => {}
    }
}

// ---------------------------------------------------------------- convergence

fn num(c: &Cell) -> Option<f64> {
    match c {
        Cell::Num(x) => *x,
        _ => None,
    }
}

fn text(c: &Cell) -> &str {
    match c {
        Cell::Text(s) => s,
        _ => "",
    }
}

fn statistical_convergence() -> Outcome {
    let start = Instant::now();
    let study = create_study(StudyConfig::new("conv", 2024), demo_pool(11, DemoPoolSizes::default()))
        .map_err(|e| e.to_string())?;
    let engine = Engine::in_memory(study, Arc::new(SteppingClock::new(1_700_000_000)));
    let panel = SkillProfile::reference_panel(77);
    simulate_panel(&engine, &panel, RunMode::Concurrent).map_err(|e| e.to_string())?;
    let (responses, profiles) = (engine.responses(), engine.profiles());
    let input = ReportInput { study: engine.study(), responses: &responses, profiles: &profiles };
    let t1 = render(ReportKind::Table1, input, chrono::Utc::now()).map_err(|e| e.to_string())?;
    let t2 = render(ReportKind::Table2, input, chrono::Utc::now()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let p = &panel[0];
    let experts = panel.len() as f64;
    // (label, observed mean in percent, configured rate, pooled judgments)
    let mut checks: Vec<(String, Option<f64>, f64, f64)> = Vec::new();
    let t1_row = |proc: &str| t1.rows.iter().find(|r| text(&r[0]) == proc).unwrap();
    let a1 = t1_row("A1");
    checks.push((
        "table1 A1 accuracy".into(),
        num(&a1[1]),
        (p.p_correct_real + p.p_correct_synth) / 2.0,
        50.0 * experts,
    ));
    checks.push(("table1 A1 sensitivity".into(), num(&a1[3]), p.p_correct_real, 25.0 * experts));
    checks.push(("table1 A1 specificity".into(), num(&a1[5]), p.p_correct_synth, 25.0 * experts));
    checks.push(("table1 A2 accuracy".into(), num(&t1_row("A2")[1]), p.p_correct_synth, 50.0 * experts));
    checks.push(("table1 A3 accuracy".into(), num(&t1_row("A3")[1]), p.p_correct_real, 50.0 * experts));
    checks.push(("table1 A4 accuracy".into(), num(&t1_row("A4")[1]), p.p_pair, 50.0 * experts));
    for (proc, ty) in [("A1", "total"), ("A2", "total"), ("A3", "total"), ("A4", "real"), ("A4", "synthetic")] {
        let row = t2
            .rows
            .iter()
            .find(|r| text(&r[0]) == proc && text(&r[1]) == ty && text(&r[2]) == "all")
            .ok_or_else(|| format!("table2 has no {proc}/{ty}/all row"))?;
        let label = format!("table2 {proc} {ty}");
        checks.push((format!("{label} accuracy"), num(&row[3]), (p.sens_abn + p.spec_abn) / 2.0, 50.0 * experts));
        checks.push((format!("{label} sensitivity"), num(&row[5]), p.sens_abn, 25.0 * experts));
        checks.push((format!("{label} specificity"), num(&row[7]), p.spec_abn, 25.0 * experts));
    }
    let mut misses = Vec::new();
    let mut worst = 0.0f64;
    for (label, got, q, n) in &checks {
        let Some(got) = got else {
            misses.push(format!("{label}: NA"));
            continue;
        };
        let se = (q * (1.0 - q) / n).sqrt();
        let z = (got / 100.0 - q).abs() / se;
        worst = worst.max(z);
        if z > CONVERGENCE_SIGMAS {
            misses.push(format!("{label}: {got:.2}% vs {:.2}% ({z:.2} SE)", q * 100.0));
        }
    }
    if elapsed > CONVERGENCE_MAX_RUNTIME {
        misses.push(format!("run took {elapsed:?}"));
    }
    if misses.is_empty() {
        Ok(format!(
            "{} means within {CONVERGENCE_SIGMAS} SE (worst {worst:.2} SE); {} responses in {elapsed:.2?}",
            checks.len(),
            responses.len()
        ))
    } else {
        Err(misses.join("; "))
    }
}

// ---------------------------------------------------------------- metric oracle

/// Independent recount straight from the pool and the option labels.
fn recount(study: &cemis::study::Study, log: &[Response], question: Question) -> BTreeMap<ExpertId, [u64; 4]> {
    let mut out: BTreeMap<ExpertId, [u64; 4]> = BTreeMap::new();
    for r in log {
        let task = study.task(&r.task_id).unwrap();
        let label = |i: usize| task.options[i];
        let Answer::Single(choice) = r.answer else { continue };
        let mut calls: Vec<(bool, bool)> = Vec::new(); // (truth positive, called positive)
        let kind = task.kind.label();
        match (&task.payload, kind, question) {
            (Payload::Single { image }, "T1", Question::Realness) => {
                calls.push((study.record(image).unwrap().source == Source::Real, label(choice) == "Real"));
            }
            (Payload::Pair { slot1, slot2 }, "T1", Question::Realness) => {
                let first = label(choice) == "Image 1";
                calls.push((study.record(slot1).unwrap().source == Source::Real, first));
                calls.push((study.record(slot2).unwrap().source == Source::Real, !first));
            }
            (Payload::Single { image: img }, "T4", Question::Abnormality)
            | (Payload::Pair { slot1: img, .. }, "T4a", Question::Abnormality)
            | (Payload::Pair { slot2: img, .. }, "T4b", Question::Abnormality) => {
                calls.push((study.record(img).unwrap().category == Category::Abnormal, label(choice) != "Normal"));
            }
            _ => {}
        }
        for (truth, called) in calls {
            let c = out.entry(r.expert_id.clone()).or_default();
            match (truth, called) {
                (true, true) => c[0] += 1,
                (false, true) => c[1] += 1,
                (false, false) => c[2] += 1,
                (true, false) => c[3] += 1,
            }
        }
    }
    out
}

fn metric_oracle() -> Outcome {
    let mut config = StudyConfig::new("oracle", 5);
    config.counts = ProcedureCounts {
        a1_images: 8,
        a2_images: 4,
        a3_images: 4,
        a4_pairs: 4,
        a5_group_size: 2,
        a5_real_images: 4,
        a5_images_per_generator: 4,
        a5_generators: vec![cemis::domain::Generator::TideII],
    };
    let study = create_study(config, demo_pool(2, DemoPoolSizes { real_per_cell: 12, synthetic_per_cell: 8 }))
        .map_err(|e| e.to_string())?;
    let tasks = study.tasks();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0AC1E);
    let mut judged = 0u64;
    for n in 0..METRIC_LOGS {
        let experts = rng.random_range(1..=4usize);
        let len = rng.random_range(1..=60usize);
        let mut seen = HashSet::new();
        let mut log = Vec::new();
        for _ in 0..len {
            let e = ExpertId::new(format!("E{:02}", rng.random_range(1..=experts)));
            let t = &tasks[rng.random_range(0..tasks.len())];
            if !seen.insert((e.clone(), t.task_id.clone())) {
                continue;
            }
            let answer = if t.multi_select {
                let mut picks: Vec<usize> = (0..t.options.len()).filter(|_| rng.random_bool(0.4)).collect();
                if picks.is_empty() {
                    picks.push(0);
                }
                Answer::Multi(picks)
            } else {
                Answer::Single(rng.random_range(0..t.options.len()))
            };
            log.push(Response {
                response_id: format!("r{}", log.len()),
                study_id: "oracle".into(),
                expert_id: e,
                task_id: t.task_id.clone(),
                answer,
                answered_at: chrono::DateTime::UNIX_EPOCH,
            });
        }
        for question in [Question::Realness, Question::Abnormality] {
            let tally = confusion_from_log(&log, &study, question, |_| true).map_err(|e| e.to_string())?;
            let want = recount(&study, &log, question);
            let got: BTreeMap<ExpertId, [u64; 4]> =
                tally.per_expert.iter().map(|(e, c)| (e.clone(), [c.tp, c.fp, c.tn, c.fn_])).collect();
            check(got == want, || format!("log {n} {question:?}: {got:?} vs {want:?}"))?;
            for (e, [tp, fp, tn, fn_]) in &want {
                judged += tp + fp + tn + fn_;
                let m = metrics(&ConfusionCounts::new(*tp, *fp, *tn, *fn_)).map_err(|e| e.to_string())?;
                let total = (tp + fp + tn + fn_) as f64;
                let sens = (tp + fn_ > 0).then(|| *tp as f64 / (tp + fn_) as f64);
                let specificity = (tn + fp > 0).then(|| *tn as f64 / (tn + fp) as f64);
                let ok =
                    m.accuracy == (tp + tn) as f64 / total && m.sensitivity == sens && m.specificity == specificity;
                check(ok, || format!("log {n} {e} {question:?}: {m:?}"))?;
            }
        }
    }
    Ok(format!("{METRIC_LOGS} random logs, {judged} judgments, per-expert counts and metrics identical to the recount"))
}
