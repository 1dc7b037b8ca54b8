//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the verdict lines always reach the terminal.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ml5g_core::assoc::{
    default_sources, evaluate_fig5, handle_request, nn_associate_detailed, placement_order, run_training_phase,
    serve_tick, NnPredictor, ProductionScenario, StaEvent, TickOutcome,
};
use ml5g_core::mlfo::{instantiate, parse_intent, Action, HostRegistry, InstanceState, LoggedEvent, EXAMPLE_INTENT};
use ml5g_core::nn::{gradient_check, MlpModel, NormSchema, Sample};
use ml5g_core::pipeline::{collect, content_hash, over_cap, preprocess, DataSource, FailureMode, LiveNetwork};
use ml5g_core::sandbox::DivergenceKnobs;
use ml5g_core::underlay::{
    compute_throughput, generate_deployment, ssf_associate, water_fill, AssociationMap, DensityClass, RadioConfig,
    ThroughputReport,
};

type Verdict = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    check(took <= limit, format!("took {took:.1?}, budget {limit:?}"))
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn gradient_correctness() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut params = 0;
    for _ in 0..100 {
        let inputs = rng.gen_range(1..=8);
        let mut sizes = vec![inputs];
        for _ in 0..rng.gen_range(0..=2) {
            sizes.push(rng.gen_range(1..=16));
        }
        sizes.push(1);
        let model = MlpModel::random(&sizes, NormSchema::unit(&names(inputs)), &mut rng).map_err(|e| e.to_string())?;
        params += model.num_parameters();
        let sample = Sample {
            features: (0..inputs).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            target: rng.gen_range(-1.0..1.0),
        };
        worst = worst.max(gradient_check(&model, &sample, 1e-6));
    }
    check(worst < 1e-4, format!("max relative error {worst:.3e}"))?;
    within(Duration::from_secs(10), started)?;
    Ok(format!("100 MLPs, {params} parameters, max relative error {worst:.2e}"))
}

fn oracle_equivalences() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    let mut deployments = 0;
    let mut tries = 0;
    while deployments < 200 {
        tries += 1;
        check(tries < 1000, "could not draw 200 feasible deployments")?;
        let density = DensityClass::ALL[rng.gen_range(0..3)];
        let side = rng.gen_range(60.0..140.0);
        let Ok(d) = generate_deployment(density, side, rng.gen()) else {
            continue;
        };
        let want = common::ssf_scan(&d).ok_or("feasible deployment left a station unheard")?;
        check(
            ssf_associate(&d).ok() == Some(want),
            format!("SSF differs from the scan on {density} seed {}", d.seed),
        )?;
        deployments += 1;
    }

    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let n = rng.gen_range(1..=20);
        let links: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                let rate = if rng.gen_bool(0.1) {
                    0.0
                } else {
                    rng.gen_range(1.0..300.0)
                };
                (rate, rng.gen_range(0.0..100.0))
            })
            .collect();
        let airtime = if i % 10 == 0 { 1.0 } else { rng.gen_range(0.05..1.0) };
        for (a, b) in water_fill(airtime, &links)
            .iter()
            .zip(common::bisection_fill(airtime, &links))
        {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst < 1e-4, format!("water-filling off by {worst:.3e} Mbps"))?;

    let t = common::trained();
    let predictor = NnPredictor::new(&t.model).map_err(|e| e.to_string())?;
    for run in 0..20u64 {
        let mut instance = common::serving_instance();
        let density = DensityClass::ALL[run as usize % 3];
        let seed = 500 + run;
        let d = generate_deployment(density, 100.0, seed).map_err(|e| e.to_string())?;
        let direct = nn_associate_detailed(
            &d,
            &predictor,
            &t.intent.policies,
            seed,
            t.intent.placement.indifference_mbps,
        )
        .map_err(|e| e.to_string())?;
        let edge_id = instance.edges[run as usize % instance.edges.len()].id.clone();
        let mut net = LiveNetwork {
            deployment: d.clone(),
            association: AssociationMap::new(),
        };
        for sta_id in placement_order(&d, seed) {
            handle_request(
                &mut instance,
                &mut net,
                &StaEvent {
                    edge_id: edge_id.clone(),
                    sta_id,
                },
            )
            .map_err(|e| e.to_string())?;
        }
        check(
            net.association == direct.map,
            format!("pipeline and direct maps differ on run {run}"),
        )?;
    }
    within(Duration::from_secs(60), started)?;
    Ok(format!(
        "SSF = scan on 200 deployments; water-filling within {worst:.1e} Mbps on 200 instances; 20 pipeline runs match"
    ))
}

const FIG5_SEEDS: u64 = 30;

fn fig5() -> &'static Result<ml5g_core::assoc::EvaluationResult, String> {
    static CELL: OnceLock<Result<ml5g_core::assoc::EvaluationResult, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let t = common::trained();
        let seeds: Vec<u64> = (0..FIG5_SEEDS).collect();
        evaluate_fig5(
            &t.model,
            &t.intent.policies,
            t.intent.placement.indifference_mbps,
            &DensityClass::ALL,
            &seeds,
        )
        .map_err(|e| e.to_string())
    })
}

fn fig5_reproduction() -> Verdict {
    let started = Instant::now();
    let result = fig5().as_ref().map_err(Clone::clone)?;
    check(
        result.skipped.is_empty(),
        format!("infeasible draws: {:?}", result.skipped),
    )?;
    let ssf = result
        .summary_for("ssf", DensityClass::Dense)
        .ok_or("no SSF dense summary")?;
    let nn = result
        .summary_for("nn", DensityClass::Dense)
        .ok_or("no NN dense summary")?;
    let detail = format!(
        "dense, {FIG5_SEEDS} seeds: mean NN {:.2} vs SSF {:.2}, p10 NN {:.2} vs SSF {:.2} ({:+.1}%), p90 NN {:.2} vs SSF {:.2}",
        nn.mean,
        ssf.mean,
        nn.p10,
        ssf.p10,
        (nn.p10 / ssf.p10 - 1.0) * 100.0,
        nn.p90,
        ssf.p90
    );
    check(nn.mean >= ssf.mean, format!("mean below SSF; {detail}"))?;
    check(nn.p10 >= 1.1 * ssf.p10, format!("p10 gain under 10%; {detail}"))?;
    within(Duration::from_secs(600), started)?;
    Ok(detail)
}

fn assert_conserves(report: &ThroughputReport, d: &ml5g_core::underlay::Deployment) -> Result<(), String> {
    for (ap, used) in &report.per_ap_airtime {
        check(
            *used <= report.per_ap_available[ap] + 1e-9,
            format!("AP {ap} uses {used} airtime"),
        )?;
    }
    for (sta, t) in &report.per_sta {
        let demand = d.sta(*sta).map_or(0.0, |s| s.demand_mbps);
        check(
            *t >= 0.0 && *t <= demand + 1e-9,
            format!("STA {sta} gets {t} of {demand}"),
        )?;
    }
    Ok(())
}

struct MonitoringRun {
    outcomes: Vec<TickOutcome>,
    events: Vec<LoggedEvent>,
    initial_hash: String,
    final_hash: Option<String>,
    final_state: InstanceState,
    window: u64,
    threshold: f64,
}

const SHIFT_AT: u64 = 16;
const SHIFT_DB: f64 = 6.0;
const TICKS: u64 = 35;

/// The example intent serving medium-density production, whose noise floor rises by
/// `SHIFT_DB` from `SHIFT_AT` on.
fn monitoring_run(production_seed: u64) -> Result<MonitoringRun, String> {
    let intent = parse_intent(EXAMPLE_INTENT.as_bytes()).map_err(|e| e.to_string())?;
    let mut instance = instantiate(&intent, &HostRegistry::from_intent(&intent)).map_err(|e| e.to_string())?;
    let mut sources = default_sources(&intent, RadioConfig::default());
    let trained = run_training_phase(&mut instance, &mut sources).map_err(|e| e.to_string())?;
    let mut scenario = ProductionScenario::new(DensityClass::Medium, production_seed);
    let mut outcomes = Vec::new();
    for tick in 1..=TICKS {
        if tick == SHIFT_AT {
            let knobs = DivergenceKnobs {
                noise_floor_offset_db: SHIFT_DB,
                ..Default::default()
            };
            scenario.radio = knobs.apply(&RadioConfig::default());
        }
        outcomes.push(serve_tick(&mut instance, &scenario, tick).map_err(|e| e.to_string())?);
    }
    Ok(MonitoringRun {
        outcomes,
        events: instance.events.entries().to_vec(),
        initial_hash: trained.model_hash,
        final_hash: instance.active_model_hash().map(str::to_string),
        final_state: instance.state(),
        window: intent.monitoring.eval_window,
        threshold: intent.monitoring.retrain_rel_error_threshold,
    })
}

fn shared_monitoring_run() -> &'static Result<MonitoringRun, String> {
    static CELL: OnceLock<Result<MonitoringRun, String>> = OnceLock::new();
    CELL.get_or_init(|| monitoring_run(1))
}

fn invariant_suites() -> Verdict {
    let started = Instant::now();
    let t = common::trained();

    // Policy safety and conservation over the whole comparison grid.
    let predictor = NnPredictor::new(&t.model).map_err(|e| e.to_string())?;
    let mut reports = 0;
    for density in DensityClass::ALL {
        for seed in 0..FIG5_SEEDS {
            let d = generate_deployment(density, 100.0, seed).map_err(|e| e.to_string())?;
            let nn = nn_associate_detailed(
                &d,
                &predictor,
                &t.intent.policies,
                seed,
                t.intent.placement.indifference_mbps,
            )
            .map_err(|e| e.to_string())?
            .map;
            let over = over_cap(&nn, &t.intent.policies);
            check(over.is_empty(), format!("{density} seed {seed}: APs over cap {over:?}"))?;
            for map in [nn, ssf_associate(&d).map_err(|e| e.to_string())?] {
                assert_conserves(&compute_throughput(&d, &map).map_err(|e| e.to_string())?, &d)?;
                reports += 1;
            }
        }
    }

    // Normalization of everything the training phase would process.
    let mut sources = default_sources(&t.intent, RadioConfig::default());
    let mut refs: Vec<&mut dyn DataSource> = sources.iter_mut().map(|s| s.as_mut() as &mut dyn DataSource).collect();
    let records = collect(&mut refs, 0..400).map_err(|e| e.to_string())?.records;
    let processed = preprocess(&records, &t.intent.norm_schema).map_err(|e| e.to_string())?;
    for (fv, target) in &processed.samples {
        check(
            fv.values
                .iter()
                .chain(std::iter::once(target))
                .all(|v| (0.0..=1.0).contains(v)),
            format!("value outside [0, 1]: {:?} -> {target}", fv.values),
        )?;
    }

    // No serving without validation, over the log of a run that trains, serves and retrains.
    let run = shared_monitoring_run().as_ref().map_err(Clone::clone)?;
    let mut logs = vec![run.events.clone(), t.events.clone()];
    let mut failed_validation = {
        let mut intent = t.intent.clone();
        intent.validation.gain_floor = 10.0;
        intent.collection.max_training_attempts = 2;
        intent.collection.underlay_episodes = 0;
        intent.sandbox.as_mut().ok_or("no sandbox")?.episodes = 40;
        instantiate(&intent, &HostRegistry::from_intent(&intent)).map_err(|e| e.to_string())?
    };
    let mut sources = default_sources(&failed_validation.intent, RadioConfig::default());
    check(
        run_training_phase(&mut failed_validation, &mut sources).is_err(),
        "impossible thresholds passed",
    )?;
    logs.push(failed_validation.events.entries().to_vec());
    let mut entries = 0;
    for log in &logs {
        let bad = common::serving_without_validation(log);
        check(bad.is_empty(), format!("serving without validation at events {bad:?}"))?;
        entries += log.len();
    }

    // Hash consistency across sinks with one of them failing.
    let mut instance = instantiate(&t.intent, &HostRegistry::from_intent(&t.intent)).map_err(|e| e.to_string())?;
    instance.transport.inject("edge-1", FailureMode::Truncate(64));
    instance
        .transition(InstanceState::Training)
        .map_err(|e| e.to_string())?;
    instance
        .transition(InstanceState::Validating)
        .map_err(|e| e.to_string())?;
    instance.record_validation(&t.outcome.model_hash, &t.outcome.verdict);
    let receipts = instance.deploy(&t.artifact).map_err(|e| e.to_string())?;
    instance.transition(InstanceState::Serving).map_err(|e| e.to_string())?;
    let want = content_hash(&t.artifact);
    check(
        receipts.iter().filter(|r| !r.ok()).count() == 1,
        "expected exactly one failed delivery",
    )?;
    for edge in &instance.edges {
        let delivered = receipts.iter().any(|r| r.sink_id == edge.id && r.ok());
        match edge.active() {
            Some(m) => check(
                delivered && m.hash == want && content_hash(&m.bytes) == want,
                format!("{} holds inconsistent bytes", edge.id),
            )?,
            None => check(!delivered, format!("{} acknowledged but holds nothing", edge.id))?,
        }
    }
    check(
        instance.active_model_hash() == Some(want.as_str()),
        "instance hash differs from the artifact",
    )?;
    let report = instance.tick_report(1);
    let actions = instance.monitor(&report);
    check(
        actions
            == vec![Action::FallbackToSsf {
                edge_id: "edge-1".into(),
            }],
        format!("stale edge not flagged: {actions:?}"),
    )?;

    within(Duration::from_secs(600), started)?;
    Ok(format!(
        "{} grid runs under cap, {reports} reports conserve, {} records in [0, 1], {entries} events audited, failed sink isolated",
        DensityClass::ALL.len() as u64 * FIG5_SEEDS,
        processed.samples.len()
    ))
}

fn determinism() -> Verdict {
    let started = Instant::now();
    let once = || -> Result<(Vec<u8>, Vec<u8>, String), String> {
        let intent = parse_intent(EXAMPLE_INTENT.as_bytes()).map_err(|e| e.to_string())?;
        let mut instance = instantiate(&intent, &HostRegistry::from_intent(&intent)).map_err(|e| e.to_string())?;
        let mut sources = default_sources(&intent, RadioConfig::default());
        run_training_phase(&mut instance, &mut sources).map_err(|e| e.to_string())?;
        let model = instance.active_model().ok_or("no active model")?;
        let artifact = model.to_json().map_err(|e| e.to_string())?;
        let seeds: Vec<u64> = (0..10).collect();
        let result = evaluate_fig5(
            model,
            &intent.policies,
            intent.placement.indifference_mbps,
            &DensityClass::ALL,
            &seeds,
        )
        .map_err(|e| e.to_string())?;
        let mut csv = Vec::new();
        result.write_csv(&mut csv).map_err(|e| e.to_string())?;
        Ok((artifact, csv, instance.events.to_jsonl()))
    };
    let (a, b) = std::thread::scope(|s| {
        let first = s.spawn(once);
        let second = s.spawn(once);
        (first.join(), second.join())
    });
    let a = a.map_err(|_| "first run panicked")??;
    let b = b.map_err(|_| "second run panicked")??;
    check(a.0 == b.0, "model artifacts differ")?;
    check(a.1 == b.1, "evaluation CSVs differ")?;
    check(a.2 == b.2, "event logs differ")?;
    within(Duration::from_secs(600), started)?;
    Ok(format!(
        "model {} ({} bytes) and CSV ({} bytes) identical across two runs",
        &content_hash(&a.0)[..16],
        a.0.len(),
        a.1.len()
    ))
}

fn assess_monitoring(run: &MonitoringRun) -> Result<String, String> {
    let pre = run.outcomes[SHIFT_AT as usize - 2]
        .rolling_rel_error
        .ok_or("no rolling error before the shift")?;
    check(
        pre <= run.threshold,
        format!("error {pre:.3} already over threshold before the shift"),
    )?;
    check(
        run.outcomes[..SHIFT_AT as usize - 1]
            .iter()
            .all(|o| o.actions.is_empty()),
        "action emitted before the shift",
    )?;
    let crossed = run
        .outcomes
        .iter()
        .find(|o| o.rolling_rel_error.is_some_and(|e| e > run.threshold))
        .map(|o| o.tick)
        .ok_or("rolling error never crossed the threshold")?;
    check(
        (SHIFT_AT..SHIFT_AT + run.window).contains(&crossed),
        format!("crossed at tick {crossed}, shift at {SHIFT_AT}, window {}", run.window),
    )?;
    let retrains: Vec<u64> = run
        .outcomes
        .iter()
        .filter(|o| o.actions.contains(&Action::Retrain))
        .map(|o| o.tick)
        .collect();
    check(retrains.len() == 1, format!("retrain actions at ticks {retrains:?}"))?;
    let retrained = run.outcomes[retrains[0] as usize - 1]
        .retrained
        .as_ref()
        .ok_or("retrain produced no training outcome")?;
    check(
        run.final_state == InstanceState::Serving,
        format!("ended {}", run.final_state),
    )?;
    check(
        run.final_hash.as_deref() == Some(retrained.model_hash.as_str()) && retrained.model_hash != run.initial_hash,
        "the retrained model is not the active one",
    )?;
    let last = run
        .outcomes
        .last()
        .and_then(|o| o.rolling_rel_error)
        .ok_or("no final rolling error")?;
    check(last < run.threshold, format!("final rolling error {last:.3}"))?;
    let logged = run
        .events
        .iter()
        .filter(|e| {
            matches!(
                &e.event,
                ml5g_core::mlfo::Event::ActionEmitted {
                    action: Action::Retrain
                }
            )
        })
        .count();
    check(logged == 1, format!("{logged} retrain actions in the event log"))?;
    Ok(format!(
        "pre-shift {pre:.3}, crossed at tick {crossed}, retrain at tick {}, final {last:.3}",
        retrains[0]
    ))
}

fn monitoring_loop() -> Verdict {
    let first = shared_monitoring_run().as_ref().map_err(Clone::clone)?;
    let a = assess_monitoring(first).map_err(|e| format!("production seed 1: {e}"))?;
    // The second run is timed on its own: train, serve, drift, retrain, recover.
    let started = Instant::now();
    let second = monitoring_run(2)?;
    within(Duration::from_secs(120), started)?;
    let b = assess_monitoring(&second).map_err(|e| format!("production seed 2: {e}"))?;
    Ok(format!(
        "+{SHIFT_DB} dB noise at tick {SHIFT_AT}; seed 1: {a}; seed 2: {b}"
    ))
}

fn main() {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 6] = [
        ("gradient correctness", gradient_correctness),
        ("oracle equivalences", oracle_equivalences),
        ("comparison against SSF", fig5_reproduction),
        ("invariant suites", invariant_suites),
        ("determinism", determinism),
        ("monitoring loop", monitoring_loop),
    ];
    let verdicts: Vec<(Verdict, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = criteria
            .iter()
            .map(|(_, f)| {
                s.spawn(move || {
                    let started = Instant::now();
                    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
                        Err(p
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_else(|| "panicked".into()))
                    });
                    (v, started.elapsed())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread"))
            .collect()
    });
    let mut failed = 0;
    for (i, ((name, _), (verdict, took))) in criteria.iter().zip(&verdicts).enumerate() {
        match verdict {
            Ok(detail) => println!("PASS criterion {} ({name}) [{took:.1?}]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({name}) [{took:.1?}]: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
