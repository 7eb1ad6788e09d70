//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run alone with `cargo test -p patrol-core --test acceptance`.

use std::time::{Duration, Instant};

use patrol_core::garage::{
    decode_drive_command, encode_drive_command, parse_scenario, simulate_patrol, simulate_rssi, DriveCommand,
    GarageMap, Motion,
};
use patrol_core::localization::{
    estimate_position, ranges_from_readings, Beacon, LocalizationMethod, PathLossModel, Point2,
};
use patrol_core::plates::{consensus, normalize_plate, PlateCandidate};
use patrol_core::registry::{load_registry, FixtureBackend, OwnerClient, DEFAULT_LOOKUP_DEADLINE};
use patrol_core::report::{build_report, LocalizationConfig, OccupancyStatus};
use patrol_core::solvers::{
    bench_solve, dominant_system, gauss_eliminate, gauss_seidel, jacobi, BenchConfig, BenchMethod,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const DEMO: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/data/demo");

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn twice_area(p: &[Point2]) -> f64 {
    ((p[1].x - p[0].x) * (p[2].y - p[0].y) - (p[2].x - p[0].x) * (p[1].y - p[0].y)).abs()
}

fn trilateration_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut trials = 0;
    while trials < 1000 {
        let pts: Vec<Point2> =
            (0..3).map(|_| Point2::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0))).collect();
        if twice_area(&pts) < 2.0 {
            continue;
        }
        let beacons: Vec<Beacon> =
            pts.iter().enumerate().map(|(i, p)| Beacon::new(format!("B{i}"), p.x, p.y, -40.0)).collect();
        let truth = Point2::new(rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
        let d: Vec<f64> = pts.iter().map(|p| p.distance(truth)).collect();
        match estimate_position(&beacons, &d, LocalizationMethod::LeastSquares) {
            Ok(e) => worst = worst.max(e.position.distance(truth)),
            Err(_) => worst = f64::INFINITY,
        }
        trials += 1;
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && elapsed < Duration::from_secs(5),
        format!("1000 triples, max error {worst:.2e} m (<= 1e-6), {:.2} s (< 5 s)", elapsed.as_secs_f64()),
    )
}

fn solver_oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut unconverged = 0;
    for &n in &[4usize, 64, 512] {
        for i in 0..50u64 {
            let sys = dominant_system::<f64>(n, 1000 * n as u64 + i);
            let g = gauss_eliminate(&sys).expect("dominant system is regular");
            let j = jacobi(&sys, 1e-10, 10_000, 1).expect("valid input");
            let s = gauss_seidel(&sys, 1e-10, 10_000).expect("valid input");
            unconverged += usize::from(!j.converged) + usize::from(!s.converged);
            worst = worst.max(max_diff(&j.x, &g.x)).max(max_diff(&s.x, &g.x));
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-6 && unconverged == 0 && elapsed < Duration::from_secs(30),
        format!(
            "n in {{4,64,512}} x 50, max |dx| {worst:.2e} (<= 1e-6), unconverged {unconverged}, {:.2} s (< 30 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn mean_time(method: BenchMethod, n: usize, workers: usize, trials: usize) -> f64 {
    let cfg = BenchConfig { method, n, workers, trials, seed: 7 };
    bench_solve::<f64>(&cfg).expect("bench runs").entries()[0].mean_s
}

fn timing_shape() -> Outcome {
    let gauss = mean_time(BenchMethod::Gauss, 1024, 1, 20);
    let jac1 = mean_time(BenchMethod::Jacobi, 1024, 1, 20);
    let seidel = mean_time(BenchMethod::GaussSeidel, 1024, 1, 20);
    let ordering = gauss > jac1 && gauss > seidel;

    let g256 = mean_time(BenchMethod::Gauss, 256, 1, 20);
    let g512 = mean_time(BenchMethod::Gauss, 512, 1, 20);
    let growth = [g512 / g256, gauss / g512];
    let growth_ok = growth.iter().all(|r| (4.0..=16.0).contains(r));

    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let (workers_ok, workers_note) = if cores >= 4 {
        let jac8 = mean_time(BenchMethod::Jacobi, 1024, 8, 20);
        (jac8 <= jac1, format!("jacobi w8 {jac8:.4} s <= w1 {jac1:.4} s"))
    } else {
        (true, format!("jacobi w8 <= w1 SKIPPED ({cores} core(s), needs >= 4)"))
    };

    outcome(
        ordering && growth_ok && workers_ok,
        format!(
            "n=1024 gauss {gauss:.4} s > jacobi {jac1:.4} s, gauss-seidel {seidel:.4} s; \
             gauss growth x{:.1}, x{:.1} per doubling (4..16); {workers_note}",
            growth[0], growth[1]
        ),
    )
}

fn jacobi_determinism() -> Outcome {
    let mut mismatches = 0;
    for seed in 0..20 {
        let sys = dominant_system::<f64>(300, seed);
        let base = jacobi(&sys, 1e-10, 10_000, 1).expect("valid input");
        for w in [2, 4, 8] {
            let r = jacobi(&sys, 1e-10, 10_000, w).expect("valid input");
            if !r.x.iter().zip(&base.x).all(|(a, b)| a.to_bits() == b.to_bits()) {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("20 systems x workers {{1,2,4,8}}, {mismatches} bitwise mismatches"))
}

fn consensus_properties() -> Outcome {
    let pool = ["ABC123", "A8C123", "abc-123", "XYZ789", "XY2789", "BAD", "TOOLONG7"];
    let strategy = (prop::collection::vec((0..pool.len(), 0u32..=100), 0..30), any::<u64>());
    let mut runner = TestRunner::new(Config { cases: 1000, failure_persistence: None, ..Config::default() });
    let result = runner.run(&strategy, |(picks, seed)| {
        let cands: Vec<PlateCandidate> =
            picks.iter().map(|&(i, c)| PlateCandidate::new(pool[i], c as f64)).collect();
        let mut shuffled = cands.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = consensus(&cands, 3).expect("k > 0");
        prop_assert_eq!(&a, &consensus(&shuffled, 3).expect("k > 0"));
        for r in &consensus(&cands, usize::MAX).expect("k > 0").ranked {
            let sum: f64 = cands.iter().filter(|c| normalize_plate(&c.raw) == r.plate).map(|c| c.confidence).sum();
            prop_assert_eq!(r.score, sum);
        }
        Ok(())
    });
    let worked = consensus(
        &[PlateCandidate::new("ABC123", 90.0), PlateCandidate::new("ABC123", 85.0), PlateCandidate::new("A8C123", 60.0)],
        3,
    )
    .expect("k > 0");
    let worked_ok = worked.winner.as_deref() == Some("ABC123");
    let detail = match &result {
        Ok(()) => "1000 cases permutation invariance + additivity ok".to_string(),
        Err(e) => format!("property failed: {e}"),
    };
    outcome(result.is_ok() && worked_ok, format!("{detail}; worked example winner {:?}", worked.winner))
}

fn codec_exhaustive() -> Outcome {
    let mut ok = 0;
    for m in Motion::ALL {
        for angle in 0..=180 {
            let cmd = DriveCommand::new(m, angle).expect("valid angle");
            if decode_drive_command(&encode_drive_command(cmd)).ok() == Some(cmd) {
                ok += 1;
            }
        }
    }
    let malformed: [&[u8]; 3] = [b"F181\n", b"Z090\n", b"F090"];
    let rejected = malformed.iter().filter(|f| decode_drive_command(f).is_err()).count();
    outcome(ok == 543 && rejected == 3, format!("{ok}/543 round-trip, {rejected}/3 malformed rejected"))
}

fn demo_end_to_end() -> Outcome {
    let start = Instant::now();
    let scenario = parse_scenario(&std::fs::read_to_string(format!("{DEMO}/scenario.json")).expect("demo scenario"))
        .expect("valid scenario");
    let registry = load_registry(format!("{DEMO}/tenants.csv")).expect("demo registry");
    let config = LocalizationConfig { path_loss: scenario.path_loss(), ..LocalizationConfig::default() };
    let run = || {
        let client = OwnerClient::new(
            FixtureBackend::from_file(format!("{DEMO}/owners.json")).expect("owners fixture"),
            DEFAULT_LOOKUP_DEADLINE,
        );
        let events = simulate_patrol(&scenario).expect("simulation");
        build_report(&events, &registry, &scenario.map, &config, Some(&client)).expect("report")
    };
    let report = run();
    let again = run();
    let elapsed = start.elapsed();

    let mut wrong = Vec::new();
    let mut counts = [0usize; 4];
    for stall in &scenario.map.stalls {
        let expected = match scenario.plate_at(&stall.stall_id) {
            None => OccupancyStatus::Empty,
            Some(p) => match registry.find_by_plate(p) {
                Some(t) if t.stall_id == stall.stall_id => OccupancyStatus::OccupiedByOwner,
                Some(_) => OccupancyStatus::OccupiedByOtherTenant { plate: p.to_string() },
                None => OccupancyStatus::OccupiedByUnknown { plate: Some(p.to_string()) },
            },
        };
        counts[match expected {
            OccupancyStatus::OccupiedByOwner => 0,
            OccupancyStatus::OccupiedByOtherTenant { .. } => 1,
            OccupancyStatus::OccupiedByUnknown { .. } => 2,
            OccupancyStatus::Empty => 3,
        }] += 1;
        if report.stall(&stall.stall_id).map(|r| &r.status) != Some(&expected) {
            wrong.push(stall.stall_id.clone());
        }
    }
    let intruder = report
        .stalls
        .iter()
        .find(|s| matches!(s.status, OccupancyStatus::OccupiedByUnknown { .. }))
        .and_then(|s| s.owner_lookup.as_ref())
        .map(|o| o.owner_name.clone());
    let deterministic = report.to_json() == again.to_json();
    let composition = counts == [3, 1, 1, 7];
    outcome(
        wrong.is_empty() && intruder.is_some() && deterministic && composition && elapsed < Duration::from_secs(10),
        format!(
            "12 stalls, mismatched {wrong:?}, intruder owner {intruder:?}, deterministic {deterministic}, \
             {:.2} s (< 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn noise_robustness() -> Outcome {
    let map = GarageMap::default_layout(6);
    let model = PathLossModel::default();
    let max_beacons = LocalizationConfig::default().max_beacons;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sq = 0.0;
    let trials = 1000;
    for t in 0..trials {
        let truth = Point2::new(rng.random_range(0.0..map.width), rng.random_range(0.0..map.height));
        let readings = simulate_rssi(&map, truth, &model, 1.0, 10_000 + t);
        let (used, d) = ranges_from_readings(&map.beacons, &readings, &model, max_beacons).expect("known beacons");
        let est = estimate_position(&used, &d, LocalizationMethod::LeastSquares).expect("non-collinear");
        sq += est.position.distance(truth).powi(2);
    }
    let rms = (sq / trials as f64).sqrt();
    outcome(rms <= 1.0, format!("{trials} trials at 1 dB, RMS error {rms:.3} m (<= 1.0 m)"))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("trilateration round-trip", trilateration_round_trip),
        ("solver oracle equivalence", solver_oracle_equivalence),
        ("solver timing shape", timing_shape),
        ("jacobi determinism", jacobi_determinism),
        ("consensus properties", consensus_properties),
        ("codec exhaustive round-trip", codec_exhaustive),
        ("end-to-end demo", demo_end_to_end),
        ("noise robustness", noise_robustness),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let r = check();
        failed += usize::from(!r.pass);
        println!("{} {} {name}: {}", if r.pass { "PASS" } else { "FAIL" }, i + 1, r.detail);
    }
    println!("acceptance: {}/{} passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
