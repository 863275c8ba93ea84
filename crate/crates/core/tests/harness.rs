use std::process::Command;

use nalgebra::Point3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhmap::harness::synth::{presets, BeamSpec, GroundSpec, SensorSpec, LABEL_GROUND};
use rhmap::harness::{
    evaluate, evaluate_points, run_frames, run_pipeline, synth_frame, synthetic_frames, write_scene, Dataset,
    GroundTruth, PipelineConfig, RunOptions, SceneSpec, CONFIG_KEYS,
};
use rhmap::map::global_index;
use rhmap::{Error, MapConfig, RhMap};

#[test]
fn config_text() {
    let cfg = PipelineConfig::parse("# test\ncube_size = 0.2\nmask_bits=4 \n\nbound_sign = nearer # trailing\nbackend_enabled = off\n").unwrap();
    assert_eq!(cfg.map.cube_size, 0.2);
    assert_eq!(cfg.map.mask_bits, 4);
    assert!(!cfg.backend_enabled);
    assert!(matches!(PipelineConfig::parse("cube_sise = 0.1"), Err(Error::Config { .. })));
    assert!(matches!(PipelineConfig::parse("cube_size = -1"), Err(Error::Config { .. })));
    assert!(matches!(PipelineConfig::parse("delta1 0.3"), Err(Error::Config { .. })));
    assert!(matches!(PipelineConfig::parse("mask_bits = 0"), Err(Error::Config { .. })));
    // Every advertised key is settable.
    let mut c = PipelineConfig::default();
    for k in CONFIG_KEYS {
        let v = match *k {
            "bound_sign" => "absolute",
            "backend_enabled" => "true",
            "scans" | "poses" | "labels" | "synthetic" | "out" | "report" => "x",
            "mask_bits" | "table_size" | "max_search" | "range_rows" | "range_cols" | "queue_capacity"
            | "max_per_step" | "seed" => "3",
            _ => "0.5",
        };
        c.set(k, v).unwrap_or_else(|e| panic!("{k}: {e}"));
    }
}

#[test]
fn level_sensor_ring_ranges() {
    let spec = SceneSpec {
        frames: 1,
        frame_period: 0.1,
        ground: Some(GroundSpec::default()),
        static_boxes: vec![],
        moving_boxes: vec![],
        sensor: SensorSpec { start: [3.0, -2.0, 1.0], velocity: [0.0; 3], yaw: 0.4, yaw_rate: 0.0 },
        beams: BeamSpec { rows: 32, cols: 360, max_range: 1000.0, ..Default::default() },
    };
    let f = synth_frame(&spec, 0, 0).unwrap();
    let rings = f.scan.rings.as_ref().unwrap();
    let mut seen = 0;
    for (p, &row) in f.scan.points.iter().zip(rings) {
        let el = spec.beams.elevation(row as usize);
        assert!(el < 0.0);
        let want = 1.0 / el.abs().sin();
        assert!((p.coords.norm() - want).abs() < 1e-6, "row {row}: {} vs {want}", p.coords.norm());
        seen += 1;
    }
    let downward = (0..32).filter(|&r| spec.beams.elevation(r) < 0.0).count();
    assert_eq!(seen, downward * 360);
    assert!(f.labels.iter().all(|&l| l == LABEL_GROUND));
}

#[test]
fn synthetic_frames_are_reproducible() {
    let spec = presets::street(3);
    let a = synth_frame(&spec, 42, 2).unwrap();
    let b = synth_frame(&spec, 42, 2).unwrap();
    assert_eq!(a.scan.points, b.scan.points);
    assert_eq!(a.labels, b.labels);
    let c = synth_frame(&spec, 43, 2).unwrap();
    assert_ne!(a.scan.points, c.scan.points);
    assert!(a.dynamic_mask().iter().any(|&d| d));

    let json = serde_json::to_string(&spec).unwrap();
    assert_eq!(SceneSpec::from_json(&json).unwrap(), spec);
    assert!(SceneSpec::from_json(r#"{"frames": 1, "sensor": {"start": [0,0,1]}, "bogus": 1}"#).is_err());
}

#[test]
fn sensor_inside_box_is_an_error() {
    let mut spec = presets::street(1);
    spec.sensor.start = [10.0, 9.0, 1.0];
    assert!(matches!(synth_frame(&spec, 0, 0), Err(Error::Scene(_))));
}

#[test]
fn folded_truth_equals_per_point_tally() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let mut map = RhMap::new(MapConfig::default()).unwrap();
        for _ in 0..300 {
            map.integrate_point(&Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0))).unwrap();
        }
        let pts: Vec<Point3<f64>> = (0..3000)
            .map(|_| Point3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(0.0..1.0)))
            .collect();
        let dynamic: Vec<bool> = (0..pts.len()).map(|_| rng.random_bool(0.3)).collect();
        let mut gt = GroundTruth::new(0.1);
        gt.extend(&pts, &dynamic).unwrap();

        let (mut sta, mut dy, mut tn, mut tp) = (0u64, 0u64, 0u64, 0u64);
        for (p, &d) in pts.iter().zip(&dynamic) {
            let occ = map.is_occupied(global_index(p, 0.1).unwrap());
            if d {
                dy += 1;
                tp += occ as u64;
            } else {
                sta += 1;
                tn += occ as u64;
            }
        }
        let folded = evaluate(&map, &gt);
        assert_eq!((folded.n_sta, folded.n_dyn, folded.n_tn, folded.n_tp), (sta, dy, tn, tp));
        assert_eq!(folded, evaluate_points(&map, &pts, &dynamic).unwrap());
        assert!((folded.pr.unwrap() - tn as f64 / sta as f64).abs() < 1e-15);
        assert!((folded.rr.unwrap() - (1.0 - tp as f64 / dy as f64)).abs() < 1e-15);
    }
}

#[test]
fn disk_round_trip_matches_in_memory_run() {
    let spec = presets::street(4);
    let dir = tempfile::tempdir().unwrap();
    write_scene(&spec, 9, dir.path()).unwrap();
    let ds = Dataset::open_dir(dir.path()).unwrap();
    assert_eq!(ds.len(), 4);

    let mut cfg = PipelineConfig::default();
    cfg.scans = Some(dir.path().join("velodyne"));
    cfg.poses = Some(dir.path().join("poses.txt"));
    cfg.labels = Some(dir.path().join("labels"));
    let disk = run_pipeline(&cfg, RunOptions::default()).unwrap();
    let mem = run_frames(&PipelineConfig::default(), synthetic_frames(&spec, 9), RunOptions::default()).unwrap();
    // Scans on disk are float32, so only require close agreement.
    let (a, b) = (disk.evaluate().unwrap(), mem.evaluate().unwrap());
    assert_eq!(a.n_sta + a.n_dyn, b.n_sta + b.n_dyn);
    assert!((a.pr.unwrap() - b.pr.unwrap()).abs() < 0.01);
    let occ = (disk.map.occupied_count() as f64 - mem.map.occupied_count() as f64).abs();
    assert!(occ < 0.01 * mem.map.occupied_count() as f64);
}

#[test]
fn frame_errors_carry_the_frame_number() {
    let mut spec = presets::street(6);
    // The sensor reaches x = 0.6 at frame 4.
    spec.static_boxes.push(rhmap::harness::synth::BoxSpec { min: [0.5, -1.0, 0.0], max: [2.0, 1.0, 3.0], velocity: [0.0; 3] });
    let err = run_frames(&PipelineConfig::default(), synthetic_frames(&spec, 0), RunOptions::default());
    match err {
        Err(Error::Frame { frame, .. }) => assert_eq!(frame, 4),
        Err(e) => panic!("{e}"),
        Ok(_) => panic!("sensor should end up inside the box"),
    }
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_rhmap");
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    let ok = Command::new(bin)
        .args(["synth", "--preset", "street", "--frames", "3", "--out"])
        .arg(&scene)
        .output()
        .unwrap();
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));

    let map = dir.path().join("map.ply");
    let run = Command::new(bin)
        .args(["run", "--set", "backend_enabled=false", "--scans"])
        .arg(scene.join("velodyne"))
        .arg("--poses")
        .arg(scene.join("poses.txt"))
        .arg("--labels")
        .arg(scene.join("labels"))
        .arg("--out")
        .arg(&map)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report: serde_json::Value = serde_json::from_slice(&run.stdout).unwrap();

    let eval = Command::new(bin).args(["eval", "--map"]).arg(&map).arg("--truth").arg(&scene).output().unwrap();
    assert!(eval.status.success());
    let again: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert_eq!(report["n_tn"], again["n_tn"]);
    assert_eq!(report["n_tp"], again["n_tp"]);

    let bad_key = Command::new(bin).args(["run", "--set", "nope=1"]).output().unwrap();
    assert_eq!(bad_key.status.code(), Some(1));
    let missing = Command::new(bin)
        .args(["run", "--scans", "/nonexistent/velodyne", "--poses", "/nonexistent/poses.txt"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}
