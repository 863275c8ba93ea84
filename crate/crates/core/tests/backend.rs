use std::thread;

use nalgebra::Vector3;
use proptest::prelude::*;
use rhmap::backend::{information_content, SharedKeyframeQueue};
use rhmap::fresher::build_range_image;
use rhmap::harness::synth::presets;
use rhmap::harness::synth_frame;
use rhmap::{backend_step, BackendConfig, FresherConfig, Keyframe, KeyframeQueue, MapConfig, Pose, RhMap, Scan};

fn at(x: f64, y: f64, t: f64) -> Keyframe {
    Keyframe {
        scan: Scan::default(),
        pose: Pose::from_translation(Vector3::new(x, y, 0.0)),
        timestamp: t,
        info_content: 50.0,
    }
}

proptest! {
    #[test]
    fn queue_is_bounded_fifo(xs in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 0..80),
                             cap in 1usize..20, here in (-100.0..100.0f64, -100.0..100.0f64),
                             away in 0.0..80.0f64, max in 1usize..5) {
        let mut q = KeyframeQueue::new(cap);
        for (k, &(x, y)) in xs.iter().enumerate() {
            q.push(at(x, y, k as f64));
            prop_assert!(q.len() <= cap);
        }
        prop_assert_eq!(q.evicted(), xs.len().saturating_sub(cap));
        let before: Vec<f64> = q.frames().map(|f| f.timestamp).collect();
        let cur = Pose::from_translation(Vector3::new(here.0, here.1, 0.0));
        let ready = q.take_ready(&cur, away, max);
        prop_assert!(ready.len() <= max);
        for f in &ready {
            prop_assert!(f.pose.distance_to(&cur) >= away);
        }
        // Whatever was skipped over is still too close.
        let taken: Vec<f64> = ready.iter().map(|f| f.timestamp).collect();
        prop_assert!(taken.windows(2).all(|w| w[0] < w[1]));
        if let Some(&last) = taken.last() {
            for f in q.frames().filter(|f| f.timestamp < last) {
                prop_assert!(f.pose.distance_to(&cur) < away);
            }
        }
        let rest: Vec<f64> = q.frames().map(|f| f.timestamp).collect();
        prop_assert_eq!(rest.len() + taken.len(), before.len());
        prop_assert!(rest.windows(2).all(|w| w[0] < w[1]));
    }
}

#[test]
fn selection_by_distance_time_and_info() {
    let cfg = BackendConfig::default();
    let mut q = KeyframeQueue::new(10);
    assert!(q.offer(at(0.0, 0.0, 0.0), &cfg));
    assert!(!q.offer(at(4.9, 0.0, 1.0), &cfg));
    assert!(q.offer(at(5.0, 0.0, 1.0), &cfg));
    assert!(q.offer(at(5.0, 0.0, 11.0), &cfg));
    let mut k = at(5.0, 0.0, 11.5);
    k.info_content = 65.0;
    assert!(q.offer(k, &cfg));
    assert_eq!(q.len(), 4);
}

#[test]
fn replay_waits_for_distance() {
    let cfg = BackendConfig::default();
    let mut q = KeyframeQueue::new(10);
    q.push(at(0.0, 0.0, 0.0));
    q.push(at(10.0, 0.0, 1.0));
    let mut map = RhMap::new(MapConfig::default()).unwrap();
    let fresher = FresherConfig::default();
    let near = Pose::from_translation(Vector3::new(19.0, 0.0, 0.0));
    assert!(backend_step(&mut map, &mut q, &near, &cfg, &fresher).is_empty());
    let far = Pose::from_translation(Vector3::new(20.0, 0.0, 0.0));
    assert_eq!(backend_step(&mut map, &mut q, &far, &cfg, &fresher).len(), 1);
    assert_eq!(q.len(), 1);
    assert!(backend_step(&mut map, &mut q, &far, &cfg, &fresher).is_empty());
}

#[test]
fn information_content_is_a_percentage() {
    let f = synth_frame(&presets::street(1), 0, 0).unwrap();
    let img = build_range_image(&f.scan, &FresherConfig::default().image);
    let v = information_content(&img, 80.0);
    assert!(v > 0.0 && v <= 100.0, "{v}");
    assert_eq!(information_content(&build_range_image(&Scan::default(), &FresherConfig::default().image), 80.0), 0.0);
}

#[test]
fn shared_queue_across_threads() {
    let q = SharedKeyframeQueue::new(100);
    let cfg = BackendConfig::default();
    let producer = {
        let q = q.clone();
        thread::spawn(move || {
            for k in 0..50 {
                q.offer(at(k as f64 * 5.0, 0.0, k as f64), &cfg);
            }
        })
    };
    producer.join().unwrap();
    assert_eq!(q.len(), 50);
    let here = Pose::from_translation(Vector3::new(300.0, 0.0, 0.0));
    let consumer = {
        let q = q.clone();
        thread::spawn(move || q.take_ready(&here, 20.0, 100).len())
    };
    // Frames at x <= 280 are at least 20 m away.
    assert_eq!(consumer.join().unwrap(), 50);
    assert!(q.is_empty());
}
