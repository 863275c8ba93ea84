//! Keyframe queue and deferred scan-to-map removal.
//!
//! The front-end offers every frame as a keyframe candidate; selected frames
//! are queued and replayed through scan-to-map removal once the sensor has
//! moved `dist_away` from where they were taken.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::fresher::{s2m_removal, FresherConfig, Pose, RangeImage, RemovalReport, Scan};
use crate::map::RhMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackendConfig {
    /// Minimum travel since the last keyframe (m).
    pub dist_keyframe: f64,
    /// Maximum time between keyframes (s).
    pub time_keyframe: f64,
    /// Information-content change that forces a keyframe (percentage points).
    pub info_delta: f64,
    /// Distance from a keyframe before it is replayed (m).
    pub dist_away: f64,
    pub queue_capacity: usize,
    pub max_per_step: usize,
    /// Sensor maximum range used by the information content (m).
    pub r_max: f64,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            dist_keyframe: 5.0,
            time_keyframe: 10.0,
            info_delta: 10.0,
            dist_away: 20.0,
            queue_capacity: 50,
            max_per_step: 1,
            r_max: 80.0,
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("dist_keyframe", self.dist_keyframe),
            ("time_keyframe", self.time_keyframe),
            ("info_delta", self.info_delta),
            ("dist_away", self.dist_away),
            ("r_max", self.r_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        if self.queue_capacity == 0 {
            return Err(Error::config("queue_capacity", "must be at least 1"));
        }
        if self.max_per_step == 0 {
            return Err(Error::config("max_per_step", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Keyframe {
    pub scan: Scan,
    pub pose: Pose,
    pub timestamp: f64,
    /// Information content, percent.
    pub info_content: f64,
}

/// What keyframe selection needs to remember about the previous keyframe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeStamp {
    pub pose: Pose,
    pub timestamp: f64,
    pub info_content: f64,
}

impl From<&Keyframe> for KeyframeStamp {
    fn from(k: &Keyframe) -> Self {
        Self {
            pose: k.pose,
            timestamp: k.timestamp,
            info_content: k.info_content,
        }
    }
}

/// Mean over columns of the farthest return, as a percentage of `r_max`.
/// Empty columns count as zero; returns beyond `r_max` are capped.
pub fn information_content(img: &RangeImage, r_max: f64) -> f64 {
    let n = img.cols();
    let total: f64 = (0..n)
        .map(|c| img.column_max(c).map_or(0.0, |cell| cell.range.min(r_max)))
        .sum();
    total / (r_max * n as f64) * 100.0
}

/// A frame becomes a keyframe when there is none yet, or it is far enough,
/// late enough, or its information content moved enough since the last one.
pub fn keyframe_select(last: Option<&KeyframeStamp>, candidate: &KeyframeStamp, cfg: &BackendConfig) -> bool {
    let Some(last) = last else {
        return true;
    };
    candidate.pose.distance_to(&last.pose) >= cfg.dist_keyframe
        || candidate.timestamp - last.timestamp >= cfg.time_keyframe
        || (candidate.info_content - last.info_content).abs() >= cfg.info_delta
}

/// Bounded FIFO of keyframes. When full, the oldest keyframe is dropped.
#[derive(Debug, Default)]
pub struct KeyframeQueue {
    frames: VecDeque<Keyframe>,
    capacity: usize,
    last: Option<KeyframeStamp>,
    evicted: usize,
}

impl KeyframeQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            frames: VecDeque::with_capacity(capacity.min(1024)),
            capacity: capacity.max(1),
            last: None,
            evicted: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Keyframes dropped because the queue was full.
    pub fn evicted(&self) -> usize {
        self.evicted
    }

    /// The most recently selected keyframe, even if already replayed.
    pub fn last(&self) -> Option<&KeyframeStamp> {
        self.last.as_ref()
    }

    pub fn frames(&self) -> impl Iterator<Item = &Keyframe> {
        self.frames.iter()
    }

    pub fn push(&mut self, frame: Keyframe) {
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
            self.evicted += 1;
        }
        self.last = Some(KeyframeStamp::from(&frame));
        self.frames.push_back(frame);
    }

    /// Select and enqueue `frame` if it qualifies. Returns whether it did.
    pub fn offer(&mut self, frame: Keyframe, cfg: &BackendConfig) -> bool {
        let stamp = KeyframeStamp::from(&frame);
        if keyframe_select(self.last.as_ref(), &stamp, cfg) {
            self.push(frame);
            true
        } else {
            false
        }
    }

    /// Remove and return up to `max` keyframes, oldest first, that lie at
    /// least `dist_away` from `current`.
    pub fn take_ready(&mut self, current: &Pose, dist_away: f64, max: usize) -> Vec<Keyframe> {
        let mut out = Vec::new();
        let mut i = 0;
        while i < self.frames.len() && out.len() < max {
            if self.frames[i].pose.distance_to(current) >= dist_away {
                out.push(self.frames.remove(i).unwrap());
            } else {
                i += 1;
            }
        }
        out
    }
}

/// Replay ready keyframes through scan-to-map removal against the current
/// map, using their stored poses unchanged. Replayed keyframes are dropped.
pub fn backend_step(
    map: &mut RhMap,
    queue: &mut KeyframeQueue,
    current: &Pose,
    cfg: &BackendConfig,
    fresher: &FresherConfig,
) -> Vec<RemovalReport> {
    queue
        .take_ready(current, cfg.dist_away, cfg.max_per_step)
        .iter()
        .map(|k| s2m_removal(map, &k.scan, &k.pose, fresher))
        .collect()
}

/// Keyframe queue shared between a producing front-end and a consuming
/// back-end running in different threads.
#[derive(Debug, Clone)]
pub struct SharedKeyframeQueue {
    inner: Arc<Mutex<KeyframeQueue>>,
}

impl SharedKeyframeQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            inner: Arc::new(Mutex::new(KeyframeQueue::new(capacity))),
        }
    }

    pub fn offer(&self, frame: Keyframe, cfg: &BackendConfig) -> bool {
        self.inner.lock().unwrap().offer(frame, cfg)
    }

    pub fn take_ready(&self, current: &Pose, dist_away: f64, max: usize) -> Vec<Keyframe> {
        self.inner.lock().unwrap().take_ready(current, dist_away, max)
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn evicted(&self) -> usize {
        self.inner.lock().unwrap().evicted()
    }
}
