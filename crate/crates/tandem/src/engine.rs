//! Coordination of the tracking and verifying workers.
//!
//! The tracking worker processes every frame and emits a verification
//! request every `V` frames; the verifying worker audits requested
//! frames and responds with a verdict, an optional corrected box, and
//! updated search parameters. On a correction the tracker rewinds to the
//! audited frame, relearns at the corrected box, and re-tracks the
//! frames it had already produced, so the final output reflects every
//! correction.
//!
//! Two modes share one protocol implementation. Deterministic mode
//! interleaves both workers on one thread with a simulated verifier
//! latency of `L` frames, so every run is bit-identical. Parallel mode
//! runs the verifier on its own thread over bounded channels; the
//! tracker never blocks on it. Either way the verifier's inbox keeps
//! only the newest pending request and drops the rest as stale.

use std::collections::VecDeque;
use std::fmt;
use std::time::{Duration, Instant};

use crossbeam::channel;

use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::geometry::BoundingBox;
use crate::tracker::Tracker;
use crate::verifier::{IntervalAction, Verdict, Verifier};

/// Scheduling mode for the two workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Single-threaded interleaving with simulated verifier latency.
    Deterministic,
    /// Real two-thread execution over bounded channels.
    Parallel,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Deterministic => write!(f, "deterministic"),
            Mode::Parallel => write!(f, "parallel"),
        }
    }
}

/// Engine tunables.
#[derive(Debug, Clone)]
pub struct EngineConfig {
    /// Initial frames between verification requests.
    pub v_default: usize,
    /// Floor for the dynamically decreased interval.
    pub v_min: usize,
    pub mode: Mode,
    /// Simulated verifier latency in frames (deterministic mode): a
    /// request at frame `k` is answered once the tracker finishes
    /// frame `k + L`.
    pub latency_frames: usize,
    /// Injected verifier compute delay, for throughput experiments.
    pub verifier_delay: Duration,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            v_default: 10,
            v_min: 1,
            mode: Mode::Deterministic,
            latency_frames: 2,
            verifier_delay: Duration::ZERO,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.v_min < 1 || self.v_default < self.v_min {
            return Err(Error::InvalidConfig(
                "verification interval must satisfy V >= V_min >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Frozen tracker state from just before one frame was processed, plus
/// the box that frame produced.
#[derive(Debug, Clone)]
pub struct ModelSnapshot<S> {
    pub frame: usize,
    pub state: S,
    pub output: Option<BoundingBox>,
}

/// Tracker-to-verifier message: audit this box on this frame.
#[derive(Debug, Clone)]
pub struct VerifyRequest {
    pub frame: usize,
    pub bbox: BoundingBox,
}

/// Verifier-to-tracker message.
#[derive(Debug, Clone)]
pub struct VerifyResponse {
    pub frame: usize,
    pub verdict: Verdict,
    pub score: f64,
    /// Present only on failure with an accepted detection.
    pub correction: Option<BoundingBox>,
    /// Verification interval to use from here on.
    pub interval: usize,
    /// Search-region scale after adaptation, when the verifier has one.
    pub beta: Option<f64>,
    /// Frames of older requests this response superseded.
    stale_dropped: Vec<usize>,
}

/// Event kinds recorded in the run log.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Request,
    Pass,
    Fail,
    Correct,
    Replay,
    Stale,
    VChange,
    BetaChange,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Request => "request",
            EventKind::Pass => "pass",
            EventKind::Fail => "fail",
            EventKind::Correct => "correct",
            EventKind::Replay => "replay",
            EventKind::Stale => "stale",
            EventKind::VChange => "v_change",
            EventKind::BetaChange => "beta_change",
        }
    }
}

/// One line of the event log.
#[derive(Debug, Clone)]
pub struct Event {
    pub frame: usize,
    pub kind: EventKind,
    pub detail: String,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "frame={} event={}", self.frame, self.kind.as_str())?;
        if !self.detail.is_empty() {
            write!(f, " {}", self.detail)?;
        }
        Ok(())
    }
}

/// Ordered record of everything both workers did.
#[derive(Debug, Clone, Default)]
pub struct EventLog {
    events: Vec<Event>,
}

impl EventLog {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// Frames of all events of one kind, in log order.
    pub fn frames(&self, kind: EventKind) -> Vec<usize> {
        self.events
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.frame)
            .collect()
    }

    /// The log in its line-oriented text form.
    pub fn lines(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&e.to_string());
            out.push('\n');
        }
        out
    }

    fn push(&mut self, frame: usize, kind: EventKind, detail: String) {
        self.events.push(Event {
            frame,
            kind,
            detail,
        });
    }
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    /// Exactly one box per input frame, corrections applied.
    pub boxes: Vec<BoundingBox>,
    pub events: EventLog,
    /// Frames per second over the engine loop (excludes sequence I/O).
    pub fps: f64,
    /// Wall-clock per-frame latency of the tracking worker, in
    /// milliseconds, for frames 1..n.
    pub frame_latencies_ms: Vec<f64>,
    /// Largest snapshot-buffer length observed.
    pub max_snapshot_buffer: usize,
}

/// Runs the engine over `frames`, initializing both workers from the
/// frame-0 ground truth. `verifier: None` runs the bare tracker with no
/// verification schedule.
pub fn run<T, V>(
    frames: &[Frame],
    init: &BoundingBox,
    tracker: &mut T,
    verifier: Option<&mut V>,
    cfg: &EngineConfig,
) -> Result<RunOutcome>
where
    T: Tracker,
    V: Verifier + Send,
{
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::EmptySequence);
    }
    let started = Instant::now();
    let mut track = TrackSide::new(frames, tracker, cfg);
    track.tracker.init(&frames[0], init)?;
    track.outputs.push(*init);

    match verifier {
        None => {
            track.verification_enabled = false;
            for t in 1..frames.len() {
                track.step(t)?;
            }
        }
        Some(verifier) => {
            verifier.init(&frames[0], init)?;
            let verify = VerifySide {
                verifier,
                v_current: cfg.v_default,
                v_default: cfg.v_default,
                v_min: cfg.v_min,
                delay: cfg.verifier_delay,
            };
            match cfg.mode {
                Mode::Deterministic => run_deterministic(&mut track, verify)?,
                Mode::Parallel => run_parallel(&mut track, verify)?,
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    let fps = if elapsed > 0.0 {
        frames.len() as f64 / elapsed
    } else {
        f64::INFINITY
    };
    Ok(RunOutcome {
        boxes: track.outputs,
        events: track.events,
        fps,
        frame_latencies_ms: track.latencies_ms,
        max_snapshot_buffer: track.max_snapshots,
    })
}

/// Tracking worker: owns the tracker, its snapshots, outputs and the
/// verification schedule.
struct TrackSide<'a, T: Tracker> {
    frames: &'a [Frame],
    tracker: &'a mut T,
    cfg: &'a EngineConfig,
    outputs: Vec<BoundingBox>,
    snapshots: VecDeque<ModelSnapshot<T::State>>,
    events: EventLog,
    v_current: usize,
    last_request: usize,
    last_beta: Option<f64>,
    verification_enabled: bool,
    latencies_ms: Vec<f64>,
    max_snapshots: usize,
}

impl<'a, T: Tracker> TrackSide<'a, T> {
    fn new(frames: &'a [Frame], tracker: &'a mut T, cfg: &'a EngineConfig) -> Self {
        Self {
            frames,
            tracker,
            cfg,
            outputs: Vec::with_capacity(frames.len()),
            snapshots: VecDeque::new(),
            events: EventLog::default(),
            v_current: cfg.v_default,
            last_request: 0,
            last_beta: None,
            verification_enabled: true,
            latencies_ms: Vec::with_capacity(frames.len()),
            max_snapshots: 0,
        }
    }

    /// Tracks frame `t`; returns a request if the schedule is due.
    fn step(&mut self, t: usize) -> Result<Option<VerifyRequest>> {
        let begun = Instant::now();
        self.snapshots.push_back(ModelSnapshot {
            frame: t,
            state: self.tracker.state(),
            output: None,
        });
        self.max_snapshots = self.max_snapshots.max(self.snapshots.len());
        let bbox = self.tracker.step(&self.frames[t])?;
        self.snapshots.back_mut().unwrap().output = Some(bbox);
        self.outputs.push(bbox);
        self.latencies_ms.push(begun.elapsed().as_secs_f64() * 1e3);

        if self.verification_enabled && t - self.last_request >= self.v_current {
            self.last_request = t;
            self.events.push(t, EventKind::Request, String::new());
            return Ok(Some(VerifyRequest { frame: t, bbox }));
        }
        Ok(None)
    }

    /// Applies one verifier response: trims the buffer on a pass,
    /// rewinds and re-tracks on a correction, and adopts the new
    /// interval and region scale either way.
    fn handle_response(&mut self, resp: VerifyResponse) -> Result<()> {
        for frame in &resp.stale_dropped {
            self.events
                .push(*frame, EventKind::Stale, "reason=superseded".into());
        }
        if !self.snapshots.iter().any(|s| s.frame == resp.frame) {
            self.events.push(
                resp.frame,
                EventKind::Stale,
                "reason=unknown_frame".into(),
            );
            return Ok(());
        }
        match resp.verdict {
            Verdict::Pass => {
                self.events.push(
                    resp.frame,
                    EventKind::Pass,
                    format!("score={:.6}", resp.score),
                );
                while self
                    .snapshots
                    .front()
                    .is_some_and(|s| s.frame <= resp.frame)
                {
                    self.snapshots.pop_front();
                }
            }
            Verdict::Fail => {
                self.events.push(
                    resp.frame,
                    EventKind::Fail,
                    format!("score={:.6}", resp.score),
                );
                if let Some(correction) = resp.correction {
                    self.trace_back_and_resume(resp.frame, correction)?;
                }
            }
        }
        self.apply_interval(resp.frame, resp.interval);
        self.apply_beta(resp.frame, resp.beta);
        Ok(())
    }

    fn apply_interval(&mut self, frame: usize, interval: usize) {
        if interval != self.v_current {
            self.events.push(
                frame,
                EventKind::VChange,
                format!("from={} to={}", self.v_current, interval),
            );
            self.v_current = interval;
        }
    }

    fn apply_beta(&mut self, frame: usize, beta: Option<f64>) {
        if let Some(beta) = beta {
            if self.last_beta.is_some_and(|b| b != beta) {
                self.events.push(
                    frame,
                    EventKind::BetaChange,
                    format!("from={} to={}", self.last_beta.unwrap(), beta),
                );
            }
            self.last_beta = Some(beta);
        }
    }

    /// Rewinds to `anchor`, relearns at the corrected box, and re-tracks
    /// every frame that had already been produced. Replayed frames never
    /// emit nested requests; the request schedule resumes from `anchor`.
    fn trace_back_and_resume(&mut self, anchor: usize, correction: BoundingBox) -> Result<()> {
        let pos = self
            .snapshots
            .iter()
            .position(|s| s.frame == anchor)
            .ok_or_else(|| {
                Error::Protocol(format!("no snapshot covers correction anchor {anchor}"))
            })?;
        let current = self.outputs.len() - 1;
        let state = self.snapshots[pos].state.clone();
        self.tracker.restore(&state);
        self.tracker.reinit(&self.frames[anchor], &correction)?;
        self.outputs[anchor] = correction;
        self.events.push(
            anchor,
            EventKind::Correct,
            format!(
                "x={} y={} w={} h={}",
                correction.x, correction.y, correction.w, correction.h
            ),
        );
        self.snapshots.clear();
        for t in (anchor + 1)..=current {
            self.snapshots.push_back(ModelSnapshot {
                frame: t,
                state: self.tracker.state(),
                output: None,
            });
            self.max_snapshots = self.max_snapshots.max(self.snapshots.len());
            let bbox = self.tracker.step(&self.frames[t])?;
            self.snapshots.back_mut().unwrap().output = Some(bbox);
            self.outputs[t] = bbox;
            self.events.push(t, EventKind::Replay, String::new());
        }
        self.last_request = anchor;
        Ok(())
    }
}

/// Verifying worker: owns the verifier and the interval policy.
struct VerifySide<'a, V: Verifier> {
    verifier: &'a mut V,
    v_current: usize,
    v_default: usize,
    v_min: usize,
    delay: Duration,
}

impl<V: Verifier> VerifySide<'_, V> {
    fn process(
        &mut self,
        frames: &[Frame],
        req: &VerifyRequest,
        stale_dropped: Vec<usize>,
    ) -> VerifyResponse {
        if !self.delay.is_zero() {
            std::thread::sleep(self.delay);
        }
        let v = self.verifier.process(&frames[req.frame], &req.bbox);
        self.v_current = match v.interval {
            IntervalAction::Keep => self.v_current,
            IntervalAction::Decrease => (self.v_current / 2).max(self.v_min),
            IntervalAction::Restore => self.v_default,
        };
        VerifyResponse {
            frame: req.frame,
            verdict: v.verdict,
            score: v.score,
            correction: if v.verdict == Verdict::Fail {
                v.correction
            } else {
                None
            },
            interval: self.v_current,
            beta: v.beta,
            stale_dropped,
        }
    }
}

/// Keeps the newest pending request, reporting the frames of the rest.
fn drain_to_newest(inbox: &mut Vec<VerifyRequest>) -> Option<(VerifyRequest, Vec<usize>)> {
    if inbox.is_empty() {
        return None;
    }
    let newest = inbox.pop().unwrap();
    let stale = inbox.drain(..).map(|r| r.frame).collect();
    Some((newest, stale))
}

fn run_deterministic<T: Tracker, V: Verifier>(
    track: &mut TrackSide<'_, T>,
    mut verify: VerifySide<'_, V>,
) -> Result<()> {
    let latency = track.cfg.latency_frames;
    let mut inbox: Vec<VerifyRequest> = Vec::new();
    // A request being verified and the frame after which it resolves.
    let mut busy: Option<(VerifyRequest, Vec<usize>, usize)> = None;

    for t in 1..track.frames.len() {
        if let Some(req) = track.step(t)? {
            inbox.push(req);
        }
        if busy.as_ref().is_some_and(|(_, _, due)| *due <= t) {
            let (req, stale, _) = busy.take().unwrap();
            let resp = verify.process(track.frames, &req, stale);
            track.handle_response(resp)?;
        }
        while busy.is_none() {
            match drain_to_newest(&mut inbox) {
                None => break,
                Some((req, stale)) => {
                    if latency == 0 {
                        let resp = verify.process(track.frames, &req, stale);
                        track.handle_response(resp)?;
                    } else {
                        let due = t + latency;
                        busy = Some((req, stale, due));
                    }
                }
            }
        }
    }

    // Flush: answer everything still in flight at sequence end.
    loop {
        if let Some((req, stale, _)) = busy.take() {
            let resp = verify.process(track.frames, &req, stale);
            track.handle_response(resp)?;
        }
        match drain_to_newest(&mut inbox) {
            None => break,
            Some((req, stale)) => busy = Some((req, stale, 0)),
        }
    }
    Ok(())
}

fn run_parallel<T: Tracker, V: Verifier + Send>(
    track: &mut TrackSide<'_, T>,
    verify: VerifySide<'_, V>,
) -> Result<()> {
    let frames = track.frames;
    let (req_tx, req_rx) = channel::bounded::<VerifyRequest>(64);
    let (resp_tx, resp_rx) = channel::bounded::<VerifyResponse>(64);

    std::thread::scope(|scope| -> Result<()> {
        let handle = scope.spawn(move || {
            let mut verify = verify;
            while let Ok(first) = req_rx.recv() {
                // Only the newest queued request is still worth checking.
                let mut req = first;
                let mut stale = Vec::new();
                while let Ok(newer) = req_rx.try_recv() {
                    stale.push(req.frame);
                    req = newer;
                }
                let resp = verify.process(frames, &req, stale);
                if resp_tx.send(resp).is_err() {
                    break;
                }
            }
        });

        for t in 1..frames.len() {
            while let Ok(resp) = resp_rx.try_recv() {
                track.handle_response(resp)?;
            }
            if let Some(req) = track.step(t)? {
                if req_tx.try_send(req).is_err() {
                    // Queue saturated; the request would have been
                    // superseded anyway.
                    track
                        .events
                        .push(t, EventKind::Stale, "reason=queue_full".into());
                }
            }
        }
        drop(req_tx);
        while let Ok(resp) = resp_rx.recv() {
            track.handle_response(resp)?;
        }
        handle.join().expect("verifier thread panicked");
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_line_format() {
        let mut log = EventLog::default();
        log.push(10, EventKind::Pass, "score=1.500000".into());
        log.push(11, EventKind::Request, String::new());
        assert_eq!(
            log.lines(),
            "frame=10 event=pass score=1.500000\nframe=11 event=request\n"
        );
        assert_eq!(log.count(EventKind::Pass), 1);
        assert_eq!(log.frames(EventKind::Request), vec![11]);
    }

    #[test]
    fn config_validation() {
        let cfg = EngineConfig {
            v_default: 2,
            v_min: 5,
            ..EngineConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = EngineConfig {
            v_min: 0,
            ..EngineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
