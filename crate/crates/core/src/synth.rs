//! Seeded synthetic courses and a synthetic discomfort model.
//!
//! Maze courses are axis-aligned corridors walked at a constant speed with
//! exactly `turn_count` right-angle turns, each executed as a short circular
//! arc. Straight lengths come in "regimes" so turn density varies through a
//! session. Race courses run forward at a joystick-like, randomly varying
//! speed and weave around obstacles with many small heading changes.
//!
//! The discomfort model is invented ground truth: each window adds
//! `turn_gain * heading change + speed_gain * speed variance - recovery_rate`
//! plus Gaussian noise to a latent score clamped to `[0, 10]`, and reports
//! the rounded latent score at every window boundary.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::compression::window_spans;
use crate::error::{Error, Result};
use crate::trajectory::{speed_between, DiscomfortReport, SessionLog, Tid, TrajPoint, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CourseKind {
    Maze,
    Race,
}

/// Generator parameters. Maze-only and race-only fields are ignored by the
/// other kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CourseSpec {
    pub kind: CourseKind,
    pub duration_s: f64,
    pub sample_hz: f64,
    /// Maze walking speed; initial race speed (Um/s).
    pub speed: f64,
    /// Race speed ceiling (Um/s).
    pub max_speed: f64,
    /// Maze: exact number of 90 degree turns.
    pub turn_count: usize,
    /// Maze: time spent in each turn arc.
    pub turn_duration_s: f64,
    /// Maze: turn-free straight at the start of the course (seconds).
    pub lead_in_s: f64,
    /// Race: obstacle weaves per 100 Um of path.
    pub obstacle_density: f64,
    /// Race: standard deviation of the speed change between 1 s knots.
    pub speed_jitter: f64,
    pub seed: u64,
    pub tid: String,
}

impl Default for CourseSpec {
    fn default() -> Self {
        CourseSpec {
            kind: CourseKind::Maze,
            duration_s: 600.0,
            sample_hz: 2.0,
            speed: 2.0,
            max_speed: 10.0,
            turn_count: 60,
            turn_duration_s: 0.5,
            lead_in_s: 0.0,
            obstacle_density: 12.0,
            speed_jitter: 1.5,
            seed: 0,
            tid: "player".into(),
        }
    }
}

pub const MIN_RACE_SPEED: f64 = 0.5;

impl CourseSpec {
    pub fn maze(seed: u64) -> Self {
        CourseSpec {
            seed,
            ..Default::default()
        }
    }

    pub fn race(seed: u64) -> Self {
        CourseSpec {
            kind: CourseKind::Race,
            speed: 5.0,
            seed,
            ..Default::default()
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::invalid("duration_s must be positive"));
        }
        if !(self.sample_hz > 0.0 && self.sample_hz.is_finite()) {
            return Err(Error::invalid("sample_hz must be positive"));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::invalid("speed must be positive"));
        }
        Ok(())
    }

    fn sample_times(&self) -> Vec<f64> {
        let n = (self.duration_s * self.sample_hz + 1e-9).floor() as usize;
        (0..n).map(|k| k as f64 / self.sample_hz).collect()
    }
}

/// Generates either course kind.
pub fn generate(spec: &CourseSpec) -> Result<Trajectory> {
    match spec.kind {
        CourseKind::Maze => gen_maze_trajectory(spec),
        CourseKind::Race => gen_race_trajectory(spec),
    }
}

enum Piece {
    Straight {
        start: [f64; 2],
        dir: [f64; 2],
    },
    Arc {
        start: [f64; 2],
        dir: [f64; 2],
        sign: f64,
        radius: f64,
    },
}

impl Piece {
    fn at(&self, u: f64) -> [f64; 2] {
        match *self {
            Piece::Straight { start, dir } => [start[0] + u * dir[0], start[1] + u * dir[1]],
            Piece::Arc {
                start,
                dir,
                sign,
                radius,
            } => {
                let normal = [-dir[1], dir[0]];
                let theta = u / radius;
                let along = radius * theta.sin();
                let side = sign * radius * (1.0 - theta.cos());
                [
                    start[0] + along * dir[0] + side * normal[0],
                    start[1] + along * dir[1] + side * normal[1],
                ]
            }
        }
    }
}

/// Shortest straight run between turns: two sample intervals plus margin,
/// so every straight contributes at least one sample-to-sample step.
fn min_straight(spec: &CourseSpec) -> f64 {
    2.5 * spec.speed / spec.sample_hz
}

/// Maze course: constant speed, axis-aligned straights, exactly
/// `turn_count` right-angle turns.
pub fn gen_maze_trajectory(spec: &CourseSpec) -> Result<Trajectory> {
    if spec.kind != CourseKind::Maze {
        return Err(Error::invalid("gen_maze_trajectory needs a maze spec"));
    }
    spec.check()?;
    if !(spec.turn_duration_s > 0.0) {
        return Err(Error::invalid("turn_duration_s must be positive"));
    }
    if !(spec.lead_in_s >= 0.0 && spec.lead_in_s.is_finite()) {
        return Err(Error::invalid("lead_in_s must be finite and >= 0"));
    }
    let turns = spec.turn_count;
    let arc_len = spec.speed * spec.turn_duration_s;
    let straight_total = spec.speed * spec.duration_s - turns as f64 * arc_len;
    let min_seg = min_straight(spec);
    let lead_in = spec.speed * spec.lead_in_s;
    let free = straight_total - (turns + 1) as f64 * min_seg - lead_in;
    if free < 0.0 {
        return Err(Error::invalid(format!(
            "{} s is too short for {turns} turns at {} Um/s",
            spec.duration_s, spec.speed
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // long straights in calm regimes, short ones in twisty regimes
    let mut weights = Vec::with_capacity(turns + 1);
    while weights.len() <= turns {
        let run = rng.random_range(2..=10usize);
        let level = rng.random_range(0.2f64.ln()..5.0f64.ln()).exp();
        for _ in 0..run {
            weights.push(level * rng.random_range(0.6..1.4));
        }
    }
    weights.truncate(turns + 1);
    let weight_sum: f64 = weights.iter().sum();

    let radius = arc_len / FRAC_PI_2;
    let mut pieces = Vec::with_capacity(2 * turns + 1);
    let mut pos = [0.0, 0.0];
    let mut dir = [1.0, 0.0];
    for (i, w) in weights.iter().enumerate() {
        let len = min_seg + free * w / weight_sum + if i == 0 { lead_in } else { 0.0 };
        pieces.push((len, Piece::Straight { start: pos, dir }));
        pos = [pos[0] + len * dir[0], pos[1] + len * dir[1]];
        if i < turns {
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let normal = [-dir[1], dir[0]];
            pieces.push((
                arc_len,
                Piece::Arc {
                    start: pos,
                    dir,
                    sign,
                    radius,
                },
            ));
            pos = [
                pos[0] + radius * dir[0] + sign * radius * normal[0],
                pos[1] + radius * dir[1] + sign * radius * normal[1],
            ];
            dir = [sign * normal[0], sign * normal[1]];
        }
    }

    let tid = Tid::new(&spec.tid);
    let mut points = Vec::new();
    let mut piece = 0;
    let mut piece_start = 0.0;
    for t in spec.sample_times() {
        let s = spec.speed * t;
        while piece + 1 < pieces.len() && s >= piece_start + pieces[piece].0 {
            piece_start += pieces[piece].0;
            piece += 1;
        }
        let [x, y] = pieces[piece].1.at(s - piece_start);
        points.push(TrajPoint::new(tid.clone(), x, y, 0.0, t));
    }
    Ok(Trajectory::from_points(points))
}

struct Weave {
    start: f64,
    len: f64,
    amp: f64,
}

/// Race course: seeded speed random walk in `[0.5, max_speed]` and smooth
/// lateral weaves around obstacles.
pub fn gen_race_trajectory(spec: &CourseSpec) -> Result<Trajectory> {
    if spec.kind != CourseKind::Race {
        return Err(Error::invalid("gen_race_trajectory needs a race spec"));
    }
    spec.check()?;
    if !(spec.max_speed >= MIN_RACE_SPEED)
        || !(spec.obstacle_density >= 0.0)
        || !(spec.speed_jitter >= 0.0)
    {
        return Err(Error::invalid(
            "race needs max_speed >= 0.5 and non-negative density and jitter",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let knot_s = 1.0;
    let knots = (spec.duration_s / knot_s).ceil() as usize + 2;
    let step = Normal::new(0.0, spec.speed_jitter.max(f64::MIN_POSITIVE)).expect("finite sd");
    let mut speeds = Vec::with_capacity(knots);
    let mut v = spec.speed.clamp(MIN_RACE_SPEED, spec.max_speed);
    for _ in 0..knots {
        speeds.push(v);
        if spec.speed_jitter > 0.0 {
            v = (v + step.sample(&mut rng)).clamp(MIN_RACE_SPEED, spec.max_speed);
        }
    }
    let speed_at = |t: f64| {
        let k = ((t / knot_s).floor() as usize).min(knots - 2);
        let f = t / knot_s - k as f64;
        speeds[k] + f * (speeds[k + 1] - speeds[k])
    };

    let path_len = spec.max_speed * spec.duration_s + 1.0;
    let mut weaves = Vec::new();
    if spec.obstacle_density > 0.0 {
        let spacing = 100.0 / spec.obstacle_density;
        let mut s = rng.random_range(0.0..spacing);
        while s < path_len {
            let len = rng.random_range(0.4..0.9) * spacing;
            let amp = rng.random_range(0.15..0.5) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            weaves.push(Weave { start: s, len, amp });
            s += len + rng.random_range(0.05..0.6) * spacing;
        }
    }
    let mut weave_idx = 0;
    let mut heading_at = |s: f64| {
        while weave_idx < weaves.len() && s >= weaves[weave_idx].start + weaves[weave_idx].len {
            weave_idx += 1;
        }
        match weaves.get(weave_idx) {
            Some(w) if s >= w.start => w.amp * (2.0 * PI * (s - w.start) / w.len).sin(),
            _ => 0.0,
        }
    };

    const SUBSTEPS: usize = 20;
    let dt = 1.0 / (spec.sample_hz * SUBSTEPS as f64);
    let tid = Tid::new(&spec.tid);
    let times = spec.sample_times();
    let mut points = Vec::with_capacity(times.len());
    let (mut x, mut y, mut s) = (0.0f64, 0.0f64, 0.0f64);
    for (k, &t) in times.iter().enumerate() {
        if k > 0 {
            let t_prev = times[k - 1];
            for j in 0..SUBSTEPS {
                let ds = speed_at(t_prev + (j as f64 + 0.5) * dt) * dt;
                let theta = heading_at(s + 0.5 * ds);
                x += ds * theta.cos();
                y += ds * theta.sin();
                s += ds;
            }
        }
        points.push(TrajPoint::new(tid.clone(), x, y, 0.0, t));
    }
    Ok(Trajectory::from_points(points))
}

/// Parameters of the synthetic discomfort ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SicknessModel {
    /// Score per radian of accumulated heading change in a window.
    pub turn_gain: f64,
    /// Score per (Um/s)^2 of speed variance in a window.
    pub speed_gain: f64,
    pub noise_sd: f64,
    /// Score recovered every window.
    pub recovery_rate: f64,
    pub initial_score: f64,
    pub seed: u64,
}

impl Default for SicknessModel {
    fn default() -> Self {
        SicknessModel {
            turn_gain: 0.2,
            speed_gain: 0.05,
            noise_sd: 0.1,
            recovery_rate: 2.0,
            initial_score: 5.0,
            seed: 0,
        }
    }
}

/// Heading change and speed variance measured inside one window.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindowMotion {
    pub heading_change: f64,
    pub speed_variance: f64,
}

/// Sum of absolute heading changes between consecutive non-zero steps.
pub fn heading_change(points: &[TrajPoint]) -> f64 {
    let steps: Vec<[f64; 2]> = points
        .windows(2)
        .map(|w| [w[1].x - w[0].x, w[1].y - w[0].y])
        .filter(|d| d[0] != 0.0 || d[1] != 0.0)
        .collect();
    steps
        .windows(2)
        .map(|w| {
            let cross = w[0][0] * w[1][1] - w[0][1] * w[1][0];
            let dot = w[0][0] * w[1][0] + w[0][1] * w[1][1];
            cross.atan2(dot).abs()
        })
        .sum()
}

/// Population variance of sample-to-sample speeds.
pub fn speed_variance(points: &[TrajPoint]) -> Result<f64> {
    let speeds = points
        .windows(2)
        .map(|w| speed_between(&w[0], &w[1]))
        .collect::<Result<Vec<_>>>()?;
    if speeds.len() < 2 {
        return Ok(0.0);
    }
    let n = speeds.len() as f64;
    let mean = speeds.iter().sum::<f64>() / n;
    Ok(speeds.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n)
}

/// Motion statistics per window on the grid used by the feature extractor.
pub fn window_motion(traj: &Trajectory, window_s: f64) -> Result<Vec<WindowMotion>> {
    if !(window_s > 0.0) {
        return Err(Error::invalid("window length must be > 0"));
    }
    if let Err(v) = traj.validate() {
        return Err(Error::invalid(format!("invalid trajectory: {}", v[0])));
    }
    let Some(origin) = traj.first_t() else {
        return Ok(Vec::new());
    };
    let points = traj.points();
    window_spans(points, origin, window_s)
        .into_iter()
        .map(|(_, _, s, e)| {
            Ok(WindowMotion {
                heading_change: heading_change(&points[s..e]),
                speed_variance: speed_variance(&points[s..e])?,
            })
        })
        .collect()
}

/// Discomfort reports at every window boundary: the first window's start
/// and each window's end.
pub fn gen_discomfort(
    traj: &Trajectory,
    model: &SicknessModel,
    window_s: f64,
) -> Result<Vec<DiscomfortReport>> {
    let motion = window_motion(traj, window_s)?;
    let Some(origin) = traj.first_t() else {
        return Ok(Vec::new());
    };
    if !(model.noise_sd >= 0.0) {
        return Err(Error::invalid("noise_sd must be >= 0"));
    }
    let noise = Normal::new(0.0, model.noise_sd).expect("finite sd");
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let report = |t: f64, latent: f64| DiscomfortReport {
        t,
        score: latent.round() as u8,
    };

    let mut latent = model.initial_score.clamp(0.0, 10.0);
    let mut out = vec![report(origin, latent)];
    for (w, m) in motion.iter().enumerate() {
        let step = model.turn_gain * m.heading_change + model.speed_gain * m.speed_variance
            - model.recovery_rate
            + noise.sample(&mut rng);
        latent = (latent + step).clamp(0.0, 10.0);
        let (_, t1) = crate::compression::window_bounds(origin, window_s, w);
        out.push(report(t1, latent));
    }
    Ok(out)
}

/// Generates a course and its discomfort reports as one session.
pub fn gen_session(
    course: &CourseSpec,
    model: &SicknessModel,
    window_s: f64,
) -> Result<SessionLog> {
    let trajectory = generate(course)?;
    let reports = gen_discomfort(&trajectory, model, window_s)?;
    Ok(SessionLog {
        user: course.tid.clone(),
        trajectory,
        reports,
        sample_hz: course.sample_hz,
    })
}
