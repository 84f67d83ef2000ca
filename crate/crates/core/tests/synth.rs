use cyberstc::eval::spearman;
use cyberstc::synth::*;
use cyberstc::trajectory::validate_trajectory;
use cyberstc::{stc_compress, windowed_features, CompressionConfig, Trajectory};

/// Counts direction changes by labelling every axis-aligned sampling step
/// with its compass direction and skipping the diagonal steps across arcs.
fn cardinal_turns(traj: &Trajectory) -> usize {
    let mut labels = Vec::new();
    for w in traj.points().windows(2) {
        let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
        let label = if dy.abs() < 1e-9 && dx.abs() > 1e-9 {
            if dx > 0.0 {
                'E'
            } else {
                'W'
            }
        } else if dx.abs() < 1e-9 && dy.abs() > 1e-9 {
            if dy > 0.0 {
                'N'
            } else {
                'S'
            }
        } else {
            continue;
        };
        if labels.last() != Some(&label) {
            labels.push(label);
        }
    }
    labels.len().saturating_sub(1)
}

#[test]
fn maze_turn_count_is_exact() {
    for seed in 0..10 {
        for turns in [0, 1, 40, 60, 120] {
            let spec = CourseSpec {
                turn_count: turns,
                ..CourseSpec::maze(seed)
            };
            let traj = gen_maze_trajectory(&spec).unwrap();
            assert_eq!(cardinal_turns(&traj), turns, "seed {seed}");
        }
    }
}

#[test]
fn maze_speed_is_constant_and_planar() {
    let spec = CourseSpec::maze(4);
    let traj = generate(&spec).unwrap();
    for w in traj.points().windows(2) {
        let (dx, dy) = (w[1].x - w[0].x, w[1].y - w[0].y);
        let step = (dx * dx + dy * dy).sqrt();
        let dt = w[1].t - w[0].t;
        // arcs shorten the chord slightly
        assert!(step <= spec.speed * dt + 1e-9 && step > 0.8 * spec.speed * dt);
        assert_eq!(w[1].z, 0.0);
    }
}

#[test]
fn maze_rejects_too_many_turns() {
    let spec = CourseSpec {
        duration_s: 30.0,
        turn_count: 40,
        ..CourseSpec::maze(0)
    };
    assert!(gen_maze_trajectory(&spec).is_err());
    assert!(gen_maze_trajectory(&CourseSpec::race(0)).is_err());
}

#[test]
fn lead_in_keeps_the_first_stretch_straight() {
    let spec = CourseSpec {
        lead_in_s: 60.0,
        duration_s: 900.0,
        turn_count: 100,
        ..CourseSpec::maze(2)
    };
    let traj = generate(&spec).unwrap();
    let first = traj.slice_window(0.0, 60.0).unwrap();
    assert!(first.points().iter().all(|p| p.y == 0.0));
    assert_eq!(cardinal_turns(&traj), 100);
}

#[test]
fn race_speed_stays_in_bounds() {
    for seed in 0..10 {
        let spec = CourseSpec::race(seed);
        let traj = generate(&spec).unwrap();
        for w in traj.points().windows(2) {
            let speed = cyberstc::trajectory::speed_between(&w[0], &w[1]).unwrap();
            assert!(speed <= spec.max_speed + 1e-9, "seed {seed}: {speed}");
        }
    }
}

#[test]
fn straight_race_compresses_like_a_line() {
    let spec = CourseSpec {
        obstacle_density: 0.0,
        speed_jitter: 0.0,
        duration_s: 120.0,
        ..CourseSpec::race(1)
    };
    let traj = generate(&spec).unwrap();
    let r = stc_compress(traj.points(), &CompressionConfig::default()).unwrap();
    assert_eq!(r.kept, vec![0, traj.len() - 1]);
}

#[test]
fn generators_are_valid_and_deterministic() {
    for seed in 0..20 {
        for spec in [CourseSpec::maze(seed), CourseSpec::race(seed)] {
            let a = generate(&spec).unwrap();
            assert!(validate_trajectory(a.points()).is_ok());
            assert_eq!(a, generate(&spec).unwrap());
            assert_eq!(a.first_t(), Some(0.0));
        }
    }
}

#[test]
fn maze_compresses_more_than_race_for_every_seed() {
    let cfg = CompressionConfig::default();
    let mean_rate = |spec: &CourseSpec| {
        let f = windowed_features(&generate(spec).unwrap(), 120.0, &cfg).unwrap();
        f.iter().map(|f| f.rate).sum::<f64>() / f.len() as f64
    };
    for seed in 0..20 {
        let maze = mean_rate(&CourseSpec::maze(seed));
        let race = mean_rate(&CourseSpec::race(seed));
        assert!(maze > race, "seed {seed}: maze {maze} race {race}");
    }
}

#[test]
fn smooth_motion_never_raises_discomfort() {
    let spec = CourseSpec {
        turn_count: 0,
        duration_s: 600.0,
        ..CourseSpec::maze(0)
    };
    let traj = generate(&spec).unwrap();
    let model = SicknessModel {
        noise_sd: 0.0,
        ..Default::default()
    };
    let reports = gen_discomfort(&traj, &model, 60.0).unwrap();
    assert_eq!(reports.len(), 11);
    assert!(reports.windows(2).all(|w| w[1].score <= w[0].score));
}

#[test]
fn turn_heavy_window_raises_discomfort() {
    let spec = CourseSpec {
        turn_count: 30,
        duration_s: 60.0,
        ..CourseSpec::maze(3)
    };
    let traj = generate(&spec).unwrap();
    let model = SicknessModel {
        noise_sd: 0.0,
        initial_score: 0.0,
        ..Default::default()
    };
    let turn = window_motion(&traj, 60.0).unwrap()[0].heading_change;
    assert!(model.turn_gain * turn > model.recovery_rate);
    let reports = gen_discomfort(&traj, &model, 60.0).unwrap();
    assert!(reports[1].score > reports[0].score);
}

#[test]
fn discomfort_is_reproducible_and_bounded() {
    for seed in 0..10 {
        for course in [CourseSpec::maze(seed), CourseSpec::race(seed)] {
            let model = SicknessModel {
                noise_sd: 1.0,
                seed,
                ..Default::default()
            };
            let a = gen_session(&course, &model, 60.0).unwrap();
            assert_eq!(a, gen_session(&course, &model, 60.0).unwrap());
            assert!(a.reports.iter().all(|r| r.score <= 10));
            assert!(a.validate().is_ok());
        }
    }
}

#[test]
fn turning_explains_reported_changes() {
    // 50 one-minute windows from five ten-minute sessions, default gains
    let (mut turns, mut changes) = (Vec::new(), Vec::new());
    for seed in 0..5 {
        let course = CourseSpec {
            duration_s: 600.0,
            ..CourseSpec::maze(seed)
        };
        let traj = generate(&course).unwrap();
        let reports = gen_discomfort(
            &traj,
            &SicknessModel {
                seed,
                ..Default::default()
            },
            60.0,
        )
        .unwrap();
        turns.extend(
            window_motion(&traj, 60.0)
                .unwrap()
                .iter()
                .map(|m| m.heading_change),
        );
        changes.extend(
            reports
                .windows(2)
                .map(|w| w[1].score as f64 - w[0].score as f64),
        );
    }
    assert_eq!(turns.len(), 50);
    let rho = spearman(&turns, &changes).unwrap();
    assert!(rho > 0.8, "rho {rho}");
}
