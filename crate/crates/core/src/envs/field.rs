//! Randomized disk obstacle fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

/// Axis-aligned workspace rectangle, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Workspace {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Workspace {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleField {
    pub obstacles: Vec<Obstacle>,
    pub bounds: Workspace,
    pub start: [f64; 2],
    pub goal: [f64; 2],
}

impl ObstacleField {
    /// True when `p` lies strictly inside an obstacle grown by `inflation`.
    #[inline]
    pub fn collides(&self, p: [f64; 2], inflation: f64) -> bool {
        self.obstacles.iter().any(|o| {
            let dx = p[0] - o.center[0];
            let dy = p[1] - o.center[1];
            let r = o.radius + inflation;
            dx * dx + dy * dy < r * r
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("field serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Difficulty {
    Easy,
    Hard,
}

/// Parameters of the rejection sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub bounds: Workspace,
    pub max_obstacles: usize,
    /// Fewer placements than this after `max_attempts` is a generation error.
    pub min_obstacles: usize,
    pub radius_min: f64,
    pub radius_max: f64,
    /// Minimum surface-to-surface gap between obstacles.
    pub clearance: f64,
    /// Minimum gap between the start / goal points and any obstacle surface.
    pub endpoint_margin: f64,
    pub start_region: Workspace,
    pub goal_region: Workspace,
    pub max_attempts: usize,
}

impl FieldSpec {
    pub fn for_difficulty(difficulty: Difficulty) -> Self {
        let bounds = Workspace {
            x_min: 0.0,
            x_max: 14.0,
            y_min: -5.0,
            y_max: 5.0,
        };
        let (radius_max, clearance) = match difficulty {
            Difficulty::Easy => (0.5, 0.75),
            Difficulty::Hard => (0.6, 0.5),
        };
        Self {
            bounds,
            max_obstacles: 50,
            min_obstacles: 0,
            radius_min: 0.2,
            radius_max,
            clearance,
            endpoint_margin: 1.0,
            start_region: Workspace {
                x_min: 0.5,
                x_max: 1.5,
                y_min: -3.0,
                y_max: 3.0,
            },
            goal_region: Workspace {
                x_min: 12.5,
                x_max: 13.5,
                y_min: -3.0,
                y_max: 3.0,
            },
            max_attempts: 10_000,
        }
    }
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Rejection-samples a field for `seed`; deterministic per (spec, seed).
pub fn generate_obstacle_field(spec: &FieldSpec, seed: u64) -> Result<ObstacleField> {
    let fail = |detail: String| Error::Generation { seed, detail };
    if spec.radius_min <= 0.0 || spec.radius_max < spec.radius_min {
        return Err(fail("invalid radius range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample_point = |rng: &mut ChaCha8Rng, w: &Workspace| {
        [uniform_in(rng, w.x_min, w.x_max), uniform_in(rng, w.y_min, w.y_max)]
    };
    let start = sample_point(&mut rng, &spec.start_region);
    let goal = sample_point(&mut rng, &spec.goal_region);
    if !spec.bounds.contains(start) || !spec.bounds.contains(goal) {
        return Err(fail("start or goal region leaves the workspace".into()));
    }

    let mut obstacles: Vec<Obstacle> = Vec::new();
    let mut attempts = 0;
    while obstacles.len() < spec.max_obstacles && attempts < spec.max_attempts {
        attempts += 1;
        let radius = uniform_in(&mut rng, spec.radius_min, spec.radius_max);
        let center = sample_point(&mut rng, &spec.bounds);
        let gap_to = |p: [f64; 2]| ((center[0] - p[0]).powi(2) + (center[1] - p[1]).powi(2)).sqrt() - radius;
        if gap_to(start) < spec.endpoint_margin || gap_to(goal) < spec.endpoint_margin {
            continue;
        }
        let clear = obstacles.iter().all(|o| {
            let d = ((center[0] - o.center[0]).powi(2) + (center[1] - o.center[1]).powi(2)).sqrt();
            d - radius - o.radius >= spec.clearance
        });
        if clear {
            obstacles.push(Obstacle { center, radius });
        }
    }
    if obstacles.len() < spec.min_obstacles {
        return Err(fail(format!(
            "placed {} of at least {} obstacles in {} attempts",
            obstacles.len(),
            spec.min_obstacles,
            spec.max_attempts
        )));
    }
    Ok(ObstacleField {
        obstacles,
        bounds: spec.bounds,
        start,
        goal,
    })
}

/// The fixed symmetric two-homotopy instance: start (0, 0), goal (5, 0), one
/// disk of radius 0.8 centered at (2.5, 0).
pub fn bimodal_field() -> ObstacleField {
    ObstacleField {
        obstacles: vec![Obstacle {
            center: [2.5, 0.0],
            radius: 0.8,
        }],
        bounds: Workspace {
            x_min: -1.0,
            x_max: 6.0,
            y_min: -3.0,
            y_max: 3.0,
        },
        start: [0.0, 0.0],
        goal: [5.0, 0.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_field() {
        let spec = FieldSpec::for_difficulty(Difficulty::Easy);
        let a = generate_obstacle_field(&spec, 7).unwrap();
        let b = generate_obstacle_field(&spec, 7).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_obstacle_field(&spec, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_obstacle_override() {
        let mut spec = FieldSpec::for_difficulty(Difficulty::Hard);
        spec.max_obstacles = 0;
        let f = generate_obstacle_field(&spec, 3).unwrap();
        assert!(f.obstacles.is_empty());
    }

    #[test]
    fn impossible_minimum_reports_seed() {
        let mut spec = FieldSpec::for_difficulty(Difficulty::Easy);
        spec.min_obstacles = 10_000;
        spec.max_obstacles = 10_000;
        spec.max_attempts = 200;
        match generate_obstacle_field(&spec, 99) {
            Err(Error::Generation { seed, .. }) => assert_eq!(seed, 99),
            other => panic!("expected generation error, got {other:?}"),
        }
    }

    #[test]
    fn json_roundtrip() {
        let f = bimodal_field();
        assert_eq!(ObstacleField::from_json(&f.to_json()).unwrap(), f);
    }

    #[test]
    fn collision_is_strict() {
        let f = bimodal_field();
        assert!(f.collides([2.5, 0.0], 0.0));
        assert!(!f.collides([2.5, 0.8], 0.0));
        assert!(f.collides([2.5, 0.8], 0.01));
    }
}
