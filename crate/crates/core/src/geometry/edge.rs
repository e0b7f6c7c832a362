use serde::{Deserialize, Serialize};

use super::dubins::{dubins_pose_at, DubinsWord};
use super::{line_of_sight, segment_collides, Configuration, Point2, Polygon};

/// Discretization used for cost integration when the caller gives none.
pub fn default_step(length: f64) -> f64 {
    (length / 10.0).min(0.25)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EdgeShape {
    Straight,
    /// Arc parameters are turning angles in radians; the straight middle
    /// segment of a CSC word is in meters.
    Dubins {
        word: DubinsWord,
        params: [f64; 3],
        rho: f64,
    },
}

/// The curve realizing one roadmap edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeGeometry {
    from: Configuration,
    to: Configuration,
    shape: EdgeShape,
    length: f64,
}

impl EdgeGeometry {
    pub fn straight(from: Configuration, to: Configuration) -> Self {
        let length = from.position.distance(to.position);
        Self {
            from,
            to,
            shape: EdgeShape::Straight,
            length,
        }
    }

    pub(crate) fn from_parts(
        from: Configuration,
        to: Configuration,
        shape: EdgeShape,
        length: f64,
    ) -> Self {
        Self {
            from,
            to,
            shape,
            length,
        }
    }

    pub fn from(&self) -> Configuration {
        self.from
    }

    pub fn to(&self) -> Configuration {
        self.to
    }

    pub fn shape(&self) -> &EdgeShape {
        &self.shape
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn word(&self) -> Option<DubinsWord> {
        match self.shape {
            EdgeShape::Dubins { word, .. } => Some(word),
            EdgeShape::Straight => None,
        }
    }

    /// Length recomputed from the shape description alone.
    pub fn analytic_length(&self) -> f64 {
        match &self.shape {
            EdgeShape::Straight => self.from.position.distance(self.to.position),
            EdgeShape::Dubins { word, params, rho } => match word {
                DubinsWord::RLR | DubinsWord::LRL => rho * (params[0] + params[1] + params[2]),
                _ => rho * (params[0] + params[2]) + params[1],
            },
        }
    }

    /// Pose after `s` meters of travel, clamped to the curve.
    pub fn pose_at(&self, s: f64) -> Configuration {
        let s = s.clamp(0.0, self.length);
        match &self.shape {
            EdgeShape::Straight => {
                let t = if self.length > 0.0 { s / self.length } else { 0.0 };
                Configuration {
                    position: self.from.position.lerp(self.to.position, t),
                    heading: self.from.heading,
                }
            }
            EdgeShape::Dubins { word, params, rho } => {
                dubins_pose_at(self.from, *word, *params, *rho, s)
            }
        }
    }

    pub fn point_at(&self, s: f64) -> Point2 {
        self.pose_at(s).position
    }

    /// Number of equal sub-segments used at discretization `step`.
    pub fn partition_count(&self, step: f64) -> usize {
        assert!(step > 0.0, "discretization step must be positive");
        ((self.length / step).ceil() as usize).max(1)
    }

    /// Midpoints of the `partition_count(step)` equal sub-segments.
    pub fn partition_midpoints(&self, step: f64) -> impl Iterator<Item = Point2> + '_ {
        let n = self.partition_count(step);
        let sub = self.length / n as f64;
        (0..n).map(move |i| self.point_at((i as f64 + 0.5) * sub))
    }

    /// Points at both ends of each sub-segment, start and end included.
    pub fn partition_points(&self, step: f64) -> Vec<Point2> {
        let n = self.partition_count(step);
        let sub = self.length / n as f64;
        let mut pts: Vec<Point2> = (0..n).map(|i| self.point_at(i as f64 * sub)).collect();
        pts.push(self.to.position);
        pts
    }

    /// Collision test. Straight edges are exact; curves are checked chord by
    /// chord at resolution `step`.
    pub fn collides(&self, obstacles: &[Polygon], step: f64) -> bool {
        match self.shape {
            EdgeShape::Straight => segment_collides(self.from.position, self.to.position, obstacles),
            EdgeShape::Dubins { .. } => self
                .partition_points(step)
                .windows(2)
                .any(|w| segment_collides(w[0], w[1], obstacles)),
        }
    }

    /// Length of the curve whose sub-segment midpoints satisfy `pred`.
    pub fn measure_where(&self, step: f64, mut pred: impl FnMut(Point2) -> bool) -> f64 {
        if self.length <= 0.0 {
            return 0.0;
        }
        let n = self.partition_count(step);
        let hits = self.partition_midpoints(step).filter(|&p| pred(p)).count();
        (hits as f64 * (self.length / n as f64)).min(self.length)
    }
}

/// Length of `geom` travelled inside the (closed) visibility region of `threat`.
pub fn segment_exposure_length(
    geom: &EdgeGeometry,
    threat: Point2,
    obstacles: &[Polygon],
    step: f64,
) -> f64 {
    geom.measure_where(step, |p| line_of_sight(p, threat, obstacles))
}
