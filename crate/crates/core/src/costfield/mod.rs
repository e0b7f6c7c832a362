//! Cost hierarchy: lexicographically ordered cost vectors and their
//! evaluation over edge geometry.

mod scenario;

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Deref, Index};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{default_step, line_of_sight, EdgeGeometry, Point2, GEOM_EPS};

pub use scenario::{Bounds, CriterionKind, RobotModel, Scenario, ScenarioError, ScenarioFile};

/// Absolute tolerance for treating two label components as tied.
pub const DEFAULT_TIE_EPS: f64 = 1e-9;

/// Components below this are stored as exact zeros.
const CLAMP_ZERO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("cost vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("edge {0} does not start where the previous edge ends")]
    NotLinked(usize),
}

/// K non-negative costs, most important first.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CostVector(Vec<f64>);

impl CostVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Finite and non-negative in every component.
    pub fn is_admissible(&self) -> bool {
        self.0.iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    /// Keeps the listed components, in the listed order.
    pub fn select(&self, indices: &[usize]) -> CostVector {
        CostVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

impl Deref for CostVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for CostVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for CostVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl<const N: usize> From<[f64; N]> for CostVector {
    fn from(v: [f64; N]) -> Self {
        Self(v.to_vec())
    }
}

impl AddAssign<&CostVector> for CostVector {
    fn add_assign(&mut self, rhs: &CostVector) {
        assert_eq!(self.0.len(), rhs.0.len(), "cost vector length mismatch");
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
    }
}

impl Add<&CostVector> for &CostVector {
    type Output = CostVector;

    fn add(self, rhs: &CostVector) -> CostVector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl fmt::Display for CostVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Lexicographic comparison where components within `tie_eps` count as equal.
pub fn lex_compare(a: &[f64], b: &[f64], tie_eps: f64) -> Result<Ordering, CostError> {
    if a.len() != b.len() {
        return Err(CostError::LengthMismatch(a.len(), b.len()));
    }
    Ok(lex_compare_unchecked(a, b, tie_eps))
}

pub(crate) fn lex_compare_unchecked(a: &[f64], b: &[f64], tie_eps: f64) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > tie_eps {
            return if x < y { Ordering::Less } else { Ordering::Greater };
        }
    }
    Ordering::Equal
}

/// Cost vector of one edge, integrated at the default step for its length.
pub fn evaluate_edge(geom: &EdgeGeometry, scenario: &Scenario) -> CostVector {
    evaluate_edge_with_step(geom, scenario, default_step(geom.length()))
}

pub fn evaluate_edge_with_step(geom: &EdgeGeometry, scenario: &Scenario, step: f64) -> CostVector {
    let length = geom.length();
    let k = scenario.criteria().len();
    if length <= 0.0 {
        return CostVector::zeros(k);
    }
    let n = geom.partition_count(step);
    let sub = length / n as f64;
    let mids: Vec<Point2> = geom.partition_midpoints(step).collect();
    let measure = |pred: &dyn Fn(Point2) -> bool| -> f64 {
        let hits = mids.iter().filter(|&&p| pred(p)).count();
        let v = (hits as f64 * sub).min(length);
        if v < CLAMP_ZERO {
            0.0
        } else {
            v
        }
    };
    let values = scenario
        .criteria()
        .iter()
        .map(|kind| match kind {
            CriterionKind::Risk => measure(&|p| {
                scenario
                    .threats()
                    .iter()
                    .any(|&t| line_of_sight(p, t, scenario.obstacles()))
            }),
            CriterionKind::Loc => measure(&|p| {
                scenario
                    .features()
                    .iter()
                    .all(|f| f.distance(p) > scenario.sensing_range())
            }),
            CriterionKind::Com => measure(&|p| {
                scenario
                    .towers()
                    .iter()
                    .all(|t| p.distance(*t) > scenario.radio_range())
            }),
            CriterionKind::Dist => length,
        })
        .collect();
    CostVector(values)
}

/// Componentwise sum over a chain of linked edges.
pub fn evaluate_path(path: &[EdgeGeometry], scenario: &Scenario) -> Result<CostVector, CostError> {
    let mut total = CostVector::zeros(scenario.criteria().len());
    for (i, geom) in path.iter().enumerate() {
        if i > 0 && path[i - 1].to().position.distance(geom.from().position) > GEOM_EPS {
            return Err(CostError::NotLinked(i));
        }
        total += &evaluate_edge(geom, scenario);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Configuration;
    use proptest::prelude::*;

    fn scenario_json(criteria: &str, extra: &str) -> String {
        format!(
            r#"{{
                "bounds": {{"xmin": -20, "ymin": -20, "xmax": 20, "ymax": 20}},
                "obstacles": [[[0, -10], [0.5, -10], [0.5, 10], [0, 10]]],
                "threats": [[-5, 0]],
                "towers": [[-10, 0]],
                "sensing_range": 3,
                "radio_range": 10,
                "robot_model": {{"type": "holonomic2d"}},
                "criteria": {criteria}
                {extra}
            }}"#
        )
    }

    fn scenario(criteria: &str) -> Scenario {
        Scenario::from_json(&scenario_json(criteria, "")).unwrap()
    }

    fn seg(x0: f64, y0: f64, x1: f64, y1: f64) -> EdgeGeometry {
        EdgeGeometry::straight(Configuration::planar(x0, y0), Configuration::planar(x1, y1))
    }

    #[test]
    fn lex_compare_examples() {
        assert_eq!(lex_compare(&[0.0, 5.0], &[0.0, 3.0], 1e-9), Ok(Ordering::Greater));
        assert_eq!(lex_compare(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 1e-9), Ok(Ordering::Equal));
        assert_eq!(lex_compare(&[0.0, 9.0], &[0.1, 1.0], 1e-9), Ok(Ordering::Less));
        assert_eq!(lex_compare(&[0.0], &[0.0, 1.0], 1e-9), Err(CostError::LengthMismatch(1, 2)));
        assert_eq!(lex_compare(&[1.0, 5.0], &[1.0 + 1e-12, 4.0], 1e-9), Ok(Ordering::Greater));
    }

    #[test]
    fn hidden_edge_costs_only_distance() {
        let s = scenario(r#"["risk", "dist"]"#);
        let c = evaluate_edge(&seg(2.0, 1.0, 5.0, 1.0), &s);
        assert_eq!(c.as_slice(), &[0.0, 3.0]);
    }

    #[test]
    fn visible_edge_is_fully_exposed() {
        let s = scenario(r#"["risk", "dist"]"#);
        let c = evaluate_edge(&seg(-4.0, 3.0, -4.0, 5.0), &s);
        assert!((c[0] - 2.0).abs() < 1e-12);
        assert_eq!(c[1], 2.0);
    }

    #[test]
    fn half_out_of_radio_range() {
        // Tower at (-10, 0) with range 10: x in [-2, 0] covered, (0, 2] not.
        let s = scenario(r#"["com", "dist"]"#);
        let g = seg(-2.0, 0.0, 2.0, 0.0);
        let step = default_step(g.length());
        let c = evaluate_edge(&g, &s);
        assert!((c[0] - 2.0).abs() <= step, "{c}");
        assert_eq!(c[1], 4.0);
    }

    #[test]
    fn localization_deficit_uses_feature_distance() {
        // Features default to the obstacle wall at x in [0, 0.5]; range 3.
        let s = scenario(r#"["loc", "dist"]"#);
        let g = seg(-6.0, 0.0, -2.0, 0.0);
        let c = evaluate_edge(&g, &s);
        // x < -3 is beyond range: 3 m of the 4 m edge.
        assert!((c[0] - 3.0).abs() <= default_step(4.0), "{c}");
    }

    #[test]
    fn multiple_threats_count_once() {
        let s = Scenario::from_json(&scenario_json(r#"["risk", "dist"]"#, "").replace(
            r#""threats": [[-5, 0]]"#,
            r#""threats": [[-5, 0], [-5, 1]]"#,
        ))
        .unwrap();
        let c = evaluate_edge(&seg(-4.0, 3.0, -4.0, 5.0), &s);
        assert!((c[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn path_sums() {
        let s = scenario(r#"["risk", "dist"]"#);
        assert_eq!(evaluate_path(&[], &s).unwrap().as_slice(), &[0.0, 0.0]);
        let e = seg(-4.0, 3.0, -4.0, 5.0);
        assert_eq!(evaluate_path(std::slice::from_ref(&e), &s).unwrap(), evaluate_edge(&e, &s));
        let a = CostVector::from([1.0, 2.0]);
        let b = CostVector::from([0.0, 3.0]);
        assert_eq!((&a + &b).as_slice(), &[1.0, 5.0]);
        let broken = [seg(0.0, 0.0, 1.0, 0.0), seg(2.0, 0.0, 3.0, 0.0)];
        assert_eq!(evaluate_path(&broken, &s), Err(CostError::NotLinked(1)));
    }

    #[test]
    fn removing_a_threat_never_adds_exposure() {
        let two = Scenario::from_json(&scenario_json(r#"["risk", "dist"]"#, "").replace(
            r#""threats": [[-5, 0]]"#,
            r#""threats": [[-5, 0], [5, 5]]"#,
        ))
        .unwrap();
        let one = scenario(r#"["risk", "dist"]"#);
        for i in 0..30 {
            let y = -9.0 + 0.6 * i as f64;
            let g = seg(-8.0, y, 8.0, -y);
            assert!(evaluate_edge(&g, &one)[0] <= evaluate_edge(&g, &two)[0]);
        }
    }

    #[test]
    fn positive_length_edges_have_positive_distance() {
        let s = scenario(r#"["risk", "com", "dist"]"#);
        let c = evaluate_edge(&seg(1.0, 1.0, 1.0, 1.0 + 1e-6), &s);
        assert!(c.is_admissible());
        assert!(c[2] > 0.0);
    }

    fn chain(points: &[(f64, f64)]) -> Vec<EdgeGeometry> {
        points.windows(2).map(|w| seg(w[0].0, w[0].1, w[1].0, w[1].1)).collect()
    }

    proptest! {
        #[test]
        fn lex_compare_is_a_total_preorder(
            a in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0, 2.0]), 3),
            b in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0, 2.0]), 3),
            c in prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0, 2.0]), 3),
        ) {
            let ab = lex_compare(&a, &b, 1e-9).unwrap();
            let ba = lex_compare(&b, &a, 1e-9).unwrap();
            prop_assert_eq!(ab, ba.reverse());
            let bc = lex_compare(&b, &c, 1e-9).unwrap();
            let ac = lex_compare(&a, &c, 1e-9).unwrap();
            if ab != Ordering::Greater && bc != Ordering::Greater {
                prop_assert!(ac != Ordering::Greater);
            }
        }

        #[test]
        fn path_cost_is_additive(pts in prop::collection::vec((-15.0f64..15.0, -15.0f64..15.0), 2..8), cut in 0usize..8) {
            let s = scenario(r#"["risk", "loc", "com", "dist"]"#);
            let path = chain(&pts);
            let cut = cut.min(path.len());
            let whole = evaluate_path(&path, &s).unwrap();
            let mut running = evaluate_path(&path[..cut], &s).unwrap();
            for g in &path[cut..] {
                running += &evaluate_edge(g, &s);
            }
            prop_assert_eq!(&whole, &running);
            let split = &evaluate_path(&path[..cut], &s).unwrap() + &evaluate_path(&path[cut..], &s).unwrap();
            for (x, y) in whole.iter().zip(split.iter()) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
            prop_assert!(whole.is_admissible());
        }
    }
}
