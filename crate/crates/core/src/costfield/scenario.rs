use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Feature, Point2, Polygon};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read scenario {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed scenario JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl fmt::Display) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.to_string(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriterionKind {
    /// Length travelled inside the visibility region of any threat.
    Risk,
    /// Length travelled farther than the sensing range from every feature.
    Loc,
    /// Length travelled outside radio range of every tower.
    Com,
    Dist,
}

impl CriterionKind {
    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Risk => "risk",
            CriterionKind::Loc => "loc",
            CriterionKind::Com => "com",
            CriterionKind::Dist => "dist",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "risk" => Some(CriterionKind::Risk),
            "loc" => Some(CriterionKind::Loc),
            "com" => Some(CriterionKind::Com),
            "dist" => Some(CriterionKind::Dist),
            _ => None,
        }
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bounds {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl Bounds {
    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RobotModel {
    Holonomic2d,
    Dubins { rho: f64 },
}

/// On-disk scenario layout, before validation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub bounds: Bounds,
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub threats: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub towers: Vec<[f64; 2]>,
    pub sensing_range: f64,
    pub radio_range: f64,
    pub robot_model: RobotModel,
    pub criteria: Vec<CriterionKind>,
}

/// A validated, immutable planning workspace together with its cost hierarchy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioFile", into = "ScenarioFile")]
pub struct Scenario {
    bounds: Bounds,
    obstacles: Vec<Polygon>,
    threats: Vec<Point2>,
    features: Vec<Feature>,
    towers: Vec<Point2>,
    sensing_range: f64,
    radio_range: f64,
    robot_model: RobotModel,
    criteria: Vec<CriterionKind>,
}

impl TryFrom<ScenarioFile> for Scenario {
    type Error = ScenarioError;

    fn try_from(file: ScenarioFile) -> Result<Self, ScenarioError> {
        Scenario::from_file_struct(file)
    }
}

impl From<Scenario> for ScenarioFile {
    fn from(s: Scenario) -> Self {
        let ring = |p: &Polygon| p.vertices().iter().map(|&v| v.into()).collect::<Vec<[f64; 2]>>();
        ScenarioFile {
            bounds: s.bounds,
            obstacles: s.obstacles.iter().map(ring).collect(),
            threats: s.threats.iter().map(|&p| p.into()).collect(),
            features: Some(
                s.features
                    .iter()
                    .map(|f| match f {
                        Feature::Point(p) => vec![(*p).into()],
                        Feature::Polygon(poly) => ring(poly),
                    })
                    .collect(),
            ),
            towers: s.towers.iter().map(|&p| p.into()).collect(),
            sensing_range: s.sensing_range,
            radio_range: s.radio_range,
            robot_model: s.robot_model,
            criteria: s.criteria,
        }
    }
}

fn point(field: String, [x, y]: [f64; 2]) -> Result<Point2, ScenarioError> {
    let p = Point2::new(x, y);
    if !p.is_finite() {
        return Err(invalid(field, "coordinates must be finite"));
    }
    Ok(p)
}

fn positive(field: &str, v: f64) -> Result<f64, ScenarioError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(field, format!("must be a positive finite number, got {v}")))
    }
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = serde_json::from_str(text)?;
        Self::from_file_struct(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_file_struct(file: ScenarioFile) -> Result<Self, ScenarioError> {
        let b = file.bounds;
        if ![b.xmin, b.ymin, b.xmax, b.ymax].iter().all(|v| v.is_finite())
            || b.xmin >= b.xmax
            || b.ymin >= b.ymax
        {
            return Err(invalid("bounds", "need finite xmin < xmax and ymin < ymax"));
        }
        let obstacles = file
            .obstacles
            .iter()
            .enumerate()
            .map(|(i, ring)| {
                let pts = ring
                    .iter()
                    .map(|&v| point(format!("obstacles[{i}]"), v))
                    .collect::<Result<Vec<_>, _>>()?;
                Polygon::new(pts).map_err(|e| invalid(format!("obstacles[{i}]"), e))
            })
            .collect::<Result<Vec<_>, _>>()?;

        let placed = |field: &str, raw: &[[f64; 2]]| -> Result<Vec<Point2>, ScenarioError> {
            raw.iter()
                .enumerate()
                .map(|(i, &v)| {
                    let name = format!("{field}[{i}]");
                    let p = point(name.clone(), v)?;
                    if !b.contains(p) {
                        return Err(invalid(name, "lies outside the bounds"));
                    }
                    if obstacles.iter().any(|o| o.contains_strictly(p)) {
                        return Err(invalid(name, "lies inside an obstacle"));
                    }
                    Ok(p)
                })
                .collect()
        };
        let threats = placed("threats", &file.threats)?;
        let towers = placed("towers", &file.towers)?;

        let features = match &file.features {
            None => obstacles.iter().cloned().map(Feature::Polygon).collect(),
            Some(raw) => raw
                .iter()
                .enumerate()
                .map(|(i, ring)| {
                    let field = format!("features[{i}]");
                    let pts = ring
                        .iter()
                        .map(|&v| point(field.clone(), v))
                        .collect::<Result<Vec<_>, _>>()?;
                    match pts.len() {
                        1 => Ok(Feature::Point(pts[0])),
                        0 | 2 => Err(invalid(field, "a feature is one point or a polygon")),
                        _ => Polygon::new(pts)
                            .map(Feature::Polygon)
                            .map_err(|e| invalid(field, e)),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?,
        };

        let sensing_range = positive("sensing_range", file.sensing_range)?;
        let radio_range = positive("radio_range", file.radio_range)?;
        if let RobotModel::Dubins { rho } = file.robot_model {
            positive("robot_model.rho", rho)?;
        }

        let criteria = file.criteria;
        if criteria.last() != Some(&CriterionKind::Dist) {
            return Err(invalid("criteria", "must be non-empty and end with \"dist\""));
        }
        for (i, c) in criteria.iter().enumerate() {
            if criteria[..i].contains(c) {
                return Err(invalid("criteria", format!("\"{c}\" listed twice")));
            }
        }
        if criteria.contains(&CriterionKind::Loc) && features.is_empty() {
            return Err(invalid("features", "\"loc\" needs at least one feature"));
        }
        if criteria.contains(&CriterionKind::Com) && towers.is_empty() {
            return Err(invalid("towers", "\"com\" needs at least one tower"));
        }

        Ok(Scenario {
            bounds: b,
            obstacles,
            threats,
            features,
            towers,
            sensing_range,
            radio_range,
            robot_model: file.robot_model,
            criteria,
        })
    }

    /// Same workspace with a different hierarchy, validated the same way.
    pub fn with_criteria(&self, criteria: Vec<CriterionKind>) -> Result<Self, ScenarioError> {
        let mut file = ScenarioFile::from(self.clone());
        file.criteria = criteria;
        Scenario::from_file_struct(file)
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn threats(&self) -> &[Point2] {
        &self.threats
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn towers(&self) -> &[Point2] {
        &self.towers
    }

    pub fn sensing_range(&self) -> f64 {
        self.sensing_range
    }

    pub fn radio_range(&self) -> f64 {
        self.radio_range
    }

    pub fn robot_model(&self) -> RobotModel {
        self.robot_model
    }

    pub fn criteria(&self) -> &[CriterionKind] {
        &self.criteria
    }

    /// True iff `p` is inside the bounds and outside every (closed) obstacle.
    pub fn is_free(&self, p: Point2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "bounds": {"xmin": 0, "ymin": 0, "xmax": 10, "ymax": 10},
        "obstacles": [[[4, 4], [6, 4], [6, 6], [4, 6]]],
        "threats": [[1, 1]],
        "towers": [[9, 9]],
        "sensing_range": 3,
        "radio_range": 5,
        "robot_model": {"type": "dubins", "rho": 0.5},
        "criteria": ["risk", "loc", "com", "dist"]
    }"#;

    fn field_of(err: ScenarioError) -> String {
        match err {
            ScenarioError::Invalid { field, .. } => field,
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn parses_and_defaults_features_to_obstacles() {
        let s = Scenario::from_json(BASE).unwrap();
        assert_eq!(s.features().len(), 1);
        assert_eq!(s.robot_model(), RobotModel::Dubins { rho: 0.5 });
        assert_eq!(s.criteria().len(), 4);
        assert!(s.is_free(Point2::new(1.0, 1.0)));
        assert!(!s.is_free(Point2::new(4.0, 5.0)));
    }

    #[test]
    fn round_trips_through_json() {
        let s = Scenario::from_json(BASE).unwrap();
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn rejects_bad_fields_by_name() {
        let cases = [
            (BASE.replace("[[1, 1]]", "[[5, 5]]"), "threats[0]"),
            (BASE.replace("[[9, 9]]", "[[11, 9]]"), "towers[0]"),
            (BASE.replace("\"sensing_range\": 3", "\"sensing_range\": 0"), "sensing_range"),
            (BASE.replace("\"rho\": 0.5", "\"rho\": -1"), "robot_model.rho"),
            (BASE.replace("\"com\", \"dist\"", "\"dist\", \"com\""), "criteria"),
            (BASE.replace("\"risk\", \"loc\"", "\"risk\", \"risk\""), "criteria"),
            (BASE.replace("[6, 4], [6, 6]", "[6, 6], [6, 4]"), "obstacles[0]"),
            (BASE.replace("\"xmax\": 10", "\"xmax\": -1"), "bounds"),
        ];
        for (json, field) in cases {
            assert_eq!(field_of(Scenario::from_json(&json).unwrap_err()), field, "{json}");
        }
    }

    #[test]
    fn unknown_fields_and_criteria_are_parse_errors() {
        let extra = BASE.replace("\"threats\"", "\"threatz\": [], \"threats\"");
        assert!(matches!(Scenario::from_json(&extra), Err(ScenarioError::Parse(_))));
        let bad = BASE.replace("\"loc\"", "\"fuel\"");
        assert!(matches!(Scenario::from_json(&bad), Err(ScenarioError::Parse(_))));
    }

    #[test]
    fn com_needs_towers() {
        let json = BASE.replace("\"towers\": [[9, 9]]", "\"towers\": []");
        assert_eq!(field_of(Scenario::from_json(&json).unwrap_err()), "towers");
    }

    #[test]
    fn point_features() {
        let json = BASE.replace("\"towers\"", "\"features\": [[[2, 8]], [[7, 1], [8, 1], [8, 2]]], \"towers\"");
        let s = Scenario::from_json(&json).unwrap();
        assert!(matches!(s.features()[0], Feature::Point(_)));
        assert!(matches!(s.features()[1], Feature::Polygon(_)));
    }
}
