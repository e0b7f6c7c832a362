//! Six-word Dubins solver for a forward-only vehicle with minimum turning
//! radius `rho`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{normalize_angle, Configuration, EdgeGeometry, EdgeShape, Point2, GEOM_EPS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DubinsWord {
    LSL,
    RSR,
    LSR,
    RSL,
    RLR,
    LRL,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Turn {
    Left,
    Straight,
    Right,
}

impl DubinsWord {
    /// Tie-break order when two words have equal length.
    pub const ALL: [DubinsWord; 6] = [
        DubinsWord::LSL,
        DubinsWord::RSR,
        DubinsWord::LSR,
        DubinsWord::RSL,
        DubinsWord::RLR,
        DubinsWord::LRL,
    ];

    pub(crate) fn segments(self) -> [Turn; 3] {
        use Turn::*;
        match self {
            DubinsWord::LSL => [Left, Straight, Left],
            DubinsWord::RSR => [Right, Straight, Right],
            DubinsWord::LSR => [Left, Straight, Right],
            DubinsWord::RSL => [Right, Straight, Left],
            DubinsWord::RLR => [Right, Left, Right],
            DubinsWord::LRL => [Left, Right, Left],
        }
    }
}

impl fmt::Display for DubinsWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Angle in `[0, 2π)`, snapping values within 1e-9 of a full turn to zero so
/// that aligned poses do not pick up a spurious loop.
fn mod2pi(theta: f64) -> f64 {
    let r = normalize_angle(theta);
    if r > TAU - 1e-9 {
        0.0
    } else {
        r
    }
}

/// Normalized segment parameters `(t, p, q)` of one word, in units of `rho`.
fn word_params(word: DubinsWord, alpha: f64, beta: f64, d: f64) -> Option<[f64; 3]> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let c_ab = (alpha - beta).cos();
    let sqrt_clamped = |p_sq: f64| -> Option<f64> {
        if p_sq < -1e-10 {
            None
        } else {
            Some(p_sq.max(0.0).sqrt())
        }
    };
    match word {
        DubinsWord::LSL => {
            let p = sqrt_clamped(2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sa - sb))?;
            if p < 1e-9 {
                // Both turning circles coincide; one arc does the job.
                return Some([mod2pi(beta - alpha), 0.0, 0.0]);
            }
            let dir = (cb - ca).atan2(d + sa - sb);
            Some([mod2pi(dir - alpha), p, mod2pi(beta - dir)])
        }
        DubinsWord::RSR => {
            let p = sqrt_clamped(2.0 + d * d - 2.0 * c_ab + 2.0 * d * (sb - sa))?;
            if p < 1e-9 {
                return Some([mod2pi(alpha - beta), 0.0, 0.0]);
            }
            let dir = (ca - cb).atan2(d - sa + sb);
            Some([mod2pi(alpha - dir), p, mod2pi(dir - beta)])
        }
        DubinsWord::LSR => {
            let p = sqrt_clamped(-2.0 + d * d + 2.0 * c_ab + 2.0 * d * (sa + sb))?;
            let dir = (-ca - cb).atan2(d + sa + sb) - (-2.0f64).atan2(p);
            Some([mod2pi(dir - alpha), p, mod2pi(dir - beta)])
        }
        DubinsWord::RSL => {
            let p = sqrt_clamped(-2.0 + d * d + 2.0 * c_ab - 2.0 * d * (sa + sb))?;
            let dir = (ca + cb).atan2(d - sa - sb) - 2.0f64.atan2(p);
            Some([mod2pi(alpha - dir), p, mod2pi(beta - dir)])
        }
        DubinsWord::RLR => {
            let cos_p = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sa - sb)) / 8.0;
            if cos_p.abs() > 1.0 + 1e-12 {
                return None;
            }
            let phi = (ca - cb).atan2(d - sa + sb);
            let p = mod2pi(TAU - cos_p.clamp(-1.0, 1.0).acos());
            let t = mod2pi(alpha - phi + mod2pi(p / 2.0));
            Some([t, p, mod2pi(alpha - beta - t + p)])
        }
        DubinsWord::LRL => {
            let cos_p = (6.0 - d * d + 2.0 * c_ab + 2.0 * d * (sb - sa)) / 8.0;
            if cos_p.abs() > 1.0 + 1e-12 {
                return None;
            }
            let phi = (ca - cb).atan2(d + sa - sb);
            let p = mod2pi(TAU - cos_p.clamp(-1.0, 1.0).acos());
            let t = mod2pi(-alpha - phi + p / 2.0);
            Some([t, p, mod2pi(beta - alpha - t + p)])
        }
    }
}

/// Converts normalized parameters to stored ones: arcs in radians, the
/// straight middle segment in meters.
fn to_stored(word: DubinsWord, params: [f64; 3], rho: f64) -> ([f64; 3], f64) {
    match word {
        DubinsWord::RLR | DubinsWord::LRL => (params, rho * (params[0] + params[1] + params[2])),
        _ => {
            let straight = params[1] * rho;
            (
                [params[0], straight, params[2]],
                rho * (params[0] + params[2]) + straight,
            )
        }
    }
}

fn frame(q0: &Configuration, q1: &Configuration, rho: f64) -> (f64, f64, f64) {
    let dx = q1.position.x - q0.position.x;
    let dy = q1.position.y - q0.position.y;
    let d = dx.hypot(dy) / rho;
    let theta = if d > 0.0 { dy.atan2(dx) } else { 0.0 };
    let h0 = q0.heading.expect("dubins start needs a heading");
    let h1 = q1.heading.expect("dubins goal needs a heading");
    (mod2pi(h0 - theta), mod2pi(h1 - theta), d)
}

/// The curve of one specific word, if that word admits a solution.
pub fn dubins_word_path(
    q0: Configuration,
    q1: Configuration,
    rho: f64,
    word: DubinsWord,
) -> Option<EdgeGeometry> {
    let (alpha, beta, d) = frame(&q0, &q1, rho);
    let params = word_params(word, alpha, beta, d)?;
    let (params, length) = to_stored(word, params, rho);
    Some(EdgeGeometry::from_parts(
        q0,
        q1,
        EdgeShape::Dubins { word, params, rho },
        length,
    ))
}

/// Shortest Dubins curve from `q0` to `q1`. Equal lengths resolve in
/// [`DubinsWord::ALL`] order.
///
/// Panics if `rho <= 0` or either configuration lacks a heading.
pub fn dubins_shortest_path(q0: Configuration, q1: Configuration, rho: f64) -> EdgeGeometry {
    assert!(rho > 0.0, "turning radius must be positive");
    let (alpha, beta, d) = frame(&q0, &q1, rho);
    if d * rho <= GEOM_EPS && (alpha - beta).abs() <= GEOM_EPS {
        return EdgeGeometry::from_parts(
            q0,
            q1,
            EdgeShape::Dubins {
                word: DubinsWord::LSL,
                params: [0.0; 3],
                rho,
            },
            0.0,
        );
    }
    let mut best: Option<(DubinsWord, [f64; 3], f64)> = None;
    for word in DubinsWord::ALL {
        if let Some(params) = word_params(word, alpha, beta, d) {
            let (stored, length) = to_stored(word, params, rho);
            if best.is_none_or(|(_, _, l)| length < l) {
                best = Some((word, stored, length));
            }
        }
    }
    // LSL always has a solution.
    let (word, params, length) = best.expect("some Dubins word always exists");
    EdgeGeometry::from_parts(q0, q1, EdgeShape::Dubins { word, params, rho }, length)
}

/// Pose after travelling `s` meters along a Dubins curve that starts at `start`.
pub(crate) fn dubins_pose_at(
    start: Configuration,
    word: DubinsWord,
    params: [f64; 3],
    rho: f64,
    mut s: f64,
) -> Configuration {
    let mut x = start.position.x;
    let mut y = start.position.y;
    let mut h = start.heading.unwrap_or(0.0);
    for (i, turn) in word.segments().into_iter().enumerate() {
        let seg_len = if turn == Turn::Straight {
            params[i]
        } else {
            params[i] * rho
        };
        let run = s.min(seg_len).max(0.0);
        match turn {
            Turn::Straight => {
                x += run * h.cos();
                y += run * h.sin();
            }
            Turn::Left => {
                let a = run / rho;
                x += rho * ((h + a).sin() - h.sin());
                y += rho * (h.cos() - (h + a).cos());
                h += a;
            }
            Turn::Right => {
                let a = run / rho;
                x += rho * (h.sin() - (h - a).sin());
                y += rho * ((h - a).cos() - h.cos());
                h -= a;
            }
        }
        s -= seg_len;
        if s <= 0.0 {
            break;
        }
    }
    Configuration {
        position: Point2::new(x, y),
        heading: Some(normalize_angle(h)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn angle_gap(a: f64, b: f64) -> f64 {
        let d = normalize_angle(a - b);
        d.min(TAU - d)
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> Configuration {
        Configuration::oriented(
            rng.random_range(-6.0..6.0),
            rng.random_range(-6.0..6.0),
            rng.random_range(0.0..TAU),
        )
    }

    /// Test-only oracle: scan the first arc angle densely, and for each value
    /// solve for the remaining two segments directly from circle geometry.
    /// Returns the shortest length found over all six words.
    fn numeric_min_length(q0: Configuration, q1: Configuration, rho: f64) -> f64 {
        let p0 = q0.position;
        let h0 = q0.heading.unwrap();
        let g = q1.position;
        let hg = q1.heading.unwrap();
        let normal = |h: f64, left: bool| -> (f64, f64) {
            if left {
                (-h.sin(), h.cos())
            } else {
                (h.sin(), -h.cos())
            }
        };
        let arc_end = |h: f64, a: f64, left: bool| -> (f64, f64, f64) {
            let (nx, ny) = normal(h, left);
            let (cx, cy) = (p0.x + rho * nx, p0.y + rho * ny);
            let h1 = if left { h + a } else { h - a };
            let (mx, my) = normal(h1, left);
            (cx - rho * mx, cy - rho * my, h1)
        };
        let turn_angle = |from: f64, to: f64, left: bool| -> f64 {
            if left {
                normalize_angle(to - from)
            } else {
                normalize_angle(from - to)
            }
        };
        let mut best = f64::INFINITY;
        let n = 20000;
        for (first_left, last_left) in [(true, true), (false, false), (true, false), (false, true)] {
            // Centre of the final circle, fixed by the goal pose.
            let (gx, gy) = normal(hg, last_left);
            let (c2x, c2y) = (g.x + rho * gx, g.y + rho * gy);
            // Perpendicular residual of the straight run as a function of t.
            let residual = |t: f64| -> (f64, f64, f64, f64) {
                let (x1, y1, h1) = arc_end(h0, t, first_left);
                let (nx, ny) = normal(h1, last_left);
                let (ex, ey) = (c2x - rho * nx - x1, c2y - rho * ny - y1);
                let (ux, uy) = (h1.cos(), h1.sin());
                (ux * ey - uy * ex, ux * ex + uy * ey, h1, t)
            };
            let mut prev = residual(0.0);
            for i in 1..=n {
                let t = TAU * i as f64 / n as f64;
                let cur = residual(t);
                if prev.0 == 0.0 || prev.0.signum() != cur.0.signum() {
                    let (mut lo, mut hi) = (prev.3, cur.3);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if residual(mid).0.signum() == residual(lo).0.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let (res, along, h1, t) = residual(0.5 * (lo + hi));
                    if res.abs() < 1e-7 && along >= -1e-7 {
                        let q = turn_angle(h1, hg, last_left);
                        best = best.min(rho * (t + q) + along.max(0.0));
                    }
                }
                prev = cur;
            }
        }
        // CCC words: the middle circle must be tangent to the final one.
        for first_left in [true, false] {
            let (gx, gy) = normal(hg, first_left);
            let (c2x, c2y) = (g.x + rho * gx, g.y + rho * gy);
            let gap = |t: f64| -> (f64, f64, f64, f64, f64) {
                let (x1, y1, h1) = arc_end(h0, t, first_left);
                let (mx, my) = normal(h1, !first_left);
                let (cmx, cmy) = (x1 + rho * mx, y1 + rho * my);
                (((cmx - c2x).hypot(cmy - c2y)) - 2.0 * rho, cmx, cmy, h1, t)
            };
            let mut prev = gap(0.0);
            for i in 1..=n {
                let t = TAU * i as f64 / n as f64;
                let cur = gap(t);
                if prev.0.signum() != cur.0.signum() {
                    let (mut lo, mut hi) = (prev.4, cur.4);
                    for _ in 0..80 {
                        let mid = 0.5 * (lo + hi);
                        if gap(mid).0.signum() == gap(lo).0.signum() {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    let (res, cmx, cmy, h1, t) = gap(0.5 * (lo + hi));
                    if res.abs() < 1e-7 {
                        // Tangent point is the midpoint of the two centres; the
                        // heading there is perpendicular to the centre line.
                        let (dx, dy) = ((c2x - cmx) / 2.0, (c2y - cmy) / 2.0);
                        // radial vector from middle centre to tangent point
                        let (rx, ry) = (dx / rho, dy / rho);
                        let middle_left = !first_left;
                        let h_tan = if middle_left {
                            ry.atan2(rx) + FRAC_PI_2
                        } else {
                            ry.atan2(rx) - FRAC_PI_2
                        };
                        let p = turn_angle(h1, h_tan, middle_left);
                        let q = turn_angle(h_tan, hg, first_left);
                        best = best.min(rho * (t + p + q));
                    }
                }
                prev = cur;
            }
        }
        best
    }

    #[test]
    fn identical_poses_have_zero_length() {
        let q = Configuration::oriented(1.0, 2.0, 0.3);
        assert_eq!(dubins_shortest_path(q, q, 1.0).length(), 0.0);
    }

    #[test]
    fn aligned_collinear_is_straight() {
        let g = dubins_shortest_path(
            Configuration::oriented(0.0, 0.0, 0.0),
            Configuration::oriented(4.0, 0.0, 0.0),
            1.0,
        );
        assert!((g.length() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn quarter_turn_left() {
        let q0 = Configuration::oriented(0.0, 0.0, 0.0);
        let q1 = Configuration::oriented(1.0, 1.0, FRAC_PI_2);
        let oracle = numeric_min_length(q0, q1, 1.0);
        assert!((oracle - FRAC_PI_2).abs() < 1e-6, "oracle {oracle}");
        let g = dubins_shortest_path(q0, q1, 1.0);
        assert!((g.length() - FRAC_PI_2).abs() < 1e-9, "{}", g.length());
    }

    #[test]
    fn every_word_reaches_its_goal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let q0 = random_pose(&mut rng);
            let q1 = random_pose(&mut rng);
            let rho = rng.random_range(0.3..2.0);
            for word in DubinsWord::ALL {
                if let Some(g) = dubins_word_path(q0, q1, rho, word) {
                    let end = g.pose_at(g.length());
                    assert!(
                        end.position.distance(q1.position) < 1e-7,
                        "{word} misses goal: {end:?} vs {q1:?}"
                    );
                    assert!(angle_gap(end.heading.unwrap(), q1.heading.unwrap()) < 1e-7);
                }
            }
        }
    }

    #[test]
    fn six_word_minimum_matches_numeric_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let q0 = random_pose(&mut rng);
            let q1 = random_pose(&mut rng);
            let rho = rng.random_range(0.5..1.5);
            let g = dubins_shortest_path(q0, q1, rho);
            let oracle = numeric_min_length(q0, q1, rho);
            assert!(
                (g.length() - oracle).abs() < 1e-5,
                "solver {} oracle {oracle}",
                g.length()
            );
        }
    }

    #[test]
    fn minimum_never_exceeds_any_word() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q0 = random_pose(&mut rng);
            let q1 = random_pose(&mut rng);
            let rho = rng.random_range(0.2..3.0);
            let best = dubins_shortest_path(q0, q1, rho);
            assert!(best.length() + 1e-12 >= q0.position.distance(q1.position));
            for word in DubinsWord::ALL {
                if let Some(g) = dubins_word_path(q0, q1, rho, word) {
                    assert!(best.length() <= g.length());
                }
            }
        }
    }
}
