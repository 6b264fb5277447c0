//! Linkage data model, loop-closure checks, Denavit-Hartenberg parameters,
//! trajectories and file formats.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{cross, dot3, norm3, scale3, sub3, DualQuaternion, GeneratorKind, Line, Vec3};
use crate::mpoly::{DqPoly, MotionError, MotionPolynomial, Param};
use crate::tolerance::tolerance;

#[derive(Debug, Error)]
pub enum LinkageError {
    #[error("loop {0} references a joint that does not exist")]
    InvalidLoop(usize),
    #[error("axes coincide")]
    IdenticalAxes,
    #[error("trajectory has a pole at t = {0}")]
    PoleAtParameter(Param),
    #[error("joint {index} is not a valid {kind:?} generator")]
    InvalidJoint { index: usize, kind: JointKind },
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

/// Joint whose relative motion is `t - generator`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub kind: JointKind,
    pub label: String,
    #[serde(rename = "g", with = "dq_array")]
    pub generator: DualQuaternion,
}

impl Joint {
    /// Joint with its kind read off the generator; `None` for invalid generators.
    pub fn new(label: impl Into<String>, generator: DualQuaternion) -> Option<Self> {
        let kind = match generator.classify_generator() {
            GeneratorKind::Rotation => JointKind::Revolute,
            GeneratorKind::Translation => JointKind::Prismatic,
            GeneratorKind::Invalid => return None,
        };
        Some(Self {
            kind,
            label: label.into(),
            generator,
        })
    }

    /// Revolute axis; `None` for prismatic joints.
    pub fn axis(&self) -> Option<Line> {
        self.generator.axis().ok()
    }
}

/// One factor `t - h` (or `t - h̄` when `conjugate`) of a loop product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoopEntry {
    pub joint: usize,
    pub conjugate: bool,
}

impl LoopEntry {
    pub fn new(joint: usize, conjugate: bool) -> Self {
        Self { joint, conjugate }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linkage {
    pub joints: Vec<Joint>,
    pub links: Vec<Vec<usize>>,
    pub loops: Vec<Vec<LoopEntry>>,
    #[serde(rename = "type")]
    pub kind: String,
}

impl Linkage {
    /// Single closed chain through `generators` in order. Link `i` joins
    /// joint `i - 1` and joint `i`.
    pub fn closed_chain(kind: impl Into<String>, joints: Vec<Joint>) -> Self {
        let n = joints.len();
        let links = (0..n).map(|i| vec![(i + n - 1) % n, i]).collect();
        let lp = (0..n).map(|i| LoopEntry::new(i, false)).collect();
        Self {
            joints,
            links,
            loops: vec![lp],
            kind: kind.into(),
        }
    }

    /// Checks loop indices, joint kinds, that every joint lies on exactly
    /// two links and that the link graph is connected.
    pub fn validate(&self) -> Result<(), LinkageError> {
        for (li, lp) in self.loops.iter().enumerate() {
            if lp.is_empty() || lp.iter().any(|e| e.joint >= self.joints.len()) {
                return Err(LinkageError::InvalidLoop(li));
            }
        }
        for (index, j) in self.joints.iter().enumerate() {
            let ok = matches!(
                (j.kind, j.generator.classify_generator()),
                (JointKind::Revolute, GeneratorKind::Rotation) | (JointKind::Prismatic, GeneratorKind::Translation)
            );
            if !ok {
                return Err(LinkageError::InvalidJoint { index, kind: j.kind });
            }
        }
        for i in 0..self.joints.len() {
            let count = self.links.iter().filter(|l| l.contains(&i)).count();
            if count != 2 {
                return Err(LinkageError::Parse {
                    location: format!("joints[{i}]"),
                    message: format!("joint lies on {count} links, expected 2"),
                });
            }
        }
        if !self.is_connected() {
            return Err(LinkageError::Parse {
                location: "links".into(),
                message: "link graph is not connected".into(),
            });
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        if self.links.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.links.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(l) = stack.pop() {
            for (m, other) in self.links.iter().enumerate() {
                if !seen[m] && other.iter().any(|j| self.links[l].contains(j)) {
                    seen[m] = true;
                    stack.push(m);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Polynomial `∏ (t - h)` of loop `index`.
    pub fn loop_polynomial(&self, index: usize) -> Result<DqPoly, LinkageError> {
        let lp = self.loops.get(index).ok_or(LinkageError::InvalidLoop(index))?;
        let mut acc = DqPoly::one();
        for e in lp {
            let j = self.joints.get(e.joint).ok_or(LinkageError::InvalidLoop(index))?;
            let h = if e.conjugate { j.generator.conj() } else { j.generator };
            acc = &acc * &DqPoly::linear(h);
        }
        Ok(acc)
    }

    /// Largest loop residual over all loops.
    pub fn max_residual(&self, ts: &[Param]) -> Result<f64, LinkageError> {
        (0..self.loops.len()).try_fold(0.0_f64, |m, i| Ok(m.max(loop_residual(self, i, ts)?)))
    }

    /// Joint-index sets of the links as sorted sets, for graph comparisons.
    pub fn link_sets(&self) -> BTreeSet<Vec<usize>> {
        self.links
            .iter()
            .map(|l| {
                let mut v = l.clone();
                v.sort_unstable();
                v
            })
            .collect()
    }
}

/// `{±10^k : k = -2..2} ∪ {0, ∞}`.
pub fn standard_sweep() -> Vec<Param> {
    let mut ts = vec![Param::Finite(0.0)];
    for k in -2..=2 {
        let v = 10f64.powi(k);
        ts.push(Param::Finite(v));
        ts.push(Param::Finite(-v));
    }
    ts.push(Param::Infinity);
    ts
}

/// Deviation of the loop product from a real multiple of 1, maximized
/// over `ts`. See [`polynomial_residual`].
pub fn loop_residual(linkage: &Linkage, index: usize, ts: &[Param]) -> Result<f64, LinkageError> {
    Ok(polynomial_residual(&linkage.loop_polynomial(index)?, ts))
}

/// Largest vector or dual coordinate of `P(t)` relative to its scalar part,
/// over `ts`. At `∞` the leading coefficient is used. Invariant under
/// scaling `P` by a nonzero real.
pub fn polynomial_residual(poly: &DqPoly, ts: &[Param]) -> f64 {
    let mut worst = 0.0_f64;
    for &t in ts {
        let v = poly.eval_param(t);
        let p = v.primal;
        let off = p.x.abs().max(p.y.abs()).max(p.z.abs()).max(v.dual.max_abs());
        let r = if p.w == 0.0 {
            if off == 0.0 { 0.0 } else { f64::INFINITY }
        } else {
            off / p.w.abs()
        };
        worst = worst.max(r);
    }
    worst
}

/// Relative placement of two axes along their common normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhParams {
    /// Length of the common normal, non-negative.
    pub distance: f64,
    /// Angle from the first to the second axis, in `(-π, π]`.
    pub twist: f64,
    /// Position of the common normal's foot on the first axis, measured
    /// from that axis' point closest to the origin.
    pub offset1: f64,
    /// Same for the second axis.
    pub offset2: f64,
}

/// Common normal of two axes. The twist is measured about the normal
/// oriented by `d1 × d2`, which makes it lie in `[0, π]` and the result
/// symmetric in its arguments. Parallel axes get twist 0 (π when
/// antiparallel) and the normal through the foot point of `l1`.
pub fn dh_from_axes(l1: &Line, l2: &Line) -> Result<DhParams, LinkageError> {
    let d1 = l1.unit_direction();
    let d2 = l2.unit_direction();
    let p1 = l1.foot();
    let p2 = l2.foot();
    let n = cross(d1, d2);
    let sin = norm3(n);
    let cos = dot3(d1, d2);
    let w = sub3(p2, p1);
    let tol = tolerance().sqrt();
    let scale = 1.0 + norm3(p1).max(norm3(p2));
    if sin <= tol {
        let along = dot3(w, d1);
        let perp = sub3(w, scale3(d1, along));
        let distance = norm3(perp);
        if distance <= tol * scale {
            return Err(LinkageError::IdenticalAxes);
        }
        return Ok(DhParams {
            distance,
            twist: if cos > 0.0 { 0.0 } else { PI },
            offset1: 0.0,
            offset2: -dot3(w, d2),
        });
    }
    let distance = (dot3(w, n) / sin).abs();
    let twist = sin.atan2(cos);
    // closest points p1 + s d1 and p2 + u d2
    let (d, e) = (dot3(d1, w), dot3(d2, w));
    let denom = 1.0 - cos * cos;
    let s = (d - cos * e) / denom;
    let u = (cos * d - e) / denom;
    Ok(DhParams {
        distance,
        twist,
        offset1: s,
        offset2: u,
    })
}

/// Points `C(t) x` for each `t`; `∞` uses the leading coefficient.
pub fn trajectory(c: &MotionPolynomial, x: Vec3, ts: &[Param]) -> Result<Vec<Vec3>, LinkageError> {
    ts.iter()
        .map(|&t| {
            let v = c.eval_param(t);
            let scale = v.max_abs();
            if scale == 0.0 || v.primal.max_abs() <= tolerance() * scale {
                return Err(LinkageError::PoleAtParameter(t));
            }
            v.act_on_point(x).map_err(|_| LinkageError::PoleAtParameter(t))
        })
        .collect()
}

/// `n` evenly spaced parameters from `tmin` to `tmax`, plus `∞` on request.
pub fn parameter_range(tmin: f64, tmax: f64, n: usize, with_infinity: bool) -> Vec<Param> {
    let mut ts: Vec<Param> = match n {
        0 => Vec::new(),
        1 => vec![Param::Finite(tmin)],
        _ => (0..n)
            .map(|i| Param::Finite(tmin + (tmax - tmin) * i as f64 / (n - 1) as f64))
            .collect(),
    };
    if with_infinity {
        ts.push(Param::Infinity);
    }
    ts
}

mod dq_array {
    use super::DualQuaternion;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(h: &DualQuaternion, s: S) -> Result<S::Ok, S::Error> {
        h.to_array().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DualQuaternion, D::Error> {
        <[f64; 8]>::deserialize(d).map(DualQuaternion::from_array)
    }
}

fn json_error(e: serde_json::Error) -> LinkageError {
    LinkageError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    }
}

pub fn export_linkage(linkage: &Linkage) -> String {
    serde_json::to_string_pretty(linkage).expect("linkage serializes")
}

/// Parses and validates a linkage file.
pub fn import_linkage(text: &str) -> Result<Linkage, LinkageError> {
    let linkage: Linkage = serde_json::from_str(text).map_err(json_error)?;
    for (i, j) in linkage.joints.iter().enumerate() {
        let kind = j.generator.classify_generator();
        let ok = matches!(
            (j.kind, kind),
            (JointKind::Revolute, GeneratorKind::Rotation) | (JointKind::Prismatic, GeneratorKind::Translation)
        );
        if !ok {
            return Err(LinkageError::Parse {
                location: format!("joints[{i}].g"),
                message: format!("generator {} is not a {:?} generator", j.generator, j.kind),
            });
        }
    }
    linkage.validate().map_err(|e| match e {
        LinkageError::InvalidLoop(i) => LinkageError::Parse {
            location: format!("loops[{i}]"),
            message: "joint index out of range".into(),
        },
        other => other,
    })?;
    Ok(linkage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct MotionFile {
    coeffs: Vec<[f64; 8]>,
}

pub fn export_motion(c: &MotionPolynomial) -> String {
    let file = MotionFile {
        coeffs: c.coeffs().iter().map(|h| h.to_array()).collect(),
    };
    serde_json::to_string_pretty(&file).expect("motion serializes")
}

/// Parses `{"coeffs": [[8 numbers], ...]}`, ascending degree.
pub fn import_motion(text: &str) -> Result<MotionPolynomial, LinkageError> {
    let file: MotionFile = serde_json::from_str(text).map_err(json_error)?;
    MotionPolynomial::new(file.coeffs.into_iter().map(DualQuaternion::from_array).collect()).map_err(|e| {
        LinkageError::Parse {
            location: "coeffs".into(),
            message: e.to_string(),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PoseFile {
    poses: Vec<[f64; 8]>,
}

/// Parses `{"poses": [[8 numbers] × 3]}`.
pub fn import_poses(text: &str) -> Result<[DualQuaternion; 3], LinkageError> {
    let file: PoseFile = serde_json::from_str(text).map_err(json_error)?;
    let n = file.poses.len();
    let poses: [[f64; 8]; 3] = file.poses.try_into().map_err(|_| LinkageError::Parse {
        location: "poses".into(),
        message: format!("expected 3 poses, found {n}"),
    })?;
    Ok(poses.map(DualQuaternion::from_array))
}

pub fn export_poses(poses: &[DualQuaternion; 3]) -> String {
    let file = PoseFile {
        poses: poses.iter().map(|p| p.to_array()).collect(),
    };
    serde_json::to_string_pretty(&file).expect("poses serialize")
}

/// Writes `t,x,y,z` rows; the `∞` sample is written as `inf`.
pub fn export_trajectory<W: Write>(out: W, ts: &[Param], points: &[Vec3]) -> Result<(), LinkageError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "x", "y", "z"])?;
    for (t, x) in ts.iter().zip(points) {
        w.write_record([t.to_string(), x[0].to_string(), x[1].to_string(), x[2].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Quaternion;

    fn dq(h: [f64; 8]) -> DualQuaternion {
        DualQuaternion::from_array(h)
    }

    fn bennett_4r() -> Linkage {
        let h1 = dq([0.0, 0.0, 1.0, 1.0, 0.0, 1.0, 1.0, -1.0]);
        let h2 = dq([-1.0, 0.0, 0.0, -1.0, 0.0, 0.0, -2.0, 0.0]);
        let k1 = dq([-1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0]);
        let k2 = dq([0.0, 1.0, 1.0, 0.0, 0.0, 1.0, -1.0, 0.0]);
        let joints = [("h1", h1), ("h2", h2), ("k2", k2.conj()), ("k1", k1.conj())]
            .into_iter()
            .map(|(l, g)| Joint::new(l, g).unwrap())
            .collect();
        Linkage::closed_chain("bennett-4r", joints)
    }

    #[test]
    fn bennett_loop_closes() {
        let l = bennett_4r();
        l.validate().unwrap();
        let ts: Vec<Param> = [-10.0, -1.0, 0.0, 1.0, 10.0].map(Param::Finite).into_iter().chain([Param::Infinity]).collect();
        assert!(loop_residual(&l, 0, &ts).unwrap() < 1e-10);
        // closure polynomial is (t² + 2)(t² + 2t + 2)
        let p = l.loop_polynomial(0).unwrap();
        let expect = [4.0, 4.0, 4.0, 2.0, 1.0];
        for (c, e) in p.coeffs().iter().zip(expect) {
            assert!(c.distance(DualQuaternion::real(e)) < 1e-12);
        }
    }

    #[test]
    fn perturbed_joint_breaks_closure() {
        let mut l = bennett_4r();
        l.joints[1].generator.dual.x += 1e-2;
        assert!(loop_residual(&l, 0, &standard_sweep()).unwrap() > 1e-4);
    }

    #[test]
    fn bad_loop_index() {
        let mut l = bennett_4r();
        l.loops[0].push(LoopEntry::new(9, false));
        assert!(matches!(loop_residual(&l, 0, &[Param::Finite(0.0)]), Err(LinkageError::InvalidLoop(0))));
        assert!(matches!(loop_residual(&l, 3, &[Param::Finite(0.0)]), Err(LinkageError::InvalidLoop(3))));
    }

    #[test]
    fn dh_examples() {
        let z = Line::through([0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        let z1 = Line::through([1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
        let x = Line::through([0.0; 3], [1.0, 0.0, 0.0]).unwrap();
        let p = dh_from_axes(&z, &z1).unwrap();
        assert!((p.distance - 1.0).abs() < 1e-15 && p.twist == 0.0);
        let p = dh_from_axes(&z, &x).unwrap();
        assert!(p.distance.abs() < 1e-15 && (p.twist - PI / 2.0).abs() < 1e-15);
        assert!(matches!(dh_from_axes(&z, &z), Err(LinkageError::IdenticalAxes)));
    }

    #[test]
    fn dh_skew_axes() {
        // z-axis and the line through (0, 0, 3) + (2, 0, 0) along y
        let a = Line::through([0.0; 3], [0.0, 0.0, 1.0]).unwrap();
        let b = Line::through([2.0, 5.0, 3.0], [0.0, 1.0, 1.0]).unwrap();
        let p = dh_from_axes(&a, &b).unwrap();
        let q = dh_from_axes(&b, &a).unwrap();
        assert!((p.distance - 2.0).abs() < 1e-12);
        assert!((p.twist - PI / 4.0).abs() < 1e-12);
        assert!((p.distance - q.distance).abs() < 1e-12 && (p.twist - q.twist).abs() < 1e-12);
        // common normal runs along x from (0, 0, -2) to (2, 0, -2)
        let d = b.unit_direction();
        let f = b.foot();
        let on_b = [f[0] + p.offset2 * d[0], f[1] + p.offset2 * d[1], f[2] + p.offset2 * d[2]];
        assert!((on_b[0] - 2.0).abs() < 1e-12 && on_b[1].abs() < 1e-12 && (on_b[2] + 2.0).abs() < 1e-12);
        assert!((p.offset1 + 2.0).abs() < 1e-12);
    }

    #[test]
    fn half_turn_trajectory() {
        let c = MotionPolynomial::from_poly(DqPoly::linear(DualQuaternion::from_primal(Quaternion::K))).unwrap();
        let x = trajectory(&c, [1.0, 0.0, 0.0], &[Param::Finite(0.0)]).unwrap();
        assert!((x[0][0] + 1.0).abs() < 1e-15 && x[0][1].abs() < 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        // t + ε i has no primal part at t = 0
        let c = MotionPolynomial::new(vec![DualQuaternion::from_dual(Quaternion::I), DualQuaternion::ONE]).unwrap();
        assert!(matches!(trajectory(&c, [0.0; 3], &[Param::Finite(0.0)]), Err(LinkageError::PoleAtParameter(_))));
    }

    #[test]
    fn linkage_round_trip() {
        let l = bennett_4r();
        let back = import_linkage(&export_linkage(&l)).unwrap();
        assert_eq!(l, back);
    }

    #[test]
    fn invalid_joint_in_file() {
        let mut text = export_linkage(&bennett_4r());
        // break the Study condition of h1 by turning its dual scalar nonzero
        let l: Linkage = serde_json::from_str(&text).unwrap();
        let mut v = serde_json::to_value(&l).unwrap();
        v["joints"][0]["g"][4] = serde_json::json!(7.0);
        text = v.to_string();
        match import_linkage(&text) {
            Err(LinkageError::Parse { location, .. }) => assert_eq!(location, "joints[0].g"),
            other => panic!("{other:?}"),
        }
        match import_linkage("{\"joints\": [") {
            Err(LinkageError::Parse { location, .. }) => assert!(location.starts_with("line 1")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trajectory_csv() {
        let c = MotionPolynomial::from_poly(DqPoly::linear(DualQuaternion::from_primal(Quaternion::K))).unwrap();
        let ts = parameter_range(0.0, 1.0, 2, true);
        let pts = trajectory(&c, [1.0, 0.0, 0.0], &ts).unwrap();
        let mut buf = Vec::new();
        export_trajectory(&mut buf, &ts, &pts).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x,y,z");
        assert!(lines[3].starts_with("inf,1,"));
    }

    #[test]
    fn sweep_contents() {
        let ts = standard_sweep();
        assert_eq!(ts.len(), 12);
        assert!(ts.contains(&Param::Infinity) && ts.contains(&Param::Finite(-100.0)));
    }
}
