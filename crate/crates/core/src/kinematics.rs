//! Geometry of the 7-DOF arm: Denavit-Hartenberg rows, forward kinematics,
//! the 3×7 position Jacobian and the distance-to-target objective.
//!
//! The canonical arm has the alternating twist pattern
//!
//! | joint | α (rad) | a | d    |
//! |-------|---------|---|------|
//! | 1     | −π/2    | 0 | d₁   |
//! | 2     | −π/2    | 0 | 0    |
//! | 3     | −π/2    | 0 | d₃   |
//! | 4     |  π/2    | 0 | 0    |
//! | 5     | −π/2    | 0 | d₅   |
//! | 6     |  π/2    | 0 | 0    |
//! | 7     |  0      | 0 | d₇   |
//!
//! Lengths are millimetres and angles radians throughout.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Index, IndexMut, Sub};
use std::path::Path;

use nalgebra::{Matrix3, SMatrix, Vector3};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of revolute joints.
pub const JOINTS: usize = 7;

/// 3×7 matrix of position partials.
pub type PositionJacobian = SMatrix<f64, 3, JOINTS>;

/// One row of a DH table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhRow {
    pub alpha: f64,
    pub a: f64,
    pub d: f64,
    pub theta_offset: f64,
}

impl DhRow {
    pub const fn new(alpha: f64, a: f64, d: f64) -> Self {
        DhRow {
            alpha,
            a,
            d,
            theta_offset: 0.0,
        }
    }
}

/// Which DH convention the rows are interpreted with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DhConvention {
    /// Distal: `Rz(θ)·Tz(d)·Tx(a)·Rx(α)`.
    #[default]
    Standard,
    /// Proximal: `Rx(α)·Tx(a)·Rz(θ)·Tz(d)`.
    Modified,
}

/// A point in the base frame, millimetres.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Position3::new(v.x, v.y, v.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &Position3) -> f64 {
        (*self - *other).norm()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Sub for Position3 {
    type Output = Position3;

    fn sub(self, rhs: Position3) -> Position3 {
        Position3::new(self.x - rhs.x, self.y - rhs.y, self.z - rhs.z)
    }
}

impl fmt::Display for Position3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.x, self.y, self.z)
    }
}

impl std::str::FromStr for Position3 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let values = parse_floats(s)?;
        match values.as_slice() {
            &[x, y, z] => Ok(Position3::new(x, y, z)),
            _ => Err(Error::config(format!(
                "expected three comma-separated values, got `{s}`"
            ))),
        }
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| Error::config(format!("bad number `{}`: {e}", part.trim())))
        })
        .collect()
}

/// Seven joint angles in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub [f64; JOINTS]);

impl JointVector {
    pub const ZERO: JointVector = JointVector([0.0; JOINTS]);

    pub fn new(theta: [f64; JOINTS]) -> Self {
        JointVector(theta)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Every component wrapped into (−π, π].
    pub fn wrapped(&self) -> JointVector {
        JointVector(self.0.map(wrap_angle))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let theta: [f64; JOINTS] = values.try_into().map_err(|_| {
            Error::config(format!("expected {JOINTS} joint angles, got {}", values.len()))
        })?;
        Ok(JointVector(theta))
    }
}

impl Index<usize> for JointVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for JointVector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl fmt::Display for JointVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl std::str::FromStr for JointVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JointVector::from_slice(&parse_floats(s)?)
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    if angle > -PI && angle <= PI {
        return angle;
    }
    let wrapped = angle - TAU * ((angle - PI) / TAU).ceil();
    // ceil can land exactly on -π through rounding
    if wrapped <= -PI {
        wrapped + TAU
    } else {
        wrapped
    }
}

/// Closed interval of admissible joint values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointLimit {
    pub lower: f64,
    pub upper: f64,
}

impl JointLimit {
    pub const FULL: JointLimit = JointLimit {
        lower: -PI,
        upper: PI,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let limit = JointLimit { lower, upper };
        limit.validate()?;
        Ok(limit)
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.lower > self.upper {
            return Err(Error::InvalidModel(format!(
                "joint limit [{}, {}] is empty",
                self.lower, self.upper
            )));
        }
        if self.lower < -TAU || self.upper > TAU {
            return Err(Error::InvalidModel(format!(
                "joint limit [{}, {}] exceeds [-2π, 2π]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }

    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.lower && angle <= self.upper
    }

    pub fn clamp(&self, angle: f64) -> f64 {
        angle.clamp(self.lower, self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// True when the interval covers a whole turn, so the joint is circular.
    pub fn is_full_turn(&self) -> bool {
        self.width() >= TAU - 1e-9
    }

    /// `to − from`, taken the short way round for circular joints.
    pub fn delta(&self, to: f64, from: f64) -> f64 {
        if self.is_full_turn() {
            wrap_angle(to - from)
        } else {
            to - from
        }
    }
}

/// Rigid transform stored as rotation plus translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HomogeneousTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Position3,
}

impl HomogeneousTransform {
    pub fn identity() -> Self {
        HomogeneousTransform {
            rotation: Matrix3::identity(),
            translation: Position3::default(),
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &HomogeneousTransform) -> HomogeneousTransform {
        let t = self.rotation * other.translation.to_vector() + self.translation.to_vector();
        HomogeneousTransform {
            rotation: self.rotation * other.rotation,
            translation: Position3::from_vector(&t),
        }
    }

    /// The full 4×4 matrix.
    pub fn to_matrix(&self) -> nalgebra::Matrix4<f64> {
        let mut m = nalgebra::Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m[(0, 3)] = self.translation.x;
        m[(1, 3)] = self.translation.y;
        m[(2, 3)] = self.translation.z;
        m
    }

    /// max |RᵀR − I|.
    pub fn orthonormality_error(&self) -> f64 {
        (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax()
    }
}

fn rot_x(alpha: f64) -> HomogeneousTransform {
    let (s, c) = alpha.sin_cos();
    HomogeneousTransform {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c),
        translation: Position3::default(),
    }
}

fn translate(x: f64, y: f64, z: f64) -> HomogeneousTransform {
    HomogeneousTransform {
        rotation: Matrix3::identity(),
        translation: Position3::new(x, y, z),
    }
}

/// Single-joint transform under the standard (distal) convention.
pub fn dh_transform(row: &DhRow, theta: f64) -> HomogeneousTransform {
    DhConvention::Standard.link_transform(row, theta)
}

impl DhConvention {
    /// Transform of one link at joint value `theta`.
    pub fn link_transform(self, row: &DhRow, theta: f64) -> HomogeneousTransform {
        let (st, ct) = (theta + row.theta_offset).sin_cos();
        let (sa, ca) = row.alpha.sin_cos();
        match self {
            DhConvention::Standard => HomogeneousTransform {
                rotation: Matrix3::new(
                    ct,
                    -st * ca,
                    st * sa,
                    st,
                    ct * ca,
                    -ct * sa,
                    0.0,
                    sa,
                    ca,
                ),
                translation: Position3::new(row.a * ct, row.a * st, row.d),
            },
            DhConvention::Modified => HomogeneousTransform {
                rotation: Matrix3::new(
                    ct,
                    -st,
                    0.0,
                    st * ca,
                    ct * ca,
                    -sa,
                    st * sa,
                    ct * sa,
                    ca,
                ),
                translation: Position3::new(row.a, -sa * row.d, ca * row.d),
            },
        }
    }

    /// The fixed part of the link transform that precedes the joint rotation.
    fn pre_joint(self, row: &DhRow) -> HomogeneousTransform {
        match self {
            DhConvention::Standard => HomogeneousTransform::identity(),
            DhConvention::Modified => rot_x(row.alpha).compose(&translate(row.a, 0.0, 0.0)),
        }
    }
}

/// The four non-zero link offsets of the arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkLengths {
    pub d1: f64,
    pub d3: f64,
    pub d5: f64,
    pub d7: f64,
}

impl LinkLengths {
    pub const UNIT: LinkLengths = LinkLengths {
        d1: 1.0,
        d3: 1.0,
        d5: 1.0,
        d7: 1.0,
    };

    /// Published offsets of the KUKA LBR iiwa 7 R800.
    pub const LBR_IIWA_R800: LinkLengths = LinkLengths {
        d1: 340.0,
        d3: 400.0,
        d5: 400.0,
        d7: 126.0,
    };
}

/// The 7-row DH table together with joint limits.
#[derive(Clone, Debug, PartialEq)]
pub struct KinematicModel {
    rows: [DhRow; JOINTS],
    joint_limits: [JointLimit; JOINTS],
    convention: DhConvention,
    links: LinkLengths,
}

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;
const ALPHAS: [f64; JOINTS] = [-HALF_PI, -HALF_PI, -HALF_PI, HALF_PI, -HALF_PI, HALF_PI, 0.0];

impl KinematicModel {
    pub fn new(
        links: LinkLengths,
        joint_limits: [JointLimit; JOINTS],
        convention: DhConvention,
    ) -> Result<Self> {
        for (name, d) in [
            ("d1", links.d1),
            ("d3", links.d3),
            ("d5", links.d5),
            ("d7", links.d7),
        ] {
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidModel(format!("{name} must be positive, got {d}")));
            }
        }
        for limit in &joint_limits {
            limit.validate()?;
        }
        let ds = [links.d1, 0.0, links.d3, 0.0, links.d5, 0.0, links.d7];
        let rows = std::array::from_fn(|i| DhRow::new(ALPHAS[i], 0.0, ds[i]));
        Ok(KinematicModel {
            rows,
            joint_limits,
            convention,
            links,
        })
    }

    /// Canonical arm with the given lengths, full-turn limits and the standard convention.
    pub fn with_links(links: LinkLengths) -> Result<Self> {
        Self::new(links, [JointLimit::FULL; JOINTS], DhConvention::Standard)
    }

    /// All four offsets equal to 1 mm.
    pub fn unit() -> Self {
        Self::with_links(LinkLengths::UNIT).expect("unit model is valid")
    }

    /// Offsets of the LBR iiwa 7 R800 with full-turn limits.
    pub fn lbr_iiwa_r800() -> Self {
        Self::with_links(LinkLengths::LBR_IIWA_R800).expect("iiwa model is valid")
    }

    pub fn from_config(config: &RobotConfig) -> Result<Self> {
        let limits = match &config.joint_limits {
            None => [JointLimit::FULL; JOINTS],
            Some(list) => {
                if list.len() != JOINTS {
                    return Err(Error::InvalidModel(format!(
                        "expected {JOINTS} joint limits, got {}",
                        list.len()
                    )));
                }
                let mut limits = [JointLimit::FULL; JOINTS];
                for (slot, [lo, hi]) in limits.iter_mut().zip(list) {
                    *slot = JointLimit::new(*lo, *hi)?;
                }
                limits
            }
        };
        Self::new(config.links, limits, config.convention)
    }

    pub fn rows(&self) -> &[DhRow; JOINTS] {
        &self.rows
    }

    pub fn joint_limits(&self) -> &[JointLimit; JOINTS] {
        &self.joint_limits
    }

    pub fn convention(&self) -> DhConvention {
        self.convention
    }

    pub fn links(&self) -> LinkLengths {
        self.links
    }

    /// Product of the seven link transforms.
    pub fn forward_kinematics(&self, q: &JointVector) -> HomogeneousTransform {
        self.rows
            .iter()
            .zip(q.iter())
            .fold(HomogeneousTransform::identity(), |acc, (row, &theta)| {
                acc.compose(&self.convention.link_transform(row, theta))
            })
    }

    pub fn end_effector_position(&self, q: &JointVector) -> Position3 {
        self.forward_kinematics(q).translation
    }

    /// Euclidean distance from the end effector to `target`, in mm.
    pub fn fitness(&self, q: &JointVector, target: &Position3) -> f64 {
        self.end_effector_position(q).distance(target)
    }

    /// Geometric Jacobian of the end-effector position: column j is
    /// `z_j × (p_e − o_j)` for joint j's axis `z_j` through `o_j`.
    pub fn position_jacobian(&self, q: &JointVector) -> PositionJacobian {
        let JointAxes { axes, origins, tip } = self.joint_axes(q);
        let mut jac = PositionJacobian::zeros();
        for j in 0..JOINTS {
            jac.set_column(j, &axes[j].cross(&(tip - origins[j])));
        }
        jac
    }

    /// World-frame rotation axis and a point on it for every joint, plus the tool point.
    pub fn joint_axes(&self, q: &JointVector) -> JointAxes {
        let mut axes = [Vector3::zeros(); JOINTS];
        let mut origins = [Vector3::zeros(); JOINTS];
        let mut acc = HomogeneousTransform::identity();
        for (j, (row, &theta)) in self.rows.iter().zip(q.iter()).enumerate() {
            let joint_frame = acc.compose(&self.convention.pre_joint(row));
            axes[j] = joint_frame.rotation.column(2).into_owned();
            origins[j] = joint_frame.translation.to_vector();
            acc = acc.compose(&self.convention.link_transform(row, theta));
        }
        JointAxes {
            axes,
            origins,
            tip: acc.translation.to_vector(),
        }
    }

    /// Wraps into (−π, π] and then clamps into the joint limits.
    pub fn normalize(&self, q: &JointVector) -> JointVector {
        let mut out = q.wrapped();
        for (v, limit) in out.0.iter_mut().zip(&self.joint_limits) {
            *v = limit.clamp(*v);
        }
        out
    }

    /// Per-joint [`JointLimit::delta`] of `to − from`.
    pub fn joint_delta(&self, to: &JointVector, from: &JointVector) -> JointVector {
        JointVector(std::array::from_fn(|j| self.joint_limits[j].delta(to[j], from[j])))
    }

    pub fn within_limits(&self, q: &JointVector) -> bool {
        q.iter()
            .zip(&self.joint_limits)
            .all(|(v, limit)| limit.contains(*v))
    }

    /// Uniform draw inside the joint limits.
    pub fn random_joints<R: Rng + ?Sized>(&self, rng: &mut R) -> JointVector {
        let mut q = JointVector::ZERO;
        for (v, limit) in q.0.iter_mut().zip(&self.joint_limits) {
            *v = if limit.width() > 0.0 {
                rng.random_range(limit.lower..=limit.upper)
            } else {
                limit.lower
            };
        }
        q
    }
}

/// Joint axes of one pose, see [`KinematicModel::joint_axes`].
#[derive(Clone, Copy, Debug)]
pub struct JointAxes {
    pub axes: [Vector3<f64>; JOINTS],
    pub origins: [Vector3<f64>; JOINTS],
    pub tip: Vector3<f64>,
}

/// Robot geometry as read from a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotConfig {
    pub links: LinkLengths,
    /// `[lower, upper]` per joint; full turn when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint_limits: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub convention: DhConvention,
}

impl RobotConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: "<robot config>".into(),
            message: e.to_string(),
        })
    }

    pub fn model(&self) -> Result<KinematicModel> {
        KinematicModel::from_config(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix4;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // Independent 4×4 oracle: Rz(θ)·Tz(d)·Tx(a)·Rx(α) built from elementary matrices.
    fn oracle_link(alpha: f64, a: f64, d: f64, theta: f64) -> Matrix4<f64> {
        let (s, c) = theta.sin_cos();
        let rz = Matrix4::new(
            c, -s, 0., 0., s, c, 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.,
        );
        let tz = Matrix4::new(
            1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1., d, 0., 0., 0., 1.,
        );
        let tx = Matrix4::new(
            1., 0., 0., a, 0., 1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 1.,
        );
        let (sa, ca) = alpha.sin_cos();
        let rx = Matrix4::new(
            1., 0., 0., 0., 0., ca, -sa, 0., 0., sa, ca, 0., 0., 0., 0., 1.,
        );
        rz * tz * tx * rx
    }

    fn oracle_fk(model: &KinematicModel, q: &JointVector) -> Matrix4<f64> {
        model
            .rows()
            .iter()
            .zip(q.iter())
            .fold(Matrix4::identity(), |acc, (r, &t)| {
                acc * oracle_link(r.alpha, r.a, r.d, t)
            })
    }

    #[test]
    fn zero_row_is_identity() {
        let t = dh_transform(&DhRow::new(0.0, 0.0, 0.0), 0.0);
        assert_eq!(t.to_matrix(), Matrix4::identity());
    }

    #[test]
    fn d_only_row_is_translation() {
        let t = dh_transform(&DhRow::new(0.0, 0.0, 5.0), 0.0);
        assert_eq!(t.rotation, Matrix3::identity());
        assert_eq!(t.translation, Position3::new(0.0, 0.0, 5.0));
    }

    #[test]
    fn first_row_matches_elementary_product() {
        let row = DhRow::new(-HALF_PI, 0.0, 1.0);
        let t = dh_transform(&row, 0.3).to_matrix();
        // Hand-evaluated Rz(0.3)·Tz(1)·Rx(-π/2)
        let (s, c) = 0.3f64.sin_cos();
        let expected = Matrix4::new(
            c, 0.0, -s, 0.0, //
            s, 0.0, c, 0.0, //
            0.0, -1.0, 0.0, 1.0, //
            0.0, 0.0, 0.0, 1.0,
        );
        assert!((t - expected).amax() < 1e-15);
        assert!((t - oracle_link(-HALF_PI, 0.0, 1.0, 0.3)).amax() < 1e-15);
    }

    fn rot_z(theta: f64) -> HomogeneousTransform {
        let (s, c) = theta.sin_cos();
        HomogeneousTransform {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Position3::default(),
        }
    }

    #[test]
    fn modified_row_matches_elementary_product() {
        let row = DhRow {
            alpha: 0.4,
            a: 2.0,
            d: 3.0,
            theta_offset: 0.1,
        };
        let t = DhConvention::Modified.link_transform(&row, 0.7);
        let expected = rot_x(0.4)
            .compose(&translate(2.0, 0.0, 0.0))
            .compose(&rot_z(0.8))
            .compose(&translate(0.0, 0.0, 3.0));
        assert!((t.to_matrix() - expected.to_matrix()).amax() < 1e-15);
    }

    #[test]
    fn zero_pose_unit_model() {
        let model = KinematicModel::unit();
        let fk = model.forward_kinematics(&JointVector::ZERO);
        let oracle = oracle_fk(&model, &JointVector::ZERO);
        assert!((fk.to_matrix() - oracle).amax() < 1e-12);
        // Folded arm: d3 up, d5 back down, d7 up again along the alternating twists.
        let p = fk.translation;
        assert!((p.x - oracle[(0, 3)]).abs() < 1e-12);
        assert!((p.z - oracle[(2, 3)]).abs() < 1e-12);
    }

    #[test]
    fn fk_matches_oracle_on_random_poses() {
        let model = KinematicModel::lbr_iiwa_r800();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let q = model.random_joints(&mut rng);
            let diff = (model.forward_kinematics(&q).to_matrix() - oracle_fk(&model, &q)).amax();
            assert!(diff < 1e-9, "diff {diff}");
        }
    }

    #[test]
    fn last_joint_spins_about_tool_axis() {
        let model = KinematicModel::unit();
        let q = JointVector::new([0.2, -0.4, 0.9, 1.1, -0.3, 0.5, 0.0]);
        let mut q2 = q;
        q2[6] = 1.3;
        let a = model.forward_kinematics(&q);
        let b = model.forward_kinematics(&q2);
        assert!(a.translation.distance(&b.translation) < 1e-12);
        assert!((a.rotation - b.rotation).amax() > 0.1);
        let jac = model.position_jacobian(&q);
        assert!(jac.column(6).amax() < 1e-12);
    }

    #[test]
    fn fitness_three_four_five() {
        let model = KinematicModel::unit();
        let q = JointVector::new([0.1; JOINTS]);
        let p = model.end_effector_position(&q);
        assert_eq!(model.fitness(&q, &p), 0.0);
        let target = Position3::new(p.x + 3.0, p.y + 4.0, p.z);
        assert!((model.fitness(&q, &target) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5 - TAU) + 0.5).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
        for k in -20..20 {
            let w = wrap_angle(k as f64 * 0.77);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn rejects_bad_models() {
        let mut links = LinkLengths::UNIT;
        links.d5 = 0.0;
        assert!(KinematicModel::with_links(links).is_err());
        assert!(JointLimit::new(1.0, -1.0).is_err());
        assert!(JointLimit::new(-7.0, 1.0).is_err());
    }

    #[test]
    fn config_round_trip() {
        let text = r#"
            convention = "standard"
            [links]
            d1 = 340.0
            d3 = 400.0
            d5 = 400.0
            d7 = 126.0
        "#;
        let cfg = RobotConfig::parse(text).unwrap();
        assert_eq!(cfg.model().unwrap(), KinematicModel::lbr_iiwa_r800());
        assert!(RobotConfig::parse("[links]\nd1 = 1.0").is_err());
        let limited = RobotConfig {
            joint_limits: Some(vec![[-1.0, 1.0]; 6]),
            ..cfg
        };
        assert!(limited.model().is_err());
    }

    #[test]
    fn parse_joint_and_position_lists() {
        let q: JointVector = "0,0,0,0,0,0,0".parse().unwrap();
        assert_eq!(q, JointVector::ZERO);
        assert!("0,0".parse::<JointVector>().is_err());
        let p: Position3 = "0.5, 0.5, 1.0".parse().unwrap();
        assert_eq!(p, Position3::new(0.5, 0.5, 1.0));
    }
}
