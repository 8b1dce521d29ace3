//! Serial-chain kinematics and dynamics.
//!
//! Kinematics uses the product-of-exponentials form: joint screws (space or
//! body frame, normalized to space screws at load) plus the end-effector home
//! pose. Joint-space dynamics come from link spatial inertias expressed at
//! each link's center of mass; the Coriolis matrix is assembled from
//! Christoffel symbols of the mass matrix with symmetrized central
//! differences, which makes `Mdot - 2C` skew-symmetric by construction.
//!
//! Robot description files use the [`crate::config`] dialect:
//!
//! ```text
//! [chain]
//! n_joints   = 2
//! screw_frame = space          # optional: space (default) | body
//! gravity    = 0 0 -9.81       # optional
//! home_pose  = 1 0 0 0 1 0 0 0 1   0.75 0 0   # rotation row-major, position
//!
//! [joint 1]
//! screw = 0 0 0   0 0 1        # translational on top
//!
//! [link 1]
//! mass    = 0.8
//! com     = 0.18 0 0
//! inertia = 0.0105 0 0 0.0105 0 0.02   # ixx ixy ixz iyy iyz izz about com
//! frame   = 1 0 0 0 1 0 0 0 1   0 0 0
//! ```

use crate::config::{ConfigError, Document};
use crate::liegroup::{exp_se3, LieError, Pose, Rotation, Twist, Wrench};
use crate::{Mat3, Mat6, Vec3, Vec6};
use nalgebra::{DMatrix, DVector};
use std::path::Path;
use thiserror::Error;

/// Step used for the central-difference Christoffel symbols. Chosen near the
/// f64 optimum for O(1) mass-matrix entries: truncation ~h^2 and roundoff
/// ~eps/h balance around 1e-5, keeping the entries good to ~1e-11.
pub const CHRISTOFFEL_H: f64 = 1e-5;
/// Step for the time-derivative of the Jacobian along the joint velocity.
const JDOT_H: f64 = 1e-6;
/// Jacobian condition numbers at or above this abort operational-space work.
pub const COND_MAX: f64 = 1e6;

const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RobotError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot read robot file `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("joint {joint}: {reason}")]
    BadScrew { joint: usize, reason: String },
    #[error("link {link}: {reason}")]
    BadLink { link: usize, reason: String },
    #[error("{what}: {source}")]
    BadPose {
        what: String,
        #[source]
        source: LieError,
    },
    #[error("chain declares {declared} joints but file defines {joints} joint and {links} link sections")]
    CountMismatch { declared: usize, joints: usize, links: usize },
    #[error("Jacobian is singular or ill-conditioned (cond {cond:.3e} >= {COND_MAX:.0e})")]
    SingularJacobian { cond: f64 },
    #[error("operational-space dynamics need a 6-joint chain, got {got}")]
    WrongDof { got: usize },
}

/// Mass properties of one link, expressed in the link frame.
#[derive(Debug, Clone)]
pub struct LinkInertia {
    /// kg
    pub mass: f64,
    /// Center of mass in the link frame (m).
    pub com: Vec3,
    /// Inertia tensor about the center of mass, link-frame axes (kg m^2).
    pub inertia: Mat3,
    /// Link frame at the home configuration, in base coordinates.
    pub frame: Pose,
}

/// Joint positions and velocities.
#[derive(Debug, Clone)]
pub struct JointState {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
}

impl JointState {
    pub fn new(q: DVector<f64>, qd: DVector<f64>) -> Self {
        assert_eq!(q.len(), qd.len(), "q and qd must have the same length");
        JointState { q, qd }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.qd.iter()).all(|x| x.is_finite())
    }
}

/// Frame in which the file's joint screws are expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScrewFrame {
    Space,
    Body,
}

/// An n-joint serial chain: screws, home pose, link inertias, gravity.
#[derive(Debug, Clone)]
pub struct RobotModel {
    n: usize,
    /// Screws normalized to the space frame.
    space_screws: Vec<Twist>,
    home: Pose,
    links: Vec<LinkInertia>,
    /// Link-frame poses of the centers of mass at home (frame * translate(com)).
    com_frames: Vec<Pose>,
    pub gravity: Vec3,
}

/// Operational-space dynamics at one state: `m vdot + c v + g = wrench`.
#[derive(Debug, Clone)]
pub struct OperationalDynamics {
    pub m: Mat6,
    pub c: Mat6,
    pub g: Vec6,
    pub jacobian: Mat6,
    pub jacobian_inv: Mat6,
    pub cond: f64,
}

impl RobotModel {
    pub fn new(
        screws: Vec<Twist>,
        screw_frame: ScrewFrame,
        home: Pose,
        links: Vec<LinkInertia>,
        gravity: Vec3,
    ) -> Result<Self, RobotError> {
        let n = screws.len();
        if n == 0 || links.len() != n {
            return Err(RobotError::CountMismatch { declared: n, joints: n, links: links.len() });
        }
        for (k, s) in screws.iter().enumerate() {
            let wn = s.w.norm();
            let vn = s.v.norm();
            if (wn - 1.0).abs() > UNIT_TOL && !(wn < UNIT_TOL && (vn - 1.0).abs() < UNIT_TOL) {
                return Err(RobotError::BadScrew {
                    joint: k + 1,
                    reason: format!(
                        "screw must be revolute (|w| = 1) or prismatic (w = 0, |v| = 1); got |w| = {wn:.6}, |v| = {vn:.6}"
                    ),
                });
            }
        }
        for (k, link) in links.iter().enumerate() {
            validate_link(k + 1, link)?;
        }
        let space_screws = match screw_frame {
            ScrewFrame::Space => screws,
            ScrewFrame::Body => {
                screws.iter().map(|s| home.adjoint_apply(s)).collect()
            }
        };
        let com_frames = links
            .iter()
            .map(|l| l.frame.compose(&Pose::new(Rotation::identity(), l.com)))
            .collect();
        Ok(RobotModel { n, space_screws, home, links, com_frames, gravity })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, RobotError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| RobotError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RobotError> {
        let mut doc = Document::parse(text)?;
        let mut chain = doc.take_section("chain")?;
        let n = chain.take_usize("n_joints")?;
        let screw_frame = match chain.take_raw("screw_frame").as_deref() {
            None | Some("space") => ScrewFrame::Space,
            Some("body") => ScrewFrame::Body,
            Some(other) => {
                return Err(ConfigError::BadValue {
                    section: "chain".into(),
                    key: "screw_frame".into(),
                    reason: format!("`{other}` is not one of space, body"),
                }
                .into())
            }
        };
        let gravity = match chain.take_f64s_opt("gravity", 3)? {
            Some(g) => Vec3::new(g[0], g[1], g[2]),
            None => Vec3::new(0.0, 0.0, -9.81),
        };
        let home = pose_from_numbers(&chain.take_f64s("home_pose", 12)?, "home_pose")?;
        chain.finish()?;

        let mut screws = Vec::with_capacity(n);
        for k in 1..=n {
            let mut joint = doc.take_section(&format!("joint {k}"))?;
            let s = joint.take_f64s("screw", 6)?;
            screws.push(Twist::new(Vec3::new(s[0], s[1], s[2]), Vec3::new(s[3], s[4], s[5])));
            joint.finish()?;
        }
        let mut links = Vec::with_capacity(n);
        for k in 1..=n {
            let mut link = doc.take_section(&format!("link {k}"))?;
            let mass = link.take_f64("mass")?;
            let c = link.take_f64s("com", 3)?;
            let i = link.take_f64s("inertia", 6)?;
            let inertia = Mat3::new(i[0], i[1], i[2], i[1], i[3], i[4], i[2], i[4], i[5]);
            let frame = pose_from_numbers(&link.take_f64s("frame", 12)?, &format!("link {k} frame"))?;
            link.finish()?;
            links.push(LinkInertia { mass, com: Vec3::new(c[0], c[1], c[2]), inertia, frame });
        }
        doc.finish()?;
        Self::new(screws, screw_frame, home, links, gravity)
    }

    pub fn n_joints(&self) -> usize {
        self.n
    }

    pub fn home_pose(&self) -> &Pose {
        &self.home
    }

    pub fn links(&self) -> &[LinkInertia] {
        &self.links
    }

    pub fn space_screws(&self) -> &[Twist] {
        &self.space_screws
    }

    /// Product-of-exponentials forward kinematics of the end-effector.
    pub fn forward_kinematics(&self, q: &DVector<f64>) -> Pose {
        let mut g = Pose::identity();
        for (k, s) in self.space_screws.iter().enumerate() {
            g = g.compose(&exp_se3(&Twist::new(s.v * q[k], s.w * q[k])));
        }
        g.compose(&self.home)
    }

    /// Prefix products `A_k = exp(S_0 q_0) ... exp(S_{k-1} q_{k-1})`, k = 0..=n.
    fn prefix_poses(&self, q: &DVector<f64>) -> Vec<Pose> {
        let mut prefixes = Vec::with_capacity(self.n + 1);
        prefixes.push(Pose::identity());
        for (k, s) in self.space_screws.iter().enumerate() {
            let step = exp_se3(&Twist::new(s.v * q[k], s.w * q[k]));
            prefixes.push(prefixes[k].compose(&step));
        }
        prefixes
    }

    /// Joint screws displaced to the current configuration (space frame).
    fn current_screws(&self, prefixes: &[Pose]) -> Vec<Twist> {
        self.space_screws
            .iter()
            .enumerate()
            .map(|(k, s)| prefixes[k + 1].adjoint_apply(s))
            .collect()
    }

    /// Body-frame Jacobian of the end-effector: `V^b = J_b qd`.
    pub fn body_jacobian(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let prefixes = self.prefix_poses(q);
        let cur = self.current_screws(&prefixes);
        let g = prefixes[self.n].compose(&self.home);
        let mut j = DMatrix::zeros(6, self.n);
        for (k, s) in cur.iter().enumerate() {
            j.set_column(k, &g.adjoint_inv_apply(s).vec6());
        }
        j
    }

    /// Body twist of the end-effector at a joint state.
    pub fn body_velocity(&self, s: &JointState) -> Twist {
        let v6 = self.body_jacobian(&s.q) * &s.qd;
        Twist::from_vec6(&Vec6::from_column_slice(v6.as_slice()))
    }

    /// Mass matrix via link center-of-mass Jacobians.
    pub fn mass_matrix(&self, q: &DVector<f64>) -> DMatrix<f64> {
        let prefixes = self.prefix_poses(q);
        let cur = self.current_screws(&prefixes);
        let mut m = DMatrix::zeros(self.n, self.n);
        let mut cols: Vec<(Twist, Twist)> = Vec::with_capacity(self.n);
        for (i, link) in self.links.iter().enumerate() {
            let g_ci = prefixes[i + 1].compose(&self.com_frames[i]);
            cols.clear();
            for s in cur.iter().take(i + 1) {
                let col = g_ci.adjoint_inv_apply(s);
                let weighted = Twist::new(col.v * link.mass, link.inertia * col.w);
                cols.push((col, weighted));
            }
            for j in 0..=i {
                for k in j..=i {
                    let val = cols[j].0.v.dot(&cols[k].1.v) + cols[j].0.w.dot(&cols[k].1.w);
                    m[(j, k)] += val;
                    if j != k {
                        m[(k, j)] += val;
                    }
                }
            }
        }
        m
    }

    /// Gradient of the gravity potential.
    pub fn gravity_vector(&self, q: &DVector<f64>) -> DVector<f64> {
        let prefixes = self.prefix_poses(q);
        let cur = self.current_screws(&prefixes);
        let mut g = DVector::zeros(self.n);
        for (i, link) in self.links.iter().enumerate() {
            let g_ci = prefixes[i + 1].compose(&self.com_frames[i]);
            // Gravity pulled back into the com frame, weighted by the mass.
            let gb = g_ci.rot.apply_transpose(&self.gravity) * link.mass;
            for (k, s) in cur.iter().take(i + 1).enumerate() {
                let col = g_ci.adjoint_inv_apply(s);
                g[k] -= gb.dot(&col.v);
            }
        }
        g
    }

    /// Joint-space M, C, G at a state. C comes from Christoffel symbols of M
    /// (symmetrized central differences), so `Mdot - 2C` is skew-symmetric.
    pub fn joint_dynamics(&self, s: &JointState) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let n = self.n;
        let m = self.mass_matrix(&s.q);
        let g = self.gravity_vector(&s.q);

        let mut dm = Vec::with_capacity(n);
        let mut qp = s.q.clone();
        for k in 0..n {
            let q0 = qp[k];
            qp[k] = q0 + CHRISTOFFEL_H;
            let plus = self.mass_matrix(&qp);
            qp[k] = q0 - CHRISTOFFEL_H;
            let minus = self.mass_matrix(&qp);
            qp[k] = q0;
            dm.push((plus - minus) / (2.0 * CHRISTOFFEL_H));
        }

        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += (dm[k][(i, j)] + dm[j][(i, k)] - dm[i][(j, k)]) * s.qd[k];
                }
                c[(i, j)] = 0.5 * acc;
            }
        }
        (m, c, g)
    }

    /// Operational-space dynamics `m vdot + c v + g = wrench` for a 6-joint
    /// chain. Errors when the Jacobian condition number reaches [`COND_MAX`].
    pub fn operational_dynamics(&self, s: &JointState) -> Result<OperationalDynamics, RobotError> {
        if self.n != 6 {
            return Err(RobotError::WrongDof { got: self.n });
        }
        let j_dyn = self.body_jacobian(&s.q);
        let jacobian = Mat6::from_column_slice(j_dyn.as_slice());
        let sv = jacobian.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if !(cond < COND_MAX) {
            return Err(RobotError::SingularJacobian { cond });
        }
        let jacobian_inv = jacobian.try_inverse().ok_or(RobotError::SingularJacobian { cond })?;

        // Central difference of J along qd gives dJ/dt.
        let jdot = {
            let qp = &s.q + &s.qd * JDOT_H;
            let qm = &s.q - &s.qd * JDOT_H;
            let diff = self.body_jacobian(&qp) - self.body_jacobian(&qm);
            Mat6::from_column_slice(diff.as_slice()) / (2.0 * JDOT_H)
        };

        let (mj, cj, gj) = self.joint_dynamics(s);
        let mj = Mat6::from_column_slice(mj.as_slice());
        let cj = Mat6::from_column_slice(cj.as_slice());
        let gj = Vec6::from_column_slice(gj.as_slice());

        let jt_inv = jacobian_inv.transpose();
        let m = jt_inv * mj * jacobian_inv;
        let c = jt_inv * (cj - mj * jacobian_inv * jdot) * jacobian_inv;
        let g = jt_inv * gj;
        Ok(OperationalDynamics { m, c, g, jacobian, jacobian_inv, cond })
    }

    /// Joint torque realizing a body-frame end-effector wrench: `tau = J^T w`.
    pub fn wrench_to_joint_torque(&self, q: &DVector<f64>, w: &Wrench) -> DVector<f64> {
        self.body_jacobian(q).tr_mul(&DVector::from_column_slice(w.vec6().as_slice()))
    }
}

fn validate_link(index: usize, link: &LinkInertia) -> Result<(), RobotError> {
    let bad = |reason: String| RobotError::BadLink { link: index, reason };
    if !(link.mass > 0.0) {
        return Err(bad(format!("mass {} must be positive", link.mass)));
    }
    let sym_defect = (link.inertia - link.inertia.transpose()).amax();
    if sym_defect > 1e-9 {
        return Err(bad(format!("inertia tensor is not symmetric (defect {sym_defect:.3e})")));
    }
    let mut eig: Vec<f64> = link.inertia.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if eig[0] <= 0.0 {
        return Err(bad(format!("inertia tensor is not positive definite (min eigenvalue {:.3e})", eig[0])));
    }
    if eig[0] + eig[1] < eig[2] * (1.0 - 1e-9) {
        return Err(bad(format!(
            "principal moments violate the triangle inequality ({:.4e} + {:.4e} < {:.4e})",
            eig[0], eig[1], eig[2]
        )));
    }
    Ok(())
}

fn pose_from_numbers(x: &[f64], what: &str) -> Result<Pose, RobotError> {
    let m = Mat3::new(x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]);
    let rot = Rotation::from_matrix(m)
        .map_err(|source| RobotError::BadPose { what: what.to_string(), source })?;
    Ok(Pose::new(rot, Vec3::new(x[9], x[10], x[11])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liegroup::{exp_so3, log_se3};
    use nalgebra::dvector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn ur5e() -> RobotModel {
        let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../presets/ur5e");
        RobotModel::from_file(path).expect("ur5e preset loads")
    }

    /// Planar 2R arm used against the closed-form oracle.
    pub(crate) fn two_link() -> RobotModel {
        const L1: f64 = 0.4;
        let links = vec![
            LinkInertia {
                mass: 0.8,
                com: Vec3::new(0.18, 0.0, 0.0),
                inertia: Mat3::from_diagonal(&Vec3::new(0.0105, 0.0105, 0.02)),
                frame: Pose::identity(),
            },
            LinkInertia {
                mass: 0.5,
                com: Vec3::new(0.22, 0.0, 0.0),
                inertia: Mat3::from_diagonal(&Vec3::new(0.008, 0.008, 0.015)),
                frame: Pose::new(Rotation::identity(), Vec3::new(L1, 0.0, 0.0)),
            },
        ];
        let screws = vec![
            Twist::new(Vec3::zeros(), Vec3::z()),
            Twist::new(Vec3::new(0.0, -L1, 0.0), Vec3::z()),
        ];
        let home = Pose::new(Rotation::identity(), Vec3::new(L1 + 0.35, 0.0, 0.0));
        RobotModel::new(screws, ScrewFrame::Space, home, links, Vec3::new(0.0, -9.81, 0.0))
            .unwrap()
    }

    /// Closed-form M, C, G for the planar arm above.
    fn two_link_oracle(q: &DVector<f64>, qd: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let (m1, m2) = (0.8, 0.5);
        let (l1, lc1, lc2) = (0.4, 0.18, 0.22);
        let (iz1, iz2) = (0.02, 0.015);
        let grav = 9.81;
        let c2 = q[1].cos();
        let s2 = q[1].sin();
        let m11 = iz1 + iz2 + m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2);
        let m12 = iz2 + m2 * (lc2 * lc2 + l1 * lc2 * c2);
        let m22 = iz2 + m2 * lc2 * lc2;
        let m = DMatrix::from_row_slice(2, 2, &[m11, m12, m12, m22]);
        let h = -m2 * l1 * lc2 * s2;
        let c = DMatrix::from_row_slice(
            2,
            2,
            &[h * qd[1], h * (qd[0] + qd[1]), -h * qd[0], 0.0],
        );
        let g = DVector::from_row_slice(&[
            grav * ((m1 * lc1 + m2 * l1) * q[0].cos() + m2 * lc2 * (q[0] + q[1]).cos()),
            grav * m2 * lc2 * (q[0] + q[1]).cos(),
        ]);
        (m, c, g)
    }

    /// UR5e DH table; independent forward-kinematics route for cross-checks.
    fn ur5e_dh_fk(q: &DVector<f64>) -> nalgebra::Matrix4<f64> {
        let rows = [
            (q[0], 0.1625, 0.0, FRAC_PI_2),
            (q[1], 0.0, -0.425, 0.0),
            (q[2], 0.0, -0.3922, 0.0),
            (q[3], 0.1333, 0.0, FRAC_PI_2),
            (q[4], 0.0997, 0.0, -FRAC_PI_2),
            (q[5], 0.0996, 0.0, 0.0),
        ];
        let mut t = nalgebra::Matrix4::identity();
        for (theta, d, a, alpha) in rows {
            let (st, ct) = theta.sin_cos();
            let (sa, ca) = alpha.sin_cos();
            #[rustfmt::skip]
            let step = nalgebra::Matrix4::new(
                ct, -st * ca,  st * sa, a * ct,
                st,  ct * ca, -ct * sa, a * st,
                0.0,      sa,       ca,      d,
                0.0,     0.0,      0.0,    1.0,
            );
            t *= step;
        }
        t
    }

    fn rand_q(r: &mut ChaCha8Rng, n: usize, scale: f64) -> DVector<f64> {
        DVector::from_fn(n, |_, _| r.gen_range(-scale..scale))
    }

    #[test]
    fn preset_parses_and_validates() {
        let robot = ur5e();
        assert_eq!(robot.n_joints(), 6);
        assert!((robot.gravity - Vec3::new(0.0, 0.0, -9.81)).amax() == 0.0);
    }

    #[test]
    fn fk_at_zero_is_home() {
        let robot = ur5e();
        let g = robot.forward_kinematics(&DVector::zeros(6));
        assert!((g.to_homogeneous() - robot.home_pose().to_homogeneous()).amax() < 1e-14);
    }

    #[test]
    fn fk_single_joint_quarter_turn() {
        let links = vec![LinkInertia {
            mass: 1.0,
            com: Vec3::new(0.1, 0.0, 0.0),
            inertia: Mat3::from_diagonal(&Vec3::new(0.01, 0.01, 0.015)),
            frame: Pose::identity(),
        }];
        let screws = vec![Twist::new(Vec3::zeros(), Vec3::z())];
        let home = Pose::new(Rotation::identity(), Vec3::new(0.3, 0.0, 0.0));
        let robot = RobotModel::new(screws, ScrewFrame::Space, home, links, Vec3::zeros()).unwrap();
        let g = robot.forward_kinematics(&dvector![FRAC_PI_2]);
        let expected = Pose::new(exp_so3(&Vec3::new(0.0, 0.0, FRAC_PI_2)), Vec3::zeros())
            .compose(&home);
        assert!((g.to_homogeneous() - expected.to_homogeneous()).amax() < 1e-15);
    }

    #[test]
    fn fk_matches_dh_oracle() {
        let robot = ur5e();
        let mut r = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = rand_q(&mut r, 6, PI);
            let poe = robot.forward_kinematics(&q).to_homogeneous();
            let dh = ur5e_dh_fk(&q);
            assert!((poe - dh).amax() < 1e-10);
        }
    }

    #[test]
    fn body_jacobian_matches_fk_differences() {
        let robot = ur5e();
        let mut r = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-6;
        for _ in 0..20 {
            let q = rand_q(&mut r, 6, PI * 0.8);
            let j = robot.body_jacobian(&q);
            let g = robot.forward_kinematics(&q);
            for k in 0..6 {
                let mut qp = q.clone();
                qp[k] += h;
                let mut qm = q.clone();
                qm[k] -= h;
                let fwd = log_se3(&g.inverse().compose(&robot.forward_kinematics(&qp)));
                let bwd = log_se3(&g.inverse().compose(&robot.forward_kinematics(&qm)));
                let col = (fwd.vec6() - bwd.vec6()) / (2.0 * h);
                assert!((j.column(k) - col).amax() < 1e-5);
            }
        }
    }

    #[test]
    fn zero_velocity_gives_zero_body_twist() {
        let robot = ur5e();
        let s = JointState::new(dvector![0.3, -0.8, 1.0, 0.2, 0.5, -0.4], DVector::zeros(6));
        assert!(robot.body_velocity(&s).norm() == 0.0);
    }

    #[test]
    fn two_link_matches_closed_form() {
        let robot = two_link();
        let mut r = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let q = rand_q(&mut r, 2, PI);
            let qd = rand_q(&mut r, 2, 2.0);
            let (m, c, g) = robot.joint_dynamics(&JointState::new(q.clone(), qd.clone()));
            let (mo, co, go) = two_link_oracle(&q, &qd);
            assert!((m - mo).amax() < 1e-10, "mass matrix mismatch");
            assert!((c - co).amax() < 1e-10, "coriolis mismatch");
            assert!((g - go).amax() < 1e-10, "gravity mismatch");
        }
    }

    #[test]
    fn coriolis_vanishes_at_rest() {
        let robot = two_link();
        let s = JointState::new(dvector![0.7, -0.3], DVector::zeros(2));
        let (_, c, _) = robot.joint_dynamics(&s);
        assert!(c.amax() == 0.0);
    }

    #[test]
    fn mdot_minus_two_c_is_skew() {
        let robot = ur5e();
        let mut r = ChaCha8Rng::seed_from_u64(14);
        let dt = 1e-6;
        for _ in 0..20 {
            let q = rand_q(&mut r, 6, PI * 0.8);
            let qd = rand_q(&mut r, 6, 1.5);
            let (_, c, _) = robot.joint_dynamics(&JointState::new(q.clone(), qd.clone()));
            let mdot = (robot.mass_matrix(&(&q + &qd * dt)) - robot.mass_matrix(&(&q - &qd * dt)))
                / (2.0 * dt);
            let x = mdot - c * 2.0;
            assert!((&x + x.transpose()).amax() < 1e-6);
        }
    }

    #[test]
    fn mass_matrix_is_positive_definite() {
        let robot = ur5e();
        let mut r = ChaCha8Rng::seed_from_u64(15);
        for _ in 0..100 {
            let q = rand_q(&mut r, 6, PI);
            let m = robot.mass_matrix(&q);
            let eig = m.symmetric_eigenvalues();
            assert!(eig.iter().all(|&l| l > 0.0), "non-positive eigenvalue at q = {q:?}");
        }
    }

    #[test]
    fn operational_equals_joint_space_for_identity_jacobian() {
        // Three prismatic + three revolute unit screws with identity home:
        // J(0) is the 6x6 identity.
        let screws = vec![
            Twist::new(Vec3::x(), Vec3::zeros()),
            Twist::new(Vec3::y(), Vec3::zeros()),
            Twist::new(Vec3::z(), Vec3::zeros()),
            Twist::new(Vec3::zeros(), Vec3::x()),
            Twist::new(Vec3::zeros(), Vec3::y()),
            Twist::new(Vec3::zeros(), Vec3::z()),
        ];
        let links = (0..6)
            .map(|_| LinkInertia {
                mass: 1.2,
                com: Vec3::zeros(),
                inertia: Mat3::from_diagonal(&Vec3::new(0.1, 0.1, 0.1)),
                frame: Pose::identity(),
            })
            .collect();
        let robot =
            RobotModel::new(screws, ScrewFrame::Space, Pose::identity(), links, Vec3::zeros())
                .unwrap();
        let s = JointState::new(DVector::zeros(6), DVector::zeros(6));
        let op = robot.operational_dynamics(&s).unwrap();
        let (mj, _, _) = robot.joint_dynamics(&s);
        assert!((op.jacobian - Mat6::identity()).amax() < 1e-14);
        assert!((op.m - Mat6::from_column_slice(mj.as_slice())).amax() < 1e-12);
    }

    #[test]
    fn operational_dynamics_consistency_identity() {
        // m_til (J qdd + Jdot qd) + c_til (J qd) + g_til = J^-T (M qdd + C qd + G).
        let robot = ur5e();
        let mut r = ChaCha8Rng::seed_from_u64(16);
        let mut checked = 0;
        while checked < 20 {
            let q = rand_q(&mut r, 6, 2.0);
            let qd = rand_q(&mut r, 6, 1.5);
            let qdd = rand_q(&mut r, 6, 2.0);
            let s = JointState::new(q.clone(), qd.clone());
            let op = match robot.operational_dynamics(&s) {
                Ok(op) => op,
                Err(RobotError::SingularJacobian { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let (mj, cj, gj) = robot.joint_dynamics(&s);
            let h = 1e-7;
            let jdot = (robot.body_jacobian(&(&q + &qd * h)) - robot.body_jacobian(&(&q - &qd * h)))
                / (2.0 * h);
            let j = robot.body_jacobian(&q);
            let v = &j * &qd;
            let vdot = &j * &qdd + &jdot * &qd;
            let v6 = Vec6::from_column_slice(v.as_slice());
            let vdot6 = Vec6::from_column_slice(vdot.as_slice());
            let lhs = op.m * vdot6 + op.c * v6 + op.g;
            let rhs_joint = &mj * &qdd + &cj * &qd + &gj;
            let rhs = op.jacobian_inv.transpose() * Vec6::from_column_slice(rhs_joint.as_slice());
            assert!((lhs - rhs).amax() < 1e-8);
            checked += 1;
        }
    }

    #[test]
    fn stretched_configuration_is_singular() {
        let robot = ur5e();
        let s = JointState::new(DVector::zeros(6), DVector::zeros(6));
        match robot.operational_dynamics(&s) {
            Err(RobotError::SingularJacobian { cond }) => assert!(cond >= COND_MAX),
            other => panic!("expected singular Jacobian, got {other:?}"),
        }
    }

    #[test]
    fn wrench_torque_power_duality() {
        let robot = ur5e();
        let mut r = ChaCha8Rng::seed_from_u64(17);
        assert!(
            robot
                .wrench_to_joint_torque(&DVector::zeros(6), &Wrench::zero())
                .amax()
                == 0.0
        );
        for _ in 0..50 {
            let q = rand_q(&mut r, 6, PI);
            let qd = rand_q(&mut r, 6, 2.0);
            let w = Wrench::new(
                Vec3::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)),
                Vec3::new(r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)),
            );
            let tau = robot.wrench_to_joint_torque(&q, &w);
            let v = robot.body_velocity(&JointState::new(q, qd.clone()));
            let joint_power = tau.dot(&qd);
            assert!((joint_power - w.power(&v)).abs() < 1e-12);
        }
    }

    #[test]
    fn one_joint_torque_is_screw_projection() {
        let links = vec![LinkInertia {
            mass: 1.0,
            com: Vec3::zeros(),
            inertia: Mat3::from_diagonal(&Vec3::new(0.01, 0.01, 0.01)),
            frame: Pose::identity(),
        }];
        let screw = Twist::new(Vec3::new(0.0, -0.2, 0.0), Vec3::z());
        let robot = RobotModel::new(
            vec![screw],
            ScrewFrame::Space,
            Pose::identity(),
            links,
            Vec3::zeros(),
        )
        .unwrap();
        let w = Wrench::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(-0.5, 0.4, 0.8));
        let tau = robot.wrench_to_joint_torque(&DVector::zeros(1), &w);
        assert!((tau[0] - screw.vec6().dot(&w.vec6())).abs() < 1e-14);
    }

    #[test]
    fn body_screw_convention_matches_space() {
        let robot = ur5e();
        // Convert the space screws to body screws and rebuild.
        let home_inv = robot.home_pose().inverse();
        let body_screws: Vec<Twist> =
            robot.space_screws().iter().map(|s| home_inv.adjoint_apply(s)).collect();
        let body_robot = RobotModel::new(
            body_screws,
            ScrewFrame::Body,
            *robot.home_pose(),
            robot.links().to_vec(),
            robot.gravity,
        )
        .unwrap();
        let q = dvector![0.4, -0.9, 1.1, 0.3, -0.6, 0.8];
        let a = robot.forward_kinematics(&q).to_homogeneous();
        let b = body_robot.forward_kinematics(&q).to_homogeneous();
        assert!((a - b).amax() < 1e-10);
    }

    #[test]
    fn parser_rejects_unknown_keys_and_bad_links() {
        let base = "[chain]\nn_joints = 1\nhome_pose = 1 0 0 0 1 0 0 0 1 0 0 0\n";
        let joint = "[joint 1]\nscrew = 0 0 0 0 0 1\n";
        let ok_link = "[link 1]\nmass = 1.0\ncom = 0 0 0\ninertia = 0.01 0 0 0.01 0 0.01\nframe = 1 0 0 0 1 0 0 0 1 0 0 0\n";

        assert!(RobotModel::parse(&format!("{base}{joint}{ok_link}")).is_ok());

        let unknown = format!("{base}mystery = 3\n{joint}{ok_link}");
        let err = RobotModel::parse(&unknown).unwrap_err();
        assert!(err.to_string().contains("mystery"));

        let bad_mass = ok_link.replace("mass = 1.0", "mass = -2.0");
        let err = RobotModel::parse(&format!("{base}{joint}{bad_mass}")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("link 1") && msg.contains("-2"), "{msg}");

        let bad_screw = joint.replace("0 0 0 0 0 1", "0 0 0 0 0 2");
        let err = RobotModel::parse(&format!("{base}{bad_screw}{ok_link}")).unwrap_err();
        assert!(err.to_string().contains("joint 1"));
    }
}
