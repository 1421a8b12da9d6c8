use crate::atraj::{validate, AdmissibleMatrix, Mode, PLTrajectory};
use crate::cone_billiard::{ConeEvent, ConeTrajectory, Termination};
use crate::error::{Error, Result};
use crate::geometry::PolyhedralCone;
use crate::linalg::Lu;
use crate::numeric::Real;

/// Face coordinates `f_k(t) = <x(t), nu_k>` of a cone trajectory on
/// `[t_start, t_end]`. `t_end` must come after the last reflection.
pub fn gram_coordinates<T: Real>(
    cone: &PolyhedralCone<T>,
    traj: &ConeTrajectory<T>,
    t_end: T,
) -> Result<PLTrajectory<T>> {
    cone.gram().lu()?;
    if let Some(last) = traj.events.last() {
        if t_end <= last.time {
            return Err(Error::InvalidArgument("window ends before the last reflection".into()));
        }
    }
    let start = cone.face_values(&traj.start);
    let breaks = traj.events.iter().map(|e| e.time.clone()).collect();
    let slopes = std::iter::once(&traj.velocity)
        .chain(traj.events.iter().map(|e| &e.post))
        .map(|v| cone.face_values(v))
        .collect();
    PLTrajectory::new(traj.t_start.clone(), t_end, start, breaks, slopes)
}

/// The cone trajectory in the span of the normals whose face coordinates
/// are `f`: each value vector `xi` lifts to `sum_k c_k nu_k` with
/// `G c = xi`. `f` must be a genuine trajectory for the Gram matrix `G`.
pub fn lift_from_gram<T: Real>(
    cone: &PolyhedralCone<T>,
    f: &PLTrajectory<T>,
    tol: &T,
) -> Result<ConeTrajectory<T>> {
    if f.m() != cone.faces() {
        return Err(Error::DimensionMismatch {
            expected: cone.faces(),
            got: f.m(),
        });
    }
    let lu = cone.gram().lu()?;
    let a = AdmissibleMatrix::from_gram(cone.gram())?;
    let report = validate(f, &a, Mode::Genuine, tol)?;
    if let Some(v) = report.violation {
        return Err(Error::InvalidArgument(format!("not a trajectory of this cone: {v}")));
    }
    let lift = |xi: &[T]| lift_vector(cone, &lu, xi);
    let events = f
        .collisions(tol)
        .into_iter()
        .map(|e| ConeEvent {
            wall: e.vanishing[0],
            position: lift(&e.values),
            pre: lift(&e.pre),
            post: lift(&e.post),
            time: e.time,
        })
        .collect();
    let (x0, v0) = f.initial_data();
    Ok(ConeTrajectory {
        t_start: f.t_start().clone(),
        start: lift(&x0),
        velocity: lift(&v0),
        events,
        termination: Termination::Horizon,
        t_end: Some(f.t_end().clone()),
    })
}

pub(crate) fn lift_vector<T: Real>(cone: &PolyhedralCone<T>, lu: &Lu<T>, xi: &[T]) -> Vec<T> {
    let c = lu.solve(xi);
    let mut x = vec![T::zero(); cone.ambient()];
    for (ck, nu) in c.iter().zip(cone.normals()) {
        for (xi, n) in x.iter_mut().zip(nu) {
            *xi = xi.clone() + ck.clone() * n.clone();
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_billiard::simulate_cone;

    fn skew_cone() -> PolyhedralCone<f64> {
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        PolyhedralCone::new(
            3,
            vec![vec![1.0, 0.0, 0.0], vec![s, c, 0.0], vec![0.0, 0.2, 0.96f64.sqrt()]],
            &1e-12,
        )
        .unwrap()
    }

    #[test]
    fn simulated_trajectories_satisfy_the_matrix_rule() {
        let cone = skew_cone();
        let tr = simulate_cone(&cone, &[1.0, 2.0, 3.0], &[-1.0, -0.7, -0.9], 50).unwrap();
        assert!(tr.len() >= 2);
        let end = tr.events.last().unwrap().time + 1.0;
        let f = gram_coordinates(&cone, &tr, end).unwrap();
        let a = AdmissibleMatrix::from_gram(cone.gram()).unwrap();
        let rep = validate(&f, &a, Mode::Genuine, &1e-10).unwrap();
        assert!(rep.passed(), "{:?}", rep.violation);
        assert_eq!(rep.collisions, tr.len());
    }

    #[test]
    fn lift_inverts_gram_coordinates() {
        let cone = skew_cone();
        let tr = simulate_cone(&cone, &[1.0, 2.0, 3.0], &[-1.0, -0.7, -0.9], 50).unwrap();
        let end = tr.events.last().unwrap().time + 1.0;
        let f = gram_coordinates(&cone, &tr, end).unwrap();
        let back = lift_from_gram(&cone, &f, &1e-10).unwrap();
        assert_eq!(back.wall_sequence(), tr.wall_sequence());
        for (a, b) in back.events.iter().zip(&tr.events) {
            assert!((a.time - b.time).abs() <= 1e-10);
            for (p, q) in a.position.iter().zip(&b.position) {
                assert!((p - q).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn single_face_lift() {
        let cone = PolyhedralCone::<f64>::orthant(1);
        let f = PLTrajectory::new(-1.0, 1.0, vec![1.0], vec![0.0], vec![vec![-1.0], vec![1.0]]).unwrap();
        let tr = lift_from_gram(&cone, &f, &1e-12).unwrap();
        assert_eq!(tr.start, vec![1.0]);
        assert_eq!(tr.events[0].post, vec![1.0]);
        let re = simulate_cone(&cone, &tr.start, &tr.velocity, 5).unwrap();
        assert_eq!(re.len(), 1);
    }

    #[test]
    fn constant_trajectory_has_positive_faces() {
        let cone = skew_cone();
        let tr = simulate_cone(&cone, &[1.0, 1.0, 1.0], &[0.0, 0.0, 0.0], 5).unwrap();
        let f = gram_coordinates(&cone, &tr, 3.0).unwrap();
        assert!(f.end_values().iter().all(|v| *v > 0.0));
        assert_eq!(f.end_values(), f.start().to_vec());
    }

    #[test]
    fn dependent_normals_are_rejected() {
        let cone = PolyhedralCone::new(2, vec![vec![1.0, 0.0], vec![1.0, 0.0]], &1e-12).unwrap();
        let tr = simulate_cone(&cone, &[1.0, 1.0], &[0.0, 1.0], 5).unwrap();
        assert!(matches!(gram_coordinates(&cone, &tr, 1.0), Err(Error::RankDeficient { .. })));
    }
}
