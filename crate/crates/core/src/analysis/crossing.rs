use crate::error::{Error, Result};
use crate::guidance::Trajectory;

/// Number of trajectory pairs whose relative order changes at any stored
/// time. Requires 1D trajectories on one shared time base.
pub fn crossing_audit(trajectories: &[Trajectory]) -> Result<usize> {
    let Some(first) = trajectories.first() else { return Ok(0) };
    if trajectories.iter().any(|t| t.dims != 1) {
        return Err(Error::invalid("crossing audit needs 1D trajectories"));
    }
    if trajectories.iter().any(|t| t.times != first.times) {
        return Err(Error::invalid("trajectories do not share a time base"));
    }
    let n_times = first.times.len();
    let mut order: Vec<usize> = (0..trajectories.len()).collect();
    order.sort_by(|&a, &b| trajectories[a].points[0].total_cmp(&trajectories[b].points[0]));
    // ordering preserved at every time means no pair crossed
    let monotone = (0..n_times).all(|k| {
        order
            .windows(2)
            .all(|w| trajectories[w[0]].points[k] <= trajectories[w[1]].points[k])
    });
    if monotone {
        return Ok(0);
    }
    let mut violations = 0;
    for i in 0..trajectories.len() {
        for j in i + 1..trajectories.len() {
            let (a, b) = (&trajectories[i].points, &trajectories[j].points);
            let s0 = (a[0] - b[0]).signum();
            if (1..n_times).any(|k| {
                let d = a[k] - b[k];
                d != 0.0 && d.signum() != s0
            }) {
                violations += 1;
            }
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outcome::Outcome;

    fn line(id: usize, xs: &[f64]) -> Trajectory {
        Trajectory {
            id,
            dims: 1,
            times: (0..xs.len()).map(|i| i as f64).collect(),
            points: xs.to_vec(),
            regularized: vec![false; xs.len()],
            regularizations: 0,
            exit_time: None,
            outcome: Outcome::Unresolved,
        }
    }

    #[test]
    fn parallel_lines_never_cross() {
        let ts: Vec<_> = (0..5).map(|i| line(i, &[i as f64, i as f64 + 1.0, i as f64 + 2.0])).collect();
        assert_eq!(crossing_audit(&ts).unwrap(), 0);
    }

    #[test]
    fn swapped_pair_counts_once() {
        let ts = vec![line(0, &[0.0, 1.0, 2.0]), line(1, &[1.0, 1.5, 1.0]), line(2, &[5.0, 5.0, 5.0])];
        assert_eq!(crossing_audit(&ts).unwrap(), 1);
    }

    #[test]
    fn mismatched_time_bases_are_rejected() {
        let ts = vec![line(0, &[0.0, 1.0]), line(1, &[0.0, 1.0, 2.0])];
        assert!(crossing_audit(&ts).is_err());
    }
}
