//! CSV export of trajectories and reverse orbits.
//!
//! Columns are `k,t,x_1..x_n,f,gnorm`, one row per state; reverse orbits add a
//! trailing `direction` column.

use std::io::Write;

use crate::descent::Trajectory;
use crate::landscape::ObjectiveFunction;
use crate::reverse::ReverseOrbit;

fn header(dim: usize, with_direction: bool) -> Vec<String> {
    let mut cols = vec!["k".to_string(), "t".to_string()];
    cols.extend((1..=dim).map(|i| format!("x_{i}")));
    cols.push("f".into());
    cols.push("gnorm".into());
    if with_direction {
        cols.push("direction".into());
    }
    cols
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, out: W) -> csv::Result<()> {
    let dim = traj.first().x.len();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dim, false))?;
    for s in &traj.states {
        let mut row = vec![s.k.to_string(), s.t.to_string()];
        row.extend(s.x.iter().map(|v| v.to_string()));
        row.push(s.f_value.to_string());
        row.push(s.grad_norm.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows are in forward index order; `t` is the cumulative step size from `x_j`.
pub fn write_orbit_csv<W: Write>(
    orbit: &ReverseOrbit,
    f: &ObjectiveFunction,
    out: W,
) -> csv::Result<()> {
    let dim = orbit.anchor.len();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(dim, true))?;
    let mut t = 0.0;
    for (i, x) in orbit.points.iter().enumerate() {
        let mut row = vec![(orbit.first_index + i).to_string(), t.to_string()];
        row.extend(x.iter().map(|v| v.to_string()));
        row.push(f.value(x).to_string());
        row.push(f.gradient(x).norm().to_string());
        row.push("reverse".into());
        w.write_record(&row)?;
        if let Some(a) = orbit.alphas.get(i) {
            t += a;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descent::{run_gd, GdOptions};
    use crate::landscape::make_builtin;
    use crate::reverse::reverse_orbit;
    use crate::schedule::StepSchedule;
    use nalgebra::DVector;

    #[test]
    fn trajectory_layout() {
        let q = make_builtin("quad", &[1.0, 2.0]).unwrap();
        let s = StepSchedule::constant(0.25).unwrap();
        let traj = run_gd(
            &q,
            &DVector::from_vec(vec![1.0, 1.0]),
            &s,
            &GdOptions::default().with_max_iter(2),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,t,x_1,x_2,f,gnorm");
        assert_eq!(lines[1], "0,0,1,1,1.5,2.23606797749979");
        assert_eq!(lines[2], "1,0.25,0.75,0.5,0.53125,1.25");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn orbit_layout() {
        let q = make_builtin("quad", &[1.0]).unwrap();
        let s = StepSchedule::constant(0.5).unwrap();
        let orbit = reverse_orbit(&q, &DVector::from_vec(vec![0.1]), &s, 2).unwrap();
        let mut buf = Vec::new();
        write_orbit_csv(&orbit, &q, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "k,t,x_1,f,gnorm,direction");
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(&first[..2], &["0", "0"]);
        assert!((first[2].parse::<f64>().unwrap() - 0.4).abs() < 1e-12);
        assert!(lines[3].starts_with("2,1,0.1,"));
        assert!(lines[3].ends_with(",reverse"));
    }
}
