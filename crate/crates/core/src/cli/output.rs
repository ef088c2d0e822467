//! CSV and legacy VTK rendering. Everything is rendered to memory first so a
//! failed run leaves no partial files behind.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::continuation::ContinuationResult;
use crate::diagnostics::{ErrorReport, TauEntry};
use crate::solve_bc::SolutionField;
use crate::{GfemError, Point, Result};

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn solution_csv(field: &SolutionField) -> Result<String> {
    let mesh = field.mesh();
    let u = field.nodal_values()?;
    let mut s = String::from("node,x,y,ubar,uprime,u\n");
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{},{},{}",
            num(p[0]),
            num(p[1]),
            num(field.ubar()[i]),
            num(field.uprime_at(i)),
            num(u[i])
        );
    }
    Ok(s)
}

/// Equally spaced points from `a` to `b`, both included.
pub fn line_points(a: Point, b: Point, n: usize) -> Vec<Point> {
    let last = (n.max(2) - 1) as f64;
    (0..n.max(2))
        .map(|i| {
            let t = i as f64 / last;
            [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
        })
        .collect()
}

/// 1D: `x,u[,exact]` over the interval. 2D: `y,x,u` along each cut line.
pub fn profile_csv(
    field: &SolutionField,
    cut_lines: &[f64],
    n: usize,
    exact: Option<&dyn Fn(Point) -> f64>,
) -> Result<String> {
    let mesh = field.mesh();
    let (lx, _) = mesh.extent();
    let mut s = String::new();
    if mesh.dim() == 1 {
        s.push_str(if exact.is_some() { "x,u,exact\n" } else { "x,u\n" });
        for p in line_points([0.0, 0.0], [lx, 0.0], n) {
            let u = field.eval(p)?;
            match exact {
                Some(f) => {
                    let _ = writeln!(s, "{},{},{}", num(p[0]), num(u), num(f(p)));
                }
                None => {
                    let _ = writeln!(s, "{},{}", num(p[0]), num(u));
                }
            }
        }
    } else {
        s.push_str("y,x,u\n");
        for &y in cut_lines {
            for p in line_points([0.0, y], [lx, y], n) {
                let _ = writeln!(s, "{},{},{}", num(y), num(p[0]), num(field.eval(p)?));
            }
        }
    }
    Ok(s)
}

/// Legacy ASCII unstructured grid with the nodal solution as point data.
pub fn vtk(field: &SolutionField) -> Result<String> {
    let mesh = field.mesh();
    let u = field.nodal_values()?;
    let mut s = String::from("# vtk DataFile Version 3.0\ngfem solution\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.n_nodes());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {} 0", num(p[0]), num(p[1]));
    }
    let (cell_type, per) = if mesh.dim() == 1 { (3, 2) } else { (9, 4) };
    let _ = writeln!(s, "CELLS {} {}", mesh.n_elements(), mesh.n_elements() * (per + 1));
    for conn in mesh.elements() {
        let ids: Vec<String> = conn.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "{per} {}", ids.join(" "));
    }
    let _ = writeln!(s, "CELL_TYPES {}", mesh.n_elements());
    for _ in 0..mesh.n_elements() {
        let _ = writeln!(s, "{cell_type}");
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS u double 1\nLOOKUP_TABLE default", mesh.n_nodes());
    for v in u {
        let _ = writeln!(s, "{}", num(v));
    }
    Ok(s)
}

pub fn error_csv(r: &ErrorReport) -> String {
    format!(
        "l2_rel,linf_nodal,overshoot,sign_changes\n{},{},{},{}\n",
        num(r.l2_rel),
        num(r.linf_nodal),
        num(r.overshoot),
        r.sign_changes
    )
}

pub fn tau_csv(entries: &[TauEntry]) -> String {
    let mut s = String::from("element,n_enriched,rank,tau_mean\n");
    for t in entries {
        let _ = writeln!(s, "{},{},{},{}", t.element, t.n_enriched(), t.rank, num(t.mean));
    }
    s
}

/// `step,peclet,kappa[,l2_rel]`; the error column needs the exact solution
/// for each step's diffusivity.
pub fn history_csv(
    history: &ContinuationResult,
    l2_rel: Option<&dyn Fn(f64, &SolutionField) -> Result<f64>>,
) -> Result<String> {
    let mut s = String::from(if l2_rel.is_some() {
        "step,peclet,kappa,l2_rel\n"
    } else {
        "step,peclet,kappa\n"
    });
    for r in &history.steps {
        let _ = write!(s, "{},{},{}", r.step, num(r.peclet), num(r.kappa));
        if let Some(f) = l2_rel {
            let _ = write!(s, ",{}", num(f(r.kappa, &r.field)?));
        }
        s.push('\n');
    }
    Ok(s)
}

/// Writes every `(file name, contents)` pair into `dir`. If any write fails
/// the files already written are removed.
pub fn write_all(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    let io = |path: &Path, source| GfemError::Io {
        path: path.to_path_buf(),
        source,
    };
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    for (name, contents) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            let _ = fs::remove_file(&path);
            return Err(io(&path, e));
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::EnrichmentSpec;
    use crate::mesh::Mesh;
    use std::sync::Arc;

    fn linear_field() -> SolutionField {
        let m = Arc::new(Mesh::build_quad(1.0, 1.0, 2, 2).unwrap());
        let c: Vec<f64> = m.nodes().iter().map(|p| p[0] + 2.0 * p[1]).collect();
        SolutionField::new(m, EnrichmentSpec::none(), c).unwrap()
    }

    #[test]
    fn solution_csv_layout() {
        let s = solution_csv(&linear_field()).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "node,x,y,ubar,uprime,u");
        assert_eq!(lines.len(), 10);
        let last: Vec<f64> = lines[9].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert_eq!(last, vec![1.0, 1.0, 3.0, 0.0, 3.0]);
    }

    #[test]
    fn vtk_layout() {
        let s = vtk(&linear_field()).unwrap();
        assert!(s.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(s.contains("DATASET UNSTRUCTURED_GRID\nPOINTS 9 double\n"));
        assert!(s.contains("CELLS 4 20\n4 0 1 4 3\n"));
        assert!(s.contains("POINT_DATA 9\nSCALARS u double 1\nLOOKUP_TABLE default\n"));
    }

    #[test]
    fn profile_has_requested_points() {
        let s = profile_csv(&linear_field(), &[0.25, 0.5], 200, None).unwrap();
        assert_eq!(s.lines().count(), 401);
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let v = 0.1f64 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn failed_write_leaves_nothing() {
        let tmp = tempfile::tempdir().unwrap();
        let files = vec![
            ("a.csv".to_string(), "x\n".to_string()),
            ("missing/b.csv".to_string(), "y\n".to_string()),
        ];
        assert!(write_all(tmp.path(), &files).is_err());
        assert!(!tmp.path().join("a.csv").exists());
    }
}
