//! CSV and PGM exports. Every file opens with `#`-prefixed provenance lines.
//!
//! Floats are written in the shortest form that parses back to the same
//! `f64`, so CSV values reload exactly.

use std::fmt::Write as _;

use sha2::{Digest, Sha256};
use uqst_core::tomo::{ModeStats, QGrid, QuadratureSamples};

pub const TOOL: &str = concat!("uqst ", env!("CARGO_PKG_VERSION"));

/// Identifies what an artifact was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    /// `(name, sha256)` of input files.
    pub inputs: Vec<(String, String)>,
}

impl Provenance {
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!("tool = {TOOL}"),
            format!("config_sha256 = {}", self.config_sha256),
            format!("seed = {}", self.seed),
        ];
        for (name, digest) in &self.inputs {
            out.push(format!("input {name} sha256 = {digest}"));
        }
        out
    }

    fn header(&self, out: &mut String) {
        for line in self.lines() {
            let _ = writeln!(out, "# {line}");
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn mode_stats_csv(stats: &[ModeStats], prov: &Provenance) -> String {
    let mut out = String::new();
    prov.header(&mut out);
    let _ = writeln!(out, "p,theta_p,mean_n,delta_n,var_x,var_y");
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.p, s.theta_p, s.mean_n, s.delta_n, s.var_x, s.var_y
        );
    }
    out
}

/// Photon number against mode angle, with the standard error of the mean
/// and the number spread `delta_n` for error bars.
pub fn spectrum_csv(stats: &[ModeStats], prov: &Provenance) -> String {
    let mut out = String::new();
    prov.header(&mut out);
    let _ = writeln!(out, "p,theta_p,mean_n,stderr_n,delta_n");
    for s in stats {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.p, s.theta_p, s.mean_n, s.stderr_n, s.delta_n
        );
    }
    out
}

pub fn quadratures_csv(samples: &QuadratureSamples, prov: &Provenance) -> String {
    let mut out = String::new();
    prov.header(&mut out);
    let _ = writeln!(out, "shot,p,x,y");
    for (row, shot) in samples.shot_indices.iter().enumerate() {
        for (col, p) in samples.modes().enumerate() {
            let _ = writeln!(
                out,
                "{shot},{p},{},{}",
                samples.x[[row, col]],
                samples.y[[row, col]]
            );
        }
    }
    out
}

/// Matrix layout: the first row lists y cell centers, each following row
/// starts with its x cell center.
pub fn qgrid_csv(grid: &QGrid, prov: &Provenance) -> String {
    let mut out = String::new();
    prov.header(&mut out);
    let _ = writeln!(out, "# estimator = {}", grid.kind.name());
    let _ = writeln!(out, "# rows = {}, columns = {}", grid.x_label, grid.y_label);
    if let Some((hx, hy)) = grid.bandwidth {
        let _ = writeln!(out, "# bandwidth = {hx}, {hy}");
    }
    let ys: Vec<String> = grid.y_centers().iter().map(f64::to_string).collect();
    let _ = writeln!(out, "{}\\{},{}", grid.x_label, grid.y_label, ys.join(","));
    for (i, x) in grid.x_centers().iter().enumerate() {
        let row: Vec<String> = grid.density.row(i).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{x},{}", row.join(","));
    }
    out
}

/// Binary PGM (P5) heatmap: x to the right, y upward, density min-max
/// normalized to 0..=255 with gamma 1. A flat grid renders black.
pub fn qgrid_pgm(grid: &QGrid, prov: &Provenance) -> Vec<u8> {
    let (nx, ny) = grid.density.dim();
    let lo = grid.density.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = grid.density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut out = String::from("P5\n");
    for line in prov.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "# {} vs {}, {}", grid.y_label, grid.x_label, grid.kind.name());
    let _ = write!(out, "{nx} {ny}\n255\n");
    let mut bytes = out.into_bytes();
    for j in (0..ny).rev() {
        for i in 0..nx {
            let v = if span > 0.0 {
                ((grid.density[[i, j]] - lo) / span * 255.0).round() as u8
            } else {
                0
            };
            bytes.push(v);
        }
    }
    bytes
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use uqst_core::tomo::GridKind;

    fn prov() -> Provenance {
        Provenance {
            config_sha256: "00".into(),
            seed: 3,
            inputs: vec![("frames".into(), "ff".into())],
        }
    }

    fn grid() -> QGrid {
        QGrid {
            density: array![[0.0, 1.0], [2.0, 4.0], [0.5, 0.25]],
            x_edges: vec![0.0, 1.0, 2.0, 3.0],
            y_edges: vec![-1.0, 0.0, 1.0],
            kind: GridKind::Histogram,
            x_label: "x_5".into(),
            y_label: "y_5".into(),
            bandwidth: None,
        }
    }

    #[test]
    fn pgm_is_min_max_normalized_with_y_up() {
        let bytes = qgrid_pgm(&grid(), &prov());
        let pixels = &bytes[bytes.len() - 6..];
        // Top row is the highest y cell.
        assert_eq!(pixels, &[64, 255, 16, 0, 128, 32]);
        let text = String::from_utf8_lossy(&bytes[..bytes.len() - 6]);
        assert!(text.starts_with("P5\n# tool = uqst"));
        assert!(text.ends_with("3 2\n255\n"));
    }

    #[test]
    fn qgrid_csv_reloads_exactly() {
        let g = grid();
        let text = qgrid_csv(&g, &prov());
        let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "x_5\\y_5,-0.5,0.5");
        for (i, r) in rows[1..].iter().enumerate() {
            let v: Vec<f64> = r.split(',').map(|s| s.parse().unwrap()).collect();
            assert_eq!(v[0], g.x_centers()[i]);
            assert_eq!(&v[1..], g.density.row(i).to_vec().as_slice());
        }
    }

    #[test]
    fn provenance_leads_every_csv() {
        let text = mode_stats_csv(&[], &prov());
        assert_eq!(text.lines().next(), Some(format!("# tool = {TOOL}").as_str()));
        assert!(text.contains("# input frames sha256 = ff"));
    }
}
