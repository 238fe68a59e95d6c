//! Q-function estimators over a plane spanned by two quadrature axes.

use ndarray::Array2;

use super::quadrature::{AxisSpec, QuadratureSamples};
use crate::error::{Error, Result};
use crate::numeric::{sum, variance};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Histogram,
    Kde,
}

impl GridKind {
    pub fn name(self) -> &'static str {
        match self {
            GridKind::Histogram => "histogram",
            GridKind::Kde => "kde",
        }
    }
}

/// Density over a quadrature plane; `density[[i, j]]` belongs to the `i`-th
/// x cell and `j`-th y cell.
///
/// For histograms `x_edges`/`y_edges` are the `bins + 1` bin edges and the
/// density holds raw counts. For KDE they are the grid coordinates at which
/// the density was evaluated, and the density integrates to one over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct QGrid {
    pub density: Array2<f64>,
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub kind: GridKind,
    pub x_label: String,
    pub y_label: String,
    /// Kernel widths `(h_x, h_y)` for KDE grids.
    pub bandwidth: Option<(f64, f64)>,
}

impl QGrid {
    fn centers(edges: &[f64], kind: GridKind) -> Vec<f64> {
        match kind {
            GridKind::Histogram => edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
            GridKind::Kde => edges.to_vec(),
        }
    }

    pub fn x_centers(&self) -> Vec<f64> {
        Self::centers(&self.x_edges, self.kind)
    }

    pub fn y_centers(&self) -> Vec<f64> {
        Self::centers(&self.y_edges, self.kind)
    }

    /// Bin width (histogram) or grid spacing (KDE) along each axis.
    pub fn cell_size(&self) -> (f64, f64) {
        let step = |e: &[f64]| e[1] - e[0];
        (step(&self.x_edges), step(&self.y_edges))
    }

    /// Sample count for histograms, grid integral for KDE.
    pub fn total_mass(&self) -> f64 {
        let s = sum(self.density.iter().copied());
        match self.kind {
            GridKind::Histogram => s,
            GridKind::Kde => {
                let (dx, dy) = self.cell_size();
                s * dx * dy
            }
        }
    }

    pub fn argmax_index(&self) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for ((i, j), &v) in self.density.indexed_iter() {
            if v > best_v {
                best_v = v;
                best = (i, j);
            }
        }
        best
    }

    /// Cell center of the highest density.
    pub fn argmax(&self) -> (f64, f64) {
        let (i, j) = self.argmax_index();
        (self.x_centers()[i], self.y_centers()[j])
    }

    /// Density-weighted mean and covariance `(mx, my, cxx, cxy, cyy)`.
    pub fn moments(&self) -> (f64, f64, f64, f64, f64) {
        let xc = self.x_centers();
        let yc = self.y_centers();
        let w = sum(self.density.iter().copied());
        let weighted = |f: &dyn Fn(f64, f64) -> f64| {
            sum(self
                .density
                .indexed_iter()
                .map(|((i, j), &d)| d * f(xc[i], yc[j])))
                / w
        };
        let mx = weighted(&|x, _| x);
        let my = weighted(&|_, y| y);
        let cxx = weighted(&|x, _| (x - mx) * (x - mx));
        let cxy = weighted(&|x, y| (x - mx) * (y - my));
        let cyy = weighted(&|_, y| (y - my) * (y - my));
        (mx, my, cxx, cxy, cyy)
    }

    /// Cells strictly above all eight neighbours and at least
    /// `min_fraction` of the global maximum.
    pub fn local_maxima(&self, min_fraction: f64) -> Vec<(usize, usize)> {
        let (nx, ny) = self.density.dim();
        let peak = self.density.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut found = Vec::new();
        for i in 0..nx {
            for j in 0..ny {
                let v = self.density[[i, j]];
                if v < min_fraction * peak || v <= 0.0 {
                    continue;
                }
                let mut is_max = true;
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        if di == 0 && dj == 0 {
                            continue;
                        }
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                            continue;
                        }
                        if self.density[[a as usize, b as usize]] >= v {
                            is_max = false;
                        }
                    }
                }
                if is_max {
                    found.push((i, j));
                }
            }
        }
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HistRange {
    /// Data min/max per axis, padded by 5% of the span on each side.
    Auto,
    /// Fixed ranges; samples outside are not counted.
    Explicit { x: (f64, f64), y: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// `h_d = sigma_d * n^(-1/6)`.
    Scott,
    Explicit { hx: f64, hy: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Histogram { bins: usize, range: HistRange },
    Kde { grid: usize, bandwidth: Bandwidth },
}

impl Estimator {
    pub const DEFAULT_BINS: usize = 30;
    pub const DEFAULT_GRID: usize = 128;

    pub fn histogram() -> Self {
        Estimator::Histogram {
            bins: Self::DEFAULT_BINS,
            range: HistRange::Auto,
        }
    }

    pub fn kde() -> Self {
        Estimator::Kde {
            grid: Self::DEFAULT_GRID,
            bandwidth: Bandwidth::Scott,
        }
    }
}

fn auto_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    if span > 0.0 {
        (lo - 0.05 * span, hi + 0.05 * span)
    } else {
        (lo - 3.0, lo + 3.0)
    }
}

fn bin_of(v: f64, (lo, hi): (f64, f64), bins: usize) -> Option<usize> {
    if !(v >= lo && v <= hi) {
        return None;
    }
    let idx = ((v - lo) / (hi - lo) * bins as f64).floor() as usize;
    Some(idx.min(bins - 1))
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count).map(|i| lo + step * i as f64).collect()
}

/// 2-D histogram of paired samples.
pub fn histogram2d(
    xs: &[f64],
    ys: &[f64],
    bins: usize,
    range: HistRange,
    x_label: &str,
    y_label: &str,
) -> Result<QGrid> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    if xs.is_empty() {
        return Err(Error::TooFewSamples {
            what: "histogram",
            needed: 1,
            got: 0,
        });
    }
    if bins == 0 {
        return Err(Error::invalid("bins", "must be >= 1"));
    }
    let (rx, ry) = match range {
        HistRange::Auto => (auto_range(xs), auto_range(ys)),
        HistRange::Explicit { x, y } => {
            if !(x.1 > x.0 && y.1 > y.0) {
                return Err(Error::invalid("range", "explicit ranges need hi > lo"));
            }
            (x, y)
        }
    };
    let mut density = Array2::zeros((bins, bins));
    for (&x, &y) in xs.iter().zip(ys) {
        if let (Some(i), Some(j)) = (bin_of(x, rx, bins), bin_of(y, ry, bins)) {
            density[[i, j]] += 1.0;
        }
    }
    Ok(QGrid {
        density,
        x_edges: linspace(rx.0, rx.1, bins + 1),
        y_edges: linspace(ry.0, ry.1, bins + 1),
        kind: GridKind::Histogram,
        x_label: x_label.to_string(),
        y_label: y_label.to_string(),
        bandwidth: None,
    })
}

/// Scott's rule for two-dimensional data.
pub fn scott_bandwidth(n: usize, sigma: f64) -> f64 {
    sigma * (n as f64).powf(-1.0 / 6.0)
}

/// Product-Gaussian kernel density estimate of paired samples.
#[derive(Debug, Clone)]
pub struct GaussianKde {
    xs: Vec<f64>,
    ys: Vec<f64>,
    hx: f64,
    hy: f64,
}

impl GaussianKde {
    pub fn new(xs: &[f64], ys: &[f64], bandwidth: Bandwidth) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                expected: xs.len(),
                actual: ys.len(),
            });
        }
        if xs.len() < 3 {
            return Err(Error::TooFewSamples {
                what: "kernel density estimate",
                needed: 3,
                got: xs.len(),
            });
        }
        let sx = variance(xs).sqrt();
        let sy = variance(ys).sqrt();
        if !(sx > 0.0) {
            return Err(Error::ZeroVariance("the x axis".into()));
        }
        if !(sy > 0.0) {
            return Err(Error::ZeroVariance("the y axis".into()));
        }
        let (hx, hy) = match bandwidth {
            Bandwidth::Scott => (scott_bandwidth(xs.len(), sx), scott_bandwidth(xs.len(), sy)),
            Bandwidth::Explicit { hx, hy } => {
                if !(hx > 0.0 && hy > 0.0) {
                    return Err(Error::invalid("bandwidth", "must be positive"));
                }
                (hx, hy)
            }
        };
        Ok(Self {
            xs: xs.to_vec(),
            ys: ys.to_vec(),
            hx,
            hy,
        })
    }

    pub fn bandwidth(&self) -> (f64, f64) {
        (self.hx, self.hy)
    }

    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let norm = 1.0 / (self.xs.len() as f64 * 2.0 * std::f64::consts::PI * self.hx * self.hy);
        norm * sum(self.xs.iter().zip(&self.ys).map(|(xi, yi)| {
            let u = (x - xi) / self.hx;
            let v = (y - yi) / self.hy;
            (-0.5 * (u * u + v * v)).exp()
        }))
    }

    /// Density on a `count x count` grid spanning the data range plus three
    /// bandwidths per side, normalized to unit integral.
    pub fn grid(&self, count: usize, x_label: &str, y_label: &str) -> Result<QGrid> {
        if count < 2 {
            return Err(Error::invalid("grid", "needs at least 2 points per axis"));
        }
        let span = |v: &[f64], h: f64| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            linspace(lo - 3.0 * h, hi + 3.0 * h, count)
        };
        let gx = span(&self.xs, self.hx);
        let gy = span(&self.ys, self.hy);
        // Separable kernel: density = A . B^T with A[a, i] = K_x(gx_a - x_i).
        let kernel = |grid: &[f64], data: &[f64], h: f64| {
            Array2::from_shape_fn((grid.len(), data.len()), |(a, i)| {
                let u = (grid[a] - data[i]) / h;
                (-0.5 * u * u).exp()
            })
        };
        let a = kernel(&gx, &self.xs, self.hx);
        let b = kernel(&gy, &self.ys, self.hy);
        let mut density = a.dot(&b.t());
        let cell = (gx[1] - gx[0]) * (gy[1] - gy[0]);
        let mass = sum(density.iter().copied()) * cell;
        density.mapv_inplace(|d| d / mass);
        Ok(QGrid {
            density,
            x_edges: gx,
            y_edges: gy,
            kind: GridKind::Kde,
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            bandwidth: Some((self.hx, self.hy)),
        })
    }
}

/// Q-function over any two distinct quadrature axes.
pub fn joint_q(
    samples: &QuadratureSamples,
    a: AxisSpec,
    b: AxisSpec,
    estimator: Estimator,
) -> Result<QGrid> {
    if a == b {
        return Err(Error::IdenticalAxes(a.to_string()));
    }
    let xs = samples.axis(a)?.to_vec();
    let ys = samples.axis(b)?.to_vec();
    let (la, lb) = (a.to_string(), b.to_string());
    match estimator {
        Estimator::Histogram { bins, range } => histogram2d(&xs, &ys, bins, range, &la, &lb),
        Estimator::Kde { grid, bandwidth } => GaussianKde::new(&xs, &ys, bandwidth)?.grid(grid, &la, &lb),
    }
}

/// Histogram estimate of the single-mode Q-function `Q(x_p, y_p)`.
pub fn q_histogram(samples: &QuadratureSamples, p: usize, bins: usize, range: HistRange) -> Result<QGrid> {
    joint_q(samples, AxisSpec::x(p), AxisSpec::y(p), Estimator::Histogram { bins, range })
}

/// Kernel density estimate of the single-mode Q-function `Q(x_p, y_p)`.
pub fn q_kde(samples: &QuadratureSamples, p: usize, grid: usize, bandwidth: Bandwidth) -> Result<QGrid> {
    joint_q(samples, AxisSpec::x(p), AxisSpec::y(p), Estimator::Kde { grid, bandwidth })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_sample_fills_one_bin() {
        let g = histogram2d(&[0.4], &[-1.0], 30, HistRange::Auto, "x", "y").unwrap();
        assert_eq!(g.total_mass(), 1.0);
        assert_eq!(g.density.iter().filter(|&&v| v > 0.0).count(), 1);
        // Degenerate axes get +-3 padding.
        assert!((g.x_edges[0] + 2.6).abs() < 1e-12 && (g.x_edges[30] - 3.4).abs() < 1e-12);
        let (cx, cy) = g.argmax();
        // Bin width 0.2: the centre is within half a bin of the sample.
        assert!((cx - 0.4).abs() <= 0.1 + 1e-12 && (cy + 1.0).abs() <= 0.1 + 1e-12);
    }

    #[test]
    fn auto_range_keeps_every_sample() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let ys: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.11).cos()).collect();
        let g = histogram2d(&xs, &ys, 30, HistRange::Auto, "x", "y").unwrap();
        assert_eq!(g.density.dim(), (30, 30));
        assert_eq!(g.x_edges.len(), 31);
        assert_eq!(g.total_mass(), 1000.0);
    }

    #[test]
    fn explicit_range_drops_outliers() {
        let g = histogram2d(
            &[0.0, 5.0, 0.5],
            &[0.0, 0.0, 1.0],
            10,
            HistRange::Explicit { x: (-1.0, 1.0), y: (-1.0, 1.0) },
            "x",
            "y",
        )
        .unwrap();
        assert_eq!(g.total_mass(), 2.0);
    }

    #[test]
    fn scott_rule_value() {
        assert!((scott_bandwidth(4096, 1.0) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn kde_grid_integrates_to_one() {
        let xs: Vec<f64> = (0..200).map(|i| (i as f64 * 0.7).sin()).collect();
        let ys: Vec<f64> = (0..200).map(|i| (i as f64 * 1.3).cos() * 2.0).collect();
        let kde = GaussianKde::new(&xs, &ys, Bandwidth::Scott).unwrap();
        let g = kde.grid(128, "x", "y").unwrap();
        assert_eq!(g.density.dim(), (128, 128));
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        // The grid normalization barely moves the raw estimate.
        let (i, j) = g.argmax_index();
        let raw = kde.evaluate(g.x_edges[i], g.y_edges[j]);
        assert!((raw / g.density[[i, j]] - 1.0).abs() < 5e-3);
    }

    #[test]
    fn kde_rejects_degenerate_data() {
        assert!(matches!(
            GaussianKde::new(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0], Bandwidth::Scott),
            Err(Error::ZeroVariance(_))
        ));
        assert!(matches!(
            GaussianKde::new(&[1.0, 2.0], &[0.0, 1.0], Bandwidth::Scott),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn local_maxima_of_two_bumps() {
        let mut d = Array2::zeros((9, 9));
        d[[2, 2]] = 5.0;
        d[[6, 6]] = 4.0;
        d[[6, 7]] = 1.0;
        let g = QGrid {
            density: d,
            x_edges: linspace(0.0, 9.0, 10),
            y_edges: linspace(0.0, 9.0, 10),
            kind: GridKind::Histogram,
            x_label: "x".into(),
            y_label: "y".into(),
            bandwidth: None,
        };
        assert_eq!(g.local_maxima(0.1), vec![(2, 2), (6, 6)]);
        assert_eq!(g.local_maxima(0.9), vec![(2, 2)]);
    }
}
