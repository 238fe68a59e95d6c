use crate::error::{Error, Result};
use crate::numeric::{sum, CompensatedSum};
use crate::sim::{DetectorConfig, Frame, FrameSet};

/// Rectangular region of interest in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Roi {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Roi {
    pub fn new(x0: usize, y0: usize, width: usize, height: usize) -> Self {
        Self {
            x0,
            y0,
            width,
            height,
        }
    }

    pub fn full(detector: &DetectorConfig) -> Self {
        Self::new(0, 0, detector.n_pixels_x, detector.n_rows)
    }

    /// `width x height` region centered in a `cols x rows` frame.
    pub fn centered(width: usize, height: usize, cols: usize, rows: usize) -> Self {
        Self::new(
            cols.saturating_sub(width) / 2,
            rows.saturating_sub(height) / 2,
            width,
            height,
        )
    }

    pub fn fits(&self, cols: usize, rows: usize) -> bool {
        self.width > 0
            && self.height > 0
            && self.x0.checked_add(self.width).is_some_and(|e| e <= cols)
            && self.y0.checked_add(self.height).is_some_and(|e| e <= rows)
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

/// Column sums of one frame's ROI, bias removed.
///
/// With readout noise a column can dip below zero after the bias is removed;
/// values are not clipped so noise statistics stay unbiased.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrace {
    pub values: Vec<f64>,
    pub shot_index: u32,
    /// Total counts in the ROI, `sum(values)`.
    pub n_t: f64,
    /// Saturated pixels inside the ROI.
    pub saturated: usize,
    /// Pixels summed into the trace.
    pub n_pixels: usize,
}

impl ReducedTrace {
    /// Trace from already-reduced column values (no saturation information).
    pub fn from_values(values: Vec<f64>, shot_index: u32) -> Self {
        let n_t = sum(values.iter().copied());
        let n_pixels = values.len();
        Self {
            values,
            shot_index,
            n_t,
            saturated: 0,
            n_pixels,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn saturation_fraction(&self) -> f64 {
        if self.n_pixels == 0 {
            0.0
        } else {
            self.saturated as f64 / self.n_pixels as f64
        }
    }
}

pub fn reduce_roi(frame: &Frame, roi: &Roi, detector: &DetectorConfig) -> Result<ReducedTrace> {
    if !roi.fits(frame.n_cols, frame.n_rows) {
        return Err(Error::RoiOutOfBounds {
            x0: roi.x0,
            y0: roi.y0,
            width: roi.width,
            height: roi.height,
            cols: frame.n_cols,
            rows: frame.n_rows,
        });
    }
    let clamp = detector.clamp_level();
    let bias = detector.adc_offset as f64 * roi.height as f64;
    let mut columns = vec![0u64; roi.width];
    let mut saturated = 0;
    for r in roi.y0..roi.y0 + roi.height {
        let row = &frame.row(r)[roi.x0..roi.x0 + roi.width];
        for (acc, &c) in columns.iter_mut().zip(row) {
            *acc += c as u64;
            if c as u32 >= clamp {
                saturated += 1;
            }
        }
    }
    let values: Vec<f64> = columns.iter().map(|&c| c as f64 - bias).collect();
    let mut total = CompensatedSum::new();
    for v in &values {
        total.add(*v);
    }
    Ok(ReducedTrace {
        values,
        shot_index: frame.shot_index,
        n_t: total.value(),
        saturated,
        n_pixels: roi.area(),
    })
}

pub fn reduce_frameset(set: &FrameSet, roi: &Roi) -> Result<Vec<ReducedTrace>> {
    set.frames
        .iter()
        .map(|f| reduce_roi(f, roi, &set.detector))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::FrameKind;

    fn frame(rows: usize, cols: usize, f: impl Fn(usize, usize) -> u16) -> Frame {
        let counts = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
        Frame {
            counts,
            n_rows: rows,
            n_cols: cols,
            shot_index: 4,
            kind: FrameKind::Signal,
            saturated: 0,
        }
    }

    fn detector(cols: usize, rows: usize, offset: u32) -> DetectorConfig {
        let mut d = DetectorConfig::ideal(cols, rows, 20e-6);
        d.adc_offset = offset;
        d.full_well = 1000;
        d
    }

    #[test]
    fn single_row_roi_is_that_row_minus_bias() {
        let f = frame(3, 6, |r, c| (100 + 10 * r + c) as u16);
        let det = detector(6, 3, 100);
        let t = reduce_roi(&f, &Roi::new(1, 2, 4, 1), &det).unwrap();
        assert_eq!(t.values, vec![21.0, 22.0, 23.0, 24.0]);
        assert_eq!(t.n_t, 90.0);
        assert_eq!(t.shot_index, 4);
    }

    #[test]
    fn ten_rows_of_ones() {
        let f = frame(10, 600, |_, _| 1);
        let t = reduce_roi(&f, &Roi::new(0, 0, 600, 10), &detector(600, 10, 0)).unwrap();
        assert!(t.values.iter().all(|&v| v == 10.0));
        assert_eq!(t.n_t, 6000.0);
    }

    #[test]
    fn reduction_is_linear_without_bias() {
        let a = frame(4, 8, |r, c| (r * 3 + c) as u16);
        let b = frame(4, 8, |r, c| (r * c % 5) as u16);
        let sum = frame(4, 8, |r, c| a.get(r, c) + b.get(r, c));
        let det = detector(8, 4, 0);
        let roi = Roi::new(1, 1, 6, 3);
        let ta = reduce_roi(&a, &roi, &det).unwrap();
        let tb = reduce_roi(&b, &roi, &det).unwrap();
        let ts = reduce_roi(&sum, &roi, &det).unwrap();
        for i in 0..6 {
            assert_eq!(ts.values[i], ta.values[i] + tb.values[i]);
        }
        assert_eq!(ts.n_t, ta.n_t + tb.n_t);
    }

    #[test]
    fn counts_saturated_pixels_in_roi() {
        let f = frame(2, 4, |r, c| if r == 0 && c < 3 { 1100 } else { 5 });
        let det = detector(4, 2, 100);
        let t = reduce_roi(&f, &Roi::new(1, 0, 3, 2), &det).unwrap();
        assert_eq!(t.saturated, 2);
        assert!((t.saturation_fraction() - 2.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_bounds() {
        let f = frame(10, 600, |_, _| 1);
        let det = detector(600, 10, 0);
        assert!(matches!(
            reduce_roi(&f, &Roi::new(10, 0, 600, 10), &det),
            Err(Error::RoiOutOfBounds { .. })
        ));
        assert!(reduce_roi(&f, &Roi::new(0, 5, 600, 6), &det).is_err());
        assert_eq!(Roi::centered(600, 10, 1340, 400), Roi::new(370, 195, 600, 10));
    }
}
