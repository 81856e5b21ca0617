//! Curve containers shared by estimator reports, with CSV export.

/// A sampled curve `x ↦ y` with labeled columns.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Curve {
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(x_label: &str, y_label: &str) -> Self {
        Self {
            x_label: x_label.into(),
            y_label: y_label.into(),
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, x: f64, y: f64) {
        self.points.push((x, y));
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|(_, y)| *y)
    }

    pub fn first(&self) -> Option<f64> {
        self.points.first().map(|(_, y)| *y)
    }

    pub fn last(&self) -> Option<f64> {
        self.points.last().map(|(_, y)| *y)
    }

    /// Least-squares slope of `log y` against `log x`; `None` when any
    /// entry is non-positive or there are fewer than two points.
    pub fn loglog_slope(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let mut xs = Vec::with_capacity(self.points.len());
        let mut ys = Vec::with_capacity(self.points.len());
        for (x, y) in &self.points {
            if *x <= 0.0 || *y <= 0.0 {
                return None;
            }
            xs.push(x.ln());
            ys.push(y.ln());
        }
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
        let denom = n * sxx - sx * sx;
        if denom.abs() < 1e-300 {
            return None;
        }
        Some((n * sxy - sx * sy) / denom)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},{}\n", self.x_label, self.y_label);
        for (x, y) in &self.points {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}
