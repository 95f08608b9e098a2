//! Tabulated-function storage and cubic interpolation.
//!
//! Tables live on a tensor grid (t, x, y) where the t axis may be non-uniform
//! (rough drivers impose their own grid) and the x, y axes are uniform.
//! Interpolation is tensor-product cubic Hermite with three-point
//! finite-difference tangents (one-sided at the ends). This reproduces linear
//! data exactly, returns stored values exactly at grid nodes, and is C¹
//! across cells.

/// One grid axis. Points are strictly increasing.
#[derive(Debug, Clone)]
pub struct Axis {
    pub points: Vec<f64>,
}

impl Axis {
    pub fn new(points: Vec<f64>) -> Self {
        debug_assert!(points.len() >= 2);
        debug_assert!(points.windows(2).all(|w| w[1] > w[0]));
        Axis { points }
    }

    pub fn uniform(lo: f64, hi: f64, n: usize) -> Self {
        debug_assert!(n >= 2 && hi > lo);
        let pts = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        Axis::new(pts)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        *self.points.last().unwrap()
    }

    /// Cell index `i` with `points[i] <= v <= points[i+1]`, clamped to the
    /// valid range, plus the normalized coordinate in the cell.
    fn locate(&self, v: f64) -> (usize, f64) {
        let n = self.points.len();
        if v <= self.points[0] {
            return (0, 0.0);
        }
        if v >= self.points[n - 1] {
            return (n - 2, 1.0);
        }
        let mut i = match self
            .points
            .binary_search_by(|x| x.partial_cmp(&v).unwrap())
        {
            Ok(k) => k,
            Err(k) => k - 1,
        };
        if i > n - 2 {
            i = n - 2;
        }
        let s = (v - self.points[i]) / (self.points[i + 1] - self.points[i]);
        (i, s)
    }

    /// Hermite weights for the 4-point stencil `{i-1, i, i+1, i+2}` (indices
    /// clamped to the axis). Returns (stencil indices, weights).
    fn stencil(&self, v: f64) -> ([usize; 4], [f64; 4]) {
        let n = self.points.len();
        let (i, s) = self.locate(v);
        let im = i.saturating_sub(1);
        let ip = (i + 1).min(n - 1);
        let ipp = (i + 2).min(n - 1);
        let idx = [im, i, ip, ipp];

        let h = self.points[ip] - self.points[i];
        // Hermite basis on [0,1]
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);

        // tangents m_i, m_{i+1} from 3-point differences, expressed as
        // weights on the stencil values
        let mut w = [0.0f64; 4];
        w[1] += h00;
        w[2] += h01;

        // m_i: uses points im, i, ip (one-sided if im == i)
        if im == i {
            let d = self.points[ip] - self.points[i];
            w[1] += h10 * h * (-1.0 / d);
            w[2] += h10 * h * (1.0 / d);
        } else {
            let d = self.points[ip] - self.points[im];
            w[0] += h10 * h * (-1.0 / d);
            w[2] += h10 * h * (1.0 / d);
        }
        // m_{i+1}: uses points i, ip, ipp (one-sided if ipp == ip)
        if ipp == ip {
            let d = self.points[ip] - self.points[i];
            w[1] += h11 * h * (-1.0 / d);
            w[2] += h11 * h * (1.0 / d);
        } else {
            let d = self.points[ipp] - self.points[i];
            w[1] += h11 * h * (-1.0 / d);
            w[3] += h11 * h * (1.0 / d);
        }
        (idx, w)
    }
}

/// Shared interpolation stencil for a (t, x, y) query, reusable across any
/// number of tables on the same axes.
pub struct Stencil3 {
    idx_t: [usize; 4],
    w_t: [f64; 4],
    idx_x: [usize; 4],
    w_x: [f64; 4],
    idx_y: [usize; 4],
    w_y: [f64; 4],
}

impl Stencil3 {
    pub fn new(t_axis: &Axis, x_axis: &Axis, y_axis: &Axis, t: f64, x: f64, y: f64) -> Self {
        let (idx_t, w_t) = t_axis.stencil(t);
        let (idx_x, w_x) = x_axis.stencil(x);
        let (idx_y, w_y) = y_axis.stencil(y);
        Stencil3 {
            idx_t,
            w_t,
            idx_x,
            w_x,
            idx_y,
            w_y,
        }
    }

    pub fn apply(&self, table: &Table3) -> f64 {
        let mut acc = 0.0;
        for (a, &it) in self.idx_t.iter().enumerate() {
            if self.w_t[a] == 0.0 {
                continue;
            }
            let mut acc_x = 0.0;
            for (b, &ix) in self.idx_x.iter().enumerate() {
                if self.w_x[b] == 0.0 {
                    continue;
                }
                let mut acc_y = 0.0;
                let base = table.offset(it, ix);
                for (c, &iy) in self.idx_y.iter().enumerate() {
                    acc_y += self.w_y[c] * table.data[base + iy];
                }
                acc_x += self.w_x[b] * acc_y;
            }
            acc += self.w_t[a] * acc_x;
        }
        acc
    }
}

/// Dense 3-D table of values on (t, x, y) axes, row-major in y.
#[derive(Debug, Clone)]
pub struct Table3 {
    nt: usize,
    nx: usize,
    ny: usize,
    pub data: Vec<f64>,
}

impl Table3 {
    pub fn zeros(nt: usize, nx: usize, ny: usize) -> Self {
        Table3 {
            nt,
            nx,
            ny,
            data: vec![0.0; nt * nx * ny],
        }
    }

    #[inline]
    fn offset(&self, it: usize, ix: usize) -> usize {
        (it * self.nx + ix) * self.ny
    }

    #[inline]
    pub fn get(&self, it: usize, ix: usize, iy: usize) -> f64 {
        self.data[self.offset(it, ix) + iy]
    }

    #[inline]
    pub fn set(&mut self, it: usize, ix: usize, iy: usize, v: f64) {
        let o = self.offset(it, ix) + iy;
        self.data[o] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn slice_max_abs(&self, it: usize) -> f64 {
        let start = self.offset(it, 0);
        self.data[start..start + self.nx * self.ny]
            .iter()
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fill(t_axis: &Axis, x_axis: &Axis, y_axis: &Axis, f: impl Fn(f64, f64, f64) -> f64) -> Table3 {
        let mut tb = Table3::zeros(t_axis.len(), x_axis.len(), y_axis.len());
        for (it, &t) in t_axis.points.iter().enumerate() {
            for (ix, &x) in x_axis.points.iter().enumerate() {
                for (iy, &y) in y_axis.points.iter().enumerate() {
                    tb.set(it, ix, iy, f(t, x, y));
                }
            }
        }
        tb
    }

    #[test]
    fn exact_at_nodes() {
        let ta = Axis::new(vec![0.0, 0.1, 0.25, 0.6, 1.0]);
        let xa = Axis::uniform(-1.0, 1.0, 7);
        let ya = Axis::uniform(-2.0, 2.0, 9);
        let f = |t: f64, x: f64, y: f64| (t + 1.3).sin() * (x - 0.2) + y * y;
        let tb = fill(&ta, &xa, &ya, f);
        for &t in &ta.points {
            for &x in &xa.points {
                for &y in &ya.points {
                    let st = Stencil3::new(&ta, &xa, &ya, t, x, y);
                    assert_abs_diff_eq!(st.apply(&tb), f(t, x, y), epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn exact_on_trilinear_data() {
        let ta = Axis::new(vec![0.0, 0.3, 0.7, 1.0]);
        let xa = Axis::uniform(-1.0, 1.0, 5);
        let ya = Axis::uniform(-1.0, 1.0, 5);
        let f = |t: f64, x: f64, y: f64| 2.0 - t + 3.0 * x - 0.5 * y;
        let tb = fill(&ta, &xa, &ya, f);
        for &(t, x, y) in &[(0.11, 0.37, -0.91), (0.99, -0.33, 0.5), (0.5, 0.0, 0.0)] {
            let st = Stencil3::new(&ta, &xa, &ya, t, x, y);
            assert_abs_diff_eq!(st.apply(&tb), f(t, x, y), epsilon = 1e-12);
        }
    }

    #[test]
    fn smooth_function_interpolates_accurately() {
        let ta = Axis::uniform(0.0, 1.0, 51);
        let xa = Axis::uniform(-1.0, 1.0, 51);
        let ya = Axis::uniform(-1.0, 1.0, 51);
        let f = |t: f64, x: f64, y: f64| (x + y + t).sin();
        let tb = fill(&ta, &xa, &ya, f);
        let mut worst = 0.0f64;
        for i in 0..20 {
            let t = 0.025 + 0.05 * (i as f64 % 10.0) / 10.0;
            let x = -0.77 + 0.13 * i as f64 / 20.0;
            let y = 0.31 - 0.6 * i as f64 / 20.0;
            let st = Stencil3::new(&ta, &xa, &ya, t, x, y);
            worst = worst.max((st.apply(&tb) - f(t, x, y)).abs());
        }
        assert!(worst < 5e-6, "interp error {worst}");
    }

    #[test]
    fn clamps_outside_domain() {
        let ta = Axis::uniform(0.0, 1.0, 3);
        let xa = Axis::uniform(0.0, 1.0, 3);
        let ya = Axis::uniform(0.0, 1.0, 3);
        let tb = fill(&ta, &xa, &ya, |t, _, _| t);
        let st = Stencil3::new(&ta, &xa, &ya, 2.0, 0.5, 0.5);
        assert_abs_diff_eq!(st.apply(&tb), 1.0, epsilon = 1e-13);
    }
}
