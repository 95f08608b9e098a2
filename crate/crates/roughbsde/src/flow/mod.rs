//! The backward flow of diffeomorphisms and its derivative ensemble.
//!
//! For driving fields `H = (H_1, …, H_d)` and a signal ζ the flow solves
//!
//! ```text
//! φ(t, x, y) = y + ∫_t^T Σ_k H_k(x, φ(r, x, y)) dζ^k(r),
//! ```
//!
//! backward from the terminal normalization `φ(T, x, y) = y`. The solver
//! integrates φ jointly with the variational equations for
//! `∂xφ, ∂yφ, ∂xxφ, ∂xyφ, ∂yyφ, ∂yyyφ, ∂xyyφ, ∂xxyφ`, obtained by formally
//! differentiating the flow equation in x and y (hand-derived right-hand
//! sides in terms of H and its partials up to order three — no nested
//! differencing of the solver).
//!
//! Rough drivers are handled per grid interval through a short piecewise
//! linear sub-path in ζ-space that reproduces the interval's level-2
//! signature exactly: two half-increments around one small rectangle loop per
//! area component. Integrating the same extended ODE system along that
//! sub-path is a level-2 (Davie/Milstein-type) step, and reduces to the
//! smooth solver verbatim when all areas vanish.

pub mod fields;

use rayon::prelude::*;
use serde::Serialize;
use std::sync::Arc;

use crate::interp::{Axis, Stencil3, Table3};
use crate::rough_paths::{PiecewiseLinearPath, RoughPath2};
use crate::{Error, Result};
pub use fields::{
    ClosureField, ConstField, LinearYField, ProductXYField, SinXPlusYField, VectorField,
    VectorFieldFamily,
};

/// Number of jointly integrated quantities.
const NQ: usize = 9;

const Q_PHI: usize = 0;
const Q_DX: usize = 1;
const Q_DY: usize = 2;
const Q_DXX: usize = 3;
const Q_DXY: usize = 4;
const Q_DYY: usize = 5;
const Q_DYYY: usize = 6;
const Q_DXYY: usize = 7;
const Q_DXXY: usize = 8;

type State = [f64; NQ];

/// Grid and accuracy parameters for flow tabulation.
#[derive(Debug, Clone)]
pub struct FlowGridSpec {
    /// Time nodes for the smooth solver (the rough solver tabulates on the
    /// driver's own grid).
    pub nt: usize,
    pub nx: usize,
    pub ny: usize,
    pub x_window: (f64, f64),
    pub y_window: (f64, f64),
    /// Maximum time length of one RK4 substep.
    pub substep_t: f64,
    /// Maximum ζ-arclength of one RK4 substep.
    pub substep_arc: f64,
    /// Tolerance of the step/half-step self-consistency probe.
    pub consistency_tol: f64,
}

impl FlowGridSpec {
    pub fn new(x_window: (f64, f64), y_window: (f64, f64)) -> Self {
        FlowGridSpec {
            nt: 101,
            nx: 41,
            ny: 41,
            x_window,
            y_window,
            substep_t: 0.01,
            substep_arc: 0.02,
            consistency_tol: 1e-6,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nt < 2 || self.nx < 2 || self.ny < 2 {
            return Err(Error::Config {
                field: "grid".into(),
                message: "need at least 2 nodes per axis".into(),
            });
        }
        if self.x_window.1 <= self.x_window.0 || self.y_window.1 <= self.y_window.0 {
            return Err(Error::Config {
                field: "window".into(),
                message: "windows must have positive length".into(),
            });
        }
        Ok(())
    }
}

/// Values of φ and its derivative family at one point `(t, x, y)`.
#[derive(Debug, Clone, Copy)]
pub struct FlowJet {
    pub phi: f64,
    pub dx: f64,
    pub dy: f64,
    pub inv_dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
    pub dyyy: f64,
    pub dxyy: f64,
    pub dxxy: f64,
}

/// Tabulated backward flow on a `(t, x, y)` window, immutable after
/// construction and safe for concurrent evaluation.
pub struct FlowEnsemble {
    t_axis: Axis,
    x_axis: Axis,
    y_axis: Axis,
    tables: [Table3; NQ],
    start: f64,
    terminal: f64,
    l_bound: f64,
}

impl FlowEnsemble {
    pub fn start_time(&self) -> f64 {
        self.start
    }

    pub fn terminal_time(&self) -> f64 {
        self.terminal
    }

    pub fn t_nodes(&self) -> &[f64] {
        &self.t_axis.points
    }

    pub fn x_nodes(&self) -> &[f64] {
        &self.x_axis.points
    }

    pub fn y_nodes(&self) -> &[f64] {
        &self.y_axis.points
    }

    pub fn x_window(&self) -> (f64, f64) {
        (self.x_axis.lo(), self.x_axis.hi())
    }

    pub fn y_window(&self) -> (f64, f64) {
        (self.y_axis.lo(), self.y_axis.hi())
    }

    /// Uniform bound over the tabulated window of
    /// `{∂xφ, ∂yφ, 1/∂yφ, ∂xxφ, ∂xyφ, ∂yyφ, ∂yyyφ, ∂xyyφ, ∂xxyφ}`.
    pub fn l_bound(&self) -> f64 {
        self.l_bound
    }

    /// Full jet at `(t, x, y)`; coordinates are clamped to the window.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> FlowJet {
        let st = Stencil3::new(&self.t_axis, &self.x_axis, &self.y_axis, t, x, y);
        let dy = st.apply(&self.tables[Q_DY]);
        FlowJet {
            phi: st.apply(&self.tables[Q_PHI]),
            dx: st.apply(&self.tables[Q_DX]),
            dy,
            inv_dy: 1.0 / dy,
            dxx: st.apply(&self.tables[Q_DXX]),
            dxy: st.apply(&self.tables[Q_DXY]),
            dyy: st.apply(&self.tables[Q_DYY]),
            dyyy: st.apply(&self.tables[Q_DYYY]),
            dxyy: st.apply(&self.tables[Q_DXYY]),
            dxxy: st.apply(&self.tables[Q_DXXY]),
        }
    }

    pub fn eval_phi(&self, t: f64, x: f64, y: f64) -> f64 {
        let st = Stencil3::new(&self.t_axis, &self.x_axis, &self.y_axis, t, x, y);
        st.apply(&self.tables[Q_PHI])
    }

    fn eval_phi_dy(&self, t: f64, x: f64, y: f64) -> (f64, f64) {
        let st = Stencil3::new(&self.t_axis, &self.x_axis, &self.y_axis, t, x, y);
        (st.apply(&self.tables[Q_PHI]), st.apply(&self.tables[Q_DY]))
    }

    /// Value at a grid node, no interpolation.
    pub fn node_jet(&self, it: usize, ix: usize, iy: usize) -> FlowJet {
        let dy = self.tables[Q_DY].get(it, ix, iy);
        FlowJet {
            phi: self.tables[Q_PHI].get(it, ix, iy),
            dx: self.tables[Q_DX].get(it, ix, iy),
            dy,
            inv_dy: 1.0 / dy,
            dxx: self.tables[Q_DXX].get(it, ix, iy),
            dxy: self.tables[Q_DXY].get(it, ix, iy),
            dyy: self.tables[Q_DYY].get(it, ix, iy),
            dyyy: self.tables[Q_DYYY].get(it, ix, iy),
            dxyy: self.tables[Q_DXYY].get(it, ix, iy),
            dxxy: self.tables[Q_DXXY].get(it, ix, iy),
        }
    }

    /// y-inverse ψ(t, x, y): safeguarded Newton on `ỹ ↦ φ(t, x, ỹ)`.
    ///
    /// Residual target `|φ(t,x,ỹ) − y| < 1e-10 (1 + |y|)`.
    pub fn invert(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let (ylo, yhi) = self.y_window();
        let flo = self.eval_phi(t, x, ylo);
        let fhi = self.eval_phi(t, x, yhi);
        if y < flo.min(fhi) || y > flo.max(fhi) {
            return Err(Error::Domain(format!(
                "y = {y} outside the range [{:.6}, {:.6}] of φ(t={t}, x={x}, ·)",
                flo.min(fhi),
                flo.max(fhi)
            )));
        }
        let tol = 1e-10 * (1.0 + y.abs());
        let (mut lo, mut hi) = (ylo, yhi);
        let mut cand = y.clamp(ylo, yhi);
        for _ in 0..50 {
            let (f, df) = self.eval_phi_dy(t, x, cand);
            let r = f - y;
            if r.abs() < tol {
                return Ok(cand);
            }
            if r > 0.0 {
                hi = cand;
            } else {
                lo = cand;
            }
            let newton = cand - r / df;
            cand = if df > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(Error::Numeric(format!(
            "flow inversion did not converge at (t={t}, x={x}, y={y})"
        )))
    }

    /// Largest window `h` such that all derivative deviations
    /// `{|∂xφ|, |∂yφ−1|, |∂xxφ|, |∂xyφ|, |∂yyφ|, |∂yyyφ|, |∂xyyφ|, |∂xxyφ|}`
    /// stay below `eps` on `[T_e − h, T_e]`, floored at the last grid step.
    pub fn smallness_window(&self, eps: f64) -> SmallnessWindow {
        let nt = self.t_axis.len();
        let dev = |it: usize| -> f64 {
            let mut m = 0.0f64;
            for q in [Q_DX, Q_DXX, Q_DXY, Q_DYY, Q_DYYY, Q_DXYY, Q_DXXY] {
                m = m.max(self.tables[q].slice_max_abs(it));
            }
            let t = &self.tables[Q_DY];
            for ix in 0..self.x_axis.len() {
                for iy in 0..self.y_axis.len() {
                    m = m.max((t.get(it, ix, iy) - 1.0).abs());
                }
            }
            m
        };
        let mut first_ok = nt - 1; // terminal slice always passes (exact zeros)
        for it in (0..nt - 1).rev() {
            if dev(it) < eps {
                first_ok = it;
            } else {
                break;
            }
        }
        let (h, floored) = if first_ok == nt - 1 {
            (self.terminal - self.t_axis.points[nt - 2], true)
        } else {
            (self.terminal - self.t_axis.points[first_ok], false)
        };
        SmallnessWindow {
            h,
            l_bound: self.l_bound,
            floored,
        }
    }

    /// JSON-friendly dump of axes and tables, for debugging.
    pub fn table_dump(&self) -> FlowTableDump {
        let names = [
            "phi", "dx", "dy", "dxx", "dxy", "dyy", "dyyy", "dxyy", "dxxy",
        ];
        FlowTableDump {
            t: self.t_axis.points.clone(),
            x: self.x_axis.points.clone(),
            y: self.y_axis.points.clone(),
            tables: names
                .iter()
                .zip(&self.tables)
                .map(|(n, t)| (n.to_string(), t.data.clone()))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmallnessWindow {
    pub h: f64,
    pub l_bound: f64,
    /// Set when no interior grid node passed and `h` fell back to the last
    /// grid step.
    pub floored: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowTableDump {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub tables: std::collections::BTreeMap<String, Vec<f64>>,
}

/// Coefficient of `dζ^k` in the forward differential of the extended state.
///
/// The flow equation gives `dφ = −H_k dζ^k`; the remaining rows are its
/// formal x/y-derivatives with `a = ∂xφ, b = ∂yφ, c = ∂xxφ, e = ∂xyφ,
/// f = ∂yyφ, g₃ = ∂yyyφ, g₄ = ∂xyyφ, g₅ = ∂xxyφ`.
fn vector_field(fam: &VectorFieldFamily, k: usize, x: f64, s: &State, out: &mut State) {
    let hk = fam.component(k);
    let v = s[Q_PHI];
    let (a, b, c, e, f) = (s[Q_DX], s[Q_DY], s[Q_DXX], s[Q_DXY], s[Q_DYY]);
    let (g3, g4, g5) = (s[Q_DYYY], s[Q_DXYY], s[Q_DXXY]);

    let hx = hk.h_x(x, v);
    let hy = hk.h_y(x, v);
    let hxx = hk.h_xx(x, v);
    let hxy = hk.h_xy(x, v);
    let hyy = hk.h_yy(x, v);
    let hyyy = hk.h_yyy(x, v);
    let hxyy = hk.h_xyy(x, v);
    let hxxy = hk.h_xxy(x, v);

    out[Q_PHI] = -hk.h(x, v);
    out[Q_DX] = -(hx + hy * a);
    out[Q_DY] = -(hy * b);
    out[Q_DXX] = -(hxx + 2.0 * hxy * a + hyy * a * a + hy * c);
    out[Q_DXY] = -((hxy + hyy * a) * b + hy * e);
    out[Q_DYY] = -(hyy * b * b + hy * f);
    out[Q_DYYY] = -(hyyy * b * b * b + 3.0 * hyy * b * f + hy * g3);
    out[Q_DXYY] = -((hxyy + hyyy * a) * b * b + 2.0 * hyy * b * e + (hxy + hyy * a) * f + hy * g4);
    out[Q_DXXY] = -((hxxy + 2.0 * hxyy * a + hyyy * a * a + hyy * c) * b
        + 2.0 * (hxy + hyy * a) * e
        + hy * g5);
}

/// One linear piece of the driving signal: `(time share, ζ-increment)`.
#[derive(Debug, Clone)]
struct Piece {
    dt: f64,
    w: Vec<f64>,
}

/// RK4 along one linear ζ-piece, traversed backward in time
/// (the ζ-increment enters with a negative sign).
fn integrate_piece_backward(
    fam: &VectorFieldFamily,
    x: f64,
    state: &mut State,
    piece: &Piece,
    substep_t: f64,
    substep_arc: f64,
    refine: usize,
) {
    let arc = piece.w.iter().map(|v| v * v).sum::<f64>().sqrt();
    if arc == 0.0 {
        return;
    }
    let n_arc = (arc / substep_arc).ceil() as usize;
    let n_t = (piece.dt / substep_t).ceil() as usize;
    let n = n_arc.max(n_t).max(1) * refine;
    let d = fam.dim();

    // per-substep ζ-increment, reversed
    let step: Vec<f64> = piece.w.iter().map(|v| -v / n as f64).collect();

    let rhs = |s: &State| -> State {
        let mut total = [0.0; NQ];
        let mut tmp = [0.0; NQ];
        for k in 0..d {
            if step[k] == 0.0 {
                continue;
            }
            vector_field(fam, k, x, s, &mut tmp);
            for q in 0..NQ {
                total[q] += step[k] * tmp[q];
            }
        }
        total
    };

    for _ in 0..n {
        let k1 = rhs(state);
        let mut s2 = *state;
        for q in 0..NQ {
            s2[q] += 0.5 * k1[q];
        }
        let k2 = rhs(&s2);
        let mut s3 = *state;
        for q in 0..NQ {
            s3[q] += 0.5 * k2[q];
        }
        let k3 = rhs(&s3);
        let mut s4 = *state;
        for q in 0..NQ {
            s4[q] += k3[q];
        }
        let k4 = rhs(&s4);
        for q in 0..NQ {
            state[q] += (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]) / 6.0;
        }
    }
}

/// Supplies the linear ζ-pieces covering one tabulation interval, in forward
/// time order.
trait SegmentSource: Sync {
    fn pieces(&self, t_lo: f64, t_hi: f64) -> Vec<Piece>;
}

struct SmoothSource<'a> {
    path: &'a PiecewiseLinearPath,
}

impl SegmentSource for SmoothSource<'_> {
    fn pieces(&self, t_lo: f64, t_hi: f64) -> Vec<Piece> {
        let mut cuts = vec![t_lo];
        for &t in self.path.times() {
            if t > t_lo + 1e-14 && t < t_hi - 1e-14 {
                cuts.push(t);
            }
        }
        cuts.push(t_hi);
        cuts.windows(2)
            .map(|w| {
                let a = self.path.value_at(w[0]);
                let b = self.path.value_at(w[1]);
                Piece {
                    dt: w[1] - w[0],
                    w: a.iter().zip(&b).map(|(p, q)| q - p).collect(),
                }
            })
            .collect()
    }
}

struct RoughSource<'a> {
    rp: &'a RoughPath2,
}

impl SegmentSource for RoughSource<'_> {
    fn pieces(&self, t_lo: f64, t_hi: f64) -> Vec<Piece> {
        let i = self
            .rp
            .find_time(t_lo)
            .expect("interval start must be a rough grid point");
        let j = self
            .rp
            .find_time(t_hi)
            .expect("interval end must be a rough grid point");
        let (inc, area) = self.rp.signature(i, j);
        signature_pieces(t_hi - t_lo, &inc, &area)
    }
}

/// Piecewise-linear sub-path with the prescribed level-2 signature: half the
/// increment, one rectangle loop per area component (sides `±√|a| e_i`,
/// `±sgn(a)√|a| e_j`), then the second half of the increment. Cross terms of
/// the symmetric arrangement cancel, so the lift of the concatenation is
/// exactly `(inc, area)`.
fn signature_pieces(dt: f64, inc: &[f64], area: &[Vec<f64>]) -> Vec<Piece> {
    let d = inc.len();
    let mut segs: Vec<Vec<f64>> = Vec::new();
    let half: Vec<f64> = inc.iter().map(|v| 0.5 * v).collect();
    segs.push(half.clone());
    for i in 0..d {
        for j in i + 1..d {
            let a = area[i][j];
            if a != 0.0 {
                let p = a.abs().sqrt();
                let q = a.signum() * p;
                let mut s1 = vec![0.0; d];
                s1[i] = p;
                let mut s2 = vec![0.0; d];
                s2[j] = q;
                let s3: Vec<f64> = s1.iter().map(|v| -v).collect();
                let s4: Vec<f64> = s2.iter().map(|v| -v).collect();
                segs.extend([s1, s2, s3, s4]);
            }
        }
    }
    segs.push(half);
    let share = dt / segs.len() as f64;
    segs.into_iter().map(|w| Piece { dt: share, w }).collect()
}

fn tabulate(
    fam: &VectorFieldFamily,
    source: &dyn SegmentSource,
    t_nodes: &[f64],
    grid: &FlowGridSpec,
) -> Result<FlowEnsemble> {
    grid.validate()?;
    let t_axis = Axis::new(t_nodes.to_vec());
    let x_axis = Axis::uniform(grid.x_window.0, grid.x_window.1, grid.nx);
    let y_axis = Axis::uniform(grid.y_window.0, grid.y_window.1, grid.ny);
    let nt = t_axis.len();

    // pieces per tabulation interval, computed once
    let interval_pieces: Vec<Vec<Piece>> = (0..nt - 1)
        .map(|it| source.pieces(t_nodes[it], t_nodes[it + 1]))
        .collect();

    // step/half-step self-consistency probe at window corners and center
    let probes = [
        (x_axis.lo(), y_axis.lo()),
        (x_axis.lo(), y_axis.hi()),
        (x_axis.hi(), y_axis.lo()),
        (x_axis.hi(), y_axis.hi()),
        (
            0.5 * (x_axis.lo() + x_axis.hi()),
            0.5 * (y_axis.lo() + y_axis.hi()),
        ),
    ];
    for &(x, y) in &probes {
        let mut coarse: State = terminal_state(y);
        let mut fine: State = terminal_state(y);
        for it in (0..nt - 1).rev() {
            for piece in interval_pieces[it].iter().rev() {
                integrate_piece_backward(fam, x, &mut coarse, piece, grid.substep_t, grid.substep_arc, 1);
                integrate_piece_backward(fam, x, &mut fine, piece, grid.substep_t, grid.substep_arc, 2);
            }
        }
        let diff = coarse
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if diff > grid.consistency_tol {
            return Err(Error::Accuracy(format!(
                "step / half-step disagreement {diff:.3e} exceeds {:.3e} at probe (x={x}, y={y}); refine substep_t / substep_arc",
                grid.consistency_tol
            )));
        }
    }

    // column-parallel tabulation; results independent of scheduling
    let ny = y_axis.len();
    let columns: Vec<Vec<State>> = x_axis
        .points
        .par_iter()
        .map(|&x| {
            let mut out = vec![[0.0; NQ]; nt * ny];
            for (iy, &y) in y_axis.points.iter().enumerate() {
                let mut state = terminal_state(y);
                out[(nt - 1) * ny + iy] = state;
                for it in (0..nt - 1).rev() {
                    for piece in interval_pieces[it].iter().rev() {
                        integrate_piece_backward(
                            fam,
                            x,
                            &mut state,
                            piece,
                            grid.substep_t,
                            grid.substep_arc,
                            1,
                        );
                    }
                    out[it * ny + iy] = state;
                }
            }
            out
        })
        .collect();

    let mut tables: [Table3; NQ] = std::array::from_fn(|_| Table3::zeros(nt, grid.nx, ny));
    for (ix, col) in columns.iter().enumerate() {
        for it in 0..nt {
            for iy in 0..ny {
                let s = col[it * ny + iy];
                for (q, table) in tables.iter_mut().enumerate() {
                    table.set(it, ix, iy, s[q]);
                }
            }
        }
    }

    let min_dy = tables[Q_DY].min();
    if min_dy <= 0.0 {
        return Err(Error::Numeric(format!(
            "∂yφ reached {min_dy:.3e}; the flow is not a diffeomorphism on this window"
        )));
    }
    let mut l_bound = 1.0 / min_dy;
    for q in 1..NQ {
        l_bound = l_bound.max(tables[q].max_abs());
    }

    Ok(FlowEnsemble {
        start: t_nodes[0],
        terminal: *t_nodes.last().unwrap(),
        t_axis,
        x_axis,
        y_axis,
        tables,
        l_bound,
    })
}

fn terminal_state(y: f64) -> State {
    let mut s = [0.0; NQ];
    s[Q_PHI] = y;
    s[Q_DY] = 1.0;
    s
}

/// Solves the backward flow for a piecewise-linear driver on
/// `window = [t₀, T_e]` and tabulates the derivative ensemble.
pub fn solve_flow_smooth(
    fam: &VectorFieldFamily,
    zeta: &PiecewiseLinearPath,
    window: (f64, f64),
    grid: &FlowGridSpec,
) -> Result<FlowEnsemble> {
    let (t0, te) = window;
    if !(t0 < te) {
        return Err(Error::Config {
            field: "window".into(),
            message: format!("empty window [{t0}, {te}]"),
        });
    }
    if t0 < -1e-12 || te > zeta.horizon() + 1e-9 * (1.0 + zeta.horizon()) {
        return Err(Error::Domain(format!(
            "window [{t0}, {te}] not covered by the driver on [0, {}]",
            zeta.horizon()
        )));
    }
    if zeta.dim() != fam.dim() {
        return Err(Error::Dimension(format!(
            "driver dimension {} vs field family dimension {}",
            zeta.dim(),
            fam.dim()
        )));
    }
    let t_nodes: Vec<f64> = (0..grid.nt)
        .map(|i| t0 + (te - t0) * i as f64 / (grid.nt - 1) as f64)
        .collect();
    let source = SmoothSource { path: zeta };
    tabulate(fam, &source, &t_nodes, grid)
}

/// Solves the backward flow as a rough differential equation on
/// `window = [t₀, T_e]`; both window endpoints must be grid points of the
/// driver. Tabulates on the driver's grid restricted to the window.
pub fn solve_flow_rough(
    fam: &VectorFieldFamily,
    rp: &RoughPath2,
    window: (f64, f64),
    grid: &FlowGridSpec,
) -> Result<FlowEnsemble> {
    let (t0, te) = window;
    if rp.dim() != fam.dim() {
        return Err(Error::Dimension(format!(
            "driver dimension {} vs field family dimension {}",
            rp.dim(),
            fam.dim()
        )));
    }
    let i0 = rp.find_time(t0).ok_or_else(|| {
        Error::Domain(format!(
            "window start {t0} is not a grid point of the rough driver"
        ))
    })?;
    let i1 = rp.find_time(te).ok_or_else(|| {
        Error::Domain(format!(
            "window end {te} is not a grid point of the rough driver"
        ))
    })?;
    if i0 >= i1 {
        return Err(Error::Config {
            field: "window".into(),
            message: format!("empty window [{t0}, {te}]"),
        });
    }
    let t_nodes = rp.times()[i0..=i1].to_vec();
    let source = RoughSource { rp };
    tabulate(fam, &source, &t_nodes, grid)
}

/// y-inverse of the flow at one point; see [`FlowEnsemble::invert`].
pub fn invert_flow(flow: &FlowEnsemble, t: f64, x: f64, y: f64) -> Result<f64> {
    flow.invert(t, x, y)
}

/// See [`FlowEnsemble::smallness_window`].
pub fn flow_smallness_window(flow: &FlowEnsemble, eps: f64) -> SmallnessWindow {
    flow.smallness_window(eps)
}

/// Maximum absolute residuals of the five inverse-function identities
/// relating ψ = φ⁻¹ to the φ-derivative ensemble, with ψ-derivatives taken
/// by central finite differences of [`FlowEnsemble::invert`]:
///
/// ```text
/// ∂xψ  = −∂xφ/∂yφ
/// ∂yψ  = 1/∂yφ
/// ∂yyψ = −∂yyφ/(∂yφ)³
/// ∂xyψ = ∂yyφ ∂xφ/(∂yφ)³ − ∂xyφ/(∂yφ)²
/// ∂xxψ = −∂yyφ (∂xφ)²/(∂yφ)³ + 2 ∂xyφ ∂xφ/(∂yφ)² − ∂xxφ/∂yφ
/// ```
///
/// φ and its derivatives are evaluated at `(t, x, ψ(t, x, y))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResiduals {
    pub dx_psi: f64,
    pub dy_psi: f64,
    pub dyy_psi: f64,
    pub dxy_psi: f64,
    pub dxx_psi: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.dx_psi
            .max(self.dy_psi)
            .max(self.dyy_psi)
            .max(self.dxy_psi)
            .max(self.dxx_psi)
    }
}

/// Samples are `(t, x, ỹ)` triples; each identity is probed at
/// `y = φ(t, x, ỹ)` so that every finite-difference stencil point stays
/// inside the range of the diffeomorphism.
pub fn derivative_identity_residuals(
    flow: &FlowEnsemble,
    samples: &[(f64, f64, f64)],
    fd_step: f64,
) -> Result<IdentityResiduals> {
    let mut r = IdentityResiduals {
        dx_psi: 0.0,
        dy_psi: 0.0,
        dyy_psi: 0.0,
        dxy_psi: 0.0,
        dxx_psi: 0.0,
    };
    let d = fd_step;
    for &(t, x, ytilde) in samples {
        let y = flow.eval_phi(t, x, ytilde);
        let psi = |xx: f64, yy: f64| flow.invert(t, xx, yy);
        let p00 = psi(x, y)?;
        let ppx = psi(x + d, y)?;
        let pmx = psi(x - d, y)?;
        let ppy = psi(x, y + d)?;
        let pmy = psi(x, y - d)?;
        let ppp = psi(x + d, y + d)?;
        let ppm = psi(x + d, y - d)?;
        let pmp = psi(x - d, y + d)?;
        let pmm = psi(x - d, y - d)?;

        let psi_x = (ppx - pmx) / (2.0 * d);
        let psi_y = (ppy - pmy) / (2.0 * d);
        let psi_yy = (ppy - 2.0 * p00 + pmy) / (d * d);
        let psi_xy = (ppp - ppm - pmp + pmm) / (4.0 * d * d);
        let psi_xx = (ppx - 2.0 * p00 + pmx) / (d * d);

        let j = flow.eval(t, x, p00);
        let dy3 = j.dy * j.dy * j.dy;
        r.dx_psi = r.dx_psi.max((psi_x - (-j.dx / j.dy)).abs());
        r.dy_psi = r.dy_psi.max((psi_y - 1.0 / j.dy).abs());
        r.dyy_psi = r.dyy_psi.max((psi_yy - (-j.dyy / dy3)).abs());
        r.dxy_psi = r
            .dxy_psi
            .max((psi_xy - (j.dyy * j.dx / dy3 - j.dxy / (j.dy * j.dy))).abs());
        let xx_expected =
            -j.dyy * j.dx * j.dx / dy3 + 2.0 * j.dxy * j.dx / (j.dy * j.dy) - j.dxx / j.dy;
        r.dxx_psi = r.dxx_psi.max((psi_xx - xx_expected).abs());
    }
    Ok(r)
}

/// Builds the family for a single scalar field.
pub fn single_field(field: impl VectorField + 'static, c_h: f64) -> Result<VectorFieldFamily> {
    VectorFieldFamily::new(vec![Arc::new(field)], c_h)
}
