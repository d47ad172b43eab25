//! Benchmark potentials on S^1 with known minima, saddles, barrier heights
//! and Kramers prefactors, plus one-dimensional InfoNCE slice landscapes.
//! These are the ground truth the annealing predictions are tested against.
//!
//! Analytic families are scanned with the derivative pipeline (dense grid +
//! bisection on U', classification by the sign of U''). InfoNCE slices are
//! piecewise smooth - the argmax inside U0 introduces kinks and flat
//! plateaus - so their extrema come from a value-based grid scan with
//! plateau merging, refined through U' only where the slice is smooth.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{AnnealSystem, StepFail, STEP_OVERFLOW_LIMIT};
use crate::error::{Error, Result};
use crate::potential::{PairSet, SimilarityKind};

/// Dense scan resolution for critical-point detection.
pub const CRIT_GRID: usize = 1 << 16;
/// Roots are refined until the bracket is narrower than this.
const ROOT_TOL: f64 = 1e-13;
/// |U''| below this at a critical point counts as degenerate.
const DEGENERATE_TOL: f64 = 1e-8;
/// Angles closer than this to a saddle are labelled `Saddle`.
const SADDLE_BAND: f64 = 1e-10;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Wraps an angle into [-pi, pi).
pub fn wrap_angle(theta: f64) -> f64 {
    (theta + std::f64::consts::PI).rem_euclid(TWO_PI) - std::f64::consts::PI
}

fn circular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TWO_PI);
    d.min(TWO_PI - d)
}

/// A 1-dim InfoNCE slice: one embedding moves on S^1 while the rest stay
/// frozen; the value at theta is the limiting potential of the full
/// configuration.
#[derive(Debug, Clone)]
pub struct MicroSlice {
    base_angles: Vec<f64>,
    kind: SimilarityKind,
    pairs: PairSet,
    anchor_slice: usize,
}

#[derive(Debug, Clone)]
pub enum LandscapeFamily {
    /// U(theta) = cos(2 theta): wells at +-pi/2 (U = -1), saddles at 0 and
    /// pi (U = +1), dE = 2, c* = 1/2, Kramers prefactor 2/pi.
    SymmetricDoubleWell,
    /// U(theta) = cos(2 theta) + gamma sin(theta), gamma in (0, 0.5): the
    /// tilt is nonzero at the wells, so +pi/2 becomes the shallow well.
    TiltedDoubleWell { gamma: f64 },
    InfoNceMicro(MicroSlice),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Saddle,
}

#[derive(Debug, Clone, Copy)]
pub struct CriticalPoint {
    pub angle: f64,
    pub value: f64,
    /// U'' at the point; branch-local (one-sided) at slice kinks.
    pub curvature: f64,
    pub kind: CriticalKind,
}

/// Basin membership of an angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasinLabel {
    /// Index into the minima list (sorted by angle).
    Basin(usize),
    Saddle,
}

/// Escape barriers of every basin plus the critical annealing constants.
#[derive(Debug, Clone)]
pub struct BarrierReport {
    /// dE per basin: min over that basin's adjacent saddles of
    /// (U_saddle - U_min), indexed like the minima.
    pub per_basin: Vec<f64>,
    /// Largest escape barrier among suboptimal basins. When every minimum is
    /// globally optimal (tied ground states) this is the largest barrier
    /// between the tied basins; `None` for single-basin landscapes.
    pub delta_e_max: Option<f64>,
    /// 1 / dE_max when defined.
    pub c_star: Option<f64>,
    /// Index of the global minimum (lowest value; lowest angle on ties).
    pub global_basin: usize,
}

#[derive(Debug, Clone)]
pub struct LandscapeSpec {
    family: LandscapeFamily,
    minima: Vec<CriticalPoint>,
    saddles: Vec<CriticalPoint>,
    barriers: BarrierReport,
}

impl LandscapeSpec {
    pub fn symmetric_double_well() -> Self {
        Self::from_family(LandscapeFamily::SymmetricDoubleWell)
            .expect("the symmetric double well has nondegenerate critical points")
    }

    pub fn tilted_double_well(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 0.5) {
            return Err(Error::InvalidInstance(format!(
                "tilt gamma must lie in (0, 0.5), got {gamma}"
            )));
        }
        Self::from_family(LandscapeFamily::TiltedDoubleWell { gamma })
    }

    /// Freezes every embedding except `anchor_slice` at `base_angles` and
    /// scans the resulting U0 slice. Needs n >= 3 so the slice still has a
    /// nontrivial candidate structure.
    pub fn infonce_micro(
        base_angles: Vec<f64>,
        kind: SimilarityKind,
        pairs: PairSet,
        anchor_slice: usize,
    ) -> Result<Self> {
        let n = base_angles.len();
        if n < 3 {
            return Err(Error::TooFewPoints { n });
        }
        if pairs.n() != n {
            return Err(Error::InvalidInstance(format!(
                "pair set indexes {} points but the slice has {n}",
                pairs.n()
            )));
        }
        if anchor_slice >= n {
            return Err(Error::InvalidInstance(format!(
                "anchor slice {anchor_slice} out of range for {n} points"
            )));
        }
        Self::from_family(LandscapeFamily::InfoNceMicro(MicroSlice {
            base_angles,
            kind,
            pairs,
            anchor_slice,
        }))
    }

    fn from_family(family: LandscapeFamily) -> Result<Self> {
        let criticals = match &family {
            LandscapeFamily::InfoNceMicro(slice) => scan_value_extrema(slice)?,
            _ => scan_smooth(&family)?,
        };
        let mut minima = Vec::new();
        let mut saddles = Vec::new();
        for c in criticals {
            match c.kind {
                CriticalKind::Minimum => minima.push(c),
                CriticalKind::Saddle => saddles.push(c),
            }
        }
        if minima.is_empty() || minima.len() != saddles.len() {
            return Err(Error::InvalidInstance(format!(
                "critical structure does not alternate: {} minima, {} saddles",
                minima.len(),
                saddles.len()
            )));
        }
        let barriers = assemble_barriers(&minima, &saddles);
        Ok(Self {
            family,
            minima,
            saddles,
            barriers,
        })
    }

    pub fn family(&self) -> &LandscapeFamily {
        &self.family
    }

    /// Closed-form (U, U', U'') at theta; 2 pi periodic. For InfoNCE slices
    /// the derivatives follow the locally active argmax branch (lowest index
    /// on ties), so they are one-sided at kinks.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        match &self.family {
            LandscapeFamily::SymmetricDoubleWell => {
                let (s, c) = (2.0 * theta).sin_cos();
                (c, -2.0 * s, -4.0 * c)
            }
            LandscapeFamily::TiltedDoubleWell { gamma } => {
                let (s2, c2) = (2.0 * theta).sin_cos();
                let (s1, c1) = theta.sin_cos();
                (
                    c2 + gamma * s1,
                    -2.0 * s2 + gamma * c1,
                    -4.0 * c2 - gamma * s1,
                )
            }
            LandscapeFamily::InfoNceMicro(slice) => micro_eval(slice, theta),
        }
    }

    pub fn value(&self, theta: f64) -> f64 {
        self.eval(theta).0
    }

    /// U'(theta); the hot path of the circle integrator.
    #[inline]
    pub fn grad(&self, theta: f64) -> f64 {
        match &self.family {
            LandscapeFamily::SymmetricDoubleWell => -2.0 * (2.0 * theta).sin(),
            LandscapeFamily::TiltedDoubleWell { gamma } => {
                -2.0 * (2.0 * theta).sin() + gamma * theta.cos()
            }
            LandscapeFamily::InfoNceMicro(slice) => micro_eval(slice, theta).1,
        }
    }

    /// All critical points sorted by angle, minima and saddles alternating.
    pub fn critical_points(&self) -> Vec<CriticalPoint> {
        let mut all: Vec<CriticalPoint> = self
            .minima
            .iter()
            .chain(self.saddles.iter())
            .copied()
            .collect();
        all.sort_by(|a, b| a.angle.total_cmp(&b.angle));
        all
    }

    /// Minima sorted by angle; indices here are the basin labels.
    pub fn minima(&self) -> &[CriticalPoint] {
        &self.minima
    }

    pub fn saddles(&self) -> &[CriticalPoint] {
        &self.saddles
    }

    pub fn barrier_heights(&self) -> &BarrierReport {
        &self.barriers
    }

    pub fn global_basin(&self) -> usize {
        self.barriers.global_basin
    }

    pub fn minimum_angle(&self, basin: usize) -> f64 {
        self.minima[basin].angle
    }

    /// Eyring-Kramers prefactor of the basin's escape channel:
    /// sqrt(U''(min) |U''(saddle)|) / 2 pi, with the saddle realized by the
    /// basin's lowest adjacent barrier.
    pub fn kramers_prefactor(&self, basin: usize) -> Result<f64> {
        let min = self.minima.get(basin).ok_or_else(|| {
            Error::InvalidInstance(format!("basin {basin} out of range"))
        })?;
        let (left, right) = self.adjacent_saddles(basin);
        let saddle = if left.value <= right.value { left } else { right };
        if min.curvature.abs() < DEGENERATE_TOL {
            return Err(Error::DegenerateCritical {
                angle: min.angle,
                curvature: min.curvature,
            });
        }
        if saddle.curvature.abs() < DEGENERATE_TOL {
            return Err(Error::DegenerateCritical {
                angle: saddle.angle,
                curvature: saddle.curvature,
            });
        }
        Ok((min.curvature * saddle.curvature.abs()).sqrt() / TWO_PI)
    }

    fn adjacent_saddles(&self, basin: usize) -> (&CriticalPoint, &CriticalPoint) {
        let m = self.minima[basin].angle;
        // Saddles sorted by angle; the basin sits between the last saddle
        // below its minimum (wrapping) and the first above.
        let mut below = None;
        let mut above = None;
        for s in &self.saddles {
            if s.angle < m {
                below = Some(s);
            } else if above.is_none() {
                above = Some(s);
            }
        }
        let left = below.unwrap_or_else(|| self.saddles.last().unwrap());
        let right = above.unwrap_or_else(|| self.saddles.first().unwrap());
        (left, right)
    }

    /// Basin containing theta: the arc between adjacent saddles, labelled by
    /// the minimum it contains. Angles within 1e-10 of a saddle map to
    /// `Saddle`.
    pub fn basin_of(&self, theta: f64) -> BasinLabel {
        let theta = wrap_angle(theta);
        for s in &self.saddles {
            if circular_distance(theta, s.angle) <= SADDLE_BAND {
                return BasinLabel::Saddle;
            }
        }
        BasinLabel::Basin(self.basin_index(theta))
    }

    fn basin_index(&self, theta: f64) -> usize {
        // Arc p spans [saddle_p, saddle_{p+1}) with wrap-around; each arc
        // holds exactly one minimum by alternation.
        let arcs = self.saddles.len();
        let mut arc = arcs; // wrap arc until proven otherwise
        for (p, s) in self.saddles.iter().enumerate() {
            if theta < s.angle {
                arc = p;
                break;
            }
        }
        // Arc p (counting from the wrap arc as index 0) is bounded below by
        // saddles[p - 1]; find the minimum inside it.
        let lo = if arc == 0 || arc == arcs {
            self.saddles[arcs - 1].angle
        } else {
            self.saddles[arc - 1].angle
        };
        let hi = if arc == arcs || arc == 0 {
            self.saddles[0].angle
        } else {
            self.saddles[arc].angle
        };
        for (b, m) in self.minima.iter().enumerate() {
            let inside = if lo < hi {
                m.angle > lo && m.angle < hi
            } else {
                m.angle > lo || m.angle < hi
            };
            if inside {
                return b;
            }
        }
        unreachable!("alternating critical structure always yields a basin");
    }
}

fn assemble_barriers(minima: &[CriticalPoint], saddles: &[CriticalPoint]) -> BarrierReport {
    let mut global = 0;
    for (b, m) in minima.iter().enumerate() {
        if m.value < minima[global].value {
            global = b;
        }
    }
    let n = minima.len();
    let mut per_basin = Vec::with_capacity(n);
    for m in minima {
        // Adjacent saddles by angle order with wrap-around.
        let mut below: Option<&CriticalPoint> = None;
        let mut above: Option<&CriticalPoint> = None;
        for s in saddles {
            if s.angle < m.angle {
                below = Some(s);
            } else if above.is_none() {
                above = Some(s);
            }
        }
        let left = below.unwrap_or_else(|| saddles.last().unwrap());
        let right = above.unwrap_or_else(|| saddles.first().unwrap());
        per_basin.push(left.value.min(right.value) - m.value);
    }
    let global_value = minima[global].value;
    let suboptimal: Vec<usize> = (0..n)
        .filter(|&b| minima[b].value > global_value + 1e-12)
        .collect();
    let delta_e_max = if !suboptimal.is_empty() {
        suboptimal
            .iter()
            .map(|&b| per_basin[b])
            .fold(f64::NEG_INFINITY, f64::max)
            .into()
    } else if n >= 2 {
        // Tied ground states: escaping between them is still the binding
        // timescale.
        Some(per_basin.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    } else {
        None
    };
    BarrierReport {
        per_basin,
        delta_e_max,
        c_star: delta_e_max.map(|d| 1.0 / d),
        global_basin: global,
    }
}

/// Derivative-based scan for smooth families: sign changes of U' on the
/// dense grid, bisection to 1e-12, classification by the sign of U''.
fn scan_smooth(family: &LandscapeFamily) -> Result<Vec<CriticalPoint>> {
    let eval = |theta: f64| match family {
        LandscapeFamily::SymmetricDoubleWell => {
            let (s, c) = (2.0 * theta).sin_cos();
            (c, -2.0 * s, -4.0 * c)
        }
        LandscapeFamily::TiltedDoubleWell { gamma } => {
            let (s2, c2) = (2.0 * theta).sin_cos();
            let (s1, c1) = theta.sin_cos();
            (
                c2 + gamma * s1,
                -2.0 * s2 + gamma * c1,
                -4.0 * c2 - gamma * s1,
            )
        }
        LandscapeFamily::InfoNceMicro(_) => unreachable!("micro slices use the value scan"),
    };

    let step = TWO_PI / CRIT_GRID as f64;
    let angle = |i: usize| -std::f64::consts::PI + i as f64 * step;
    let derivs: Vec<f64> = (0..CRIT_GRID).map(|i| eval(angle(i)).1).collect();

    let mut roots = Vec::new();
    for i in 0..CRIT_GRID {
        let da = derivs[i];
        let db = derivs[(i + 1) % CRIT_GRID];
        if da == 0.0 {
            roots.push(angle(i));
        } else if da * db < 0.0 {
            // Bisect on the unwrapped interval; eval is periodic.
            let (mut a, mut b) = (angle(i), angle(i) + step);
            let mut fa = da;
            while b - a > ROOT_TOL {
                let mid = 0.5 * (a + b);
                let fm = eval(mid).1;
                if fm == 0.0 {
                    a = mid;
                    b = mid;
                } else if fa * fm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    fa = fm;
                }
            }
            roots.push(wrap_angle(0.5 * (a + b)));
        }
    }

    let mut criticals = Vec::with_capacity(roots.len());
    for r in roots {
        let (u, _du, ddu) = eval(r);
        if ddu.abs() < DEGENERATE_TOL {
            return Err(Error::DegenerateCritical {
                angle: r,
                curvature: ddu,
            });
        }
        criticals.push(CriticalPoint {
            angle: r,
            value: u,
            curvature: ddu,
            kind: if ddu > 0.0 {
                CriticalKind::Minimum
            } else {
                CriticalKind::Saddle
            },
        });
    }
    criticals.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(criticals)
}

/// Value-based scan for piecewise-smooth slices: strict grid extrema with
/// exact-equality plateau merging. Plateaus report their midpoint; smooth
/// single-point extrema are refined through U' when a sign change brackets
/// them.
fn scan_value_extrema(slice: &MicroSlice) -> Result<Vec<CriticalPoint>> {
    let m = CRIT_GRID;
    let step = TWO_PI / m as f64;
    let angle = |i: usize| -std::f64::consts::PI + i as f64 * step;
    let vals: Vec<f64> = (0..m).map(|i| micro_eval(slice, angle(i)).0).collect();

    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo < 1e-12 {
        return Err(Error::DegenerateCritical {
            angle: 0.0,
            curvature: 0.0,
        });
    }

    // Rotate the start to a run boundary so no run straddles the seam.
    let start = (0..m)
        .find(|&i| vals[i] != vals[(i + m - 1) % m])
        .expect("non-flat slice has a run boundary");

    let mut criticals = Vec::new();
    let mut i = 0usize;
    while i < m {
        let run_begin = (start + i) % m;
        let v = vals[run_begin];
        let mut len = 1usize;
        while len < m - i && vals[(run_begin + len) % m] == v {
            len += 1;
        }
        let prev = vals[(run_begin + m - 1) % m];
        let next = vals[(run_begin + len) % m];
        let kind = if prev > v && next > v {
            Some(CriticalKind::Minimum)
        } else if prev < v && next < v {
            Some(CriticalKind::Saddle)
        } else {
            None // monotone shoulder
        };
        if let Some(kind) = kind {
            let mid = (run_begin + (len - 1) / 2) % m;
            let mut rep = angle(mid);
            if len == 1 {
                // Smooth extremum if U' changes sign across the node;
                // refine by bisection in that case.
                let dl = micro_eval(slice, rep - step).1;
                let dr = micro_eval(slice, rep + step).1;
                if dl * dr < 0.0 {
                    let (mut a, mut b) = (rep - step, rep + step);
                    let mut fa = dl;
                    while b - a > ROOT_TOL {
                        let midpt = 0.5 * (a + b);
                        let fm = micro_eval(slice, midpt).1;
                        if fm == 0.0 {
                            a = midpt;
                            b = midpt;
                        } else if fa * fm < 0.0 {
                            b = midpt;
                        } else {
                            a = midpt;
                            fa = fm;
                        }
                    }
                    let refined = 0.5 * (a + b);
                    if micro_eval(slice, refined).1.abs() <= 1e-10 {
                        rep = wrap_angle(refined);
                    }
                }
            }
            let (u, _du, ddu) = micro_eval(slice, rep);
            criticals.push(CriticalPoint {
                angle: rep,
                value: u,
                curvature: ddu,
                kind,
            });
        }
        i += len;
    }
    criticals.sort_by(|a, b| a.angle.total_cmp(&b.angle));
    Ok(criticals)
}

/// Similarity of two S^1 points as a function of their angle difference,
/// with first and second derivatives in that difference. Both kinds are
/// even in the difference.
fn pair_sim(kind: SimilarityKind, delta: f64) -> (f64, f64, f64) {
    match kind {
        SimilarityKind::Cosine => {
            let (s, c) = delta.sin_cos();
            (c, -s, -c)
        }
        SimilarityKind::Gaussian { sigma } => {
            // ||a - b||^2 = 2 (1 - cos delta) on the unit circle.
            let inv = 1.0 / (sigma * sigma);
            let (sd, cd) = delta.sin_cos();
            let v = (-(1.0 - cd) * inv).exp();
            let d1 = -sd * inv * v;
            let d2 = (sd * sd * inv * inv - cd * inv) * v;
            (v, d1, d2)
        }
    }
}

/// U0 of the slice configuration with the moving point at theta, plus the
/// branch-local first and second derivatives in theta.
fn micro_eval(slice: &MicroSlice, theta: f64) -> (f64, f64, f64) {
    let n = slice.base_angles.len();
    let pos = |k: usize| {
        if k == slice.anchor_slice {
            theta
        } else {
            slice.base_angles[k]
        }
    };
    let moving = slice.anchor_slice;
    let mut total = (0.0, 0.0, 0.0);
    for &(i, j) in slice.pairs.pairs() {
        // d(delta_ik)/d(theta) is +1 when i moves, -1 when k moves, else 0.
        let sim_term = |k: usize| -> (f64, f64, f64) {
            let delta = pos(i) - pos(k);
            let (v, d1, d2) = pair_sim(slice.kind, delta);
            let w = (i == moving) as i64 - (k == moving) as i64;
            match w {
                0 => (v, 0.0, 0.0),
                _ => (v, w as f64 * d1, d2),
            }
        };
        // Argmax over candidates, lowest index winning ties exactly.
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for k in 0..n {
            if k == i {
                continue;
            }
            let t = sim_term(k);
            if t.0 > best.0 {
                best = t;
            }
        }
        let pos_term = sim_term(j);
        total.0 += best.0 - pos_term.0;
        total.1 += best.1 - pos_term.1;
        total.2 += best.2 - pos_term.2;
    }
    let inv = 1.0 / slice.pairs.len() as f64;
    (total.0 * inv, total.1 * inv, total.2 * inv)
}

/// Single-particle chain on S^1 under a landscape potential. The state is
/// the angle; the step mirrors the product-sphere scheme exactly (tangent
/// drift plus noise, projection retraction, i.e. theta += atan(step)).
#[derive(Debug, Clone, Copy)]
pub struct CircleSystem<'a> {
    spec: &'a LandscapeSpec,
}

impl<'a> CircleSystem<'a> {
    pub fn new(spec: &'a LandscapeSpec) -> Self {
        Self { spec }
    }

    pub fn spec(&self) -> &LandscapeSpec {
        self.spec
    }
}

impl AnnealSystem for CircleSystem<'_> {
    type State = f64;

    fn loss(&self, theta: &f64, _beta: f64) -> f64 {
        self.spec.value(*theta)
    }

    fn u0(&self, theta: &f64) -> f64 {
        self.spec.value(*theta)
    }

    #[inline]
    fn step(
        &self,
        theta: &f64,
        eta: f64,
        beta: f64,
        noise_on: bool,
        rng: &mut rand_chacha::ChaCha8Rng,
    ) -> std::result::Result<f64, StepFail> {
        let mut s = -eta * self.spec.grad(*theta);
        if noise_on {
            let xi: f64 = rng.sample(StandardNormal);
            s += (2.0 * eta / beta).sqrt() * xi;
        }
        if s.abs() >= STEP_OVERFLOW_LIMIT {
            return Err(StepFail {
                point: 0,
                magnitude: s.abs(),
            });
        }
        Ok(wrap_angle(theta + s.atan()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn symmetric_eval_examples() {
        let spec = LandscapeSpec::symmetric_double_well();
        let (u, du, ddu) = spec.eval(FRAC_PI_2);
        assert_abs_diff_eq!(u, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(du, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ddu, 4.0, epsilon = 1e-15);
        let (u, du, ddu) = spec.eval(0.0);
        assert_eq!((u, du, ddu), (1.0, 0.0, -4.0));
        // 2 pi periodicity.
        assert_abs_diff_eq!(spec.value(1.3), spec.value(1.3 + TWO_PI), epsilon = 1e-12);
    }

    #[test]
    fn symmetric_critical_points_are_exact() {
        let spec = LandscapeSpec::symmetric_double_well();
        let minima = spec.minima();
        assert_eq!(minima.len(), 2);
        assert_abs_diff_eq!(minima[0].angle, -FRAC_PI_2, epsilon = 1e-11);
        assert_abs_diff_eq!(minima[1].angle, FRAC_PI_2, epsilon = 1e-11);
        for m in minima {
            assert_abs_diff_eq!(m.value, -1.0, epsilon = 1e-14);
            assert!(spec.eval(m.angle).1.abs() <= 1e-10);
        }
        let saddles = spec.saddles();
        assert_eq!(saddles.len(), 2);
        let saddle_angles: Vec<f64> = saddles.iter().map(|s| s.angle.abs()).collect();
        assert!(saddle_angles.iter().any(|&a| a <= 1e-11));
        assert!(saddle_angles.iter().any(|&a| (a - PI).abs() <= 1e-11));
        for s in saddles {
            assert_abs_diff_eq!(s.value, 1.0, epsilon = 1e-14);
        }
        let b = spec.barrier_heights();
        assert_eq!(b.delta_e_max, Some(2.0));
        assert_eq!(b.c_star, Some(0.5));
    }

    #[test]
    fn tilted_critical_points_match_closed_form() {
        // Saddles at asin(gamma / 4) and pi minus that, value
        // 1 - gamma^2/8 + gamma^2/4 = 1.005 for gamma = 0.2.
        let spec = LandscapeSpec::tilted_double_well(0.2).unwrap();
        let saddle_angle = 0.050020856805770016;
        let angles: Vec<f64> = spec.saddles().iter().map(|s| s.angle).collect();
        assert_abs_diff_eq!(angles[0], saddle_angle, epsilon = 1e-10);
        assert_abs_diff_eq!(angles[1], PI - saddle_angle, epsilon = 1e-10);
        for s in spec.saddles() {
            assert_abs_diff_eq!(s.value, 1.005, epsilon = 1e-12);
        }
        let minima = spec.minima();
        assert_abs_diff_eq!(minima[0].angle, -FRAC_PI_2, epsilon = 1e-10);
        assert_abs_diff_eq!(minima[0].value, -1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(minima[1].angle, FRAC_PI_2, epsilon = 1e-10);
        assert_abs_diff_eq!(minima[1].value, -0.8, epsilon = 1e-12);
        assert_eq!(spec.global_basin(), 0);

        let b = spec.barrier_heights();
        assert_abs_diff_eq!(b.delta_e_max.unwrap(), 1.805, epsilon = 1e-10);
        assert_abs_diff_eq!(b.c_star.unwrap(), 0.554016620498615, epsilon = 1e-10);
        // The shallow well's escape barrier, and the global well's deeper one.
        assert_abs_diff_eq!(b.per_basin[1], 1.805, epsilon = 1e-10);
        assert_abs_diff_eq!(b.per_basin[0], 2.205, epsilon = 1e-10);
    }

    #[test]
    fn tilted_converges_to_symmetric_as_gamma_vanishes() {
        let spec = LandscapeSpec::tilted_double_well(1e-4).unwrap();
        let sym = LandscapeSpec::symmetric_double_well();
        for (t, s) in spec.critical_points().iter().zip(sym.critical_points()) {
            assert!((t.angle - s.angle).abs() < 1e-3);
        }
    }

    #[test]
    fn kramers_prefactor_examples() {
        let sym = LandscapeSpec::symmetric_double_well();
        for basin in 0..2 {
            let a = sym.kramers_prefactor(basin).unwrap();
            assert_abs_diff_eq!(a, 2.0 / PI, epsilon = 1e-10);
            assert!(a > 0.0);
        }
        // Shallow tilted basin: sqrt(3.8 * 3.99) / 2 pi.
        let tilted = LandscapeSpec::tilted_double_well(0.2).unwrap();
        let a = tilted.kramers_prefactor(1).unwrap();
        assert_abs_diff_eq!(a, 0.6197240890882663, epsilon = 1e-10);
    }

    #[test]
    fn basin_labels() {
        let spec = LandscapeSpec::symmetric_double_well();
        assert_eq!(spec.basin_of(FRAC_PI_2), BasinLabel::Basin(1));
        assert_eq!(spec.basin_of(0.1), BasinLabel::Basin(1));
        assert_eq!(spec.basin_of(-0.1), BasinLabel::Basin(0));
        assert_eq!(spec.basin_of(0.0), BasinLabel::Saddle);
        assert_eq!(spec.basin_of(PI), BasinLabel::Saddle);
    }

    #[test]
    fn basin_is_flow_invariant() {
        // Noiseless gradient flow must keep the basin label constant.
        let spec = LandscapeSpec::tilted_double_well(0.2).unwrap();
        let sys = CircleSystem::new(&spec);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        use rand::{Rng, SeedableRng};
        for _ in 0..20 {
            let mut theta: f64 = rng.random_range(-PI..PI);
            let label = spec.basin_of(theta);
            if label == BasinLabel::Saddle {
                continue;
            }
            for _ in 0..50 {
                theta = sys.step(&theta, 0.05, 1.0, false, &mut rng).unwrap();
            }
            assert_eq!(spec.basin_of(theta), label);
        }
    }

    #[test]
    fn micro_slice_with_coincident_positive() {
        // Frozen points at 0 (the positive) and 2.5; the slice minimum lies
        // at 0 where U0 vanishes, and no suboptimal basin exists.
        let pairs = PairSet::new(vec![(0, 1)], 3).unwrap();
        let spec = LandscapeSpec::infonce_micro(
            vec![0.0, 0.0, 2.5],
            SimilarityKind::Cosine,
            pairs,
            0,
        )
        .unwrap();
        assert_eq!(spec.value(0.0), 0.0);
        let min_value = spec
            .minima()
            .iter()
            .map(|m| m.value)
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min_value, 0.0, epsilon = 1e-12);
        assert!(spec.barrier_heights().delta_e_max.is_none());
    }

    #[test]
    fn micro_slice_finds_suboptimal_well_near_cluster() {
        // Positive at 0, tight negative cluster near 2.2 under a narrow RBF:
        // the scallops between cluster members hold suboptimal local minima.
        let pairs = PairSet::new(vec![(0, 1)], 5).unwrap();
        let spec = LandscapeSpec::infonce_micro(
            vec![0.0, 0.0, 2.1, 2.2, 2.3],
            SimilarityKind::gaussian(0.1).unwrap(),
            pairs,
            0,
        )
        .unwrap();
        let b = spec.barrier_heights();
        assert!(b.delta_e_max.is_some());
        let sub: Vec<&CriticalPoint> = spec
            .minima()
            .iter()
            .filter(|m| m.value > 1e-6 && m.angle > 1.9 && m.angle < 2.5)
            .collect();
        assert!(
            !sub.is_empty(),
            "expected a suboptimal well near the cluster, minima = {:?}",
            spec.minima()
        );
    }

    #[test]
    fn micro_rejects_bad_arguments() {
        let pairs = PairSet::new(vec![(0, 1)], 2).unwrap();
        assert!(LandscapeSpec::infonce_micro(
            vec![0.0, 1.0],
            SimilarityKind::Cosine,
            pairs,
            0
        )
        .is_err());
        let pairs3 = PairSet::new(vec![(0, 1)], 3).unwrap();
        assert!(LandscapeSpec::infonce_micro(
            vec![0.0, 1.0, 2.0],
            SimilarityKind::Cosine,
            pairs3,
            7
        )
        .is_err());
    }

    #[test]
    fn gamma_range_is_validated() {
        assert!(LandscapeSpec::tilted_double_well(0.0).is_err());
        assert!(LandscapeSpec::tilted_double_well(0.5).is_err());
        assert!(LandscapeSpec::tilted_double_well(-0.1).is_err());
    }

    #[test]
    fn critical_points_alternate() {
        for spec in [
            LandscapeSpec::symmetric_double_well(),
            LandscapeSpec::tilted_double_well(0.3).unwrap(),
        ] {
            let all = spec.critical_points();
            assert!(all.windows(2).all(|w| w[0].kind != w[1].kind));
            for c in &all {
                assert!(spec.eval(c.angle).1.abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn wrap_angle_range() {
        for &t in &[0.0, 3.2, -3.2, 7.0, -7.0, PI, -PI, 100.0] {
            let w = wrap_angle(t);
            assert!((-PI..PI).contains(&w), "{t} wrapped to {w}");
        }
    }
}
