//! Disk and ball domains with absorbing windows on the boundary.
//!
//! A window is centered at a boundary point `x_k` and carries a rate parameter
//! `K_k > 0`. In the plane the absorbing arc is the part of the unit circle
//! within chord distance `exp(-1/K_k)` of `x_k`; in the ball it is the cap within
//! chord distance `2 K_k / 3`.

use log::warn;
use thiserror::Error;

use crate::quasimode::Quasimode;
use crate::scalar::{dist, dot, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("configuration has no windows")]
    NoWindows,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("windows {0} and {1} share the same center")]
    DuplicateCenter(usize, usize),
    #[error("window {window} has chord radius {chord_radius} > rho0/2 = {half_rho0}")]
    Overlap {
        window: usize,
        chord_radius: f64,
        half_rho0: f64,
    },
    #[error("total rate {kbar} violates the smallness bound {bound}")]
    Hypothesis { kbar: f64, bound: f64 },
    #[error("window {0} does not match the configured dimension")]
    DimensionMismatch(usize),
    #[error("level set of window {window} not bracketed on [{lo}, {hi}]")]
    Bracket { window: usize, lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Dimension {
    Two,
    Three,
}

impl Dimension {
    pub fn from_usize(d: usize) -> Option<Self> {
        match d {
            2 => Some(Dimension::Two),
            3 => Some(Dimension::Three),
            _ => None,
        }
    }

    pub fn as_usize(self) -> usize {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Center<T> {
    /// Polar angle on the unit circle, stored in `[0, 2π)`.
    Angle(T),
    /// Unit vector on the sphere.
    Direction([T; 3]),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec<T> {
    center: Center<T>,
    k_eps: T,
}

impl<T: Scalar> WindowSpec<T> {
    pub fn planar(angle: T, k_eps: T) -> Result<Self, GeometryError> {
        check_rate(k_eps)?;
        Ok(Self {
            center: Center::Angle(wrap_two_pi(angle)),
            k_eps,
        })
    }

    /// Planar window whose absorbing arc has chord radius `epsilon`, i.e. `K = -1/ln ε`.
    pub fn planar_with_radius(angle: T, epsilon: T) -> Result<Self, GeometryError> {
        if !(epsilon > T::zero() && epsilon < T::one()) {
            return Err(GeometryError::InvalidWindow(format!(
                "planar radius {epsilon} outside (0, 1)"
            )));
        }
        Self::planar(angle, -T::one() / epsilon.ln())
    }

    pub fn spatial(direction: [T; 3], k_eps: T) -> Result<Self, GeometryError> {
        check_rate(k_eps)?;
        let n = dot(&direction, &direction).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(GeometryError::InvalidWindow("zero direction".into()));
        }
        let w = Self {
            center: Center::Direction(direction.map(|c| c / n)),
            k_eps,
        };
        if w.chord_radius() >= T::one() {
            return Err(GeometryError::InvalidWindow(format!(
                "cap radius {} is not below 1",
                w.chord_radius()
            )));
        }
        Ok(w)
    }

    /// Spatial window with cap chord radius `epsilon`, i.e. `K = 3ε/2`.
    pub fn spatial_with_radius(direction: [T; 3], epsilon: T) -> Result<Self, GeometryError> {
        Self::spatial(direction, T::lit(1.5) * epsilon)
    }

    pub fn center(&self) -> &Center<T> {
        &self.center
    }

    pub fn k_eps(&self) -> T {
        self.k_eps
    }

    pub fn dimension(&self) -> Dimension {
        match self.center {
            Center::Angle(_) => Dimension::Two,
            Center::Direction(_) => Dimension::Three,
        }
    }

    pub fn center_angle(&self) -> Option<T> {
        match self.center {
            Center::Angle(a) => Some(a),
            Center::Direction(_) => None,
        }
    }

    /// Radius of the absorbing region measured as a chord from the center.
    pub fn chord_radius(&self) -> T {
        match self.center {
            Center::Angle(_) => (-T::one() / self.k_eps).exp(),
            Center::Direction(_) => T::lit(2.0) * self.k_eps / T::lit(3.0),
        }
    }

    /// Center as a point of the plane (length 2) or of space (length 3).
    pub fn point(&self) -> Vec<T> {
        match self.center {
            Center::Angle(a) => vec![a.cos(), a.sin()],
            Center::Direction(d) => d.to_vec(),
        }
    }

    /// Same center with a different rate; used by sweeps.
    pub fn with_rate(&self, k_eps: T) -> Result<Self, GeometryError> {
        match self.center {
            Center::Angle(a) => Self::planar(a, k_eps),
            Center::Direction(d) => Self::spatial(d, k_eps),
        }
    }
}

fn check_rate<T: Scalar>(k: T) -> Result<(), GeometryError> {
    if k > T::zero() && k.is_finite() {
        Ok(())
    } else {
        Err(GeometryError::InvalidWindow(format!("rate {k} is not positive")))
    }
}

pub fn wrap_two_pi<T: Scalar>(a: T) -> T {
    let tau = T::TAU();
    let r = a % tau;
    if r < T::zero() {
        r + tau
    } else {
        r
    }
}

/// Maps an angle to `(-π, π]`.
pub fn wrap_pi<T: Scalar>(a: T) -> T {
    let r = wrap_two_pi(a);
    if r > T::PI() {
        r - T::TAU()
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainConfig<T> {
    dimension: Dimension,
    windows: Vec<WindowSpec<T>>,
    rho0: T,
    kbar: T,
    warnings: Vec<String>,
}

impl<T: Scalar> DomainConfig<T> {
    /// Domain with a fully reflecting boundary. Not reachable through
    /// [`validate_config`]; used where an empty window set is meaningful.
    pub fn empty(dimension: Dimension) -> Self {
        Self {
            dimension,
            windows: Vec::new(),
            rho0: T::lit(2.0),
            kbar: T::zero(),
            warnings: Vec::new(),
        }
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn windows(&self) -> &[WindowSpec<T>] {
        &self.windows
    }

    /// Minimum pairwise distance between window centers; 2 for a single window.
    pub fn rho0(&self) -> T {
        self.rho0
    }

    pub fn kbar(&self) -> T {
        self.kbar
    }

    /// Non-fatal hypothesis violations accepted in non-strict mode.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `½ min(1/|log(ρ₀/2)|, 1)`.
    pub fn kbar_bound(&self) -> T {
        kbar_bound(self.rho0)
    }
}

fn kbar_bound<T: Scalar>(rho0: T) -> T {
    let l = (rho0 / T::lit(2.0)).ln().abs();
    let inv = if l > T::zero() {
        T::one() / l
    } else {
        T::infinity()
    };
    T::lit(0.5) * inv.min(T::one())
}

/// Checks the window layout and derives `ρ₀` and `K̄`.
///
/// With `strict = false` a violated `K̄` bound is logged and recorded in
/// [`DomainConfig::warnings`] instead of rejected.
pub fn validate_config<T: Scalar>(
    dimension: Dimension,
    windows: Vec<WindowSpec<T>>,
    strict: bool,
) -> Result<DomainConfig<T>, GeometryError> {
    if windows.is_empty() {
        return Err(GeometryError::NoWindows);
    }
    for (i, w) in windows.iter().enumerate() {
        if w.dimension() != dimension {
            return Err(GeometryError::DimensionMismatch(i));
        }
    }
    let points: Vec<Vec<T>> = windows.iter().map(WindowSpec::point).collect();
    let dup_tol = T::lit(64.0) * T::epsilon();
    let mut rho0 = T::lit(2.0);
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d = dist(&points[i], &points[j]);
            if d <= dup_tol {
                return Err(GeometryError::DuplicateCenter(i, j));
            }
            rho0 = rho0.min(d);
        }
    }
    let half = rho0 / T::lit(2.0);
    for (i, w) in windows.iter().enumerate() {
        if w.chord_radius() > half {
            return Err(GeometryError::Overlap {
                window: i,
                chord_radius: w.chord_radius().to_f64_lossy(),
                half_rho0: half.to_f64_lossy(),
            });
        }
    }
    let kbar = windows.iter().fold(T::zero(), |acc, w| acc + w.k_eps());
    let bound = kbar_bound(rho0);
    let mut warnings = Vec::new();
    if kbar >= bound {
        if strict {
            return Err(GeometryError::Hypothesis {
                kbar: kbar.to_f64_lossy(),
                bound: bound.to_f64_lossy(),
            });
        }
        let msg = format!("total rate {kbar} is outside the asymptotic regime (bound {bound})");
        warn!("{msg}");
        warnings.push(msg);
    }
    Ok(DomainConfig {
        dimension,
        windows,
        rho0,
        kbar,
        warnings,
    })
}

/// Angular half-width of a planar window with the given chord radius.
pub fn arc_half_width<T: Scalar>(chord_radius: T) -> T {
    let two = T::lit(2.0);
    two * (chord_radius / two).min(T::one()).asin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowArc<T> {
    pub center: T,
    pub half_width: T,
}

impl<T: Scalar> WindowArc<T> {
    /// `(θ_lo, θ_hi)` wrapped to `[0, 2π)`; `θ_lo > θ_hi` when the arc straddles 0.
    pub fn bounds(&self) -> (T, T) {
        (
            wrap_two_pi(self.center - self.half_width),
            wrap_two_pi(self.center + self.half_width),
        )
    }

    /// Closed-arc membership.
    pub fn contains(&self, theta: T) -> bool {
        let d = wrap_pi(theta - self.center).abs();
        d <= self.half_width + T::lit(8.0) * T::epsilon() * T::TAU()
    }
}

/// Angular extent of a planar window.
///
/// # Panics
/// If the window is not planar.
pub fn window_arc<T: Scalar>(w: &WindowSpec<T>) -> WindowArc<T> {
    let center = w.center_angle().expect("window_arc requires a planar window");
    WindowArc {
        center,
        half_width: arc_half_width(w.chord_radius()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryClass {
    Window(usize),
    Neumann,
}

/// Window containing the boundary point at angle `theta`; arc endpoints belong
/// to the window.
pub fn classify_boundary_point<T: Scalar>(config: &DomainConfig<T>, theta: T) -> BoundaryClass {
    debug_assert_eq!(config.dimension(), Dimension::Two);
    config
        .windows()
        .iter()
        .position(|w| window_arc(w).contains(theta))
        .map_or(BoundaryClass::Neumann, BoundaryClass::Window)
}

/// Constants of the annulus that contains each level-set curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetBounds<T> {
    c_minus: T,
    c_plus: T,
}

impl<T: Scalar> Default for LevelSetBounds<T> {
    fn default() -> Self {
        Self {
            c_minus: T::lit(1.5),
            c_plus: T::lit(0.4),
        }
    }
}

impl<T: Scalar> LevelSetBounds<T> {
    /// Smallest admissible inner constant, `1 + 1/8 + ln(2)/2`.
    pub fn c_minus_floor() -> T {
        T::one() + T::lit(0.125) + T::LN_2() / T::lit(2.0)
    }

    pub fn new(c_minus: T, c_plus: T) -> Result<Self, GeometryError> {
        if !(c_minus > Self::c_minus_floor()) {
            return Err(GeometryError::InvalidArgument(format!(
                "c_minus = {c_minus} must exceed {}",
                Self::c_minus_floor()
            )));
        }
        if !(c_plus > T::zero() && c_plus < T::lit(0.5)) {
            return Err(GeometryError::InvalidArgument(format!(
                "c_plus = {c_plus} must lie in (0, 1/2)"
            )));
        }
        Ok(Self { c_minus, c_plus })
    }

    pub fn c_minus(&self) -> T {
        self.c_minus
    }

    pub fn c_plus(&self) -> T {
        self.c_plus
    }

    /// `(r_minus, r_plus) = (e^{-C₋/K}, e^{-C₊/K})`.
    pub fn radii(&self, k_eps: T) -> (T, T) {
        (
            (-self.c_minus / k_eps).exp(),
            (-self.c_plus / k_eps).exp(),
        )
    }
}

fn bisect_root<T: Scalar>(
    mut lo: T,
    mut hi: T,
    mut f: impl FnMut(T) -> T,
    window: usize,
) -> Result<T, GeometryError> {
    let bracket_err = |lo: T, hi: T| GeometryError::Bracket {
        window,
        lo: lo.to_f64_lossy(),
        hi: hi.to_f64_lossy(),
    };
    if !(lo < hi) {
        return Err(bracket_err(lo, hi));
    }
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo > T::zero() && fhi <= T::zero()) {
        return Err(bracket_err(lo, hi));
    }
    let tol = T::lit(1e-12);
    for _ in 0..400 {
        let mid = (lo + hi) / T::lit(2.0);
        if mid <= lo || mid >= hi || hi - lo <= tol * lo {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (f(lo), f(hi));
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

/// Distance from the center of window `k` to the zero set of the quasimode
/// along `direction`, found by bisection on `[r_minus, r_plus]`.
pub fn levelset_radius<T: Scalar>(
    quasimode: &Quasimode<T>,
    bounds: &LevelSetBounds<T>,
    k: usize,
    direction: [T; 2],
) -> Result<T, GeometryError> {
    let config = quasimode.config();
    let w = planar_window(config, k)?;
    let xk = w.point();
    let n = (direction[0] * direction[0] + direction[1] * direction[1]).sqrt();
    if !(n > T::zero()) {
        return Err(GeometryError::InvalidArgument("zero direction".into()));
    }
    let d = [direction[0] / n, direction[1] / n];
    let (r_minus, r_plus) = bounds.radii(w.k_eps());
    // The ray x_k + t d stays in the closed disk for t <= -2 x_k·d.
    let exit = -T::lit(2.0) * (xk[0] * d[0] + xk[1] * d[1]);
    if !(exit > T::zero()) {
        return Err(GeometryError::Bracket {
            window: k,
            lo: r_minus.to_f64_lossy(),
            hi: r_plus.to_f64_lossy(),
        });
    }
    let hi = r_plus.min(exit);
    bisect_root(
        r_minus,
        hi,
        |t| quasimode.phi_unchecked(&[xk[0] + t * d[0], xk[1] + t * d[1]]),
        k,
    )
}

fn planar_window<T: Scalar>(
    config: &DomainConfig<T>,
    k: usize,
) -> Result<&WindowSpec<T>, GeometryError> {
    let w = config
        .windows()
        .get(k)
        .ok_or_else(|| GeometryError::InvalidArgument(format!("no window {k}")))?;
    if w.dimension() != Dimension::Two {
        return Err(GeometryError::DimensionMismatch(k));
    }
    Ok(w)
}

/// Chord distance from `x_k` to the point where the level-set curve of window
/// `k` meets the circle on the side of increasing (`side > 0`) or decreasing angle.
pub fn levelset_boundary_chord<T: Scalar>(
    quasimode: &Quasimode<T>,
    bounds: &LevelSetBounds<T>,
    k: usize,
    side: T,
) -> Result<T, GeometryError> {
    let w = planar_window(quasimode.config(), k)?;
    let c = w.center_angle().unwrap_or_else(T::zero);
    let (r_minus, r_plus) = bounds.radii(w.k_eps());
    let two = T::lit(2.0);
    let s = side.signum();
    bisect_root(
        r_minus,
        r_plus.min(two),
        |r| {
            let a = c + s * arc_half_width(r);
            quasimode.phi_unchecked(&[a.cos(), a.sin()])
        },
        k,
    )
}

/// Samples of the curve bounding the modified domain near window `k`, over a
/// fan of directions from `x_k` spanning the domain side. The first and last
/// points lie on the circle.
pub fn modified_boundary_polyline<T: Scalar>(
    quasimode: &Quasimode<T>,
    bounds: &LevelSetBounds<T>,
    k: usize,
    n_points: usize,
) -> Result<Vec<[T; 2]>, GeometryError> {
    if n_points < 2 {
        return Err(GeometryError::InvalidArgument(format!(
            "n_points = {n_points} < 2"
        )));
    }
    let w = planar_window(quasimode.config(), k)?;
    let c = w.center_angle().unwrap_or_else(T::zero);
    let two = T::lit(2.0);
    let half_pi = T::FRAC_PI_2();
    let r_pos = levelset_boundary_chord(quasimode, bounds, k, T::one())?;
    let r_neg = levelset_boundary_chord(quasimode, bounds, k, -T::one())?;
    let delta_pos = arc_half_width(r_pos);
    let delta_neg = arc_half_width(r_neg);
    // Fan angle measured from the inward normal: the circle endpoint at angle
    // c + δ is seen from x_k at ψ = δ/2 - π/2.
    let psi_a = delta_pos / two - half_pi;
    let psi_b = half_pi - delta_neg / two;
    let inward = c + T::PI();
    let xk = w.point();
    let mut out = Vec::with_capacity(n_points);
    let last = T::from_usize(n_points - 1).unwrap();
    for i in 0..n_points {
        if i == 0 {
            let a = c + delta_pos;
            out.push([a.cos(), a.sin()]);
        } else if i == n_points - 1 {
            let a = c - delta_neg;
            out.push([a.cos(), a.sin()]);
        } else {
            let s = T::from_usize(i).unwrap() / last;
            let psi = psi_a + (psi_b - psi_a) * s;
            let dir = [(inward + psi).cos(), (inward + psi).sin()];
            let r = levelset_radius(quasimode, bounds, k, dir)?;
            out.push([xk[0] + r * dir[0], xk[1] + r * dir[1]]);
        }
    }
    Ok(out)
}
