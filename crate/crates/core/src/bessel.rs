//! `J0`, its first zero and the quadrature identities that pin down the
//! continuous speed constant `gamma0 = 3 / (1 - 2 j0^-2)`.
//!
//! The series are summed in double-double arithmetic so that the
//! cancellation near `x = 20` (terms of size `~1e7`) still leaves an
//! absolute error well under `1e-12`.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Upper end of the window where the power series is used.
pub const SERIES_WINDOW: f64 = 20.0;

/// Tolerance to which [`find_j0`] brackets the root.
pub const ROOT_TOLERANCE: f64 = 1e-13;

fn check_window(x: f64) -> Result<()> {
    if (0.0..=SERIES_WINDOW).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "Bessel series argument",
            value: x,
        })
    }
}

/// `Σ_k (-1)^k q^k / (k! (k+nu)!)` with `q = x^2/4`, `nu ∈ {0, 1}`.
fn series(x: f64, nu: u32) -> f64 {
    let q = TwoFloat::from(x) * x / 4.0;
    let mut term = TwoFloat::from(1.0);
    if nu == 1 {
        term = TwoFloat::from(x) / 2.0;
    }
    let mut sum = term;
    let mut k = 1u32;
    loop {
        term = -(term * q) / f64::from(k * (k + nu));
        sum += term;
        let t = f64::from(term).abs();
        if t <= 1e-18 * f64::from(sum).abs().max(1e-300) || t == 0.0 {
            break;
        }
        k += 1;
    }
    f64::from(sum)
}

/// `J0(x)` for `0 <= x <= 20`.
pub fn bessel_j0(x: f64) -> Result<f64> {
    check_window(x)?;
    Ok(series(x, 0))
}

/// `J1(x)` for `0 <= x <= 20`; `J0' = -J1`.
pub fn bessel_j1(x: f64) -> Result<f64> {
    check_window(x)?;
    Ok(series(x, 1))
}

fn j0(x: f64) -> f64 {
    series(x, 0)
}

fn j0_prime(x: f64) -> f64 {
    -series(x, 1)
}

/// The first positive zero of `J0` with its certifying bracket.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselRoot {
    pub j0: f64,
    /// `J0'(j0) = -J1(j0)`.
    pub derivative: f64,
    pub bracket: (f64, f64),
}

/// Bisection on `[2, 3]` down to a bracket of width `1e-13`.
pub fn find_j0() -> BesselRoot {
    let (mut lo, mut hi) = (2.0, 3.0);
    assert!(j0(lo) > 0.0 && j0(hi) < 0.0, "J0 does not change sign on [2, 3]");
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if j0(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    BesselRoot {
        j0: root,
        derivative: j0_prime(root),
        bracket: (lo, hi),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Global adaptive Gauss–Kronrod (7, 15).
    pub method: QuadratureMethod,
    pub tolerance: f64,
    pub max_subdivisions: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureMethod {
    AdaptiveGaussKronrod15,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            method: QuadratureMethod::AdaptiveGaussKronrod15,
            tolerance: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and `|Kronrod - Gauss|` on one interval.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let fx = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * fx;
        if i % 2 == 1 {
            g += WG[i / 2] * fx;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// `∫_a^b f` by global adaptive bisection of the worst interval until the
/// summed error estimate falls below the tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, config: &QuadratureConfig) -> Result<f64> {
    if config.tolerance.is_nan() || config.tolerance <= 0.0 {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::InvalidParameter(format!("need a <= b, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    if !v.is_finite() {
        return Err(Error::Domain {
            what: "integrand",
            value: v,
        });
    }
    let mut parts = vec![(a, b, v, e)];
    let mut subdivisions = 0;
    loop {
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= config.tolerance {
            return Ok(parts.iter().map(|p| p.2).sum());
        }
        if subdivisions >= config.max_subdivisions {
            return Err(Error::Quadrature {
                tolerance: config.tolerance,
                subdivisions,
                estimate: err,
            });
        }
        let worst = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        subdivisions += 1;
    }
}

/// Moment `∫_0^z x^p J0(x)^2 dx`.
pub fn j0_squared_moment(p: i32, z: f64, config: &QuadratureConfig) -> Result<f64> {
    check_window(z)?;
    integrate(|x| x.powi(p) * j0(x).powi(2), 0.0, z, config)
}

/// `|LHS - RHS|` of Schafheitlin's reduction formula for `J0`:
/// `(mu+2) ∫_0^z x^{mu+2} J0^2 = -(mu+1)^3/4 ∫_0^z x^mu J0^2 + ½ [B(x)]_0^z`
/// with `B(x) = x^{mu+1} ((x J0' - (mu+1) J0 / 2)^2 + (x^2 + (mu+1)^2/4) J0^2)`.
pub fn schafheitlin_residual(mu: f64, z: f64, config: &QuadratureConfig) -> Result<f64> {
    if mu.is_nan() || mu < 0.0 || z.is_nan() || z <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need mu >= 0 and z > 0, got mu={mu}, z={z}"
        )));
    }
    check_window(z)?;
    let lhs = (mu + 2.0) * integrate(|x| x.powf(mu + 2.0) * j0(x).powi(2), 0.0, z, config)?;
    let low = integrate(|x| x.powf(mu) * j0(x).powi(2), 0.0, z, config)?;
    let a = mu + 1.0;
    let bracket = |x: f64| {
        let j = j0(x);
        let d = x * j0_prime(x) - 0.5 * a * j;
        x.powf(a) * (d * d + (x * x + 0.25 * a * a) * j * j)
    };
    let at_zero = bracket(0.0);
    if at_zero != 0.0 {
        return Err(Error::Contract(format!(
            "boundary term at 0 should vanish, got {at_zero}"
        )));
    }
    let rhs = -0.25 * a.powi(3) * low + 0.5 * (bracket(z) - at_zero);
    Ok((lhs - rhs).abs())
}

/// `|∫_0^{j0} x J0^2 dx - ½ j0^2 J0'(j0)^2|`.
pub fn orthogonality_residual(config: &QuadratureConfig) -> Result<f64> {
    let root = find_j0();
    let lhs = j0_squared_moment(1, root.j0, config)?;
    Ok((lhs - 0.5 * root.j0.powi(2) * root.derivative.powi(2)).abs())
}

/// `m0` as a ratio of quadratures and in closed form `(1 - 2 j0^-2) / 3`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct M0 {
    pub ratio: f64,
    pub closed: f64,
}

pub fn compute_m0(config: &QuadratureConfig) -> Result<M0> {
    let z = find_j0().j0;
    let num = j0_squared_moment(3, z, config)?;
    let den = j0_squared_moment(1, z, config)?;
    let m = M0 {
        ratio: num / (den * z * z),
        closed: (1.0 - 2.0 / (z * z)) / 3.0,
    };
    if (m.ratio - m.closed).abs() > 1e-8 {
        return Err(Error::Contract(format!(
            "m0 ratio {} and closed form {} disagree",
            m.ratio, m.closed
        )));
    }
    Ok(m)
}

/// `gamma0 = 3 / (1 - 2 j0^-2)`.
pub fn compute_gamma0() -> f64 {
    let z = find_j0().j0;
    3.0 / (1.0 - 2.0 / (z * z))
}

/// `∫_D |x|^p φ^2 / C` for the principal Dirichlet eigenfunction
/// `φ(x) = J0(j0 |x|)` of the unit disk.
pub fn invariant_density_moment(p: u32, config: &QuadratureConfig) -> Result<f64> {
    if p > 8 {
        return Err(Error::InvalidParameter(format!("moment order {p} above 8")));
    }
    let z = find_j0().j0;
    let radial = |q: i32| integrate(|r| r.powi(q) * j0(z * r).powi(2), 0.0, 1.0, config);
    Ok(radial(p as i32 + 1)? / radial(1)?)
}

/// The continuous-side constants with the residuals that certify them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsContinuous {
    pub j0: f64,
    pub j0_bracket: (f64, f64),
    pub j0_derivative: f64,
    /// `j0^2 / 2`, the principal eigenvalue of `½Δ` with Dirichlet
    /// conditions on the unit disk.
    pub lambda0: f64,
    /// `∫_D φ^2 = 2π ∫_0^1 r J0(j0 r)^2 dr`.
    pub c: f64,
    pub m0: f64,
    pub m0_ratio: f64,
    pub m0_moment: f64,
    pub gamma0: f64,
    pub schafheitlin_residual: f64,
    pub orthogonality_residual: f64,
    pub quadrature: QuadratureConfig,
    pub root_tolerance: f64,
}

pub fn continuous_constants(config: &QuadratureConfig) -> Result<ConstantsContinuous> {
    let root = find_j0();
    let m0 = compute_m0(config)?;
    let z = root.j0;
    let c = 2.0 * std::f64::consts::PI * integrate(|r| r * j0(z * r).powi(2), 0.0, 1.0, config)?;
    Ok(ConstantsContinuous {
        j0: z,
        j0_bracket: root.bracket,
        j0_derivative: root.derivative,
        lambda0: z * z / 2.0,
        c,
        m0: m0.closed,
        m0_ratio: m0.ratio,
        m0_moment: invariant_density_moment(2, config)?,
        gamma0: compute_gamma0(),
        schafheitlin_residual: schafheitlin_residual(1.0, z, config)?,
        orthogonality_residual: orthogonality_residual(config)?,
        quadrature: *config,
        root_tolerance: ROOT_TOLERANCE,
    })
}
