//! Lumped RLC model of the monitored line section.
//!
//! Healthy operation follows `v = R i + L di/dt + v_c`, giving the state
//! vector `x = [i, v_c]` with
//!
//! ```text
//! A = [ -R/L  -1/L ]     b = [ 1/L ]
//!     [  1/C    0  ]         [  0  ]
//! ```
//!
//! A ground branch `W` inserted between `R` and `L` turns `R` into a
//! divider: the (0,0) entry becomes `-RW / (L (R + W))` and the input gain
//! `W / (L (R + W))`. The eigenvalues of either form are the roots of
//! `λ² - tr(A) λ + det(A)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fault resistance standing in for "no fault". Large enough that the
/// divider `W / (R + W)` is 1 to within 1e-12 for any realistic line.
pub const NO_FAULT_OHMS: f64 = 1e12;

/// Series/shunt parameters of the monitored line plus nominal source data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    /// Series resistance (ohm).
    pub r_series: f64,
    /// Series inductance (henry).
    pub l_series: f64,
    /// Shunt capacitance at the receiving end (farad).
    pub c_shunt: f64,
    /// Source RMS line-to-neutral voltage (volt).
    pub v_nominal: f64,
    /// System frequency (hertz).
    #[serde(default = "default_frequency")]
    pub f_nominal: f64,
    /// Nominal RMS sending-end current (ampere).
    pub i_nominal: f64,
}

fn default_frequency() -> f64 {
    60.0
}

impl LineParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if !(self.r_series >= 0.0) {
            return bad("r_series must be >= 0");
        }
        if !(self.l_series > 0.0) {
            return bad("l_series must be > 0");
        }
        if !(self.c_shunt > 0.0) {
            return bad("c_shunt must be > 0");
        }
        if !(self.f_nominal > 0.0) {
            return bad("f_nominal must be > 0");
        }
        if !(self.i_nominal > 0.0) {
            return bad("i_nominal must be > 0");
        }
        if !(self.v_nominal >= 0.0) {
            return bad("v_nominal must be >= 0");
        }
        Ok(())
    }

    /// Angular system frequency (rad/s).
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.f_nominal
    }

    /// Series impedance `R + jωL` at the system frequency.
    pub fn series_impedance(&self) -> Complex64 {
        Complex64::new(self.r_series, self.omega() * self.l_series)
    }

    /// Copy with the series branch replaced, keeping C and nominal data.
    pub fn with_series(&self, r: f64, l: f64) -> LineParams {
        LineParams {
            r_series: r,
            l_series: l,
            ..*self
        }
    }
}

/// Second-order state-space pair `(A, b)` over `x = [i, v_c]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateMatrix2 {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl StateMatrix2 {
    pub const STATE_LABELS: [&'static str; 2] = ["i", "v_c"];

    pub fn trace(&self) -> f64 {
        self.a[0][0] + self.a[1][1]
    }

    pub fn det(&self) -> f64 {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }
}

/// Polar view of a complex eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Polar {
    pub magnitude: f64,
    /// Degrees in (-180, 180].
    pub angle_deg: f64,
}

impl Polar {
    pub fn of(z: Complex64) -> Polar {
        Polar {
            magnitude: z.norm(),
            angle_deg: angle_deg(z),
        }
    }
}

/// Argument of `z` in degrees, folded into (-180, 180].
pub fn angle_deg(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re).to_degrees();
    if a <= -180.0 {
        a + 360.0
    } else {
        a
    }
}

/// Both roots of a 2×2 characteristic polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    /// Root with `Im >= 0` (the larger real root when both are real).
    pub lambda_plus: Complex64,
    /// Root with `Im <= 0`.
    pub lambda_minus: Complex64,
}

impl EigenPair {
    pub fn polar_plus(&self) -> Polar {
        Polar::of(self.lambda_plus)
    }

    pub fn polar_minus(&self) -> Polar {
        Polar::of(self.lambda_minus)
    }
}

pub fn healthy_matrix(p: &LineParams) -> Result<StateMatrix2> {
    check_lc(p)?;
    let (r, l, c) = (p.r_series, p.l_series, p.c_shunt);
    Ok(StateMatrix2 {
        a: [[-r / l, -1.0 / l], [1.0 / c, 0.0]],
        b: [1.0 / l, 0.0],
    })
}

/// State matrix with a ground branch of `w` ohms between R and L.
pub fn faulted_matrix(p: &LineParams, w: f64) -> Result<StateMatrix2> {
    check_lc(p)?;
    if !(w >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "fault resistance must be >= 0, got {w}"
        )));
    }
    let (r, l, c) = (p.r_series, p.l_series, p.c_shunt);
    if r + w == 0.0 {
        return Err(Error::InvalidParameter(
            "R + W = 0: degenerate divider".into(),
        ));
    }
    let divider = w / (r + w);
    Ok(StateMatrix2 {
        a: [[-r * divider / l, -1.0 / l], [1.0 / c, 0.0]],
        b: [divider / l, 0.0],
    })
}

fn check_lc(p: &LineParams) -> Result<()> {
    if !(p.l_series > 0.0) {
        return Err(Error::InvalidParameter("l_series must be > 0".into()));
    }
    if !(p.c_shunt > 0.0) {
        return Err(Error::InvalidParameter("c_shunt must be > 0".into()));
    }
    Ok(())
}

/// Roots of `λ² - tr λ + det = 0`.
///
/// Real roots use the cancellation-free form: the larger-magnitude root
/// comes from `q = (tr + sign(tr) √disc) / 2`, the other from `det / q`.
pub fn eigenvalues_closed_form(m: &StateMatrix2) -> EigenPair {
    eigen_from_trace_det(m.trace(), m.det())
}

pub(crate) fn eigen_from_trace_det(tr: f64, det: f64) -> EigenPair {
    let disc = tr * tr - 4.0 * det;
    if disc < 0.0 {
        let re = 0.5 * tr;
        let im = 0.5 * (-disc).sqrt();
        return EigenPair {
            lambda_plus: Complex64::new(re, im),
            lambda_minus: Complex64::new(re, -im),
        };
    }
    let sq = disc.sqrt();
    let q = 0.5 * (tr + if tr >= 0.0 { sq } else { -sq });
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q, det / q) };
    let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
    EigenPair {
        lambda_plus: Complex64::new(hi, 0.0),
        lambda_minus: Complex64::new(lo, 0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(r: f64, l: f64, c: f64) -> LineParams {
        LineParams {
            r_series: r,
            l_series: l,
            c_shunt: c,
            v_nominal: 1.0,
            f_nominal: 60.0,
            i_nominal: 1.0,
        }
    }

    #[test]
    fn healthy_unit_values() {
        let m = healthy_matrix(&line(1.0, 1.0, 1.0)).unwrap();
        assert_eq!(m.a, [[-1.0, -1.0], [1.0, 0.0]]);
        assert_eq!(m.b, [1.0, 0.0]);
        let m = healthy_matrix(&line(0.0, 1.0, 1.0)).unwrap();
        assert_eq!(m.a, [[0.0, -1.0], [1.0, 0.0]]);
    }

    #[test]
    fn healthy_realistic_values() {
        // -0.5/2e-3 = -250, -1/2e-3 = -500, 1/1e-6 = 1e6
        let m = healthy_matrix(&line(0.5, 2e-3, 1e-6)).unwrap();
        assert_relative_eq!(m.a[0][0], -250.0, max_relative = 1e-12);
        assert_relative_eq!(m.a[0][1], -500.0, max_relative = 1e-12);
        assert_relative_eq!(m.a[1][0], 1e6, max_relative = 1e-12);
        assert_eq!(m.a[1][1], 0.0);
    }

    #[test]
    fn rejects_bad_lc() {
        assert!(healthy_matrix(&line(1.0, 0.0, 1.0)).is_err());
        assert!(healthy_matrix(&line(1.0, 1.0, -1.0)).is_err());
        assert!(faulted_matrix(&line(0.0, 1.0, 1.0), 0.0).is_err());
        assert!(faulted_matrix(&line(1.0, 1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn faulted_equal_divider() {
        let m = faulted_matrix(&line(1.0, 1.0, 1.0), 1.0).unwrap();
        assert_eq!(m.a, [[-0.5, -1.0], [1.0, 0.0]]);
        assert_eq!(m.b, [0.5, 0.0]);
    }

    #[test]
    fn faulted_limits() {
        let p = line(0.5, 2e-3, 1e-6);
        let h = healthy_matrix(&p).unwrap();
        let f = faulted_matrix(&p, NO_FAULT_OHMS).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(f.a[i][j], h.a[i][j], max_relative = 1e-6);
            }
            assert_relative_eq!(f.b[i], h.b[i], max_relative = 1e-6);
        }
        let bolted = faulted_matrix(&p, 0.0).unwrap();
        assert_eq!(bolted.a[0][0], 0.0);
        assert_eq!(bolted.b[0], 0.0);
    }

    #[test]
    fn faulted_entry_monotone_in_w() {
        let p = line(0.8, 5e-3, 2e-5);
        let mut prev = faulted_matrix(&p, 0.0).unwrap().a[0][0];
        let lim = healthy_matrix(&p).unwrap().a[0][0];
        for k in 0..200 {
            let w = 1e-3 * 1.2f64.powi(k);
            let a00 = faulted_matrix(&p, w).unwrap().a[0][0];
            assert!(a00 <= prev + 1e-12, "not monotone at w={w}");
            assert!(a00 >= lim - 1e-9);
            prev = a00;
        }
    }

    #[test]
    fn closed_form_examples() {
        let lossless = StateMatrix2 {
            a: [[0.0, -1.0], [1.0, 0.0]],
            b: [1.0, 0.0],
        };
        let e = eigenvalues_closed_form(&lossless);
        assert_eq!(e.lambda_plus, Complex64::new(0.0, 1.0));
        assert_eq!(e.lambda_minus, Complex64::new(0.0, -1.0));

        let unit = healthy_matrix(&line(1.0, 1.0, 1.0)).unwrap();
        let e = eigenvalues_closed_form(&unit);
        assert_relative_eq!(e.lambda_plus.re, -0.5, epsilon = 1e-12);
        assert_relative_eq!(e.lambda_plus.im, 0.866_025_403_784_438_6, epsilon = 1e-12);

        // λ² + 250λ + 5e8 = 0 → -125 ± j sqrt(5e8 - 125²)
        let m = healthy_matrix(&line(0.5, 2e-3, 1e-6)).unwrap();
        let e = eigenvalues_closed_form(&m);
        assert_relative_eq!(e.lambda_minus.re, -125.0, max_relative = 1e-12);
        assert_relative_eq!(e.lambda_minus.im, -22_360.330_386_646_794, max_relative = 1e-10);
    }

    #[test]
    fn real_roots_are_stable() {
        // Overdamped with widely separated roots: λ² + 1e8 λ + 1 = 0
        let e = eigen_from_trace_det(-1e8, 1.0);
        assert_relative_eq!(e.lambda_plus.re, -1e-8, max_relative = 1e-12);
        assert_relative_eq!(e.lambda_minus.re, -1e8, max_relative = 1e-12);
        let zero = eigen_from_trace_det(0.0, 0.0);
        assert_eq!(zero.lambda_plus, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn healthy_det_independent_of_r() {
        for r in [0.0, 0.1, 3.0, 70.0] {
            let p = line(r, 4e-3, 3e-5);
            let m = healthy_matrix(&p).unwrap();
            assert_relative_eq!(m.det(), 1.0 / (p.l_series * p.c_shunt), max_relative = 1e-14);
        }
    }

    #[test]
    fn polar_angle_range() {
        assert_eq!(angle_deg(Complex64::new(-1.0, -0.0)), 180.0);
        assert_eq!(angle_deg(Complex64::new(-1.0, 0.0)), 180.0);
        assert_relative_eq!(angle_deg(Complex64::new(0.0, -11.0)), -90.0);
        let p = Polar::of(Complex64::new(-12.36, -78.03));
        assert!((p.angle_deg + 99.0).abs() < 0.1);
    }
}
