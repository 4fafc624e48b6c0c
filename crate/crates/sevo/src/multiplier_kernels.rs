//! Fourier-side propagators of the damped linear mode equation
//!
//! Each radial frequency rho = |xi| of the linear equation
//! `w_tt + (-Delta)^sigma w_t + (-Delta)^sigma w = 0` evolves
//! independently by the scalar ODE
//!
//! ```text
//!     y'' + a y' + a y = 0,        a = rho^{2 sigma},
//! ```
//!
//! with characteristic roots `lambda_{1,2} = (-a ± sqrt(a^2 - 4a)) / 2`.
//! The mode propagators are the divided differences
//!
//! ```text
//!     K0(t) = (l1 e^{l2 t} - l2 e^{l1 t}) / (l1 - l2)    K0(0) = 1, K0'(0) = 0
//!     K1(t) = (e^{l1 t} - e^{l2 t}) / (l1 - l2)          K1(0) = 0, K1'(0) = 1
//! ```
//!
//! so that `y(t) = K0(t) y(0) + K1(t) y'(0)`. Everything here is real
//! arithmetic: the oscillatory regime a < 4 uses the trigonometric form,
//! the overdamped regime a >= 4 a `phi1`-based form that stays finite
//! through the double root a = 4 and switches to explicit exponentials
//! once the root gap makes them safe. [`int_k1`] integrates K1 exactly
//! over a step — the quantity the frozen-nonlinearity integrator needs —
//! and [`cutoff_chi`] is the smooth low-frequency cutoff used by the
//! decay estimates.

use num_complex::Complex64;
use serde::Serialize;

/// Characteristic roots of one Fourier mode, ordered so that in the
/// oscillatory regime `lambda1` carries the positive imaginary part, and
/// in the overdamped regime `lambda1 >= lambda2` (lambda1 is the slow
/// root tending to -1, lambda2 the fast root tending to -rho^{2 sigma}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RootPair {
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

/// Characteristic roots at radial frequency `rho >= 0`.
///
/// The overdamped branch computes the large root from the stable
/// expression `(-a - d)/2` and recovers the small one through Vieta's
/// product `lambda1 lambda2 = a`, avoiding the cancellation in
/// `(-a + d)/2` for large a.
pub fn char_roots(rho: f64, sigma: f64) -> RootPair {
    let a = rho.powf(2.0 * sigma);
    if a == 0.0 {
        let zero = Complex64::new(0.0, 0.0);
        return RootPair {
            lambda1: zero,
            lambda2: zero,
        };
    }
    if a < 4.0 {
        let b = (a * (4.0 - a)).sqrt() / 2.0;
        let mu = -a / 2.0;
        RootPair {
            lambda1: Complex64::new(mu, b),
            lambda2: Complex64::new(mu, -b),
        }
    } else {
        let d = (a * (a - 4.0)).sqrt();
        let l2 = (-a - d) / 2.0;
        let l1 = a / l2;
        RootPair {
            lambda1: Complex64::new(l1, 0.0),
            lambda2: Complex64::new(l2, 0.0),
        }
    }
}

/// Leading small-frequency behavior of the roots:
/// `-rho^{2 sigma}/2 ± i rho^sigma`.
///
/// The real part is exact (it is -a/2 for every a < 4); the imaginary
/// part sqrt(a(4-a))/2 deviates from rho^sigma by a relative a/8, i.e.
/// an absolute rho^{3 sigma}/8 as rho -> 0.
pub fn small_freq_reference(rho: f64, sigma: f64) -> RootPair {
    let a = rho.powf(2.0 * sigma);
    let om = rho.powf(sigma);
    RootPair {
        lambda1: Complex64::new(-a / 2.0, om),
        lambda2: Complex64::new(-a / 2.0, -om),
    }
}

/// Leading large-frequency behavior of the roots: `lambda1 ~ -1`,
/// `lambda2 ~ -rho^{2 sigma}`, each with relative error O(rho^{-2 sigma}).
pub fn large_freq_reference(rho: f64, sigma: f64) -> RootPair {
    let a = rho.powf(2.0 * sigma);
    RootPair {
        lambda1: Complex64::new(-1.0, 0.0),
        lambda2: Complex64::new(-a, 0.0),
    }
}

/// Propagator values of one mode at one time: `(k0, k1, k0dot, k1dot)`.
///
/// `k0dot = -a k1` holds identically (Vieta), and `k1dot` is the time
/// derivative of `k1`; both are needed to advance `(w, w_t)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEval {
    pub k0: f64,
    pub k1: f64,
    pub k0dot: f64,
    pub k1dot: f64,
}

impl KernelEval {
    pub fn as_tuple(&self) -> (f64, f64, f64, f64) {
        (self.k0, self.k1, self.k0dot, self.k1dot)
    }
}

/// phi1(z) = (e^z - 1)/z, the first phi-function of exponential
/// integrators, with the Taylor fallback 1 + z/2 + z^2/6 + z^3/24 for
/// |z| < 1e-4 so the removable singularity at z = 0 (double root) costs
/// no accuracy.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        z.exp_m1() / z
    }
}

/// sin(b t)/b, evaluated as t sinc(b t) when b t is tiny.
fn sin_over(b: f64, t: f64) -> f64 {
    let z = b * t;
    if z.abs() < 1e-8 {
        t * (1.0 - z * z / 6.0)
    } else {
        (z).sin() / b
    }
}

/// Evaluates the mode propagators at time `t >= 0`, frequency `rho >= 0`.
///
/// Branches:
/// * `t = 0`: exactly (1, 0, 0, 1).
/// * `a = 0` (rho = 0): the double root at zero gives K0 = 1, K1 = t.
/// * `a < 4`: with mu = -a/2, b = sqrt(a(4-a))/2,
///   `k1 = e^{mu t} sin(bt)/b`, `k0 = e^{mu t}(cos bt + (a/2) sin(bt)/b)`,
///   `k1dot = e^{mu t}(cos bt - (a/2) sin(bt)/b)`.
/// * `a >= 4`: with d = l1 - l2 = sqrt(a(a-4)) and z = d t,
///   `k1 = e^{l2 t} t phi1(z)`, `k0 = e^{l2 t}(1 - l2 t phi1(z))`,
///   `k1dot = e^{l2 t}(1 + l1 t phi1(z))`, switching to the explicit
///   two-exponential form once z > 30 (e^{l2 t} underflows harmlessly,
///   and phi1 would overflow long before z reaches 709).
pub fn kernel_eval(t: f64, rho: f64, sigma: f64) -> KernelEval {
    let a = rho.powf(2.0 * sigma);
    if t == 0.0 {
        return KernelEval {
            k0: 1.0,
            k1: 0.0,
            k0dot: 0.0,
            k1dot: 1.0,
        };
    }
    if a == 0.0 {
        return KernelEval {
            k0: 1.0,
            k1: t,
            k0dot: 0.0,
            k1dot: 1.0,
        };
    }
    let (k0, k1, k1dot);
    if a < 4.0 {
        let mu = -a / 2.0;
        let b = (a * (4.0 - a)).sqrt() / 2.0;
        let e = (mu * t).exp();
        let c = (b * t).cos();
        let s = sin_over(b, t);
        k1 = e * s;
        k0 = e * (c + 0.5 * a * s);
        k1dot = e * (c - 0.5 * a * s);
    } else {
        let d = (a * (a - 4.0)).sqrt();
        let l2 = (-a - d) / 2.0;
        let l1 = a / l2;
        if d * t > 30.0 {
            let e1 = (l1 * t).exp();
            let e2 = (l2 * t).exp();
            k1 = (e1 - e2) / d;
            k0 = (l1 * e2 - l2 * e1) / d;
            k1dot = (l1 * e1 - l2 * e2) / d;
        } else {
            let e2 = (l2 * t).exp();
            let tp = t * phi1(d * t);
            k1 = e2 * tp;
            k0 = e2 * (1.0 - l2 * tp);
            k1dot = e2 * (1.0 + l1 * tp);
        }
    }
    KernelEval {
        k0,
        k1,
        k0dot: -a * k1,
        k1dot,
    }
}

/// Exact step integral `int_0^h K1(s) ds`.
///
/// For a h >= 0.05 the ODE gives it in closed form: integrating
/// `K1'' + a K1' + a K1 = 0` over [0, h] yields
/// `I1 = (1 - K1'(h))/a - K1(h)`. For smaller a h that expression
/// cancels at relative accuracy eps/(a h), so the Taylor series of K1
/// (coefficients from the ODE recurrence, sixteen terms) is integrated
/// instead; its terms shrink like (sqrt(a) h)^j / j!.
pub fn int_k1(h: f64, rho: f64, sigma: f64) -> f64 {
    let a = rho.powf(2.0 * sigma);
    if h == 0.0 {
        return 0.0;
    }
    if a == 0.0 {
        return h * h / 2.0; // K1 = t at the zero mode
    }
    if a * h < 0.05 {
        // K1 = sum c_j t^j with c0 = 0, c1 = 1 and
        // (j+2)(j+1) c_{j+2} + a (j+1) c_{j+1} + a c_j = 0.
        let mut c = [0.0f64; 18];
        c[1] = 1.0;
        for j in 0..16 {
            let jf = j as f64;
            c[j + 2] = -a * ((jf + 1.0) * c[j + 1] + c[j]) / ((jf + 2.0) * (jf + 1.0));
        }
        let mut acc = 0.0;
        let mut hpow = h; // h^{j} running power, starts at j = 1
        for (j, cj) in c.iter().enumerate().skip(1) {
            hpow *= h;
            acc += cj * hpow / (j as f64 + 1.0); // c_j h^{j+1}/(j+1)
        }
        acc
    } else {
        let kv = kernel_eval(h, rho, sigma);
        (1.0 - kv.k1dot) / a - kv.k1
    }
}

/// Inner radius of the low-frequency cutoff: chi = 1 on [0, rho0] with
/// rho0 = 2^{1/sigma}/4, a quarter of the double-root radius, so the
/// taper support [rho0, 2 rho0] stays strictly inside the oscillatory
/// regime.
pub fn chi_inner_radius(sigma: f64) -> f64 {
    2.0f64.powf(1.0 / sigma) / 4.0
}

/// Smooth low-frequency cutoff: 1 on [0, rho0], 0 on [2 rho0, inf), and
/// the raised-cosine taper (1 + cos(pi (rho - rho0)/rho0))/2 between.
pub fn cutoff_chi(rho: f64, sigma: f64) -> f64 {
    let rho0 = chi_inner_radius(sigma);
    if rho <= rho0 {
        1.0
    } else if rho >= 2.0 * rho0 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (rho - rho0) / rho0).cos())
    }
}

/// Propagator values tabulated over a frequency grid at a fixed step, as
/// consumed by the time steppers: one [`kernel_eval`] row plus the step
/// integral of K1 per frequency.
#[derive(Debug, Clone)]
pub struct KernelTables {
    pub h: f64,
    pub k0: Vec<f64>,
    pub k1: Vec<f64>,
    pub k0dot: Vec<f64>,
    pub k1dot: Vec<f64>,
    pub i1: Vec<f64>,
}

impl KernelTables {
    pub fn new(rhos: &[f64], sigma: f64, h: f64) -> Self {
        let n = rhos.len();
        let mut t = KernelTables {
            h,
            k0: Vec::with_capacity(n),
            k1: Vec::with_capacity(n),
            k0dot: Vec::with_capacity(n),
            k1dot: Vec::with_capacity(n),
            i1: Vec::with_capacity(n),
        };
        for &rho in rhos {
            let kv = kernel_eval(h, rho, sigma);
            t.k0.push(kv.k0);
            t.k1.push(kv.k1);
            t.k0dot.push(kv.k0dot);
            t.k1dot.push(kv.k1dot);
            t.i1.push(int_k1(h, rho, sigma));
        }
        t
    }
}
