//! Globally adaptive Gauss–Kronrod (7/15) quadrature for complex integrands.

use num_complex::Complex64;
use thiserror::Error;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Error, Clone, PartialEq)]
#[error("quadrature did not converge: estimate {estimate} with error {error:e} after {intervals} intervals")]
pub struct QuadratureError {
    pub estimate: Complex64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-10,
            rel: 1e-9,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

/// ∫ₐᵇ f(x) dx, bisecting the worst panel until the summed error estimate is
/// below max(abs, rel·|I|).
pub fn integrate<F>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<Integral, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    if a == b {
        return Ok(Integral {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            intervals: 0,
        });
    }
    let (value, error) = gk15(&f, a, b);
    let mut panels = vec![Panel { a, b, value, error }];

    loop {
        let total: Complex64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        if !total.is_finite() {
            return Err(QuadratureError {
                estimate: total,
                error: err,
                intervals: panels.len(),
            });
        }
        if err <= tol.abs.max(tol.rel * total.norm()) {
            return Ok(Integral {
                value: total,
                error: err,
                intervals: panels.len(),
            });
        }
        if panels.len() >= tol.max_intervals {
            return Err(QuadratureError {
                estimate: total,
                error: err,
                intervals: panels.len(),
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .expect("at least one panel");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        for (lo, hi) in [(p.a, mid), (mid, p.b)] {
            let (value, error) = gk15(&f, lo, hi);
            panels.push(Panel {
                a: lo,
                b: hi,
                value,
                error,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        // degree 20 is beyond Gauss-7 but the adaptive loop resolves it
        let r = integrate(|x| Complex64::new(x.powi(20), 0.0), 0.0, 1.0, &Tolerance::default())
            .unwrap();
        assert!((r.value.re - 1.0 / 21.0).abs() < 1e-14);
    }

    #[test]
    fn complex_exponential() {
        let k = Complex64::new(-3.0, 7.0);
        let r = integrate(|x| (k * x).exp(), 0.0, 2.0, &Tolerance::default()).unwrap();
        let exact = ((k * 2.0).exp() - 1.0) / k;
        assert!((r.value - exact).norm() < 1e-12);
    }

    #[test]
    fn peaked_integrand_needs_subdivision() {
        let tol = Tolerance {
            abs: 1e-13,
            rel: 1e-12,
            ..Default::default()
        };
        let r = integrate(|x| Complex64::new(1.0 / (1e-4 + x * x), 0.0), -1.0, 1.0, &tol).unwrap();
        let exact = 2.0 / 1e-2 * (1.0f64 / 1e-2).atan();
        assert!((r.value.re - exact).abs() / exact < 1e-11);
        assert!(r.intervals > 1);
    }

    #[test]
    fn gives_up_with_estimate() {
        let tol = Tolerance {
            max_intervals: 3,
            abs: 0.0,
            rel: 1e-15,
        };
        let err = integrate(|x| Complex64::new((1.0 / (x + 1e-9)).sin(), 0.0), 0.0, 1.0, &tol)
            .unwrap_err();
        assert_eq!(err.intervals, 3);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let f = |x: f64| Complex64::new(x.cos(), x.sin());
        let a = integrate(f, 0.0, 1.0, &Tolerance::default()).unwrap().value;
        let b = integrate(f, 1.0, 0.0, &Tolerance::default()).unwrap().value;
        assert!((a + b).norm() < 1e-14);
    }
}
