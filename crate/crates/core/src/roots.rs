//! Newton iteration for analytic complex functions.
//!
//! The derivative is a central difference along the real axis (valid for any
//! holomorphic target). A step that fails to reduce |f| is replaced by a
//! secant step through the previous iterate and halved until it does.

use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Target for |f|; callers pass functions already scaled to be relative.
    pub residual_tol: f64,
    /// Relative finite-difference step for the derivative.
    pub diff_step: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            residual_tol: 1e-12,
            diff_step: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub z: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoConvergence {
    pub last: Complex64,
    pub residual: f64,
    pub iterations: usize,
}

/// `f` returns `None` outside its domain; the solver treats that as a bad step.
pub fn newton<F>(f: F, seed: Complex64, opts: &NewtonOptions) -> Result<Root, NoConvergence>
where
    F: Fn(Complex64) -> Option<Complex64>,
{
    let eval = |z: Complex64| f(z).filter(|v| v.is_finite());
    let mut z = seed;
    let mut fz = match eval(z) {
        Some(v) => v,
        None => {
            return Err(NoConvergence {
                last: z,
                residual: f64::INFINITY,
                iterations: 0,
            })
        }
    };
    let mut prev: Option<(Complex64, Complex64)> = None;

    for it in 0..opts.max_iterations {
        if fz.norm() <= opts.residual_tol {
            return Ok(Root {
                z,
                residual: fz.norm(),
                iterations: it,
            });
        }

        let h = opts.diff_step * z.norm().max(1e-300);
        let derivative = match (eval(z + h), eval(z - h)) {
            (Some(a), Some(b)) => (a - b) / (2.0 * h),
            _ => Complex64::new(f64::NAN, 0.0),
        };
        let newton_step = fz / derivative;
        let secant_step = prev.and_then(|(zp, fp)| {
            let s = fz * (z - zp) / (fz - fp);
            s.is_finite().then_some(s)
        });

        let mut accepted = None;
        for step in [Some(newton_step), secant_step].into_iter().flatten() {
            if !step.is_finite() {
                continue;
            }
            let mut damping = 1.0;
            for _ in 0..40 {
                let candidate = z - step * damping;
                if let Some(fc) = eval(candidate) {
                    if fc.norm() < fz.norm() {
                        accepted = Some((candidate, fc));
                        break;
                    }
                }
                damping *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }

        match accepted {
            Some((zn, fzn)) => {
                let moved = (zn - z).norm();
                prev = Some((z, fz));
                z = zn;
                fz = fzn;
                // roundoff floor: nothing left to gain and already tight
                if moved <= 1e-15 * z.norm() && fz.norm() <= 1e3 * opts.residual_tol {
                    return Ok(Root {
                        z,
                        residual: fz.norm(),
                        iterations: it + 1,
                    });
                }
            }
            None => {
                if fz.norm() <= 1e3 * opts.residual_tol {
                    return Ok(Root {
                        z,
                        residual: fz.norm(),
                        iterations: it + 1,
                    });
                }
                return Err(NoConvergence {
                    last: z,
                    residual: fz.norm(),
                    iterations: it + 1,
                });
            }
        }
    }

    if fz.norm() <= opts.residual_tol {
        Ok(Root {
            z,
            residual: fz.norm(),
            iterations: opts.max_iterations,
        })
    } else {
        Err(NoConvergence {
            last: z,
            residual: fz.norm(),
            iterations: opts.max_iterations,
        })
    }
}
