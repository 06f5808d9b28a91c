use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::FieldWaveform;

/// Non-singular Coulomb-like well `V(x) = -1/√(x² + a²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoftCorePotential {
    pub a_squared: f64,
}

impl Default for SoftCorePotential {
    fn default() -> Self {
        Self { a_squared: 2.0 }
    }
}

/// Half-width of the barrier scan.
const SCAN_HALF_WIDTH: f64 = 200.0;
const SCAN_STEP: f64 = 0.05;
const GOLDEN_TOL: f64 = 1e-8;

impl SoftCorePotential {
    pub fn new(a_squared: f64) -> Result<Self> {
        if !(a_squared.is_finite() && a_squared > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "softening a² must be positive, got {a_squared}"
            )));
        }
        Ok(Self { a_squared })
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        -1.0 / (x * x + self.a_squared).sqrt()
    }

    /// `U(x) = V(x) + x F` for a frozen field value.
    pub fn effective_potential(&self, field: f64) -> impl Fn(f64) -> f64 + Copy {
        let p = *self;
        move |x| p.evaluate(x) + x * field
    }

    /// Height and position of the field-induced barrier on the downhill side.
    ///
    /// Dense scan of `U` over the downhill half of `|x| <= 200`, then
    /// golden-section refinement around the best sample. For `F = 0` there is
    /// no barrier and the asymptote `U → 0` is returned.
    pub fn barrier_maximum(&self, field: f64) -> (f64, f64) {
        if field == 0.0 {
            return (f64::INFINITY, 0.0);
        }
        let u = self.effective_potential(field);
        // Downhill side is x < 0 for F > 0.
        let dir = -field.signum();
        let n = (SCAN_HALF_WIDTH / SCAN_STEP).round() as usize;
        let mut best = (0.0, u(0.0));
        for i in 1..=n {
            let x = dir * i as f64 * SCAN_STEP;
            let val = u(x);
            if val > best.1 {
                best = (x, val);
            }
        }
        let lo = (best.0 - SCAN_STEP).min(best.0 + SCAN_STEP);
        let hi = (best.0 - SCAN_STEP).max(best.0 + SCAN_STEP);
        let x = golden_section_max(u, lo, hi, GOLDEN_TOL);
        let (x, val) = if u(x) >= best.1 { (x, u(x)) } else { best };
        (x, val)
    }

    pub fn barrier_height(&self, field: f64) -> f64 {
        self.barrier_maximum(field).1
    }

    /// Smallest `|F|` whose barrier drops to `binding_energy` (bisection).
    pub fn critical_field(&self, binding_energy: f64) -> Result<f64> {
        if binding_energy >= 0.0 {
            return Err(Error::InvalidParameter(
                "binding energy must be negative".into(),
            ));
        }
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.barrier_height(hi) > binding_energy {
            hi *= 2.0;
            if hi > 1e6 {
                return Err(Error::InvalidParameter(
                    "binding energy below the bottom of the well".into(),
                ));
            }
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if self.barrier_height(mid) > binding_energy {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// A closed time interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Time intervals during which the barrier sits below `binding_energy`,
/// i.e. `|F(t)|` exceeds the critical field.
pub fn over_barrier_times(
    pulse: &FieldWaveform,
    potential: &SoftCorePotential,
    binding_energy: f64,
) -> Result<Vec<Interval>> {
    let critical = potential.critical_field(binding_energy)?;
    let times = pulse.times();
    let mut out = Vec::new();
    let mut open: Option<f64> = None;
    let mut last = 0.0;
    for (t, v) in times.iter().zip(&pulse.values) {
        if v.abs() > critical {
            if open.is_none() {
                open = Some(*t);
            }
            last = *t;
        } else if let Some(start) = open.take() {
            out.push(Interval { start, end: last });
        }
    }
    if let Some(start) = open {
        out.push(Interval { start, end: last });
    }
    Ok(out)
}
