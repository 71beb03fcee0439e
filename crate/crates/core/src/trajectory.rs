//! Transport reference trajectories.
//!
//! A trajectory carries the designed classical center q_c(t) from 0 to d over
//! [0, T] with vanishing velocity and acceleration at both ends, so the moving
//! trap leaves no residual excitation in the noiseless limit. The trap path
//! itself follows from the driven-oscillator relation
//! q_0(t) = q_c(t) + q_c''(t)/omega0^2.

use crate::error::{Error, Result};

/// Shape family of the reference trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ansatz {
    /// Fifth-order polynomial, fully determined by the boundary conditions.
    Poly5,
    /// Three-term cosine series, fully determined by the boundary conditions.
    Cosine3,
    /// Sixth-order polynomial with the leading coefficient `n6` (m/s^6) left
    /// free; reduces to `Poly5` at n6 = 0.
    Poly6 { n6: f64 },
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// Coefficients of P(s) = sum c_k s^k with s = t/T, so q(t) = d * P(s).
    Poly([f64; 7]),
    /// q(t) = d * (b0 + b1 cos(pi s) + b2 cos(3 pi s)).
    Cosine([f64; 3]),
}

/// An immutable reference trajectory on t in [0, T].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    ansatz: Ansatz,
    duration: f64,
    distance: f64,
    shape: Shape,
}

impl Trajectory {
    /// Fifth-order polynomial ansatz; q(t) = d (10 s^3 - 15 s^4 + 6 s^5).
    pub fn poly5(duration: f64, distance: f64) -> Result<Self> {
        Self::poly6(duration, distance, 0.0).map(|t| Trajectory { ansatz: Ansatz::Poly5, ..t })
    }

    /// Sixth-order polynomial with free leading coefficient `n6` in m/s^6.
    pub fn poly6(duration: f64, distance: f64, n6: f64) -> Result<Self> {
        check_duration(duration)?;
        if !n6.is_finite() {
            return Err(Error::invalid("n6", format!("must be finite, got {n6}")));
        }
        // Dimensionless leading coefficient of P(s): q = d P(t/T).
        let c6 = if distance == 0.0 { 0.0 } else { n6 * duration.powi(6) / distance };
        // Six boundary rows for c0..c5 with c6 pinned:
        //   P(0) = P'(0) = P''(0) = 0,  P(1) = 1,  P'(1) = P''(1) = 0.
        let a = [
            [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
            [0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
            [0.0, 0.0, 2.0, 6.0, 12.0, 20.0],
        ];
        let b = [0.0, 0.0, 0.0, 1.0 - c6, -6.0 * c6, -30.0 * c6];
        let low = solve6(a, b).ok_or_else(|| Error::invalid("boundary system", "singular"))?;
        let mut coeffs = [0.0; 7];
        coeffs[..6].copy_from_slice(&low);
        coeffs[6] = c6;
        Ok(Trajectory {
            ansatz: Ansatz::Poly6 { n6 },
            duration,
            distance,
            shape: Shape::Poly(coeffs),
        })
    }

    /// Cosine ansatz q(t) = d [b0 + b1 cos(pi t/T) + b2 cos(3 pi t/T)].
    pub fn cosine3(duration: f64, distance: f64) -> Result<Self> {
        check_duration(duration)?;
        // The sine terms of q' vanish at both ends automatically; the three
        // remaining conditions are q(0) = 0, q(T) = d, q''(0) = 0:
        //   b0 + b1 + b2 = 0,  b0 - b1 - b2 = 1,  b1 + 9 b2 = 0.
        let a = [
            [1.0, 1.0, 1.0, 0.0, 0.0, 0.0],
            [1.0, -1.0, -1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 9.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ];
        let b = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let sol = solve6(a, b).ok_or_else(|| Error::invalid("boundary system", "singular"))?;
        Ok(Trajectory {
            ansatz: Ansatz::Cosine3,
            duration,
            distance,
            shape: Shape::Cosine([sol[0], sol[1], sol[2]]),
        })
    }

    pub fn from_ansatz(ansatz: Ansatz, duration: f64, distance: f64) -> Result<Self> {
        match ansatz {
            Ansatz::Poly5 => Self::poly5(duration, distance),
            Ansatz::Cosine3 => Self::cosine3(duration, distance),
            Ansatz::Poly6 { n6 } => Self::poly6(duration, distance, n6),
        }
    }

    pub fn ansatz(&self) -> Ansatz {
        self.ansatz
    }

    /// Shuttling time T, s.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Shuttling distance d, m.
    pub fn distance(&self) -> f64 {
        self.distance
    }

    /// Dimensioned coefficients: beta_k (resp. n_k) in m/s^k for the
    /// polynomial families, the dimensionless (b0, b1, b2) for the cosines.
    pub fn coefficients(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Poly(c) => {
                let count = match self.ansatz {
                    Ansatz::Poly6 { .. } => 7,
                    _ => 6,
                };
                (0..count)
                    .map(|k| self.distance * c[k] / self.duration.powi(k as i32))
                    .collect()
            }
            Shape::Cosine(b) => b.to_vec(),
        }
    }

    /// q_c(t) or one of its first two derivatives (`order` 0, 1 or 2), in
    /// m, m/s or m/s^2. Evaluation is closed-form; t must lie in [0, T].
    pub fn eval(&self, t: f64, order: usize) -> Result<f64> {
        if order > 2 {
            return Err(Error::invalid("order", format!("supported orders are 0..=2, got {order}")));
        }
        if !(0.0..=self.duration).contains(&t) {
            return Err(Error::Domain(format!(
                "t = {t:e} outside the trajectory domain [0, {:e}]",
                self.duration
            )));
        }
        Ok(self.eval_unchecked(t, order))
    }

    /// Trap-center position q_0(t) = q_c(t) + q_c''(t)/omega0^2, m.
    pub fn trap_position(&self, t: f64, omega0: f64) -> Result<f64> {
        if !(omega0 > 0.0) {
            return Err(Error::invalid("omega0", format!("must be positive, got {omega0:e}")));
        }
        Ok(self.eval(t, 0)? + self.eval(t, 2)? / (omega0 * omega0))
    }

    /// Closed-form evaluation without the domain check, for integrators and
    /// quadrature callbacks that stay in [0, T] by construction (values a few
    /// ulp outside are extrapolated smoothly).
    pub(crate) fn eval_unchecked(&self, t: f64, order: usize) -> f64 {
        let s = t / self.duration;
        let scale = self.distance / self.duration.powi(order as i32);
        match &self.shape {
            Shape::Poly(c) => {
                let v = match order {
                    0 => horner(s, &[c[0], c[1], c[2], c[3], c[4], c[5], c[6]]),
                    1 => horner(
                        s,
                        &[c[1], 2.0 * c[2], 3.0 * c[3], 4.0 * c[4], 5.0 * c[5], 6.0 * c[6]],
                    ),
                    _ => horner(
                        s,
                        &[2.0 * c[2], 6.0 * c[3], 12.0 * c[4], 20.0 * c[5], 30.0 * c[6]],
                    ),
                };
                scale * v
            }
            Shape::Cosine(b) => {
                let pi = std::f64::consts::PI;
                let (p1, p3) = (pi * s, 3.0 * pi * s);
                let v = match order {
                    0 => b[0] + b[1] * p1.cos() + b[2] * p3.cos(),
                    1 => -pi * (b[1] * p1.sin() + 3.0 * b[2] * p3.sin()),
                    _ => -pi * pi * (b[1] * p1.cos() + 9.0 * b[2] * p3.cos()),
                };
                scale * v
            }
        }
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::invalid("duration", format!("must be positive, got {duration:e}")));
    }
    Ok(())
}

fn horner(x: f64, coeffs: &[f64]) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Gaussian elimination with partial pivoting on a fixed 6x6 system.
fn solve6(mut a: [[f64; 6]; 6], mut b: [f64; 6]) -> Option<[f64; 6]> {
    for col in 0..6 {
        let pivot = (col..6).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..6 {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..6 {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0; 6];
    for row in (0..6).rev() {
        let mut sum = b[row];
        for k in row + 1..6 {
            sum -= a[row][k] * x[k];
        }
        x[row] = sum / a[row][row];
    }
    Some(x)
}
