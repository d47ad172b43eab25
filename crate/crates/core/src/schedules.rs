//! Inverse-temperature schedules beta(t) and their classification against
//! the critical logarithmic rate c* = 1 / dE_max.

use crate::error::{Error, Result};

/// Time law of the inverse temperature. All variants are validated at
/// construction and non-decreasing in t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Constant { beta0: f64 },
    /// beta(t) = c ln(t + k), with k > 1 so that beta(0) > 0.
    Logarithmic { c: f64, k: f64 },
    /// beta(t) = beta0 (1 + t)^p.
    Power { beta0: f64, exponent: f64 },
    /// Half-cosine ramp from beta_start to beta_end over [0, horizon],
    /// clamped at beta_end afterwards.
    Cosine {
        beta_start: f64,
        beta_end: f64,
        horizon: f64,
    },
}

impl Schedule {
    pub fn constant(beta0: f64) -> Result<Self> {
        if !(beta0 > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "constant schedule needs beta0 > 0, got {beta0}"
            )));
        }
        Ok(Self::Constant { beta0 })
    }

    pub fn logarithmic(c: f64, k: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "logarithmic schedule needs c > 0, got {c}"
            )));
        }
        if !(k > 1.0) {
            return Err(Error::InvalidSchedule(format!(
                "logarithmic schedule needs k > 1 so beta(0) > 0, got {k}"
            )));
        }
        Ok(Self::Logarithmic { c, k })
    }

    pub fn power(beta0: f64, exponent: f64) -> Result<Self> {
        if !(beta0 > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "power schedule needs beta0 > 0, got {beta0}"
            )));
        }
        if !(exponent > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "power schedule needs a positive exponent, got {exponent}"
            )));
        }
        Ok(Self::Power { beta0, exponent })
    }

    pub fn cosine(beta_start: f64, beta_end: f64, horizon: f64) -> Result<Self> {
        if !(beta_start > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "cosine schedule needs beta_start > 0, got {beta_start}"
            )));
        }
        if beta_end < beta_start {
            return Err(Error::InvalidSchedule(format!(
                "cosine schedule anneals beta upward: beta_end {beta_end} < beta_start {beta_start}"
            )));
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "cosine schedule needs a positive horizon, got {horizon}"
            )));
        }
        Ok(Self::Cosine {
            beta_start,
            beta_end,
            horizon,
        })
    }

    /// beta(t) for t >= 0. Always positive; non-decreasing in t.
    pub fn beta_at(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match *self {
            Self::Constant { beta0 } => beta0,
            Self::Logarithmic { c, k } => c * (t + k).ln(),
            Self::Power { beta0, exponent } => beta0 * (1.0 + t).powf(exponent),
            Self::Cosine {
                beta_start,
                beta_end,
                horizon,
            } => {
                if t >= horizon {
                    beta_end
                } else {
                    let ramp = 0.5 * (1.0 - (std::f64::consts::PI * t / horizon).cos());
                    beta_start + (beta_end - beta_start) * ramp
                }
            }
        }
    }
}

/// The critical logarithmic rate c* = 1 / dE_max determined by the largest
/// escape barrier of the landscape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalRate {
    delta_e_max: f64,
    c_star: f64,
}

impl CriticalRate {
    pub fn from_barrier(delta_e_max: f64) -> Result<Self> {
        if !(delta_e_max > 0.0) || !delta_e_max.is_finite() {
            return Err(Error::InvalidSchedule(format!(
                "dE_max must be positive and finite, got {delta_e_max}"
            )));
        }
        Ok(Self {
            delta_e_max,
            c_star: 1.0 / delta_e_max,
        })
    }

    pub fn delta_e_max(&self) -> f64 {
        self.delta_e_max
    }

    pub fn c_star(&self) -> f64 {
        self.c_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleClass {
    Subcritical,
    Critical,
    Supercritical,
    NonLogarithmic,
}

impl ScheduleClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Subcritical => "subcritical",
            Self::Critical => "critical",
            Self::Supercritical => "supercritical",
            Self::NonLogarithmic => "non-logarithmic",
        }
    }
}

/// Hajek-style classification: logarithmic schedules compare their rate c to
/// c* (equality within 1e-12); every other variant is non-logarithmic.
pub fn classify_schedule(s: &Schedule, critical: &CriticalRate) -> ScheduleClass {
    match *s {
        Schedule::Logarithmic { c, .. } => {
            if (c - critical.c_star()).abs() <= 1e-12 {
                ScheduleClass::Critical
            } else if c < critical.c_star() {
                ScheduleClass::Subcritical
            } else {
                ScheduleClass::Supercritical
            }
        }
        _ => ScheduleClass::NonLogarithmic,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn beta_at_examples() {
        let s = Schedule::logarithmic(2.0, 1.0001).unwrap();
        assert_abs_diff_eq!(
            s.beta_at(std::f64::consts::E - 1.0001),
            2.0,
            epsilon = 1e-12
        );
        let c = Schedule::constant(4.0).unwrap();
        assert_eq!(c.beta_at(0.0), 4.0);
        assert_eq!(c.beta_at(1e9), 4.0);
        let l = Schedule::logarithmic(0.5, 2.0).unwrap();
        assert_abs_diff_eq!(l.beta_at(98.0), 0.5 * 100.0_f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(Schedule::constant(0.0).is_err());
        assert!(Schedule::logarithmic(0.0, 2.0).is_err());
        assert!(Schedule::logarithmic(1.0, 1.0).is_err());
        assert!(Schedule::logarithmic(1.0, 0.5).is_err());
        assert!(Schedule::power(1.0, 0.0).is_err());
        assert!(Schedule::cosine(2.0, 1.0, 10.0).is_err());
        assert!(Schedule::cosine(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn schedules_are_non_decreasing_and_positive() {
        let schedules = [
            Schedule::constant(3.0).unwrap(),
            Schedule::logarithmic(0.7, 1.5).unwrap(),
            Schedule::power(0.4, 0.5).unwrap(),
            Schedule::cosine(1.0, 9.0, 100.0).unwrap(),
        ];
        for s in &schedules {
            let mut prev = 0.0;
            for i in 0..200 {
                let t = i as f64 * 2.5;
                let b = s.beta_at(t);
                assert!(b > 0.0);
                assert!(b >= prev - 1e-12, "{s:?} decreased at t = {t}");
                prev = b;
            }
        }
    }

    #[test]
    fn logarithmic_schedules_diverge() {
        let s = Schedule::logarithmic(0.8, 2.0).unwrap();
        for &m in &[5.0_f64, 20.0, 80.0] {
            // Solve beta(t) = m exactly and step just past it.
            let t = (m / 0.8).exp() - 2.0;
            assert!(s.beta_at(t * 1.01 + 1.0) > m);
        }
    }

    #[test]
    fn classification_examples() {
        let c_star = CriticalRate::from_barrier(2.0).unwrap();
        assert_eq!(c_star.c_star(), 0.5);
        let sub = Schedule::logarithmic(0.25, 2.0).unwrap();
        let crit = Schedule::logarithmic(0.5, 2.0).unwrap();
        let sup = Schedule::logarithmic(1.5, 2.0).unwrap();
        assert_eq!(classify_schedule(&sub, &c_star), ScheduleClass::Subcritical);
        assert_eq!(classify_schedule(&crit, &c_star), ScheduleClass::Critical);
        assert_eq!(classify_schedule(&sup, &c_star), ScheduleClass::Supercritical);
        let flat = Schedule::constant(1.0).unwrap();
        assert_eq!(
            classify_schedule(&flat, &c_star),
            ScheduleClass::NonLogarithmic
        );
    }

    #[test]
    fn critical_rate_validation() {
        assert!(CriticalRate::from_barrier(0.0).is_err());
        assert!(CriticalRate::from_barrier(f64::INFINITY).is_err());
        assert!(CriticalRate::from_barrier(-1.0).is_err());
    }
}
