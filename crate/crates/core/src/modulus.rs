//! Regular moduli of continuity `ω : [0, 1] → [0, ∞)`.

use crate::error::{Error, Result};

const GRID: usize = 4096;

/// A validated regular modulus: `ω(0) = 0`, `ω(1) = 1`, `ω` nondecreasing and
/// `ω(t)/t` nonincreasing on `(0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum RegularModulus {
    /// `ω(t) = t^γ`, `0 < γ <= 1`.
    Power { gamma: f64 },
    /// Piecewise linear through `(t_i, ω_i)`.
    Tabulated { ts: Vec<f64>, ws: Vec<f64> },
}

impl RegularModulus {
    pub fn power(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidModulus("exponent must be finite".into()));
        }
        if gamma <= 0.0 {
            return Err(Error::InvalidModulus(
                "omega(0) = 0 and omega increasing require a positive exponent".into(),
            ));
        }
        if gamma > 1.0 {
            return Err(Error::InvalidModulus(format!(
                "omega(t)/t must be decreasing on (0,1], violated by t^{gamma}"
            )));
        }
        Ok(RegularModulus::Power { gamma })
    }

    pub fn lipschitz() -> Self {
        RegularModulus::Power { gamma: 1.0 }
    }

    pub fn tabulated(ts: Vec<f64>, ws: Vec<f64>) -> Result<Self> {
        if ts.len() != ws.len() || ts.len() < 2 {
            return Err(Error::InvalidModulus(
                "table needs at least two (t, omega) samples of equal length".into(),
            ));
        }
        if ts.iter().chain(&ws).any(|v| !v.is_finite()) {
            return Err(Error::InvalidModulus("table entries must be finite".into()));
        }
        if ts[0] != 0.0 || *ts.last().unwrap() != 1.0 || ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidModulus(
                "sample abscissae must increase strictly from 0 to 1".into(),
            ));
        }
        if ws[0] != 0.0 {
            return Err(Error::InvalidModulus("omega(0) must be 0".into()));
        }
        if (ws.last().unwrap() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModulus(format!(
                "omega(1) must be 1, got {}",
                ws.last().unwrap()
            )));
        }
        if ws.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidModulus("omega must be increasing".into()));
        }
        let m = RegularModulus::Tabulated { ts, ws };
        let mut prev = f64::INFINITY;
        let mut probe: Vec<f64> = (1..=GRID).map(|i| i as f64 / GRID as f64).collect();
        if let RegularModulus::Tabulated { ts, .. } = &m {
            probe.extend(ts.iter().copied().filter(|&t| t > 0.0));
        }
        probe.sort_by(f64::total_cmp);
        for t in probe {
            let r = m.eval(t) / t;
            if r > prev * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::InvalidModulus(format!(
                    "omega(t)/t must be decreasing on (0,1], violated near t = {t}"
                )));
            }
            prev = r;
        }
        Ok(m)
    }

    /// `ω(t)` for `t` in `[0, 1]`; arguments are clamped to that interval.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            RegularModulus::Power { gamma } => t.powf(*gamma),
            RegularModulus::Tabulated { ts, ws } => {
                let k = ts.partition_point(|&s| s <= t).clamp(1, ts.len() - 1);
                let (t0, t1) = (ts[k - 1], ts[k]);
                ws[k - 1] + (ws[k] - ws[k - 1]) * (t - t0) / (t1 - t0)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_moduli() {
        assert!(RegularModulus::power(0.5).is_ok());
        let err = RegularModulus::power(2.0).unwrap_err();
        assert!(err.to_string().contains("omega(t)/t must be decreasing"));
        assert!(RegularModulus::power(0.0).is_err());
    }

    #[test]
    fn tables() {
        let e = RegularModulus::tabulated(vec![0.0, 1.0], vec![0.0, 0.5]).unwrap_err();
        assert!(e.to_string().contains("omega(1) must be 1"));
        let e = RegularModulus::tabulated(vec![0.0, 0.25, 0.5, 1.0], vec![0.0, 0.8, 0.6, 1.0]).unwrap_err();
        assert!(e.to_string().contains("increasing"));
        // convex piece: ω(t)/t increases
        let e = RegularModulus::tabulated(vec![0.0, 0.5, 1.0], vec![0.0, 0.1, 1.0]).unwrap_err();
        assert!(e.to_string().contains("omega(t)/t"));
        let ok = RegularModulus::tabulated(vec![0.0, 0.25, 1.0], vec![0.0, 0.5, 1.0]).unwrap();
        assert!((ok.eval(0.125) - 0.25).abs() < 1e-15);
        assert!((ok.eval(1.0) - 1.0).abs() < 1e-15);
    }
}
