//! Regime tags over a `(p, β)` grid.

use std::io::{self, Write};

use marw::{ModelParams, Rational, Regime, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeCell {
    pub p: Rational,
    pub beta: Rational,
    pub regime: Regime,
    pub critical_p: f64,
}

/// `p = i/p_steps` for `i = 0..=p_steps` and `β = j·beta_max/beta_steps` for
/// `j = 0..=beta_steps`, classified in exact arithmetic.
pub fn regime_map(d: usize, p_steps: u32, beta_max: Rational, beta_steps: u32) -> Result<Vec<RegimeCell>> {
    if p_steps == 0 || beta_steps == 0 {
        return Err(marw::Error::InvalidConfig("grid resolution must be >= 1".into()));
    }
    let mut cells = Vec::with_capacity((p_steps as usize + 1) * (beta_steps as usize + 1));
    for j in 0..=beta_steps as i64 {
        let beta = Rational::new(j * beta_max.num, beta_steps as i64 * beta_max.den)?;
        for i in 0..=p_steps as i64 {
            let p = Rational::new(i, p_steps as i64)?;
            let params = ModelParams::from_rationals(d, p, beta)?;
            cells.push(RegimeCell { p, beta, regime: params.regime(), critical_p: params.critical_p() });
        }
    }
    Ok(cells)
}

pub fn write_regime_csv<W: Write>(mut out: W, cells: &[RegimeCell]) -> io::Result<()> {
    writeln!(out, "p,beta,regime,critical_p")?;
    for c in cells {
        writeln!(out, "{},{},{},{}", c.p.to_f64(), c.beta.to_f64(), c.regime, c.critical_p)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d1_boundary_is_tagged_critical() {
        // p_c(β) = (4β+3)/(4(β+1)): 3/4 at β = 0, 7/8 at β = 1
        let cells = regime_map(1, 8, Rational::new(1, 1).unwrap(), 1).unwrap();
        let at = |p: (i64, i64), b: i64| cells.iter().find(|c| c.p == Rational::new(p.0, p.1).unwrap() && c.beta.num == b).unwrap().regime;
        assert_eq!(at((3, 4), 0), Regime::Critical);
        assert_eq!(at((7, 8), 1), Regime::Critical);
        assert_eq!(at((5, 8), 0), Regime::Diffusive);
        assert_eq!(at((7, 8), 0), Regime::Superdiffusive);
    }
}
