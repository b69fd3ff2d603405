use crate::error::{Error, Result};

/// Normalized probability over momentum cells, with the momentum value at the
/// centre of each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumDistribution {
    probabilities: Vec<f64>,
    momenta: Vec<f64>,
}

impl MomentumDistribution {
    /// Normalizes non-negative `weights` to unit mass.
    pub fn from_weights(weights: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        if weights.len() != momenta.len() {
            return Err(Error::InvalidInput(format!(
                "{} weights for {} momentum cells",
                weights.len(),
                momenta.len()
            )));
        }
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty distribution".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidInput(
                "distribution weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("distribution has zero total mass".into()));
        }
        let probabilities = weights.into_iter().map(|w| w / total).collect();
        Ok(MomentumDistribution {
            probabilities,
            momenta,
        })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    /// Mean momentum `sum_i p_i P_i`.
    pub fn mean_momentum(&self) -> f64 {
        self.probabilities
            .iter()
            .zip(&self.momenta)
            .map(|(w, p)| w * p)
            .sum()
    }

    /// Renders `index<TAB>p<TAB>P` rows, one per cell.
    pub fn to_table(&self, index_label: &str, offset: i64) -> String {
        let mut out = format!("{index_label}\tp\tP\n");
        for (i, (w, p)) in self.probabilities.iter().zip(&self.momenta).enumerate() {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                i as i64 + offset,
                format_float(*p),
                format_float(*w)
            ));
        }
        out
    }
}

/// Shortest round-trip decimal for `x`, switching to exponent notation for
/// very small or very large magnitudes.
pub fn format_float(x: f64) -> String {
    let m = x.abs();
    if m == 0.0 || !m.is_finite() || (1e-4..1e16).contains(&m) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes() {
        let d = MomentumDistribution::from_weights(vec![1.0, 3.0], vec![-1.0, 1.0]).unwrap();
        assert_eq!(d.probabilities(), &[0.25, 0.75]);
        assert_eq!(d.mean_momentum(), 0.5);
    }

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-300, -3.5e-7, 6.02e23, f64::NAN, f64::INFINITY, 1.0 / 3.0] {
            let s = format_float(x);
            let back: f64 = s.parse().unwrap();
            assert!(back.to_bits() == x.to_bits() || (x.is_nan() && back.is_nan()), "{s}");
            assert!(s.len() < 26, "{s}");
        }
        assert_eq!(format_float(0.25), "0.25");
        assert_eq!(format_float(1.5e-9), "1.5e-9");
    }

    #[test]
    fn rejects_zero_mass() {
        assert!(MomentumDistribution::from_weights(vec![0.0; 3], vec![0.0; 3]).is_err());
        assert!(MomentumDistribution::from_weights(vec![-1.0, 2.0], vec![0.0; 2]).is_err());
    }
}
