use serde::{Deserialize, Serialize};

use crate::routing::Scheme;

/// Empirical CDF as a right-continuous step function: `fractions[i]` is the
/// share of samples `<= values[i]`. Values are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfSeries {
    pub scheme: Scheme,
    pub values: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl CdfSeries {
    /// NaN samples are dropped.
    pub fn from_samples(scheme: Scheme, samples: &[f64]) -> Self {
        let mut v: Vec<f64> = samples.iter().copied().filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mut values = Vec::new();
        let mut fractions = Vec::new();
        for (i, &x) in v.iter().enumerate() {
            let f = (i + 1) as f64 / n;
            if values.last() == Some(&x) {
                *fractions.last_mut().unwrap() = f;
            } else {
                values.push(x);
                fractions.push(f);
            }
        }
        CdfSeries {
            scheme,
            values,
            fractions,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Share of samples `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        let i = self.values.partition_point(|&v| v <= x);
        if i == 0 {
            0.0
        } else {
            self.fractions[i - 1]
        }
    }

    pub fn is_valid(&self) -> bool {
        self.values.len() == self.fractions.len()
            && self.values.windows(2).all(|w| w[0] < w[1])
            && self.fractions.windows(2).all(|w| w[0] < w[1])
            && self.fractions.first().is_none_or(|&f| f > 0.0)
            && self.fractions.last().is_none_or(|&f| f == 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_and_ties() {
        let c = CdfSeries::from_samples(Scheme::Greedy, &[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(c.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(c.fractions, vec![0.25, 0.75, 1.0]);
        assert!(c.is_valid());
        assert_eq!(c.eval(0.5), 0.0);
        assert_eq!(c.eval(2.0), 0.75);
        assert_eq!(c.eval(2.5), 0.75);
        assert_eq!(c.eval(9.0), 1.0);
    }

    #[test]
    fn empty() {
        let c = CdfSeries::from_samples(Scheme::Greedy, &[f64::NAN]);
        assert!(c.is_empty());
        assert!(c.is_valid());
    }
}
