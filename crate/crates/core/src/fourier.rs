//! Fourier expansion over `{±1}^n` and the spectral quantities built on it.
//!
//! Coefficients are stored densely, indexed by subset bitmask (bit `i - 1`
//! set iff `i ∈ S`), so `|S|` is a popcount.

use serde::{Deserialize, Serialize};

use crate::boolfn::BoolFn;
use crate::error::{Error, Result};

/// Fourier coefficients `f̂(S)` of a real-valued function on `{±1}^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    n: usize,
    coeffs: Vec<f64>,
    vars: Vec<usize>,
    degree_cap: Option<usize>,
    attenuation: Option<f64>,
}

/// In-place Walsh–Hadamard butterfly mapping values to `2^n · f̂`, with the
/// sign convention `χ_S(x) = Π_{i∈S} x_i`, `x_i = +1` iff bit set.
fn forward_butterfly(data: &mut [f64]) {
    let len = data.len();
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for k in block..block + h {
                let (a, b) = (data[k], data[k + h]);
                data[k] = a + b;
                data[k + h] = b - a;
            }
        }
        h *= 2;
    }
}

fn inverse_butterfly(data: &mut [f64]) {
    let len = data.len();
    let mut h = 1;
    while h < len {
        for block in (0..len).step_by(2 * h) {
            for k in block..block + h {
                let (a, b) = (data[k], data[k + h]);
                data[k] = a - b;
                data[k + h] = a + b;
            }
        }
        h *= 2;
    }
}

/// `⌈ln(1/ε)/δ⌉`, the degree cap used with noise rate `δ` and accuracy `ε`.
pub fn default_degree(eps: f64, delta: f64) -> usize {
    ((1.0 / eps).ln() / delta).ceil().max(1.0) as usize
}

/// `(1 - δ)^k` for `k = 0..=n`.
fn noise_weights(delta: f64, n: usize) -> Vec<f64> {
    let mut w = Vec::with_capacity(n + 1);
    let mut acc = 1.0;
    for _ in 0..=n {
        w.push(acc);
        acc *= 1.0 - delta;
    }
    w
}

/// Spectrum of a Boolean function via the fast Walsh–Hadamard transform.
pub fn spectrum(f: &BoolFn) -> Spectrum {
    let values: Vec<f64> = f.table().iter().map(|&v| f64::from(v)).collect();
    let mut sp = Spectrum::from_values(&values);
    sp.vars = f.vars().to_vec();
    sp
}

impl Spectrum {
    /// Spectrum of an arbitrary real-valued table of length `2^n`.
    pub fn from_values(values: &[f64]) -> Spectrum {
        assert!(values.len().is_power_of_two(), "table length must be 2^n");
        let n = values.len().trailing_zeros() as usize;
        let mut coeffs = values.to_vec();
        forward_butterfly(&mut coeffs);
        let scale = 1.0 / values.len() as f64;
        coeffs.iter_mut().for_each(|c| *c *= scale);
        Spectrum {
            n,
            coeffs,
            vars: (1..=n).collect(),
            degree_cap: None,
            attenuation: None,
        }
    }

    /// Builds a spectrum from raw coefficients.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Spectrum {
        assert!(coeffs.len().is_power_of_two(), "coefficient count must be 2^n");
        let n = coeffs.len().trailing_zeros() as usize;
        Spectrum {
            n,
            coeffs,
            vars: (1..=n).collect(),
            degree_cap: None,
            attenuation: None,
        }
    }

    /// Inverse transform: the function's values on every input.
    pub fn to_values(&self) -> Vec<f64> {
        let mut values = self.coeffs.clone();
        inverse_butterfly(&mut values);
        values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    /// Global names of the local coordinates.
    pub fn vars(&self) -> &[usize] {
        &self.vars
    }

    pub fn degree_cap(&self) -> Option<usize> {
        self.degree_cap
    }

    pub fn attenuation(&self) -> Option<f64> {
        self.attenuation
    }

    fn check_var(&self, i: usize) -> Result<usize> {
        if i == 0 || i > self.n {
            Err(Error::var_out_of_range(i, self.n))
        } else {
            Ok(1 << (i - 1))
        }
    }

    fn check_same_n(&self, other: &Spectrum) -> Result<()> {
        if self.n != other.n {
            Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }

    fn check_unattenuated(&self) -> Result<()> {
        match self.attenuation {
            Some(_) => Err(Error::AlreadyAttenuated),
            None => Ok(()),
        }
    }

    /// Scales `f̂(S)` by `(1-δ)^{|S|}` and zeroes every `|S| > d`.
    ///
    /// A second smoothing is refused; pure truncation (`δ = 0`) of a smoothed
    /// spectrum is allowed.
    pub fn attenuate_truncate(&self, delta: f64, d: Option<usize>) -> Result<Spectrum> {
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::OutOfRange {
                name: "delta",
                value: delta,
                range: "[0, 1)",
            });
        }
        if delta > 0.0 {
            self.check_unattenuated()?;
        }
        let w = noise_weights(delta, self.n);
        let cap = d.unwrap_or(self.n);
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(s, &c)| {
                let k = s.count_ones() as usize;
                if k <= cap {
                    w[k] * c
                } else {
                    0.0
                }
            })
            .collect();
        let degree_cap = match (self.degree_cap, d) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let attenuation = if delta > 0.0 { Some(delta) } else { self.attenuation };
        Ok(Spectrum {
            n: self.n,
            coeffs,
            vars: self.vars.clone(),
            degree_cap,
            attenuation,
        })
    }

    /// `(E[f], Var[f])`.
    pub fn mean_variance(&self) -> (f64, f64) {
        let var = self.coeffs[1..].iter().map(|c| c * c).sum();
        (self.coeffs[0], var)
    }

    pub fn variance(&self) -> f64 {
        self.mean_variance().1
    }

    /// `Σ_S f̂(S)²`, i.e. `E[f²]`.
    pub fn second_moment(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Restriction of the expansion to its nonempty part and differentiation
    /// in coordinate `i`: `D_i f = Σ_{S∋i} f̂(S) χ_{S∖i}`.
    pub fn discrete_derivative(&self, i: usize) -> Result<Spectrum> {
        let bit = self.check_var(i)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for (s, &c) in self.coeffs.iter().enumerate() {
            if s & bit != 0 {
                coeffs[s & !bit] = c;
            }
        }
        Ok(Spectrum {
            n: self.n,
            coeffs,
            vars: self.vars.clone(),
            degree_cap: self.degree_cap.map(|d| d.saturating_sub(1)),
            attenuation: self.attenuation,
        })
    }

    /// `Inf_i = Σ_{S∋i} f̂(S)²`.
    pub fn influence(&self, i: usize) -> Result<f64> {
        let bit = self.check_var(i)?;
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(s, _)| s & bit != 0)
            .map(|(_, c)| c * c)
            .sum())
    }

    /// `Σ_S |S| f̂(S)²`.
    pub fn total_influence(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| f64::from(s.count_ones()) * c * c)
            .sum()
    }

    /// `Inf_i^{(δ)} = Σ_{S∋i} (1-δ)^{|S|} f̂(S)²`.
    pub fn noisy_influence(&self, i: usize, delta: f64) -> Result<f64> {
        self.noisy_dwise_influence(i, delta, self.n)
    }

    /// `Inf_i^{(δ,d)} = Σ_{S∋i, |S|≤d} (1-δ)^{|S|} f̂(S)²`.
    pub fn noisy_dwise_influence(&self, i: usize, delta: f64, d: usize) -> Result<f64> {
        let bit = self.check_var(i)?;
        self.check_unattenuated()?;
        let w = noise_weights(delta, self.n);
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(s, _)| s & bit != 0 && s.count_ones() as usize <= d)
            .map(|(s, c)| w[s.count_ones() as usize] * c * c)
            .sum())
    }

    /// `Inf_i^{(δ,d)}` for every local coordinate in one pass over the spectrum.
    pub fn noisy_dwise_influences(&self, delta: f64, d: usize) -> Result<Vec<f64>> {
        self.check_unattenuated()?;
        let w = noise_weights(delta, self.n);
        let mut out = vec![0.0; self.n];
        for (s, &c) in self.coeffs.iter().enumerate().skip(1) {
            let k = s.count_ones() as usize;
            if k > d || c == 0.0 {
                continue;
            }
            let term = w[k] * c * c;
            let mut bits = s;
            while bits != 0 {
                out[bits.trailing_zeros() as usize] += term;
                bits &= bits - 1;
            }
        }
        Ok(out)
    }

    /// `Σ_S (1-δ)^{|S|} f̂(S)²`, the noise stability `E[f(x) f(x̃)]`.
    pub fn noise_stability(&self, delta: f64) -> Result<f64> {
        self.check_unattenuated()?;
        let w = noise_weights(delta, self.n);
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .map(|(s, c)| w[s.count_ones() as usize] * c * c)
            .sum())
    }

    /// Nonzero coefficients (`|c| > threshold`) in ascending mask order.
    pub fn nonzero_entries(&self, threshold: f64) -> Vec<SpectrumEntry> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.abs() > threshold)
            .map(|(mask, &coeff)| SpectrumEntry {
                mask,
                subset: (0..self.n)
                    .filter(|b| mask >> b & 1 == 1)
                    .map(|b| self.vars[b])
                    .collect(),
                coeff,
            })
            .collect()
    }

    pub fn to_json(&self) -> SpectrumJson {
        SpectrumJson {
            n: self.n,
            entries: self.nonzero_entries(1e-12),
        }
    }
}

/// `Σ_{S≠∅} f̂(S) ĝ(S)`.
pub fn covariance(f: &Spectrum, g: &Spectrum) -> Result<f64> {
    f.check_same_n(g)?;
    Ok(f.coeffs[1..]
        .iter()
        .zip(&g.coeffs[1..])
        .map(|(a, b)| a * b)
        .sum())
}

/// `E[(f - g)²] = Σ_S (f̂(S) - ĝ(S))²`.
pub fn l2_dist(f: &Spectrum, g: &Spectrum) -> Result<f64> {
    f.check_same_n(g)?;
    Ok(f.coeffs
        .iter()
        .zip(&g.coeffs)
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub mask: usize,
    pub subset: Vec<usize>,
    pub coeff: f64,
}

/// Machine-readable spectrum dump: `{n, entries: [{mask, subset, coeff}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumJson {
    pub n: usize,
    pub entries: Vec<SpectrumEntry>,
}
