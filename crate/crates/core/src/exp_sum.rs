//! Real exponential sums `f(τ) = Σ c_i e^{-μ_i τ}` and exact isolation of
//! their sign changes.
//!
//! Switching functions of a diagonal plant are exponential sums in the
//! time-to-go variable, so every support-function evaluation and every
//! bang-bang extraction goes through here.
//!
//! Root isolation uses the Rolle argument behind Descartes' rule for
//! exponential sums: multiplying by `e^{μ_1 τ}` keeps the sign of `f`, and the
//! derivative of the product has one term fewer. Its sign changes split the
//! interval into pieces on which the product is monotone, so each piece holds
//! at most one root. An `n`-term sum therefore has at most `n - 1` roots and
//! none is missed.

/// Rates closer than this (relative) are merged into one term.
const RATE_MERGE: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    /// `(coefficient, rate)`, rates strictly increasing, coefficients nonzero.
    terms: Vec<(f64, f64)>,
}

impl ExpSum {
    pub fn new(coefficients: &[f64], rates: &[f64]) -> Self {
        assert_eq!(coefficients.len(), rates.len(), "coefficient/rate length mismatch");
        let mut raw: Vec<(f64, f64)> = coefficients.iter().copied().zip(rates.iter().copied()).collect();
        raw.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (c, mu) in raw {
            match terms.last_mut() {
                Some(last) if (mu - last.1).abs() <= RATE_MERGE * mu.abs().max(last.1.abs()) => last.0 += c,
                _ => terms.push((c, mu)),
            }
        }
        terms.retain(|t| t.0 != 0.0);
        Self { terms }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.terms.iter().map(|&(c, mu)| c * (-mu * tau).exp()).sum()
    }

    pub fn derivative(&self, tau: f64) -> f64 {
        self.terms.iter().map(|&(c, mu)| -mu * c * (-mu * tau).exp()).sum()
    }

    /// `∫_a^b f(τ) dτ` in closed form.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.terms.iter().map(|&(c, mu)| c * decay_integral(mu, a, b)).sum()
    }

    /// Product with `e^{μ_1 τ}`: same sign everywhere, smallest rate becomes 0.
    fn normalized(&self) -> Self {
        let shift = self.terms.first().map_or(0.0, |t| t.1);
        Self {
            terms: self.terms.iter().map(|&(c, mu)| (c, mu - shift)).collect(),
        }
    }

    fn derivative_sum(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .filter(|t| t.1 != 0.0)
                .map(|&(c, mu)| (-mu * c, mu))
                .collect(),
        }
    }

    /// All sign-changing roots in the open interval `(a, b)`, ascending.
    ///
    /// Touching zeros (no sign change) are not reported.
    pub fn roots(&self, a: f64, b: f64) -> Vec<f64> {
        if self.terms.len() < 2 || !(a < b) {
            return Vec::new();
        }
        let g = self.normalized();
        let dg = g.derivative_sum();
        let mut nodes = vec![a];
        nodes.extend(dg.roots(a, b));
        nodes.push(b);

        let mut roots = Vec::new();
        for w in nodes.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let (flo, fhi) = (g.eval(lo), g.eval(hi));
            if flo == 0.0 || fhi == 0.0 || (flo < 0.0) == (fhi < 0.0) {
                continue;
            }
            roots.push(bracketed_root(&g, lo, hi, flo));
        }
        // a root exactly on a node between two pieces shows up as a sign
        // change across that node; catch it here
        for w in nodes.windows(3) {
            let mid = w[1];
            if g.eval(mid) == 0.0 {
                let (l, r) = (g.eval(0.5 * (w[0] + mid)), g.eval(0.5 * (mid + w[2])));
                if l != 0.0 && r != 0.0 && (l < 0.0) != (r < 0.0) {
                    roots.push(mid);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        roots
    }

    /// Splits `[a, b]` at the sign changes of `f`; each piece carries the sign
    /// (`-1.0`, `0.0` or `1.0`) of `f` on its interior.
    pub fn sign_pieces(&self, a: f64, b: f64) -> Vec<(f64, f64, f64)> {
        if self.is_zero() {
            return vec![(a, b, 0.0)];
        }
        let mut cuts = vec![a];
        cuts.extend(self.roots(a, b));
        cuts.push(b);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .map(|w| {
                let f = self.eval(0.5 * (w[0] + w[1]));
                (w[0], w[1], sign(f))
            })
            .collect()
    }
}

pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `∫_a^b e^{-μτ} dτ`, cancellation-free.
pub(crate) fn decay_integral(mu: f64, a: f64, b: f64) -> f64 {
    if mu == 0.0 {
        return b - a;
    }
    // e^{-μa} (1 - e^{-μ(b-a)}) / μ
    (-mu * a).exp() * (-(-mu * (b - a)).exp_m1()) / mu
}

/// Safeguarded Newton iteration on a monotone bracket.
fn bracketed_root(g: &ExpSum, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let lo_negative = flo < 0.0;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = g.eval(x);
        if fx == 0.0 {
            return x;
        }
        if (fx < 0.0) == lo_negative {
            lo = x;
        } else {
            hi = x;
        }
        let d = g.derivative(x);
        let mut next = if d != 0.0 { x - fx / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        x = next;
    }
    x
}
