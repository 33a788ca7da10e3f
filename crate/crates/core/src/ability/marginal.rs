use super::normal;
use rand::Rng;

/// The distribution of one subskill's realized ability, prepared for repeated use.
///
/// Built once per (profile, difficulty) so that the hot sampling loop only does
/// the inverse transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Marginal {
    Point(f64),
    Uniform { lo: f64, width: f64 },
    Trunc(TruncNormal),
}

/// Normal(mu, sigma²) truncated to [0, 1], with cached standardized bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncNormal {
    mu: f64,
    sigma: f64,
    alpha: f64,
    beta: f64,
    mass: f64,
}

impl TruncNormal {
    pub fn new(mu: f64, sigma: f64) -> Self {
        let alpha = -mu / sigma;
        let beta = (1.0 - mu) / sigma;
        let mass = normal::interval(alpha, beta);
        TruncNormal {
            mu,
            sigma,
            alpha,
            beta,
            mass,
        }
    }

    pub fn location(&self) -> f64 {
        self.mu
    }

    pub fn scale(&self) -> f64 {
        self.sigma
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let z = (x - self.mu) / self.sigma;
        (normal::interval(self.alpha, z) / self.mass).clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        self.mu + self.sigma * (normal::pdf(self.alpha) - normal::pdf(self.beta)) / self.mass
    }

    /// Inverse cdf: normal-quantile initial guess, then safeguarded Newton.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        if q >= 1.0 {
            return 1.0;
        }
        let (a, b, mass) = (self.alpha, self.beta, self.mass);
        // Work in the tail that keeps the residual free of cancellation.
        let lower = q <= 0.5;
        let target = if lower { q * mass } else { (1.0 - q) * mass };
        let guess = if lower {
            normal::inv_cdf(normal::cdf(a) + target)
        } else {
            -normal::inv_cdf(normal::sf(b) + target)
        };
        let residual = |z: f64| {
            if lower {
                normal::interval(a, z) - target
            } else {
                target - normal::interval(z, b)
            }
        };

        let (mut lo, mut hi) = (a, b);
        let mut z = if guess.is_finite() && guess > a && guess < b {
            guess
        } else {
            0.5 * (a + b)
        };
        for _ in 0..100 {
            let r = residual(z);
            if r == 0.0 {
                break;
            }
            if r > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let d = normal::pdf(z);
            let mut next = z - r / d;
            if !(d > 0.0) || !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - z).abs();
            z = next;
            if step <= 1e-15 * z.abs().max(1.0) || hi - lo <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        (self.mu + self.sigma * z).clamp(0.0, 1.0)
    }
}

impl Marginal {
    /// Scaled-uniform noise around `mean` with relative half-width `sigma`.
    pub fn uniform_scaled(mean: f64, sigma: f64) -> Self {
        let half = mean.min(1.0 - mean).max(0.0) * sigma;
        if half <= 0.0 {
            Marginal::Point(mean)
        } else {
            Marginal::Uniform {
                lo: mean - half,
                width: 2.0 * half,
            }
        }
    }

    pub fn trunc_normal(location: f64, sigma: f64) -> Self {
        if sigma <= 0.0 {
            Marginal::Point(location)
        } else {
            Marginal::Trunc(TruncNormal::new(location, sigma))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Point(p) => {
                if x >= p {
                    1.0
                } else {
                    0.0
                }
            }
            Marginal::Uniform { lo, width } => ((x - lo) / width).clamp(0.0, 1.0),
            Marginal::Trunc(t) => t.cdf(x),
        }
    }

    pub fn quantile(&self, q: f64) -> f64 {
        match *self {
            Marginal::Point(p) => p,
            Marginal::Uniform { lo, width } => (lo + q.clamp(0.0, 1.0) * width).clamp(0.0, 1.0),
            Marginal::Trunc(t) => t.quantile(q),
        }
    }

    /// The true mean of the distribution (differs from the location near the
    /// boundary for truncated normals).
    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Point(p) => p,
            Marginal::Uniform { lo, width } => lo + 0.5 * width,
            Marginal::Trunc(t) => t.mean(),
        }
    }

    /// Support as (lowest, highest) attainable value.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Point(p) => (p, p),
            Marginal::Uniform { lo, width } => (lo, lo + width),
            Marginal::Trunc(_) => (0.0, 1.0),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Point(p) => p,
            _ => self.quantile(rng.random::<f64>()),
        }
    }

    /// Quantile by plain bisection on the cdf; slow, used as a reference.
    pub fn quantile_bisect(&self, q: f64) -> f64 {
        let (mut lo, mut hi) = self.support();
        if q <= 0.0 {
            return lo;
        }
        if q >= 1.0 || hi == lo {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-14 {
                break;
            }
        }
        0.5 * (lo + hi)
    }
}
