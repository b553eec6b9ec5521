//! Optimal threshold correction.
//!
//! With exponential query noise `X ~ Exp(1/lambda)` and Laplace threshold noise
//! `Y ~ Lap(b)`, a worst-case stream of `k` negatives followed by one positive
//! is classified within tolerance `alpha` with probability
//!
//! ```text
//! p(r) = Gamma(r + alpha)^k * (1 - Gamma(r - alpha))
//! ```
//!
//! where `Gamma` is the cdf of `Z = X - Y` and `r` the correction added to the
//! noisy threshold. The optimal correction is the argmax of `p`.
//!
//! Two routes evaluate `p`:
//!
//! * numerical (default): discretize both laws on a common mesh, reflect the
//!   threshold law, convolve with an FFT and cumulate into a step cdf. This
//!   works for any pair of noise laws.
//! * analytical: the closed form of `Gamma` for the Laplace/exponential pair,
//!   used as a fast path and as an independent oracle for the numerical route.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{ensure_positive, Error, Result};
use crate::noise::NoiseDist;

/// Mesh count used when none is given.
pub const DEFAULT_MESH_COUNT: usize = 20_001;
/// Tail mass each law may lose beyond the boundary.
pub const DEFAULT_TAIL_MASS: f64 = 1e-10;

/// A distribution on the lattice `{ i * mesh }` plus masses at `-inf`/`+inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretePmf {
    mesh: f64,
    first_index: i64,
    mass: Vec<f64>,
    neg_inf_mass: f64,
    pos_inf_mass: f64,
    indeterminate_mass: f64,
}

impl DiscretePmf {
    /// Builds a pmf whose `mass[j]` sits at `(first_index + j) * mesh`.
    pub fn new(
        mesh: f64,
        first_index: i64,
        mass: Vec<f64>,
        neg_inf_mass: f64,
        pos_inf_mass: f64,
    ) -> Result<Self> {
        ensure_positive("mesh", mesh)?;
        if mass.is_empty() {
            return Err(Error::invalid("mass", "must not be empty"));
        }
        if mass
            .iter()
            .chain([&neg_inf_mass, &pos_inf_mass])
            .any(|m| !m.is_finite() || *m < 0.0)
        {
            return Err(Error::invalid("mass", "entries must be finite and nonnegative"));
        }
        Ok(Self {
            mesh,
            first_index,
            mass,
            neg_inf_mass,
            pos_inf_mass,
            indeterminate_mass: 0.0,
        })
    }

    /// Unit mass at `index * mesh`.
    pub fn point_mass(mesh: f64, index: i64) -> Result<Self> {
        Self::new(mesh, index, vec![1.0], 0.0, 0.0)
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.mass.len() as i64 - 1
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    /// Mass at lattice index `index`; zero off the stored range.
    pub fn mass_at(&self, index: i64) -> f64 {
        let j = index - self.first_index;
        if j < 0 {
            return 0.0;
        }
        self.mass.get(j as usize).copied().unwrap_or(0.0)
    }

    pub fn neg_inf_mass(&self) -> f64 {
        self.neg_inf_mass
    }

    pub fn pos_inf_mass(&self) -> f64 {
        self.pos_inf_mass
    }

    /// Mass that came from `-inf + +inf` products during convolution; it is
    /// split evenly between the two brackets.
    pub fn indeterminate_mass(&self) -> f64 {
        self.indeterminate_mass
    }

    pub fn finite_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.finite_mass() + self.neg_inf_mass + self.pos_inf_mass
    }

    /// Law of `-X`.
    pub fn reflect(&self) -> Self {
        Self {
            mesh: self.mesh,
            first_index: -self.last_index(),
            mass: self.mass.iter().rev().copied().collect(),
            neg_inf_mass: self.pos_inf_mass,
            pos_inf_mass: self.neg_inf_mass,
            indeterminate_mass: self.indeterminate_mass,
        }
    }

    pub fn step_cdf(&self) -> StepCdf {
        StepCdf::new(self)
    }
}

/// Discretizes `dist` on `m` mesh points spanning `[0, bound]`.
///
/// Mesh `u = bound / (m - 1)`. Chunk `[i u, (i+1) u)` for
/// `i = -(m-1) ..= m-2` is collapsed onto `i u`; mass below `-(m-1) u` goes to
/// the `-inf` bracket and mass above `(m-1) u` to `+inf`.
pub fn discretize(dist: &NoiseDist, m: usize, bound: f64) -> Result<DiscretePmf> {
    if m < 2 {
        return Err(Error::invalid("m", format!("mesh count must be at least 2, got {m}")));
    }
    ensure_positive("bound", bound)?;
    let u = bound / (m - 1) as f64;
    let top = (m - 1) as i64;
    let mass = (-top..top)
        .map(|i| {
            let (lo, hi) = (i as f64 * u, (i + 1) as f64 * u);
            // difference on the side of the lighter tail keeps precision
            let h = if i >= 0 {
                dist.sf(lo) - dist.sf(hi)
            } else {
                dist.cdf(hi) - dist.cdf(lo)
            };
            h.max(0.0)
        })
        .collect();
    DiscretePmf::new(
        u,
        -top,
        mass,
        dist.cdf(-(top as f64) * u),
        dist.sf(top as f64 * u),
    )
}

fn fft_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        let mut out = vec![0.0; out_len];
        for (i, &x) in a.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward: Arc<dyn rustfft::Fft<f64>> = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let lift = |v: &[f64]| {
        let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(n, Complex::new(0.0, 0.0));
        buf
    };
    let mut fa = lift(a);
    let mut fb = lift(b);
    forward.process(&mut fa);
    forward.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inverse.process(&mut fa);
    let scale = 1.0 / n as f64;
    // FFT round-off leaves values of order 1e-17 where the true mass is zero
    fa[..out_len].iter().map(|c| (c.re * scale).max(0.0)).collect()
}

/// Law of `Z = X - Y` for independent `X`, `Y` on the same mesh.
///
/// Any product involving an infinite bracket lands in the bracket of the same
/// sign (`inf + x = inf`); the ill-defined `-inf + +inf` products are split
/// evenly between both brackets and reported by
/// [`DiscretePmf::indeterminate_mass`].
pub fn convolve_difference(x: &DiscretePmf, y: &DiscretePmf) -> Result<DiscretePmf> {
    let (ux, uy) = (x.mesh, y.mesh);
    if (ux - uy).abs() > 1e-12 * ux.max(uy) {
        return Err(Error::MeshMismatch(ux, uy));
    }
    let neg_y = y.reflect();
    let mass = fft_convolve(&x.mass, &neg_y.mass);
    let (xf, yf) = (x.finite_mass(), neg_y.finite_mass());
    let (xn, xp) = (x.neg_inf_mass, x.pos_inf_mass);
    let (yn, yp) = (neg_y.neg_inf_mass, neg_y.pos_inf_mass);
    let clash = xp * yn + xn * yp;
    let pos = xp * (yf + yp) + xf * yp + 0.5 * clash;
    let neg = xn * (yf + yn) + xf * yn + 0.5 * clash;
    Ok(DiscretePmf {
        mesh: ux,
        first_index: x.first_index + neg_y.first_index,
        mass,
        neg_inf_mass: neg,
        pos_inf_mass: pos,
        indeterminate_mass: x.indeterminate_mass + y.indeterminate_mass + clash,
    })
}

/// Right-continuous step cdf of a [`DiscretePmf`].
///
/// Both the lower and the upper cumulative sums are kept so that tail
/// probabilities near one end keep full precision.
#[derive(Clone, Debug)]
pub struct StepCdf {
    mesh: f64,
    first_index: i64,
    /// `P[Z <= (first_index + j) * mesh]`
    lower: Vec<f64>,
    /// `P[Z > (first_index + j) * mesh]`
    upper: Vec<f64>,
    neg_inf_mass: f64,
    pos_inf_mass: f64,
}

impl StepCdf {
    fn new(pmf: &DiscretePmf) -> Self {
        let n = pmf.mass.len();
        let mut lower = Vec::with_capacity(n);
        let mut acc = pmf.neg_inf_mass;
        for &h in &pmf.mass {
            acc += h;
            lower.push(acc);
        }
        let mut upper = vec![0.0; n];
        let mut acc = pmf.pos_inf_mass;
        for j in (0..n).rev() {
            upper[j] = acc;
            acc += pmf.mass[j];
        }
        Self {
            mesh: pmf.mesh,
            first_index: pmf.first_index,
            lower,
            upper,
            neg_inf_mass: pmf.neg_inf_mass,
            pos_inf_mass: pmf.pos_inf_mass,
        }
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn first_index(&self) -> i64 {
        self.first_index
    }

    pub fn last_index(&self) -> i64 {
        self.first_index + self.lower.len() as i64 - 1
    }

    fn index_of(&self, r: f64) -> i64 {
        // the slack absorbs round-off when r was itself built as j * mesh
        (r / self.mesh + 1e-9).floor() as i64
    }

    /// `P[Z <= index * mesh]`.
    pub fn cdf_at_index(&self, index: i64) -> f64 {
        let j = index - self.first_index;
        if j < 0 {
            self.neg_inf_mass
        } else if j as usize >= self.lower.len() {
            1.0 - self.pos_inf_mass
        } else {
            self.lower[j as usize]
        }
    }

    /// `P[Z > index * mesh]`.
    pub fn sf_at_index(&self, index: i64) -> f64 {
        let j = index - self.first_index;
        if j < 0 {
            1.0 - self.neg_inf_mass
        } else if j as usize >= self.upper.len() {
            self.pos_inf_mass
        } else {
            self.upper[j as usize]
        }
    }

    pub fn cdf(&self, r: f64) -> f64 {
        self.cdf_at_index(self.index_of(r))
    }

    pub fn sf(&self, r: f64) -> f64 {
        self.sf_at_index(self.index_of(r))
    }
}

fn success(gamma_plus: f64, survival_minus: f64, k: u32) -> f64 {
    gamma_plus.powi(k as i32) * survival_minus
}

/// Numerical cdf of `query_noise - threshold_noise` and the success
/// probability built on it. Works for any pair of laws.
#[derive(Clone, Debug)]
pub struct NumericalSuccess {
    gamma: StepCdf,
    bound: f64,
    indeterminate_mass: f64,
}

impl NumericalSuccess {
    /// Discretizes both laws with a common boundary so that neither loses
    /// more than `tail` mass on either side, then convolves.
    pub fn new(query_noise: &NoiseDist, threshold_noise: &NoiseDist, m: usize, tail: f64) -> Result<Self> {
        if !(tail > 0.0 && tail < 0.5) {
            return Err(Error::invalid("e", format!("tail mass must lie in (0, 0.5), got {tail}")));
        }
        let bound = [query_noise, threshold_noise]
            .iter()
            .flat_map(|d| [d.quantile(tail), d.quantile(1.0 - tail)])
            .map(|q| q.map(f64::abs))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        let bound = if bound > 0.0 { bound } else { 1.0 };
        let x = discretize(query_noise, m, bound)?;
        let y = discretize(threshold_noise, m, bound)?;
        let z = convolve_difference(&x, &y)?;
        Ok(Self {
            gamma: z.step_cdf(),
            bound,
            indeterminate_mass: z.indeterminate_mass(),
        })
    }

    pub fn gamma(&self) -> &StepCdf {
        &self.gamma
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn mesh(&self) -> f64 {
        self.gamma.mesh
    }

    pub fn indeterminate_mass(&self) -> f64 {
        self.indeterminate_mass
    }

    /// `Gamma(r + alpha)^k * (1 - Gamma(r - alpha))` on the step cdf.
    pub fn success_probability(&self, r: f64, alpha: f64, k: u32) -> f64 {
        success(self.gamma.cdf(r + alpha), self.gamma.sf(r - alpha), k)
    }

    /// Grid argmax of the success probability over every lattice point of the
    /// support of `Z`; ties go to the smallest `r`.
    pub fn argmax(&self, alpha: f64, k: u32) -> (f64, f64) {
        let u = self.gamma.mesh;
        let mut best = (0.0, f64::NEG_INFINITY);
        for j in self.gamma.first_index()..=self.gamma.last_index() {
            let r = j as f64 * u;
            let p = self.success_probability(r, alpha, k);
            if p > best.1 {
                best = (r, p);
            }
        }
        best
    }
}

/// Inputs of the correction-term computation for the Laplace/exponential pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionQuery {
    /// Laplace scale of the threshold noise, `sensitivity / eps1`.
    pub b: f64,
    /// Exponential rate of the query noise.
    pub lambda: f64,
    /// Error tolerance.
    pub alpha: f64,
    /// Number of worst-case negatives ahead of the positive.
    pub k: u32,
    /// Mesh count of the discretizer.
    pub m: usize,
    /// Tail mass allowed outside the boundary.
    pub e: f64,
}

impl CorrectionQuery {
    pub fn new(b: f64, lambda: f64, alpha: f64, k: u32) -> Self {
        Self {
            b,
            lambda,
            alpha,
            k,
            m: DEFAULT_MESH_COUNT,
            e: DEFAULT_TAIL_MASS,
        }
    }

    pub fn with_mesh(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_tail(mut self, e: f64) -> Self {
        self.e = e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure_positive("b", self.b)?;
        ensure_positive("lambda", self.lambda)?;
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be finite and nonnegative"));
        }
        if self.k == 0 {
            return Err(Error::invalid("k", "must be at least 1"));
        }
        if self.m < 2 {
            return Err(Error::invalid("m", "must be at least 2"));
        }
        if !(self.e > 0.0 && self.e < 0.5) {
            return Err(Error::invalid("e", "must lie in (0, 0.5)"));
        }
        Ok(())
    }

    pub fn query_noise(&self) -> Result<NoiseDist> {
        NoiseDist::exponential(1.0 / self.lambda)
    }

    pub fn threshold_noise(&self) -> Result<NoiseDist> {
        NoiseDist::laplace(self.b)
    }

    /// Runs the discretize/convolve pipeline for this query.
    pub fn numerical(&self) -> Result<NumericalSuccess> {
        self.validate()?;
        NumericalSuccess::new(&self.query_noise()?, &self.threshold_noise()?, self.m, self.e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimalCorrection {
    pub r_op: f64,
    pub p_max: f64,
    pub mesh: f64,
    pub bound: f64,
}

/// Numerically optimal correction term and the success probability it attains.
pub fn optimal_correction(q: &CorrectionQuery) -> Result<OptimalCorrection> {
    let num = q.numerical()?;
    let (r_op, p_max) = num.argmax(q.alpha, q.k);
    Ok(OptimalCorrection {
        r_op,
        p_max,
        mesh: num.mesh(),
        bound: num.bound(),
    })
}

/// Numerical success probability at each `r` in `r_grid`.
pub fn correction_sweep(q: &CorrectionQuery, r_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let num = q.numerical()?;
    Ok(r_grid
        .iter()
        .map(|&r| (r, num.success_probability(r, q.alpha, q.k)))
        .collect())
}

/// Closed-form cdf of `Exp(1/lambda) - Lap(b)`.
///
/// The general form divides by `b - 1/lambda`. Within `1e-7` relative of
/// `b = 1/lambda` the terms cancel catastrophically, so the limit
/// `sf(z) = exp(-z/b) (3/4 + z/(2b))` is used instead and
/// [`AnalyticalGamma::singular`] reports it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticalGamma {
    b: f64,
    theta: f64,
    singular: bool,
}

const SINGULAR_BAND: f64 = 1e-7;

impl AnalyticalGamma {
    pub fn new(b: f64, lambda: f64) -> Result<Self> {
        ensure_positive("b", b)?;
        ensure_positive("lambda", lambda)?;
        let theta = 1.0 / lambda;
        let singular = (b - theta).abs() <= SINGULAR_BAND * b.max(theta);
        Ok(Self { b, theta, singular })
    }

    pub fn singular(&self) -> bool {
        self.singular
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let (b, t) = (self.b, self.theta);
        if z <= 0.0 {
            b * (z / b).exp() / (2.0 * (t + b))
        } else {
            (1.0 - self.sf(z)).clamp(0.0, 1.0)
        }
    }

    pub fn sf(&self, z: f64) -> f64 {
        let (b, t) = (self.b, self.theta);
        if z <= 0.0 {
            return 1.0 - self.cdf(z);
        }
        let v = if self.singular {
            (-z / b).exp() * (0.75 + z / (2.0 * b))
        } else {
            -t * t * (-z / t).exp() / (b * b - t * t) + b * (-z / b).exp() / (2.0 * (b - t))
        };
        v.clamp(0.0, 1.0)
    }

    /// Closed-form success probability; the piecewise cdf reproduces the
    /// three branches `r <= -alpha`, `|r| <= alpha` and `r > alpha`.
    pub fn success_probability(&self, r: f64, alpha: f64, k: u32) -> f64 {
        success(self.cdf(r + alpha), self.sf(r - alpha), k)
    }
}

/// Closed-form `p(r)` for the Laplace/exponential pair.
pub fn success_probability_analytical(r: f64, q: &CorrectionQuery) -> Result<f64> {
    q.validate()?;
    Ok(AnalyticalGamma::new(q.b, q.lambda)?.success_probability(r, q.alpha, q.k))
}

/// Lower bound `k^k / (k+1)^(k+1)` on the maximum success probability.
pub fn max_success_lower_bound(k: u32) -> f64 {
    let k = f64::from(k);
    (k * (k / (k + 1.0)).ln() - (k + 1.0).ln()).exp()
}
