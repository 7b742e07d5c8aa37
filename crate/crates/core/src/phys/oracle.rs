//! Full-form GN integral with coherent span accumulation.
//!
//! The GN kernel `ρ(f1,f2)·χ(f1,f2)` depends on the two frequency offsets from
//! the CUT only through their product `x = (f1 − f)(f2 − f)`. Over a region where
//! the PSD product is constant, the double integral therefore collapses to
//! `∫ K(x)·w(x) dx`, with `w(x)` the logarithmic measure of the hyperbola
//! `ν1·ν2 = x` inside the region (closed form) and `K` the kernel.
//!
//! `K(x) = P(θ)/(4α² + θ'²)` where `θ = 4π²β2·L_s·x` and `P` is a trigonometric
//! polynomial of degree `N_span` (span phasor sum times the single-span numerator),
//! so each sub-interval is integrated with a Filon rule: the smooth factor
//! `w/(4α² + θ'²)` is interpolated quadratically and every harmonic of `P` is
//! integrated exactly against it.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{check_spectrum, EtaNli, FiberLink, NoiseBreakdown};
use crate::error::{Error, Result};
use crate::grid::ChannelConfig;

/// Quadrature resolution and convergence control.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Quadrature {
    /// Chebyshev-clustered nodes per breakpoint segment of the `x` axis.
    pub nodes_per_segment: usize,
    /// Allowed change of the result on doubling the resolution.
    pub tolerance_db: f64,
    /// Evaluate a second time at doubled resolution and enforce the tolerance.
    pub check_convergence: bool,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            nodes_per_segment: 4,
            tolerance_db: 0.05,
            check_convergence: true,
        }
    }
}

impl Quadrature {
    pub fn doubled(self) -> Self {
        Quadrature {
            nodes_per_segment: self.nodes_per_segment * 2,
            ..self
        }
    }

    pub fn unchecked(self) -> Self {
        Quadrature {
            check_convergence: false,
            ..self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleMode {
    /// Only the CUT's own band contributes.
    SciOnly,
    /// SCI plus cross-channel interference from every co-propagating channel.
    Total,
}

/// Oracle SCI and XCI variances of one channel, watts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOutput {
    pub sci_w: f64,
    pub xci_w: f64,
}

impl OracleOutput {
    pub fn nli_w(&self) -> f64 {
        self.sci_w + self.xci_w
    }

    pub fn breakdown(&self) -> NoiseBreakdown {
        NoiseBreakdown {
            ase_w: 0.0,
            sci_w: self.sci_w,
            xci_w: self.xci_w,
        }
    }
}

/// Integration region: bounds on ν1, ν2 and ν1 + ν2 (offsets from the CUT centre, Hz).
#[derive(Debug, Clone, Copy)]
pub struct Region {
    lo: [f64; 3],
    hi: [f64; 3],
}

impl Region {
    pub fn sci(b: f64) -> Self {
        let h = b / 2.0;
        Region {
            lo: [-h; 3],
            hi: [h; 3],
        }
    }

    /// ν1 in the CUT band, ν2 and ν1 + ν2 in the interferer band centred at `df`.
    pub fn xci(b_cut: f64, b_int: f64, df: f64) -> Self {
        let (hc, hi) = (b_cut / 2.0, b_int / 2.0);
        Region {
            lo: [-hc, df - hi, df - hi],
            hi: [hc, df + hi, df + hi],
        }
    }

    #[cfg(test)]
    pub(crate) fn contains(&self, n1: f64, n2: f64) -> bool {
        let v = [n1, n2, n1 + n2];
        (0..3).all(|i| v[i] >= self.lo[i] && v[i] <= self.hi[i])
    }

    /// Values of x = ν1·ν2 where `w(x)` may lose smoothness: vertex products,
    /// tangencies with the diagonal edges, and zero.
    fn breakpoints(&self) -> Vec<f64> {
        let [a1, a2, a3] = self.lo;
        let [b1, b2, b3] = self.hi;
        let mut out = vec![0.0];
        for u in [a1, b1] {
            for v in [a2, b2] {
                out.push(u * v);
            }
            for c in [a3, b3] {
                out.push(u * (c - u));
            }
        }
        for v in [a2, b2] {
            for c in [a3, b3] {
                out.push(v * (c - v));
            }
        }
        for c in [a3, b3] {
            out.push(c * c / 4.0);
        }
        out
    }

    /// `w(x) = ∫ dν1/|ν1|` over the part of the hyperbola `ν1·ν2 = x` inside the region.
    fn hyperbola_measure(&self, x: f64) -> f64 {
        let [a1, a2, a3] = self.lo;
        let [b1, b2, b3] = self.hi;
        let mut total = 0.0;

        // ν1 > 0
        if b1 > 0.0 {
            let mut s = IntervalSet::single(a1.max(0.0), b1);
            s.linear_le(a2, -x);
            s.linear_le(-b2, x);
            s.quad_ge(a3, x);
            s.quad_le(b3, x);
            for &(lo, hi) in s.items() {
                let lo = lo.max(f64::MIN_POSITIVE);
                if hi > lo {
                    total += (hi / lo).ln();
                }
            }
        }
        // ν1 < 0
        if a1 < 0.0 {
            let mut s = IntervalSet::single(a1, b1.min(0.0));
            s.linear_le(-a2, x);
            s.linear_le(b2, -x);
            s.quad_le(a3, x);
            s.quad_ge(b3, x);
            for &(lo, hi) in s.items() {
                let hi = hi.min(-f64::MIN_POSITIVE);
                if hi > lo {
                    total += (lo / hi).ln();
                }
            }
        }
        total
    }
}

/// At most a handful of disjoint closed intervals.
#[derive(Clone, Copy)]
struct IntervalSet {
    v: [(f64, f64); 4],
    n: usize,
}

impl IntervalSet {
    fn single(lo: f64, hi: f64) -> Self {
        let mut s = IntervalSet {
            v: [(0.0, 0.0); 4],
            n: 0,
        };
        if hi > lo {
            s.v[0] = (lo, hi);
            s.n = 1;
        }
        s
    }

    fn items(&self) -> &[(f64, f64)] {
        &self.v[..self.n]
    }

    fn clip(&mut self, lo: f64, hi: f64) {
        let mut out = [(0.0, 0.0); 4];
        let mut n = 0;
        for &(a, b) in self.items() {
            let (a, b) = (a.max(lo), b.min(hi));
            if b > a {
                out[n] = (a, b);
                n += 1;
            }
        }
        self.v = out;
        self.n = n;
    }

    /// Keep ν with `p·ν + q ≤ 0`.
    fn linear_le(&mut self, p: f64, q: f64) {
        if p > 0.0 {
            self.clip(f64::NEG_INFINITY, -q / p);
        } else if p < 0.0 {
            self.clip(-q / p, f64::INFINITY);
        } else if q > 0.0 {
            self.n = 0;
        }
    }

    fn roots(c: f64, x: f64) -> Option<(f64, f64)> {
        // ν² − cν + x = 0
        let disc = c * c - 4.0 * x;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        let q = 0.5 * (c + if c >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            return Some((0.0, 0.0));
        }
        let (r1, r2) = (q, x / q);
        Some((r1.min(r2), r1.max(r2)))
    }

    /// Keep ν with `ν² − cν + x ≤ 0`.
    fn quad_le(&mut self, c: f64, x: f64) {
        match Self::roots(c, x) {
            Some((r1, r2)) => self.clip(r1, r2),
            None => self.n = 0,
        }
    }

    /// Keep ν with `ν² − cν + x ≥ 0`.
    fn quad_ge(&mut self, c: f64, x: f64) {
        let Some((r1, r2)) = Self::roots(c, x) else {
            return;
        };
        let mut left = *self;
        left.clip(f64::NEG_INFINITY, r1);
        let mut right = *self;
        right.clip(r2, f64::INFINITY);
        self.n = 0;
        for &iv in left.items().iter().chain(right.items()) {
            self.v[self.n] = iv;
            self.n += 1;
        }
    }
}

/// Per-link kernel data.
#[derive(Debug, Clone)]
pub struct SpanKernel {
    alpha2_sq: f64,
    lorentz: f64,
    kappa: f64,
    x_c: f64,
    /// Cosine-series coefficients of `P(θ) = Σ_m c_m cos(mθ)`.
    coeffs: Vec<f64>,
}

impl SpanKernel {
    pub fn new(link: &FiberLink) -> Self {
        let alpha = link.alpha_field_per_m();
        let beta2 = link.beta2_s2_per_m().abs();
        let ls = link.span_length_m();
        let n = link.n_spans.max(1) as i64;
        let a = (-2.0 * alpha * ls).exp();

        let fejer = |m: i64| -> f64 {
            if m.abs() < n {
                (n - m.abs()) as f64
            } else {
                0.0
            }
        };
        let coeffs = (0..=n)
            .map(|m| {
                let d = (1.0 + a * a) * fejer(m) - a * (fejer(m - 1) + fejer(m + 1));
                if m == 0 {
                    d
                } else {
                    2.0 * d
                }
            })
            .collect();

        let w = 4.0 * PI * PI * beta2;
        SpanKernel {
            alpha2_sq: 4.0 * alpha * alpha,
            lorentz: w * w,
            kappa: w * ls,
            x_c: 2.0 * alpha / w,
            coeffs,
        }
    }

    /// `ρ(x)·χ(x)` evaluated directly (used for validation).
    #[cfg(test)]
    pub(crate) fn kernel(&self, x: f64) -> f64 {
        let theta = self.kappa * x;
        let p: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(m, c)| c * (m as f64 * theta).cos())
            .sum();
        p / (self.alpha2_sq + self.lorentz * x * x)
    }

    fn smooth_part(&self, region: &Region, x: f64) -> f64 {
        region.hyperbola_measure(x) / (self.alpha2_sq + self.lorentz * x * x)
    }

    /// `∫ (q0 + q1·t + q2·t²) P(κ(x0 + t)) dt` over `t ∈ [0, h]`.
    fn filon(&self, x0: f64, h: f64, q: [f64; 3]) -> f64 {
        let (s0, c0) = (self.kappa * x0).sin_cos();
        let e0 = Complex64::new(c0, s0);
        let (sh, ch) = (self.kappa * h).sin_cos();
        let eh = Complex64::new(ch, sh);

        let mut acc = [self.coeffs[0], self.coeffs[0] / 2.0, self.coeffs[0] / 3.0];
        let mut phase = Complex64::new(1.0, 0.0);
        let mut step = Complex64::new(1.0, 0.0);
        for (m, &c) in self.coeffs.iter().enumerate().skip(1) {
            phase *= e0;
            step *= eh;
            let z = m as f64 * self.kappa * h;
            let moments = if z.abs() < 0.5 {
                moments_series(z)
            } else {
                let iz = Complex64::new(0.0, z);
                let a0 = (step - 1.0) / iz;
                let a1 = (step - a0) / iz;
                let a2 = (step - 2.0 * a1) / iz;
                [a0, a1, a2]
            };
            for (a, mom) in acc.iter_mut().zip(moments) {
                *a += c * (phase * mom).re;
            }
        }
        h * (q[0] * acc[0] + q[1] * h * acc[1] + q[2] * h * h * acc[2])
    }

    /// `∬_region ρ·χ dν1 dν2`, in m²·Hz².
    pub fn island_integral(&self, region: &Region, nodes: usize) -> f64 {
        let mut bps = region.breakpoints();
        let (mut xmin, mut xmax) = (0.0f64, 0.0f64);
        for &b in &bps {
            xmin = xmin.min(b);
            xmax = xmax.max(b);
        }
        // grade toward x = 0 on the kernel's own scale
        let mut t = self.x_c * 4f64.powi(-12);
        while t < xmax.max(-xmin) {
            if t < xmax {
                bps.push(t);
            }
            if -t > xmin {
                bps.push(-t);
            }
            t *= 4.0;
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * a.abs().max(b.abs()));

        let nodes = nodes.max(1);
        let mut total = 0.0;
        for seg in bps.windows(2) {
            let (p, q) = (seg[0], seg[1]);
            if q <= p {
                continue;
            }
            let eval = |x: f64| {
                // w has a logarithmic singularity at 0; evaluate just inside
                let x = if x == 0.0 {
                    if p == 0.0 {
                        q * 1e-9
                    } else {
                        p * 1e-9
                    }
                } else {
                    x
                };
                self.smooth_part(region, x)
            };
            let node = |j: usize| p + (q - p) * 0.5 * (1.0 - (PI * j as f64 / nodes as f64).cos());
            let mut x_prev = p;
            let mut f_prev = eval(p);
            for j in 1..=nodes {
                let x = if j == nodes { q } else { node(j) };
                let h = x - x_prev;
                let f_mid = eval(x_prev + 0.5 * h);
                let f = eval(x);
                if h > 0.0 && (f_prev != 0.0 || f_mid != 0.0 || f != 0.0) {
                    // quadratic through the end points and the midpoint
                    let q1 = (-3.0 * f_prev + 4.0 * f_mid - f) / h;
                    let q2 = 2.0 * (f_prev - 2.0 * f_mid + f) / (h * h);
                    total += self.filon(x_prev, h, [f_prev, q1, q2]);
                }
                x_prev = x;
                f_prev = f;
            }
        }
        total
    }
}

/// Series for `A_k = ∫₀¹ u^k e^{izu} du`, k = 0, 1, 2, at small `z`.
fn moments_series(z: f64) -> [Complex64; 3] {
    let iz = Complex64::new(0.0, z);
    let mut pow = Complex64::new(1.0, 0.0);
    let mut fact = 1.0;
    let mut out = [Complex64::new(0.0, 0.0); 3];
    for n in 0..16 {
        if n > 0 {
            pow *= iz;
            fact *= n as f64;
        }
        for (k, a) in out.iter_mut().enumerate() {
            *a += pow / (fact * (n + k + 1) as f64);
        }
    }
    out
}

/// Evaluates SCI/XCI for each requested CUT at one resolution.
struct OracleEval<'a> {
    link: &'a FiberLink,
    kernel: SpanKernel,
    nodes: usize,
    sci_cache: HashMap<u64, f64>,
}

impl<'a> OracleEval<'a> {
    fn new(link: &'a FiberLink, nodes: usize) -> Self {
        OracleEval {
            link,
            kernel: SpanKernel::new(link),
            nodes,
            sci_cache: HashMap::new(),
        }
    }

    fn prefactor(&self) -> f64 {
        let g = self.link.gamma_per_w_m();
        16.0 / 27.0 * g * g
    }

    fn sci(&mut self, c: &ChannelConfig) -> f64 {
        let b = c.symbol_rate_hz();
        let kernel = &self.kernel;
        let nodes = self.nodes;
        let integral = *self
            .sci_cache
            .entry(b.to_bits())
            .or_insert_with(|| kernel.island_integral(&Region::sci(b), nodes));
        let psd = c.launch_power_w() / b;
        self.prefactor() * psd.powi(3) * integral * b
    }

    fn xci(&self, spectrum: &[ChannelConfig], cut: usize) -> f64 {
        let c = &spectrum[cut];
        let b = c.symbol_rate_hz();
        let psd = c.launch_power_w() / b;
        let mut sum = 0.0;
        for (k, other) in spectrum.iter().enumerate() {
            if k == cut {
                continue;
            }
            let bk = other.symbol_rate_hz();
            let df = (other.center_hz - c.center_hz).abs();
            let psd_k = other.launch_power_w() / bk;
            let integral = self
                .kernel
                .island_integral(&Region::xci(b, bk, df), self.nodes);
            // two mirror islands: (ν1 ∈ CUT, ν2 ∈ k) and (ν1 ∈ k, ν2 ∈ CUT)
            sum += 2.0 * psd_k * psd_k * integral;
        }
        self.prefactor() * psd * sum * b
    }
}

fn db_change(a: f64, b: f64) -> f64 {
    (10.0 * (a / b).log10()).abs()
}

/// Oracle NLI coefficient of `spectrum[cut]`.
pub fn gn_oracle_eta(
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    cut: usize,
    mode: OracleMode,
    quad: &Quadrature,
) -> Result<EtaNli> {
    link.validate()?;
    check_spectrum(spectrum, cut)?;
    let run = |nodes: usize| {
        let mut ev = OracleEval::new(link, nodes);
        let sci = ev.sci(&spectrum[cut]);
        match mode {
            OracleMode::SciOnly => sci,
            OracleMode::Total => sci + ev.xci(spectrum, cut),
        }
    };
    let p_tx = spectrum[cut].launch_power_w();
    let coarse = run(quad.nodes_per_segment);
    if !quad.check_convergence {
        return Ok(EtaNli::from_power(coarse, p_tx));
    }
    let fine = run(quad.nodes_per_segment * 2);
    let delta = db_change(fine, coarse);
    if !(delta <= quad.tolerance_db) {
        return Err(Error::NonConvergence {
            what: "GN oracle NLI",
            coarse_db: EtaNli::from_power(coarse, p_tx).db(),
            fine_db: EtaNli::from_power(fine, p_tx).db(),
            delta_db: delta,
        });
    }
    Ok(EtaNli::from_power(fine, p_tx))
}

/// Oracle SCI variance of a single channel on `link`, watts. Independent of
/// anything else on the fibre.
pub fn oracle_sci_power(link: &FiberLink, channel: &ChannelConfig, quad: &Quadrature) -> Result<f64> {
    link.validate()?;
    check_spectrum(std::slice::from_ref(channel), 0)?;
    let coarse = OracleEval::new(link, quad.nodes_per_segment).sci(channel);
    if !quad.check_convergence {
        return Ok(coarse);
    }
    let fine = OracleEval::new(link, quad.nodes_per_segment * 2).sci(channel);
    let delta = db_change(fine, coarse);
    if !(delta <= quad.tolerance_db) {
        return Err(Error::NonConvergence {
            what: "GN oracle SCI",
            coarse_db: 10.0 * coarse.log10(),
            fine_db: 10.0 * fine.log10(),
            delta_db: delta,
        });
    }
    Ok(fine)
}

/// Oracle SCI and XCI for every channel of `spectrum`.
pub fn gn_oracle_all(
    link: &FiberLink,
    spectrum: &[ChannelConfig],
    quad: &Quadrature,
) -> Result<Vec<OracleOutput>> {
    link.validate()?;
    if spectrum.is_empty() {
        return Ok(Vec::new());
    }
    check_spectrum(spectrum, 0)?;
    let run = |nodes: usize| {
        let mut ev = OracleEval::new(link, nodes);
        (0..spectrum.len())
            .map(|i| OracleOutput {
                sci_w: ev.sci(&spectrum[i]),
                xci_w: ev.xci(spectrum, i),
            })
            .collect::<Vec<_>>()
    };
    let coarse = run(quad.nodes_per_segment);
    if !quad.check_convergence {
        return Ok(coarse);
    }
    let fine = run(quad.nodes_per_segment * 2);
    for (i, (c, f)) in coarse.iter().zip(&fine).enumerate() {
        let delta = db_change(f.nli_w(), c.nli_w());
        if !(delta <= quad.tolerance_db) {
            let p = spectrum[i].launch_power_w();
            return Err(Error::NonConvergence {
                what: "GN oracle NLI",
                coarse_db: EtaNli::from_power(c.nli_w(), p).db(),
                fine_db: EtaNli::from_power(f.nli_w(), p).db(),
                delta_db: delta,
            });
        }
    }
    Ok(fine)
}
