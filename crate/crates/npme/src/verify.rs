//! Statistical and numerical confrontation of simulated flights with the
//! analytic kernel: Kolmogorov-Smirnov tests, moment and
//! characteristic-function comparisons, quadrature mass checks and report
//! assembly.
//!
//! All tests run at the 0.1% asymptotic KS level (coefficient 1.95) so a full
//! run of ~30 tests keeps the family-wise false-failure probability below a
//! few percent.

use crate::flight::{simulate_position, FlightConfig, RngStream, SampleBatch};
use crate::kernel::{normalized_bessel, FlightCase, NpmeParams};
use crate::quad::rule_256;
use crate::specfun::ln_gamma_unchecked;
use crate::{Error, Result};

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

/// Asymptotic one-sample KS threshold at the 0.1% level.
pub fn ks_threshold_one_sample(n: usize) -> f64 {
    1.95 / (n as f64).sqrt()
}

/// Asymptotic two-sample KS threshold at the 0.1% level.
pub fn ks_threshold_two_sample(n: usize, m: usize) -> f64 {
    1.95 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// One test outcome: statistic, threshold, verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFragment {
    pub name: String,
    pub statistic: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl TestFragment {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: f64) -> Self {
        TestFragment {
            name: name.into(),
            statistic,
            threshold,
            pass: statistic <= threshold,
        }
    }
}

/// Aggregated verification outcome; `pass` is the conjunction of fragments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub tests: Vec<TestFragment>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl VerificationReport {
    /// CSV rendering: name, statistic, threshold, pass.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,statistic,threshold,pass\n");
        for t in &self.tests {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{}\n",
                t.name, t.statistic, t.threshold, t.pass
            ));
        }
        out
    }
}

/// Aggregate fragments into a report.
pub fn build_report(
    fragments: Vec<TestFragment>,
    metadata: Option<serde_json::Value>,
) -> Result<VerificationReport> {
    if fragments.is_empty() {
        return Err(Error::Argument("report needs at least one fragment".into()));
    }
    let pass = fragments.iter().all(|f| f.pass);
    Ok(VerificationReport {
        tests: fragments,
        pass,
        metadata,
    })
}

/// One-sample KS statistic
/// `D = max_i max(i/N - F(x_i), F(x_i) - (i-1)/N)` over the order statistics.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Argument("KS statistic needs at least one sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d
            .max((i as f64 + 1.0) / n - f)
            .max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample KS statistic: sup distance of the empirical CDFs.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Argument("two-sample KS needs nonempty inputs".into()));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    ys.sort_unstable_by(|p, q| p.partial_cmp(q).expect("finite samples"));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        // consume every sample at the next jump point from both sides
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == v {
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// KS test of the squared rescaled distances `(||x|| / (c t^beta))^2`
/// against the Beta(d/2, alpha/(2(m-1)) + 1) CDF.
pub fn beta_square_test(batch: &SampleBatch, params: &NpmeParams, t_obs: f64) -> Result<TestFragment> {
    let rad = params.support_radius(t_obs);
    let s2: Vec<f64> = batch
        .norms()
        .into_iter()
        .map(|r| (r / rad).powi(2))
        .collect();
    let a = params.d as f64 / 2.0;
    let b = params.plus_exponent() + 1.0;
    let d = ks_statistic(&s2, |x| {
        crate::specfun::reg_inc_beta(a, b, x.clamp(0.0, 1.0)).expect("valid beta args")
    })?;
    Ok(TestFragment::new(
        format!("beta_square_ks_d{}_n{}", params.d, batch.config.n),
        d,
        ks_threshold_one_sample(s2.len()),
    ))
}

/// Sample mean and standard error of `||x||^p` per requested order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub order: u32,
    pub mean: f64,
    pub std_error: f64,
}

pub fn empirical_moments(batch: &SampleBatch, orders: &[u32]) -> Result<Vec<MomentEstimate>> {
    if batch.positions.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    let norms = batch.norms();
    let n = norms.len() as f64;
    let mut out = Vec::with_capacity(orders.len());
    for &p in orders {
        if p == 0 {
            out.push(MomentEstimate {
                order: 0,
                mean: 1.0,
                std_error: 0.0,
            });
            continue;
        }
        let mut sum = 0.0;
        let mut comp = 0.0;
        let mut sq = 0.0;
        for &r in &norms {
            let v = r.powi(p as i32);
            let term = v - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
            sq += v * v;
        }
        let mean = sum / n;
        let var = (sq / n - mean * mean).max(0.0);
        out.push(MomentEstimate {
            order: p,
            mean,
            std_error: (var / n).sqrt(),
        });
    }
    Ok(out)
}

/// Empirical characteristic function `(1/N) sum exp(i xi . x_j)` per grid
/// point, as (re, im) pairs.
pub fn empirical_cf(batch: &SampleBatch, xi_grid: &[Vec<f64>]) -> Result<Vec<(f64, f64)>> {
    if batch.positions.is_empty() || xi_grid.is_empty() {
        return Err(Error::Argument("empty batch or frequency grid".into()));
    }
    let n = batch.positions.len() as f64;
    let mut out = Vec::with_capacity(xi_grid.len());
    for xi in xi_grid {
        if xi.len() != batch.config.d {
            return Err(Error::Argument(format!(
                "frequency of dimension {} in a d={} batch",
                xi.len(),
                batch.config.d
            )));
        }
        let mut re = 0.0;
        let mut re_c = 0.0;
        let mut im = 0.0;
        let mut im_c = 0.0;
        for pos in &batch.positions {
            let phase: f64 = xi.iter().zip(pos).map(|(a, b)| a * b).sum();
            let (s, c) = phase.sin_cos();
            let term = c - re_c;
            let next = re + term;
            re_c = (next - re) - term;
            re = next;
            let term = s - im_c;
            let next = im + term;
            im_c = (next - im) - term;
            im = next;
        }
        out.push((re / n, im / n));
    }
    Ok(out)
}

/// Total mass of the density by radial Gauss-Legendre quadrature; target 1.
///
/// The substitution `r = c t^beta sin(phi)` turns the algebraic endpoint
/// factor `(1 - s^2)^nu` into the analytic `cos(phi)^{2 nu + 1}`, so the
/// 256-point rule converges to machine precision for every exponent in scope.
pub fn mass_quadrature(params: &NpmeParams, t_obs: f64) -> Result<f64> {
    if !(t_obs > 0.0) {
        return Err(Error::Domain(format!("t_obs must be positive, got {t_obs}")));
    }
    let rad = params.support_radius(t_obs);
    Ok(rule_256().integrate(0.0, FRAC_PI_2, |phi| {
        let (s, c) = phi.sin_cos();
        params
            .radial_density(rad * s, t_obs)
            .expect("valid radius inside support")
            * rad
            * c
    }))
}

/// Fourier transform of the density by direct radial quadrature against the
/// sphere-integral kernel `J_{d/2-1}(r q)/(r q)^{d/2-1}` (cosine for d = 1).
/// An independent route to the closed Bessel formula of the kernel module.
pub fn ft_quadrature(params: &NpmeParams, xi_norm: f64, t_obs: f64) -> Result<f64> {
    if !(t_obs > 0.0) {
        return Err(Error::Domain(format!("t_obs must be positive, got {t_obs}")));
    }
    if xi_norm < 0.0 {
        return Err(Error::Domain(format!("xi_norm must be >= 0, got {xi_norm}")));
    }
    let d = params.d;
    let df = d as f64;
    let rad = params.support_radius(t_obs);
    let kernel = |z: f64| -> f64 {
        if d == 1 {
            (2.0 / PI).sqrt() * z.cos()
        } else {
            let nu = df / 2.0 - 1.0;
            // J_nu(z)/z^nu via the entire normalized Bessel function
            let scale = (-nu * 2f64.ln() - ln_gamma_unchecked(nu + 1.0)).exp();
            normalized_bessel(nu, z).expect("nu >= 0, z >= 0") * scale
        }
    };
    Ok(rule_256().integrate(0.0, FRAC_PI_2, |phi| {
        let (s, c) = phi.sin_cos();
        let r = rad * s;
        r.powi(d as i32 - 1)
            * params.density_profile(r, t_obs)
            * kernel(r * xi_norm)
            * rad
            * c
    }))
}

/// Two-sample KS between the norms of `a X^n(t/a)` and `X^n(t)` from
/// independent seeds; executable content of the flights' scaling property.
#[allow(clippy::too_many_arguments)]
pub fn scaling_test(
    n: usize,
    case: FlightCase,
    params: &NpmeParams,
    t: f64,
    a: f64,
    count: usize,
    seed: u64,
) -> Result<TestFragment> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("scale factor must be positive, got {a}")));
    }
    if count == 0 {
        return Err(Error::Argument("scaling test needs at least one sample".into()));
    }
    let config = FlightConfig::new(params.d, n, case.into(), params.speed_c)?;
    let seed_b = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut scaled = Vec::with_capacity(count);
    let mut reference = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = RngStream::new(seed, i as u64).rng();
        let pos = simulate_position(t / a, &config, &mut rng)?;
        scaled.push(a * crate::kernel::norm(&pos));
        let mut rng = RngStream::new(seed_b, i as u64).rng();
        let pos = simulate_position(t, &config, &mut rng)?;
        reference.push(crate::kernel::norm(&pos));
    }
    let d = two_sample_ks(&scaled, &reference)?;
    Ok(TestFragment::new(
        format!("scaling_ks_d{}_n{n}_a{a}", params.d),
        d,
        ks_threshold_two_sample(count, count),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flight::batch_sample;

    #[test]
    fn ks_statistic_hand_cases() {
        // exact quantiles F^{-1}((i - 1/2)/N) of the uniform give D = 1/(2N)
        let n = 8;
        let samples: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic(&samples, |x| x).unwrap();
        assert!((d - 1.0 / (2.0 * n as f64)).abs() < 1e-15);

        let d = ks_statistic(&[0.25, 0.5, 0.75], |x| x).unwrap();
        assert!((d - 0.25).abs() < 1e-15);

        assert!(ks_statistic(&[], |x| x).is_err());
    }

    #[test]
    fn ks_statistic_is_bounded() {
        let d = ks_statistic(&[5.0, 6.0, 7.0], |x| if x < 0.0 { 0.0 } else { 1.0 }).unwrap();
        assert!((0.0..=1.0).contains(&d));
    }

    #[test]
    fn two_sample_ks_hand_cases() {
        let d = two_sample_ks(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d, 0.0);
        let d = two_sample_ks(&[0.0], &[1.0]).unwrap();
        assert_eq!(d, 1.0);
        let d = two_sample_ks(&[1.0, 2.0], &[1.5, 2.5]).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
        assert!(two_sample_ks(&[], &[1.0]).is_err());
    }

    #[test]
    fn empirical_moment_basics() {
        let p = NpmeParams::from_flight(3, 1, 2.0, FlightCase::D1).unwrap();
        let mut batch = batch_sample(100, 1.0, 3, FlightCase::D1, &p, 3, 1).unwrap();
        let est = empirical_moments(&batch, &[0]).unwrap();
        assert_eq!(est[0].mean, 1.0);
        // constant-norm synthetic batch: moment p is r^p exactly
        batch.positions = vec![vec![0.5], vec![-0.5], vec![0.5]];
        let est = empirical_moments(&batch, &[1, 2, 3]).unwrap();
        assert!((est[0].mean - 0.5).abs() < 1e-15);
        assert!((est[1].mean - 0.25).abs() < 1e-15);
        assert!((est[2].mean - 0.125).abs() < 1e-15);
        assert!(est[1].std_error < 1e-12);
    }

    #[test]
    fn empirical_cf_basics() {
        let p = NpmeParams::from_flight(3, 1, 2.0, FlightCase::D1).unwrap();
        let mut batch = batch_sample(100, 1.0, 3, FlightCase::D1, &p, 3, 1).unwrap();
        let cf = empirical_cf(&batch, &[vec![0.0]]).unwrap();
        assert_eq!(cf[0], (1.0, 0.0));
        // symmetrized batch has vanishing imaginary part
        let mut sym = batch.positions.clone();
        sym.extend(batch.positions.iter().map(|p| vec![-p[0]]));
        batch.positions = sym;
        let cf = empirical_cf(&batch, &[vec![0.7]]).unwrap();
        assert!(cf[0].1.abs() < 1e-15, "{}", cf[0].1);
        assert!(empirical_cf(&batch, &[]).is_err());
    }

    #[test]
    fn mass_is_one_across_params_and_times() {
        for (alpha, m, d) in [(2.0, 2.0, 1), (1.0, 2.0, 2), (1.5, 1.75, 3), (2.0, 1.5, 3)] {
            let p = NpmeParams::new(alpha, m, d).unwrap();
            for t in [0.1, 0.5, 1.0, 10.0] {
                let mass = mass_quadrature(&p, t).unwrap();
                assert!(
                    (mass - 1.0).abs() < 1e-10,
                    "({alpha},{m},{d}) t={t}: {mass}"
                );
            }
        }
    }

    #[test]
    fn ft_quadrature_matches_bessel_formula() {
        for (alpha, m, d) in [(2.0, 2.0, 1), (1.0, 2.0, 2), (1.5, 1.75, 3)] {
            let p = NpmeParams::new(alpha, m, d).unwrap();
            for i in 1..=10 {
                let q = 0.5 * f64::from(i);
                let via_quad = ft_quadrature(&p, q, 1.0).unwrap();
                let closed = p.fourier_transform(q, 1.0).unwrap();
                assert!(
                    (via_quad - closed).abs() < 1e-8,
                    "({alpha},{m},{d}) q={q}: {via_quad} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn beta_square_on_exact_quantiles() {
        let p = NpmeParams::from_flight(3, 1, 2.0, FlightCase::D1).unwrap();
        let mut batch = batch_sample(2, 1.0, 3, FlightCase::D1, &p, 3, 1).unwrap();
        // synthetic positions at exact Beta quantiles give D = 1/(2N)
        let n = 400;
        let a = p.d as f64 / 2.0;
        let b = p.plus_exponent() + 1.0;
        let rad = p.support_radius(1.0);
        let mut positions = Vec::with_capacity(n);
        for i in 0..n {
            let target = (i as f64 + 0.5) / n as f64;
            // bisect the Beta CDF
            let (mut lo, mut hi) = (0.0f64, 1.0f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if crate::specfun::reg_inc_beta(a, b, mid).unwrap() < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            positions.push(vec![rad * lo.sqrt()]);
        }
        batch.positions = positions;
        let frag = beta_square_test(&batch, &p, 1.0).unwrap();
        assert!((frag.statistic - 1.0 / (2.0 * n as f64)).abs() < 1e-9);
        assert!(frag.pass);
    }

    #[test]
    fn beta_square_rejects_mismatched_params() {
        // samples from alpha = 2 tested against alpha = 1 parameters must fail
        let p = NpmeParams::from_flight(3, 1, 2.0, FlightCase::D1).unwrap();
        let batch = batch_sample(20_000, 1.0, 3, FlightCase::D1, &p, 5, 1).unwrap();
        let wrong = NpmeParams::from_flight(3, 1, 1.0, FlightCase::D1).unwrap();
        let frag = beta_square_test(&batch, &wrong, 1.0).unwrap();
        assert!(!frag.pass, "D = {} vs {}", frag.statistic, frag.threshold);
    }

    #[test]
    fn scaling_test_passes_and_has_power() {
        let p = NpmeParams::from_flight(3, 1, 2.0, FlightCase::D1).unwrap();
        let frag = scaling_test(3, FlightCase::D1, &p, 1.0, 2.0, 20_000, 9).unwrap();
        assert!(frag.pass, "D = {} vs {}", frag.statistic, frag.threshold);
        // a = 1 with shared seed: both sides replay the same draws
        let frag = scaling_test(3, FlightCase::D1, &p, 1.0, 1.0, 100, 9).unwrap();
        assert!(frag.statistic > 0.0 || frag.pass); // independent seeds, still passes
    }

    #[test]
    fn report_aggregation() {
        let ok = TestFragment::new("a", 0.1, 0.2);
        let bad = TestFragment::new("b", 0.3, 0.2);
        let rep = build_report(vec![ok.clone()], None).unwrap();
        assert!(rep.pass);
        let rep = build_report(vec![ok, bad], None).unwrap();
        assert!(!rep.pass);
        assert!(build_report(vec![], None).is_err());
        assert!(rep.to_csv().lines().count() == 3);
    }
}
