//! Local stability of the interior fixed point, the Hopf crossing of the
//! restricted model and the parameter-plane region map.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::model::{char_poly_at, fixed_point, CubicCoeffs, Params};

/// Which of the two stability conditions hold at a parameter point.
///
/// Condition 1 is `alpha <= beta + xi`; condition 2 is
/// `delta < alpha^2 xi / ((alpha - beta)(alpha - beta - xi))`, only counted
/// where the denominator is strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    Unstable,
    #[serde(rename = "stable_first")]
    StableFirstOnly,
    #[serde(rename = "stable_second")]
    StableSecondOnly,
    StableBoth,
}

impl RegionLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionLabel::Unstable => "unstable",
            RegionLabel::StableFirstOnly => "stable_first",
            RegionLabel::StableSecondOnly => "stable_second",
            RegionLabel::StableBoth => "stable_both",
        }
    }

    pub fn is_stable(&self) -> bool {
        *self != RegionLabel::Unstable
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegionLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unstable" => RegionLabel::Unstable,
            "stable_first" => RegionLabel::StableFirstOnly,
            "stable_second" => RegionLabel::StableSecondOnly,
            "stable_both" => RegionLabel::StableBoth,
            other => return Err(Error::Config(format!("unknown region label `{other}`"))),
        })
    }
}

fn first_condition(p: &Params) -> bool {
    p.alpha <= p.beta + p.xi
}

fn second_condition(p: &Params) -> bool {
    let denom = (p.alpha - p.beta) * (p.alpha - p.beta - p.xi);
    denom > 0.0 && p.delta < p.alpha * p.alpha * p.xi / denom
}

/// Routh-Hurwitz instability test at the interior fixed point. Equality in
/// the delta bound counts as unstable.
pub fn is_locally_unstable(p: &Params) -> bool {
    p.alpha > p.beta + p.xi
        && p.delta >= p.alpha * p.alpha * p.xi / ((p.alpha - p.beta) * (p.alpha - p.beta - p.xi))
}

pub fn classify_region(p: &Params) -> RegionLabel {
    match (first_condition(p), second_condition(p)) {
        (true, true) => RegionLabel::StableBoth,
        (true, false) => RegionLabel::StableFirstOnly,
        (false, true) => RegionLabel::StableSecondOnly,
        (false, false) => RegionLabel::Unstable,
    }
}

/// Eigenvalues sorted by descending real part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenTriple {
    pub values: [Complex64; 3],
}

impl EigenTriple {
    pub fn max_real(&self) -> f64 {
        self.values[0].re
    }

    /// Number of eigenvalues with zero imaginary part.
    pub fn real_count(&self) -> usize {
        self.values.iter().filter(|z| z.im == 0.0).count()
    }
}

fn sort_desc(mut values: [Complex64; 3]) -> [Complex64; 3] {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    values
}

/// Roots of a real cubic.
///
/// A real root is found from the depressed cubic (Cardano for one real root,
/// the trigonometric form for three), polished by Newton on the original
/// polynomial, and deflated; the remaining quadratic is solved in closed
/// form, so complex roots come out as exact conjugates.
pub fn cubic_roots(c: &CubicCoeffs) -> [Complex64; 3] {
    let a = c.a2 / c.a3;
    let b = c.a1 / c.a3;
    let d = c.a0 / c.a3;
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + d;
    let disc = q * q / 4.0 + p * p * p / 27.0;

    let y = if disc > 0.0 {
        let u = (-q / 2.0 - q.signum() * disc.sqrt()).cbrt();
        if u == 0.0 {
            0.0
        } else {
            u - p / (3.0 * u)
        }
    } else if p < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        m * (arg.acos() / 3.0).cos()
    } else {
        0.0
    };

    let monic = |x: f64| ((x + a) * x + b) * x + d;
    let monic_prime = |x: f64| (3.0 * x + 2.0 * a) * x + b;
    let mut r = y - shift;
    for _ in 0..4 {
        let fp = monic_prime(r);
        if fp == 0.0 {
            break;
        }
        let next = r - monic(r) / fp;
        if monic(next).abs() < monic(r).abs() {
            r = next;
        } else {
            break;
        }
    }

    // x^3 + a x^2 + b x + d = (x - r)(x^2 + e x + f)
    let e = a + r;
    let f = b + r * e;
    let qd = e * e - 4.0 * f;
    let (r1, r2) = if qd >= 0.0 {
        let t = -(e + e.signum() * qd.sqrt()) / 2.0;
        if t == 0.0 {
            (Complex64::new(0.0, 0.0), Complex64::new(-e, 0.0))
        } else {
            (Complex64::new(t, 0.0), Complex64::new(f / t, 0.0))
        }
    } else {
        let im = (-qd).sqrt() / 2.0;
        (Complex64::new(-e / 2.0, im), Complex64::new(-e / 2.0, -im))
    };
    sort_desc([Complex64::new(r, 0.0), r1, r2])
}

/// Eigenvalues of the Jacobian at the interior fixed point.
pub fn eigenvalues_at_fixed_point(params: &Params) -> Result<EigenTriple> {
    let fp = fixed_point(params)?;
    Ok(EigenTriple {
        values: cubic_roots(&char_poly_at(&fp.state, params)),
    })
}

/// Depressed cubic `y^3 + p y + q = 0` obtained from `lambda = y + shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedCubic {
    pub p: f64,
    pub q: f64,
    pub discriminant: f64,
    pub shift: f64,
}

impl ReducedCubic {
    fn new(p: f64, q: f64, shift: f64) -> Self {
        ReducedCubic {
            p,
            q,
            discriminant: q * q / 4.0 + p * p * p / 27.0,
            shift,
        }
    }

    /// Generic reduction of `a lambda^3 + b lambda^2 + c lambda + d`.
    pub fn from_coeffs(c: &CubicCoeffs) -> Self {
        let (a, b, cc, d) = (c.a3, c.a2, c.a1, c.a0);
        let p = cc / a - b * b / (3.0 * a * a);
        let q = d / a - b * cc / (3.0 * a * a) + 2.0 * b * b * b / (27.0 * a * a * a);
        Self::new(p, q, -b / (3.0 * a))
    }

    /// One real root and a complex-conjugate pair.
    pub fn has_complex_pair(&self) -> bool {
        self.discriminant > 0.0
    }

    /// Cardano's formula in complex arithmetic, shifted back to `lambda`.
    pub fn roots(&self) -> [Complex64; 3] {
        let half_q = Complex64::new(-self.q / 2.0, 0.0);
        let sqrt_disc = Complex64::new(self.discriminant, 0.0).sqrt();
        let mut w = half_q + sqrt_disc;
        if w.norm() < (half_q - sqrt_disc).norm() {
            w = half_q - sqrt_disc;
        }
        let u = w.powf(1.0 / 3.0);
        let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        let mut out = [Complex64::new(0.0, 0.0); 3];
        let mut uk = u;
        for root in &mut out {
            let y = if uk.norm() == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                uk - self.p / (3.0 * uk)
            };
            *root = y + self.shift;
            uk *= omega;
        }
        sort_desc(out)
    }
}

/// Reduction of the restricted-model characteristic polynomial in the
/// closed form `b = -sqrt(xi (beta + xi))`:
///
/// ```text
/// p = xi (alpha xi + (alpha + 2 beta / 3)(beta + xi) + (2 alpha + beta) b) / beta
/// q = b (-5/3 (alpha / beta)(xi + b)^2 + xi b / 3 + 7 b^2 / 27)
/// ```
pub fn cardano_reduce(beta: f64, xi: f64, alpha: f64) -> ReducedCubic {
    let b = -(xi * (beta + xi)).sqrt();
    let p = (alpha * xi + (alpha + 2.0 / 3.0 * beta) * (beta + xi) + (2.0 * alpha + beta) * b)
        / beta
        * xi;
    let q = (-5.0 / 3.0 * alpha / beta * (xi + b).powi(2) + xi * b / 3.0 + 7.0 / 27.0 * b * b) * b;
    // lambda = y - b / (3a) with a = -1
    ReducedCubic::new(p, q, b / 3.0)
}

/// Coefficients `(a, b, c, d)` of the restricted-model characteristic
/// polynomial in closed form.
pub fn restricted_char_poly(beta: f64, xi: f64, alpha: f64) -> CubicCoeffs {
    let b = -(xi * (beta + xi)).sqrt();
    CubicCoeffs {
        a3: -1.0,
        a2: b,
        a1: -(alpha + beta) / beta * (xi + b).powi(2) + xi * (xi + b),
        a0: 2.0 * alpha / beta * b * (xi + b).powi(2),
    }
}

/// Lower bound on alpha above which `p > 0` (hence a complex pair) in the
/// restricted model.
pub fn complex_pair_alpha_bound(beta: f64, xi: f64) -> f64 {
    let sx = xi.sqrt();
    let sbx = (beta + xi).sqrt();
    (sx - 2.0 / 3.0 * sbx) / (sx - sbx).powi(2) * beta * sbx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfPoint {
    /// `beta + xi + sqrt(xi (beta + xi))`.
    pub alpha: f64,
    /// Whether `beta > 11 xi / 25`, which guarantees a genuine Hopf crossing.
    pub condition_holds: bool,
}

pub fn hopf_alpha(beta: f64, xi: f64) -> HopfPoint {
    HopfPoint {
        alpha: beta + xi + (xi * (beta + xi)).sqrt(),
        condition_holds: beta > 11.0 / 25.0 * xi,
    }
}

pub const HOPF_BISECTION_TOL: f64 = 1e-8;
const HOPF_BISECTION_MAX_ITER: usize = 200;

/// Bisection on the sign of the largest eigenvalue real part along
/// `alpha = delta` over `[lo, hi]`.
pub fn locate_hopf(beta: f64, xi: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidRange {
            name: "alpha",
            lo,
            hi,
        });
    }
    let growth = |alpha: f64| -> Result<f64> {
        Ok(eigenvalues_at_fixed_point(&Params::restricted(beta, xi, alpha)?)?.max_real())
    };
    let (mut lo, mut hi) = (lo, hi);
    let (g_lo, g_hi) = (growth(lo)?, growth(hi)?);
    if g_lo.signum() == g_hi.signum() {
        return Err(Error::Config(format!(
            "no sign change of max Re(lambda) on [{lo}, {hi}]: {g_lo:e}, {g_hi:e}"
        )));
    }
    let lo_sign = g_lo.signum();
    for _ in 0..HOPF_BISECTION_MAX_ITER {
        if hi - lo <= HOPF_BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if growth(mid)?.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Classification of an (alpha, delta) grid at fixed beta, xi.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub beta: f64,
    pub xi: f64,
    pub alphas: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Row-major: `labels[a * deltas.len() + d]`.
    pub labels: Vec<RegionLabel>,
}

impl StabilityGrid {
    pub fn label(&self, alpha_idx: usize, delta_idx: usize) -> RegionLabel {
        self.labels[alpha_idx * self.deltas.len() + delta_idx]
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, RegionLabel)> + '_ {
        self.alphas.iter().enumerate().flat_map(move |(ai, &a)| {
            self.deltas
                .iter()
                .enumerate()
                .map(move |(di, &d)| (a, d, self.label(ai, di)))
        })
    }

    /// CSV with header `alpha,delta,label`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["alpha", "delta", "label"])?;
        for (a, d, label) in self.iter() {
            w.write_record([a.to_string(), d.to_string(), label.as_str().to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Right end points of `resolution` equal cells of `(lo, hi]`, so a range
/// starting at zero never samples zero itself.
pub fn grid_axis(name: &'static str, range: (f64, f64), resolution: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidRange { name, lo, hi });
    }
    if resolution == 0 {
        return Err(Error::Config(format!("{name} resolution must be >= 1")));
    }
    Ok((1..=resolution)
        .map(|k| lo + (hi - lo) * k as f64 / resolution as f64)
        .collect())
}

pub fn stability_map(
    beta: f64,
    xi: f64,
    alpha_range: (f64, f64),
    delta_range: (f64, f64),
    resolution: usize,
) -> Result<StabilityGrid> {
    stability_map_with(
        beta,
        xi,
        alpha_range,
        delta_range,
        resolution,
        Strategy::default(),
    )
}

pub fn stability_map_with(
    beta: f64,
    xi: f64,
    alpha_range: (f64, f64),
    delta_range: (f64, f64),
    resolution: usize,
    strategy: Strategy,
) -> Result<StabilityGrid> {
    let alphas = grid_axis("alpha", alpha_range, resolution)?;
    let deltas = grid_axis("delta", delta_range, resolution)?;
    let nd = deltas.len();
    let labels = exec::try_map_indexed(alphas.len() * nd, strategy, |k| {
        Params::new(beta, xi, alphas[k / nd], deltas[k % nd]).map(|p| classify_region(&p))
    })?;
    Ok(StabilityGrid {
        beta,
        xi,
        alphas,
        deltas,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(alpha: f64, delta: f64) -> Params {
        Params::new(0.5, 0.4, alpha, delta).unwrap()
    }

    #[test]
    fn caption_labels() {
        assert_eq!(classify_region(&p(0.65, 0.6)), RegionLabel::StableFirstOnly);
        assert_eq!(
            classify_region(&p(0.95, 0.6)),
            RegionLabel::StableSecondOnly
        );
        assert_eq!(classify_region(&p(0.45, 3.0)), RegionLabel::StableBoth);
        assert_eq!(classify_region(&p(1.5, 2.5)), RegionLabel::Unstable);
        assert_eq!(classify_region(&p(1.75, 1.75)), RegionLabel::Unstable);
        assert!(is_locally_unstable(&p(1.5, 2.5)));
        assert!(!is_locally_unstable(&p(0.65, 0.6)));
    }

    #[test]
    fn first_condition_forces_stability() {
        for alpha in [0.05, 0.3, 0.5, 0.7, 0.9] {
            for delta in [0.01, 1.0, 100.0] {
                assert!(!is_locally_unstable(&p(alpha, delta)));
            }
        }
    }

    #[test]
    fn boundary_tie_is_unstable() {
        // alpha = 1.5: bound = 2.25 * 0.4 / (1.0 * 0.6) = 1.5
        let bound = 1.5f64 * 1.5 * 0.4 / (1.0 * 0.6);
        assert!(is_locally_unstable(&p(1.5, bound)));
        assert_eq!(classify_region(&p(1.5, bound)), RegionLabel::Unstable);
    }

    #[test]
    fn eigen_signs_along_restricted_line() {
        let at = |a: f64| eigenvalues_at_fixed_point(&p(a, a)).unwrap();
        assert!(at(1.5).max_real().abs() < 1e-6);
        assert!(at(1.75).max_real() > 0.0);
        assert!(at(1.0).values.iter().all(|z| z.re < 0.0));
    }

    #[test]
    fn cubic_roots_of_known_polynomials() {
        // -(x - 1)(x + 2)(x + 3) = -x^3 - 4x^2 - x + 6
        let c = CubicCoeffs {
            a3: -1.0,
            a2: -4.0,
            a1: -1.0,
            a0: 6.0,
        };
        let r = cubic_roots(&c);
        assert_abs_diff_eq!(r[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[1].re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[2].re, -3.0, epsilon = 1e-12);
        // (x + 1)(x^2 + 4) = x^3 + x^2 + 4x + 4
        let c = CubicCoeffs {
            a3: 1.0,
            a2: 1.0,
            a1: 4.0,
            a0: 4.0,
        };
        let r = cubic_roots(&c);
        assert_abs_diff_eq!(r[0].re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r[0].im, 2.0, epsilon = 1e-12);
        assert_eq!(r[1], r[0].conj());
        assert_abs_diff_eq!(r[2].re, -1.0, epsilon = 1e-12);
        // triple root at zero
        let r = cubic_roots(&CubicCoeffs {
            a3: 2.0,
            a2: 0.0,
            a1: 0.0,
            a0: 0.0,
        });
        assert!(r.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn closed_form_reduction_matches_generic() {
        for (beta, xi, alpha) in [
            (0.5, 0.4, 1.5),
            (0.3, 0.1, 0.7),
            (0.2, 0.1, 0.5),
            (2.0, 0.3, 0.1),
        ] {
            let closed = cardano_reduce(beta, xi, alpha);
            let generic = ReducedCubic::from_coeffs(&restricted_char_poly(beta, xi, alpha));
            assert_abs_diff_eq!(closed.p, generic.p, epsilon = 1e-12);
            assert_abs_diff_eq!(closed.q, generic.q, epsilon = 1e-12);
            assert_abs_diff_eq!(closed.shift, generic.shift, epsilon = 1e-15);

            let fp = fixed_point(&Params::restricted(beta, xi, alpha).unwrap()).unwrap();
            let from_jac = char_poly_at(&fp.state, &Params::restricted(beta, xi, alpha).unwrap());
            let closed_poly = restricted_char_poly(beta, xi, alpha);
            assert_abs_diff_eq!(from_jac.a2, closed_poly.a2, epsilon = 1e-12);
            assert_abs_diff_eq!(from_jac.a1, closed_poly.a1, epsilon = 1e-12);
            assert_abs_diff_eq!(from_jac.a0, closed_poly.a0, epsilon = 1e-12);
        }
    }

    #[test]
    fn reduced_cubic_at_hopf_side_has_complex_pair() {
        let red = cardano_reduce(0.5, 0.4, 1.5);
        assert!(red.discriminant > 0.0);
        let fp = fixed_point(&p(1.5, 1.5)).unwrap();
        let roots = cubic_roots(&char_poly_at(&fp.state, &p(1.5, 1.5)));
        assert_eq!(roots.iter().filter(|z| z.im != 0.0).count(), 2);
        for (a, b) in red.roots().iter().zip(roots.iter()) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn hopf_alpha_values() {
        let h = hopf_alpha(0.5, 0.4);
        assert_abs_diff_eq!(h.alpha, 1.5, epsilon = 1e-15);
        assert!(h.condition_holds);
        assert_abs_diff_eq!(hopf_alpha(0.3, 0.1).alpha, 0.6, epsilon = 1e-15);
        assert!(!hopf_alpha(0.44, 1.0).condition_holds);
        assert!(hopf_alpha(0.4401, 1.0).condition_holds);
    }

    #[test]
    fn bisection_finds_hopf() {
        let a = locate_hopf(0.5, 0.4, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(a, 1.5, epsilon = 1e-6);
        assert!(locate_hopf(0.5, 0.4, 1.6, 2.0).is_err());
        assert!(locate_hopf(0.5, 0.4, 2.0, 1.0).is_err());
    }

    #[test]
    fn grid_shapes_and_errors() {
        let g = stability_map(0.5, 0.4, (0.0, 3.0), (0.0, 3.0), 1).unwrap();
        assert_eq!(g.labels, vec![classify_region(&p(3.0, 3.0))]);
        assert!(stability_map(0.5, 0.4, (3.0, 1.0), (0.0, 3.0), 10).is_err());
        assert!(stability_map(0.5, 0.4, (1.0, 1.0), (0.0, 3.0), 10).is_err());
        assert!(stability_map(0.5, 0.4, (0.0, 3.0), (0.0, 3.0), 0).is_err());

        // condition 1 is delta-independent: the unstable set in each alpha
        // column is empty whenever alpha <= beta + xi
        let g = stability_map(0.5, 0.4, (0.0, 3.0), (0.0, 3.0), 60).unwrap();
        for (ai, &a) in g.alphas.iter().enumerate() {
            if a <= 0.9 {
                assert!((0..g.deltas.len()).all(|di| g.label(ai, di).is_stable()));
            }
        }
    }

    #[test]
    fn grid_csv_header_and_labels() {
        let g = stability_map(0.5, 0.4, (0.0, 3.0), (0.0, 3.0), 2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("alpha,delta,label"));
        assert_eq!(lines.count(), 4);
        assert_eq!(
            "stable_second".parse::<RegionLabel>().unwrap(),
            RegionLabel::StableSecondOnly
        );
    }
}
