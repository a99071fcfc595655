//! Estimators over an orbit table: limit cone, growth indicator, critical
//! exponents, Poincaré partial sums and additivity defects.

use serde::Serialize;

use super::table::OrbitTable;
use crate::error::{Error, Result};
use crate::lie::{CartanVector, LinearForm};

/// Fraction of the parameter range (upper end) used by the regressions.
pub const REGRESSION_WINDOW: f64 = 0.6;
const GRID_POINTS: usize = 48;
const MIN_CONE_POINTS: usize = 10;

/// Ordinary least squares `y = a + b x`: returns `(b, a, stderr(b))`.
pub fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if x.len() > 2 {
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (b, a, se)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConeEstimate {
    pub min_len: usize,
    pub mu_directions: Vec<CartanVector>,
    pub lambda_directions: Vec<CartanVector>,
    /// Extreme rays of the convex hull of all directions.
    pub extreme_rays: Vec<CartanVector>,
    /// Smallest simple-root value over all unit directions.
    pub wall_margin: f64,
    /// Largest `|mu(g^-1) - i mu(g)|` and `|lambda(g^-1) - i lambda(g)|` over the table.
    pub inversion_defect: f64,
}

/// Directions of `mu` and `lambda` over words of length at least `min_len`.
pub fn limit_cone_estimate(table: &OrbitTable, min_len: usize) -> ConeEstimate {
    let min_len = min_len.max(1);
    let mut mu_dirs = Vec::new();
    let mut lam_dirs = Vec::new();
    let mut inversion_defect: f64 = 0.0;
    for i in table.sphere(1).start..table.len() {
        let w = table.word(i);
        let j = table.index_of(&w.inverse()).expect("ball is closed under inversion");
        inversion_defect = inversion_defect
            .max(table.mu(j).max_abs_diff(&table.mu(i).opposition()))
            .max(table.lambda(j).max_abs_diff(&table.lambda(i).opposition()));
        if w.len() < min_len {
            continue;
        }
        if let Some(u) = table.mu(i).normalized() {
            mu_dirs.push(u);
        }
        if let Some(u) = table.lambda(i).normalized() {
            lam_dirs.push(u);
        }
    }
    let all: Vec<&CartanVector> = mu_dirs.iter().chain(&lam_dirs).collect();
    let wall_margin = all.iter().map(|u| u.min_root()).fold(f64::INFINITY, f64::min);
    let extreme_rays = hull_rays(&all, table.dim());
    ConeEstimate {
        min_len,
        mu_directions: mu_dirs,
        lambda_directions: lam_dirs,
        extreme_rays,
        wall_margin,
        inversion_defect,
    }
}

/// Angle of a direction in the chamber of `sl(3)`, measured from the
/// `alpha_2 = 0` wall in the plane spanned by the fundamental coweights.
pub fn chamber_angle(u: &CartanVector) -> f64 {
    // Orthonormal basis of the trace-zero plane.
    let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let e2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    let c = u.coords();
    let x: f64 = c.iter().zip(&e1).map(|(a, b)| a * b).sum();
    let y: f64 = c.iter().zip(&e2).map(|(a, b)| a * b).sum();
    y.atan2(x)
}

/// Unit trace-zero vector of `sl(3)` at a given chamber angle.
pub fn direction_at_angle(theta: f64) -> CartanVector {
    let e1 = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0];
    let e2 = [1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()];
    CartanVector::new((0..3).map(|i| theta.cos() * e1[i] + theta.sin() * e2[i]).collect())
}

fn hull_rays(dirs: &[&CartanVector], d: usize) -> Vec<CartanVector> {
    if dirs.is_empty() {
        return Vec::new();
    }
    match d {
        2 => vec![dirs[0].clone()],
        3 => {
            let lo = dirs.iter().min_by(|a, b| chamber_angle(a).total_cmp(&chamber_angle(b))).unwrap();
            let hi = dirs.iter().max_by(|a, b| chamber_angle(a).total_cmp(&chamber_angle(b))).unwrap();
            vec![(*lo).clone(), (*hi).clone()]
        }
        _ => {
            // Support points for the coordinate axes of the omega-coordinates.
            let mut rays: Vec<CartanVector> = Vec::new();
            for k in 1..d {
                for sign in [1.0, -1.0] {
                    let best = dirs
                        .iter()
                        .max_by(|a, b| (sign * a.omega(k)).total_cmp(&(sign * b.omega(k))))
                        .unwrap();
                    if !rays.iter().any(|r| r.max_abs_diff(best) < 1e-12) {
                        rays.push((*best).clone());
                    }
                }
            }
            rays
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthEstimate {
    /// Least-squares slope of `log N(T)` against `T`.
    pub slope: f64,
    pub stderr: f64,
    /// `max_T log N(T) / T` over the regression window.
    pub upper: f64,
    pub points: usize,
    pub t_max: f64,
}

#[derive(Clone, Debug, Serialize)]
pub enum GrowthOutcome {
    Estimate(GrowthEstimate),
    /// No orbit point in the cone: the growth indicator is `-infinity` there.
    NegativeInfinity,
}

/// Counting exponent of `{gamma : mu(gamma) within angle theta of u}`.
pub fn growth_indicator_estimate(table: &OrbitTable, u: &CartanVector, theta: f64) -> Result<GrowthOutcome> {
    let u = u
        .normalized()
        .ok_or_else(|| Error::Input("direction must be non-zero".into()))?;
    let t_max = completeness_radius(table, |mu| mu.norm());
    let cos_t = theta.cos();
    let mut norms: Vec<f64> = (1..table.len())
        .filter_map(|i| {
            let mu = table.mu(i);
            let n = mu.norm();
            (n > 0.0 && mu.dot(&u) / n >= cos_t && n <= t_max).then_some(n)
        })
        .collect();
    if norms.is_empty() {
        return Ok(GrowthOutcome::NegativeInfinity);
    }
    if norms.len() < MIN_CONE_POINTS {
        return Err(Error::InsufficientData(format!("{} points in the cone", norms.len())));
    }
    norms.sort_by(f64::total_cmp);
    let (slope, stderr, upper) = counting_slope(&norms, t_max)?;
    Ok(GrowthOutcome::Estimate(GrowthEstimate {
        slope,
        stderr,
        upper,
        points: norms.len(),
        t_max,
    }))
}

/// Largest `T` such that every element with `f(mu) <= T` should be in the
/// table: the minimum of `f` over the outermost sphere.
fn completeness_radius(table: &OrbitTable, f: impl Fn(&CartanVector) -> f64) -> f64 {
    table
        .sphere(table.max_len())
        .map(|i| f(&table.mu(i)))
        .fold(f64::INFINITY, f64::min)
}

fn counting_slope(sorted: &[f64], t_max: f64) -> Result<(f64, f64, f64)> {
    let t_lo = t_max * (1.0 - REGRESSION_WINDOW);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..GRID_POINTS {
        let t = t_lo + (t_max - t_lo) * j as f64 / (GRID_POINTS - 1) as f64;
        let n = sorted.partition_point(|&v| v <= t);
        if n > 0 {
            xs.push(t);
            ys.push((n as f64).ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData("too few counting levels".into()));
    }
    let (slope, _, se) = ols(&xs, &ys);
    let upper = xs.iter().zip(&ys).map(|(t, y)| y / t).fold(f64::NEG_INFINITY, f64::max);
    Ok((slope, se, upper))
}

#[derive(Clone, Debug, Serialize)]
pub struct CriticalExponent {
    /// Abscissa where word-length shell sums of the Poincaré series stop decaying.
    pub delta: f64,
    pub stderr: f64,
    /// Slope of `log #{<w, mu> <= T}`, an independent estimate.
    pub counting_slope: f64,
    pub counting_stderr: f64,
    /// `max_T log N(T) / T`, monotone in the counted set.
    pub counting_upper: f64,
    /// Partial sums at `0.9 delta` and `1.1 delta`.
    pub partial_below: f64,
    pub partial_above: f64,
}

/// Critical exponent of `sum exp(-s <w, mu(gamma)>)`.
pub fn critical_exponent(table: &OrbitTable, w: &CartanVector) -> Result<CriticalExponent> {
    let psi = LinearForm::dual_of(w);
    check_positive(table, &psi)?;
    let t_max = completeness_radius(table, |mu| psi.eval(mu));
    let mut vals: Vec<f64> = (1..table.len())
        .map(|i| psi.eval_slice(table.mu_slice(i)))
        .filter(|&v| v <= t_max)
        .collect();
    vals.sort_by(f64::total_cmp);
    let (counting_slope, counting_stderr, counting_upper) = counting_slope(&vals, t_max)?;
    let (delta, stderr) = shell_root(table, &psi, counting_slope)?;
    Ok(CriticalExponent {
        delta,
        stderr,
        counting_slope,
        counting_stderr,
        counting_upper,
        partial_below: poincare_partial(table, &psi, 0.9 * delta).total,
        partial_above: poincare_partial(table, &psi, 1.1 * delta).total,
    })
}

fn check_positive(table: &OrbitTable, psi: &LinearForm) -> Result<()> {
    for i in 1..table.len() {
        if psi.eval_slice(table.mu_slice(i)) <= 0.0 {
            return Err(Error::Domain(format!(
                "form is not positive on mu({})",
                table.word(i)
            )));
        }
    }
    Ok(())
}

/// Root in `s` of the fitted shell growth rate of `sum exp(-s psi(mu))`.
fn shell_root(table: &OrbitTable, psi: &LinearForm, guess: f64) -> Result<(f64, f64)> {
    let rate = |s: f64| shell_log_slope(table, psi, s);
    let (mut lo, mut hi) = (0.5 * guess.max(1e-3), 1.5 * guess.max(1e-3));
    let mut tries = 0;
    while rate(lo).0 < 0.0 {
        lo *= 0.5;
        tries += 1;
        if tries > 60 {
            return Err(Error::InsufficientData("no growth at small exponent".into()));
        }
    }
    while rate(hi).0 > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::InsufficientData("no decay at large exponent".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if rate(mid).0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    // Standard error propagated through the derivative of the rate in s.
    let h = 1e-4 * s;
    let deriv = (rate(s + h).0 - rate(s - h).0) / (2.0 * h);
    let se = rate(s).1 / deriv.abs();
    Ok((s, se))
}

/// Slope (and its standard error) of `log S_n(s)` over the upper shells.
fn shell_log_slope(table: &OrbitTable, psi: &LinearForm, s: f64) -> (f64, f64) {
    let p = poincare_partial(table, psi, s);
    let (xs, ys): (Vec<f64>, Vec<f64>) = regression_shells(table.max_len())
        .map(|n| (n as f64, p.log_shells[n]))
        .unzip();
    let (b, _, se) = ols(&xs, &ys);
    (b, se)
}

pub(crate) fn regression_shells(max_len: usize) -> std::ops::RangeInclusive<usize> {
    let first = ((max_len as f64) * (1.0 - REGRESSION_WINDOW)).ceil() as usize;
    first.max(1)..=max_len
}

#[derive(Clone, Debug, Serialize)]
pub struct PoincarePartial {
    pub s: f64,
    /// Shell subtotals by word length.
    pub shells: Vec<f64>,
    /// Logarithms of the shell subtotals, finite even when the sums overflow.
    pub log_shells: Vec<f64>,
    pub total: f64,
    /// First shell whose subtotal overflowed, if any.
    pub overflow_shell: Option<usize>,
    /// `exp` of the fitted per-shell slope of `log S_n` over the upper shells.
    pub decay_rate: f64,
}

pub fn poincare_partial(table: &OrbitTable, psi: &LinearForm, s: f64) -> PoincarePartial {
    let mut log_shells = Vec::with_capacity(table.max_len() + 1);
    for n in 0..=table.max_len() {
        let exps: Vec<f64> = table
            .sphere(n)
            .map(|i| -s * psi.eval_slice(table.mu_slice(i)))
            .collect();
        log_shells.push(log_sum_exp(&exps));
    }
    let shells: Vec<f64> = log_shells.iter().map(|l| l.exp()).collect();
    let overflow_shell = shells.iter().position(|x| !x.is_finite());
    let total = if overflow_shell.is_some() {
        f64::INFINITY
    } else {
        shells.iter().sum()
    };
    let (xs, ys): (Vec<f64>, Vec<f64>) = regression_shells(table.max_len())
        .map(|n| (n as f64, log_shells[n]))
        .unzip();
    let decay_rate = if xs.len() >= 2 { ols(&xs, &ys).0.exp() } else { f64::NAN };
    PoincarePartial {
        s,
        shells,
        log_shells,
        total,
        overflow_shell,
        decay_rate,
    }
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `min alpha(mu)/|mu|` over words of length at least half the radius.
pub fn regularity_margin(table: &OrbitTable) -> f64 {
    let start = table.sphere(table.max_len().div_ceil(2).max(1)).start;
    (start..table.len())
        .map(|i| {
            let mu = table.mu(i);
            mu.min_root() / mu.norm()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, Serialize)]
pub struct AdditivityReport {
    /// `max |mu(g1 g2) - mu(g1) - mu(g2)|` over splits of reduced words.
    pub max_defect: f64,
    pub by_length: Vec<f64>,
    pub witness: String,
    /// Largest violation of `omega_k(mu(g1 g2)) <= omega_k(mu(g1)) + omega_k(mu(g2))`.
    pub subadditivity_violation: f64,
}

pub fn additivity_defects(table: &OrbitTable) -> AdditivityReport {
    let mut by_length = vec![0.0; table.max_len() + 1];
    let mut witness = String::new();
    let mut max_defect: f64 = 0.0;
    let mut violation: f64 = f64::NEG_INFINITY;
    let d = table.dim();
    for i in table.sphere(2).start..table.len() {
        let w = table.word(i);
        let mu = table.mu_slice(i);
        for cut in 1..w.len() {
            let a = table.index_of(&w.prefix(cut)).unwrap();
            let b = table.index_of(&w.suffix_from(cut)).unwrap();
            let (ma, mb) = (table.mu_slice(a), table.mu_slice(b));
            let mut sq = 0.0;
            let (mut om, mut oa, mut ob) = (0.0, 0.0, 0.0);
            for k in 0..d {
                sq += (mu[k] - ma[k] - mb[k]).powi(2);
                if k + 1 < d {
                    om += mu[k];
                    oa += ma[k];
                    ob += mb[k];
                    violation = violation.max(om - oa - ob);
                }
            }
            let defect = sq.sqrt();
            if defect > by_length[w.len()] {
                by_length[w.len()] = defect;
            }
            if defect > max_defect {
                max_defect = defect;
                witness = format!("{}|{}", w.prefix(cut), w.suffix_from(cut));
            }
        }
    }
    AdditivityReport {
        max_defect,
        by_length,
        witness,
        subadditivity_violation: violation,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TangentForm {
    /// Unit direction `w` minimising the critical exponent `delta_w`.
    pub w: CartanVector,
    pub delta: f64,
    /// The tangent form `delta_w <w, .>`.
    pub psi: LinearForm,
    pub scanned: Vec<(CartanVector, f64)>,
}

/// Scans unit directions `w` inside the sampled cone and returns the one with
/// the smallest `delta_w`; the form `delta_w <w, .>` is tangent to the growth
/// indicator at the direction of maximal growth.
pub fn tangent_scan(table: &OrbitTable, n_dirs: usize) -> Result<TangentForm> {
    let cone = limit_cone_estimate(table, table.max_len().div_ceil(2));
    let candidates: Vec<CartanVector> = match table.dim() {
        2 => vec![CartanVector::new(vec![1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()])],
        3 => {
            let lo = chamber_angle(&cone.extreme_rays[0]);
            let hi = chamber_angle(&cone.extreme_rays[1]);
            (0..n_dirs.max(1))
                .map(|j| {
                    let t = if n_dirs <= 1 { 0.5 } else { j as f64 / (n_dirs - 1) as f64 };
                    direction_at_angle(lo + t * (hi - lo))
                })
                .collect()
        }
        _ => {
            let step = (cone.mu_directions.len() / n_dirs.max(1)).max(1);
            cone.mu_directions.iter().step_by(step).cloned().collect()
        }
    };
    let mut scanned = Vec::with_capacity(candidates.len());
    for w in candidates {
        let ce = critical_exponent(table, &w)?;
        scanned.push((w, ce.delta));
    }
    let (w, delta) = scanned
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .cloned()
        .ok_or_else(|| Error::InsufficientData("no scan directions".into()))?;
    Ok(TangentForm {
        psi: LinearForm::dual_of(&w).scaled(delta),
        w,
        delta,
        scanned,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct WordLengthBounds {
    /// `max |mu(gamma)| / |gamma|` and the word length where it is attained.
    pub upper: f64,
    pub upper_len: usize,
    /// Slope and intercept of the per-shell minimum of `|mu|` against `|gamma|`.
    pub lower_slope: f64,
    pub lower_intercept: f64,
    pub shell_min: Vec<f64>,
}

/// Linear envelopes `C^-1 |gamma| - C <= |mu(gamma)| <= C |gamma|`.
pub fn word_length_bounds(table: &OrbitTable) -> WordLengthBounds {
    let mut shell_max = vec![0.0; table.max_len() + 1];
    let mut shell_min = vec![0.0; table.max_len() + 1];
    for n in 1..=table.max_len() {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in table.sphere(n) {
            let norm = table.mu(i).norm();
            lo = lo.min(norm);
            hi = hi.max(norm);
        }
        shell_min[n] = lo;
        shell_max[n] = hi / n as f64;
    }
    let upper = shell_max.iter().cloned().fold(0.0, f64::max);
    // Shortest length attaining the maximum up to rounding.
    let upper_len = (1..=table.max_len())
        .find(|&n| shell_max[n] >= upper * (1.0 - 1e-9))
        .unwrap_or(0);
    let xs: Vec<f64> = (1..=table.max_len()).map(|n| n as f64).collect();
    let (lower_slope, lower_intercept, _) = ols(&xs, &shell_min[1..]);
    WordLengthBounds {
        upper,
        upper_len,
        lower_slope,
        lower_intercept,
        shell_min,
    }
}

/// `min <w, mu(gamma)> / |gamma|` over the table: with it, every element with
/// `<w, mu> <= T` has word length at most `T / c`.
pub fn linear_rate(table: &OrbitTable, w: &CartanVector) -> f64 {
    (1..table.len())
        .map(|i| w.dot(&table.mu(i)) / table.word_len(i) as f64)
        .fold(f64::INFINITY, f64::min)
}
