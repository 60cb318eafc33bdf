//! Inverse moments of binomial and multinomial sample counts: the leading
//! and second-order expansions, their remainder envelopes (implicit constant
//! 1) and exact values by full enumeration for small `n`.

use crate::error::{invalid, Error, Result};
use crate::exec::map_indexed;

/// Largest `n` for exact binomial sums.
pub const MAX_BINOMIAL_N: usize = 60;
/// Largest `n` for exact multinomial sums.
pub const MAX_MULTINOMIAL_N: usize = 25;
const MAX_CATEGORIES: usize = 4;
const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSign {
    /// The lemma makes no claim about the sign of `exact - leading`.
    Unspecified,
    /// `exact - leading >= 0`.
    NonNegative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentExpansion {
    pub leading: f64,
    pub second_order: Option<f64>,
    /// Envelope of `exact - leading - second_order` (or of `exact - leading`
    /// when there is no second-order term).
    pub bound_shape: f64,
    /// Envelope of `exact - leading`.
    pub gap_shape: f64,
    pub exact: Option<f64>,
    pub gap_sign: GapSign,
}

impl MomentExpansion {
    pub fn expansion(&self) -> f64 {
        self.leading + self.second_order.unwrap_or(0.0)
    }

    pub fn gap(&self) -> Option<f64> {
        self.exact.map(|e| e - self.leading)
    }

    pub fn remainder(&self) -> Option<f64> {
        self.exact.map(|e| e - self.expansion())
    }

    /// `|exact - leading| / gap_shape`.
    pub fn gap_ratio(&self) -> Option<f64> {
        self.gap().map(|g| ratio(g, self.gap_shape))
    }

    /// `|remainder| / bound_shape`.
    pub fn remainder_ratio(&self) -> Option<f64> {
        self.remainder().map(|r| ratio(r, self.bound_shape))
    }

    /// Whether the exact gap has the sign the lemma states (true when no
    /// sign is stated or no exact value is available).
    pub fn sign_holds(&self) -> bool {
        match (self.gap_sign, self.gap()) {
            (GapSign::NonNegative, Some(g)) => g >= -1e-15 * self.leading.abs().max(1e-300),
            _ => true,
        }
    }
}

fn ratio(x: f64, shape: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs() / shape
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(invalid(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    Ok(())
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

/// `E f(N)` for `N ~ Bin(n, p)`, summed over `k = 0..=n` with log-space weights.
pub fn exact_binomial_functional<F: Fn(usize) -> f64>(n: usize, p: f64, f: F) -> Result<f64> {
    check_prob("p", p)?;
    if n > MAX_BINOMIAL_N {
        return Err(Error::TooLarge(format!("exact binomial sums need n <= {MAX_BINOMIAL_N}, got {n}")));
    }
    if p == 0.0 {
        return Ok(f(0));
    }
    if p == 1.0 {
        return Ok(f(n));
    }
    let lf = ln_factorials(n);
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    Ok((0..=n)
        .map(|k| {
            let lw = lf[n] - lf[k] - lf[n - k] + k as f64 * lp + (n - k) as f64 * lq;
            lw.exp() * f(k)
        })
        .sum())
}

/// `E f(N_1, ..., N_K)` for a multinomial count vector; `probs` must sum to 1
/// and have at most four categories.
pub fn exact_multinomial_functional<F: Fn(&[usize]) -> f64>(n: usize, probs: &[f64], f: F) -> Result<f64> {
    if probs.is_empty() || probs.len() > MAX_CATEGORIES {
        return Err(invalid(format!("need 1..={MAX_CATEGORIES} categories, got {}", probs.len())));
    }
    for (i, &p) in probs.iter().enumerate() {
        check_prob(&format!("probs[{i}]"), p)?;
    }
    if (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(invalid("multinomial probabilities must sum to 1"));
    }
    if n > MAX_MULTINOMIAL_N {
        return Err(Error::TooLarge(format!("exact multinomial sums need n <= {MAX_MULTINOMIAL_N}, got {n}")));
    }
    let lf = ln_factorials(n);
    let k = probs.len();
    let mut counts = vec![0usize; k];
    let mut total = 0.0;
    // Odometer over the first k-1 counts; the last takes the remainder.
    loop {
        let used: usize = counts[..k - 1].iter().sum();
        if used <= n {
            counts[k - 1] = n - used;
            let mut w = lf[n];
            let mut pw = 1.0;
            for (c, p) in counts.iter().zip(probs) {
                w -= lf[*c];
                pw *= p.powi(*c as i32);
            }
            if pw > 0.0 {
                total += w.exp() * pw * f(&counts);
            }
        }
        let mut i = 0;
        loop {
            if i == k - 1 {
                return Ok(total);
            }
            counts[i] += 1;
            if counts[..k - 1].iter().sum::<usize>() <= n {
                break;
            }
            counts[i] = 0;
            i += 1;
        }
    }
}

fn recip_or_zero(num: f64, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num / den as f64
    }
}

/// `E[1{N >= 1} / N]` against `1 / (np)`.
pub fn keylem1_approx(n: usize, p: f64) -> Result<MomentExpansion> {
    check_n(n)?;
    check_prob("p", p)?;
    if p <= 0.0 {
        return Err(invalid("p must be positive"));
    }
    let np = n as f64 * p;
    let shape = (1.0 + 1.0 / np) / (1.0 + (n as f64 - 1.0) * p).powi(2);
    let exact = if n <= MAX_BINOMIAL_N {
        Some(exact_binomial_functional(n, p, |k| recip_or_zero(1.0, k))?)
    } else {
        None
    };
    Ok(MomentExpansion {
        leading: 1.0 / np,
        second_order: None,
        bound_shape: shape,
        gap_shape: shape,
        exact,
        gap_sign: GapSign::Unspecified,
    })
}

fn check_offset(name: &str, a: f64) -> Result<()> {
    if !(a >= 1.0) || !a.is_finite() {
        return Err(invalid(format!("{name} = {a} must be at least 1")));
    }
    Ok(())
}

/// `E[(a + N)^-r]` for `N ~ Bin(n, p)`.
pub fn inverse_power_expansion(n: usize, p: f64, a: f64, r: u32) -> Result<MomentExpansion> {
    check_n(n)?;
    check_prob("p", p)?;
    check_offset("a", a)?;
    if r < 1 {
        return Err(invalid("r must be at least 1"));
    }
    let nf = n as f64;
    let big_a = a + nf * p;
    let ri = r as i32;
    let rf = r as f64;
    let exact = if n <= MAX_BINOMIAL_N {
        Some(exact_binomial_functional(n, p, |k| (a + k as f64).powi(-ri))?)
    } else {
        None
    };
    Ok(MomentExpansion {
        leading: big_a.powi(-ri),
        second_order: Some(rf * (rf + 1.0) * nf * p * (1.0 - p) / (2.0 * big_a.powi(ri + 2))),
        bound_shape: big_a.powf(-(rf + 1.5)),
        gap_shape: big_a.powi(-(ri + 1)),
        exact,
        gap_sign: GapSign::NonNegative,
    })
}

/// The four-cell layout behind two overlapping cells `P`, `P'`:
/// `P0 = P ∩ P'`, `P1 = P \ P'`, `P2 = P' \ P`, and the rest.
fn overlap_cells(p: f64, p2: f64, p0: f64) -> Result<[f64; 4]> {
    check_prob("p", p)?;
    check_prob("p'", p2)?;
    check_prob("p0", p0)?;
    if p0 <= 0.0 {
        return Err(invalid("the intersection must have positive probability"));
    }
    if p0 > p.min(p2) + PROB_TOL {
        return Err(invalid("p0 cannot exceed min(p, p')"));
    }
    let union = p + p2 - p0;
    if union > 1.0 + PROB_TOL {
        return Err(invalid("p + p' - p0 exceeds 1"));
    }
    Ok([p0, (p - p0).max(0.0), (p2 - p0).max(0.0), (1.0 - union).max(0.0)])
}

/// Both parts of the overlapping-cell lemma: `E[N0 / (N N')]` and
/// `E[(alpha N0/N + beta N1/N)(alpha N0/N' + gamma N2/N')]`, with `0/0 = 0`.
/// The second part's `leading` is the full displayed expansion.
#[allow(clippy::too_many_arguments)]
pub fn keylem2_terms(
    n: usize,
    p: f64,
    p2: f64,
    p0: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
) -> Result<(MomentExpansion, MomentExpansion)> {
    check_n(n)?;
    let cells = overlap_cells(p, p2, p0)?;
    let [_, q1, q2, _] = cells;
    let nf = n as f64;
    let occ = 1.0 / (1.0 + (nf - 1.0) * p) + 1.0 / (1.0 + (nf - 1.0) * p2);
    let base = p0 / (nf * p * p2);
    let r21 = base * occ;
    let small = n <= MAX_MULTINOMIAL_N;

    let exact1 = if small {
        Some(exact_multinomial_functional(n, &cells, |c| {
            let (n0, nn, nn2) = (c[0], c[0] + c[1], c[0] + c[2]);
            if n0 == 0 {
                0.0
            } else {
                n0 as f64 / (nn as f64 * nn2 as f64)
            }
        })?)
    } else {
        None
    };
    let part1 = MomentExpansion {
        leading: base,
        second_order: None,
        bound_shape: r21,
        gap_shape: r21,
        exact: exact1,
        gap_sign: GapSign::Unspecified,
    };

    let lead2 = (alpha * p0 / p + beta * q1 / p) * (alpha * p0 / p2 + gamma * q2 / p2)
        + (alpha - beta) * (alpha - gamma) * (q1 * q2 / (p * p2)) * base;
    let scale = alpha.abs().max(beta.abs()).max(gamma.abs()).powi(2);
    let r22 = scale
        * (r21
            + (1.0 + (nf - 1.0) * p).powf(-1.5)
            + (1.0 + (nf - 1.0) * p2).powf(-1.5)
            + (1.0 - p).powf(nf)
            + (1.0 - p2).powf(nf));
    let exact2 = if small {
        Some(exact_multinomial_functional(n, &cells, |c| {
            let (nn, nn2) = (c[0] + c[1], c[0] + c[2]);
            let left = recip_or_zero(alpha * c[0] as f64 + beta * c[1] as f64, nn);
            let right = recip_or_zero(alpha * c[0] as f64 + gamma * c[2] as f64, nn2);
            left * right
        })?)
    } else {
        None
    };
    let part2 = MomentExpansion {
        leading: lead2,
        second_order: None,
        bound_shape: r22,
        gap_shape: r22,
        exact: exact2,
        gap_sign: GapSign::Unspecified,
    };
    Ok((part1, part2))
}

/// Parameters of the product-of-inverses expansions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductParams {
    /// `E[(a + N)^-r (b + N)^-s]`, one binomial count.
    SameVar { n: usize, p: f64, a: f64, b: f64, r: u32, s: u32 },
    /// `E[1 / ((a + N1)(b + N2))]` for disjoint cells.
    Disjoint { n: usize, p1: f64, p2: f64, a: f64, b: f64 },
    /// `E[1 / ((a + N)(a + N'))]` for cells overlapping in mass `p0`.
    Overlapping { n: usize, p: f64, p2: f64, p0: f64, a: f64 },
}

pub fn product_inverse_expansions(params: ProductParams) -> Result<MomentExpansion> {
    match params {
        ProductParams::SameVar { n, p, a, b, r, s } => same_var(n, p, a, b, r, s),
        ProductParams::Disjoint { n, p1, p2, a, b } => disjoint(n, p1, p2, a, b),
        ProductParams::Overlapping { n, p, p2, p0, a } => overlapping(n, p, p2, p0, a),
    }
}

fn same_var(n: usize, p: f64, a: f64, b: f64, r: u32, s: u32) -> Result<MomentExpansion> {
    check_n(n)?;
    check_prob("p", p)?;
    check_offset("a", a)?;
    check_offset("b", b)?;
    if r < 1 || s < 1 {
        return Err(invalid("r and s must be at least 1"));
    }
    let nf = n as f64;
    let (ba, bb) = (a + nf * p, b + nf * p);
    let (ri, si) = (r as i32, s as i32);
    let (rf, sf) = (r as f64, s as f64);
    let v = nf * p * (1.0 - p);
    let pw = |x: f64, e: f64| x.powf(-e);
    let second = rf * (rf + 1.0) * v / (2.0 * ba.powi(ri + 2) * bb.powi(si))
        + sf * (sf + 1.0) * v / (2.0 * ba.powi(ri) * bb.powi(si + 2))
        + rf * sf * v / (ba.powi(ri + 1) * bb.powi(si + 1));
    let bound = pw(ba, rf + 1.5) * pw(bb, sf)
        + pw(ba, rf) * pw(bb, sf + 1.5)
        + pw(ba, rf + 1.0) * pw(bb, sf + 0.5)
        + pw(ba, rf + 0.5) * pw(bb, sf + 1.0);
    let exact = if n <= MAX_BINOMIAL_N {
        Some(exact_binomial_functional(n, p, |k| (a + k as f64).powi(-ri) * (b + k as f64).powi(-si))?)
    } else {
        None
    };
    Ok(MomentExpansion {
        leading: 1.0 / (ba.powi(ri) * bb.powi(si)),
        second_order: Some(second),
        bound_shape: bound,
        gap_shape: 1.0 / (ba.powi(ri + 1) * bb.powi(si)) + 1.0 / (ba.powi(ri) * bb.powi(si + 1)),
        exact,
        gap_sign: GapSign::NonNegative,
    })
}

/// The shared envelope of the two-count lemmas.
fn two_count_bound(ba: f64, bb: f64) -> f64 {
    ba.powf(-2.5) / bb + 1.0 / (ba * bb.powf(2.5)) + 1.0 / (ba * ba * bb.powf(1.5)) + 1.0 / (ba.powf(1.5) * bb * bb)
}

fn disjoint(n: usize, p1: f64, p2: f64, a: f64, b: f64) -> Result<MomentExpansion> {
    check_n(n)?;
    check_prob("p1", p1)?;
    check_prob("p2", p2)?;
    check_offset("a", a)?;
    check_offset("b", b)?;
    if p1 <= 0.0 || p2 <= 0.0 {
        return Err(invalid("disjoint cells need positive probabilities"));
    }
    if p1 + p2 > 1.0 + PROB_TOL {
        return Err(invalid("p1 + p2 exceeds 1"));
    }
    let nf = n as f64;
    let (ba, bb) = (a + nf * p1, b + nf * p2);
    let second = nf * p1 * (1.0 - p1) / (ba.powi(3) * bb) + nf * p2 * (1.0 - p2) / (ba * bb.powi(3))
        - nf * p1 * p2 / (ba * ba * bb * bb);
    let rest = (1.0 - p1 - p2).max(0.0);
    let exact = if n <= MAX_MULTINOMIAL_N {
        Some(exact_multinomial_functional(n, &[p1, p2, rest], |c| {
            1.0 / ((a + c[0] as f64) * (b + c[1] as f64))
        })?)
    } else {
        None
    };
    Ok(MomentExpansion {
        leading: 1.0 / (ba * bb),
        second_order: Some(second),
        bound_shape: two_count_bound(ba, bb),
        gap_shape: (1.0 / ba + 1.0 / bb) / (ba * bb),
        exact,
        gap_sign: GapSign::NonNegative,
    })
}

/// Second-order term uses `+ n (p0 - p p') / (A² B²)`, the covariance of the
/// two counts, so that `P = P'` reduces to the same-count case.
fn overlapping(n: usize, p: f64, p2: f64, p0: f64, a: f64) -> Result<MomentExpansion> {
    check_n(n)?;
    check_offset("a", a)?;
    let cells = overlap_cells(p, p2, p0)?;
    let nf = n as f64;
    let (ba, bb) = (a + nf * p, a + nf * p2);
    let second = nf * p * (1.0 - p) / (ba.powi(3) * bb)
        + nf * p2 * (1.0 - p2) / (ba * bb.powi(3))
        + nf * (p0 - p * p2) / (ba * ba * bb * bb);
    let exact = if n <= MAX_MULTINOMIAL_N {
        Some(exact_multinomial_functional(n, &cells, |c| {
            1.0 / ((a + (c[0] + c[1]) as f64) * (a + (c[0] + c[2]) as f64))
        })?)
    } else {
        None
    };
    Ok(MomentExpansion {
        leading: 1.0 / (ba * bb),
        second_order: Some(second),
        bound_shape: two_count_bound(ba, bb),
        gap_shape: (1.0 / ba + 1.0 / bb) / (ba * bb),
        exact,
        gap_sign: GapSign::NonNegative,
    })
}

/// One evaluated point of the lemma grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub lemma: &'static str,
    pub n: usize,
    pub params: String,
    pub expansion: MomentExpansion,
}

/// `0.05, 0.10, ..., 0.95`.
pub fn probability_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 / 20.0).collect()
}

/// Lemma names in grid order.
pub const LEMMAS: [&str; 5] = ["A.1", "A.4", "A.5", "A.6", "A.7"];

/// Every lemma evaluated with its exact value on the grid `ns` x p-grid.
/// Multi-parameter lemmas range over all valid combinations of grid values.
pub fn oracle_grid(ns: &[usize]) -> Result<Vec<OracleRow>> {
    let ps = probability_grid();
    let mut jobs: Vec<(&'static str, usize, ProductJob)> = Vec::new();
    for &n in ns {
        if n > MAX_MULTINOMIAL_N {
            return Err(Error::TooLarge(format!("grid n = {n} exceeds {MAX_MULTINOMIAL_N}")));
        }
        for &p in &ps {
            jobs.push(("A.1", n, ProductJob::Keylem1 { p }));
            for a in [1.0, 2.0] {
                for r in [1, 2, 3] {
                    jobs.push(("A.4", n, ProductJob::Power { p, a, r }));
                }
                for (b, r, s) in [(1.0, 1, 1), (2.0, 1, 2), (1.0, 2, 1)] {
                    jobs.push(("A.5", n, ProductJob::Product(ProductParams::SameVar { n, p, a, b, r, s })));
                }
            }
            for &q in &ps {
                if p + q <= 1.0 + PROB_TOL {
                    jobs.push(("A.6", n, ProductJob::Product(ProductParams::Disjoint { n, p1: p, p2: q, a: 1.0, b: 1.0 })));
                }
                for &p0 in ps.iter().filter(|&&x| x <= p.min(q) + PROB_TOL && p + q - x <= 1.0 + PROB_TOL) {
                    jobs.push(("A.7", n, ProductJob::Product(ProductParams::Overlapping { n, p, p2: q, p0, a: 1.0 })));
                }
            }
        }
    }
    let rows = map_indexed(jobs.len(), |i| {
        let (lemma, n, job) = jobs[i];
        job.eval(n).map(|(params, expansion)| OracleRow { lemma, n, params, expansion })
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Copy)]
enum ProductJob {
    Keylem1 { p: f64 },
    Power { p: f64, a: f64, r: u32 },
    Product(ProductParams),
}

impl ProductJob {
    fn eval(self, n: usize) -> Result<(String, MomentExpansion)> {
        Ok(match self {
            ProductJob::Keylem1 { p } => (format!("p={p}"), keylem1_approx(n, p)?),
            ProductJob::Power { p, a, r } => (format!("p={p};a={a};r={r}"), inverse_power_expansion(n, p, a, r)?),
            ProductJob::Product(pp) => {
                let label = match pp {
                    ProductParams::SameVar { p, a, b, r, s, .. } => format!("p={p};a={a};b={b};r={r};s={s}"),
                    ProductParams::Disjoint { p1, p2, a, b, .. } => format!("p1={p1};p2={p2};a={a};b={b}"),
                    ProductParams::Overlapping { p, p2, p0, a, .. } => format!("p={p};p'={p2};p0={p0};a={a}"),
                };
                (label, product_inverse_expansions(pp)?)
            }
        })
    }
}

/// Largest `|gap| / gap_shape` and `|remainder| / bound_shape` per lemma.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalConstants {
    pub lemma: &'static str,
    pub points: usize,
    pub sup_gap_ratio: f64,
    pub sup_remainder_ratio: f64,
    pub sign_violations: usize,
}

pub fn empirical_constants(rows: &[OracleRow]) -> Vec<EmpiricalConstants> {
    LEMMAS
        .iter()
        .map(|&lemma| {
            let mine: Vec<&OracleRow> = rows.iter().filter(|r| r.lemma == lemma).collect();
            let sup = |f: &dyn Fn(&MomentExpansion) -> Option<f64>| {
                mine.iter().filter_map(|r| f(&r.expansion)).fold(0.0, f64::max)
            };
            EmpiricalConstants {
                lemma,
                points: mine.len(),
                sup_gap_ratio: sup(&|e| e.gap_ratio()),
                sup_remainder_ratio: sup(&|e| e.remainder_ratio()),
                sign_violations: mine.iter().filter(|r| !r.expansion.sign_holds()).count(),
            }
        })
        .collect()
}
