//! Orbit growth: critical exponent estimation, Anosov envelope regression,
//! ping-pong certificates with sampled containment margins, block-word
//! deviation audits, and the staged exponent budget audit.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Tolerances, TAU_WALL};
use crate::exactmat::RationalMatrix;
use crate::flags::{
    fixed_flags, flag_distance, limit_set_sample, transversality_margin, Flag, FlagError,
};
use crate::random::{random_flag, rng};
use crate::spectral::{
    cartan_projection, classify, AVector, SpectralClass, SpectralError, DEFAULT_ORDER_BOUND,
};
use crate::words::{enumerate, GeneratorSet, Sign, Word};

/// Fewest nontrivial deduped elements a count-based fit will accept.
pub const MIN_COUNT_ELEMENTS: usize = 8;
/// Grid of additive constants searched when fitting the linear envelope.
pub const ENVELOPE_A_GRID: u32 = 20;
/// Power cap for the sampled beta-contraction inequality.
pub const PINGPONG_K_CAP: u64 = 20;
/// Word-length cap for the sampled image cloud of the previous stage.
pub const PINGPONG_GAMMA_CAP: usize = 4;
/// Word-length horizon for the previous stage's limit set sample.
pub const PINGPONG_LIMIT_LEN: usize = 5;
/// Largest base power appearing in one audited block.
pub const AUDIT_POWER_CAP: i64 = 3;
/// Word-length horizon for the audited side factors.
pub const AUDIT_GAMMA_LEN: usize = 3;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("too few usable elements: have {have}, need {need}")]
    TooFewElements { have: usize, need: usize },
    #[error("power target must be at least 1")]
    ZeroTarget,
    #[error("base element is not loxodromic: {found:?}")]
    NotLoxodromic { found: SpectralClass },
    #[error("Cartan root {value:.3e} sits under the wall tolerance {tol:.3e}")]
    SingularPower { value: f64, tol: f64 },
    #[error("ping-pong precondition failed: {what} (margin {margin:.6e}, witness `{witness}`)")]
    PingPongPrecondition { what: &'static str, margin: f64, witness: String },
    #[error("ping-pong inequality {inequality} failed at {witness} with margin {margin:.6e}")]
    PingPongMarginFailure { inequality: &'static str, witness: String, margin: f64 },
    #[error("sphere sampling stalled at radius {radius:.3e}")]
    SphereSampling { radius: f64 },
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Counting data and fitted slope for one simple root.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootCount {
    /// Simple root as a zero-based coordinate pair `(i, i+1)`.
    pub root: (usize, usize),
    /// Cumulative counts at every distinct root value, ascending.
    pub grid: Vec<GridPoint>,
    /// Fitted slope of `log N(R)` against `R` over the window.
    pub slope: f64,
    /// Fit window `[R_lo, R_hi]`: lower quartile up to the completeness
    /// cutoff set by the enumeration frontier.
    pub window: (f64, f64),
    /// Grid points inside the window.
    pub window_points: usize,
    /// Root mean square residual of the fit, in log counts.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridPoint {
    pub r: f64,
    pub count: u64,
}

/// Per-root orbital counting estimate over a deduped enumeration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExponentEstimate {
    pub n: usize,
    pub max_word_len: usize,
    pub completed_len: usize,
    /// Deduped group elements counted, identity included.
    pub elements: usize,
    pub per_root: Vec<RootCount>,
}

impl ExponentEstimate {
    /// Fitted exponent for the simple root `(i, i+1)`.
    pub fn delta(&self, i: usize) -> f64 {
        self.per_root[i].slope
    }

    pub fn max_delta(&self) -> f64 {
        self.per_root.iter().map(|r| r.slope).fold(0.0, f64::max)
    }

    /// Count of elements with root value at most `r`.
    pub fn count_at(&self, root: usize, r: f64) -> u64 {
        let grid = &self.per_root[root].grid;
        let k = grid.partition_point(|gp| gp.r <= r);
        if k == 0 { 0 } else { grid[k - 1].count }
    }

    /// `root,r,count` rows for external plotting.
    pub fn counts_csv(&self) -> String {
        let mut out = String::from("root,r,count\n");
        for rc in &self.per_root {
            for gp in &rc.grid {
                let _ = writeln!(out, "a{}{},{:.17e},{}", rc.root.0 + 1, rc.root.1 + 1, gp.r, gp.count);
            }
        }
        out
    }
}

/// Orbital counting estimate: counts deduped group elements below each
/// root value threshold and fits the slope of the log count.
///
/// The fit window stops at the smallest frontier value, where the
/// frontier is the last completed enumeration level: past that radius the
/// ball may miss elements, so counts there are excluded as incomplete.
/// The window starts at the lower quartile of the remaining complete
/// values, cutting the small-radius transient. An empty frontier level
/// means the whole group was enumerated and the window extends to the
/// last grid point.
pub fn critical_exponent(
    gens: &GeneratorSet,
    max_len: usize,
) -> Result<ExponentEstimate, GrowthError> {
    let n = gens.n();
    let enumr = enumerate(gens, max_len, true);
    let entries: Vec<(usize, &RationalMatrix)> = enumr
        .levels
        .iter()
        .enumerate()
        .flat_map(|(lvl, level)| level.iter().map(move |e| (lvl, &e.matrix)))
        .collect();
    let nontrivial = entries.iter().filter(|(lvl, _)| *lvl > 0).count();
    if nontrivial < MIN_COUNT_ELEMENTS {
        return Err(GrowthError::TooFewElements { have: nontrivial, need: MIN_COUNT_ELEMENTS });
    }
    let mus: Vec<(usize, AVector)> = entries
        .par_iter()
        .map(|(lvl, m)| cartan_projection(m).map(|mu| (*lvl, mu)))
        .collect::<Result<_, _>>()?;

    let mut per_root = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let values: Vec<(usize, f64)> = mus.iter().map(|(lvl, mu)| (*lvl, mu.root(i, i + 1))).collect();
        let mut sorted: Vec<f64> = values.iter().map(|&(_, v)| v).collect();
        sorted.sort_by(f64::total_cmp);
        let mut grid: Vec<GridPoint> = Vec::new();
        for &v in &sorted {
            match grid.last_mut() {
                Some(gp) if gp.r == v => gp.count += 1,
                _ => {
                    let prev = grid.last().map_or(0, |gp| gp.count);
                    grid.push(GridPoint { r: v, count: prev + 1 });
                }
            }
        }
        let frontier_min = values
            .iter()
            .filter(|(lvl, _)| *lvl == enumr.completed_len && enumr.completed_len > 0)
            .map(|&(_, v)| v)
            .fold(f64::INFINITY, f64::min);
        let r_hi = if frontier_min.is_finite() {
            frontier_min
        } else {
            grid.last().map_or(0.0, |gp| gp.r)
        };
        // Counting is only complete up to the frontier minimum, so the
        // incomplete tail is dropped before the percentile cut.
        let mut complete_vals: Vec<f64> = values
            .iter()
            .filter(|&&(lvl, v)| lvl > 0 && v <= r_hi)
            .map(|&(_, v)| v)
            .collect();
        if complete_vals.len() < 2 {
            return Err(GrowthError::TooFewElements { have: complete_vals.len(), need: 2 });
        }
        complete_vals.sort_by(f64::total_cmp);
        let r_lo = complete_vals[(complete_vals.len() - 1) / 4];
        let pts: Vec<(f64, f64)> = grid
            .iter()
            .filter(|gp| gp.r >= r_lo && gp.r <= r_hi)
            .map(|gp| (gp.r, (gp.count as f64).ln()))
            .collect();
        if pts.len() < 2 {
            return Err(GrowthError::TooFewElements { have: pts.len(), need: 2 });
        }
        let (slope, residual) = fit_line(&pts);
        per_root.push(RootCount {
            root: (i, i + 1),
            grid,
            slope: slope.max(0.0),
            window: (r_lo, r_hi),
            window_points: pts.len(),
            residual,
        });
    }
    Ok(ExponentEstimate {
        n,
        max_word_len: max_len,
        completed_len: enumr.completed_len,
        elements: entries.len(),
        per_root,
    })
}

/// Least squares slope and RMS residual of `y` against `x`.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.0 - xbar)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let ss: f64 = pts
        .iter()
        .map(|p| {
            let e = p.1 - (ybar + slope * (p.0 - xbar));
            e * e
        })
        .sum();
    (slope, (ss / m).sqrt())
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct LenStat {
    pub len: usize,
    pub min_alpha: f64,
}

/// Fitted linear-growth envelope for one simple root.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootEnvelope {
    pub root: (usize, usize),
    /// Multiplicative envelope constant: word length per unit root value.
    pub l_hat: f64,
    /// Additive envelope constant picked from the grid.
    pub a_hat: u32,
    /// Smallest root value among elements at each word length.
    pub min_alpha_by_len: Vec<LenStat>,
    /// Smallest per-length increment of the minima.
    pub min_margin: f64,
    /// Last increment over the first: linear growth keeps this near one,
    /// logarithmic growth drives it to zero.
    pub tail_ratio: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub n: usize,
    pub max_word_len: usize,
    pub completed_len: usize,
    pub per_root: Vec<RootEnvelope>,
    pub pass: bool,
}

/// Checks the linear lower envelope `alpha(mu(g)) >= |g|/L - A` over a
/// deduped enumeration with shortest-word witnesses.
///
/// For each additive constant on the grid the tightest valid `L` is the
/// maximum of `|g|/(alpha + A)`; among those valid envelopes the reported
/// pair minimizes the squared error to the per-length minima, ties to the
/// smaller `A`. The pass verdict ignores the envelope and looks at the
/// increments of the per-length minima: all must be positive and the last
/// must retain at least half of the first, which rejects the logarithmic
/// growth of unipotent directions.
pub fn anosov_growth_check(gens: &GeneratorSet, max_len: usize) -> Result<GrowthCheck, GrowthError> {
    let n = gens.n();
    let enumr = enumerate(gens, max_len, true);
    let entries: Vec<(usize, &RationalMatrix)> = enumr
        .levels
        .iter()
        .enumerate()
        .skip(1)
        .flat_map(|(lvl, level)| level.iter().map(move |e| (lvl, &e.matrix)))
        .collect();
    if entries.is_empty() {
        return Err(GrowthError::TooFewElements { have: 0, need: 1 });
    }
    let mus: Vec<(usize, AVector)> = entries
        .par_iter()
        .map(|(lvl, m)| cartan_projection(m).map(|mu| (*lvl, mu)))
        .collect::<Result<_, _>>()?;

    let mut per_root = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let values: Vec<(usize, f64)> = mus.iter().map(|(lvl, mu)| (*lvl, mu.root(i, i + 1))).collect();
        let mut min_by_len: Vec<LenStat> = Vec::new();
        for lvl in 1..=enumr.completed_len {
            let mn = values
                .iter()
                .filter(|(l, _)| *l == lvl)
                .map(|&(_, v)| v)
                .fold(f64::INFINITY, f64::min);
            if mn.is_finite() {
                min_by_len.push(LenStat { len: lvl, min_alpha: mn });
            }
        }
        let (l_hat, a_hat) = fit_envelope(&values, &min_by_len);
        let mut increments: Vec<f64> = Vec::new();
        for w in min_by_len.windows(2) {
            increments
                .push((w[1].min_alpha - w[0].min_alpha) / (w[1].len - w[0].len) as f64);
        }
        let (min_margin, tail_ratio) = match increments.as_slice() {
            [] => (0.0, 0.0),
            [only] => (*only, 1.0),
            incs => {
                let mn = incs.iter().copied().fold(f64::INFINITY, f64::min);
                let first = incs[0];
                let last = incs[incs.len() - 1];
                let ratio = if first > 1e-15 { last / first } else { 0.0 };
                (mn, ratio)
            }
        };
        let pass = min_margin > 0.0 && tail_ratio >= 0.5;
        per_root.push(RootEnvelope {
            root: (i, i + 1),
            l_hat,
            a_hat,
            min_alpha_by_len: min_by_len,
            min_margin,
            tail_ratio,
            pass,
        });
    }
    let pass = per_root.iter().all(|r| r.pass);
    Ok(GrowthCheck { n, max_word_len: max_len, completed_len: enumr.completed_len, per_root, pass })
}

fn fit_envelope(values: &[(usize, f64)], min_by_len: &[LenStat]) -> (f64, u32) {
    let mut best: Option<(f64, f64, u32)> = None;
    for a in 0..=ENVELOPE_A_GRID {
        let af = a as f64;
        let mut l_hat = 0.0f64;
        for &(lvl, v) in values {
            let denom = v + af;
            if denom <= 1e-12 {
                l_hat = f64::INFINITY;
                break;
            }
            l_hat = l_hat.max(lvl as f64 / denom);
        }
        if !l_hat.is_finite() || l_hat <= 0.0 {
            continue;
        }
        let err: f64 = min_by_len
            .iter()
            .map(|s| {
                let e = s.min_alpha - (s.len as f64 / l_hat - af);
                e * e
            })
            .sum();
        if best.map_or(true, |(be, _, _)| err < be) {
            best = Some((err, l_hat, a));
        }
    }
    best.map_or((f64::INFINITY, 0), |(_, l, a)| (l, a))
}

/// Chosen power for a base element, from the floor formula over the
/// smallest Cartan simple root of the element and its inverse.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PowerSelection {
    pub m: u64,
    /// Smallest simple root value over the base and its inverse.
    pub min_root: f64,
    pub target: u64,
    /// The floor came out at zero: the target was below the root scale.
    pub underpowered: bool,
}

/// Evaluates `m = floor(target / min_root)` where the minimum runs over
/// the Cartan simple roots of the base and its inverse.
pub fn select_power(beta: &RationalMatrix, target: u64) -> Result<PowerSelection, GrowthError> {
    if target == 0 {
        return Err(GrowthError::ZeroTarget);
    }
    let class = classify(beta, DEFAULT_ORDER_BOUND);
    if class != SpectralClass::Loxodromic {
        return Err(GrowthError::NotLoxodromic { found: class });
    }
    let mu_p = cartan_projection(beta)?;
    let mu_m = cartan_projection(&beta.inverse())?;
    let min_root = mu_p.min_simple_root().min(mu_m.min_simple_root());
    if min_root <= TAU_WALL {
        return Err(GrowthError::SingularPower { value: min_root, tol: TAU_WALL });
    }
    let m = (target as f64 / min_root).floor() as u64;
    Ok(PowerSelection { m, min_root, target, underpowered: m == 0 })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BlockStat {
    pub blocks: usize,
    pub tested: usize,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RootDeviation {
    pub root: (usize, usize),
    pub max_deviation: f64,
    /// Block word attaining the maximum, in readable form.
    pub witness: String,
    pub by_blocks: Vec<BlockStat>,
}

/// Max per-block deviation between the Cartan root value of block words
/// and the blockwise sum, over an explicitly listed census.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KeyLemmaReport {
    pub n: usize,
    pub seed: u64,
    pub max_blocks: usize,
    /// `(block count, words tested)` rows of the census.
    pub census: Vec<(usize, usize)>,
    pub per_root: Vec<RootDeviation>,
    /// Largest deviation over all roots: the audited additive constant.
    pub max_constant: f64,
}

/// Audits the additive block bound: for census words
/// `w = t^{j_l} g_l ... t^{j_1} g_1` built from the base `t = beta` and
/// side factors `g_i`, compares the Cartan root value of `w` with the sum
/// of the per-block values and reports the worst deviation per block.
///
/// The census takes pure powers `t^{±j}` and seeded random blocks with
/// positive exponents and side factors drawn from positive words in the
/// given generators. Keeping the census inside the positive cone makes
/// commuting diagonal inputs an exact additivity case, so the zero
/// baseline of the audit is testable; the certified free pairs this
/// audit is meant for deviate from zero and the report bounds them.
pub fn key_lemma_audit(
    gens: &GeneratorSet,
    beta: &RationalMatrix,
    max_blocks: usize,
    samples: usize,
    seed: u64,
) -> Result<KeyLemmaReport, GrowthError> {
    let n = gens.n();
    let class = classify(beta, DEFAULT_ORDER_BOUND);
    if class != SpectralClass::Loxodromic {
        return Err(GrowthError::NotLoxodromic { found: class });
    }
    let alpha_pos = cartan_projection(beta)?.simple_roots();
    let alpha_neg = cartan_projection(&beta.inverse())?.simple_roots();

    let enumr = enumerate(gens, AUDIT_GAMMA_LEN, true);
    let pool: Vec<(String, RationalMatrix, Vec<f64>)> = enumr
        .iter()
        .filter(|e| !e.word.is_empty())
        .filter(|e| e.word.letters().iter().all(|l| l.sign == Sign::Pos))
        .map(|e| {
            cartan_projection(&e.matrix)
                .map(|mu| (e.word.display(gens), e.matrix.clone(), mu.simple_roots()))
        })
        .collect::<Result<_, _>>()?;
    if pool.is_empty() {
        return Err(GrowthError::TooFewElements { have: 0, need: 1 });
    }

    let mut bpow: Vec<RationalMatrix> = Vec::with_capacity(AUDIT_POWER_CAP as usize + 1);
    bpow.push(RationalMatrix::identity(n));
    for j in 1..=AUDIT_POWER_CAP {
        bpow.push(bpow[(j - 1) as usize].dot(beta));
    }

    // (blocks, matrix, expected value per root, description)
    let mut census_words: Vec<(usize, RationalMatrix, Vec<f64>, String)> = Vec::new();
    for j in 1..=AUDIT_POWER_CAP {
        let expected: Vec<f64> = alpha_pos.iter().map(|a| j as f64 * a).collect();
        census_words.push((1, bpow[j as usize].clone(), expected, format!("t^{j}")));
        let expected: Vec<f64> = alpha_neg.iter().map(|a| j as f64 * a).collect();
        census_words.push((1, beta.pow(-j), expected, format!("t^-{j}")));
    }
    let mut r = rng(seed);
    use rand::Rng as _;
    for l in 1..=max_blocks {
        for _ in 0..samples {
            let mut acc = RationalMatrix::identity(n);
            let mut expected = vec![0.0f64; n - 1];
            let mut desc = String::new();
            for _ in 0..l {
                let j = r.gen_range(1..=AUDIT_POWER_CAP);
                let g = r.gen_range(0..pool.len());
                let (gname, gmat, galphas) = &pool[g];
                acc = bpow[j as usize].dot(gmat).dot(&acc);
                for (i, e) in expected.iter_mut().enumerate() {
                    *e += j as f64 * alpha_pos[i] + galphas[i];
                }
                desc = format!("t^{j} ({gname}) {desc}");
            }
            census_words.push((l, acc, expected, desc.trim_end().to_string()));
        }
    }

    let deviations: Vec<Vec<f64>> = census_words
        .par_iter()
        .map(|(l, m, expected, _)| {
            cartan_projection(m).map(|mu| {
                (0..n - 1)
                    .map(|i| (mu.root(i, i + 1) - expected[i]).abs() / *l as f64)
                    .collect()
            })
        })
        .collect::<Result<_, _>>()?;

    let mut census: Vec<(usize, usize)> = Vec::new();
    for (l, _, _, _) in &census_words {
        match census.iter_mut().find(|(bl, _)| bl == l) {
            Some((_, c)) => *c += 1,
            None => census.push((*l, 1)),
        }
    }
    census.sort_unstable();

    let mut per_root = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut max_dev = 0.0f64;
        let mut witness = String::new();
        let mut by_blocks: Vec<BlockStat> = Vec::new();
        for ((l, _, _, desc), devs) in census_words.iter().zip(&deviations) {
            let d = devs[i];
            if d > max_dev || witness.is_empty() {
                max_dev = d;
                witness = desc.clone();
            }
            match by_blocks.iter_mut().find(|b| b.blocks == *l) {
                Some(b) => {
                    b.tested += 1;
                    b.max_deviation = b.max_deviation.max(d);
                }
                None => by_blocks.push(BlockStat { blocks: *l, tested: 1, max_deviation: d }),
            }
        }
        by_blocks.sort_unstable_by_key(|b| b.blocks);
        per_root.push(RootDeviation { root: (i, i + 1), max_deviation: max_dev, witness, by_blocks });
    }
    let max_constant = per_root.iter().map(|r| r.max_deviation).fold(0.0, f64::max);
    Ok(KeyLemmaReport { n, seed, max_blocks, census, per_root, max_constant })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GammaMargin {
    pub word: Word,
    pub margin: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PowerMargin {
    pub k: u64,
    pub attracting: bool,
    pub margin: f64,
}

/// Sampled ping-pong certificate for a previous-stage group and a powered
/// base element.
///
/// The two inequalities certified at sample resolution: images of the
/// half-radius balls under short nontrivial group elements stay clear of
/// both full-radius balls, which is the separation making the inclusion
/// of those images into the compact target set an interior one; and every
/// audited power of the base maps the whole sampled target cloud strictly
/// inside the matching half-radius ball. All margins must clear the
/// general position tolerance. A numeric certificate at the recorded
/// resolution, not a rigorous proof.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PingPongCertificate {
    pub n: usize,
    pub attracting: Flag,
    pub repelling: Flag,
    pub radius: f64,
    pub half_radius: f64,
    pub power: u64,
    pub seed: u64,
    pub fixed_flag_residual: f64,
    /// Transversality margin of the fixed flag pair.
    pub fixed_pair_margin: f64,
    /// Flag distance between the two ball centers.
    pub center_separation: f64,
    pub sphere_samples_per_shell: usize,
    pub limit_words: Vec<Word>,
    pub gamma_words: Vec<Word>,
    pub k_cap: u64,
    pub d_cloud_size: usize,
    /// Radius of the sampled target cloud about its first anchor.
    pub d_span: f64,
    pub eq32_margins: Vec<GammaMargin>,
    pub eq33_margins: Vec<PowerMargin>,
    pub min_margin: f64,
}

/// Certifies the sampled ping-pong inequalities for `gens` and `beta^m`.
///
/// Preconditions checked with witnesses: `beta` loxodromic with certified
/// fixed flags, the fixed pair transverse and separated by more than two
/// radii, and every sampled limit point of the previous stage transverse
/// to both fixed flags and clear of the expanded balls. The certificate
/// samples `samples` flags on each boundary sphere, builds the target
/// cloud from limit points and short-word images of the full-radius
/// spheres, and requires every containment margin to clear the general
/// position tolerance. Deterministic for a fixed seed; reruns serialize
/// byte-identically.
pub fn pingpong_certify(
    gens: &GeneratorSet,
    beta: &RationalMatrix,
    r: f64,
    m: u64,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<PingPongCertificate, GrowthError> {
    let n = gens.n();
    if samples == 0 {
        return Err(GrowthError::TooFewElements { have: 0, need: 1 });
    }
    if !(r > 10.0 * tol.gp && r < 0.5) {
        return Err(GrowthError::PingPongPrecondition {
            what: "ball radius outside the workable range",
            margin: r,
            witness: String::new(),
        });
    }
    let ff = fixed_flags(beta)?;
    let xp = ff.attractive;
    let xm = ff.repulsive;
    let pair_margin = transversality_margin(&xp, &xm).margin;
    if pair_margin <= tol.gp {
        return Err(GrowthError::PingPongPrecondition {
            what: "fixed flags are not transverse",
            margin: pair_margin,
            witness: String::new(),
        });
    }
    let separation = flag_distance(&xp, &xm);
    if separation <= 2.0 * r + tol.gp {
        return Err(GrowthError::PingPongPrecondition {
            what: "ball centers are too close for the radius",
            margin: separation - 2.0 * r,
            witness: String::new(),
        });
    }
    let ls = limit_set_sample(gens, PINGPONG_LIMIT_LEN)?;
    if ls.points.is_empty() {
        return Err(GrowthError::TooFewElements { have: 0, need: 1 });
    }
    for p in &ls.points {
        for (center, cname) in [(&xp, "attracting"), (&xm, "repelling")] {
            let d = flag_distance(&p.flag, center);
            if d <= r + tol.gp {
                return Err(GrowthError::PingPongPrecondition {
                    what: "limit point inside an expanded ball",
                    margin: d - r,
                    witness: format!("{} near {cname}", p.word.display(gens)),
                });
            }
            let tv = transversality_margin(&p.flag, center).margin;
            if tv <= tol.gp {
                return Err(GrowthError::PingPongPrecondition {
                    what: "limit point not transverse to a fixed flag",
                    margin: tv,
                    witness: format!("{} against {cname}", p.word.display(gens)),
                });
            }
        }
    }

    let mut sampler = rng(seed);
    let shell_rp = sample_sphere(&mut sampler, &xp, r, samples)?;
    let shell_rm = sample_sphere(&mut sampler, &xm, r, samples)?;
    let shell_hp = sample_sphere(&mut sampler, &xp, 0.5 * r, samples)?;
    let shell_hm = sample_sphere(&mut sampler, &xm, 0.5 * r, samples)?;

    // Full-radius cloud seeds the target set; half-radius cloud is the
    // set the previous stage moves.
    let mut ball_full: Vec<Flag> = vec![xp.clone(), xm.clone()];
    ball_full.extend(shell_rp.iter().cloned());
    ball_full.extend(shell_rm.iter().cloned());
    let mut ball_half: Vec<Flag> = vec![xp.clone(), xm.clone()];
    ball_half.extend(shell_hp.iter().cloned());
    ball_half.extend(shell_hm.iter().cloned());

    let enumr = enumerate(gens, PINGPONG_GAMMA_CAP, true);
    let gammas: Vec<(&Word, Vec<f64>)> = enumr
        .iter()
        .filter(|e| !e.word.is_empty())
        .map(|e| (&e.word, e.matrix.to_f64_scaled().0))
        .collect();

    let mut d_cloud: Vec<Flag> = ls.points.iter().map(|p| p.flag.clone()).collect();
    for (_, mat) in &gammas {
        for y in &ball_full {
            d_cloud.push(y.transformed(mat)?);
        }
    }

    let mut eq32_margins: Vec<GammaMargin> = Vec::with_capacity(gammas.len());
    for (word, mat) in &gammas {
        let mut margin = f64::INFINITY;
        for y in &ball_half {
            let img = y.transformed(mat)?;
            margin = margin.min(flag_distance(&img, &xp) - r);
            margin = margin.min(flag_distance(&img, &xm) - r);
        }
        if margin <= tol.gp {
            return Err(GrowthError::PingPongMarginFailure {
                inequality: "3.2",
                witness: word.display(gens),
                margin,
            });
        }
        eq32_margins.push(GammaMargin { word: (*word).clone(), margin });
    }

    // The k-th power acts by iterating the exact step on the image cloud
    // rather than by powering the matrix: the step keeps a fixed bit
    // size, and rounding between steps only perturbs flags transverse to
    // the contraction, which the next step shrinks again.
    let p_pos = beta.pow(m as i64);
    let p_neg = beta.pow(-(m as i64));
    let half = 0.5 * r;
    let mut cloud_pos = d_cloud.clone();
    let mut cloud_neg = d_cloud.clone();
    let mut eq33_margins: Vec<PowerMargin> = Vec::with_capacity(2 * PINGPONG_K_CAP as usize);
    for k in 1..=PINGPONG_K_CAP {
        for (cloud, step, center, attracting) in
            [(&mut cloud_pos, &p_pos, &xp, true), (&mut cloud_neg, &p_neg, &xm, false)]
        {
            let next: Vec<Flag> =
                cloud.par_iter().map(|y| y.transformed_by(step)).collect::<Result<_, _>>()?;
            let far = next.par_iter().map(|y| flag_distance(y, center)).reduce(|| 0.0, f64::max);
            *cloud = next;
            let margin = half - far;
            if margin <= tol.gp {
                return Err(GrowthError::PingPongMarginFailure {
                    inequality: "3.3",
                    witness: format!("k={k} sign={}", if attracting { "+" } else { "-" }),
                    margin,
                });
            }
            eq33_margins.push(PowerMargin { k, attracting, margin });
        }
    }

    let d_span = d_cloud.iter().map(|y| flag_distance(&d_cloud[0], y)).fold(0.0, f64::max);
    let min_margin = eq32_margins
        .iter()
        .map(|g| g.margin)
        .chain(eq33_margins.iter().map(|p| p.margin))
        .fold(f64::INFINITY, f64::min);
    Ok(PingPongCertificate {
        n,
        attracting: xp,
        repelling: xm,
        radius: r,
        half_radius: half,
        power: m,
        seed,
        fixed_flag_residual: ff.residual,
        fixed_pair_margin: pair_margin,
        center_separation: separation,
        sphere_samples_per_shell: samples,
        limit_words: ls.points.iter().map(|p| p.word.clone()).collect(),
        gamma_words: gammas.iter().map(|(w, _)| (*w).clone()).collect(),
        k_cap: PINGPONG_K_CAP,
        d_cloud_size: d_cloud.len(),
        d_span,
        eq32_margins,
        eq33_margins,
        min_margin,
    })
}

/// Seeded flags at the stated distance from a center, through bisection
/// along blended frames toward random far flags.
fn sample_sphere(
    r: &mut rand_chacha::ChaCha8Rng,
    center: &Flag,
    rho: f64,
    count: usize,
) -> Result<Vec<Flag>, GrowthError> {
    let n = center.n();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 200 * count {
            return Err(GrowthError::SphereSampling { radius: rho });
        }
        let target = random_flag(r, n);
        if flag_distance(center, &target) <= 1.05 * rho {
            continue;
        }
        let mut lo = 0.0f64;
        let mut hi = 1.0f64;
        let mut found = None;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let Some(f) = blend_flags(center, &target, mid) else { break };
            let d = flag_distance(center, &f);
            if d > rho {
                hi = mid;
            } else if d >= 0.999 * rho {
                found = Some(f);
                break;
            } else {
                lo = mid;
            }
        }
        if let Some(f) = found {
            out.push(f);
        }
    }
    Ok(out)
}

/// Frame interpolation toward `b`; `None` when the blend degenerates.
fn blend_flags(a: &Flag, b: &Flag, t: f64) -> Option<Flag> {
    let n = a.n();
    let cols: Vec<f64> =
        a.cols().iter().zip(b.cols()).map(|(x, y)| (1.0 - t) * x + t * y).collect();
    Flag::from_columns(n, cols).ok()
}

/// One stage of the staged audit: the generators and, for stages past the
/// first cyclic one, the certificate that gates the estimate.
#[derive(Clone, Debug)]
pub struct StageInput {
    pub gens: GeneratorSet,
    pub certificate: Option<PingPongCertificate>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: usize,
    /// Exponent budget for this stage: `1 - 2^-stage`.
    pub budget: f64,
    pub deltas: Vec<f64>,
    pub residuals: Vec<f64>,
    /// First cyclic stage needs no certificate.
    pub exempt_cyclic: bool,
    /// Set when a required certificate is missing or not positive.
    pub refused: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionAudit {
    pub max_word_len: usize,
    pub stages: Vec<StageReport>,
    pub pass: bool,
}

/// Staged exponent budget audit: each stage's fitted exponents, plus fit
/// residual, must sit below `1 - 2^-stage`, and every stage beyond a
/// first cyclic one must carry a positive ping-pong certificate.
pub fn condition31_audit(
    stages: &[StageInput],
    max_len: usize,
) -> Result<ConditionAudit, GrowthError> {
    let mut reports = Vec::with_capacity(stages.len());
    for (idx, st) in stages.iter().enumerate() {
        let stage = idx + 1;
        let budget = 1.0 - 2.0f64.powi(-(stage as i32));
        let exempt_cyclic = stage == 1 && st.gens.rank() == 1;
        let certified = st.certificate.as_ref().is_some_and(|c| c.min_margin > 0.0);
        let refused = !exempt_cyclic && !certified;
        let est = critical_exponent(&st.gens, max_len)?;
        let deltas: Vec<f64> = est.per_root.iter().map(|r| r.slope).collect();
        let residuals: Vec<f64> = est.per_root.iter().map(|r| r.residual).collect();
        let within = deltas.iter().zip(&residuals).all(|(d, e)| d + e <= budget);
        reports.push(StageReport {
            stage,
            budget,
            deltas,
            residuals,
            exempt_cyclic,
            refused,
            pass: !refused && within,
        });
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok(ConditionAudit { max_word_len: max_len, stages: reports, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn mat(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_i64_rows(rows).expect("unimodular")
    }

    fn diag(nums: &[i64], dens: &[i64]) -> RationalMatrix {
        let entries = nums
            .iter()
            .zip(dens)
            .map(|(&a, &b)| BigRational::new(a.into(), b.into()))
            .collect();
        RationalMatrix::diagonal(entries).expect("unimodular diagonal")
    }

    fn d933() -> RationalMatrix {
        diag(&[9, 3, 1], &[1, 1, 27])
    }

    /// Generic loxodromic conjugate of diag(16, 1, 1/16). The conjugator
    /// keeps every partial column span clear of the coordinate flags, so
    /// the fixed flags stay transverse to the diagonal limit set.
    fn beta_conjugate() -> RationalMatrix {
        let h = mat(&[&[2, 3, 1], &[1, 2, 1], &[1, 1, 1]]);
        h.dot(&diag(&[16, 1, 1], &[1, 1, 16])).dot(&h.inverse())
    }

    // --- select_power ---------------------------------------------------

    #[test]
    fn select_power_matches_the_floor_of_log_arithmetic() {
        let b = d933();
        let sel = select_power(&b, 11).unwrap();
        let oracle = (11.0 / 3f64.ln()).floor() as u64;
        assert_eq!(sel.m, 10);
        assert_eq!(sel.m, oracle);
        assert!((sel.min_root - 3f64.ln()).abs() < 1e-12);
        assert!(!sel.underpowered);

        let low = select_power(&b, 1).unwrap();
        assert_eq!(low.m, 0);
        assert!(low.underpowered);
    }

    #[test]
    fn select_power_gates_its_preconditions() {
        let shear = mat(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        assert!(matches!(
            select_power(&shear, 5),
            Err(GrowthError::NotLoxodromic { .. })
        ));
        assert!(matches!(select_power(&d933(), 0), Err(GrowthError::ZeroTarget)));
    }

    // --- critical_exponent ----------------------------------------------

    #[test]
    fn cyclic_diagonal_counting_matches_the_closed_form() {
        let gens = GeneratorSet::named(3, &[("g", d933())]).unwrap();
        let est = critical_exponent(&gens, 200).unwrap();
        assert_eq!(est.elements, 401);
        assert_eq!(est.completed_len, 200);
        // Counting oracle at off-grid radii: positive powers contribute
        // k*log3 to the first root, inverses 4k*log3, plus the identity.
        let c = 3f64.ln();
        for (idx, r_mult, expect) in [
            (0usize, 40.5, 40 + 10 + 1u64),
            (0, 7.5, 7 + 1 + 1),
            (1, 40.5, 40 + 10 + 1),
            (1, 7.5, 7 + 1 + 1),
        ] {
            assert_eq!(est.count_at(idx, r_mult * c), expect, "root {idx} at {r_mult}");
        }
        for rc in &est.per_root {
            assert!(rc.slope <= 0.05, "slope {}", rc.slope);
            assert!(rc.slope >= 0.0);
            for w in rc.grid.windows(2) {
                assert!(w[1].count > w[0].count && w[1].r > w[0].r);
            }
            assert!(rc.window.0 < rc.window.1);
            assert!(rc.window_points >= 2);
        }
    }

    #[test]
    fn counting_needs_material_input() {
        let gens = GeneratorSet::named(3, &[("e", RationalMatrix::identity(3))]).unwrap();
        assert!(matches!(
            critical_exponent(&gens, 6),
            Err(GrowthError::TooFewElements { .. })
        ));
    }

    #[test]
    fn conjugated_generators_report_the_same_exponent() {
        let h = mat(&[&[3, 2, 1], &[2, 2, 1], &[1, 1, 1]]);
        let a = d933();
        let b = h.dot(&a).dot(&h.inverse());
        let ga = GeneratorSet::named(3, &[("g", a)]).unwrap();
        let gb = GeneratorSet::named(3, &[("g", b)]).unwrap();
        let ea = critical_exponent(&ga, 60).unwrap();
        let eb = critical_exponent(&gb, 60).unwrap();
        for i in 0..2 {
            let gap = (ea.delta(i) - eb.delta(i)).abs();
            let slack = ea.per_root[i].residual + eb.per_root[i].residual + 0.02;
            assert!(gap <= slack, "root {i}: gap {gap} over slack {slack}");
        }
    }

    #[test]
    fn estimates_round_trip_and_emit_csv() {
        let gens = GeneratorSet::named(3, &[("g", d933())]).unwrap();
        let est = critical_exponent(&gens, 30).unwrap();
        let json = serde_json::to_string(&est).unwrap();
        let back: ExponentEstimate = serde_json::from_str(&json).unwrap();
        assert_eq!(back.elements, est.elements);
        assert_eq!(back.per_root[0].grid.len(), est.per_root[0].grid.len());
        let csv = est.counts_csv();
        let rows: usize = est.per_root.iter().map(|r| r.grid.len()).sum();
        assert_eq!(csv.lines().count(), rows + 1);
        assert!(csv.starts_with("root,r,count\n"));
        assert!(csv.contains("a12,"));
        assert!(csv.contains("a23,"));
    }

    // --- anosov_growth_check --------------------------------------------

    #[test]
    fn cyclic_loxodromic_envelope_is_exactly_linear() {
        let gens = GeneratorSet::named(3, &[("g", d933())]).unwrap();
        let chk = anosov_growth_check(&gens, 30).unwrap();
        assert!(chk.pass);
        let c = 3f64.ln();
        for root in &chk.per_root {
            // Min over g^k and g^-k is k*log3 for both simple roots, so
            // the best envelope is the exact line through the origin.
            assert_eq!(root.a_hat, 0, "root {:?}", root.root);
            assert!((root.l_hat - 1.0 / c).abs() < 1e-9, "l_hat {}", root.l_hat);
            assert!((root.min_margin - c).abs() < 1e-6);
            assert!((root.tail_ratio - 1.0).abs() < 1e-6);
            assert_eq!(root.min_alpha_by_len.len(), 30);
        }
    }

    #[test]
    fn unipotent_generator_fails_the_growth_check() {
        let shear = mat(&[&[1, 1, 0], &[0, 1, 0], &[0, 0, 1]]);
        let gens = GeneratorSet::named(3, &[("u", shear)]).unwrap();
        let chk = anosov_growth_check(&gens, 12).unwrap();
        assert!(!chk.pass);
        for root in &chk.per_root {
            // Cartan growth of a unipotent is logarithmic: increments
            // collapse even though each one stays positive.
            assert!(root.tail_ratio < 0.5, "tail ratio {}", root.tail_ratio);
            assert!(root.min_margin > 0.0);
        }
    }

    // --- key_lemma_audit ------------------------------------------------

    #[test]
    fn commuting_diagonals_are_an_exact_additivity_case() {
        let gens = GeneratorSet::named(3, &[("a", diag(&[4, 2, 1], &[1, 1, 8]))]).unwrap();
        let rep = key_lemma_audit(&gens, &d933(), 4, 10, 5).unwrap();
        assert!(rep.max_constant <= 1e-9, "constant {}", rep.max_constant);
        assert_eq!(rep.per_root.len(), 2);
        let tested: usize = rep.census.iter().map(|(_, c)| c).sum();
        assert_eq!(tested, 6 + 4 * 10);
        for root in &rep.per_root {
            assert_eq!(root.by_blocks.iter().map(|b| b.blocks).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        }
    }

    #[test]
    fn free_pair_deviation_is_finite_and_stable() {
        let gens = GeneratorSet::named(3, &[("a", d933())]).unwrap();
        let rep = key_lemma_audit(&gens, &beta_conjugate(), 6, 12, 7).unwrap();
        assert!(rep.max_constant > 1e-6, "a generic pair genuinely deviates");
        assert!(rep.max_constant < 50.0);
        for root in &rep.per_root {
            let upto = |cap: usize| {
                root.by_blocks
                    .iter()
                    .filter(|b| b.blocks <= cap)
                    .map(|b| b.max_deviation)
                    .fold(0.0f64, f64::max)
            };
            let at4 = upto(4);
            let at6 = upto(6);
            assert!(at6 <= 1.1 * at4, "root {:?}: {at4} -> {at6}", root.root);
            assert!(at4 <= at6 + 1e-12);
        }
        // Replays are deterministic.
        let again = key_lemma_audit(&gens, &beta_conjugate(), 6, 12, 7).unwrap();
        assert_eq!(
            serde_json::to_string(&rep).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
    }

    // --- pingpong_certify -----------------------------------------------

    #[test]
    fn north_south_pair_earns_a_certificate() {
        let gens = GeneratorSet::named(3, &[("a", d933())]).unwrap();
        let tol = Tolerances::default();
        let cert = pingpong_certify(&gens, &beta_conjugate(), 0.05, 12, 24, 11, &tol).unwrap();
        assert!(cert.min_margin > tol.gp);
        for g in &cert.eq32_margins {
            assert!(g.margin > tol.gp, "gamma margin {}", g.margin);
        }
        assert_eq!(cert.eq33_margins.len(), 2 * PINGPONG_K_CAP as usize);
        for p in &cert.eq33_margins {
            assert!(p.margin > tol.gp, "power margin {} at k={}", p.margin, p.k);
        }
        assert_eq!(cert.gamma_words.len(), 8);
        assert_eq!(cert.power, 12);
        assert!(cert.center_separation > 0.1);

        let again = pingpong_certify(&gens, &beta_conjugate(), 0.05, 12, 24, 11, &tol).unwrap();
        assert_eq!(
            serde_json::to_string(&cert).unwrap(),
            serde_json::to_string(&again).unwrap()
        );
        let back: PingPongCertificate =
            serde_json::from_str(&serde_json::to_string(&cert).unwrap()).unwrap();
        assert_eq!(back.d_cloud_size, cert.d_cloud_size);
    }

    #[test]
    fn identity_power_fails_the_contraction_inequality() {
        let gens = GeneratorSet::named(3, &[("a", d933())]).unwrap();
        let tol = Tolerances::default();
        let err = pingpong_certify(&gens, &beta_conjugate(), 0.05, 0, 8, 3, &tol).unwrap_err();
        match err {
            GrowthError::PingPongMarginFailure { inequality, witness, margin } => {
                assert_eq!(inequality, "3.3");
                assert!(witness.contains("k=1"), "witness {witness}");
                assert!(margin < 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn base_with_flags_inside_the_limit_set_is_rejected() {
        let gens = GeneratorSet::named(3, &[("a", d933())]).unwrap();
        let tol = Tolerances::default();
        // The square of the generator shares its fixed flags with the
        // whole cyclic group, so the limit points sit at distance zero.
        let err = pingpong_certify(&gens, &d933().pow(2), 0.05, 12, 8, 3, &tol).unwrap_err();
        assert!(matches!(err, GrowthError::PingPongPrecondition { .. }), "got {err:?}");
    }

    // --- condition31_audit ----------------------------------------------

    #[test]
    fn staged_budget_audit_passes_certified_stages_and_refuses_bare_ones() {
        let a = d933();
        let cyclic = GeneratorSet::named(3, &[("a", a.clone())]).unwrap();
        let tol = Tolerances::default();
        let beta = beta_conjugate();
        let cert = pingpong_certify(&cyclic, &beta, 0.05, 4, 16, 11, &tol).unwrap();
        let pair =
            GeneratorSet::named(3, &[("a", a.clone()), ("b", beta.pow(4))]).unwrap();

        let audit = condition31_audit(
            &[
                StageInput { gens: cyclic.clone(), certificate: None },
                StageInput { gens: pair.clone(), certificate: Some(cert) },
            ],
            6,
        )
        .unwrap();
        assert!(audit.pass, "stages {:?}", audit.stages);
        assert_eq!(audit.stages[0].budget, 0.5);
        assert_eq!(audit.stages[1].budget, 0.75);
        assert!(audit.stages[0].exempt_cyclic);
        assert!(!audit.stages[1].refused);

        let refused = condition31_audit(
            &[
                StageInput { gens: cyclic, certificate: None },
                StageInput { gens: pair, certificate: None },
            ],
            6,
        )
        .unwrap();
        assert!(!refused.pass);
        assert!(refused.stages[1].refused);
    }
}
