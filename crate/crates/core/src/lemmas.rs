//! Empirical checks of the weighted estimates used by the virial argument:
//!
//! * KM1: `integral (H f_x) f phi'(x/l) <= c/l integral f^2 phi'(x/l)` (one-sided)
//! * KM2: `|integral (H f_x) f_x phi(x/l)| <= c/l integral f^2 phi'(x/l)`
//! * COMM: `||D^{1/2}[D^{1/2}; w] u||_2 <= c ||(w')^||_1 ||u||_2`
//! * KEY: `integral |u|^3 phi'(x/l) <= c integral u^2 phi'(x/l)`, with the
//!   constant's dependence on `||u||_2 + ||D^{1/2}u||_2` made explicit
//!
//! Each check returns the left side, the right side with the constant
//! stripped, and their ratio. Constants are calibrated as the supremum of
//! the ratio over a seeded corpus.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::soliton::{certified_soliton, soliton};
use crate::spectral::{
    abs_deriv, check_grid, deriv, fourier_l1_deriv, half_deriv, inner, product, Field, Grid,
};
use crate::virial::{phi, window};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaTag {
    #[serde(rename = "KM1")]
    Km1,
    #[serde(rename = "KM2")]
    Km2,
    #[serde(rename = "COMM")]
    Comm,
    #[serde(rename = "KEY")]
    Key,
}

impl LemmaTag {
    pub const ALL: [LemmaTag; 4] = [LemmaTag::Km1, LemmaTag::Km2, LemmaTag::Comm, LemmaTag::Key];
}

impl fmt::Display for LemmaTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LemmaTag::Km1 => "KM1",
            LemmaTag::Km2 => "KM2",
            LemmaTag::Comm => "COMM",
            LemmaTag::Key => "KEY",
        })
    }
}

impl FromStr for LemmaTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "KM1" => Ok(LemmaTag::Km1),
            "KM2" => Ok(LemmaTag::Km2),
            "COMM" => Ok(LemmaTag::Comm),
            "KEY" => Ok(LemmaTag::Key),
            other => Err(Error::InvalidParameter(format!("unknown lemma tag {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub tag: LemmaTag,
    pub lambda: f64,
    pub lhs: f64,
    pub rhs_unit: f64,
    pub ratio: f64,
    pub input_id: String,
}

impl LemmaReport {
    fn new(tag: LemmaTag, lambda: f64, lhs: f64, rhs_unit: f64) -> LemmaReport {
        LemmaReport {
            tag,
            lambda,
            lhs,
            rhs_unit,
            ratio: lhs / rhs_unit,
            input_id: String::new(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> LemmaReport {
        self.input_id = id.into();
        self
    }

    pub fn abs_ratio(&self) -> f64 {
        self.ratio.abs()
    }

    /// Whether the report breaks the bound with constant `c`. KM1 is a
    /// one-sided bound, so only its signed ratio counts.
    pub fn violates(&self, c: f64) -> bool {
        self.ratio > c
    }
}

/// `D^{1/2}(w u) - w D^{1/2}u`.
pub fn commutator(weight: &Field, u: &Field, dealias: bool) -> Result<Field> {
    check_grid(weight, u)?;
    let wu = product(weight, u, dealias)?;
    let hu = half_deriv(u);
    half_deriv(&wu).sub(&product(weight, &hu, dealias)?)
}

/// `D^{1/2}[D^{1/2}; w] u` with dealiased products.
pub fn commutator_half(weight: &Field, u: &Field) -> Result<Field> {
    Ok(half_deriv(&commutator(weight, u, true)?))
}

fn reject_zero(f: &Field) -> Result<()> {
    if f.samples().iter().all(|&v| v == 0.0) {
        Err(Error::ZeroInput)
    } else {
        Ok(())
    }
}

fn check_lambda(lam: f64) -> Result<()> {
    if lam > 0.0 && lam.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lambda = {lam} must be > 0")))
    }
}

/// `(integral (H f_x) f phi'(x/l), (1/l) integral f^2 phi'(x/l))`.
pub fn km1_sides(f: &Field, lam: f64) -> Result<(f64, f64)> {
    check_lambda(lam)?;
    let w = window(f.grid(), lam);
    let lhs = inner(&abs_deriv(f).mul(f)?, &w)?;
    let rhs = inner(&f.mul(f)?, &w)? / lam;
    Ok((lhs, rhs))
}

/// `(|integral (H f_x) f_x phi(x/l)|, (1/l) integral f^2 phi'(x/l))`.
pub fn km2_sides(f: &Field, lam: f64) -> Result<(f64, f64)> {
    check_lambda(lam)?;
    let grid = f.grid();
    let w = window(grid, lam);
    let phi_w = Field::from_fn(grid, |x| phi(x / lam));
    let lhs = inner(&abs_deriv(f).mul(&deriv(f))?, &phi_w)?.abs();
    let rhs = inner(&f.mul(f)?, &w)? / lam;
    Ok((lhs, rhs))
}

/// `(||D^{1/2}[D^{1/2}; w] u||_2, ||(w')^||_1 ||u||_2)`.
pub fn comm_sides(weight: &Field, u: &Field) -> Result<(f64, f64)> {
    let lhs = commutator_half(weight, u)?.l2_norm();
    Ok((lhs, fourier_l1_deriv(weight) * u.l2_norm()))
}

/// `(integral |u|^3 phi'(x/l), (||u|| + ||D^{1/2}u||) integral u^2 phi'(x/l))`.
pub fn key_sides(u: &Field, lam: f64) -> Result<(f64, f64)> {
    check_lambda(lam)?;
    let w = window(u.grid(), lam);
    let cube = u.map(|v| v.abs().powi(3));
    let lhs = inner(&cube, &w)?;
    let norms = u.l2_norm() + half_deriv(u).l2_norm();
    Ok((lhs, norms * inner(&u.mul(u)?, &w)?))
}

pub fn check_km1(f: &Field, lam: f64) -> Result<LemmaReport> {
    reject_zero(f)?;
    let (lhs, rhs) = km1_sides(f, lam)?;
    Ok(LemmaReport::new(LemmaTag::Km1, lam, lhs, rhs))
}

pub fn check_km2(f: &Field, lam: f64) -> Result<LemmaReport> {
    reject_zero(f)?;
    let (lhs, rhs) = km2_sides(f, lam)?;
    Ok(LemmaReport::new(LemmaTag::Km2, lam, lhs, rhs))
}

/// COMM with an arbitrary weight; the report's `lambda` is NaN.
pub fn check_comm(weight: &Field, u: &Field) -> Result<LemmaReport> {
    if fourier_l1_deriv(weight) == 0.0 {
        return Err(Error::ZeroWeight);
    }
    reject_zero(u)?;
    let (lhs, rhs) = comm_sides(weight, u)?;
    Ok(LemmaReport::new(LemmaTag::Comm, f64::NAN, lhs, rhs))
}

/// COMM with the window `phi'(x/l)` used in the virial argument.
pub fn check_comm_window(u: &Field, lam: f64) -> Result<LemmaReport> {
    check_lambda(lam)?;
    let mut r = check_comm(&window(u.grid(), lam), u)?;
    r.lambda = lam;
    Ok(r)
}

pub fn check_key(u: &Field, lam: f64) -> Result<LemmaReport> {
    reject_zero(u)?;
    let (lhs, rhs) = key_sides(u, lam)?;
    Ok(LemmaReport::new(LemmaTag::Key, lam, lhs, rhs))
}

pub fn check(tag: LemmaTag, f: &Field, lam: f64) -> Result<LemmaReport> {
    match tag {
        LemmaTag::Km1 => check_km1(f, lam),
        LemmaTag::Km2 => check_km2(f, lam),
        LemmaTag::Comm => check_comm_window(f, lam),
        LemmaTag::Key => check_key(f, lam),
    }
}

#[derive(Clone, Debug)]
pub struct CorpusEntry {
    pub id: String,
    pub field: Field,
}

/// Seeded test-function corpus.
#[derive(Clone, Debug)]
pub struct Corpus {
    pub seed: u64,
    pub entries: Vec<CorpusEntry>,
}

const RANDOM_FIELDS: usize = 20;

impl Corpus {
    /// 20 random band-limited fields, 4 Gaussians, 4 soliton profiles, and
    /// 4 dilates/translates. Random fields have zero mean and unit L2 norm.
    pub fn generate(seed: u64, grid: &Arc<Grid>) -> Result<Corpus> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n();
        let max_band = (n / 8).max(2);
        let mut entries = Vec::new();
        for i in 0..RANDOM_FIELDS {
            let band = rng.gen_range(2..=max_band);
            let field = random_band_limited(grid, band, &mut rng);
            entries.push(CorpusEntry {
                id: format!("random-{i:02}-bw{band}"),
                field,
            });
        }
        let gaussians = [
            (1.0, 1.0, 0.0),
            (0.5, 3.0, 10.0),
            (2.0, 0.5, -20.0),
            (1.0, 5.0, 40.0),
        ];
        for (i, &(amp, width, center)) in gaussians.iter().enumerate() {
            entries.push(CorpusEntry {
                id: format!("gaussian-{i}"),
                field: gaussian(grid, amp, width, center),
            });
        }
        let length = grid.length();
        let scale_floor = 20.0 / length;
        for (i, &b) in [0.5f64, 1.0, 2.0].iter().enumerate() {
            let (q, _) = certified_soliton(b.max(scale_floor), 0.0, grid)?;
            entries.push(CorpusEntry {
                id: format!("soliton-certified-{i}"),
                field: q,
            });
        }
        let (q, _) = soliton(1.0f64.max(scale_floor), 5.0, grid)?;
        entries.push(CorpusEntry {
            id: "soliton-classical".into(),
            field: q,
        });
        let extras = [
            ("gaussian-0-dilate2", gaussian(grid, 1.0, 2.0, 0.0)),
            ("gaussian-1-translate", gaussian(grid, 0.5, 3.0, -35.0)),
            (
                "soliton-certified-1-translate",
                certified_soliton(1.0f64.max(scale_floor), 30.0, grid)?.0,
            ),
            (
                "soliton-certified-1-dilate2",
                certified_soliton(0.5f64.max(scale_floor), 0.0, grid)?.0,
            ),
        ];
        for (id, field) in extras {
            entries.push(CorpusEntry { id: id.into(), field });
        }
        Ok(Corpus { seed, entries })
    }

    pub fn from_entries(seed: u64, entries: Vec<CorpusEntry>) -> Corpus {
        Corpus { seed, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn gaussian(grid: &Arc<Grid>, amp: f64, width: f64, center: f64) -> Field {
    Field::from_fn(grid, |x| {
        let y = (x - center) / width;
        amp * (-y * y).exp()
    })
}

/// Zero-mean field with independent normal coefficients on modes `1..=band`,
/// normalized to unit L2 norm.
pub fn random_band_limited(grid: &Arc<Grid>, band: usize, rng: &mut impl Rng) -> Field {
    let n = grid.n();
    let band = band.min(n / 2 - 1);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for k in 1..=band {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        spec[k] = Complex64::new(re, im);
        spec[n - k] = Complex64::new(re, -im);
    }
    let f = Field::from_raw(grid, grid.inverse_real(spec));
    let norm = f.l2_norm();
    f.scale(1.0 / norm)
}

/// All reports for `tag` over `corpus x lams`, zero entries skipped.
/// Ordered entry-major, then by lambda.
pub fn sweep(corpus: &Corpus, tag: LemmaTag, lams: &[f64]) -> Result<Vec<LemmaReport>> {
    let pairs: Vec<(&CorpusEntry, f64)> = corpus
        .entries
        .iter()
        .flat_map(|e| lams.iter().map(move |&l| (e, l)))
        .collect();
    let results: Vec<Result<Option<LemmaReport>>> = pairs
        .par_iter()
        .map(|(e, lam)| match check(tag, &e.field, *lam) {
            Ok(r) => Ok(Some(r.with_id(e.id.clone()))),
            Err(Error::ZeroInput) | Err(Error::ZeroWeight) => Ok(None),
            Err(err) => Err(err),
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    for r in results {
        if let Some(rep) = r? {
            out.push(rep);
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub tag: LemmaTag,
    /// Supremum of the (signed) ratio; zero when nothing was evaluable.
    pub constant: f64,
    pub evaluated: usize,
    pub degenerate: bool,
}

/// Empirical constant: the supremum ratio over `corpus x lams`.
pub fn calibrate(corpus: &Corpus, tag: LemmaTag, lams: &[f64]) -> Result<Calibration> {
    let reports = sweep(corpus, tag, lams)?;
    Ok(calibration_of(tag, &reports))
}

pub fn calibration_of(tag: LemmaTag, reports: &[LemmaReport]) -> Calibration {
    let relevant: Vec<&LemmaReport> = reports.iter().filter(|r| r.tag == tag).collect();
    let constant = relevant.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Calibration {
        tag,
        constant,
        evaluated: relevant.len(),
        degenerate: relevant.is_empty(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Arc<Grid> {
        Grid::new(1024, 200.0).unwrap()
    }

    #[test]
    fn commutator_with_constant_weight_vanishes() {
        let g = grid();
        let u = Field::from_fn(&g, |x| (-x * x / 3.0).exp() * (2.0 * x).cos());
        let c = commutator_half(&Field::constant(&g, 2.5), &u).unwrap();
        assert!(c.max_abs() < 1e-12);
        let w = window(&g, 3.0);
        assert_eq!(commutator_half(&w, &Field::zeros(&g)).unwrap().max_abs(), 0.0);
        assert!(matches!(
            commutator_half(&w, &Field::zeros(&Grid::new(64, 10.0).unwrap())),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn commutator_is_linear() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_band_limited(&g, 40, &mut rng);
        let v = random_band_limited(&g, 90, &mut rng);
        let w = window(&g, 2.0);
        let lhs = commutator_half(&w, &u.add(&v).unwrap()).unwrap();
        let rhs = commutator_half(&w, &u)
            .unwrap()
            .add(&commutator_half(&w, &v).unwrap())
            .unwrap();
        let err = lhs.sub(&rhs).unwrap().l2_norm() / rhs.l2_norm();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn zero_inputs() {
        let g = grid();
        let z = Field::zeros(&g);
        assert_eq!(km1_sides(&z, 1.0).unwrap().0, 0.0);
        assert_eq!(km2_sides(&z, 1.0).unwrap().0, 0.0);
        assert_eq!(key_sides(&z, 1.0).unwrap().0, 0.0);
        assert!(matches!(check_km1(&z, 1.0), Err(Error::ZeroInput)));
        assert!(matches!(check_key(&z, 1.0), Err(Error::ZeroInput)));
        let u = gaussian(&g, 1.0, 1.0, 0.0);
        assert!(matches!(
            check_comm(&Field::constant(&g, 1.0), &u),
            Err(Error::ZeroWeight)
        ));
        let (lhs, _) = comm_sides(&Field::constant(&g, 1.0), &u).unwrap();
        assert!(lhs < 1e-12);
    }

    #[test]
    fn finite_ratios_on_basic_inputs() {
        let g = Grid::new(4096, 400.0).unwrap();
        let (q, _) = certified_soliton(1.0, 0.0, &g).unwrap();
        let r = check_km1(&q, 1.0).unwrap();
        assert!(r.ratio.is_finite() && r.rhs_unit > 0.0);
        let gauss = gaussian(&g, 1.0, 1.0, 0.0);
        let r = check_km2(&gauss, 5.0).unwrap();
        assert!(r.ratio.is_finite() && r.rhs_unit > 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_band_limited(&g, 100, &mut rng);
        let r = check_comm_window(&u, 1.0).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }

    #[test]
    fn homogeneity_of_comm_and_key() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_band_limited(&g, 60, &mut rng);
        let w = window(&g, 4.0);
        let base = check_comm(&w, &u).unwrap();
        let tripled = check_comm(&w, &u.scale(3.0)).unwrap();
        assert!((tripled.lhs / base.lhs - 3.0).abs() < 1e-12);
        assert!((tripled.rhs_unit / base.rhs_unit - 3.0).abs() < 1e-12);
        assert!((tripled.ratio - base.ratio).abs() <= 1e-12 * base.ratio);

        let (q, _) = certified_soliton(1.0, 0.0, &g).unwrap();
        for theta in [0.25, 7.0] {
            let a = check_key(&q, 1.0).unwrap();
            let b = check_key(&q.scale(theta), 1.0).unwrap();
            assert!((b.lhs / a.lhs - theta.powi(3)).abs() < 1e-12 * theta.powi(3));
            assert!((b.ratio - a.ratio).abs() <= 1e-12 * a.ratio);
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let g = grid();
        let a = Corpus::generate(42, &g).unwrap();
        let b = Corpus::generate(42, &g).unwrap();
        assert_eq!(a.len(), 32);
        for (x, y) in a.entries.iter().zip(&b.entries) {
            assert_eq!(x.id, y.id);
            assert_eq!(x.field.samples(), y.field.samples());
        }
        let c = Corpus::generate(43, &g).unwrap();
        assert_ne!(a.entries[0].field.samples(), c.entries[0].field.samples());
        for e in &a.entries[..RANDOM_FIELDS] {
            assert!(crate::spectral::integral(&e.field).abs() < 1e-12);
        }
    }

    #[test]
    fn calibration_degenerate_and_deterministic() {
        let g = grid();
        let zero = Corpus::from_entries(
            0,
            vec![CorpusEntry {
                id: "zero".into(),
                field: Field::zeros(&g),
            }],
        );
        let c = calibrate(&zero, LemmaTag::Key, &[1.0]).unwrap();
        assert_eq!(c.constant, 0.0);
        assert!(c.degenerate);

        let corpus = Corpus::generate(5, &g).unwrap();
        let a = calibrate(&corpus, LemmaTag::Key, &[1.0, 10.0]).unwrap();
        let b = calibrate(&corpus, LemmaTag::Key, &[1.0, 10.0]).unwrap();
        assert_eq!(a, b);
        assert!(!a.degenerate && a.constant > 0.0);
    }

    #[test]
    fn tag_round_trip() {
        for t in LemmaTag::ALL {
            assert_eq!(t.to_string().parse::<LemmaTag>().unwrap(), t);
        }
        assert!("KM3".parse::<LemmaTag>().is_err());
    }
}
