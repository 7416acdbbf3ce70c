//! Finite-count measurement simulation with Poissonian totals, expectation
//! estimates from count tables, and Monte Carlo uncertainty by resampling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{partial_trace, Basis, QuantumState};

/// Expected counts per setting when nothing else is configured.
pub const DEFAULT_COUNTS_PER_SETTING: f64 = 500.0;
/// Monte Carlo trials when nothing else is configured.
pub const DEFAULT_TRIALS: usize = 200;
pub const MIN_TRIALS: usize = 100;

/// Seed plus stream id; distinct streams give independent sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.stream);
        r
    }
}

/// Measurement bases per qubit; outcome bitstrings follow this order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Setting(pub Vec<(u8, Basis)>);

impl Setting {
    pub fn new(pairs: Vec<(u8, Basis)>) -> Result<Self> {
        let mut ids: Vec<u8> = pairs.iter().map(|p| p.0).collect();
        ids.sort();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::LabelCollision(w[0]));
        }
        if pairs.is_empty() {
            return Err(Error::Parse("empty measurement setting".into()));
        }
        Ok(Self(pairs))
    }

    pub fn qubits(&self) -> Vec<u8> {
        self.0.iter().map(|p| p.0).collect()
    }

    pub fn basis_of(&self, q: u8) -> Option<Basis> {
        self.0.iter().find(|p| p.0 == q).map(|p| p.1)
    }

    fn position(&self, q: u8) -> Option<usize> {
        self.0.iter().position(|p| p.0 == q)
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (q, b) in &self.0 {
            write!(f, "{}{}", b.letter(), q)?;
        }
        Ok(())
    }
}

impl FromStr for Setting {
    type Err = Error;
    /// Compact form such as `"X1Y2Z5"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad setting {s:?} (expected e.g. X1Y2Z3)"));
        let mut pairs = Vec::new();
        let mut chars = s.trim().chars().peekable();
        while let Some(ch) = chars.next() {
            let basis = Basis::from_letter(ch).ok_or_else(bad)?;
            let mut digits = String::new();
            while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
                digits.push(*d);
                chars.next();
            }
            let q: u8 = digits.parse().map_err(|_| bad())?;
            pairs.push((q, basis));
        }
        Self::new(pairs)
    }
}

impl TryFrom<String> for Setting {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Setting> for String {
    fn from(s: Setting) -> String {
        s.to_string()
    }
}

/// Outcome histogram for one setting. Keys are bitstrings in setting order,
/// `'0'` meaning eigenvalue `+1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub setting: Setting,
    pub counts: BTreeMap<String, u64>,
    pub expected_total: f64,
}

impl CountRecord {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// `Σ (−1)^{parity over mask} · count / total`.
    pub fn parity_expectation(&self, mask: &[u8]) -> Result<f64> {
        let pos: Vec<usize> = mask
            .iter()
            .map(|&q| self.setting.position(q).ok_or(Error::UnknownQubit(q)))
            .collect::<Result<_>>()?;
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyHistogram);
        }
        let mut acc = 0i64;
        for (bits, &n) in &self.counts {
            let b = bits.as_bytes();
            let odd = pos.iter().filter(|&&p| b.get(p) == Some(&b'1')).count() % 2 == 1;
            acc += if odd { -(n as i64) } else { n as i64 };
        }
        Ok(acc as f64 / total as f64)
    }
}

/// Outcome probabilities for `setting`, keyed by bitstring.
pub fn outcome_distribution<S: QuantumState>(
    rho: &S,
    setting: &Setting,
) -> Result<BTreeMap<String, f64>> {
    let qubits = setting.qubits();
    let mut reduced = partial_trace(&rho.to_density(), &qubits)?;
    for (q, b) in &setting.0 {
        if *b != Basis::Z {
            reduced = reduced.apply_unitary(&b.to_computational(), &[*q])?;
        }
    }
    let n = qubits.len();
    let m = reduced.matrix();
    Ok((0..1usize << n)
        .map(|i| {
            let key: String = (0..n)
                .map(|k| if i >> (n - 1 - k) & 1 == 1 { '1' } else { '0' })
                .collect();
            (key, m[(i, i)].re.max(0.0))
        })
        .collect())
}

/// Total ~ Poisson(N), then a multinomial split over the exact outcome
/// probabilities (drawn as a chain of binomials).
pub fn sample_setting_counts<S: QuantumState>(
    rho: &S,
    setting: &Setting,
    expected_total: f64,
    seed: RngSeed,
) -> Result<CountRecord> {
    if !(expected_total > 0.0 && expected_total.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "expected count {expected_total} must be positive"
        )));
    }
    let probs = outcome_distribution(rho, setting)?;
    let mut rng = seed.rng();
    let total = Poisson::new(expected_total)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?
        .sample(&mut rng) as u64;
    let norm: f64 = probs.values().sum();
    let mut remaining_n = total;
    let mut remaining_p = 1.0;
    let mut counts = BTreeMap::new();
    let len = probs.len();
    for (i, (k, p)) in probs.into_iter().enumerate() {
        let p = p / norm;
        let n = if i + 1 == len || remaining_p <= 0.0 {
            remaining_n
        } else {
            let cond = (p / remaining_p).clamp(0.0, 1.0);
            Binomial::new(remaining_n, cond)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng)
        };
        remaining_n -= n;
        remaining_p -= p;
        counts.insert(k, n);
    }
    Ok(CountRecord {
        setting: setting.clone(),
        counts,
        expected_total,
    })
}

/// `⟨Π_{q∈mask} O_q⟩` estimated from counts.
pub fn estimate_expectation(counts: &CountRecord, mask: &[u8]) -> Result<f64> {
    counts.parity_expectation(mask)
}

/// Poisson resampling of every histogram cell.
pub fn resample<R: rand::Rng + ?Sized>(record: &CountRecord, rng: &mut R) -> CountRecord {
    let counts = record
        .counts
        .iter()
        .map(|(k, &n)| {
            let draw = if n == 0 {
                0
            } else {
                Poisson::new(n as f64).expect("positive mean").sample(rng) as u64
            };
            (k.clone(), draw)
        })
        .collect();
    CountRecord {
        setting: record.setting.clone(),
        counts,
        expected_total: record.expected_total,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

/// Runs `statistic` on `trials` Poisson resamplings of `records`. Trial `t`
/// draws from stream `t` of `seed`, so the result does not depend on thread
/// scheduling.
pub fn monte_carlo_uncertainty<F>(
    records: &[CountRecord],
    statistic: F,
    trials: usize,
    seed: u64,
) -> Result<McEstimate>
where
    F: Fn(&[CountRecord]) -> Result<f64> + Sync,
{
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngSeed { seed, stream: t }.rng();
            let drawn: Vec<CountRecord> = records.iter().map(|r| resample(r, &mut rng)).collect();
            statistic(&drawn)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
    Ok(McEstimate {
        mean,
        std: var.sqrt(),
        trials,
    })
}

#[derive(Serialize, Deserialize)]
struct CountRow {
    setting: String,
    outcome: String,
    count: u64,
}

pub fn counts_to_csv(records: &[CountRecord]) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(["setting", "outcome", "count"])
        .expect("in-memory write");
    for r in records {
        for (k, n) in &r.counts {
            w.serialize(CountRow {
                setting: r.setting.to_string(),
                outcome: k.clone(),
                count: *n,
            })
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

/// Reads `setting,outcome,count` rows; the expected total of each record is
/// set to its observed total.
pub fn counts_from_csv(text: &str) -> Result<Vec<CountRecord>> {
    let mut by_setting: BTreeMap<Setting, BTreeMap<String, u64>> = BTreeMap::new();
    let mut order: Vec<Setting> = Vec::new();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    for row in reader.deserialize::<CountRow>() {
        let row = row.map_err(|e| Error::Parse(format!("count table: {e}")))?;
        let setting: Setting = row.setting.parse()?;
        let outcome = row.outcome;
        if outcome.len() != setting.0.len() || !outcome.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::Parse(format!(
                "outcome {outcome:?} does not fit setting {setting}"
            )));
        }
        if !by_setting.contains_key(&setting) {
            order.push(setting.clone());
        }
        *by_setting
            .entry(setting)
            .or_default()
            .entry(outcome)
            .or_default() += row.count;
    }
    Ok(order
        .into_iter()
        .map(|s| {
            let counts = by_setting.remove(&s).unwrap_or_default();
            let total: u64 = counts.values().sum();
            CountRecord {
                setting: s,
                counts,
                expected_total: total as f64,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code412::{logical_state, syndrome_operators, LogicalBasis};
    use crate::kernel::PureState;

    fn setting(s: &str) -> Setting {
        s.parse().unwrap()
    }

    #[test]
    fn setting_roundtrip() {
        let s = setting("X1Y2Z15");
        assert_eq!(s.to_string(), "X1Y2Z15");
        assert!("X1X1".parse::<Setting>().is_err());
        assert!("Q1".parse::<Setting>().is_err());
        assert!("X".parse::<Setting>().is_err());
    }

    #[test]
    fn eigenstate_counts_are_deterministic_outcome() {
        let rho = PureState::zero(1);
        let r = sample_setting_counts(&rho, &setting("Z1"), 300.0, RngSeed::new(1)).unwrap();
        assert_eq!(r.counts["1"], 0);
        assert_eq!(r.counts["0"], r.total());
        assert_eq!(estimate_expectation(&r, &[1]).unwrap(), 1.0);
    }

    #[test]
    fn same_seed_same_histogram() {
        let rho = logical_state(LogicalBasis::Plus);
        let s = setting("X1Y2Z4X5");
        let a = sample_setting_counts(&rho, &s, 500.0, RngSeed::new(9)).unwrap();
        let b = sample_setting_counts(&rho, &s, 500.0, RngSeed::new(9)).unwrap();
        let c = sample_setting_counts(&rho, &s, 500.0, RngSeed::new(9).with_stream(1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn large_n_matches_exact_probabilities() {
        let rho = crate::graph::build_resource();
        let s = setting("X1Y2Z3X4Z5");
        let exact = outcome_distribution(&rho, &s).unwrap();
        let r = sample_setting_counts(&rho, &s, 1e6, RngSeed::new(3)).unwrap();
        let t = r.total() as f64;
        for (k, p) in exact {
            assert!((r.counts[&k] as f64 / t - p).abs() < 0.005);
        }
    }

    #[test]
    fn parity_examples() {
        let mut counts = BTreeMap::new();
        counts.insert("00".to_string(), 10);
        counts.insert("11".to_string(), 30);
        let r = CountRecord {
            setting: setting("Z1Z2"),
            counts,
            expected_total: 40.0,
        };
        assert_eq!(estimate_expectation(&r, &[1, 2]).unwrap(), 1.0);
        assert_eq!(estimate_expectation(&r, &[1]).unwrap(), -0.5);
        let mut half = r.clone();
        half.counts.insert("11".into(), 10);
        half.counts.insert("00".into(), 0);
        half.counts.insert("01".into(), 10);
        assert_eq!(estimate_expectation(&half, &[1, 2]).unwrap(), 0.0);
        let empty = CountRecord {
            counts: BTreeMap::new(),
            ..r
        };
        assert!(matches!(
            estimate_expectation(&empty, &[1]),
            Err(Error::EmptyHistogram)
        ));
    }

    #[test]
    fn stabilizer_from_counts() {
        let rho = logical_state(LogicalBasis::Plus);
        let s1 = &syndrome_operators()[0];
        let set = Setting::new(
            s1.letters()
                .map(|(q, l)| (q, Basis::from_letter(l.as_char()).unwrap()))
                .collect(),
        )
        .unwrap();
        let r = sample_setting_counts(&rho, &set, 1e4, RngSeed::new(5)).unwrap();
        let v = estimate_expectation(&r, &set.qubits()).unwrap();
        assert!((v - 1.0).abs() < 0.05);
    }

    #[test]
    fn monte_carlo_contracts() {
        let rho = logical_state(LogicalBasis::Zero);
        let r = sample_setting_counts(&rho, &setting("X1X2"), 500.0, RngSeed::new(2)).unwrap();
        let recs = vec![r];
        let constant = monte_carlo_uncertainty(&recs, |_| Ok(0.25), 100, 1).unwrap();
        assert_eq!(constant.std, 0.0);
        assert_eq!(constant.mean, 0.25);
        let stat = |rs: &[CountRecord]| estimate_expectation(&rs[0], &[1]);
        let a = monte_carlo_uncertainty(&recs, stat, 150, 4).unwrap();
        let b = monte_carlo_uncertainty(&recs, stat, 150, 4).unwrap();
        assert_eq!(a, b);
        assert!(a.std > 0.0);
        assert!(monte_carlo_uncertainty(&recs, stat, 10, 4).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let rho = logical_state(LogicalBasis::Plus);
        let recs: Vec<_> = ["X1X2X4X5", "Z1Z2Z4Z5"]
            .iter()
            .enumerate()
            .map(|(i, s)| {
                sample_setting_counts(&rho, &setting(s), 200.0, RngSeed::new(i as u64)).unwrap()
            })
            .collect();
        let text = counts_to_csv(&recs);
        let back = counts_from_csv(&text).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.setting, b.setting);
            assert_eq!(a.counts, b.counts);
        }
        assert!(counts_from_csv("setting,outcome,count\nX1,01,3\n").is_err());
        assert!(counts_from_csv("setting,outcome,count\nX1,0,x\n").is_err());
        assert!(counts_from_csv("setting,outcome\nX1,0\n").is_err());
    }
}
