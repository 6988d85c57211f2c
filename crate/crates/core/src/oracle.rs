//! Exact arithmetic for the combinatorial and geometric claims about
//! attentional search spaces, plus a desk-scale guided vs. unguided search.
//!
//! Everything except [`sky_geometry`] is integer arithmetic on [`BigCount`].

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("k = {k} exceeds N = {n}")]
    KExceedsN { n: u64, k: u64 },
    #[error("display size {0} outside 1..=24")]
    DisplaySize(u32),
    #[error("invalid sky model: {0}")]
    Sky(String),
    #[error("inputs must be positive")]
    NonPositive,
}

/// Exact non-negative integer of unbounded magnitude.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BigCount(pub BigUint);

impl BigCount {
    pub fn from_u64(v: u64) -> Self {
        BigCount(BigUint::from(v))
    }

    pub fn pow2(exp: u64) -> Self {
        BigCount(BigUint::one() << exp)
    }

    /// Three significant digits, round-half-up, e.g. `1.07e301`.
    pub fn render(&self) -> String {
        let digits = self.0.to_string();
        let bytes = digits.as_bytes();
        let mut exp = digits.len() - 1;
        let mut mant: u32 = bytes
            .iter()
            .take(3)
            .fold(0, |m, b| m * 10 + (b - b'0') as u32);
        for _ in bytes.len()..3 {
            mant *= 10;
        }
        if bytes.len() > 3 && bytes[3] >= b'5' {
            mant += 1;
            if mant == 1000 {
                mant = 100;
                exp += 1;
            }
        }
        format!("{}.{:02}e{}", mant / 100, mant % 100, exp)
    }

    /// Decimal logarithm, accurate to ~15 significant digits.
    pub fn log10(&self) -> f64 {
        if self.0.is_zero() {
            return f64::NEG_INFINITY;
        }
        let s = self.0.to_string();
        let head = &s[..s.len().min(17)];
        let lead: f64 = head.parse().expect("decimal digits");
        lead.log10() + (s.len() - head.len()) as f64
    }

    pub fn to_u64(&self) -> Option<u64> {
        self.0.to_u64()
    }
}

impl fmt::Display for BigCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub fn powerset_count(n: u64) -> BigCount {
    BigCount::pow2(n)
}

/// `C(n, k)` by the multiplicative formula; each partial product
/// `C(n - k + i, i)` is an integer, so every division is exact.
pub fn binomial(n: u64, k: u64) -> Result<BigCount, OracleError> {
    if k > n {
        return Err(OracleError::KExceedsN { n, k });
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= BigUint::from(n - k + i);
        acc /= BigUint::from(i);
    }
    Ok(BigCount(acc))
}

/// `C(n, k)` by Pascal's rule, rows truncated at column `k`.
pub fn binomial_pascal(n: u64, k: u64) -> Result<BigCount, OracleError> {
    if k > n {
        return Err(OracleError::KExceedsN { n, k });
    }
    let k = k as usize;
    let mut row = vec![BigUint::zero(); k + 1];
    row[0] = BigUint::one();
    for _ in 0..n {
        for j in (1..=k).rev() {
            let prev = row[j - 1].clone();
            row[j] += prev;
        }
    }
    Ok(BigCount(row.swap_remove(k)))
}

/// `2^(A d p)`: subsets of `A` mechanisms, each with `d` durations and `p`
/// parameterizations.
pub fn mechanism_space(a: u64, d: u64, p: u64) -> BigCount {
    BigCount::pow2(a * d * p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynapseBudget {
    pub total: BigCount,
    /// Largest `m` with `2^m <= total`.
    pub max_exponent: u64,
}

pub fn synapse_budget(neurons: u64, synapses_per: u64) -> Result<SynapseBudget, OracleError> {
    if neurons == 0 || synapses_per == 0 {
        return Err(OracleError::NonPositive);
    }
    let total = BigUint::from(neurons) * BigUint::from(synapses_per);
    let max_exponent = total.bits() - 1;
    Ok(SynapseBudget {
        total: BigCount(total),
        max_exponent,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkyModel {
    pub stars: u64,
    pub radius: f64,
    pub patch_degrees: f64,
}

impl Default for SkyModel {
    fn default() -> Self {
        SkyModel {
            stars: 1000,
            radius: 100.0,
            patch_degrees: 20.0,
        }
    }
}

impl SkyModel {
    fn validate(&self) -> Result<(), OracleError> {
        if self.stars == 0 {
            return Err(OracleError::Sky("star count must be at least 1".into()));
        }
        if self.radius.is_nan() || self.radius <= 0.0 {
            return Err(OracleError::Sky("radius must be positive".into()));
        }
        if !(self.patch_degrees > 0.0 && self.patch_degrees < 180.0) {
            return Err(OracleError::Sky("patch angle must be in (0, 180)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkyGeometry {
    pub hemisphere_area: f64,
    /// `r^2 * theta * sin(theta)`.
    pub patch_area: f64,
    /// Exact area of a `theta x theta` patch straddling the equator,
    /// `r^2 * theta * 2 sin(theta / 2)`.
    pub patch_area_standard: f64,
    pub patch_count: f64,
    pub stars_per_patch: u64,
}

pub fn sky_geometry(model: &SkyModel) -> Result<SkyGeometry, OracleError> {
    model.validate()?;
    let r2 = model.radius * model.radius;
    let th = model.patch_degrees.to_radians();
    let hemisphere_area = 2.0 * std::f64::consts::PI * r2;
    let patch_area = r2 * th * th.sin();
    let patch_count = hemisphere_area / patch_area;
    Ok(SkyGeometry {
        hemisphere_area,
        patch_area,
        patch_area_standard: r2 * th * 2.0 * (th / 2.0).sin(),
        patch_count,
        stars_per_patch: (model.stars as f64 / patch_count).round() as u64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidedSearch {
    /// One disc per whole unit of hemisphere area.
    pub disc_count: u64,
    pub stars_per_patch: u64,
    pub guided: BigCount,
    pub unguided: BigCount,
    /// `log10(unguided / guided)`.
    pub gap_orders: f64,
}

/// Six-star groupings to check when the grouping's angular size is known.
pub fn guided_search_count(model: &SkyModel) -> Result<GuidedSearch, OracleError> {
    let geo = sky_geometry(model)?;
    guided_search_with(model, geo.stars_per_patch)
}

pub fn guided_search_with(model: &SkyModel, stars_per_patch: u64) -> Result<GuidedSearch, OracleError> {
    let geo = sky_geometry(model)?;
    let disc_count = geo.hemisphere_area.floor() as u64;
    let per = binomial(stars_per_patch, 6.min(stars_per_patch))?;
    let guided = BigCount(per.0 * BigUint::from(disc_count));
    let unguided = binomial(model.stars, 6)?;
    let gap_orders = unguided.log10() - guided.log10();
    Ok(GuidedSearch {
        disc_count,
        stars_per_patch,
        guided,
        unguided,
        gap_orders,
    })
}

/// Whole orders of magnitude between two printed figures.
pub fn orders_between(larger: f64, smaller: f64) -> i64 {
    (larger.log10() - smaller.log10()).floor() as i64
}

/// Counts candidate subsets examined while looking for the one subset of an
/// `n`-feature display that matches the target.
///
/// Unguided search enumerates subsets in increasing bitmask order. Guided
/// search grows a candidate along `order` (target features first) and tests
/// each prefix.
pub fn visual_match_search(n: u32, target: u32, order: Option<&[u32]>) -> Result<u64, OracleError> {
    if !(1..=24).contains(&n) {
        return Err(OracleError::DisplaySize(n));
    }
    let mut examined = 0u64;
    match order {
        None => {
            for mask in 0u64..(1u64 << n) {
                examined += 1;
                if mask as u32 == target {
                    return Ok(examined);
                }
            }
        }
        Some(order) => {
            let mut candidate = 0u32;
            for &f in order {
                candidate |= 1 << f;
                examined += 1;
                if candidate == target {
                    return Ok(examined);
                }
            }
        }
    }
    Ok(examined)
}

/// Worst case: the planted target uses all `n` features.
pub fn visual_match_demo(n: u32, guided: bool) -> Result<u64, OracleError> {
    if !(1..=24).contains(&n) {
        return Err(OracleError::DisplaySize(n));
    }
    let target = ((1u64 << n) - 1) as u32;
    let order: Vec<u32> = (0..n).collect();
    visual_match_search(n, target, guided.then_some(order.as_slice()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimStatus {
    Match,
    Flag,
    Info,
}

impl fmt::Display for ClaimStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ClaimStatus::Match => "match",
            ClaimStatus::Flag => "flag",
            ClaimStatus::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub id: String,
    pub description: String,
    pub published: String,
    pub oracle: String,
    pub status: ClaimStatus,
}

fn claim(id: &str, description: &str, published: &str, oracle: String, ok: Option<bool>) -> Claim {
    Claim {
        id: id.to_string(),
        description: description.to_string(),
        published: published.to_string(),
        oracle,
        status: match ok {
            Some(true) => ClaimStatus::Match,
            Some(false) => ClaimStatus::Flag,
            None => ClaimStatus::Info,
        },
    }
}

/// Every published figure next to its re-derived value.
pub fn claims() -> Vec<Claim> {
    let mut out = Vec::new();

    let p1000 = powerset_count(1000);
    out.push(claim(
        "2^1000",
        "groupings of 1000 stars",
        "1.07e301",
        p1000.render(),
        Some(p1000.render() == "1.07e301"),
    ));

    let c1000 = binomial(1000, 6).expect("k <= n");
    out.push(claim(
        "C(1000,6)",
        "six-star groupings among 1000",
        "5.0e134",
        format!("{} ({})", c1000.render(), c1000),
        Some((c1000.log10() - 134.0).abs() < 1.0),
    ));

    let p19 = powerset_count(19);
    out.push(claim(
        "2^19",
        "subsets of 19 attentional mechanisms",
        "524288",
        p19.to_string(),
        Some(p19.to_u64() == Some(524_288)),
    ));

    let m = mechanism_space(19, 5, 2);
    out.push(claim(
        "2^190",
        "mechanism subsets with 5 durations and 2 parameterizations",
        "1.6e57",
        m.render(),
        // published to two significant digits
        Some(m.render().starts_with("1.5") || m.render().starts_with("1.6")),
    ));

    let budget = synapse_budget(86_000_000_000, 10_000).expect("positive");
    out.push(claim(
        "synapses",
        "86e9 neurons x 1e4 synapses",
        "8.6e14",
        budget.total.render(),
        Some(budget.total.to_u64() == Some(860_000_000_000_000)),
    ));
    out.push(claim(
        "max-Adp",
        "largest m with 2^m <= synapse count",
        "49 (2^49.62)",
        budget.max_exponent.to_string(),
        Some(budget.max_exponent == 49),
    ));

    let model = SkyModel::default();
    let geo = sky_geometry(&model).expect("default sky model is valid");
    out.push(claim(
        "hemisphere",
        "surface area of a radius-100 half sphere",
        "62831",
        format!("{:.2}", geo.hemisphere_area),
        Some(geo.hemisphere_area.floor() == 62831.0),
    ));
    out.push(claim(
        "patch-area",
        "area of a 20x20 degree patch, r^2 theta sin(theta)",
        "1193.9",
        format!("{:.2}", geo.patch_area),
        Some((geo.patch_area - 1193.9).abs() <= 0.1),
    ));
    out.push(claim(
        "patch-area-standard",
        "exact equatorial 20x20 degree patch, r^2 theta 2 sin(theta/2)",
        "-",
        format!("{:.2}", geo.patch_area_standard),
        None,
    ));
    out.push(claim(
        "patch-count",
        "patches per hemisphere",
        "52.6",
        format!("{:.2}", geo.patch_count),
        Some((geo.patch_count - 52.6).abs() <= 0.1),
    ));
    out.push(claim(
        "stars-per-patch",
        "stars in one patch",
        "19",
        geo.stars_per_patch.to_string(),
        Some(geo.stars_per_patch == 19),
    ));

    let c19 = binomial(19, 6).expect("k <= n");
    let c19p = binomial_pascal(19, 6).expect("k <= n");
    out.push(claim(
        "C(19,6)",
        "six-star groupings in one patch (product formula / Pascal)",
        "19!/(6!13!)",
        format!("{c19} / {c19p}"),
        Some(c19 == c19p && c19.to_u64() == Some(27132)),
    ));

    let guided = guided_search_count(&model).expect("default sky model is valid");
    out.push(claim(
        "guided-count",
        "62831 discs x C(19,6)",
        "1.95e7",
        format!("{} ({})", guided.guided.render(), guided.guided),
        Some((guided.guided.log10() - 1.95e7f64.log10()).abs() < 0.05),
    ));
    let printed_gap = orders_between(5.0e134, 1.95e7);
    out.push(claim(
        "127-orders",
        "gap between the two printed figures",
        "127",
        printed_gap.to_string(),
        Some(printed_gap == 127),
    ));
    out.push(claim(
        "oracle-gap",
        "gap between the exact unguided and guided counts",
        "-",
        format!("{:.2}", guided.gap_orders),
        None,
    ));

    let collapse = (3..=20).all(|n| {
        visual_match_demo(n, false) == Ok(1 << n)
            && visual_match_demo(n, true).is_ok_and(|c| c <= 2 * n as u64)
    });
    out.push(claim(
        "visual-match",
        "worst-case candidates, unguided 2^n vs guided <= 2n, n = 3..20",
        "exponential -> linear",
        if collapse { "2^n vs n".into() } else { "mismatch".into() },
        Some(collapse),
    ));
    out
}

/// `claims()` filtered by id substring (case-sensitive).
pub fn claims_filtered(filter: Option<&str>) -> Vec<Claim> {
    claims()
        .into_iter()
        .filter(|c| filter.is_none_or(|f| c.id.contains(f)))
        .collect()
}

pub fn claims_csv(claims: &[Claim]) -> String {
    let mut s = String::from("claim,published,oracle,status\n");
    for c in claims {
        s.push_str(&format!(
            "{},{},{},{}\n",
            csv_field(&c.id),
            csv_field(&c.published),
            csv_field(&c.oracle),
            c.status
        ));
    }
    s
}

pub fn claims_text(claims: &[Claim]) -> String {
    let w_id = claims.iter().map(|c| c.id.len()).max().unwrap_or(9).max(9);
    let w_p = claims.iter().map(|c| c.published.len()).max().unwrap_or(9).max(9);
    let w_o = claims.iter().map(|c| c.oracle.len()).max().unwrap_or(6).max(6);
    let mut s = format!("{:<w_id$}  {:<w_p$}  {:<w_o$}  status\n", "claim", "published", "oracle");
    for c in claims {
        s.push_str(&format!(
            "{:<w_id$}  {:<w_p$}  {:<w_o$}  {}\n",
            c.id, c.published, c.oracle, c.status
        ));
    }
    s
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn powerset_and_render() {
        assert_eq!(powerset_count(0).to_u64(), Some(1));
        assert_eq!(powerset_count(19).to_u64(), Some(524_288));
        assert_eq!(powerset_count(1000).render(), "1.07e301");
        assert_eq!(BigCount::from_u64(9_995).render(), "1.00e4");
        assert_eq!(BigCount::from_u64(7).render(), "7.00e0");
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(4, 2).unwrap().to_u64(), Some(6));
        assert_eq!(binomial(19, 6).unwrap().to_u64(), Some(27132));
        assert_eq!(binomial_pascal(19, 6).unwrap().to_u64(), Some(27132));
        assert_eq!(binomial(3, 4), Err(OracleError::KExceedsN { n: 3, k: 4 }));
        // 1000*999*998*997*996*995 / 720
        assert_eq!(binomial(1000, 6).unwrap().to_string(), "1368173298991500");
    }

    #[test]
    fn mechanism_space_examples() {
        assert_eq!(mechanism_space(19, 1, 1).to_u64(), Some(524_288));
        assert_eq!(mechanism_space(19, 5, 2).render(), "1.57e57");
        assert_eq!(mechanism_space(1, 1, 1).to_u64(), Some(2));
    }

    #[test]
    fn synapse_examples() {
        let b = synapse_budget(86_000_000_000, 10_000).unwrap();
        assert_eq!(b.total.render(), "8.60e14");
        assert_eq!(b.max_exponent, 49);
        assert_eq!(synapse_budget(1, 1).unwrap().max_exponent, 0);
        let b = synapse_budget(2, 2).unwrap();
        assert_eq!((b.total.to_u64(), b.max_exponent), (Some(4), 2));
    }

    #[test]
    fn sky_examples() {
        let g = sky_geometry(&SkyModel::default()).unwrap();
        assert!((g.hemisphere_area - 62831.85).abs() < 0.01);
        assert!((g.patch_area - 1193.9).abs() <= 0.1);
        assert!((g.patch_count - 52.6).abs() <= 0.1);
        assert_eq!(g.stars_per_patch, 19);
        assert!(g.patch_area_standard > 1206.0 && g.patch_area_standard < 1218.0);
        assert!(sky_geometry(&SkyModel { patch_degrees: 180.0, ..SkyModel::default() }).is_err());
    }

    #[test]
    fn guided_examples() {
        let g = guided_search_count(&SkyModel::default()).unwrap();
        assert_eq!(g.disc_count, 62831);
        assert_eq!(g.guided.to_u64(), Some(62831 * 27132));
        let six = guided_search_with(&SkyModel::default(), 6).unwrap();
        assert_eq!(six.guided.to_u64(), Some(62831));
        assert_eq!(orders_between(5.0e134, 1.95e7), 127);
    }

    #[test]
    fn visual_match_examples() {
        assert_eq!(visual_match_demo(3, false), Ok(8));
        assert_eq!(visual_match_demo(20, false), Ok(1_048_576));
        assert!(visual_match_demo(20, true).unwrap() <= 20);
        assert_eq!(visual_match_demo(0, true), Err(OracleError::DisplaySize(0)));
        assert_eq!(visual_match_demo(25, false), Err(OracleError::DisplaySize(25)));
    }

    #[test]
    fn claims_table_flags_discrepancies() {
        let all = claims();
        assert!(all.len() >= 10);
        let get = |id: &str| all.iter().find(|c| c.id == id).unwrap().status;
        assert_eq!(get("2^1000"), ClaimStatus::Match);
        assert_eq!(get("C(1000,6)"), ClaimStatus::Flag);
        assert_eq!(get("guided-count"), ClaimStatus::Flag);
        assert_eq!(get("127-orders"), ClaimStatus::Match);
        assert_eq!(claims_filtered(Some("2^1000")).len(), 1);
        let csv = claims_csv(&claims_filtered(Some("C(1000,6)")));
        assert!(csv.starts_with("claim,published,oracle,status\n"));
        assert!(csv.trim_end().ends_with(",flag"));
    }
}
