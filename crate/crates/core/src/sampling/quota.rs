use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::rng::{stream, StudyRng, LANE_QUOTA};
use super::SamplingError;
use crate::domain::{Category, Generator, ImageRecord, Origin, Procedure, Source};

/// Metadata axis along which samples are stratified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dim {
    Source,
    Generator,
    Category,
    Origin,
}

impl Dim {
    pub fn label(self) -> &'static str {
        match self {
            Dim::Source => "source",
            Dim::Generator => "generator",
            Dim::Category => "category",
            Dim::Origin => "origin",
        }
    }

    /// The two values of a binary dimension, in cell-bit order.
    fn binary_values(self) -> Option<[DimValue; 2]> {
        match self {
            Dim::Source => Some([DimValue::Source(Source::Real), DimValue::Source(Source::Synthetic)]),
            Dim::Category => Some([DimValue::Category(Category::Normal), DimValue::Category(Category::Abnormal)]),
            Dim::Origin => Some([DimValue::Origin(Origin::Kid), DimValue::Origin(Origin::Kvasir)]),
            Dim::Generator => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DimValue {
    Source(Source),
    Generator(Generator),
    Category(Category),
    Origin(Origin),
}

impl DimValue {
    pub fn dim(self) -> Dim {
        match self {
            DimValue::Source(_) => Dim::Source,
            DimValue::Generator(_) => Dim::Generator,
            DimValue::Category(_) => Dim::Category,
            DimValue::Origin(_) => Dim::Origin,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            DimValue::Source(v) => v.label(),
            DimValue::Generator(v) => v.label(),
            DimValue::Category(v) => v.label(),
            DimValue::Origin(v) => v.label(),
        }
    }

    pub fn matches(self, record: &ImageRecord) -> bool {
        match self {
            DimValue::Source(v) => record.source == v,
            DimValue::Generator(v) => record.generator == Some(v),
            DimValue::Category(v) => record.category == v,
            DimValue::Origin(v) => record.origin == v,
        }
    }

    pub fn of(record: &ImageRecord, dim: Dim) -> Option<DimValue> {
        match dim {
            Dim::Source => Some(DimValue::Source(record.source)),
            Dim::Generator => record.generator.map(DimValue::Generator),
            Dim::Category => Some(DimValue::Category(record.category)),
            Dim::Origin => Some(DimValue::Origin(record.origin)),
        }
    }

    fn parse(dim: &str, value: &str) -> Option<DimValue> {
        let quoted = format!("\"{value}\"");
        match dim {
            "source" => serde_json::from_str(&quoted).ok().map(DimValue::Source),
            "generator" => Generator::from_label(value).map(DimValue::Generator),
            "category" => serde_json::from_str(&quoted).ok().map(DimValue::Category),
            "origin" => serde_json::from_str(&quoted).ok().map(DimValue::Origin),
            _ => None,
        }
    }
}

/// One cell of the cross product of stratification dimensions.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct StratumKey {
    values: Vec<DimValue>,
}

impl StratumKey {
    /// Builds a key; at most one value per dimension.
    pub fn new(values: impl IntoIterator<Item = DimValue>) -> Result<Self, SamplingError> {
        let mut values: Vec<DimValue> = values.into_iter().collect();
        values.sort();
        for w in values.windows(2) {
            if w[0].dim() == w[1].dim() {
                return Err(SamplingError::Planning(format!("stratum names dimension `{}` twice", w[0].dim().label())));
            }
        }
        Ok(Self { values })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn values(&self) -> &[DimValue] {
        &self.values
    }

    pub fn get(&self, dim: Dim) -> Option<DimValue> {
        self.values.iter().copied().find(|v| v.dim() == dim)
    }

    pub fn matches(&self, record: &ImageRecord) -> bool {
        self.values.iter().all(|v| v.matches(record))
    }

    pub fn merged(&self, other: &StratumKey) -> Result<StratumKey, SamplingError> {
        StratumKey::new(self.values.iter().chain(other.values.iter()).copied())
    }

    /// Key of `record` restricted to `dims`.
    pub fn of(record: &ImageRecord, dims: &[Dim]) -> StratumKey {
        let mut values: Vec<DimValue> = dims.iter().filter_map(|d| DimValue::of(record, *d)).collect();
        values.sort();
        values.dedup();
        StratumKey { values }
    }
}

impl fmt::Display for StratumKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.values.is_empty() {
            return f.write_str("*");
        }
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str("/")?;
            }
            write!(f, "{}={}", v.dim().label(), v.label())?;
        }
        Ok(())
    }
}

impl From<StratumKey> for String {
    fn from(k: StratumKey) -> Self {
        k.to_string()
    }
}

impl FromStr for StratumKey {
    type Err = SamplingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "*" {
            return Ok(StratumKey::empty());
        }
        let values = s
            .split('/')
            .map(|part| {
                part.split_once('=')
                    .and_then(|(d, v)| DimValue::parse(d, v))
                    .ok_or_else(|| SamplingError::Planning(format!("malformed stratum `{s}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        StratumKey::new(values)
    }
}

impl TryFrom<String> for StratumKey {
    type Error = SamplingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Splits `total` evenly over every cell of the binary `dims` so that each
/// marginal total equals `total / 2`.
///
/// Cells get `total / cells`; the remainder is handed out one unit at a
/// time to randomly chosen complementary cell pairs (a cell and the cell
/// with every dimension flipped), which raises both sides of every margin
/// by the same amount.
pub fn plan_quotas(
    total: usize,
    dims: &[Dim],
    rng: &mut StudyRng,
) -> Result<BTreeMap<StratumKey, usize>, SamplingError> {
    if dims.is_empty() {
        return Err(SamplingError::Planning("at least one balancing dimension is required".into()));
    }
    let mut sorted = dims.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != dims.len() {
        return Err(SamplingError::Planning("balancing dimensions repeat".into()));
    }
    let values = dims
        .iter()
        .map(|d| {
            d.binary_values().ok_or_else(|| {
                SamplingError::Planning(format!(
                    "`{}` is not a binary dimension and cannot be balanced; use it as a fixed filter",
                    d.label()
                ))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if !total.is_multiple_of(2) {
        return Err(SamplingError::Planning(format!(
            "total {total} cannot be split evenly across two-valued dimensions"
        )));
    }

    let cells = 1usize << dims.len();
    let base = total / cells;
    let remainder = total % cells;
    if !remainder.is_multiple_of(2) {
        return Err(SamplingError::Planning(format!(
            "remainder {remainder} of {total} over {cells} cells is odd; margins cannot be balanced"
        )));
    }
    let mut quotas = vec![base; cells];
    let mask = cells - 1;
    for pair in index::sample(rng, cells / 2, remainder / 2) {
        quotas[pair] += 1;
        quotas[pair ^ mask] += 1;
    }

    let mut out = BTreeMap::new();
    for (cell, quota) in quotas.into_iter().enumerate() {
        let key = StratumKey::new(values.iter().enumerate().map(|(bit, vals)| vals[(cell >> bit) & 1]))?;
        out.insert(key, quota);
    }
    Ok(out)
}

/// Marginal totals of a quota map along one dimension.
pub fn margins(quotas: &BTreeMap<StratumKey, usize>, dim: Dim) -> BTreeMap<DimValue, usize> {
    let mut m = BTreeMap::new();
    for (k, q) in quotas {
        if let Some(v) = k.get(dim) {
            *m.entry(v).or_insert(0) += q;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellQuota {
    pub cell: StratumKey,
    pub quota: usize,
}

/// Frozen quotas for one sampled set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub procedure: Procedure,
    /// Dimensions held constant for every cell (e.g. source=real).
    pub fixed: StratumKey,
    pub dims: Vec<Dim>,
    pub total: usize,
    /// Full cell keys, `fixed` included.
    pub quotas: Vec<CellQuota>,
    pub seed: u64,
}

impl SamplingPlan {
    /// Plans quotas from the plan's own quota stream.
    ///
    /// When `synthetic_generator` is set, cells with `source=synthetic` are
    /// restricted to that generator.
    pub fn build(
        procedure: Procedure,
        total: usize,
        fixed: StratumKey,
        dims: &[Dim],
        synthetic_generator: Option<Generator>,
        seed: u64,
    ) -> Result<Self, SamplingError> {
        let balanced = plan_quotas(total, dims, &mut stream(seed, LANE_QUOTA))?;
        Self::with_quotas(procedure, fixed, dims, &balanced, synthetic_generator, seed)
    }

    /// Uses quotas planned elsewhere (A4 shares one quota vector between its real and synthetic halves).
    pub fn with_quotas(
        procedure: Procedure,
        fixed: StratumKey,
        dims: &[Dim],
        balanced: &BTreeMap<StratumKey, usize>,
        synthetic_generator: Option<Generator>,
        seed: u64,
    ) -> Result<Self, SamplingError> {
        let mut quotas = Vec::with_capacity(balanced.len());
        for (cell, quota) in balanced {
            let mut key = fixed.merged(cell)?;
            if let Some(g) = synthetic_generator {
                if key.get(Dim::Source) == Some(DimValue::Source(Source::Synthetic))
                    && key.get(Dim::Generator).is_none()
                {
                    key = key.merged(&StratumKey::new([DimValue::Generator(g)])?)?;
                }
            }
            quotas.push(CellQuota { cell: key, quota: *quota });
        }
        Ok(Self { procedure, fixed, dims: dims.to_vec(), total: balanced.values().sum(), quotas, seed })
    }

    pub fn quota_map(&self) -> BTreeMap<StratumKey, usize> {
        self.quotas.iter().map(|c| (c.cell.clone(), c.quota)).collect()
    }

    pub fn margins(&self, dim: Dim) -> BTreeMap<DimValue, usize> {
        margins(&self.quota_map(), dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::rng::stream;
    use proptest::prelude::*;

    /// Every assignment of binary values to `dims`, enumerated independently of `plan_quotas`.
    fn all_cells(dims: &[Dim]) -> Vec<StratumKey> {
        let mut cells = vec![Vec::new()];
        for d in dims {
            let [a, b] = d.binary_values().unwrap();
            cells = cells
                .into_iter()
                .flat_map(|c: Vec<DimValue>| {
                    let mut x = c.clone();
                    x.push(a);
                    let mut y = c;
                    y.push(b);
                    [x, y]
                })
                .collect();
        }
        cells.into_iter().map(|c| StratumKey::new(c).unwrap()).collect()
    }

    fn brute_force_margins_equal(q: &BTreeMap<StratumKey, usize>, dims: &[Dim], total: usize) -> bool {
        dims.iter().all(|d| {
            let [a, b] = d.binary_values().unwrap();
            let sa: usize = q.iter().filter(|(k, _)| k.values().contains(&a)).map(|(_, v)| v).sum();
            let sb: usize = q.iter().filter(|(k, _)| k.values().contains(&b)).map(|(_, v)| v).sum();
            sa == sb && sa + sb == total
        })
    }

    #[test]
    fn fifty_over_three_dims() {
        let dims = [Dim::Source, Dim::Category, Dim::Origin];
        let q = plan_quotas(50, &dims, &mut stream(1, 0)).unwrap();
        assert_eq!(q.len(), 8);
        assert_eq!(q.keys().cloned().collect::<Vec<_>>(), {
            let mut c = all_cells(&dims);
            c.sort();
            c
        });
        let mut counts: Vec<usize> = q.values().copied().collect();
        counts.sort();
        assert_eq!(counts, vec![6, 6, 6, 6, 6, 6, 7, 7]);
        let sevens: Vec<&StratumKey> = q.iter().filter(|(_, v)| **v == 7).map(|(k, _)| k).collect();
        // the two raised cells differ in every dimension
        assert!(sevens[0].values().iter().zip(sevens[1].values()).all(|(a, b)| a != b));
        assert!(brute_force_margins_equal(&q, &dims, 50));
        for d in dims {
            assert!(margins(&q, d).values().all(|m| *m == 25));
        }
    }

    #[test]
    fn forty_eight_divides_exactly() {
        let q = plan_quotas(48, &[Dim::Category, Dim::Origin], &mut stream(1, 0)).unwrap();
        assert!(q.values().all(|v| *v == 12));
    }

    #[test]
    fn fifty_over_two_dims() {
        let dims = [Dim::Category, Dim::Origin];
        let q = plan_quotas(50, &dims, &mut stream(9, 0)).unwrap();
        let mut counts: Vec<usize> = q.values().copied().collect();
        counts.sort();
        assert_eq!(counts, vec![12, 12, 13, 13]);
        assert!(brute_force_margins_equal(&q, &dims, 50));
    }

    #[test]
    fn infeasible_plans_rejected() {
        assert!(plan_quotas(49, &[Dim::Category], &mut stream(0, 0)).is_err());
        assert!(plan_quotas(50, &[], &mut stream(0, 0)).is_err());
        assert!(plan_quotas(50, &[Dim::Generator], &mut stream(0, 0)).is_err());
        assert!(plan_quotas(50, &[Dim::Origin, Dim::Origin], &mut stream(0, 0)).is_err());
    }

    #[test]
    fn stratum_key_text_round_trip() {
        let k = StratumKey::new([
            DimValue::Origin(Origin::Kid),
            DimValue::Source(Source::Synthetic),
            DimValue::Generator(Generator::TideII),
        ])
        .unwrap();
        assert_eq!(k.to_string(), "source=synthetic/generator=TIDE-II/origin=KID");
        assert_eq!(k.to_string().parse::<StratumKey>().unwrap(), k);
        assert!("source=alien".parse::<StratumKey>().is_err());
    }

    #[test]
    fn synthetic_cells_pick_up_generator() {
        let plan = SamplingPlan::build(
            Procedure::A1,
            50,
            StratumKey::empty(),
            &[Dim::Source, Dim::Category, Dim::Origin],
            Some(Generator::TideII),
            3,
        )
        .unwrap();
        for c in &plan.quotas {
            let synthetic = c.cell.get(Dim::Source) == Some(DimValue::Source(Source::Synthetic));
            assert_eq!(c.cell.get(Dim::Generator).is_some(), synthetic);
        }
        assert_eq!(plan.total, 50);
    }

    proptest! {
        #[test]
        fn margins_always_balanced(half in 1usize..200, ndims in 1usize..=3, seed in any::<u64>()) {
            let total = half * 2;
            let dims = &[Dim::Source, Dim::Category, Dim::Origin][..ndims];
            let q = plan_quotas(total, dims, &mut stream(seed, 0)).unwrap();
            prop_assert_eq!(q.values().sum::<usize>(), total);
            prop_assert!(brute_force_margins_equal(&q, dims, total));
            let min = q.values().min().unwrap();
            let max = q.values().max().unwrap();
            prop_assert!(max - min <= 1);
        }
    }
}
