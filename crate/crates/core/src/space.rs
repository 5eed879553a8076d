//! Hyperparameter domains and finite configuration spaces.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from, stream};

/// A single allowed value of a hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Num(f64),
    Cat(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Num(v) => Some(*v),
            ParamValue::Cat(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Num(v) => write!(f, "{v}"),
            ParamValue::Cat(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Numeric,
    Categorical,
}

/// Named, ordered, finite list of allowed values for one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    name: String,
    kind: DomainKind,
    values: Vec<ParamValue>,
}

impl ParamDomain {
    pub fn numeric(name: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        Self::new(
            name,
            DomainKind::Numeric,
            values.into_iter().map(ParamValue::Num).collect(),
        )
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self> {
        Self::new(
            name,
            DomainKind::Categorical,
            labels
                .into_iter()
                .map(|s| ParamValue::Cat(s.into()))
                .collect(),
        )
    }

    pub fn new(name: impl Into<String>, kind: DomainKind, values: Vec<ParamValue>) -> Result<Self> {
        let name = name.into();
        if values.is_empty() {
            return Err(Error::EmptyDomain(name));
        }
        let invalid = |reason: String| Error::InvalidDomain {
            domain: name.clone(),
            reason,
        };
        for (i, v) in values.iter().enumerate() {
            match (kind, v) {
                (DomainKind::Numeric, ParamValue::Num(x)) if !x.is_finite() => {
                    return Err(invalid(format!("value {x} is not finite")));
                }
                (DomainKind::Numeric, ParamValue::Cat(s)) => {
                    return Err(invalid(format!("label `{s}` in a numeric domain")));
                }
                (DomainKind::Categorical, ParamValue::Num(x)) => {
                    return Err(invalid(format!("number {x} in a categorical domain")));
                }
                _ => {}
            }
            if values[..i].contains(v) {
                return Err(invalid(format!("duplicate value {v}")));
            }
        }
        Ok(Self { name, kind, values })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn values(&self) -> &[ParamValue] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn encode_index(&self, index: usize) -> f64 {
        match &self.values[index] {
            ParamValue::Num(v) => *v,
            ParamValue::Cat(_) => index as f64,
        }
    }
}

/// Numeric image of a configuration, in domain declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// One point of a [`ConfigSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    id: usize,
    assignment: Vec<(String, ParamValue)>,
    indices: Vec<usize>,
}

impl Configuration {
    pub fn id(&self) -> usize {
        self.id
    }

    /// `(name, value)` pairs in domain declaration order.
    pub fn assignment(&self) -> &[(String, ParamValue)] {
        &self.assignment
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.assignment
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v)
    }

    pub fn to_map(&self) -> BTreeMap<String, ParamValue> {
        self.assignment.iter().cloned().collect()
    }
}

/// The finite candidate set searched without replacement.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    domains: Vec<ParamDomain>,
    configs: Vec<Configuration>,
    features: Vec<FeatureVector>,
    seed: u64,
}

/// Draws `m` distinct configurations uniformly from the Cartesian product of
/// `domains`.
pub fn build_space(domains: Vec<ParamDomain>, m: usize, seed: u64) -> Result<ConfigSpace> {
    if m == 0 {
        return Err(Error::InvalidCount {
            what: "m",
            value: m,
        });
    }
    if domains.is_empty() {
        return Err(Error::InvalidCount {
            what: "domains",
            value: 0,
        });
    }
    if let Some(d) = domains.iter().find(|d| d.is_empty()) {
        return Err(Error::EmptyDomain(d.name.clone()));
    }
    let mut names = HashSet::new();
    for d in &domains {
        if !names.insert(d.name.as_str()) {
            return Err(Error::InvalidDomain {
                domain: d.name.clone(),
                reason: "declared twice".into(),
            });
        }
    }
    let product = domains
        .iter()
        .fold(1u128, |acc, d| acc.saturating_mul(d.len() as u128));
    if product < m as u128 {
        return Err(Error::InsufficientProduct {
            available: product,
            requested: m,
        });
    }

    let mut rng = rng_from(derive_seed(seed, stream::SPACE));
    let mut seen: HashSet<Vec<usize>> = HashSet::with_capacity(m);
    let mut picks: Vec<Vec<usize>> = Vec::with_capacity(m);
    let cap = 100 * m;
    let mut attempts = 0;
    while picks.len() < m {
        if attempts == cap {
            return Err(Error::InsufficientProduct {
                available: product,
                requested: m,
            });
        }
        attempts += 1;
        let idx: Vec<usize> = domains
            .iter()
            .map(|d| rng.random_range(0..d.len()))
            .collect();
        if seen.insert(idx.clone()) {
            picks.push(idx);
        }
    }

    let configs: Vec<Configuration> = picks
        .into_iter()
        .enumerate()
        .map(|(id, indices)| Configuration {
            id,
            assignment: domains
                .iter()
                .zip(&indices)
                .map(|(d, &i)| (d.name.clone(), d.values[i].clone()))
                .collect(),
            indices,
        })
        .collect();
    let features = configs
        .iter()
        .map(|c| {
            FeatureVector(
                domains
                    .iter()
                    .zip(&c.indices)
                    .map(|(d, &i)| d.encode_index(i))
                    .collect(),
            )
        })
        .collect();
    Ok(ConfigSpace {
        domains,
        configs,
        features,
        seed,
    })
}

impl ConfigSpace {
    pub fn domains(&self) -> &[ParamDomain] {
        &self.domains
    }

    pub fn configs(&self) -> &[Configuration] {
        &self.configs
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.domains.len()
    }

    pub fn config(&self, id: usize) -> Result<&Configuration> {
        self.configs.get(id).ok_or(Error::UnknownConfig {
            id,
            size: self.configs.len(),
        })
    }

    /// Encoded feature vector of configuration `id`.
    pub fn features(&self, id: usize) -> Result<&FeatureVector> {
        self.features.get(id).ok_or(Error::UnknownConfig {
            id,
            size: self.configs.len(),
        })
    }
}

/// Numeric encoding of `config`: numeric values pass through, categorical
/// values map to their zero-based declared position.
pub fn encode(space: &ConfigSpace, config: &Configuration) -> Result<FeatureVector> {
    space.features(config.id).cloned()
}

/// A seeded uniform permutation of `0..m`. Random search takes a prefix of
/// it and the initial phase of a conformal search takes a shorter prefix of
/// the same permutation, so both share their opening trials for equal seeds.
pub(crate) fn random_order(m: usize, seed: u64) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..m).collect();
    ids.shuffle(&mut rng_from(derive_seed(seed, stream::ORDER)));
    ids
}

/// Draws `n_init` distinct configuration ids uniformly without replacement.
pub fn sample_initial(space: &ConfigSpace, n_init: usize, seed: u64) -> Result<Vec<usize>> {
    if n_init == 0 {
        return Err(Error::InvalidCount {
            what: "n_init",
            value: 0,
        });
    }
    if n_init >= space.len() {
        return Err(Error::BudgetExceedsSpace {
            budget: n_init,
            size: space.len(),
        });
    }
    let mut ids = random_order(space.len(), seed);
    ids.truncate(n_init);
    Ok(ids)
}

/// Hyperparameter names of the random-forest base model.
pub mod rf_params {
    pub const N_ESTIMATORS: &str = "n_estimators";
    pub const MIN_SAMPLES_SPLIT: &str = "min_samples_split";
    pub const MIN_SAMPLES_LEAF: &str = "min_samples_leaf";
    pub const MAX_FEATURES: &str = "max_features";
}

/// The random-forest search domains: estimator count, split and leaf minimum
/// sample fractions, and feature fraction per split.
pub fn random_forest_domains() -> Vec<ParamDomain> {
    let estimators = [
        10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0, 150.0, 200.0, 300.0, 400.0,
    ];
    let fractions = [0.005, 0.01, 0.05, 0.1, 0.2, 0.3];
    let features = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
    vec![
        ParamDomain::numeric(rf_params::N_ESTIMATORS, estimators).expect("static domain"),
        ParamDomain::numeric(rf_params::MIN_SAMPLES_SPLIT, fractions).expect("static domain"),
        ParamDomain::numeric(rf_params::MIN_SAMPLES_LEAF, fractions).expect("static domain"),
        ParamDomain::numeric(rf_params::MAX_FEATURES, features).expect("static domain"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(a: usize, b: usize) -> Vec<ParamDomain> {
        vec![
            ParamDomain::numeric("a", (0..a).map(|i| i as f64)).unwrap(),
            ParamDomain::numeric("b", (0..b).map(|i| 10.0 + i as f64)).unwrap(),
        ]
    }

    #[test]
    fn exhaustive_small_product() {
        let domains = vec![
            ParamDomain::categorical("c", ["a"]).unwrap(),
            ParamDomain::numeric("n", [1.0, 2.0]).unwrap(),
        ];
        let space = build_space(domains, 2, 0).unwrap();
        let mut seen: Vec<f64> = space
            .configs()
            .iter()
            .map(|c| c.get("n").unwrap().as_f64().unwrap())
            .collect();
        seen.sort_by(f64::total_cmp);
        assert_eq!(seen, vec![1.0, 2.0]);
    }

    #[test]
    fn full_product_enumerated() {
        let space = build_space(small(3, 4), 12, 5).unwrap();
        let mut got: Vec<(usize, usize)> = space
            .configs()
            .iter()
            .map(|c| {
                let a = c.get("a").unwrap().as_f64().unwrap() as usize;
                let b = c.get("b").unwrap().as_f64().unwrap() as usize - 10;
                (a, b)
            })
            .collect();
        got.sort();
        let mut want = Vec::new();
        for a in 0..3 {
            for b in 0..4 {
                want.push((a, b));
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn random_forest_space_has_distinct_configs() {
        let space = build_space(random_forest_domains(), 1000, 7).unwrap();
        assert_eq!(space.len(), 1000);
        let set: HashSet<Vec<u64>> = space
            .configs()
            .iter()
            .map(|c| {
                encode(&space, c)
                    .unwrap()
                    .0
                    .iter()
                    .map(|v| v.to_bits())
                    .collect()
            })
            .collect();
        assert_eq!(set.len(), 1000);
        for (i, c) in space.configs().iter().enumerate() {
            assert_eq!(c.id(), i);
            let names: Vec<&str> = c.assignment().iter().map(|(n, _)| n.as_str()).collect();
            assert_eq!(
                names,
                vec![
                    "n_estimators",
                    "min_samples_split",
                    "min_samples_leaf",
                    "max_features"
                ]
            );
        }
    }

    #[test]
    fn insufficient_product_and_empty_domain() {
        assert!(matches!(
            build_space(small(3, 4), 13, 0),
            Err(Error::InsufficientProduct {
                available: 12,
                requested: 13
            })
        ));
        assert!(matches!(
            ParamDomain::numeric("x", []),
            Err(Error::EmptyDomain(_))
        ));
        assert!(ParamDomain::numeric("x", [1.0, 1.0]).is_err());
        assert!(ParamDomain::numeric("x", [f64::NAN]).is_err());
    }

    #[test]
    fn encoding_rules() {
        let domains = vec![
            ParamDomain::numeric("lr", [0.05, 0.1]).unwrap(),
            ParamDomain::categorical("solver", ["Adam", "SGD"]).unwrap(),
        ];
        let space = build_space(domains, 4, 1).unwrap();
        for c in space.configs() {
            let v = encode(&space, c).unwrap();
            assert_eq!(v.0[0], c.get("lr").unwrap().as_f64().unwrap());
            let want = match c.get("solver").unwrap() {
                ParamValue::Cat(s) if s == "Adam" => 0.0,
                _ => 1.0,
            };
            assert_eq!(v.0[1], want);
        }
    }

    #[test]
    fn encoding_of_random_forest_row() {
        // full product so the row is guaranteed present
        let full = build_space(random_forest_domains(), 14 * 6 * 6 * 10, 0).unwrap();
        let c = full
            .configs()
            .iter()
            .find(|c| {
                c.get("n_estimators") == Some(&ParamValue::Num(150.0))
                    && c.get("min_samples_split") == Some(&ParamValue::Num(0.01))
                    && c.get("min_samples_leaf") == Some(&ParamValue::Num(0.2))
                    && c.get("max_features") == Some(&ParamValue::Num(0.4))
            })
            .unwrap();
        assert_eq!(encode(&full, c).unwrap().0, vec![150.0, 0.01, 0.2, 0.4]);
    }

    #[test]
    fn unknown_config_rejected() {
        let space = build_space(small(2, 2), 2, 0).unwrap();
        let big = build_space(small(3, 4), 12, 0).unwrap();
        let foreign = big.config(11).unwrap();
        assert!(matches!(
            encode(&space, foreign),
            Err(Error::UnknownConfig { id: 11, size: 2 })
        ));
    }

    #[test]
    fn initial_sample_rules() {
        let space = build_space(random_forest_domains(), 1000, 7).unwrap();
        let ids = sample_initial(&space, 20, 3).unwrap();
        assert_eq!(ids.len(), 20);
        assert_eq!(ids.iter().collect::<HashSet<_>>().len(), 20);
        assert_eq!(ids, sample_initial(&space, 20, 3).unwrap());
        assert_ne!(ids, sample_initial(&space, 20, 4).unwrap());

        let two = build_space(small(2, 1), 2, 0).unwrap();
        let one = sample_initial(&two, 1, 9).unwrap();
        assert_eq!(one.len(), 1);
        assert!(one[0] < 2);

        let five = build_space(small(5, 1), 5, 0).unwrap();
        assert!(matches!(
            sample_initial(&five, 5, 0),
            Err(Error::BudgetExceedsSpace { budget: 5, size: 5 })
        ));
    }
}
