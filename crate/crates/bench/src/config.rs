//! Benchmark settings and the `key = value` config file.
//!
//! Keys match the long command-line flags (`trials`, `pretrain-epochs`, ...).
//! Values from a config file override the defaults; flags given on the
//! command line override both.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ecsdbn_core::dbn::DbnConfig;
use ecsdbn_core::de::DeParams;

use crate::error::{read_to_string, BenchError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    EcsDbn,
    Dbn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::EcsDbn => "ecs-dbn",
            Method::Dbn => "dbn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ecs-dbn" | "ecsdbn" => Ok(Method::EcsDbn),
            "dbn" => Ok(Method::Dbn),
            other => Err(BenchError::Config(format!(
                "unknown method {other:?} (expected ecs-dbn or dbn)"
            ))),
        }
    }
}

/// How train/test partitions are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    /// Stratified k-fold cross-validation of the catalog's train file.
    Cv,
    /// The catalog's own train/test file pair, one evaluation per trial.
    Keel,
}

impl FromStr for Split {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cv" => Ok(Split::Cv),
            "keel" => Ok(Split::Keel),
            other => Err(BenchError::Config(format!(
                "unknown split {other:?} (expected keel or cv)"
            ))),
        }
    }
}

/// Hidden-layer widths: the configured `layers`, or fresh random widths in
/// [5, 50] for every run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hidden {
    Fixed,
    Random,
}

impl FromStr for Hidden {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fixed" => Ok(Hidden::Fixed),
            "random" => Ok(Hidden::Random),
            other => Err(BenchError::Config(format!(
                "unknown hidden mode {other:?} (expected fixed or random)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub catalog: Option<PathBuf>,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub folds: usize,
    pub seed: u64,
    pub split: Split,
    pub hidden: Hidden,
    pub out: PathBuf,
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    pub layers: Vec<usize>,
    pub pretrain_epochs: usize,
    pub finetune_epochs: usize,
    pub learning_rate: f64,
    pub finetune_lr: f64,
    pub batch_size: usize,
    pub population: usize,
    pub generations: usize,
    pub alpha: f64,
}

impl Default for RunSettings {
    fn default() -> Self {
        let dbn = DbnConfig::new(2, 0);
        let de = DeParams::default();
        RunSettings {
            catalog: None,
            methods: vec![Method::EcsDbn, Method::Dbn],
            trials: 10,
            folds: 5,
            seed: 0,
            split: Split::Cv,
            hidden: Hidden::Fixed,
            out: PathBuf::from("results"),
            jobs: 0,
            layers: dbn.layer_sizes,
            pretrain_epochs: dbn.pretrain.epochs,
            finetune_epochs: dbn.finetune_epochs,
            learning_rate: dbn.pretrain.learning_rate,
            finetune_lr: dbn.finetune_lr,
            batch_size: dbn.pretrain.batch_size,
            population: de.population_size,
            generations: de.max_generations,
            alpha: 0.05,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| BenchError::Config(format!("{key}: cannot parse {value:?}")))
}

pub fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|v| parse(key, v))
        .collect()
}

impl RunSettings {
    /// Sets one option by its flag name.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "catalog" => self.catalog = Some(PathBuf::from(value.trim())),
            "methods" => {
                self.methods = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "trials" => self.trials = parse(key, value)?,
            "folds" => self.folds = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "split" => self.split = value.parse()?,
            "hidden" => self.hidden = value.parse()?,
            "out" => self.out = PathBuf::from(value.trim()),
            "jobs" => self.jobs = parse(key, value)?,
            "layers" => self.layers = parse_list(key, value)?,
            "pretrain-epochs" => self.pretrain_epochs = parse(key, value)?,
            "finetune-epochs" => self.finetune_epochs = parse(key, value)?,
            "learning-rate" => self.learning_rate = parse(key, value)?,
            "finetune-lr" => self.finetune_lr = parse(key, value)?,
            "batch-size" => self.batch_size = parse(key, value)?,
            "population" => self.population = parse(key, value)?,
            "generations" => self.generations = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            _ => return Err(BenchError::Config(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of a config file. Relative `catalog`
    /// and `out` paths resolve against the file's directory.
    pub fn apply_config_file(&mut self, path: &Path) -> Result<()> {
        let text = read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for (key, value) in parse_config(&text)? {
            let value = if matches!(key.as_str(), "catalog" | "out") && Path::new(&value).is_relative() {
                base.join(&value).to_string_lossy().into_owned()
            } else {
                value
            };
            self.set(&key, &value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(BenchError::Config(msg.to_string()));
        if self.methods.is_empty() {
            return fail("at least one method is required");
        }
        if self.trials == 0 {
            return fail("trials must be >= 1");
        }
        if self.split == Split::Cv && self.folds < 2 {
            return fail("folds must be >= 2");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha must lie in (0, 1)");
        }
        self.dbn_config(2, 0, self.layers.clone())
            .validate()
            .map_err(|e| BenchError::Config(e.to_string()))?;
        self.de_params()
            .validate(2)
            .map_err(|e| BenchError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn dbn_config(&self, n_classes: usize, seed: u64, layer_sizes: Vec<usize>) -> DbnConfig {
        let mut cfg = DbnConfig::new(n_classes, seed);
        cfg.layer_sizes = layer_sizes;
        cfg.pretrain.epochs = self.pretrain_epochs;
        cfg.pretrain.learning_rate = self.learning_rate;
        cfg.pretrain.batch_size = self.batch_size;
        cfg.finetune_epochs = self.finetune_epochs;
        cfg.finetune_lr = self.finetune_lr;
        cfg.finetune_batch_size = self.batch_size;
        cfg
    }

    pub fn de_params(&self) -> DeParams {
        DeParams {
            population_size: self.population,
            max_generations: self.generations,
            ..DeParams::default()
        }
    }
}

/// `key = value` pairs in file order. Blank lines and `#` comments are
/// skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| BenchError::format(i + 1, "expected `key = value`"))?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_protocol() {
        let s = RunSettings::default();
        assert_eq!((s.trials, s.folds), (10, 5));
        assert_eq!(s.layers, vec![25, 25]);
        assert_eq!((s.pretrain_epochs, s.finetune_epochs), (100, 300));
        assert_eq!((s.learning_rate, s.finetune_lr), (0.01, 0.01));
        assert!(s.validate().is_ok());
    }

    #[test]
    fn config_lines() {
        let pairs = parse_config("# comment\ntrials = 3\n\nmethods=dbn, ecs-dbn  # trailing\n").unwrap();
        assert_eq!(
            pairs,
            vec![("trials".into(), "3".into()), ("methods".into(), "dbn, ecs-dbn".into())]
        );
        let mut s = RunSettings::default();
        for (k, v) in pairs {
            s.set(&k, &v).unwrap();
        }
        assert_eq!(s.trials, 3);
        assert_eq!(s.methods, vec![Method::Dbn, Method::EcsDbn]);
        assert!(matches!(
            parse_config("trials 3\n"),
            Err(BenchError::Format { line: 1, .. })
        ));
    }

    #[test]
    fn bad_values_are_config_errors() {
        let mut s = RunSettings::default();
        assert!(matches!(s.set("trials", "many"), Err(BenchError::Config(_))));
        assert!(matches!(s.set("methods", "svm"), Err(BenchError::Config(_))));
        assert!(matches!(s.set("colour", "red"), Err(BenchError::Config(_))));
        s.set("folds", "1").unwrap();
        assert!(s.validate().is_err());
    }
}
