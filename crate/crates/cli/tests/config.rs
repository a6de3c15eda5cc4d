use std::collections::BTreeMap;
use std::path::PathBuf;

use cftrain::config::DomainMode;
use cftrain::{parse_config, ExperimentConfig};
use cftrain_core::cegen::GeneratorKind;
use cftrain_core::data::{Mutability, SyntheticKind};
use cftrain_core::training::Objective;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MINIMAL: &str = "[data]\nkind = \"circles\"\n";

#[test]
fn empty_training_section_takes_defaults() {
    let cfg = parse_config(&format!("{MINIMAL}[training]\n")).unwrap();
    assert_eq!(cfg.training.lambda_div, 0.5);
    assert_eq!(cfg.training.lambda_adv, 0.25);
    assert_eq!(cfg.training.lambda_reg, 0.1);
    assert_eq!(cfg.training.lambda_clf, 1.0);
    assert_eq!(cfg.training.epochs, 100);
    assert_eq!(cfg.training.batch_size, 30);
    assert_eq!(cfg.training.n_ce, 1000);
    assert_eq!(cfg.training.learning_rate, 0.001);
    assert_eq!(cfg.generator.threshold, 0.75);
    assert_eq!(cfg.generator.lambda_egy, 5.0);
    assert_eq!(cfg.generator.max_iter, 30);
    assert_eq!(cfg.eval.runs, 20);
    assert_eq!(cfg.model.hidden(), vec![32]);
    assert_eq!(cfg.seed, 42);
    assert_eq!(cfg, ExperimentConfig::synthetic(SyntheticKind::Circles));
}

#[test]
fn duplicate_key_is_named() {
    let err = parse_config("[data]\nkind = \"moons\"\nn_train = 10\nn_train = 20\n").unwrap_err();
    assert!(err.message.contains("n_train"), "{err}");
    assert_eq!(err.line, Some(4));
}

#[test]
fn unknown_key_reports_its_line() {
    let err = parse_config(&format!("{MINIMAL}\n[training]\nepochs = 3\nlamda_div = 0.4\n")).unwrap_err();
    assert_eq!(err.line, Some(6), "{err}");
    assert!(err.message.contains("lamda_div"), "{err}");

    let err = parse_config(&format!("{MINIMAL}[generator]\nstep = 0.1\n")).unwrap_err();
    assert_eq!(err.line, Some(4), "{err}");

    let err = parse_config(&format!("{MINIMAL}[plots]\nwidth = 3\n")).unwrap_err();
    assert_eq!(err.line, Some(3), "{err}");
}

#[test]
fn type_mismatch_reports_its_line() {
    let err = parse_config(&format!("{MINIMAL}[training]\nepochs = \"many\"\n")).unwrap_err();
    assert_eq!(err.line, Some(4), "{err}");
    let err = parse_config(&format!("{MINIMAL}[eval]\nepsilons = 0.1\n")).unwrap_err();
    assert_eq!(err.line, Some(4), "{err}");
    let err = parse_config("[data]\nkind = \"spirals\"\n").unwrap_err();
    assert_eq!(err.line, Some(2), "{err}");
}

#[test]
fn missing_data_section_is_an_error() {
    let err = parse_config("seed = 1\n[training]\nepochs = 3\n").unwrap_err();
    assert!(err.message.contains("data"), "{err}");
    assert!(err.line.is_some());
}

#[test]
fn semantic_errors_are_located() {
    let err = parse_config(&format!("{MINIMAL}[training]\nobjectives = []\n")).unwrap_err();
    assert_eq!(err.line, Some(4));
    let err = parse_config("[data]\nkind = \"circles\"\ncsv = \"a.csv\"\n").unwrap_err();
    assert!(err.message.contains("either"), "{err}");
    let err = parse_config(&format!("{MINIMAL}[training]\nburn_in = 1.5\n")).unwrap_err();
    assert!(err.message.contains("burn-in"), "{err}");
    let err = parse_config(&format!("{MINIMAL}[eval]\nruns = 1\n")).unwrap_err();
    assert!(err.message.contains("bootstrap"), "{err}");
}

#[test]
fn full_config_parses() {
    let text = r#"
seed = 9

[data]
csv = "data/credit.csv"
label = "default"
standardize = false
n_train = 800
n_test = 200
domain = "inferred"
protected = ["age"]

[data.mutability]
income = "increase_only"

[model]
hidden_units = 16
layers = 2

[training]
objectives = ["full", "ar", "cd", "vanilla"]
burn_in = 0.5
lambda_reg = 0.25

[generator]
kind = "generic"
threshold = 0.9

[eval]
runs = 5
epsilons = [0.0, 0.1, 0.2]

[output]
dir = "runs/credit"
plots = false
"#;
    let cfg = parse_config(text).unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.data.csv, Some(PathBuf::from("data/credit.csv")));
    assert_eq!(cfg.data.domain, DomainMode::Inferred);
    assert_eq!(
        cfg.data.constraints(),
        vec![
            ("age".to_string(), Mutability::Immutable),
            ("income".to_string(), Mutability::IncreaseOnly)
        ]
    );
    assert_eq!(cfg.data.dataset_name(), "credit");
    assert_eq!(cfg.model.hidden(), vec![16, 16]);
    assert_eq!(cfg.objectives(), vec![Objective::Full, Objective::Ar, Objective::Cd, Objective::Vanilla]);
    let t = cfg.train_config(Objective::Cd);
    assert_eq!(t.objective, Objective::Cd);
    assert_eq!(t.burn_in, 0.5);
    assert_eq!(t.lambda_reg, 0.25);
    assert_eq!(t.generator.kind, GeneratorKind::Generic);
    assert_eq!(t.generator.threshold, 0.9);
    assert_eq!(t.seed, 9);
    assert_eq!(cfg.eval_config().seed, 9);
    assert!(!cfg.output.plots);
}

fn random_config(rng: &mut ChaCha8Rng) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::synthetic(*SyntheticKind::ALL.choose(rng).unwrap());
    cfg.seed = rng.gen();
    if rng.gen_bool(0.3) {
        cfg.data.kind = None;
        cfg.data.csv = Some(PathBuf::from(format!("data/set_{}.csv", rng.gen::<u16>())));
        cfg.data.label = "target".into();
        cfg.data.standardize = rng.gen();
    }
    cfg.data.n_train = rng.gen_range(10..5000);
    cfg.data.n_test = rng.gen_range(10..1000);
    if rng.gen() {
        cfg.data.noise = Some(rng.gen_range(0.01..2.0));
    }
    if rng.gen() {
        cfg.data.seed = Some(rng.gen());
    }
    if rng.gen() {
        cfg.data.name = Some(format!("set \"{}\"", rng.gen::<u8>()));
    }
    cfg.data.domain = if rng.gen() { DomainMode::Inferred } else { DomainMode::None };
    cfg.data.protected = (0..rng.gen_range(0..3)).map(|i| format!("x{i}")).collect();
    let mut m = BTreeMap::new();
    if rng.gen() {
        m.insert("x5".to_string(), Mutability::DecreaseOnly);
    }
    cfg.data.mutability = m;
    cfg.model.hidden_units = rng.gen_range(1..64);
    cfg.model.layers = rng.gen_range(0..3);
    let mut objectives = Objective::ALL.to_vec();
    objectives.shuffle(rng);
    objectives.truncate(rng.gen_range(1..=4));
    cfg.training.objectives = objectives;
    cfg.training.lambda_div = rng.gen_range(0.0..2.0);
    cfg.training.lambda_reg = rng.gen_range(0.0..1.0);
    cfg.training.burn_in = rng.gen_range(0.0..1.0);
    cfg.training.epochs = rng.gen_range(0..200);
    cfg.training.learning_rate = rng.gen_range(1e-5..1e-1);
    cfg.generator.threshold = rng.gen_range(0.5..0.99);
    cfg.generator.lambda_egy = rng.gen_range(0.0..10.0);
    cfg.generator.kind = if rng.gen() { GeneratorKind::Eccco } else { GeneratorKind::Generic };
    cfg.eval.runs = rng.gen_range(2..50);
    cfg.eval.lambda_egy_grid = (0..rng.gen_range(1..6)).map(|_| rng.gen_range(0.0..10.0)).collect();
    cfg.eval.epsilons = (0..rng.gen_range(1..12)).map(|_| rng.gen_range(0.0..0.3)).collect();
    cfg.eval.seed = rng.gen();
    cfg.output.dir = PathBuf::from(format!("out/{}", rng.gen::<u32>()));
    cfg.output.plots = rng.gen();
    cfg
}

#[test]
fn serialize_parse_round_trip_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..200 {
        let cfg = random_config(&mut rng);
        let text = cfg.to_toml();
        let back = parse_config(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert_eq!(back, cfg, "{text}");
        assert_eq!(back.to_toml(), text);
    }
}
