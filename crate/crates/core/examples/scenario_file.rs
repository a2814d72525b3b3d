// Loading a scenario document, overriding a threshold and tabulating per-node results.

use uavq::report::{write_results, Cell, ResultTable};
use uavq::scenario::load_scenario_file;
use uavq::throughput::{EvalOptions, Evaluator, PolicyVector};

const DOCUMENT: &str = r#"
schema_version = 1
num_channels = 15
gamma_th = 8.0
placement_seed = 3

[noise]
temperature = 290.0

[[nodes]]
id = "ground-station"
role = "source"
position = { x = 4.0, y = 6.0 }
beta = 5.1

[[nodes]]
id = "nlos"
role = "interferer"
count = 3
position = "sampled"
transmit_power = "sampled"
delay_threshold = "sampled"
fading = "rayleigh"
beta = 1.55
"#;

pub fn run_example() -> uavq::Result<()> {
    let path = std::env::temp_dir().join(format!("uavq-scenario-{}.toml", std::process::id()));
    std::fs::write(&path, DOCUMENT)?;
    let mut scenario = load_scenario_file(&path)?;
    std::fs::remove_file(&path)?;
    let src = scenario.source_index();
    scenario.nodes[src].beta = 5.4;

    let eval = Evaluator::new(&scenario, EvalOptions::default())?;
    let results = eval.evaluate_all(&PolicyVector::new(scenario.betas())?)?;
    let mut table = ResultTable::new(["node", "beta", "p_loss", "throughput"]);
    for (node, r) in scenario.nodes.iter().zip(&results) {
        table.push(vec![Cell::from(node.id.as_str()), node.beta.into(), r.p_loss.into(), r.throughput.into()]);
    }
    write_results(&table, std::io::stdout().lock())
}

#[allow(dead_code)]
fn main() -> uavq::Result<()> {
    run_example()
}
