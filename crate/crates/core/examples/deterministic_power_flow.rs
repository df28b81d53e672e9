//! Newton-Raphson solves of the bundled 39- and 118-bus cases with reactive
//! limits enforced, and a few extracted responses.

use std::path::Path;

use lra_ppf::casedata::parse_case;
use lra_ppf::powerflow::{extract_responses, InjectionSet, PowerFlowModel, ResponseSpec, SolveOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    let studies = [
        ("case39.m", vec!["VM:8", "SF:13-14", "SF:13-14:to", "QG:32"]),
        ("case39_mod.m", vec!["VM:8", "SF:13-14", "QG:32"]),
        ("case118.m", vec!["VM:53", "SF:49-69", "QG:69"]),
    ];
    for (file, responses) in studies {
        let case = parse_case(&std::fs::read_to_string(data.join(file))?)?;
        let model = PowerFlowModel::new(&case);
        let opts = SolveOptions {
            flat_start: true,
            ..SolveOptions::default()
        };
        let t = std::time::Instant::now();
        let sol = model.solve(&InjectionSet::from_case(&case), &opts)?;
        let dt = t.elapsed();
        println!(
            "{file}: {} buses, {} iterations, mismatch {:.2e} p.u., PV->PQ {:?}, {:.1} ms",
            case.buses.len(),
            sol.iterations,
            sol.max_mismatch,
            sol.pv_to_pq_switches,
            dt.as_secs_f64() * 1e3
        );
        let ids = responses.iter().map(|r| r.parse()).collect::<Result<Vec<_>, _>>()?;
        let spec = ResponseSpec::new(&model, &ids)?;
        for (id, v) in ids.iter().zip(extract_responses(&model, &spec, &sol)) {
            println!("  {id:<12} {v:.6}");
        }
    }
    Ok(())
}
