//! Quick end-to-end checks behind the `selftest` subcommand.

use crate::config::ExperimentConfig;
use crate::recommend::{recommend, Descriptor, Method};
use crate::record::ResultRecord;
use crate::runner::{run_experiment, RunOptions};

pub const SIGNED_CONFIG: &str = include_str!("../configs/signed.json");

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn untimed(text: &str) -> crate::Result<ExperimentConfig> {
    let mut c = ExperimentConfig::from_json(text)?;
    c.timing = false;
    Ok(c)
}

fn max_error(text: &str, solver: &str, bound: f64) -> (bool, String) {
    let run = untimed(text).and_then(|c| run_experiment(&c, &RunOptions::default()));
    match run {
        Err(e) => (false, e.to_string()),
        Ok(r) => {
            let scored = r.points.iter().filter(|p| p.solver == solver);
            let worst = scored.clone().map(|p| p.error.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
            (worst <= bound, format!("max error {worst:.2e} (bound {bound:.0e}) over {} points", scored.count()))
        }
    }
}

pub fn selftest() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name, (passed, detail): (bool, String)| checks.push(Check { name, passed, detail });

    push(
        "binary birth-death closure vs geometric tail",
        max_error(
            r#"{"name":"selftest_bd","model":{"name":"binary_bd"},"t":1.0,"initial":[1],
                "sweep":{"axis":"N","values":[30,60]},"solvers":[{"name":"closure"}],
                "reference":{"name":"closed_form"}}"#,
            "closure",
            1e-10,
        ),
    );
    push("signed coefficients vs formal Poisson law", max_error(SIGNED_CONFIG, "closure", 1e-12));
    push(
        "block-Thomas vs dense stationary",
        max_error(
            r#"{"name":"selftest_bt","model":{"name":"telegraph_gr"},"mode":"stationary",
                "sweep":{"axis":"M","values":[40]},"solvers":[{"name":"block_thomas"}],
                "reference":{"name":"dense"}}"#,
            "block_thomas",
            1e-10,
        ),
    );

    let bd = Descriptor { closed_form: true, ..Descriptor::linear(1) };
    let bare = Descriptor { linear_rate: false, remainder: true, ..Descriptor::linear(1) };
    let table = [
        (recommend(&Descriptor::linear(1)).method, Method::CompositionMultiplierClosure),
        (recommend(&bd).method, Method::GeometricTail),
        (recommend(&bare).method, Method::StandardTruncation),
    ];
    let ok = table.iter().all(|(got, want)| got == want);
    push("method selection examples", (ok, format!("{table:?}")));

    let round = untimed(SIGNED_CONFIG)
        .and_then(|c| run_experiment(&c, &RunOptions::default()))
        .and_then(|r| Ok((ResultRecord::from_json(&r.to_json()?)?, r)));
    push(
        "result JSON round trip",
        match round {
            Ok((back, r)) => (back == r, format!("{} points", r.points.len())),
            Err(e) => (false, e.to_string()),
        },
    );
    checks
}
