//! Wall-clock and convergence probe for the optimizer at a reduced time grid
//! (N_t = 8192; per-sweep progress is nearly grid-independent because the
//! field update per step carries no dt factor). Used to budget the long
//! integration suites; not part of the test surface.

use std::time::Instant;

use gatefield::{
    run_optimization_diagnostic, BasisFlavor, FunctionalKind, RunConfig,
};

fn milestone(records: &[gatefield::IterationRecord], level: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.fidelity <= level)
        .map(|r| r.iteration)
}

fn milestone_j(records: &[gatefield::IterationRecord], level: f64) -> Option<usize> {
    records
        .iter()
        .find(|r| r.j_norm <= level)
        .map(|r| r.iteration)
}

#[allow(clippy::too_many_arguments)]
fn probe(
    label: &str,
    qubits: u32,
    levels: Option<(usize, usize)>,
    displacement: Option<f64>,
    total_time: Option<f64>,
    kind: FunctionalKind,
    flavor: Option<BasisFlavor>,
    lambda0: f64,
    phase2: Option<(f64, usize)>,
    n_steps: usize,
    iterations: usize,
    fidelity_target: f64,
) {
    let mut config = RunConfig::default();
    config.qubits = qubits;
    if let Some((m_g, m_e)) = levels {
        config.m_g = m_g;
        config.m_e = m_e;
    }
    if let Some(d) = displacement {
        config.displacement = d;
    }
    if let Some(t) = total_time {
        config.total_time = t;
    }
    config.n_steps = n_steps;
    config.functional = kind;
    config.basis_flavor = flavor.unwrap_or_else(|| kind.default_flavor());
    config.lambda0 = lambda0;
    if let Some((l2, switch)) = phase2 {
        config.lambda0_phase2 = Some(l2);
        config.lambda0_switch_iteration = Some(switch);
    }
    config.max_iterations = iterations;
    config.fidelity_target = fidelity_target;
    let model = config.build_model().expect("model");
    let target = config.build_target().expect("target");
    let krotov = config.krotov_config();

    let start = Instant::now();
    let outcome = match run_optimization_diagnostic(&model, &target, &krotov) {
        Ok(out) => out,
        Err(err) => {
            println!("{label}: ERROR {err}");
            return;
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let records = &outcome.records;
    let last = records.last().expect("records");
    let sweeps = last.iteration.max(1) as f64;
    println!(
        "{label}: {} sweeps in {elapsed:.1} s ({:.3} s/sweep) | stop {} | fid@end {:.4} | J_norm@end {:.4} | intensity {:.2} | norm_dev {:.2e} | fid@100 {:?} | fid@200 {:?} | it_j(-0.8) {:?} | it(-1) {:?} | it(-1.5) {:?} | it(-2) {:?}",
        last.iteration,
        elapsed / sweeps,
        outcome.diagnostics.stop_reason.as_str(),
        last.fidelity,
        last.j_norm,
        last.intensity,
        outcome.diagnostics.max_norm_deviation,
        records.get(100).map(|r| (r.fidelity * 1e4).round() / 1e4),
        records.get(200).map(|r| (r.fidelity * 1e4).round() / 1e4),
        milestone_j(records, -0.8),
        milestone(records, -1.0),
        milestone(records, -1.5),
        milestone(records, -2.0),
    );
}

fn main() {
    let sm = Some(BasisFlavor::CanonicalBasis);
    let small = Some((16usize, 8usize));
    // One displacement beyond the screen winner, then the full trio at the
    // winner itself to measure the scaling-law inputs.
    probe("q3 sm24 d=3.0 l0=150", 3, small, Some(3.0), None, FunctionalKind::Sm, sm, 150.0, None, 8192, 1200, -2.0);
    probe("q3 sm24 d=2.5 deep", 3, small, Some(2.5), None, FunctionalKind::Sm, sm, 150.0, None, 8192, 4000, -2.0);
    probe("q2 sm24 d=2.5", 2, small, Some(2.5), None, FunctionalKind::Sm, sm, 150.0, None, 8192, 3000, -2.0);
    probe("q1 sm24 d=2.5", 1, small, Some(2.5), None, FunctionalKind::Sm, sm, 150.0, None, 8192, 1500, -2.0);
}
