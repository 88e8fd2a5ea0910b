// Error of the localized solve with the same radius ρ on every level, next to
// the exact transform. The error should fall geometrically in ρ.
//
//   cargo run --release --example localization_sweep -- 5

use gamblet::config::RunConfig;
use gamblet::diagnostics::linear_fit;
use gamblet::exact::ExactOptions;
use gamblet::fast::FastOptions;
use gamblet::fem::energy_norm;
use gamblet::{exact_solve, fast_solve, LocalizationSchedule};

fn main() -> gamblet::Result<()> {
    let q: u32 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("q"));
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;
    let (exact, _) = exact_solve(&p.mass, &p.stiffness, &p.load.rhs, &p.tree, &ExactOptions::default())?;
    let ref_norm = energy_norm(&p.stiffness, &exact.u)?;

    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rho in 1..=5 {
        // tight inner solves so only truncation shows
        let sched = LocalizationSchedule::uniform(q, rho as f64, 1e-8)?;
        let (sol, _, _) = fast_solve(&p.mass, &p.stiffness, &p.load, &p.tree, &sched, &FastOptions::default())?;
        let d: Vec<f64> = sol.u.iter().zip(&exact.u).map(|(a, b)| a - b).collect();
        let err = energy_norm(&p.stiffness, &d)? / ref_norm;
        println!("rho={rho} error vs exact {err:.3e}");
        xs.push(rho as f64);
        ys.push(err.ln());
    }
    let (slope, _) = linear_fit(&xs, &ys);
    println!("d ln(error) / d rho = {slope:.3}");
    Ok(())
}
