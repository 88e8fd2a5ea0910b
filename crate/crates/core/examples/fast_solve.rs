// Localized (near-linear) solve with the default radius schedule. Prints the
// radii, the flop count per algorithm line and the error against fine CG.
//
//   cargo run --release --example fast_solve -- 5 1e-4

use gamblet::config::RunConfig;
use gamblet::fast::FastOptions;
use gamblet::fem::energy_norm;
use gamblet::{cg_solve, fast_solve, LocalizationSchedule};

fn main() -> gamblet::Result<()> {
    let mut args = std::env::args().skip(1);
    let q: u32 = args.next().map_or(5, |s| s.parse().expect("q"));
    let eps: f64 = args.next().map_or(1e-4, |s| s.parse().expect("epsilon"));
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;

    let sched = LocalizationSchedule::new(eps, q, gamblet::fast::DEFAULT_C_RHO)?;
    let (sol, _, rep) = fast_solve(&p.mass, &p.stiffness, &p.load, &p.tree, &sched, &FastOptions::default())?;
    println!("rho = {:?}", sched.rho);
    for (line, f) in &rep.build_flops {
        println!("build {line:>8} {:.3e}", *f as f64);
    }
    println!("total flops {:.3e}, build {:.2}s, solve {:.3}s", rep.total_flops as f64, rep.build_seconds, rep.solve_seconds);

    let (u_ref, _) = cg_solve(&p.stiffness, &p.load.rhs, 1e-12, 100_000, None)?;
    let d: Vec<f64> = sol.u.iter().zip(&u_ref).map(|(a, b)| a - b).collect();
    println!("relative energy error {:.3e} (target {eps:e})", energy_norm(&p.stiffness, &d)? / energy_norm(&p.stiffness, &u_ref)?);
    Ok(())
}
