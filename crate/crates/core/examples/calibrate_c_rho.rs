// Sweeps the radius constant C_ρ of the localization schedule on the rough
// example and prints the error and cost of each value. This is the run that
// fixed DEFAULT_C_RHO.
//
//   cargo run --release --example calibrate_c_rho -- 5 1e-4

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
    let (u_ref, _) = cg_solve(&p.stiffness, &p.load.rhs, 1e-12, 100_000, None)?;
    let ref_norm = energy_norm(&p.stiffness, &u_ref)?;

    println!("{:>5} {:>11} {:>11} {:>8}  rho", "C", "error", "flops", "seconds");
    for c in [0.2, 0.3, 0.4, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0] {
        let sched = LocalizationSchedule::new(eps, q, c)?;
        let t = std::time::Instant::now();
        let (sol, _, rep) = fast_solve(&p.mass, &p.stiffness, &p.load, &p.tree, &sched, &FastOptions::default())?;
        let d: Vec<f64> = sol.u.iter().zip(&u_ref).map(|(a, b)| a - b).collect();
        let err = energy_norm(&p.stiffness, &d)? / ref_norm;
        println!("{c:>5} {err:>11.3e} {:>11.3e} {:>8.2}  {:?}", rep.total_flops as f64, t.elapsed().as_secs_f64(), sched.rho);
    }
    Ok(())
}
