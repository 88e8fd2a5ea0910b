// Exact multiresolution solve of the rough-coefficient example, printing the
// energy error of every partial sum against a fine CG solve.
//
//   cargo run --release --example example1_solve -- 5

use gamblet::config::RunConfig;
use gamblet::diagnostics::{convergence_table, l2_norm};
use gamblet::exact::ExactOptions;
use gamblet::{cg_solve, exact_solve};

fn main() -> gamblet::Result<()> {
    let q = std::env::args().nth(1).map_or(Ok(4), |s| s.parse()).expect("q must be an integer");
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;
    println!("q={q} h={:.3e} contrast={:.0}", p.grid.h(), p.coefficient.contrast());

    let (sol, _) = exact_solve(&p.mass, &p.stiffness, &p.load.rhs, &p.tree, &ExactOptions::default())?;
    let (u_ref, _) = cg_solve(&p.stiffness, &p.load.rhs, 1e-12, 100_000, None)?;
    let g_l2 = l2_norm(&p.mass, &p.load.nodal)?;
    for row in convergence_table(&sol, &p.stiffness, &u_ref, p.coefficient.lambda_min(), g_l2)? {
        println!("k={} |u-u^k|_a={:.3e} rel={:.3e} bound={:.3e}", row.k, row.error, row.rel_error, row.bound);
    }
    for c in &sol.cg {
        println!("level {} dim {} cg iterations {}", c.level, c.dim, c.iterations);
    }
    Ok(())
}
