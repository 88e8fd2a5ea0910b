// Keeps only the largest normalized multiresolution coefficients of the
// solution and reports the energy error of the reconstruction.
//
//   cargo run --release --example compression -- 6

use gamblet::config::RunConfig;
use gamblet::diagnostics::compress;
use gamblet::exact::ExactOptions;
use gamblet::exact_solve;

fn main() -> gamblet::Result<()> {
    let q: u32 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("q"));
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;
    let (sol, t) = exact_solve(&p.mass, &p.stiffness, &p.load.rhs, &p.tree, &ExactOptions::default())?;
    for f in [0.01, 0.02, 0.05, 0.1, 0.25, 1.0] {
        let c = compress(&t, &sol, &p.stiffness, f)?;
        println!("keep {:>5.1}% ({:>5}/{}) error {:.3e}", 100.0 * f, c.kept, c.total, c.rel_error);
    }
    Ok(())
}
