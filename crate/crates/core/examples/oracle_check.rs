// Compares the hierarchically computed gamblets with the direct dense
// formula Ψ = (Φ A⁻¹ Φᵀ)⁻¹ Φ A⁻¹ at every level. Keep q small.
//
//   cargo run --release --example oracle_check -- 3

use gamblet::config::RunConfig;
use gamblet::exact::{ExactOptions, ExactTransform};
use gamblet::oracle::dense_gamblets;

fn main() -> gamblet::Result<()> {
    let q: u32 = std::env::args().nth(1).map_or(3, |s| s.parse().expect("q"));
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;
    let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &ExactOptions::default())?;
    for k in 1..=q {
        let phi = p.tree.measurement(k, &p.mass)?;
        let want = dense_gamblets(&p.stiffness, &phi)?;
        let gap = (&t.level(k).psi - &want).amax() / want.amax();
        println!("k={k}: max |Ψ - Ψ_dense| / max |Ψ_dense| = {gap:.2e}");
    }
    Ok(())
}
