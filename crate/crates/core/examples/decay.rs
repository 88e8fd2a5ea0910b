// Energy of the central gamblet outside a ball of radius r, per level, with
// the fitted exponential rate. Runs a ≡ 1 and the rough coefficient.
//
//   cargo run --release --example decay -- 5

use gamblet::config::{CoefficientSpec, RunConfig};
use gamblet::diagnostics::central_decay;
use gamblet::exact::{ExactOptions, ExactTransform};

fn main() -> gamblet::Result<()> {
    let q: u32 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("q"));
    for coefficient in [CoefficientSpec::Constant { value: 1.0 }, CoefficientSpec::Example1] {
        let mut cfg = RunConfig::default();
        cfg.grid.q = q;
        cfg.coefficient = coefficient.clone();
        let p = cfg.build_problem()?;
        let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &ExactOptions::default())?;
        println!("{coefficient:?}");
        for k in 2..=q.min(4) {
            let d = central_decay(&t, &p.grid, &p.coefficient, k)?;
            let hk = p.tree.h_k(k);
            let shown: Vec<String> = [1.0, 2.0, 3.0, 4.0]
                .iter()
                .map(|m| format!("{:.2e}", d.fraction_at(m * hk)))
                .collect();
            println!("  k={k} outside 1..4 H_k: [{}]  rate per H_k {:.2}", shown.join(" "), d.slope * hk);
        }
    }
    Ok(())
}
