// Condition numbers of the coarse operator and of every subband operator,
// for a ≡ 1 and for the rough coefficient. The subband numbers should stay
// bounded as the grid is refined.
//
//   cargo run --release --example conditioning -- 5

use gamblet::config::{CoefficientSpec, RunConfig};
use gamblet::diagnostics::{conditioning_table, gram_condition};
use gamblet::exact::{ExactOptions, ExactTransform};
use gamblet::WVariant;

fn main() -> gamblet::Result<()> {
    let q: u32 = std::env::args().nth(1).map_or(5, |s| s.parse().expect("q"));
    for variant in [WVariant::Chain, WVariant::Orthonormal] {
        println!("cond(W Wᵀ) {variant:?}: {:.4}", gram_condition(&gamblet::IndexTree::for_side(1 << q)?.build_w(2, variant)?)?);
    }
    for coefficient in [CoefficientSpec::Constant { value: 1.0 }, CoefficientSpec::Example1] {
        let mut cfg = RunConfig::default();
        cfg.grid.q = q;
        cfg.coefficient = coefficient.clone();
        let p = cfg.build_problem()?;
        let opts = ExactOptions { variant: WVariant::Orthonormal, ..Default::default() };
        let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &opts)?;
        println!("{coefficient:?}");
        for r in conditioning_table(&t, 1e-6)? {
            println!("  {}^({}) λmin {:.4e} λmax {:.4e} cond {:.2}", r.matrix, r.k, r.lambda_min, r.lambda_max, r.cond);
        }
    }
    Ok(())
}
