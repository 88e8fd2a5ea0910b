// Exports the coarse operator and the subband operators in Matrix Market
// format and reads them back.
//
//   cargo run --release --example matrix_market -- 4 /tmp/mtx

use gamblet::config::RunConfig;
use gamblet::exact::{ExactOptions, ExactTransform};
use gamblet::sparse::mtx::{read_mtx, write_mtx, Symmetry};
use gamblet::CsrMatrix;
use std::path::PathBuf;

fn main() -> gamblet::Result<()> {
    let mut args = std::env::args().skip(1);
    let q: u32 = args.next().map_or(4, |s| s.parse().expect("q"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "gamblet-mtx".into()));
    std::fs::create_dir_all(&out)?;
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;
    let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &ExactOptions::default())?;

    let mut mats = vec![("a_k1".to_string(), CsrMatrix::from_dense(&t.level(1).a, 0.0))];
    for k in 2..=q {
        mats.push((format!("b_k{k}"), CsrMatrix::from_dense(&t.subband(k).b, 0.0)));
    }
    for (name, m) in mats {
        let path = out.join(format!("{name}.mtx"));
        write_mtx(&path, &m, Symmetry::Symmetric)?;
        let back = read_mtx(&path)?;
        let gap = (back.to_dense() - m.to_dense()).amax();
        println!("{} {}x{} nnz {} round trip {gap:.1e}", path.display(), m.nrows(), m.ncols(), back.nnz());
    }
    Ok(())
}
