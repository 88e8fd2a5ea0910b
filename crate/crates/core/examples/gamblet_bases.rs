// Writes the central gamblet of every level, and one χ of every subband, as
// log-scale PGM images. Shows the exponential localization at a glance.
//
//   cargo run --release --example gamblet_bases -- 5 /tmp/bases

use gamblet::config::RunConfig;
use gamblet::diagnostics::{central_index, Multiresolution};
use gamblet::exact::{ExactOptions, ExactTransform};
use gamblet::io::write_pgm;
use std::path::PathBuf;

fn main() -> gamblet::Result<()> {
    let mut args = std::env::args().skip(1);
    let q: u32 = args.next().map_or(5, |s| s.parse().expect("q"));
    let out = PathBuf::from(args.next().unwrap_or_else(|| "gamblet-bases".into()));
    std::fs::create_dir_all(&out)?;
    let mut cfg = RunConfig::default();
    cfg.grid.q = q;
    let p = cfg.build_problem()?;
    let t = ExactTransform::build(&p.mass, &p.stiffness, &p.tree, &ExactOptions::default())?;

    let n = p.grid.n();
    for k in 1..=q {
        let i = central_index(&p.tree, k);
        let path = out.join(format!("psi_k{k}_i{i}.pgm"));
        write_pgm(&path, n, &t.gamblet(k, i), true)?;
        println!("{}", path.display());
        if k >= 2 {
            // first wavelet of the central aggregate's parent
            let j = 3 * p.tree.parent(k, i);
            let chi = Multiresolution::chi(&t, k, j, &t.subband(k).w);
            let path = out.join(format!("chi_k{k}_j{j}.pgm"));
            write_pgm(&path, n, &chi, true)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
