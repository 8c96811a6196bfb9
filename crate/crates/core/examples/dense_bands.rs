//! Prints densely sampled curvature ranges of the catalog entries.

use hypersurf::catalog::{sample_entry, Catalog};
use hypersurf::immersion::CurvatureRange;
use hypersurf::mesh::SphereMesh;

fn main() {
    let cat = Catalog::shipped();
    for e in &cat.entries {
        let f = e.build().expect("entry builds");
        let lvl = if f.dim() == 2 { 6 } else { 10 };
        let mesh = SphereMesh::for_dim(f.dim(), lvl).unwrap();
        let r = CurvatureRange::from_samples(&sample_entry(e, &f, &mesh).unwrap(), None);
        println!("{:28} [{:.9}, {:.9}]", e.id, r.min, r.max);
    }
}
