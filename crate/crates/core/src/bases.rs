//! Standard spin-½ measurement bases.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::history::ProjectorDecomposition;
use crate::linalg::C64;
use crate::tolerance::Tolerance;

fn basis(labels: [&str; 2], a: [C64; 2], b: [C64; 2]) -> ProjectorDecomposition {
    ProjectorDecomposition::from_basis(&labels, &[a.to_vec(), b.to_vec()], Tolerance::default())
        .expect("standard basis is a valid decomposition")
}

/// {|0⟩⟨0|, |1⟩⟨1|} labelled "0", "1".
pub fn z_basis() -> ProjectorDecomposition {
    let (o, z) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    basis(["0", "1"], [o, z], [z, o])
}

/// σ_x eigenprojectors labelled "+", "-".
pub fn x_basis() -> ProjectorDecomposition {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    basis(["+", "-"], [h, h], [h, -h])
}

/// σ_y eigenprojectors labelled "+", "-".
pub fn y_basis() -> ProjectorDecomposition {
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ih = C64::new(0.0, FRAC_1_SQRT_2);
    basis(["+", "-"], [h, ih], [h, -ih])
}
