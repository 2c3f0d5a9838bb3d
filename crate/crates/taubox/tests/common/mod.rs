use taubox::QuadPoly;

/// x1^2 + x2^2 + x3^2.
pub fn q3() -> QuadPoly {
    QuadPoly::new(3, vec![1, 0, 0, 0, 1, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
}

/// x1 x2 + x3^2 (indefinite symmetrized matrix, discriminant -2).
pub fn w3() -> QuadPoly {
    QuadPoly::new(3, vec![0, 1, 0, 0, 0, 0, 0, 0, 1], vec![0, 0, 0], 0).unwrap()
}
