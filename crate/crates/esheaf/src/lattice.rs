pub struct Lattice;
