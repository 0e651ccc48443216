pub struct Uniformizer;
