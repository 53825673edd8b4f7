pub mod bayesfactor;
pub mod cli;
pub mod design;
pub mod mvn;
pub mod numerics;
pub mod simulate;
