pub mod triangular;
pub mod quadform;
pub mod escalator;
pub mod rules;
pub mod cli;
