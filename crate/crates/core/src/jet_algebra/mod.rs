//! Forward-mode order-3 jet arithmetic and the expression language that
//! feeds it.

mod expr;
mod jet;

pub use expr::{chart_variable_names, evaluate_jet, Expr, Expression};
pub use jet::{jet_compose_chain, Jet3, MAX_ORDER};
