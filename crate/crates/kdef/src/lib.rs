//! Reader and evaluator for `.kdef` files: s-expression forms that build a
//! knowledge base and install rules.
//!
//! ```text
//! (new-type {vehicle} {thing})
//! (new-if-added-rule (a (b :superior {airplane}))
//!                    ((b {travel vehicle} a))
//!   (new-is-a a {flying event}))
//! ```

mod error;
mod eval;
mod sexp;

pub use error::{Error, ErrorKind, Result};
pub use eval::{eval_form, eval_str, load_file, load_str, resolve, LoadSummary, Value};
pub use sexp::{needs_more_input, parse, Atom, Node, Sexp, SourceLocation};
