//! Concurrent finite-state machines: CFM process terms, their Petri net
//! semantics, branching team equivalences and distributed non-interference.

pub mod equivalence;
pub mod error;
pub mod generate;
pub mod lts;
pub mod multiset;
pub mod net;
pub mod security;
pub mod syntax;
pub mod typing;

pub use error::{EquivalenceError, NetError, ParseError, ParseErrorKind, SpecError};
pub use lts::{dec, lts_step, Lts};
pub use multiset::Multiset;
pub use net::{build_net, restrict_net, Marking, Net, PlaceId, Transition};
pub use syntax::{parse_spec, Action, Spec, Term};
