//! Operads as relational state machines.
//!
//! [`FlatState`] holds every operad as flat relations (foliage, inputs, hat
//! and hook maps) and changes only through the two guarded events
//! [`FlatState::new_operad`] and [`FlatState::compose_seq`]. The
//! [`tree_oracle`] and [`endomorphism`] modules are independent models used
//! to check it; [`simulator`] animates it and [`decoration`] refines it with
//! symbols on the inputs.
//!
//! ```
//! use operadix::{default_config, expr_parser, FlatState};
//!
//! let program = expr_parser::parse("f:4; g:2; f o_2 g").unwrap();
//! let events = expr_parser::elaborate(&program, &default_config()).unwrap();
//! let mut state = FlatState::new(default_config());
//! for e in &events {
//!     state = state.apply(e).unwrap();
//! }
//! assert!(state.dump().contains("in: f->{1,4,5}"));
//! ```

pub mod config;
pub mod decoration;
pub mod endomorphism;
pub mod expr_parser;
pub mod flat_machine;
pub mod ids;
pub mod simulator;
pub mod tree_oracle;

pub use config::{default_config, Config, ConfigError, ConfigValues};
pub use decoration::DecoratedState;
pub use endomorphism::{circ, Carrier, FiniteFn};
pub use expr_parser::{ComposeExpr, Program};
pub use flat_machine::{
    result_arity, ComposeWitness, DumpError, Event, FlatState, Guard, Invariant, MachineError,
    Relations, StructureViolation,
};
pub use ids::{IdError, OperadId, Position};
pub use simulator::{SimConfig, SimReport};
pub use tree_oracle::{Forest, ForestView, Node, TreeOperad};
