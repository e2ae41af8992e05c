//! Quasi-Gray codes: cyclic counters over mixed-radix words that read and
//! write few coordinates per step.
//!
//! Constructions: the modular Gray code ([`graycode`]), linear counters over
//! finite fields ([`linear`]), space-optimal counters for odd radices built
//! from 2-functions ([`permdecomp`]), and the composition engines that glue
//! them together ([`compose`]). [`verify`] holds the brute-force oracles.

pub mod cells;
pub mod compose;
pub mod counter;
pub mod dat;
pub mod error;
pub mod field;
pub mod graycode;
pub mod linear;
pub mod permdecomp;
pub mod verify;
pub mod word;

pub use cells::{Cells, StepStats, Tape};
pub use counter::{measure_counter, Counter, CounterExt, Direction, Recipe, Walk, WalkReport};
pub use dat::{dat_eval, materialize, DecisionAssignmentTree};
pub use error::{Error, Result};
pub use word::{Domain, Word};
