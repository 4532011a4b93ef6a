//! Exact inference for probabilistic logic programs by lifted variable
//! elimination with heterogeneous (causal-independence) factors.
//!
//! The crate is `no_std` and only needs `alloc`. It contains:
//!
//! * [`constraint`]: tuple-set constraints over logical variables,
//! * [`factor`]: atoms, counting formulas, histograms, potential tables and parfactors,
//! * [`model`]: the two-list (homogeneous / heterogeneous) model plus validation,
//! * [`ground`]: ground VE and VE1 over propositional factors,
//! * [`lifted`]: shattering, the lifted operators and the operator scheduler,
//! * [`problog`]: the ProbLog program AST, translation to parfactors and the
//!   world-enumeration oracle.
//!
//! Parsing of `.pl` / `.pfl` files, printing and the CLI live in the `hetlift`
//! companion crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod constraint;
pub mod error;
pub mod factor;
pub mod ground;
pub mod lifted;
pub mod model;
pub mod problog;
pub mod symbol;
pub mod table;

pub use constraint::Constraint;
pub use error::{Error, Result};
pub use factor::{Atom, GroundAtom, Histogram, Kind, Parfactor, Term};
pub use table::Table;
pub use model::Model;
pub use symbol::{Logvar, Sym, Symbols};

/// Options shared by every inference engine.
#[derive(Clone, Copy)]
pub struct InferenceOptions<'a> {
    /// Upper bound on the number of cells of any table an engine may build.
    pub cell_budget: usize,
    /// Polled between elimination steps; returning `true` aborts with [`Error::Interrupted`].
    pub interrupt: Option<&'a dyn Fn() -> bool>,
}

impl Default for InferenceOptions<'_> {
    fn default() -> Self {
        InferenceOptions {
            cell_budget: 10_000_000,
            interrupt: None,
        }
    }
}

impl InferenceOptions<'_> {
    pub(crate) fn check_interrupt(&self) -> Result<()> {
        match self.interrupt {
            Some(f) if f() => Err(Error::Interrupted),
            _ => Ok(()),
        }
    }

    pub(crate) fn check_cells(&self, cells: usize) -> Result<()> {
        if cells > self.cell_budget {
            Err(Error::CellBudget {
                cells,
                budget: self.cell_budget,
            })
        } else {
            Ok(())
        }
    }
}
