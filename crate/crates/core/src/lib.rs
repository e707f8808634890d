//! Reproducible molecular-dynamics simulation decks and trajectory analysis.
//!
//! The crate covers the whole desk-side pipeline:
//!
//! * [`structure`]: PDB and GRO readers, a GRO writer, and structure preparation.
//! * [`spec`]: the simulation parameter model, validation, and resolution into
//!   per-stage `.mdp` tables through the defaults ledger.
//! * [`deck`]: `.mdp`, PBS, and setup-script rendering, and the two-file bundle.
//! * [`traj`]: XTC and multi-frame GRO trajectories, and atom selections.
//! * [`analysis`]: RMSD, RMSF, radius of gyration, PCA, and plot output.

pub mod mdp;
pub mod spec;
pub mod structure;
pub mod deck;
pub mod traj;
pub mod analysis;
