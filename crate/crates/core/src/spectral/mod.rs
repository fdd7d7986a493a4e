//! Periodic-box discretization, transforms and the dealiased cubic term.

mod fft;
mod field;
mod grid;
mod snapshot;

pub use field::{
    cubic_nonlinearity, dealias, dealias_in_place, transform, Direction, FieldSeries,
    Representation, SpectralField,
};
pub use grid::{make_grid, Grid, GridConfig};
pub use snapshot::{read_snapshot, read_snapshot_on, write_snapshot, SNAPSHOT_MAGIC, SNAPSHOT_VERSION};
