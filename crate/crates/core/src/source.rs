//! Anything that can hand out coordinate jets at the nodes of a grid: exact
//! charts, derived surfaces such as the polar surface, and sampled
//! immersions differentiated by finite differences.

use crate::error::Result;
use crate::jets::Jet2;
use crate::surface::{AmbientSpace, Grid, SurfaceChart};

pub trait JetSource: Sync {
    fn ambient(&self) -> AmbientSpace;

    fn label(&self) -> String;

    /// Coordinate jets of total degree `order` at grid node `(i, j)`.
    fn jets_at_node(&self, grid: &Grid, i: usize, j: usize, order: usize) -> Result<Vec<Jet2>>;
}

impl JetSource for SurfaceChart {
    fn ambient(&self) -> AmbientSpace {
        SurfaceChart::ambient(self)
    }

    fn label(&self) -> String {
        SurfaceChart::label(self).to_string()
    }

    fn jets_at_node(&self, grid: &Grid, i: usize, j: usize, order: usize) -> Result<Vec<Jet2>> {
        self.jet_eval(grid.node(i, j), order)
    }
}
