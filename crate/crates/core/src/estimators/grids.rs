//! Grids through prescribed breakpoints.

use crate::brownian::Grid;
use crate::error::{domain, Result};

/// Grid through the given increasing breakpoints with steps close to `step`.
pub(crate) fn grid_through(breaks: &[f64], step: f64) -> Result<Grid> {
    if breaks.len() < 2 || !(step > 0.0) {
        return domain("need two breakpoints and a positive step");
    }
    let mut pts = vec![breaks[0]];
    for w in breaks.windows(2) {
        if !(w[1] > w[0]) {
            return domain("breakpoints must increase");
        }
        let n = ((w[1] - w[0]) / step).round().max(1.0) as usize;
        for i in 1..=n {
            pts.push(if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 });
        }
    }
    Grid::new(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_hits_breakpoints() {
        let g = grid_through(&[-2.3, -1.0, 1.0, 2.7], 0.1).unwrap();
        assert!(g.index_of(-1.0).is_some() && g.index_of(1.0).is_some());
        assert_eq!(g.left(), -2.3);
        assert_eq!(g.right(), 2.7);
        assert!(grid_through(&[0.0, 0.0], 0.1).is_err());
    }
}
