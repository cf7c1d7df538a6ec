//! Well descriptions: vertical and 3-D angled trajectories, control
//! schedules, and the mapping from trajectories to perforated grid cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::round_half_away_from_zero;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WellRole {
    Producer,
    Injector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlMode {
    /// Total liquid rate, m3/day.
    Rate,
    /// Bottom-hole pressure, bar.
    Bhp,
}

/// Piecewise-constant control values over the production horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub mode: ControlMode,
    /// One value per control period (m3/day for rate, bar for BHP).
    pub values: Vec<f64>,
    /// End of each period in days, strictly increasing.
    pub period_end_days: Vec<f64>,
}

impl ControlSchedule {
    pub fn constant(mode: ControlMode, value: f64, horizon_days: f64) -> Self {
        Self {
            mode,
            values: vec![value],
            period_end_days: vec![horizon_days],
        }
    }

    /// Equal-length periods spanning the horizon, one value each.
    pub fn piecewise(mode: ControlMode, values: Vec<f64>, horizon_days: f64) -> Self {
        let n = values.len();
        let ends = (1..=n)
            .map(|k| horizon_days * k as f64 / n as f64)
            .collect();
        Self {
            mode,
            values,
            period_end_days: ends,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() || self.values.len() != self.period_end_days.len() {
            return Err(Error::ConfigInconsistent(
                "schedule needs one period end per value".into(),
            ));
        }
        let mut prev = 0.0;
        for &t in &self.period_end_days {
            if !(t > prev) {
                return Err(Error::ConfigInconsistent(
                    "period ends must be strictly increasing".into(),
                ));
            }
            prev = t;
        }
        Ok(())
    }

    /// Control value in effect at time `t_days` (clamped to the last
    /// period beyond the horizon).
    pub fn value_at(&self, t_days: f64) -> f64 {
        for (v, &end) in self.values.iter().zip(&self.period_end_days) {
            if t_days <= end {
                return *v;
            }
        }
        *self.values.last().expect("validated nonempty")
    }
}

/// Vertical well at continuous plane coordinates (1-based cell units;
/// rounded to a cell before simulation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerticalWell {
    pub x: f64,
    pub y: f64,
    pub role: WellRole,
    pub control: ControlSchedule,
}

/// 3-D angled well: heel position in cell units (x, y plane, z layer),
/// length in meters, azimuth in the x-y plane, and inclination from the
/// horizontal (pi/2 is vertical, pointing down).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngledWell {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub length_m: f64,
    pub azimuth_rad: f64,
    pub inclination_rad: f64,
    pub role: WellRole,
    pub control: ControlSchedule,
}

/// Heel and toe of a deviated well in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellSegment {
    pub heel_m: [f64; 3],
    pub toe_m: [f64; 3],
}

impl WellSegment {
    pub fn length_sq_m2(&self) -> f64 {
        self.heel_m
            .iter()
            .zip(&self.toe_m)
            .map(|(h, t)| (t - h) * (t - h))
            .sum()
    }

    /// Checks the squared-length window `a <= |toe - heel|^2 <= b`.
    pub fn within_length_bounds(&self, a: f64, b: f64) -> bool {
        let l2 = self.length_sq_m2();
        a <= l2 && l2 <= b
    }
}

/// Grid geometry needed to trace well trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx_m: f64,
    pub dy_m: f64,
    pub dz_m: f64,
}

impl GridGeometry {
    fn contains(&self, c: (i64, i64, i64)) -> bool {
        c.0 >= 0
            && c.0 < self.nx as i64
            && c.1 >= 0
            && c.1 < self.ny as i64
            && c.2 >= 0
            && c.2 < self.nz as i64
    }
}

/// Rounds a vertical well's plane coordinates to 0-based cell indices.
pub fn vertical_well_cell(well: &VerticalWell, grid: &GridGeometry) -> Result<(usize, usize)> {
    let ix = round_half_away_from_zero(well.x) as i64 - 1;
    let iy = round_half_away_from_zero(well.y) as i64 - 1;
    if ix < 0 || ix >= grid.nx as i64 || iy < 0 || iy >= grid.ny as i64 {
        return Err(Error::OutOfBounds {
            index: if ix < 0 || ix >= grid.nx as i64 { 0 } else { 1 },
            value: if ix < 0 || ix >= grid.nx as i64 {
                well.x
            } else {
                well.y
            },
            lower: 1.0,
            upper: grid.nx.max(grid.ny) as f64,
        });
    }
    Ok((ix as usize, iy as usize))
}

/// Heel and toe of an angled well in meters.
///
/// The heel anchors at the cell center in x and y and at the top face of
/// its layer in z (wells enter a layer from above); the toe is
/// `heel + l * (cos az cos inc, sin az cos inc, sin inc)` with z pointing
/// down.
pub fn well_segment(well: &AngledWell, grid: &GridGeometry) -> WellSegment {
    let ix = round_half_away_from_zero(well.x) - 1.0;
    let iy = round_half_away_from_zero(well.y) - 1.0;
    let iz = round_half_away_from_zero(well.z) - 1.0;
    let heel = [
        (ix + 0.5) * grid.dx_m,
        (iy + 0.5) * grid.dy_m,
        iz * grid.dz_m,
    ];
    let (az, inc) = (well.azimuth_rad, well.inclination_rad);
    let dir = [
        az.cos() * inc.cos(),
        az.sin() * inc.cos(),
        inc.sin(),
    ];
    let toe = [
        heel[0] + well.length_m * dir[0],
        heel[1] + well.length_m * dir[1],
        heel[2] + well.length_m * dir[2],
    ];
    WellSegment {
        heel_m: heel,
        toe_m: toe,
    }
}

/// Cells perforated by an angled well: a 3-D digital traversal of the
/// heel-to-toe segment. Traversal stops when the segment leaves the grid,
/// so an out-of-grid toe truncates the list rather than erroring; a heel
/// outside the grid yields [`Error::EmptyPerforation`].
pub fn well_to_cells(well: &AngledWell, grid: &GridGeometry) -> Result<Vec<(usize, usize, usize)>> {
    let seg = well_segment(well, grid);
    let sizes = [grid.dx_m, grid.dy_m, grid.dz_m];
    let p0 = seg.heel_m;
    let p1 = seg.toe_m;
    let d = [p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]];
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();

    // Starting cell; points exactly on a face belong to the cell the
    // segment is entering.
    let mut cell = [0i64; 3];
    for a in 0..3 {
        let mut c = (p0[a] / sizes[a]).floor();
        if p0[a] / sizes[a] == c && d[a] < 0.0 {
            c -= 1.0;
        }
        cell[a] = c as i64;
    }
    if !grid.contains((cell[0], cell[1], cell[2])) {
        return Err(Error::EmptyPerforation);
    }
    let mut cells = vec![(cell[0] as usize, cell[1] as usize, cell[2] as usize)];
    if len == 0.0 {
        return Ok(cells);
    }

    // Parametric distances to the next face along each axis.
    let mut t_next = [f64::INFINITY; 3];
    let mut t_step = [f64::INFINITY; 3];
    for a in 0..3 {
        if d[a] > 0.0 {
            let face = (cell[a] + 1) as f64 * sizes[a];
            t_next[a] = (face - p0[a]) / d[a];
            t_step[a] = sizes[a] / d[a];
        } else if d[a] < 0.0 {
            let face = cell[a] as f64 * sizes[a];
            t_next[a] = (face - p0[a]) / d[a];
            t_step[a] = -sizes[a] / d[a];
        }
    }

    loop {
        let axis = (0..3).min_by(|&a, &b| t_next[a].total_cmp(&t_next[b])).unwrap();
        if t_next[axis] >= 1.0 {
            break; // toe reached before the next face
        }
        cell[axis] += if d[axis] > 0.0 { 1 } else { -1 };
        if !grid.contains((cell[0], cell[1], cell[2])) {
            break; // left the grid: truncate
        }
        cells.push((cell[0] as usize, cell[1] as usize, cell[2] as usize));
        t_next[axis] += t_step[axis];
    }
    Ok(cells)
}
