//! Linear-elastic 3D truss: pin-jointed bars, dense symmetric stiffness,
//! direct solve. Small structures only (tens of degrees of freedom), so no
//! sparse machinery is used.
//!
//! The built-in 36-bar tower is a 12-node triangular prism stack: four
//! equilateral-triangle levels (side 60, story height 60), simply supported
//! at the three ground nodes, columns plus both face diagonals in every
//! story, and horizontal bracing at the three elevated levels. A vertical
//! 100 lb load acts at node 9 (first top-level node), the modulus is 1e7 and
//! each element's cross-sectional area is one input component.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelEvaluator;

/// Where an element takes its cross-sectional area from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AreaSource {
    /// Input-vector component by index.
    Component { index: usize },
    /// Fixed deterministic area.
    Fixed { area: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub node: usize,
    /// Fixed translations per axis (x, y, z).
    pub fixed: [bool; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub node: usize,
    pub force: [f64; 3],
}

/// Pin-jointed bar structure. Node indices are zero-based everywhere,
/// including the JSON form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrussModel {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<[usize; 2]>,
    pub youngs_modulus: f64,
    /// Mass density; informational only (no self-weight is applied).
    pub density: f64,
    pub supports: Vec<Support>,
    pub loads: Vec<Load>,
    pub area_map: Vec<AreaSource>,
}

/// Nodal displacements and element axial stresses.
#[derive(Debug, Clone)]
pub struct TrussSolution {
    pub displacements: Vec<[f64; 3]>,
    pub stresses: Vec<f64>,
    /// Element elongations; exposed for energy checks.
    pub elongations: Vec<f64>,
}

impl TrussModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if n == 0 || self.elements.is_empty() {
            return Err(Error::InvalidArgument(
                "truss needs at least one node and one element".into(),
            ));
        }
        if self.youngs_modulus <= 0.0 {
            return Err(Error::InvalidArgument("Young's modulus must be positive".into()));
        }
        if self.area_map.len() != self.elements.len() {
            return Err(Error::DimensionMismatch {
                expected: self.elements.len(),
                actual: self.area_map.len(),
                context: "area map entries vs elements".into(),
            });
        }
        for (e, el) in self.elements.iter().enumerate() {
            if el[0] >= n || el[1] >= n || el[0] == el[1] {
                return Err(Error::InvalidArgument(format!(
                    "element {e} references invalid nodes {el:?}"
                )));
            }
        }
        for s in &self.supports {
            if s.node >= n {
                return Err(Error::InvalidArgument(format!(
                    "support references missing node {}",
                    s.node
                )));
            }
        }
        for l in &self.loads {
            if l.node >= n {
                return Err(Error::InvalidArgument(format!(
                    "load references missing node {}",
                    l.node
                )));
            }
        }
        Ok(())
    }

    /// Number of input components the area map expects.
    pub fn input_dimension(&self) -> usize {
        self.area_map
            .iter()
            .filter_map(|a| match a {
                AreaSource::Component { index } => Some(index + 1),
                AreaSource::Fixed { .. } => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// Resolve per-element areas from an input vector.
    pub fn areas_from_inputs(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        self.area_map
            .iter()
            .map(|a| match *a {
                AreaSource::Component { index } => {
                    inputs.get(index).copied().ok_or(Error::DimensionMismatch {
                        expected: self.input_dimension(),
                        actual: inputs.len(),
                        context: "truss input vector".into(),
                    })
                }
                AreaSource::Fixed { area } => Ok(area),
            })
            .collect()
    }

    fn fixed_dofs(&self) -> Vec<bool> {
        let mut fixed = vec![false; 3 * self.nodes.len()];
        for s in &self.supports {
            for c in 0..3 {
                if s.fixed[c] {
                    fixed[3 * s.node + c] = true;
                }
            }
        }
        fixed
    }

    /// Solve K u = f for the given element areas.
    pub fn solve(&self, areas: &[f64]) -> Result<TrussSolution> {
        self.validate()?;
        if areas.len() != self.elements.len() {
            return Err(Error::DimensionMismatch {
                expected: self.elements.len(),
                actual: areas.len(),
                context: "element areas".into(),
            });
        }
        if !areas.iter().all(|a| *a > 0.0) {
            return Err(Error::SingularStiffness);
        }

        let n = self.nodes.len();
        let fixed = self.fixed_dofs();
        let free: Vec<usize> = (0..3 * n).filter(|&d| !fixed[d]).collect();
        let index_of: Vec<Option<usize>> = {
            let mut map = vec![None; 3 * n];
            for (i, &d) in free.iter().enumerate() {
                map[d] = Some(i);
            }
            map
        };
        let nf = free.len();
        if nf == 0 {
            return Err(Error::InvalidArgument("all degrees of freedom are fixed".into()));
        }

        // Geometry per element: unit axial direction and length.
        let mut directions = Vec::with_capacity(self.elements.len());
        let mut lengths = Vec::with_capacity(self.elements.len());
        for el in &self.elements {
            let a = self.nodes[el[0]];
            let b = self.nodes[el[1]];
            let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            if len <= 0.0 {
                return Err(Error::InvalidArgument("zero-length element".into()));
            }
            directions.push([d[0] / len, d[1] / len, d[2] / len]);
            lengths.push(len);
        }

        // Assemble the reduced stiffness: k_e = (EA/L) d d^T on both nodes.
        let mut k = DMatrix::zeros(nf, nf);
        for (e, el) in self.elements.iter().enumerate() {
            let stiff = self.youngs_modulus * areas[e] / lengths[e];
            let d = directions[e];
            for (ci, &ni) in [el[0], el[1]].iter().enumerate() {
                for (cj, &nj) in [el[0], el[1]].iter().enumerate() {
                    let sign = if ci == cj { 1.0 } else { -1.0 };
                    for a in 0..3 {
                        let Some(ia) = index_of[3 * ni + a] else { continue };
                        for b in 0..3 {
                            let Some(jb) = index_of[3 * nj + b] else { continue };
                            k[(ia, jb)] += sign * stiff * d[a] * d[b];
                        }
                    }
                }
            }
        }

        let mut f = nalgebra::DVector::zeros(nf);
        for load in &self.loads {
            for c in 0..3 {
                if let Some(i) = index_of[3 * load.node + c] {
                    f[i] += load.force[c];
                }
            }
        }

        let u_free: nalgebra::DVector<f64> = match nalgebra::Cholesky::new(k.clone()) {
            Some(chol) => chol.solve(&f),
            None => {
                let lu = k.lu();
                lu.solve(&f).ok_or(Error::SingularStiffness)?
            }
        };
        if u_free.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularStiffness);
        }

        let mut displacements = vec![[0.0; 3]; n];
        for (i, &d) in free.iter().enumerate() {
            displacements[d / 3][d % 3] = u_free[i];
        }

        let mut stresses = Vec::with_capacity(self.elements.len());
        let mut elongations = Vec::with_capacity(self.elements.len());
        for (e, el) in self.elements.iter().enumerate() {
            let ua = displacements[el[0]];
            let ub = displacements[el[1]];
            let d = directions[e];
            let elongation =
                (ub[0] - ua[0]) * d[0] + (ub[1] - ua[1]) * d[1] + (ub[2] - ua[2]) * d[2];
            elongations.push(elongation);
            stresses.push(self.youngs_modulus * elongation / lengths[e]);
        }
        Ok(TrussSolution {
            displacements,
            stresses,
            elongations,
        })
    }

    /// The two scalar outputs: y1 = max absolute horizontal/vertical nodal
    /// displacement (x and z components; y is excluded), y2 = max absolute
    /// axial stress.
    pub fn outputs_y1_y2(&self, areas: &[f64]) -> Result<(f64, f64)> {
        let sol = self.solve(areas)?;
        let y1 = sol
            .displacements
            .iter()
            .map(|u| u[0].abs().max(u[2].abs()))
            .fold(0.0f64, f64::max);
        let y2 = sol.stresses.iter().map(|s| s.abs()).fold(0.0f64, f64::max);
        Ok((y1, y2))
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrussModel = serde_json::from_str(text)?;
        model.validate()?;
        Ok(model)
    }
}

/// The built-in 36-bar, 12-node tower described in the module docs.
pub fn builtin_truss36() -> TrussModel {
    let side = 60.0;
    let height = 60.0;
    let half = side / 2.0;
    let apex = side * 3f64.sqrt() / 2.0;
    let mut nodes = Vec::with_capacity(12);
    for level in 0..4 {
        let z = height * level as f64;
        nodes.push([0.0, 0.0, z]);
        nodes.push([side, 0.0, z]);
        nodes.push([half, apex, z]);
    }
    let mut elements: Vec<[usize; 2]> = Vec::with_capacity(36);
    for story in 0..3usize {
        let lo = 3 * story;
        let hi = lo + 3;
        for i in 0..3 {
            elements.push([lo + i, hi + i]); // column
        }
        for i in 0..3 {
            let j = (i + 1) % 3;
            elements.push([lo + i, hi + j]); // face diagonal
            elements.push([lo + j, hi + i]); // opposite diagonal
        }
    }
    for level in 1..4usize {
        let base = 3 * level;
        elements.push([base, base + 1]);
        elements.push([base + 1, base + 2]);
        elements.push([base + 2, base]);
    }
    debug_assert_eq!(elements.len(), 36);
    let area_map = (0..36).map(|index| AreaSource::Component { index }).collect();
    TrussModel {
        nodes,
        elements,
        youngs_modulus: 1.0e7,
        density: 0.1,
        supports: (0..3)
            .map(|node| Support {
                node,
                fixed: [true, true, true],
            })
            .collect(),
        loads: vec![Load {
            node: 9,
            force: [0.0, 0.0, -100.0],
        }],
        area_map,
    }
}

/// Which truss output an evaluator exposes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrussOutput {
    Y1,
    Y2,
}

/// Low-fidelity stand-in constants for the built-in tower: the modulus is
/// reduced, per-element areas are partially homogenized toward their mean
/// (a smooth simplification of the input-output map), and stresses are
/// recovered with a nominal-section bias.
pub const LOW_FIDELITY_MODULUS_FACTOR: f64 = 1.0 / 1.12;
pub const LOW_FIDELITY_AREA_BLEND: f64 = 0.8;
pub const LOW_FIDELITY_STRESS_SCALE: f64 = 1.10;

/// Evaluator adapter for a truss output, with optional low-fidelity knobs.
pub struct TrussEvaluator {
    pub truss: TrussModel,
    pub output: TrussOutput,
    /// 1.0 uses areas as given; lambda < 1 blends toward the mean area.
    pub area_blend: f64,
    /// Multiplies the selected output.
    pub output_scale: f64,
    label: String,
}

impl TrussEvaluator {
    pub fn fine(truss: TrussModel, output: TrussOutput) -> Self {
        let label = format!("truss/fine/{}", output_tag(output));
        TrussEvaluator {
            truss,
            output,
            area_blend: 1.0,
            output_scale: 1.0,
            label,
        }
    }

    pub fn low(mut truss: TrussModel, output: TrussOutput) -> Self {
        truss.youngs_modulus *= LOW_FIDELITY_MODULUS_FACTOR;
        let label = format!("truss/low/{}", output_tag(output));
        TrussEvaluator {
            truss,
            output,
            area_blend: LOW_FIDELITY_AREA_BLEND,
            output_scale: match output {
                TrussOutput::Y1 => 1.0,
                TrussOutput::Y2 => LOW_FIDELITY_STRESS_SCALE,
            },
            label,
        }
    }
}

fn output_tag(output: TrussOutput) -> &'static str {
    match output {
        TrussOutput::Y1 => "y1",
        TrussOutput::Y2 => "y2",
    }
}

impl ModelEvaluator for TrussEvaluator {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn input_dimension(&self) -> Option<usize> {
        Some(self.truss.input_dimension())
    }

    fn evaluate_batch(&self, points: &DMatrix<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(points.nrows());
        for l in 0..points.nrows() {
            let inputs: Vec<f64> = points.row(l).iter().copied().collect();
            let mut areas = self.truss.areas_from_inputs(&inputs)?;
            if self.area_blend < 1.0 {
                let mean = areas.iter().sum::<f64>() / areas.len() as f64;
                for a in &mut areas {
                    *a = self.area_blend * *a + (1.0 - self.area_blend) * mean;
                }
            }
            let (y1, y2) = self.truss.outputs_y1_y2(&areas)?;
            let value = match self.output {
                TrussOutput::Y1 => y1,
                TrussOutput::Y2 => y2,
            };
            out.push(value * self.output_scale);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{Marginal, RandomInputModel, SampleScheme};

    /// One bar along x, fixed at node 0, axial load P at node 1.
    fn single_bar(length: f64) -> TrussModel {
        TrussModel {
            nodes: vec![[0.0, 0.0, 0.0], [length, 0.0, 0.0]],
            elements: vec![[0, 1]],
            youngs_modulus: 1.0e7,
            density: 0.1,
            supports: vec![
                Support { node: 0, fixed: [true, true, true] },
                Support { node: 1, fixed: [false, true, true] },
            ],
            loads: vec![Load { node: 1, force: [250.0, 0.0, 0.0] }],
            area_map: vec![AreaSource::Component { index: 0 }],
        }
    }

    #[test]
    fn single_bar_matches_the_analytic_solution() {
        let truss = single_bar(40.0);
        let area = 2.0;
        let sol = truss.solve(&[area]).unwrap();
        let want_disp = 250.0 * 40.0 / (1.0e7 * area);
        assert!((sol.displacements[1][0] - want_disp).abs() < 1e-15);
        assert!((sol.stresses[0] - 250.0 / area).abs() < 1e-10);
        let (y1, y2) = truss.outputs_y1_y2(&[area]).unwrap();
        assert!((y1 - want_disp).abs() < 1e-15);
        assert!((y2 - 125.0).abs() < 1e-10);
    }

    #[test]
    fn zero_load_gives_zero_response() {
        let mut truss = single_bar(10.0);
        truss.loads[0].force = [0.0; 3];
        let sol = truss.solve(&[1.0]).unwrap();
        assert_eq!(sol.displacements[1], [0.0; 3]);
        assert_eq!(sol.stresses[0], 0.0);
    }

    /// Two-bar bracket: horizontal member plus a 45-degree tie, loaded
    /// downward. Method of joints: tie force sqrt(2) P (tension), chord
    /// force -P (compression).
    fn bracket() -> TrussModel {
        TrussModel {
            nodes: vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]],
            elements: vec![[0, 2], [1, 2]],
            youngs_modulus: 2.0e6,
            density: 0.1,
            supports: vec![
                Support { node: 0, fixed: [true, true, true] },
                Support { node: 1, fixed: [true, true, true] },
                Support { node: 2, fixed: [false, false, true] },
            ],
            loads: vec![Load { node: 2, force: [0.0, -300.0, 0.0] }],
            area_map: vec![
                AreaSource::Component { index: 0 },
                AreaSource::Component { index: 1 },
            ],
        }
    }

    #[test]
    fn bracket_forces_match_method_of_joints() {
        let truss = bracket();
        let areas = [1.5, 2.5];
        let sol = truss.solve(&areas).unwrap();
        let p = 300.0;
        let force_chord = sol.stresses[0] * areas[0];
        let force_tie = sol.stresses[1] * areas[1];
        assert!((force_chord - (-p)).abs() < 1e-10, "chord {force_chord}");
        assert!((force_tie - 2f64.sqrt() * p).abs() < 1e-10, "tie {force_tie}");
    }

    #[test]
    fn doubling_areas_halves_displacements_and_stresses_when_determinate() {
        let truss = bracket();
        let base = truss.solve(&[1.0, 1.0]).unwrap();
        let doubled = truss.solve(&[2.0, 2.0]).unwrap();
        for (a, b) in base.displacements.iter().zip(&doubled.displacements) {
            for c in 0..3 {
                assert!((b[c] - a[c] / 2.0).abs() < 1e-14);
            }
        }
        for (a, b) in base.stresses.iter().zip(&doubled.stresses) {
            assert!((b - a / 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn load_scaling_is_linear() {
        let mut truss = bracket();
        let base = truss.outputs_y1_y2(&[1.0, 1.0]).unwrap();
        truss.loads[0].force = [0.0, -900.0, 0.0];
        let tripled = truss.outputs_y1_y2(&[1.0, 1.0]).unwrap();
        assert!((tripled.0 - 3.0 * base.0).abs() < 1e-12);
        assert!((tripled.1 - 3.0 * base.1).abs() < 1e-9);
    }

    #[test]
    fn symmetric_frame_has_symmetric_response() {
        let truss = TrussModel {
            nodes: vec![[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.5, 0.0]],
            elements: vec![[0, 2], [1, 2]],
            youngs_modulus: 1.0e7,
            density: 0.1,
            supports: vec![
                Support { node: 0, fixed: [true, true, true] },
                Support { node: 1, fixed: [true, true, true] },
                Support { node: 2, fixed: [false, false, true] },
            ],
            loads: vec![Load { node: 2, force: [0.0, -50.0, 0.0] }],
            area_map: vec![AreaSource::Fixed { area: 1.0 }, AreaSource::Fixed { area: 1.0 }],
        };
        let sol = truss.solve(&[1.0, 1.0]).unwrap();
        assert!(sol.displacements[2][0].abs() < 1e-10);
        assert!((sol.stresses[0] - sol.stresses[1]).abs() < 1e-10);
    }

    #[test]
    fn builtin_tower_is_well_posed_at_mean_areas() {
        let truss = builtin_truss36();
        truss.validate().unwrap();
        assert_eq!(truss.nodes.len(), 12);
        assert_eq!(truss.elements.len(), 36);
        assert_eq!(truss.input_dimension(), 36);
        let areas = vec![30.0; 36];
        let (y1, y2) = truss.outputs_y1_y2(&areas).unwrap();
        assert!(y1 > 0.0 && y1.is_finite(), "y1 = {y1}");
        assert!(y2 > 0.0 && y2.is_finite(), "y2 = {y2}");
        let sol = truss.solve(&areas).unwrap();
        for node in 0..3 {
            assert_eq!(sol.displacements[node], [0.0; 3]);
        }
    }

    #[test]
    fn stiffness_residual_and_energy_are_consistent() {
        let truss = builtin_truss36();
        let areas: Vec<f64> = (0..36).map(|i| 28.0 + (i % 5) as f64).collect();
        let sol = truss.solve(&areas).unwrap();
        // External work f . u
        let mut work = 0.0;
        for load in &truss.loads {
            for c in 0..3 {
                work += load.force[c] * sol.displacements[load.node][c];
            }
        }
        // Internal energy sum (EA/L) delta^2
        let mut energy = 0.0;
        for (e, el) in truss.elements.iter().enumerate() {
            let a = truss.nodes[el[0]];
            let b = truss.nodes[el[1]];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2) + (b[2] - a[2]).powi(2))
                .sqrt();
            energy += truss.youngs_modulus * areas[e] / len * sol.elongations[e].powi(2);
        }
        assert!(
            (work - energy).abs() <= 1e-9 * work.abs(),
            "work {work} vs energy {energy}"
        );
    }

    #[test]
    fn non_positive_area_is_singular() {
        let truss = single_bar(10.0);
        assert!(matches!(truss.solve(&[0.0]), Err(Error::SingularStiffness)));
        assert!(matches!(truss.solve(&[-1.0]), Err(Error::SingularStiffness)));
    }

    #[test]
    fn unstable_mechanism_is_reported() {
        // Two collinear bars with a free middle joint loaded laterally.
        let truss = TrussModel {
            nodes: vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            elements: vec![[0, 1], [1, 2]],
            youngs_modulus: 1.0e7,
            density: 0.1,
            supports: vec![
                Support { node: 0, fixed: [true, true, true] },
                Support { node: 2, fixed: [true, true, true] },
            ],
            loads: vec![Load { node: 1, force: [0.0, -1.0, 0.0] }],
            area_map: vec![AreaSource::Fixed { area: 1.0 }, AreaSource::Fixed { area: 1.0 }],
        };
        assert!(matches!(
            truss.solve(&[1.0, 1.0]),
            Err(Error::SingularStiffness)
        ));
    }

    #[test]
    fn json_roundtrip_preserves_the_model() {
        let truss = builtin_truss36();
        let text = truss.to_json().unwrap();
        let back = TrussModel::from_json(&text).unwrap();
        assert_eq!(truss, back);
    }

    #[test]
    fn fine_low_pair_is_correlated_and_biased() {
        let model = RandomInputModel::equicorrelated(
            vec![Marginal::Normal { mean: 30.0, std: 1.5 }; 36],
            0.5,
        )
        .unwrap();
        let batch = model.sample(SampleScheme::Mcs, 1000, 42).unwrap();
        for output in [TrussOutput::Y1, TrussOutput::Y2] {
            let fine = TrussEvaluator::fine(builtin_truss36(), output);
            let low = TrussEvaluator::low(builtin_truss36(), output);
            let yf = fine.evaluate_batch(&batch.points).unwrap();
            let yl = low.evaluate_batch(&batch.points).unwrap();
            let mf = yf.iter().sum::<f64>() / 1000.0;
            let ml = yl.iter().sum::<f64>() / 1000.0;
            let offset = (ml - mf).abs() / mf.abs();
            assert!(offset >= 0.02, "{output:?}: mean offset {offset}");
            let (mut sff, mut sll, mut sfl) = (0.0, 0.0, 0.0);
            for (f, l) in yf.iter().zip(&yl) {
                sff += (f - mf) * (f - mf);
                sll += (l - ml) * (l - ml);
                sfl += (f - mf) * (l - ml);
            }
            let corr = sfl / (sff.sqrt() * sll.sqrt());
            assert!(corr > 0.95, "{output:?}: correlation {corr}");
        }
    }
}
