use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CollapseSet, MassDensityFamily, Operator};
use crate::error::{Error, Result};
use crate::kernel::{self_energy, Kernel, PhysicalConstants};
use crate::numeric::{hermitian_eigenvalues, hermitian_part, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Acts on observables: `ℒ(A) = (i/ħ)[H, A] + Σ_a (L_a A L_a − ½{L_a², A})`.
    Heisenberg,
    /// The trace dual acting on states.
    Schrodinger,
}

fn check_dims(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}

fn check_hbar(cs: &CollapseSet, constants: PhysicalConstants) -> Result<()> {
    if (cs.hbar() - constants.hbar()).abs() > 1e-15 * constants.hbar() {
        return Err(Error::validation(
            "constants.hbar",
            format!(
                "collapse set was built with ħ = {}, got {}",
                cs.hbar(),
                constants.hbar()
            ),
        ));
    }
    Ok(())
}

/// `−(i/ħ)[H, ρ] − Λ∘ρ`. With diagonal Hermitian channels the dissipator
/// is a Hadamard product with the dephasing matrix.
pub fn schrodinger_rhs(rho: &CMatrix, h: &CMatrix, cs: &CollapseSet) -> CMatrix {
    let mut out = commutator(h, rho) * Complex64::new(0.0, -1.0 / cs.hbar());
    subtract_dephasing(&mut out, rho, cs.dephasing_matrix());
    out
}

/// `(i/ħ)[H, A] − Λ∘A`.
pub fn heisenberg_rhs(a: &CMatrix, h: &CMatrix, cs: &CollapseSet) -> CMatrix {
    let mut out = commutator(h, a) * Complex64::new(0.0, 1.0 / cs.hbar());
    subtract_dephasing(&mut out, a, cs.dephasing_matrix());
    out
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

fn subtract_dephasing(out: &mut CMatrix, x: &CMatrix, lam: &DMatrix<f64>) {
    for (o, (xv, l)) in out.iter_mut().zip(x.iter().zip(lam.iter())) {
        *o -= xv * *l;
    }
}

pub fn lindblad_generator(
    a: &Operator,
    direction: Direction,
    h: &Operator,
    cs: &CollapseSet,
    constants: PhysicalConstants,
) -> Result<Operator> {
    check_dims("generator argument", cs.dimension(), a.dimension())?;
    check_dims("generator Hamiltonian", cs.dimension(), h.dimension())?;
    check_hbar(cs, constants)?;
    let m = match direction {
        Direction::Heisenberg => heisenberg_rhs(a, h, cs),
        Direction::Schrodinger => schrodinger_rhs(a, h, cs),
    };
    Operator::new(m)
}

/// Quadratic forms `Q_bc = (√w μ_b)ᵀ M (√w μ_c) / ħ` of the basis
/// configurations against a weighted site matrix `M`.
fn configuration_forms(
    family: &MassDensityFamily,
    site_matrix: &DMatrix<f64>,
    hbar: f64,
) -> Result<DMatrix<f64>> {
    let n = family.n_sites();
    check_dims("site matrix", n, site_matrix.nrows())?;
    check_dims("site matrix", n, site_matrix.ncols())?;
    let sw = family.grid().cell_weight().sqrt();
    let v = DMatrix::from_fn(n, family.dimension(), |j, b| {
        sw * family.site_diagonal(j)[b]
    });
    Ok(v.transpose() * site_matrix * &v / hbar)
}

/// Heisenberg generator assembled from the kernel double sum
/// `(1/ħ) Σ_jk w² g_jk (μ̂_j A μ̂_k − ½{μ̂_j μ̂_k, A})` instead of the channels.
/// `site_matrix` is the weighted kernel `G̃`.
pub fn lindblad_double_sum(
    a: &Operator,
    h: &Operator,
    family: &MassDensityFamily,
    site_matrix: &DMatrix<f64>,
    constants: PhysicalConstants,
) -> Result<Operator> {
    let d = family.dimension();
    check_dims("generator argument", d, a.dimension())?;
    check_dims("generator Hamiltonian", d, h.dimension())?;
    let q = configuration_forms(family, site_matrix, constants.hbar())?;
    let mut out = commutator(h, a) * Complex64::new(0.0, 1.0 / constants.hbar());
    for b in 0..d {
        for c in 0..d {
            let rate = q[(b, c)] - 0.5 * (q[(b, b)] + q[(c, c)]);
            out[(b, c)] += a[(b, c)] * rate;
        }
    }
    Operator::new(out)
}

/// Result of a dissipation evaluation with its positivity certificate.
#[derive(Debug, Clone)]
pub struct Dissipation {
    pub operator: Operator,
    pub min_eigenvalue: f64,
}

/// `𝒟(A) = ℒ(A†A) − ℒ(A†)A − A†ℒ(A) = Σ_a [L_a, A]†[L_a, A]`.
pub fn dissipation(a: &Operator, cs: &CollapseSet) -> Result<Dissipation> {
    let d = cs.dimension();
    check_dims("dissipation argument", d, a.dimension())?;
    let mut out = CMatrix::zeros(d, d);
    let mut comm = CMatrix::zeros(d, d);
    for l in cs.diagonals() {
        for c in 0..d {
            for r in 0..d {
                comm[(r, c)] = a[(r, c)] * (l[r] - l[c]);
            }
        }
        out += comm.adjoint() * &comm;
    }
    certify(out)
}

/// Dissipation from the kernel double sum
/// `(1/ħ) Σ_jk w² g_jk [μ̂_j, A]†[μ̂_k, A]`, with `site_matrix = G̃`.
/// Positive only when `site_matrix` is.
pub fn dissipation_double_sum(
    a: &Operator,
    family: &MassDensityFamily,
    site_matrix: &DMatrix<f64>,
    constants: PhysicalConstants,
) -> Result<Dissipation> {
    let d = family.dimension();
    check_dims("dissipation argument", d, a.dimension())?;
    let q = configuration_forms(family, site_matrix, constants.hbar())?;
    // entry (b,c) = Σ_e conj(A_eb) A_ec (Q_ee − Q_ec − Q_be + Q_bc)
    let out = CMatrix::from_fn(d, d, |b, c| {
        (0..d)
            .map(|e| a[(e, b)].conj() * a[(e, c)] * (q[(e, e)] - q[(e, c)] - q[(b, e)] + q[(b, c)]))
            .sum()
    });
    certify(out)
}

fn certify(m: CMatrix) -> Result<Dissipation> {
    let min_eigenvalue = hermitian_eigenvalues(&hermitian_part(&m))
        .first()
        .copied()
        .unwrap_or(0.0);
    Ok(Dissipation {
        operator: Operator::new(m)?,
        min_eigenvalue,
    })
}

/// Per-basis-state comparison of the Itô correction `⟨b|Σ_a L_a†L_a|b⟩`
/// with the self-energy `Γ(μ_b)/ħ`.
#[derive(Debug, Clone, Serialize)]
pub struct ItoReport {
    pub channel_sum: Vec<f64>,
    pub self_energy: Vec<f64>,
    pub max_deviation: f64,
    pub scale: f64,
}

impl ItoReport {
    pub fn relative_deviation(&self) -> f64 {
        if self.scale == 0.0 {
            self.max_deviation
        } else {
            self.max_deviation / self.scale
        }
    }
}

pub fn ito_correction_check(
    cs: &CollapseSet,
    family: &MassDensityFamily,
    kernel: &Kernel,
    constants: PhysicalConstants,
) -> Result<ItoReport> {
    check_dims("Itô check basis", family.dimension(), cs.dimension())?;
    check_hbar(cs, constants)?;
    let channel_sum = cs.total_intensity().to_vec();
    let self_energy = (0..family.dimension())
        .map(|b| self_energy(&family.configuration(b), kernel).map(|g| g / constants.hbar()))
        .collect::<Result<Vec<_>>>()?;
    let max_deviation = channel_sum
        .iter()
        .zip(&self_energy)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = self_energy.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(ItoReport {
        channel_sum,
        self_energy,
        max_deviation,
        scale,
    })
}
