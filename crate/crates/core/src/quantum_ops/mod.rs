//! Finite position-basis Hilbert spaces and the operators built on them.
//!
//! Every mass-density observable and every collapse channel is diagonal in
//! the position basis, so channels are stored as real diagonals and the
//! dissipative part of the generator is a Hadamard product with
//! `Λ_bc = ½ Σ_a (ℓ_a(b) − ℓ_a(c))²`.

mod collapse;
mod hamiltonian;
mod lindblad;
mod mass;
mod operator;
mod space;

pub use collapse::{collapse_set, CollapseSet, CONTRACTION_TOL_REL};
pub use hamiltonian::{hamiltonian, HamiltonianKind};
pub use lindblad::{
    dissipation, dissipation_double_sum, heisenberg_rhs, ito_correction_check, lindblad_double_sum,
    lindblad_generator, schrodinger_rhs, Direction, Dissipation, ItoReport,
};
pub use mass::{mass_density_family, mollifier, MassDensityFamily};
pub use operator::{ComplexPair, Operator, OperatorJson};
pub use space::{build_space, HilbertSpace, ParticleSpec, DEFAULT_DIM_CAP};
