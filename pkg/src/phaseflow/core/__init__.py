from .fd import derivative, stencil_weights
from .grids import (
    EPS_BOUNDARY,
    DensityField,
    PhaseField,
    PhaseGrid,
    PositionGrid,
    PositionWavefunction,
    boundary_mass,
    l2_relative,
    make_grid,
    make_position_grid,
    same_grid,
    square_grid,
)
from .models import (
    MODEL_KINDS,
    Anisotropic2D,
    Free,
    HamiltonianModel,
    Harmonic,
    Linear,
    Quartic,
    make_model,
)
from .wavepackets import (
    WavepacketFamily,
    coherent_sigma,
    hermite,
    hermite_gaussian_integral,
    ho_eigen_eta,
    ho_eigenstate,
    ho_eta_values,
    make_wavepacket,
)
