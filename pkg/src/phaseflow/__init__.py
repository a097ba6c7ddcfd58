"""Phase-space formulation of quantum dynamics on a wavepacket frame."""
from .classical import FlowConfig, Trajectory, flow_map, integrate_trajectory, liouville_step, poisson_bracket
from .core import (
    Anisotropic2D, DensityField, Free, Harmonic, Linear, PhaseField, PhaseGrid, PositionGrid,
    PositionWavefunction, Quartic, WavepacketFamily, coherent_sigma, make_grid, make_model,
    make_position_grid, make_wavepacket, square_grid,
)
from .dynamics import GaugeSpec, amplitude_phase_residuals, se_evolve, se_rhs_order2, tise_residual
from .errors import PhaseflowError
from .quantization import bohr_sommerfeld_levels, phase_winding
from .reference import eigensolve, eigensolve_auto, schrodinger_evolve
from .transform import kernel, lift, project, project_Q, suppression_profile, timescale

__version__ = "0.1.0"
