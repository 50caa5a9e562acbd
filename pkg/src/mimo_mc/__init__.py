"""mmWave massive MIMO channel estimation via low-rank and beamspace-sparse matrix completion."""

from .admm import AdmmConfig, AdmmState, SolverError, SolverTrace, default_config, default_params, solve
from .baselines import OmpConfig, SvtConfig, default_svt_config, solve_omp, solve_svt
from .channel import (ChannelConfig, ChannelRealization, dft_bases, from_beamspace,
                      generate_channel, to_beamspace, ula_response)
from .harness import ExperimentConfig, ResultRow, emit, run_convergence, run_sweep, summarize
from .linalg import dft_matrix, soft_threshold_complex, svt_shrink
from .metrics import ase, nmse
from .sampling import ObservedChannel, SamplingPattern, generate_mask, simulate_training

__version__ = "0.1.0"
