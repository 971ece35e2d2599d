"""Quantum-annealing bottlenecks of the two-pattern Gaussian Hopfield model.

Layers: `instance` (disorder + exact classical solver), `meanfield`
(order parameter, effective mass), `ringmodel` (random potential),
`spectrum` (symmetric-sector ring eigensolver), `exactdiag` (2^N oracle),
`sweep` (gap tracking and bottleneck census), `langevin` (universal
conditioned-process pipeline), `harness` (seeded ensemble runs).
"""

from .instance import (DisorderInstance, SpinAssignment, brute_force_classical,
                       classical_energy, classical_gap, generate,
                       instance_from_text, instance_to_text, read_instance,
                       solve_classical, write_instance)
from .meanfield import (MeanFieldSolution, ScalingExponents, effective_mass,
                        effective_potential, magnetization, qcp_scaling)
from .ringmodel import (PotentialGrid, PotentialTable, fourier_coefficients,
                        random_potential, whiteness_test)
from .spectrum import (GapStatistics, SpectrumResult, gap_statistics,
                       ground_position, solve_ring)
from .exactdiag import (QuantumGapCurve, gap_curve, lowest_levels,
                        ring_vs_exact_report)
from .sweep import (BottleneckEvent, GapTrace, SweepPolicy, detect_bottlenecks,
                    fit_scalings, gamma_min, lz_failure, sweep_gap)
from .langevin import (AiryPotentialTable, Landscape, LangevinPath,
                       UniversalConfig, UniversalEvent, build_airy_table,
                       integrate_branch, landscape_from_branches,
                       persistence_check, rescale_step, sample_equilibrium,
                       smooth_landscape, universal_events)

__version__ = "0.1.0"
