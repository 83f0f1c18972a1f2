"""Fast, sloshing-free transport of particles in a moving harmonic trap.

Trajectory families, Fourier-space sloshing prediction, spectral correction,
an RK4 dynamics simulator with three force models and a decaying-sine
analysis of stop-and-probe data.
"""
from .analysis import (DecayingSineFit, FitError, decaying_sine, extract_sloshing, fit_decaying_sine,
                       tof_phase_shift, tof_prefactor)
from .correction import (CorrectionError, CorrectionParams, CorrectionSolution, amplitude_sweep,
                         apply_correction, correction_term, frequency_sensitivity_sweep, solve_correction)
from .kernels import BACKEND
from .potential import (EnsembleMoments, ForceModel, TrapConfig, axial_force, axial_potential,
                        effective_frequency, frequency_ratio, load_trap_config,
                        radial_variance_from_aspect)
from .simulator import (EnsembleState, IntegratorConfig, Observables, ParticleState, ProbeDataset,
                        Trajectory, integrate, sample_thermal_ensemble, simulate_transport,
                        stop_and_probe_scan, temperature_for_spread, thermal_rms, time_of_flight)
from .sloshing import (QuadratureError, SloshingResult, amplitude_vs_duration_sweep, excitation_energy,
                       find_zero_durations, sloshing_residual)
from .trajectory import (BoundaryReport, Family, Frame, MotionPlan, TransportRequest, build_trap_plan,
                         check_boundaries, custom_plan, quintic_plan, read_plan_csv, septic_plan,
                         sine_plan, static_plan, trap_from_atom, triangular_plan, write_plan_csv)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
