"""gsscrit: numerical bound-state stability analysis for Hamiltonian PDEs.

Two models are instantiated, the single-power nonlinear Klein-Gordon equation
(radial, any dimension) and the double-power NLS on the line.  The package
computes ground-state profiles, the curve d(w) = E - wQ along the family and
its derivatives, the low spectrum of the linearized operator, modulation
coordinates around the orbit, and runs the dynamics that test a stability
verdict, including the degenerate case d''(w) = 0.
"""
from .core import (GssError, ModelSpec, NoGroundStateError, NonConvergenceError, OutOfTubeError,
                   SingularSystemError, State, apply_symmetry, evaluate_action, evaluate_charge,
                   evaluate_energy)
from .grid import RadialGrid
from .profiles import (Profile, ProfileFamily, bound_state, closed_form_profile_1d, shoot_amplitude,
                       solve_profile)
from .dcurve import (DCurveTable, StabilityVerdict, build_d_curve, build_psi, classify_stability,
                     eta_functions, find_critical_frequency, solve_sigma)
from .spectral import SpectralReport, check_spectral_assumptions, estimate_coercivity
from .modulation import ModulationCoords, functional_A, functional_P, orbital_distance, solve_modulation
from .dynamics import (TrajectoryLog, evolve_nlkg, evolve_nls, run_instability_experiment,
                       run_stability_experiment)

__version__ = "0.1.0"
