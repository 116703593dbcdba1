"""Learning qudit displacement amplitudes with Bell measurements of rho x rho^*,
generalized Clifford shadows, and the experiments comparing them."""
from .core import (AmplitudeTable, DensityMatrix, amplitudes, clock_shift, displacement,
                   displacement_observable, make_test_state)
from .bell import bell_distribution, sample_bell
from .learner import LearnerConfig, algorithm1, algorithm2, find_hypothesis, learn_amplitudes
from .shadows import CliffordElement, shadow_sample, synthesize_clifford, variance_oracle
from .experiments import distinguishing_trial, scaling_scan
from .results import SCHEMA_VERSION, ResultEnvelope

__version__ = "0.1.0"
