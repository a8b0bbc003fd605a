from .core import (Grid, GridState, HyperbolicityLoss, NumericalBlowup, Solver, SupportViolation,
                   acceleration, compile_coefficients, step, zero_state)
from .initial import PROFILES, ProfileError, make_initial_data, profile
from .sampler import HyperboloidSample, HyperboloidSampler, hstar_points
from .run import IncompleteSampleError, RayRecorder, RunFailure, RunResult, run_and_sample
from .checkpoint import load_checkpoint, save_checkpoint
