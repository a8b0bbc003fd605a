from .energy import (conformal_parts, density_standard, density_standard_frame, energy_conformal,
                     energy_standard, weighted_gradient_l2, weighted_l2)
from .fit import FitError, FitResult, fit_decay
from .series import (BootstrapVerdict, EnergyRecord, EnergySeries, bootstrap_monitor, fcon_accumulate,
                     fcon_constants, read_csv, record_from_samples, relative_drift, sobolev_ratio,
                     weighted_l2_monitor)
from .tower import DerivativeTower, TowerSummary, build_tower, summarize, tower_words
