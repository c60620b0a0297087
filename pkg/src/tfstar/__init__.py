"""Two-fluid Thomas-Fermi stellar ground-state solver.

Core pipeline: derive the bulk coefficients from a constant set, integrate
the coupled radial system from the center to the first vanishing density,
continue the survivor through the single-species atmosphere, classify the
regime (compact / critical / unbounded), and invert particle counts back to
central densities through the scaling structure.  A special-relativistic
variant and uniform-ball critical-mass diagnostics ride on the same kernels.
"""

__version__ = "0.1.0"

from .constants import (AdmissibilityWindows, CoefficientSet, ConstantSet,
                        RatioVerdict, check_ratio, derive_coefficients,
                        desk_constants, load_constants, ratio_window)
from .bulk import (BulkEvent, BulkOptions, BulkOutcome, BulkState,
                   initial_signs, integrate_bulk, series_start)
from .atmosphere import (AtmosphereKind, AtmosphereOutcome, AtmoOptions,
                         critical_slope, decaying_reference,
                         integrate_atmosphere, tail_mass)
from .special import (LaneEmdenSolution, SpecialSolution, lane_emden,
                      solve_kd, special_profile)
from .shoot import (AtmoSpecies, FullSolution, InvertOptions, ParticleCounts,
                    ShootOptions, SupportKind, apply_scaling, compact_window,
                    counts, invert_counts, regime_sweep, solve_profile)
from .energy import (EnergyBreakdown, MultiplierEstimate, dilation_scan,
                     el_residual, evaluate_energy, radial_potential)
from .relativity import (BallVerdict, ChandraSolution, CriticalMassReport,
                         RelEvent, RelSolution, ball_scan, chandra_single_fluid,
                         chandrasekhar_A, critical_mass_scan,
                         integrate_rel_profile, rel_balanced_center,
                         rel_existence_bound, rel_kinetic_energy,
                         uniform_ball_energy)
from .profiles import RadialProfile, TailInfo
from . import errors

__all__ = [name for name in dir() if not name.startswith("_")]
