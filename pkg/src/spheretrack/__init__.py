"""Multi-agent target tracking on the unit sphere."""

__version__ = "0.1.0"

from .analysis import (EnergyBreakdown, RendezvousCondition, SpectralSummary, aux_functionals,
                       energy, matrix_M, matrix_Minf, spectrum, thm1_condition,
                       weighted_functionals, x_inf)
from .dynamics import (ControlMode, ModelParams, PeriodicControl, SystemState, ZeroControl,
                       extra_control_u1, main_rhs, system_rhs, target_rhs)
from .errors import (AdmissibilityError, AntipodalSingularity, AntipodalToTarget, ConfigError,
                     ConstraintBlowup, DegeneratePair, NonFiniteState, NonTangentControl,
                     RepeatedRoot, RequiresConstantSigma, SphereTrackError)
from .flatspace import (FlatConfig, FlatControl, FlatState, flat_rhs, qd_closed_form, run_flat,
                        xd_system)
from .frame import FrameState, StructuralState, frame_step, reconstruct, structural_rhs, to_structural
from .geom import admissible_rot, p_rot, rodrigues, skew
from .scenarios import figure_params, initial_state
from .sim import (DiagnosticsRecord, ExplicitInitial, FigureInitial, RandomInitial, SimConfig,
                  Trajectory, rk4_step, run_simulation, run_structural, run_sweep)
