"""Published experiment set-ups: gains, target control and initial phases."""

import numpy as np

from .dynamics import ControlMode, ModelParams, PeriodicControl, SystemState

# six agents far from the target; used with full-information control
FIG1_Q = np.array([
    [0.8132, 0.4989, -0.2993],
    [0.7198, 0.4908, 0.4908],
    [-0.6758, -0.6991, 0.2330],
    [-0.7878, 0.5627, -0.2501],
    [-0.5440, -0.7504, 0.3752],
    [-0.8599, -0.3608, 0.3608],
])
FIG1_P = np.array([
    [0.1028, -0.1884, -0.0347],
    [-0.1168, 0.5118, -0.3405],
    [-0.0821, 0.0857, 0.0191],
    [-0.1454, -0.1506, 0.1189],
    [0.2220, -0.1040, 0.1137],
    [-0.0003, 0.3768, 0.3759],
])
FIG1_QG = np.array([-0.6451, 0.6605, -0.3840])
FIG1_PG = np.array([0.1761, 0.3646, 0.3311])

# six agents near the target; used with zero extra control
FIG3_Q = np.array([
    [-0.8147, -0.5366, 0.2193],
    [-0.4575, -0.8843, 0.0922],
    [-0.4335, -0.8173, 0.3794],
    [-0.8645, -0.2373, 0.4429],
    [-0.4420, -0.7998, 0.4060],
    [-0.4312, -0.6004, 0.6734],
])
FIG3_P = np.array([
    [0.0228, -0.0750, -0.0987],
    [0.2519, -0.1263, 0.0383],
    [0.0200, 0.0169, 0.0594],
    [0.0388, -0.1447, -0.0017],
    [0.0365, 0.1109, 0.2583],
    [0.0081, 0.0050, 0.0097],
])
FIG3_QG = np.array([-0.6324, -0.6324, 0.4472])
FIG3_PG = np.array([0.4712, -0.1742, 0.4199])

TARGET_AMPLITUDE = 0.5
FIG4B_CP_VALUES = (1.0, 2.0, 4.0, 8.0, 16.0)
FIG4B_PROBE_TIME = 100.0
FIG9_K0 = 1e4

FIGURES = ("1", "3", "4b", "5", "6", "7", "8", "9")


def raw_initial_state(figure):
    """Tabulated initial phases; 4 decimals, so only nearly admissible."""
    figure = str(figure).lower()
    if figure in ("1", "2", "5", "7", "8", "9"):
        return SystemState(0.0, FIG1_Q, FIG1_P, FIG1_QG, FIG1_PG)
    if figure in ("3", "4", "4a", "4b", "6"):
        return SystemState(0.0, FIG3_Q, FIG3_P, FIG3_QG, FIG3_PG)
    raise KeyError(f"no initial data for figure {figure!r}")


def initial_state(figure):
    """Tabulated initial data, normalized and tangent-projected to machine precision."""
    return raw_initial_state(figure).projected()


def figure_params(figure):
    figure = str(figure).lower()
    full = ModelParams(sigma=1.0, c_q=5.0, c_p=0.1, control=ControlMode.FULL_INFO)
    zero = ModelParams(sigma=1.0, c_q=4.0, c_p=4.0, control=ControlMode.ZERO)
    table = {
        "1": full, "2": full, "7": full,
        "8": full.with_(control=ControlMode.ZERO),
        "3": zero, "4": zero, "4a": zero, "4b": zero,
        "5": full.with_(psi=1.0),
        "6": zero.with_(psi=1.0),
        "9": full.with_(c_p=0.0, k0=FIG9_K0),
    }
    try:
        return table[figure]
    except KeyError:
        raise KeyError(f"unknown figure {figure!r}") from None


def figure_t_end(figure):
    return 300.0 if str(figure) in ("7", "8") else 200.0


def target_control():
    return PeriodicControl(TARGET_AMPLITUDE)
