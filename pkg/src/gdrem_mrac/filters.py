"""First-order stable filters ``1/(s + gain)`` as explicit ODE right-hand sides.

Filters never integrate themselves; whoever owns the state advances it with
one integrator so that every filter in a loop moves in lockstep.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from ._jit import njit
from .errors import ShapeError


@njit
def first_order_rhs(gain, state, inp):
    return -gain * state + inp


@dataclass(frozen=True)
class FirstOrderFilter:
    gain: float
    state: np.ndarray
    initial_state: np.ndarray = field(default=None)

    def __post_init__(self):
        if not self.gain > 0:
            raise ValueError(f"filter gain must be positive, got {self.gain}")
        state = np.array(self.state, dtype=np.float64)
        object.__setattr__(self, "state", state)
        init = state.copy() if self.initial_state is None else np.array(self.initial_state, dtype=np.float64)
        if init.shape != state.shape:
            raise ShapeError(f"initial_state shape {init.shape} != state shape {state.shape}")
        object.__setattr__(self, "initial_state", init)

    @classmethod
    def zeros(cls, gain, shape):
        return cls(gain=gain, state=np.zeros(shape))

    @property
    def shape(self):
        return self.state.shape

    def with_state(self, state):
        state = np.asarray(state, dtype=np.float64)
        if state.shape != self.state.shape:
            raise ShapeError(f"filter state shape is fixed at {self.state.shape}, got {state.shape}")
        return replace(self, state=state, initial_state=self.initial_state)


def filter_derivative(f, inp):
    """``d state/dt = -gain * state + input``."""
    inp = np.asarray(inp, dtype=np.float64)
    if inp.shape != f.state.shape:
        raise ShapeError(f"filter input shape {inp.shape} != state shape {f.state.shape}")
    return -f.gain * f.state + inp
