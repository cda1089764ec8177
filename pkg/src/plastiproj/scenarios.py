"""Built-in scenarios used by the verification harness and the test suite."""

from __future__ import annotations

import numpy as np

from .catalog import scalar_fn, tensor_fn, vector_fn
from .stepper import ProblemSpec

# deviatoric loading direction diag(1, -1), packed
RADIAL_DIR = np.array([1.0, 0.0, -1.0])


def radial_0d_spec(n_steps: int = 2000, total_time: float = 2.0) -> ProblemSpec:
    """Single-point sweeping process under constant deviatoric drive, g = 1.

    Closed form: sigma(t) = min(t, 1/sqrt(2)) * diag(1, -1); the deviator
    grows linearly until its norm reaches the yield radius and then sticks.
    """
    return ProblemSpec(
        nu=1.0, T=total_time, N=n_steps, mode="0d",
        f=vector_fn("constant", {"value": [0, 0]}),
        h=tensor_fn("radial_deviatoric", {"amplitude": 1.0}),
        p=tensor_fn("constant", {}),
        g=scalar_fn("constant", {"value": 1.0}),
    )


def growing_yield_0d_spec(n_steps: int = 2000, total_time: float = 4.0) -> ProblemSpec:
    """Same drive with expanding yield radius g(t) = 1 + t.

    Contact happens at t* = 1/(sqrt(2)-1); afterwards the stress rides the
    boundary: sigma(t) = (1+t) diag(1,-1)/sqrt(2).
    """
    return ProblemSpec(
        nu=1.0, T=total_time, N=n_steps, mode="0d",
        f=vector_fn("constant", {"value": [0, 0]}),
        h=tensor_fn("radial_deviatoric", {"amplitude": 1.0}),
        p=tensor_fn("constant", {}),
        g=scalar_fn("linear_in_t", {"base": 1.0, "slope": 1.0}),
    )


def unit_square_spec(n_steps: int = 200, mesh_n: int = 16,
                     force: float = 8.0) -> ProblemSpec:
    """Unit square clamped on the left, constant downward body force.

    nu = 1, g = 1, p = 0, T = 1.  The force is strong enough that the yield
    constraint activates near the clamped edge well before the final time.
    """
    return ProblemSpec(
        nu=1.0, T=1.0, N=n_steps, mode="fem",
        f=vector_fn("constant", {"value": [0.0, -force]}),
        h=tensor_fn("constant", {}),
        p=tensor_fn("constant", {}),
        g=scalar_fn("constant", {"value": 1.0}),
        nx=mesh_n, ny=mesh_n, lx=1.0, ly=1.0, gamma1=("left",),
    )


def explicit_blowup_spec(n_steps: int = 10) -> ProblemSpec:
    """Stiff demonstration case where the explicit stress treatment diverges.

    Tiny viscosity, coarse time step, huge yield radius so the projection
    never caps the runaway stress.  Non-gating: used only to illustrate the
    conditional stability of the explicit variant.
    """
    bump = vector_fn("gaussian_bump_in_x",
                     {"value": [1.0, 0.0], "center": [0.5, 0.5], "width": 0.15})
    return ProblemSpec(
        nu=1e-4, T=1.0, N=n_steps, mode="fem",
        f=vector_fn("constant", {"value": [0.0, 0.0]}),
        h=tensor_fn("constant", {}),
        p=tensor_fn("constant", {}),
        g=scalar_fn("constant", {"value": 1e9}),
        v0=lambda pts: bump(0.0, pts),
        nx=16, ny=16, lx=1.0, ly=1.0, gamma1=("left", "right", "top", "bottom"),
    )
