"""Positive trace functionals on rearranged data.

Two families are provided.  The integral family sends f to c * int_0^1 f*,
which on an n x n matrix model reproduces c * (normalized trace).  The
singular family evaluates lim_{t->0} (1/psi(t)) int_0^t f* along a dyadic
scheme and is the model of a trace supported at the origin: it vanishes on
every bounded function and picks out the psi-slope of the tail.  The dyadic
extrapolation either stabilizes within a declared window or the evaluation
refuses with NonConvergentError; it never silently averages an oscillation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .stepfn import GridFn, decreasing_rearrangement, integrate
from .spaces import (
    DivergenceError,
    PsiFn,
    SpectralProfile,
    _integrable_near_zero,
    profile_integral,
    psi_log,
)

__all__ = [
    "TraceFunctional",
    "integral_trace",
    "singular_trace",
    "parse_trace",
    "NonConvergentError",
    "eval_functional",
    "eval_on_operator",
]


class NonConvergentError(ArithmeticError):
    """The dyadic extrapolation did not stabilize; carries the sampled tail."""

    def __init__(self, message: str, values: Sequence[float]):
        super().__init__(message)
        self.values = list(values)


@dataclass(frozen=True)
class TraceFunctional:
    """kind 'integral' (weight c >= 0) or 'singular' (Marcinkiewicz limit for psi)."""

    kind: str
    c: float = 1.0
    psi: Optional[PsiFn] = None
    k_min: int = 8
    k_max: int = 40
    delta_conv: float = 1e-6

    def __post_init__(self):
        if self.kind not in ("integral", "singular"):
            raise ValueError(f"unknown trace kind {self.kind!r}")
        if self.kind == "integral" and not (self.c >= 0.0 and math.isfinite(self.c)):
            raise ValueError("integral trace weight must be finite and nonnegative")
        if self.kind == "singular":
            if self.psi is None:
                raise ValueError("singular trace needs a psi function")
            if not 1 <= self.k_min < self.k_max:
                raise ValueError("need 1 <= k_min < k_max")

    @property
    def name(self) -> str:
        if self.kind == "integral":
            return f"integral:{self.c:g}"
        return f"singular:{self.psi.name}"


def integral_trace(c: float = 1.0) -> TraceFunctional:
    return TraceFunctional("integral", c=float(c))


def singular_trace(psi: Optional[PsiFn] = None) -> TraceFunctional:
    return TraceFunctional("singular", psi=psi or psi_log())


def parse_trace(text: str) -> TraceFunctional:
    s = text.strip().lower()
    if s.startswith("integral:"):
        return integral_trace(float(s[len("integral:"):]))
    if s == "integral":
        return integral_trace(1.0)
    if s == "singular:psi-log":
        return singular_trace()
    raise ValueError(
        f"unknown trace {text!r}; choose integral:<c> or singular:psi-log"
    )


def _head_integral(f, t: float) -> float:
    """int_0^t of an already-nonincreasing argument."""
    if isinstance(f, GridFn):
        return integrate(f, 0.0, t)
    return profile_integral(f, 0.0, t)


def _dyadic_limit(phi: TraceFunctional, f) -> float:
    ratios = []
    for k in range(phi.k_min, phi.k_max + 1):
        t_k = 2.0 ** (-k)
        ratios.append(_head_integral(f, t_k) / phi.psi(t_k))
    window = ratios[-5:]
    if max(window) - min(window) > phi.delta_conv:
        raise NonConvergentError(
            f"dyadic scheme for {phi.name} did not stabilize: last window "
            f"spread {max(window) - min(window):.3e} exceeds {phi.delta_conv:.1e}",
            ratios,
        )
    return window[-1]


def _eval_nonincreasing(phi: TraceFunctional, f) -> float:
    """phi on data already in decreasing-rearrangement form."""
    if phi.kind == "integral":
        if isinstance(f, SpectralProfile):
            if _integrable_near_zero(f) is False:
                raise DivergenceError(
                    f"profile {f.name!r} is not integrable; integral trace is infinite"
                )
            return phi.c * profile_integral(f, 0.0, 1.0)
        return phi.c * integrate(f, 0.0, 1.0)
    return _dyadic_limit(phi, f)


def eval_functional(phi: TraceFunctional, f, signed: bool = False) -> float:
    """Evaluate the trace functional on a grid function or registered profile.

    Unsigned evaluation requires nonnegative data.  With signed=True a grid
    function is split into positive and negative parts first; the result is
    phi(f+) - phi(f-), each part rearranged on its own.
    """
    if isinstance(f, SpectralProfile):
        return _eval_nonincreasing(phi, f)
    if not isinstance(f, GridFn):
        raise TypeError(f"cannot evaluate a trace on {type(f).__name__}")
    v = f.values
    if signed:
        pos = decreasing_rearrangement(GridFn(np.clip(v, 0.0, None)))
        neg = decreasing_rearrangement(GridFn(np.clip(-v, 0.0, None)))
        return _eval_nonincreasing(phi, pos) - _eval_nonincreasing(phi, neg)
    if np.any(v < 0.0):
        raise ValueError("unsigned trace evaluation requires nonnegative values")
    return _eval_nonincreasing(phi, decreasing_rearrangement(f))


def eval_on_operator(phi: TraceFunctional, a) -> float:
    """phi applied to a self-adjoint matrix model through its eigenvalue data.

    Only integral functionals act nontrivially on matrix models (every matrix
    function is bounded, so singular functionals vanish on them by design);
    asking for a singular trace here is a usage error, not a zero.
    """
    from .matmodel import MatrixOperator, mu_neg_part, mu_pos_part

    if not isinstance(a, MatrixOperator):
        raise TypeError("eval_on_operator expects a MatrixOperator")
    if not a.self_adjoint:
        raise ValueError("operator trace evaluation requires a self-adjoint input")
    if phi.kind != "integral":
        raise ValueError(
            "singular functionals vanish on matrix models; evaluate them on "
            "profiles or grid functions instead"
        )
    return _eval_nonincreasing(phi, mu_pos_part(a)) - _eval_nonincreasing(phi, mu_neg_part(a))
