"""
Built-in point evaluators for nonpolynomial scalar relations.

Evaluators are looked up by name from relation spec files: ``"tanh"``,
``"relu"``, ``"sat"`` (unit limit) or ``"sat(<limit>)"``.
"""

import re
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import mpmath
import numpy as np

from quadcert.exceptions import ParseError, PreconditionError


@dataclass(frozen=True)
class Evaluator:
    """
    Vectorized point evaluator x -> y.

    Args:
        name: registry name, including parameters (e.g. 'sat(2)')
        func: numpy function evaluating the relation elementwise
        lipschitz: Lipschitz bound valid on the whole real line
        symmetry: 'none', 'odd' or 'even'
        breakpoints: points where the evaluator changes branch
        mp_func: scalar mpmath function, required for Taylor approximants
    """

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    symmetry: str = "none"
    breakpoints: Tuple[float, ...] = ()
    mp_func: Optional[Callable] = None

    def __call__(self, x):
        return self.func(np.asarray(x, dtype=float))

    def taylor_coefficients(self, center: float, degree: int):
        """Ascending Taylor coefficients around ``center`` (in powers of x - center)."""
        if self.mp_func is None:
            raise PreconditionError(f"Evaluator '{self.name}' is not smooth; no Taylor expansion")
        with mpmath.workdps(40):
            coeffs = mpmath.taylor(self.mp_func, mpmath.mpf(center), degree)
        # chop the round-off that numerical differentiation leaves on vanishing terms
        return [0.0 if abs(c) < mpmath.mpf(10) ** -25 else float(c) for c in coeffs]


def _tanh():
    return Evaluator("tanh", np.tanh, 1.0, "odd", (), mpmath.tanh)


def _relu():
    return Evaluator("relu", lambda x: np.maximum(x, 0.0), 1.0, "none", (0.0,))


def _sat(limit=1.0):
    limit = float(limit)
    if limit <= 0:
        raise PreconditionError("Saturation limit must be positive")
    name = "sat" if limit == 1.0 else f"sat({limit!r})"
    return Evaluator(name, lambda x: np.clip(x, -limit, limit), 1.0, "odd", (-limit, limit))


EVALUATORS = {
    "tanh": _tanh,
    "relu": _relu,
    "sat": _sat,
}

_CALL = re.compile(r"^\s*([a-z_]+)\s*(?:\(\s*([^)]*)\s*\))?\s*$")


def get_evaluator(spec) -> Evaluator:
    """
    Resolve an evaluator from a name string or a ``{"name": ..., **params}`` dict.

    Raises:
        ParseError: for unknown names or malformed parameters
    """
    if isinstance(spec, Evaluator):
        return spec
    if isinstance(spec, dict):
        params = {k: v for k, v in spec.items() if k != "name"}
        name = spec.get("name")
        args = []
    else:
        match = _CALL.match(str(spec))
        if match is None:
            raise ParseError(f"Malformed evaluator name '{spec}'")
        name, raw = match.group(1), match.group(2)
        try:
            args = [float(a) for a in raw.split(",")] if raw else []
        except ValueError as exc:
            raise ParseError(f"Malformed evaluator parameters in '{spec}'") from exc
        params = {}
    if name not in EVALUATORS:
        raise ParseError(f"Unknown evaluator '{name}'. Known: {sorted(EVALUATORS)}")
    try:
        return EVALUATORS[name](*args, **params)
    except TypeError as exc:
        raise ParseError(f"Bad parameters for evaluator '{name}': {exc}") from exc
