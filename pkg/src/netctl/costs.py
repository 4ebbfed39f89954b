"""Edge cost functions and their vectorised evaluation.

Every cost is a finite sum of power terms ``a * f**q`` with ``a >= 0`` and
``q >= 0``.  Integer-degree polynomials are the common case; a single
real-exponent monomial is supported for Pigou-type templates with
non-integer degree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np


@dataclass(frozen=True)
class CostPolynomial:
    """Polynomial cost ``c(f) = sum_j a_j f**j``."""

    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coeffs = tuple(float(a) for a in self.coefficients)
        if not coeffs:
            coeffs = (0.0,)
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        nonzero = [j for j, a in enumerate(self.coefficients) if a != 0.0]
        return nonzero[-1] if nonzero else 0

    def terms(self) -> list[tuple[float, float]]:
        return [(a, float(j)) for j, a in enumerate(self.coefficients)]

    def marginal(self) -> "CostPolynomial":
        """Marginal cost ``c(z) + z c'(z)``: coefficients ``a_j -> (j+1) a_j``."""
        return CostPolynomial(tuple((j + 1) * a for j, a in enumerate(self.coefficients)))

    def __call__(self, f):
        return np.polynomial.polynomial.polyval(f, self.coefficients)

    def to_json(self) -> dict:
        return {"coeffs": list(self.coefficients)}


@dataclass(frozen=True)
class PowerCost:
    """Monomial cost ``c(f) = coefficient * f**power`` with a real power."""

    power: float
    coefficient: float = 1.0

    @property
    def degree(self) -> float:
        return self.power

    def terms(self) -> list[tuple[float, float]]:
        return [(float(self.coefficient), float(self.power))]

    def marginal(self) -> "PowerCost":
        return PowerCost(self.power, self.coefficient * (self.power + 1.0))

    def __call__(self, f):
        return self.coefficient * np.power(f, self.power)

    def to_json(self) -> dict:
        return {"power": self.power, "coefficient": self.coefficient}


Cost = Union[CostPolynomial, PowerCost]


def monomial(p: float, coefficient: float = 1.0) -> Cost:
    """Return ``coefficient * f**p``, as a polynomial when ``p`` is integral."""
    if float(p).is_integer():
        k = int(p)
        return CostPolynomial((0.0,) * k + (float(coefficient),))
    return PowerCost(float(p), float(coefficient))


class _TermTable:
    """Coefficient/exponent matrices for ``sum_t K[e, t] * f_e ** Q[e, t]``."""

    def __init__(self, coef: np.ndarray, expo: np.ndarray):
        # zero coefficients get exponent 0 so that 0 * 0**negative never yields nan
        self.coef = coef
        self.expo = np.where(coef == 0.0, 0.0, expo)

    def __call__(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        with np.errstate(divide="ignore"):
            return (self.coef * np.power(f[..., None], self.expo)).sum(axis=-1)


class EdgeCostArray:
    """Evaluates all edge costs (and derivatives/integrals) on load vectors.

    Accepts loads of shape ``(..., m)`` so a batch of candidate load vectors
    can be evaluated at once.
    """

    def __init__(self, costs: Sequence[Cost]):
        self.costs = tuple(costs)
        terms = [c.terms() for c in self.costs]
        width = max((len(t) for t in terms), default=1)
        coef = np.zeros((len(terms), width))
        expo = np.zeros((len(terms), width))
        for e, row in enumerate(terms):
            for t, (a, q) in enumerate(row):
                coef[e, t] = a
                expo[e, t] = q
        self.value = _TermTable(coef, expo)
        self.derivative = _TermTable(coef * expo, expo - 1.0)
        self.second_derivative = _TermTable(coef * expo * (expo - 1.0), expo - 2.0)
        self.integral = _TermTable(coef / (expo + 1.0), expo + 1.0)

    def __len__(self) -> int:
        return len(self.costs)
