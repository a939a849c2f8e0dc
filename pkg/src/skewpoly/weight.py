"""Even exponential weights w(x) = exp(-V(x)) with polynomial potential.

The potential is stored through its even-power coefficients,

    V(x) = sum_{k=1..d} u_{2k} * x^{2k} / (2k),

so the quartic family of interest is d = 2 with u_4 = 1 and u_2 = alpha:
V(x) = x^4/4 + alpha x^2/2.  The weight entering every moment integral
is w(x)^2 = exp(-2V(x)).
"""

from __future__ import annotations

import dataclasses
import json
from typing import NamedTuple, Sequence

from mpmath import mp

from .errors import NonIntegrableWeight, OutOfRangeEvaluation

# exp arguments beyond this magnitude are rejected rather than evaluated;
# they signal a caller bug (quadrature never leaves the truncation window)
_MAX_EXPONENT = mp.mpf(10) ** 9


@dataclasses.dataclass(frozen=True)
class WeightSpec:
    """Immutable description of one even exponential weight.

    alpha is kept separately because the d = 2 family is parameterized by
    it throughout; u_coeffs is the full tuple (u_2, u_4, ..., u_{2d}) as
    exact strings so a spec can be serialized without precision loss.
    """

    alpha: str
    degree_d: int
    u_coeffs: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.degree_d < 1:
            raise NonIntegrableWeight("potential degree must be at least 1")
        if len(self.u_coeffs) != self.degree_d:
            raise NonIntegrableWeight(
                f"expected {self.degree_d} coefficients, got {len(self.u_coeffs)}"
            )
        if mp.mpf(self.u_coeffs[-1]) <= 0:
            raise NonIntegrableWeight(
                "leading potential coefficient must be positive for a "
                "normalizable weight"
            )

    @property
    def alpha_mpf(self) -> "mp.mpf":
        return mp.mpf(self.alpha)

    def u(self, two_k: int) -> "mp.mpf":
        """Coefficient u_{2k}; zero outside the stored range."""
        if two_k % 2 != 0 or two_k <= 0:
            return mp.mpf(0)
        idx = two_k // 2 - 1
        if idx >= len(self.u_coeffs):
            return mp.mpf(0)
        return mp.mpf(self.u_coeffs[idx])

    def to_json(self) -> str:
        return json.dumps(
            {
                "alpha": self.alpha,
                "degree_d": self.degree_d,
                "u_coeffs": list(self.u_coeffs),
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "WeightSpec":
        data = json.loads(text)
        return cls(
            alpha=str(data["alpha"]),
            degree_d=int(data["degree_d"]),
            u_coeffs=tuple(str(c) for c in data["u_coeffs"]),
        )


def quartic_spec(alpha) -> WeightSpec:
    """The d = 2 spec V(x) = x^4/4 + alpha x^2/2."""
    return WeightSpec(alpha=str(alpha), degree_d=2, u_coeffs=(str(alpha), "1"))


def potential_coeffs(spec: WeightSpec) -> list:
    """Coefficients of V as a polynomial in x (index = power)."""
    coeffs = [mp.mpf(0)] * (2 * spec.degree_d + 1)
    for k in range(1, spec.degree_d + 1):
        coeffs[2 * k] = spec.u(2 * k) / (2 * k)
    return coeffs


def vprime_coeffs(spec: WeightSpec) -> list:
    """Coefficients of V' as a polynomial in x (odd powers only)."""
    coeffs = [mp.mpf(0)] * (2 * spec.degree_d)
    for k in range(1, spec.degree_d + 1):
        coeffs[2 * k - 1] = spec.u(2 * k)
    return coeffs


class WeightValues(NamedTuple):
    potential: "mp.mpf"
    potential_slope: "mp.mpf"
    weight: "mp.mpf"
    weight_squared: "mp.mpf"


def evaluate(spec: WeightSpec, x) -> WeightValues:
    """V, V', w and w^2 at a point, with an under/overflow guard."""
    x = mp.mpf(x)
    v = mp.mpf(0)
    vp = mp.mpf(0)
    x2 = x * x
    power = mp.mpf(1)
    for k in range(1, spec.degree_d + 1):
        power *= x2
        u2k = spec.u(2 * k)
        v += u2k * power / (2 * k)
        vp += u2k * power / x if x != 0 else mp.mpf(0)
    if abs(v) > _MAX_EXPONENT:
        raise OutOfRangeEvaluation(
            f"potential magnitude {mp.nstr(abs(v), 5)} at x={mp.nstr(x, 5)} "
            "exceeds the representable exponent budget"
        )
    w = mp.e ** (-v)
    return WeightValues(v, vp, w, w * w)


def weight_squared(spec: WeightSpec, x) -> "mp.mpf":
    """exp(-2 V(x)), the density of every moment integral."""
    x = mp.mpf(x)
    v = mp.mpf(0)
    x2 = x * x
    power = mp.mpf(1)
    for k in range(1, spec.degree_d + 1):
        power *= x2
        v += spec.u(2 * k) * power / (2 * k)
    if abs(v) > _MAX_EXPONENT:
        raise OutOfRangeEvaluation(
            f"potential magnitude {mp.nstr(abs(v), 5)} at x={mp.nstr(x, 5)} "
            "exceeds the representable exponent budget"
        )
    return mp.e ** (-2 * v)


def parse_alpha(value: Sequence[str] | str) -> str:
    """Validate an alpha string; returns it unchanged if mpf-parseable."""
    try:
        mp.mpf(str(value))
    except Exception as exc:
        raise NonIntegrableWeight(f"alpha value {value!r} is not a real number") from exc
    return str(value)
