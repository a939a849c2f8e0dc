"""Dense polynomial arithmetic and the skew-symmetric product.

Polynomials are coefficient sequences indexed by power.  A pair couples
the monic polynomial part p_n of phi_n = w * p_n with the polynomial
part q_n of its derivative partner psi_n = phi_n' = w * q_n, where

    q_n = p_n' - V' p_n.

Every integral the pipelines need reduces to the bilinear form

    B(u, v) = sum_{i,j} u_i v_j M_{i+j}

over the even moment table (odd orders vanish), so no quadrature happens
outside the moments module.  The skew product of two pairs is
B(p_n, q_m); integration by parts makes it antisymmetric exactly.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

from mpmath import mp

from .errors import InternalConsistencyFailure
from .moments import MomentTable
from .precision import working
from .weight import WeightSpec, vprime_coeffs


def trim(u: Sequence) -> list:
    """Drop exactly-zero leading coefficients."""
    out = list(u)
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return out


def poly_add(u: Sequence, v: Sequence) -> list:
    n = max(len(u), len(v))
    zero = mp.mpf(0)
    return [
        (u[i] if i < len(u) else zero) + (v[i] if i < len(v) else zero)
        for i in range(n)
    ]


def poly_scale(u: Sequence, c) -> list:
    c = mp.mpf(c)
    return [c * ui for ui in u]


def poly_mul(u: Sequence, v: Sequence) -> list:
    out = [mp.mpf(0)] * (len(u) + len(v) - 1)
    for i, ui in enumerate(u):
        if not ui:
            continue
        for j, vj in enumerate(v):
            if vj:
                out[i + j] += ui * vj
    return out


def poly_diff(u: Sequence) -> list:
    return [i * u[i] for i in range(1, len(u))] or [mp.mpf(0)]


def multiply_by_x(u: Sequence) -> list:
    return [mp.mpf(0)] + list(u)


def poly_eval(u: Sequence, x) -> "mp.mpf":
    x = mp.mpf(x)
    acc = mp.mpf(0)
    for c in reversed(list(u)):
        acc = acc * x + c
    return acc


def weighted_derivative(u: Sequence, spec: WeightSpec) -> list:
    """Polynomial part of (w u)' / w, i.e. u' - V' u."""
    vp = vprime_coeffs(spec)
    return poly_add(poly_diff(u), poly_scale(poly_mul(vp, u), -1))


def psi_from_phi(phi_coeffs: Sequence, spec: WeightSpec) -> list:
    """Derivative partner q = p' - V' p of a polynomial part p."""
    return weighted_derivative(phi_coeffs, spec)


def bilinear_form(u: Sequence, v: Sequence, table: MomentTable) -> "mp.mpf":
    """sum u_i v_j M_{i+j}; odd total orders contribute exactly zero.

    Evaluation runs at the table's precision regardless of the ambient
    mpmath context, so callers cannot silently degrade a high-precision
    table to the interpreter default.
    """
    with working(table.precision_bits):
        terms = []
        for i, ui in enumerate(u):
            if not ui:
                continue
            for j, vj in enumerate(v):
                if not vj:
                    continue
                k = i + j
                if k % 2 == 0:
                    terms.append(ui * vj * table.moment(k))
        return mp.fsum(terms) if terms else mp.mpf(0)


@dataclasses.dataclass(frozen=True)
class SkewPolyPair:
    """One polynomial of the family: monic part plus derivative partner.

    Invariants enforced at construction: p has degree index_n with leading
    coefficient exactly 1, q has degree index_n + 2d - 1 with leading
    coefficient exactly -u_{2d}, and both respect the parity of index_n
    with exact zeros in the off-parity slots.  The pipelines produce these
    exactly, so violations indicate real bugs, not roundoff.
    """

    index_n: int
    phi: tuple
    psi: tuple

    @property
    def parity(self) -> str:
        return "even" if self.index_n % 2 == 0 else "odd"

    @property
    def degree(self) -> int:
        return len(self.phi) - 1


def make_pair(index_n: int, phi_coeffs: Sequence, spec: WeightSpec) -> SkewPolyPair:
    """Build and validate a pair from the monic polynomial part."""
    p = [mp.mpf(c) for c in phi_coeffs]
    if len(p) != index_n + 1:
        raise InternalConsistencyFailure(
            "pair degree", f"index {index_n} but {len(p)} coefficients"
        )
    if p[-1] != 1:
        raise InternalConsistencyFailure(
            "monic leading coefficient",
            f"index {index_n} leading {mp.nstr(p[-1], 12)}",
        )
    for pos, c in enumerate(p):
        if (pos - index_n) % 2 != 0 and c != 0:
            raise InternalConsistencyFailure(
                "parity purity",
                f"index {index_n} has nonzero coefficient at power {pos}",
            )
    q = psi_from_phi(p, spec)
    expected_deg = index_n + 2 * spec.degree_d - 1
    if len(q) - 1 != expected_deg or q[-1] != -spec.u(2 * spec.degree_d):
        raise InternalConsistencyFailure(
            "derivative partner leading structure",
            f"index {index_n} partner degree {len(q) - 1}",
        )
    return SkewPolyPair(index_n=index_n, phi=tuple(p), psi=tuple(q))


def skew_product(pair_n: SkewPolyPair, pair_m: SkewPolyPair, table: MomentTable) -> "mp.mpf":
    """Skew product <n, m> = B(p_n, q_m); antisymmetric up to table error."""
    return bilinear_form(pair_n.phi, pair_m.psi, table)
