"""Closed-form seed pairs for the quartic weight.

The first four monic polynomial parts are forced by skew-orthogonality
alone.  Degrees 0 and 1 are free (1 and x); degree 2 needs one even
correction and degree 3 one odd correction, both expressible directly in
moments:

    p_2 = x^2 + c0,   c0 = -(M_2 - (M_6 + alpha M_4)) / (M_0 - (M_4 + alpha M_2))
    p_3 = x^3 + c1 x, c1 = -(M_6 + alpha M_4) / (M_4 + alpha M_2)

These come from requiring <p_2, q_1> = 0 and <p_3, q_0> = 0 after writing
each product out over the moment table.  The denominators are values of
skew products of lower pairs, so their vanishing means the skew form is
degenerate and nothing downstream is defined.
"""

from __future__ import annotations

import dataclasses

from mpmath import mp

from .errors import DegenerateNormalization, UnsupportedDegree
from .moments import MomentTable
from .polynomials import SkewPolyPair, make_pair, skew_product
from .precision import ulp_threshold, working
from .weight import WeightSpec


@dataclasses.dataclass(frozen=True)
class BootstrapResult:
    """Seed pairs 0..3 with their normalization constants."""

    pairs: tuple
    g0: "mp.mpf"
    g2: "mp.mpf"
    c0_deg2: "mp.mpf"
    c1_deg3: "mp.mpf"


def bootstrap_d2(spec: WeightSpec, table: MomentTable) -> BootstrapResult:
    """Construct pairs 0..3 from the moment table (quartic weights only)."""
    if spec.degree_d != 2:
        raise UnsupportedDegree(
            f"closed-form bootstrap covers degree d = 2, got d = {spec.degree_d}"
        )
    with working(table.precision_bits):
        alpha = spec.alpha_mpf
        m0, m2 = table.moment(0), table.moment(2)
        m4, m6 = table.moment(4), table.moment(6)
        den2 = m0 - (m4 + alpha * m2)
        den3 = m4 + alpha * m2
        tiny = ulp_threshold(table.precision_bits, -8) * max(m0, m4, abs(alpha) * m2, mp.mpf(1))
        if abs(den2) < tiny:
            raise DegenerateNormalization("degree-2 seed denominator")
        if abs(den3) < tiny:
            raise DegenerateNormalization("degree-3 seed denominator")
        c0 = -(m2 - (m6 + alpha * m4)) / den2
        c1 = -(m6 + alpha * m4) / den3
        one = mp.mpf(1)
        zero = mp.mpf(0)
        pairs = (
            make_pair(0, [one], spec),
            make_pair(1, [zero, one], spec),
            make_pair(2, [c0, zero, one], spec),
            make_pair(3, [zero, c1, zero, one], spec),
        )
        g0 = skew_product(pairs[0], pairs[1], table)
        g2 = skew_product(pairs[2], pairs[3], table)
        if g0 <= 0 or g2 <= 0:
            raise DegenerateNormalization("seed normalization constants")
        return BootstrapResult(pairs=pairs, g0=g0, g2=g2, c0_deg2=c0, c1_deg3=c1)
