"""Moment-integral pipeline: pairs and recursion bands by direct integration.

Multiplication by x acts on the derivative partners through a banded
matrix: x q_n = sum_m R_{n,m} p_m with R supported on |n - m| <= 4 plus
the forced parity pattern.  Three entries per pair index c are genuine
integrals,

    s_c = B(x q_{2c}, q_{2c+1}) / g_{2c}          (diagonal, even row)
    a_c = B(x q_{2c}, q_{2c+3}) / g_{2c+2}        (upper offdiagonal, even row)
    b_c = -B(x q_{2c+1}, q_{2c+2}) / g_{2c+2}     (upper offdiagonal, odd row)

and the rest of each band follows from the weighted self-duality of R
(conjugating by the normalization sequence maps R to its skew transpose):

    even row 2c:  {2c+4: -1, 2c+2: a_c, 2c: s_c,
                   2c-2: -b_{c-1} g_{2c}/g_{2c-2}, 2c-4: g_{2c}/g_{2c-4}}
    odd row 2c+1: {2c+5: -1, 2c+3: b_c, 2c+1: -s_c,
                   2c-1: -a_{c-1} g_{2c}/g_{2c-2}, 2c-3: g_{2c}/g_{2c-4}}

Rearranging each row for its top column yields the next two monic
polynomial parts, so the whole family unrolls from the seed pairs with
one normalization integral per new pair.
"""

from __future__ import annotations

import contextlib
import dataclasses

from mpmath import mp

from .bootstrap import bootstrap_d2
from .errors import ConfigError, PrecisionExhaustion
from .moments import MomentTable
from .polynomials import (
    SkewPolyPair,
    bilinear_form,
    make_pair,
    multiply_by_x,
    poly_add,
    poly_scale,
    skew_product,
)
from .precision import working
from .weight import WeightSpec


@dataclasses.dataclass(frozen=True)
class RecursionBand:
    """One row of the x-action matrix: column -> coefficient."""

    row_n: int
    entries: dict
    g_row: "mp.mpf"

    def entry(self, m: int) -> "mp.mpf":
        return self.entries.get(m, mp.mpf(0))


@dataclasses.dataclass
class IntegralRun:
    """Everything the integral pipeline produced for one configuration."""

    spec: WeightSpec
    n_max: int
    precision_bits: int
    pairs: list
    bands: list
    g: list
    off_even: dict
    off_odd: dict
    diag: dict
    band_residual: "mp.mpf"

    def gamma(self, c: int) -> "mp.mpf":
        """Product of the two offdiagonal couplings at pair index c."""
        return self.off_even[c] * self.off_odd[c]


class _ScalarCache:
    """Memoized integral scalars s_c, a_c, b_c over a fixed pair list."""

    def __init__(self, pairs, g, table):
        self.pairs = pairs
        self.g = g
        self.table = table
        self.diag: dict = {}
        self.off_even: dict = {}
        self.off_odd: dict = {}

    def s(self, c: int) -> "mp.mpf":
        if c not in self.diag:
            xq = multiply_by_x(self.pairs[2 * c].psi)
            self.diag[c] = bilinear_form(xq, self.pairs[2 * c + 1].psi, self.table) / self.g[c]
        return self.diag[c]

    def a(self, c: int) -> "mp.mpf":
        if c not in self.off_even:
            xq = multiply_by_x(self.pairs[2 * c].psi)
            self.off_even[c] = (
                bilinear_form(xq, self.pairs[2 * c + 3].psi, self.table) / self.g[c + 1]
            )
        return self.off_even[c]

    def b(self, c: int) -> "mp.mpf":
        if c not in self.off_odd:
            xq = multiply_by_x(self.pairs[2 * c + 1].psi)
            self.off_odd[c] = (
                -bilinear_form(xq, self.pairs[2 * c + 2].psi, self.table) / self.g[c + 1]
            )
        return self.off_odd[c]


def r_row(n: int, pairs, g, table: MomentTable, cache: _ScalarCache | None = None) -> RecursionBand:
    """Band of row n of the x-action matrix.

    The three integral entries are evaluated against the moment table;
    the sub-diagonal entries are filled through the weighted duality
    relation using the already-known normalization ratios.
    """
    if cache is None:
        cache = _ScalarCache(pairs, g, table)
    with working(table.precision_bits):
        return _r_row_inner(n, g, cache)


def _r_row_inner(n: int, g, cache: "_ScalarCache") -> RecursionBand:
    c = n // 2
    rho = g[c] / g[c - 1] if c >= 1 else mp.mpf(0)
    rho2 = g[c] / g[c - 2] if c >= 2 else mp.mpf(0)
    entries = {}
    if n % 2 == 0:
        entries[n + 4] = mp.mpf(-1)
        entries[n + 2] = cache.a(c)
        entries[n] = cache.s(c)
        if c >= 1:
            entries[n - 2] = -cache.b(c - 1) * rho
        if c >= 2:
            entries[n - 4] = rho2
    else:
        entries[n + 4] = mp.mpf(-1)
        entries[n + 2] = cache.b(c)
        entries[n] = -cache.s(c)
        if c >= 1:
            entries[n - 2] = -cache.a(c - 1) * rho
        if c >= 2:
            entries[n - 4] = rho2
    return RecursionBand(row_n=n, entries=entries, g_row=g[c])


def advance(
    band_even: RecursionBand,
    band_odd: RecursionBand,
    pairs,
    spec: WeightSpec,
    precision_bits: int | None = None,
):
    """Next two pairs from the two freshest band rows.

    Solving each row identity x q_row = sum_m R_{row,m} p_m for its top
    column (coefficient exactly -1) expresses the new monic part as
    -x q_row plus a combination of known parts.  Coefficient arithmetic
    happens at precision_bits when given, else at the ambient precision.
    """
    new_pairs = []
    ctx = working(precision_bits) if precision_bits is not None else contextlib.nullcontext()
    with ctx:
        for band in (band_even, band_odd):
            row = band.row_n
            top = row + 4
            acc = poly_scale(multiply_by_x(pairs[row].psi), -1)
            for m, coeff in band.entries.items():
                if m == top:
                    continue
                acc = poly_add(acc, poly_scale(pairs[m].phi, coeff))
            acc = acc[: top + 1]
            new_pairs.append(make_pair(top, acc, spec))
    return new_pairs[0], new_pairs[1]


def g_next(pair_even: SkewPolyPair, pair_odd: SkewPolyPair, table: MomentTable) -> "mp.mpf":
    """Normalization constant of a fresh pair; must stay positive."""
    with working(table.precision_bits):
        value = skew_product(pair_even, pair_odd, table)
    if not value > 0:
        raise PrecisionExhaustion(
            step=pair_even.index_n,
            detail="normalization constant lost positivity in the integral pipeline",
        )
    return value


def band_reconstruction_residual(band: RecursionBand, pairs) -> "mp.mpf":
    """Max-norm defect of x q_row minus its band expansion, relative."""
    row = band.row_n
    target = multiply_by_x(pairs[row].psi)
    acc = [mp.mpf(0)]
    for m, coeff in band.entries.items():
        acc = poly_add(acc, poly_scale(pairs[m].phi, coeff))
    diff = poly_add(target, poly_scale(acc, -1))
    scale = max(abs(ci) for ci in target)
    return max(abs(ci) for ci in diff) / scale


def run_integral(
    spec: WeightSpec, table: MomentTable, n_max: int, precision_bits: int
) -> IntegralRun:
    """Unroll pairs 0 .. n_max+5 and band rows 0 .. n_max+1.

    Two spare pairs beyond the band range keep every downstream
    consistency check (band reconstruction, duality re-integration)
    expressible without special-casing the top rows.
    """
    if n_max < 4 or n_max % 2 != 0:
        raise ConfigError(f"n_max must be an even integer >= 4, got {n_max}")
    with working(precision_bits):
        seed = bootstrap_d2(spec, table)
        pairs = list(seed.pairs)
        g = [seed.g0, seed.g2]
        cache = _ScalarCache(pairs, g, table)
        bands = []
        for c in range(n_max // 2 + 1):
            band_e = r_row(2 * c, pairs, g, table, cache)
            band_o = r_row(2 * c + 1, pairs, g, table, cache)
            bands.append(band_e)
            bands.append(band_o)
            pair_e, pair_o = advance(band_e, band_o, pairs, spec)
            pairs.append(pair_e)
            pairs.append(pair_o)
            g.append(g_next(pair_e, pair_o, table))
        worst = mp.mpf(0)
        for band in bands[: n_max + 1]:
            worst = max(worst, band_reconstruction_residual(band, pairs))
        return IntegralRun(
            spec=spec,
            n_max=n_max,
            precision_bits=precision_bits,
            pairs=pairs,
            bands=bands,
            g=g,
            off_even=dict(cache.off_even),
            off_odd=dict(cache.off_odd),
            diag=dict(cache.diag),
            band_residual=worst,
        )
