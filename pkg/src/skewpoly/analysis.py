"""Validation reports: Gram structure, band duality, zeros, cross-checks.

Everything here consumes finished pipeline output and measures it
against structure that must hold exactly in exact arithmetic, so every
report reduces to "how far from exact, relative to the natural scale".
"""

from __future__ import annotations

import dataclasses

from mpmath import mp

from .moments import MomentTable
from .polynomials import (
    SkewPolyPair,
    bilinear_form,
    multiply_by_x,
    poly_diff,
    poly_eval,
    skew_product,
)
from .precision import working
from .recursion_diffeq import NormalizationLedger, identity_terms
from .recursion_integral import IntegralRun


# ---------------------------------------------------------------------------
# Gram structure


@dataclasses.dataclass
class GramReport:
    """Skew products of the leading block against their target pattern."""

    dimension: int
    matrix: list
    g_sequence: list
    max_residual: "mp.mpf"
    worst_entry: tuple


def gram_report(pairs, g, table: MomentTable, dimension: int) -> GramReport:
    """Evaluate all skew products of the leading dimension x dimension block.

    The target is g_n on the first superdiagonal of each 2x2 pair block,
    its negative below, zero elsewhere; each deviation is normalized by
    the smaller participating normalization constant.
    """
    matrix = []
    worst = mp.mpf(0)
    worst_entry = (0, 0)
    with working(table.precision_bits):
        for i in range(dimension):
            row = []
            for j in range(dimension):
                value = skew_product(pairs[i], pairs[j], table)
                target = mp.mpf(0)
                if i % 2 == 0 and j == i + 1:
                    target = g[i // 2]
                elif i % 2 == 1 and j == i - 1:
                    target = -g[i // 2]
                residual = abs(value - target) / g[min(i, j) // 2]
                if residual > worst:
                    worst = residual
                    worst_entry = (i, j)
                row.append(value)
            matrix.append(row)
        g_sequence = [g[i // 2] for i in range(dimension)]
    return GramReport(
        dimension=dimension,
        matrix=matrix,
        g_sequence=g_sequence,
        max_residual=worst,
        worst_entry=worst_entry,
    )


# ---------------------------------------------------------------------------
# Band duality


@dataclasses.dataclass
class DualityReport:
    """Band entries re-derived by integration versus the stored band."""

    rows_checked: int
    entries_checked: int
    max_deviation: "mp.mpf"
    max_entry: "mp.mpf"
    worst_entry: tuple


def duality_report(run: IntegralRun, table: MomentTable, dimension: int) -> DualityReport:
    """Re-integrate every reachable band entry and compare.

    Each column m of the x-action band has the integral representation

        R_{n,m} = +B(x q_n, q_{m+1}) / g_m   for even m
        R_{n,m} = -B(x q_n, q_{m-1}) / g_m   for odd m

    (g_m meaning the normalization of column m's pair).  Entries filled
    through the weighted duality relation, and the structural +-1 at the
    band edges, must agree with these integrals to working precision.
    Entries whose integral partner polynomial lies beyond the built
    range are skipped.
    """
    pairs = run.pairs
    g = run.g
    top_pair = len(pairs) - 1
    worst = mp.mpf(0)
    worst_entry = (0, 0)
    biggest = mp.mpf(0)
    checked = 0
    rows = 0
    with working(table.precision_bits):
        for band in run.bands:
            n = band.row_n
            if n > dimension:
                break
            rows += 1
            xq = multiply_by_x(pairs[n].psi)
            for m, value in band.entries.items():
                partner = m + 1 if m % 2 == 0 else m - 1
                if partner > top_pair:
                    continue
                reference = bilinear_form(xq, pairs[partner].psi, table) / g[m // 2]
                if m % 2 == 1:
                    reference = -reference
                deviation = abs(value - reference)
                checked += 1
                biggest = max(biggest, abs(value))
                if deviation > worst:
                    worst = deviation
                    worst_entry = (n, m)
    return DualityReport(
        rows_checked=rows,
        entries_checked=checked,
        max_deviation=worst,
        max_entry=biggest,
        worst_entry=worst_entry,
    )


# ---------------------------------------------------------------------------
# Real zero structure


def _parity_reduce(coeffs):
    """Write p(x) = x^t r(x^2); returns (t, coefficients of r)."""
    t = 0
    while t < len(coeffs) and coeffs[t] == 0:
        t += 1
    if t == len(coeffs):
        raise ValueError("zero polynomial has no zero structure")
    reduced = [mp.mpf(c) for c in coeffs[t::2]]
    return t, reduced


def _normalize(poly):
    scale = max(abs(c) for c in poly)
    if scale == 0:
        return []
    return [c / scale for c in poly]


def _poly_divmod_remainder(num, den):
    """Remainder of polynomial division, coefficients ascending."""
    rem = list(num)
    dlead = den[-1]
    dd = len(den) - 1
    while len(rem) - 1 >= dd and any(rem):
        shift = len(rem) - 1 - dd
        factor = rem[-1] / dlead
        for i, c in enumerate(den):
            rem[shift + i] -= factor * c
        rem.pop()
        while len(rem) > dd and rem and abs(rem[-1]) == 0:
            rem.pop()
    return rem


def _sturm_chain(r):
    """Sturm sequence of r, each element scaled to unit max coefficient."""
    chain = [_normalize(r)]
    d = poly_diff(r)
    if any(d):
        chain.append(_normalize(d))
    while len(chain[-1]) > 1:
        rem = _poly_divmod_remainder(chain[-2], chain[-1])
        rem = [-c for c in rem]
        if not any(rem):
            break
        chain.append(_normalize(rem))
    return chain


def _sign_changes(chain, y):
    signs = []
    for poly in chain:
        v = poly_eval(poly, y)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    flips = 0
    for prev, cur in zip(signs, signs[1:]):
        if prev != cur:
            flips += 1
    return flips


def _count_in(chain, lo, hi):
    """Distinct roots of the chain head in the half-open interval (lo, hi]."""
    return _sign_changes(chain, lo) - _sign_changes(chain, hi)


def _cauchy_bound(r):
    lead = abs(r[-1])
    return 1 + max(abs(c) for c in r[:-1]) / lead if len(r) > 1 else mp.mpf(1)


def _isolate_roots(chain, lo, hi, count, width):
    """Isolating intervals via Sturm-count bisection; handles any multiplicity."""
    if count == 0:
        return []
    if count == 1 and hi - lo < width:
        return [(lo, hi)]
    mid = (lo + hi) / 2
    # avoid splitting exactly on a root of the head polynomial
    if poly_eval(chain[0], mid) == 0:
        mid += (hi - lo) / mp.mpf(1009)
    left = _count_in(chain, lo, mid)
    out = _isolate_roots(chain, lo, mid, left, width)
    out.extend(_isolate_roots(chain, mid, hi, count - left, width))
    return out


@dataclasses.dataclass
class ZeroReport:
    """Real zeros of one polynomial against its parity-forced expectation."""

    which: str
    index_n: int
    degree: int
    real_zero_count: int
    claimed_count: int
    matches_claim: bool
    multiple_roots_flag: bool
    zeros: tuple


def real_zero_structure(coeffs, precision_bits: int):
    """Distinct real zeros, total count with multiplicity at the origin,
    and a flag for non-simple roots.  Returns (count, zeros, flag)."""
    with working(precision_bits):
        t, reduced = _parity_reduce([mp.mpf(c) for c in coeffs])
        zeros = []
        flag = t > 1
        n_pos = 0
        if len(reduced) > 1:
            chain = _sturm_chain(reduced)
            # a chain ending in a nonconstant element means gcd(r, r') is
            # nonconstant, i.e. repeated roots somewhere in the plane
            if len(chain[-1]) > 1:
                flag = True
            bound = _cauchy_bound(reduced)
            n_pos = _count_in(chain, mp.mpf(0), bound)
            # isolation width on the squared-variable axis; zeros are
            # reported to better than its square root
            width = mp.mpf(10) ** (-20)
            boxes = _isolate_roots(chain, mp.mpf(0), bound, n_pos, width)
            for lo, hi in boxes:
                root = mp.sqrt((lo + hi) / 2)
                zeros.append(root)
        zeros.sort()
        all_zeros = [-z for z in reversed(zeros)]
        if t >= 1:
            all_zeros.append(mp.mpf(0))
        all_zeros.extend(zeros)
        count = t + 2 * n_pos
        return count, all_zeros, flag


def zero_report(pair: SkewPolyPair, which: str, precision_bits: int) -> ZeroReport:
    """Count real zeros of the monic part or its derivative partner.

    Expected counts: the monic part of index n has all n zeros real; a
    derivative partner of even index 2m has 2m+1 real zeros and of odd
    index 2m+1 has 2m real zeros (the rest sit off the real line).  A
    mismatch is reported, never raised.
    """
    if which == "phi":
        coeffs = pair.phi
        claimed = pair.index_n
    elif which == "psi":
        coeffs = pair.psi
        m, parity = divmod(pair.index_n, 2)
        claimed = 2 * m + 1 if parity == 0 else 2 * m
    else:
        raise ValueError(f"which must be 'phi' or 'psi', got {which!r}")
    count, zeros, flag = real_zero_structure(coeffs, precision_bits)
    return ZeroReport(
        which=which,
        index_n=pair.index_n,
        degree=len(coeffs) - 1,
        real_zero_count=count,
        claimed_count=claimed,
        matches_claim=(count == claimed) and not flag,
        multiple_roots_flag=flag,
        zeros=tuple(mp.nstr(z, 25) for z in zeros),
    )


# ---------------------------------------------------------------------------
# Pipeline cross-comparison


@dataclasses.dataclass
class CrossPipelineReport:
    """Relative disagreement between integral and difference-equation runs."""

    pairs_compared: int
    max_rel_g: "mp.mpf"
    max_rel_off_even: "mp.mpf"
    max_rel_off_odd: "mp.mpf"
    max_rel_diag: "mp.mpf"
    overall_max: "mp.mpf"


def cross_pipeline_report(
    run: IntegralRun, ledger: NormalizationLedger, top_pair: int
) -> CrossPipelineReport:
    with working(max(run.precision_bits, ledger.precision_bits)):

        def rel(x, y):
            return abs(x - y) / max(abs(x), mp.mpf(10) ** (-30))

        worst_g = worst_a = worst_b = worst_s = mp.mpf(0)
        for c in range(top_pair + 1):
            worst_g = max(worst_g, rel(run.g[c], ledger.g[c]))
            worst_a = max(worst_a, rel(run.off_even[c], ledger.off_even[c]))
            worst_b = max(worst_b, rel(run.off_odd[c], ledger.off_odd[c]))
            # the diagonal entry can pass through zero, so compare
            # absolutely against a unit floor
            worst_s = max(
                worst_s,
                abs(run.diag[c] - ledger.diag[c]) / max(abs(run.diag[c]), mp.mpf(1)),
            )
    return CrossPipelineReport(
        pairs_compared=top_pair + 1,
        max_rel_g=worst_g,
        max_rel_off_even=worst_a,
        max_rel_off_odd=worst_b,
        max_rel_diag=worst_s,
        overall_max=max(worst_g, worst_a, worst_b, worst_s),
    )


def identity_sweep(pairs, table: MomentTable, j_top: int, k_top: int):
    """Max normalized differential-identity residual over a pair block."""
    worst = mp.mpf(0)
    worst_jk = (0, 0)
    with working(table.precision_bits):
        for j in range(j_top + 1):
            for k in range(k_top + 1):
                term1, term2 = identity_terms(j, k, pairs, table)
                scale = max(mp.mpf(1), abs(term1), abs(term2))
                residual = abs(term1 + term2) / scale
                if residual > worst:
                    worst = residual
                    worst_jk = (j, k)
    return worst, worst_jk
