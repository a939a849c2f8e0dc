"""Difference-equation pipeline: the recursion data without new integrals.

Beyond the x-action band R (x q_n = sum R_{n,m} p_m), differentiation
acts on the partners through a second band P: q_n expanded over the
monic parts, q_n = sum_m P_{n,m} p_m, with parity opposite to n.  Its
independent entries per pair index c are

    f_c = -B(q_{2c}, q_{2c}) / g_{2c}        (odd column, even row)
    k_c = B(q_{2c+1}, q_{2c+3}) / g_{2c+2}   (even column, odd row)
    d_c = B(q_{2c+1}, q_{2c+1}) / g_{2c}     (even column, odd row, diagonal-like)

Differentiating the x-action identity and eliminating mixed terms gives
the operator relation  R P - P R = P,  whose band entries collapse to
seven scalar difference equations linking (a, b, s, f, k, d) and the
normalization ratios rho_c = g_{2c} / g_{2c-2}.  After seeding from six
closed-form pairs, those equations advance everything indefinitely with
no further integration: each step performs a handful of rational
operations.

The equations divide only by normalization ratios.  When a ratio stops
being resolvable at working precision the stepper raises, or, when a
completed integral run is supplied as a fallback, refreshes its state
window from integrals for that step and continues.
"""

from __future__ import annotations

import dataclasses

from mpmath import mp

from .bootstrap import bootstrap_d2
from .errors import DiffeqDegeneracy, PrecisionExhaustion
from .moments import MomentTable, moments_quadrature
from .polynomials import (
    bilinear_form,
    make_pair,
    multiply_by_x,
    poly_add,
    poly_scale,
    weighted_derivative,
)
from .precision import ulp_threshold, working
from .weight import WeightSpec

#: moment orders needed to seed six pairs, independent of how far the run goes
SEED_K_MAX = 24


@dataclasses.dataclass
class NormalizationLedger:
    """Per-pair recursion data produced by the difference equations.

    Index c covers pairs 0 .. n_pair_top; g[c] is the normalization of
    pair c, off_even[c] and off_odd[c] the two offdiagonal couplings
    (even-row upper entry a_c and odd-row upper entry b_c), diag[c] the
    even-row diagonal entry s_c, and gamma[c] = a_c * b_c.
    """

    spec: WeightSpec
    n_pair_top: int
    precision_bits: int
    g: list
    gamma: list
    off_even: list
    off_odd: list
    diag: list
    seed_residuals: tuple
    fallback_steps: tuple
    est_rel_error: "mp.mpf" = None


def _seed_pairs(spec: WeightSpec, table: MomentTable):
    """Pairs 0..5: closed-form seeds plus two parity-constrained solves."""
    boot = bootstrap_d2(spec, table)
    pairs = list(boot.pairs)
    for n in (4, 5):
        base = [mp.mpf(0)] * n + [mp.mpf(1)]
        lower = [m for m in range(n) if (n - m) % 2 == 0]
        conds = [pairs[j].psi for j in range(2 * (n // 2)) if (j - n) % 2 != 0]
        rows = []
        rhs = []
        for cond in conds:
            rows.append([bilinear_form(pairs[m].phi, cond, table) for m in lower])
            rhs.append(-bilinear_form(base, cond, table))
        solution = mp.lu_solve(mp.matrix(rows), mp.matrix(rhs))
        p = base
        for idx, m in enumerate(lower):
            padded = list(pairs[m].phi) + [mp.mpf(0)] * (len(base) - len(pairs[m].phi))
            p = poly_add(p, poly_scale(padded, solution[idx]))
        pairs.append(make_pair(n, p, spec))
    return pairs


class DiffeqStepper:
    """Incremental driver for the seven difference equations.

    State is a window of scalar sequences keyed by pair index.  seed()
    fills indices 0..2 (plus the boot values at 3), and step(n) for
    n = 2, 3, ... extends the window by one index using only rational
    operations on existing state.

    Every step also advances a running first-order error bound: each
    output's cancellation condition (sum of term magnitudes over result
    magnitude) multiplies the bound carried by the inputs.  When the
    bound says no usable digits remain, the stepper refuses to continue
    instead of emitting garbage.
    """

    #: relative error bound past which results are considered meaningless
    ERROR_CEILING = mp.mpf("1e-3")

    def __init__(
        self,
        spec: WeightSpec,
        precision_bits: int,
        table: MomentTable | None = None,
        fallback=None,
    ):
        self.spec = spec
        self.precision_bits = precision_bits
        self.fallback = fallback
        self.fallback_steps: list = []
        with working(precision_bits):
            if table is None:
                table = moments_quadrature(spec, SEED_K_MAX, precision_bits)
            self.table = table
            self.h: dict = {}
            self.rho: dict = {}
            self.a: dict = {}
            self.b: dict = {}
            self.s: dict = {}
            self.f: dict = {}
            self.k: dict = {}
            self.d: dict = {}
            self.seed_residuals: tuple = ()
            self._next_step = 2
            self._seed()

    # -- seeding ---------------------------------------------------------

    def _seed(self) -> None:
        pairs = _seed_pairs(self.spec, self.table)
        table = self.table
        h, rho, a, b, s = self.h, self.rho, self.a, self.b, self.s
        f, k, d = self.f, self.k, self.d
        psi = [list(p.psi) for p in pairs]
        phi = [list(p.phi) for p in pairs]
        xpsi = [multiply_by_x(q) for q in psi]
        h[0] = bilinear_form(phi[0], psi[1], table)
        h[1] = bilinear_form(phi[2], psi[3], table)
        h[2] = bilinear_form(phi[4], psi[5], table)
        self._require_ratio(h[1], h[0], 1)
        self._require_ratio(h[2], h[1], 2)
        rho[1] = h[1] / h[0]
        rho[2] = h[2] / h[1]
        s[0] = bilinear_form(xpsi[0], psi[1], table) / h[0]
        s[1] = bilinear_form(xpsi[2], psi[3], table) / h[1]
        a[0] = bilinear_form(xpsi[0], psi[3], table) / h[1]
        a[1] = bilinear_form(xpsi[2], psi[5], table) / h[2]
        b[0] = -bilinear_form(xpsi[1], psi[2], table) / h[1]
        b[1] = -bilinear_form(xpsi[3], psi[4], table) / h[2]
        f[0] = -bilinear_form(psi[0], psi[0], table) / h[0]
        f[1] = -bilinear_form(psi[2], psi[2], table) / h[1]
        k[0] = bilinear_form(psi[1], psi[3], table) / h[1]
        k[1] = bilinear_form(psi[3], psi[5], table) / h[2]
        d[0] = bilinear_form(psi[1], psi[1], table) / h[0]
        d[1] = bilinear_form(psi[3], psi[3], table) / h[1]
        # boot fills: four equation instances solved for the four unknowns
        # that the steady three-term window cannot yet reach
        f[2] = f[0] + b[1] - a[0]
        rho[3] = (d[1] * (1 + 2 * s[1]) / 2 - b[1] * k[1] * rho[2] + a[0] * k[0] * rho[1]) / rho[2]
        s[2] = rho[3] + a[1] * f[2] - s[1] - f[1] * b[1] - rho[1] + 1
        a[2] = (2 * s[2] * f[2] + 2 * b[1] * rho[2] - f[2]) / (2 * rho[3])
        h[3] = h[2] * rho[3]
        # the four instances not consumed by seeding or stepping; they are
        # exact identities, so their size measures seed quality
        checks = (
            abs(2 * s[0] * f[0] - 2 * a[0] * rho[1] - f[0]),
            abs(2 * s[1] * f[1] - 2 * a[1] * rho[2] + 2 * b[0] * rho[1] - f[1]),
            abs(rho[2] - (s[0] + s[1] + f[0] * b[0] - a[0] * f[1] - 1)),
            abs(
                -k[1] * rho[2]
                + b[0] * d[1]
                - s[0] * k[0]
                - b[1] * rho[2]
                - k[0] * s[1]
                - d[0] * a[0]
                - k[0]
            ),
        )
        self.seed_residuals = checks

    # -- guards ----------------------------------------------------------

    def _require_ratio(self, num, den, index: int) -> None:
        if not den > 0 or not num > 0:
            raise PrecisionExhaustion(
                step=index,
                detail="normalization constant lost positivity in the difference equations",
            )

    def _check_rho(self, value, index: int):
        floor = ulp_threshold(self.precision_bits // 2)
        if abs(value) < floor:
            raise DiffeqDegeneracy(
                step=index,
                detail=f"normalization ratio at pair {index} below resolvable threshold",
            )
        if not value > 0:
            raise PrecisionExhaustion(
                step=index,
                detail=f"normalization ratio at pair {index} lost positivity",
            )
        return value

    # -- stepping --------------------------------------------------------

    def _raw_step(self, n: int) -> None:
        a, b, s, f, k, d, rho, h = (
            self.a,
            self.b,
            self.s,
            self.f,
            self.k,
            self.d,
            self.rho,
            self.h,
        )
        self._check_rho(rho[n + 1], n + 1)
        k[n] = k[n - 2] + a[n] - b[n - 2]
        d[n] = d[n - 2] + s[n - 2] + s[n] + b[n - 2] * k[n - 1] - k[n - 2] * a[n - 1] + 1
        b[n] = (
            -k[n] * rho[n + 1]
            + b[n - 1] * d[n]
            - s[n - 1] * k[n - 1]
            + (a[n - 2] + k[n - 2]) * rho[n - 1]
            - k[n - 1] * s[n]
            - d[n - 1] * a[n - 1]
            - k[n - 1]
        ) / rho[n + 1]
        f[n + 1] = f[n - 1] + b[n] - a[n - 1]
        rho[n + 2] = (
            d[n] * (1 + 2 * s[n]) / 2
            + a[n - 1] * k[n - 1] * rho[n]
            + rho[n] * rho[n - 1]
            - b[n] * k[n] * rho[n + 1]
        ) / rho[n + 1]
        self._check_rho(rho[n + 2], n + 2)
        s[n + 1] = rho[n + 2] + a[n] * f[n + 1] - s[n] - f[n] * b[n] - rho[n] + 1
        a[n + 1] = (2 * s[n + 1] * f[n + 1] + 2 * b[n] * rho[n + 1] - f[n + 1]) / (2 * rho[n + 2])
        h[n + 2] = h[n + 1] * rho[n + 2]

    def _refresh_from_fallback(self, n: int) -> None:
        """Recompute the state window around step n by direct integration."""
        run, table = self.fallback
        pairs = run.pairs
        need_pair = 2 * n + 5
        if need_pair > len(pairs) - 1:
            raise PrecisionExhaustion(
                step=n, detail="integral fallback does not extend far enough"
            )
        for c in range(max(0, n - 2), n + 3):
            self.h[c] = bilinear_form(pairs[2 * c].phi, pairs[2 * c + 1].psi, table)
        for c in range(max(1, n - 2), n + 3):
            self._require_ratio(self.h[c], self.h[c - 1], c)
            self.rho[c] = self.h[c] / self.h[c - 1]
        for c in range(max(0, n - 2), n + 2):
            xq_e = multiply_by_x(pairs[2 * c].psi)
            xq_o = multiply_by_x(pairs[2 * c + 1].psi)
            self.s[c] = bilinear_form(xq_e, pairs[2 * c + 1].psi, table) / self.h[c]
            self.a[c] = bilinear_form(xq_e, pairs[2 * c + 3].psi, table) / self.h[c + 1]
            self.b[c] = -bilinear_form(xq_o, pairs[2 * c + 2].psi, table) / self.h[c + 1]
            self.f[c] = -bilinear_form(pairs[2 * c].psi, pairs[2 * c].psi, table) / self.h[c]
            self.k[c] = (
                bilinear_form(pairs[2 * c + 1].psi, pairs[2 * c + 3].psi, table) / self.h[c + 1]
            )
            self.d[c] = bilinear_form(pairs[2 * c + 1].psi, pairs[2 * c + 1].psi, table) / self.h[c]

    def step(self, n: int) -> None:
        """Extend the window so that indices through n+1 (a, s) and n (b) exist."""
        if n != self._next_step:
            raise PrecisionExhaustion(
                step=n, detail=f"steps must advance contiguously, expected {self._next_step}"
            )
        with working(self.precision_bits):
            try:
                self._raw_step(n)
            except PrecisionExhaustion:
                if self.fallback is None:
                    raise
                self._refresh_from_fallback(n)
                self._raw_step(n)
                self.fallback_steps.append(n)
        self._next_step = n + 1

    def ensure(self, c: int) -> None:
        """Advance until pair index c is fully covered (g, a, b, s, gamma)."""
        while self._next_step <= c + 2:
            self.step(self._next_step)

    # -- accessors (one recursion output per call) ------------------------

    def g_step(self, c: int) -> "mp.mpf":
        self.ensure(max(c - 2, 0))
        return self.h[c]

    def r_offdiag_step(self, c: int):
        self.ensure(c)
        return self.a[c], self.b[c]

    def r_diag_step(self, c: int) -> "mp.mpf":
        self.ensure(c)
        return self.s[c]


def run_diffeq(
    spec: WeightSpec,
    n_pair_top: int,
    precision_bits: int,
    table: MomentTable | None = None,
    fallback=None,
) -> NormalizationLedger:
    """Drive the stepper through pair index n_pair_top and package results.

    fallback, when given, is a (integral_run, moment_table) tuple used to
    refresh the state window by direct integration if a step degenerates.
    """
    stepper = DiffeqStepper(spec, precision_bits, table=table, fallback=fallback)
    stepper.ensure(n_pair_top)
    idx = range(n_pair_top + 1)
    return NormalizationLedger(
        spec=spec,
        n_pair_top=n_pair_top,
        precision_bits=precision_bits,
        g=[stepper.h[c] for c in idx],
        gamma=[stepper.a[c] * stepper.b[c] for c in idx],
        off_even=[stepper.a[c] for c in idx],
        off_odd=[stepper.b[c] for c in idx],
        diag=[stepper.s[c] for c in idx],
        seed_residuals=stepper.seed_residuals,
        fallback_steps=tuple(stepper.fallback_steps),
    )


def identity_terms(j: int, k: int, pairs, table: MomentTable):
    """Both sides of the exact cross-pair differential identity.

    With D[u] = u' - V' u, the weighted integrals satisfy

        B(D[x D[x q_j]], p_k) + B(x q_k, D[x q_j]) = 0

    identically: both terms are integrals of the two halves of the same
    product rule, so their sum is a total derivative over the line.
    """
    spec = table.spec
    with working(table.precision_bits):
        qj = list(pairs[j].psi)
        qk = list(pairs[k].psi)
        pk = list(pairs[k].phi)
        inner = weighted_derivative(multiply_by_x(qj), spec)
        outer = weighted_derivative(multiply_by_x(inner), spec)
        term1 = bilinear_form(outer, pk, table)
        term2 = bilinear_form(multiply_by_x(qk), inner, table)
        return term1, term2


def identity_residual(j: int, k: int, pairs, table: MomentTable) -> "mp.mpf":
    """Absolute defect of the cross-pair differential identity.

    Zero in exact arithmetic for every j, k; the computed size isolates
    moment-table and pair-construction error, so it should sit at
    working-precision scale for healthy inputs.
    """
    term1, term2 = identity_terms(j, k, pairs, table)
    return abs(term1 + term2)
