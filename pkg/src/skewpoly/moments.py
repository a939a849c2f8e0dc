"""Even moments M_k = integral x^k exp(-2V(x)) dx over the real line.

Three independent constructions are provided:

* moments_quadrature: composite Gauss-Legendre on a truncated half line,
  with panel doubling until successive refinements agree to the working
  precision.  Works for every admissible weight spec.
* moments_recursion: the two-term forward recursion obtained by
  integrating (x^{k+1} w^2)' over the line; needs M_0 and M_2 as seeds.
  Quartic potentials only.
* moments_closed_form_alpha0: Gamma-function closed form, available only
  at alpha = 0.  Used as an oracle against the other two.

All three return a MomentTable; odd moments vanish by symmetry and are
served as exact zeros.
"""

from __future__ import annotations

import dataclasses

from mpmath import mp
from mpmath.calculus.quadrature import GaussLegendre

from .errors import (
    CatastrophicCancellation,
    InsufficientMoments,
    QuadratureNonConvergence,
    UnsupportedDegree,
)
from .precision import GUARD_BITS, real_str, working
from .weight import WeightSpec, weight_squared

#: default table size for a run truncated at polynomial index n_max
def required_k_max(n_max: int) -> int:
    return 4 * n_max + 16


@dataclasses.dataclass
class MomentTable:
    """Even moments of one weight at one precision."""

    spec: WeightSpec
    k_max: int
    precision_bits: int
    method: str
    values: dict
    est_rel_error: "mp.mpf"
    panels: int = 0
    truncation_radius: int = 0

    def moment(self, k: int) -> "mp.mpf":
        if k < 0 or k > self.k_max:
            raise InsufficientMoments(required_order=k, available_order=self.k_max)
        if k % 2 == 1:
            return mp.mpf(0)
        return self.values[k]

    def ibp_residual(self, k: int) -> "mp.mpf":
        """Relative defect of the integration-by-parts identity at order k.

        Integrating (x^{k+1} w^2)' over the line gives
        (k+1) M_k = 2 sum_j u_{2j} M_{k+2j}; the residual is normalized
        by the largest participating term.
        """
        with working(self.precision_bits):
            lhs = (k + 1) * self.moment(k)
            rhs = mp.mpf(0)
            scale = abs(lhs)
            for j in range(1, self.spec.degree_d + 1):
                term = 2 * self.spec.u(2 * j) * self.moment(k + 2 * j)
                rhs += term
                scale = max(scale, abs(term))
            return abs(lhs - rhs) / scale

    def max_ibp_residual(self) -> "mp.mpf":
        top = self.k_max - 2 * self.spec.degree_d
        worst = mp.mpf(0)
        for k in range(0, top + 1, 2):
            worst = max(worst, self.ibp_residual(k))
        return worst

    def csv_rows(self) -> list:
        rows = []
        err = real_str(self.est_rel_error, 32)
        for k in range(0, self.k_max + 1, 2):
            rows.append((k, real_str(self.values[k], self.precision_bits), self.method, err))
        return rows


_node_cache: dict = {}


def _gauss_nodes(degree: int, prec_bits: int):
    key = (degree, prec_bits)
    if key not in _node_cache:
        rule = GaussLegendre(mp)
        _node_cache[key] = rule.calc_nodes(degree, prec_bits)
    return _node_cache[key]


def truncation_radius(spec: WeightSpec, k_max: int, precision_bits: int) -> int:
    """Smallest integer X >= 2 with x^k_max w(x)^2 below the tail budget at X.

    The integrand decays super-exponentially, so the tail beyond X is
    bounded by a constant times the integrand at X; pushing that below
    10^(-bits/3) makes the truncation error negligible against the
    panel-refinement target.
    """
    target = mp.mpf(10) ** (-mp.mpf(precision_bits) / 3)
    radius = 2
    while True:
        xm = mp.mpf(radius)
        if weight_squared(spec, xm) * xm**k_max < target:
            return radius
        radius += 1


def moments_quadrature(
    spec: WeightSpec,
    k_max: int,
    precision_bits: int,
    max_doublings: int = 14,
) -> MomentTable:
    """Composite Gauss-Legendre moments with panel-doubling convergence.

    The integrand is even, so only [0, X] is integrated and the result
    doubled.  Each refinement level halves the panel width; convergence
    is declared when the worst relative change across all stored orders
    drops below 2^-(precision_bits + 5).
    """
    with working(precision_bits):
        radius = truncation_radius(spec, k_max, precision_bits)
        # Gauss-Legendre with n nodes integrates degree 2n-1 exactly; the
        # node count must also resolve the exponential factor, so require
        # a margin beyond k_max/2.
        need = (k_max + 1) // 2 + 8
        degree = 1
        while 3 * 2 ** (degree - 1) < need:
            degree += 1
        nodes = _gauss_nodes(degree, precision_bits + GUARD_BITS)
        target = mp.ldexp(1, -(precision_bits + 5))
        prev = None
        rel = mp.mpf(1)
        panels = 0
        for level in range(1, max_doublings + 1):
            panels = 2**level
            width = mp.mpf(radius) / panels
            sums = {k: [] for k in range(0, k_max + 1, 2)}
            for p in range(panels):
                mid = p * width + width / 2
                half = width / 2
                for t, gl_weight in nodes:
                    x = mid + half * t
                    common = gl_weight * half * weight_squared(spec, x)
                    x2 = x * x
                    xk = mp.mpf(1)
                    for k in range(0, k_max + 1, 2):
                        sums[k].append(common * xk)
                        xk *= x2
            current = {k: 2 * mp.fsum(v) for k, v in sums.items()}
            if prev is not None:
                rel = max(abs(current[k] - prev[k]) / abs(current[k]) for k in current)
                if rel < target:
                    return MomentTable(
                        spec=spec,
                        k_max=k_max,
                        precision_bits=precision_bits,
                        method="quadrature",
                        values=current,
                        est_rel_error=rel,
                        panels=panels,
                        truncation_radius=radius,
                    )
            prev = current
        raise QuadratureNonConvergence(
            achieved_rel_change=mp.nstr(rel, 5),
            target_rel_change=mp.nstr(target, 5),
            panels=panels,
        )


def moments_recursion(
    m0,
    m2,
    spec: WeightSpec,
    k_max: int,
    precision_bits: int,
    seed_rel_error=None,
) -> MomentTable:
    """Forward recursion M_{k+4} = ((k+1) M_k - 2 alpha M_{k+2}) / 2.

    Valid for the quartic potential (degree d = 2).  Running relative
    error bounds are carried along; if cancellation inflates them past
    the point where no significant digits remain, or a moment that must
    be positive comes out nonpositive, the recursion aborts and names
    the failing order.
    """
    if spec.degree_d != 2:
        raise UnsupportedDegree(
            f"moment recursion is wired for degree d = 2, got d = {spec.degree_d}"
        )
    with working(precision_bits):
        alpha = spec.alpha_mpf
        eps = mp.ldexp(1, -precision_bits)
        if seed_rel_error is None:
            seed_rel_error = eps
        seed_rel_error = mp.mpf(seed_rel_error)
        values = {0: mp.mpf(m0), 2: mp.mpf(m2)}
        errors = {0: seed_rel_error, 2: seed_rel_error}
        worst = seed_rel_error
        for k in range(0, k_max - 3, 2):
            t1 = (k + 1) * values[k]
            t2 = 2 * alpha * values[k + 2]
            nxt = (t1 - t2) / 2
            if nxt <= 0:
                raise CatastrophicCancellation(
                    index=k + 4, detail="moment of an even power must be positive"
                )
            amplification = (abs(t1) + abs(t2)) / (2 * nxt)
            err = amplification * max(errors[k], errors[k + 2]) + eps
            if err > mp.mpf("0.5"):
                raise CatastrophicCancellation(
                    index=k + 4,
                    detail=f"running error bound {mp.nstr(err, 3)} leaves no digits",
                )
            values[k + 4] = nxt
            errors[k + 4] = err
            worst = max(worst, err)
        return MomentTable(
            spec=spec,
            k_max=k_max if k_max % 2 == 0 else k_max - 1,
            precision_bits=precision_bits,
            method="recursion",
            values=values,
            est_rel_error=worst,
        )


def moments_closed_form_alpha0(k_max: int, precision_bits: int) -> MomentTable:
    """Gamma closed form at alpha = 0:
    M_{2k} = 2^((2k+1)/4 - 1) * Gamma((2k+1)/4)."""
    spec = WeightSpec(alpha="0", degree_d=2, u_coeffs=("0", "1"))
    with working(precision_bits):
        values = {}
        for k in range(0, k_max + 1, 2):
            arg = mp.mpf(2 * (k // 2) + 1) / 4
            values[k] = mp.mpf(2) ** (arg - 1) * mp.gamma(arg)
        return MomentTable(
            spec=spec,
            k_max=k_max,
            precision_bits=precision_bits,
            method="closed_form",
            values=values,
            est_rel_error=mp.ldexp(1, -precision_bits),
        )
