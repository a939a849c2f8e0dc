"""Exception hierarchy for the skew-orthogonal polynomial pipelines.

Every failure mode that callers are expected to branch on gets its own
class.  The command line layer maps these onto process exit codes:
ConfigError -> 4, PrecisionExhaustion -> 3, everything else that is a
SkewPolyError -> 2.
"""

from __future__ import annotations


class SkewPolyError(Exception):
    """Base class for all library-defined failures."""

    #: short machine-readable stage label, overridden by subclasses
    stage = "internal"


class ConfigError(SkewPolyError):
    """Invalid run configuration (bad flag value, inconsistent options)."""

    stage = "config"


class UnsupportedDegree(ConfigError):
    """Weight has a potential degree the closed-form bootstrap cannot seed."""


class NonIntegrableWeight(SkewPolyError):
    """Leading potential coefficient is not positive, so moments diverge."""

    stage = "weight"


class OutOfRangeEvaluation(SkewPolyError):
    """Weight evaluation requested at a point where exp(-2V) under/overflows
    beyond what the working precision can represent meaningfully."""

    stage = "weight"


class QuadratureNonConvergence(SkewPolyError):
    """Panel refinement stopped improving before reaching the target."""

    stage = "moments"

    def __init__(self, achieved_rel_change: str, target_rel_change: str, panels: int):
        self.achieved_rel_change = achieved_rel_change
        self.target_rel_change = target_rel_change
        self.panels = panels
        super().__init__(
            f"quadrature stalled at relative change {achieved_rel_change} "
            f"(target {target_rel_change}) with {panels} panels"
        )


class InsufficientMoments(SkewPolyError):
    """A bilinear form needed a moment of higher order than the table holds."""

    stage = "moments"

    def __init__(self, required_order: int, available_order: int):
        self.required_order = required_order
        self.available_order = available_order
        super().__init__(
            f"moment of order {required_order} required but table stops at "
            f"order {available_order}"
        )


class CatastrophicCancellation(SkewPolyError):
    """Forward moment recursion lost all significant digits at some index."""

    stage = "moments"

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        msg = f"cancellation destroyed moment of order {index}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class DegenerateNormalization(SkewPolyError):
    """A normalization constant or bootstrap denominator vanished."""

    stage = "bootstrap"

    def __init__(self, where: str):
        self.where = where
        super().__init__(f"degenerate normalization in {where}")


class PrecisionExhaustion(SkewPolyError):
    """Working precision is no longer sufficient to continue the recursion."""

    stage = "recursion"

    def __init__(self, step: int, detail: str):
        self.step = step
        self.detail = detail
        super().__init__(f"precision exhausted at step {step}: {detail}")


class DiffeqDegeneracy(PrecisionExhaustion):
    """A difference-equation denominator (ratio of adjacent normalization
    constants) collapsed below the resolvable threshold."""

    stage = "diffeq"


class InternalConsistencyFailure(SkewPolyError):
    """A structural invariant that should hold exactly was violated."""

    stage = "internal"

    def __init__(self, invariant: str, detail: str = ""):
        self.invariant = invariant
        msg = f"invariant violated: {invariant}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
