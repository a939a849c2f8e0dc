"""Working-precision helpers shared by every numerical module.

All arithmetic runs on mpmath's global context, guarded by a context
manager that adds a fixed number of spare bits so that results rounded
back to the requested precision are fully converged.
"""

from __future__ import annotations

import contextlib
from typing import Iterator

from mpmath import mp

#: extra bits carried internally beyond what the caller asked for
GUARD_BITS = 30

#: lowest precision the library accepts
MIN_PRECISION_BITS = 64


@contextlib.contextmanager
def working(precision_bits: int) -> Iterator[None]:
    """Run the enclosed block at precision_bits + GUARD_BITS bits."""
    with mp.workprec(precision_bits + GUARD_BITS):
        yield


def digits_for(precision_bits: int) -> int:
    """Decimal digits that faithfully represent precision_bits bits."""
    return int(precision_bits * 0.30103) + 3


def real_str(x, precision_bits: int) -> str:
    """Deterministic decimal rendering of an mpmath real.

    Conversion happens at the named precision so an already-accurate
    value is never re-rounded through a lower ambient context.
    """
    with mp.workprec(precision_bits + GUARD_BITS):
        return mp.nstr(mp.mpf(x), digits_for(precision_bits))


def ulp_threshold(precision_bits: int, shift: int = 0) -> "mp.mpf":
    """2**(-(precision_bits + shift)) as an mpf at current precision."""
    return mp.mpf(2) ** (-(precision_bits + shift))
