"""Evaluation-kernel selection and the oracle "plan" format.

The hot operation of the whole package is: given a list of realization
bitmasks and their probabilities, compute the weighted sum of oracle
values f(mask | union) for one or many union masks.  Two interchangeable
kernels implement it:

* ``submax._kernel`` - compiled extension (built from ``_kernel.pyx``)
* ``submax._kernel_py`` - numpy fallback, always available

Both follow the identical operation order (same per-element multiply and
accumulate sequence, same fixed-shape balanced pairwise reduction tree),
so their floating-point outputs are bit-identical.  Selection happens at
import time; set ``SUBMAX_KERNEL=python`` or ``SUBMAX_KERNEL=c`` to force
a backend.

A :class:`KernelPlan` is a flattened description of an oracle that the
kernels can evaluate without calling back into Python:

    value(mask) = family((mask | or_mask) & and_mask)
                  - sum of pen[b] over set bits b of ((mask | or_mask) & pen_mask)
                  + addend

with ``family`` one of: explicit table lookup, weighted coverage, or
weighted graph cut.  Oracle wrappers (dummy augmentation, penalty shift,
translation) compose into the same flat form; compositions that do not
flatten return no plan and are evaluated through the pure-Python path.
"""

import os
from dataclasses import dataclass, field

import numpy as np

FAMILY_TABLE = 0
FAMILY_COVERAGE = 1
FAMILY_CUT = 2


@dataclass(frozen=True)
class KernelPlan:
    kind: int
    n_base: int
    or_mask: int = 0
    and_mask: int = (1 << 63) - 1
    pen_mask: int = 0
    pen: np.ndarray = field(default_factory=lambda: np.zeros(64))
    addend: float = 0.0
    table: np.ndarray = None
    cover_masks: np.ndarray = None    # uint64 universe mask per element
    cover_weights: np.ndarray = None  # float64 per universe item
    n_universe: int = 0
    edges_a: np.ndarray = None        # int64 endpoints, parallel arrays
    edges_b: np.ndarray = None
    edge_weights: np.ndarray = None


def _select_backend():
    choice = os.environ.get("SUBMAX_KERNEL", "auto")
    if choice not in ("auto", "c", "python"):
        raise RuntimeError(f"SUBMAX_KERNEL must be auto, c or python, not {choice!r}")
    if choice in ("auto", "c"):
        try:
            from . import _kernel as impl
            return impl, "c"
        except ImportError:
            if choice == "c":
                raise
    from . import _kernel_py as impl
    return impl, "python"


_impl, BACKEND = _select_backend()


def eval_masks(plan, masks):
    """Oracle values for an array of subset masks (no reduction)."""
    return _impl.eval_masks(plan, masks)


def weighted_join_sums(plan, masks, weights, unions):
    """For each union mask: tree-reduced sum of weights * value(mask | union)."""
    return _impl.weighted_join_sums(plan, masks, weights, unions)
