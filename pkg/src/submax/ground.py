"""Ground-set model and bitmask helpers.

Subsets of the ground set are plain Python ints used as bitmasks, one bit
per element id.  Ids are dense in [0, n_total); dummy elements, when
present, occupy the contiguous tail [n_real, n_real + n_dummy).  Dummies
never change function values (the augmentation wrapper strips them) and
exist only so independent sets can always be completed to a basis.
"""

from dataclasses import dataclass

MAX_ELEMENTS = 63  # keeps every mask inside a non-negative int64/uint64


def bit(u):
    return 1 << u


def iter_bits(mask):
    """Yield set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def popcount(mask):
    return mask.bit_count()


def mask_of(ids):
    m = 0
    for u in ids:
        m |= 1 << u
    return m


def ids_of(mask):
    return list(iter_bits(mask))


@dataclass(frozen=True)
class GroundSet:
    """Real elements plus an optional tail of zero-marginal dummies."""

    n_real: int
    n_dummy: int = 0

    def __post_init__(self):
        if self.n_real < 0 or self.n_dummy < 0:
            raise ValueError("element counts must be non-negative")
        if self.n_real + self.n_dummy > MAX_ELEMENTS:
            raise ValueError(
                f"ground set of {self.n_real + self.n_dummy} elements exceeds "
                f"the bitmask limit of {MAX_ELEMENTS}")

    @property
    def n_total(self):
        return self.n_real + self.n_dummy

    @property
    def real_mask(self):
        return (1 << self.n_real) - 1

    @property
    def dummy_mask(self):
        return self.full_mask ^ self.real_mask

    @property
    def full_mask(self):
        return (1 << self.n_total) - 1

    def is_dummy(self, u):
        return self.n_real <= u < self.n_total

    def with_dummies(self, count):
        return GroundSet(self.n_real, count)
