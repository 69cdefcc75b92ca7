"""Process-wide defaults that users may override from the environment."""

import os

DEFAULT_PRECISION_BITS = 256
MINIMUM_PRECISION_BITS = 64
PRECISION_ENV = "GERMFORGE_PRECISION_BITS"


def default_precision() -> int:
    raw = os.environ.get(PRECISION_ENV)
    if raw is None:
        return DEFAULT_PRECISION_BITS
    return checked_precision(int(raw))


def checked_precision(bits: int) -> int:
    if bits < MINIMUM_PRECISION_BITS:
        raise ValueError(f"precision {bits} bits is below the minimum of {MINIMUM_PRECISION_BITS}")
    return bits
