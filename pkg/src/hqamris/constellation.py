"""Construction of unit-energy HQAM and square-QAM constellations.

HQAM symbols live on the triangular (hexagonal-packing) lattice; the
constellation is the set of M lattice points of smallest energy,
re-centered and scaled to unit average symbol energy.  Square QAM is the
usual sqrt(M) x sqrt(M) grid, normalized the same way.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SUPPORTED_ORDERS = (4, 16, 64, 256, 1024)

# Circle-approximation correction factor per constellation order.
_KC_TABLE = {
    16: 0.8711505,
    64: 0.5222431,
    256: 0.3936315,
    1024: 0.2982858,
}

# A symbol is "external" when it has fewer nearest neighbours than an
# interior lattice point: 6 on the triangular lattice, 4 on the square grid.
_INTERIOR_NEIGHBOURS = {"HQAM": 6, "QAM": 4}

_NEIGHBOUR_RTOL = 1e-9


@dataclass(frozen=True)
class Constellation:
    """Immutable symbol set with its lattice geometry.

    Attributes
    ----------
    M : int
        Number of symbols.
    scheme : str
        ``"HQAM"`` or ``"QAM"``.
    symbols : np.ndarray
        Complex points, zero mean, unit average energy, read-only.
    d_min : float
        Empirical nearest-neighbour distance after normalization.
    b : int
        Number of external symbols (neighbour-count criterion).
    E_s : float
        Average symbol energy (1.0 by construction).
    """

    M: int
    scheme: str
    symbols: np.ndarray
    d_min: float
    b: int
    E_s: float = 1.0

    def __post_init__(self) -> None:
        if self.scheme not in ("HQAM", "QAM"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if len(self.symbols) != self.M:
            raise ValueError("symbol count does not match M")
        if not 0 < self.b <= self.M:
            raise ValueError("external symbol count out of range")
        self.symbols.setflags(write=False)


@dataclass(frozen=True)
class HqamGeometry:
    """Constants of the circle-approximation SEP expression.

    ``B_coef`` scales the exponential (interior) term and ``A`` the
    Gaussian-tail (external) term; both are assembled from the
    constellation's d_min, the correction factor k_c and E_s.
    """

    k_c: float
    A: float
    B_coef: float

    def __post_init__(self) -> None:
        if not 0.0 < self.k_c <= 1.0:
            raise ValueError("k_c must be in (0, 1]")
        if self.A <= 0.0 or self.B_coef <= 0.0:
            raise ValueError("A and B_coef must be positive")


def dmin_formula(M: int, E_s: float) -> float:
    """Nearest-neighbour distance of the regular M-HQAM family.

    Note: the constructed constellations come out with twice this value at
    equal energy (the tabulated family uses a half-distance convention);
    see docs/discrepancies.md.  The constructed, empirical ``d_min`` is
    authoritative everywhere in this package.
    """
    if M < 4:
        raise ValueError("M must be at least 4")
    if E_s <= 0.0:
        raise ValueError("E_s must be positive")
    return math.sqrt(12.0 * E_s / (7.0 * M - 4.0))


def kc_lookup(M: int) -> float:
    """Tabulated circle-approximation correction factor for M-HQAM."""
    try:
        return _KC_TABLE[M]
    except KeyError:
        raise ValueError(f"k_c unavailable for M={M}") from None


def build_hqam(M: int) -> Constellation:
    """Build the unit-energy M-HQAM constellation.

    The M smallest-norm points of the unit triangular lattice are selected
    (ties broken by angle from the positive real axis, then enumeration
    order), translated to zero centroid and scaled to unit average energy.
    """
    if M not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported constellation order M={M}")
    span = int(math.ceil(math.sqrt(M))) + 3
    half_sqrt3 = math.sqrt(3.0) / 2.0
    entries = []
    index = 0
    for a in range(-span, span + 1):
        for b_ in range(-span, span + 1):
            x = a + 0.5 * b_
            y = b_ * half_sqrt3
            norm2 = a * a + a * b_ + b_ * b_  # exact in integers
            angle = math.atan2(y, x) % (2.0 * math.pi)
            entries.append((norm2, angle, index, x, y))
            index += 1
    entries.sort(key=lambda t: (t[0], t[1], t[2]))
    points = np.array([(t[3], t[4]) for t in entries[:M]], dtype=float)
    points -= points.mean(axis=0)
    points /= math.sqrt(np.mean(np.sum(points**2, axis=1)))
    symbols = points[:, 0] + 1j * points[:, 1]
    d_min = _min_pairwise_distance(symbols)
    b = int(np.count_nonzero(neighbour_counts_from(symbols, d_min) < 6))
    return Constellation(M=M, scheme="HQAM", symbols=symbols, d_min=d_min, b=b)


def build_qam(M: int) -> Constellation:
    """Build the unit-energy square M-QAM constellation."""
    root = math.isqrt(M)
    if root * root != M or M not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported constellation order M={M}")
    levels = 2.0 * np.arange(root) - (root - 1)
    re, im = np.meshgrid(levels, levels, indexing="ij")
    symbols = (re + 1j * im).ravel()
    symbols /= math.sqrt(np.mean(np.abs(symbols) ** 2))
    d_min = _min_pairwise_distance(symbols)
    b = int(np.count_nonzero(neighbour_counts_from(symbols, d_min) < 4))
    return Constellation(M=M, scheme="QAM", symbols=symbols, d_min=d_min, b=b)


def neighbour_counts_from(symbols: np.ndarray, d_min: float) -> np.ndarray:
    """Per-symbol count of neighbours at distance d_min (rtol 1e-9)."""
    dist = np.abs(symbols[:, None] - symbols[None, :])
    np.fill_diagonal(dist, np.inf)
    return np.count_nonzero(np.abs(dist - d_min) <= _NEIGHBOUR_RTOL * d_min, axis=1)


def external_symbols(c: Constellation) -> np.ndarray:
    """Indices of symbols with fewer nearest neighbours than interior ones."""
    counts = neighbour_counts_from(c.symbols, c.d_min)
    return np.nonzero(counts < _INTERIOR_NEIGHBOURS[c.scheme])[0]


def hqam_geometry(c: Constellation, k_c: float | None = None) -> HqamGeometry:
    """Assemble the SEP-expression constants for an HQAM constellation.

    ``k_c`` defaults to the tabulated value for ``c.M``; it must be passed
    explicitly for orders outside the table (e.g. M=4).
    """
    if c.scheme != "HQAM":
        raise ValueError("geometry constants are defined for HQAM only")
    if k_c is None:
        k_c = kc_lookup(c.M)
    d2 = c.d_min * c.d_min
    es = c.E_s
    b_coef = (
        d2 * k_c**2 / (3.0 * es)
        + d2 * k_c * (1.0 - k_c) / (math.sqrt(3.0) * es)
        + d2 * (1.0 - k_c) ** 2 / (4.0 * es)
    )
    a = math.sqrt(2.0 * d2 * k_c**2 / (3.0 * es)) + math.sqrt(
        d2 * (1.0 - k_c) ** 2 / (2.0 * es)
    )
    return HqamGeometry(k_c=k_c, A=a, B_coef=b_coef)


def _min_pairwise_distance(symbols: np.ndarray) -> float:
    dist = np.abs(symbols[:, None] - symbols[None, :])
    np.fill_diagonal(dist, np.inf)
    return float(dist.min())
