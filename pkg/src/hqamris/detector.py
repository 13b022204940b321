"""Constant-time HQAM detection plus the exhaustive MLD baseline.

The fast path locates every symbol inside a d_min-radius box around the
received point purely by linear interpolation into the sorted column
structure of the lattice (no scan over M), then compares at most a
handful of Euclidean distances.  When the box is empty the decision falls
back to per-quadrant arrays of far-field (unbounded-cell) symbols.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constellation import Constellation

_STEP_ATOL = 1e-9
_BOX_EPS_REL = 1e-9  # widen the search box to keep boundary symbols
_RAYS_PER_QUADRANT = 4096
_RAY_RADIUS_DMIN = 1e3
_MLD_BLOCK = 16384
_SENTINEL = np.iinfo(np.int64).max


@dataclass(frozen=True)
class DetectorIndex:
    """Sorted-coordinate index over an HQAM constellation.

    Symbols are partitioned into columns of equal real part (ascending),
    each column ascending in imaginary part and stored flattened in
    ``col_sym``/``col_y`` with per-column offsets.  ``quadrant_fallback``
    holds the four far-field symbol arrays, ascending by symbol index.
    """

    symbols: np.ndarray
    d_min: float
    R_m: float
    S_x: np.ndarray
    x1: float
    col_step: float
    col_y_step: float
    col_start: np.ndarray
    col_len: np.ndarray
    col_y_base: np.ndarray
    col_sym: np.ndarray
    col_y: np.ndarray
    quadrant_fallback: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    b: int


@dataclass(frozen=True)
class DetectStats:
    """Instrumentation of a batched detection run.

    ``distance_ops`` counts the Euclidean distances evaluated per point
    (candidate-box size on the main path, fallback-array size otherwise);
    ``fallback`` flags the points decided through the quadrant arrays.
    """

    distance_ops: np.ndarray
    fallback: np.ndarray

    @property
    def max_main_path_ops(self) -> int:
        main = self.distance_ops[~self.fallback]
        return int(main.max()) if main.size else 0


def build_detector(c: Constellation) -> DetectorIndex:
    """Build the column index and quadrant fallback arrays for HQAM."""
    if c.scheme != "HQAM":
        raise ValueError("the fast detector supports HQAM only; use MLD for QAM")
    x = c.symbols.real
    y = c.symbols.imag
    order = np.lexsort((y, x))
    xs = x[order]
    boundaries = np.nonzero(np.diff(xs) > 0.25 * c.d_min)[0] + 1
    starts = np.concatenate(([0], boundaries))
    ends = np.concatenate((boundaries, [c.M]))

    s_x = xs[starts]
    col_start = starts.astype(np.int64)
    col_len = (ends - starts).astype(np.int64)
    col_sym = order.astype(np.int64)
    col_y = y[order]
    col_y_base = col_y[starts]

    n_cols = len(s_x)
    if n_cols > 1:
        col_step = float((s_x[-1] - s_x[0]) / (n_cols - 1))
        if np.any(np.abs(np.diff(s_x) - col_step) > _STEP_ATOL):
            raise ValueError("column positions are not equispaced")
    else:
        col_step = c.d_min / 2.0

    y_steps = []
    for s, e in zip(starts, ends):
        if e - s > 1:
            y_steps.append(np.diff(col_y[s:e]))
    if y_steps:
        all_steps = np.concatenate(y_steps)
        col_y_step = float(all_steps.mean())
        if np.any(np.abs(all_steps - col_y_step) > _STEP_ATOL):
            raise ValueError("same-column symbols are not equispaced")
    else:
        col_y_step = np.sqrt(3.0) * c.d_min

    radius = _RAY_RADIUS_DMIN * c.d_min
    fallback = []
    for e in range(4):
        angles = (np.arange(_RAYS_PER_QUADRANT) + 0.5) * (np.pi / 2.0) / _RAYS_PER_QUADRANT
        angles = angles + e * np.pi / 2.0
        probes = radius * (np.cos(angles) + 1j * np.sin(angles))
        winners = mld_detect_many(c, probes)
        fallback.append(np.unique(winners).astype(np.int64))

    return DetectorIndex(
        symbols=c.symbols,
        d_min=c.d_min,
        R_m=c.d_min,
        S_x=s_x,
        x1=float(s_x[0]),
        col_step=col_step,
        col_y_step=col_y_step,
        col_start=col_start,
        col_len=col_len,
        col_y_base=col_y_base,
        col_sym=col_sym,
        col_y=col_y,
        quadrant_fallback=tuple(fallback),
        b=c.b,
    )


def candidate_slots(
    idx: DetectorIndex, points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized candidate enumeration for an array of received points.

    Returns ``(slots, valid)`` where ``slots`` is (n, 10) of symbol
    indices (up to 5 columns x 2 rows fit in the widened box) and
    ``valid`` masks the real candidates.  Only interpolation arithmetic
    and O(1) gathers per point; nothing iterates over M.
    """
    x = points.real.astype(float)
    y = points.imag.astype(float)
    eps = _BOX_EPS_REL * idx.d_min
    x_lo = x - idx.R_m - eps
    x_hi = x + idx.R_m + eps
    y_lo = y - idx.R_m - eps
    y_hi = y + idx.R_m + eps

    n_cols = len(idx.S_x)
    c_lo_f = np.ceil((x_lo - idx.x1) / idx.col_step)
    c_hi_f = np.floor((x_hi - idx.x1) / idx.col_step)
    c_lo = np.clip(c_lo_f, 0, n_cols).astype(np.int64)
    c_hi = np.clip(c_hi_f, -1, n_cols - 1).astype(np.int64)

    n = x.shape[0]
    slots = np.full((n, 10), 0, dtype=np.int64)
    valid = np.zeros((n, 10), dtype=bool)
    for col_off in range(5):
        col = c_lo + col_off
        col_ok = col <= c_hi
        col_safe = np.clip(col, 0, n_cols - 1)
        base = idx.col_y_base[col_safe]
        length = idx.col_len[col_safe]
        max_len = float(idx.col_len.max())
        r_lo_f = np.ceil((y_lo - base) / idx.col_y_step)
        r_hi_f = np.floor((y_hi - base) / idx.col_y_step)
        r_lo = np.clip(r_lo_f, 0, max_len).astype(np.int64)
        r_hi = np.clip(np.minimum(r_hi_f, (length - 1).astype(float)), -1, max_len).astype(np.int64)
        for row_off in range(2):
            row = r_lo + row_off
            ok = col_ok & (row <= r_hi)
            flat = idx.col_start[col_safe] + np.clip(row, 0, length - 1)
            k = 2 * col_off + row_off
            slots[:, k] = idx.col_sym[flat]
            valid[:, k] = ok
    return slots, valid


def candidate_set(idx: DetectorIndex, r: complex) -> set[int]:
    """Symbol indices inside the search box around a single point."""
    slots, valid = candidate_slots(idx, np.array([r], dtype=complex))
    return set(int(s) for s in slots[0, valid[0]])


def quadrant_of(points: np.ndarray) -> np.ndarray:
    """Quadrant labels 1..4, counterclockwise, zeros counted non-negative."""
    x = points.real
    y = points.imag
    out = np.empty(x.shape, dtype=np.int64)
    out[(x >= 0) & (y >= 0)] = 1
    out[(x < 0) & (y >= 0)] = 2
    out[(x < 0) & (y < 0)] = 3
    out[(x >= 0) & (y < 0)] = 4
    return out


def detect_many(
    idx: DetectorIndex, points: np.ndarray, with_stats: bool = False
) -> np.ndarray | tuple[np.ndarray, DetectStats]:
    """Detect an array of received points with the fast path + fallback."""
    points = np.asarray(points, dtype=complex)
    slots, valid = candidate_slots(idx, points)
    sx = idx.symbols.real
    sy = idx.symbols.imag
    dx = points.real[:, None] - sx[slots]
    dy = points.imag[:, None] - sy[slots]
    d2 = dx * dx + dy * dy
    d2[~valid] = np.inf
    best = d2.min(axis=1)
    contenders = np.where(valid & (d2 == best[:, None]), slots, _SENTINEL)
    decisions = contenders.min(axis=1)

    counts = valid.sum(axis=1)
    fallback_mask = counts == 0
    ops = counts.astype(np.int64)
    if np.any(fallback_mask):
        quad = quadrant_of(points)
        for e in range(4):
            rows = np.nonzero(fallback_mask & (quad == e + 1))[0]
            if rows.size == 0:
                continue
            cand = idx.quadrant_fallback[e]
            dxf = points.real[rows, None] - sx[cand]
            dyf = points.imag[rows, None] - sy[cand]
            d2f = dxf * dxf + dyf * dyf
            decisions[rows] = cand[np.argmin(d2f, axis=1)]
            ops[rows] = len(cand)
    if with_stats:
        return decisions, DetectStats(distance_ops=ops, fallback=fallback_mask)
    return decisions


def detect(idx: DetectorIndex, r: complex) -> int:
    """Detect a single received point (lowest-index tie-break)."""
    return int(detect_many(idx, np.array([r], dtype=complex))[0])


def mld_detect_many(c: Constellation, points: np.ndarray) -> np.ndarray:
    """Exhaustive maximum-likelihood detection over all M symbols.

    Minimizes |r-s|^2 - |r|^2 = |s|^2 - 2 Re(conj(r) s), so the inner loop
    is one matrix product per block.  Use `mld_detect` where the
    lowest-index tie-break must hold for mathematically exact ties.
    """
    points = np.asarray(points, dtype=complex)
    coords = np.column_stack((c.symbols.real, c.symbols.imag))
    norm2 = np.sum(coords**2, axis=1)
    out = np.empty(points.shape[0], dtype=np.int64)
    for lo in range(0, points.shape[0], _MLD_BLOCK):
        block = np.column_stack(
            (points.real[lo : lo + _MLD_BLOCK], points.imag[lo : lo + _MLD_BLOCK])
        )
        metric = norm2[None, :] - 2.0 * (block @ coords.T)
        out[lo : lo + _MLD_BLOCK] = np.argmin(metric, axis=1)
    return out


def mld_detect(c: Constellation, r: complex) -> int:
    """Exhaustive MLD for a single point (lowest-index tie-break)."""
    d2 = np.abs(np.asarray(r, dtype=complex) - c.symbols) ** 2
    return int(np.argmin(d2))
