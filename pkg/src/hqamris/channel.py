"""RIS cascade channel sampling, path loss and average SNR.

The end-to-end gain through an N-element surface with aligned but
q-bit-quantized phases is h = sum_i |h_1i||h_2i| e^{j phi_i}, with both
magnitudes Nakagami-m and phi_i uniform on [-pi/2^q, pi/2^q].
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Column block used when sampling many cascade gains; fixed so that draw
# order (and therefore any seeded sequence) never depends on memory limits.
_N_BLOCK = 256


@dataclass(frozen=True)
class ChannelParams:
    """Fading and quantization parameters of the cascade channel."""

    N: int
    m: float
    omega: float
    q: int

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.m < 0.5:
            raise ValueError("Nakagami shape m must be >= 0.5")
        if self.omega <= 0.0:
            raise ValueError("Nakagami spread omega must be positive")
        if self.q < 1:
            raise ValueError("quantization bits q must be >= 1")


@dataclass(frozen=True)
class LinkBudget:
    """Transmit power, antenna gains, path-loss model and noise power.

    ``C0_db`` is the per-link reference path loss in dB (amplitude
    convention: it enters the path loss squared), ``sigma_n2`` is the
    noise power in watts.
    """

    P_t: float
    G: float
    C0_db: float
    d0: float
    d1: float
    d2: float
    n_ple: float
    sigma_n2: float

    def __post_init__(self) -> None:
        for name in ("P_t", "G", "d0", "d1", "d2", "n_ple", "sigma_n2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.d1 < self.d0 or self.d2 < self.d0:
            raise ValueError("d1 and d2 must be at least the reference distance d0")


def sample_nakagami(
    m: float,
    omega: float,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
) -> float | np.ndarray:
    """Draw Nakagami-m amplitudes with E[X^2] = omega.

    X^2 is gamma-distributed with shape m and scale omega/m, so the draw
    is the square root of a gamma variate (exact, no rejection tuning).
    """
    if m < 0.5:
        raise ValueError("Nakagami shape m must be >= 0.5")
    if omega <= 0.0:
        raise ValueError("Nakagami spread omega must be positive")
    x = np.sqrt(rng.gamma(shape=m, scale=omega / m, size=size))
    return float(x) if size is None else x


def sample_phase_error(
    q: int,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
) -> float | np.ndarray:
    """Residual phase error, uniform on [-pi/2^q, pi/2^q]."""
    if q < 1:
        raise ValueError("quantization bits q must be >= 1")
    half_width = math.pi * 2.0 ** (-q)
    phi = rng.uniform(-half_width, half_width, size=size)
    return float(phi) if size is None else phi


def sample_cascade_gain(
    p: ChannelParams,
    rng: np.random.Generator,
    size: int | None = None,
) -> complex | np.ndarray:
    """Draw the cascade gain h = sum_i a_i b_i e^{j phi_i}.

    ``size`` draws that many independent gains at once; the reflecting
    elements are consumed in fixed-size column blocks so a given seed
    always produces the same sequence.
    """
    n = 1 if size is None else int(size)
    acc = np.zeros(n, dtype=complex)
    for start in range(0, p.N, _N_BLOCK):
        width = min(_N_BLOCK, p.N - start)
        a = sample_nakagami(p.m, p.omega, rng, size=(n, width))
        b = sample_nakagami(p.m, p.omega, rng, size=(n, width))
        phi = sample_phase_error(p.q, rng, size=(n, width))
        g = a * b
        acc += (g * np.cos(phi)).sum(axis=1) + 1j * (g * np.sin(phi)).sum(axis=1)
    return complex(acc[0]) if size is None else acc


def path_loss(lb: LinkBudget) -> float:
    """Cascade path loss l_p = C0^2 (d0 / (d1 d2))^n."""
    c0 = 10.0 ** (lb.C0_db / 10.0)
    return c0 * c0 * (lb.d0 / (lb.d1 * lb.d2)) ** lb.n_ple


def average_snr(lb: LinkBudget) -> float:
    """Average SNR gamma_bar = P_t G l_p / sigma_n^2.

    The per-trial received SNR is gamma_bar * |h|^2.
    """
    return lb.P_t * lb.G * path_loss(lb) / lb.sigma_n2
