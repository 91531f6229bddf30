"""The limiting random Fourier series and its coefficient law.

The coefficient law mu puts mass 1/2 on an atom at zero and spreads the
other half as the arcsine-type density 1/(2 pi sqrt(4 - x^2)) on [-2, 2].
Truncated series Kl_H(t) = t U_0 + sum over 1 <= |h| <= H of
(e(ht) - 1)/(2 pi i h) U_h are sampled reproducibly from a counter-based
generator and summed pairwise in increasing |h|.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kloosterman import beta_coeff

#: reproducibility: sample index i draws from Philox keyed by
#: SeedSequence(entropy=seed, spawn_key=(i,)); documented stream splitting.
def substream(seed: int, index: int) -> np.random.Generator:
    """Independent generator for the index-th substream of a seed."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(index,))
    return np.random.Generator(np.random.Philox(ss))


def mu_sample(rng: np.random.Generator) -> float:
    """One draw from mu: 0 with probability 1/2, else 2 cos(pi V), V uniform.

    The pushforward of the uniform V through 2 cos(pi V) has density
    1/(pi sqrt(4 - x^2)) on [-2, 2], so halving it reproduces the
    continuous part of mu exactly; no special functions are involved.
    """
    coin = rng.random()
    v = rng.random()
    if coin < 0.5:
        return 0.0
    return 2.0 * math.cos(math.pi * v)


def mu_sample_array(rng: np.random.Generator, size: int) -> np.ndarray:
    """Vector of iid mu draws; the coin array is drawn before the angles."""
    coin = rng.random(size)
    v = rng.random(size)
    return np.where(coin < 0.5, 0.0, 2.0 * np.cos(np.pi * v))


def mu_moment(m: int) -> float:
    """Exact m-th moment of mu: 1 at m = 0, C(m, m/2)/2 for even m, else 0."""
    if m < 0:
        raise ValueError(f"moment order must be >= 0, got {m}")
    if m == 0:
        return 1.0
    if m % 2 == 1:
        return 0.0
    return math.comb(m, m // 2) / 2.0


def mu_cdf(x):
    """Right-continuous CDF of mu; accepts scalars or arrays."""
    arr = np.asarray(x, dtype=float)
    base = (np.arcsin(np.clip(arr / 2.0, -1.0, 1.0)) + np.pi / 2) / (2.0 * np.pi)
    out = base + 0.5 * (arr >= 0.0)
    out = np.where(arr <= -2.0, 0.0, np.where(arr >= 2.0, 1.0, out))
    if np.isscalar(x):
        return float(out)
    return out


def mu_cdf_left(x):
    """Left limit of the CDF (differs from mu_cdf only at the atom x = 0)."""
    arr = np.asarray(x, dtype=float)
    base = (np.arcsin(np.clip(arr / 2.0, -1.0, 1.0)) + np.pi / 2) / (2.0 * np.pi)
    out = base + 0.5 * (arr > 0.0)
    out = np.where(arr <= -2.0, 0.0, np.where(arr >= 2.0, 1.0, out))
    if np.isscalar(x):
        return float(out)
    return out


@dataclass(frozen=True)
class SeriesVariate:
    """One realization of the coefficients U_h for |h| <= H.

    ``u`` holds U_{-H} ... U_H; entry for h sits at index h + H.
    """

    H: int
    u: np.ndarray
    seed: int
    index: int = 0

    def coeff(self, h: int) -> float:
        return float(self.u[h + self.H])


def series_variate(H: int, seed: int, index: int = 0) -> SeriesVariate:
    """Draw the 2H+1 coefficients for substream ``index`` of ``seed``."""
    if H < 1:
        raise ValueError(f"truncation order must be >= 1, got {H}")
    rng = substream(seed, index)
    u = mu_sample_array(rng, 2 * H + 1)
    u.setflags(write=False)
    return SeriesVariate(H, u, seed, index)


def series_eval(t: float, v: SeriesVariate) -> complex:
    """Kl_H(t) for one realization, summed pairwise in increasing |h|."""
    total = complex(t * v.coeff(0))
    for h in range(1, v.H + 1):
        total += beta_coeff(h, t) * v.coeff(h) + beta_coeff(-h, t) * v.coeff(-h)
    return total


def _beta_matrix(H: int, grid: np.ndarray) -> np.ndarray:
    """Matrix B[h + H, g] = beta(h, t_g), shape (2H+1, len(grid)).

    Arguments are reduced mod 1 before exponentiating so that rational
    knots (t = 1 in particular) produce exact zeros.
    """
    hs = np.arange(-H, H + 1, dtype=float).reshape(-1, 1)
    ts = np.asarray(grid, dtype=float).reshape(1, -1)
    with np.errstate(divide="ignore", invalid="ignore"):
        b = (np.exp(2j * np.pi * ((hs * ts) % 1.0)) - 1.0) / (2j * np.pi * hs)
    b[H, :] = ts[0]
    return b


def series_sample_paths(
    grid, H: int, N: int, seed: int, chunk: int = 1024
) -> np.ndarray:
    """N independent truncated series evaluated on the grid (N x len(grid)).

    Row i depends only on (seed, i), so the output is reproducible and
    insensitive to N or chunking.
    """
    if H < 1 or N < 1:
        raise ValueError("H and N must both be >= 1")
    grid = np.asarray(grid, dtype=float)
    b = _beta_matrix(H, grid)
    out = np.empty((N, grid.size), dtype=complex)
    for start in range(0, N, chunk):
        stop = min(start + chunk, N)
        u = np.empty((stop - start, 2 * H + 1))
        for i in range(start, stop):
            u[i - start] = mu_sample_array(substream(seed, i), 2 * H + 1)
        out[start:stop] = u @ b
    return out


def series_moment_mc(
    ts,
    conj_powers,
    powers,
    H: int = 1024,
    N: int = 100_000,
    seed: int = 0,
    chunk: int = 2048,
) -> tuple[complex, float]:
    """Monte Carlo joint moment E prod conj(Kl_H(t_i))^m_i Kl_H(t_i)^n_i.

    Returns the estimate together with the standard error of the mean
    (combined over real and imaginary parts).
    """
    ts = tuple(float(t) for t in ts)
    ms = tuple(int(m) for m in conj_powers)
    ns = tuple(int(n) for n in powers)
    if not (len(ts) == len(ms) == len(ns) >= 1):
        raise ValueError("t, conjugate-power and power vectors must share a length >= 1")
    grid = np.asarray(ts)
    b = _beta_matrix(H, grid)
    sums: list[complex] = []
    sq_sums: list[float] = []
    for start in range(0, N, chunk):
        stop = min(start + chunk, N)
        u = np.empty((stop - start, 2 * H + 1))
        for i in range(start, stop):
            u[i - start] = mu_sample_array(substream(seed, i), 2 * H + 1)
        values = u @ b
        z = np.ones(stop - start, dtype=complex)
        for col, (m, n) in enumerate(zip(ms, ns)):
            if m:
                z *= np.conj(values[:, col]) ** m
            if n:
                z *= values[:, col] ** n
        sums.append(complex(z.sum()))
        sq_sums.append(float((np.abs(z) ** 2).sum()))
    mean = complex(
        math.fsum(s.real for s in sums) / N, math.fsum(s.imag for s in sums) / N
    )
    second = math.fsum(sq_sums) / N
    var = max(second - abs(mean) ** 2, 0.0)
    return mean, math.sqrt(var / N)


def limit_mixed_second_moment(s: float, t: float, terms: int = 1 << 20) -> complex:
    """E[conj(Kl(s)) Kl(t)] for the untruncated series, by direct summation.

    Equals s*t + sum over h != 0 of conj(beta(h,s)) beta(h,t); the tail
    beyond ``terms`` is O(1/terms).  At s = t this reduces to t.
    """
    hs = np.arange(1, terms + 1, dtype=float)
    hs = np.concatenate([hs, -hs])
    bs = (np.exp(2j * np.pi * ((hs * s) % 1.0)) - 1.0) / (2j * np.pi * hs)
    bt = (np.exp(2j * np.pi * ((hs * t) % 1.0)) - 1.0) / (2j * np.pi * hs)
    return complex(s * t + np.sum(np.conj(bs) * bt))
