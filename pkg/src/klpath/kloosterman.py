"""Normalized Kloosterman sums modulo q = p^n and their polygonal paths.

The complete sum is evaluated two ways: by direct summation over the units
(the oracle, exact up to float accumulation) and by the closed form
2 (s/q) cos(4 pi s / q + theta) driven by a square root of a*b modulo q.
Partial sums are streamed in unit order to build the path, and the
completion toolkit (step function, discrete Fourier coefficients alpha and
their continuum limits beta) rewrites incomplete sums as combinations of
complete ones.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import (
    DomainError,
    NotCoprime,
    ResourceLimit,
    UnsupportedRegime,
)
from .modular import (
    PrimePowerModulus,
    batch_inverse,
    jacobi_symbol,
    sqrt_mod_prime_power,
)

TWO_PI = 2.0 * math.pi

#: streaming block size; one modular inversion is amortized per block
INVERSION_BLOCK = 1024

#: direct sums longer than this switch to compensated accumulation
COMPENSATION_THRESHOLD = 100_000

#: vectorized kernels index with int64 products, so they need q < 2^31
VECTOR_MODULUS_LIMIT = 1 << 31

#: pinned test constant: |alpha(h;t)/p^(n/2) - beta(h;t)| <= ALPHA_BETA_CAP / q
ALPHA_BETA_CAP = 8.0


@dataclass(frozen=True)
class KloostermanParams:
    """A modulus together with the two sum parameters a and b, reduced mod q."""

    mod: PrimePowerModulus
    a: int
    b: int

    def __post_init__(self):
        q = self.mod.q
        object.__setattr__(self, "a", self.a % q)
        object.__setattr__(self, "b", self.b % q)

    def require_units(self) -> None:
        p = self.mod.p
        if self.a % p == 0 or self.b % p == 0:
            raise NotCoprime(
                f"(a, b) = ({self.a}, {self.b}) must both be units modulo {p}"
            )


@dataclass(frozen=True)
class PathPoint:
    """The j-th partial sum, ending at summation endpoint x (a unit mod q)."""

    j: int
    x: int
    value: complex


@dataclass(frozen=True)
class KloostermanPath:
    """All phi(q) vertices of the polygonal path for one parameter pair."""

    params: KloostermanParams
    points: tuple[PathPoint, ...]

    @property
    def complete_sum(self) -> complex:
        return self.points[-1].value


class _Kahan:
    """Neumaier compensated accumulator."""

    __slots__ = ("total", "comp")

    def __init__(self):
        self.total = 0.0
        self.comp = 0.0

    def add(self, v: float) -> None:
        t = self.total + v
        if abs(self.total) >= abs(v):
            self.comp += (self.total - t) + v
        else:
            self.comp += (v - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self.comp


@lru_cache(maxsize=6)
def _unit_tables(p: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Ascending units modulo q and the table of q-th roots of unity."""
    q = p ** n
    if q > VECTOR_MODULUS_LIMIT:
        raise ResourceLimit(f"vectorized tables need q < 2^31; got q = {q}")
    xs = np.arange(1, q, dtype=np.int64)
    xs = xs[xs % p != 0]
    phase = np.exp((2j * np.pi / q) * np.arange(q))
    xs.setflags(write=False)
    phase.setflags(write=False)
    return xs, phase


@lru_cache(maxsize=6)
def _unit_inverses(p: int, n: int) -> np.ndarray:
    """Inverses mod q of the ascending units, aligned with _unit_tables."""
    xs, _ = _unit_tables(p, n)
    q = p ** n
    inv = np.fromiter(
        (pow(int(x), -1, q) for x in xs), dtype=np.int64, count=len(xs)
    )
    inv.setflags(write=False)
    return inv


def _unit_position(x: np.ndarray | int, p: int) -> np.ndarray | int:
    """Index of unit x within the ascending unit list: #units below x."""
    return x - 1 - (x - 1) // p


def _compensated_complex_sum(values: np.ndarray) -> complex:
    if values.size <= COMPENSATION_THRESHOLD:
        return complex(values.sum())
    step = 1 << 16
    re = math.fsum(
        float(values.real[i : i + step].sum()) for i in range(0, values.size, step)
    )
    im = math.fsum(
        float(values.imag[i : i + step].sum()) for i in range(0, values.size, step)
    )
    return complex(re, im)


def _iter_unit_blocks(mod: PrimePowerModulus) -> Iterator[tuple[list[int], list[int]]]:
    """Blocks of (units, inverses) in ascending order, exact integer path."""
    q, p = mod.q, mod.p
    start = 1
    while start < q:
        stop = min(start + INVERSION_BLOCK, q)
        xs = [x for x in range(start, stop) if x % p != 0]
        if xs:
            yield xs, batch_inverse(xs, mod)
        start = stop


def kl_naive(params: KloostermanParams) -> complex:
    """Complete normalized sum by direct summation over the units mod q.

    Exact up to float accumulation; the result is real, so the imaginary
    part doubles as an error meter.
    """
    mod = params.mod
    q, p = mod.q, mod.p
    a, b = params.a, params.b
    scale = 1.0 / math.sqrt(q)
    if q <= VECTOR_MODULUS_LIMIT:
        xs, phase = _unit_tables(p, mod.n)
        inv = _unit_inverses(p, mod.n)
        idx = (a * xs + b * inv) % q
        return _compensated_complex_sum(phase[idx]) * scale
    re, im = _Kahan(), _Kahan()
    for xs, invs in _iter_unit_blocks(mod):
        for x, xi in zip(xs, invs):
            r = (a * x + b * xi) % q
            angle = TWO_PI * r / q
            re.add(math.cos(angle))
            im.add(math.sin(angle))
    return complex(re.value, im.value) * scale


def _closed_form_phase(mod: PrimePowerModulus) -> float:
    """Phase offset: pi/2 for odd n with p = 3 mod 4, else 0."""
    if mod.n % 2 == 1 and mod.p % 4 == 3:
        return math.pi / 2
    return 0.0


def _require_closed_regime(mod: PrimePowerModulus) -> None:
    if mod.n == 1 or mod.p <= 2 * mod.n - 5:
        raise UnsupportedRegime(
            f"closed form needs n >= 2 and p > 2n-5; got p={mod.p}, n={mod.n}"
        )


def kl_closed(params: KloostermanParams) -> float:
    """Complete normalized sum in closed form.

    The general pair (a, b) reduces to (ab, 1) by the change of variable
    x -> b x.  The sum vanishes unless ab is a nonzero square modulo p, in
    which case it equals 2 (s/q) cos(4 pi s / q + theta) for either root s
    of s^2 = ab mod q.
    """
    mod = params.mod
    _require_closed_regime(mod)
    q, p = mod.q, mod.p
    c = params.a * params.b % q
    if c % p == 0:
        return 0.0
    if jacobi_symbol(c, p) != 1:
        return 0.0
    s = sqrt_mod_prime_power(c, mod)
    theta = _closed_form_phase(mod)
    sign = jacobi_symbol(s, q)
    return 2.0 * sign * math.cos(TWO_PI * 2.0 * (s / q) + theta)


@lru_cache(maxsize=4)
def _closed_value_table(p: int, n: int) -> np.ndarray:
    """Closed-form values Kl(c, 1) for every residue c mod q (zeros elsewhere).

    Built by enumerating the canonical square roots s (one per quadratic
    residue class), so the whole table costs O(q) with no per-entry root
    extraction.
    """
    mod = PrimePowerModulus(p, n)
    _require_closed_regime(mod)
    q = mod.q
    if q > VECTOR_MODULUS_LIMIT:
        raise ResourceLimit(f"value table needs q < 2^31; got q = {q}")
    xs = np.arange(1, q, dtype=np.int64)
    half = xs[(xs % p >= 1) & (xs % p <= (p - 1) // 2)]
    theta = _closed_form_phase(mod)
    vals = 2.0 * np.cos((2.0 * TWO_PI / q) * half + theta)
    if n % 2 == 1:
        legendre = np.full(p, -1, dtype=np.int64)
        legendre[0] = 0
        legendre[(np.arange(1, p, dtype=np.int64) ** 2) % p] = 1
        vals *= legendre[half % p]
    table = np.zeros(q)
    table[(half * half) % q] = vals
    table.setflags(write=False)
    return table


def kl_closed_table(mod: PrimePowerModulus) -> np.ndarray:
    """Read-only array V with V[c] = Kl(c, 1) for all residues c mod q."""
    return _closed_value_table(mod.p, mod.n)


def kl_closed_over_units(mod: PrimePowerModulus, b0: int = 1) -> np.ndarray:
    """Values Kl(a, b0) for the units a mod q in ascending order."""
    if b0 % mod.p == 0:
        raise NotCoprime(f"b0 = {b0} must be a unit modulo {mod.p}")
    table = kl_closed_table(mod)
    xs, _ = _unit_tables(mod.p, mod.n)
    return table[(xs * (b0 % mod.q)) % mod.q]


def enumeration_endpoint(j: int, mod: PrimePowerModulus) -> int:
    """Summation endpoint of the j-th partial sum: j-th unit in 1..q."""
    return j + (j - 1) // (mod.p - 1)


def partial_sums_stream(params: KloostermanParams) -> Iterator[PathPoint]:
    """Yield the phi(q) partial sums in enumeration order.

    Single streaming pass: inverses come in blocks from batch_inverse and
    the running sum is compensated, so memory stays O(block).
    """
    params.require_units()
    mod = params.mod
    q = mod.q
    a, b = params.a, params.b
    scale = 1.0 / math.sqrt(q)
    re, im = _Kahan(), _Kahan()
    j = 0
    for xs, invs in _iter_unit_blocks(mod):
        for x, xi in zip(xs, invs):
            r = (a * x + b * xi) % q
            angle = TWO_PI * r / q
            re.add(math.cos(angle))
            im.add(math.sin(angle))
            j += 1
            yield PathPoint(j, x, complex(re.value * scale, im.value * scale))


def kloosterman_path(params: KloostermanParams) -> KloostermanPath:
    """Materialize the full polygonal path."""
    return KloostermanPath(params, tuple(partial_sums_stream(params)))


def path_polyline(params: KloostermanParams) -> list[tuple[float, float]]:
    """Vertex coordinates of the path, ready for CSV or SVG emission."""
    return [(pt.value.real, pt.value.imag) for pt in partial_sums_stream(params)]


def _prefix_values(params: KloostermanParams, positions: tuple[int, ...]) -> dict[int, complex]:
    """Normalized partial sums at the given prefix lengths (1-based).

    Position 0 is accepted and maps to 0.  One pass over the units.
    """
    params.require_units()
    mod = params.mod
    q, p = mod.q, mod.p
    a, b = params.a, params.b
    scale = 1.0 / math.sqrt(q)
    wanted = sorted(set(positions))
    out: dict[int, complex] = {}
    if wanted and wanted[0] == 0:
        out[0] = 0j
        wanted = wanted[1:]
    if not wanted:
        return out
    if q <= VECTOR_MODULUS_LIMIT:
        xs, phase = _unit_tables(p, mod.n)
        inv = _unit_inverses(p, mod.n)
        terms = phase[(a * xs + b * inv) % q]
        prefix = np.cumsum(terms)
        for pos in wanted:
            out[pos] = complex(prefix[pos - 1]) * scale
        return out
    target = wanted[-1]
    it = iter(wanted)
    nxt = next(it)
    for point in partial_sums_stream(params):
        if point.j == nxt:
            out[nxt] = point.value
            if nxt == target:
                break
            nxt = next(it)
    return out


def path_eval(t: float, params: KloostermanParams) -> complex:
    """The path, parametrized linearly over [0, 1].

    Segment j covers ((j-1)/(phi-1), j/(phi-1)]; t = 0 returns the first
    vertex e((a+b)/q) / p^(n/2) and t = 1 the complete sum.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1]; got {t}")
    phi = params.mod.phi
    j = max(1, math.ceil((phi - 1) * t))
    z = _prefix_values(params, (j, j + 1))
    alpha = (phi - 1) * (z[j + 1] - z[j])
    return alpha * (t - (j - 1) / (phi - 1)) + z[j]


def _step_cutoff(t: float, mod: PrimePowerModulus) -> tuple[int, int]:
    """Block index k containing t and the summation cutoff M = floor(x_k(t)).

    Blocks are the left-open intervals ((k-1)/p^(n-1), k/p^(n-1)]; t = 0
    belongs to block 1 with an empty sum.  Knots are resolved to a 1e-12
    float tolerance.
    """
    pn1 = mod.p ** (mod.n - 1)
    k = max(1, math.ceil(t * pn1 - 1e-12))
    m = int(math.floor(mod.phi * t + (k - 1) + 1e-12))
    return m, k


def fourier_alpha(h: int, t: float, mod: PrimePowerModulus) -> complex:
    """Discrete Fourier coefficient of the prefix 1 <= x <= x_k(t).

    Closed geometric evaluation, no O(q) loop: with M = floor(x_k(t)),
    h = 0 gives M / p^(n/2) and otherwise zeta (zeta^M - 1) / (zeta - 1)
    with zeta = e(h/q), normalized by p^(n/2).
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1]; got {t}")
    q = mod.q
    m, _ = _step_cutoff(t, mod)
    scale = 1.0 / math.sqrt(q)
    hq = h % q
    if m <= 0:
        return 0j
    if hq == 0:
        return complex(m * scale)
    zeta = cmath.exp(2j * math.pi * hq / q)
    zeta_m = cmath.exp(2j * math.pi * ((hq * m) % q) / q)
    return zeta * (zeta_m - 1.0) / (zeta - 1.0) * scale


def beta_coeff(h: int, t: float) -> complex:
    """Continuum limit of the Fourier coefficients: t at h = 0, else
    (e(ht) - 1) / (2 pi i h).

    The exponential argument is reduced mod 1 first, so rational knots
    (e.g. t = 1) give exact zeros instead of float residue.
    """
    if h == 0:
        return complex(t)
    return (cmath.exp(2j * math.pi * ((h * t) % 1.0)) - 1.0) / (2j * math.pi * h)


@lru_cache(maxsize=4)
def _complete_sum_table(p: int, n: int) -> np.ndarray:
    """Kl(c, 1) for every residue c, via the closed form when available."""
    mod = PrimePowerModulus(p, n)
    try:
        return _closed_value_table(p, n)
    except UnsupportedRegime:
        pass
    q = mod.q
    if q > 4096:
        raise ResourceLimit(
            f"naive complete-sum table is gated to q <= 4096; got q = {q}"
        )
    table = np.zeros(q)
    for c in range(q):
        if c % p != 0:
            table[c] = kl_naive(KloostermanParams(mod, c, 1)).real
    table.setflags(write=False)
    return table


def completed_step(
    t: float, params: KloostermanParams, method: str = "direct"
) -> complex:
    """Step-function approximant of the path at t.

    method="direct" sums e((ax + b xbar)/q) over the units x <= x_k(t).
    method="completed" evaluates the same quantity through the completion
    identity: (1/p^(n/2)) * sum over a complete residue system h of
    alpha(h; t) Kl(a - h, b).  The two agree exactly in exact arithmetic
    and are exposed separately for cross-testing.
    """
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1]; got {t}")
    params.require_units()
    mod = params.mod
    q, p = mod.q, mod.p
    a, b = params.a, params.b
    scale = 1.0 / math.sqrt(q)
    m, _ = _step_cutoff(t, mod)
    if method == "direct":
        if m <= 0:
            return 0j
        count = m - m // p
        if q <= VECTOR_MODULUS_LIMIT:
            xs, phase = _unit_tables(p, mod.n)
            inv = _unit_inverses(p, mod.n)
            idx = (a * xs[:count] + b * inv[:count]) % q
            return _compensated_complex_sum(phase[idx]) * scale
        total = 0j
        for xs_blk, inv_blk in _iter_unit_blocks(mod):
            for x, xi in zip(xs_blk, inv_blk):
                if x > m:
                    return total * scale
                total += cmath.exp(2j * math.pi * ((a * x + b * xi) % q) / q)
        return total * scale
    if method != "completed":
        raise DomainError(f"unknown step method {method!r}")
    if q > VECTOR_MODULUS_LIMIT:
        raise ResourceLimit("completed evaluation needs q < 2^31")
    table = _complete_sum_table(p, mod.n)
    _, phase = _unit_tables(p, mod.n)
    hs = np.arange(q, dtype=np.int64)
    alpha = np.zeros(q, dtype=complex)
    if m > 0:
        alpha[0] = m
        zeta = phase[hs[1:]]
        zeta_m = phase[(hs[1:] * m) % q]
        alpha[1:] = zeta * (zeta_m - 1.0) / (zeta - 1.0)
    alpha *= scale
    kl_vals = table[((a - hs) % q) * b % q]
    return complex(np.dot(alpha, kl_vals)) * scale
