"""Quantitative experiments: path moments, shifted-sum moments and their
main terms, exact unit counts, fourth moments of incomplete sums by two
algorithms, increment moments for tightness, and distribution distances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from time import perf_counter
from typing import Callable

import numpy as np

from .errors import (
    DomainError,
    NotCoprime,
    PatternCollision,
    PreconditionViolated,
    ResourceLimit,
)
from .kloosterman import (
    VECTOR_MODULUS_LIMIT,
    KloostermanParams,
    _step_cutoff,
    _unit_inverses,
    _unit_position,
    _unit_tables,
    kl_closed_table,
    kl_naive,
)
from .modular import PrimePowerModulus, sqrt_mod_p
from .random_series import substream

#: pinned regression caps (calibrated once; the theory supplies only
#: "bounded by an absolute constant")
FOURTH_MOMENT_RATIO_CAP = 32.0
INCREMENT_RATIO_CAP = 100.0

#: total multiplicity cap for shift patterns
MAX_PATTERN_WEIGHT = 64

_CHUNK_TARGET = 1 << 21  # elements per vectorized a-chunk


@dataclass(frozen=True)
class ShiftPattern:
    """Multiplicities mu(tau) >= 1 on a finite set of shifts tau mod q."""

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.entries:
            raise PreconditionViolated("shift pattern must be nonempty")
        object.__setattr__(
            self, "entries", tuple(sorted((int(t), int(m)) for t, m in self.entries))
        )
        if any(m < 1 for _, m in self.entries):
            raise PreconditionViolated("multiplicities must be >= 1")
        if len({t for t, _ in self.entries}) != len(self.entries):
            raise PreconditionViolated("shifts must be distinct")
        if self.total_weight > MAX_PATTERN_WEIGHT:
            raise PreconditionViolated(
                f"total multiplicity exceeds the cap {MAX_PATTERN_WEIGHT}"
            )

    @classmethod
    def from_dict(cls, entries: dict[int, int]) -> "ShiftPattern":
        return cls(tuple(entries.items()))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.entries)

    @property
    def total_weight(self) -> int:
        return sum(m for _, m in self.entries)

    def support_mod_p(self, p: int) -> tuple[int, ...]:
        return tuple(sorted({t % p for t, _ in self.entries}))

    def distinct_mod_p(self, p: int) -> bool:
        return len(self.support_mod_p(p)) == len(self.entries)


@dataclass(frozen=True)
class MomentSpec:
    """Evaluation times with conjugate/plain powers and the fixed b0."""

    ts: tuple[float, ...]
    conj_powers: tuple[int, ...]
    powers: tuple[int, ...]
    b0: int = 1

    def __post_init__(self):
        object.__setattr__(self, "ts", tuple(float(t) for t in self.ts))
        object.__setattr__(self, "conj_powers", tuple(int(m) for m in self.conj_powers))
        object.__setattr__(self, "powers", tuple(int(n) for n in self.powers))
        if not (len(self.ts) == len(self.conj_powers) == len(self.powers) >= 1):
            raise PreconditionViolated("t, m and n vectors must share a length >= 1")
        if any(not 0.0 <= t <= 1.0 for t in self.ts):
            raise DomainError("every t must lie in [0, 1]")
        if any(b > a for a, b in zip(self.ts[1:], self.ts)):
            raise PreconditionViolated("t vector must be strictly increasing")
        if any(m < 0 for m in self.conj_powers) or any(n < 0 for n in self.powers):
            raise PreconditionViolated("powers must be non-negative")
        if self.total_degree < 1:
            raise PreconditionViolated("total degree must be >= 1")

    @property
    def total_degree(self) -> int:
        return sum(self.conj_powers) + sum(self.powers)


@dataclass(frozen=True)
class IntervalSpec:
    """Integer interval [lo, hi] inside [1, q), membership excludes p | x."""

    lo: int
    hi: int

    def members(self, mod: PrimePowerModulus) -> np.ndarray:
        if not 1 <= self.lo <= self.hi < mod.q:
            raise PreconditionViolated(
                f"interval [{self.lo}, {self.hi}] must satisfy 1 <= lo <= hi < q"
            )
        xs = np.arange(self.lo, self.hi + 1, dtype=np.int64)
        xs = xs[xs % mod.p != 0]
        if xs.size == 0:
            raise PreconditionViolated("interval contains no units")
        return xs

    def size(self, mod: PrimePowerModulus) -> int:
        return int(self.members(mod).size)


@dataclass
class ExperimentReport:
    """Named quantitative check: parameters, values, tolerance, verdict."""

    name: str
    params: dict
    observed: object
    reference: object
    provenance: str
    tolerance: object
    passed: bool
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "params": _jsonable(self.params),
            "observed": _jsonable(self.observed),
            "reference": _jsonable(self.reference),
            "provenance": self.provenance,
            "tolerance": _jsonable(self.tolerance),
            "pass": bool(self.passed),
            "seconds": round(self.seconds, 6),
        }


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return value


def _prefix_columns(terms: np.ndarray, positions: list[int]) -> dict[int, np.ndarray]:
    """Row-wise prefix sums of ``terms`` at the given 1-based positions.

    Shared segment boundaries make this one reduceat + cumsum per chunk
    instead of a full cumulative pass.
    """
    length = terms.shape[1]
    wanted = sorted(set(positions))
    out: dict[int, np.ndarray] = {}
    if wanted and wanted[0] == 0:
        out[0] = np.zeros(terms.shape[0], dtype=complex)
        wanted = wanted[1:]
    if not wanted:
        return out
    inner = [pos for pos in wanted if pos < length]
    bounds = [0] + inner
    seg = np.add.reduceat(terms, bounds, axis=1)
    pref = np.cumsum(seg, axis=1)
    for i, pos in enumerate(inner):
        out[pos] = pref[:, i]
    if wanted[-1] == length:
        out[length] = pref[:, -1]
    return out


def _moment_pass(
    mod: PrimePowerModulus,
    b0: int,
    specs: list[MomentSpec],
    use_step: bool,
) -> list[complex]:
    """Average the requested moment products over all units a in one pass."""
    if mod.n < 2:
        raise PreconditionViolated("path moments are defined for n >= 2")
    if b0 % mod.p == 0:
        raise NotCoprime(f"b0 = {b0} must be a unit modulo {mod.p}")
    q, p, phi = mod.q, mod.p, mod.phi
    xs, phase = _unit_tables(p, mod.n)
    inv = _unit_inverses(p, mod.n)
    shift = (b0 % q) * inv % q
    scale = 1.0 / math.sqrt(q)

    # Per spec and per t: either the pair (j, j+1) of path vertices or the
    # single prefix count of the step function.
    needed: list[list[tuple]] = []
    positions: set[int] = set()
    for spec in specs:
        cols = []
        for t in spec.ts:
            if use_step:
                m, _ = _step_cutoff(t, mod)
                count = max(m - m // p, 0) if m > 0 else 0
                cols.append(("step", count))
                positions.add(count)
            else:
                j = max(1, math.ceil((phi - 1) * t))
                cols.append(("path", j, t))
                positions.update((j, j + 1))
        needed.append(cols)
    pos_list = sorted(positions)

    chunk = max(1, _CHUNK_TARGET // len(xs))
    sums = [[] for _ in specs]
    for start in range(0, len(xs), chunk):
        a_blk = xs[start : start + chunk].reshape(-1, 1)
        idx = (a_blk * xs + shift) % q
        terms = phase[idx]
        pref = _prefix_columns(terms, pos_list)
        for si, (spec, cols) in enumerate(zip(specs, needed)):
            z = np.ones(a_blk.shape[0], dtype=complex)
            for (kind, *info), m_pow, n_pow in zip(
                cols, spec.conj_powers, spec.powers
            ):
                if kind == "step":
                    count = info[0]
                    val = pref[count] * scale if count else np.zeros_like(z)
                else:
                    j, t = info
                    zj = pref[j] * scale
                    zj1 = pref[j + 1] * scale
                    val = zj + (phi - 1) * (zj1 - zj) * (t - (j - 1) / (phi - 1))
                if m_pow:
                    z *= np.conj(val) ** m_pow
                if n_pow:
                    z *= val ** n_pow
            sums[si].append(complex(z.sum()))
    out = []
    for parts in sums:
        out.append(
            complex(
                math.fsum(s.real for s in parts) / phi,
                math.fsum(s.imag for s in parts) / phi,
            )
        )
    return out


def empirical_moment(
    spec: MomentSpec, mod: PrimePowerModulus, use_step: bool = False
) -> complex:
    """Average of prod conj(X(t_i))^m_i X(t_i)^n_i over all units a.

    X is the path evaluation by default, or the step function when
    ``use_step`` is set.
    """
    return _moment_pass(mod, spec.b0, [spec], use_step)[0]


def empirical_moments(
    specs: list[MomentSpec], mod: PrimePowerModulus, use_step: bool = False
) -> list[complex]:
    """Several moments sharing one pass over a; all specs must share b0."""
    if len({s.b0 for s in specs}) != 1:
        raise PreconditionViolated("all specs in one pass must share b0")
    return _moment_pass(mod, specs[0].b0, specs, use_step)


@lru_cache(maxsize=8)
def _naive_complete_table(p: int, n: int) -> np.ndarray:
    mod = PrimePowerModulus(p, n)
    if mod.q > 4096:
        raise ResourceLimit("naive complete-sum table gated to q <= 4096")
    table = np.zeros(mod.q)
    for c in range(mod.q):
        if c % p != 0:
            table[c] = kl_naive(KloostermanParams(mod, c, 1)).real
    table.setflags(write=False)
    return table


def shifted_moment(
    pattern: ShiftPattern, b0: int, mod: PrimePowerModulus
) -> float:
    """Average over units a of prod_tau Kl(a + tau, b0)^mu(tau).

    Uses the closed form for n >= 2 (one table of complete sums), falling
    back to naive summation when the closed regime is unavailable.
    """
    if b0 % mod.p == 0:
        raise NotCoprime(f"b0 = {b0} must be a unit modulo {mod.p}")
    q = mod.q
    if mod.n >= 2 and mod.p > 2 * mod.n - 5:
        table = kl_closed_table(mod)
    else:
        table = _naive_complete_table(mod.p, mod.n)
    xs, _ = _unit_tables(mod.p, mod.n)
    acc = np.ones(len(xs))
    for tau, mult in pattern.entries:
        vals = table[(xs + tau) % q * (b0 % q) % q]
        acc *= vals ** mult
    step = 1 << 16
    total = math.fsum(
        float(acc[i : i + step].sum()) for i in range(0, len(acc), step)
    )
    return total / mod.phi


def a_count_exact(pattern: ShiftPattern, mod: PrimePowerModulus) -> int:
    """|{a unit mod q : a + tau is a nonzero square mod p for all tau}|.

    The condition only depends on a mod p, so the count is p^(n-1) times an
    exact enumeration over the units modulo p.
    """
    p = mod.p
    residues = pattern.support_mod_p(p)
    squares = {(x * x) % p for x in range(1, p)}
    hits = sum(
        1
        for a in range(1, p)
        if all((a + t) % p in squares for t in residues)
    )
    return p ** (mod.n - 1) * hits


def shifted_moment_main_term(pattern: ShiftPattern, mod: PrimePowerModulus) -> float:
    """Main term: prod_tau [mu(tau) even] C(mu, mu/2) times |A| / phi(q)."""
    if not pattern.distinct_mod_p(mod.p):
        raise PatternCollision(
            "support residues must stay distinct modulo p for the main term"
        )
    coeff = 1
    for _, mult in pattern.entries:
        if mult % 2 == 1:
            return 0.0
        coeff *= math.comb(mult, mult // 2)
    return coeff * a_count_exact(pattern, mod) / mod.phi


def n_count(
    p: int,
    shifts: tuple[int, ...],
    ells: tuple[int, ...],
    w: int,
    n: int = 2,
) -> int:
    """Exact count of half-range root tuples subject to the linear constraints.

    Tuples (b_tau) in {1, ..., (p-1)/2}^|T| must satisfy
    b_tau^2 - tau = b_tau'^2 - tau' mod p with every b_tau^2 - tau a unit;
    among those, count the tuples with sum of ell_tau / b_tau = w mod p and,
    for 2 <= j <= n-1, sum of ell_tau / b_tau^(2j-1) = 0 mod p.

    For a fixed common value c = b_tau^2 - tau there is at most one tuple,
    because half-range square roots are unique; the enumeration is O(p |T|).
    """
    shifts = tuple(int(t) for t in shifts)
    ells = tuple(int(l) for l in ells)
    if len(shifts) != len(ells) or not shifts:
        raise PreconditionViolated("shifts and multipliers must align and be nonempty")
    if len({t % p for t in shifts}) != len(shifts):
        raise PreconditionViolated("shifts must be distinct modulo p")
    if any(abs(l) >= p for l in ells):
        raise PreconditionViolated("every |ell| must be < p")
    if all(l % p == 0 for l in ells):
        raise PreconditionViolated("the multiplier vector must be nonzero")
    count = 0
    tau0 = shifts[0]
    for b_first in range(1, (p - 1) // 2 + 1):
        c = (b_first * b_first - tau0) % p
        if c == 0:
            continue
        bs = []
        ok = True
        for tau in shifts:
            target = (c + tau) % p
            if target == 0:
                ok = False
                break
            root = sqrt_mod_p(target, p)
            if root is None:
                ok = False
                break
            bs.append(root)
        if not ok:
            continue
        m_first = sum(l * pow(b, -1, p) for l, b in zip(ells, bs)) % p
        if m_first != w % p:
            continue
        good = True
        for j in range(2, n):
            mj = sum(l * pow(b, -(2 * j - 1), p) for l, b in zip(ells, bs)) % p
            if mj != 0:
                good = False
                break
        if good:
            count += 1
    return count


def quadruple_count(
    interval: IntervalSpec, mod: PrimePowerModulus, mod1: int, mod2: int
) -> int:
    """Quadruples in I^4 with x1+x2 = x3+x4 mod mod1 and the same for inverses mod mod2.

    Meet-in-the-middle: hash the pair key (x_i + x_j mod mod1,
    xbar_i + xbar_j mod mod2) and sum squared bucket sizes.  Exact integer.
    """
    q = mod.q
    allowed = {q, q // mod.p}
    if mod1 not in allowed or mod2 not in allowed:
        raise PreconditionViolated("congruence moduli must be q or q/p")
    xs = interval.members(mod)
    inv = _unit_inverses(mod.p, mod.n)[_unit_position(xs, mod.p)]
    s1 = (xs[:, None] + xs[None, :]) % mod1
    s2 = (inv[:, None] + inv[None, :]) % mod2
    keys = (s1 * mod2 + s2).ravel()
    _, counts = np.unique(keys, return_counts=True)
    return int((counts.astype(object) ** 2).sum())


def fourth_moment(
    interval: IntervalSpec, mod: PrimePowerModulus, algorithm: str = "counting"
) -> float:
    """Fourth moment of the incomplete sum over I, averaged over all (a, b).

    "direct" evaluates the definition (O(phi^2 |I|), gated to q <= 200);
    "counting" expands by orthogonality of additive characters into four
    quadruple counts combined as c1 - c2/p - c3/p + c4/p^2, an exact
    rational reduced once at the end.
    """
    q, p, phi = mod.q, mod.p, mod.phi
    if algorithm == "counting":
        qp = q // p
        c1 = quadruple_count(interval, mod, q, q)
        c2 = quadruple_count(interval, mod, q, qp)
        c3 = quadruple_count(interval, mod, qp, q)
        c4 = quadruple_count(interval, mod, qp, qp)
        exact = (
            Fraction(c1)
            - Fraction(c2, p)
            - Fraction(c3, p)
            + Fraction(c4, p * p)
        ) / Fraction(phi * phi)
        return float(exact)
    if algorithm != "direct":
        raise PreconditionViolated(f"unknown fourth-moment algorithm {algorithm!r}")
    if q > 200:
        raise ResourceLimit("direct fourth moment is gated to q <= 200")
    xs = interval.members(mod)
    units, phase = _unit_tables(p, mod.n)
    inv = _unit_inverses(p, mod.n)[_unit_position(xs, p)]
    w = phase[(units[:, None] * inv[None, :]) % q]  # rows: b, cols: interval
    parts = []
    for a in units:
        u = phase[(int(a) * xs) % q]
        s = w @ u
        parts.append(float((np.abs(s) ** 4).sum()))
    return math.fsum(parts) / (phi * phi * q * q)


def increment_moment(s: float, t: float, mod: PrimePowerModulus) -> float:
    """Fourth moment of the path increment over all (a, b) pairs, exact.

    Gated by phi(q) <= 2000 since the average runs over phi^2 pairs.
    """
    if not 0.0 <= s <= t <= 1.0:
        raise DomainError("need 0 <= s <= t <= 1")
    phi = mod.phi
    if phi > 2000:
        raise ResourceLimit("increment moment is gated to phi(q) <= 2000")
    if s == t:
        return 0.0
    q, p = mod.q, mod.p
    xs, phase = _unit_tables(p, mod.n)
    inv = _unit_inverses(p, mod.n)
    scale = 1.0 / math.sqrt(q)
    j_s = max(1, math.ceil((phi - 1) * s))
    j_t = max(1, math.ceil((phi - 1) * t))
    pos_list = sorted({j_s, j_s + 1, j_t, j_t + 1})
    parts = []
    b_rows = (xs[:, None] * inv[None, :]) % q
    for a in xs:
        idx = (int(a) * xs[None, :] + b_rows) % q
        terms = phase[idx]
        pref = _prefix_columns(terms, pos_list)

        def interp(j: int, tt: float) -> np.ndarray:
            zj = pref[j] * scale
            zj1 = pref[j + 1] * scale
            return zj + (phi - 1) * (zj1 - zj) * (tt - (j - 1) / (phi - 1))

        diff = interp(j_t, t) - interp(j_s, s)
        parts.append(float((np.abs(diff) ** 4).sum()))
    return math.fsum(parts) / (phi * phi)


def ks_statistic(samples, cdf: Callable, cdf_left: Callable | None = None) -> float:
    """Sup distance between the empirical CDF and a reference CDF.

    Ties are handled through cumulative counts at the distinct values, and
    ``cdf_left`` supplies left limits at atoms of the reference law (the
    sup is scanned over sample points with one-sided limits, which is exact
    whenever every reference atom carries sample mass).
    """
    xs = np.asarray(samples, dtype=float)
    n = xs.size
    if n == 0:
        raise PreconditionViolated("samples must be nonempty")
    values, counts = np.unique(xs, return_counts=True)
    cum = np.cumsum(counts)
    ecdf_hi = cum / n
    ecdf_lo = (cum - counts) / n
    f_hi = np.asarray(cdf(values), dtype=float)
    f_lo = np.asarray((cdf_left or cdf)(values), dtype=float)
    return float(
        max(np.abs(ecdf_hi - f_hi).max(), np.abs(ecdf_lo - f_lo).max())
    )


def tightness_sweep(
    mod: PrimePowerModulus, trials: int, seed: int
) -> ExperimentReport:
    """Sample (s, t) pairs in both increment regimes and bound the ratio
    increment_moment / (n (t-s)^2) by the pinned cap."""
    started = perf_counter()
    rng = substream(seed, 0)
    boundary = 1.0 / (mod.phi - 1)
    ratios = []
    pairs = []
    for i in range(trials):
        if i % 2 == 0:
            delta = rng.uniform(0.0, boundary)
        else:
            delta = rng.uniform(boundary, 1.0)
        if delta == 0.0:
            continue
        s = rng.uniform(0.0, 1.0 - delta)
        t = s + delta
        inc = increment_moment(s, t, mod)
        ratios.append(inc / (mod.n * delta * delta))
        pairs.append((s, t))
    observed = max(ratios) if ratios else 0.0
    return ExperimentReport(
        name=f"tightness-increment-q{mod.q}",
        params={"p": mod.p, "n": mod.n, "trials": trials, "seed": seed},
        observed={"max_ratio": observed, "pairs": len(pairs), "ratios": ratios},
        reference={"ratio_cap": INCREMENT_RATIO_CAP},
        provenance="exhaustive increment average over all parameter pairs",
        tolerance=INCREMENT_RATIO_CAP,
        passed=observed <= INCREMENT_RATIO_CAP,
        seconds=perf_counter() - started,
    )
