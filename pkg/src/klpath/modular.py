"""Exact arithmetic modulo odd prime powers q = p^n.

Everything in this module is integer-exact: modular inverses (single and
batched), Jacobi symbols, square roots modulo p and modulo p^n by two
independent constructions (iterated lifting and a truncated p-adic binomial
series), generic root lifting for integer polynomials, and the closed-form
census of roots of X^2 - (pi+1)X + pi modulo p^n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DegeneratePolynomial,
    NotCoprime,
    NotInvertible,
    PrecisionUnsupported,
    PreconditionViolated,
)

#: Moduli must stay below this so that double-width products fit in 124 bits.
WORD_BUDGET = 1 << 62

# Witness set making Miller-Rabin deterministic for all n < 3.3e24 > 2^64.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test, valid below 2^64."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimePowerModulus:
    """An odd prime power modulus q = p^n with its totient precomputed."""

    p: int
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise PreconditionViolated(f"exponent must be >= 1, got {self.n}")
        if self.p < 3 or self.p % 2 == 0 or not is_prime(self.p):
            raise PreconditionViolated(f"{self.p} is not an odd prime")
        if self.p ** self.n >= WORD_BUDGET:
            raise PreconditionViolated(
                f"{self.p}^{self.n} exceeds the machine-word budget 2^62"
            )

    @property
    def q(self) -> int:
        return self.p ** self.n

    @property
    def phi(self) -> int:
        return self.p ** (self.n - 1) * (self.p - 1)

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return f"{self.p}^{self.n}"


def mod_inverse(x: int, mod: PrimePowerModulus) -> int:
    """Inverse of x modulo q.

    Raises:
        NotInvertible: if p divides x.
    """
    q = mod.q
    x %= q
    if x % mod.p == 0:
        raise NotInvertible(x, q)
    return pow(x, -1, q)


def batch_inverse(xs: list[int], mod: PrimePowerModulus) -> list[int]:
    """Invert every entry of ``xs`` modulo q with a single modular inversion.

    Uses the prefix-product trick: one inversion plus 3(k-1) multiplications
    for k inputs.  Deterministic and elementwise equal to :func:`mod_inverse`.

    Raises:
        NotInvertible: carrying the index of the first non-unit entry.
    """
    q, p = mod.q, mod.p
    for i, x in enumerate(xs):
        if x % p == 0:
            raise NotInvertible(x % q, q, index=i)
    k = len(xs)
    if k == 0:
        return []
    prefix = [0] * k
    acc = 1
    for i, x in enumerate(xs):
        acc = acc * x % q
        prefix[i] = acc
    inv_acc = pow(acc, -1, q)
    out = [0] * k
    for i in range(k - 1, 0, -1):
        out[i] = inv_acc * prefix[i - 1] % q
        inv_acc = inv_acc * xs[i] % q
    out[0] = inv_acc % q
    return out


def jacobi_symbol(x: int, m: int) -> int:
    """Jacobi symbol (x / m) for odd positive m.

    For m = p^n this equals the Legendre symbol of x mod p raised to n.
    """
    if m <= 0 or m % 2 == 0:
        raise PreconditionViolated(f"modulus must be odd and positive, got {m}")
    x %= m
    result = 1
    while x != 0:
        while x % 2 == 0:
            x //= 2
            if m % 8 in (3, 5):
                result = -result
        x, m = m, x
        if x % 4 == 3 and m % 4 == 3:
            result = -result
        x %= m
    return result if m == 1 else 0


def sqrt_mod_p(a: int, p: int) -> int | None:
    """Canonical square root of a modulo an odd prime p.

    Returns the root in {1, ..., (p-1)/2} when a is a nonzero quadratic
    residue, 0 when p divides a, and None when a is a non-residue.
    Tonelli-Shanks, with the p = 3 mod 4 fast path.
    """
    a %= p
    if a == 0:
        return 0
    if jacobi_symbol(a, p) != 1:
        return None
    if p % 4 == 3:
        r = pow(a, (p + 1) // 4, p)
        return min(r, p - r)
    # Decompose p - 1 = s * 2^e with s odd.
    s, e = p - 1, 0
    while s % 2 == 0:
        s //= 2
        e += 1
    z = 2
    while jacobi_symbol(z, p) != -1:
        z += 1
    c = pow(z, s, p)
    r = pow(a, (s + 1) // 2, p)
    t = pow(a, s, p)
    m = e
    while t != 1:
        t2 = t
        i = 0
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        r = r * b % p
        c = b * b % p
        t = t * c % p
        m = i
    return min(r, p - r)


def padic_sqrt_coeffs(mod: PrimePowerModulus) -> list[int]:
    """Coefficients c'_0 ... c'_{n-1} of the truncated p-adic square-root series.

    These are the binomial-series coefficients of sqrt(1 + x) reduced modulo
    q: c'_0 = 1 and c'_m = -(2m-3)/(2m) * c'_{m-1}.  The rational recurrence
    is evaluated exactly and reduced at the end, so prime factors shared
    between numerator and denominator cancel before any modular inversion.

    Raises:
        PrecisionUnsupported: if p < 2n - 5 (some coefficient is not a p-adic
            unit in that regime).
    """
    p, n, q = mod.p, mod.n, mod.q
    if p < 2 * n - 5:
        raise PrecisionUnsupported(
            f"series coefficients need p >= 2n-5; got p={p}, n={n}"
        )
    coeffs: list[int] = []
    c = Fraction(1)
    for m in range(n):
        if m >= 1:
            c *= Fraction(-(2 * m - 3), 2 * m)
        if c.denominator % p == 0 or c.numerator % p == 0:
            raise PrecisionUnsupported(
                f"coefficient {m} is not a unit for p={p}, n={n}"
            )
        coeffs.append(c.numerator * pow(c.denominator, -1, q) % q)
    return coeffs


def _canonical_root(s: int, mod: PrimePowerModulus) -> int:
    """Pick, among {s, q-s}, the root whose residue mod p lies in the lower half."""
    s %= mod.q
    return s if s % mod.p <= (mod.p - 1) // 2 else mod.q - s


def _sqrt_by_lifting(a: int, b: int, mod: PrimePowerModulus) -> int:
    """Lift the mod-p root b of x^2 = a through p^2, ..., p^n."""
    p, n = mod.p, mod.n
    x = b
    pj = p
    for _ in range(n - 1):
        pj1 = pj * p
        # Newton step; 2x is a unit because a is coprime to p.
        fx = (x * x - a) % pj1
        x = (x - fx * pow(2 * x, -1, pj1)) % pj1
        pj = pj1
    return x


def _sqrt_by_series(a: int, b: int, mod: PrimePowerModulus) -> int:
    """Evaluate the truncated binomial series at a = b^2 + pk."""
    p, n, q = mod.p, mod.n, mod.q
    coeffs = padic_sqrt_coeffs(mod)
    k = (a - b * b) // p
    binv = pow(b, -1, q)
    binv2 = binv * binv % q
    total = 0
    term = 1  # binv^(2m) * p^m * k^m mod q, starting at m = 0
    factor = binv2 * p % q * (k % q) % q
    for m in range(n):
        total = (total + coeffs[m] * term) % q
        term = term * factor % q
    return b * total % q


def sqrt_mod_prime_power(
    a: int, mod: PrimePowerModulus, method: str = "both"
) -> int | None:
    """Canonical root of s^2 = a modulo q = p^n, or None for a non-residue.

    Two independent constructions are available: iterated lifting of the
    mod-p root ("hensel") and the truncated p-adic binomial series
    ("series", valid for p >= 2n-5).  The default "both" runs the two and
    insists they agree; when the series regime is unavailable it falls back
    to lifting alone.

    The canonical root is the one whose residue mod p lies in
    {1, ..., (p-1)/2}.

    Raises:
        NotCoprime: if p divides a.
        PrecisionUnsupported: if method="series" outside its regime.
    """
    p, n, q = mod.p, mod.n, mod.q
    a %= q
    if a % p == 0:
        raise NotCoprime(f"{a} is divisible by {p}; no square root is provided")
    b = sqrt_mod_p(a, p)
    if b is None:
        return None
    if n == 1:
        return b
    if method == "hensel":
        return _canonical_root(_sqrt_by_lifting(a, b, mod), mod)
    if method == "series":
        return _canonical_root(_sqrt_by_series(a, b, mod), mod)
    if method != "both":
        raise PreconditionViolated(f"unknown square-root method {method!r}")
    lifted = _canonical_root(_sqrt_by_lifting(a, b, mod), mod)
    if p >= 2 * n - 5:
        series = _canonical_root(_sqrt_by_series(a, b, mod), mod)
        if series != lifted:
            raise AssertionError(
                f"square-root constructions disagree for a={a} mod {q}: "
                f"lifting={lifted}, series={series}"
            )
    return lifted


@dataclass(frozen=True)
class IntPolynomial:
    """Integer polynomial, constant term first, trailing zeros trimmed."""

    coefficients: tuple[int, ...]

    def __post_init__(self):
        coeffs = tuple(self.coefficients)
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs = coeffs[:-1]
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        if self.coefficients == (0,):
            return 0
        return len(self.coefficients) - 1

    def eval_mod(self, x: int, m: int) -> int:
        acc = 0
        for c in reversed(self.coefficients):
            acc = (acc * x + c) % m
        return acc

    def derivative(self) -> "IntPolynomial":
        cs = self.coefficients
        if len(cs) == 1:
            return IntPolynomial((0,))
        return IntPolynomial(tuple(i * c for i, c in enumerate(cs) if i >= 1))


def hensel_lift_roots(f: IntPolynomial, p: int, k: int) -> list[int]:
    """All roots of f(x) = 0 modulo p^k, by iterated lifting from mod p.

    A root x0 mod p^j with f'(x0) a unit lifts uniquely; a degenerate root
    (p | f'(x0)) lifts to the p values x0 + p^j * t exactly when
    p^(j+1) | f(x0), and otherwise dies.

    Raises:
        DegeneratePolynomial: if f vanishes identically modulo p.
        PreconditionViolated: if k < 1.
    """
    if k < 1:
        raise PreconditionViolated(f"target exponent must be >= 1, got {k}")
    if all(c % p == 0 for c in f.coefficients):
        raise DegeneratePolynomial(
            f"polynomial is identically zero modulo {p}; root set is all of Z/p^{k}"
        )
    fprime = f.derivative()
    cs = tuple(reversed(f.coefficients))

    def feval(x: int, m: int) -> int:
        acc = 0
        for c in cs:
            acc = (acc * x + c) % m
        return acc

    roots = [x for x in range(p) if feval(x, p) == 0]
    pj = p
    for _ in range(k - 1):
        pj1 = pj * p
        lifted: list[int] = []
        for r in roots:
            if fprime.eval_mod(r, p) != 0:
                fx = feval(r, pj1)
                step = (r - fx * pow(fprime.eval_mod(r, pj1), -1, pj1)) % pj1
                lifted.append(step)
            elif feval(r, pj1) == 0:
                lifted.extend(r + pj * t for t in range(p))
        roots = lifted
        pj = pj1
    return sorted(roots)


def _p_valuation(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def count_quadratic_roots_closed(pi: int, mod: PrimePowerModulus) -> int:
    """Closed-form number of roots of X^2 - (pi+1)X + pi modulo p^n.

    Requires p | pi - 1.  Writing l for the p-valuation of pi - 1 (clamped
    to n, i.e. read modulo p^n), the census is:

        n even:  2 p^l   for 1 <= l <= n/2 - 1,     p^(n/2)     otherwise;
        n odd:   2 p^l   for 1 <= l <= (n-1)/2,     p^((n-1)/2) otherwise.

    Raises:
        PreconditionViolated: if p does not divide pi - 1.
    """
    p, n, q = mod.p, mod.n, mod.q
    d = (pi - 1) % q
    ell = n if d == 0 else min(_p_valuation(d, p), n)
    if ell == 0:
        raise PreconditionViolated(
            f"census requires p | pi - 1; got pi={pi} with p={p}"
        )
    if n % 2 == 0:
        if 1 <= ell <= n // 2 - 1:
            return 2 * p ** ell
        return p ** (n // 2)
    if 1 <= ell <= (n - 1) // 2:
        return 2 * p ** ell
    return p ** ((n - 1) // 2)
