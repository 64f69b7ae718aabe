"""Best simultaneous approximations in the Euclidean norm.

A target alpha in R^n (n = 1, 2, 3) is known through enclosures
``alpha_i in [(c_i - rad)/den, (c_i + rad)/den]`` that can be refined on
request.  Every decision (nearest integer point, comparison of remainders)
is taken only when the enclosure makes it certain; otherwise the
enclosure is refined, and if that is impossible a PrecisionError is raised.

Two search methods are provided.  ``scan`` walks q = 1, 2, ... and is the
reference.  ``lattice`` enumerates, for geometrically growing bounds Q, all
integer points in the cylinder {q <= Q, |q alpha - a| < current minimum}
with an LLL-reduced basis, which makes q far beyond 10^7 reachable.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import gmpy2
from gmpy2 import mpfr, mpq, mpz, isqrt

DEFAULT_MAX_BITS = 4096
SCAN_LIMIT = 1 << 14


class PrecisionError(ArithmeticError):
    def __init__(self, msg, q=None):
        super().__init__(msg)
        self.q = q


class TieError(ArithmeticError):
    def __init__(self, msg, q=None, kind=None):
        super().__init__(msg)
        self.q = q
        self.kind = kind


@dataclass(frozen=True)
class Enclosure:
    centers: tuple
    den: mpz
    rad: mpz

    @property
    def exact(self):
        return self.rad == 0

    def bounds(self):
        return [(mpq(c - self.rad, self.den), mpq(c + self.rad, self.den)) for c in self.centers]


class Target:
    """A point of R^n given by refinable rational enclosures."""

    def __init__(self, dim, refine, exact=None, label="", max_bits=None):
        if dim not in (1, 2, 3):
            raise ValueError("dimension must be 1, 2 or 3")
        self.dim = dim
        self._refine = refine
        self.exact = exact
        self.label = label
        self.max_bits = max_bits
        self._cache = {}

    def enclosure(self, bits):
        """Enclosure with radius at most 2^-bits (exact targets ignore bits)."""
        if self.exact is not None:
            return self._exact_enc
        if self.max_bits is not None and bits > self.max_bits:
            raise PrecisionError(f"target {self.label!r} is only known to {self.max_bits} bits")
        if bits not in self._cache:
            self._cache[bits] = self._refine(bits)
        return self._cache[bits]

    @classmethod
    def rational(cls, coords, label=""):
        fr = [mpq(Fraction(c)) if isinstance(c, str) else mpq(c) for c in coords]
        den = mpz(1)
        for x in fr:
            den = gmpy2.lcm(den, x.denominator)
        enc = Enclosure(tuple(x.numerator * (den // x.denominator) for x in fr), den, mpz(0))
        t = cls(len(fr), None, exact=tuple(fr), label=label or ",".join(map(str, fr)))
        t._exact_enc = enc
        return t

    @classmethod
    def from_intervals(cls, bounds, label="", refine=None):
        """Target known only through fixed rational intervals (lo_i, hi_i)."""
        lo = [mpq(a) for a, _ in bounds]
        hi = [mpq(b) for _, b in bounds]
        width = max(h - l for l, h in zip(lo, hi))
        avail = -1 if width == 0 else int(-gmpy2.floor(gmpy2.log2(mpfr(width)))) - 2

        def enc(bits):
            if refine is not None and bits > avail:
                return refine(bits)
            den = mpz(1) << max(bits, 1)
            # centre rounded to the grid; radius covers interval plus rounding
            cs, rad = [], mpz(0)
            for l, h in zip(lo, hi):
                c = _round(((l + h) / 2) * den)
                cs.append(c)
                rad = max(rad, _ceil(max(c - l * den, h * den - c)))
            return Enclosure(tuple(cs), den, rad)

        return cls(len(lo), enc, label=label, max_bits=None if refine else max(avail, 8))

    @classmethod
    def from_decimal(cls, strings, label=""):
        """Decimal strings read as exact decimals +- half a unit of the last digit."""
        bounds = []
        for s in strings:
            s = s.strip()
            f = Fraction(s)
            digits = len(s.split(".")[1]) if "." in s else 0
            half = Fraction(1, 2 * 10**digits)
            bounds.append((f - half, f + half))
        return cls.from_intervals(bounds, label=label or ",".join(strings))

    @classmethod
    def from_mpmath(cls, funcs, label=""):
        """Target whose coordinates are computed by mpmath callables at any precision."""
        from mpmath import mp

        def enc(bits):
            with mp.workprec(bits + 32):
                cs = [mpz(int(mp.nint(f() * mp.mpf(2) ** bits))) for f in funcs]
            return Enclosure(tuple(cs), mpz(1) << bits, mpz(2))

        return cls(len(funcs), enc, label=label)


@dataclass(frozen=True)
class BestApproxRecord:
    q: mpz
    a: tuple
    xi_sq: tuple  # (lo, hi) as mpq

    def xi_sq_mid(self):
        lo, hi = self.xi_sq
        return (lo + hi) / 2

    def log_xi(self):
        return 0.5 * log_pos(self.xi_sq_mid())

    def vector(self):
        return (self.q,) + tuple(self.a)


@dataclass(frozen=True)
class ExponentEstimate:
    omega_est: float
    omega_hat_est: float
    ratio_limsup_est: float
    window: tuple
    policy: str = field(default="last half of consecutive record pairs")


def log_pos(x):
    x = mpq(x)
    if x <= 0:
        raise ValueError("log of a non-positive number")
    return float(gmpy2.log(mpfr(x, 80)))


def _round(x):
    x = mpq(x)
    return mpz((2 * x.numerator + x.denominator) // (2 * x.denominator))


def _ceil(x):
    x = mpq(x)
    return mpz(-((-x.numerator) // x.denominator))


def _nearest(num, den):
    """Nearest integer to num/den (den > 0) and whether num/den is a half-integer."""
    a = (2 * num + den) // (2 * den)
    return a, 2 * (num - a * den) == -den


def _xi_bounds(enc, q, a):
    """Integer bounds (lo, hi) on den^2 * |q alpha - a|^2."""
    lo = hi = mpz(0)
    w = q * enc.rad
    for c, ai in zip(enc.centers, a):
        r = q * c - ai * enc.den
        rl, rh = r - w, r + w
        hi += max(rl * rl, rh * rh)
        if rl > 0:
            lo += rl * rl
        elif rh < 0:
            lo += rh * rh
    return lo, hi


def _nearest_vector(enc, q):
    """The nearest integer vector to q alpha, or None if the enclosure cannot decide.

    A coordinate of q alpha at an exact half-integer gives two nearest
    points; the second element of the result flags it.
    """
    a = []
    tied = False
    w = q * enc.rad
    for c in enc.centers:
        x = q * c
        lo, tie = _nearest(x - w, enc.den)
        hi, _ = _nearest(x + w, enc.den)
        if lo != hi:
            return None, False
        tied |= tie and enc.exact
        a.append(lo)
    return tuple(a), tied


def _record(enc, q, a):
    lo, hi = _xi_bounds(enc, q, a)
    d2 = enc.den * enc.den
    return BestApproxRecord(mpz(q), tuple(mpz(x) for x in a), (mpq(lo, d2), mpq(hi, d2)))


class _Search:
    """Running-minimum state shared by both methods."""

    def __init__(self, target, q_max, ties, bits, max_bits):
        self.target = target
        self.q_max = mpz(q_max)
        self.ties = ties
        self.max_bits = max_bits
        self.bits = min(bits, self.cap())
        self.enc = target.enclosure(self.bits)
        self.records = []
        self.done = False

    def cap(self):
        if self.target.max_bits is not None:
            return min(self.max_bits, self.target.max_bits)
        return self.max_bits

    def refine(self, q):
        new = min(self.bits * 2, self.cap())
        if self.enc.exact or new <= self.bits:
            raise PrecisionError(f"cannot decide at q={q} with {self.bits} bits", q=q)
        self.bits = new
        self.enc = self.target.enclosure(self.bits)

    def raise_to(self, bits):
        bits = min(bits, self.cap())
        if not self.enc.exact and bits > self.bits:
            self.bits = bits
            self.enc = self.target.enclosure(bits)

    def offer(self, q, a, tied=False):
        """Process the candidate (q, a); returns False if precision must be raised."""
        lo, hi = _xi_bounds(self.enc, q, a)
        d2 = self.enc.den * self.enc.den
        if self.records:
            cur = self.records[-1]
            clo, chi = _xi_bounds(self.enc, cur.q, cur.a)
            if hi < clo:
                pass
            elif lo > chi or (lo == chi and not self.enc.exact):
                return True
            elif self.enc.exact and lo == clo:
                if self.ties == "error":
                    raise TieError(f"q={q} matches the current minimum at q={cur.q}", q=q, kind="equal-minimum")
                return True
            else:
                return False
        if tied:
            # only matters when the point would become a record
            raise TieError(f"two nearest integer points at q={q}", q=q, kind="same-q")
        self.records.append(BestApproxRecord(mpz(q), tuple(mpz(x) for x in a), (mpq(lo, d2), mpq(hi, d2))))
        if self.enc.exact and hi == 0:
            self.done = True
        return True

    def finish(self):
        # refresh all intervals at the final precision
        return [_record(self.enc, r.q, r.a) for r in self.records]


def _scan(s, q_from, q_to):
    q = q_from
    while q <= q_to and not s.done:
        a, tied = _nearest_vector(s.enc, q)
        if a is None or not s.offer(q, a, tied):
            s.refine(q)
            continue
        q += 1


# ---------------------------------------------------------------- lattice method

def _dot(u, v):
    return sum(x * y for x, y in zip(u, v))


def _gso(b):
    n = len(b)
    bstar, Bn = [], []
    mu = [[mpq(0)] * n for _ in range(n)]
    for i in range(n):
        v = [mpq(x) for x in b[i]]
        for j in range(i):
            mu[i][j] = _dot(b[i], bstar[j]) / Bn[j]
            v = [x - mu[i][j] * y for x, y in zip(v, bstar[j])]
        bstar.append(v)
        Bn.append(_dot(v, v))
    return mu, Bn


def lll(rows, coeffs, delta=mpq(3, 4)):
    """LLL reduction of integer `rows`, applying the same operations to `coeffs`."""
    b = [list(r) for r in rows]
    c = [list(r) for r in coeffs]
    n = len(b)
    mu, Bn = _gso(b)
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            r = _round(mu[k][j])
            if r:
                b[k] = [x - r * y for x, y in zip(b[k], b[j])]
                c[k] = [x - r * y for x, y in zip(c[k], c[j])]
                for i in range(j):
                    mu[k][i] -= r * mu[j][i]
                mu[k][j] -= r
        if Bn[k] >= (delta - mu[k][k - 1] ** 2) * Bn[k - 1]:
            k += 1
        else:
            b[k], b[k - 1] = b[k - 1], b[k]
            c[k], c[k - 1] = c[k - 1], c[k]
            mu, Bn = _gso(b)
            k = max(k - 1, 1)
    return b, c, mu, Bn


def _qsqrt_floor(x):
    """floor(sqrt(x)) for a non-negative rational."""
    return isqrt(x.numerator // x.denominator) if x >= 0 else mpz(-1)


class _TooMany(Exception):
    pass


def enumerate_short(b, mu, Bn, bound, limit=None):
    """All nonzero coefficient vectors y with |sum y_i b_i|^2 <= bound (exact).

    With `limit`, returns None as soon as more than `limit` vectors turn up.
    """
    n = len(b)
    out = []
    y = [mpz(0)] * n

    def rec(i, rem):
        centre = -sum(y[j] * mu[j][i] for j in range(i + 1, n))
        t = rem / Bn[i]
        s = _qsqrt_floor(t) + 1
        base = _round(centre)
        for yi in range(int(base - s - 1), int(base + s + 2)):
            d = (yi - centre) ** 2 * Bn[i]
            if d > rem:
                continue
            y[i] = mpz(yi)
            if i == 0:
                if any(y):
                    out.append(list(y))
                    if limit is not None and len(out) > limit:
                        raise _TooMany
            else:
                rec(i - 1, rem - d)
        y[i] = mpz(0)

    try:
        rec(n - 1, mpq(bound))
    except _TooMany:
        return None
    return out


def _lattice(s, q_from, max_points=4000):
    """Extend the records from q_from (exclusive) to q_max by cylinder enumeration."""
    n = s.target.dim
    basis = [[mpz(1)] + [mpz(0)] * n] + [[mpz(0)] * (n + 1) for _ in range(n)]
    for i in range(n):
        basis[i + 1][i + 1] = mpz(1)
    step = 8
    Q = mpz(q_from)
    while Q < s.q_max and not s.done:
        Qn = min(s.q_max, Q << step)
        s.raise_to(2 * Qn.bit_length() + 64)
        enc = s.enc
        cur = s.records[-1]
        _, chi = _xi_bounds(enc, cur.q, cur.a)
        R = isqrt(chi) + 1 + Qn * enc.rad * 2
        S = max(mpz(1), R // Qn)
        gen = [[S] + list(enc.centers)] + [[mpz(0)] * (n + 1) for _ in range(n)]
        for i in range(n):
            gen[i + 1][i + 1] = -enc.den
        rows = [[sum(cf[j] * gen[j][t] for j in range(n + 1)) for t in range(n + 1)] for cf in basis]
        red, basis, mu, Bn = lll(rows, basis)
        bound = (Qn * S) ** 2 + R * R
        ys = enumerate_short(red, mu, Bn, bound, limit=max_points if step > 1 else None)
        if ys is None:
            step //= 2
            continue
        best = {}
        for y in ys:
            cf = [sum(y[i] * basis[i][t] for i in range(n + 1)) for t in range(n + 1)]
            q, a = cf[0], tuple(cf[1:])
            if q < 0:
                q, a = -q, tuple(-x for x in a)
            if not (Q < q <= Qn):
                continue
            if any(abs(q * c - x * enc.den) > R for c, x in zip(enc.centers, a)):
                continue
            best.setdefault(q, []).append(a)
        ok = True
        for q in sorted(best):
            a, tied = _nearest_vector(enc, q)
            if a is None:
                ok = False
                break
            if a not in best[q]:
                continue
            if not s.offer(q, a, tied):
                ok = False
                break
            if s.done:
                break
        if not ok:
            # drop anything found in this window and redo it more precisely
            s.records = [r for r in s.records if r.q <= Q]
            s.refine(Q)
            continue
        Q = Qn
        if len(ys) < max_points // 16 and step < 64:
            step *= 2


def best_approximations(target, q_max, ties="error", method="auto", bits=None, max_bits=None):
    """Best approximation vectors of `target` with denominators up to q_max.

    ties: "error" raises TieError on any exact tie; "strict" keeps the first
    minimiser (records need a strictly smaller remainder) and still raises on
    two nearest integer points at one q.
    """
    if q_max < 1:
        raise ValueError("q_max must be >= 1")
    if ties not in ("error", "strict"):
        raise ValueError("ties must be 'error' or 'strict'")
    q_max = mpz(q_max)
    if max_bits is None:
        # deciding |q alpha - a| near q_max needs about 2 log2(q_max) bits;
        # leave generous room for refinement past that
        max_bits = max(DEFAULT_MAX_BITS, 8 * q_max.bit_length() + 512)
    if bits is None:
        bits = min(max_bits, 2 * q_max.bit_length() + 64) if method == "scan" else 128
    s = _Search(target, q_max, ties, bits, max_bits)
    if method == "scan":
        _scan(s, 1, q_max)
    elif method in ("lattice", "auto"):
        first = 1
        if method == "auto":
            first = min(q_max, SCAN_LIMIT)
            _scan(s, 1, first)
        else:
            _scan(s, 1, 1)
        if not s.done and first < q_max:
            _lattice(s, first)
    else:
        raise ValueError(f"unknown method {method!r}")
    return s.finish()


def records_for_vectors(target, vectors, bits):
    """Records for given integer vectors (q, a) against the target's enclosure."""
    enc = target.enclosure(bits)
    return [_record(enc, mpz(v[0]), tuple(v[1:])) for v in vectors]


def exponent_stats(records, tail=0.5, min_records=8):
    """Finite-window proxies for omega, omega-hat and the ratio limsup."""
    if len(records) < min_records:
        raise ValueError(f"need at least {min_records} records, got {len(records)}")
    start = int(len(records) * (1 - tail))
    idx = [i for i in range(start, len(records) - 1)
           if records[i].q > 1 and records[i].xi_sq[1] > 0]
    if not idx:
        raise ValueError("window holds no usable record pairs")
    lq = lambda r: log_pos(r.q)
    omega = max(-records[i].log_xi() / lq(records[i]) for i in idx)
    omega_hat = min(-records[i].log_xi() / lq(records[i + 1]) for i in idx)
    ratio = max(lq(records[i + 1]) / lq(records[i]) for i in idx)
    return ExponentEstimate(omega, omega_hat, ratio, (idx[0], idx[-1] + 1))
