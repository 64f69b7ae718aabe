"""Exact integer linear algebra for small lattices in Z^4.

Vectors are plain tuples of integers (``int`` or ``gmpy2.mpz``); all results
are exact.  Big entries are expected, so the hot paths run on mpz.
"""

import itertools
import math
from dataclasses import dataclass
from functools import reduce

from gmpy2 import mpq, mpz, gcd, gcdext, isqrt

# Mersenne prime used for the modular full-rank certificate in `rank`.
_P = mpz(2) ** 61 - 1


class LatticeError(ValueError):
    pass


class CompletionError(LatticeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class SublatticeBasis:
    vectors: tuple
    rank: int
    saturated: bool = False


def as_vec(v):
    return tuple(mpz(x) for x in v)


def dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def log_abs(x):
    """Natural log of |x| for integers of any size."""
    x = abs(mpz(x))
    if x == 0:
        raise LatticeError("log of zero")
    b = x.bit_length()
    if b < 1000:
        return math.log(int(x))
    return math.log(int(x >> (b - 64))) + (b - 64) * math.log(2)


def _bareiss(rows):
    """Fraction-free elimination; returns (rank, reduced rows, sign)."""
    m = [list(r) for r in rows]
    nrows, ncols = len(m), len(m[0])
    prev = mpz(1)
    r = 0
    sign = 1
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            m[r], m[piv] = m[piv], m[r]
            sign = -sign
        for i in range(r + 1, nrows):
            for j in range(c + 1, ncols):
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev
            m[i][c] = mpz(0)
        prev = m[r][c]
        r += 1
        if r == nrows:
            break
    return r, m, sign


def det(rows):
    """Exact determinant of a square integer matrix (Bareiss)."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise LatticeError("det needs a square matrix")
    if n == 0:
        return mpz(1)
    rows = [as_vec(r) for r in rows]
    if n == 3:
        (a, b, c), (d, e, f), (g, h, i) = rows
        return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)
    r, m, sign = _bareiss(rows)
    if r < n:
        return mpz(0)
    return sign * m[n - 1][n - 1]


def det4(v1, v2, v3, v4):
    return det([v1, v2, v3, v4])


def _rank_mod_p(rows):
    m = [[int(x % _P) for x in r] for r in rows]
    p = int(_P)
    r = 0
    for c in range(len(m[0])):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = pow(m[r][c], -1, p)
        for i in range(r + 1, len(m)):
            f = m[i][c] * inv % p
            if f:
                m[i] = [(a - f * b) % p for a, b in zip(m[i], m[r])]
        r += 1
    return r


def rank(vectors):
    if not vectors:
        raise LatticeError("rank of an empty list")
    rows = [as_vec(v) for v in vectors]
    full = min(len(rows), len(rows[0]))
    # A nonzero minor mod p is nonzero over Z, so full rank mod p is a proof.
    if _rank_mod_p(rows) == full:
        return full
    return _bareiss(rows)[0]


def maximal_minors(vectors):
    rows = [as_vec(v) for v in vectors]
    m, n = len(rows), len(rows[0])
    return [det([[r[c] for c in cols] for r in rows]) for cols in itertools.combinations(range(n), m)]


def is_primitive(vectors):
    """True iff the vectors extend to a basis of Z^n."""
    minors = maximal_minors(vectors)
    g = reduce(gcd, minors, mpz(0))
    if g == 0:
        raise LatticeError("vectors are linearly dependent")
    return g == 1


def normal_vector(u, v, w):
    """Integer n in Z^4 with n . x = det(u, v, w, x) for every x."""
    rows = [as_vec(u), as_vec(v), as_vec(w)]
    n = []
    for i in range(4):
        cols = [c for c in range(4) if c != i]
        minor = det([[r[c] for c in cols] for r in rows])
        n.append(minor if (3 + i) % 2 == 0 else -minor)
    return tuple(n)


def column_reduce(rows):
    """Unimodular column operations bringing `rows` to [B | 0].

    Returns (r, V, W) with rows @ V = [B | 0], B of rank r with r nonzero
    columns, and W = V^{-1}.  V and W are lists of rows.
    """
    a = [list(as_vec(r)) for r in rows]
    n = len(a[0])
    V = [[mpz(int(i == j)) for j in range(n)] for i in range(n)]
    W = [[mpz(int(i == j)) for j in range(n)] for i in range(n)]
    p = 0
    for row in a:
        if p == n:
            break
        for j in range(p + 1, n):
            x, y = row[p], row[j]
            if y == 0:
                continue
            g, s, t = gcdext(x, y)
            xg, yg = x // g, y // g
            # V <- V E with E = [[s, -yg], [t, xg]] on columns (p, j), det 1.
            for r_ in a:
                r_[p], r_[j] = s * r_[p] + t * r_[j], -yg * r_[p] + xg * r_[j]
            for r_ in V:
                r_[p], r_[j] = s * r_[p] + t * r_[j], -yg * r_[p] + xg * r_[j]
            # W <- E^{-1} W with E^{-1} = [[xg, yg], [-t, s]] on rows (p, j).
            W[p], W[j] = ([xg * u + yg * v for u, v in zip(W[p], W[j])],
                          [-t * u + s * v for u, v in zip(W[p], W[j])])
        if row[p] != 0:
            p += 1
    return p, V, W


def integer_kernel(rows):
    """Saturated basis of {x in Z^n : rows . x = 0}."""
    r, V, _ = column_reduce(rows)
    n = len(V)
    return [tuple(V[i][j] for i in range(n)) for j in range(r, n)]


def hnf_rows(rows):
    """Row Hermite normal form (upper triangular, positive pivots, reduced above)."""
    a = [list(as_vec(r)) for r in rows]
    m, n = len(a), len(a[0])
    r = 0
    for c in range(n):
        if r == m:
            break
        for i in range(r + 1, m):
            if a[i][c] == 0:
                continue
            g, s, t = gcdext(a[r][c], a[i][c])
            x, y = a[r][c] // g, a[i][c] // g
            a[r], a[i] = ([s * u + t * v for u, v in zip(a[r], a[i])],
                          [-y * u + x * v for u, v in zip(a[r], a[i])])
        if a[r][c] == 0:
            continue
        if a[r][c] < 0:
            a[r] = [-u for u in a[r]]
        for i in range(r):
            f = a[i][c] // a[r][c]
            if f:
                a[i] = [u - f * v for u, v in zip(a[i], a[r])]
        r += 1
    return [tuple(row) for row in a[:r]]


def saturate(vectors):
    """Basis of Z^4 intersected with the span of `vectors`, in row HNF."""
    rows = [as_vec(v) for v in vectors]
    r, _, W = column_reduce(rows)
    if r < len(rows):
        raise LatticeError("vectors are linearly dependent")
    basis = hnf_rows(W[:r])
    return SublatticeBasis(tuple(basis), r, True)


def gram_det_sq(vectors):
    """Gram determinant, the squared covolume of the lattice they span."""
    rows = [as_vec(v) for v in vectors]
    return det([[dot(u, v) for v in rows] for u in rows])


def height_sq(sub):
    if not sub.saturated or not is_primitive(sub.vectors):
        raise LatticeError("height needs a saturated basis")
    return gram_det_sq(sub.vectors)


def intersect_spans(U, V):
    """Saturated basis of the intersection of two rational spans in Q^4."""
    nu = integer_kernel(U)
    nv = integer_kernel(V)
    eqs = list(nu) + list(nv)
    if not eqs:
        return saturate(U)
    basis = tuple(hnf_rows(integer_kernel(eqs)))
    return SublatticeBasis(basis, len(basis), True)


@dataclass(frozen=True)
class AngleClass:
    wide: bool    # angle in (pi/4, 3pi/4)
    acute: bool   # angle in (pi/4, pi/2)


def angle_window(u, v):
    """Exact classification of the angle between two rational 3-vectors."""
    u = [mpq(x) for x in u]
    v = [mpq(x) for x in v]
    uu, vv, uv = dot(u, u), dot(v, v), dot(u, v)
    if uu == 0 or vv == 0:
        raise LatticeError("zero vector in angle test")
    wide = 2 * uv * uv < uu * vv
    return AngleClass(wide, wide and uv > 0)


def _round(x):
    x = mpq(x)
    return mpz((2 * x.numerator + x.denominator) // (2 * x.denominator))


def complete_to_primitive(fixed, targets, radius_schedule=None, accept=None):
    """Integer points near `targets` extending `fixed` to a primitive tuple.

    Each target is handled in turn by an expanding box search around its
    rounding; inside a box candidates are tried by distance.  `accept`, when
    given, is an extra predicate on the tuple built so far.
    """
    found = [as_vec(v) for v in fixed]
    if found and not is_primitive(found):
        raise LatticeError("fixed tuple is not primitive")
    for target in targets:
        t = [mpq(x) for x in target]
        norm = isqrt(int(dot(t, t)))
        schedule = radius_schedule
        if schedule is None:
            schedule = [1]
            while schedule[-1] * 2 <= max(1, norm // 10):
                schedule.append(schedule[-1] * 2)
        centre = [_round(x) for x in t]
        best = None
        seen = set()
        for rad in schedule:
            box = []
            for off in itertools.product(range(-rad, rad + 1), repeat=len(t)):
                if off in seen:
                    continue
                seen.add(off)
                c = tuple(a + o for a, o in zip(centre, off))
                box.append((dot([ci - ti for ci, ti in zip(c, t)], [ci - ti for ci, ti in zip(c, t)]), off, c))
            box.sort(key=lambda e: (e[0], e[1]))
            hit = None
            for _, _, c in box:
                if best is None:
                    best = c
                cand = found + [c]
                if rank(cand) < len(cand) or not is_primitive(cand):
                    continue
                if accept is not None and not accept(cand):
                    continue
                hit = c
                break
            if hit is not None:
                found.append(hit)
                break
        else:
            raise CompletionError(f"no primitive completion near {target}", best)
    return found[len(fixed):]
