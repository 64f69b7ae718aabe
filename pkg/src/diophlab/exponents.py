"""Scalar parameter calculus for the optimal ratio exponents.

Every public function evaluates at ``WORKING_PREC`` bits of mpmath
precision.  The parameter lambda is the uniform exponent and
theta = (1 - lambda) / lambda.
"""

import functools
from dataclasses import dataclass

from mpmath import mp, mpf

WORKING_PREC = 160
LAMBDA_MIN = "0.3334"
LAMBDA_MAX = "0.9999"
INF = float("inf")


class DomainError(ValueError):
    pass


class WindowError(DomainError):
    """A denominator of the f-chain closed form left the positive window."""


@dataclass(frozen=True)
class ParamSet:
    lam: mpf
    theta: mpf
    k: int


@dataclass(frozen=True)
class RootResult:
    value: mpf
    bracket: tuple
    iterations: int


@dataclass(frozen=True)
class ExponentChain:
    lam: mpf
    k: int
    g_k: mpf
    g_kj: tuple
    u_seq: tuple

    def period_exponents(self):
        """Growth exponents of one period, in step order.

        A period opens with the step that leaves the current 3-space and
        then walks the chain downward: g_k, g_{k,k-1}, ..., g_{k,0}.
        """
        return (self.g_k,) + tuple(reversed(self.g_kj))

    def exponent_at(self, phase):
        p = phase % (self.k + 1)
        return self.g_k if p == 0 else self.g_kj[self.k - p]


def _prec(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        with mp.workprec(WORKING_PREC):
            return fn(*args, **kwargs)
    return wrapper


def _lam(lam, lo=LAMBDA_MIN, hi=LAMBDA_MAX):
    lam = mpf(lam)
    if not mpf(lo) <= lam <= mpf(hi):
        raise DomainError(f"lambda={lam} outside [{lo}, {hi}]")
    return lam


@_prec
def params(lam, k=1):
    lam = _lam(lam)
    return ParamSet(lam, (1 - lam) / lam, int(k))


@_prec
def theta_of(lam):
    lam = mpf(lam)
    return (1 - lam) / lam


@_prec
def series_S(k, theta):
    """1 + theta + ... + theta^(k-1); zero for k = 0."""
    if k < 0:
        raise DomainError("k must be non-negative")
    theta = mpf(theta)
    if theta == 1:
        return mpf(k)
    return (theta**k - 1) / (theta - 1)


@_prec
def poly_coeffs(k, lam):
    """Coefficients (M, N, P) of R_k(g) = M g^2 - N g + P."""
    if k < 1:
        raise DomainError("k must be >= 1")
    lam = _lam(lam)
    th = theta_of(lam)
    M = th * series_S(k + 1, th)
    N = 2 * th**k + series_S(k, th) / lam + th * series_S(k - 1, th)
    P = series_S(k - 1, th) / lam + th ** (k - 1)
    return M, N, P


@_prec
def R(k, g, lam):
    M, N, P = poly_coeffs(k, lam)
    g = mpf(g)
    return M * g * g - N * g + P


@_prec
def root_gk(k, lam, tol=1e-12, max_iter=200):
    """Bisection for the root of R_k in (max(1, 1/theta), 2/theta)."""
    lam = _lam(lam)
    th = theta_of(lam)
    M, N, P = poly_coeffs(k, lam)
    r = lambda g: (M * g - N) * g + P
    lo = max(mpf(1), 1 / th)
    hi = 2 / th
    # R_k(1/theta) = -1 and R_k(2/theta) = (3 lam - 1)/(1 - lam) > 0, so the
    # endpoints already carry the sign change.
    if not (r(lo) < 0 < r(hi)):
        raise DomainError(f"no sign change on [{lo}, {hi}] for k={k}, lambda={lam}")
    it = 0
    while hi - lo > tol and it < max_iter:
        mid = (lo + hi) / 2
        if r(mid) < 0:
            lo = mid
        else:
            hi = mid
        it += 1
    return RootResult((lo + hi) / 2, (lo, hi), it)


@_prec
def G_of(n, omega_hat):
    """Positive root of g^(n-1) = w/(1-w) (g^(n-2) + ... + 1)."""
    w = mpf(omega_hat)
    if n < 2 or not (mpf(1) / n <= w <= 1):
        raise DomainError(f"omega_hat={w} outside [1/{n}, 1]")
    if w == 1:
        return INF
    x = w / (1 - w)
    if n == 2:
        return x
    # h(g) = g^(n-1) - x (g^(n-2) + ... + 1) is negative at 0 and positive
    # at 1 + x, with a single positive root by Descartes' rule.
    coeffs = [mpf(1)] + [-x] * (n - 1)
    lo, hi = mpf(0), 1 + x
    while hi - lo > mpf(2) ** -(WORKING_PREC - 20):
        mid = (lo + hi) / 2
        if mp.polyval(coeffs, mid) < 0:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@_prec
def G3_closed(omega_hat):
    x = mpf(omega_hat) / (1 - mpf(omega_hat))
    return (x + mp.sqrt(x * x + 4 * x)) / 2


@_prec
def sigma(g, lam):
    """(1/(1-lam) - g) / (g - 1/theta), defined for lam/(1-lam) < g < 1/(1-lam)."""
    lam = mpf(lam)
    g = mpf(g)
    th = theta_of(lam)
    if not (lam / (1 - lam) < g < 1 / (1 - lam)):
        raise DomainError(f"g={g} outside ({lam / (1 - lam)}, {1 / (1 - lam)})")
    return (1 / (1 - lam) - g) / (g - 1 / th)


@_prec
def f_chain(k, g, lam, tol=1e-9):
    """[f_1, ..., f_k] by the closed form, cross-checked against the recursion."""
    lam = mpf(lam)
    th = theta_of(lam)
    g = mpf(g)
    # the upper end of the window is allowed here: sigma vanishes there
    s = mpf(0) if g == 1 / (1 - lam) else sigma(g, lam)
    closed = []
    for j in range(1, k + 1):
        den = th**j - s * series_S(j, th)
        if den <= 0:
            raise WindowError(f"theta^{j} - sigma*S_{j} = {den} <= 0")
        closed.append((th ** (j - 1) - s * series_S(j - 1, th)) / den)
    rec = [1 / (th - s)]
    for _ in range(1, k):
        rec.append(1 / (1 / lam - th * rec[-1]))
    for j, (a, b) in enumerate(zip(closed, rec), 1):
        if abs(a - b) > tol * max(1, abs(a)):
            raise WindowError(f"closed form and recursion disagree at j={j}: {a} vs {b}")
    return closed


@_prec
def gbar(lam):
    lam = _lam(lam)
    if lam >= mpf(1) / 2:
        return 1 / (1 - lam)
    return 2 / theta_of(lam)


@_prec
def exponent_chain(k, lam, tol=1e-9):
    lam = _lam(lam)
    th = theta_of(lam)
    # f_k is steep near its fixed point for small lambda and large k, so the
    # root is taken far below the default tolerance.
    g = root_gk(k, lam, tol=mpf(2) ** -(WORKING_PREC - 40)).value
    chain = [1 / (th * g - 1)]
    if k > 1:
        chain += f_chain(k - 1, g, lam)
    if abs((chain[0] + 1) / (th * chain[0]) - g) > tol:
        raise DomainError("glue identity for g_k failed")
    for j in range(1, k):
        back = (chain[j] - lam) / ((1 - lam) * chain[j])
        if abs(back - chain[j - 1]) > tol:
            raise DomainError(f"glue identity failed at j={j}")
    # u for schedule phase p: phase 0 leaves the 3-space (exponent g_k),
    # phase p >= 1 stays inside it with exponent g_{k,k-p}.
    u = [1 + lam * g] + [1 + lam * chain[k - p] for p in range(1, k + 1)]
    return ExponentChain(lam, k, g, tuple(chain), tuple(u))


@_prec
def roy_lambda():
    """The lambda at which g_1 equals theta."""
    s5 = mp.sqrt(5)
    return (2 + s5 - mp.sqrt(7 + 2 * s5)) / 2
