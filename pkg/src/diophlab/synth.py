"""Construction of vectors whose best approximations follow the word (A^k B)^inf.

The construction keeps a window of integer vectors z = (q, a) in Z^4 and a
shrinking neighbourhood of the limit point alpha.  Each step picks a point
X close to the newest Z = a/q, inside the plane spanned by the latest
geometry, and then takes the integer point of a suitable affine lattice
whose direction lies in the small ball W around X:

* an A step stays in the current 3-space G: the new vector is
  z_{m-2} + a z_{m-1} + b z_m;
* a B step moves to the next layer G + w, where w is the latest vector
  outside G and (z_{m-2}, z_{m-1}, z_m, w) is a basis of Z^4.

The radius around Z_m is rho_m ~ q_m^(-u_m) with u_m = 1 + lambda e_m,
where e_m is the growth exponent of the step leaving z_m.

All membership tests are exact integer comparisons.  The radii are dyadic
rationals close to q^(-u); the tests are exact for those radii.
"""

import itertools
import math
import random
import time
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpfr, mpq, mpz

from . import lattice as lc
from .engine import Enclosure, PrecisionError, Target, exponent_stats, records_for_vectors
from .exponents import exponent_chain
from .patterns import PatternError, pattern_word

__all__ = [
    "SynthConfig", "Neighborhood", "SynthState", "SynthResult", "StepFailure",
    "BudgetError", "init_triple", "choose_center", "stage1", "stage2", "run",
    "verify_conditions", "alpha_target", "ball_target", "exponent_estimate",
]


class StepFailure(RuntimeError):
    def __init__(self, msg, diagnostics=None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class BudgetError(RuntimeError):
    pass


@dataclass
class SynthConfig:
    lam: str = "0.5"
    k: int = 1
    q1: int = 10**6
    steps: int = 30
    seed: int = 1
    seed_q: int = 5            # denominator of the warm-up seed triple
    search_radius_cap: int = 16
    precision_cap: int = 192
    retry_doublings: int = 6   # retries, each squaring q1
    max_bits: int = 1 << 25    # refuse runs whose last vector would exceed this
    max_warmup: int = 80

    def chain(self):
        return exponent_chain(self.k, self.lam)


@dataclass(frozen=True)
class Neighborhood:
    """U_j = ball(Z_j, rho) cut by the angular condition, or the ball W_j.

    Points are kept as integer data: `center` is (numerators, shift) for a
    dyadic point or the vector z for Z = a/q; `anchor_prev` is z_{j-1}.
    """
    center: tuple
    radius: mpq
    anchor_prev: tuple
    kind: str  # "U" or "W"


@dataclass
class SynthState:
    config: SynthConfig
    chain: object
    vectors: list = field(default_factory=list)
    log: list = field(default_factory=list)
    start: int = None          # index of z_1 in `vectors`
    neighborhood: Neighborhood = None

    @property
    def stage_index(self):
        """Schedule position of the next step."""
        return self.phase(len(self.vectors) - 1)

    @property
    def period(self):
        return self.config.k + 1

    def phase(self, i):
        """Schedule phase of the step that builds vectors[i + 1]."""
        return (i + 1) % self.period

    def kind(self, i):
        return "B" if self.phase(i) == 0 else "A"

    def exponent(self, i):
        return self.chain.exponent_at(self.phase(i))

    def u(self, i):
        return 1 + self.chain.lam * self.exponent(i)

    def emitted(self):
        return self.vectors[self.start:] if self.start is not None else []


@dataclass
class SynthResult:
    config: SynthConfig
    vectors: list
    prehistory: list
    alpha: Target
    alpha_enclosure: Enclosure
    realized_word: object
    realized_ratios: list
    condition_report: dict
    log: list
    timing: float


# ------------------------------------------------------------------ helpers

def _mpfr_of(x, prec):
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        return mpfr(x)


def radius(q, u, bits=192):
    """Dyadic rational close to q^(-u), with `bits` bits of mantissa."""
    with gmpy2.context(gmpy2.get_context(), precision=bits + 64):
        uu = mpfr(str(u)) if not isinstance(u, float) else mpfr(u)
        r = gmpy2.exp(-uu * gmpy2.log(mpfr(q)))
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        r = +r
    return mpq(r)


def _point(v):
    return tuple(mpq(a, v[0]) for a in v[1:])


def _dyadic_bits(rho, extra):
    return int(-gmpy2.floor(gmpy2.log2(mpfr(rho)))) + extra


def _cross(u, v):
    """Numerator of Z(u) - Z(v) over q_u q_v."""
    return tuple(a * v[0] - b * u[0] for a, b in zip(u[1:], v[1:]))


def _unit(vec, prec):
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        x = [mpfr(c) for c in vec]
        n = gmpy2.sqrt(sum(c * c for c in x))
        return [c / n for c in x]


# -------------------------------------------------------------- neighbourhoods

def _w_in_u(Dn, K, vn, rn, rd):
    """Exact test that the ball (Z + Dn/K, rho/10) lies in U = ball(Z, rho) cap cone.

    vn points from Z towards Z_{j-1}; rho = rn/rd.  Returns a dict of verdicts.
    """
    A = lc.dot(Dn, Dn)
    Bdot = lc.dot(Dn, vn)
    B = Bdot * Bdot
    V = lc.dot(vn, vn)
    K2 = K * K
    rd2, rn2 = rd * rd, rn * rn
    ball = 100 * A * rd2 <= 81 * rn2 * K2
    half = Bdot > 0 and 100 * B * rd2 > rn2 * V * K2
    Pn = (A * V - 2 * B) * 100 * rd2 - 2 * rn2 * V * K2
    cone = Pn > 0 and Pn * Pn > 8 * rn2 * B * V * K2 * 100 * rd2
    disjoint = 25 * A * rd2 > rn2 * K2
    return {"W_in_ball": ball, "W_in_halfspace": half, "W_in_cone": cone, "W_disjoint_WZ": disjoint}


def choose_center(zm, zprev, plane_dir, rho, bits=192):
    """Centre X = Z_m + rho (e/2 + e'/4) of the ball W inside U_m.

    e' is the unit vector towards Z_{m-1}; e is the unit vector of the plane
    direction `plane_dir` orthogonal to e'.  X is rounded to a dyadic point.
    Returns (X numerators N, shift s, checks) with X = N / 2^s.
    """
    prec = bits + 64
    ep = _unit(_cross(zprev, zm), prec)
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        d = [mpfr(c) for c in plane_dir]
        proj = sum(a * b for a, b in zip(d, ep))
        perp = [a - proj * b for a, b in zip(d, ep)]
        nrm = gmpy2.sqrt(sum(c * c for c in perp))
        if nrm == 0:
            raise StepFailure("plane direction is parallel to the last chord")
        e = [c / nrm for c in perp]
        r = mpfr(rho)
        off = [r * (a / 2 + b / 4) for a, b in zip(e, ep)]
    s = _dyadic_bits(rho, bits)
    scale = mpz(1) << s
    q = zm[0]
    N = []
    for a, o in zip(zm[1:], off):
        base, rem = divmod(a * scale, q)
        with gmpy2.context(gmpy2.get_context(), precision=prec):
            frac = mpfr(rem) / mpfr(q) + o * mpfr(scale)
        N.append(base + mpz(gmpy2.rint(frac)))
    N = tuple(N)
    Dn = tuple(n * q - a * scale for n, a in zip(N, zm[1:]))
    K = q * scale
    vn = _cross(zprev, zm)
    rn, rd = rho.numerator, rho.denominator
    checks = _w_in_u(Dn, K, vn, rn, rd)
    return N, s, checks


def neighborhoods(state, i, N, s, rho):
    zm, zprev = state.vectors[i], state.vectors[i - 1]
    return (Neighborhood(zm, rho, zprev, "U"),
            Neighborhood((N, s), rho / 10, zprev, "W"))


# ------------------------------------------------------------------- steps

def _latest_outside(vectors, i):
    """Latest vector before the window (i-2, i-1, i) that leaves its span."""
    n = lc.normal_vector(*vectors[i - 2:i + 1])
    for j in range(i - 3, -1, -1):
        d = lc.dot(n, vectors[j])
        if d != 0:
            return j, n, d
    return None, n, 0


def _completion(vectors, i):
    n = lc.normal_vector(*vectors[i - 2:i + 1])
    # a unimodular completion: V^{-1} rows from the column reduction
    r, V, W = lc.column_reduce(vectors[i - 2:i + 1])
    w = tuple(W[3])
    d = lc.dot(n, w)
    if abs(d) != 1:
        raise StepFailure("window triple is not primitive")
    return w, n, d


def _plan(state, i):
    """Geometry of the step leaving vectors[i]: plane direction, base, generators."""
    v = state.vectors
    zm = v[i]
    if state.kind(i) == "A":
        plane_dir = _cross(v[i - 2], zm)
        base, gens = v[i - 2], [v[i - 1], zm]
        frame = [v[i - 2], v[i - 1], zm]
        return plane_dir, base, gens, frame, None
    j, n, d = _latest_outside(v, i)
    if j is None or abs(d) != 1:
        w, n, d = _completion(v, i)
    else:
        w = v[j]
    if d < 0:
        n = tuple(-x for x in n)
    # direction of (0, e) in span(z_{m-1}, z_m, n) with zero first coordinate
    plane_dir = tuple(x * zm[0] - n[0] * a for x, a in zip(n[1:], zm[1:]))
    return plane_dir, w, [v[i - 2], v[i - 1], zm], None, w


def _coefficients(base, gens, Xbar, frame):
    """Real coefficients c with tau * Xbar = base + sum c_j gens_j, as (num_j, den)."""
    cols = [base] + list(gens)
    if len(cols) == 4:
        rows = cols
        sel = range(4)
    else:
        n = lc.normal_vector(*frame)
        drop = max(range(4), key=lambda t: abs(n[t]))
        sel = [t for t in range(4) if t != drop]
        rows = cols
    def d(replace):
        m = [list(Xbar) if idx == replace else list(c) for idx, c in enumerate(rows)]
        return lc.det([[r[t] for t in sel] for r in m])
    den = d(0)
    nums = [d(j) for j in range(1, len(rows))]
    if den < 0:
        den, nums = -den, [-x for x in nums]
    return nums, den


def _candidates(base, gens, nums, den, N, s, span=1):
    """Integer points near the real solution, ordered by approximate distance to X."""
    rounded = [(2 * x + den) // (2 * den) for x in nums]
    scale = mpz(1) << s

    def diff(v):
        return [a * scale - v[0] * n for a, n in zip(v[1:], N)]

    centre = list(base)
    for c, g in zip(rounded, gens):
        centre = [x + c * y for x, y in zip(centre, g)]
    R0 = diff(centre)
    Dg = [diff(g) for g in gens]
    approx0 = [mpfr(x, 64) for x in R0]
    approxg = [[mpfr(x, 64) for x in dg] for dg in Dg]
    out = []
    for delta in itertools.product(range(-span, span + 1), repeat=len(gens)):
        e = [a + sum(dl * g[t] for dl, g in zip(delta, approxg)) for t, a in enumerate(approx0)]
        q = centre[0] + sum(dl * g[0] for dl, g in zip(delta, gens))
        if q <= 0:
            continue
        E = sum(x * x for x in e) / (mpfr(q, 64) ** 2)
        out.append((E, delta))
    out.sort(key=lambda t: (t[0], t[1]))
    return centre, R0, Dg, out


def _materialize(centre, R0, Dg, gens, delta):
    v = list(centre)
    r = list(R0)
    for dl, g, dg in zip(delta, gens, Dg):
        if dl:
            v = [x + dl * y for x, y in zip(v, g)]
            r = [x + dl * y for x, y in zip(r, dg)]
    return tuple(v), r


def _step(state, i, strict):
    cfg = state.config
    v = state.vectors
    zm = v[i]
    kind = state.kind(i)
    u = state.u(i)
    u_next = state.u(i + 1)
    rho = radius(zm[0], u, cfg.precision_cap)
    plane_dir, base, gens, frame, w = _plan(state, i)
    shrink = 0
    while True:
        N, s, checks = choose_center(zm, v[i - 1], plane_dir, rho, cfg.precision_cap)
        Xbar = (mpz(1) << s,) + N
        nums, den = _coefficients(base, gens, Xbar, frame)
        if den <= 0:
            raise StepFailure(f"step {i}: centre projects behind the origin", {"index": i})
        tau_q = (base[0] * den + sum(x * g[0] for x, g in zip(nums, gens))) // den
        if strict or tau_q > 2 * zm[0] or shrink > 40:
            break
        # the seed is far from balanced: push the centre closer to Z to grow
        rho = rho / 16
        shrink += 1
    target = rho / 10
    chosen = None
    tried = 0
    span = 1
    while chosen is None or not chosen[1]:
        centre, R0, Dg, cands = _candidates(base, gens, nums, den, N, s, span)
        for _, delta in cands:
            vnew, r = _materialize(centre, R0, Dg, gens, delta)
            if vnew[0] <= zm[0]:
                continue
            tried += 1
            rho_new = radius(vnew[0], u_next, cfg.precision_cap)
            lim = target - rho_new
            E = sum(x * x for x in r)
            ok = lim > 0 and E * lim.denominator**2 <= lim.numerator**2 * vnew[0] ** 2 * (mpz(1) << (2 * s))
            if ok or (not strict and chosen is None):
                chosen = (vnew, ok, rho_new, E)
                if ok:
                    break
        if not strict or span * 2 > cfg.search_radius_cap // 4:
            break
        span *= 2
    if chosen is None or (strict and not chosen[1]):
        raise StepFailure(f"step {i} ({kind}): no lattice point with direction in W",
                          {"index": i, "kind": kind, "q": int(zm[0]).bit_length(), "tried": tried})
    vnew, nested, rho_new, E = chosen
    entry = {
        "index": i + 1, "kind": kind, "phase": state.phase(i), "exponent": float(state.exponent(i)),
        "u": float(u), "rho_log2": float(gmpy2.log2(mpfr(rho))), "shift": s, "shrink": shrink,
        "strict": strict, "nested": bool(nested), **{k: bool(x) for k, x in checks.items()},
        "bits": int(vnew[0]).bit_length(),
    }
    state.vectors.append(vnew)
    state.log.append(entry)
    state.neighborhood = neighborhoods(state, i, N, s, rho)[1]
    return vnew, entry


def stage1(state, strict=True):
    """Pattern-A step: a new vector inside the current 3-space."""
    i = len(state.vectors) - 1
    if state.kind(i) != "A":
        raise ValueError("schedule asks for a B step")
    return _step(state, i, strict)[0]


def stage2(state, strict=True):
    """Pattern-B step: a new vector in the next layer of the current 3-space."""
    i = len(state.vectors) - 1
    if state.kind(i) != "B":
        raise ValueError("schedule asks for an A step")
    return _step(state, i, strict)[0]


# -------------------------------------------------------------- base triple

def init_triple(config, q1=None, chain=None):
    """A primitive triple with q2 ~ q1^e1 and q3 ~ q2^e2, by primitive completion.

    z1 is a random primitive vector with denominator q1; X' lies at distance
    q1^-u1 from Z1 and X'' at distance q2^-u2 from X' with a right angle at
    X''.  z2 and z3 are integer points near the lifted, scaled X' and X''.
    """
    chain = chain or config.chain()
    q1 = mpz(q1 if q1 is not None else config.q1)
    rng = random.Random(config.seed)
    e1, e2 = chain.exponent_at(1), chain.exponent_at(2)
    u1, u2 = 1 + chain.lam * e1, 1 + chain.lam * e2
    prec = 256
    while True:
        a = tuple(mpz(rng.randint(-(q1 // 2), q1 // 2)) for _ in range(3))
        if gmpy2.gcd(gmpy2.gcd(gmpy2.gcd(q1, a[0]), a[1]), a[2]) == 1:
            break
    z1 = (q1,) + a
    Z1 = [mpq(x, q1) for x in a]
    with gmpy2.context(gmpy2.get_context(), precision=prec):
        def rand_unit():
            x = [mpfr(rng.gauss(0, 1)) for _ in range(3)]
            n = gmpy2.sqrt(sum(c * c for c in x))
            return [c / n for c in x]
        qf = mpfr(q1)
        q2f = qf ** mpfr(str(e1))
        q3f = q2f ** mpfr(str(e2))
        d1 = qf ** -mpfr(str(u1))
        d2 = q2f ** -mpfr(str(u2))
        dir1 = rand_unit()
        Xp = [mpfr(z) + d1 * c for z, c in zip(Z1, dir1)]
        # X'' = X' + d2 * t with t orthogonal to (Z1 - X'') is a circle
        # condition; take X'' on the Thales sphere over the chord Z1 X'.
        # X'' - X' = d2 (cos(phi) * (-dir1) + sin(phi) * perp), cos(phi) = d2 / d1
        r = rand_unit()
        pr = sum(a_ * b_ for a_, b_ in zip(r, dir1))
        perp = [a_ - pr * b_ for a_, b_ in zip(r, dir1)]
        pn = gmpy2.sqrt(sum(c * c for c in perp))
        perp = [c / pn for c in perp]
        cphi = d2 / d1
        sphi = gmpy2.sqrt(1 - cphi * cphi)
        Xpp = [x - d2 * (cphi * a_ - sphi * b_) for x, a_, b_ in zip(Xp, dir1, perp)]
        beta = [q2f] + [q2f * x for x in Xp]
        gamma = [q3f] + [q3f * x for x in Xpp]
    beta = [mpq(x) for x in beta]
    gamma = [mpq(x) for x in gamma]
    cap = config.search_radius_cap
    sched = [1 << t for t in range(cap.bit_length()) if (1 << t) <= cap]

    Xpp = [mpq(x) for x in Xpp]

    def angle_ok(vecs):
        # Z3 lands within 1/q3 of X'', so the angle at Z3 is settled by the
        # choice of z2; test it at X'' already.
        Z = [_point(x) for x in vecs]
        apex = Xpp if len(vecs) == 2 else Z[2]
        d_a = [x - y for x, y in zip(Z[0], apex)]
        d_b = [x - y for x, y in zip(Z[1], apex)]
        return lc.angle_window(d_a, d_b).wide

    z2, z3 = lc.complete_to_primitive([z1], [beta, gamma], sched, accept=angle_ok)
    return z1, tuple(z2), tuple(z3)


# -------------------------------------------------------------------- runs

def _predicted_bits(state, i0, steps):
    lq = math.log2(int(state.vectors[i0][0]))
    for i in range(i0, i0 + steps - 1):
        lq *= float(state.exponent(i))
    return lq


def _passed(entry):
    return entry["nested"] and all(entry[k] for k in ("W_in_ball", "W_in_halfspace", "W_in_cone", "W_disjoint_WZ"))


def _attempt(config, q1, chain):
    state = SynthState(config, chain)
    state.vectors = list(init_triple(config, config.seed_q, chain))
    i = 2
    while True:
        if state.start is None:
            if len(state.vectors) - 3 > config.max_warmup:
                raise StepFailure("warm-up did not reach the requested size")
            # z_1 is the first vector past q1 that leaves a 3-space and whose
            # own step already met every exact test
            if (i >= 3 and i % state.period == 0 and state.vectors[i][0] >= q1
                    and _passed(state.log[-1])):
                state.start = i
                pred = _predicted_bits(state, i, config.steps)
                if pred > config.max_bits:
                    raise BudgetError(
                        f"the last vector would need about {pred:.3g} bits (limit {config.max_bits}); "
                        f"reduce steps or raise max_bits")
        if state.start is not None and len(state.vectors) - state.start >= config.steps:
            break
        _step(state, i, strict=state.start is not None)
        i += 1
    return state


def _w_ball(state):
    """The ball W around the centre chosen from the newest vector, as an enclosure."""
    i = len(state.vectors) - 1
    plane_dir = _plan(state, i)[0]
    bits = state.config.precision_cap
    rho = radius(state.vectors[i][0], state.u(i), bits)
    N, s, _ = choose_center(state.vectors[i], state.vectors[i - 1], plane_dir, rho, bits)
    r = rho / 10
    R = -((-r.numerator << s) // r.denominator)     # ceil(r 2^s)
    return Enclosure(N, mpz(1) << s, R)


def ball_target(enc, label="", extend=None):
    """Target for a point known to lie in the box of `enc`.

    Past the bits the box supports, `extend(bits)` is asked for a finer
    enclosure; without it the target raises PrecisionError.
    """
    box = Target.from_intervals(enc.bounds(), label=label)

    def refine(bits):
        if bits <= box.max_bits:
            return box.enclosure(bits)
        if extend is None:
            raise PrecisionError(f"target {label!r} is only known to {box.max_bits} bits")
        return extend(bits)

    return Target(len(enc.centers), refine, label=label, max_bits=None if extend else box.max_bits)


def alpha_target(state):
    """Target for the limit point: the last W ball, refined by running further steps."""
    label = f"synth(lambda={state.config.lam},k={state.config.k})"

    def extend(bits):
        extra = SynthState(state.config, state.chain, list(state.vectors), [], state.start)
        while True:
            _step(extra, len(extra.vectors) - 1, strict=True)
            t = ball_target(_w_ball(extra), label)
            if t.max_bits >= bits:
                return t.enclosure(bits)

    enc = _w_ball(state)
    return ball_target(enc, label, extend), enc


def run(config):
    """Synthesize `config.steps` vectors and the enclosure of their limit point."""
    t0 = time.time()
    chain = config.chain()
    q1 = mpz(config.q1)
    last = None
    for _ in range(config.retry_doublings + 1):
        try:
            state = _attempt(config, q1, chain)
            break
        except StepFailure as exc:
            # a factor 2 on q1 barely moves q^(g-1) when g is close to 1, so
            # each retry doubles the bit length of q1 instead
            last = exc
            q1 = q1 * q1
    else:
        raise StepFailure(f"synthesis failed after {config.retry_doublings} retries: {last}",
                          getattr(last, "diagnostics", {}))
    alpha, enc = alpha_target(state)
    emitted = state.emitted()
    report = verify_conditions(state.vectors, state.start, chain, state.log)
    word = pattern_word_safe(emitted)
    ratios = [_log_int(b[0]) / _log_int(a[0]) for a, b in zip(emitted, emitted[1:])]
    return SynthResult(config, emitted, state.vectors[:state.start], alpha, enc, word, ratios,
                       report, state.log, time.time() - t0)


def exponent_estimate(result, tail=0.5):
    """omega, omega-hat and ratio proxies of the emitted vectors against alpha."""
    enc = result.alpha_enclosure
    top = ball_target(enc).max_bits
    vecs = result.vectors
    # the window reads xi only up to the next-to-last vector
    b = int(vecs[-2][0]).bit_length()
    bits = min(top, 3 * b + 64)
    while True:
        recs = records_for_vectors(result.alpha, vecs, bits)
        sharp = all(r.xi_sq[1] <= 2 * r.xi_sq[0] for r in recs[:-1])
        if sharp or bits >= top:
            break
        bits = min(top, 2 * bits)
    return exponent_stats(recs, tail=tail)


def pattern_word_safe(vectors):
    try:
        return pattern_word(vectors, burn_in=0)
    except PatternError:
        return None


# ------------------------------------------------------------------ checks

_log_int = lc.log_abs


def _log_zeta(u, v):
    """log of zeta = q_u |Z_u - Z_v|."""
    c = _cross(v, u)
    return 0.5 * _log_int(lc.dot(c, c)) - _log_int(v[0])


def _band(values, width=math.log(1000.0)):
    if not values:
        return {"ok": True, "spread": 0.0, "n": 0}
    spread = max(values) - min(values)
    return {"ok": spread <= width, "spread": spread, "n": len(values),
            "min": min(values), "max": max(values)}


def verify_conditions(vectors, start, chain, log=None, burn_in=None):
    """Per-condition verdicts for vectors[start:], using earlier vectors as context."""
    k = chain.k
    period = k + 1
    lam = float(chain.lam)
    kind = lambda i: "B" if (i + 1) % period == 0 else "A"   # kind of the step leaving i
    expo = lambda i: float(chain.exponent_at((i + 1) % period))
    n = len(vectors)
    idx = range(start, n)
    rep = {}
    normals = {j: lc.normal_vector(*vectors[j - 2:j + 1]) for j in range(max(start, 2), n)}
    # (i) consecutive triples primitive: the normal vector holds the maximal minors
    rep["i_primitive"] = all(_gcd_all(normals[j]) == 1 for j in idx if j - 2 >= start)
    # (ii) A-created vectors: z_{m+1} - z_{m-2} in <z_{m-1}, z_m>_Z
    ok2 = True
    for j in idx:
        if j < 3 or j - 1 < start or kind(j - 1) != "A":
            continue
        diff = tuple(a - b for a, b in zip(vectors[j], vectors[j - 3]))
        ok2 &= _in_span_Z(diff, vectors[j - 2], vectors[j - 1])
    rep["ii_combination"] = ok2
    # (iii) every window triple plus the latest vector outside its span is a Z^4 basis
    ok3 = True
    for j in idx:
        if j < 3 or j - 2 < start:
            continue
        nv = normals[j]
        d = next((lc.dot(nv, vectors[t]) for t in range(j - 3, -1, -1) if lc.dot(nv, vectors[t]) != 0), None)
        if d is not None:
            ok3 &= abs(d) == 1
    rep["iii_unimodular"] = ok3
    # (vi) angle at Z_m between Z_{m-2} and Z_{m-1}; positive rescaling keeps angles
    ok6 = True
    for j in idx:
        if j - 2 < start:
            continue
        a = _cross(vectors[j - 2], vectors[j])
        b = _cross(vectors[j - 1], vectors[j])
        ok6 &= lc.angle_window(a, b).wide
    rep["vi_angle"] = ok6
    # a B-created vector sits at squared distance (n.v)^2/Delta^2 >= 1/Delta^2 from G
    okb = True
    for j in idx:
        if j < 3 or j - 1 < start or kind(j - 1) != "B":
            continue
        okb &= lc.dot(normals[j - 1], vectors[j]) ** 2 >= 1
    rep["B_distance"] = okb
    # banded relations after burn-in
    b0 = start + (period if burn_in is None else burn_in)
    growth = {}
    for j in range(max(b0, start), n - 1):
        c = _log_int(vectors[j + 1][0]) - expo(j) * _log_int(vectors[j][0])
        growth.setdefault(kind(j), []).append(c)
    rep["iv_v_growth"] = {key: _band(vals) for key, vals in growth.items()}
    zeta = [_log_zeta(vectors[j], vectors[j + 1]) + lam * _log_int(vectors[j + 1][0])
            for j in range(max(b0, start), n - 1)]
    rep["zeta_band"] = _band(zeta)
    vol = []
    for j in range(max(b0, start + 2), n - 1):
        D2 = lc.dot(normals[j], normals[j])   # equals the Gram determinant
        lz = _log_zeta(vectors[j - 2], vectors[j - 1]) + _log_zeta(vectors[j - 1], vectors[j])
        vol.append(0.5 * _log_int(D2) - lz - _log_int(vectors[j][0]))
    rep["vii_volume"] = _band(vol)
    if log is not None:
        tail = [e for e in log if e["index"] > start]
        rep["nesting"] = all(e["nested"] for e in tail)
        rep["W_in_U"] = all(e["W_in_ball"] and e["W_in_halfspace"] and e["W_in_cone"] for e in tail)
        rep["W_disjoint"] = all(e["W_disjoint_WZ"] for e in tail)
    exact_keys = ["i_primitive", "ii_combination", "iii_unimodular", "vi_angle", "B_distance"]
    rep["exact_ok"] = all(rep[key] for key in exact_keys) and all(
        rep.get(key, True) for key in ("nesting", "W_in_U", "W_disjoint"))
    rep["bands_ok"] = all(b["ok"] for b in rep["iv_v_growth"].values()) and rep["zeta_band"]["ok"] \
        and rep["vii_volume"]["ok"]
    return rep


def _gcd_all(xs):
    g = mpz(0)
    for x in xs:
        g = gmpy2.gcd(g, x)
    return g


def _in_span_Z(x, u, v):
    """Is x an integer combination of u and v?"""
    for c1, c2 in ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)):
        m = u[c1] * v[c2] - u[c2] * v[c1]
        if m == 0:
            continue
        a_num = x[c1] * v[c2] - x[c2] * v[c1]
        b_num = u[c1] * x[c2] - u[c2] * x[c1]
        if a_num % m or b_num % m:
            return False
        a, b = a_num // m, b_num // m
        return all(xi == a * ui + b * vi for xi, ui, vi in zip(x, u, v))
    return False
