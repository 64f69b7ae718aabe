"""Pattern words of best-approximation sequences.

A triple index nu names the consecutive triple (z_{nu-1}, z_nu, z_{nu+1}).
Two successive independent triples give the letter A when they span the
same 3-space and B when together they span R^4.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

from gmpy2 import isqrt

from . import lattice as lc

INFINITE = math.inf


class PatternError(ValueError):
    pass


@dataclass
class PatternWord:
    letters: list
    witnesses: list      # (nu, j) per letter

    def __str__(self):
        return "".join(self.letters)

    def check_chain(self):
        return all(a[1] == b[0] for a, b in zip(self.witnesses, self.witnesses[1:]))


@dataclass
class KEstimate:
    k_value: object      # int or INFINITE
    evidence: dict = field(default_factory=dict)


@dataclass
class SchmidtReport:
    run_length: int
    nu: int
    l: int
    h2_gstar: object
    h2_g: object
    h2_l: object
    holds: bool
    det_ratio: float = None   # det Lambda / (xi_{l-1} q_l), when xi is known


def _vec(r):
    return tuple(r.vector()) if hasattr(r, "vector") else lc.as_vec(r)


def independent_triple_indices(records):
    if len(records) < 3:
        raise PatternError("need at least 3 records")
    vs = [_vec(r) for r in records]
    return [nu for nu in range(1, len(vs) - 1) if lc.rank(vs[nu - 1:nu + 2]) == 3]


DEFAULT_BURN_IN = 3

RECURRENCE_RULE = "a run counts when it occurs at least twice, once in the final third of the window"


def pattern_word(records, burn_in=DEFAULT_BURN_IN):
    """Letters for successive independent triples after skipping `burn_in` records."""
    vs = [_vec(r) for r in records]
    idx = [nu for nu in independent_triple_indices(records) if nu - 1 >= burn_in]
    if len(idx) < 2:
        raise PatternError("fewer than two independent triples")
    letters, wits = [], []
    for nu, j in zip(idx, idx[1:]):
        union = vs[nu - 1:nu + 2] + vs[j - 1:j + 2]
        letters.append("A" if lc.rank(union) == 3 else "B")
        wits.append((nu, j))
    return PatternWord(letters, wits)


def _runs(letters):
    """(length, position of the closing B) for each A-run that ends in a B."""
    out, n = [], 0
    for pos, c in enumerate(letters):
        if c == "A":
            n += 1
        else:
            out.append((n, pos))
            n = 0
    return out


def k_estimate(word):
    letters = word.letters if isinstance(word, PatternWord) else list(word)
    if letters.count("B") < 2:
        raise PatternError("fewer than two letters B in the window")
    runs = _runs(letters)
    lengths = [n for n, _ in runs]
    counts = Counter(lengths)
    tail = 2 * len(letters) / 3
    recurring = sorted({n for n, pos in runs if pos >= tail and counts[n] >= 2})
    evidence = {"runs": lengths, "counts": dict(counts), "recurring": recurring,
                "rule": RECURRENCE_RULE}
    if recurring:
        return KEstimate(max(recurring), evidence)
    # nothing qualifies; growing runs suggest an unbounded supremum
    evidence["fallback"] = True
    if len(lengths) >= 3 and all(a < b for a, b in zip(lengths, lengths[1:])):
        return KEstimate(INFINITE, evidence)
    return KEstimate(max(lengths), evidence)


def schmidt_check(records, word):
    """Exact height inequality H^2(G*) H^2(G) >= H^2(L) for every letter B."""
    vs = [_vec(r) for r in records]
    has_xi = all(hasattr(r, "log_xi") for r in records)
    reports = []
    run = 0
    for letter, (nu, l) in zip(word.letters, word.witnesses):
        if letter == "A":
            run += 1
            continue
        gstar = lc.saturate(vs[nu - 1:nu + 2])
        g = lc.saturate(vs[l - 1:l + 2])
        inter = lc.intersect_spans(gstar.vectors, g.vectors)
        h_gs = lc.height_sq(gstar)
        h_g = lc.height_sq(g)
        h_l = lc.height_sq(inter)
        ratio = None
        if has_xi and l >= 1:
            det_lam = lc.gram_det_sq(vs[l - 1:l + 1])
            ratio = math.exp(0.5 * lc.log_abs(det_lam) - records[l - 1].log_xi() - lc.log_abs(vs[l][0]))
        reports.append(SchmidtReport(run, nu, l, h_gs, h_g, h_l, h_gs * h_g >= h_l, ratio))
        run = 0
    return reports


def det_lambda(records, l):
    """Covolume of <z_{l-1}, z_l>, rounded down."""
    vs = [_vec(r) for r in records]
    return isqrt(lc.gram_det_sq(vs[l - 1:l + 1]))
