"""Weight sequences, weight functions and their associated functions.

Sequences are stored in log form, ``log M_n``, because families such as
``n**n`` overflow binary64 long before the indices we need.
"""

import math
import threading
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .errors import Inconclusive, NonConvergent, OutOfRange, SchemaError
from .rules import compile_rule

__all__ = [
    "GrowthSequence",
    "WeightFunction",
    "CompositeWeight",
    "geometric_grid",
    "associated_function",
    "check_log_convex",
    "check_non_quasianalytic",
    "log_convex_minorant",
    "check_positive_increase",
    "check_regular_growth",
    "regular_growth_threshold",
    "inverse_monotone",
    "sequence_from_rule",
    "weight_from_rule",
]

_REL_SLACK = 1e-12


def geometric_grid(t0, t1, ratio=1.02, cap=20_000):
    """Geometric grid ``t0 * ratio**k`` covering ``[t0, t1]``.

    When more than ``cap`` points would be needed the ratio is enlarged so
    the grid still spans the whole interval.
    """
    if t0 <= 0 or t1 <= t0:
        raise ValueError("need 0 < t0 < t1")
    n = int(math.ceil(math.log(t1 / t0) / math.log(ratio))) + 1
    n = min(max(n, 2), cap)
    return np.geomspace(t0, t1, n)


class GrowthSequence:
    """A positive sequence ``M_n`` given by a rule for ``log M_n``.

    Parameters
    ----------
    log_rule : callable
        Maps an integer array ``n`` to ``log M_n``.
    max_index : int
        Largest index that will ever be tabulated.
    flags : dict, optional
        Known structural facts, keys ``log_convex``, ``non_quasianalytic``
        and ``subanalytic``.
    L, C_sa : float, optional
        Witnesses of ``M_n >= C_sa * L**n * n**n``.
    """

    def __init__(self, log_rule, max_index=10_000_000, flags=None, L=None, C_sa=None, name=""):
        self._rule = log_rule
        self.max_index = int(max_index)
        self.flags = dict(flags or {})
        self.L = L
        self.C_sa = C_sa
        self.name = name
        self._cache = np.empty(0)
        self._incr = np.empty(0)
        self._convex_upto = 0
        self._lock = threading.Lock()

    def __repr__(self):
        return f"GrowthSequence({self.name or 'custom'}, max_index={self.max_index})"

    # -- tabulation -------------------------------------------------------
    def log_values(self, upto):
        """``log M_n`` for ``0 <= n <= upto`` (tabulated lazily, cached)."""
        upto = int(upto)
        if upto > self.max_index:
            raise NonConvergent(f"{self!r}: index {upto} beyond max_index")
        with self._lock:
            if self._cache.size <= upto:
                size = max(upto + 1, min(2 * self._cache.size, self.max_index + 1))
                n = np.arange(size)
                vals = np.asarray(self._rule(n), dtype=float)
                if vals.shape != n.shape or not np.all(np.isfinite(vals)):
                    raise SchemaError(f"{self!r}: log rule must give finite values")
                self._cache = vals
                self._incr = np.diff(vals)
            return self._cache[: upto + 1]

    def log_increments(self, upto):
        """``log M_{n+1} - log M_n`` for ``0 <= n < upto`` (cached with the table)."""
        self.log_values(upto)
        return self._incr[:upto]

    def values(self, upto):
        return np.exp(self.log_values(upto))

    def is_log_convex_upto(self, upto):
        """Cached log-convexity check used to enable the fast sup path."""
        if self.flags.get("log_convex") is False:
            return False
        if upto <= self._convex_upto:
            return True
        ok = check_log_convex(self, upto)
        if ok:
            self._convex_upto = upto
        return ok

    # -- constructors ------------------------------------------------------
    @classmethod
    def from_table(cls, log_m, name="table", flags=None):
        log_m = np.asarray(log_m, dtype=float).copy()
        if log_m.ndim != 1 or log_m.size == 0 or not np.all(np.isfinite(log_m)):
            raise SchemaError("table sequence needs a non-empty finite logM array")

        def rule(n):
            return log_m[n]

        return cls(rule, max_index=log_m.size - 1, flags=flags, name=name)

    @classmethod
    def gevrey(cls, alpha, max_index=10_000_000):
        """``M_n = (n!)**(1/alpha)``."""
        if alpha <= 0:
            raise SchemaError("gevrey alpha must be positive")
        # log-convex for every alpha; quasianalytic iff alpha >= 1
        return cls(lambda n: gammaln(n + 1.0) / alpha, max_index,
                   flags={"log_convex": True, "non_quasianalytic": alpha < 1, "subanalytic": alpha <= 1},
                   L=1.0 / math.e if alpha <= 1 else None, C_sa=1.0 if alpha <= 1 else None,
                   name=f"gevrey(alpha={alpha:g})")

    @classmethod
    def power_nn(cls, alpha=1.0, max_index=10_000_000):
        """``M_n = n**(alpha*n)`` with ``M_0 = 1``."""
        if alpha < 1:
            raise SchemaError("n**(alpha n) is only subanalytic for alpha >= 1")

        def rule(n):
            n = np.asarray(n, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(n > 0, alpha * n * np.log(np.where(n > 0, n, 1.0)), 0.0)

        return cls(rule, max_index, flags={"log_convex": True, "non_quasianalytic": False, "subanalytic": True},
                   L=1.0, C_sa=1.0, name=f"n^({alpha:g}n)")

    @classmethod
    def nlogn(cls, max_index=10_000_000):
        """``M_n = (n log(n+1))**n`` with ``M_0 = 1``: quasianalytic, strictly subanalytic."""

        def rule(n):
            n = np.asarray(n, dtype=float)
            safe = np.where(n > 0, n, 1.0)
            return np.where(n > 0, n * np.log(safe * np.log(safe + 1.0)), 0.0)

        return cls(rule, max_index, flags={"log_convex": True, "non_quasianalytic": False, "subanalytic": True},
                   L=1.0, C_sa=1.0, name="(n log(n+1))^n")

    @classmethod
    def constant(cls, value=1.0, max_index=10_000_000):
        lv = math.log(value)
        return cls(lambda n: np.full(np.shape(n), lv), max_index,
                   flags={"log_convex": True, "non_quasianalytic": False}, name=f"const({value:g})")


def sequence_from_rule(rule):
    """Build a :class:`GrowthSequence` from a JSON rule.

    ``{"kind": "gevrey", "alpha": 2}``, ``{"kind": "nn", "alpha": 1}``,
    ``{"kind": "nlogn"}``, ``{"kind": "const", "value": 1}`` and
    ``{"kind": "table", "logM": [...]}`` are understood.
    """
    if not isinstance(rule, dict):
        raise SchemaError("sequence rule must be an object")
    kind = rule.get("kind")
    cap = int(rule.get("max_index", 10_000_000))
    try:
        if kind == "gevrey":
            return GrowthSequence.gevrey(float(rule["alpha"]), cap)
        if kind == "nn":
            seq = GrowthSequence.power_nn(float(rule.get("alpha", 1.0)), cap)
            if "L" in rule:
                seq.L = float(rule["L"])
            return seq
        if kind == "nlogn":
            return GrowthSequence.nlogn(cap)
        if kind == "const":
            return GrowthSequence.constant(float(rule.get("value", 1.0)), cap)
        if kind == "table":
            if "logM" in rule:
                return GrowthSequence.from_table(rule["logM"])
            return GrowthSequence.from_table(np.log(np.asarray(rule["M"], dtype=float)))
    except KeyError as exc:
        raise SchemaError(f"sequence rule {kind!r} is missing {exc}") from None
    raise SchemaError(f"unknown sequence kind {kind!r}")


@dataclass(frozen=True)
class WeightFunction:
    """A scalar weight ``t -> value`` on ``[domain_min, inf)``."""

    func: object
    monotone: str = "none"
    domain_min: float = 0.0
    name: str = ""
    singularity: float = None
    breakpoints: tuple = field(default=())

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.asarray(self.func(t), dtype=float)

    def log_at(self, s):
        """``log w(e**s)``, using the rule's log form when there is one."""
        if hasattr(self.func, "log_at"):
            return self.func.log_at(s)
        s = np.asarray(s, dtype=float)
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            return np.log(self(np.exp(s)))

    @classmethod
    def from_rule(cls, rule, domain_min=0.0, name=""):
        c = compile_rule(rule)
        return cls(c, c.monotone, domain_min, name or str(c.spec.get("kind", "")), c.singularity, c.breakpoints)

    @classmethod
    def constant(cls, value):
        return cls(lambda t: np.full_like(np.asarray(t, dtype=float), value), "non_decreasing",
                   name=f"const({value:g})")

    def check_monotone(self, grid, tol=1e-12):
        """True iff the declared monotonicity holds on ``grid`` (relative slack ``tol``)."""
        v = self(np.sort(np.asarray(grid, dtype=float)))
        if self.monotone == "none":
            return True
        d = np.diff(v)
        scale = tol * np.maximum(np.abs(v[:-1]), np.abs(v[1:]))
        if self.monotone == "non_decreasing":
            return bool(np.all(d >= -scale))
        return bool(np.all(d <= scale))


def weight_from_rule(rule, domain_min=0.0):
    return WeightFunction.from_rule(rule, domain_min)


@dataclass(frozen=True)
class CompositeWeight:
    """The composites ``M_K``, ``M_{K,log}`` and their order-``m`` variants.

    ``kind`` is one of ``"MK"``, ``"MK_log"``, ``"MK_m"`` and ``"MK_m_log"``.
    """

    base_M: WeightFunction
    base_K: WeightFunction
    kind: str = "MK_log"
    m: int = 1

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            lt = np.log(t)
            inner = np.log(self.base_K(t)) + self.m * lt
            if self.kind in ("MK_log", "MK_m_log"):
                inner = inner + np.log(lt)
            elif self.kind not in ("MK", "MK_m"):
                raise ValueError(f"unknown composite kind {self.kind!r}")
            return self.base_M(t) * inner

    def as_weight(self, domain_min=math.e):
        return WeightFunction(self, "non_decreasing", domain_min, f"{self.kind}")


def _terms_sup(logx, lv):
    terms = np.arange(lv.size) * logx - lv
    k = int(np.argmax(terms))
    return terms[k], k, terms[-1]


def associated_function(seq, x):
    """``sup_n log(x**n / M_n)`` for ``x > 0``.

    Uses a binary search over the increments of ``log M_n`` when the sequence
    is log-convex (the terms are then concave in ``n``) and a direct scan
    otherwise.  The table is extended until the terms have fallen ``20``
    below the running supremum (log-convex case: until the increments exceed
    ``log x``).

    Raises
    ------
    NonConvergent
        If the supremum has not stabilised by ``seq.max_index``.
    """
    xs = np.asarray(x, dtype=float)
    if np.any(xs <= 0):
        raise ValueError("associated function needs x > 0")
    flat = np.atleast_1d(xs).ravel()
    logx = np.log(flat)
    lmax = float(logx.max())

    size = 64
    while True:
        size = min(size, seq.max_index + 1)
        lv = seq.log_values(size - 1)
        convex = seq.is_log_convex_upto(size - 1)
        if convex:
            if size >= 2 and lv[-1] - lv[-2] > lmax:
                d = seq.log_increments(size - 1)
                nstar = np.searchsorted(d, logx, side="right")
                out = nstar * logx - lv[nstar]
                break
        else:
            sups = [_terms_sup(lx, lv) for lx in logx]
            if all(last < s - 20.0 and k < lv.size - 1 for s, k, last in sups):
                out = np.array([s for s, _, _ in sups])
                break
        if size >= seq.max_index + 1:
            raise NonConvergent(f"associated function of {seq!r} not stable by n={seq.max_index} at x={flat.max():g}")
        size *= 2
    return float(out[0]) if xs.ndim == 0 else out.reshape(xs.shape)


def check_log_convex(seq, upto=None):
    """True iff ``M_n**2 <= M_{n-1} M_{n+1}`` for ``1 <= n < upto``."""
    upto = seq.max_index if upto is None else int(upto)
    lv = seq.log_values(upto)
    if lv.size < 3:
        return True
    lhs = 2.0 * lv[1:-1]
    rhs = lv[:-2] + lv[2:]
    slack = _REL_SLACK * np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
    return bool(np.all(lhs <= rhs + slack))


def check_non_quasianalytic(seq, tail_tol=1e-3, upto=None):
    """Decide summability of ``M_n / M_{n+1}`` from a finite table.

    The ratios on the last quarter of the table are fitted by
    ``r_n ~ C n**(-p)``.  Writing ``p = 1 + q / log N`` separates power
    decay from ``1/(n log**q n)``-type decay; ``q <= 1.25`` means the series
    behaves like a divergent harmonic-type series.  Otherwise the fitted tail
    beyond ``N`` is integrated and compared with ``tail_tol``.

    Raises
    ------
    Inconclusive
        When neither verdict is reached at the tabulation limit.
    """
    N = min(seq.max_index, 200_000) if upto is None else int(upto)
    lv = seq.log_values(N)
    lr = lv[:-1] - lv[1:]  # log(M_n / M_{n+1}), n = 0..N-1
    partial = float(np.sum(np.exp(lr)))
    n = np.arange(lr.size, dtype=float)
    lo = int(0.75 * lr.size)
    sel = slice(max(lo, 1), lr.size)
    slope, icpt = np.polyfit(np.log(n[sel]), lr[sel], 1)
    p = -slope
    logN = math.log(lr.size)
    q = (p - 1.0) * logN
    if q <= 1.25:
        return False
    r_last = math.exp(lr[-1])
    tail = r_last * lr.size / (p - 1.0)
    if tail <= tail_tol:
        return True
    if partial > math.log(max(seq.max_index, 3)):
        return False
    raise Inconclusive(f"{seq!r}: tail estimate {tail:.3g} above tolerance with partial sum {partial:.3g}")


def log_convex_minorant(seq, upto=None):
    """Largest log-convex minorant: lower convex hull of ``(n, log M_n)``."""
    upto = seq.max_index if upto is None else int(upto)
    lv = seq.log_values(upto).copy()
    hull = []
    for i in range(lv.size):
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or above the chord a -> i
            if (lv[b] - lv[a]) * (i - a) >= (lv[i] - lv[a]) * (b - a):
                hull.pop()
            else:
                break
        hull.append(i)
    idx = np.asarray(hull)
    out = np.interp(np.arange(lv.size), idx, lv[idx])
    # points within rounding of the hull keep their own value, so the map is idempotent
    near = np.abs(out - lv) <= 1e-12 * np.maximum(1.0, np.abs(lv))
    out = np.where(near, lv, np.minimum(out, lv))
    return GrowthSequence.from_table(out, name=f"minorant({seq.name})", flags={"log_convex": True})


def check_positive_increase(K, a, t0, R_max=1e8, doublings=6):
    """True iff ``t**-a K(t) <= C R**-a K(R)`` for ``t0 <= t <= R`` with stable ``C``.

    The best constant is computed on a geometric grid for
    ``R_max / 2**doublings, ..., R_max``; it is accepted as stable when its
    log-increments over the last doublings are zero up to roundoff or
    clearly decaying.
    """
    grid = geometric_grid(t0, R_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = -a * np.log(grid) + np.log(K(grid))
    if not np.all(np.isfinite(lg)):
        return False
    run = np.maximum.accumulate(lg)
    worst = np.maximum.accumulate(run - lg)
    stops = R_max / 2.0 ** np.arange(doublings, -1, -1)
    idx = np.searchsorted(grid, stops, side="right") - 1
    if idx[0] < 1:
        raise ValueError("R_max too small for the requested number of doublings")
    logC = worst[idx]
    inc = np.diff(logC)
    if inc[-1] <= 1e-9:
        return True
    return bool(inc[0] > 0 and inc[-1] <= 0.25 * inc[0])


def check_regular_growth(V, eta, Cprime, t0, t_max=1e8):
    """True iff ``V(C't)/V(t) >= 1 + 1/eta(t)`` on the grid ``t0 <= t <= t_max``."""
    grid = geometric_grid(t0, t_max)
    ratio = V(Cprime * grid) / V(grid)
    need = 1.0 + 1.0 / eta(grid)
    return bool(np.all(np.isfinite(ratio)) and np.all(ratio >= need))


def regular_growth_threshold(V, eta, Cprime, t_min, t_max=1e8):
    """Smallest grid point ``t0`` from which :func:`check_regular_growth` holds, or None."""
    grid = geometric_grid(t_min, t_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (V(Cprime * grid) / V(grid)) >= 1.0 + 1.0 / eta(grid)
    ok &= np.isfinite(V(grid))
    if not ok[-1]:
        return None
    bad = np.nonzero(~ok)[0]
    return float(grid[0] if bad.size == 0 else grid[bad[-1] + 1])


def inverse_monotone(V, y, x_lo=None, x_hi=None, max_iter=200):
    """Solve ``V(x) = y`` for strictly increasing ``V`` by bisection.

    The bracket defaults to ``[V.domain_min, ...]`` and is widened
    geometrically when ``x_hi`` is not given.  Bisection runs in log space
    while the bracket spans more than a factor two.

    Raises
    ------
    OutOfRange
        If ``y`` lies outside ``[V(x_lo), V(x_hi)]``.
    """
    y = float(y)
    if x_lo is None:
        x_lo = float(getattr(V, "domain_min", 0.0))

    def f(x):
        return float(np.asarray(V(np.asarray(x, dtype=float))))

    v_lo = f(x_lo)
    if not (y >= v_lo):
        raise OutOfRange(f"y={y:g} below V(x_lo)={v_lo:g}")
    if x_hi is None:
        x_hi = max(2.0 * x_lo, 1.0)
        while f(x_hi) < y:
            x_hi *= 2.0
            if x_hi > 1e300:
                raise OutOfRange(f"y={y:g} not reached before x=1e300")
    v_hi = f(x_hi)
    if not (y <= v_hi):
        raise OutOfRange(f"y={y:g} above V(x_hi)={v_hi:g}")
    tol = 1e-10 * max(1.0, abs(y))
    if abs(v_lo - y) <= tol:
        return float(x_lo)
    if abs(v_hi - y) <= tol:
        return float(x_hi)
    lo, hi = float(x_lo), float(x_hi)
    mid = 0.5 * (lo + hi)
    for _ in range(max_iter):
        if lo > 0 and hi > 2.0 * lo:
            mid = math.sqrt(lo * hi)
        else:
            mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        v = f(mid)
        if abs(v - y) <= tol:
            return mid
        if v < y:
            lo = mid
        else:
            hi = mid
    return mid
