"""Error terms of the seven boundary classes and the lambda optimisation.

All arithmetic is carried out on ``log E`` as a function of ``s = log lambda``
so that rows with exponentially large optimal ``lambda`` (analytic
continuation with bounded ``G``) stay inside binary64.  Weights are
evaluated through :meth:`WeightFunction.log_at`, which uses the closed log
forms of the rule vocabulary when available.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import golden
from scipy.special import gammaln

from .errors import NormDiverges, OutOfRange, SchemaError, warn_flat
from .growth import (
    CompositeWeight,
    GrowthSequence,
    WeightFunction,
    associated_function,
    check_log_convex,
    check_positive_increase,
    geometric_grid,
    inverse_monotone,
    regular_growth_threshold,
    sequence_from_rule,
)

__all__ = [
    "BoundaryClass",
    "RateResult",
    "Theorem14Rate",
    "error_term",
    "log_error_term",
    "optimize_rate",
    "theorem_1_4_rate",
    "wiener_ikehara_rate",
    "class_from_dict",
    "x_grid_from_dict",
    "TAGS",
]

TAGS = ("Dif", "DifI", "HC", "HCI", "SA", "SAI", "An", "SAA")
KAPPA_AN = 675.0
KAPPA_SA_NUM = 124.0


def _conjugate(p):
    if p == 1:
        return math.inf
    if math.isinf(p):
        return 1.0
    return p / (p - 1.0)


def _log_exprel(z):
    """``log((e**z - 1) / z)``, stable for all real ``z``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = np.abs(z) < 1e-6
    out[small] = 0.5 * z[small]
    pos = (z >= 1e-6)
    zp = z[pos]
    out[pos] = zp + np.log(-np.expm1(-zp)) - np.log(zp)
    neg = (z <= -1e-6)
    zn = z[neg]
    out[neg] = np.log(-np.expm1(zn)) - np.log(-zn)
    return out


class _LogCumulative:
    """``log int_0^{e**s} w(t)**q dt`` (or the running sup for ``q = inf``).

    The integrand is written as ``exp(phi(u))`` with ``u = log t`` and
    integrated piecewise under a log-linear model of ``phi``; the model is
    exact for power laws, so the huge cells used far out (where
    ``phi`` is nearly linear) cost nothing in accuracy.  Below ``s_lo`` the
    integrand is continued as a power law, which handles integrable power
    singularities at the origin.
    """

    def __init__(self, weight, q=1.0, s_lo=-30.0, s_mid=60.0, step=2e-3, ratio=1.002):
        self.weight = weight
        self.q = q
        self.s_lo, self.s_mid, self.step, self.ratio = s_lo, s_mid, step, ratio
        self.s_hi = -math.inf
        self._build(s_mid)

    def _phi(self, u):
        lw = self.weight.log_at(u)
        if math.isinf(self.q):
            return lw
        with np.errstate(invalid="ignore"):
            return np.where(lw == -np.inf, -np.inf, self.q * lw) + u

    def _build(self, s_hi):
        nodes = np.arange(self.s_lo, self.s_mid + 0.5 * self.step, self.step)
        if s_hi > self.s_mid:
            n_geo = int(math.ceil(math.log(s_hi / self.s_mid) / math.log(self.ratio))) + 1
            nodes = np.concatenate([nodes, np.geomspace(self.s_mid, s_hi, n_geo)[1:]])
        phi = self._phi(nodes)
        if np.any(np.isnan(phi)):
            raise NormDiverges(f"weight {self.weight.name!r} is not finite on the quadrature grid")
        if math.isinf(self.q):
            if getattr(self.weight, "singularity", None) is not None:
                raise NormDiverges("sup norm of a weight singular at 0 is infinite")
            self.cum = np.maximum.accumulate(phi)
        else:
            h = self.step
            k0 = (phi[1] - phi[0]) / h
            if phi[0] == -np.inf:
                i0 = -np.inf
            elif not k0 > 0:
                raise NormDiverges(f"weight {self.weight.name!r} is not integrable at 0 (local exponent {k0 - 1:.3g})")
            else:
                i0 = phi[0] - math.log(k0)
            seg = self._segments(nodes[:-1], nodes[1:], phi[:-1], phi[1:])
            self.k0 = k0
            self.cum = np.logaddexp.accumulate(np.concatenate([[i0], seg]))
        self.nodes, self.phi, self.s_hi = nodes, phi, float(nodes[-1])

    @staticmethod
    def _segments(a, b, pa, pb):
        h = b - a
        with np.errstate(invalid="ignore", over="ignore"):
            fin = np.isfinite(pa) & np.isfinite(pb)
            out = np.where(pb == np.inf, np.inf, -np.inf)
            out = np.asarray(out, dtype=float)
            if np.any(fin):
                out[fin] = pa[fin] + np.log(h[fin]) + _log_exprel(pb[fin] - pa[fin])
            # one end is -inf (weight vanishes there): trapezoid on the other end
            one = ~fin & (pb != np.inf) & (np.isfinite(pa) | np.isfinite(pb))
            if np.any(one):
                out[one] = np.maximum(pa[one], pb[one]) + np.log(0.5 * h[one])
        return out

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if s.size and np.nanmax(s) > self.s_hi:
            self._build(max(float(np.nanmax(s)), 2.0 * self.s_hi))
        k = np.clip(np.searchsorted(self.nodes, s, side="right") - 1, 0, self.nodes.size - 1)
        ps = self._phi(s)
        if math.isinf(self.q):
            out = np.maximum(self.cum[k], ps)
        else:
            part = self._segments(self.nodes[k], np.maximum(s, self.nodes[k]), self.phi[k], ps)
            part = np.where(s > self.nodes[k], part, -np.inf)
            out = np.logaddexp(self.cum[k], part)
            below = s < self.s_lo
            if np.any(below):
                out = np.where(below, ps - math.log(self.k0), out)
        return np.where(np.isnan(out), np.inf, out)


def _as_weight(w, name=""):
    if w is None or isinstance(w, (WeightFunction, CompositeWeight)):
        return w
    if callable(w) and not isinstance(w, dict):
        return WeightFunction(w, name=name)
    return WeightFunction.from_rule(w, name=name)


@dataclass(frozen=True, eq=False)
class BoundaryClass:
    """Boundary-behaviour class of the Fourier transform and its parameters.

    ``G``, ``H`` and ``omega`` are weights of ``|t|`` (even in ``t``).  For
    the SA family ``H`` is the class function ``H(lambda)``; set
    ``H_pointwise=True`` when ``H`` is instead a pointwise envelope whose
    ``L^q(-lambda, lambda)`` norm should be used.  The ``SAA`` tag takes a
    list ``Hn`` of weights ``H_j`` and minimises the binomial sum over
    ``n <= n_max`` directly.
    """

    tag: str
    N: int = 0
    G: object = None
    p: float = math.inf
    omega: object = None
    delta0: float = 1.0
    D: float = 1.0
    Mn: object = None
    B: float = 1.0
    H: object = None
    kappa: float = None
    H_pointwise: bool = False
    Hn: tuple = ()
    n_max: int = 200
    _cache: dict = field(default_factory=dict, repr=False, init=False, compare=False)

    def __post_init__(self):
        if self.tag not in TAGS:
            raise SchemaError(f"unknown class tag {self.tag!r}; expected one of {TAGS}")
        p = float(self.p)
        if not p >= 1:
            raise SchemaError("p must lie in [1, inf]")
        object.__setattr__(self, "p", p)
        G = _as_weight(self.G, "G")
        if G is None:
            if self.tag in ("SA", "SAI", "SAA"):
                G = WeightFunction.constant(1.0)
            else:
                raise SchemaError(f"class {self.tag} needs a weight G")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "H", _as_weight(self.H, "H"))
        object.__setattr__(self, "omega", _as_weight(self.omega, "omega"))
        object.__setattr__(self, "Hn", tuple(_as_weight(h, f"H{j}") for j, h in enumerate(self.Hn)))
        if self.tag in ("HC", "HCI") and self.omega is None:
            raise SchemaError("HC classes need a modulus omega")
        if self.tag in ("SA", "SAI", "An") and self.H is None:
            raise SchemaError(f"class {self.tag} needs a weight H")
        if self.tag == "SAA" and not self.Hn:
            raise SchemaError("class SAA needs the list Hn")
        if self.tag in ("SA", "SAI", "SAA"):
            Mn = self.Mn
            if isinstance(Mn, dict):
                Mn = sequence_from_rule(Mn)
            if not isinstance(Mn, GrowthSequence):
                raise SchemaError(f"class {self.tag} needs a GrowthSequence Mn")
            object.__setattr__(self, "Mn", Mn)
        if self.kappa is None:
            if self.tag == "An":
                k = KAPPA_AN
            elif self.tag in ("SA", "SAI", "SAA"):
                k = KAPPA_SA_NUM / (self.Mn.L if self.Mn.L else 1.0)
            else:
                k = 0.0
            object.__setattr__(self, "kappa", float(k))

    @property
    def q(self):
        return _conjugate(self.p)

    def _cumulative(self, key, weight, q):
        c = self._cache.get(key)
        if c is None:
            c = self._cache[key] = _LogCumulative(weight, q)
        return c

    def log_norm(self, weight, s, key="G"):
        """``log ||w chi_(-lambda, lambda)||_q`` at ``lambda = e**s``."""
        q = self.q
        cum = self._cumulative((key, q), weight, q)
        if math.isinf(q):
            return cum(s)
        return (math.log(2.0) + cum(s)) / q

    def log_integral(self, weight, s, key="H"):
        """``log int_0^lambda w`` at ``lambda = e**s``."""
        return self._cumulative((key, 1.0), weight, 1.0)(s)

    def validate(self, t_max=1e6):
        """Check the structural hypotheses of the class on a grid; returns a dict of booleans."""
        grid = geometric_grid(1e-3, t_max)
        out = {}
        if self.tag in ("HC", "HCI"):
            ys = np.geomspace(1e-8, self.delta0, 400)
            w = self.omega(ys)
            out["omega_monotone"] = bool(np.all(np.diff(w) >= -1e-12 * np.abs(w[1:])))
            out["omega_linear_floor"] = bool(np.all(np.isfinite(w / ys)) and np.min(w / ys) > 0)
        if self.tag in ("SA", "SAI", "SAA"):
            upto = min(self.Mn.max_index, 10_000)
            out["log_convex"] = check_log_convex(self.Mn, upto)
            out["subanalytic"] = bool(self.Mn.flags.get("subanalytic", False) or self.Mn.L)
        if self.tag == "An":
            g = self.G(grid)
            out["G_monotone"] = bool(np.all(np.diff(g) >= -1e-12 * np.abs(g[1:])))
            out["G0_nonzero"] = bool(float(self.G(0.0)) != 0.0)
            th = grid * self.H(grid)
            out["tH_monotone"] = bool(np.all(np.diff(th) >= -1e-12 * np.abs(th[1:])))
        out["pass"] = all(out.values())
        return out


def _saa_log_term(cls, x, s):
    """``log inf_n x**-n M_n sum_j C(n,j) B**j (kappa/lambda)**(n-j) H_j(lambda)``."""
    s = np.atleast_1d(np.asarray(s, dtype=float))
    n_max = min(cls.n_max, len(cls.Hn) - 1)
    lm = cls.Mn.log_values(n_max)
    logH = np.array([h.log_at(s) for h in cls.Hn[: n_max + 1]])  # (n+1, len(s))
    lB, lk, lx = math.log(cls.B), math.log(cls.kappa), math.log(x)
    best = np.full(s.shape, np.inf)
    for n in range(n_max + 1):
        j = np.arange(n + 1)[:, None]
        lbin = gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
        terms = lbin + j * lB + (n - j) * (lk - s[None, :]) + logH[: n + 1]
        val = -n * lx + lm[n] + np.logaddexp.reduce(terms, axis=0)
        best = np.minimum(best, val)
    return best


def log_error_term(cls, x, s):
    """``log E(x, lambda)`` for ``lambda = e**s`` (vectorised over ``s``)."""
    x = float(x)
    if x <= 0:
        raise ValueError("x must be positive")
    s = np.asarray(s, dtype=float)
    tag = cls.tag
    lx = math.log(x)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        if tag in ("Dif", "HC"):
            out = -cls.N * lx + np.logaddexp(0.0, cls.log_norm(cls.G, s))
        elif tag in ("DifI", "HCI"):
            out = -cls.N * lx + np.logaddexp(0.0, cls.G.log_at(s))
        elif tag in ("SA", "SAI"):
            lg = cls.G.log_at(s)
            denom = np.logaddexp(math.log(cls.B) + lg, math.log(cls.kappa) - s) if cls.kappa > 0 \
                else math.log(cls.B) + lg
            y = np.exp(lx - denom)
            y = np.where(y > 0, y, np.finfo(float).tiny)
            Mval = associated_function(cls.Mn, y)
            lh = cls.log_norm(cls.H, s, key="H") if cls.H_pointwise else cls.H.log_at(s)
            out = -Mval + lh
        elif tag == "An":
            lg = cls.G.log_at(s)
            expo = -np.exp(lx - lg - np.log1p(cls.kappa * np.exp(-s)))
            out = expo + cls.log_integral(cls.H, s)
            g0 = float(cls.G(0.0))
            if g0 <= 0:
                raise SchemaError("An class needs G(0) > 0")
            out = np.where(s < math.log(2.0 / g0), np.inf, out)
        elif tag == "SAA":
            out = _saa_log_term(cls, x, s).reshape(s.shape)
        else:  # pragma: no cover - guarded in BoundaryClass
            raise SchemaError(tag)
        if tag in ("HC", "HCI"):
            out = out + math.log(float(cls.omega(math.pi / x)))
    return out


def error_term(cls, x, lam):
    """``E_*(x, lambda)`` for one of the seven classes (``+inf`` where undefined)."""
    if np.any(np.asarray(lam) < 1):
        raise ValueError("lambda must be >= 1")
    with np.errstate(over="ignore"):
        out = np.exp(log_error_term(cls, x, np.log(lam)))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class RateResult:
    """Minimiser of ``E(x, lambda) + f(x)/lambda**m`` over ``lambda``.

    ``bound``, ``E_at_star`` and ``penalty_at_star`` underflow to zero for
    the fast-decaying classes; the ``log_*`` fields are always meaningful.
    ``trace`` holds the probed ``(lambda, objective)`` pairs.
    """

    x: float
    lambda_star: float
    E_at_star: float
    penalty_at_star: float
    bound: float
    log_lambda_star: float
    log_E: float
    log_penalty: float
    log_bound: float
    log_trace: np.ndarray = field(repr=False, default=None)
    at_upper_end: bool = False

    @property
    def trace(self):
        with np.errstate(over="ignore"):
            return np.exp(self.log_trace)

    def as_row(self):
        return {"x": self.x, "lambda_star": self.lambda_star, "E": self.E_at_star,
                "penalty": self.penalty_at_star, "bound": self.bound}


def _search_grid(s_max, step, cap):
    n = int(math.ceil(s_max / step)) + 1
    if n <= cap:
        return np.linspace(0.0, s_max, max(n, 2))
    half = cap // 2
    s_mid = step * (half - 1)
    geo = np.geomspace(s_mid, s_max, cap - half + 1)[1:]
    return np.concatenate([np.linspace(0.0, s_mid, half), geo])


def optimize_rate(cls, f_at_x, x, m=1, lambda_max=None, ratio=1.01, cap=20_000, s_cap=1e9):
    """Minimise ``E(x, lambda) + f_at_x / lambda**m`` over ``1 <= lambda <= lambda_max``.

    The objective is scanned on a geometric lambda grid of the given ratio
    (coarsened in ``log lambda`` beyond ``cap`` points and then refined
    around the argmin) and polished by golden-section search in
    ``log lambda``.  ``lambda_max`` defaults to ``max(1e9, x**3)``; pass
    ``"auto"`` to keep enlarging ``log lambda_max`` while the minimiser sits
    on the upper end, or ``("log", s)`` to give ``log lambda_max`` directly.
    Ties are resolved toward the larger lambda.
    """
    if f_at_x < 0:
        raise ValueError("f_at_x must be non-negative")
    x = float(x)
    auto = lambda_max == "auto"
    if auto or lambda_max is None:
        s_max = math.log(max(1e9, x ** 3))
    elif isinstance(lambda_max, tuple) and lambda_max[0] == "log":
        s_max = float(lambda_max[1])
    else:
        if lambda_max < 1:
            raise ValueError("lambda_max must be >= 1")
        s_max = math.log(lambda_max)
    step = math.log(ratio)
    lf = math.log(f_at_x) if f_at_x > 0 else -math.inf

    def obj(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(invalid="ignore"):
            v = np.logaddexp(log_error_term(cls, x, s), lf - m * s)
        return np.where(np.isnan(v), np.inf, v)

    probes_s, probes_v = [], []

    def scan(lo, hi, n):
        g = np.linspace(lo, hi, n) if hi > lo else np.array([lo])
        v = obj(g)
        probes_s.append(g)
        probes_v.append(v)
        return g, v

    def last_argmin(v):
        return int(v.size - 1 - np.argmin(v[::-1]))

    while True:
        g = _search_grid(s_max, step, cap)
        v = obj(g)
        probes_s.append(g)
        probes_v.append(v)
        k = last_argmin(v)
        if not (auto and k == g.size - 1 and np.isfinite(v[k]) and s_max < s_cap):
            break
        s_max = min(4.0 * s_max, s_cap)
    # refine while the neighbouring grid points are further apart than one ratio step
    while 0 < k < g.size - 1 and (g[k + 1] - g[k - 1]) > 2.0001 * step:
        lo, hi = g[k - 1], g[k + 1]
        n = min(cap, int(math.ceil((hi - lo) / step)) + 1)
        g, v = scan(lo, hi, n)
        k = last_argmin(v)
    s_star, v_star = float(g[k]), float(v[k])
    if 0 < k < g.size - 1 and np.isfinite(v_star) and v[k] < v[k - 1] and v[k] < v[k + 1]:
        f1 = lambda u: float(obj(np.array([u]))[0])
        try:
            u, fu = golden(f1, brack=(g[k - 1], g[k], g[k + 1]), tol=1e-10, full_output=True)[:2]
            probes_s.append(np.array([u]))
            probes_v.append(np.array([fu]))
            if fu < v_star and 0.0 <= u <= s_max:
                s_star, v_star = float(u), float(fu)
        except (ValueError, RuntimeError):
            pass
    at_end = s_star >= s_max * (1 - 1e-12) and lf > -math.inf
    if at_end:
        warn_flat(f"rate minimiser at lambda_max = exp({s_max:.4g}) for x = {x:g}; the infimum may be truncated")
    lE = float(log_error_term(cls, x, np.array([s_star]))[0])
    lP = lf - m * s_star
    trace = np.column_stack([np.concatenate(probes_s), np.concatenate(probes_v)])
    with np.errstate(over="ignore", under="ignore"):
        return RateResult(
            x=x, lambda_star=float(np.exp(s_star)), E_at_star=float(np.exp(lE)),
            penalty_at_star=float(np.exp(lP)), bound=float(np.exp(v_star)),
            log_lambda_star=s_star, log_E=lE, log_penalty=lP, log_bound=v_star,
            log_trace=trace, at_upper_end=bool(s_star >= s_max * (1 - 1e-12)),
        )


# -- composite weight rates ----------------------------------------------------


@dataclass(frozen=True)
class Theorem14Rate:
    """Decay rates of the analytic-continuation theorem at one ``x``.

    ``rate`` is ``1/M_{K,log}^{-1}(c x)``; ``rate_c1`` (``c = 1``) and
    ``rate_MK`` (``1/M_K^{-1}(x)``) are ``None`` unless their growth
    hypotheses were confirmed on the grid.
    """

    x: float
    c: float
    rate: float
    rate_c1: float = None
    rate_MK: float = None
    regular_growth_t0: float = None
    positive_increase_a: float = None
    log_beta: float = None

    def __float__(self):
        return float(self.rate)

    @property
    def best(self):
        for r in (self.rate_MK, self.rate_c1, self.rate):
            if r is not None:
                return r


def _eta(M, denom):
    return lambda t: np.asarray(t, dtype=float) * M(t) / denom


def _log_beta_branch(M, t_lo=1e3, t_hi=1e8, betas=(1.0, 0.5, 0.25)):
    grid = geometric_grid(t_lo, t_hi)
    for b in betas:
        r = M(grid) / np.log(grid) ** b
        if np.all(np.diff(r) >= -1e-12 * r[1:]):
            return b
    return None


def theorem_1_4_rate(M, K, c, x, Cprime=math.e, t_max=1e8):
    """Rates ``1/M_{K,log}^{-1}(cx)`` and, when justified, ``1/M_K^{-1}(x)``.

    ``M`` and ``K`` are non-decreasing weights (or rules).  The regular
    growth and positive increase hypotheses are tested on a geometric grid
    up to ``t_max`` with the multiplier ``Cprime``.

    Raises
    ------
    OutOfRange
        If ``c x`` lies below ``M_{K,log}(e)`` (or ``x`` below ``M_K(e)``).
    """
    if not 0 < c <= 1:
        raise ValueError("c must lie in (0, 1]")
    M, K = _as_weight(M, "M"), _as_weight(K, "K")
    V = CompositeWeight(M, K, "MK_log").as_weight(math.e)
    t_star = inverse_monotone(V, c * x)
    t0 = regular_growth_threshold(V, _eta(M, 675.0), Cprime, math.e, t_max)
    rate_c1 = None
    if t0 is not None:
        rate_c1 = 1.0 / (t_star if c == 1 else inverse_monotone(V, x))
    a_pi = None
    for a in (1.0, 0.5, 0.25):
        if check_positive_increase(K, a, math.e, t_max):
            a_pi = a
            break
    beta = None
    if a_pi is None and regular_growth_threshold(V, _eta(M, 1350.0), Cprime, math.e, t_max) is not None:
        beta = _log_beta_branch(M)
    rate_mk = None
    if t0 is not None and (a_pi is not None or beta is not None):
        VK = CompositeWeight(M, K, "MK").as_weight(math.e)
        rate_mk = 1.0 / inverse_monotone(VK, x)
    return Theorem14Rate(x=float(x), c=float(c), rate=1.0 / t_star, rate_c1=rate_c1, rate_MK=rate_mk,
                         regular_growth_t0=t0, positive_increase_a=a_pi, log_beta=beta)


def wiener_ikehara_rate(M, K, A_residue, c, x):
    """Error envelope ``e**x / M_{K,log}^{-1}(c x)`` around ``A e**x``.

    The residue only labels the result; the envelope does not depend on it.
    """
    if A_residue <= 0:
        raise ValueError("the residue must be positive")
    r = theorem_1_4_rate(M, K, c, x)
    with np.errstate(over="ignore"):
        return float(np.exp(x) * r.rate)


# -- JSON requests ---------------------------------------------------------------


def class_from_dict(d):
    """Build a :class:`BoundaryClass` from its JSON form."""
    if not isinstance(d, dict) or "tag" not in d:
        raise SchemaError("class must be an object with a 'tag'")
    allowed = {"tag", "N", "G", "p", "omega", "delta0", "D", "Mn", "B", "H", "kappa", "H_pointwise", "Hn", "n_max"}
    extra = set(d) - allowed
    if extra:
        raise SchemaError(f"unknown class fields {sorted(extra)}")
    kw = dict(d)
    if "p" in kw:
        kw["p"] = math.inf if str(kw["p"]).lower() in ("inf", "infinity") else float(kw["p"])
    for key in ("N", "n_max"):
        if key in kw:
            kw[key] = int(kw[key])
    for key in ("delta0", "D", "B", "kappa"):
        if key in kw and kw[key] is not None:
            kw[key] = float(kw[key])
    if "Hn" in kw:
        kw["Hn"] = tuple(kw["Hn"])
    try:
        return BoundaryClass(**kw)
    except (TypeError, KeyError) as exc:
        raise SchemaError(str(exc)) from None


def x_grid_from_dict(d):
    """``{"values": [...]}`` or ``{"start", "stop", "num", "spacing": "geometric"|"linear"}``."""
    if isinstance(d, list):
        d = {"values": d}
    if not isinstance(d, dict):
        raise SchemaError("x_grid must be an object or a list")
    if "values" in d:
        xs = np.asarray(d["values"], dtype=float)
    else:
        try:
            a, b, n = float(d["start"]), float(d["stop"]), int(d["num"])
        except (KeyError, TypeError, ValueError):
            raise SchemaError("x_grid needs start, stop and num") from None
        spacing = d.get("spacing", "geometric")
        if spacing == "geometric":
            if a <= 0:
                raise SchemaError("geometric x_grid needs start > 0")
            xs = np.geomspace(a, b, n)
        elif spacing == "linear":
            xs = np.linspace(a, b, n)
        else:
            raise SchemaError(f"unknown spacing {spacing!r}")
    if xs.ndim != 1 or xs.size == 0 or np.any(~np.isfinite(xs)) or np.any(xs <= 0):
        raise SchemaError("x_grid values must be positive and finite")
    return xs


def __getattr__(name):
    # the decay-table rows live in their own module, which imports this one
    if name in ("appendix_table", "ROWS"):
        from . import appendix
        return getattr(appendix, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
