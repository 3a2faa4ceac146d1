"""Numerical check of the Berry-Esseen smoothing inequality

    sup |F - G| <= 10 sup_{x, 0<=y<=1/T} (G(x+y) - G(x)) + (1/5) int_{-T}^{T} |f(t) - g(t)| / |t| dt

on pairs of distributions with analytic characteristic functions.
"""

import functools
import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import InequalityViolated, SchemaError, SingularAtZero

__all__ = [
    "Distribution",
    "DistributionPair",
    "distribution_from_dict",
    "pair_from_dict",
    "load_corpus",
    "sup_diff",
    "modulus_term",
    "integral_term",
    "be_rhs",
    "kernel_rhs",
    "kernel_constants",
    "verify_be",
]

VIOLATION_TOL = 1e-6
MAX_PIECES = 400  # quad sub-intervals of the integral term; beyond T = 200 the pieces widen


@dataclass(frozen=True, eq=False)
class Distribution:
    """A distribution function with its characteristic function.

    ``atoms`` lists the jump points (possibly truncated where the jump falls
    below 1e-17); ``mean`` is ``None`` when no first moment is declared.
    """

    kind: str
    cdf: object = field(repr=False)
    cf: object = field(repr=False)
    mean: float = None
    atoms: np.ndarray = field(repr=False, default=None)
    lo: float = -10.0
    hi: float = 10.0
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.cdf(np.asarray(x, dtype=float))

    def left(self, x):
        """Left limit ``F(x-)``."""
        x = np.asarray(x, dtype=float)
        if self.atoms is None or self.atoms.size == 0:
            return self.cdf(x)
        # step below any rounding of an atom location but far below the atom spacing
        return self.cdf(x - 1e-9 * (1.0 + np.abs(x)))

    @property
    def is_continuous(self):
        return self.atoms is None or self.atoms.size == 0


def _affine(kind, loc, scale, cdf0, cf0, mean0, atoms0, lo0, hi0, params):
    """Distribution of ``(X - loc) / scale`` from that of ``X``."""

    def cdf(x):
        return cdf0(np.asarray(x, dtype=float) * scale + loc)

    def cf(t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * t * loc / scale) * cf0(t / scale)

    atoms = None if atoms0 is None else (atoms0 - loc) / scale
    mean = None if mean0 is None else (mean0 - loc) / scale
    return Distribution(kind, cdf, cf, mean, atoms, (lo0 - loc) / scale, (hi0 - loc) / scale, params)


def _binomial(n, p):
    k = np.arange(n + 1, dtype=float)
    d = stats.binom(n, p)

    def cdf(x):
        return d.cdf(np.floor(x + 1e-12 * (1 + np.abs(x))))

    def cf(t):
        return (1.0 - p + p * np.exp(1j * np.asarray(t, dtype=float))) ** n

    return cdf, cf, n * p, k, -1.0, n + 1.0, math.sqrt(n * p * (1 - p))


def _poisson(mu):
    d = stats.poisson(mu)
    kmax = int(mu + 40.0 * math.sqrt(mu) + 40.0)
    k = np.arange(kmax + 1, dtype=float)

    def cdf(x):
        return d.cdf(np.floor(x + 1e-12 * (1 + np.abs(x))))

    def cf(t):
        return np.exp(mu * np.expm1(1j * np.asarray(t, dtype=float)))

    return cdf, cf, mu, k, -1.0, kmax + 1.0, math.sqrt(mu)


def _irwin_hall(n):
    if n > 12:
        raise SchemaError("uniform_sum is limited to n <= 12 (alternating-sum cancellation)")
    signs = np.array([(-1) ** k * math.comb(n, k) for k in range(n + 1)], dtype=float)
    fact = math.factorial(n)

    def cdf(x):
        x = np.clip(np.asarray(x, dtype=float), 0.0, float(n))
        out = np.zeros_like(x)
        for k in range(n + 1):
            out += signs[k] * np.where(x > k, (x - k) ** n, 0.0)
        return np.clip(out / fact, 0.0, 1.0)

    def cf(t):
        t = np.asarray(t, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            u = np.where(t == 0, 1.0, np.expm1(1j * t) / (1j * np.where(t == 0, 1.0, t)))
        return u ** n

    return cdf, cf, n / 2.0, None, 0.0, float(n), math.sqrt(n / 12.0)


def _student_t(df):
    d = stats.t(df)
    c = 1.0 / (special.gamma(df / 2.0) * 2.0 ** (df / 2.0 - 1.0))

    def cf(t):
        u = math.sqrt(df) * np.abs(np.asarray(t, dtype=float))
        with np.errstate(invalid="ignore"):
            v = c * special.kv(df / 2.0, u) * u ** (df / 2.0)
        return np.where(u == 0, 1.0, v).astype(complex)

    q = float(d.isf(1e-12))
    return d.cdf, cf, (0.0 if df > 1 else None), None, -q, q


def distribution_from_dict(d):
    """Build a :class:`Distribution` from its JSON description.

    Kinds: ``binomial`` (n, p), ``poisson`` (mu), ``normal`` (mu, sigma),
    ``uniform_sum`` (n), ``student_t`` (df) and ``point`` (at).  The first
    four accept ``"standardized": true``.
    """
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError("distribution must be an object with a 'kind'")
    kind = d["kind"]
    std = bool(d.get("standardized", False))
    try:
        if kind == "binomial":
            n, p = int(d["n"]), float(d["p"])
            if n < 1 or not 0 < p < 1:
                raise SchemaError("binomial needs n >= 1 and 0 < p < 1")
            cdf, cf, mean, atoms, lo, hi, sd = _binomial(n, p)
        elif kind == "poisson":
            mu = float(d["mu"])
            if mu <= 0:
                raise SchemaError("poisson needs mu > 0")
            cdf, cf, mean, atoms, lo, hi, sd = _poisson(mu)
        elif kind == "uniform_sum":
            n = int(d["n"])
            if n < 1:
                raise SchemaError("uniform_sum needs n >= 1")
            cdf, cf, mean, atoms, lo, hi, sd = _irwin_hall(n)
        elif kind == "normal":
            mu, sigma = float(d.get("mu", 0.0)), float(d.get("sigma", 1.0))
            if sigma <= 0:
                raise SchemaError("normal needs sigma > 0")
            nd = stats.norm(mu, sigma)

            def cf(t, mu=mu, sigma=sigma):
                t = np.asarray(t, dtype=float)
                return np.exp(1j * mu * t - 0.5 * (sigma * t) ** 2)

            cdf, mean, atoms, sd = nd.cdf, mu, None, sigma
            lo, hi = mu - 40 * sigma, mu + 40 * sigma
        elif kind == "student_t":
            df = float(d["df"])
            if df <= 0:
                raise SchemaError("student_t needs df > 0")
            cdf, cf, mean, atoms, lo, hi = _student_t(df)
            sd = math.sqrt(df / (df - 2.0)) if df > 2 else 1.0
        elif kind == "point":
            a = float(d.get("at", 0.0))

            def cdf(x, a=a):
                return np.where(np.asarray(x, dtype=float) >= a, 1.0, 0.0)

            def cf(t, a=a):
                return np.exp(1j * a * np.asarray(t, dtype=float))

            mean, atoms, lo, hi, sd = a, np.array([a]), a - 1.0, a + 1.0, 1.0
        else:
            raise SchemaError(f"unknown distribution kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(f"bad parameters for {kind!r}: {exc}") from None
    params = dict(d)
    if std:
        if kind not in ("binomial", "poisson", "uniform_sum", "normal"):
            raise SchemaError(f"'standardized' is not supported for {kind!r}")
        return _affine(kind, mean, sd, cdf, cf, mean, atoms, lo, hi, params)
    return Distribution(kind, cdf, cf, mean, atoms, lo, hi, params)


@dataclass(frozen=True, eq=False)
class DistributionPair:
    F: Distribution
    G: Distribution
    label: str = ""

    def f_char(self, t):
        return self.F.cf(t)

    def g_char(self, t):
        return self.G.cf(t)

    def span(self):
        return min(self.F.lo, self.G.lo), max(self.F.hi, self.G.hi)


def pair_from_dict(d):
    if not isinstance(d, dict) or "F" not in d or "G" not in d:
        raise SchemaError("a pair needs 'F' and 'G'")
    return DistributionPair(distribution_from_dict(d["F"]), distribution_from_dict(d["G"]),
                            str(d.get("label", "")))


def load_corpus():
    """The bundled 20-pair corpus as a list of :class:`DistributionPair`."""
    text = resources.files("quantaub").joinpath("data/be_corpus.json").read_text()
    return [pair_from_dict(p) for p in json.loads(text)["pairs"]]


def _all_atoms(pair):
    parts = [a for a in (pair.F.atoms, pair.G.atoms) if a is not None]
    return np.unique(np.concatenate(parts)) if parts else np.empty(0)


def default_grid(pair, n=20001):
    lo, hi = pair.span()
    return np.linspace(lo, hi, n)


def sup_diff(pair, grid=None):
    """``sup_x |F(x) - G(x)|`` over the grid and both one-sided limits at every atom."""
    grid = default_grid(pair) if grid is None else np.asarray(grid, dtype=float)
    best = float(np.max(np.abs(pair.F(grid) - pair.G(grid))))
    atoms = _all_atoms(pair)
    if atoms.size:
        best = max(best,
                   float(np.max(np.abs(pair.F(atoms) - pair.G(atoms)))),
                   float(np.max(np.abs(pair.F.left(atoms) - pair.G.left(atoms)))))
    return best


def modulus_term(pair, T, grid=None):
    """``sup_{x, 0 <= y <= 1/T} (G(x+y) - G(x))``.

    For non-decreasing ``G`` the inner sup is at ``y = 1/T``; at an atom
    ``a`` the limit ``x -> a-`` contributes ``G((a+h)-) - G(a-)``.  The best
    grid point is polished by a bounded scalar search.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    G = pair.G
    h = 1.0 / T
    grid = np.linspace(G.lo - h, G.hi, 20001) if grid is None else np.asarray(grid, dtype=float)
    vals = G(grid + h) - G(grid)
    k = int(np.argmax(vals))
    best = float(vals[k])
    if G.is_continuous:
        a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
        if b > a:
            res = optimize.minimize_scalar(lambda x: -float(G(x + h) - G(x)), bounds=(a, b), method="bounded",
                                           options={"xatol": 1e-12})
            best = max(best, -float(res.fun))
    else:
        at = G.atoms
        cand = np.concatenate([at, at - h])
        best = max(best, float(np.max(G(cand + h) - G(cand))),
                   float(np.max(G.left(at + h) - G.left(at))))
    return best


def _check_origin(pair):
    eps = 1e-9
    d0 = abs(complex(pair.f_char(np.array([0.0]))[0]) - complex(pair.g_char(np.array([0.0]))[0]))
    de = abs(complex(pair.f_char(np.array([eps]))[0]) - complex(pair.g_char(np.array([eps]))[0]))
    if d0 > 1e-12 or de > 1e-6:
        raise SingularAtZero(f"|f - g| does not vanish at t = 0 ({d0:.3g}, {de:.3g} at t = {eps:g}); "
                             "the integral term diverges")


def integral_term(pair, T, epsabs=1e-11, epsrel=1e-10):
    """``int_{-T}^{T} |f(t) - g(t)| / |t| dt`` (even integrand, so twice the half-line).

    The removable value at ``t = 0`` is ``|mean_F - mean_G|``.

    Raises
    ------
    SingularAtZero
        If ``f - g`` does not vanish at the origin.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    _check_origin(pair)
    mF, mG = pair.F.mean, pair.G.mean
    at0 = abs(mF - mG) if (mF is not None and mG is not None) else None

    def integrand(t):
        if t == 0.0:
            if at0 is not None:
                return at0
            t = 1e-12
        v = pair.f_char(np.array([t]))[0] - pair.g_char(np.array([t]))[0]
        return abs(v) / t

    # split at the oscillation scale so quad sees each lobe
    n_pieces = min(MAX_PIECES, max(1, int(math.ceil(T / 0.5))))
    edges = np.linspace(0.0, T, n_pieces + 1)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, _ = integrate.quad(integrand, a, b, epsabs=epsabs / n_pieces, epsrel=epsrel, limit=200)
        total += val
    return 2.0 * total


def be_rhs(pair, T):
    """Right-hand side ``10 * modulus + integral / 5``."""
    return 10.0 * modulus_term(pair, T) + 0.2 * integral_term(pair, T)


@functools.lru_cache(maxsize=1)
def kernel_constants():
    """``(int y phi, int |phi|, max |phi_hat|)`` measured on the explicit kernel."""
    from .testfn import berry_esseen_phi

    tf = berry_esseen_phi()
    m = tf.meta
    return float(m["first_moment"]), float(m["abs_integral"]), float(m["max_abs_hat"])


def kernel_rhs(pair, T):
    """Right-hand side rebuilt from the smoothing argument with the explicit kernel.

    ``(int y phi + int |phi|) * modulus + max|phi_hat| / (2 pi) * integral``,
    with the kernel constants measured numerically.
    """
    m1, m0, mh = kernel_constants()
    return (m1 + m0) * modulus_term(pair, T) + mh / (2.0 * math.pi) * integral_term(pair, T)


def verify_be(pair, T_list=(1.0, 5.0, 10.0), grid=None, kernel=True, strict=True):
    """Check the inequality (and the kernel-route variant) for every ``T``.

    Returns a list of dicts with the left side, both right sides and the
    margins.

    Raises
    ------
    InequalityViolated
        With ``strict=True``, if ``sup |F - G|`` exceeds a right-hand side by
        more than 1e-6.
    """
    lhs = sup_diff(pair, grid)
    report = []
    for T in T_list:
        mod = modulus_term(pair, T)
        integ = integral_term(pair, T)
        rhs = 10.0 * mod + 0.2 * integ
        row = {"label": pair.label, "T": float(T), "sup_diff": lhs, "modulus": mod, "integral": integ,
               "rhs": rhs, "margin": rhs - lhs}
        if kernel:
            m1, m0, mh = kernel_constants()
            krhs = (m1 + m0) * mod + mh / (2.0 * math.pi) * integ
            row.update(kernel_rhs=krhs, kernel_margin=krhs - lhs)
        row["pass"] = bool(row["margin"] >= -VIOLATION_TOL and (not kernel or row["kernel_margin"] >= -VIOLATION_TOL))
        report.append(row)
        if strict and not row["pass"]:
            raise InequalityViolated(f"{pair.label or 'pair'}: sup|F-G| = {lhs:.6g} exceeds the bound at T = {T:g} "
                                     f"(rhs {rhs:.6g})")
    return report
