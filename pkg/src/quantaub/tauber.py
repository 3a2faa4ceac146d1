"""One-sided Tauberian conditions and the convolution sandwich.

Convolutions ``lam * int S(x + y) phi(lam y) dy`` are computed after the
substitution ``u = lam y`` as ``int S(x + u/lam) phi(u) du`` with composite
Gauss-Legendre panels.  The nodes and the values of ``phi`` on the regular
panels are cached per test function; panels containing a break point of
``S`` are split there.  The quadrature budget ``qtol`` adds the panel-wise
difference between 20- and 10-point rules to a bound for the omitted tails.
"""

import math
import weakref
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .errors import (MismatchBeyondTolerance, SandwichViolated, SchemaError, SignPatternViolation,
                     TailUnbounded)
from .rules import compile_rule

__all__ = [
    "TauberianData",
    "HigherOrderData",
    "SandwichResult",
    "check_condition_T",
    "check_condition_T_m",
    "regularity_check_f",
    "phi_moment",
    "sandwich_bounds",
    "finite_difference_m",
    "sandwich_bounds_m",
    "fourier_pairing",
    "convolve",
]

_GL_HI = np.polynomial.legendre.leggauss(20)
_GL_LO = np.polynomial.legendre.leggauss(10)
PANEL_WIDTH = 2.0
TAIL_TOL = 1e-13


def _callable(obj):
    if obj is None:
        return None
    if callable(obj):
        return obj
    return compile_rule(obj)


def _causal(func):
    def g(x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return np.where(x < 0, 0.0, func(np.maximum(x, 0.0)))
    return g


@dataclass(frozen=True, eq=False)
class TauberianData:
    """``(S, X, F, f, alpha)``.

    ``F`` and ``f`` are set to zero on the negative half-axis; ``S`` is used
    as given (its vanishing there is one of the checked properties).
    ``breakpoints`` lists points where ``S`` is not smooth; ``0`` is always
    added.  Rules (dicts or expression strings) are accepted for every
    function.
    """

    S: object
    X: float
    F: object
    f: object
    alpha: float = 0.0
    breakpoints: tuple = ()

    def __post_init__(self):
        if not 0 <= self.alpha < 1:
            raise SchemaError("alpha must lie in [0, 1)")
        S = _callable(self.S)
        bps = set(self.breakpoints) | set(getattr(S, "breakpoints", ())) | {0.0}
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "F", _causal(_callable(self.F)))
        object.__setattr__(self, "f", _causal(_callable(self.f)))
        object.__setattr__(self, "breakpoints", tuple(sorted(bps)))


@dataclass(frozen=True, eq=False)
class HigherOrderData(TauberianData):
    """Order-``m`` condition: ``y**m Delta^m_y(S + F_m; x) >= 0`` for ``x >= X``.

    ``F`` and ``f`` play the roles of ``F_m`` and ``f_m``.
    """

    m: int = 1

    def __post_init__(self):
        super().__post_init__()
        if int(self.m) < 1:
            raise SchemaError("m must be >= 1")


def _entry(ok, worst):
    return {"pass": bool(ok), "worst": float(worst)}


def check_condition_T(data, x_grid, y_grid):
    """Check the four defining properties of the condition on finite grids.

    Returns a dict with entries ``vanish`` (``S = 0`` on negatives),
    ``monotone`` (``S + F`` non-decreasing from ``X``), ``increment``
    (``|F(x+y) - F(x)| <= f(x)|y|exp(|y|**alpha)``) and ``anchor``
    (``S + F`` at ``X`` dominates its values to the left).  ``worst`` is the
    smallest slack; negative means violated.
    """
    x = np.unique(np.asarray(x_grid, dtype=float))
    y = np.asarray(y_grid, dtype=float)
    S, F, f, X = data.S, data.F, data.f, data.X
    report = {}

    neg = x[x < 0]
    worst = -float(np.max(np.abs(S(neg)))) if neg.size else 0.0
    report["vanish"] = _entry(worst >= 0, worst)

    xs = np.concatenate([[X], x[x > X]])
    tau = S(xs) + F(xs)
    scale = 1e-10 * np.maximum(1.0, np.maximum(np.abs(tau[:-1]), np.abs(tau[1:])))
    slack = np.diff(tau) + scale
    worst = float(np.min(slack)) if slack.size else 0.0
    report["monotone"] = _entry(worst >= 0, worst)

    xx, yy = np.meshgrid(xs, y, indexing="ij")
    with np.errstate(over="ignore"):
        rhs = f(xx) * np.abs(yy) * np.exp(np.abs(yy) ** data.alpha)
    lhs = np.abs(F(xx + yy) - F(xx))
    slack = rhs - lhs + 1e-12 * np.maximum(1.0, lhs)
    worst = float(np.min(slack))
    report["increment"] = _entry(worst >= 0 and np.all(F(x) >= 0) and np.all(f(x) >= 0), worst)

    left = x[x <= X]
    tX = float(S(np.array([X]))[0] + F(np.array([X]))[0])
    worst = tX - float(np.max(S(left) + F(left))) + 1e-10 * max(1.0, abs(tX)) if left.size else 0.0
    report["anchor"] = _entry(worst >= 0, worst)
    report["pass"] = all(v["pass"] for v in report.values())
    return report


def finite_difference_m(tau, m, x, y):
    """``sum_j (-1)**(m-j) C(m, j) tau(x + j y)``."""
    m = int(m)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    out = 0.0
    for j in range(m + 1):
        out = out + (-1) ** (m - j) * comb(m, j, exact=True) * tau(x + j * y)
    return out


def check_condition_T_m(data, x_grid, y_grid):
    """Order-``m`` analogue of :func:`check_condition_T` (entries ``sign``, ``increment``, ``shifted``)."""
    m = data.m
    x = np.unique(np.asarray(x_grid, dtype=float))
    x = x[x >= data.X]
    y = np.asarray(y_grid, dtype=float)
    xx, yy = np.meshgrid(x, y, indexing="ij")

    def tau(u):
        return data.S(u) + data.F(u)

    d = yy**m * finite_difference_m(tau, m, xx, yy)
    scale = 1e-10 * np.maximum(1.0, np.abs(yy) ** m * np.abs(tau(xx)))
    report = {"sign": _entry(np.all(d >= -scale), float(np.min(d + scale)))}
    with np.errstate(over="ignore"):
        rhs = np.abs(yy) ** m * data.f(xx) * np.exp(np.abs(yy) ** data.alpha)
    lhs = np.abs(finite_difference_m(data.F, m, xx, yy))
    slack = rhs - lhs + 1e-12 * np.maximum(1.0, lhs)
    report["increment"] = _entry(np.all(slack >= 0), float(np.min(slack)))
    if m % 2 == 0:
        lhs = np.abs(finite_difference_m(data.F, m, xx - yy, yy))
        slack = rhs - lhs + 1e-12 * np.maximum(1.0, lhs)
        report["shifted"] = _entry(np.all(slack >= 0), float(np.min(slack)))
    report["pass"] = all(v["pass"] for v in report.values())
    return report


def regularity_check_f(f, alpha, C, X, x_grid, y_grid):
    """True iff ``f(x+y) <= C f(x) exp(|y|**alpha)`` for grid ``x >= X``, ``y >= -x``."""
    f = _causal(_callable(f))
    x = np.asarray(x_grid, dtype=float)
    x = x[x >= X]
    y = np.asarray(y_grid, dtype=float)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    ok = yy >= -xx
    with np.errstate(over="ignore", invalid="ignore"):
        lhs = f(xx + yy)
        rhs = C * f(xx) * np.exp(np.abs(yy) ** alpha)
    good = (lhs <= rhs * (1 + 1e-12)) | ~ok
    return bool(np.all(good))


# -- quadrature --------------------------------------------------------------

@dataclass
class _Panels:
    edges: np.ndarray
    hi_nodes: np.ndarray
    hi_w: np.ndarray
    lo_nodes: np.ndarray
    lo_w: np.ndarray
    phi_hi: np.ndarray
    phi_lo: np.ndarray
    U: float
    tail_mask: np.ndarray = field(repr=False)


_PANEL_CACHE = weakref.WeakKeyDictionary()


def _gl(a, b, rule):
    x, w = rule
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid[:, None] + half[:, None] * x[None, :], half[:, None] * w[None, :]


def _window(phi, tail_tol=TAIL_TOL):
    """Half-width ``U`` with ``int_{|u| > U} |phi| <= tail_tol`` (from the samples)."""
    y, v = phi.x_grid, np.abs(phi.phi_vals) * phi.dy
    r = np.abs(y)
    order = np.argsort(-r)
    tail = np.cumsum(v[order])
    k = np.searchsorted(tail, tail_tol, side="right")
    U = r[order][k] if k < r.size else 0.0
    return float(max(PANEL_WIDTH, math.ceil(U / PANEL_WIDTH) * PANEL_WIDTH))


def _panels(phi):
    cached = _PANEL_CACHE.get(phi)
    if cached is not None:
        return cached
    U = _window(phi)
    edges = np.arange(-U, U + 0.5 * PANEL_WIDTH, PANEL_WIDTH)
    hn, hw = _gl(edges[:-1], edges[1:], _GL_HI)
    ln, lw = _gl(edges[:-1], edges[1:], _GL_LO)
    p = _Panels(edges, hn, hw, ln, lw, phi(hn), phi(ln), U, np.abs(phi.x_grid) > U)
    _PANEL_CACHE[phi] = p
    return p


def convolve(S, phi, lam, x, breakpoints=(0.0,), j=1.0, sign=1.0):
    """``int S(x + j*sign*u/lam) phi(u) du`` with its quadrature budget.

    Returns ``(value, qtol)``.  ``sign = -1`` gives the reflected kernel
    ``phi(-lam y)``.

    Raises
    ------
    TailUnbounded
        If the tail of the integrand beyond the quadrature window is not
        small (``S`` grows too fast for the decay of ``phi``).
    """
    P = _panels(phi)
    c = j * sign / lam

    def integrand(u):
        with np.errstate(over="ignore", invalid="ignore"):
            return S(x + c * u)

    # panels containing a break point are re-split there
    cuts = np.array([(b - x) / c for b in breakpoints], dtype=float)
    cuts = cuts[np.abs(cuts) < P.U]
    split = np.unique(np.searchsorted(P.edges, cuts, side="right") - 1)
    split = split[(split >= 0) & (split < P.edges.size - 1)]
    regular = np.ones(P.edges.size - 1, dtype=bool)
    regular[split] = False

    s_hi = integrand(P.hi_nodes[regular])
    s_lo = integrand(P.lo_nodes[regular])
    hi = np.sum(s_hi * P.phi_hi[regular] * P.hi_w[regular], axis=1)
    lo = np.sum(s_lo * P.phi_lo[regular] * P.lo_w[regular], axis=1)
    total_hi, err = float(np.sum(hi)), float(np.sum(np.abs(hi - lo)))

    for k in split:
        a, b = P.edges[k], P.edges[k + 1]
        pts = np.unique(np.concatenate([[a, b], cuts[(cuts > a) & (cuts < b)]]))
        hn, hw = _gl(pts[:-1], pts[1:], _GL_HI)
        ln, lw = _gl(pts[:-1], pts[1:], _GL_LO)
        h = float(np.sum(integrand(hn) * phi(hn) * hw))
        l_ = float(np.sum(integrand(ln) * phi(ln) * lw))
        total_hi += h
        err += abs(h - l_)

    # tail beyond the window, from the stored samples
    yt = phi.x_grid[P.tail_mask]
    with np.errstate(over="ignore", invalid="ignore"):
        tail = float(np.sum(np.abs(integrand(yt) * phi.phi_vals[P.tail_mask])) * phi.dy)
    if not np.isfinite(total_hi) or not np.isfinite(tail) or tail > 1e-8 * max(1.0, abs(total_hi)):
        raise TailUnbounded(f"tail contribution {tail:.3g} beyond |u| = {P.U:g} is not negligible")
    return total_hi, err + tail


_MOMENT_CACHE = weakref.WeakKeyDictionary()


def phi_moment(phi, power=1, alpha=0.0):
    """``int |y|**power exp(|y|**alpha) |phi(y)| dy`` on the sample grid (log domain)."""
    memo = _MOMENT_CACHE.setdefault(phi, {})
    key = (power, float(alpha))
    if key not in memo:
        memo[key] = _phi_moment(phi, power, alpha)
    return memo[key]


def _phi_moment(phi, power, alpha):
    y = phi.x_grid
    if phi.log_abs_func is not None:
        la = phi.log_abs_func(y)
    else:
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(phi.phi_vals))
    with np.errstate(divide="ignore", over="ignore"):
        lw = power * np.log(np.abs(y)) + np.abs(y) ** alpha + la
        val = float(np.sum(np.exp(lw)) * phi.dy)
    return val


@dataclass(frozen=True)
class SandwichResult:
    lower: float
    upper: float
    C_phi: float
    qtol: float
    S_x: float

    @property
    def holds(self):
        return self.lower - self.qtol <= self.S_x <= self.upper + self.qtol

    @property
    def margin(self):
        return min(self.S_x - (self.lower - self.qtol), self.upper + self.qtol - self.S_x)


def _check_kernel(phi, power, tol=1e-6):
    if abs(phi.integral() - 1.0) > tol:
        raise SignPatternViolation(f"kernel integral {phi.integral():.9g} differs from 1")
    y, v = phi.x_grid, phi.phi_vals
    signed = np.sign(y) ** power * v if power % 2 else v
    if np.min(signed) < -1e-9 * np.max(np.abs(v)):
        kind = "y**m phi >= 0" if power % 2 else "phi >= 0"
        raise SignPatternViolation(f"kernel violates {kind}")


def sandwich_bounds(data, phi, lam, x, strict=False):
    """Lower and upper convolution bounds for ``S(x)``.

    ``lower = lam int S(x+y) phi(-lam y) dy - C f(x)/lam`` and
    ``upper = lam int S(x+y) phi(lam y) dy + C f(x)/lam`` with
    ``C = int |y| exp(|y|**alpha) |phi(y)| dy``.

    Raises
    ------
    SignPatternViolation
        If ``phi`` does not have unit mass and ``y phi(y) >= 0``.
    SandwichViolated
        With ``strict=True``, if ``S(x)`` falls outside the bounds.
    """
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    _check_kernel(phi, 1)
    C = phi_moment(phi, 1, data.alpha)
    if not np.isfinite(C):
        raise TailUnbounded("the weighted first moment of phi is not finite on the grid")
    fx = float(data.f(np.array([x]))[0])
    up, e1 = convolve(data.S, phi, lam, x, data.breakpoints, sign=1.0)
    lo, e2 = convolve(data.S, phi, lam, x, data.breakpoints, sign=-1.0)
    pen = C * fx / lam
    res = SandwichResult(lo - pen, up + pen, C, e1 + e2, float(data.S(np.array([x]))[0]))
    if strict and not res.holds:
        raise SandwichViolated(f"S({x:g}) = {res.S_x:.6g} outside [{res.lower:.6g}, {res.upper:.6g}]")
    return res


@dataclass(frozen=True)
class HigherOrderResult:
    bound: float
    C_m: float
    qtol: float
    S_x: float
    integrals: dict

    @property
    def holds(self):
        return abs(self.S_x) <= self.bound + self.qtol


def sandwich_bounds_m(data, phi, lam, x, strict=True):
    """``2**m lam max_{0<|j|<=m} |int S(x+jy) phi(lam y) dy| + C_m f_m(x)/lam**m``.

    ``C_m = int |y|**m exp(|y|**alpha) |phi|``.  For even ``m`` the kernel
    must be non-negative, for odd ``m`` it must satisfy ``y phi(y) >= 0``.

    Raises
    ------
    SignPatternViolation
        If the kernel has the wrong sign pattern for the parity of ``m``.
    SandwichViolated
        With ``strict=True`` (the default), if ``|S(x)|`` exceeds the bound.
    """
    m = int(data.m)
    if lam < 1:
        raise ValueError("lambda must be >= 1")
    _check_kernel(phi, m)
    Cm = phi_moment(phi, m, data.alpha)
    ints, err = {}, 0.0
    for j in [k for k in range(-m, m + 1) if k != 0]:
        # lam int S(x + j y) phi(lam y) dy = int S(x + j u / lam) phi(u) du
        v, e = convolve(data.S, phi, lam, x, data.breakpoints, j=float(j))
        ints[j] = v
        err += e
    big = max(abs(v) for v in ints.values())
    fx = float(data.f(np.array([x]))[0])
    res = HigherOrderResult(2.0**m * big + Cm * fx / lam**m, Cm, 2.0**m * err,
                            float(data.S(np.array([x]))[0]), ints)
    if strict and not res.holds:
        raise SandwichViolated(f"|S({x:g})| = {abs(res.S_x):.6g} exceeds {res.bound:.6g}")
    return res


def _fill_removable(g, t):
    vals = np.asarray(g(t), dtype=complex)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        d = 1e-7 * np.maximum(1.0, np.abs(t[bad]))
        vals[bad] = 0.5 * (np.asarray(g(t[bad] + d), dtype=complex) + np.asarray(g(t[bad] - d), dtype=complex))
    return vals


def fourier_pairing(S, g, phi, lam, x, breakpoints=(0.0,), tol=1e-6, strict=True):
    """Both sides of the convolution / Fourier identity.

    ``space = lam int S(x+y) phi(lam y) dy`` and
    ``freq = (2 pi)**-1 int g(t) exp(i x t) hat phi(-t/lam) dt`` where ``g`` is
    the boundary function of the Laplace transform of ``S`` on ``Re s = 0``.
    The frequency integral uses the stored spectrum of ``phi`` with the
    trapezoid rule; removable singularities of ``g`` are filled by the
    symmetric limit.

    Returns ``(space, freq, qtol)``.

    Raises
    ------
    MismatchBeyondTolerance
        With ``strict=True``, if ``|space - freq| > tol (1 + |space|)``.
    """
    S = _callable(S)
    bps = tuple(sorted(set(breakpoints) | set(getattr(S, "breakpoints", ())) | {0.0}))
    space, qtol = convolve(S, phi, lam, x, bps)
    s = phi.t_grid
    sel = np.abs(s) <= phi.bandwidth * 1.25
    s, F = s[sel], phi.phihat_vals[sel]
    # t = -lam s
    integrand = _fill_removable(g, -lam * s) * np.exp(-1j * lam * x * s) * F
    freq = complex(lam / (2.0 * np.pi) * np.sum(integrand) * phi.dt)
    gap = abs(space - freq)
    if strict and gap > tol * (1.0 + abs(space)):
        raise MismatchBeyondTolerance(f"space {space:.12g} vs freq {freq:.12g} (gap {gap:.3g})")
    return space, freq.real, qtol
