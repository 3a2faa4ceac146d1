"""Band-limited test functions with a sign pattern and controlled derivatives.

Everything is assembled from closed forms in the space variable ``y``:
every factor is a product of ``sin(a y)/(a y)`` terms, the Fourier transform
of a normalised box ``chi_[-a, a] / (2a)``.  Frequency samples are obtained
by one FFT of the space samples; for band-limited functions the trapezoid
sum behind the FFT is exact up to truncation of the space window.

Fourier convention: ``hat f(t) = int exp(-i t y) f(y) dy``.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import zeta

from .errors import BranchDegenerate, DecayNotAchieved, GridTooCoarse

__all__ = [
    "EPSILON",
    "BoxChain",
    "Mollifier",
    "TestFunction",
    "build_box_chain",
    "build_mollifier",
    "build_phi_n",
    "berry_esseen_phi",
    "verify_testfn",
    "spectrum",
    "inverse_spectrum",
    "spectral_derivative",
]

EPSILON = 1.0 / 24.0
DERIV_A = 124.0
GRID_DY = 0.5


def _log_abs_sinc(x):
    """``log|sin x / x|`` (``-inf`` at the zeros)."""
    s = np.sinc(np.asarray(x, dtype=float) / np.pi)
    with np.errstate(divide="ignore"):
        return np.log(np.abs(s))


def _sinc_product(widths, v):
    v = np.asarray(v, dtype=float)
    out = np.ones_like(v)
    for a in widths:
        out *= np.sinc(a * v / np.pi)
    return out


def _log_abs_sinc_product(widths, v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    for a in widths:
        out += _log_abs_sinc(a * v)
    return out


def centred_grid(n, step):
    return (np.arange(n) - n // 2) * step


def spectrum(vals, dy):
    """Samples of ``int exp(-i t y) f(y) dy`` from samples on a centred grid.

    Returns ``(t, F)`` with ``t`` the centred frequency grid of step
    ``2 pi / (N dy)``.
    """
    n = vals.size
    F = dy * np.fft.fftshift(np.fft.fft(np.fft.ifftshift(vals)))
    return centred_grid(n, 2.0 * np.pi / (n * dy)), F


def inverse_spectrum(F, dt):
    """Inverse of :func:`spectrum`: ``(2 pi)**-1 int exp(i t y) F(t) dt``."""
    n = F.size
    f = (n * dt / (2.0 * np.pi)) * np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(F)))
    return centred_grid(n, 2.0 * np.pi / (n * dt)), f


def spectral_derivative(y, vals, dy, j, scale=1.0):
    """``scale**-j`` times the ``j``-th derivative of the spectrum of ``vals``.

    The derivative is the spectrum of ``(-i y)**j f(y)``; dividing ``y`` by
    ``scale`` first keeps high orders in range.
    """
    w = (-1j * y / scale) ** j
    return spectrum(w * vals, dy)[1]


# -- box chains ----------------------------------------------------------------

def box_chain_widths(n, epsilon=EPSILON):
    """Half-widths of the boxes: two of ``eps/4`` then ``n-1`` of ``eps/(2(n-1))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    widths = [epsilon / 4.0, epsilon / 4.0]
    if n >= 2:
        widths += [epsilon / (2.0 * (n - 1))] * (n - 1)
    return tuple(widths)


@dataclass(frozen=True)
class BoxChain:
    """Normalised convolution of boxes ``chi_[-a_j, a_j] / (2 a_j)``."""

    n: int
    epsilon: float
    widths: tuple

    @property
    def support(self):
        return float(sum(self.widths))

    def hat(self, v):
        """Fourier transform ``prod sin(a_j v) / (a_j v)``."""
        return _sinc_product(self.widths, v)

    def log_abs_hat(self, v):
        return _log_abs_sinc_product(self.widths, v)

    def derivative(self, j, step=None, n_grid=2**20):
        """``(t, u^{(j)}(t))`` by spectral differentiation of :meth:`hat`."""
        step = min(self.widths) / 64.0 if step is None else step
        dv = 2.0 * np.pi / (n_grid * step)
        v = centred_grid(n_grid, dv)
        t, vals = inverse_spectrum((1j * v) ** j * self.hat(v), dv)
        return t, vals.real

    def derivative_bound(self, j):
        """``(4/eps)(2/eps)**j (n-1)**(j-1)`` for ``1 <= j <= n-1``."""
        e = self.epsilon
        return (4.0 / e) * (2.0 / e) ** j * (self.n - 1) ** (j - 1)


def build_box_chain(n, epsilon=EPSILON, step=None):
    """Box chain ``u_n`` supported in ``[-eps, eps]`` with unit mass.

    ``step`` is the sampling step of the grid the chain will be resolved on.

    Raises
    ------
    GridTooCoarse
        If ``step`` gives fewer than 16 samples per smallest half-width.
    """
    chain = BoxChain(int(n), float(epsilon), box_chain_widths(int(n), epsilon))
    if step is not None and step > min(chain.widths) / 16.0:
        raise GridTooCoarse(f"step {step:.3g} too coarse for box width {min(chain.widths):.3g}")
    return chain


# -- mollifier ---------------------------------------------------------------

@dataclass(frozen=True)
class Mollifier:
    """Non-negative bump supported in ``(-1/4, 1/4)`` with stretched-exponential spectrum.

    ``psi = 3 (psi0 * chi_[-1/2,1/2])(3 t)`` where ``psi0`` is an infinite box
    chain with half-widths ``a_j = a0 j**(-1/gamma)`` summing to ``1/8``.
    """

    gamma: float
    widths: tuple
    decay_exponent: float
    decay_c: float
    decay_C: float
    t_grid: np.ndarray = field(repr=False, default=None)
    psi_vals: np.ndarray = field(repr=False, default=None)

    def hat(self, v):
        v = np.asarray(v, dtype=float)
        return _sinc_product(self.widths, v / 3.0) * np.sinc(v / (6.0 * np.pi))

    def log_abs_hat(self, v):
        v = np.asarray(v, dtype=float)
        return _log_abs_sinc_product(self.widths, v / 3.0) + _log_abs_sinc(v / 6.0)

    @property
    def support(self):
        return (sum(self.widths) + 0.5) / 3.0


def _mollifier_widths(gamma, min_width):
    p = 1.0 / gamma
    a0 = 1.0 / (8.0 * zeta(p))
    J = max(1, int(math.ceil((a0 / min_width) ** gamma)))
    return tuple(a0 * np.arange(1, J + 1, dtype=float) ** (-p))


def _tail_envelope(log_vals):
    # log of sup_{y' >= y} |f(y')|
    return np.maximum.accumulate(log_vals[::-1])[::-1]


def build_mollifier(gamma, epsilon=EPSILON, min_width=1e-6, fit_range=(1e2, 1e4),
                    target=None, n_space=2**18, space=True):
    """Mollifier ``psi`` with ``|hat psi(y)| <= C exp(-c |y|**gamma)``.

    The decay exponent is the log-log slope of ``-log`` of the tail envelope
    of ``|hat psi|`` over ``fit_range``; ``c`` and ``C`` are fitted with the
    exponent fixed at ``gamma``.  The box chain is cut once the half-widths
    drop below ``min_width``.

    Raises
    ------
    DecayNotAchieved
        If the slope over the last decade of ``fit_range`` is below
        ``target - 0.05`` (``target`` defaults to ``gamma``).
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if epsilon > 1.0 / 24.0 + 1e-15:
        raise ValueError("the plateau psi >= 1 covers |t| <= 1/12 only, so epsilon <= 1/24")
    widths = _mollifier_widths(gamma, min_width)
    proto = Mollifier(gamma, widths, float("nan"), float("nan"), float("nan"))

    lo, hi = fit_range
    y = np.arange(lo, 2.0 * hi, 0.25)
    env = _tail_envelope(proto.log_abs_hat(y))
    keep = y <= hi
    y, env = y[keep], env[keep]
    neg = -env
    slope = np.polyfit(np.log(y), np.log(neg), 1)[0]
    last = y >= hi / 10.0
    slope_last = np.polyfit(np.log(y[last]), np.log(neg[last]), 1)[0]
    target = gamma if target is None else target
    if slope_last < target - 0.05:
        raise DecayNotAchieved(f"fitted exponent {slope_last:.3f} < {target - 0.05:.3f}")
    yg = y ** gamma
    c = float(np.polyfit(yg, neg, 1)[0])
    logC = float(np.max(env + c * yg))

    if not space:
        return Mollifier(gamma, widths, float(slope), c, math.exp(logC))
    # space samples by inverse transform
    dv = 1.0
    v = centred_grid(n_space, dv)
    t, psi = inverse_spectrum(proto.hat(v).astype(complex), dv)
    return Mollifier(gamma, widths, float(slope), c, math.exp(logC), t, psi.real)


# -- test functions ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TestFunction:
    """Paired space and frequency samples of one test function.

    ``func`` evaluates the function in closed form and ``log_abs_func``, when
    present, gives ``log|phi|`` without underflow.
    """

    __test__ = False  # not a pytest class

    n: int
    epsilon: float
    gamma: float
    x_grid: np.ndarray = field(repr=False)
    phi_vals: np.ndarray = field(repr=False)
    t_grid: np.ndarray = field(repr=False)
    phihat_vals: np.ndarray = field(repr=False)
    bandwidth: float
    meta: dict = field(default_factory=dict)
    func: object = field(default=None, repr=False)
    log_abs_func: object = field(default=None, repr=False)

    @property
    def dy(self):
        return float(self.x_grid[1] - self.x_grid[0])

    @property
    def dt(self):
        return float(self.t_grid[1] - self.t_grid[0])

    def __call__(self, y):
        if self.func is not None:
            return self.func(np.asarray(y, dtype=float))
        return np.interp(y, self.x_grid, self.phi_vals)

    def integral(self):
        return float(np.sum(self.phi_vals) * self.dy)

    def moment(self, k=1, absolute=False, weight=None):
        """``int |y|**k |phi|`` (or signed ``int y**k phi``) by the trapezoid rule."""
        y = self.x_grid
        v = np.abs(self.phi_vals) if absolute else self.phi_vals
        w = np.abs(y) ** k if absolute else y ** k
        if weight is not None:
            w = w * weight(y)
        return float(np.sum(w * v) * self.dy)

    def hat_at(self, t, chunk=256):
        """Spectrum at arbitrary ``t`` by direct summation over the space samples."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        nz = np.nonzero(self.phi_vals)[0]
        y, f = self.x_grid[nz], self.phi_vals[nz]
        out = np.empty(t.size, dtype=complex)
        for s in range(0, t.size, chunk):
            tt = t[s:s + chunk, None]
            out[s:s + chunk] = self.dy * np.exp(-1j * tt * y[None, :]) @ f
        return out

    def derivative_ratios(self, upto=None, A=DERIV_A, t_max=1.0):
        """``max_{|t| <= t_max} |hat phi^{(j)}(t)| / (A n)**j`` for ``j = 0..upto``."""
        upto = self.n if upto is None else upto
        scale = A * self.n
        sel = np.abs(self.t_grid) <= t_max
        out = np.empty(upto + 1)
        for j in range(upto + 1):
            d = spectral_derivative(self.x_grid, self.phi_vals, self.dy, j, scale)
            out[j] = float(np.max(np.abs(d[sel])))
        return out

    def to_files(self, prefix):
        """Write ``<prefix>_space.csv``, ``<prefix>_freq.csv`` and ``<prefix>.json``."""
        prefix = Path(prefix)
        np.savetxt(f"{prefix}_space.csv", np.column_stack([self.x_grid, self.phi_vals]),
                   delimiter=",", header="y,phi", comments="", fmt="%.17g")
        np.savetxt(f"{prefix}_freq.csv",
                   np.column_stack([self.t_grid, self.phihat_vals.real, self.phihat_vals.imag]),
                   delimiter=",", header="t,re,im", comments="", fmt="%.17g")
        meta = {"n": self.n, "epsilon": self.epsilon, "gamma": self.gamma,
                "bandwidth": self.bandwidth, **_jsonable(self.meta)}
        Path(f"{prefix}.json").write_text(json.dumps(meta, indent=2, sort_keys=True))

    @classmethod
    def from_files(cls, prefix):
        prefix = Path(prefix)
        meta = json.loads(Path(f"{prefix}.json").read_text())
        sp = np.loadtxt(f"{prefix}_space.csv", delimiter=",", skiprows=1)
        fr = np.loadtxt(f"{prefix}_freq.csv", delimiter=",", skiprows=1)
        core = {k: meta.pop(k) for k in ("n", "epsilon", "gamma", "bandwidth")}
        return cls(core["n"], core["epsilon"], core["gamma"], sp[:, 0], sp[:, 1], fr[:, 0],
                   fr[:, 1] + 1j * fr[:, 2], core["bandwidth"], meta)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _sample(func, log_abs_func, n, epsilon, gamma, bandwidth, meta, n_grid, dy):
    y = centred_grid(n_grid, dy)
    vals = func(y)
    t, hat = spectrum(vals, dy)
    return TestFunction(n, epsilon, gamma, y, vals, t, hat, bandwidth, meta, func, log_abs_func)


def default_grid_size(n, epsilon=EPSILON, dy=GRID_DY, min_size=2**17):
    """Smallest power of two resolving the narrowest box of ``u_{n+2}`` with 16 samples."""
    a_min = min(box_chain_widths(n + 2, epsilon))
    need = 2.0 * np.pi * 16.0 / (a_min * dy)
    return max(min_size, 1 << int(math.ceil(math.log2(need))))


def build_phi_n(n, gamma=0.5, epsilon=EPSILON, parity="odd", n_grid=None, dy=GRID_DY,
                gamma_mollifier=None, mollifier_min_width=1e-4):
    """The ``n``-th member of the test-function sequence.

    The spectrum of the first candidate is ``psi * u_{n+2}``, so in space it
    is ``(2 pi)**-1 hat psi(-y) hat u(-y)``.  Its squared modulus is real,
    non-negative and band-limited to ``[-1/2, 1/2]``.  The first moment
    ``c`` of the square then selects how the factor ``y`` is introduced so
    that ``y phi(y) >= 0`` and ``int phi = 1``.

    With ``parity="even"`` the normalised square itself is returned
    (non-negative everywhere, as needed for even-order conditions).

    The mollifier decays with exponent ``(1 + gamma) / 2`` unless
    ``gamma_mollifier`` is given; the strict gap makes the decay bound
    ``|phi| <= C exp(-|y|**gamma)`` hold with a moderate constant.  Its box
    chain stops at half-width ``mollifier_min_width``, which only affects
    the spectrum beyond ``|y| ~ 1 / mollifier_min_width``.  The default grid
    comes from :func:`default_grid_size`.

    Raises
    ------
    BranchDegenerate
        If ``|c| < 1/2`` and the shifted moment ``d <= 1/2``.
    GridTooCoarse
        If the frequency step cannot resolve the narrowest box.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    gm = (1.0 + gamma) / 2.0 if gamma_mollifier is None else gamma_mollifier
    n_grid = default_grid_size(n, epsilon, dy) if n_grid is None else int(n_grid)
    dt = 2.0 * np.pi / (n_grid * dy)
    chain = build_box_chain(n + 2, epsilon, step=dt)
    moll = build_mollifier(gm, epsilon, min_width=mollifier_min_width, target=gamma, space=False)
    two_pi = 2.0 * np.pi

    def phi1(y):
        # kept complex until the modulus is taken
        return (moll.hat(-y) * chain.hat(-y)).astype(complex) / two_pi

    def phi2(y):
        p = phi1(np.asarray(y, dtype=float))
        return (p * np.conj(p)).real

    def log_phi2(y):
        return 2.0 * (moll.log_abs_hat(y) + chain.log_abs_hat(y) - math.log(two_pi))

    y = centred_grid(n_grid, dy)
    p2 = phi2(y)
    mass = float(np.sum(p2) * dy)
    c = float(np.sum(y * p2) * dy)
    shift = np.pi / epsilon
    d = c + shift * mass
    meta = {"widths": list(chain.widths), "c": c, "d": d, "mass_phi2": mass,
            "mollifier": {"gamma": gm, "terms": len(moll.widths), "exponent": moll.decay_exponent,
                          "c": moll.decay_c, "C": moll.decay_C},
            "parity": parity}

    if parity == "even":
        meta["branch"] = "even"

        def func(y):
            return phi2(y) / mass

        def log_abs(y):
            return log_phi2(y) - math.log(mass)

        return _sample(func, log_abs, n, epsilon, gamma, 0.5, meta, n_grid, dy)

    if c >= 0.5:
        branch, norm, sgn, s = "positive", c, 1.0, 0.0
    elif c <= -0.5:
        branch, norm, sgn, s = "negative", -c, -1.0, 0.0
    else:
        if d <= 0.5:
            raise BranchDegenerate(f"|c|={abs(c):.3g} < 1/2 and d={d:.3g} <= 1/2")
        branch, norm, sgn, s = "shifted", d, 1.0, shift
    meta["branch"] = branch

    def func(y):
        y = np.asarray(y, dtype=float)
        return y * phi2(sgn * (y - s)) / norm

    def log_abs(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(y)) + log_phi2(sgn * (y - s)) - math.log(norm)

    return _sample(func, log_abs, n, epsilon, gamma, 0.5, meta, n_grid, dy)


def berry_esseen_phi(n_grid=2**22, dx=0.5):
    """``x sinc(x/4 - b)**4 / 16`` with ``b = 3/(2 pi)`` (unnormalised sinc).

    Its spectrum is supported in ``[-1, 1]``; the window ``|x| <= n_grid dx / 2``
    leaves a tail of ``int |phi|`` below ``32 / X**2``.
    """
    b = 3.0 / (2.0 * np.pi)

    def func(x):
        x = np.asarray(x, dtype=float)
        return x * np.sinc((x / 4.0 - b) / np.pi) ** 4 / 16.0

    def log_abs(x):
        with np.errstate(divide="ignore"):
            return np.log(np.abs(x)) + 4.0 * _log_abs_sinc(np.asarray(x) / 4.0 - b) - math.log(16.0)

    X = n_grid * dx / 2.0
    tf = _sample(func, log_abs, 4, float("nan"), float("nan"), 1.0,
                 {"branch": "kernel", "b": b, "tail_bound": 32.0 / X**2}, n_grid, dx)
    tf.meta.update(integral=tf.integral(), first_moment=tf.moment(1), abs_integral=tf.moment(0, absolute=True),
                   max_abs_hat=float(np.max(np.abs(tf.phihat_vals))))
    return tf


# -- verification ------------------------------------------------------------

def _proof_constant(epsilon):
    # constant of the derivative bound that the construction guarantees
    return 8.0 * math.e * (math.pi + 2.0) / epsilon**2


def verify_testfn(tf, gamma=None, A=DERIV_A, C_max=None, integral_tol=1e-6, band_tol=1e-6):
    """Check the five defining properties of a test function.

    Returns a dict keyed by ``integral``, ``decay``, ``sign``, ``band`` and
    ``derivatives``, each with ``pass`` and a measured ``value``.  The decay
    constant is fitted on the inner half of the window and must still hold
    on the outer half.
    """
    gamma = tf.gamma if gamma is None else gamma
    y, v = tf.x_grid, tf.phi_vals
    peak = float(np.max(np.abs(v)))
    report = {}

    integ = tf.integral()
    report["integral"] = {"pass": abs(integ - 1.0) <= integral_tol, "value": integ,
                          "slack": integral_tol - abs(integ - 1.0)}

    if tf.log_abs_func is not None:
        la = tf.log_abs_func(y)
    else:
        with np.errstate(divide="ignore"):
            la = np.log(np.abs(v))
    if gamma is not None and np.isfinite(gamma):
        excess = la + np.abs(y) ** gamma
        inner = np.abs(y) <= 0.5 * np.abs(y).max()
        logC = float(np.max(excess[inner]))
        worst_outer = float(np.max(excess[~inner]))
        report["decay"] = {"pass": bool(np.isfinite(logC) and worst_outer <= logC), "value": math.exp(min(logC, 700.0)),
                           "log_C": logC, "slack": logC - worst_outer}
    else:
        report["decay"] = {"pass": None, "value": None}

    smin = float(np.min(y * v))
    report["sign"] = {"pass": smin >= -1e-9 * peak, "value": smin, "slack": smin + 1e-9 * peak}

    p = np.abs(tf.phihat_vals) ** 2
    outside = float(np.sum(p[np.abs(tf.t_grid) > tf.bandwidth]) / np.sum(p))
    report["band"] = {"pass": outside <= band_tol, "value": outside, "slack": band_tol - outside}

    ratios = tf.derivative_ratios(A=A, t_max=max(tf.bandwidth, 1.0))
    C = float(np.max(ratios))
    cap = _proof_constant(tf.epsilon if np.isfinite(tf.epsilon) else EPSILON) if C_max is None else C_max
    report["derivatives"] = {"pass": bool(np.isfinite(C) and C <= cap), "value": C, "ratios": ratios.tolist(),
                             "cap": cap}
    return report
