"""Delay-differential special functions for rough and dense densities.

Three functions are tabulated by marching their integral equations on a
dyadic grid, then served through block-clamped cubic interpolation:

  buchstab   u*f(u) = 1 + int_1^{u-1} f,   f = 1/u on [1, 2]
  ratio_fn   u*f(u) = 2 + 2*int_1^{u-1} f, f = 2/u on [1, 2]
  growth_fn  f(v) = v - int_0^{(v-1)/2} f(u) * ratio((v-u)/(u+1)) du/(u+1)

All three are smooth inside unit blocks but kink at integer arguments, so
every quadrature stencil and every interpolation stencil is clamped to one
block: nothing ever straddles a kink.  Grid abscissas 1 + k*2^-m are exact
binary floats, so block membership is never ambiguous.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import RangeError

EULER_GAMMA = float(np.euler_gamma)
EXP_NEG_GAMMA = math.exp(-EULER_GAMMA)
EXP_NEG_2GAMMA = math.exp(-2.0 * EULER_GAMMA)

OMEGA_STEP_BITS = 10
OMEGA_BLOCKS = 13
XI_BLOCKS = 16
LAMBDA_STEP_BITS = 7
LAMBDA_VMAX = 50

# integral of a cubic over one step from 4 consecutive nodes: the panel
# [x_p, x_{p+1}] uses (p-1..p+2) inside a block, a one-sided stencil at
# block edges so no stencil crosses a kink
_W_INT = (-1.0 / 24, 13.0 / 24, 13.0 / 24, -1.0 / 24)
_W_FWD = (9.0 / 24, 19.0 / 24, -5.0 / 24, 1.0 / 24)
_W_BWD = (1.0 / 24, -5.0 / 24, 19.0 / 24, 9.0 / 24)


def _cubic_interp(start, h, block, values, us):
    """Block-clamped 4-point Lagrange interpolation on an aligned grid."""
    t = (np.asarray(us, dtype=float) - start) / h
    n_last = len(values) - 1
    k = np.clip(np.floor(t).astype(np.int64), 0, n_last - 1)
    blk = k // block
    j0 = np.clip(k - 1, blk * block, np.minimum((blk + 1) * block, n_last) - 3)
    x = t - j0
    v = np.asarray(values)
    y0, y1, y2, y3 = v[j0], v[j0 + 1], v[j0 + 2], v[j0 + 3]
    l0 = -(x - 1) * (x - 2) * (x - 3) / 6.0
    l1 = x * (x - 2) * (x - 3) / 2.0
    l2 = -x * (x - 1) * (x - 3) / 2.0
    l3 = x * (x - 1) * (x - 2) / 6.0
    return y0 * l0 + y1 * l1 + y2 * l2 + y3 * l3


@dataclass
class PiecewiseFn:
    """Closed forms on low blocks, marched grid above, optional tail."""

    name: str
    support_lo: float
    exact_pieces: list  # (lo, hi, vectorized fn) on [lo, hi)
    exact_hi: float
    grid_start: float
    grid_step: float
    grid_block: int
    grid_values: np.ndarray
    tail_fn: object  # vectorized fn above grid_end, or None
    err_budget: float
    flagged_points: tuple = ()

    @property
    def grid_end(self):
        return self.grid_start + (len(self.grid_values) - 1) * self.grid_step

    def eval_many(self, us):
        us = np.asarray(us, dtype=float)
        scalar = us.ndim == 0
        us = np.atleast_1d(us)
        out = np.zeros(us.shape)
        for lo, hi, fn in self.exact_pieces:
            m = (us >= lo) & (us < hi)
            if m.any():
                out[m] = fn(us[m])
        m = (us >= self.exact_hi) & (us <= self.grid_end)
        if m.any():
            out[m] = _cubic_interp(
                self.grid_start, self.grid_step, self.grid_block, self.grid_values, us[m]
            )
        m = us > self.grid_end
        if m.any():
            if self.tail_fn is None:
                raise RangeError(
                    f"{self.name} is tabulated only up to {self.grid_end}"
                )
            out[m] = self.tail_fn(us[m])
        return out[0] if scalar else out

    def __call__(self, u):
        return float(self.eval_many(np.float64(u)))


@dataclass
class GridCum:
    """Cumulative integral from the grid start, on the same aligned grid."""

    start: float
    step: float
    block: int
    values: np.ndarray

    @property
    def end(self):
        return self.start + (len(self.values) - 1) * self.step

    def eval_many(self, us):
        us = np.atleast_1d(np.asarray(us, dtype=float))
        out = np.zeros(us.shape)
        m = us > self.start
        if m.any():
            out[m] = _cubic_interp(
                self.start, self.step, self.block, self.values, np.minimum(us[m], self.end)
            )
        return out


def _panel_value(f, p, block, h):
    r = p % block
    if r == 0:
        w, i0 = _W_FWD, p
    elif r == block - 1:
        w, i0 = _W_BWD, p - 2
    else:
        w, i0 = _W_INT, p - 1
    return h * (w[0] * f[i0] + w[1] * f[i0 + 1] + w[2] * f[i0 + 2] + w[3] * f[i0 + 3])


def _march_delay(c0, c1, n_blocks, step_bits):
    """March u*f(u) = c0 + c1*int_1^{u-1} f with f = c0/u on [1, 2].

    Returns grid values of f and of the cumulative integral from 1.
    The march needs the cumulative value one full block back, while a
    panel's stencil reaches at most 3 nodes ahead, so completing panels
    lazily (once their stencil is known) always stays ahead of the reads.
    """
    h = 2.0**-step_bits
    block = 1 << step_bits
    n = n_blocks * block
    u = (1.0 + np.arange(n + 1) * h).tolist()
    f = [0.0] * (n + 1)
    icum = [0.0] * (n + 1)
    for k in range(block + 1):
        f[k] = c0 / u[k]
        icum[k] = c0 * math.log(u[k])
    for k in range(block + 1, 2 * block + 1):
        f[k] = (c0 + c1 * c0 * math.log(u[k] - 1.0)) / u[k]
    for p in range(block, 2 * block):
        icum[p + 1] = icum[p] + _panel_value(f, p, block, h)
    next_p = 2 * block
    for k in range(2 * block + 1, n + 1):
        f[k] = (c0 + c1 * icum[k - block]) / u[k]
        while next_p < n:
            r = next_p % block
            need = next_p + 3 if r == 0 else (next_p + 1 if r == block - 1 else next_p + 2)
            if need > k:
                break
            icum[next_p + 1] = icum[next_p] + _panel_value(f, next_p, block, h)
            next_p += 1
    return np.array(f), np.array(icum)


def build_buchstab():
    vals, icum = _march_delay(1.0, 1.0, OMEGA_BLOCKS, OMEGA_STEP_BITS)
    block = 1 << OMEGA_STEP_BITS
    fn = PiecewiseFn(
        name="buchstab",
        support_lo=1.0,
        exact_pieces=[
            (1.0, 2.0, lambda x: 1.0 / x),
            (2.0, 3.0, lambda x: (1.0 + np.log(x - 1.0)) / x),
        ],
        exact_hi=3.0,
        grid_start=1.0,
        grid_step=2.0**-OMEGA_STEP_BITS,
        grid_block=block,
        grid_values=vals,
        tail_fn=lambda x: np.full(np.shape(x), EXP_NEG_GAMMA),
        err_budget=1e-9,
    )
    cum = GridCum(1.0, 2.0**-OMEGA_STEP_BITS, block, icum)
    return fn, cum


def build_ratio_fn():
    vals, icum = _march_delay(2.0, 2.0, XI_BLOCKS, OMEGA_STEP_BITS)
    block = 1 << OMEGA_STEP_BITS
    fn = PiecewiseFn(
        name="ratio_fn",
        support_lo=1.0,
        exact_pieces=[
            (1.0, 2.0, lambda x: 2.0 / x),
            (2.0, 3.0, lambda x: (4.0 * np.log(x - 1.0) + 2.0) / x),
        ],
        exact_hi=3.0,
        grid_start=1.0,
        grid_step=2.0**-OMEGA_STEP_BITS,
        grid_block=block,
        grid_values=vals,
        tail_fn=lambda x: (x + 2.0) * EXP_NEG_2GAMMA,
        err_budget=2e-9,
    )
    cum = GridCum(1.0, 2.0**-OMEGA_STEP_BITS, block, icum)
    return fn, cum


class DelayDerivative:
    """Derivative of ratio_fn via u*f'(u) = 2*f(u-1) - f(u).

    Right-continuous: at the kinks u = 1 and u = 2 the returned value is
    the one-sided limit from above (flagged_points records them).
    """

    def __init__(self, ratio):
        self.name = "ratio_fn_prime"
        self.ratio = ratio
        self.err_budget = 1e-8
        self.flagged_points = (1.0, 2.0)
        self.support_lo = 1.0

    def eval_many(self, us):
        us = np.asarray(us, dtype=float)
        scalar = us.ndim == 0
        us = np.atleast_1d(us)
        out = np.zeros(us.shape)
        m = us >= 1.0
        if m.any():
            x = us[m]
            out[m] = (2.0 * self.ratio.eval_many(x - 1.0) - self.ratio.eval_many(x)) / x
        return out[0] if scalar else out

    def __call__(self, u):
        return float(self.eval_many(np.float64(u)))


_GL12 = np.polynomial.legendre.leggauss(12)
_GL20 = np.polynomial.legendre.leggauss(20)


def _panel_nodes(edges, gl, max_width=0.5):
    """Gauss nodes and weights over [edges[0], edges[-1]] split at edges."""
    refined = []
    for a, b in zip(edges[:-1], edges[1:]):
        parts = max(1, math.ceil((b - a) / max_width))
        step = (b - a) / parts
        for i in range(parts):
            refined.append((a + i * step, a + (i + 1) * step))
    xg, wg = gl
    a = np.array([p[0] for p in refined])
    b = np.array([p[1] for p in refined])
    mid = 0.5 * (a + b)
    rad = 0.5 * (b - a)
    nodes = (mid[:, None] + rad[:, None] * xg[None, :]).ravel()
    weights = (rad[:, None] * wg[None, :]).ravel()
    return nodes, weights


def _merge_edges(points, lo, hi, eps=1e-12):
    pts = sorted(p for p in points if lo + eps < p < hi - eps)
    edges = [lo]
    for p in pts:
        if p - edges[-1] > eps:
            edges.append(p)
    if hi - edges[-1] > eps:
        edges.append(hi)
    else:
        edges[-1] = hi
    return edges


def build_growth_fn(ratio):
    """March f(v) = v - int_0^{(v-1)/2} f(u) ratio((v-u)/(u+1)) du/(u+1)."""
    h = 2.0**-LAMBDA_STEP_BITS
    block = 1 << LAMBDA_STEP_BITS
    n = (LAMBDA_VMAX - 1) * block
    lam = np.zeros(n + 1)
    lam[0] = 1.0

    def lam_eval(us):
        out = np.array(us, dtype=float)
        m = out >= 1.0
        if m.any():
            out[m] = _cubic_interp(1.0, h, block, lam, out[m])
        return out

    for k in range(1, n + 1):
        v = 1.0 + k * h
        ub = (v - 1.0) / 2.0
        brks = list(range(1, int(ub) + 1))
        j = 2
        while True:
            uj = (v - j) / (j + 1.0)
            if uj <= 0:
                break
            brks.append(uj)
            j += 1
        edges = _merge_edges(brks, 0.0, ub)
        nodes, weights = _panel_nodes(edges, _GL12)
        arg = (v - nodes) / (nodes + 1.0)
        integrand = lam_eval(nodes) * ratio.eval_many(arg) / (nodes + 1.0)
        lam[k] = v - float(weights @ integrand)

    return PiecewiseFn(
        name="growth_fn",
        support_lo=0.0,
        exact_pieces=[(0.0, 1.0, lambda x: x.copy())],
        exact_hi=1.0,
        grid_start=1.0,
        grid_step=h,
        grid_block=block,
        grid_values=lam,
        tail_fn=None,
        err_budget=1e-7,
    )


def ratio_via_convolution(u, buchstab):
    """Independent route: ratio(u) = 2*w(u) + (w*w)(u), quadrature only.

    The self-convolution is supported on [1, u-1]; panels split wherever
    either factor hits an integer argument.
    """
    u = float(u)
    if u < 1.0:
        return 0.0
    two_w = 2.0 * buchstab(u)
    if u <= 2.0:
        return two_w
    brks = []
    m = 2
    while m < u - 1.0:
        brks.append(float(m))  # kink of w(t)
        m += 1
    m = 2
    while u - m > 1.0:
        brks.append(u - m)  # kink of w(u-t)
        m += 1
    edges = _merge_edges(brks, 1.0, u - 1.0)
    nodes, weights = _panel_nodes(edges, _GL20)
    conv = float(weights @ (buchstab.eval_many(nodes) * buchstab.eval_many(u - nodes)))
    return two_w + conv


@dataclass
class FnBundle:
    buchstab: PiecewiseFn
    ratio: PiecewiseFn
    ratio_prime: DelayDerivative
    growth: PiecewiseFn
    buchstab_cum: GridCum = field(repr=False)
    ratio_cum: GridCum = field(repr=False)

    def buchstab_integral_from_one(self, us):
        """int_1^u buchstab, extended past the grid by the constant tail."""
        us = np.atleast_1d(np.asarray(us, dtype=float))
        out = self.buchstab_cum.eval_many(us)
        end = self.buchstab_cum.end
        m = us > end
        if m.any():
            out[m] = self.buchstab_cum.values[-1] + (us[m] - end) * EXP_NEG_GAMMA
        return out

    def buchstab_defect_integral(self, u):
        """int_0^u (buchstab(s) - e^-gamma) ds; tends to e^-gamma - 1."""
        us = np.atleast_1d(np.asarray(u, dtype=float))
        out = self.buchstab_integral_from_one(us) - us * EXP_NEG_GAMMA
        return float(out[0]) if np.ndim(u) == 0 else out

    def ratio_integral_from_one(self, us):
        us = np.atleast_1d(np.asarray(us, dtype=float))
        out = self.ratio_cum.eval_many(us)
        end = self.ratio_cum.end
        m = us > end
        if m.any():
            x = us[m]
            out[m] = self.ratio_cum.values[-1] + EXP_NEG_2GAMMA * (
                0.5 * (x**2 - end**2) + 2.0 * (x - end)
            )
        return out

    def buchstab_residual(self, u):
        """u*w(u) - 1 - int_1^{u-1} w; zero on the true solution."""
        u = float(u)
        return u * self.buchstab(u) - 1.0 - float(self.buchstab_integral_from_one(u - 1.0)[0])

    def ratio_residual(self, u):
        u = float(u)
        return u * self.ratio(u) - 2.0 - 2.0 * float(self.ratio_integral_from_one(u - 1.0)[0])


_BUNDLE = None


def get_bundle():
    """Build the marched tables once per process."""
    global _BUNDLE
    if _BUNDLE is None:
        w, w_cum = build_buchstab()
        xi, xi_cum = build_ratio_fn()
        _BUNDLE = FnBundle(
            buchstab=w,
            ratio=xi,
            ratio_prime=DelayDerivative(xi),
            growth=build_growth_fn(xi),
            buchstab_cum=w_cum,
            ratio_cum=xi_cum,
        )
    return _BUNDLE
