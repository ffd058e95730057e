"""Mellin-side machinery: the generating function g, its roots, and residues.

g(s) = 1 + int_0^inf gap(v) (v+1)^{-s-1} dv + c/s + c/(s-1),  c = e^{-2*gamma},

where gap(v) = ratio_fn(v) - (v+2)*e^{-2*gamma} decays superexponentially.
Substituting w = log(v+1) turns the integral into int E(w) e^{-sw} dw over a
finite interval, precomputed once on Gauss panels, so evaluating g anywhere
in the half-plane is a dot product.  Roots of g become poles of the mean
transfer function 1/(s(s-1)g(s)); each residue is 1/(s0(s0-1)g'(s0)).

Truncating the v-integral at V in [5, 8] is the public contract; root and
residue refinement quietly uses the whole tabulated range so certificates
carry a truncation error near the table's noise floor, recorded per
certificate in truncation_V.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import exp1, gammaln

from .errors import ContourError, PoleError, RangeError, SolverError
from .funcs import (
    EXP_NEG_2GAMMA,
    EXP_NEG_GAMMA,
    EULER_GAMMA,
    _merge_edges,
    _panel_nodes,
    get_bundle,
)

DELTA_BRACKET = (0.713611, 0.713614)
_GL16 = np.polynomial.legendre.leggauss(16)
_POLE_EPS = 1e-9

B0 = EXP_NEG_2GAMMA
B1 = 2.0 * EXP_NEG_2GAMMA


def _check_not_pole(s):
    if abs(s) < _POLE_EPS or abs(s - 1.0) < _POLE_EPS:
        raise PoleError(f"s = {s} is a pole of the continuation")


class GEvaluator:
    """g and g' from a fixed Gauss discretization of the gap integral."""

    def __init__(self, V=6.0, panel_width=0.25, full_grid=False, bundle=None):
        bundle = bundle or get_bundle()
        self._xi = bundle.ratio
        if full_grid:
            v_hi = bundle.ratio.grid_end
        else:
            if not 5.0 <= V <= 8.0:
                raise RangeError(f"truncation V must lie in [5, 8], got {V}")
            v_hi = float(V)
        self.truncation_V = v_hi
        w_hi = math.log(v_hi + 1.0)
        breaks = [math.log(k + 1.0) for k in range(0, int(v_hi) + 1)]
        edges = _merge_edges(breaks, 0.0, w_hi)
        wn, wts = _panel_nodes(edges, _GL16, max_width=panel_width)
        v = np.expm1(wn)
        gap = self._xi.eval_many(v) - (v + 2.0) * EXP_NEG_2GAMMA
        self._wn = wn
        self._coef = wts * gap

    def g_many(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        kern = np.exp(-np.outer(s, self._wn))
        integral = kern @ self._coef
        return 1.0 + integral + EXP_NEG_2GAMMA / s + EXP_NEG_2GAMMA / (s - 1.0)

    def g_prime_many(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        kern = np.exp(-np.outer(s, self._wn))
        integral = kern @ (-self._wn * self._coef)
        return integral - EXP_NEG_2GAMMA / s**2 - EXP_NEG_2GAMMA / (s - 1.0) ** 2

    def g(self, s):
        _check_not_pole(complex(s))
        out = complex(self.g_many(s)[0])
        return out.real if np.isrealobj(np.asarray(s)) else out

    def g_prime(self, s):
        _check_not_pole(complex(s))
        out = complex(self.g_prime_many(s)[0])
        return out.real if np.isrealobj(np.asarray(s)) else out

    def tail_bound(self, sigma_min):
        """Certified |g - g_V| on Re s >= sigma_min: upper sum of the
        discarded |gap| against the largest kernel weight per panel."""
        return _truncation_bound(self.truncation_V, sigma_min, self._xi)


def _truncation_bound(v_from, sigma_min, xi):
    p = -sigma_min - 1.0  # |(v+1)^{-s-1}| <= (v+1)^p
    h = xi.grid_step
    u = xi.grid_start + np.arange(len(xi.grid_values)) * h
    gap = np.abs(xi.grid_values - (u + 2.0) * EXP_NEG_2GAMMA) + xi.err_budget
    m = u >= v_from - 1e-12
    ga, ua = gap[m], u[m]
    if len(ga) >= 2:
        sup_gap = np.maximum(ga[:-1], ga[1:])
        # between-node wiggle: |gap''| on the discarded range only (the gap
        # jumps at v=1, far below any admissible truncation point)
        d2 = np.abs(np.diff(ga, 2)).max() / h**2 if len(ga) >= 3 else 0.0
        sup_gap = sup_gap + (h * h / 8.0) * 1.5 * d2
        wl = (ua[:-1] + 1.0) ** p
        wr = (ua[1:] + 1.0) ** p
        sup_w = np.maximum(wl, wr)
        total = float((sup_gap * sup_w).sum() * h)
    else:
        total = 0.0
    # past the table: superexponential envelope 2^v / (7 Gamma(v+1))
    end = xi.grid_end
    for k in range(60):
        a = end + k
        env = math.exp((a + 1.0) * math.log(2.0) - float(gammaln(a + 1.0))) / 7.0
        term = env * (a + 2.0) ** p if p > 0 else env * (a + 1.0) ** p
        total += term
        if term < 1e-18:
            break
    return total


_EV_CACHE = {}


def _evaluator(V=6.0, panel_width=0.25, full_grid=False):
    key = ("full" if full_grid else round(float(V), 9), round(panel_width, 9))
    if key not in _EV_CACHE:
        _EV_CACHE[key] = GEvaluator(V=V, panel_width=panel_width, full_grid=full_grid)
    return _EV_CACHE[key]


def _full_ev():
    return _evaluator(full_grid=True)


def g_eval(s, V=6.0):
    return _evaluator(V=V).g(s)


def g_prime_eval(s, V=6.0):
    return _evaluator(V=V).g_prime(s)


def _bisect_real_root(fn, a, b, iters=100):
    fa, fb = fn(a), fn(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if (fa > 0) == (fb > 0):
        raise SolverError(f"no sign change on [{a}, {b}]: f(a)={fa}, f(b)={fb}")
    for _ in range(iters):
        mid = 0.5 * (a + b)
        fm = fn(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (fa > 0):
            a, fa = mid, fm
        else:
            b, fb = mid, fm
        if b - a < 1e-15 * max(1.0, abs(a)):
            break
    return 0.5 * (a + b)


def find_delta_via_g(V=6.0):
    """Positive root of g by bisection on (0.1, 0.9), certified by winding."""
    ev = _evaluator(V=V)
    root = _bisect_real_root(ev.g, 0.1, 0.9)
    return _real_root_certificate(
        root,
        residual=abs(ev.g(root)),
        walk_ev=ev,
        residue=1.0 / (root * (root - 1.0) * ev.g_prime(root)),
        truncation_V=V,
    )


def _real_root_certificate(root, residual, walk_ev, residue, truncation_V, half=1e-4):
    lo = complex(root - half, -half)
    hi = complex(root + half, half)
    winding, _ = _rect_walk(walk_ev, lo, hi)
    if winding != 1:
        raise ContourError(f"winding {winding} around bisection root {root}")
    return RootCertificate(
        location=complex(root),
        enclosure=(lo, hi),
        winding=winding,
        residual=residual,
        residue=complex(residue),
        method="real-bisection",
        truncation_V=truncation_V,
    )


def exp_integral_J(u):
    """Principal exponential integral int_u^inf e^-t dt / t, u > 0."""
    arr = np.asarray(u, dtype=float)
    if np.any(arr <= 0.0):
        raise RangeError("exponential integral needs u > 0")
    out = exp1(arr)
    return float(out) if arr.ndim == 0 else out


_PHI_C = np.array(
    [2.0 * (-1.0) ** (k + 1) / (k * math.factorial(k)) for k in range(1, 22)]
)


def _phi(u):
    """2*(J(u) + gamma + log u) as a stable series, |u| <= ~0.6."""
    u = np.asarray(u, dtype=float)
    acc = np.zeros_like(u)
    up = np.ones_like(u)
    for c in _PHI_C:
        up = up * u
        acc = acc + c * up
    return acc


def _q_integrand_low(u, s):
    # u^s * (F(u) - b0/u^2 - b1/u) with the u^-2 blowup cancelled in series
    core = B0 * (np.expm1(_phi(u)) - 2.0 * u) / u**2 - 1.0
    return np.power(u, s) * core


def _q_integrand_mid(u, s):
    core = np.expm1(2.0 * exp1(u)) - B0 / u**2 - B1 / u
    return np.power(u, s) * core


def Q_eval(s, u_max=40.0):
    """Divisor-side Mellin transform, continued across its poles at 1 and 0.

    Q(s) = int_0^1 u^s (F - b0 u^-2 - b1 u^-1) du + b0/(s-1) + b1/s
         + int_1^umax u^s F du,   F(u) = e^{2J(u)} - 1.
    """
    _check_not_pole(complex(s))
    eps = 1e-3
    # [0, eps] exactly from the Taylor head of the regularized integrand
    c0, c1, c2 = 1.5 * B0 - 1.0, (4.0 / 9.0) * B0, -(1.0 / 144.0) * B0
    head = (
        c0 * eps ** (s + 1) / (s + 1)
        + c1 * eps ** (s + 2) / (s + 2)
        + c2 * eps ** (s + 3) / (s + 3)
    )
    edges_low = [eps]
    while edges_low[-1] < 0.5:
        edges_low.append(edges_low[-1] * 2.0)
    n_low, w_low = _panel_nodes(edges_low, _GL16, max_width=1.0)
    part_low = w_low @ _q_integrand_low(n_low, s)
    n_mid, w_mid = _panel_nodes([edges_low[-1], 0.75, 1.0], _GL16, max_width=1.0)
    part_mid = w_mid @ _q_integrand_mid(n_mid, s)
    edges_hi = [1.0]
    while edges_hi[-1] < u_max:
        edges_hi.append(min(edges_hi[-1] * 1.5, u_max))
    n_hi, w_hi = _panel_nodes(edges_hi, _GL16, max_width=np.inf)
    part_hi = w_hi @ (np.power(n_hi, s) * np.expm1(2.0 * exp1(n_hi)))
    out = head + part_low + part_mid + B0 / (s - 1.0) + B1 / s + part_hi
    return out.real if np.isrealobj(np.asarray(s)) else complex(out)


def find_delta_via_Q():
    """Same root, reached through the divisor-side transform instead of g."""
    root = _bisect_real_root(lambda x: Q_eval(x), 0.1, 0.9)
    # At a root of Q, d/ds[(s+1)Q] = (root+1)Q'(root); the gamma-function
    # bridge then gives the derivative of g, so the residue convention
    # matches the g route.  The winding check runs on the full-table g.
    h = 1e-6
    qp = (Q_eval(root + h) - Q_eval(root - h)) / (2.0 * h)
    gp = (root + 1.0) * qp / (2.0 * math.gamma(root + 1.0))
    return _real_root_certificate(
        root,
        residual=abs(Q_eval(root)),
        walk_ev=_full_ev(),
        residue=1.0 / (root * (root - 1.0) * gp),
        truncation_V=None,
    )


def _rect_walk(ev, lo, hi, max_pts=200_000):
    """Argument-principle walk around a rectangle: (winding, min |g|)."""
    lo, hi = complex(lo), complex(hi)
    if not (hi.real > lo.real and hi.imag > lo.imag):
        raise RangeError("rectangle corners must satisfy lo < hi componentwise")
    corners = [lo, complex(hi.real, lo.imag), hi, complex(lo.real, hi.imag), lo]
    total = 0.0
    min_abs = math.inf
    for a, b in zip(corners[:-1], corners[1:]):
        ts = np.linspace(0.0, 1.0, 65)
        gs = ev.g_many(a + (b - a) * ts)
        for _ in range(40):
            av = np.abs(gs)
            if av.min() == 0.0:
                raise ContourError("g vanishes on the contour")
            dphi = np.angle(gs[1:] / gs[:-1])
            bad = np.abs(dphi) >= (math.pi / 4.0)
            if not bad.any():
                break
            if len(ts) > max_pts:
                raise ContourError("contour refinement exploded")
            mids = 0.5 * (ts[:-1][bad] + ts[1:][bad])
            gm = ev.g_many(a + (b - a) * mids)
            order = np.argsort(np.concatenate([ts, mids]), kind="stable")
            ts = np.concatenate([ts, mids])[order]
            gs = np.concatenate([gs, gm])[order]
        else:
            raise ContourError("phase steps did not settle below pi/4")
        total += float(np.angle(gs[1:] / gs[:-1]).sum())
        min_abs = min(min_abs, float(np.abs(gs).min()))
    w = total / (2.0 * math.pi)
    if abs(w - round(w)) > 0.02:
        raise ContourError(f"winding {w} is not close to an integer")
    return int(round(w)), min_abs


def _width_for_rect(lo, hi):
    top = max(abs(complex(lo).imag), abs(complex(hi).imag), 1.0)
    return min(0.25, 8.0 / top)


def count_zeros_rect(lo, hi, V=6.0):
    """Zeros minus poles of the truncated g inside the rectangle.

    A boundary where |g| dips under the truncation bound cannot certify a
    count for the untruncated function, so that raises instead of lying.
    """
    ev = _evaluator(V=V, panel_width=_width_for_rect(lo, hi))
    winding, min_abs = _rect_walk(ev, lo, hi)
    safety = ev.tail_bound(complex(lo).real) + 1e-9
    if min_abs <= safety:
        raise ContourError(
            f"boundary minimum {min_abs:.3e} under safety margin {safety:.3e}"
        )
    return winding


def rect_boundary_min(lo, hi, V=6.0):
    ev = _evaluator(V=V, panel_width=_width_for_rect(lo, hi))
    _, min_abs = _rect_walk(ev, lo, hi)
    return min_abs


@dataclass(frozen=True)
class RootCertificate:
    location: complex
    enclosure: tuple  # rectangle corners (lo, hi), complex
    winding: int
    residual: float
    residue: complex
    method: str
    truncation_V: float  # None when the route has no grid truncation knob

    def as_json(self):
        lo, hi = self.enclosure
        return {
            "location": {"re": self.location.real, "im": self.location.imag},
            "enclosure": {
                "lo": {"re": lo.real, "im": lo.imag},
                "hi": {"re": hi.real, "im": hi.imag},
            },
            "winding": self.winding,
            "residual": self.residual,
            "residue": {"re": self.residue.real, "im": self.residue.imag},
            "method": self.method,
            "truncation_V": self.truncation_V,
        }


def refine_zero(seed, enclosure=1e-5):
    """Polish a root of g on the full table, then certify it by winding."""
    ev = _full_ev()
    seed = complex(seed)
    if seed.imag == 0.0:
        x = seed.real
        half = 0.01
        a, b = x - half, x + half
        while (ev.g(a) > 0) == (ev.g(b) > 0):
            half *= 2.0
            a, b = x - half, x + half
            if half > 0.64:
                raise SolverError(f"no bracket around real seed {x}")
        root = complex(_bisect_real_root(ev.g, a, b, iters=200))
        method = "real-bisection"
    else:
        root = seed
        for _ in range(80):
            gp = complex(ev.g_prime_many(root)[0])
            gv = complex(ev.g_many(root)[0])
            step = gv / gp
            root = root - step
            if not np.isfinite(root.real) or abs(root) > 1e3:
                raise SolverError(f"Newton diverged from seed {seed}")
            if abs(step) <= 1e-14 * (1.0 + abs(root)):
                break
        else:
            raise SolverError(f"Newton did not settle from seed {seed}")
        method = "complex-refine"
    residual = abs(complex(ev.g_many(root)[0]))
    if residual > 1e-10:
        raise SolverError(f"refined residual {residual} above 1e-10")
    half = enclosure
    lo, hi = root - half * (1 + 1j), root + half * (1 + 1j)
    winding, _ = _rect_walk(ev, lo, hi)
    if winding != 1:
        raise ContourError(f"winding {winding} around refined root {root}")
    gp = complex(ev.g_prime_many(root)[0])
    residue = 1.0 / (root * (root - 1.0) * gp)
    return RootCertificate(
        location=root,
        enclosure=(lo, hi),
        winding=winding,
        residual=residual,
        residue=residue,
        method=method,
        truncation_V=ev.truncation_V,
    )


def residue_at(target):
    """Residue of 1/(s(s-1)g(s)) at a simple root of g."""
    s0 = target.location if isinstance(target, RootCertificate) else complex(target)
    gp = complex(_full_ev().g_prime_many(s0)[0])
    res = 1.0 / (s0 * (s0 - 1.0) * gp)
    return res


def lambda1_closed_form():
    return 2.0 / (3.0 * EXP_NEG_2GAMMA - 2.0)


def lambda0_via_I(delta=None):
    """Leading residue by direct v-space quadrature of g'(delta).

    I = -int_0^inf gap(v) log(v+1) (v+1)^{-1-delta} dv - c/d^2 - c/(d-1)^2,
    then lambda0 = 1/(delta(delta-1)I).  Independent panels from the
    root-certificate route: same root, different integral.
    """
    if delta is None:
        delta = refine_zero(0.7136125).location.real
    xi = get_bundle().ratio
    v_hi = xi.grid_end
    edges = _merge_edges(list(range(0, int(v_hi) + 1)), 0.0, v_hi)
    nodes, wts = _panel_nodes(edges, np.polynomial.legendre.leggauss(20), max_width=0.5)
    gap = xi.eval_many(nodes) - (nodes + 2.0) * EXP_NEG_2GAMMA
    val = float(wts @ (gap * np.log(nodes + 1.0) * (nodes + 1.0) ** (-1.0 - delta)))
    big_i = -val - EXP_NEG_2GAMMA / delta**2 - EXP_NEG_2GAMMA / (delta - 1.0) ** 2
    return 1.0 / (delta * (delta - 1.0) * big_i)


def H_bound(sigma):
    """2^{1-sigma} + int_1^inf |ratio'(v) - e^{-2g}| (v+1)^{-sigma} dv."""
    b = get_bundle()
    xi = b.ratio
    h = xi.grid_step
    u = xi.grid_start + np.arange(len(xi.grid_values)) * h
    d = b.ratio_prime.eval_many(u) - EXP_NEG_2GAMMA
    flips = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) < 0)
    crossings = [
        float(u[i] + h * d[i] / (d[i] - d[i + 1])) for i in flips
    ]
    edges = _merge_edges(list(range(1, int(xi.grid_end) + 1)) + crossings, 1.0, xi.grid_end)
    nodes, wts = _panel_nodes(edges, _GL16, max_width=0.25)
    vals = np.abs(b.ratio_prime.eval_many(nodes) - EXP_NEG_2GAMMA)
    total = float(wts @ (vals * (nodes + 1.0) ** (-sigma)))
    end = xi.grid_end
    for k in range(60):
        a = end + k
        env = math.exp((a + 1.0) * math.log(2.0) - float(gammaln(a + 1.0))) / 7.0
        term = env * max((a + 1.0) ** -sigma, (a + 2.0) ** -sigma)
        total += term
        if term < 1e-18:
            break
    return 2.0 ** (1.0 - sigma) + total


def buchstab_transform_check(s):
    """Both sides of the sieve transform identity at real s > 1:

    s * int_0^inf u^{s-1} (e^{J(u)} - 1) du
      = Gamma(s) * (1 + int_1^inf w(v) (1+v)^{-s} dv).
    """
    if not s > 1.0:
        raise RangeError(f"transform check needs s > 1, got {s}")
    b = get_bundle()
    eps = 1e-3
    # e^{J} - 1 = e^{-gamma} u^{-1} e^{psi(u)} - 1 with psi analytic at 0
    c = [1.0, 1.0, 0.25, -1.0 / 36.0]  # Taylor of e^{psi}
    head = EXP_NEG_GAMMA * sum(
        ck * eps ** (s - 1 + k) / (s - 1 + k) for k, ck in enumerate(c)
    ) - eps**s / s
    edges = [eps]
    while edges[-1] < 40.0:
        edges.append(min(edges[-1] * 1.5, 40.0))
    nodes, wts = _panel_nodes(edges, _GL16, max_width=np.inf)
    body = float(wts @ (nodes ** (s - 1.0) * np.expm1(exp1(nodes))))
    lhs = s * (head + body)
    w_end = b.buchstab.grid_end
    edges_v = _merge_edges(list(range(1, int(w_end) + 1)), 1.0, w_end)
    nv, wv = _panel_nodes(edges_v, _GL16, max_width=0.5)
    tail = EXP_NEG_GAMMA * (1.0 + w_end) ** (1.0 - s) / (s - 1.0)
    omega_hat = float(wv @ (b.buchstab.eval_many(nv) * (1.0 + nv) ** -s)) + tail
    rhs = math.gamma(s) * (1.0 + omega_hat)
    return {"s": s, "lhs": lhs, "rhs": rhs, "gap": lhs - rhs, "ratio": lhs / rhs}


def zero_pole_census(V=6.0):
    """Winding counts on disjoint boxes: each root shows +1, each pole -1."""
    return {
        "wide_rect": count_zeros_rect(-3 - 62j, 3 + 62j, V=V),
        "square_delta": count_zeros_rect(0.46 - 0.25j, 0.96 + 0.25j, V=V),
        "square_minus_one": count_zeros_rect(-1.5 - 0.5j, -0.5 + 0.5j, V=V),
        "square_pair_upper": count_zeros_rect(-2.462 + 11.07j, -1.462 + 12.07j, V=V),
        "square_pair_lower": count_zeros_rect(-2.462 - 12.07j, -1.462 - 11.07j, V=V),
        "square_pole_zero": count_zeros_rect(-0.2 - 0.2j, 0.2 + 0.2j, V=V),
        "square_pole_one": count_zeros_rect(0.86 - 0.14j, 1.14 + 0.14j, V=V),
    }


def constants_document():
    """One deterministic bundle of every computed constant and margin."""
    cert_delta = refine_zero(0.7136125)
    cert_m1 = refine_zero(-1.0)
    cert_pair = refine_zero(-1.962 + 11.575j)
    delta = cert_delta.location.real
    lam0_residue = cert_delta.residue.real
    lam0_integral = lambda0_via_I(delta)
    doc = {
        "delta": {
            "value": delta,
            "bracket": list(DELTA_BRACKET),
            "via_g_V6": find_delta_via_g(6.0).location.real,
            "via_g_V5": find_delta_via_g(5.0).location.real,
            "via_Q": find_delta_via_Q().location.real,
        },
        "lambda0": {
            "via_residue": lam0_residue,
            "via_integral": lam0_integral,
        },
        "lambda1": {
            "via_residue": cert_m1.residue.real,
            "closed_form": lambda1_closed_form(),
        },
        "complex_pair": cert_pair.as_json(),
        "certificates": {
            "delta": cert_delta.as_json(),
            "minus_one": cert_m1.as_json(),
        },
        "census": zero_pole_census(6.0),
        "rouche": {
            "tail_bound_V5": _evaluator(V=5.0).tail_bound(-3.0),
            "tail_bound_V6": _evaluator(V=6.0).tail_bound(-3.0),
            "boundary_min_V5": rect_boundary_min(-3 - 62j, 3 + 62j, V=5.0),
        },
        "H": {"at_minus_3": H_bound(-3.0), "at_0": H_bound(0.0), "at_1": H_bound(1.0)},
        "transform_gap_s2": buchstab_transform_check(2.0)["gap"],
        "transform_gap_s3": buchstab_transform_check(3.0)["gap"],
    }
    return doc


def document_to_json(doc, indent=2):
    return json.dumps(doc, indent=indent, sort_keys=True)
