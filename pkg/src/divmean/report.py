"""Exact-versus-estimate comparison tables, series tails, and figure data.

The exact side of every row comes from the enumeration and sieve modules;
the estimate side comes from the tabulated special functions and the root
certificates.  Each row records the error scale its estimate is entitled
to and the slack multiplier applied when judging it, so tightening a bound
later is a data change, not a code change.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from ._util import fmt15
from .constants import lambda1_closed_form, refine_zero
from .errors import ConfigError, RangeError
from .funcs import EXP_NEG_2GAMMA, EXP_NEG_GAMMA, get_bundle
from .sieve import build_prime_list
from .theta import ThetaRule, b_rows, chain_stats_multi, dense_stats, rough_stats

DEFAULT_SLACK = 5.0

_PLIST = None
_GROWTH_CONSTANTS = None


def _plist_for(limit):
    # one growing cache; report-scale runs hit many cutoffs under the max
    global _PLIST
    limit = max(2, int(math.ceil(limit)))  # fractional y needs primes up to ceil(y)
    if _PLIST is None or _PLIST.limit < limit:
        _PLIST = build_prime_list(limit)
    return _PLIST


def growth_constants():
    """(exponent, leading, correction) of the dense tau-sum asymptote."""
    global _GROWTH_CONSTANTS
    if _GROWTH_CONSTANTS is None:
        cert = refine_zero(0.7136125)
        _GROWTH_CONSTANTS = (
            cert.location.real,
            cert.residue.real,
            lambda1_closed_form(),
        )
    return _GROWTH_CONSTANTS


@dataclass(frozen=True)
class CompareRow:
    label: str
    params: tuple  # ((name, value), ...) in display order
    exact: float
    estimate: float
    envelope: float
    slack: float = DEFAULT_SLACK

    @property
    def rel_err(self):
        return abs(self.exact - self.estimate) / max(abs(self.exact), 1.0)

    @property
    def ok(self):
        return self.rel_err <= self.envelope * self.slack

    def as_dict(self):
        return {
            "label": self.label,
            "params": {k: _json_param(v) for k, v in self.params},
            "exact": self.exact,
            "estimate": self.estimate,
            "rel_err": self.rel_err,
            "envelope": self.envelope,
            "slack": self.slack,
            "ok": self.ok,
        }


def _json_param(v):
    if isinstance(v, (int, float, str)):
        return v
    if isinstance(v, np.integer):
        return int(v)
    num, den = getattr(v, "numerator", None), getattr(v, "denominator", None)
    if num is not None:
        return int(num) if den == 1 else f"{num}/{den}"
    return str(v)


def sort_rows(rows):
    return sorted(rows, key=lambda r: (r.params, r.label))


def _fmt_param(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float):
        return fmt15(v)
    return str(v)


def rows_to_csv(rows):
    lines = ["label,params,exact,estimate,rel_err,envelope,slack,ok"]
    for r in rows:
        ps = ";".join(f"{k}={_fmt_param(v)}" for k, v in r.params)
        lines.append(
            ",".join(
                [
                    r.label,
                    ps,
                    fmt15(r.exact),
                    fmt15(r.estimate),
                    fmt15(r.rel_err),
                    fmt15(r.envelope),
                    fmt15(r.slack),
                    "1" if r.ok else "0",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def rows_to_jsonl(rows):
    return "".join(json.dumps(r.as_dict(), sort_keys=True) + "\n" for r in rows)


def _check_xy(x, y):
    if x < 1:
        raise RangeError(f"x must be >= 1, got {x}")
    if y < 2:
        raise RangeError(f"y must be >= 2, got {y}")


def estimate_phi(x, y):
    """Main terms of the rough-count estimate, indicator correction included."""
    _check_xy(x, y)
    b = get_bundle()
    ly = math.log(y)
    u = math.log(x) / ly
    pi_y = _plist_for(y).mertens(y)
    corr = y / x if x >= y else 0.0
    return 1.0 + x * pi_y + (x / ly) * (b.buchstab(u) - EXP_NEG_GAMMA - corr)


def estimate_S(x, y):
    """Main terms of the rough tau-sum estimate."""
    _check_xy(x, y)
    b = get_bundle()
    ly = math.log(y)
    u = math.log(x) / ly
    pi_y = _plist_for(y).mertens(y)
    corr = 2.0 * y / x if x >= y else 0.0
    main = x * math.log(x) * pi_y * pi_y
    return 1.0 + main + (x / ly) * (b.ratio(u) - u * EXP_NEG_2GAMMA - corr)


def estimate_harmonic(x, y):
    """Main terms of the rough harmonic-sum estimate."""
    _check_xy(x, y)
    b = get_bundle()
    u = math.log(x) / math.log(y)
    pi_y = _plist_for(y).mertens(y)
    return 1.0 + math.log(x) * pi_y + b.buchstab_defect_integral(u)


def compare_rough(x, y):
    """Rows for the rough count, tau sum, harmonic sum, and tau mean."""
    st = rough_stats(x, y)
    b = get_bundle()
    lx, ly = math.log(x), math.log(y)
    u = lx / ly
    params = (("x", x), ("y", y))
    env_sieve = 1.0 / ly
    env_mean = 1.0 / max(lx, 1e-9) + math.exp(-math.sqrt(ly))
    if u > 1.0:
        mean_est = b.ratio(u) / b.buchstab(u)
    else:
        mean_est = 1.0  # below the sieve threshold only n=1 survives
    rows = [
        CompareRow("rough_count", params, float(st.count), estimate_phi(x, y), env_sieve),
        CompareRow("rough_tau_sum", params, float(st.tau_sum), estimate_S(x, y), env_sieve),
        CompareRow("rough_harmonic", params, st.harmonic, estimate_harmonic(x, y), env_sieve),
        CompareRow("rough_tau_mean", params, st.tau_sum / st.count, mean_est, env_mean),
    ]
    return sort_rows(rows)


def compare_dense(x, t):
    """Rows for the dense tau sum against its growth and order estimates."""
    st = dense_stats(x, t)
    b = get_bundle()
    lt = math.log(t)
    v = math.log(x) / lt
    lam = b.growth(v)
    d = growth_constants()[0]
    params = (("x", x), ("t", t))
    env = 1.0 / lt
    rows = [
        CompareRow("dense_tau_main", params, float(st.tau_sum), x * lt * lam, env),
        CompareRow("dense_tau_order", params, float(st.tau_sum), x * v**d * lt, env),
    ]
    return sort_rows(rows)


def fit_nu_practical(xs):
    """Tau-sum ratios against x (log x)^exponent for the practical chain."""
    cuts = sorted(int(v) for v in xs)
    if not cuts or cuts[0] < 2:
        raise RangeError("cutoffs must be integers >= 2")
    d = growth_constants()[0]
    stats = chain_stats_multi(ThetaRule.practical(), cuts)
    return [(s.x, s.tau_sum / (s.x * math.log(s.x) ** d)) for s in stats]


def L_partial(rule, N):
    """Partial sum of the tau-weighted squared-Mertens series over the chain."""
    ns, taus, tf = b_rows(rule, N)
    pl = _plist_for(tf.max())
    m = pl.mertens_many(tf)
    terms = taus.astype(np.float64) / ns.astype(np.float64) * m * m
    return float(math.fsum(terms.tolist()))


def c_theta_breakdown(rule, N):
    """Partial chain-density constant plus term-sign diagnostics.

    Positivity of the summands (for theta(n) >= n) is an observation, not a
    guarantee at finite cutoff, so violations are reported rather than raised.
    """
    ns, taus, tf = b_rows(rule, N)
    del taus
    pl = _plist_for(tf.max())
    nf = ns.astype(np.float64)
    terms = (pl.logp_pm1_many(tf) - np.log(nf)) * pl.mertens_many(tf) / nf
    value = float(math.fsum(terms.tolist())) / (1.0 - EXP_NEG_GAMMA)
    big_theta = tf >= ns
    negative = terms < -1e-12
    return {
        "value": value,
        "terms": int(terms.size),
        "negative_terms": int(np.count_nonzero(negative & big_theta)),
        "min_term": float(terms.min()),
    }


def c_theta_partial(rule, N):
    return c_theta_breakdown(rule, N)["value"]


def E_of_x(f_spec, x):
    """Closed-form relative-error scale for admissible growth-factor shapes.

    f_spec is ("log-power", A) for f(y) = (log y)^A or ("constant", c).
    Shapes whose factor decreases, or whose log-ratio to log y fails to
    decrease eventually, are outside what the count asymptotic admits.
    """
    if x < 3.0:
        raise RangeError(f"x must be >= 3, got {x}")
    kind, a = f_spec
    lx = math.log(x)
    if kind == "log-power":
        if a < 0:
            raise ConfigError("decreasing growth factor is not admissible")
        return a * (1.0 + math.log(lx)) / lx
    if kind == "constant":
        if a < 1:
            raise ConfigError("constant factor below 1 is not admissible")
        return math.log(a) / lx
    raise ConfigError(f"unknown growth-factor shape {kind!r}")


def _grid(lo, hi, step):
    if step <= 0:
        raise RangeError(f"step must be positive, got {step}")
    if hi < lo:
        raise RangeError("grid upper end below lower end")
    n = int(round((hi - lo) / step))
    if abs(lo + n * step - hi) > 1e-9 * max(1.0, abs(hi)):
        n = int(math.floor((hi - lo) / step + 1e-12))
    return lo + step * np.arange(n + 1)


def _csv(header, columns):
    rows = zip(*(c.tolist() for c in columns))
    lines = [header]
    lines.extend(",".join(fmt15(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def tabulate_fn(name, lo, hi, step):
    """CSV table of one special function with its grid error budget."""
    b = get_bundle()
    fns = {"omega": b.buchstab, "xi": b.ratio, "lambda": b.growth}
    if name not in fns:
        raise RangeError(f"unknown function {name!r}")
    fn = fns[name]
    var = "v" if name == "lambda" else "u"
    xs = _grid(float(lo), float(hi), float(step))
    vals = fn.eval_many(xs)
    budget = np.full_like(xs, fn.err_budget)
    return _csv(f"{var},value,err_budget", [xs, vals, budget])


def emit_figure_data(which, lo=None, hi=None, step=None):
    """Figure-ready CSV: scaled tau sums and their asymptotes."""
    b = get_bundle()
    if which == "fig1":
        lo = 1.0 if lo is None else float(lo)
        hi = 15.0 if hi is None else float(hi)
        step = 0.25 if step is None else float(step)
        us = _grid(lo, hi, step)
        xi = b.ratio.eval_many(us)
        om = b.buchstab.eval_many(us)
        mean = np.zeros_like(us)
        np.divide(xi, om, out=mean, where=om > 0)
        return _csv(
            "u,tau_scale,tau_scale_asymptote,tau_mean,tau_mean_asymptote",
            [
                us,
                xi,
                (us + 2.0) * EXP_NEG_2GAMMA,
                mean,
                (us + 2.0) * EXP_NEG_GAMMA,
            ],
        )
    if which == "fig2":
        lo = 0.0 if lo is None else float(lo)
        hi = 50.0 if hi is None else float(hi)
        step = 0.5 if step is None else float(step)
        vs = _grid(lo, hi, step)
        lam = b.growth.eval_many(vs)
        d, lam0, lam1 = growth_constants()
        approx = lam0 * (vs + 1.0) ** d + lam1 / (vs + 1.0)
        return _csv("v,growth,growth_approx", [vs, lam, approx])
    raise RangeError(f"unknown figure {which!r}")
