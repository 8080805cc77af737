"""
Quadrature engines
==================

Periodic trapezoid rules, an adaptive Gauss-Kronrod integrator for finite
intervals with endpoint singularities, tensor trapezoid rules for periodic
double integrals and a finite-part rule for integrals with a logarithmic
divergence.

All reductions go through :func:`math.fsum` (per component), so results do
not depend on the order in which nodes were evaluated.
"""
from __future__ import annotations

import math
import os
import warnings
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

__all__ = [
    "QuadConfig",
    "QuadResult",
    "QuadratureWarning",
    "QuadratureError",
    "default_config",
    "exact_sum",
    "periodic_trapezoid",
    "adaptive_interval",
    "adaptive_interval_info",
    "double_periodic",
    "finite_part_log",
]


class QuadratureWarning(RuntimeWarning):
    """Emitted when an adaptive rule stops before meeting its tolerance."""


class QuadratureError(RuntimeError):
    """Raised for inconsistent singular-integral data."""


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances shared by every quadrature routine.

    Parameters
    ----------
    rel_tol, abs_tol : float
        Relative and absolute targets for adaptive rules.
    max_depth : int
        Maximal bisection depth of a single subinterval.
    base_nodes : int
        Default node count for periodic rules and curve sampling.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_depth: int = 40
    base_nodes: int = 512

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be at least 1")
        if self.base_nodes < 4:
            raise ValueError("base_nodes too small")

    def tightened(self, factor: float = 100.0) -> "QuadConfig":
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)


def default_config() -> QuadConfig:
    """Configuration honouring the ``KNOTFLUX_DEFAULT_NODES`` variable."""
    raw = os.environ.get("KNOTFLUX_DEFAULT_NODES")
    if raw:
        return QuadConfig(base_nodes=int(raw))
    return QuadConfig()


@dataclass(frozen=True)
class QuadResult:
    value: np.ndarray | float
    error: float
    evaluations: int
    converged: bool


def exact_sum(values, axis: int = 0):
    """Correctly rounded sum along ``axis`` (scalar or per component)."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return float(arr)
    arr = np.moveaxis(arr, axis, 0)
    if arr.ndim == 1:
        return math.fsum(arr.tolist())
    flat = arr.reshape(arr.shape[0], -1)
    out = np.array([math.fsum(col) for col in flat.T.tolist()])
    return out.reshape(arr.shape[1:])


def _exact_sum_complex(values, axis=0):
    arr = np.asarray(values)
    if np.iscomplexobj(arr):
        return exact_sum(arr.real, axis) + 1j * exact_sum(arr.imag, axis)
    return exact_sum(arr, axis)


def periodic_trapezoid(f: Callable, period: float, n: int):
    """Trapezoid rule for a ``period``-periodic function on ``n`` nodes.

    ``f`` receives the node array ``s_i = i*period/n`` and returns values of
    shape ``(n,)`` or ``(n, d)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    s = period * np.arange(n) / n
    vals = np.asarray(f(s))
    return _exact_sum_complex(vals) * (period / n)


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KWEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GWEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes.
_GWEIGHTS[[1, 3, 5]] = _WG[:3]
_GWEIGHTS[[13, 11, 9]] = _WG[:3]
_GWEIGHTS[7] = _WG[3]


def _gk_batch(f, lo, hi, transform, a, b):
    """Apply the 15-point Kronrod rule to each interval of a batch."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    u = mid[:, None] + half[:, None] * _NODES[None, :]
    if transform:
        # smoothstep substitution flattens endpoint singularities
        x = a + (b - a) * u * u * (3.0 - 2.0 * u)
        jac = (b - a) * 6.0 * u * (1.0 - u)
    else:
        x = u
        jac = np.ones_like(u)
    vals = np.asarray(f(x.ravel()), dtype=float)
    vals = vals.reshape(u.shape + vals.shape[1:])
    if vals.ndim == 2:
        vals = vals[:, :, None]
    vals = vals * jac[:, :, None]
    kron = np.einsum("j,ijk->ik", _KWEIGHTS, vals) * half[:, None]
    gauss = np.einsum("j,ijk->ik", _GWEIGHTS, vals) * half[:, None]
    mean = kron / (2.0 * half[:, None])
    resasc = np.einsum("j,ijk->i", _KWEIGHTS, np.abs(vals - mean[:, None, :])) * half
    resabs = np.einsum("j,ijk->i", _KWEIGHTS, np.abs(vals)) * half
    diff = np.max(np.abs(kron - gauss), axis=1)
    err = diff.copy()
    pos = resasc > 0
    err[pos] = resasc[pos] * np.minimum(1.0, (200.0 * diff[pos] / resasc[pos]) ** 1.5)
    floor = 50.0 * np.finfo(float).eps * resabs
    err = np.maximum(err, floor)
    return kron, err


def adaptive_interval_info(f: Callable, a: float, b: float, cfg: QuadConfig | None = None,
                           *, breakpoints=(), transform: bool = True,
                           initial_pieces: int = 1) -> QuadResult:
    """Adaptive Gauss-Kronrod integration of ``f`` over ``[a, b]``.

    Parameters
    ----------
    f : callable
        Vectorised integrand: maps an array of points to values of shape
        ``(m,)`` or ``(m, d)``.
    a, b : float
        Integration limits, ``a < b``.
    cfg : QuadConfig, optional
    breakpoints : sequence of float
        Interior points where the integrand is known to be rough; each
        segment is integrated with its own endpoint substitution.
    transform : bool
        Apply the substitution ``x = a + (b-a)(3u^2 - 2u^3)`` per segment,
        which removes ``|x-a|^{-1/2}`` type endpoint singularities.
    initial_pieces : int
        Number of equal pieces each segment starts with.

    Returns
    -------
    QuadResult

    Notes
    -----
    Endpoint singularities up to ``|x-a|^{-0.6}`` reach the default tolerance.
    Stronger ones exhaust the depth budget and come back with
    ``converged=False``; the error estimate remains a bound up to about
    ``|x-a|^{-0.9}``.  Integrands closer to the non-integrable limit should be
    regularised by a change of variables first.
    """
    cfg = cfg or default_config()
    if not b > a:
        raise ValueError("need a < b")
    cuts = [a] + sorted(p for p in breakpoints if a < p < b) + [b]
    seg_lo, seg_hi, lo, hi, depth = [], [], [], [], []
    for sa, sb in zip(cuts[:-1], cuts[1:]):
        for j in range(initial_pieces):
            seg_lo.append(sa)
            seg_hi.append(sb)
            if transform:
                lo.append(j / initial_pieces)
                hi.append((j + 1) / initial_pieces)
            else:
                lo.append(sa + (sb - sa) * j / initial_pieces)
                hi.append(sa + (sb - sa) * (j + 1) / initial_pieces)
            depth.append(0)
    seg_lo = np.array(seg_lo)
    seg_hi = np.array(seg_hi)
    lo = np.array(lo)
    hi = np.array(hi)
    depth = np.array(depth)

    def evaluate(idx_lo, idx_hi, sa, sb):
        if transform:
            # one call per distinct segment keeps the substitution per segment
            kron = []
            err = []
            for key in np.unique(np.stack([sa, sb], axis=1), axis=0):
                sel = (sa == key[0]) & (sb == key[1])
                k, e = _gk_batch(f, idx_lo[sel], idx_hi[sel], True, key[0], key[1])
                kron.append((np.nonzero(sel)[0], k, e))
            d = kron[0][1].shape[1]
            K = np.empty((len(idx_lo), d))
            E = np.empty(len(idx_lo))
            for pos, k, e in kron:
                K[pos] = k
                E[pos] = e
            return K, E
        return _gk_batch(f, idx_lo, idx_hi, False, 0.0, 1.0)

    kron, err = evaluate(lo, hi, seg_lo, seg_hi)
    evals = 15 * len(lo)
    done_val = []
    done_err = []
    converged = True
    while True:
        total = exact_sum(np.concatenate(done_val + [kron]))
        tot_err = math.fsum(np.concatenate(done_err + [err]).tolist())
        tol = max(cfg.abs_tol, cfg.rel_tol * float(np.max(np.abs(total))))
        if tot_err <= tol:
            break
        splittable = depth < cfg.max_depth
        if not np.any(splittable):
            converged = False
            break
        # retire intervals that cannot be split any further
        stuck = ~splittable
        if np.any(stuck):
            done_val.append(kron[stuck])
            done_err.append(err[stuck])
            keep = splittable
            lo, hi, depth, kron, err = lo[keep], hi[keep], depth[keep], kron[keep], err[keep]
            seg_lo, seg_hi = seg_lo[keep], seg_hi[keep]
        retired_err = math.fsum(np.concatenate(done_err).tolist()) if done_err else 0.0
        if retired_err > tol:
            converged = False
            break
        # split the largest contributors until the remainder is below tol/2
        order = np.lexsort((np.arange(len(err)), -err))
        csum = np.cumsum(err[order][::-1])[::-1]
        budget = 0.5 * (tol - retired_err)
        nsplit = int(np.sum(csum > budget))
        nsplit = max(nsplit, 1)
        chosen = np.zeros(len(err), dtype=bool)
        chosen[order[:nsplit]] = True
        keep = ~chosen
        # retire accurate intervals to keep the working set small
        done_val.append(kron[keep])
        done_err.append(err[keep])
        mid = 0.5 * (lo[chosen] + hi[chosen])
        new_lo = np.concatenate([lo[chosen], mid])
        new_hi = np.concatenate([mid, hi[chosen]])
        new_depth = np.concatenate([depth[chosen], depth[chosen]]) + 1
        new_sa = np.concatenate([seg_lo[chosen], seg_lo[chosen]])
        new_sb = np.concatenate([seg_hi[chosen], seg_hi[chosen]])
        lo, hi, depth, seg_lo, seg_hi = new_lo, new_hi, new_depth, new_sa, new_sb
        kron, err = evaluate(lo, hi, seg_lo, seg_hi)
        evals += 15 * len(lo)
    value = total if np.ndim(total) else float(total)
    if np.ndim(value) and np.size(value) == 1:
        value = float(np.ravel(value)[0])
    return QuadResult(value=value, error=tot_err, evaluations=evals, converged=converged)


def adaptive_interval(f: Callable, a: float, b: float, cfg: QuadConfig | None = None, **kw):
    """Value of :func:`adaptive_interval_info`; warns when not converged."""
    res = adaptive_interval_info(f, a, b, cfg, **kw)
    if not res.converged:
        warnings.warn(f"adaptive quadrature stopped at error estimate {res.error:.3e}",
                      QuadratureWarning, stacklevel=2)
    return res.value


def double_periodic(f2: Callable, period: float, n: int, diagonal=0.0, block: int = 256):
    """Tensor trapezoid rule over ``[0, period)^2``.

    ``f2(s1, s2)`` is called with broadcastable arrays of shapes ``(m, 1)``
    and ``(1, n)``; the diagonal entries are replaced by ``diagonal``.
    """
    s = period * np.arange(n) / n
    rows = []
    for start in range(0, n, block):
        i = np.arange(start, min(start + block, n))
        vals = np.array(f2(s[i][:, None], s[None, :]), dtype=float)
        vals[np.arange(len(i)), i] = diagonal
        rows.append(vals.sum(axis=1))
    return math.fsum(np.concatenate(rows).tolist()) * (period / n) ** 2


def finite_part_log(f: Callable, s0: float, c_log, a: float, b: float,
                    cfg: QuadConfig | None = None, *, check: bool = True):
    """Log-regularised integral of ``f`` over ``[a, b]`` around ``s0``.

    Returns ``lim_{eps->0} [ int_{|s-s0|>=eps} f ds + log(eps) * c_log ]``
    for integrands behaving like ``c_log / (2|s - s0|)`` near ``s0``.

    The singular part is removed analytically on the symmetric window
    ``|s - s0| <= w`` with ``w = min(s0 - a, b - s0)``; the bounded remainder
    is integrated adaptively on each side.
    """
    cfg = cfg or default_config()
    c_log = np.asarray(c_log, dtype=float)
    if not a <= s0 <= b:
        raise ValueError("s0 outside the integration interval")
    w = min(s0 - a, b - s0)
    if w <= 0:
        raise ValueError("s0 must be interior")
    scale = float(np.max(np.abs(c_log))) if c_log.size else 0.0

    def as2d(v):
        v = np.asarray(v, dtype=float)
        return v.reshape(v.shape[0], -1)

    if check:
        u = w * np.array([1e-4, 3e-4])
        pair = as2d(f(np.concatenate([s0 + u, s0 - u])))
        est = (pair[:2] + pair[2:]) * u[:, None]
        ref = np.broadcast_to(c_log.reshape(1, -1), est.shape)
        mismatch = np.max(np.abs(est[0] - ref[0]))
        drift = np.max(np.abs(est[0] - est[1]))
        tol = 0.05 * max(scale, 1e-300) + 10 * drift
        if scale == 0.0:
            tol = max(tol, 1e-6 * float(np.max(np.abs(pair))) * w)
        if mismatch > tol:
            raise QuadratureError("log coefficient of the integrand does not match c_log")

    def regular(side):
        def g(x):
            vals = as2d(f(x))
            dist = np.abs(x - s0)
            zero = dist == 0
            dist[zero] = 1.0
            out = vals - c_log.reshape(1, -1) / (2.0 * dist[:, None])
            # the substitution Jacobian vanishes there anyway
            out[zero] = 0.0
            return out
        return g

    left = adaptive_interval(regular(-1), s0 - w, s0, cfg)
    right = adaptive_interval(regular(1), s0, s0 + w, cfg)
    parts = [np.atleast_1d(left), np.atleast_1d(right), np.atleast_1d(c_log * math.log(w))]
    if s0 - w > a:
        parts.append(np.atleast_1d(adaptive_interval(lambda x: as2d(f(x)), a, s0 - w, cfg)))
    if s0 + w < b:
        parts.append(np.atleast_1d(adaptive_interval(lambda x: as2d(f(x)), s0 + w, b, cfg)))
    total = exact_sum(np.stack(parts))
    if c_log.ndim == 0 and np.size(total) == 1:
        return float(np.ravel(total)[0])
    return total
