"""Recover an explicit exponential polynomial from samples on a box.

Pipeline: along each axis find the minimal annihilating polynomial of the
shift operator from stacked Hankel rows, read off roots and multiplicities,
split the samples into per-root components with partial-fraction projectors
and recurse on the next axis. The leaves give witness tuples; coefficients
come from a weighted least-squares fit, optionally polished by variable
projection on the witnesses.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import least_squares

from . import _kernels
from .diffops import Box, InsufficientBox, SampledFunction
from .exppoly import ExpPoly, ExpTerm, Witness, evaluate, normalize
from .scalar import GaussianRational, scalar_to_json

__all__ = [
    "RecoveryConfig",
    "Decomposition",
    "NoAnnihilator",
    "IllConditionedProjection",
    "section_annihilator",
    "annihilator_roots",
    "apply_polynomial",
    "split_spectrum",
    "recover",
    "exact_lift",
]

# a cluster merge beyond cluster_tol is only considered below this distance
_MERGE_RADIUS = 1e-2
# recovery moves to a higher annihilator degree when sigma_min drops this much
_DEGREE_GAP = 1e3
# ratios below this are rounding noise, not a near-dependence
_NOISE_FLOOR = 1e-12
_LIFT_DENOMINATOR = 64
_LIFT_TOL = 1e-9


class NoAnnihilator(ValueError):
    """No annihilating polynomial of degree <= max_order within rank_tol."""


class IllConditionedProjection(ValueError):
    """The partial-fraction system is too ill-conditioned to trust."""


@dataclass(frozen=True)
class RecoveryConfig:
    max_order: int = 8
    rank_tol: float = 1e-9
    cluster_tol: float = 1e-6
    residual_tol: float = 1e-8
    refine: bool = True
    exact_lift: bool = True

    def __post_init__(self):
        if int(self.max_order) != self.max_order or self.max_order < 1:
            raise ValueError("max_order must be an integer >= 1")
        for name in ("rank_tol", "cluster_tol", "residual_tol"):
            v = getattr(self, name)
            if not (v > 0 and np.isfinite(v)):
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "max_order", int(self.max_order))

    def to_json(self) -> dict:
        return {
            "max_order": self.max_order,
            "rank_tol": self.rank_tol,
            "cluster_tol": self.cluster_tol,
            "residual_tol": self.residual_tol,
        }


# ---------------------------------------------------------------------------
# sections and annihilators


def _direction(dim: int, direction) -> tuple[int, ...]:
    if isinstance(direction, (int, np.integer)):
        axis = int(direction)
        if not 0 <= axis < dim:
            raise ValueError(f"axis {axis} out of range for dimension {dim}")
        return tuple(1 if i == axis else 0 for i in range(dim))
    h = tuple(int(v) for v in direction)
    if len(h) != dim:
        raise ValueError("direction dimension differs from samples")
    if not any(h):
        raise ValueError("direction must be nonzero")
    return h


def _unit_axis(h) -> int | None:
    nz = [i for i, v in enumerate(h) if v]
    if len(nz) == 1 and h[nz[0]] == 1:
        return nz[0]
    return None


def _sections(vals: np.ndarray, scales: np.ndarray, h) -> list[tuple[np.ndarray, np.ndarray]]:
    """Maximal lines ``x, x+h, x+2h, ...`` in the box, grouped by length."""
    axis = _unit_axis(h)
    if axis is not None:
        L = vals.shape[axis]
        sec = np.moveaxis(vals, axis, -1).reshape(-1, L)
        sc = np.moveaxis(scales, axis, -1).reshape(-1, L)
        return [(sec, sc)]
    shape = vals.shape
    h = np.asarray(h)
    groups: dict[int, list] = {}
    for x in np.ndindex(*shape):
        prev = np.asarray(x) - h
        if np.all(prev >= 0) and np.all(prev < shape):
            continue
        line = []
        cur = np.asarray(x)
        while np.all(cur >= 0) and np.all(cur < shape):
            line.append(tuple(cur))
            cur = cur + h
        groups.setdefault(len(line), []).append(line)
    out = []
    for L in sorted(groups, reverse=True):
        arr = np.array(groups[L])  # (lines, L, ndim)
        idx = tuple(arr[..., i] for i in range(vals.ndim))
        out.append((vals[idx], scales[idx]))
    return out


def _stacked_rows(groups, r: int) -> np.ndarray:
    blocks = [
        _kernels.hankel_rows(sec, r, sc) for sec, sc in groups if sec.shape[1] > r
    ]
    blocks = [b for b in blocks if b.shape[0]]
    if not blocks:
        return np.zeros((0, r + 1), dtype=np.complex128)
    return np.vstack(blocks)


def _prepare(s: SampledFunction, scales=None):
    s = s.to_float()
    vals = np.asarray(s.values, dtype=np.complex128)
    sc = np.abs(vals) if scales is None else np.abs(np.asarray(scales, dtype=np.float64))
    return s, vals, sc


def _annihilator(groups, max_order: int, rank_tol: float, gap: float | None = None) -> np.ndarray:
    """Minimal tolerated annihilator; with ``gap`` set, a later degree whose
    smallest singular value is ``gap`` times smaller replaces it (a nearly
    dependent pair of exponentials can pass the rank test one degree early).
    A ratio already at the rounding floor is never replaced.
    """
    found = None
    for r in range(max_order + 1):
        H = _stacked_rows(groups, r)
        if H.shape[0] == 0:
            return np.ones(1, dtype=np.complex128)
        if r == 0:
            if float(np.max(np.abs(H))) <= rank_tol:
                return np.ones(1, dtype=np.complex128)
            continue
        if H.shape[0] < r + 1:
            if found is not None:
                break
            raise InsufficientBox("too few Hankel rows for the requested degree")
        _, sv, vh = np.linalg.svd(H, full_matrices=False)
        ratio = sv[-1] / sv[0]
        if found is None:
            if ratio <= rank_tol:
                found = (ratio, vh[-1].conj())
                if gap is None:
                    break
        elif found[0] > _NOISE_FLOOR and ratio * gap < found[0]:
            found = (ratio, vh[-1].conj())
    if found is None:
        raise NoAnnihilator(f"no annihilator of degree <= {max_order} within rank_tol={rank_tol}")
    v = found[1]
    return v / v[-1]


def section_annihilator(s: SampledFunction, direction, cfg: RecoveryConfig, scales=None) -> np.ndarray:
    """Minimal monic ``q`` (coefficients lowest degree first) with ``q(S_h) s = 0``.

    ``direction`` is an axis index or a shift vector ``h``. Every maximal line
    of the box along ``h`` contributes Hankel rows; each row is divided by the
    norm of the matching window of ``scales`` (default ``|s|``), which sets
    the noise level the rank test is measured against. Zero samples give
    ``[1]``.
    """
    s, vals, sc = _prepare(s, scales)
    h = _direction(s.dim, direction)
    groups = _sections(vals, sc, h)
    longest = max(sec.shape[1] for sec, _ in groups)
    if longest < 2 * cfg.max_order + 1:
        raise InsufficientBox(
            f"longest section along {h} has {longest} points; need {2 * cfg.max_order + 1}"
        )
    return _annihilator(groups, cfg.max_order, cfg.rank_tol)


def _residual_ratio(groups, q: np.ndarray) -> float:
    """``|H q| / (|q| * sigma_max(H))`` for the Hankel rows of width ``len(q)``."""
    H = _stacked_rows(groups, len(q) - 1)
    if H.shape[0] == 0:
        return 0.0
    smax = np.linalg.norm(H, 2)
    if smax == 0:
        return 0.0
    return float(np.linalg.norm(H @ q) / (np.linalg.norm(q) * smax))


def _poly_from_roots(clusters) -> np.ndarray:
    rts = [c for c, m in clusters for _ in range(m)]
    return np.poly(rts)[::-1].astype(np.complex128) if rts else np.ones(1, dtype=np.complex128)


def _root_key(z: complex):
    return (round(z.real, 12), round(z.imag, 12))


def _cluster(roots, cluster_tol: float) -> list[list]:
    """Greedy union of roots lying within ``cluster_tol`` (scaled by ``max(1, |z|)``)."""
    roots = sorted((complex(z) for z in roots), key=_root_key)
    parent = list(range(len(roots)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(len(roots)), 2):
        if abs(roots[i] - roots[j]) <= cluster_tol * max(1.0, abs(roots[i])):
            parent[find(j)] = find(i)
    members: dict[int, list] = {}
    for i, z in enumerate(roots):
        members.setdefault(find(i), []).append(z)
    return [[sum(v) / len(v), len(v)] for v in members.values()]


def _linkage(clusters, t: float) -> list[list]:
    """Single-linkage groups of clusters at distance ``t``, weighted centroids."""
    n = len(clusters)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            i = parent[i]
        return i

    for i, j in itertools.combinations(range(n), 2):
        if abs(clusters[i][0] - clusters[j][0]) <= t:
            parent[find(j)] = find(i)
    groups: dict[int, list] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(clusters[i])
    out = []
    for members in groups.values():
        m = sum(c[1] for c in members)
        out.append([sum(c[0] * c[1] for c in members) / m, m])
    return out


def _merge_confluent(clusters, groups, rank_tol: float) -> list[list]:
    """Merge clusters that a multiple root has split apart.

    A root of multiplicity ``m`` comes back from the companion matrix spread
    over a radius near ``eps**(1/m)``, which can exceed ``cluster_tol``.
    Candidate structures are the single-linkage levels up to a small radius;
    the coarsest one whose polynomial still annihilates the sections within
    ``rank_tol`` wins.
    """
    scale = max(1.0, max(abs(c[0]) for c in clusters))
    dists = sorted(
        {abs(a[0] - b[0]) for a, b in itertools.combinations(clusters, 2)}
    )
    best = clusters
    for t in dists:
        if t > _MERGE_RADIUS * scale:
            break
        trial = _linkage(clusters, t)
        if len(trial) < len(best) and _residual_ratio(groups, _poly_from_roots(trial)) <= rank_tol:
            best = trial
    return [list(c) for c in best]


def _snap_real(z: complex) -> complex:
    if abs(z.imag) <= 1e-13 * max(1.0, abs(z.real)):
        return complex(z.real, 0.0)
    return z


def annihilator_roots(q, s: SampledFunction | None = None, direction=None,
                      cfg: RecoveryConfig | None = None, scales=None) -> list[tuple[complex, int]]:
    """Distinct roots of ``q`` with multiplicities, sorted by ``(re, im)``.

    Roots are companion-matrix eigenvalues clustered within ``cluster_tol``.
    When the samples are supplied, nearby clusters are further merged if the
    merged polynomial still annihilates them.
    """
    cfg = cfg or RecoveryConfig()
    q = np.asarray(q, dtype=np.complex128)
    if len(q) <= 1:
        return []
    clusters = _cluster(np.roots(q[::-1]), cfg.cluster_tol)
    if s is not None and direction is not None and len(clusters) > 1:
        s, vals, sc = _prepare(s, scales)
        groups = _sections(vals, sc, _direction(s.dim, direction))
        clusters = _merge_confluent(clusters, groups, cfg.rank_tol)
    out = [(_snap_real(complex(c)), int(m)) for c, m in clusters]
    out.sort(key=lambda p: (p[0].real, p[0].imag))
    return out


def apply_polynomial(s: SampledFunction, q, direction) -> SampledFunction:
    """``(q(S_h) s)(x) = sum_k q_k s(x + k h)`` on the box where it is defined."""
    h = _direction(s.dim, direction)
    q = list(q)
    deg = len(q) - 1
    out_box = s.box.shrink(h, deg)
    if out_box.empty:
        raise InsufficientBox(f"box too small for a degree {deg} polynomial along {h}")
    shape = out_box.shape
    acc = None
    for k, c in enumerate(q):
        start = [ol - l + k * v for ol, l, v in zip(out_box.lo, s.lo, h)]
        window = s.values[tuple(slice(a, a + n) for a, n in zip(start, shape))]
        term = window * c
        acc = term if acc is None else acc + term
    return SampledFunction(s.dim, out_box.lo, out_box.hi, acc)


# ---------------------------------------------------------------------------
# spectral splitting along one axis


def _projectors(roots, rank_tol: float) -> list[np.ndarray]:
    """``P_j = a_j Q_j`` with ``sum_j a_j Q_j = 1`` and ``deg a_j < m_j``.

    ``Q_j`` is the product of ``(x - c_i)**m_i`` over ``i != j``. Coefficient
    arrays are lowest degree first, padded to the total degree.
    """
    D = sum(m for _, m in roots)
    Qs = []
    for j in range(len(roots)):
        others = [(c, m) for i, (c, m) in enumerate(roots) if i != j]
        Qs.append(_poly_from_roots(others))
    M = np.zeros((D, D), dtype=np.complex128)
    col = 0
    for (c, m), Q in zip(roots, Qs):
        for i in range(m):
            M[i : i + len(Q), col] = Q
            col += 1
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1.0 / rank_tol:
        raise IllConditionedProjection(f"partial-fraction system condition {cond:.3g}")
    rhs = np.zeros(D, dtype=np.complex128)
    rhs[0] = 1.0
    a = np.linalg.solve(M, rhs)
    out, col = [], 0
    for (c, m), Q in zip(roots, Qs):
        P = np.convolve(a[col : col + m], Q)
        col += m
        full = np.zeros(D, dtype=np.complex128)
        full[: min(D, len(P))] = P[:D]
        out.append(full)
    return out


def _filter(vals: np.ndarray, P: np.ndarray, axis: int) -> np.ndarray:
    n = vals.shape[axis] - (len(P) - 1)
    acc = np.zeros(vals.shape[:axis] + (n,) + vals.shape[axis + 1 :], dtype=np.result_type(vals, P))
    for k, c in enumerate(P):
        if c != 0:
            acc += c * np.take(vals, np.arange(k, k + n), axis=axis)
    return acc


def _split_arrays(vals, scales, axis, roots, rank_tol):
    if len(roots) == 1:
        return [(vals, scales)]
    D = sum(m for _, m in roots)
    if vals.shape[axis] < D:
        raise InsufficientBox("box too short along the split axis")
    out = []
    for P in _projectors(roots, rank_tol):
        out.append((_filter(vals, P, axis), _filter(scales, np.abs(P), axis)))
    return out


def split_spectrum(s: SampledFunction, direction: int, roots, cfg: RecoveryConfig,
                   scales=None) -> list[SampledFunction]:
    """Per-root components of ``s`` along an axis.

    Component ``j`` is ``P_j(S) s`` where the ``P_j`` are the partial-fraction
    projectors of the annihilator; they sum to the identity, so the components
    sum to ``s`` on the box shrunk by ``deg q - 1`` along the axis.
    """
    if not isinstance(direction, (int, np.integer)):
        raise ValueError("split_spectrum works along a coordinate axis")
    s, vals, sc = _prepare(s, scales)
    axis = int(direction)
    _direction(s.dim, axis)
    roots = [(complex(c), int(m)) for c, m in roots]
    if not roots:
        return []
    parts = _split_arrays(vals, sc, axis, roots, cfg.rank_tol)
    D = sum(m for _, m in roots) if len(roots) > 1 else 1
    hi = list(s.hi)
    hi[axis] -= D - 1
    return [SampledFunction(s.dim, s.lo, tuple(hi), v) for v, _ in parts]


# ---------------------------------------------------------------------------
# full recovery


@dataclass
class Decomposition:
    result: ExpPoly
    roots: list
    residual: float
    relative_residual: float
    success: bool
    flags: list = field(default_factory=list)
    exact: ExpPoly | None = None

    def to_json(self) -> dict:
        return {
            "result": self.result.to_json(),
            "roots": [
                [{"value": scalar_to_json(c), "multiplicity": m} for c, m in axis]
                for axis in self.roots
            ],
            "residual": self.residual,
            "relative_residual": self.relative_residual,
            "success": self.success,
            "flags": list(self.flags),
            "exact": self.exact.to_json() if self.exact is not None else None,
        }


class _AxisRoots:
    def __init__(self, dim, tol):
        self.tol = tol
        self.found = [[] for _ in range(dim)]

    def note(self, axis, roots):
        bucket = self.found[axis]
        for c, m in roots:
            for entry in bucket:
                if abs(entry[0] - c) <= self.tol * max(1.0, abs(c)):
                    entry[1] = max(entry[1], m)
                    break
            else:
                bucket.append([c, m])

    def as_list(self):
        return [
            sorted(((c, m) for c, m in b), key=lambda p: (p[0].real, p[0].imag))
            for b in self.found
        ]


def _axis_roots(vals, scales, axis, cfg):
    groups = _sections(vals, scales, _direction(vals.ndim, axis))
    q = _annihilator(groups, cfg.max_order, cfg.rank_tol, gap=_DEGREE_GAP)
    if len(q) == 1:
        return []
    clusters = _cluster(np.roots(q[::-1]), cfg.cluster_tol)
    if len(clusters) > 1:
        clusters = _merge_confluent(clusters, groups, cfg.rank_tol)
    out = [(_snap_real(complex(c)), int(m)) for c, m in clusters]
    out.sort(key=lambda p: (p[0].real, p[0].imag))
    return out


def _leaves(vals, scales, axis, cfgs, seen, flags, prefix=()):
    d = vals.ndim
    roots = _axis_roots(vals, scales, axis, cfgs[axis])
    seen.note(axis, roots)
    if axis == d - 1:
        return [prefix + ((c, m),) for c, m in roots]
    try:
        parts = _split_arrays(vals, scales, axis, roots, cfgs[axis].rank_tol)
    except IllConditionedProjection:
        if "projection-fallback" not in flags:
            flags.append("projection-fallback")
        rest = []
        for k in range(axis + 1, d):
            rk = _axis_roots(vals, scales, k, cfgs[k])
            seen.note(k, rk)
            rest.append(rk)
        return [prefix + (r,) + tail for r in roots for tail in itertools.product(*rest)]
    out = []
    for r, (v, sc) in zip(roots, parts):
        out.extend(_leaves(v, sc, axis + 1, cfgs, seen, flags, prefix + (r,)))
    return out


def _grid(s: SampledFunction):
    axes = [np.arange(l, h + 1, dtype=np.float64) for l, h in zip(s.lo, s.hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


class _Model:
    """Columns ``n**alpha * lam**n`` for each witness over the sample grid."""

    def __init__(self, pts: np.ndarray, supports: list):
        self.pts = pts
        self.supports = supports  # per witness, list of multi-indices
        grow = np.maximum(1.0, np.abs(pts))
        self.mono = []
        self.bound = []
        for sup in supports:
            ex = [np.asarray(a, dtype=np.float64) for a in sup]
            self.mono.append(np.stack([np.prod(pts**a, axis=1) for a in ex], axis=1))
            self.bound.append(np.stack([np.prod(grow**a, axis=1) for a in ex], axis=1))

    def _bases(self, lams):
        return [np.exp(self.pts @ np.log(lam.astype(np.complex128))) for lam in lams]

    def columns(self, lams: np.ndarray) -> np.ndarray:
        return np.concatenate([m * b[:, None] for m, b in zip(self.mono, self._bases(lams))], axis=1)

    def envelope(self, lams: np.ndarray, c: np.ndarray | None = None) -> np.ndarray:
        """Pointwise bound ``sum |c| max(1,|n|)**alpha |lam**n|``; never zero."""
        bound = np.concatenate(
            [m * np.abs(b)[:, None] for m, b in zip(self.bound, self._bases(lams))], axis=1
        )
        weights = np.ones(bound.shape[1]) if c is None else np.abs(c)
        env = bound @ weights
        if not np.any(env > 0):
            env = bound.sum(axis=1)
        return np.maximum(env, np.finfo(float).tiny)


def _solve(B, y, w):
    Bw = B * w[:, None]
    norms = np.linalg.norm(Bw, axis=0)
    norms[norms == 0] = 1.0
    c, *_ = np.linalg.lstsq(Bw / norms, y * w, rcond=None)
    return c / norms


def _fit(model: _Model, lams, y, w):
    B = model.columns(lams)
    c = _solve(B, y, w)
    return c, B


def _refine(model: _Model, lams: np.ndarray, y: np.ndarray, w: np.ndarray) -> np.ndarray:
    shape = lams.shape

    def resid(x):
        lam = (x[: x.size // 2] + 1j * x[x.size // 2 :]).reshape(shape)
        if np.any(lam == 0):
            return np.full(2 * y.size, 1e300)
        B = model.columns(lam)
        c = _solve(B, y, w)
        r = (y - B @ c) * w
        return np.concatenate([r.real, r.imag])

    x0 = np.concatenate([lams.real.ravel(), lams.imag.ravel()])
    sol = least_squares(resid, x0, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200 * x0.size)
    if np.linalg.norm(sol.fun) <= np.linalg.norm(resid(x0)):
        x = sol.x
        return (x[: x.size // 2] + 1j * x[x.size // 2 :]).reshape(shape)
    return lams


def _clean(z: complex) -> complex:
    z = complex(z)
    re = 0.0 if abs(z.real) <= 1e-13 * abs(z) else z.real
    im = 0.0 if abs(z.imag) <= 1e-13 * abs(z) else z.imag
    return complex(re, im)


def recover(s: SampledFunction, cfg: RecoveryConfig | None = None) -> Decomposition:
    """Decompose samples into a float ExpPoly.

    ``max_order`` is capped per axis at ``(L - 1) // 2`` for box length ``L``
    (flag ``max-order-capped``). When every witness and coefficient lies
    within ``1e-9`` of a Gaussian rational with denominator at most 64 and
    the snapped function still fits, it replaces the float fit (flag
    ``exact-lift``; the exact form is kept in ``exact``). Success means the reconstruction error
    relative to ``max(1, max|s|)`` is at most ``residual_tol``; ``residual``
    is the absolute maximum error against the original samples.
    """
    cfg = cfg or RecoveryConfig()
    s = s.to_float()
    d = s.dim
    flags: list[str] = []
    scale = s.max_abs()
    if scale == 0:
        return Decomposition(ExpPoly.zero(d), [[] for _ in range(d)], 0.0, 0.0, True, flags)
    cfgs = []
    for L in s.box.shape:
        cap = (L - 1) // 2
        if cap < 1:
            raise InsufficientBox(f"box length {L} is too short to recover anything")
        if cap < cfg.max_order:
            if "max-order-capped" not in flags:
                flags.append("max-order-capped")
            cfgs.append(replace(cfg, max_order=cap))
        else:
            cfgs.append(cfg)

    vals = np.asarray(s.values)
    seen = _AxisRoots(d, cfg.cluster_tol)
    leaves = _leaves(vals, np.abs(vals), 0, cfgs, seen, flags)

    lams = np.array([[c for c, _ in leaf] for leaf in leaves], dtype=np.complex128).reshape(-1, d)
    supports = [list(itertools.product(*(range(m) for _, m in leaf))) for leaf in leaves]
    pts = _grid(s)
    y = vals.ravel()

    result, lams = _fit_and_prune(pts, y, lams, supports, cfg, flags)
    residual = float(np.max(np.abs(_evaluate_grid(result, s) - y)))
    lifted = exact_lift(result, s, cfg) if cfg.exact_lift else None
    if lifted is not None:
        snapped = lifted.to_float()
        res_l = float(np.max(np.abs(_evaluate_grid(snapped, s) - y)))
        if res_l <= residual:
            result, residual = snapped, res_l
            flags.append("exact-lift")
    rel = residual / max(1.0, scale)
    success = rel <= cfg.residual_tol
    if not success:
        flags.append("residual-exceeded")
    return Decomposition(result, seen.as_list(), residual, rel, success, flags, lifted)


def _restrict(lams, supports, active):
    pos, new_lams, new_supports = 0, [], []
    for lam, sup in zip(lams, supports):
        kept = [a for k, a in enumerate(sup) if active[pos + k]]
        pos += len(sup)
        if kept:
            new_lams.append(lam)
            new_supports.append(kept)
    return np.array(new_lams, dtype=np.complex128).reshape(-1, lams.shape[1]), new_supports


def _weighted_fit(pts, y, lams, supports):
    model = _Model(pts, supports)
    c, B = _fit(model, lams, y, 1.0 / model.envelope(lams))
    w = 1.0 / model.envelope(lams, c)
    c, B = _fit(model, lams, y, w)
    return model, c, B, w


def _fit_and_prune(pts, y, lams, supports, cfg, flags):
    """Fit, drop columns the data does not need, refit and optionally refine.

    Columns are visited from least to most significant; one is dropped when
    refitting without it keeps the weighted residual within ten times the
    full fit's (or ``residual_tol / 10``).
    """
    d = pts.shape[1]
    if len(lams) == 0:
        return ExpPoly.zero(d), lams
    model, c, B, w = _weighted_fit(pts, y, lams, supports)
    full = float(np.max(np.abs(y - B @ c) * w))
    thr = max(10.0 * full, 0.1 * cfg.residual_tol)
    signif = np.max(np.abs(B * c[None, :]) * w[:, None], axis=0)
    active = np.ones(B.shape[1], dtype=bool)
    for j in np.argsort(signif, kind="stable"):
        trial = active.copy()
        trial[j] = False
        if not trial.any():
            continue
        ct = _solve(B[:, trial], y, w)
        if float(np.max(np.abs(y - B[:, trial] @ ct) * w)) <= thr:
            active = trial
    if not active.all():
        lams, supports = _restrict(lams, supports, active)
        model, c, B, w = _weighted_fit(pts, y, lams, supports)
    rel = np.max(np.abs(y - B @ c)) / max(1.0, np.max(np.abs(y)))
    if cfg.refine and rel > 1e-3 * cfg.residual_tol:
        refined = _refine(model, lams, y, w)
        c2, B2 = _fit(model, refined, y, w)
        rel2 = np.max(np.abs(y - B2 @ c2)) / max(1.0, np.max(np.abs(y)))
        if rel2 < rel:
            lams, c, B = refined, c2, B2
            flags.append("refined")
    terms, pos = [], 0
    for lam, sup in zip(lams, supports):
        coeffs = {}
        for a in sup:
            v = _clean(c[pos])
            pos += 1
            if v != 0:
                coeffs[tuple(int(t) for t in a)] = v
        if coeffs:
            terms.append(ExpTerm(Witness(tuple(_clean(z) for z in lam)), coeffs))
    return normalize(ExpPoly(d, tuple(terms)), merge_tol=cfg.cluster_tol), lams


def _evaluate_grid(f: ExpPoly, s: SampledFunction) -> np.ndarray:
    from .diffops import sample

    if not f.terms:
        return np.zeros(s.values.size, dtype=np.complex128)
    return np.asarray(sample(f, s.lo, s.hi, exact_values=False).values).ravel()


# ---------------------------------------------------------------------------
# optional exact lift


def _snap(x: float, tol: float) -> Fraction | None:
    fr = Fraction(x).limit_denominator(_LIFT_DENOMINATOR)
    return fr if abs(float(fr) - x) <= tol * max(1.0, abs(x)) else None


def _snap_complex(z: complex, tol: float) -> GaussianRational | None:
    re, im = _snap(z.real, tol), _snap(z.imag, tol)
    if re is None or im is None:
        return None
    return GaussianRational(re, im)


def exact_lift(f: ExpPoly, s: SampledFunction, cfg: RecoveryConfig | None = None) -> ExpPoly | None:
    """Snap witnesses and coefficients to Gaussian rationals, then re-verify.

    Returns None if anything fails to snap within ``1e-9`` or if the lifted
    function does not reproduce the samples (exactly for exact samples,
    within ``residual_tol`` relative otherwise).
    """
    cfg = cfg or RecoveryConfig()
    terms = []
    for t in f.terms:
        lam = [_snap_complex(complex(z), _LIFT_TOL) for z in t.witness.lam]
        if any(v is None or not v for v in lam):
            return None
        coeffs = {}
        for a, c in t.coeffs.items():
            v = _snap_complex(complex(c), _LIFT_TOL)
            if v is None:
                return None
            if v:
                coeffs[a] = v
        if coeffs:
            terms.append(ExpTerm(Witness(tuple(lam)), coeffs))
    g = normalize(ExpPoly(f.dim, tuple(terms)))
    bound = cfg.residual_tol * max(1.0, s.max_abs())
    for x in s.box.points():
        v = evaluate(g, x)
        ref = s.at(x)
        if s.exact:
            if v != ref:
                return None
        elif abs(complex(v) - complex(ref)) > bound:
            return None
    return g
