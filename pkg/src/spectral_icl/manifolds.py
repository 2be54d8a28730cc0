"""Synthetic manifold benchmarks with exact geodesic ground truth.

Five elementary surface families plus finite products of them. Each family
is a chart: intrinsic parameters drawn uniformly from a rectangle, a
closed-form embedding into R^3, and a closed-form geodesic distance on the
surface. Products concatenate charts and combine factor geodesics as an L2
norm, so ground-truth distances stay exact for any combination.

Episodes are the benchmark unit: sample a manifold, hide it behind a random
rigid motion in ambient space, pick a center point, label a geodesic ball
around it, and reveal a fraction of the labels. Labels are computed from
intrinsic parameters only and never read ambient coordinates.

All randomness flows from a single episode seed through named sub-streams
(sampling, motion, center, label reveal), so episodes are indexed and
reproducible rather than drawn from one shared sequence.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

UNLABELED = -1

TWO_PI = 2.0 * math.pi

# Geodesic-ball radii used when a spec leaves tau unset. Products fall back
# to the median distance-to-center rule, which balances the classes for any
# factor mix.
TAU_DEFAULTS = {
    "sphere": math.pi / 3.0,
    "cylinder": 1.0,
    "cone": 0.5,
    "flat_torus": 0.5,
}

# Half-angle range a cone is drawn from when alpha is left unset.
CONE_ALPHA_RANGE = (0.01, 0.098175)

_INTRINSIC_DIM = {
    "sphere": 2,
    "cylinder": 2,
    "cone": 2,
    "swiss_roll": 1,
    "flat_torus": 2,
}

# Closed parameter rectangles per family (sampling stays in the interior;
# the closure is accepted so boundary queries don't trip the domain check).
_DOMAINS = {
    "sphere": ((0.0, math.pi), (0.0, TWO_PI)),
    "cylinder": ((0.0, TWO_PI), (0.0, 1.0)),
    "cone": ((0.0, 1.0), (0.0, TWO_PI)),
    "swiss_roll": ((0.0, 1.0),),
    "flat_torus": ((0.0, TWO_PI), (0.0, TWO_PI)),
}

# Named sub-streams hanging off an episode seed.
_STREAM_SAMPLE = 0
_STREAM_MOTION = 1
_STREAM_CENTER = 2
_STREAM_REVEAL = 3


@dataclass(frozen=True)
class ManifoldSpec:
    """Declarative description of one benchmark manifold.

    Parameters
    ----------
    family : str
        One of ``"sphere"``, ``"cylinder"``, ``"cone"``, ``"swiss_roll"``,
        ``"flat_torus"``, ``"product"``.
    radius : float
        Cylinder radius; ignored by the other families.
    alpha : float, optional
        Cone half-angle in (0, pi/2). ``None`` means "draw per episode"
        from ``CONE_ALPHA_RANGE``; the drawn value is recorded in the spec
        returned by :func:`sample_manifold`.
    tau : float, optional
        Geodesic-ball labeling radius. ``None`` selects the family default
        from ``TAU_DEFAULTS``; for products it selects the median distance
        to the center. The swiss roll labels by the median of its chart
        parameter and ignores ``tau``.
    factors : tuple of ManifoldSpec
        Factor specs when ``family == "product"``. Nesting products is not
        allowed.
    """

    family: str
    radius: float = 1.0
    alpha: Optional[float] = None
    tau: Optional[float] = None
    factors: tuple = ()


@dataclass
class SampledManifold:
    """A point sample of one spec: resolved spec, intrinsic params, chart image."""

    spec: ManifoldSpec
    intrinsic: np.ndarray  # (n, intrinsic_dim)
    ambient: np.ndarray    # (n, 3 * n_factors), chart output before any motion


@dataclass
class Episode:
    """One semi-supervised task instance.

    ``points`` are ambient coordinates after the rigid motion. ``labels``
    carries ``UNLABELED`` (-1) outside the revealed subset; ``true_labels``
    is the full ground truth. ``spec`` is ``None`` for imported point
    clouds, and ``center_index`` is -1 when no labeling center exists.
    """

    spec: Optional[ManifoldSpec]
    seed: int
    n: int
    m: int
    C: int
    points: np.ndarray
    labels: np.ndarray
    true_labels: np.ndarray
    center_index: int


def validate_spec(spec: ManifoldSpec, _nested: bool = False) -> None:
    if spec.family not in _INTRINSIC_DIM and spec.family != "product":
        raise ValueError(f"unknown manifold family {spec.family!r}")
    if spec.family == "product":
        if _nested:
            raise ValueError("products of products are not supported")
        if len(spec.factors) < 2:
            raise ValueError("a product needs at least two factors")
        for f in spec.factors:
            validate_spec(f, _nested=True)
        return
    if spec.family == "cylinder" and not spec.radius > 0:
        raise ValueError("cylinder radius must be positive")
    if spec.alpha is not None and not 0.0 < spec.alpha < math.pi / 2.0:
        raise ValueError("cone half-angle must lie in (0, pi/2)")
    if spec.tau is not None and not spec.tau > 0:
        raise ValueError("labeling radius tau must be positive")


def intrinsic_dim(spec: ManifoldSpec) -> int:
    validate_spec(spec)
    if spec.family == "product":
        return sum(_INTRINSIC_DIM[f.family] for f in spec.factors)
    return _INTRINSIC_DIM[spec.family]


def ambient_dim(spec: ManifoldSpec) -> int:
    validate_spec(spec)
    return 3 * (len(spec.factors) if spec.family == "product" else 1)


def _factors(spec: ManifoldSpec):
    return spec.factors if spec.family == "product" else (spec,)


def _stream_rng(seed: int, *tags: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return np.random.default_rng(np.random.SeedSequence((int(seed), *tags)))


def chart(spec: ManifoldSpec, params) -> np.ndarray:
    """Map intrinsic parameters through the embedding.

    ``params`` is ``(intrinsic_dim,)`` or ``(n, intrinsic_dim)``; the result
    has 3 ambient columns per factor.
    """
    validate_spec(spec)
    P = np.atleast_2d(np.asarray(params, dtype=float))
    if P.shape[1] != intrinsic_dim(spec):
        raise ValueError("parameter width does not match the spec")
    blocks = []
    col = 0
    for f in _factors(spec):
        d = _INTRINSIC_DIM[f.family]
        _check_domain(f, P[:, col:col + d])
        blocks.append(_chart_factor(f, P[:, col:col + d]))
        col += d
    out = np.hstack(blocks)
    return out[0] if np.asarray(params).ndim == 1 else out


def _chart_factor(f: ManifoldSpec, P: np.ndarray) -> np.ndarray:
    if f.family == "sphere":
        th, ph = P[:, 0], P[:, 1]
        return np.column_stack(
            (np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th))
        )
    if f.family == "cylinder":
        th, z = P[:, 0], P[:, 1]
        r = f.radius
        return np.column_stack((r * np.cos(th), r * np.sin(th), z))
    if f.family == "cone":
        if f.alpha is None:
            raise ValueError("cone half-angle is unresolved; sample the spec first")
        s, th = P[:, 0], P[:, 1]
        sa, ca = math.sin(f.alpha), math.cos(f.alpha)
        return np.column_stack((s * sa * np.cos(th), s * sa * np.sin(th), s * ca))
    if f.family == "swiss_roll":
        t = P[:, 0]
        w = 4.0 * math.pi * t
        return np.column_stack((t * t * np.cos(w), t * t * np.sin(w), np.ones_like(t)))
    # flat_torus: the chart is the parameter square itself
    return np.column_stack((P[:, 0], P[:, 1], np.zeros(P.shape[0])))


def _check_domain(f: ManifoldSpec, P: np.ndarray) -> None:
    for j, (lo, hi) in enumerate(_DOMAINS[f.family]):
        col = P[:, j]
        if np.any(col < lo) or np.any(col > hi):
            raise ValueError(
                f"{f.family} parameter {j} outside [{lo:g}, {hi:g}]"
            )


def _wrap(diff: np.ndarray) -> np.ndarray:
    """Shorter arc between two angles given their raw difference."""
    a = np.abs(diff)
    return np.minimum(a, TWO_PI - a)


def geodesic(spec: ManifoldSpec, p, q):
    """Exact geodesic distance between intrinsic parameter vectors.

    Parameters
    ----------
    spec : ManifoldSpec
        Fully resolved spec (a cone must have a concrete ``alpha``).
    p, q : array_like
        Intrinsic parameters, shape ``(intrinsic_dim,)`` or
        ``(n, intrinsic_dim)``. A single vector broadcasts against a batch.

    Returns
    -------
    float or ndarray
        Distance per row pair; a float when both inputs are single vectors.
    """
    validate_spec(spec)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    scalar = p.ndim == 1 and q.ndim == 1
    P, Q = np.atleast_2d(p), np.atleast_2d(q)
    D = intrinsic_dim(spec)
    if P.shape[1] != D or Q.shape[1] != D:
        raise ValueError("parameter width does not match the spec")
    if P.shape[0] != Q.shape[0]:
        if P.shape[0] == 1:
            P = np.broadcast_to(P, Q.shape)
        elif Q.shape[0] == 1:
            Q = np.broadcast_to(Q, P.shape)
        else:
            raise ValueError("mismatched batch sizes")
    col = 0
    dists = []
    for f in _factors(spec):
        d = _INTRINSIC_DIM[f.family]
        Pf, Qf = P[:, col:col + d], Q[:, col:col + d]
        _check_domain(f, Pf)
        _check_domain(f, Qf)
        dists.append(_geodesic_factor(f, Pf, Qf))
        col += d
    if len(dists) == 1:
        out = dists[0]
    else:
        out = product_geodesic(np.column_stack(dists))
    return float(out[0]) if scalar else out


def _geodesic_factor(f: ManifoldSpec, P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    if f.family == "sphere":
        x = _chart_factor(f, P)
        y = _chart_factor(f, Q)
        # atan2 of (sine, cosine) of the central angle: exact zero for
        # coincident parameters and stable at both ends, unlike arccos.
        cross = np.linalg.norm(np.cross(x, y), axis=1)
        dot = np.sum(x * y, axis=1)
        return np.arctan2(cross, dot)
    if f.family == "cylinder":
        dth = _wrap(P[:, 0] - Q[:, 0])
        dz = P[:, 1] - Q[:, 1]
        return np.hypot(f.radius * dth, dz)
    if f.family == "cone":
        if f.alpha is None:
            raise ValueError("cone half-angle is unresolved; sample the spec first")
        s1, s2 = P[:, 0], Q[:, 0]
        # Unrolling the cone turns the surface into a plane wedge of angle
        # 2*pi*sin(alpha); the geodesic is the chord through the wedge.
        phi = math.sin(f.alpha) * _wrap(P[:, 1] - Q[:, 1])
        d2 = s1 * s1 + s2 * s2 - 2.0 * s1 * s2 * np.cos(phi)
        return np.sqrt(np.maximum(d2, 0.0))
    if f.family == "swiss_roll":
        h1 = np.power(1.0 + 4.0 * math.pi ** 2 * P[:, 0] ** 2, 1.5)
        h2 = np.power(1.0 + 4.0 * math.pi ** 2 * Q[:, 0] ** 2, 1.5)
        return np.abs(h2 - h1) / (6.0 * math.pi ** 2)
    # flat_torus
    return np.hypot(_wrap(P[:, 0] - Q[:, 0]), _wrap(P[:, 1] - Q[:, 1]))


def product_geodesic(ds):
    """Combine per-factor distances into the product distance (L2 norm).

    Accepts one vector of factor distances or an ``(n, n_factors)`` batch.
    """
    a = np.asarray(ds, dtype=float)
    if np.any(a < 0):
        raise ValueError("factor distances must be nonnegative")
    if a.ndim == 1:
        return float(np.sqrt(np.sum(a * a)))
    return np.sqrt(np.sum(a * a, axis=1))


def _resolve_factor(f: ManifoldSpec, rng: np.random.Generator) -> ManifoldSpec:
    if f.family == "cone" and f.alpha is None:
        lo, hi = CONE_ALPHA_RANGE
        return replace(f, alpha=float(rng.uniform(lo, hi)))
    return f


def _draw_params(f: ManifoldSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    cols = [rng.uniform(lo, hi, size=n) for lo, hi in _DOMAINS[f.family]]
    return np.column_stack(cols)


def sample_manifold(spec: ManifoldSpec, n: int, seed: int) -> SampledManifold:
    """Draw ``n`` points uniformly in chart coordinates.

    Each factor consumes its own sub-stream of ``seed``, and an unset cone
    half-angle is drawn (and recorded) before the points, so the layout of
    draws is stable.
    """
    validate_spec(spec)
    if n < 1:
        raise ValueError("need at least one sample")
    resolved = []
    intr = []
    amb = []
    for i, f in enumerate(_factors(spec)):
        rng = _stream_rng(seed, _STREAM_SAMPLE, i)
        rf = _resolve_factor(f, rng)
        params = _draw_params(rf, n, rng)
        resolved.append(rf)
        intr.append(params)
        amb.append(_chart_factor(rf, params))
    if spec.family == "product":
        rspec = replace(spec, factors=tuple(resolved))
    else:
        rspec = resolved[0]
    return SampledManifold(rspec, np.hstack(intr), np.hstack(amb))


def _rigid_motion(pts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    s = rng.uniform(0.02, 0.1)
    ang = rng.uniform(0.0, TWO_PI)
    shift = rng.uniform(-1.0, 1.0, size=2)
    ca, sa = math.cos(ang), math.sin(ang)
    rot = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    out = s * (pts @ rot.T)
    out[:, 0] += shift[0]
    out[:, 1] += shift[1]
    return out


def apply_rigid_motion(points, seed: int) -> np.ndarray:
    """Scale, rotate about z, and translate a 3-column point block.

    Draw order is fixed (scale, angle, x-shift, y-shift) so a seed pins the
    motion. Scale is uniform in [0.02, 0.1], the angle in [0, 2*pi), and the
    in-plane shift components in [-1, 1].
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise ValueError("rigid motion expects an (n, 3) block")
    return _rigid_motion(pts, _stream_rng(seed))


def assign_labels(sm: SampledManifold, center_index: int) -> np.ndarray:
    """Binary labels from intrinsic geometry.

    Geodesic ball of radius tau around the center point for every family
    except the swiss roll, which splits at the median of its chart
    parameter. Ambient coordinates are never consulted.
    """
    n = sm.intrinsic.shape[0]
    if not 0 <= center_index < n:
        raise ValueError("center index out of range")
    spec = sm.spec
    if spec.family == "swiss_roll":
        t = sm.intrinsic[:, 0]
        return (t < np.median(t)).astype(int)
    d = geodesic(spec, sm.intrinsic, sm.intrinsic[center_index])
    tau = spec.tau
    if tau is None:
        tau = TAU_DEFAULTS.get(spec.family)
        if tau is None:
            tau = float(np.median(d))
    return (d < tau).astype(int)


def make_episode(spec: ManifoldSpec, n: int, label_ratio: float, C: int = 2,
                 seed: int = 0) -> Episode:
    """Build one task instance: sample, move, center, label, reveal.

    ``label_ratio`` is the revealed fraction; ``m = floor(label_ratio * n)`` must
    be at least 1 and below ``n``. Labeling is binary, so ``C`` must be 2
    here; episodes with more classes can be built directly or imported.
    """
    validate_spec(spec)
    if C != 2:
        raise ValueError(
            "geodesic-ball labeling is binary; construct multi-class "
            "episodes directly or import a labeled point cloud"
        )
    if not 0.0 < label_ratio < 1.0:
        raise ValueError("label ratio must lie in (0, 1)")
    m = int(math.floor(label_ratio * n))
    if m < 1:
        raise ValueError("label ratio reveals no points at this n")
    sm = sample_manifold(spec, n, seed)
    moved = np.empty_like(sm.ambient)
    for b in range(sm.ambient.shape[1] // 3):
        rng = _stream_rng(seed, _STREAM_MOTION, b)
        moved[:, 3 * b:3 * b + 3] = _rigid_motion(sm.ambient[:, 3 * b:3 * b + 3], rng)
    center = int(_stream_rng(seed, _STREAM_CENTER).integers(n))
    truth = assign_labels(sm, center)
    revealed = _stream_rng(seed, _STREAM_REVEAL).choice(n, size=m, replace=False)
    labels = np.full(n, UNLABELED, dtype=int)
    labels[revealed] = truth[revealed]
    return Episode(
        spec=sm.spec, seed=int(seed), n=n, m=m, C=C, points=moved,
        labels=labels, true_labels=truth, center_index=center,
    )


# ---------------------------------------------------------------------------
# File formats


def spec_to_dict(spec: Optional[ManifoldSpec]):
    if spec is None:
        return None
    return {
        "family": spec.family,
        "radius": spec.radius,
        "alpha": spec.alpha,
        "tau": spec.tau,
        "factors": [spec_to_dict(f) for f in spec.factors],
    }


def spec_from_dict(d) -> Optional[ManifoldSpec]:
    if d is None:
        return None
    spec = ManifoldSpec(
        family=d["family"],
        radius=d.get("radius", 1.0),
        alpha=d.get("alpha"),
        tau=d.get("tau"),
        factors=tuple(spec_from_dict(f) for f in d.get("factors", [])),
    )
    validate_spec(spec)
    return spec


def episode_to_dict(ep: Episode) -> dict:
    return {
        "spec": spec_to_dict(ep.spec),
        "seed": ep.seed,
        "n": ep.n,
        "m": ep.m,
        "C": ep.C,
        "points": ep.points.tolist(),
        "labels": ep.labels.tolist(),
        "true_labels": ep.true_labels.tolist(),
        "center": ep.center_index,
    }


def episode_from_dict(d: dict) -> Episode:
    points = np.asarray(d["points"], dtype=float)
    labels = np.asarray(d["labels"], dtype=int)
    truth = np.asarray(d["true_labels"], dtype=int)
    ep = Episode(
        spec=spec_from_dict(d.get("spec")),
        seed=int(d["seed"]),
        n=int(d["n"]),
        m=int(d["m"]),
        C=int(d["C"]),
        points=points,
        labels=labels,
        true_labels=truth,
        center_index=int(d["center"]),
    )
    if ep.points.shape[0] != ep.n or len(ep.labels) != ep.n or len(ep.true_labels) != ep.n:
        raise ValueError("episode arrays disagree with n")
    if int(np.sum(ep.labels != UNLABELED)) != ep.m:
        raise ValueError("episode m disagrees with the revealed labels")
    return ep


def save_episode(ep: Episode, path: str) -> None:
    """Write an episode as a JSON document; floats round-trip exactly."""
    with open(path, "w") as fh:
        json.dump(episode_to_dict(ep), fh, indent=1)
        fh.write("\n")


def load_episode(path: str) -> Episode:
    with open(path) as fh:
        return episode_from_dict(json.load(fh))


def load_pointcloud_csv(path: str) -> Episode:
    """Import an external labeled point cloud.

    Expected header ``x0,...,x{d-1},label`` with integer labels; -1 marks an
    unlabeled row. True labels are unknown for those rows and are stored as
    -1 as well, so accuracy is meaningful only where truth is present.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError("empty point-cloud file")
    header = [h.strip() for h in rows[0]]
    d = len(header) - 1
    expected = [f"x{i}" for i in range(d)] + ["label"]
    if d < 1 or header != expected:
        raise ValueError("header must be x0,...,x{d-1},label")
    pts = []
    labels = []
    for r, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != d + 1:
            raise ValueError(f"row {r} has {len(row)} fields, expected {d + 1}")
        pts.append([float(v) for v in row[:d]])
        labels.append(int(row[d]))
    points = np.asarray(pts, dtype=float)
    lab = np.asarray(labels, dtype=int)
    n = points.shape[0]
    if n == 0:
        raise ValueError("no data rows")
    if np.any(lab < UNLABELED):
        raise ValueError("labels must be class indices or -1 for unlabeled")
    m = int(np.sum(lab != UNLABELED))
    if m == 0:
        raise ValueError("point cloud has no labeled rows")
    if m == n:
        raise ValueError("point cloud has no unlabeled rows to predict")
    C = int(lab.max()) + 1
    if C < 2:
        raise ValueError("need at least two classes among the labeled rows")
    return Episode(
        spec=None, seed=0, n=n, m=m, C=C, points=points,
        labels=lab, true_labels=lab.copy(), center_index=-1,
    )
