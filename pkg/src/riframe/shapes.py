"""Procedural surface samplers standing in for a real shape benchmark.

Eight families, each sampled (approximately) uniformly by area, centered at
the origin and scaled so the farthest sample sits at radius 1.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud
from .errors import BadSpec

FAMILIES = ("sphere", "box", "torus", "cylinder", "cone", "plane_cross", "helix", "ellipsoid")

# per-family parameter names and the ranges used for random dataset draws
PARAM_RANGES = {
    "sphere": {"radius": (0.8, 1.2)},
    "box": {"a": (0.5, 1.0), "b": (0.3, 0.9), "c": (0.15, 0.6)},
    "torus": {"R": (0.8, 1.2), "r": (0.15, 0.45)},
    "cylinder": {"radius": (0.3, 0.7), "height": (0.8, 2.0)},
    "cone": {"radius": (0.4, 1.0), "height": (0.8, 2.0)},
    "plane_cross": {"w1": (0.6, 1.2), "w2": (0.3, 0.9), "h": (0.5, 1.2)},
    "helix": {"R": (0.6, 1.0), "pitch": (0.3, 0.6), "turns": (1.5, 3.0), "tube": (0.06, 0.15)},
    "ellipsoid": {"a": (1.0, 1.0), "b": (0.45, 0.8), "c": (0.15, 0.4)},
}


@dataclass(frozen=True)
class ShapeSpec:
    family: str
    params: dict = field(default_factory=dict)
    n_points: int = 1024

    def validate(self):
        if self.family not in FAMILIES:
            raise BadSpec(f"unknown family {self.family!r}")
        if self.n_points < 16:
            raise BadSpec("n_points must be >= 16")
        need = set(PARAM_RANGES[self.family])
        missing = need - set(self.params)
        if missing:
            raise BadSpec(f"{self.family} needs params {sorted(missing)}")
        if any(not (float(self.params[k]) > 0) for k in need):
            raise BadSpec("shape parameters must be positive")
        if self.family == "torus" and self.params["r"] >= self.params["R"]:
            raise BadSpec("torus tube radius must be smaller than R")

    @property
    def label(self) -> int:
        return FAMILIES.index(self.family)


def default_spec(family: str, n_points: int = 1024) -> ShapeSpec:
    """Spec at the midpoint of every parameter range."""
    params = {k: 0.5 * (lo + hi) for k, (lo, hi) in PARAM_RANGES[family].items()}
    return ShapeSpec(family, params, n_points)


def random_spec(family: str, rng: np.random.Generator, n_points: int = 1024) -> ShapeSpec:
    params = {k: float(rng.uniform(lo, hi)) for k, (lo, hi) in PARAM_RANGES[family].items()}
    return ShapeSpec(family, params, n_points)


def _unit(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _pick(rng, weights, n):
    w = np.asarray(weights, dtype=np.float64)
    return rng.choice(len(w), size=n, p=w / w.sum())


def _sphere(p, n, rng):
    return p["radius"] * _unit(rng, n)


def _box(p, n, rng):
    h = np.array([p["a"], p["b"], p["c"]])
    areas = np.array([h[1] * h[2], h[0] * h[2], h[0] * h[1]])
    axis = _pick(rng, areas, n)
    pts = rng.uniform(-1.0, 1.0, size=(n, 3)) * h
    side = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    pts[np.arange(n), axis] = side * h[axis]
    return pts


def _torus(p, n, rng):
    big, small = p["R"], p["r"]
    out = np.empty((0, 3))
    while len(out) < n:
        u = rng.uniform(0, 2 * np.pi, 2 * n)
        v = rng.uniform(0, 2 * np.pi, 2 * n)
        keep = rng.random(2 * n) < (big + small * np.cos(v)) / (big + small)
        u, v = u[keep], v[keep]
        ring = big + small * np.cos(v)
        out = np.vstack([out, np.c_[ring * np.cos(u), ring * np.sin(u), small * np.sin(v)]])
    return out[:n]


def _disk(rng, n, radius):
    rad = radius * np.sqrt(rng.random(n))
    th = rng.uniform(0, 2 * np.pi, n)
    return rad * np.cos(th), rad * np.sin(th)


def _cylinder(p, n, rng):
    r, h = p["radius"], p["height"]
    part = _pick(rng, [2 * np.pi * r * h, np.pi * r * r, np.pi * r * r], n)
    pts = np.empty((n, 3))
    th = rng.uniform(0, 2 * np.pi, n)
    pts[:, 0], pts[:, 1] = r * np.cos(th), r * np.sin(th)
    pts[:, 2] = rng.uniform(-h / 2, h / 2, n)
    for k, z in ((1, -h / 2), (2, h / 2)):
        m = part == k
        pts[m, 0], pts[m, 1] = _disk(rng, m.sum(), r)
        pts[m, 2] = z
    return pts


def _cone(p, n, rng):
    r, h = p["radius"], p["height"]
    slant = np.hypot(r, h)
    part = _pick(rng, [np.pi * r * slant, np.pi * r * r], n)
    pts = np.empty((n, 3))
    # lateral surface: radius grows linearly from apex, area density ~ radius
    s = np.sqrt(rng.random(n))
    th = rng.uniform(0, 2 * np.pi, n)
    pts[:, 0], pts[:, 1] = s * r * np.cos(th), s * r * np.sin(th)
    pts[:, 2] = h / 2 - s * h
    base = part == 1
    pts[base, 0], pts[base, 1] = _disk(rng, base.sum(), r)
    pts[base, 2] = -h / 2
    return pts


def _plane_cross(p, n, rng):
    w1, w2, h = p["w1"], p["w2"], p["h"]
    part = _pick(rng, [w1 * h, w2 * h], n)
    pts = np.zeros((n, 3))
    a = part == 0
    # neither sheet contains the origin: the local z-sign rule is undefined
    # for points whose position vector lies in their tangent plane
    pts[a, 0] = rng.uniform(-w1 / 2, w1 / 2, a.sum())
    pts[a, 1] = -w2 / 4
    pts[a, 2] = rng.uniform(-h / 2, h / 2, a.sum())
    b = ~a
    pts[b, 0] = w1 / 4
    pts[b, 1] = rng.uniform(-w2 / 2, w2 / 2, b.sum())
    pts[b, 2] = rng.uniform(-h / 2, h / 2, b.sum())
    return pts


def _helix(p, n, rng):
    big, pitch, turns, tube = p["R"], p["pitch"], p["turns"], p["tube"]
    t = rng.uniform(0, 2 * np.pi * turns, n)
    half = pitch * turns / 2
    c = np.c_[big * np.cos(t), big * np.sin(t), pitch * t / (2 * np.pi) - half]
    tang = np.c_[-big * np.sin(t), big * np.cos(t), np.full(n, pitch / (2 * np.pi))]
    tang /= np.linalg.norm(tang, axis=1, keepdims=True)
    nrm = np.c_[np.cos(t), np.sin(t), np.zeros(n)]
    bin_ = np.cross(tang, nrm)
    v = rng.uniform(0, 2 * np.pi, n)
    return c + tube * (np.cos(v)[:, None] * nrm + np.sin(v)[:, None] * bin_)


def _ellipsoid(p, n, rng):
    axes = np.array([p["a"], p["b"], p["c"]])
    return _unit(rng, n) * axes


_SAMPLERS = {
    "sphere": _sphere,
    "box": _box,
    "torus": _torus,
    "cylinder": _cylinder,
    "cone": _cone,
    "plane_cross": _plane_cross,
    "helix": _helix,
    "ellipsoid": _ellipsoid,
}


def sample_surface(spec: ShapeSpec, seed: int) -> np.ndarray:
    """Raw surface samples in the family's own units (no normalization)."""
    spec.validate()
    rng = np.random.default_rng(seed)
    return _SAMPLERS[spec.family](spec.params, spec.n_points, rng)


def generate_shape(spec: ShapeSpec, seed: int) -> PointCloud:
    """Surface samples scaled to unit max radius, labeled by family index."""
    pts = sample_surface(spec, seed)
    pts = pts / np.linalg.norm(pts, axis=1).max()
    return PointCloud(pts, label=spec.label, seed=seed)


def make_split(n_per_class: int, n_points: int, seed: int, families=FAMILIES):
    """Balanced list of (spec, cloud-seed) pairs with randomized parameters."""
    rng = np.random.default_rng(seed)
    items = []
    for fam in families:
        for _ in range(n_per_class):
            spec = random_spec(fam, rng, n_points)
            items.append((spec, int(rng.integers(2**31 - 1))))
    return items
