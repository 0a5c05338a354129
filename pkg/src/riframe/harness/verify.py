"""Numerical verification suites behind ``riframe verify``.

Each suite returns a :class:`SuiteResult` with the largest residual it saw
and the tolerance it was held to.  ``fast`` runs reduced trial counts;
``full`` runs the complete counts.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import autodiff as ad
from ..cloud import PointCloud, apply_rotation, knn
from ..descriptors import compute_descriptors
from ..errors import RIFrameError, VerificationFailed
from ..frames import Frame, _covariances, lrf_bases, pairwise_angles_deg, relative_angle_deg
from ..linalg3 import cross, eig_sym3, random_rotation
from ..net import (
    NetConfig,
    afi,
    collate,
    correspondence_map,
    forward,
    init_params,
    prepare_inputs,
    registration_loss,
)
from ..net.attention import init_branch
from ..net.layers import ParamStore, init_linear
from ..net.registration import init_projections
from ..shapes import FAMILIES, generate_shape, random_spec

LEVELS = ("fast", "full")
SUITES = ("equivariance", "invariance", "gradients", "oracles", "angles")


@dataclass
class SuiteResult:
    name: str
    passed: bool
    residual: float
    tolerance: float
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name:<13} max residual {self.residual:.3e} (tol {self.tolerance:.0e}) {self.seconds:.1f}s"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "residual": self.residual,
            "tolerance": self.tolerance,
            "seconds": self.seconds,
            "detail": self.detail,
        }


# ---------------------------------------------------------------- test data


def random_patch(rng, n: int = 48) -> np.ndarray:
    """Anisotropic Gaussian blob away from the origin (no symmetric structure)."""
    center = rng.uniform(-2.0, 2.0, 3)
    center += np.sign(center) * 0.5
    r = random_rotation(rng, "full_so3")
    scales = np.array([0.12, 0.07, 0.03]) * rng.uniform(0.7, 1.3, 3)
    return center + (rng.standard_normal((n, 3)) * scales) @ r.T


def generic_cloud(seed: int, n_points: int = 512, mirror: bool = False) -> PointCloud:
    """A family shape with a random smooth warp that breaks its symmetries."""
    rng = np.random.default_rng(seed)
    fam = FAMILIES[seed % len(FAMILIES)]
    pc = generate_shape(random_spec(fam, rng, n_points), seed)
    p = pc.points
    a = rng.uniform(0.15, 0.3, 3)
    warped = p + np.c_[a[0] * p[:, 1] ** 2, a[1] * p[:, 0] * p[:, 2], a[2] * np.sin(2.0 * p[:, 0])]
    warped = warped * np.array([1.0, 0.8, 0.6]) + np.array([0.05, -0.03, 0.02])
    if mirror:
        warped = warped * np.array([-1.0, 1.0, 1.0])
    return PointCloud(warped, pc.label, seed)


# ---------------------------------------------------------------- equivariance


def equivariance_suite(n_patches: int = 200, n_rotations: int = 20, seed: int = 0, k: int = 16) -> SuiteResult:
    """Local frames, covariances, x-axes and cross products rotate with the input."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst = {"frame": 0.0, "covariance": 0.0, "x_axis": 0.0, "eigvec": 0.0, "cross": 0.0}
    for _ in range(n_patches):
        pts = random_patch(rng)
        nbrs = knn(pts, k)
        center = np.array([0])
        base = lrf_bases(pts, nbrs, center)[0]
        off = pts[nbrs.indices[0]] - pts[0]
        cov = _covariances(off[None])[0]
        eig = eig_sym3(cov)
        u, v = rng.standard_normal((2, 3))
        for _ in range(n_rotations):
            r = random_rotation(rng, "full_so3")
            rp = pts @ r.T
            # neighbors are recomputed on the rotated patch
            nb_r = knn(rp, k)
            rot = lrf_bases(rp, nb_r, center)[0]
            worst["frame"] = max(worst["frame"], float(np.linalg.norm(rot - r @ base)))
            off_r = rp[nb_r.indices[0]] - rp[0]
            cov_r = _covariances(off_r[None])[0]
            worst["covariance"] = max(worst["covariance"], float(np.abs(cov_r - r @ cov @ r.T).max() / np.abs(cov).max()))
            worst["x_axis"] = max(worst["x_axis"], float(np.linalg.norm(rot[:, 0] - r @ base[:, 0])))
            # eigenvectors of the rotated covariance equal rotated eigenvectors up to sign
            ev = eig_sym3(cov_r).vectors
            dots = np.abs(np.sum(ev * (r @ eig.vectors), axis=0))
            worst["eigvec"] = max(worst["eigvec"], float(np.max(1.0 - dots)))
            worst["cross"] = max(worst["cross"], float(np.abs(cross(r @ u, r @ v) - r @ cross(u, v)).max()))
    tol = 1e-7
    res = max(worst.values())
    return SuiteResult("equivariance", res < tol, res, tol, time.perf_counter() - t0, {**worst, "trials": n_patches * n_rotations})


# ---------------------------------------------------------------- invariance


def small_net_config(dtype: str = "float64") -> NetConfig:
    return NetConfig(
        n1=128, n2=32, k1=16, k2=8, c1=16, c2=32, d_attn=8, head_hidden=16, proj_dim=8, dtype=dtype
    )


def _logits(params, cfg: NetConfig, pc: PointCloud, disambiguate: bool, k_lrf: int):
    desc = compute_descriptors(pc, k_lrf, disambiguate, disambiguate)
    x = prepare_inputs(pc.points, desc, cfg.n1, cfg.n2, cfg.k1, cfg.k2, seed=pc.seed or 0)
    with ad.no_grad():
        return desc, forward(params, cfg, collate([x]))["logits"].data


def invariance_check(
    pc: PointCloud,
    n_rotations: int,
    rng,
    params=None,
    cfg: NetConfig | None = None,
    disambiguate: bool = True,
    k_lrf: int = 32,
) -> dict:
    """Largest descriptor and logit changes over random rotations of ``pc``."""
    cfg = cfg or small_net_config()
    params = params if params is not None else init_params(cfg, seed=1)
    d0, l0 = _logits(params, cfg, pc, disambiguate, k_lrf)
    out = {"local": 0.0, "global": 0.0, "logits": 0.0}
    for _ in range(n_rotations):
        rp = apply_rotation(pc, random_rotation(rng, "full_so3"))
        d1, l1 = _logits(params, cfg, rp, disambiguate, k_lrf)
        out["local"] = max(out["local"], float(np.abs(d1.local - d0.local).max()))
        out["global"] = max(out["global"], float(np.abs(d1.global_ - d0.global_).max()))
        out["logits"] = max(out["logits"], float(np.max(np.abs(l1 - l0) / (np.abs(l0) + 1e-6))))
    return out


def invariance_suite(
    n_shapes: int = 4,
    n_rotations: int = 50,
    seed: int = 0,
    disambiguate: bool = True,
    mirror: bool = False,
    n_points: int = 512,
) -> SuiteResult:
    """Descriptors (tol 1e-7) and float64 logits (tol 1e-6 relative) under rotation."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    cfg = small_net_config()
    params = init_params(cfg, seed=seed + 1)
    per_shape = []
    n_fail = 0
    for s in range(n_shapes):
        pc = generic_cloud(seed * 1000 + s, n_points, mirror)
        try:
            r = invariance_check(pc, n_rotations, rng, params, cfg, disambiguate)
            failed = r["local"] >= 1e-7 or r["global"] >= 1e-7 or r["logits"] >= 1e-6
        except RIFrameError as exc:
            r, failed = {"error": str(exc), "local": np.inf, "global": np.inf, "logits": np.inf}, True
        n_fail += failed
        per_shape.append({"shape": s, "failed": bool(failed), **r})
    desc_res = max(max(r["local"], r["global"]) for r in per_shape)
    logit_res = max(r["logits"] for r in per_shape)
    # report the descriptor residual against its tolerance and the logits against theirs
    passed = n_fail == 0
    res = max(desc_res / 1e-7, logit_res / 1e-6) * 1e-7
    detail = {
        "descriptor_residual": desc_res,
        "logit_residual": logit_res,
        "shapes_failed": n_fail,
        "n_shapes": n_shapes,
        "n_rotations": n_rotations,
        "disambiguate": disambiguate,
        "per_shape": per_shape,
    }
    return SuiteResult("invariance", passed, res, 1e-7, time.perf_counter() - t0, detail)


# ---------------------------------------------------------------- gradients


def rel_error(a, b) -> float:
    """Symmetric relative error ``|a - b| / max(|a| + |b|, tiny)`` on flattened values."""
    a, b = np.ravel(a), np.ravel(b)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-30))


def fd_gradient(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central differences of scalar ``f`` at every entry of ``x``."""
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        g[i] = (fp - fm) / (2 * h)
    return g


def _away_from_zero(rng, shape, gap=0.05):
    x = rng.standard_normal(shape)
    return np.sign(x) * (np.abs(x) + gap)


def _separated(rng, shape, gap=0.05):
    """Random values with distinct entries (so max/argmax are stable under small steps)."""
    n = int(np.prod(shape))
    return (rng.permutation(n) * gap + rng.uniform(0, gap / 4, n)).reshape(shape) - n * gap / 2


def primitive_cases():
    """name -> (input builders, scalar loss over the op's output)."""
    w = lambda rng, shape: ad.Tensor(rng.standard_normal(shape))  # noqa: E731

    def weighted(y, rng):
        return ad.sum_all(ad.hadamard(y, w(rng, y.shape)))

    return {
        "matmul": ([lambda r: r.standard_normal((4, 5)), lambda r: r.standard_normal((5, 3))], lambda a, b, r: weighted(ad.matmul(a, b), r)),
        "matmul_batched": ([lambda r: r.standard_normal((2, 3, 4)), lambda r: r.standard_normal((2, 4, 3))], lambda a, b, r: weighted(ad.matmul(a, b), r)),
        "matmul_shared": ([lambda r: r.standard_normal((2, 3, 4)), lambda r: r.standard_normal((4, 5))], lambda a, b, r: weighted(ad.matmul(a, b), r)),
        "add": ([lambda r: r.standard_normal((3, 4)), lambda r: r.standard_normal((3, 4))], lambda a, b, r: weighted(ad.add(a, b), r)),
        "add_bias": ([lambda r: r.standard_normal((2, 3, 4)), lambda r: r.standard_normal(4)], lambda a, b, r: weighted(ad.add(a, b), r)),
        "sub": ([lambda r: r.standard_normal((3, 4)), lambda r: r.standard_normal((3, 4))], lambda a, b, r: weighted(ad.sub(a, b), r)),
        "scalar_mul": ([lambda r: r.standard_normal((3, 4))], lambda a, r: weighted(ad.scalar_mul(a, -1.7), r)),
        "hadamard": ([lambda r: r.standard_normal((3, 4)), lambda r: r.standard_normal((3, 4))], lambda a, b, r: weighted(ad.hadamard(a, b), r)),
        "relu": ([lambda r: _away_from_zero(r, (3, 4))], lambda a, r: weighted(ad.relu(a), r)),
        "leaky_relu": ([lambda r: _away_from_zero(r, (3, 4))], lambda a, r: weighted(ad.leaky_relu(a), r)),
        "row_softmax": ([lambda r: r.standard_normal((3, 5))], lambda a, r: weighted(ad.row_softmax(a), r)),
        "l1_normalize_rows": ([lambda r: _away_from_zero(r, (3, 4))], lambda a, r: weighted(ad.l1_normalize_rows(a), r)),
        "l2_normalize_rows": ([lambda r: r.standard_normal((3, 4))], lambda a, r: weighted(ad.l2_normalize_rows(a), r)),
        "max_over_axis": ([lambda r: _separated(r, (2, 4, 3))], lambda a, r: weighted(ad.max_over_axis(a, 1), r)),
        "mean_over_axis": ([lambda r: r.standard_normal((2, 4, 3))], lambda a, r: weighted(ad.mean_over_axis(a, 1), r)),
        "concat": ([lambda r: r.standard_normal((3, 2)), lambda r: r.standard_normal((3, 4))], lambda a, b, r: weighted(ad.concat([a, b], -1), r)),
        "transpose": ([lambda r: r.standard_normal((2, 3, 4))], lambda a, r: weighted(ad.transpose(a), r)),
        "reshape": ([lambda r: r.standard_normal((2, 3, 4))], lambda a, r: weighted(ad.reshape(a, (6, 4)), r)),
        "gather_rows": ([lambda r: r.standard_normal((5, 3))], lambda a, r: weighted(ad.gather_rows(a, r.integers(0, 5, 7)), r)),
        "cross_entropy_logits": ([lambda r: r.standard_normal((4, 5))], lambda a, r: ad.cross_entropy_logits(a, r.integers(0, 5, 4))),
        "exp": ([lambda r: r.standard_normal((3, 4))], lambda a, r: weighted(ad.exp(a), r)),
        "log": ([lambda r: r.uniform(0.5, 2.0, (3, 4))], lambda a, r: weighted(ad.log(a), r)),
        "sum_all": ([lambda r: r.standard_normal((3, 4))], lambda a, r: ad.hadamard(ad.sum_all(a), ad.sum_all(a))),
        "mean_all": ([lambda r: r.standard_normal((3, 4))], lambda a, r: ad.exp(ad.mean_all(a))),
        "contract_pairwise": (
            [lambda r: r.standard_normal((2, 3, 4))],
            lambda a, r: weighted(ad.contract_pairwise(a, r.standard_normal((2, 3, 3, 4))), r),
        ),
    }


def check_primitive(name: str, trial_seed: int, h: float = 1e-5) -> float:
    builders, loss_fn = primitive_cases()[name]
    rng = np.random.default_rng(trial_seed)
    xs = [b(rng) for b in builders]
    loss_seed = int(rng.integers(2**31))

    def value(*arrays):
        return loss_fn(*[ad.Tensor(a) for a in arrays], np.random.default_rng(loss_seed))

    ts = [ad.Tensor(x.copy(), requires_grad=True) for x in xs]
    ad.backward(loss_fn(*ts, np.random.default_rng(loss_seed)))
    worst = 0.0
    for i, x in enumerate(xs):
        def f(v, i=i):
            args = list(xs)
            args[i] = v
            return float(value(*args).data)

        worst = max(worst, rel_error(fd_gradient(f, x.copy(), h), ts[i].grad))
    return worst


def tiny_fusion_params(rng, c: int = 8, d: int = 4, proj: int = 6, n_classes: int = 3) -> ParamStore:
    p = ParamStore()
    dt = np.dtype(np.float64)
    init_branch(p, "sa", c, d, rng, dt)
    init_branch(p, "ca", c, d, rng, dt)
    init_linear(p, "phi", c, c, rng, dt)
    init_projections(p, "reg_local", c, proj, rng, dt)
    init_projections(p, "reg_global", c, proj, rng, dt)
    init_linear(p, "head.0", c, c, rng, dt)
    init_linear(p, "head.1", c, n_classes, rng, dt)
    for t in p.values():
        if t.data.ndim == 1:
            t.data = rng.standard_normal(t.shape) * 0.1
    return p


def fusion_loss(p: ParamStore, f_loc, f_glo, emb_sa, emb_ca, labels, temperature=0.5, offset_norm="pct"):
    """Fused attention block, classifier cross-entropy and both registration terms."""
    from ..net.model import classify

    u = afi(f_loc, f_glo, p, "sa", "ca", "phi", emb_sa, emb_ca, offset_norm)
    ce = ad.cross_entropy_logits(classify(p, u), labels)
    lr = ad.add(
        registration_loss(p, "reg_local", u, f_loc, temperature),
        registration_loss(p, "reg_global", u, f_glo, temperature),
    )
    return ad.add(ce, lr)


def check_fusion(trial_seed: int, h: float = 1e-5, offset_norm: str = "pct") -> float:
    """Directional finite differences of the composed fusion + loss graph.

    One random unit direction per parameter tensor and per input feature map.
    """
    from ..net.attention import angular_embedding

    rng = np.random.default_rng(trial_seed)
    b, n, c, d = 2, 4, 8, 4
    p = tiny_fusion_params(rng, c, d)
    f_loc = rng.standard_normal((b, n, c))
    f_glo = rng.standard_normal((b, n, c))
    ang = rng.uniform(0, 180, (b, n, n))
    ang = (ang + np.swapaxes(ang, 1, 2)) / 2
    emb_sa = angular_embedding(ang, d)
    emb_ca = angular_embedding(rng.uniform(0, 180, (b, n)), d)
    labels = rng.integers(0, 3, b)

    t_loc = ad.Tensor(f_loc, requires_grad=True)
    t_glo = ad.Tensor(f_glo, requires_grad=True)
    p.zero_grad()
    ad.backward(fusion_loss(p, t_loc, t_glo, emb_sa, emb_ca, labels, offset_norm=offset_norm))
    targets = [(t_loc, None), (t_glo, None)] + [(t, k) for k, t in p.items()]
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t, _ in targets]

    def value():
        with ad.no_grad():
            return float(fusion_loss(p, ad.Tensor(f_loc), ad.Tensor(f_glo), emb_sa, emb_ca, labels, offset_norm=offset_norm).data)

    worst = 0.0
    for (t, key), g in zip(targets, analytic):
        v = rng.standard_normal(t.shape)
        v /= np.linalg.norm(v)
        base = f_loc if t is t_loc else f_glo if t is t_glo else p[key].data
        orig = base.copy()
        base += h * v
        fp = value()
        base[...] = orig - h * v
        fm = value()
        base[...] = orig
        fd = (fp - fm) / (2 * h)
        an = float(np.sum(g * v))
        scale = max(abs(fd) + abs(an), 1e-6 * max(np.linalg.norm(g), 1.0))
        worst = max(worst, abs(fd - an) / scale)
    return worst


def gradient_suite(n_trials: int = 100, seed: int = 0) -> SuiteResult:
    t0 = time.perf_counter()
    tol = 1e-5
    detail = {}
    for name in primitive_cases():
        detail[name] = max(check_primitive(name, seed * 100_003 + t) for t in range(n_trials))
    detail["fusion_block+losses"] = max(check_fusion(seed * 100_003 + t) for t in range(n_trials))
    res = max(detail.values())
    detail["trials"] = n_trials
    return SuiteResult("gradients", res < tol, res, tol, time.perf_counter() - t0, detail)


# ---------------------------------------------------------------- oracles


def jacobi_oracle(a: np.ndarray, tol: float = 1e-15, max_sweeps: int = 100):
    """Scalar cyclic Jacobi eigensolver for one symmetric 3x3 matrix.

    Returns eigenvalues (descending) and eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64)
    v = np.eye(3)
    for _ in range(max_sweeps):
        off = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
        if off <= tol * tol * max(np.sum(a * a), 1e-300):
            break
        for p_, q in ((0, 1), (0, 2), (1, 2)):
            if a[p_, q] == 0.0:
                continue
            theta = (a[q, q] - a[p_, p_]) / (2.0 * a[p_, q])
            t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            j = np.eye(3)
            j[p_, p_] = j[q, q] = c
            j[p_, q] = s
            j[q, p_] = -s
            a = j.T @ a @ j
            v = v @ j
    w = np.diag(a).copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def brute_force_info_nce(zf: np.ndarray, zu: np.ndarray, temperature: float) -> float:
    """Mean over anchors i of ``-log(exp(s_ii) / sum_k exp(s_ik))`` by explicit loops."""
    m = len(zf)
    total = 0.0
    for i in range(m):
        sims = [float(np.dot(zu[k], zf[i])) / temperature for k in range(m)]
        top = max(sims)
        denom = sum(np.exp(s - top) for s in sims)
        total += -((sims[i] - top) - np.log(denom))
    return total / m


def oracle_suite(n_matrices: int = 10_000, seed: int = 0) -> SuiteResult:
    """Eigen-solver vs Jacobi, registration loss vs loops, correspondence row sums."""
    from ..net.registration import project

    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    detail = {}

    mats = rng.standard_normal((n_matrices, 3, 3))
    mats = (mats + np.swapaxes(mats, 1, 2)) / 2
    eig = eig_sym3(mats)
    worst_val = worst_rec = 0.0
    for a, w, v in zip(mats, eig.values, eig.vectors):
        wo, vo = jacobi_oracle(a)
        scale = np.abs(a).max()
        worst_val = max(worst_val, float(np.abs(w - wo).max() / scale))
        worst_rec = max(worst_rec, float(np.abs(v @ np.diag(w) @ v.T - vo @ np.diag(wo) @ vo.T).max() / scale))
    detail["eig_values"] = worst_val
    detail["eig_reconstruction"] = worst_rec

    worst_loss = 0.0
    worst_rows = 0.0
    for trial in range(20):
        b, n, c = 2, 4, 8
        p = tiny_fusion_params(rng, c, 4)
        u = rng.standard_normal((b, n, c))
        f = rng.standard_normal((b, n, c))
        t = float(rng.uniform(0.05, 1.0))
        with ad.no_grad():
            got = float(registration_loss(p, "reg_local", ad.Tensor(u), ad.Tensor(f), t).data)
            zf = project(p, "reg_local.phi2", ad.Tensor(f.reshape(-1, c))).data
            zu = project(p, "reg_local.phi1", ad.Tensor(u.reshape(-1, c))).data
            m = correspondence_map(p, "reg_local", ad.Tensor(f[0]), ad.Tensor(u[0]), t).data
        worst_loss = max(worst_loss, abs(got - brute_force_info_nce(zf, zu, t)))
        worst_rows = max(worst_rows, float(np.abs(m.sum(axis=1) - 1.0).max()), float(-m.min()))
    detail["registration_vs_loops"] = worst_loss
    detail["correspondence_row_sums"] = worst_rows

    ok = worst_val < 1e-8 and worst_rec < 1e-8 and worst_loss < 1e-10 and worst_rows < 1e-9
    res = max(worst_val, worst_rec, worst_loss, worst_rows)
    detail["n_matrices"] = n_matrices
    return SuiteResult("oracles", ok, res, 1e-8, time.perf_counter() - t0, detail)


# ---------------------------------------------------------------- angles


def angle_suite(n_frames: int = 128, seed: int = 0) -> SuiteResult:
    """Pairwise frame angles: exactly symmetric, zero diagonal, inside [0, 180]."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    bases = np.stack([random_rotation(rng, "full_so3") for _ in range(n_frames)])
    ang = pairwise_angles_deg(bases)
    asym = float(np.abs(ang - ang.T).max())
    diag = float(np.abs(np.diag(ang)).max())
    out_of_range = float(max(0.0, -ang.min(), ang.max() - 180.0))
    # the matrix must agree with the one-pair definition entry by entry
    origin = np.zeros(3)
    pair = 0.0
    for i in range(n_frames):
        for j in range(i + 1, n_frames):
            a = relative_angle_deg(Frame(bases[i], origin), Frame(bases[j], origin))
            pair = max(pair, abs(a - ang[i, j]))
    res = max(asym, diag, out_of_range, pair)
    detail = {"asymmetry": asym, "diagonal": diag, "out_of_range": out_of_range, "vs_pairwise_definition": pair}
    return SuiteResult("angles", asym == 0.0 and diag == 0.0 and out_of_range == 0.0 and pair < 1e-9, res, 1e-9,
                       time.perf_counter() - t0, detail)


# ---------------------------------------------------------------- driver


def run_suites(level: str = "fast", seed: int = 0, disambiguate: bool = True, suites=SUITES, echo=None) -> list[SuiteResult]:
    if level not in LEVELS:
        raise ValueError(f"level must be one of {LEVELS}")
    full = level == "full"
    runners = {
        "equivariance": lambda: equivariance_suite(200 if full else 40, 20 if full else 5, seed),
        "invariance": lambda: invariance_suite(4 if full else 2, 50 if full else 8, seed, disambiguate),
        "gradients": lambda: gradient_suite(100 if full else 5, seed),
        "oracles": lambda: oracle_suite(10_000 if full else 2_000, seed),
        "angles": lambda: angle_suite(128, seed),
    }
    results = []
    for name in suites:
        r = runners[name]()
        if echo:
            echo(r.line())
        results.append(r)
    return results


def raise_on_failure(results) -> None:
    failing = [r.name for r in results if not r.passed]
    if failing:
        raise VerificationFailed(failing)
