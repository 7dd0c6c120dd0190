"""Self-maps of R^d and their anchored-semi-norm analysis.

Covers the operator abstraction (affine maps plus a small fixed catalog of
named nonlinear maps), operator-norm estimation by three equivalent
supremum formulas, contraction-constant and Kannan-constant estimation, and
a sampled continuity probe.

Suprema are estimated over deterministic seeded samples, so every estimate
is a reproducible lower bound of the true supremum.  Sampling is chunked so
that a larger budget only ever extends the sample set: the reported value
is monotone nondecreasing in the budget.  Operators that move the semi-norm
kernel out of itself admit no finite bound constant at all; they are gated
to an explicit +inf instead of a meaningless sample maximum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .nnorm import AnchoredSpace, as_vector, is_linearly_dependent

# Image of a kernel point must stay within this semi-norm of the kernel.
KERNEL_IMAGE_TOL = 1e-9
# Ratio suprema skip pairs whose denominator falls below this floor, so
# kernel-direction pairs cannot amplify 0/0 noise.
RATIO_SKIP_TOL = 1e-12

_CHUNK = 1024

BUILTIN_NAMES = ("scale", "constant", "saturating", "rotation-scale", "step")


@dataclass(eq=False)
class OperatorSpec:
    """Declarative self-map of R^d.

    kind "affine": x -> matrix @ x + offset.
    kind "builtin": one of the catalog maps, configured by ``params``:

    - "scale":          x -> factor * x
    - "constant":       x -> value
    - "saturating":     first coordinate t -> t / (1 + |t|), others fixed
    - "rotation-scale": rotation by ``angle`` in the (axis1, axis2) plane,
                        scaled by ``factor``, other coordinates fixed
    - "step":           first coordinate t -> t + height for t >= threshold,
                        t otherwise (deliberately discontinuous)
    """

    kind: str
    matrix: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None
    name: Optional[str] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind == "affine":
            a = np.asarray(self.matrix, dtype=float)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ValueError(f"affine matrix must be square, got shape {a.shape}")
            if not np.all(np.isfinite(a)):
                raise ValueError("affine matrix has non-finite entries")
            self.matrix = a
            if self.offset is None:
                self.offset = np.zeros(a.shape[0])
            self.offset = as_vector(self.offset, a.shape[0])
        elif self.kind == "builtin":
            if self.name not in BUILTIN_NAMES:
                raise ValueError(f"unknown builtin operator {self.name!r}")
            _validate_builtin_params(self.name, self.params)
        else:
            raise ValueError(f"operator kind must be 'affine' or 'builtin', got {self.kind!r}")

    @property
    def dim(self) -> Optional[int]:
        if self.kind == "affine":
            return self.matrix.shape[0]
        if self.name == "constant":
            return len(self.params["value"])
        return None


def _validate_builtin_params(name, params):
    required = {
        "scale": {"factor"},
        "constant": {"value"},
        "saturating": set(),
        "rotation-scale": {"axis1", "axis2", "angle"},
        "step": set(),
    }[name]
    missing = required - set(params)
    if missing:
        raise ValueError(f"builtin {name!r} missing params {sorted(missing)}")
    if name == "constant":
        params["value"] = as_vector(params["value"])
    if name == "rotation-scale":
        a1, a2 = int(params["axis1"]), int(params["axis2"])
        if a1 == a2 or a1 < 0 or a2 < 0:
            raise ValueError("rotation-scale needs two distinct nonnegative axes")
        params.setdefault("factor", 1.0)
    if name == "step":
        params.setdefault("threshold", 0.0)
        params.setdefault("height", 1.0)


def affine_operator(matrix, offset=None) -> OperatorSpec:
    return OperatorSpec(kind="affine", matrix=np.asarray(matrix, dtype=float), offset=offset)


def builtin_operator(name: str, **params) -> OperatorSpec:
    return OperatorSpec(kind="builtin", name=name, params=dict(params))


def is_linear(op: OperatorSpec) -> bool:
    """True for affine operators with an exactly zero offset."""
    return op.kind == "affine" and not np.any(op.offset)


def compose(second: OperatorSpec, first: OperatorSpec) -> OperatorSpec:
    """Affine composition second(first(x))."""
    if second.kind != "affine" or first.kind != "affine":
        raise ValueError("compose supports affine operators only")
    if second.matrix.shape != first.matrix.shape:
        raise ValueError("dimension mismatch in composition")
    return affine_operator(
        second.matrix @ first.matrix, second.matrix @ first.offset + second.offset
    )


def _rotation_matrix(op: OperatorSpec, d: int) -> np.ndarray:
    i, j = int(op.params["axis1"]), int(op.params["axis2"])
    if i >= d or j >= d:
        raise ValueError(f"rotation-scale axes ({i}, {j}) exceed dimension {d}")
    theta = float(op.params["angle"])
    f = float(op.params.get("factor", 1.0))
    r = np.eye(d)
    r[i, i] = f * math.cos(theta)
    r[i, j] = -f * math.sin(theta)
    r[j, i] = f * math.sin(theta)
    r[j, j] = f * math.cos(theta)
    return r


def apply(op: OperatorSpec, x) -> np.ndarray:
    """Evaluate the operator at one point."""
    x = as_vector(x)
    return apply_batch(op, x.reshape(1, -1))[0]


def apply_batch(op: OperatorSpec, points: np.ndarray) -> np.ndarray:
    """Evaluate the operator on rows of ``points``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValueError("apply_batch expects a 2-D array of row points")
    d = pts.shape[1]
    if op.kind == "affine":
        if op.matrix.shape[0] != d:
            raise ValueError(f"dimension mismatch: operator is {op.matrix.shape[0]}-D, points are {d}-D")
        return pts @ op.matrix.T + op.offset
    name = op.name
    if name == "scale":
        return float(op.params["factor"]) * pts
    if name == "constant":
        value = as_vector(op.params["value"], d)
        return np.tile(value, (pts.shape[0], 1))
    if name == "saturating":
        out = pts.copy()
        t = out[:, 0]
        out[:, 0] = t / (1.0 + np.abs(t))
        return out
    if name == "rotation-scale":
        return pts @ _rotation_matrix(op, d).T
    if name == "step":
        thr = float(op.params["threshold"])
        h = float(op.params["height"])
        out = pts.copy()
        out[:, 0] = np.where(out[:, 0] >= thr, out[:, 0] + h, out[:, 0])
        return out
    raise ValueError(f"unknown builtin operator {name!r}")


# ---------------------------------------------------------------------------
# kernel preservation
# ---------------------------------------------------------------------------

def kernel_preserved(op: OperatorSpec, space: AnchoredSpace, samples: int = 32, seed: int = 0) -> bool:
    """Does the operator map the semi-norm kernel span(b_2..b_n) into itself?

    Affine operators are decided exactly: each anchor image (and the offset)
    must stay inside the anchor span, checked by the rank routine.  Builtins
    are probed on ``samples`` random kernel points; any image with semi-norm
    above KERNEL_IMAGE_TOL fails.  Without this property no finite bound
    constant M with ||Tx|| <= M ||x|| can exist.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if op.kind == "affine":
        if op.matrix.shape[0] != space.dim:
            raise ValueError("dimension mismatch between operator and space")
        for b in space.anchors:
            image = op.matrix @ b
            if not is_linearly_dependent(np.vstack([space.anchors, image]), space.rank_tol):
                return False
        # the offset is the image of the kernel point 0; it must stay inside too
        if not is_linearly_dependent(np.vstack([space.anchors, op.offset]), space.rank_tol):
            return False
        return True
    rng = np.random.default_rng([_seed_key(seed), 101])
    coeffs = rng.standard_normal((samples, space.order - 1)) * 2.0
    pts = coeffs @ space.anchors
    images = apply_batch(op, pts)
    return bool(np.all(space.seminorm_batch(images) <= KERNEL_IMAGE_TOL))


def kernel_violation_witness(
    op: OperatorSpec, space: AnchoredSpace, samples: int = 32, seed: int = 0
) -> Optional[np.ndarray]:
    """A kernel point whose image leaves the kernel, or None if preserved."""
    candidates = [np.zeros(space.dim)]
    for b in space.anchors:
        candidates.append(np.array(b))
        candidates.append(2.0 * np.array(b))
    rng = np.random.default_rng([_seed_key(seed), 103])
    coeffs = rng.standard_normal((samples, space.order - 1)) * 2.0
    candidates.extend(coeffs @ space.anchors)
    for x in candidates:
        if space.seminorm(apply(op, x)) > KERNEL_IMAGE_TOL:
            return x
    return None


def _seed_key(seed: int) -> int:
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    return int(seed)


# ---------------------------------------------------------------------------
# operator norm
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class OperatorNormEstimate:
    """Sampled supremum for one of the three norm formulas.

    ``value`` is the exact maximum of the method's objective over the seeded
    sample (or +inf when the kernel gate fails); it never decreases when the
    budget grows, because samples accumulate chunk by chunk.
    """

    value: float
    method: str
    samples: int
    kernel_preserved: bool


def _probe_chunks(space: AnchoredSpace, budget: int, seed: int, stream: int):
    """Yield (unit complement directions, radii in [0,1), anchor coefficients).

    Chunk i is drawn from its own generator keyed by (seed, stream, i), and a
    partial last chunk is a prefix of the full draw, so the first k samples
    are the same for every budget >= k.
    """
    m = space.complement_dim
    nk = space.order - 1
    produced = 0
    chunk_idx = 0
    while produced < budget:
        rng = np.random.default_rng([_seed_key(seed), stream, chunk_idx])
        dirs = rng.standard_normal((_CHUNK, m))
        radii = rng.random(_CHUNK)
        coeffs = rng.standard_normal((_CHUNK, nk))
        take = min(_CHUNK, budget - produced)
        norms = np.linalg.norm(dirs[:take], axis=1)
        norms[norms == 0.0] = 1.0
        units = dirs[:take] / norms[:, None]
        yield units, radii[:take], coeffs[:take]
        produced += take
        chunk_idx += 1


def draw_probe_points(space: AnchoredSpace, budget: int, seed: int, method: str = "II") -> np.ndarray:
    """The exact sample points operator_norm evaluates for the given method."""
    rows = []
    v = space.anchor_volume
    for units, radii, coeffs in _probe_chunks(space, budget, seed, stream=7):
        base = units @ space.complement_basis.T
        kernel_part = coeffs @ space.anchors
        if method == "I":
            pts = (radii / v)[:, None] * base + kernel_part
        elif method == "II":
            raw = base / v + kernel_part
            s = space.seminorm_batch(raw)
            pts = raw / s[:, None]
        elif method == "III":
            scale = (0.5 + 2.5 * radii) / v
            pts = scale[:, None] * base + kernel_part
        else:
            raise ValueError(f"method must be one of I, II, III, got {method!r}")
        rows.append(pts)
    return np.vstack(rows)


def operator_norm(
    op: OperatorSpec, space: AnchoredSpace, method: str, budget: int, seed: int = 0
) -> OperatorNormEstimate:
    """Estimate the bound constant of a linear operator by seeded sampling.

    method "I":   sup ||Tx|| over sampled points with ||x|| <= 1
    method "II":  sup ||Tx|| over sampled points normalized to ||x|| = 1
    method "III": sup ||Tx|| / ||x|| over sampled points with ||x|| != 0

    (all semi-norms anchored).  Points are drawn as unit directions in the
    orthogonal complement of the anchor span plus random anchor-span
    components; the latter cannot change either side of the objective.
    Kernel-violating operators return the +inf marker.
    """
    if method not in ("I", "II", "III"):
        raise ValueError(f"method must be one of I, II, III, got {method!r}")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if op.kind != "affine" or np.any(op.offset):
        raise ValueError("operator_norm requires a linear operator (affine with zero offset)")
    if op.matrix.shape[0] != space.dim:
        raise ValueError("dimension mismatch between operator and space")
    if not kernel_preserved(op, space, samples=32, seed=seed):
        return OperatorNormEstimate(math.inf, method, budget, kernel_preserved=False)

    v = space.anchor_volume
    best = 0.0
    for units, radii, coeffs in _probe_chunks(space, budget, seed, stream=7):
        base = units @ space.complement_basis.T
        kernel_part = coeffs @ space.anchors
        if method == "I":
            pts = (radii / v)[:, None] * base + kernel_part
            obj = space.seminorm_batch(apply_batch(op, pts))
        elif method == "II":
            raw = base / v + kernel_part
            s = space.seminorm_batch(raw)
            pts = raw / s[:, None]
            obj = space.seminorm_batch(apply_batch(op, pts))
        else:
            scale = (0.5 + 2.5 * radii) / v
            pts = scale[:, None] * base + kernel_part
            num = space.seminorm_batch(apply_batch(op, pts))
            den = space.seminorm_batch(pts)
            keep = den >= RATIO_SKIP_TOL
            obj = num[keep] / den[keep]
        if obj.size:
            best = max(best, float(np.max(obj)))
    return OperatorNormEstimate(best, method, budget, kernel_preserved=True)


# ---------------------------------------------------------------------------
# contraction constants
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ContractionEstimate:
    """Sampled suprema of the two displacement ratios.

    alpha_hat: sup ||Tx - Ty|| / ||x - y||             (plain contraction)
    beta_hat:  sup ||Tx - Ty|| / (||x - Tx|| + ||y - Ty||)   (Kannan form)

    Both are exact maxima over the sampled pair set; re-evaluating the
    recorded witness pair reproduces them bit for bit.
    """

    alpha_hat: float
    beta_hat: float
    witness_pair: Optional[tuple]
    witness_pair_kannan: Optional[tuple]
    samples: int
    seed: int


def contraction_constant(
    op: OperatorSpec, space: AnchoredSpace, budget: int, seed: int = 0
) -> ContractionEstimate:
    """Sample ``budget`` point pairs and take the two ratio suprema."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    d = space.dim
    best_a = 0.0
    best_b = 0.0
    wit_a = None
    wit_b = None
    produced = 0
    chunk_idx = 0
    while produced < budget:
        rng = np.random.default_rng([_seed_key(seed), 11, chunk_idx])
        xs = rng.standard_normal((_CHUNK, d)) * 1.5
        ys = rng.standard_normal((_CHUNK, d)) * 1.5
        take = min(_CHUNK, budget - produced)
        xs, ys = xs[:take], ys[:take]
        txs = apply_batch(op, xs)
        tys = apply_batch(op, ys)
        num = space.seminorm_batch(txs - tys)
        den = space.seminorm_batch(xs - ys)
        keep = den >= RATIO_SKIP_TOL
        if np.any(keep):
            ratios = num[keep] / den[keep]
            i = int(np.argmax(ratios))
            if ratios[i] > best_a:
                best_a = float(ratios[i])
                idx = np.flatnonzero(keep)[i]
                wit_a = (xs[idx].copy(), ys[idx].copy())
        den_k = space.seminorm_batch(xs - txs) + space.seminorm_batch(ys - tys)
        keep_k = den_k >= RATIO_SKIP_TOL
        if np.any(keep_k):
            ratios_k = num[keep_k] / den_k[keep_k]
            i = int(np.argmax(ratios_k))
            if ratios_k[i] > best_b:
                best_b = float(ratios_k[i])
                idx = np.flatnonzero(keep_k)[i]
                wit_b = (xs[idx].copy(), ys[idx].copy())
        produced += take
        chunk_idx += 1
    return ContractionEstimate(best_a, best_b, wit_a, wit_b, budget, seed)


# ---------------------------------------------------------------------------
# continuity probe
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class ContinuityProbe:
    """Outcome of a sampled epsilon-delta check at one base point.

    ``ok`` is False when some sampled x with ||x - x0|| < delta produced
    ||Tx - Tx0|| >= epsilon; ``witness`` then holds the worst such x.  The
    probe also pushes one generated convergent sequence through the operator
    and reports the image residual trend (should vanish for a continuous
    map, and visibly fail to for a kernel violator).
    """

    ok: bool
    witness: Optional[np.ndarray]
    max_image_distance: float
    epsilon: float
    delta: float
    sequence_residuals: list


def continuity_probe(
    op: OperatorSpec,
    space: AnchoredSpace,
    x0,
    epsilon: float,
    candidate_delta: float,
    samples: int,
    seed: int = 0,
) -> ContinuityProbe:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not (epsilon > 0 and candidate_delta > 0):
        raise ValueError("epsilon and candidate_delta must be positive")
    x0 = as_vector(x0, space.dim)
    tx0 = apply(op, x0)
    v = space.anchor_volume

    worst = 0.0
    witness = None
    for units, radii, coeffs in _probe_chunks(space, samples, seed, stream=13):
        base = units @ space.complement_basis.T
        kernel_part = coeffs @ space.anchors
        pts = x0 + (radii * candidate_delta / v)[:, None] * base + kernel_part
        imgs = space.seminorm_batch(apply_batch(op, pts) - tx0)
        i = int(np.argmax(imgs))
        if imgs[i] > worst:
            worst = float(imgs[i])
            witness = pts[i].copy()
    ok = worst < epsilon

    # sequential form: push one b-convergent sequence x_k -> x0 through T
    rng = np.random.default_rng([_seed_key(seed), 17])
    u = rng.standard_normal(space.complement_dim)
    u /= max(np.linalg.norm(u), 1e-30)
    direction = space.complement_basis @ u
    steps = min(max(samples, 8), 40)
    seq_pts = np.vstack(
        [
            x0
            + (candidate_delta / (k * v)) * direction
            + rng.standard_normal(space.order - 1) @ space.anchors / k
            for k in range(1, steps + 1)
        ]
    )
    seq_residuals = space.seminorm_batch(apply_batch(op, seq_pts) - tx0).tolist()

    return ContinuityProbe(
        ok=ok,
        witness=None if ok else witness,
        max_image_distance=worst,
        epsilon=epsilon,
        delta=candidate_delta,
        sequence_residuals=seq_residuals,
    )
