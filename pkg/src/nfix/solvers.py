"""Fixed-point iteration with certified anchored-semi-norm error bounds.

Five regimes share one iteration engine and differ only in the bound model:

- picard:    contraction constant alpha in (0,1); a-priori envelope
             alpha^k / (1 - alpha) * ||x0 - Tx0|| for the k-th iterate.
- ball:      picard restricted to a closed semi-norm ball; admission test
             ||x0 - Tx0|| < (1 - alpha) * radius, containment asserted
             against the induction bound (1 - alpha^k) * radius.
- summable:  iterated-displacement constants a_k with summable series; the
             k-th iterate carries the tail bound S(k) * ||x0 - x1|| with
             S(q) = sum_{v >= q} a_v.
- kannan:    displacement-sum constant beta in (0, 1/2); the geometric rate
             is r = beta / (1 - beta) and the envelope r^k / (1 - r) * res0.
- edelstein: strictly nonexpansive maps; no rate exists, so the solver is
             best-effort and reports the smallest observed fixed-point
             residual together with the consecutive displacement ratios.

Each step k also records an a-posteriori bound obtained by re-rooting the
same telescoping chain at the previous iterate (rate / (1 - rate) times the
latest displacement); stopping uses min(a-priori, a-posteriori) <= tol, and
that minimum is the certified error of the returned point.  All distances
are semi-norm distances, so uniqueness claims hold modulo the anchor span;
the independence of {x*, anchors} is checked after the fact and reported,
never enforced.

Declared constants are trusted for the certificate but cross-checked
against a sampled estimate; a sampled value exceeding the declared one
aborts loudly, because every bound above would be fiction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .nnorm import AnchoredSpace, as_vector, is_linearly_dependent
from .operators import OperatorSpec, apply, apply_batch, contraction_constant

REGIMES = ("picard", "ball", "summable", "kannan", "edelstein")

UNIQUE_MOD_KERNEL = "kernel_modulo_unique"
INDEPENDENCE_FAILED = "independence_condition_failed"

# Sampled constant may exceed the declared one by at most this before the
# solver refuses to certify.
CROSSCHECK_SLACK = 1e-6
CONTAINMENT_SLACK = 1e-9


class SolverInputError(ValueError):
    """Configuration or constant rejected before iteration starts."""


class PreconditionError(SolverInputError):
    """Ball admission test failed; carries both sides of the inequality."""

    def __init__(self, lhs: float, rhs: float):
        self.lhs = lhs
        self.rhs = rhs
        super().__init__(
            f"ball precondition violated: ||x0 - Tx0|| = {lhs:.17g} "
            f"is not < (1 - alpha) * radius = {rhs:.17g}"
        )


class ConstantMismatchError(SolverInputError):
    """Sampled contraction constant exceeds the declared one."""

    def __init__(self, name: str, declared: float, sampled: float):
        self.name = name
        self.declared = declared
        self.sampled = sampled
        super().__init__(
            f"declared {name} = {declared:.17g} is contradicted by sampled "
            f"{name}_hat = {sampled:.17g}; certificates would be fiction"
        )


class ContainmentError(RuntimeError):
    """An iterate escaped the admission ball; the supplied alpha cannot be a
    valid contraction constant there."""

    def __init__(self, step: int, displacement: float, bound: float):
        self.step = step
        self.displacement = displacement
        self.bound = bound
        super().__init__(
            f"iterate {step} left the ball: displacement {displacement:.17g} "
            f"exceeds (1 - alpha^k) * radius = {bound:.17g}"
        )


class NonFiniteIterateError(RuntimeError):
    """Iteration produced NaN/Inf; aborted immediately at the given step."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"non-finite iterate at step {step}; aborting")


@dataclass(eq=False)
class ASeq:
    """Displacement constants a_k for the summable regime.

    kind "geometric": a_k = ratio^k with 0 < ratio < 1; tails have the
    closed form S(q) = ratio^q / (1 - ratio).  kind "explicit": a finite
    list of nonnegative terms plus a declared bound on the remaining tail
    sum (0 means the terms vanish beyond the list).
    """

    kind: str
    ratio: Optional[float] = None
    terms: Optional[list] = None
    tail: float = 0.0

    def __post_init__(self):
        if self.kind == "geometric":
            if self.ratio is None or not (0.0 < self.ratio < 1.0):
                raise SolverInputError("geometric a_seq needs ratio in (0, 1); the series diverges otherwise")
        elif self.kind == "explicit":
            if not self.terms:
                raise SolverInputError("explicit a_seq needs at least one term")
            self.terms = [float(t) for t in self.terms]
            if any(not math.isfinite(t) or t < 0 for t in self.terms):
                raise SolverInputError("explicit a_seq terms must be finite and nonnegative")
            if not (math.isfinite(self.tail) and self.tail >= 0):
                raise SolverInputError("explicit a_seq needs a finite nonnegative declared tail bound")
        else:
            raise SolverInputError(f"a_seq kind must be 'geometric' or 'explicit', got {self.kind!r}")

    def term(self, k: int) -> float:
        if self.kind == "geometric":
            return self.ratio ** k
        if k <= len(self.terms):
            return self.terms[k - 1]
        return self.tail  # beyond the list only the tail bound is known

    def tail_sum(self, q: int) -> float:
        """S(q) = sum_{v >= q} a_v (declared bound for the explicit kind)."""
        if self.kind == "geometric":
            return self.ratio ** q / (1.0 - self.ratio)
        return float(sum(self.terms[q - 1:]) + self.tail)


def geometric_sequence(ratio: float) -> ASeq:
    return ASeq(kind="geometric", ratio=ratio)


def explicit_sequence(terms, tail: float = 0.0) -> ASeq:
    return ASeq(kind="explicit", terms=list(terms), tail=tail)


@dataclass(eq=False)
class SolverConfig:
    """Regime selection plus the constants the chosen theorem needs."""

    regime: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    radius: Optional[float] = None
    a_seq: Optional[ASeq] = None
    tol: float = 1e-10
    max_iter: int = 10 ** 6
    seed: int = 0
    crosscheck_pairs: int = 64
    keep_iterates: bool = False

    def validate(self):
        if self.regime not in REGIMES:
            raise SolverInputError(f"regime must be one of {REGIMES}, got {self.regime!r}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise SolverInputError("tol must be a positive real")
        if self.max_iter < 1:
            raise SolverInputError("max_iter must be >= 1")
        if self.seed < 0:
            raise SolverInputError("seed must be nonnegative")
        if self.crosscheck_pairs < 0:
            raise SolverInputError("crosscheck_pairs must be >= 0")
        if self.regime in ("picard", "ball"):
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise SolverInputError("alpha must lie in the open interval (0, 1)")
        if self.regime == "ball":
            if self.radius is None or not (self.radius > 0):
                raise SolverInputError("ball regime needs a positive radius")
        if self.regime == "kannan":
            if self.beta is None or not (0.0 < self.beta < 0.5):
                raise SolverInputError("beta must lie in the open interval (0, 1/2)")
        if self.regime == "summable":
            if self.a_seq is None:
                raise SolverInputError("summable regime needs an a_seq")
        return self


class TraceRow(NamedTuple):
    """Row k describes the k-th application x_{k-1} -> x_k.

    residual    = ||x_{k-1} - x_k||        (semi-norm displacement)
    apriori     = envelope for ||x_k - x*|| rooted at x0
    aposteriori = envelope for ||x_k - x*|| re-rooted at x_{k-1}
    certified   = min(apriori, aposteriori)
    """

    k: int
    residual: float
    apriori: float
    aposteriori: float
    certified: float


@dataclass(eq=False)
class SolverReport:
    regime: str
    fixed_point: np.ndarray
    iterations: int
    trace: list
    certified_error: float
    converged: bool
    uniqueness_note: str
    independence_ok: bool
    residual0: float
    max_displacement: Optional[float] = None
    ball_trace: Optional[list] = None
    ratios: Optional[list] = None
    iterates: Optional[list] = None
    message: str = ""


def _check_finite(x: np.ndarray, step: int):
    if not np.all(np.isfinite(x)):
        raise NonFiniteIterateError(step)


def _independence(space: AnchoredSpace, point: np.ndarray):
    dependent = is_linearly_dependent(np.vstack([point, space.anchors]), space.rank_tol)
    ok = not dependent
    return ok, (UNIQUE_MOD_KERNEL if ok else INDEPENDENCE_FAILED)


def _immediate_report(regime, space, x0, cfg, res0=0.0, **extra) -> SolverReport:
    ok, note = _independence(space, x0)
    return SolverReport(
        regime=regime,
        fixed_point=x0,
        iterations=0,
        trace=[],
        certified_error=0.0,
        converged=True,
        uniqueness_note=note,
        independence_ok=ok,
        residual0=res0,
        iterates=[x0.copy()] if cfg.keep_iterates else None,
        **extra,
    )


def _crosscheck(op, space, cfg, name, declared, which):
    if cfg.crosscheck_pairs < 1:
        return
    est = contraction_constant(op, space, budget=cfg.crosscheck_pairs, seed=cfg.seed)
    sampled = est.alpha_hat if which == "alpha" else est.beta_hat
    if sampled > declared + CROSSCHECK_SLACK:
        raise ConstantMismatchError(name, declared, sampled)


def _crosscheck_alpha_in_ball(op, space, cfg, alpha, x0, radius):
    """Sample pairs inside the admission ball; a locally valid alpha must
    dominate every sampled displacement ratio there."""
    if cfg.crosscheck_pairs < 1:
        return
    rng = np.random.default_rng([cfg.seed, 23])
    n = cfg.crosscheck_pairs
    v = space.anchor_volume

    def sample():
        dirs = rng.standard_normal((n, space.complement_dim))
        norms = np.linalg.norm(dirs, axis=1)
        norms[norms == 0.0] = 1.0
        radii = rng.random(n) * radius / v
        kernel = rng.standard_normal((n, space.order - 1)) @ space.anchors
        return x0 + (radii / norms)[:, None] * (dirs @ space.complement_basis.T) + kernel

    xs, ys = sample(), sample()
    num = space.seminorm_batch(apply_batch(op, xs) - apply_batch(op, ys))
    den = space.seminorm_batch(xs - ys)
    keep = den >= 1e-12
    if np.any(keep):
        worst = float(np.max(num[keep] / den[keep]))
        if worst > alpha + CROSSCHECK_SLACK:
            raise ConstantMismatchError("alpha (on the ball)", alpha, worst)


def _certified_iteration(
    op: OperatorSpec,
    space: AnchoredSpace,
    x0: np.ndarray,
    x1: np.ndarray,
    res0: float,
    cfg: SolverConfig,
    regime: str,
    apriori_fn: Callable[[int, float], float],
    apost_factor: float,
    guard_name: str = "alpha",
    guard_rate: Optional[float] = None,
    containment=None,
) -> SolverReport:
    trace = []
    iterates = [x0.copy()] if cfg.keep_iterates else None
    ball_trace = [] if containment else None
    max_disp = 0.0 if containment else None

    x_prev = x0
    x_next = x1
    converged = False
    certified = math.inf
    prev_res = None
    k = 0
    while k < cfg.max_iter:
        k += 1
        if k > 1:
            x_next = apply(op, x_prev)
            _check_finite(x_next, k)
        res_k = space.seminorm_raw(x_next - x_prev)
        if containment is not None:
            # the ball theorem's own diagnostic comes first: an escaping
            # iterate names the violated induction bound directly
            radius, alpha, center = containment
            disp = space.seminorm_raw(x_next - center)
            bound = (1.0 - alpha ** k) * radius
            ball_trace.append((k, disp, bound))
            max_disp = max(max_disp, disp)
            if disp > bound + CONTAINMENT_SLACK:
                raise ContainmentError(k, disp, bound)
        if guard_rate is not None and prev_res is not None:
            # the orbit is the sharpest sample of the constant: a residual
            # breaking the declared recursion proves the constant false
            if res_k > guard_rate * prev_res * (1.0 + 1e-9) + 1e-12:
                raise ConstantMismatchError(
                    f"{guard_name} (orbit residual recursion, step {k})",
                    guard_rate,
                    res_k / prev_res,
                )
        prev_res = res_k
        apriori = apriori_fn(k, res0)
        apost = apost_factor * res_k
        certified = min(apriori, apost)
        trace.append(TraceRow(k, res_k, apriori, apost, certified))
        if iterates is not None:
            iterates.append(x_next.copy())
        if certified <= cfg.tol:
            converged = True
            break
        x_prev = x_next

    ok, note = _independence(space, x_next)
    return SolverReport(
        regime=regime,
        fixed_point=x_next,
        iterations=k,
        trace=trace,
        certified_error=certified,
        converged=converged,
        uniqueness_note=note,
        independence_ok=ok,
        residual0=res0,
        max_displacement=max_disp,
        ball_trace=ball_trace,
        iterates=iterates,
        message="" if converged else f"max_iter = {cfg.max_iter} exceeded without certification",
    )


def _start(op, space, x0):
    x0 = as_vector(x0, space.dim).copy()
    x1 = apply(op, x0)
    _check_finite(x1, 1)
    res0 = space.seminorm_raw(x0 - x1)
    return x0, x1, res0


def picard_solve(op: OperatorSpec, space: AnchoredSpace, x0, cfg: SolverConfig) -> SolverReport:
    """Iterate a declared contraction and certify the geometric envelope.

    Stops when min(alpha^k / (1-alpha) * res0, alpha / (1-alpha) * res_k)
    falls to tol; that minimum is the certified semi-norm error.  A zero
    starting residual (x0 fixed modulo the kernel) returns immediately.
    """
    cfg.validate()
    if cfg.regime != "picard":
        raise SolverInputError(f"picard_solve got regime {cfg.regime!r}")
    alpha = cfg.alpha
    x0, x1, res0 = _start(op, space, x0)
    if res0 == 0.0:
        return _immediate_report("picard", space, x0, cfg)
    _crosscheck(op, space, cfg, "alpha", alpha, "alpha")
    return _certified_iteration(
        op, space, x0, x1, res0, cfg, "picard",
        apriori_fn=lambda k, r0: alpha ** k / (1.0 - alpha) * r0,
        apost_factor=alpha / (1.0 - alpha),
        guard_name="alpha", guard_rate=alpha,
    )


def ball_solve(op: OperatorSpec, space: AnchoredSpace, x0, cfg: SolverConfig) -> SolverReport:
    """Picard iteration admitted into a closed ball around the start.

    Requires ||x0 - Tx0|| < (1 - alpha) * radius and raises with both sides
    otherwise.  Every iterate is asserted to obey the induction bound
    ||x0 - x_k|| <= (1 - alpha^k) * radius; the largest observed
    displacement is reported.
    """
    cfg.validate()
    if cfg.regime != "ball":
        raise SolverInputError(f"ball_solve got regime {cfg.regime!r}")
    alpha, radius = cfg.alpha, cfg.radius
    x0, x1, res0 = _start(op, space, x0)
    threshold = (1.0 - alpha) * radius
    if not (res0 < threshold):
        raise PreconditionError(res0, threshold)
    if res0 == 0.0:
        return _immediate_report("ball", space, x0, cfg, max_displacement=0.0, ball_trace=[])
    _crosscheck_alpha_in_ball(op, space, cfg, alpha, x0, radius)
    return _certified_iteration(
        op, space, x0, x1, res0, cfg, "ball",
        apriori_fn=lambda k, r0: alpha ** k / (1.0 - alpha) * r0,
        apost_factor=alpha / (1.0 - alpha),
        guard_name="alpha", guard_rate=alpha,
        containment=(radius, alpha, x0),
    )


def summable_solve(op: OperatorSpec, space: AnchoredSpace, x0, cfg: SolverConfig) -> SolverReport:
    """Iteration under summable iterated-displacement constants a_k.

    The k-th iterate carries the a-priori bound S(k) * ||x0 - x1|| and the
    re-rooted a-posteriori bound S(1) * res_k.  With a_k = alpha^k this
    reproduces picard_solve bit for bit: same iterates, same bounds, same
    stopping step.
    """
    cfg.validate()
    if cfg.regime != "summable":
        raise SolverInputError(f"summable_solve got regime {cfg.regime!r}")
    seq = cfg.a_seq
    x0, x1, res0 = _start(op, space, x0)
    if res0 == 0.0:
        return _immediate_report("summable", space, x0, cfg)
    _crosscheck(op, space, cfg, "a_1", seq.term(1), "alpha")
    return _certified_iteration(
        op, space, x0, x1, res0, cfg, "summable",
        apriori_fn=lambda k, r0: seq.tail_sum(k) * r0,
        apost_factor=seq.tail_sum(1),
        guard_name="a_1", guard_rate=seq.term(1),
    )


def kannan_solve(op: OperatorSpec, space: AnchoredSpace, x0, cfg: SolverConfig) -> SolverReport:
    """Iteration under the displacement-sum condition with constant beta.

    The induced geometric rate is r = beta / (1 - beta) < 1; bounds and
    stopping mirror the picard regime with alpha replaced by r.
    """
    cfg.validate()
    if cfg.regime != "kannan":
        raise SolverInputError(f"kannan_solve got regime {cfg.regime!r}")
    beta = cfg.beta
    rate = beta / (1.0 - beta)
    x0, x1, res0 = _start(op, space, x0)
    if res0 == 0.0:
        return _immediate_report("kannan", space, x0, cfg)
    _crosscheck(op, space, cfg, "beta", beta, "beta")
    return _certified_iteration(
        op, space, x0, x1, res0, cfg, "kannan",
        apriori_fn=lambda k, r0: rate ** k / (1.0 - rate) * r0,
        apost_factor=rate / (1.0 - rate),
        guard_name="beta-rate", guard_rate=rate,
    )


def edelstein_solve(op: OperatorSpec, space: AnchoredSpace, x0, cfg: SolverConfig) -> SolverReport:
    """Best-effort iteration for strictly nonexpansive maps.

    No rate exists, so there is no error envelope: the solver tracks the
    smallest observed fixed-point residual ||x - Tx||, returns the
    minimizing iterate, and reports success only if that residual reached
    tol.  certified_error is that residual, not a distance-to-fixed-point
    bound.  The consecutive displacement ratios
    f(x_{k-1}, x_k) = res_{k+1} / res_k are reported alongside; ratios
    pinned at 1 flag a map outside the theorem's reach (an isometry).
    """
    cfg.validate()
    if cfg.regime != "edelstein":
        raise SolverInputError(f"edelstein_solve got regime {cfg.regime!r}")
    x0, x1, res0 = _start(op, space, x0)
    if res0 == 0.0:
        return _immediate_report("edelstein", space, x0, cfg, ratios=[])

    trace = []
    iterates = [x0.copy()] if cfg.keep_iterates else None
    residuals = []
    best_res = math.inf
    best_candidate = x0
    x_prev = x0
    x_next = x1
    k = 0
    while k < cfg.max_iter:
        k += 1
        if k > 1:
            x_next = apply(op, x_prev)
            _check_finite(x_next, k)
        res_k = space.seminorm_raw(x_next - x_prev)
        residuals.append(res_k)
        trace.append(TraceRow(k, res_k, math.inf, math.inf, math.inf))
        if iterates is not None:
            iterates.append(x_next.copy())
        if res_k < best_res:
            best_res = res_k
            best_candidate = x_prev.copy()
        if best_res <= cfg.tol:
            break
        x_prev = x_next

    ratios = [
        (i + 1, residuals[i + 1] / residuals[i])
        for i in range(len(residuals) - 1)
        if residuals[i] >= 1e-12
    ]
    converged = best_res <= cfg.tol
    ok, note = _independence(space, best_candidate)
    return SolverReport(
        regime="edelstein",
        fixed_point=best_candidate,
        iterations=k,
        trace=trace,
        certified_error=best_res,
        converged=converged,
        uniqueness_note=note,
        independence_ok=ok,
        residual0=res0,
        ratios=ratios,
        iterates=iterates,
        message="" if converged else f"max_iter = {cfg.max_iter} exceeded; best residual {best_res:.17g}",
    )


SOLVERS = {
    "picard": picard_solve,
    "ball": ball_solve,
    "summable": summable_solve,
    "kannan": kannan_solve,
    "edelstein": edelstein_solve,
}


def solve(op: OperatorSpec, space: AnchoredSpace, x0, cfg: SolverConfig) -> SolverReport:
    """Dispatch to the regime named in the config."""
    cfg.validate()
    return SOLVERS[cfg.regime](op, space, x0, cfg)
