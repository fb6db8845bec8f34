"""Query optimizers: multi-start projected gradient ascent with finite
differences, over the energy ball (softmax queries) or the box (scale
queries, worked in u = s^{-2} coordinates where the feasible set is a box).

The objectives are cheap, low-dimensional, and smooth almost everywhere but
multimodal, so many seeded restarts with a deterministic boundary-biased
first start beat anything clever.  Results are certified lower bounds: the
reported value is the objective re-evaluated at the reported point.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import RankDeficient, ShapeMismatch, ZeroLeverage
from .numerics import as_matrix
from .rng import derive_seed, generator

_MIN_STEP = 1e-14


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    max_iters: int = 500
    step_init: float = 0.1
    grad_eps: float = 1e-6  # central finite-difference half-width
    tol: float = 1e-9  # stop when an accepted step improves by less
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1:
            raise ValueError("restarts and max_iters must be at least 1")
        if not (self.step_init > 0 and self.grad_eps > 0 and self.tol >= 0):
            raise ValueError("step_init and grad_eps must be positive, tol nonnegative")


@dataclass(frozen=True)
class OptResult:
    """Outcome of one multi-start run.

    ``value`` is the objective at ``argmax`` (recomputed, not the running
    best); ``iterations_used`` counts ascent iterations summed over all
    restarts; ``converged`` reports whether the winning restart stopped on
    its own rather than hitting the iteration cap.
    """

    argmax: np.ndarray
    value: float
    iterations_used: int
    restarts_used: int
    converged: bool


def _fd_gradient(f, x, h):
    g = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + h
        hi = f(x)
        x[i] = orig - h
        lo = f(x)
        x[i] = orig
        g[i] = (hi - lo) / (2.0 * h)
    return g


def _ascend(f, project, x0, cfg):
    """Projected gradient ascent from one start; returns (x, f(x), iters, converged)."""
    x = project(np.array(x0, dtype=np.float64))
    fx = f(x)
    step = cfg.step_init
    converged = False
    iters = 0
    for iters in range(1, cfg.max_iters + 1):
        g = _fd_gradient(f, x, cfg.grad_eps)
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            converged = True
            break
        direction = g / gnorm
        s = step
        gain = 0.0
        accepted = False
        while s >= _MIN_STEP:
            cand = project(x + s * direction)
            fc = f(cand)
            if fc > fx:
                gain = fc - fx
                x, fx = cand, fc
                step = s * 2.0
                accepted = True
                break
            s *= 0.5
        if not accepted or gain < cfg.tol:
            converged = True
            break
    return x, fx, iters, converged


def _multistart(f, project, starts, cfg):
    best = None
    total_iters = 0
    for x0 in starts:
        x, fx, iters, conv = _ascend(f, project, x0, cfg)
        total_iters += iters
        if best is None or fx > best[1]:  # strict: ties keep the earliest restart
            best = (x, fx, conv)
    x, fx, conv = best
    return OptResult(
        argmax=x,
        value=fx,
        iterations_used=total_iters,
        restarts_used=cfg.restarts,
        converged=conv,
    )


# ---------------------------------------------------------------------------
# softmax objectives (energy ball)
# ---------------------------------------------------------------------------


def _ball_projector(limit):
    def project(x):
        norm = float(np.linalg.norm(x))
        if norm > limit:
            return x * (limit / norm)
        return x

    return project


def _ball_starts(direction_matrix, limit, d, cfg):
    """First start: the boundary point aligned with the largest row of the
    gap/direction matrix (distances between nearby softmax models grow
    toward the boundary, and the largest row dominates).  Rest: uniform in
    the ball, seeded per restart index."""
    row_norms = (direction_matrix * direction_matrix).sum(axis=1)
    top = direction_matrix[int(row_norms.argmax())]
    if row_norms.max() > 0:
        yield top * (limit / math.sqrt(row_norms.max()))
    else:
        e0 = np.zeros(d)
        e0[0] = limit
        yield e0
    for k in range(1, cfg.restarts):
        gen = generator(derive_seed(cfg.seed, "restart", k))
        g = gen.standard_normal(d)
        gn = float(np.linalg.norm(g))
        if gn == 0.0:
            g = np.zeros(d)
            g[0] = 1.0
            gn = 1.0
        radius = limit * gen.random() ** (1.0 / d)
        yield g * (radius / gn)


def max_hellinger_softmax(A, B, constraint, config=None) -> OptResult:
    """Maximize the Hellinger distance between softmax(A x) and softmax(B x)
    over the energy ball.  The reported value is H (not H^2)."""
    cfg = config or OptimizerConfig()
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ShapeMismatch(f"A and B must share a shape, got {A.shape} vs {B.shape}")
    limit = constraint.limit

    def f(x):
        return _kernels.softmax_h2_objective(A, B, x)

    res = _multistart(f, _ball_projector(limit), _ball_starts(A - B, limit, A.shape[1], cfg), cfg)
    return OptResult(
        argmax=res.argmax,
        value=math.sqrt(max(f(res.argmax), 0.0)),
        iterations_used=res.iterations_used,
        restarts_used=res.restarts_used,
        converged=res.converged,
    )


def max_variance_softmax(A, M, constraint, config=None) -> OptResult:
    """Maximize Var_{softmax(A x)}(M x) over the energy ball."""
    cfg = config or OptimizerConfig()
    A = as_matrix(A, "A")
    M = as_matrix(M, "M")
    if A.shape != M.shape:
        raise ShapeMismatch(f"A and M must share a shape, got {A.shape} vs {M.shape}")
    limit = constraint.limit

    def f(x):
        return _kernels.softmax_var_objective(A, M, x)

    res = _multistart(f, _ball_projector(limit), _ball_starts(M, limit, A.shape[1], cfg), cfg)
    return OptResult(
        argmax=res.argmax,
        value=f(res.argmax),
        iterations_used=res.iterations_used,
        restarts_used=res.restarts_used,
        converged=res.converged,
    )


# ---------------------------------------------------------------------------
# leverage objectives (box in u = s^{-2})
# ---------------------------------------------------------------------------

_STATUS_ERRORS = {
    _kernels.STATUS_RANK_DEFICIENT: (RankDeficient, "scaled matrix became numerically rank-deficient"),
    _kernels.STATUS_ZERO_LEVERAGE: (ZeroLeverage, "a leverage score vanished inside the box"),
}


def _checked(kernel, *mats):
    def f(u):
        val, status = kernel(*mats, u)
        if status != _kernels.STATUS_OK:
            err, msg = _STATUS_ERRORS[status]
            raise err(msg)
        return val

    return f


def _box_starts(u_lo, u_hi, n, cfg, f):
    # Corner spot-checks surface rank problems before the ascent loop runs.
    f(np.full(n, u_lo))
    f(np.full(n, u_hi))
    yield np.full(n, 0.5 * (u_lo + u_hi))
    for k in range(1, cfg.restarts):
        gen = generator(derive_seed(cfg.seed, "restart", k))
        yield u_lo + gen.random(n) * (u_hi - u_lo)


def _box_projector(u_lo, u_hi):
    def project(u):
        return np.clip(u, u_lo, u_hi)

    return project


def _scales_from_u(u):
    return 1.0 / np.sqrt(u)


def max_hellinger_leverage(A, B, box, config=None) -> OptResult:
    """Maximize the Hellinger distance between the leverage distributions of
    A and B over scale vectors in the box.  ``argmax`` is the scale vector s
    (positive branch); the value is H."""
    cfg = config or OptimizerConfig()
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ShapeMismatch(f"A and B must share a shape, got {A.shape} vs {B.shape}")
    u_lo, u_hi = 1.0 / box.hi, 1.0 / box.lo
    f = _checked(_kernels.leverage_h2_objective, A, B)
    res = _multistart(f, _box_projector(u_lo, u_hi), _box_starts(u_lo, u_hi, A.shape[0], cfg, f), cfg)
    return OptResult(
        argmax=_scales_from_u(res.argmax),
        value=math.sqrt(max(f(res.argmax), 0.0)),
        iterations_used=res.iterations_used,
        restarts_used=res.restarts_used,
        converged=res.converged,
    )


def max_variance_leverage(A, M, box, config=None) -> OptResult:
    """Maximize the variance of the first-order response ratio w under the
    leverage distribution, over scale vectors in the box.  ``argmax`` is s."""
    cfg = config or OptimizerConfig()
    A = as_matrix(A, "A")
    M = as_matrix(M, "M")
    if A.shape != M.shape:
        raise ShapeMismatch(f"A and M must share a shape, got {A.shape} vs {M.shape}")
    u_lo, u_hi = 1.0 / box.hi, 1.0 / box.lo
    f = _checked(_kernels.leverage_var_objective, A, M)
    res = _multistart(f, _box_projector(u_lo, u_hi), _box_starts(u_lo, u_hi, A.shape[0], cfg, f), cfg)
    return OptResult(
        argmax=_scales_from_u(res.argmax),
        value=f(res.argmax),
        iterations_used=res.iterations_used,
        restarts_used=res.restarts_used,
        converged=res.converged,
    )
