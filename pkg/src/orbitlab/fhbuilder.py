"""Constructs frequently-universal witness vectors by residue-class blocks.

For each target y_i with small support, coefficients are placed along an
arithmetic progression of orbit times A_i = {n >= n_min : n = i*g (mod r*g)}
so that lam_n T^n x reproduces y_i exactly on its support at every planned
time. The classes have exact density 1/(r*g), pairwise separation >= g, and
are themselves arithmetic progressions, which makes the downstream
progression searches deterministic. Verification of every planned time is
mandatory: a built vector without a clean report does not exist.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lspace import Ball, CoefVec, Side
from .orbits import DensityStats, HittingSet, density_stats, hitting_set, orbit_distances
from .seqcore import ScalingSeq, eval_at, wrap_phase
from .shiftops import ShiftOp

__all__ = [
    "BlockPlan",
    "FUVector",
    "BuildError",
    "InfeasibleDecayError",
    "VerificationFailedError",
    "build",
    "verify_fu",
]


class BuildError(RuntimeError):
    pass


class InfeasibleDecayError(BuildError):
    """Placed coefficient magnitudes do not decay: no l2 vector exists."""


class VerificationFailedError(BuildError):
    """Cross-block residual spoiled a planned hit; enlarge the gap g."""

    def __init__(self, target: int, n: int, distance: float, eps: float, g: int):
        super().__init__(
            f"target {target}: planned time n={n} missed its ball "
            f"(dist {distance:.3e} >= eps {eps:.3e}); try a larger gap than g={g}"
        )
        self.target = target
        self.n = n
        self.distance = distance
        self.suggestion = 2 * g


@dataclass(frozen=True)
class BlockPlan:
    """Residue-class placement plan for a list of targets."""

    supports: tuple[int, ...]  # q_i = max support index per target
    epsilons: tuple[float, ...]
    g: int
    n_min: int

    @property
    def r(self) -> int:
        return len(self.supports)

    @property
    def period(self) -> int:
        return self.r * self.g

    def class_members(self, i: int, n_hi: int) -> np.ndarray:
        """A_i = {n >= n_min : n = i*g (mod period)} up to n_hi."""
        start = i * self.g
        if start < self.n_min:
            start += ((self.n_min - start + self.period - 1) // self.period) * self.period
        if start > n_hi:
            return np.zeros(0, dtype=np.int64)
        return np.arange(start, n_hi + 1, self.period, dtype=np.int64)

    def planned(self, i: int, N: int) -> np.ndarray:
        """Planned times whose placed block stays inside the horizon."""
        return self.class_members(i, N - self.supports[i])

    def to_config(self) -> dict:
        return {
            "supports": list(self.supports),
            "epsilons": list(self.epsilons),
            "g": self.g,
            "n_min": self.n_min,
            "period": self.period,
        }


@dataclass(frozen=True)
class FUVector:
    """A built witness vector with its plan and verification report."""

    x: CoefVec
    plan: BlockPlan
    lam: ScalingSeq
    op: ShiftOp
    targets: tuple[tuple[CoefVec, float], ...]
    horizon: int
    report: dict

    def planned_times(self, i: int) -> np.ndarray:
        return self.plan.planned(i, self.horizon)


DEFAULT_GAP_MARGIN = 8


def build(
    lam: ScalingSeq,
    T: ShiftOp,
    targets: list[tuple[CoefVec, float]],
    N: int,
    g: int | None = None,
    n_min: int | None = None,
) -> FUVector:
    """Place blocks so lam_n T^n x hits each target ball along its class.

    Placement: for n in A_i and j in supp(y_i),
    x_{j+n} = y_i(j) / (lam_n premult^n prod_{s=1..n} w_{j+s}), so the
    scaled orbit reproduces y_i exactly on its support. The mandatory
    verification pass then measures the full distance (cross-block residual
    included) at every planned time.
    """
    if T.side is not Side.UNILATERAL:
        raise ValueError("the block builder needs a unilateral backward shift")
    if not targets:
        raise ValueError("need at least one target")
    for y, eps in targets:
        if y.side is not Side.UNILATERAL or y.nnz == 0:
            raise ValueError("targets must be non-zero unilateral vectors")
        if eps <= 0:
            raise ValueError("target radius must be positive")

    supports = tuple(int(y.indices.max()) for y, _ in targets)
    eps_list = tuple(float(e) for _, e in targets)
    q_max = max(supports)
    if g is None:
        g = 2 * q_max + DEFAULT_GAP_MARGIN
    if g <= q_max:
        raise ValueError(f"gap g={g} must exceed the largest target support {q_max}")
    if n_min is None:
        n_min = g
    plan = BlockPlan(supports, eps_list, int(g), int(n_min))

    pt = T.table(N + q_max + 1)
    idx_parts, lm_parts, ph_parts = [], [], []
    per_class_blockmax: list[np.ndarray] = []
    for i, (y, _) in enumerate(targets):
        ns = plan.planned(i, N)
        if ns.size == 0:
            per_class_blockmax.append(np.zeros(0))
            continue
        lam_lm, lam_ph, lam_zero = eval_at(lam, ns)
        if lam_zero.any():
            raise BuildError("scaling sequence vanishes at a planned time")
        nf = ns.astype(np.float64)
        block_max = np.full(ns.shape, -np.inf)
        for pos in range(y.nnz):
            j = int(y.indices[pos])
            prod = pt.cum(ns + j) - pt.cum(np.full(ns.shape, j, dtype=np.int64))
            lm = y.log_mags[pos] - lam_lm - nf * T.pm_log - prod
            ph = wrap_phase(y.phases[pos] - lam_ph - nf * T.pm_arg)
            idx_parts.append(ns + j)
            lm_parts.append(lm)
            ph_parts.append(ph)
            block_max = np.maximum(block_max, lm)
        per_class_blockmax.append(block_max)

    # decay feasibility: within each class the block maxima must fall
    for i, bm in enumerate(per_class_blockmax):
        if bm.size >= 2 and not np.all(np.diff(bm) < -1e-12):
            raise InfeasibleDecayError(
                f"target {i}: placed magnitudes do not decay over successive "
                "blocks; the scaled orbit cannot come from an l2 vector"
            )

    if not idx_parts:
        raise BuildError(
            f"horizon N={N} leaves no room for planned blocks (n_min={plan.n_min})"
        )
    all_idx = np.concatenate(idx_parts)
    order = np.argsort(all_idx)
    all_idx = all_idx[order]
    if np.any(np.diff(all_idx) == 0):
        raise BuildError("internal: block placements collided")
    x = CoefVec(
        Side.UNILATERAL,
        all_idx,
        np.concatenate(lm_parts)[order],
        np.concatenate(ph_parts)[order],
    )

    # mandatory verification: full distance at every planned time
    report: dict = {"targets": [], "planned_total": 0, "worst_miss": 0.0}
    for i, (y, eps) in enumerate(targets):
        ns = plan.planned(i, N)
        d2 = orbit_distances(x, lam, T, y, eps, ns)
        d = np.sqrt(d2)
        bad = np.flatnonzero(~(d < eps))
        if bad.size:
            b = int(bad[0])
            raise VerificationFailedError(i, int(ns[b]), float(d[b]), eps, plan.g)
        worst = float(d.max()) if d.size else 0.0
        report["targets"].append(
            {"planned": int(ns.size), "worst_residual": worst, "eps": eps}
        )
        report["planned_total"] += int(ns.size)
        report["worst_miss"] = max(report["worst_miss"], worst)

    return FUVector(x, plan, lam, T, tuple((y, float(e)) for y, e in targets), N, report)


def verify_fu(
    v: FUVector,
    ball_overrides: list[Ball] | None = None,
    workers: int = 1,
) -> list[tuple[HittingSet, DensityStats]]:
    """Recompute hitting sets from scratch and check they cover the plan.

    Returns per-target (HittingSet, DensityStats); a planned time missing
    from its recomputed hitting set means the builder is broken, which the
    mandatory build pass is supposed to make impossible.
    """
    out = []
    for i, (y, eps) in enumerate(v.targets):
        ball = ball_overrides[i] if ball_overrides else Ball(y, eps)
        h = hitting_set(
            v.x,
            v.lam,
            v.op,
            ball,
            v.horizon,
            workers=workers,
            provenance={"builder_target": str(i)},
        )
        planned = v.planned_times(i)
        missing = np.setdiff1d(planned, h.indices)
        if missing.size:
            raise AssertionError(
                f"builder bug: planned time {int(missing[0])} missing from "
                f"recomputed hitting set of target {i}"
            )
        out.append((h, density_stats(h)))
    return out
