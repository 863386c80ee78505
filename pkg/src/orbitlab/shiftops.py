"""Weighted backward shifts and log-domain weight-product machinery.

Convention fixed once: ``(T x)_j = premult * w_{j+1} * x_{j+1}``; a unilateral
shift drops anything landing below index 1 (so ``T e_1 = 0``). Powers are
computed exactly through prefix sums of ``log w`` rather than by iteration.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .lspace import CoefVec, Side, SideMismatchError
from .seqcore import LogScalar, ScalingSeq, eval_log, wrap_phase

__all__ = [
    "WeightSeq",
    "ShiftOp",
    "ProductTable",
    "scaled_orbit_point",
    "product_table",
]


@dataclass(frozen=True)
class WeightSeq:
    """A named family of strictly positive weights with a finite sup bound."""

    family: str
    params: tuple = ()

    @classmethod
    def constant(cls, c: float) -> "WeightSeq":
        if not c > 0:
            raise ValueError("weights must be strictly positive")
        return cls("constant_w", (float(c),))

    @classmethod
    def sqrt_ratio(cls) -> "WeightSeq":
        """w_n = sqrt((n+1)/n), defined on positive indices only."""
        return cls("sqrt_ratio")

    @classmethod
    def step_bilateral(cls) -> "WeightSeq":
        """w_n = 1 for n <= 0, w_n = 2 for n >= 1."""
        return cls("step_bilateral")

    @classmethod
    def inverse_step_bilateral(cls) -> "WeightSeq":
        """w_n = 1/2 for n <= 0, w_n = 2 for n >= 1."""
        return cls("inverse_step_bilateral")

    @classmethod
    def table(cls, values, start: int = 1) -> "WeightSeq":
        vals = tuple(float(v) for v in values)
        if not vals or min(vals) <= 0:
            raise ValueError("weights must be strictly positive")
        return cls("table_w", (vals, int(start)))

    # -- structure -----------------------------------------------------------
    @property
    def sup_weight(self) -> float:
        f = self.family
        if f == "constant_w":
            return self.params[0]
        if f == "sqrt_ratio":
            return math.sqrt(2.0)  # w_1, weights decrease toward 1
        if f in ("step_bilateral", "inverse_step_bilateral"):
            return 2.0
        if f == "table_w":
            return max(self.params[0])
        raise ValueError(f"unknown weight family {f!r}")

    @property
    def inf_weight(self) -> float:
        f = self.family
        if f == "constant_w":
            return self.params[0]
        if f == "sqrt_ratio":
            return 1.0
        if f == "step_bilateral":
            return 1.0
        if f == "inverse_step_bilateral":
            return 0.5
        if f == "table_w":
            return min(self.params[0])
        raise ValueError(f"unknown weight family {f!r}")

    @property
    def bilateral_ok(self) -> bool:
        if self.family == "sqrt_ratio":
            return False
        if self.family == "table_w":
            return self.params[1] <= 0
        return True

    @property
    def is_flat(self) -> bool:
        """Index-independent log weight (enables vectorized orbit scans)."""
        return self.family == "constant_w"

    def log_w(self, idx: np.ndarray) -> np.ndarray:
        """log w at the given integer indices (vectorized)."""
        idx = np.asarray(idx, dtype=np.int64)
        f = self.family
        if f == "constant_w":
            return np.full(idx.shape, math.log(self.params[0]))
        if f == "sqrt_ratio":
            if idx.size and idx.min() < 1:
                raise ValueError("sqrt_ratio weights defined for n >= 1 only")
            nf = idx.astype(np.float64)
            return 0.5 * (np.log(nf + 1.0) - np.log(nf))
        if f == "step_bilateral":
            return np.where(idx >= 1, math.log(2.0), 0.0)
        if f == "inverse_step_bilateral":
            return np.where(idx >= 1, math.log(2.0), -math.log(2.0))
        if f == "table_w":
            vals, start = self.params
            off = idx - start
            if idx.size and (off.min() < 0 or off.max() >= len(vals)):
                raise ValueError("index outside table_w range")
            return np.log(np.array(vals))[off]
        raise ValueError(f"unknown weight family {f!r}")

    def log_prefix_pos(self, n: np.ndarray) -> np.ndarray | None:
        """Closed-form prefix sum over s = 1..n of log w, when available.

        Exactness here matters: cumsum over 1e6 terms loses ~1e-9 which the
        product contracts cannot afford.
        """
        n = np.asarray(n, dtype=np.float64)
        f = self.family
        if f == "constant_w":
            return n * math.log(self.params[0])
        if f == "sqrt_ratio":
            return 0.5 * np.log(n + 1.0)
        if f in ("step_bilateral", "inverse_step_bilateral"):
            return n * math.log(2.0)
        return None

    def log_prefix_neg(self, k: np.ndarray) -> np.ndarray | None:
        """Closed-form sum over s = -(k-1)..0 of log w (k terms), when available."""
        k = np.asarray(k, dtype=np.float64)
        f = self.family
        if f == "constant_w":
            return k * math.log(self.params[0])
        if f == "step_bilateral":
            return np.zeros(k.shape)
        if f == "inverse_step_bilateral":
            return -k * math.log(2.0)
        return None

    @property
    def pos_capacity(self) -> int | None:
        """Largest positive index carrying a weight (None = unbounded)."""
        if self.family == "table_w":
            vals, start = self.params
            return start + len(vals) - 1
        return None

    @property
    def neg_capacity(self) -> int | None:
        """Smallest index carrying a weight (None = unbounded below)."""
        if self.family == "table_w":
            return self.params[1]
        return None

    def to_config(self) -> dict:
        f = self.family
        if f == "constant_w":
            return {"family": f, "c": self.params[0]}
        if f == "table_w":
            return {"family": f, "values": list(self.params[0]), "start": self.params[1]}
        return {"family": f}

    @staticmethod
    def from_config(cfg: dict) -> "WeightSeq":
        f = cfg["family"]
        if f == "constant_w":
            return WeightSeq.constant(cfg["c"])
        if f == "sqrt_ratio":
            return WeightSeq.sqrt_ratio()
        if f == "step_bilateral":
            return WeightSeq.step_bilateral()
        if f == "inverse_step_bilateral":
            return WeightSeq.inverse_step_bilateral()
        if f == "table_w":
            return WeightSeq.table(cfg["values"], cfg.get("start", 1))
        raise ValueError(f"unknown weight family {f!r}")


class ProductTable:
    """Prefix sums of log w with O(1) range-product queries.

    The positive-side array holds C(i) = sum_{s=1..i} log w_s; the bilateral
    negative array holds T(k) = sum_{s=-(k-1)..0} log w_s, so that the
    cumulative C extends to all of Z via C(i) = -T(-i) for i < 0. Extension is
    lazy and geometric; queries after construction are read-only.
    """

    def __init__(self, weights: WeightSeq, bilateral: bool, horizon: int = 1024):
        self.weights = weights
        self.bilateral = bilateral and weights.bilateral_ok
        if bilateral and not weights.bilateral_ok:
            raise ValueError(f"{weights.family} weights have no bilateral extension")
        self._lock = threading.Lock()
        pos_h = max(horizon, 16)
        if weights.pos_capacity is not None:
            pos_h = min(pos_h, weights.pos_capacity)
        neg_h = max(horizon, 16)
        if weights.neg_capacity is not None:
            neg_h = min(neg_h, 1 - weights.neg_capacity)
        self._pos = self._build_pos(max(pos_h, 0))
        self._neg = self._build_neg(max(neg_h, 0)) if self.bilateral else None

    def _build_pos(self, n: int) -> np.ndarray:
        ns = np.arange(0, n + 1, dtype=np.int64)
        closed = self.weights.log_prefix_pos(ns)
        if closed is not None:
            out = closed
            out[0] = 0.0
            return out
        out = np.zeros(n + 1)
        out[1:] = np.cumsum(self.weights.log_w(np.arange(1, n + 1)))
        return out

    def _build_neg(self, n: int) -> np.ndarray:
        ks = np.arange(0, n + 1, dtype=np.int64)
        closed = self.weights.log_prefix_neg(ks)
        if closed is not None:
            out = closed
            out[0] = 0.0
            return out
        out = np.zeros(n + 1)
        out[1:] = np.cumsum(self.weights.log_w(-np.arange(0, n)))
        return out

    def ensure(self, pos_hi: int = 0, neg_lo: int = 0) -> None:
        """Grow the table to cover indices up to pos_hi and down to neg_lo."""
        cap_hi = self.weights.pos_capacity
        if cap_hi is not None and pos_hi > cap_hi:
            raise ValueError(f"index {pos_hi} exits the table's range (max {cap_hi})")
        cap_lo = self.weights.neg_capacity
        if cap_lo is not None and neg_lo < 0 and neg_lo + 1 < cap_lo:
            raise ValueError(f"index {neg_lo} exits the table's range (min {cap_lo})")
        with self._lock:
            if pos_hi >= self._pos.shape[0]:
                want = max(pos_hi, 2 * (self._pos.shape[0] - 1))
                if cap_hi is not None:
                    want = min(want, cap_hi)
                self._pos = self._build_pos(want)
            need_neg = max(0, -neg_lo) + 1
            if neg_lo < 0:
                if not self.bilateral:
                    raise ValueError("negative indices require a bilateral table")
                if need_neg >= self._neg.shape[0]:
                    want = max(need_neg, 2 * (self._neg.shape[0] - 1))
                    if cap_lo is not None:
                        want = min(want, 1 - cap_lo)
                    self._neg = self._build_neg(want)

    def cum(self, idx: np.ndarray) -> np.ndarray:
        """Cumulative C(i) for any integer indices (vectorized)."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0)
        lo, hi = int(idx.min()), int(idx.max())
        if lo < 0 and not self.bilateral:
            raise ValueError("negative indices require a bilateral table")
        self.ensure(pos_hi=max(hi, 0), neg_lo=min(lo, 0))
        out = np.empty(idx.shape, dtype=np.float64)
        pos = idx >= 0
        out[pos] = self._pos[idx[pos]]
        if (~pos).any():
            out[~pos] = -self._neg[-idx[~pos]]
        return out

    def log_range(self, a: int, b: int) -> float:
        """log prod_{s=a..b} w_s (empty ranges give 0)."""
        if a > b:
            return 0.0
        if a < 1 and not self.bilateral:
            raise ValueError(
                f"product over [{a}, {b}] exits the unilateral index range"
            )
        c = self.cum(np.array([b, a - 1], dtype=np.int64))
        return float(c[0] - c[1])

    # spec-facing product queries -------------------------------------------
    def forward_log(self, j: int, n: int) -> float:
        """log prod_{i=1..n} w_{j+i}."""
        return self.log_range(j + 1, j + n)

    def backward_log(self, j: int, n: int) -> float:
        """log prod_{i=0..n-1} w_{j-i}."""
        return self.log_range(j - n + 1, j)

    def forward(self, j: int, n: int) -> LogScalar:
        return LogScalar(self.forward_log(j, n), 0.0)

    def backward(self, j: int, n: int) -> LogScalar:
        return LogScalar(self.backward_log(j, n), 0.0)


_TABLES: dict[tuple[WeightSeq, bool], ProductTable] = {}
_TABLES_LOCK = threading.Lock()


def product_table(weights: WeightSeq, bilateral: bool, horizon: int = 1024) -> ProductTable:
    """Shared lazily-extended table for a weight family."""
    key = (weights, bilateral)
    with _TABLES_LOCK:
        pt = _TABLES.get(key)
        if pt is None:
            pt = ProductTable(weights, bilateral, horizon)
            _TABLES[key] = pt
    hi = horizon if weights.pos_capacity is None else min(horizon, weights.pos_capacity)
    lo = -horizon if weights.neg_capacity is None else max(-horizon, weights.neg_capacity)
    pt.ensure(pos_hi=max(hi, 0), neg_lo=min(lo, 0) if bilateral else 0)
    return pt


@dataclass(frozen=True)
class ShiftOp:
    """Backward weighted shift, optionally scaled by a complex premultiplier.

    Realizes operators like ``2B`` (premultiplier 2, unit weights) and
    ``(1/w)B`` without touching the weight sequence.
    """

    side: Side
    weights: WeightSeq
    premultiplier: complex = 1.0 + 0j

    def __post_init__(self):
        if self.side not in (Side.UNILATERAL, Side.BILATERAL):
            raise ValueError("shifts act on unilateral or bilateral vectors")
        if self.side is Side.BILATERAL and not self.weights.bilateral_ok:
            raise ValueError(f"{self.weights.family} weights are unilateral-only")
        if self.premultiplier == 0:
            raise ValueError("premultiplier must be non-zero")
        object.__setattr__(self, "premultiplier", complex(self.premultiplier))

    @property
    def norm_bound(self) -> float:
        return abs(self.premultiplier) * self.weights.sup_weight

    @property
    def pm_log(self) -> float:
        return math.log(abs(self.premultiplier))

    @property
    def pm_arg(self) -> float:
        return math.atan2(self.premultiplier.imag, self.premultiplier.real)

    def table(self, horizon: int = 1024) -> ProductTable:
        return product_table(self.weights, self.side is Side.BILATERAL, horizon)

    def apply(self, x: CoefVec) -> CoefVec:
        """(T x)_j = premult * w_{j+1} * x_{j+1}."""
        if x.side is not self.side:
            raise SideMismatchError(f"{x.side.value} vector under {self.side.value} shift")
        if x.nnz == 0:
            return CoefVec.zero(self.side)
        new_idx = x.indices - 1
        keep = slice(None)
        if self.side is Side.UNILATERAL:
            keep = new_idx >= 1
        idx = new_idx[keep]
        lm = x.log_mags[keep] + self.weights.log_w(x.indices[keep]) + self.pm_log
        ph = wrap_phase(x.phases[keep] + self.pm_arg)
        return CoefVec(self.side, idx, lm, ph)

    def power_apply(self, n: int, x: CoefVec) -> CoefVec:
        """T^n x via weight-product formula, O(nnz) regardless of n.

        Coefficient at j of T^n x is premult^n * prod_{i=1..n} w_{j+i} * x_{j+n}.
        """
        if n < 0:
            raise ValueError("power must be >= 0")
        if x.side is not self.side:
            raise SideMismatchError(f"{x.side.value} vector under {self.side.value} shift")
        if n == 0 or x.nnz == 0:
            return x
        new_idx = x.indices - n
        keep = slice(None)
        if self.side is Side.UNILATERAL:
            keep = new_idx >= 1
        src = x.indices[keep]
        if src.size == 0:
            return CoefVec.zero(self.side)
        pt = self.table(int(src.max()) + 1)
        prod = pt.cum(src) - pt.cum(src - n)
        lm = x.log_mags[keep] + prod + n * self.pm_log
        ph = wrap_phase(x.phases[keep] + n * self.pm_arg)
        return CoefVec(self.side, new_idx[keep], lm, ph)


def scaled_orbit_point(lam: ScalingSeq, T: ShiftOp, n: int, x: CoefVec) -> CoefVec:
    """lam_n * T^n x with all magnitude arithmetic in log domain.

    Entries may exceed float range; they stay as log entries in the result.
    """
    lam_n = eval_log(lam, n)
    return T.power_apply(n, x).scale(lam_n)
