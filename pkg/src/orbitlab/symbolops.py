"""Adjoints of polynomial multiplication operators on Hardy coefficients.

On the coefficient side the adjoint acts as a banded backward operator:
``(M* f)_n = sum_j conj(c_j) f_{n+j}``. Reproducing kernels ``k_z`` with
coefficients ``conj(z)^n`` are its eigenvectors, and the dynamics of the
adjoint is decided entirely by whether the symbol's range over the open disk
meets the unit circle. The range test returns a certificate: an interior
witness for intersection, or a max/min-modulus boundary certificate with
Lipschitz slack (plus a winding-number zero count) for disjointness.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np

from .lspace import CoefVec, Side

__all__ = [
    "PolySymbol",
    "RangeKind",
    "RangeCertificate",
    "AdjointClass",
    "SymbolVerdict",
    "KernelTruncation",
    "apply_adjoint",
    "kernel_vector",
    "eigen_check",
    "winding_number",
    "range_circle_test",
    "classify_adjoint",
]

KERNEL_MAX_MODULUS = 0.95  # beyond this the geometric tail bound is useless


@dataclass(frozen=True)
class PolySymbol:
    """Polynomial symbol phi(z) = sum_j coeffs[j] z^j, low degree first."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(complex(c) for c in self.coeffs)
        while len(cs) > 1 and cs[-1] == 0:
            cs = cs[:-1]
        if not cs:
            cs = (0j,)
        object.__setattr__(self, "coeffs", cs)

    @staticmethod
    def constant(a: complex) -> "PolySymbol":
        return PolySymbol((complex(a),))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    def __call__(self, z):
        return np.polyval(np.array(self.coeffs[::-1]), z)

    def derivative_sup(self) -> float:
        """sup |phi'| on the closed disk, bounded by sum j*|c_j|."""
        return float(sum(j * abs(c) for j, c in enumerate(self.coeffs)))

    def sup_bound(self) -> float:
        return float(sum(abs(c) for c in self.coeffs))

    def scale(self, a: complex) -> "PolySymbol":
        return PolySymbol(tuple(c * a for c in self.coeffs))

    def to_config(self) -> list:
        return [[c.real, c.imag] for c in self.coeffs]

    @staticmethod
    def from_config(coeffs) -> "PolySymbol":
        return PolySymbol(tuple(complex(v[0], v[1]) if not isinstance(v, (int, float)) else complex(v) for v in coeffs))


def apply_adjoint(phi: PolySymbol, x: CoefVec, trunc: int) -> CoefVec:
    """(M* x)_n = sum_{j=0..d} conj(c_j) x_{n+j}; exact on finite supports."""
    if x.side is not Side.HARDY:
        raise ValueError("adjoint multipliers act on Hardy coefficient vectors")
    if x.nnz == 0:
        return x
    if int(x.indices.max()) > trunc:
        raise ValueError(f"support exceeds truncation {trunc}")
    x._require_float_range()
    vals = np.exp(x.log_mags) * np.exp(1j * x.phases)
    top = int(x.indices.max())
    out = np.zeros(top + 1, dtype=complex)
    for j, c in enumerate(phi.coeffs):
        if c == 0:
            continue
        keep = x.indices >= j
        out[x.indices[keep] - j] += np.conj(c) * vals[keep]
    nz = np.flatnonzero(np.abs(out) > 0.0)
    return CoefVec.from_pairs(Side.HARDY, [(int(i), out[i]) for i in nz])


@dataclass(frozen=True)
class KernelTruncation:
    """Truncated reproducing kernel plus the exact geometric tail bound."""

    vec: CoefVec
    z: complex
    trunc: int
    tail_sq_bound: float


def kernel_vector(z: complex, trunc: int) -> KernelTruncation:
    """Coefficients conj(z)^n for n = 0..trunc; tail_sq = |z|^(2(N+1))/(1-|z|^2)."""
    z = complex(z)
    r = abs(z)
    if r >= 1.0:
        raise ValueError(f"kernel point must satisfy |z| < 1, got |z| = {r}")
    if r > KERNEL_MAX_MODULUS:
        raise ValueError(
            f"kernel point too close to the boundary: |z| = {r} > {KERNEL_MAX_MODULUS}"
        )
    if trunc < 0:
        raise ValueError("truncation must be >= 0")
    n = np.arange(trunc + 1, dtype=np.int64)
    if z == 0:
        vec = CoefVec.basis(Side.HARDY, 0)
        return KernelTruncation(vec, z, trunc, 0.0)
    lm = n * math.log(r)
    ph = np.remainder(-n * cmath.phase(z) + math.pi, 2 * math.pi) - math.pi
    keep = lm > -745.0  # drop entries that underflow to exactly 0
    vec = CoefVec.from_log_entries(Side.HARDY, n[keep], lm[keep], ph[keep])
    tail = r ** (2 * (trunc + 1)) / (1.0 - r * r)
    return KernelTruncation(vec, z, trunc, tail)


def eigen_check(phi: PolySymbol, z: complex, trunc: int) -> tuple[float, float]:
    """Relative eigen-residual of the truncated kernel under the adjoint.

    Returns (residual, bound): residual = |M* k - conj(phi(z)) k| / |k| and
    the analytic contract bound (d+1) * max|c| * (1 + |phi(z)|) * sqrt(tail).

    The residual lives at the scale of the kernel tail, far below double
    rounding on the large entries, so it is evaluated from the coefficient
    definition in multiprecision with enough digits to resolve |z|^trunc.
    """
    import mpmath as mp

    kernel_vector(z, trunc)  # validates |z| and the truncation
    d = phi.degree
    r = abs(z)
    dps = 50
    if 0 < r < 1:
        dps = max(50, int((trunc + d + 2) * (-math.log10(r))) + 30)
    with mp.workdps(dps):
        zb = mp.conj(mp.mpc(z))
        cbar = [mp.conj(mp.mpc(c)) for c in phi.coeffs]
        k = [zb**n for n in range(trunc + 1)]
        lam = mp.fsum(cbar[j] * zb**j for j in range(d + 1))
        res2 = mp.mpf(0)
        for n in range(trunc + 1):
            v = mp.fsum(cbar[j] * k[n + j] for j in range(d + 1) if n + j <= trunc)
            res2 += abs(v - lam * k[n]) ** 2
        k2 = mp.fsum(abs(v) ** 2 for v in k)
        residual = float(mp.sqrt(res2 / k2))
        lam_abs = float(abs(lam))
    cmax = max(abs(c) for c in phi.coeffs)
    # sqrt(tail) evaluated in log form: squaring first would underflow for
    # small |z| at large truncations and turn the bound into a spurious 0
    if r == 0:
        return residual, 0.0
    log_bound = (
        math.log((d + 1) * cmax * (1.0 + lam_abs))
        + (trunc + 1) * math.log(r)
        - 0.5 * math.log1p(-r * r)
    )
    return residual, math.exp(log_bound) if log_bound > -745.0 else 0.0


class RangeKind(enum.Enum):
    INTERSECTS = "intersects"
    DISJOINT_INSIDE = "disjoint_inside"
    DISJOINT_OUTSIDE = "disjoint_outside"
    UNCERTAIN = "uncertain"


# exact-touching ranges (boundary extremum equal to 1) are resolved up to
# this equality tolerance, like the constant-symbol classifier
BOUNDARY_EQ_TOL = 1e-12


@dataclass(frozen=True)
class RangeCertificate:
    """Verdict on phi(D) versus the unit circle, with checkable evidence.

    * intersects: ``witness`` lies strictly inside the disk and
      ``||phi(witness)| - 1| <= tol`` on re-evaluation.
    * disjoint_inside: boundary max of |phi| at most 1, certified either by
      grid max + Lipschitz slack < 1 or by the exact critical-point maximum;
      the maximum principle then keeps the open-disk image strictly inside.
    * disjoint_outside: winding number 0 (no zeros in the disk) plus boundary
      min at least 1 (grid - slack > 1, or exact critical-point minimum);
      the minimum principle keeps the image strictly outside.
    """

    kind: RangeKind
    tol: float
    grid: int
    boundary_min: float
    boundary_max: float
    slack: float
    min_exact: float
    max_exact: float
    winding: int | None = None
    witness: complex | None = None
    margin: float = 0.0

    def verify(self, phi: PolySymbol) -> bool:
        if self.kind is RangeKind.INTERSECTS:
            w = self.witness
            return (
                w is not None
                and abs(w) < 1.0
                and abs(abs(complex(phi(w))) - 1.0) <= self.tol
            )
        if self.kind is RangeKind.DISJOINT_INSIDE:
            return (
                self.boundary_max + self.slack < 1.0
                or self.max_exact <= 1.0 + BOUNDARY_EQ_TOL
            )
        if self.kind is RangeKind.DISJOINT_OUTSIDE:
            if self.winding != 0:
                return False
            return (
                self.boundary_min - self.slack > 1.0
                or self.min_exact >= 1.0 - BOUNDARY_EQ_TOL
            )
        return True

    def to_config(self) -> dict:
        return {
            "kind": self.kind.value,
            "tol": self.tol,
            "grid": self.grid,
            "boundary_min": self.boundary_min,
            "boundary_max": self.boundary_max,
            "slack": self.slack,
            "min_exact": self.min_exact,
            "max_exact": self.max_exact,
            "winding": self.winding,
            "witness": None if self.witness is None else [self.witness.real, self.witness.imag],
            "margin": self.margin,
        }

    @staticmethod
    def from_config(cfg: dict) -> "RangeCertificate":
        w = cfg.get("witness")
        return RangeCertificate(
            kind=RangeKind(cfg["kind"]),
            tol=cfg["tol"],
            grid=cfg["grid"],
            boundary_min=cfg["boundary_min"],
            boundary_max=cfg["boundary_max"],
            slack=cfg["slack"],
            min_exact=cfg["min_exact"],
            max_exact=cfg["max_exact"],
            winding=cfg.get("winding"),
            witness=None if w is None else complex(w[0], w[1]),
            margin=cfg.get("margin", 0.0),
        )


def boundary_extrema(phi: PolySymbol, grid: int = 4096) -> tuple[float, float]:
    """Exact min and max of |phi| on the unit circle.

    |phi(e^{i theta})|^2 is a real trigonometric polynomial; its extrema sit
    at the circle roots of the derivative polynomial, which are enumerated
    with np.roots and merged with a sampling grid as a safety net.
    """
    cs = np.array(phi.coeffs)
    d = phi.degree
    theta = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    mods = np.abs(phi(np.exp(1j * theta)))
    lo, hi = float(mods.min()), float(mods.max())
    if d >= 1:
        # a_m = sum_j c_j conj(c_{j-m}) for m = -d..d; derivative coeffs i*m*a_m
        a = np.zeros(2 * d + 1, dtype=complex)
        for m in range(-d, d + 1):
            s = 0j
            for j in range(max(0, m), min(d, d + m) + 1):
                s += cs[j] * np.conj(cs[j - m])
            a[m + d] = s
        deriv = np.array([1j * m * a[m + d] for m in range(-d, d + 1)])
        if np.any(deriv != 0):
            roots = np.roots(deriv[::-1])
            circle = roots[np.abs(np.abs(roots) - 1.0) < 1e-6]
            if circle.size:
                vals = np.abs(phi(circle / np.abs(circle)))
                lo = min(lo, float(vals.min()))
                hi = max(hi, float(vals.max()))
    return lo, hi


def winding_number(phi: PolySymbol, grid: int) -> tuple[int | None, float]:
    """Winding of phi(e^{i theta}) around 0 by argument accumulation.

    Returns (winding or None when unreliable, min boundary modulus). The
    count is trusted only if no step turns by more than pi/2 and the curve
    stays safely away from the origin relative to the grid spacing.
    """
    theta = np.linspace(0.0, 2.0 * math.pi, grid, endpoint=False)
    vals = phi(np.exp(1j * theta))
    mods = np.abs(vals)
    mmin = float(mods.min())
    lip = phi.derivative_sup()
    h = 2.0 * math.pi / grid
    if mmin <= max(lip * h, 1e-300):
        return None, mmin
    rolled = np.roll(vals, -1)
    steps = np.angle(rolled / vals)
    if float(np.max(np.abs(steps))) > math.pi / 2:
        return None, mmin
    w = float(np.sum(steps)) / (2.0 * math.pi)
    return int(round(w)), mmin


def _interior_crossing(phi: PolySymbol, p_lo: complex, p_hi: complex, tol: float) -> complex | None:
    """Bisect |phi| - 1 along the segment [p_lo, p_hi] inside the disk."""
    f_lo = abs(complex(phi(p_lo))) - 1.0
    f_hi = abs(complex(phi(p_hi))) - 1.0
    if f_lo > 0 or f_hi < 0:
        return None
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        p = p_lo + mid * (p_hi - p_lo)
        f = abs(complex(phi(p))) - 1.0
        if abs(f) <= tol * 0.5:
            return p
        if f < 0:
            lo = mid
        else:
            hi = mid
    p = p_lo + 0.5 * (lo + hi) * (p_hi - p_lo)
    return p if abs(abs(complex(phi(p))) - 1.0) <= tol else None


def _find_low_point(phi: PolySymbol, theta: np.ndarray, mods: np.ndarray, lip: float) -> complex | None:
    """A point strictly inside the disk with |phi| < 1, if one is findable."""
    # zeros inside the disk pin |phi| to 0 there
    if phi.degree >= 1:
        roots = np.roots(np.array(phi.coeffs[::-1]))
        inside = roots[np.abs(roots) < 1.0 - 1e-12]
        if inside.size:
            return complex(inside[np.argmin(np.abs(inside))])
    # otherwise pull the lowest boundary sample slightly inward
    i = int(np.argmin(mods))
    base = float(mods[i])
    for delta in (1e-12, 1e-9, 1e-6, 1e-3):
        cand = (1.0 - delta) * np.exp(1j * float(theta[i]))
        if abs(complex(phi(cand))) < 1.0:
            return complex(cand)
    if base < 1.0:
        cand = (1.0 - min(1e-6, (1.0 - base) / (2.0 * max(lip, 1e-30)))) * np.exp(
            1j * float(theta[i])
        )
        if abs(complex(phi(cand))) < 1.0:
            return complex(cand)
    return None


def _find_high_point(phi: PolySymbol, theta: np.ndarray, mods: np.ndarray) -> complex | None:
    i = int(np.argmax(mods))
    for delta in (1e-12, 1e-9, 1e-6, 1e-3):
        cand = (1.0 - delta) * np.exp(1j * float(theta[i]))
        if abs(complex(phi(cand))) > 1.0:
            return complex(cand)
    return None


def range_circle_test(
    phi: PolySymbol, grid: int = 4096, tol: float = 1e-9, refinements: int = 1
) -> RangeCertificate:
    """Classify the range of phi over the open unit disk against the circle.

    Decision ladder (phi non-constant):
      * boundary max of |phi| at most 1  =>  disjoint inside (max principle:
        the open-disk image stays strictly below the boundary max);
      * winding 0 and boundary min at least 1  =>  disjoint outside (minimum
        principle for zero-free holomorphic functions);
      * an interior point below 1 and one above 1  =>  intersects, with a
        bisected witness on the segment between them;
      * otherwise uncertain, with the achieved margins recorded.
    """
    if grid < 256:
        raise ValueError("need at least 256 boundary samples")
    if phi.is_constant:
        a = abs(phi.coeffs[0])
        if abs(a - 1.0) <= tol:
            kind, witness = RangeKind.INTERSECTS, 0j
        elif a < 1.0:
            kind, witness = RangeKind.DISJOINT_INSIDE, None
        else:
            kind, witness = RangeKind.DISJOINT_OUTSIDE, None
        return RangeCertificate(
            kind, tol, 1, a, a, 0.0, a, a, winding=0, witness=witness,
            margin=abs(a - 1.0),
        )

    lip = phi.derivative_sup()
    m_star, M_star = boundary_extrema(phi, grid)
    cert = None
    for round_idx in range(refinements + 1):
        g = grid << round_idx
        theta = np.linspace(0.0, 2.0 * math.pi, g, endpoint=False)
        mods = np.abs(phi(np.exp(1j * theta)))
        m_lo, m_hi = float(mods.min()), float(mods.max())
        slack = lip * math.pi / g
        winding, _ = winding_number(phi, g)

        if m_hi + slack < 1.0 or M_star <= 1.0 + BOUNDARY_EQ_TOL:
            return RangeCertificate(
                RangeKind.DISJOINT_INSIDE, tol, g, m_lo, m_hi, slack,
                m_star, M_star, winding=winding, margin=1.0 - m_hi,
            )
        if winding == 0 and (m_lo - slack > 1.0 or m_star >= 1.0 - BOUNDARY_EQ_TOL):
            return RangeCertificate(
                RangeKind.DISJOINT_OUTSIDE, tol, g, m_lo, m_hi, slack,
                m_star, M_star, winding=winding, margin=m_lo - 1.0,
            )

        witness = None
        if M_star > 1.0:
            p_lo = _find_low_point(phi, theta, mods, lip)
            p_hi = _find_high_point(phi, theta, mods)
            if p_lo is not None and p_hi is not None:
                witness = _interior_crossing(phi, p_lo, p_hi, tol)
        if witness is not None and abs(witness) < 1.0:
            return RangeCertificate(
                RangeKind.INTERSECTS, tol, g, m_lo, m_hi, slack,
                m_star, M_star, winding=winding, witness=witness,
                margin=abs(abs(complex(phi(witness))) - 1.0),
            )
        cert = RangeCertificate(
            RangeKind.UNCERTAIN, tol, g, m_lo, m_hi, slack,
            m_star, M_star, winding=winding,
            margin=min(abs(m_hi - 1.0), abs(m_lo - 1.0)),
        )
    return cert


class AdjointClass(enum.Enum):
    FH_AND_TMR = "frequently_hypercyclic_and_multiply_recurrent"
    NOT_RECURRENT = "not_recurrent"
    CONSTANT_RECURRENT = "constant_recurrent"
    CONSTANT_NOT_RECURRENT = "constant_not_recurrent"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class SymbolVerdict:
    kind: AdjointClass
    certificate: RangeCertificate | None


CONSTANT_UNIMODULAR_TOL = 1e-12


def classify_adjoint(phi: PolySymbol, grid: int = 4096, tol: float = 1e-9) -> SymbolVerdict:
    """Dynamics of the adjoint multiplier from the range of its symbol.

    Non-constant symbols: range meets the circle iff the adjoint is
    frequently hypercyclic iff it is topologically multiply recurrent;
    disjoint ranges give an operator that is not even recurrent. A constant
    symbol a is recurrent exactly when |a| = 1.
    """
    if phi.is_constant:
        a = abs(phi.coeffs[0])
        if abs(a - 1.0) <= CONSTANT_UNIMODULAR_TOL:
            return SymbolVerdict(AdjointClass.CONSTANT_RECURRENT, None)
        return SymbolVerdict(AdjointClass.CONSTANT_NOT_RECURRENT, None)
    cert = range_circle_test(phi, grid=grid, tol=tol)
    if cert.kind is RangeKind.INTERSECTS:
        return SymbolVerdict(AdjointClass.FH_AND_TMR, cert)
    if cert.kind in (RangeKind.DISJOINT_INSIDE, RangeKind.DISJOINT_OUTSIDE):
        return SymbolVerdict(AdjointClass.NOT_RECURRENT, cert)
    return SymbolVerdict(AdjointClass.UNCERTAIN, cert)
