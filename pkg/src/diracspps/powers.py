"""Recursive construction of the series coefficient functions (formal powers).

Starting from a zero-free seed ``(f, g)`` of the homogeneous system, two
families of functions are built by alternating pointwise products with
cumulative integrals.  Scaled by ``lambda^n / n!`` they become the Taylor
coefficients (in the spectral parameter) of a solution basis.  The module
also provides the max-norm growth constants and the resulting geometric
tail bound used for truncation diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .grid import GridFn, cumulative_values
from .homogeneous import ParticularSolution
from .system import DiracSystem

STOP_RTOL = 1e-16        # machine-zero criterion for series coefficients
SCALED_SWITCH = 1e280    # switch to factorial-scaled storage beyond this norm
TAIL_CUTOFF = 1e-20      # relative cutoff when summing the tail bound
DEFAULT_RADIUS_ETA = 1e-3  # last-term threshold defining the empirical trusted radius


@dataclass(frozen=True)
class BoundConstants:
    """Max-norm constants controlling coefficient growth.

    ``c`` bounds the four order-0 functions, ``c1`` the two combined
    weights feeding the inner integral, ``c2`` the seed-normalized diagonal
    weights and ``c3`` the ratio-weighted right-hand-side entries.
    """

    c: float
    c1: float
    c2: float
    c3: float


class TruncationSuggestion(NamedTuple):
    order: int
    converged: bool


@dataclass
class FormalPowerTable:
    """Coefficient families of orders 0..order for one seed and one system.

    When ``scaled`` is true the stored arrays are pre-divided by n!, which
    the construction switches to automatically if norms threaten overflow.
    ``scaled_norms[n]`` always holds max-family-norm / n!.
    """

    order: int
    X: list[GridFn]
    Y: list[GridFn]
    Xt: list[GridFn]
    Yt: list[GridFn]
    Z: list[GridFn]
    Zt: list[GridFn]
    source: ParticularSolution
    system: DiracSystem
    scaled: bool
    scaled_norms: np.ndarray
    converged: bool

    @property
    def mesh(self):
        return self.system.mesh

    @property
    def radius(self) -> float:
        """Largest distance from the anchor node to an endpoint."""
        mesh = self.mesh
        x0 = mesh.a + self.source.x0_index * mesh.h
        return max(mesh.b - x0, x0 - mesh.a)

    def series_coefficients(self, lam_delta: complex) -> np.ndarray:
        """Multipliers for orders 0..order at parameter offset ``lam_delta``."""
        coeffs = np.empty(self.order + 1, dtype=np.complex128)
        coeffs[0] = 1.0
        for n in range(1, self.order + 1):
            coeffs[n] = coeffs[n - 1] * lam_delta
            if not self.scaled:
                coeffs[n] /= n
        return coeffs

    def family_endpoint(self, family: str, node: int) -> np.ndarray:
        """Values of one family at a single node, orders 0..order."""
        fns = getattr(self, family)
        return np.array([fn.values[node] for fn in fns], dtype=np.complex128)


def _max_norm(*arrays: np.ndarray) -> float:
    return max(float(np.abs(a).max()) for a in arrays)


def compute_formal_powers(
    sys: DiracSystem,
    sol: ParticularSolution,
    order: int,
    stop_early: bool = False,
) -> FormalPowerTable:
    """Build the coefficient table up to the requested order.

    Each order consumes one cumulative integral for the inner accumulator
    and one per family member; all integrals are anchored at the seed's
    anchor node.  With ``stop_early`` the recursion stops at the first order
    whose scaled norm is machine-negligible relative to the largest one
    seen, which is also the criterion reported by
    :func:`suggest_truncation`.
    """
    if order < 0:
        raise ValueError("order must be >= 0")
    mesh = sys.mesh
    h = mesh.h
    x0 = sol.x0_index
    f = sol.f.values
    g = sol.g.values
    kappa = sol.kappa

    w_p2 = sys.p2.values / (f * f)
    w_p1 = sys.p1.values / (g * g)
    a1 = f * f * sys.r11.values + g * g * sys.r21.values
    a2 = f * f * sys.r12.values + g * g * sys.r22.values
    m11 = sys.r11.values * f / g
    m12 = sys.r12.values
    m21 = sys.r21.values
    m22 = sys.r22.values * g / f

    int_p2 = cumulative_values(w_p2, h, x0)
    int_p1 = cumulative_values(w_p1, h, x0)
    x_cur = kappa * int_p2
    y_cur = 1.0 + kappa * int_p1
    xt_cur = 1.0 - x_cur
    yt_cur = -kappa * int_p1

    def wrap(values: np.ndarray) -> GridFn:
        return GridFn(mesh, values)

    X, Y, Xt, Yt, Z, Zt = [], [], [], [], [], []
    norms: list[float] = []
    scaled = False
    converged = False
    n = 0
    while True:
        norm_n = _max_norm(x_cur, y_cur, xt_cur, yt_cur)
        if not scaled and norm_n > SCALED_SWITCH:
            # Stored entries cover orders 0..n-1; the current arrays are order n.
            scaled = True
            running = 1.0
            for k in range(1, n):
                running *= k
                for fam in (X, Y, Xt, Yt, Z, Zt):
                    fam[k] = wrap(fam[k].values / running)
            fact_n = math.exp(math.lgamma(n + 1))
            x_cur, y_cur = x_cur / fact_n, y_cur / fact_n
            xt_cur, yt_cur = xt_cur / fact_n, yt_cur / fact_n
            norm_n /= fact_n
        if scaled or norm_n == 0.0:
            scaled_norm = norm_n if scaled else 0.0
        else:
            scaled_norm = math.exp(math.log(norm_n) - math.lgamma(n + 1))
        norms.append(scaled_norm)

        X.append(wrap(x_cur))
        Y.append(wrap(y_cur))
        Xt.append(wrap(xt_cur))
        Yt.append(wrap(yt_cur))
        z_cur = cumulative_values(x_cur * a1 + y_cur * a2, h, x0)
        zt_cur = cumulative_values(xt_cur * a1 + yt_cur * a2, h, x0)
        Z.append(wrap(z_cur))
        Zt.append(wrap(zt_cur))

        if n >= 1 and norms[n] < STOP_RTOL * (1.0 + max(norms)):
            converged = True
            if stop_early:
                break
        if n == order:
            break

        factor = 1.0 if scaled else float(n + 1)
        x_next = factor * cumulative_values(
            -m21 * x_cur - m22 * y_cur + w_p2 * z_cur, h, x0
        )
        y_next = factor * cumulative_values(
            m11 * x_cur + m12 * y_cur + w_p1 * z_cur, h, x0
        )
        xt_next = factor * cumulative_values(
            -m21 * xt_cur - m22 * yt_cur + w_p2 * zt_cur, h, x0
        )
        yt_next = factor * cumulative_values(
            m11 * xt_cur + m12 * yt_cur + w_p1 * zt_cur, h, x0
        )
        x_cur, y_cur, xt_cur, yt_cur = x_next, y_next, xt_next, yt_next
        n += 1

    return FormalPowerTable(
        order=len(X) - 1,
        X=X, Y=Y, Xt=Xt, Yt=Yt, Z=Z, Zt=Zt,
        source=sol,
        system=sys,
        scaled=scaled,
        scaled_norms=np.array(norms),
        converged=converged,
    )


def suggest_truncation(table: FormalPowerTable) -> TruncationSuggestion:
    """Smallest order whose scaled norm is machine-negligible.

    Returns the table's own order with ``converged=False`` when no order
    satisfies the criterion (the caller should treat the series as not yet
    settled).
    """
    norms = table.scaled_norms
    running_max = 0.0
    for n, value in enumerate(norms):
        running_max = max(running_max, value)
        if n >= 1 and value < STOP_RTOL * (1.0 + running_max):
            return TruncationSuggestion(n, True)
    return TruncationSuggestion(table.order, False)


def bound_constants(sys: DiracSystem, sol: ParticularSolution) -> BoundConstants:
    """Max-norm growth constants for the coefficient families."""
    f = sol.f.values
    g = sol.g.values
    h = sys.mesh.h
    x0 = sol.x0_index
    kappa = sol.kappa
    int_p2 = cumulative_values(sys.p2.values / (f * f), h, x0)
    int_p1 = cumulative_values(sys.p1.values / (g * g), h, x0)
    x0_fn = kappa * int_p2
    y0_fn = 1.0 + kappa * int_p1
    c = _max_norm(x0_fn, y0_fn, 1.0 - x0_fn, -kappa * int_p1)
    c1 = _max_norm(
        f * f * sys.r11.values + g * g * sys.r21.values,
        f * f * sys.r12.values + g * g * sys.r22.values,
    )
    c2 = _max_norm(sys.p1.values / (g * g), sys.p2.values / (f * f))
    c3 = _max_norm(
        sys.r11.values * f / g,
        sys.r12.values,
        sys.r21.values,
        sys.r22.values * g / f,
    )
    return BoundConstants(c=c, c1=c1, c2=c2, c3=c3)


def truncation_bound(
    bc: BoundConstants, order: int, radius: float, lambda_abs: float
) -> float:
    """Tail estimate sum_{n > order} c * a^n / n! with a = 2 |lambda| r (c1 c2 r + c3).

    Geometric-over-factorial tail; summed until terms fall below 1e-20 of
    the partial sum.  Returns ``inf`` when the bound overflows double
    precision (it is only compared against accuracy thresholds).
    """
    if min(order, radius, lambda_abs) < 0:
        raise ValueError("inputs must be nonnegative")
    a = 2.0 * lambda_abs * radius * (bc.c1 * bc.c2 * radius + bc.c3)
    if a == 0.0 or bc.c == 0.0:
        return 0.0
    log_c = math.log(bc.c)
    log_first = (order + 1) * math.log(a) - math.lgamma(order + 2)
    if log_first + log_c > 700.0:
        return math.inf
    if a <= order + 1:
        term = math.exp(log_first)
        total = 0.0
        n = order + 1
        while True:
            total += term
            n += 1
            term *= a / n
            if term < TAIL_CUTOFF * total:
                break
        return bc.c * total
    if a > 700.0:
        return math.inf
    partial = math.fsum(
        math.exp(k * math.log(a) - math.lgamma(k + 1)) for k in range(order + 1)
    )
    return bc.c * max(math.exp(a) - partial, 0.0)


def empirical_radius(table: FormalPowerTable, eta: float = DEFAULT_RADIUS_ETA) -> float:
    """Largest parameter offset at which the last retained term stays small.

    Solves ``scaled_norm[N] * r^N = eta * max_n scaled_norm[n]``; the result
    gates root acceptance.  Unlike the rigorous tail bound (whose 2^n
    growth factor is far too pessimistic to be useful as a gate), this
    tracks the actually computed coefficient norms.
    """
    n = table.order
    if n == 0:
        return math.inf
    last = float(table.scaled_norms[n])
    top = float(table.scaled_norms.max())
    if last == 0.0 or top == 0.0:
        return math.inf
    return math.exp((math.log(eta) + math.log(top) - math.log(last)) / n)
