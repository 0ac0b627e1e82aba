"""Series assembly: solution bases, initial value problems, center shifts.

A :class:`SppsSolutionPair` bundles a coefficient table with its expansion
center and an optional gauge weight.  Evaluating it at a parameter value
sums the series with compensated (Neumaier) accumulation, since the terms
span many orders of magnitude at large parameter offsets.  Re-centering the
expansion at a point where a zero-free solution is known keeps truncation
error small while hunting distant eigenvalues.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularInitialMatrix, TruncationWarning
from .grid import GridFn, integrate_cumulative
from .homogeneous import ParticularSolution
from .powers import (
    BoundConstants,
    FormalPowerTable,
    bound_constants,
    compute_formal_powers,
    truncation_bound,
)
from .system import DiracSystem, check_trace_condition

WARN_RTOL = 1e-10   # tail bound above this times solution scale triggers a warning
COND_LIMIT = 1e12   # condition number limit for initial-value matching


@dataclass
class SppsSolutionPair:
    """Solution basis as a parameter power series around ``lambda0``.

    With a gauge weight present, evaluated solutions are already multiplied
    by it, i.e. they solve the original (pre-gauge) system.
    """

    table: FormalPowerTable
    lambda0: complex = 0.0
    gauge: GridFn | None = None
    _bounds: BoundConstants | None = field(default=None, repr=False)

    @property
    def bounds(self) -> BoundConstants:
        if self._bounds is None:
            self._bounds = bound_constants(self.table.system, self.table.source)
        return self._bounds

    @property
    def mesh(self):
        return self.table.mesh


def solution_pair(
    sys: DiracSystem,
    sol: ParticularSolution,
    order: int,
    stop_early: bool = False,
) -> SppsSolutionPair:
    """Build the series basis for a system around center zero."""
    return SppsSolutionPair(compute_formal_powers(sys, sol, order, stop_early))


def _compensated_sum(fns, coeffs: np.ndarray, m: int) -> np.ndarray:
    total = np.zeros(m, dtype=np.complex128)
    comp = np.zeros(m, dtype=np.complex128)
    for coeff, fn in zip(coeffs, fns):
        term = coeff * fn.values
        partial = total + term
        swap = np.abs(total) >= np.abs(term)
        comp += np.where(swap, (total - partial) + term, (term - partial) + total)
        total = partial
    return total + comp


def evaluate_solutions(
    pair: SppsSolutionPair, lam: complex
) -> tuple[tuple[GridFn, GridFn], tuple[GridFn, GridFn]]:
    """Assemble the two basis solutions at the given parameter value.

    Warns with :class:`TruncationWarning` when the rigorous tail bound at
    this offset exceeds ``1e-10`` of the produced solution scale.
    """
    table = pair.table
    mesh = table.mesh
    offset = complex(lam) - complex(pair.lambda0)
    coeffs = table.series_coefficients(offset)
    f = table.source.f.values
    g = table.source.g.values

    u1 = f * _compensated_sum(table.Xt, coeffs, mesh.m)
    v1 = g * _compensated_sum(table.Yt, coeffs, mesh.m)
    u2 = f * _compensated_sum(table.X, coeffs, mesh.m)
    v2 = g * _compensated_sum(table.Y, coeffs, mesh.m)
    if pair.gauge is not None:
        w = pair.gauge.values
        u1, v1, u2, v2 = u1 * w, v1 * w, u2 * w, v2 * w

    scale = max(
        np.abs(u1).max(), np.abs(v1).max(), np.abs(u2).max(), np.abs(v2).max()
    )
    bound = truncation_bound(pair.bounds, table.order, table.radius, abs(offset))
    if bound > WARN_RTOL * scale:
        warnings.warn(
            f"truncation tail bound {bound:.3e} exceeds {WARN_RTOL:.0e} * scale "
            f"({scale:.3e}) at parameter offset |{offset:.6g}|",
            TruncationWarning,
            stacklevel=2,
        )
    return (
        (GridFn(mesh, u1), GridFn(mesh, v1)),
        (GridFn(mesh, u2), GridFn(mesh, v2)),
    )


def solve_ivp(
    pair: SppsSolutionPair, lam: complex, left_values: tuple[complex, complex]
) -> tuple[GridFn, GridFn]:
    """Solution with prescribed values at the left endpoint.

    With the expansion anchored at the left endpoint the basis values there
    are ``(f(a), 0)`` and ``(0, g(a))`` exactly, so the matching constants
    are simple ratios; otherwise a 2x2 system is solved and rejected if its
    condition estimate exceeds 1e12.
    """
    (u1, v1), (u2, v2) = evaluate_solutions(pair, lam)
    y1, y2 = complex(left_values[0]), complex(left_values[1])
    if pair.table.source.x0_index == 0:
        c1 = y1 / u1.values[0]
        c2 = y2 / v2.values[0]
    else:
        matrix = np.array(
            [[u1.values[0], u2.values[0]], [v1.values[0], v2.values[0]]]
        )
        if np.linalg.cond(matrix) > COND_LIMIT:
            raise SingularInitialMatrix(
                f"initial-value matrix condition {np.linalg.cond(matrix):.3e}"
            )
        c1, c2 = np.linalg.solve(matrix, np.array([y1, y2]))
    return c1 * u1 + c2 * u2, c1 * v1 + c2 * v2


def shift_center(
    sys: DiracSystem,
    lambda0: complex,
    seed: tuple[GridFn, GridFn],
    order: int,
    x0_index: int = 0,
) -> SppsSolutionPair:
    """Re-expand the series around ``lambda0`` from a zero-free solution there.

    Moves ``lambda0 R`` into the coefficient matrix.  When ``tr(B R)`` is not
    identically zero the move breaks the symmetry of the coefficient matrix,
    so an exponential gauge ``w = exp(-(lambda0/2) * cumint tr(B R))`` is
    split off and the seed divided by it; evaluated solutions are multiplied
    back, so they always solve the original system.
    """
    lam0 = complex(lambda0)
    symmetric, _ = check_trace_condition(sys.R)
    mesh = sys.mesh

    q_shift = GridFn(
        mesh,
        sys.q.values - lam0 * 0.5 * (sys.r12.values + sys.r21.values),
    )
    shifted = DiracSystem(
        p1=GridFn(mesh, sys.p1.values - lam0 * sys.r11.values),
        q=q_shift,
        p2=GridFn(mesh, sys.p2.values - lam0 * sys.r22.values),
        r11=sys.r11, r12=sys.r12, r21=sys.r21, r22=sys.r22,
    )

    u, v = seed
    gauge: GridFn | None = None
    if not symmetric and lam0 != 0:
        trace_br = GridFn(mesh, sys.r21.values - sys.r12.values)
        w_vals = np.exp(
            (-lam0 / 2.0) * integrate_cumulative(trace_br, x0_index).values
        )
        gauge = GridFn(mesh, w_vals)
        u = GridFn(mesh, u.values / w_vals)
        v = GridFn(mesh, v.values / w_vals)

    sol = ParticularSolution(u, v, x0_index, shifted.P)
    table = compute_formal_powers(shifted, sol, order)
    return SppsSolutionPair(table, lam0, gauge)
