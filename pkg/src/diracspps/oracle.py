"""Independent reference integrator (classical RK4) for validation.

Deliberately separate from the series machinery: used only to cross-check
solutions in tests and via the CLI's ``--oracle-check`` flag.  Works on a
refined mesh (coefficients evaluated exactly for callables, by panel-wise
quintic interpolation for mesh functions) and reports a global error
estimate from a step-halved rerun.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import StepSizeTooCoarse
from .grid import GridFn, Mesh
from .system import DiracSystem, GeneralLinearSystem

MatrixFn = Callable[[np.ndarray, complex], np.ndarray]


@dataclass(frozen=True)
class OracleSolution:
    u: GridFn
    v: GridFn
    error_estimate: float


def dirac_matrix(sys: DiracSystem) -> MatrixFn:
    """Right-hand-side matrix ``A`` of ``Y' = A Y`` for a Dirac-type system."""

    def fn(xs: np.ndarray, lam: complex) -> np.ndarray:
        vals = {
            name: getattr(sys, name).interpolate(xs)
            for name in ("p1", "q", "p2", "r11", "r12", "r21", "r22")
        }
        out = np.empty((len(xs), 2, 2), dtype=np.complex128)
        out[:, 0, 0] = vals["q"] - lam * vals["r21"]
        out[:, 0, 1] = vals["p2"] - lam * vals["r22"]
        out[:, 1, 0] = -(vals["p1"] - lam * vals["r11"])
        out[:, 1, 1] = -(vals["q"] - lam * vals["r12"])
        return out

    return fn


def general_matrix(sys: GeneralLinearSystem) -> MatrixFn:
    """Right-hand-side matrix for a general system (``Y' = PP^-1 (lam RR - QQ) Y``)."""

    def interp(mat) -> Callable[[np.ndarray], np.ndarray]:
        def at(xs: np.ndarray) -> np.ndarray:
            out = np.empty((len(xs), 2, 2), dtype=np.complex128)
            out[:, 0, 0] = mat.e11.interpolate(xs)
            out[:, 0, 1] = mat.e12.interpolate(xs)
            out[:, 1, 0] = mat.e21.interpolate(xs)
            out[:, 1, 1] = mat.e22.interpolate(xs)
            return out

        return at

    pp_at, qq_at, rr_at = interp(sys.PP), interp(sys.QQ), interp(sys.RR)

    def fn(xs: np.ndarray, lam: complex) -> np.ndarray:
        pp = pp_at(xs)
        rhs = lam * rr_at(xs) - qq_at(xs)
        det = pp[:, 0, 0] * pp[:, 1, 1] - pp[:, 0, 1] * pp[:, 1, 0]
        inv = np.empty_like(pp)
        inv[:, 0, 0] = pp[:, 1, 1]
        inv[:, 0, 1] = -pp[:, 0, 1]
        inv[:, 1, 0] = -pp[:, 1, 0]
        inv[:, 1, 1] = pp[:, 0, 0]
        inv /= det[:, None, None]
        return inv @ rhs

    return fn


def _run_rk4(
    matrix_fn: MatrixFn, lam: complex, y0: np.ndarray, mesh: Mesh, refine: int
) -> np.ndarray:
    steps = (mesh.m - 1) * refine
    h = (mesh.b - mesh.a) / steps
    xs = mesh.a + h * np.arange(steps + 1)
    mids = xs[:-1] + 0.5 * h
    a_nodes = matrix_fn(xs, lam)
    a_mid = matrix_fn(mids, lam)

    eye = np.eye(2, dtype=np.complex128)
    k1 = a_nodes[:-1]
    k2 = a_mid @ (eye + (0.5 * h) * k1)
    k3 = a_mid @ (eye + (0.5 * h) * k2)
    k4 = a_nodes[1:] @ (eye + h * k3)
    phi = eye + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    p11 = phi[:, 0, 0].tolist()
    p12 = phi[:, 0, 1].tolist()
    p21 = phi[:, 1, 0].tolist()
    p22 = phi[:, 1, 1].tolist()
    u, v = complex(y0[0]), complex(y0[1])
    out = np.empty((mesh.m, 2), dtype=np.complex128)
    out[0] = (u, v)
    row = 0
    for j in range(steps):
        u, v = p11[j] * u + p12[j] * v, p21[j] * u + p22[j] * v
        if (j + 1) % refine == 0:
            row += 1
            out[row] = (u, v)
    return out


def integrate_linear_system(
    matrix_fn: MatrixFn,
    lam: complex,
    initial: tuple[complex, complex],
    mesh: Mesh,
    refine: int = 10,
    tol: float | None = None,
) -> OracleSolution:
    """RK4 solution of ``Y' = A(x; lam) Y`` from the left endpoint.

    Integrates on a ``refine``-times finer grid and downsamples; the error
    estimate is the max-norm difference against a 2x finer rerun.  Raises
    :class:`StepSizeTooCoarse` if the estimate exceeds ``tol``.
    """
    y0 = np.array([initial[0], initial[1]], dtype=np.complex128)
    coarse = _run_rk4(matrix_fn, lam, y0, mesh, refine)
    fine = _run_rk4(matrix_fn, lam, y0, mesh, 2 * refine)
    error = float(np.abs(coarse - fine).max())
    if tol is not None and error > tol:
        raise StepSizeTooCoarse(f"error estimate {error:.3e} exceeds {tol:.3e}")
    return OracleSolution(
        u=GridFn(mesh, fine[:, 0]),
        v=GridFn(mesh, fine[:, 1]),
        error_estimate=error,
    )
