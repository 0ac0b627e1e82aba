"""Dirac-type systems and reduction of general 2x2 first-order linear systems.

The canonical object is the system ``B Y' + P Y = lambda R Y`` with
``B = [[0, 1], [-1, 0]]``, ``P`` symmetric and ``R`` arbitrary, all entries
complex-valued mesh functions.  A general system ``PP Y' + QQ Y = lambda RR Y``
with invertible ``PP`` is brought to that form by multiplying with
``B PP^{-1}`` and removing the B-trace of the coefficient matrix through an
exponential gauge weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularCoefficient
from .grid import GridFn, Mesh, integrate_cumulative

SINGULAR_RTOL = 1e-12   # |det| below this times max|entry|^2 counts as singular
TRACE_RTOL = 1e-14      # B-trace tolerance relative to entry scale


@dataclass(frozen=True)
class Mat2Fn:
    """2x2 matrix of grid functions on a shared mesh."""

    e11: GridFn
    e12: GridFn
    e21: GridFn
    e22: GridFn

    def __post_init__(self) -> None:
        mesh = self.e11.mesh
        for entry in (self.e12, self.e21, self.e22):
            if entry.mesh != mesh:
                raise ValueError("matrix entries live on different meshes")

    @property
    def mesh(self) -> Mesh:
        return self.e11.mesh

    @staticmethod
    def constant(mesh: Mesh, m11: complex, m12: complex, m21: complex, m22: complex) -> "Mat2Fn":
        return Mat2Fn(
            GridFn.constant(mesh, m11),
            GridFn.constant(mesh, m12),
            GridFn.constant(mesh, m21),
            GridFn.constant(mesh, m22),
        )

    @staticmethod
    def identity(mesh: Mesh) -> "Mat2Fn":
        return Mat2Fn.constant(mesh, 1, 0, 0, 1)

    def as_array(self) -> np.ndarray:
        """Stacked (m, 2, 2) array of node values."""
        m = self.mesh.m
        out = np.empty((m, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = self.e11.values
        out[:, 0, 1] = self.e12.values
        out[:, 1, 0] = self.e21.values
        out[:, 1, 1] = self.e22.values
        return out

    @staticmethod
    def from_array(mesh: Mesh, arr: np.ndarray) -> "Mat2Fn":
        return Mat2Fn(
            GridFn(mesh, arr[:, 0, 0]),
            GridFn(mesh, arr[:, 0, 1]),
            GridFn(mesh, arr[:, 1, 0]),
            GridFn(mesh, arr[:, 1, 1]),
        )


@dataclass(frozen=True)
class DiracSystem:
    """System ``B Y' + P Y = lambda R Y`` with symmetric P.

    P is stored as its three independent entries, so the off-diagonal pair
    is equal exactly by construction.
    """

    p1: GridFn
    q: GridFn
    p2: GridFn
    r11: GridFn
    r12: GridFn
    r21: GridFn
    r22: GridFn

    def __post_init__(self) -> None:
        mesh = self.p1.mesh
        for entry in (self.q, self.p2, self.r11, self.r12, self.r21, self.r22):
            if entry.mesh != mesh:
                raise ValueError("system entries live on different meshes")

    @property
    def mesh(self) -> Mesh:
        return self.p1.mesh

    @property
    def P(self) -> Mat2Fn:
        return Mat2Fn(self.p1, self.q, self.q, self.p2)

    @property
    def R(self) -> Mat2Fn:
        return Mat2Fn(self.r11, self.r12, self.r21, self.r22)

    @staticmethod
    def from_matrices(P: Mat2Fn, R: Mat2Fn) -> "DiracSystem":
        if not np.array_equal(P.e12.values, P.e21.values):
            raise ValueError("P must be symmetric (off-diagonal entries equal)")
        return DiracSystem(P.e11, P.e12, P.e22, R.e11, R.e12, R.e21, R.e22)

    @staticmethod
    def free(mesh: Mesh) -> "DiracSystem":
        """P = 0, R = identity."""
        zero = GridFn.zeros(mesh)
        one = GridFn.constant(mesh, 1)
        return DiracSystem(zero, zero, zero, one, zero, zero, one)

    def coefficient_matrix(self, lam: complex) -> np.ndarray:
        """Right-hand side matrix A with ``Y' = A Y``, i.e. A = B (P - lambda R)."""
        m = self.mesh.m
        out = np.empty((m, 2, 2), dtype=np.complex128)
        out[:, 0, 0] = self.q.values - lam * self.r21.values
        out[:, 0, 1] = self.p2.values - lam * self.r22.values
        out[:, 1, 0] = -(self.p1.values - lam * self.r11.values)
        out[:, 1, 1] = -(self.q.values - lam * self.r12.values)
        return out


@dataclass(frozen=True)
class GeneralLinearSystem:
    """System ``PP Y' + QQ Y = lambda RR Y`` with det PP != 0 everywhere."""

    PP: Mat2Fn
    QQ: Mat2Fn
    RR: Mat2Fn

    @property
    def mesh(self) -> Mesh:
        return self.PP.mesh


@dataclass(frozen=True)
class GaugeWeight:
    """Scalar weight w with original solutions recovered as Y = w * U."""

    w: GridFn
    description: str = ""


def _left_multiply_b_inv(PP: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Nodewise B PP^{-1} M for stacked (m, 2, 2) arrays."""
    det = PP[:, 0, 0] * PP[:, 1, 1] - PP[:, 0, 1] * PP[:, 1, 0]
    inv = np.empty_like(PP)
    inv[:, 0, 0] = PP[:, 1, 1]
    inv[:, 0, 1] = -PP[:, 0, 1]
    inv[:, 1, 0] = -PP[:, 1, 0]
    inv[:, 1, 1] = PP[:, 0, 0]
    inv /= det[:, None, None]
    prod = inv @ M
    rotated = np.empty_like(prod)
    rotated[:, 0, :] = prod[:, 1, :]      # B = [[0, 1], [-1, 0]]
    rotated[:, 1, :] = -prod[:, 0, :]
    return rotated


def reduce_general(sys: GeneralLinearSystem) -> tuple[DiracSystem, GaugeWeight]:
    """Reduce a general system to Dirac form, returning the gauge weight.

    Multiplies by ``B PP^{-1}``, then substitutes ``Y = w U`` with
    ``w = exp(0.5 * integral of tr(B Q))`` anchored at the left endpoint,
    which cancels the B-trace of the coefficient matrix.  Raises
    :class:`SingularCoefficient` where det PP is numerically zero.
    """
    mesh = sys.mesh
    PP = sys.PP.as_array()
    det = PP[:, 0, 0] * PP[:, 1, 1] - PP[:, 0, 1] * PP[:, 1, 0]
    scale = np.abs(PP).max(axis=(1, 2)) ** 2
    bad = np.flatnonzero(np.abs(det) < SINGULAR_RTOL * scale)
    if bad.size:
        node = int(bad[0])
        raise SingularCoefficient(node, complex(det[node]))

    Q = _left_multiply_b_inv(PP, sys.QQ.as_array())
    R = _left_multiply_b_inv(PP, sys.RR.as_array())

    trace_bq = Q[:, 1, 0] - Q[:, 0, 1]    # tr(B Q)
    half_trace = integrate_cumulative(GridFn(mesh, trace_bq), 0)
    w = GridFn(mesh, np.exp(0.5 * half_trace.values))

    q_sym = 0.5 * (Q[:, 0, 1] + Q[:, 1, 0])
    dirac = DiracSystem(
        p1=GridFn(mesh, Q[:, 0, 0]),
        q=GridFn(mesh, q_sym),
        p2=GridFn(mesh, Q[:, 1, 1]),
        r11=GridFn(mesh, R[:, 0, 0]),
        r12=GridFn(mesh, R[:, 0, 1]),
        r21=GridFn(mesh, R[:, 1, 0]),
        r22=GridFn(mesh, R[:, 1, 1]),
    )
    return dirac, GaugeWeight(w, "Y = w * U with w = exp(0.5 * cumint tr(B Q))")


def check_trace_condition(R: Mat2Fn) -> tuple[bool, float]:
    """Whether tr(B R) = r21 - r12 vanishes nodewise (relative to entry scale)."""
    deviation = float(np.abs(R.e21.values - R.e12.values).max())
    scale = max(
        R.e11.abs_max(), R.e12.abs_max(), R.e21.abs_max(), R.e22.abs_max()
    )
    return deviation <= TRACE_RTOL * scale, deviation
