"""Uniform complex-valued mesh functions and cumulative Newton-Cotes quadrature.

Every function handled by this package lives on a uniform mesh over [a, b]
as a vector of complex node values.  Indefinite integrals accumulate
per-subinterval increments of the 6-point (degree-5) Newton-Cotes family:
each increment integrates the quintic interpolant through the six nearest
nodes, centered on the subinterval away from the boundary.  Centered
stencils keep the phase error of oscillatory integrands far below that of
a fixed panel partition while remaining exact for polynomials of degree
up to 5.  All stencil weights are computed exactly once at import time.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import DivisionByZeroNode, MeshMismatch, SamplingError

PANEL = 5  # subintervals spanned by one 6-point stencil


def _interval_weights(offset: int) -> np.ndarray:
    """Exact weights for integrating the quintic through nodes offset..offset+5
    over the unit interval [0, 1] (in node-spacing units)."""
    nodes = [offset + k for k in range(PANEL + 1)]
    out = []
    for k in range(PANEL + 1):
        # Lagrange basis polynomial l_k as coefficient list (ascending).
        coeffs = [Fraction(1)]
        denom = Fraction(1)
        for node in nodes:
            if node == nodes[k]:
                continue
            denom *= nodes[k] - node
            coeffs = [Fraction(0)] + coeffs  # multiply by t
            for i in range(len(coeffs) - 1):
                coeffs[i] -= node * coeffs[i + 1]
        acc = Fraction(0)
        for i, c in enumerate(coeffs):
            acc += c / ((i + 1) * denom)
        out.append(float(acc))
    return np.array(out)


# Stencil offsets: subinterval [x_i, x_i+1] uses nodes starting at
# clip(i - 2, 0, m - 6), i.e. offsets -4..0 relative to i.
_W_BY_OFFSET = {off: _interval_weights(off) for off in range(-PANEL + 1, 1)}
_W_CENTER = _W_BY_OFFSET[-2]


@dataclass(frozen=True)
class Mesh:
    """Uniform mesh on [a, b] with m nodes, (m - 1) divisible by 5."""

    a: float
    b: float
    m: int

    def __post_init__(self) -> None:
        if not self.a < self.b:
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")
        if self.m < PANEL + 1 or (self.m - 1) % PANEL != 0:
            raise ValueError(
                f"node count {self.m} invalid: need m >= 6 with m - 1 divisible by 5"
            )

    @property
    def h(self) -> float:
        return (self.b - self.a) / (self.m - 1)

    @property
    def panels(self) -> int:
        return (self.m - 1) // PANEL

    def nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.m)


def round_up_points(m: int) -> int:
    """Smallest valid node count >= m (panels must tile exactly)."""
    m = max(m, PANEL + 1)
    r = (m - 1) % PANEL
    return m if r == 0 else m + PANEL - r


class GridFn:
    """Immutable complex-valued function sampled on a :class:`Mesh`."""

    __slots__ = ("mesh", "values")

    def __init__(self, mesh: Mesh, values) -> None:
        v = np.array(values, dtype=np.complex128)
        if v.shape != (mesh.m,):
            raise ValueError(f"expected {mesh.m} values, got shape {v.shape}")
        if not np.isfinite(v).all():
            bad = int(np.flatnonzero(~np.isfinite(v))[0])
            raise SamplingError(bad, mesh.a + bad * mesh.h, complex(v[bad]))
        v.setflags(write=False)
        self.mesh = mesh
        self.values = v

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def constant(mesh: Mesh, value: complex) -> "GridFn":
        return GridFn(mesh, np.full(mesh.m, complex(value)))

    @staticmethod
    def zeros(mesh: Mesh) -> "GridFn":
        return GridFn(mesh, np.zeros(mesh.m, dtype=np.complex128))

    # -- pointwise algebra ----------------------------------------------------

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, GridFn):
            if other.mesh != self.mesh:
                raise MeshMismatch(f"{self.mesh} vs {other.mesh}")
            return other.values
        return np.asarray(complex(other))

    def __add__(self, other):
        return GridFn(self.mesh, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return GridFn(self.mesh, self.values - self._coerce(other))

    def __rsub__(self, other):
        return GridFn(self.mesh, self._coerce(other) - self.values)

    def __mul__(self, other):
        return GridFn(self.mesh, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        divisor = self._coerce(other)
        if np.any(divisor == 0):
            node = int(np.flatnonzero(np.asarray(divisor) == 0)[0]) if divisor.ndim else -1
            raise DivisionByZeroNode(node)
        return GridFn(self.mesh, self.values / divisor)

    def __rtruediv__(self, other):
        if np.any(self.values == 0):
            raise DivisionByZeroNode(int(np.flatnonzero(self.values == 0)[0]))
        return GridFn(self.mesh, self._coerce(other) / self.values)

    def __neg__(self):
        return GridFn(self.mesh, -self.values)

    def conj(self) -> "GridFn":
        return GridFn(self.mesh, np.conj(self.values))

    def abs_max(self) -> float:
        return float(np.abs(self.values).max())

    def abs_min(self) -> float:
        return float(np.abs(self.values).min())

    def __repr__(self) -> str:
        return f"GridFn(m={self.mesh.m} on [{self.mesh.a}, {self.mesh.b}])"

    # -- evaluation off the mesh ----------------------------------------------

    def interpolate(self, x) -> np.ndarray:
        """Panel-wise quintic interpolation at arbitrary points of [a, b]."""
        return _interp_quintic(self.mesh, self.values, np.asarray(x, dtype=float))


def sample(mesh: Mesh, fn: Callable[[float], complex]) -> GridFn:
    """Sample a real -> complex map at every node of the mesh."""
    xs = mesh.nodes()
    out = np.empty(mesh.m, dtype=np.complex128)
    for i, x in enumerate(xs):
        try:
            out[i] = complex(fn(float(x)))
        except (ArithmeticError, ValueError) as exc:
            raise SamplingError(i, float(x), repr(exc)) from exc
    bad = np.flatnonzero(~np.isfinite(out))
    if bad.size:
        i = int(bad[0])
        raise SamplingError(i, float(xs[i]), complex(out[i]))
    return GridFn(mesh, out)


def cumulative_values(values: np.ndarray, h: float, x0_index: int) -> np.ndarray:
    """Antiderivative node values anchored (exactly zero) at ``x0_index``."""
    m = values.shape[0]
    increments = np.empty(m - 1, dtype=np.complex128)
    windows = np.lib.stride_tricks.sliding_window_view(values, PANEL + 1)
    increments[2 : m - 3] = windows @ _W_CENTER     # stencil start i - 2
    for i in (0, 1):
        increments[i] = _W_BY_OFFSET[-i] @ values[: PANEL + 1]
    for i in (m - 3, m - 2):
        increments[i] = _W_BY_OFFSET[(m - 1 - PANEL) - i] @ values[m - PANEL - 1 :]
    out = np.empty(m, dtype=np.complex128)
    out[0] = 0.0
    np.cumsum(increments, out=out[1:])
    out *= h
    out -= out[x0_index]
    out[x0_index] = 0.0
    return out


def integrate_cumulative(f: GridFn, x0_index: int = 0) -> GridFn:
    """Indefinite integral of ``f`` from node ``x0_index``, defined at every node.

    Degree-5 Newton-Cotes increments per subinterval with sliding 6-point
    stencils (centered in the interior, one-sided at the boundary); exact
    for polynomials of degree <= 5 at every node.
    """
    if not 0 <= x0_index < f.mesh.m:
        raise ValueError(f"anchor node {x0_index} outside mesh of {f.mesh.m} nodes")
    return GridFn(f.mesh, cumulative_values(f.values, f.mesh.h, x0_index))


def _interp_quintic(mesh: Mesh, values: np.ndarray, x: np.ndarray) -> np.ndarray:
    scalar = x.ndim == 0
    xs = np.atleast_1d(x).astype(float)
    panel_width = PANEL * mesh.h
    p = np.clip(((xs - mesh.a) / panel_width).astype(int), 0, mesh.panels - 1)
    t = (xs - (mesh.a + p * panel_width)) / mesh.h        # local coordinate in [0, 5]
    nodes = np.arange(PANEL + 1, dtype=float)
    diff = t[:, None] - nodes[None, :]                    # (n, 6)
    # Lagrange basis via product formula; exact hits handled separately.
    exact = np.isclose(diff, 0.0, rtol=0.0, atol=1e-13)
    any_exact = exact.any(axis=1)
    denom = np.array([np.prod(k - np.delete(nodes, k)) for k in range(PANEL + 1)])
    full = np.prod(np.where(exact, 1.0, diff), axis=1)
    basis = np.where(exact, 1.0, full[:, None] / np.where(exact, 1.0, diff)) / denom
    basis[any_exact] = exact[any_exact].astype(float)
    idx = p[:, None] * PANEL + np.arange(PANEL + 1)[None, :]
    out = np.sum(values[idx] * basis, axis=1)
    return out[0] if scalar else out


def to_csv(f: GridFn) -> str:
    """Serialize as ``x,re,im`` rows with 17 significant digits."""
    lines = ["x,re,im"]
    xs = f.mesh.nodes()
    for x, v in zip(xs, f.values):
        lines.append(f"{x:.17g},{v.real:.17g},{v.imag:.17g}")
    return "\n".join(lines) + "\n"
