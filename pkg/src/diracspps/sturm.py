"""Sturm-Liouville problems: conversion to Dirac form and the classical series.

A problem ``(p u')' + q u = omega^2 r u`` with a zero-free solution ``u0``
of the parameter-free equation converts to a Dirac-type system in the
parameter ``omega`` with coefficient ``u0'/u0`` on the off-diagonal and
right-hand side ``diag(r, -1/p)``; boundary conditions pick up an affine
``omega`` dependence.  The classical one-equation power series (alternating
recursion in ``u0^2 r`` and ``1/(u0^2 p)``) is included as an independent
cross-check path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSeed, SweepStalled
from .grid import GridFn, Mesh, integrate_cumulative
from .homogeneous import ParticularSolution, particular_solution
from .spectral import (
    AffineCoefficient,
    BoundaryConditions,
    EigenvalueRecord,
    SpectrumResult,
    SweepOptions,
    sweep_spectrum,
)
from .system import DiracSystem, Mat2Fn


@dataclass(frozen=True)
class SturmLiouvilleProblem:
    """Problem ``(p u')' + q u = omega^2 r u`` with endpoint conditions.

    Boundary data are ``(alpha, beta)`` pairs for ``alpha u + beta u' = 0``
    at each endpoint; ``p`` must be zero-free.
    """

    p: GridFn
    q: GridFn
    r: GridFn
    left: tuple[complex, complex]
    right: tuple[complex, complex]

    def __post_init__(self) -> None:
        if self.p.mesh != self.q.mesh or self.p.mesh != self.r.mesh:
            raise ValueError("coefficients live on different meshes")
        if self.p.abs_min() == 0.0:
            raise ValueError("leading coefficient p vanishes at a node")

    @property
    def mesh(self) -> Mesh:
        return self.p.mesh


@dataclass(frozen=True)
class SLFormalPowers:
    """Classical series coefficient families and their seed."""

    plain: list[GridFn]   # X^(n); odd orders integrate 1/(u0^2 p)
    tilde: list[GridFn]   # parity-swapped family
    u0: GridFn


@dataclass(frozen=True)
class DiracEquivalent:
    """Dirac reformulation of a Sturm-Liouville problem (parameter omega)."""

    system: DiracSystem
    boundary: BoundaryConditions
    seed: ParticularSolution   # (u0, 1/u0)
    u0: GridFn
    u0_prime: GridFn


def _fd_derivative(f: GridFn) -> GridFn:
    """Fourth-order finite-difference derivative (fallback path only)."""
    v = f.values
    h = f.mesh.h
    out = np.empty_like(v)
    out[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
    for i in (0, 1):
        out[i] = (
            -25 * v[i] + 48 * v[i + 1] - 36 * v[i + 2] + 16 * v[i + 3] - 3 * v[i + 4]
        ) / (12 * h)
    for i in (-2, -1):
        out[i] = (
            25 * v[i] - 48 * v[i - 1] + 36 * v[i - 2] - 16 * v[i - 3] + 3 * v[i - 4]
        ) / (12 * h)
    return GridFn(f.mesh, out)


def sl_particular_solution(
    p: GridFn,
    q: GridFn,
    seed: int = 0,
    candidates: int = 20,
    x0_index: int = 0,
) -> tuple[GridFn, GridFn]:
    """Zero-free solution ``u0`` of ``(p u0')' + q u0 = 0`` and its derivative.

    The equation is rewritten as the first-order system in ``(u, p u')``,
    handed to the homogeneous-system machinery, and the derivative recovered
    from the second component (no numerical differentiation).
    """
    mesh = p.mesh
    zero = GridFn.zeros(mesh)
    hom = Mat2Fn(q, zero, zero, 1.0 / p)
    sol = particular_solution(
        hom, seed=seed, candidates=candidates, x0_index=x0_index
    )
    u0 = sol.f
    u0_prime = sol.g / p
    return u0, u0_prime


def sl_to_dirac(
    slp: SturmLiouvilleProblem,
    u0: GridFn,
    u0_prime: GridFn | None = None,
    x0_index: int = 0,
) -> DiracEquivalent:
    """Convert to an equivalent Dirac-type spectral problem in ``omega``.

    The system has zero diagonal, off-diagonal ``u0'/u0`` and right-hand
    side ``diag(r, -1/p)``; the seed solution is ``(u0, 1/u0)``.  Endpoint
    conditions ``alpha u + beta u' = 0`` become
    ``(alpha + beta u0'/u0) u + (omega beta / p) v = 0``, i.e. the second
    coefficient is linear in ``omega``.
    """
    mesh = slp.mesh
    if u0.mesh != mesh:
        raise InvalidSeed("seed sampled on a different mesh")
    if u0.abs_min() == 0.0:
        raise InvalidSeed("seed solution vanishes at a node")
    if u0_prime is None:
        u0_prime = _fd_derivative(u0)

    # Residual of (p u0')' + q u0 = 0, with the outer derivative by centered
    # differences of the exact product p u0'.
    h = mesh.h
    pu = (slp.p * u0_prime).values
    d_pu = (pu[2:] - pu[:-2]) / (2 * h)
    residual = np.abs(d_pu + (slp.q * u0).values[1:-1]).max()
    scale = max(np.abs(d_pu).max(), (slp.q * u0).abs_max(), 1e-300)
    d3 = pu[4:] - 2 * pu[3:-1] + 2 * pu[1:-3] - pu[:-4]
    fd_error = (h * h) * float(np.abs(d3).max()) / (2 * h**3) if len(pu) >= 5 else 0.0
    if residual > 1e-6 * scale + fd_error:
        raise InvalidSeed(
            f"seed residual {residual:.3e} exceeds tolerance "
            f"{1e-6 * scale + fd_error:.3e}"
        )

    zero = GridFn.zeros(mesh)
    q_dirac = u0_prime / u0
    system = DiracSystem(
        p1=zero, q=q_dirac, p2=zero,
        r11=slp.r, r12=zero, r21=zero, r22=-1.0 / slp.p,
    )
    seed = ParticularSolution(u0, 1.0 / u0, x0_index, system.P)

    def transform(alpha, beta, node):
        a_const = complex(alpha) + complex(beta) * complex(
            u0_prime.values[node] / u0.values[node]
        )
        slope = complex(beta) / complex(slp.p.values[node])
        return AffineCoefficient(a_const), AffineCoefficient(0.0, slope)

    left = transform(slp.left[0], slp.left[1], 0)
    right = transform(slp.right[0], slp.right[1], mesh.m - 1)
    boundary = BoundaryConditions(left, right)
    return DiracEquivalent(system, boundary, seed, u0, u0_prime)


def sl_eigenvalues(
    slp: SturmLiouvilleProblem,
    n_min: int,
    n_max: int,
    options: SweepOptions | None = None,
    u0: GridFn | None = None,
    u0_prime: GridFn | None = None,
) -> SpectrumResult:
    """Eigenvalues of the Sturm-Liouville problem via its first-order form.

    Sweeps the equivalent system over nonnegative ``omega`` and reports
    ``lambda = omega^2``.  The reformulated system always carries a
    structural root at ``omega = 0`` (the second basis solution's first
    component vanishes identically there), which does not correspond to a
    Sturm-Liouville eigenvalue and is dropped before indexing.
    """
    if n_min < 0:
        raise ValueError("Sturm-Liouville eigenvalues are indexed from 0")
    opts = options or SweepOptions()
    if u0 is None or u0_prime is None:
        u0, u0_prime = sl_particular_solution(
            slp.p, slp.q, seed=opts.seed, candidates=opts.candidates
        )
    bridge = sl_to_dirac(slp, u0, u0_prime)
    raw = sweep_spectrum(bridge.system, bridge.boundary, 0, n_max + 1, opts)
    by_index = raw.by_index()
    notes = list(raw.warnings)
    zero = by_index.get(0)
    if zero is None or 1 not in by_index:
        raise SweepStalled(0, "omega sweep produced no positive roots")
    if abs(zero.lam) > 1e-3 * (1.0 + abs(by_index[1].lam.real)):
        notes.append(
            f"expected structural root at omega = 0, found omega = {zero.lam:.6g}"
        )
    rows = [
        EigenvalueRecord(
            n=n - 1,
            lam=rec.lam * rec.lam,
            center=rec.center,
            residual=rec.residual,
            stability_gap=rec.stability_gap,
        )
        for n, rec in sorted(by_index.items())
        if n >= 1 and n_min <= n - 1 <= n_max
    ]
    return SpectrumResult(rows, notes)


def sl_formal_powers(
    slp: SturmLiouvilleProblem,
    u0: GridFn,
    order: int,
    x0_index: int = 0,
) -> SLFormalPowers:
    """Classical alternating-recursion series coefficients up to ``order``."""
    weight_r = u0 * u0 * slp.r
    weight_p = 1.0 / (u0 * u0 * slp.p)
    one = GridFn.constant(slp.mesh, 1.0)
    plain = [one]
    tilde = [one]
    for n in range(1, order + 1):
        w_plain = weight_r if n % 2 == 0 else weight_p
        w_tilde = weight_p if n % 2 == 0 else weight_r
        plain.append(float(n) * integrate_cumulative(plain[n - 1] * w_plain, x0_index))
        tilde.append(float(n) * integrate_cumulative(tilde[n - 1] * w_tilde, x0_index))
    return SLFormalPowers(plain, tilde, u0)


def sl_spps_solution(
    powers: SLFormalPowers, omega: complex, c1: complex = 1.0, c2: complex = 0.0
) -> GridFn:
    """General solution of the Sturm-Liouville equation at parameter ``omega``.

    Even tilde orders weighted by ``omega^(2k)/(2k)!`` give one branch, odd
    plain orders with ``omega^(2k)/(2k+1)!`` the other; at ``omega = 0``
    this collapses to ``c1 u0 + c2 u0 int 1/(u0^2 p)``.
    """
    mesh = powers.u0.mesh
    omega_sq = complex(omega) ** 2
    order = len(powers.plain) - 1
    even = np.zeros(mesh.m, dtype=np.complex128)
    odd = np.zeros(mesh.m, dtype=np.complex128)
    w_even = 1.0 + 0.0j   # omega^(2k) / (2k)!
    w_odd = 1.0 + 0.0j    # omega^(2k) / (2k+1)!
    for k in range(order // 2 + 1):
        if k > 0:
            w_even *= omega_sq / ((2 * k - 1) * (2 * k))
            w_odd *= omega_sq / ((2 * k) * (2 * k + 1))
        even += w_even * powers.tilde[2 * k].values
        if 2 * k + 1 <= order:
            odd += w_odd * powers.plain[2 * k + 1].values
    values = powers.u0.values * (complex(c1) * even + complex(c2) * odd)
    return GridFn(mesh, values)
