"""Eigenvalue machinery: characteristic polynomial, roots, shift sweep.

Truncating the parameter power series of the boundary functional yields a
polynomial whose near-center roots approximate eigenvalues; far roots are
truncation artifacts.  Roots are located with the companion-matrix
eigenvalue method (balanced Hessenberg QR via LAPACK), polished by Newton
iteration, and screened by (i) an empirical trusted radius derived from the
computed coefficient norms, (ii) stability against lowering the truncation
order and (iii) Newton convergence.  Large index ranges are covered by
re-centering the expansion at each newly found eigenvalue and walking
outward one eigenvalue per step in each direction.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegeneratePolynomial, SweepStalled, TruncationWarning
from .grid import GridFn
from .homogeneous import particular_solution, select_nonvanishing_combination
from .powers import empirical_radius
from .spps import SppsSolutionPair, evaluate_solutions, shift_center, solution_pair
from .system import DiracSystem

NEWTON_STEPS = 20
NEWTON_RTOL = 1e-14
COEFF_FLOOR = 1e-300
REAL_AXIS_RTOL = 1e-9   # imaginary parts below this (relative) are projected away
STABILITY_ATOL = 1e-8
STABILITY_RTOL = 1e-6
LOWER_ORDER_DROP = 5    # truncation-order decrease used for the stability check


class AffineCoefficient(NamedTuple):
    """Boundary coefficient ``const + slope * lambda``."""

    const: complex
    slope: complex = 0.0

    def at(self, lam: complex) -> complex:
        return self.const + self.slope * lam

    def shifted(self, center: complex) -> np.ndarray:
        """Coefficients in the offset variable around ``center`` (ascending)."""
        return np.array([self.const + self.slope * center, self.slope])

    @property
    def is_real(self) -> bool:
        return complex(self.const).imag == 0 and complex(self.slope).imag == 0


def _affine(value) -> AffineCoefficient:
    if isinstance(value, AffineCoefficient):
        return value
    if isinstance(value, tuple) and len(value) == 2:
        return AffineCoefficient(complex(value[0]), complex(value[1]))
    return AffineCoefficient(complex(value))


@dataclass(frozen=True)
class BoundaryConditions:
    """Two-point conditions ``a1 u(a) + a2 v(a) = 0``, ``b1 u(b) + b2 v(b) = 0``.

    Each coefficient may be a constant or an affine function of the
    spectral parameter, given as ``(const, slope)``.
    """

    a1: AffineCoefficient
    a2: AffineCoefficient
    b1: AffineCoefficient
    b2: AffineCoefficient

    def __init__(self, left, right) -> None:
        object.__setattr__(self, "a1", _affine(left[0]))
        object.__setattr__(self, "a2", _affine(left[1]))
        object.__setattr__(self, "b1", _affine(right[0]))
        object.__setattr__(self, "b2", _affine(right[1]))
        for name, lo, hi in (("left", self.a1, self.a2), ("right", self.b1, self.b2)):
            if all(
                c == 0 for c in (lo.const, lo.slope, hi.const, hi.slope)
            ):
                raise ValueError(f"{name} boundary condition is identically zero")

    @property
    def is_real(self) -> bool:
        return all(c.is_real for c in (self.a1, self.a2, self.b1, self.b2))

    @staticmethod
    def dirichlet_u() -> "BoundaryConditions":
        """u(a) = u(b) = 0."""
        return BoundaryConditions((1.0, 0.0), (1.0, 0.0))


@dataclass(frozen=True)
class CharPolynomial:
    """Truncated characteristic function as a polynomial in the offset variable."""

    coeffs: np.ndarray        # ascending in (lambda - center)
    center: complex
    trusted_radius: float

    def __call__(self, offset: complex) -> complex:
        result = 0.0 + 0.0j
        for c in self.coeffs[::-1]:
            result = result * offset + c
        return complex(result)

    def derivative(self, offset: complex) -> complex:
        result = 0.0 + 0.0j
        for n in range(len(self.coeffs) - 1, 0, -1):
            result = result * offset + n * self.coeffs[n]
        return complex(result)

    def magnitude(self, offset: complex) -> float:
        """Sum of |c_n| |offset|^n; scale of cancellation in evaluation."""
        result = 0.0
        radius = abs(offset)
        for c in np.abs(self.coeffs)[::-1]:
            result = result * radius + c
        return float(result)


def _poly_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    return np.convolve(p, q)


def _poly_add(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    if len(p) < len(q):
        p, q = q, p
    out = p.astype(np.complex128).copy()
    out[: len(q)] += q
    return out


@dataclass(frozen=True)
class _EndpointSeries:
    """Polynomial data of the four basis components at the two endpoints."""

    u1b: np.ndarray
    v1b: np.ndarray
    u2b: np.ndarray
    v2b: np.ndarray
    u1a: np.ndarray
    v1a: np.ndarray
    u2a: np.ndarray
    v2a: np.ndarray
    fa: complex
    ga: complex
    anchored_left: bool


def _endpoint_series(pair: SppsSolutionPair, order: int | None) -> _EndpointSeries:
    table = pair.table
    n_use = table.order if order is None else min(order, table.order)
    weights = np.ones(n_use + 1)
    if not table.scaled:
        for n in range(2, n_use + 1):
            weights[n] = weights[n - 1] / n
    last = table.mesh.m - 1
    f_vals = table.source.f.values
    g_vals = table.source.g.values
    wb = pair.gauge.values[last] if pair.gauge is not None else 1.0
    wa = pair.gauge.values[0] if pair.gauge is not None else 1.0

    def endpoint(family: str, node: int, scale: complex) -> np.ndarray:
        series = pair.table.family_endpoint(family, node)[: n_use + 1]
        return scale * weights * series

    return _EndpointSeries(
        u1b=endpoint("Xt", last, wb * f_vals[last]),
        v1b=endpoint("Yt", last, wb * g_vals[last]),
        u2b=endpoint("X", last, wb * f_vals[last]),
        v2b=endpoint("Y", last, wb * g_vals[last]),
        u1a=endpoint("Xt", 0, wa * f_vals[0]),
        v1a=endpoint("Yt", 0, wa * g_vals[0]),
        u2a=endpoint("X", 0, wa * f_vals[0]),
        v2a=endpoint("Y", 0, wa * g_vals[0]),
        fa=complex(wa * f_vals[0]),
        ga=complex(wa * g_vals[0]),
        anchored_left=table.source.x0_index == 0,
    )


def characteristic_polynomial(
    pair: SppsSolutionPair,
    bc: BoundaryConditions,
    order: int | None = None,
) -> CharPolynomial:
    """Polynomial whose near-center roots approximate eigenvalue offsets.

    With the expansion anchored at the left endpoint the boundary
    determinant factorizes and the coefficients are read directly from the
    endpoint values of the series; otherwise the full 2x2 determinant of
    boundary functionals is expanded.  Affine parameter dependence in the
    boundary coefficients enters by polynomial multiplication.
    """
    ep = _endpoint_series(pair, order)
    center = complex(pair.lambda0)
    a1 = bc.a1.shifted(center)
    a2 = bc.a2.shifted(center)
    b1 = bc.b1.shifted(center)
    b2 = bc.b2.shifted(center)

    if ep.anchored_left:
        xi = _poly_add(
            _poly_mul(_poly_mul(a2, b1) / ep.fa, ep.u1b),
            -_poly_mul(_poly_mul(a1, b1) / ep.ga, ep.u2b),
        )
        xi = _poly_add(xi, _poly_mul(_poly_mul(a2, b2) / ep.fa, ep.v1b))
        xi = _poly_add(xi, -_poly_mul(_poly_mul(a1, b2) / ep.ga, ep.v2b))
    else:
        g11 = _poly_add(_poly_mul(a1, ep.u1a), _poly_mul(a2, ep.v1a))
        g12 = _poly_add(_poly_mul(a1, ep.u2a), _poly_mul(a2, ep.v2a))
        g21 = _poly_add(_poly_mul(b1, ep.u1b), _poly_mul(b2, ep.v1b))
        g22 = _poly_add(_poly_mul(b1, ep.u2b), _poly_mul(b2, ep.v2b))
        xi = _poly_add(_poly_mul(g11, g22), -_poly_mul(g12, g21))

    radius = empirical_radius(pair.table)
    return CharPolynomial(coeffs=xi, center=center, trusted_radius=radius)


def _newton_polish(p: CharPolynomial, z: complex) -> tuple[complex, bool]:
    # Converged means the step reached the target threshold or the noise
    # floor of the (heavily cancelling) polynomial evaluation, whichever is
    # larger; below that floor the root simply cannot be resolved.
    try:
        for _ in range(NEWTON_STEPS):
            dp = p.derivative(z)
            if dp == 0 or not np.isfinite(abs(dp)):
                return z, False
            step = p(z) / dp
            z = z - step
            noise = 4.0 * np.finfo(float).eps * p.magnitude(z) / abs(dp)
            if abs(step) <= max(NEWTON_RTOL * (1.0 + abs(z)), noise):
                return z, True
    except (OverflowError, ZeroDivisionError):
        # Far-out companion roots overflow the evaluation; they are
        # truncation artifacts and get discarded downstream anyway.
        return z, False
    return z, False


def find_roots(p: CharPolynomial) -> list[complex]:
    """All roots of the truncated characteristic polynomial.

    Companion-matrix eigenvalues of the monic normalization (leading
    coefficients below 1e-300 are dropped first), then up to 20 Newton
    steps per root with threshold ``1e-14 * (1 + |root|)``.
    """
    coeffs = np.asarray(p.coeffs, dtype=np.complex128)
    significant = np.flatnonzero(np.abs(coeffs) >= COEFF_FLOOR)
    if significant.size == 0:
        raise DegeneratePolynomial("all coefficients numerically zero")
    degree = int(significant[-1])
    if degree == 0:
        return []
    raw = np.roots(coeffs[degree::-1])
    polished = [_newton_polish(p, complex(z))[0] for z in raw]
    return sorted(polished, key=lambda z: (z.real, z.imag))


def _stability_gap(z: complex, p_lower: CharPolynomial, lower_roots: list[complex]) -> float:
    if not lower_roots:
        return float("inf")
    return min(abs(z - r) for r in lower_roots)


def _stability_tolerance(z: complex, p_lower: CharPolynomial) -> float:
    # A genuine root moves between truncation orders by about one Newton
    # step of the lower-order polynomial; on top of that, root positions
    # cannot be resolved below the evaluation noise floor (the polynomial
    # terms cancel heavily at large offsets).
    try:
        dp = abs(p_lower.derivative(z))
        if dp == 0:
            return float("inf")
        newton_step = abs(p_lower(z)) / dp
        noise = 4.0 * np.finfo(float).eps * p_lower.magnitude(z) / dp
    except (OverflowError, ZeroDivisionError):
        return float("inf")
    return max(
        STABILITY_ATOL, STABILITY_RTOL * abs(z), 10.0 * newton_step, 2.0 * noise
    )


@dataclass(frozen=True)
class _RootVerdict:
    offset: complex
    kept: bool
    gap: float
    reason: str
    noise: float = 0.0  # evaluation-noise resolution limit of the root position


def _screen_roots(
    roots: list[complex], p: CharPolynomial, p_lower: CharPolynomial
) -> list[_RootVerdict]:
    try:
        lower_roots = find_roots(p_lower)
    except DegeneratePolynomial:
        lower_roots = []
    verdicts = []
    for z in roots:
        if abs(z) > p.trusted_radius:
            verdicts.append(_RootVerdict(z, False, float("inf"), "outside trusted radius"))
            continue
        gap = _stability_gap(z, p_lower, lower_roots)
        if gap > _stability_tolerance(z, p_lower):
            verdicts.append(_RootVerdict(z, False, gap, "unstable under truncation change"))
            continue
        polished, converged = _newton_polish(p, z)
        if not converged:
            verdicts.append(_RootVerdict(z, False, gap, "Newton refinement diverged"))
            continue
        try:
            dp = abs(p.derivative(polished))
            noise = 4.0 * np.finfo(float).eps * p.magnitude(polished) / dp
        except (OverflowError, ZeroDivisionError):
            noise = float("inf")
        verdicts.append(_RootVerdict(polished, True, gap, "kept", noise))
    return verdicts


def filter_spurious(
    roots: list[complex], p: CharPolynomial, p_lower: CharPolynomial
) -> tuple[list[complex], list[complex]]:
    """Partition roots into kept (trusted) and discarded (spurious).

    A root survives iff it lies inside the trusted radius, the nearest root
    of the lower-order polynomial sits within a displacement tolerance
    (absolute 1e-8, relative 1e-6, or ten lower-order Newton steps), and
    Newton refinement converged.
    """
    if p.center != p_lower.center:
        raise ValueError("polynomials expanded around different centers")
    verdicts = _screen_roots(roots, p, p_lower)
    kept = [v.offset for v in verdicts if v.kept]
    discarded = [v.offset for v in verdicts if not v.kept]
    return kept, discarded


@dataclass(frozen=True)
class SweepOptions:
    """Knobs for :func:`sweep_spectrum`; defaults match the reference setup."""

    order: int = 100
    seed: int = 0
    candidates: int = 20
    shift: bool = True


@dataclass(frozen=True)
class EigenvalueRecord:
    n: int
    lam: complex
    center: complex
    residual: float
    stability_gap: float


@dataclass
class SpectrumResult:
    eigenvalues: list[EigenvalueRecord]
    warnings: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.eigenvalues)

    def by_index(self) -> dict[int, EigenvalueRecord]:
        return {rec.n: rec for rec in self.eigenvalues}

    def to_csv(self) -> str:
        lines = ["n,re_lambda,im_lambda,center,residual"]
        for rec in self.eigenvalues:
            center = f"{rec.center.real:.17g}{rec.center.imag:+.17g}j"
            lines.append(
                f"{rec.n},{rec.lam.real:.17g},{rec.lam.imag:.17g},{center},{rec.residual:.17g}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "eigenvalues": [
                {
                    "n": rec.n,
                    "lambda": [rec.lam.real, rec.lam.imag],
                    "center": [rec.center.real, rec.center.imag],
                    "residual": rec.residual,
                    "stability_gap": rec.stability_gap,
                }
                for rec in self.eigenvalues
            ],
            "warnings": list(self.warnings),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class _CenterHarvest(NamedTuple):
    pair: SppsSolutionPair
    poly: CharPolynomial
    endpoint: _EndpointSeries
    verdicts: list[_RootVerdict]
    bc: BoundaryConditions

    def kept(self) -> list[_RootVerdict]:
        return [v for v in self.verdicts if v.kept]

    def residual(self, offset: complex) -> float:
        """Right-boundary functional of the left-boundary solution, normalized."""
        lam = self.poly.center + offset
        a1 = self.bc.a1.at(lam)
        a2 = self.bc.a2.at(lam)
        ep = self.endpoint

        def val(series: np.ndarray) -> complex:
            result = 0.0 + 0.0j
            for c in series[::-1]:
                result = result * offset + c
            return complex(result)

        ub = (a2 / ep.fa) * val(ep.u1b) - (a1 / ep.ga) * val(ep.u2b)
        vb = (a2 / ep.fa) * val(ep.v1b) - (a1 / ep.ga) * val(ep.v2b)
        xi = self.bc.b1.at(lam) * ub + self.bc.b2.at(lam) * vb
        return abs(xi) / max(abs(ub), abs(vb), 1e-300)


def _harvest(pair: SppsSolutionPair, bc: BoundaryConditions, opts: SweepOptions) -> _CenterHarvest:
    poly = characteristic_polynomial(pair, bc)
    lower = characteristic_polynomial(
        pair, bc, order=max(0, pair.table.order - LOWER_ORDER_DROP)
    )
    roots = find_roots(poly)
    verdicts = _screen_roots(roots, poly, lower)
    return _CenterHarvest(pair, poly, _endpoint_series(pair, None), verdicts, bc)


def _is_real_problem(sys: DiracSystem, bc: BoundaryConditions) -> bool:
    coeffs = (sys.p1, sys.q, sys.p2, sys.r11, sys.r12, sys.r21, sys.r22)
    return bc.is_real and all((c.values.imag == 0).all() for c in coeffs)


def _project_real(lam: complex, noise: float = 0.0) -> complex:
    # Imaginary parts below the reporting threshold, or indistinguishable
    # from the root's own evaluation-noise floor, are numerical artifacts
    # for problems whose spectrum is structurally real.
    if abs(lam.imag) < max(REAL_AXIS_RTOL * (1.0 + abs(lam)), 4.0 * noise):
        return complex(lam.real, 0.0)
    return lam


def _positional_indices(
    lams: list[complex],
    anchor_pos: int,
    real_problem: bool,
    notes: list[str],
) -> dict[int, int]:
    """Index sorted roots relative to the anchor, skipping over double gaps.

    For real spectra the spacing of consecutive eigenvalues stays bounded,
    so a gap close to a multiple of the typical one signals roots lost to
    the spurious filter; the index advances accordingly.
    """
    indices = {anchor_pos: 0}
    if len(lams) < 2:
        return indices
    gaps = np.diff([lam.real for lam in lams])
    typical = float(np.median(gaps)) if real_problem and len(gaps) >= 2 else 0.0
    for pos in range(anchor_pos + 1, len(lams)):
        step = 1
        if typical > 0:
            step = max(1, int(round(gaps[pos - 1] / typical)))
        indices[pos] = indices[pos - 1] + step
        if step > 1:
            notes.append(
                f"no trusted root between {lams[pos - 1]:.6g} and {lams[pos]:.6g}; "
                f"advancing index by {step}"
            )
    for pos in range(anchor_pos - 1, -1, -1):
        step = 1
        if typical > 0:
            step = max(1, int(round(gaps[pos] / typical)))
        indices[pos] = indices[pos + 1] - step
        if step > 1:
            notes.append(
                f"no trusted root between {lams[pos]:.6g} and {lams[pos + 1]:.6g}; "
                f"advancing index by {step}"
            )
    return indices


def _quiet_evaluate(pair: SppsSolutionPair, lam: complex):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        return evaluate_solutions(pair, lam)


def _next_seed(
    pair: SppsSolutionPair,
    lam: complex,
    opts: SweepOptions,
    tag: int,
) -> tuple[GridFn, GridFn]:
    (u1, v1), (u2, v2) = _quiet_evaluate(pair, lam)
    rng = np.random.default_rng([opts.seed, tag & 0x7FFFFFFF])
    u, v, _, _ = select_nonvanishing_combination(
        u1.values, v1.values, u2.values, v2.values, rng, opts.candidates,
        refine=True,
    )
    mesh = pair.mesh
    return GridFn(mesh, u), GridFn(mesh, v)


def sweep_spectrum(
    sys: DiracSystem,
    bc: BoundaryConditions,
    n_min: int,
    n_max: int,
    options: SweepOptions | None = None,
) -> SpectrumResult:
    """Eigenvalues indexed ``n_min..n_max`` around the one closest to zero.

    Index 0 is the surviving root nearest the origin of the center-0
    expansion.  Without shifting, all surviving center-0 roots are indexed
    by their position; with shifting (default), each direction walks one
    eigenvalue per step: the expansion is re-centered at the newest
    eigenvalue using a zero-free combination of the basis there, and the
    nearest surviving root beyond it becomes the next eigenvalue.
    """
    opts = options or SweepOptions()
    if n_min > n_max:
        raise ValueError("need n_min <= n_max")
    real_problem = _is_real_problem(sys, bc)

    sol0 = particular_solution(
        sys.P, seed=opts.seed, candidates=opts.candidates, truncation=opts.order
    )
    pair0 = solution_pair(sys, sol0, opts.order)
    harvest0 = _harvest(pair0, bc, opts)
    kept0 = harvest0.kept()
    if not kept0:
        raise SweepStalled(0, "no trusted eigenvalue near the expansion origin")

    def finalize(lam: complex, noise: float = 0.0) -> complex:
        return _project_real(lam, noise) if real_problem else lam

    lam0_all = sorted(
        ((finalize(pair0.lambda0 + v.offset, v.noise), v) for v in kept0),
        key=lambda item: (item[0].real, item[0].imag),
    )
    anchor_pos = min(
        range(len(lam0_all)),
        key=lambda i: (abs(lam0_all[i][0]), -lam0_all[i][0].real),
    )

    records: dict[int, EigenvalueRecord] = {}
    warnings_list: list[str] = []

    def record(n: int, lam: complex, harvest: _CenterHarvest, verdict: _RootVerdict) -> None:
        records[n] = EigenvalueRecord(
            n=n,
            lam=lam,
            center=complex(harvest.poly.center),
            residual=harvest.residual(verdict.offset),
            stability_gap=verdict.gap,
        )

    if not opts.shift:
        indices = _positional_indices(
            [lam for lam, _ in lam0_all], anchor_pos, real_problem, warnings_list
        )
        for pos, (lam, verdict) in enumerate(lam0_all):
            n = indices[pos]
            if n_min <= n <= n_max:
                record(n, lam, harvest0, verdict)
        missing = [n for n in range(n_min, n_max + 1) if n not in records]
        if missing:
            warnings_list.append(
                f"indices {missing} fall outside the trusted radius of the "
                f"center-0 expansion; rerun with shifting enabled"
            )
        rows = [records[n] for n in sorted(records)]
        return SpectrumResult(rows, warnings_list)

    # Shifted sweep: take index 0 (and +-1 if needed) from the center-0
    # expansion, then walk outward one eigenvalue per re-centering.
    lam_anchor, verdict_anchor = lam0_all[anchor_pos]
    if n_min <= 0 <= n_max:
        record(0, lam_anchor, harvest0, verdict_anchor)

    def chain_point(lam: complex) -> complex:
        # For real problems the spectrum is real; pinning the chain to the
        # real axis keeps per-step imaginary noise from compounding
        # through successive re-centerings.
        return complex(lam.real, 0.0) if real_problem else lam

    def walk(direction: int, limit: int) -> None:
        if limit < 1:
            return
        # First step comes from the center-0 harvest.
        pos = anchor_pos + direction
        if not 0 <= pos < len(lam0_all):
            raise SweepStalled(0, f"no index {direction} eigenvalue from center 0")
        lam_prev2 = chain_point(lam_anchor)
        lam_first, verdict_prev = lam0_all[pos]
        if 1 <= limit:
            record(direction, lam_first, harvest0, verdict_prev)
        lam_prev = chain_point(lam_first)
        pair_prev = pair0
        for step in range(2, limit + 1):
            n_new = direction * step
            seed = _next_seed(pair_prev, lam_prev, opts, tag=abs(n_new) * 2 + (direction < 0))
            pair_new = shift_center(sys, lam_prev, seed, opts.order)
            harvest = _harvest(pair_new, bc, opts)
            spacing = abs(lam_prev - lam_prev2)
            cap = min(harvest.poly.trusted_radius, 3.0 * spacing + 1.0)
            # The center's own eigenvalue reappears as a root displaced by
            # series noise; a quarter of the previous spacing separates it
            # reliably from the genuinely new one.
            sep = max(1e-6 * (1.0 + abs(lam_prev)), 0.25 * spacing)
            candidates = []
            for v in harvest.kept():
                lam = finalize(lam_prev + v.offset, v.noise)
                if abs(v.offset) > cap:
                    continue
                if direction * (lam.real - lam_prev.real) > sep:
                    candidates.append((direction * lam.real, lam, v))
            if not candidates:
                raise SweepStalled(
                    n_new - direction,
                    f"no new eigenvalue beyond index {n_new - direction} "
                    f"(center {lam_prev:.6g})",
                )
            _, lam_new, verdict_new = min(candidates, key=lambda t: t[0])
            record(n_new, lam_new, harvest, verdict_new)
            lam_prev2, lam_prev = lam_prev, chain_point(lam_new)
            pair_prev = pair_new

    walk(+1, n_max)
    walk(-1, -n_min)

    rows = [records[n] for n in sorted(records) if n_min <= n <= n_max]
    return SpectrumResult(rows, warnings_list)
