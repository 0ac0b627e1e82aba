"""JSON problem files: schema validation, loading, and emission.

A problem file carries the problem kind, the interval, coefficient entries
(expression strings, complex constants, or inline sample arrays), boundary
data and numeric options.  Complex numbers are written as ``[re, im]``;
boundary coefficients may carry an affine parameter dependence as
``{"const": c, "lambda": c}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import expr
from .errors import SchemaError
from .grid import GridFn, Mesh, round_up_points, sample
from .spectral import AffineCoefficient, BoundaryConditions
from .sturm import SturmLiouvilleProblem
from .system import DiracSystem, GeneralLinearSystem, Mat2Fn

KINDS = ("dirac", "general", "sturm-liouville")
DIRAC_ENTRIES = ("p1", "q", "p2", "r11", "r12", "r21", "r22")
SL_ENTRIES = ("p", "q", "r")
DEFAULT_MESH = 2001
DEFAULT_TRUNCATION = 100
DEFAULT_CANDIDATES = 20


@dataclass(frozen=True)
class ProblemOptions:
    mesh_points: int = DEFAULT_MESH
    truncation: int = DEFAULT_TRUNCATION
    seed: int = 0
    candidates: int = DEFAULT_CANDIDATES


@dataclass(frozen=True)
class LoadedProblem:
    kind: str
    mesh: Mesh
    options: ProblemOptions
    boundary: BoundaryConditions | None
    dirac: DiracSystem | None = None
    general: GeneralLinearSystem | None = None
    sl: SturmLiouvilleProblem | None = None
    mesh_note: str | None = None


def _complex_scalar(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(x, (int, float)) for x in value)
    ):
        return complex(value[0], value[1])
    raise SchemaError(f"{where}: expected a number or [re, im], got {value!r}")


def _bc_coefficient(value, where: str) -> AffineCoefficient:
    if isinstance(value, dict):
        unknown = set(value) - {"const", "lambda"}
        if unknown:
            raise SchemaError(f"{where}: unknown keys {sorted(unknown)}")
        const = _complex_scalar(value.get("const", 0.0), where + ".const")
        slope = _complex_scalar(value.get("lambda", 0.0), where + ".lambda")
        return AffineCoefficient(const, slope)
    return AffineCoefficient(_complex_scalar(value, where))


def _coefficient_gridfn(mesh: Mesh, value, where: str) -> GridFn:
    if isinstance(value, str):
        try:
            expression = expr.parse(value)
        except Exception as exc:
            raise SchemaError(f"{where}: {exc}") from exc
        return sample(mesh, expression)
    if isinstance(value, (int, float)):
        return GridFn.constant(mesh, complex(value))
    if isinstance(value, list):
        if len(value) == 2 and all(isinstance(x, (int, float)) for x in value):
            return GridFn.constant(mesh, complex(value[0], value[1]))
        if len(value) != mesh.m:
            raise SchemaError(
                f"{where}: inline sample array has {len(value)} entries, mesh has {mesh.m}"
            )
        out = np.empty(mesh.m, dtype=np.complex128)
        for i, item in enumerate(value):
            if isinstance(item, (int, float)):
                out[i] = complex(item)
            elif isinstance(item, list) and len(item) == 2:
                out[i] = complex(item[0], item[1])
            else:
                raise SchemaError(f"{where}[{i}]: expected number or [re, im]")
        return GridFn(mesh, out)
    raise SchemaError(f"{where}: unsupported coefficient entry {type(value).__name__}")


def _inline_sample_length(coefficients: dict) -> int | None:
    # Any list that is not a [re, im] constant counts as an inline sample array.
    for value in coefficients.values():
        if isinstance(value, list) and not (
            len(value) == 2 and all(isinstance(x, (int, float)) for x in value)
        ):
            return len(value)
    return None


def _flatten_general(coefficients: dict) -> dict:
    flat = {}
    for name in ("P", "Q", "R"):
        rows = coefficients.get(name)
        if (
            not isinstance(rows, list)
            or len(rows) != 2
            or any(not isinstance(r, list) or len(r) != 2 for r in rows)
        ):
            raise SchemaError(f"coefficients.{name}: expected a 2x2 nested list")
        for i in (0, 1):
            for j in (0, 1):
                flat[f"{name}{i + 1}{j + 1}"] = rows[i][j]
    return flat


def load_problem(
    path: str | Path,
    mesh_override: int | None = None,
    truncation_override: int | None = None,
    seed_override: int | None = None,
) -> LoadedProblem:
    """Load and validate a problem file, applying CLI overrides."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top-level document must be an object")

    kind = doc.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"kind must be one of {KINDS}, got {kind!r}")
    interval = doc.get("interval")
    if (
        not isinstance(interval, list)
        or len(interval) != 2
        or not all(isinstance(x, (int, float)) for x in interval)
        or not interval[0] < interval[1]
    ):
        raise SchemaError(f"interval must be [a, b] with a < b, got {interval!r}")

    raw_options = doc.get("options", {})
    if not isinstance(raw_options, dict):
        raise SchemaError("options must be an object")
    requested_m = mesh_override or raw_options.get("mesh", DEFAULT_MESH)
    if not isinstance(requested_m, int) or requested_m < 2:
        raise SchemaError(f"options.mesh must be an integer >= 2, got {requested_m!r}")
    options = ProblemOptions(
        mesh_points=round_up_points(requested_m),
        truncation=truncation_override or raw_options.get("truncation", DEFAULT_TRUNCATION),
        seed=seed_override if seed_override is not None else raw_options.get("seed", 0),
        candidates=raw_options.get("candidates", DEFAULT_CANDIDATES),
    )
    mesh_note = None
    if options.mesh_points != requested_m:
        mesh_note = (
            f"mesh adjusted from {requested_m} to {options.mesh_points} nodes "
            f"(node count minus one must be divisible by 5)"
        )

    coefficients = doc.get("coefficients")
    if not isinstance(coefficients, dict):
        raise SchemaError("coefficients must be an object")
    if kind == "general":
        coefficients = _flatten_general(coefficients)

    inline_m = _inline_sample_length(coefficients)
    if inline_m is not None:
        if mesh_override is not None and round_up_points(mesh_override) != inline_m:
            raise SchemaError(
                f"--mesh {mesh_override} conflicts with inline sample arrays of "
                f"length {inline_m}"
            )
        options = ProblemOptions(
            mesh_points=inline_m,
            truncation=options.truncation,
            seed=options.seed,
            candidates=options.candidates,
        )
        mesh_note = None
    try:
        mesh = Mesh(float(interval[0]), float(interval[1]), options.mesh_points)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc

    boundary_doc = doc.get("boundary", {})
    if not isinstance(boundary_doc, dict):
        raise SchemaError("boundary must be an object")

    def bc_pair(side: str):
        pair = boundary_doc.get(side)
        if not isinstance(pair, list) or len(pair) != 2:
            raise SchemaError(f"boundary.{side} must be a pair")
        return pair

    if kind == "sturm-liouville":
        for name in SL_ENTRIES:
            if name not in coefficients:
                raise SchemaError(f"coefficients.{name} missing")
        grids = {
            name: _coefficient_gridfn(mesh, coefficients[name], f"coefficients.{name}")
            for name in SL_ENTRIES
        }
        left = bc_pair("left")
        right = bc_pair("right")
        slp = SturmLiouvilleProblem(
            p=grids["p"], q=grids["q"], r=grids["r"],
            left=(
                _complex_scalar(left[0], "boundary.left[0]"),
                _complex_scalar(left[1], "boundary.left[1]"),
            ),
            right=(
                _complex_scalar(right[0], "boundary.right[0]"),
                _complex_scalar(right[1], "boundary.right[1]"),
            ),
        )
        return LoadedProblem(kind, mesh, options, None, sl=slp, mesh_note=mesh_note)

    if kind == "dirac":
        for name in DIRAC_ENTRIES:
            if name not in coefficients:
                raise SchemaError(f"coefficients.{name} missing")
        grids = {
            name: _coefficient_gridfn(mesh, coefficients[name], f"coefficients.{name}")
            for name in DIRAC_ENTRIES
        }
        system = DiracSystem(
            p1=grids["p1"], q=grids["q"], p2=grids["p2"],
            r11=grids["r11"], r12=grids["r12"], r21=grids["r21"], r22=grids["r22"],
        )
        general = None
    else:
        grids = {
            name: _coefficient_gridfn(mesh, value, f"coefficients.{name}")
            for name, value in coefficients.items()
        }
        general = GeneralLinearSystem(
            PP=Mat2Fn(grids["P11"], grids["P12"], grids["P21"], grids["P22"]),
            QQ=Mat2Fn(grids["Q11"], grids["Q12"], grids["Q21"], grids["Q22"]),
            RR=Mat2Fn(grids["R11"], grids["R12"], grids["R21"], grids["R22"]),
        )
        system = None

    left = bc_pair("left")
    right = bc_pair("right")
    boundary = BoundaryConditions(
        (
            _bc_coefficient(left[0], "boundary.left[0]"),
            _bc_coefficient(left[1], "boundary.left[1]"),
        ),
        (
            _bc_coefficient(right[0], "boundary.right[0]"),
            _bc_coefficient(right[1], "boundary.right[1]"),
        ),
    )
    return LoadedProblem(
        kind, mesh, options, boundary,
        dirac=system, general=general, mesh_note=mesh_note,
    )


def _complex_out(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _gridfn_out(f: GridFn) -> list[list[float]]:
    return [[float(v.real), float(v.imag)] for v in f.values]


def _affine_out(coeff: AffineCoefficient):
    if coeff.slope == 0:
        return {"const": _complex_out(coeff.const)}
    return {"const": _complex_out(coeff.const), "lambda": _complex_out(coeff.slope)}


def emit_dirac_problem(
    mesh: Mesh,
    system: DiracSystem,
    boundary: BoundaryConditions,
    options: ProblemOptions,
    seed_solution: dict[str, GridFn] | None = None,
) -> str:
    """Serialize a Dirac problem (sampled coefficients) as a JSON document."""
    doc = {
        "kind": "dirac",
        "interval": [mesh.a, mesh.b],
        "coefficients": {
            name: _gridfn_out(getattr(system, name)) for name in DIRAC_ENTRIES
        },
        "boundary": {
            "left": [_affine_out(boundary.a1), _affine_out(boundary.a2)],
            "right": [_affine_out(boundary.b1), _affine_out(boundary.b2)],
        },
        "options": {
            "mesh": options.mesh_points,
            "truncation": options.truncation,
            "seed": options.seed,
            "candidates": options.candidates,
        },
    }
    if seed_solution:
        doc["seed_solution"] = {
            name: _gridfn_out(fn) for name, fn in seed_solution.items()
        }
    return json.dumps(doc, sort_keys=True) + "\n"
