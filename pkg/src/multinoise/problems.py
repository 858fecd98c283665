"""Problem-file schema, result serialization and built-in instances.

A problem is a single JSON document with matrices as row-major nested
arrays. Field names follow the conventional symbols: A, B (nominal plant),
A_bar, B_bar (true plant, optional), A_dirs/alpha and B_dirs/beta (noise
directions and variances), theta/phi (relative uncertainty magnitudes),
Q/R (costs) and an optional "options" block with solver overrides.

Parse failures raise :class:`ProblemFormatError` naming the offending
field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .design import DesignDiagnostics, DesignResult
from .errors import ProblemFormatError
from .gare import GareOptions
from .margins import BisectOptions, MarginCertificate, MarginMethod
from .model import (
    CostPair,
    NoiseModel,
    NominalSystem,
    PerturbationBox,
    TrueSystem,
    UncertaintyStructure,
)

__all__ = [
    "Problem",
    "parse_problem",
    "load_problem",
    "problem_to_dict",
    "inverted_pendulum",
    "certificate_to_dict",
    "certificate_from_dict",
    "design_result_to_dict",
    "design_result_from_dict",
]


@dataclass
class Problem:
    """A fully parsed problem instance."""

    system: NominalSystem
    noise: NoiseModel
    true_system: TrueSystem | None = None
    structure: UncertaintyStructure | None = None
    costs: CostPair | None = None
    gare_options: GareOptions = field(default_factory=GareOptions)
    bisect_options: BisectOptions = field(default_factory=BisectOptions)

    def require_costs(self) -> CostPair:
        if self.costs is None:
            raise ProblemFormatError("field 'Q'/'R': cost matrices required "
                                     "for this command")
        return self.costs

    def require_structure(self) -> UncertaintyStructure:
        if self.structure is None:
            raise ProblemFormatError("field 'theta': uncertainty magnitudes "
                                     "required for this command")
        return self.structure


def _matrix(data: dict, name: str, required: bool = True) -> np.ndarray | None:
    if name not in data:
        if required:
            raise ProblemFormatError(f"field '{name}': missing")
        return None
    try:
        M = np.asarray(data[name], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}': not numeric ({exc})") from exc
    if M.ndim == 0:
        M = M.reshape(1, 1)
    if M.ndim == 1:
        M = M.reshape(1, -1)
    if M.ndim != 2:
        raise ProblemFormatError(f"field '{name}': expected a matrix")
    return M


def _vector(data: dict, name: str, length: int | None = None) -> np.ndarray | None:
    if name not in data:
        return None
    try:
        v = np.atleast_1d(np.asarray(data[name], dtype=float))
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field '{name}': not numeric ({exc})") from exc
    if v.ndim != 1:
        raise ProblemFormatError(f"field '{name}': expected a flat list")
    if length is not None and v.size != length:
        raise ProblemFormatError(
            f"field '{name}': expected {length} entries, got {v.size}"
        )
    return v


def _dir_list(data: dict, name: str, var_name: str) -> list:
    mats = data.get(name, [])
    if not isinstance(mats, list):
        raise ProblemFormatError(f"field '{name}': expected a list of matrices")
    out = []
    for i, m in enumerate(mats):
        try:
            M = np.asarray(m, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ProblemFormatError(
                f"field '{name}[{i}]': not numeric ({exc})"
            ) from exc
        if M.ndim != 2:
            raise ProblemFormatError(f"field '{name}[{i}]': expected a matrix")
        out.append(M)
    variances = _vector(data, var_name, len(out))
    if variances is None:
        variances = np.zeros(len(out))
    return [(M, float(v)) for M, v in zip(out, variances)]


def parse_problem(data: dict) -> Problem:
    """Build a :class:`Problem` from a parsed JSON document."""
    if not isinstance(data, dict):
        raise ProblemFormatError("top level: expected a JSON object")
    A = _matrix(data, "A")
    B = _matrix(data, "B")
    try:
        system = NominalSystem(A=A, B=B)
    except ValueError as exc:
        raise ProblemFormatError(f"field 'A'/'B': {exc}") from exc

    true_system = None
    A_bar = _matrix(data, "A_bar", required=False)
    B_bar = _matrix(data, "B_bar", required=False)
    if (A_bar is None) != (B_bar is None):
        raise ProblemFormatError(
            "field 'A_bar'/'B_bar': both or neither must be given"
        )
    if A_bar is not None:
        try:
            true_system = TrueSystem(A_bar=A_bar, B_bar=B_bar)
        except ValueError as exc:
            raise ProblemFormatError(f"field 'A_bar'/'B_bar': {exc}") from exc

    try:
        noise = NoiseModel(
            a_dirs=_dir_list(data, "A_dirs", "alpha"),
            b_dirs=_dir_list(data, "B_dirs", "beta"),
        )
    except ValueError as exc:
        raise ProblemFormatError(f"field 'A_dirs'/'B_dirs': {exc}") from exc

    structure = None
    theta = _vector(data, "theta", noise.p if noise.p else None)
    phi = _vector(data, "phi", noise.q if noise.q else None)
    if theta is not None or phi is not None:
        if theta is None:
            raise ProblemFormatError("field 'theta': required when phi is given")
        try:
            structure = UncertaintyStructure(
                theta=theta, phi=phi if phi is not None else np.zeros(noise.q)
            )
        except ValueError as exc:
            raise ProblemFormatError(f"field 'theta'/'phi': {exc}") from exc
        if structure.p != noise.p or structure.q != noise.q:
            raise ProblemFormatError(
                "field 'theta'/'phi': lengths must match A_dirs/B_dirs"
            )

    costs = None
    Q = _matrix(data, "Q", required=False)
    R = _matrix(data, "R", required=False)
    if (Q is None) != (R is None):
        raise ProblemFormatError("field 'Q'/'R': both or neither must be given")
    if Q is not None:
        try:
            costs = CostPair(Q=Q, R=R)
        except ValueError as exc:
            raise ProblemFormatError(f"field 'Q'/'R': {exc}") from exc

    opts = data.get("options", {})
    if not isinstance(opts, dict):
        raise ProblemFormatError("field 'options': expected an object")
    known = {"tol_abs", "tol_rel", "blowup", "max_iter",
             "bisect_rel_tol", "bisect_abs_tol", "bracket_cap"}
    for key in opts:
        if key not in known:
            raise ProblemFormatError(f"field 'options.{key}': unknown option")
    try:
        gare_options = GareOptions(
            tol_abs=float(opts.get("tol_abs", GareOptions.tol_abs)),
            tol_rel=float(opts.get("tol_rel", GareOptions.tol_rel)),
            blowup=float(opts.get("blowup", GareOptions.blowup)),
            max_iter=int(opts.get("max_iter", GareOptions.max_iter)),
        )
        bisect_options = BisectOptions(
            rel_tol=float(opts.get("bisect_rel_tol", BisectOptions.rel_tol)),
            abs_tol=float(opts.get("bisect_abs_tol", BisectOptions.abs_tol)),
            bracket_cap=float(opts.get("bracket_cap", BisectOptions.bracket_cap)),
        )
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"field 'options': {exc}") from exc

    return Problem(
        system=system,
        noise=noise,
        true_system=true_system,
        structure=structure,
        costs=costs,
        gare_options=gare_options,
        bisect_options=bisect_options,
    )


def load_problem(path) -> Problem:
    """Read and parse a problem file."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            f"line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    return parse_problem(data)


def problem_to_dict(problem: Problem) -> dict:
    """Serialize a problem back into the document schema."""
    data: dict = {
        "A": problem.system.A.tolist(),
        "B": problem.system.B.tolist(),
    }
    if problem.true_system is not None:
        data["A_bar"] = problem.true_system.A_bar.tolist()
        data["B_bar"] = problem.true_system.B_bar.tolist()
    if problem.noise.p:
        data["A_dirs"] = [D.tolist() for D, _ in problem.noise.a_dirs]
        data["alpha"] = [v for _, v in problem.noise.a_dirs]
    if problem.noise.q:
        data["B_dirs"] = [D.tolist() for D, _ in problem.noise.b_dirs]
        data["beta"] = [v for _, v in problem.noise.b_dirs]
    if problem.structure is not None:
        data["theta"] = problem.structure.theta.tolist()
        if problem.structure.q:
            data["phi"] = problem.structure.phi.tolist()
    if problem.costs is not None:
        data["Q"] = problem.costs.Q.tolist()
        data["R"] = problem.costs.R.tolist()
    g, b = problem.gare_options, problem.bisect_options
    data["options"] = {
        "tol_abs": g.tol_abs, "tol_rel": g.tol_rel, "blowup": g.blowup,
        "max_iter": g.max_iter, "bisect_rel_tol": b.rel_tol,
        "bisect_abs_tol": b.abs_tol, "bracket_cap": b.bracket_cap,
    }
    return data


def inverted_pendulum() -> Problem:
    """Built-in benchmark: torque-actuated inverted pendulum, linearized and
    Euler-discretized with step 0.1.

    The nominal model underestimates the mass constant (5 instead of the
    true 10), which shows up as uncertainty in the (2,1) entry of the
    dynamics matrix; the single uncertainty direction selects exactly that
    entry. The embedded solver options pin this benchmark's reference
    figures: near the stabilizability boundary the value iteration
    converges arbitrarily slowly, so the feasibility frontier (and with it
    the reported gains and margins) depends on the stopping rule.
    """
    dt = 0.1
    mass_nominal, mass_true = 5.0, 10.0
    A = np.array([[1.0, dt], [mass_nominal * dt, 1.0]])
    A_bar = np.array([[1.0, dt], [mass_true * dt, 1.0]])
    B = np.array([[0.0], [dt]])
    return Problem(
        system=NominalSystem(A=A, B=B),
        noise=NoiseModel(a_dirs=[(np.array([[0.0, 0.0], [1.0, 0.0]]), 0.0)]),
        true_system=TrueSystem(A_bar=A_bar, B_bar=B.copy()),
        structure=UncertaintyStructure(theta=np.array([1.0])),
        costs=CostPair(Q=np.eye(2), R=np.eye(1)),
        gare_options=GareOptions(tol_abs=0.0, tol_rel=1e-6, max_iter=1000),
        bisect_options=BisectOptions(),
    )


def _opt_matrix_to_list(M: np.ndarray | None):
    return None if M is None else np.asarray(M).tolist()


def _opt_matrix_from_list(v) -> np.ndarray | None:
    return None if v is None else np.asarray(v, dtype=float)


def certificate_to_dict(cert: MarginCertificate) -> dict:
    return {
        "method": cert.method.value,
        "y_star": cert.y_star,
        "eta": cert.box.eta.tolist(),
        "psi": cert.box.psi.tolist(),
        "bidirectional": cert.box.bidirectional,
        "cap_hit": cert.cap_hit,
        "P": _opt_matrix_to_list(cert.P),
        "q_matrix": _opt_matrix_to_list(cert.q_matrix),
        "zeta": None if cert.zeta is None else np.asarray(cert.zeta).tolist(),
    }


def certificate_from_dict(data: dict) -> MarginCertificate:
    try:
        box = PerturbationBox(
            eta=np.asarray(data["eta"], dtype=float),
            psi=np.asarray(data["psi"], dtype=float),
            bidirectional=bool(data["bidirectional"]),
        )
        zeta = data.get("zeta")
        return MarginCertificate(
            box=box,
            method=MarginMethod(data["method"]),
            y_star=float(data["y_star"]),
            P=_opt_matrix_from_list(data.get("P")),
            q_matrix=_opt_matrix_from_list(data.get("q_matrix")),
            zeta=None if zeta is None else np.asarray(zeta, dtype=float),
            cap_hit=bool(data.get("cap_hit", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"certificate document: {exc}") from exc


def design_result_to_dict(result: DesignResult) -> dict:
    d = result.diagnostics
    return {
        "K": result.K.tolist(),
        "y_star": result.y_star,
        "z_star": result.z_star,
        "cap_hit": result.cap_hit,
        "certificate": None if result.certificate is None
        else certificate_to_dict(result.certificate),
        "diagnostics": {
            "rho_closed_loop": d.rho_closed_loop,
            "worst_box_rho": d.worst_box_rho,
            "rho_true_closed_loop": d.rho_true_closed_loop,
        },
    }


def design_result_from_dict(data: dict) -> DesignResult:
    try:
        diag = data.get("diagnostics", {})
        return DesignResult(
            K=np.asarray(data["K"], dtype=float),
            certificate=None if data.get("certificate") is None
            else certificate_from_dict(data["certificate"]),
            y_star=float(data["y_star"]),
            z_star=None if data.get("z_star") is None
            else float(data["z_star"]),
            diagnostics=DesignDiagnostics(
                rho_closed_loop=float(diag["rho_closed_loop"]),
                worst_box_rho=None if diag.get("worst_box_rho") is None
                else float(diag["worst_box_rho"]),
                rho_true_closed_loop=None
                if diag.get("rho_true_closed_loop") is None
                else float(diag["rho_true_closed_loop"]),
            ),
            cap_hit=bool(data.get("cap_hit", False)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFormatError(f"design document: {exc}") from exc
