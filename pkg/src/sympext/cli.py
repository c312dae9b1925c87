"""Command-line interface: JSON config in, JSON report out, CSV dumps on request.

Exit codes: 0 success verdicts, 1 failed mathematical verdicts, 2 numeric
failure, 3 configuration or file errors.  Reports are deterministic for a
fixed config and seed apart from the timing block.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys as _sys
import time
from pathlib import Path

import numpy as np

from . import extension, propagation, recessive, structure
from .errors import ConfigError, FileError, NumericFailure, SympextError
from .system import (
    ConstantCoefficients,
    ExplicitCoefficients,
    PeriodicCoefficients,
    WeightScaledCoefficients,
    build_system,
    check_atkinson,
)
from .tolerances import DEFAULT, Tolerances

COMMANDS = ("validate", "atkinson", "solve", "disconjugacy", "recessive", "classify", "friedrichs", "membership")

_TOP_KEYS = {
    "n",
    "coefficients",
    "horizon",
    "nu",
    "lambda",
    "atkinson_window",
    "anchors",
    "normalization_point",
    "tolerances",
    "seed",
    "allow_marginal",
    "output",
}
_COEFF_KEYS = {"type", "A", "B", "C", "D", "W", "gamma"}
_OUTPUT_KEYS = {"csv_dir"}
_TOL_KEYS = set(f.name for f in dataclasses.fields(Tolerances))


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


@dataclasses.dataclass
class RunConfig:
    n: int
    coefficients: dict
    horizon: int
    nu: float | None
    lam: complex | None
    atkinson_window: tuple[int, int]
    anchors: list[int]
    normalization_point: int | None
    tolerances: Tolerances
    seed: int
    allow_marginal: bool
    csv_dir: str | None
    raw: dict


def _parse_complex(value, path: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(path, "expected a number or an [re, im] pair")


def _parse_matrix(value, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError(path, "expected a nonempty matrix (list of rows)")
    rows = []
    for i, row in enumerate(value):
        rows.append([_parse_complex(e, f"{path}[{i}]") for e in row])
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(path, "ragged matrix rows")
    return np.array(rows, dtype=complex)


def parse_config(text: str) -> RunConfig:
    """Validate a JSON config document; unknown keys are rejected with their path."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    for key in raw:
        if key not in _TOP_KEYS:
            raise ConfigError(f"config.{key}", "unknown key")

    n = raw.get("n")
    if not _is_int(n) or n < 1:
        raise ConfigError("config.n", "block dimension must be a positive integer")

    coeff = raw.get("coefficients")
    if not isinstance(coeff, dict):
        raise ConfigError("config.coefficients", "missing coefficient block")
    for key in coeff:
        if key not in _COEFF_KEYS:
            raise ConfigError(f"config.coefficients.{key}", "unknown key")
    kind = coeff.get("type", "constant")
    if kind not in ("constant", "periodic", "explicit", "weight_scaled"):
        raise ConfigError("config.coefficients.type", f"unknown provider type {kind!r}")
    for block in "ABCDW":
        if block not in coeff:
            raise ConfigError(f"config.coefficients.{block}", "missing block")
    if kind == "weight_scaled" and "gamma" not in coeff:
        raise ConfigError("config.coefficients.gamma", "weight_scaled provider needs gamma")
    if kind != "weight_scaled" and "gamma" in coeff:
        raise ConfigError("config.coefficients.gamma", "gamma is only valid for weight_scaled")

    horizon = raw.get("horizon", 200)
    if not _is_int(horizon) or horizon < 8:
        raise ConfigError("config.horizon", "horizon must be an integer >= 8")

    nu = raw.get("nu")
    if nu is not None and not isinstance(nu, (int, float)):
        raise ConfigError("config.nu", "nu must be real")
    lam = raw.get("lambda")
    if lam is not None:
        lam = _parse_complex(lam, "config.lambda")

    window = raw.get("atkinson_window", [0, 2 * n])
    if (
        not isinstance(window, list)
        or len(window) != 2
        or not all(_is_int(v) for v in window)
        or not (0 <= window[0] <= window[1])
    ):
        raise ConfigError("config.atkinson_window", "expected [a, b] with 0 <= a <= b")

    anchors = raw.get("anchors", [max(horizon // 4, 2), max(horizon // 2, 3), horizon])
    if not isinstance(anchors, list) or not all(_is_int(a) and a >= 1 for a in anchors):
        raise ConfigError("config.anchors", "anchors must be positive integers")
    anchors = sorted(set(anchors))

    norm_point = raw.get("normalization_point")
    if norm_point is not None and (not _is_int(norm_point) or norm_point < 0):
        raise ConfigError("config.normalization_point", "must be a nonnegative integer")

    tol_overrides = raw.get("tolerances", {})
    if not isinstance(tol_overrides, dict):
        raise ConfigError("config.tolerances", "expected an object")
    for key, value in tol_overrides.items():
        if key not in _TOL_KEYS:
            raise ConfigError(f"config.tolerances.{key}", "unknown tolerance")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
            raise ConfigError(f"config.tolerances.{key}", "tolerances must be positive numbers")
    tol = DEFAULT.replace(**{k: float(v) for k, v in tol_overrides.items()})

    seed = raw.get("seed", 0)
    if not _is_int(seed) or seed < 0:
        raise ConfigError("config.seed", "seed must be a nonnegative integer")

    allow_marginal = raw.get("allow_marginal", False)
    if not isinstance(allow_marginal, bool):
        raise ConfigError("config.allow_marginal", "expected true/false")

    output = raw.get("output", {})
    if not isinstance(output, dict):
        raise ConfigError("config.output", "expected an object")
    for key in output:
        if key not in _OUTPUT_KEYS:
            raise ConfigError(f"config.output.{key}", "unknown key")
    csv_dir = output.get("csv_dir")
    if csv_dir is not None and not isinstance(csv_dir, str):
        raise ConfigError("config.output.csv_dir", "expected a path string")

    return RunConfig(
        n=n,
        coefficients=coeff,
        horizon=horizon,
        nu=float(nu) if nu is not None else None,
        lam=lam,
        atkinson_window=(window[0], window[1]),
        anchors=anchors,
        normalization_point=norm_point,
        tolerances=tol,
        seed=seed,
        allow_marginal=allow_marginal,
        csv_dir=csv_dir,
        raw=raw,
    )


def _build_provider(cfg: RunConfig):
    c = cfg.coefficients
    kind = c.get("type", "constant")
    path = "config.coefficients"
    if kind in ("constant", "weight_scaled"):
        blocks = [_parse_matrix(c[b], f"{path}.{b}") for b in "ABCDW"]
        for b, m in zip("ABCDW", blocks):
            if m.shape != (cfg.n, cfg.n):
                raise ConfigError(f"{path}.{b}", f"expected {cfg.n}x{cfg.n}, got {m.shape}")
        if kind == "constant":
            return ConstantCoefficients(*blocks)
        gamma = c["gamma"]
        if not isinstance(gamma, (int, float)) or gamma <= 0:
            raise ConfigError(f"{path}.gamma", "gamma must be positive")
        return WeightScaledCoefficients(*blocks, float(gamma))
    lists = []
    for b in "ABCDW":
        value = c[b]
        if not isinstance(value, list) or not value or not isinstance(value[0], list) or not value[0]:
            raise ConfigError(f"{path}.{b}", "expected a list of matrices")
        if not isinstance(value[0][0], list):
            raise ConfigError(f"{path}.{b}", f"{kind} providers need a list of matrices")
        lists.append([_parse_matrix(mat, f"{path}.{b}[{i}]") for i, mat in enumerate(value)])
    cls = PeriodicCoefficients if kind == "periodic" else ExplicitCoefficients
    return cls(*lists)


@dataclasses.dataclass
class Report:
    command: str
    config: dict
    verdicts: dict
    warnings: list
    timing: dict
    exit_code: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Report":
        return cls(**data)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _verdict(ok, value, tolerance=None, horizon=None, **extra) -> dict:
    v = {"ok": ok, "value": value, "tolerance": tolerance, "horizon": horizon}
    v.update(extra)
    return v


def _require(cfg: RunConfig, field: str):
    value = getattr(cfg, "lam" if field == "lambda" else field)
    if value is None:
        raise ConfigError(f"config.{field}", "required by this command")
    return value


def _complex_to_json(z: complex):
    return [float(np.real(z)), float(np.imag(z))]


def _cmd_validate(sys_, cfg, verdicts, warnings):
    rng = np.random.default_rng(cfg.seed)
    probes = [complex(a, b) for a, b in rng.uniform(-1, 1, size=(4, 2))]
    hi = min(cfg.horizon, 64)
    worst = 0.0
    j = sys_.j
    for k in range(hi + 1):
        for lam in probes:
            sl = sys_.s_lambda(k, lam)
            sl_bar = sys_.s_lambda(k, np.conj(lam))
            worst = max(worst, float(np.linalg.norm(sl_bar.conj().T @ j @ sl - j)))
    verdicts["hypothesis_basic"] = _verdict(True, 0.0, cfg.tolerances.sym, hi, detail="validated at build time")
    verdicts["pencil_identity"] = _verdict(worst <= cfg.tolerances.sym * 10, worst, cfg.tolerances.sym, hi)
    return all(v["ok"] for v in verdicts.values())


def _cmd_atkinson(sys_, cfg, verdicts, warnings):
    lam = cfg.lam if cfg.lam is not None else _require(cfg, "nu")
    holds, gram = check_atkinson(sys_, lam, cfg.atkinson_window, cfg.tolerances)
    eigs = np.linalg.eigvalsh(gram)
    verdicts["atkinson"] = _verdict(
        holds,
        float(eigs[0]),
        cfg.tolerances.psd,
        cfg.atkinson_window[1],
        detail={"window": list(cfg.atkinson_window), "gram_eigenvalues": [float(e) for e in eigs]},
    )
    return holds


def _cmd_solve(sys_, cfg, verdicts, warnings, csv_dir):
    lam = _require(cfg, "lambda")
    K = cfg.horizon
    phi = propagation.fundamental_matrix(sys_, lam, K)
    phi_bar = phi if np.imag(lam) == 0 else propagation.fundamental_matrix(sys_, np.conj(lam), K)
    j = sys_.j
    worst = 0.0
    for k in range(K + 2):
        defect = float(np.linalg.norm(phi_bar.values[k].conj().T @ j @ phi.values[k] - j))
        scale = 1.0 + float(np.linalg.norm(phi_bar.values[k]) * np.linalg.norm(phi.values[k]))
        worst = max(worst, defect / scale)  # relative: growth inflates the raw defect by |Phi|^2
    ok = worst <= 1e-8
    verdicts["symplectic_conservation"] = _verdict(ok, worst, 1e-8, K)
    if csv_dir:
        for col in range(phi.ncols):
            propagation.write_sequence_csv(Path(csv_dir) / f"phi_col{col}.csv", phi.values[:, :, col])
    return ok


def _cmd_disconjugacy(sys_, cfg, verdicts, warnings):
    nu = _require(cfg, "nu")
    K = cfg.horizon
    ok, reports = structure.disconjugacy_check(sys_, nu, 0, K, cfg.tolerances)
    first_bad = next((r.k for r in reports if not r.ok), None)
    verdicts["disconjugate_on_0_K"] = _verdict(
        ok, first_bad if first_bad is not None else -1, cfg.tolerances.psd, K,
        detail={"first_failing_k": first_bad},
    )
    scan = structure.nonoscillation_scan(sys_, nu, K, cfg.tolerances)
    verdicts["nonoscillation_onset"] = _verdict(
        scan.found, scan.onset, cfg.tolerances.psd, K, detail={"inconclusive": scan.inconclusive}
    )
    if scan.inconclusive:
        warnings.append("nonoscillation scan is finite-horizon evidence, not a proof")
    return ok


def _cmd_recessive(sys_, cfg, verdicts, warnings, csv_dir):
    nu = _require(cfg, "nu")
    m = cfg.normalization_point if cfg.normalization_point is not None else 0
    result = recessive.recessive_solution(sys_, nu, cfg.anchors, m=m, tol=cfg.tolerances)
    cert_ok, trace = recessive.recessive_certificate(sys_, result, min(cfg.horizon, result.basis.horizon), cfg.tolerances)
    dom = recessive.dominant_solution(sys_, result.basis, result.m)
    verdicts["converged"] = _verdict(result.converged, result.history[-1]["raw_diff"] if result.history else None,
                                     cfg.tolerances.rec, result.anchors[-1],
                                     detail={"refined": result.refined, "history": result.history})
    verdicts["certificate"] = _verdict(bool(cert_ok), float(trace[-1]), cfg.tolerances.lambda_big,
                                       int(min(cfg.horizon, result.basis.horizon)))
    pair_ok = structure.is_normalized_pair(sys_, result.basis, dom, cfg.tolerances)
    verdicts["normalized_pair"] = _verdict(pair_ok, None, cfg.tolerances.res, result.basis.horizon)
    if csv_dir:
        for colj in range(result.basis.ncols):
            propagation.write_sequence_csv(Path(csv_dir) / f"recessive_col{colj}.csv", result.basis.values[:, :, colj])
            propagation.write_sequence_csv(Path(csv_dir) / f"dominant_col{colj}.csv", dom.values[:, :, colj])
        with open(Path(csv_dir) / "lambda_min_trace.csv", "w", encoding="utf-8") as fh:
            fh.write("k,lambda_min\n")
            for i, val in enumerate(trace):
                fh.write(f"{result.m + i},{val:.17g}\n")
    return result.converged and cert_ok and pair_ok


def _cmd_classify(sys_, cfg, verdicts, warnings):
    lam = _require(cfg, "lambda")
    report = extension.count_square_summable(sys_, lam, cfg.anchors, cfg.tolerances)
    stable = report.confidence == "Stable"
    verdicts["d_estimate"] = _verdict(
        stable, report.d_estimate, None, report.horizons[-1],
        detail={"confidence": report.confidence, "pair_counts": report.pair_counts,
                "lambda": _complex_to_json(report.lam)},
    )
    warnings.extend(report.warnings)
    if stable:
        cls = extension.classify(sys_, report)
        verdicts["classification"] = _verdict(True, str(cls), None, report.horizons[-1])
    return stable


def _assemble(sys_, cfg, verdicts, warnings):
    """Shared friedrichs pipeline: count d, gate on confidence, assemble."""
    nu = _require(cfg, "nu")
    lam = _require(cfg, "lambda")
    if np.imag(lam) != 0:
        raise ConfigError("config.lambda", "friedrichs assembly needs a real lambda < nu")
    report = extension.count_square_summable(sys_, lam, cfg.anchors, cfg.tolerances)
    warnings.extend(report.warnings)
    stable = report.confidence == "Stable"
    verdicts["d_estimate"] = _verdict(stable, report.d_estimate, None, report.horizons[-1],
                                      detail={"confidence": report.confidence, "pair_counts": report.pair_counts})
    if not stable and not cfg.allow_marginal:
        warnings.append("Marginal d-estimate blocks assembly; set allow_marginal to override")
        return None
    data = extension.assemble_theta(
        sys_, nu, float(np.real(lam)), report.d_estimate,
        m=cfg.normalization_point, anchors=cfg.anchors, tol=cfg.tolerances,
    )
    residuals = data.invariant_residuals()
    verdicts["rank_ML"] = _verdict(residuals["rank_ML"] == data.d, residuals["rank_ML"], None, data.theta.horizon)
    verdicts["ml_identity"] = _verdict(residuals["ml_identity"] <= 1e-10, residuals["ml_identity"], 1e-10,
                                       data.theta.horizon)
    verdicts["upsilon_submatrix"] = _verdict(residuals["upsilon_submatrix"] <= 1e-8,
                                             residuals["upsilon_submatrix"], 1e-8, data.theta.horizon)
    verdicts["friedrichs_data"] = _verdict(True, data.to_json_dict(), None, data.theta.horizon)
    return data


def _cmd_friedrichs(sys_, cfg, verdicts, warnings, csv_dir):
    data = _assemble(sys_, cfg, verdicts, warnings)
    if data is None:
        return False
    if csv_dir:
        for colj in range(data.theta.ncols):
            propagation.write_sequence_csv(Path(csv_dir) / f"theta_col{colj}.csv", data.theta.values[:, :, colj])
    return all(v["ok"] for v in verdicts.values())


def _cmd_membership(sys_, cfg, verdicts, warnings, z_file, f_file):
    if not z_file or not f_file:
        raise ConfigError("membership", "--z-file and --f-file are required")
    z_vals = propagation.read_sequence_csv(z_file)
    f_vals = propagation.read_sequence_csv(f_file)
    if z_vals.shape != f_vals.shape:
        raise FileError(f"z rows {z_vals.shape} and f rows {f_vals.shape} disagree")
    if z_vals.shape[1] != 2 * cfg.n:
        raise FileError(f"sequences have {z_vals.shape[1]} components, expected {2 * cfg.n}")
    data = _assemble(sys_, cfg, verdicts, warnings)
    if data is None:
        return False
    pair = propagation.RelationPair(z_vals, f_vals)
    verdict = extension.friedrichs_membership(sys_, pair, data, tol=cfg.tolerances)
    for name, cond in verdict.conditions.items():
        verdicts[f"condition_{name}"] = _verdict(cond["ok"], cond["value"], cond.get("tolerance"), pair.horizon)
    verdicts["member"] = _verdict(verdict.member, verdict.member, None, pair.horizon)
    return verdict.member


def run(command: str, cfg: RunConfig, z_file=None, f_file=None, csv_dir=None) -> Report:
    """Execute one pipeline command and assemble the report."""
    if command not in COMMANDS:
        raise ConfigError("command", f"unknown command {command!r}")
    started = time.perf_counter()
    verdicts: dict = {}
    warnings: list = []
    csv_dir = csv_dir or cfg.csv_dir
    if csv_dir:
        Path(csv_dir).mkdir(parents=True, exist_ok=True)
    exit_code = 0
    try:
        provider = _build_provider(cfg)
        sys_ = build_system(provider, (0, min(cfg.horizon, 64)), cfg.tolerances)
        if command == "validate":
            ok = _cmd_validate(sys_, cfg, verdicts, warnings)
        elif command == "atkinson":
            ok = _cmd_atkinson(sys_, cfg, verdicts, warnings)
        elif command == "solve":
            ok = _cmd_solve(sys_, cfg, verdicts, warnings, csv_dir)
        elif command == "disconjugacy":
            ok = _cmd_disconjugacy(sys_, cfg, verdicts, warnings)
        elif command == "recessive":
            ok = _cmd_recessive(sys_, cfg, verdicts, warnings, csv_dir)
        elif command == "classify":
            ok = _cmd_classify(sys_, cfg, verdicts, warnings)
        elif command == "friedrichs":
            ok = _cmd_friedrichs(sys_, cfg, verdicts, warnings, csv_dir)
        else:
            ok = _cmd_membership(sys_, cfg, verdicts, warnings, z_file, f_file)
        exit_code = 0 if ok else 1
    except NumericFailure as exc:
        verdicts["numeric_failure"] = _verdict(False, str(exc), None, cfg.horizon)
        exit_code = 2
    except (ConfigError, FileError):
        raise
    except SympextError as exc:
        verdicts["failed"] = _verdict(False, f"{type(exc).__name__}: {exc}", None, cfg.horizon)
        warnings.append(f"{type(exc).__name__}: {exc}")
        exit_code = 1
    timing = {"seconds": round(time.perf_counter() - started, 6)}
    return Report(
        command=command,
        config=cfg.raw,
        verdicts=_jsonify(verdicts),
        warnings=warnings,
        timing=timing,
        exit_code=exit_code,
    )


def _jsonify(obj):
    if isinstance(obj, dict):
        return {k: _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    return obj


def _apply_overrides(raw: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ConfigError("override", f"expected key=value, got {item!r}")
        key, _, text = item.partition("=")
        try:
            value = json.loads(text)
        except json.JSONDecodeError:
            value = text
        target = raw
        parts = key.split(".")
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise ConfigError(f"override.{key}", "path does not address an object")
        target[parts[-1]] = value
    return raw


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="sympext", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--csv", default=None, help="directory for CSV sequence dumps")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry (dotted path, JSON value)")
    parser.add_argument("--z-file", default=None, help="CSV with the z sequence (membership)")
    parser.add_argument("--f-file", default=None, help="CSV with the f sequence (membership)")
    args = parser.parse_args(argv)
    try:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as exc:
            raise FileError(f"cannot read config {args.config}: {exc}") from exc
        raw = json.loads(text) if text.strip().startswith("{") else None
        if raw is None:
            raise ConfigError("config", "top level must be a JSON object")
        raw = _apply_overrides(raw, args.override)
        if args.seed is not None:
            raw["seed"] = args.seed
        cfg = parse_config(json.dumps(raw))
        report = run(args.command, cfg, z_file=args.z_file, f_file=args.f_file, csv_dir=args.csv)
    except (ConfigError, FileError) as exc:
        print(json.dumps({"error": str(exc), "exit_code": 3}, indent=2))
        return 3
    except json.JSONDecodeError as exc:
        print(json.dumps({"error": f"config: invalid JSON: {exc}", "exit_code": 3}, indent=2))
        return 3
    print(report.to_json())
    return report.exit_code


if __name__ == "__main__":
    _sys.exit(main())
