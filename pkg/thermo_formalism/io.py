from __future__ import annotations

import json
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from thermo_formalism.errors import DescriptorError, ThermoInputError
from thermo_formalism.models import (
    FiniteMapSystem,
    FiniteMeasureSystem,
    JobConfig,
    MarkovShiftSystem,
    TransferMatrix,
    WeightedShift,
)
from thermo_formalism.systems import build_pf_operator

COMMANDS = (
    "eval-lambda",
    "t-entropy",
    "dual-entropy",
    "variational-check",
    "pressure",
    "ruelle-walters",
    "latushkin-stepin",
    "lp-radius",
    "entropy-statistic",
)

MULTI_START_COMMANDS = {"ruelle-walters", "latushkin-stepin"}

COMMAND_PARAMETERS = {
    "eval-lambda": {"phi", "method", "tol", "max_iter", "n_max"},
    "t-entropy": {"mu", "n_max", "tol"},
    "dual-entropy": {"mu", "tol", "max_iter"},
    "variational-check": {"phi", "n_max", "tol"},
    "pressure": {"psi"},
    "ruelle-walters": {"psi", "n_starts", "max_iter"},
    "latushkin-stepin": {"a", "p", "n_starts", "max_iter"},
    "lp-radius": {"n_max", "tau_n_max"},
    "entropy-statistic": {"mu", "radius", "n_range", "n_max", "slack"},
}

COMMAND_KINDS = {
    "eval-lambda": "finite_map",
    "t-entropy": "finite_map",
    "dual-entropy": "finite_map",
    "variational-check": "finite_map",
    "pressure": "markov_shift",
    "ruelle-walters": "markov_shift",
    "latushkin-stepin": "markov_shift",
    "lp-radius": "measure_system",
    "entropy-statistic": "finite_map",
}

DESCRIPTOR_FIELDS = {
    "finite_map": ({"kind", "map"}, {"psi"}),
    "markov_shift": ({"kind", "adjacency"}, {"rho"}),
    "measure_system": ({"kind", "m", "beta", "psi", "p"}, set()),
}

TOP_LEVEL_KEYS = {"command", "seed", "system", "parameters", "output"}
OUTPUT_KEYS = {"path", "format", "timing"}
OUTPUT_FORMATS = ("json", "csv", "xlsx")
MAX_SEED = 2**64 - 1


def _reject_unknown(data: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise DescriptorError(f"{where} に未知のキーがあります: {', '.join(unknown)}")


def _require_table(value: Any, field: str) -> dict:
    if not isinstance(value, dict):
        raise DescriptorError(f"{field} はテーブル (key-value) である必要があります")
    return value


def load_document(path: str | Path) -> dict:
    """Read a TOML, JSON or YAML file chosen by suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DescriptorError(f"設定ファイルを読み込めません: {path} ({exc})") from exc
    try:
        if suffix == ".toml":
            data = tomllib.loads(text)
        elif suffix == ".json":
            data = json.loads(text)
        elif suffix in {".yaml", ".yml"}:
            data = yaml.safe_load(text) or {}
        else:
            raise DescriptorError(f"未対応の設定ファイル形式です: {suffix} (.toml / .json / .yaml)")
    except (tomllib.TOMLDecodeError, json.JSONDecodeError, yaml.YAMLError) as exc:
        raise DescriptorError(f"設定ファイルの構文エラーです: {path} ({exc})") from exc
    return _require_table(data, str(path))


def float_vector(value: Any, field: str, size: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DescriptorError(f"{field} は数値の配列である必要があります") from exc
    if arr.ndim != 1:
        raise DescriptorError(f"{field} は1次元配列である必要があります")
    if size is not None and arr.shape[0] != size:
        raise DescriptorError(f"{field} の長さ {arr.shape[0]} が {size} と一致しません")
    if np.any(np.isnan(arr)):
        raise DescriptorError(f"{field} に NaN が含まれています")
    return arr


def float_matrix(value: Any, field: str, size: int | None = None) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DescriptorError(f"{field} は数値の正方行列である必要があります") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DescriptorError(f"{field} は正方行列である必要があります")
    if size is not None and arr.shape[0] != size:
        raise DescriptorError(f"{field} のサイズ {arr.shape[0]} が {size} と一致しません")
    if np.any(np.isnan(arr)):
        raise DescriptorError(f"{field} に NaN が含まれています")
    return arr


def int_vector(value: Any, field: str) -> np.ndarray:
    if not isinstance(value, (list, tuple)) or not value:
        raise DescriptorError(f"{field} は空でない整数の配列である必要があります")
    if any(isinstance(item, bool) or not isinstance(item, int) for item in value):
        raise DescriptorError(f"{field} の要素は整数である必要があります")
    return np.asarray(value, dtype=int)


def positive_float(value: Any, field: str, minimum: float = 0.0, inclusive: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DescriptorError(f"{field} は数値である必要があります")
    number = float(value)
    if not np.isfinite(number) or number < minimum or (number == minimum and not inclusive):
        bound = "以上" if inclusive else "より大きい値"
        raise DescriptorError(f"{field} は {minimum} {bound}である必要があります ({field}={value})")
    return number


def positive_int(value: Any, field: str, minimum: int = 1) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise DescriptorError(f"{field} は {minimum} 以上の整数である必要があります ({field}={value!r})")
    return value


def system_from_descriptor(descriptor: dict):
    """finite_map -> TransferMatrix, markov_shift -> MarkovShiftSystem, measure_system -> WeightedShift."""
    descriptor = _require_table(descriptor, "system")
    kind = descriptor.get("kind")
    if kind not in DESCRIPTOR_FIELDS:
        raise DescriptorError(f"system.kind が不正です: {kind!r} ({', '.join(DESCRIPTOR_FIELDS)})")
    required, optional = DESCRIPTOR_FIELDS[kind]
    _reject_unknown(descriptor, required | optional, "system")
    missing = sorted(required - set(descriptor))
    if missing:
        raise DescriptorError(f"system に必須キーが不足しています: {', '.join(missing)}")

    try:
        if kind == "finite_map":
            table = int_vector(descriptor["map"], "system.map")
            system = FiniteMapSystem(n_states=table.size, map=table)
            psi = float_vector(descriptor.get("psi", np.ones(table.size)), "system.psi", table.size)
            return build_pf_operator(system, psi)
        if kind == "markov_shift":
            adjacency = float_matrix(descriptor["adjacency"], "system.adjacency")
            rho = descriptor.get("rho")
            rho = None if rho is None else float_matrix(rho, "system.rho", adjacency.shape[0])
            return MarkovShiftSystem(
                n_symbols=adjacency.shape[0],
                adjacency=adjacency,
                branch_weights=rho,
                stochastic_on_fibers=rho is not None,
            )
        beta = int_vector(descriptor["beta"], "system.beta")
        masses = float_vector(descriptor["m"], "system.m", beta.size)
        psi = float_vector(descriptor["psi"], "system.psi", beta.size)
        p = positive_float(descriptor["p"], "system.p", minimum=1.0, inclusive=True)
        return WeightedShift(system=FiniteMeasureSystem(n_points=beta.size, m=masses, beta=beta), psi=psi, p=p)
    except DescriptorError:
        raise
    except ThermoInputError as exc:
        raise DescriptorError(f"system ({kind}): {exc}") from exc


def system_to_descriptor(obj) -> dict:
    if isinstance(obj, TransferMatrix):
        alpha = obj.system.map
        return {
            "kind": "finite_map",
            "map": [int(x) for x in alpha],
            "psi": [float(v) for v in obj.entries[alpha, np.arange(obj.n_states)]],
        }
    if isinstance(obj, MarkovShiftSystem):
        descriptor = {"kind": "markov_shift", "adjacency": obj.adjacency.astype(int).tolist()}
        if obj.branch_weights is not None:
            descriptor["rho"] = obj.branch_weights.tolist()
        return descriptor
    if isinstance(obj, WeightedShift):
        return {
            "kind": "measure_system",
            "m": obj.system.m.tolist(),
            "beta": [int(x) for x in obj.system.beta],
            "psi": obj.psi.tolist(),
            "p": float(obj.p),
        }
    raise DescriptorError(f"descriptor に変換できない型です: {type(obj).__name__}")


def parse_job_config(data: dict) -> JobConfig:
    data = _require_table(data, "config")
    _reject_unknown(data, TOP_LEVEL_KEYS, "config")
    command = data.get("command")
    if command not in COMMANDS:
        raise DescriptorError(f"command が不正です: {command!r} ({', '.join(COMMANDS)})")

    system = _require_table(data.get("system"), "system")
    expected_kind = COMMAND_KINDS[command]
    if system.get("kind") != expected_kind:
        raise DescriptorError(f"command {command} には system.kind = {expected_kind!r} が必要です")

    parameters = _require_table(data.get("parameters", {}), "parameters")
    _reject_unknown(parameters, COMMAND_PARAMETERS[command], "parameters")

    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED):
        raise DescriptorError(f"seed は0以上 2^64 未満の整数である必要があります (seed={seed!r})")
    if seed is None and command in MULTI_START_COMMANDS:
        raise DescriptorError(f"command {command} は multi-start を使うため seed が必須です")

    output = _require_table(data.get("output", {}), "output")
    _reject_unknown(output, OUTPUT_KEYS, "output")
    output_format = output.get("format", "json")
    if output_format not in OUTPUT_FORMATS:
        raise DescriptorError(f"output.format が不正です: {output_format!r} ({', '.join(OUTPUT_FORMATS)})")
    timing = output.get("timing", False)
    if not isinstance(timing, bool):
        raise DescriptorError("output.timing は true / false である必要があります")

    return JobConfig(
        command=command,
        system=system,
        parameters=dict(parameters),
        seed=seed,
        output_path=output.get("path"),
        output_format=output_format,
        timing=timing,
    )


def load_job_config(path: str | Path) -> JobConfig:
    return parse_job_config(load_document(path))
