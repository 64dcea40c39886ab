"""Scenario configuration ingestion and execution.

A config file (TOML, or JSON with the same schema) holds either a single
scenario at top level or a batch under ``[[scenario]]``::

    seed = 7

    [[scenario]]
    name = "swap-07"
    kind = "swap"
    [scenario.parameters]
    s0 = 0.7

Every scenario produces ``<name>.report.json`` and, for dynamical kinds,
``<name>.trajectory.csv``. Reports contain no wall-clock data unless asked
for, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .config import DEFAULT_TOLERANCES, thread_cap
from .errors import BoundViolation, ConfigInvalid, NoGoCoolError, NumericalFailure, ValidationError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_TOL = DEFAULT_TOLERANCES

KINDS = (
    "no_go_check",
    "swap",
    "nonthermal_bath",
    "correlated",
    "approximate_cooling",
    "contrast",
    "bound_search",
)

KIND_HELP = {
    "no_go_check": "rank test and ground-population bound for s (x) b; params: system, bath, [tol]",
    "swap": "qubit swap cooling against a pure bath; params: s0, [bath]",
    "nonthermal_bath": "qubit system, two-qubit bath with zero eigenvalues; params: system, bath_weights",
    "correlated": "cooling a system-bath correlated state; params: bath_weights, split_index",
    "approximate_cooling": "eigenvalue-matching analysis of s (x) b -> S (x) B; params: system, bath, [final_bath_thermal]",
    "contrast": "exact unitary dynamics vs amplitude-damping master equation; params: [system], [bath], [coupling], [rate], [horizon], [n_times], [dt]",
    "bound_search": "Haar-random falsification of the ground-population bound; params: system, bath, [samples], [include_identity]",
}

MAX_BOUND_SEARCH_DIM = 16
MAX_BOUND_SEARCH_SAMPLES = 1_000_000


@dataclass
class ScenarioConfig:
    name: str
    kind: str
    parameters: dict[str, Any]
    output_path: str | None = None
    seed: int = 0
    index: int = 0
    path: str = ""

    def echo(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "parameters": self.parameters,
            "output_path": self.output_path,
            "seed": self.seed,
        }


@dataclass
class RunReport:
    config_echo: dict
    tool_version: str
    result: dict
    verdict: str | None = None
    bound: float | None = None
    trajectories: list[str] = field(default_factory=list)
    timing: float | None = None

    def as_dict(self) -> dict:
        out = {
            "tool_version": self.tool_version,
            "config_echo": self.config_echo,
            "verdict": self.verdict,
            "bound": self.bound,
            "trajectories": self.trajectories,
            "result": self.result,
        }
        if self.timing is not None:
            out["timing"] = self.timing
        return out


# --------------------------------------------------------------------------
# loading and validation
# --------------------------------------------------------------------------


def load_config_file(path: str | os.PathLike) -> dict:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ConfigInvalid(str(p), f"cannot read config: {exc.strerror}") from exc
    try:
        if p.suffix.lower() == ".json":
            return json.loads(raw.decode("utf-8"))
        return tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ConfigInvalid(str(p), f"parse error: {exc}") from exc


def _parse_value(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except ValueError:
        return text


def apply_override(entry: dict, key: str, value: str) -> None:
    parts = key.split(".")
    node = entry
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigInvalid(key, "override path crosses a non-table value")
    node[parts[-1]] = _parse_value(value)


def derive_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1, dtype=np.uint32)[0])


def parse_config(
    data: dict, master_seed: int | None = None, overrides: dict[str, str] | None = None
) -> list[ScenarioConfig]:
    if not isinstance(data, dict):
        raise ConfigInvalid("", "config root must be a table")
    master = data.get("seed", 0) if master_seed is None else master_seed
    if not isinstance(master, int) or isinstance(master, bool) or master < 0:
        raise ConfigInvalid("seed", "master seed must be a nonnegative integer")

    if "scenario" in data:
        entries, prefix = data["scenario"], "scenario"
        if isinstance(entries, dict):
            entries = [entries]
        if not isinstance(entries, list) or not entries:
            raise ConfigInvalid("scenario", "must be a non-empty array of tables")
    else:
        entries, prefix = [data], ""

    out = []
    names = set()
    for i, entry in enumerate(entries):
        path = f"{prefix}[{i}]" if prefix else ""
        if not isinstance(entry, dict):
            raise ConfigInvalid(path, "scenario must be a table")
        entry = json.loads(json.dumps(entry))
        for key, value in (overrides or {}).items():
            apply_override(entry, key, value)
        cfg = _parse_entry(entry, path, master, i)
        if cfg.name in names:
            raise ConfigInvalid(_join(path, "name"), f"duplicate scenario name {cfg.name!r}")
        names.add(cfg.name)
        out.append(cfg)
    return out


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _parse_entry(entry: dict, path: str, master: int, index: int) -> ScenarioConfig:
    kind = entry.get("kind")
    if kind not in KINDS:
        raise ConfigInvalid(_join(path, "kind"), f"must be one of {', '.join(KINDS)}; got {kind!r}")
    name = entry.get("name", kind if not path else f"{kind}-{index}")
    if not isinstance(name, str) or not name or any(c in name for c in "/\\"):
        raise ConfigInvalid(_join(path, "name"), "must be a non-empty string without path separators")
    params = entry.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigInvalid(_join(path, "parameters"), "must be a table")
    seed = entry.get("seed")
    if seed is None:
        seed = derive_seed(master, index)
    elif not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ConfigInvalid(_join(path, "seed"), "must be a nonnegative integer")
    output_path = entry.get("output_path")
    if output_path is not None and not isinstance(output_path, str):
        raise ConfigInvalid(_join(path, "output_path"), "must be a string")
    cfg = ScenarioConfig(name, kind, params, output_path, seed, index, path)
    # Build inputs eagerly so every domain invariant is checked at ingestion.
    _BUILDERS[kind](cfg, _join(path, "parameters"))
    return cfg


# --------------------------------------------------------------------------
# parameter coercion
# --------------------------------------------------------------------------


def _need(params: dict, key: str, path: str):
    if key not in params:
        raise ConfigInvalid(_join(path, key), "required parameter missing")
    return params[key]


def _number(value, path: str, *, positive=False, nonneg=False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigInvalid(path, f"expected a finite number, got {value!r}")
    if positive and value <= 0:
        raise ConfigInvalid(path, f"must be positive, got {value!r}")
    if nonneg and value < 0:
        raise ConfigInvalid(path, f"must be nonnegative, got {value!r}")
    return float(value)


def _integer(value, path: str, *, minimum: int | None = None, maximum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigInvalid(path, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigInvalid(path, f"must be at least {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigInvalid(path, f"must be at most {maximum}, got {value}")
    return value


def _probabilities(value, path: str) -> list[float]:
    if not isinstance(value, list) or not value:
        raise ConfigInvalid(path, "expected a non-empty list of probabilities")
    probs = [_number(v, f"{path}[{k}]", nonneg=True) for k, v in enumerate(value)]
    total = math.fsum(probs)
    if abs(total - 1.0) > _TOL.probability_sum:
        raise ConfigInvalid(path, f"probabilities sum to {total!r}, expected 1 within {_TOL.probability_sum:g}")
    return probs


def _thermal_spec(value: dict, path: str):
    from .scenarios import ThermalSpec

    energies = _need(value, "energies", path)
    if not isinstance(energies, list) or not energies:
        raise ConfigInvalid(_join(path, "energies"), "expected a non-empty list of energies")
    es = [_number(e, f"{path}.energies[{k}]") for k, e in enumerate(energies)]
    if any(b < a for a, b in zip(es, es[1:])):
        raise ConfigInvalid(_join(path, "energies"), "energies must be ascending")
    temp = _number(_need(value, "temperature", path), _join(path, "temperature"), positive=True)
    return ThermalSpec(tuple(es), temp)


def _state(value, path: str):
    """A diagonal state from a probability list or a ``{energies, temperature}`` table."""
    from .linalg import DensityMatrix
    from .scenarios import thermal_state

    try:
        if isinstance(value, dict):
            return thermal_state(_thermal_spec(value, path))
        return DensityMatrix.diagonal(_probabilities(value, path))
    except ValidationError as exc:
        raise ConfigInvalid(path, str(exc)) from exc


def _opt_bool(params: dict, key: str, path: str, default: bool) -> bool:
    value = params.get(key, default)
    if not isinstance(value, bool):
        raise ConfigInvalid(_join(path, key), f"expected true or false, got {value!r}")
    return value


def _inputs_no_go(cfg, path):
    p = cfg.parameters
    s = _state(_need(p, "system", path), _join(path, "system"))
    b = _state(_need(p, "bath", path), _join(path, "bath"))
    tol = p.get("tol")
    if tol is not None:
        tol = _number(tol, _join(path, "tol"), positive=True)
    return s, b, tol


def _inputs_swap(cfg, path):
    p = cfg.parameters
    s0 = _number(_need(p, "s0", path), _join(path, "s0"))
    if not 0 < s0 < 1:
        raise ConfigInvalid(_join(path, "s0"), f"must lie strictly between 0 and 1, got {s0!r}")
    bath = _state(p["bath"], _join(path, "bath")) if "bath" in p else None
    if bath is not None and bath.dim < 2:
        raise ConfigInvalid(_join(path, "bath"), "bath must have at least two levels")
    return s0, bath


def _inputs_nonthermal(cfg, path):
    p = cfg.parameters
    s = _state(_need(p, "system", path), _join(path, "system"))
    if s.dim != 2:
        raise ConfigInvalid(_join(path, "system"), f"system must be a qubit, got {s.dim} levels")
    weights = _probabilities(_need(p, "bath_weights", path), _join(path, "bath_weights"))
    if len(weights) > 4:
        raise ConfigInvalid(_join(path, "bath_weights"), "a two-qubit bath has at most four weights")
    return s, weights


def _inputs_correlated(cfg, path):
    from .scenarios import CorrelatedStateSpec

    p = cfg.parameters
    weights = _probabilities(_need(p, "bath_weights", path), _join(path, "bath_weights"))
    split = _integer(_need(p, "split_index", path), _join(path, "split_index"), minimum=0, maximum=len(weights) - 1)
    try:
        spec = CorrelatedStateSpec(tuple(weights), split)
    except ValidationError as exc:
        raise ConfigInvalid(path, str(exc)) from exc
    if abs(spec.partial_sum - spec.ground_weight) > 1e-9:
        raise ConfigInvalid(
            _join(path, "split_index"),
            f"bath_weights[0..{split}] sum to {spec.partial_sum!r}, expected {spec.ground_weight}",
        )
    return spec


def _inputs_approx(cfg, path):
    from .spectral import Spectrum

    p = cfg.parameters
    probs = _probabilities(_need(p, "system", path), _join(path, "system"))
    if len(probs) < 2 or any(b > a for a, b in zip(probs, probs[1:])):
        raise ConfigInvalid(_join(path, "system"), "need at least two levels in descending order")
    bath_raw = _need(p, "bath", path)
    if not isinstance(bath_raw, dict):
        raise ConfigInvalid(_join(path, "bath"), "expected a table with energies and temperature")
    bath = _thermal_spec(bath_raw, _join(path, "bath"))
    if len(bath.energies) < 2:
        raise ConfigInvalid(_join(path, "bath.energies"), "need at least two bath levels")
    final_thermal = _opt_bool(p, "final_bath_thermal", path, True)
    return Spectrum(probs), bath, final_thermal


def _inputs_contrast(cfg, path):
    from .dynamics import amplitude_damping_model, exchange_model

    p = cfg.parameters
    system_gap = _number(p.get("system_gap", 1.0), _join(path, "system_gap"), positive=True)
    s = _state(p.get("system", [0.7, 0.3]), _join(path, "system"))
    if s.dim != 2:
        raise ConfigInvalid(_join(path, "system"), "contrast model uses a qubit system")
    n_bath_qubits = _integer(p.get("bath_qubits", 2), _join(path, "bath_qubits"), minimum=1, maximum=5)
    gaps = p.get("bath_gaps", [1.0] * n_bath_qubits)
    if not isinstance(gaps, list) or len(gaps) != n_bath_qubits:
        raise ConfigInvalid(_join(path, "bath_gaps"), f"expected a list of {n_bath_qubits} gaps")
    gaps = [_number(g, f"{path}.bath_gaps[{k}]", nonneg=True) for k, g in enumerate(gaps)]
    coupling = _number(p.get("coupling", 0.2), _join(path, "coupling"))
    model = exchange_model(system_gap, gaps, coupling)
    if "bath" in p:
        b = _state(p["bath"], _join(path, "bath"))
    else:
        from .linalg import DensityMatrix
        from .scenarios import gibbs_weights, ThermalSpec

        temp = _number(p.get("bath_temperature", 1.0), _join(path, "bath_temperature"), positive=True)
        e = np.real(np.diag(model.h_bath.elements))
        b = DensityMatrix.diagonal(gibbs_weights(ThermalSpec(tuple(e), temp)))
    if b.dim != model.dims.n_bath:
        raise ConfigInvalid(_join(path, "bath"), f"bath has {b.dim} levels, model expects {model.dims.n_bath}")
    rate = _number(p.get("rate", 1.0), _join(path, "rate"), nonneg=True)
    lind = amplitude_damping_model(system_gap, rate)
    horizon = _number(p.get("horizon", 50.0 / system_gap), _join(path, "horizon"), positive=True)
    n_times = _integer(p.get("n_times", 200), _join(path, "n_times"), minimum=2, maximum=100_000)
    dt = p.get("dt")
    if dt is not None:
        dt = _number(dt, _join(path, "dt"), positive=True)
        if dt * (rate + system_gap) > _TOL.lindblad_step:
            raise ConfigInvalid(_join(path, "dt"), f"dt*(rate+||H_S||) must not exceed {_TOL.lindblad_step}")
    return model, lind, s, b, horizon, n_times, dt


def _inputs_bound_search(cfg, path):
    p = cfg.parameters
    s = _state(_need(p, "system", path), _join(path, "system"))
    b = _state(_need(p, "bath", path), _join(path, "bath"))
    if s.dim * b.dim > MAX_BOUND_SEARCH_DIM:
        raise ConfigInvalid(path, f"joint dimension {s.dim * b.dim} exceeds {MAX_BOUND_SEARCH_DIM}")
    samples = _integer(
        p.get("samples", _TOL.haar_samples), _join(path, "samples"), minimum=1, maximum=MAX_BOUND_SEARCH_SAMPLES
    )
    include_identity = _opt_bool(p, "include_identity", path, False)
    return s, b, samples, include_identity


_BUILDERS: dict[str, Callable] = {
    "no_go_check": _inputs_no_go,
    "swap": _inputs_swap,
    "nonthermal_bath": _inputs_nonthermal,
    "correlated": _inputs_correlated,
    "approximate_cooling": _inputs_approx,
    "contrast": _inputs_contrast,
    "bound_search": _inputs_bound_search,
}


# --------------------------------------------------------------------------
# execution
# --------------------------------------------------------------------------


@dataclass
class Outcome:
    result: dict
    verdict: str | None = None
    bound: float | None = None
    csv: dict[str, str] = field(default_factory=dict)


def _exec_no_go(cfg, path):
    from .feasibility import check_no_go

    s, b, tol = _inputs_no_go(cfg, path)
    report = check_no_go(s, b, tol)
    return Outcome(report.as_dict(), report.verdict.value, report.bound)


def _exec_scenario_result(result) -> Outcome:
    rep = result.report
    return Outcome(result.as_dict(), rep.verdict.value if rep else None, rep.bound if rep else None)


def _exec_swap(cfg, path):
    from .scenarios import swap_scenario

    return _exec_scenario_result(swap_scenario(*_inputs_swap(cfg, path)))


def _exec_nonthermal(cfg, path):
    from .scenarios import nonthermal_bath_scenario

    return _exec_scenario_result(nonthermal_bath_scenario(*_inputs_nonthermal(cfg, path)))


def _exec_correlated(cfg, path):
    from .scenarios import correlated_scenario

    return _exec_scenario_result(correlated_scenario(_inputs_correlated(cfg, path)))


def _exec_approx(cfg, path):
    from .scenarios import approximate_cooling_analysis

    return Outcome(approximate_cooling_analysis(*_inputs_approx(cfg, path)).as_dict())


def _exec_contrast(cfg, path):
    from .dynamics import contrast_report

    model, lind, s, b, horizon, n_times, dt = _inputs_contrast(cfg, path)
    rep = contrast_report(model, lind, s, b, horizon, n_times=n_times, dt=dt)
    return Outcome(
        rep.as_dict(),
        bound=rep.unitary_bound,
        csv={"trajectory": rep.exact.to_csv(), "lindblad.trajectory": rep.lindblad.to_csv()},
    )


def _exec_bound_search(cfg, path):
    from .feasibility import haar_bound_search
    from .linalg import BipartiteDims, tensor

    s, b, samples, include_identity = _inputs_bound_search(cfg, path)
    dims = BipartiteDims(s.dim, b.dim)
    res = haar_bound_search(tensor(s, b), dims, samples, cfg.seed, include_identity=include_identity)
    result = {
        "samples": res.samples,
        "max_achieved": res.max_achieved,
        "bound": res.bound,
        "gap": res.gap,
        "running_max": list(res.running_max),
        "include_identity": include_identity,
    }
    if res.max_achieved > res.bound + _TOL.bound_slack:
        raise BoundViolation(f"sampled ground population {res.max_achieved!r} exceeds bound {res.bound!r}")
    return Outcome(result, bound=res.bound)


_EXECUTORS = {
    "no_go_check": _exec_no_go,
    "swap": _exec_swap,
    "nonthermal_bath": _exec_nonthermal,
    "correlated": _exec_correlated,
    "approximate_cooling": _exec_approx,
    "contrast": _exec_contrast,
    "bound_search": _exec_bound_search,
}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_scenario(cfg: ScenarioConfig, out_dir: Path | None = None, timing: bool = False) -> tuple[RunReport, Path]:
    start = time.perf_counter()
    path = _join(cfg.path, "parameters")
    try:
        outcome = _EXECUTORS[cfg.kind](cfg, path)
    except ConfigInvalid:
        raise
    except ValidationError as exc:
        raise ConfigInvalid(path, str(exc)) from exc
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from exc

    target = Path(out_dir if out_dir is not None else (cfg.output_path or "."))
    traj = []
    for suffix, text in sorted(outcome.csv.items()):
        fname = f"{cfg.name}.{suffix}.csv"
        write_atomic(target / fname, text)
        traj.append(fname)
    report = RunReport(
        config_echo=cfg.echo(),
        tool_version=__version__,
        result=outcome.result,
        verdict=outcome.verdict,
        bound=outcome.bound,
        trajectories=traj,
        timing=(time.perf_counter() - start) if timing else None,
    )
    report_path = target / f"{cfg.name}.report.json"
    write_atomic(report_path, dumps_report(report))
    return report, report_path


def dumps_report(report: RunReport) -> str:
    return json.dumps(_jsonable(report.as_dict()), sort_keys=True, indent=2, allow_nan=False) + "\n"


def run_batch(
    configs: list[ScenarioConfig], out_dir: Path | None = None, timing: bool = False
) -> list[tuple[RunReport, Path]]:
    workers = min(thread_cap(), len(configs))
    if workers <= 1:
        return [run_scenario(c, out_dir, timing) for c in configs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda c: run_scenario(c, out_dir, timing), configs))


__all__ = [
    "KINDS",
    "KIND_HELP",
    "NoGoCoolError",
    "RunReport",
    "ScenarioConfig",
    "dumps_report",
    "load_config_file",
    "parse_config",
    "run_batch",
    "run_scenario",
]
