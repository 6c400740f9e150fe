"""Configuration parsing and the text file formats of the CLI.

All emitted files are plain text with full-precision (17 significant digit)
numbers so they round-trip exactly and diff cleanly.  Writes go through a
temp-file-and-rename so partially written outputs never appear under the
final name.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from . import engine, measurement, states
from .measurement import CountRecord, MeasurementBasis

FLOAT_FMT = "%.17g"

TRAJECTORY_COLUMNS = (
    "run_id", "k", "basis_seed", "s_cvx", "fidelity",
    "log_likelihood", "ml_converged", "is_ic",
)


class ConfigError(ValueError):
    """Invalid configuration; message names the offending key."""


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def atomic_write(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


# ---------------------------------------------------------------------------
# Experiment configuration


@dataclass(frozen=True)
class SimulationPlan:
    """Validated configuration for the simulate command."""

    dim: int
    state_kind: str                     # hg_mixture | freq_bin_mixture | explicit | random
    fixed_state: states.StateSpec | None
    family: str                         # for random states
    ranks: tuple[int, ...]              # for random states
    qpg: measurement.QpgConfig
    max_bases: int
    runs: int
    seed: int
    ic_threshold: float | None
    z_draws: int
    out_dir: str
    formats: tuple[str, ...]

    def label(self) -> str:
        return "state" if self.fixed_state is not None else "rank"


_TOP_KEYS = {"state", "qpg", "rct", "output"}
_STATE_KEYS = {"kind", "dim", "weights", "components", "family", "rank", "ranks", "basis"}
_QPG_KEYS = {"theta", "clicks_per_basis", "noiseless", "background_rate"}
_RCT_KEYS = {"max_bases", "runs", "seed", "ic_threshold", "z_draws"}
_OUTPUT_KEYS = {"directory", "formats"}


def _require_keys(section: dict, allowed: set, where: str):
    if not isinstance(section, dict):
        raise ConfigError(f"section '{where}' must be a mapping")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key '{where}.{key}'")


def _get(section: dict, key: str, kind, default, where: str):
    if key not in section or section[key] is None:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key '{where}.{key}'")
        return default
    value = section[key]
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if kind is int and isinstance(value, bool):
        raise ConfigError(f"'{where}.{key}' must be an integer")
    if not isinstance(value, kind):
        raise ConfigError(f"'{where}.{key}' has wrong type (expected {kind.__name__})")
    return value


class _Required:
    pass


_REQUIRED = _Required()


def _parse_state(section: dict):
    _require_keys(section, _STATE_KEYS, "state")
    kind = _get(section, "kind", str, _REQUIRED, "state")
    dim = _get(section, "dim", int, _REQUIRED, "state")
    if dim < 2:
        raise ConfigError("'state.dim' must be at least 2")
    fixed = None
    family = "hg"
    ranks: tuple[int, ...] = ()
    if kind == "hg_mixture":
        weights = _get(section, "weights", list, _REQUIRED, "state")
        if not weights or len(weights) > dim:
            raise ConfigError("'state.weights' must list 1..dim mode weights")
        comps = []
        for n, w in enumerate(weights):
            if not isinstance(w, (int, float)) or isinstance(w, bool) or w < 0:
                raise ConfigError(f"'state.weights[{n}]' must be a nonnegative number")
            if w == 0:
                continue
            vec = np.zeros(dim, dtype=np.complex128)
            vec[n] = 1.0
            comps.append((vec, float(w)))
        try:
            fixed = states.StateSpec(states.hg_basis(dim), tuple(comps))
        except ValueError as exc:
            raise ConfigError(f"'state.weights': {exc}") from exc
    elif kind == "freq_bin_mixture":
        comp_list = _get(section, "components", list, _REQUIRED, "state")
        comps = []
        for i, entry in enumerate(comp_list):
            where = f"state.components[{i}]"
            _require_keys(entry, {"bins", "signs", "weight"}, where)
            bins = _get(entry, "bins", list, _REQUIRED, where)
            signs = _get(entry, "signs", list, _REQUIRED, where)
            weight = _get(entry, "weight", float, _REQUIRED, where)
            vec = np.zeros(dim, dtype=np.complex128)
            if len(bins) != len(signs) or not bins:
                raise ConfigError(f"'{where}': bins and signs must have equal nonzero length")
            for b, s in zip(bins, signs):
                if not isinstance(b, int) or not 0 <= b < dim:
                    raise ConfigError(f"'{where}.bins': index {b!r} out of range")
                if s not in (1, -1):
                    raise ConfigError(f"'{where}.signs': entries must be 1 or -1")
                if vec[b] != 0:
                    raise ConfigError(f"'{where}.bins': duplicate index {b}")
                vec[b] = s
            vec /= np.linalg.norm(vec)
            comps.append((vec, float(weight)))
        try:
            fixed = states.StateSpec(states.frequency_bin_basis(dim), tuple(comps))
        except ValueError as exc:
            raise ConfigError(f"'state.components': {exc}") from exc
    elif kind == "explicit":
        basis_name = _get(section, "basis", str, "hg", "state")
        if basis_name not in ("hg", "freq_bin"):
            raise ConfigError("'state.basis' must be 'hg' or 'freq_bin'")
        comp_list = _get(section, "components", list, _REQUIRED, "state")
        comps = []
        for i, entry in enumerate(comp_list):
            where = f"state.components[{i}]"
            _require_keys(entry, {"weight", "amplitudes"}, where)
            weight = _get(entry, "weight", float, _REQUIRED, where)
            amps = _get(entry, "amplitudes", list, _REQUIRED, where)
            if len(amps) != dim:
                raise ConfigError(f"'{where}.amplitudes' must have dim entries")
            try:
                vec = np.array([complex(a[0], a[1]) for a in amps])
            except (TypeError, IndexError) as exc:
                raise ConfigError(f"'{where}.amplitudes' entries must be [re, im] pairs") from exc
            comps.append((vec, float(weight)))
        basis = states.hg_basis(dim) if basis_name == "hg" else states.frequency_bin_basis(dim)
        try:
            fixed = states.StateSpec(basis, tuple(comps))
        except ValueError as exc:
            raise ConfigError(f"'state.components': {exc}") from exc
    elif kind == "random":
        family = _get(section, "family", str, "hg", "state")
        if family not in ("hg", "freq_bin"):
            raise ConfigError("'state.family' must be 'hg' or 'freq_bin'")
        if "ranks" in section and section["ranks"] is not None:
            rank_list = _get(section, "ranks", list, _REQUIRED, "state")
        else:
            rank_list = [_get(section, "rank", int, 1, "state")]
        for r in rank_list:
            if not isinstance(r, int) or r < 1:
                raise ConfigError("'state.ranks' entries must be positive integers")
        ranks = tuple(rank_list)
    else:
        raise ConfigError(f"unknown 'state.kind' value {kind!r}")
    return dim, kind, fixed, family, ranks


def parse_config(doc: dict) -> SimulationPlan:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be a mapping")
    for key in doc:
        if key not in _TOP_KEYS:
            raise ConfigError(f"unknown key '{key}'")
    if "state" not in doc:
        raise ConfigError("missing required key 'state'")
    dim, kind, fixed, family, ranks = _parse_state(doc["state"])

    qpg_section = doc.get("qpg") or {}
    _require_keys(qpg_section, _QPG_KEYS, "qpg")
    theta = _get(qpg_section, "theta", float, math.pi / 2, "qpg")
    clicks = _get(qpg_section, "clicks_per_basis", int, 10_000, "qpg")
    if clicks <= 0:
        raise ConfigError("'qpg.clicks_per_basis' must be positive")
    noiseless = _get(qpg_section, "noiseless", bool, False, "qpg")
    background = _get(qpg_section, "background_rate", float, 0.0, "qpg")
    try:
        qpg = measurement.QpgConfig(
            theta=theta, clicks_per_basis=clicks, noiseless=noiseless,
            background_rate=background,
        )
    except (ValueError, NotImplementedError) as exc:
        raise ConfigError(f"'qpg': {exc}") from exc

    rct_section = doc.get("rct") or {}
    _require_keys(rct_section, _RCT_KEYS, "rct")
    max_bases = _get(rct_section, "max_bases", int, 2 * dim, "rct")
    runs = _get(rct_section, "runs", int, 10, "rct")
    seed = _get(rct_section, "seed", int, 0, "rct")
    ic_threshold = _get(rct_section, "ic_threshold", float, None, "rct")
    z_draws = _get(rct_section, "z_draws", int, 1, "rct")
    if max_bases < 1:
        raise ConfigError("'rct.max_bases' must be at least 1")
    if runs < 1:
        raise ConfigError("'rct.runs' must be at least 1")
    if z_draws < 1:
        raise ConfigError("'rct.z_draws' must be at least 1")

    out_section = doc.get("output") or {}
    _require_keys(out_section, _OUTPUT_KEYS, "output")
    out_dir = _get(out_section, "directory", str, "out", "output")
    formats = _get(out_section, "formats", list, ["csv"], "output")
    for f in formats:
        if f not in ("csv",):
            raise ConfigError(f"'output.formats': unsupported format {f!r}")

    return SimulationPlan(
        dim=dim, state_kind=kind, fixed_state=fixed, family=family, ranks=ranks,
        qpg=qpg, max_bases=max_bases, runs=runs, seed=seed,
        ic_threshold=ic_threshold, z_draws=z_draws,
        out_dir=out_dir, formats=tuple(formats),
    )


def load_config(path: Path | str) -> tuple[SimulationPlan, dict]:
    """Load a YAML config or a replay manifest; returns (plan, effective doc)."""
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if isinstance(doc, dict) and "effective_config" in doc:
        doc = doc["effective_config"]
    plan = parse_config(doc)
    return plan, doc


def effective_config_doc(plan: SimulationPlan, state_doc: dict) -> dict:
    """Fully resolved config document (defaults applied, overrides folded in)."""
    return {
        "state": state_doc,
        "qpg": {
            "theta": plan.qpg.theta,
            "clicks_per_basis": plan.qpg.clicks_per_basis,
            "noiseless": plan.qpg.noiseless,
            "background_rate": plan.qpg.background_rate,
        },
        "rct": {
            "max_bases": plan.max_bases,
            "runs": plan.runs,
            "seed": plan.seed,
            "ic_threshold": plan.ic_threshold,
            "z_draws": plan.z_draws,
        },
        "output": {"directory": plan.out_dir, "formats": list(plan.formats)},
    }


# ---------------------------------------------------------------------------
# Trajectory and aggregate tables


def write_trajectories(path: Path | str, trajectories: list[engine.RctTrajectory]) -> None:
    lines = [",".join(TRAJECTORY_COLUMNS)]
    rows = []
    for t in trajectories:
        for r in t.records:
            rows.append((t.run_id, r))
    rows.sort(key=lambda item: (item[0], item[1].k))
    for run_id, r in rows:
        lines.append(
            ",".join(
                (
                    run_id,
                    str(r.k),
                    str(r.basis_seed),
                    _fmt(r.s_cvx),
                    _fmt(r.fidelity),
                    _fmt(r.log_likelihood),
                    "true" if r.ml_converged else "false",
                    "true" if r.is_ic else "false",
                )
            )
        )
    atomic_write(path, "\n".join(lines) + "\n")


def read_trajectories(path: Path | str) -> list[engine.RctTrajectory]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0].split(",") != list(TRAJECTORY_COLUMNS):
        raise ValueError(f"{path}: not a trajectory file (bad header)")
    by_run: dict[str, list[engine.StepRecord]] = {}
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != len(TRAJECTORY_COLUMNS):
            raise ValueError(f"{path}:{ln}: expected {len(TRAJECTORY_COLUMNS)} fields")
        run_id = parts[0]
        rec = engine.StepRecord(
            k=int(parts[1]),
            basis_seed=int(parts[2]),
            s_cvx=float(parts[3]),
            fidelity=float(parts[4]),
            log_likelihood=float(parts[5]),
            ml_converged=parts[6] == "true",
            is_ic=parts[7] == "true",
        )
        by_run.setdefault(run_id, []).append(rec)
    out = []
    for run_id in sorted(by_run):
        records = sorted(by_run[run_id], key=lambda r: r.k)
        k_ic = next((r.k for r in records if r.is_ic), None)
        out.append(engine.RctTrajectory(run_id=run_id, records=tuple(records), k_ic=k_ic))
    return out


def group_label(run_id: str) -> str:
    """Strip the trailing run index: 'rank3-07' -> 'rank3'."""
    head, sep, tail = run_id.rpartition("-")
    if sep and tail.isdigit():
        return head
    return run_id


def write_aggregates(path: Path | str, curves: dict[str, engine.AggregateCurve]) -> None:
    lines = ["label,k,s_cvx_mean,s_cvx_std,fidelity_mean,fidelity_std,n_runs"]
    for label in sorted(curves):
        c = curves[label]
        for i, k in enumerate(c.k_axis):
            lines.append(
                ",".join(
                    (
                        label,
                        str(int(k)),
                        _fmt(c.s_cvx_mean[i]),
                        _fmt(c.s_cvx_std[i]),
                        _fmt(c.fidelity_mean[i]),
                        _fmt(c.fidelity_std[i]),
                        str(c.n_runs),
                    )
                )
            )
    atomic_write(path, "\n".join(lines) + "\n")


def write_summary(path: Path | str, groups: dict[str, list[engine.RctTrajectory]]) -> None:
    lines = ["label,n_runs,n_ic,mean_k_ic,min_k_ic,max_k_ic,mean_final_fidelity"]
    for label in sorted(groups):
        trajs = groups[label]
        k_ics = [t.k_ic for t in trajs if t.k_ic is not None]
        fids = [t.records[-1].fidelity for t in trajs]
        lines.append(
            ",".join(
                (
                    label,
                    str(len(trajs)),
                    str(len(k_ics)),
                    _fmt(float(np.mean(k_ics))) if k_ics else "nan",
                    str(min(k_ics)) if k_ics else "nan",
                    str(max(k_ics)) if k_ics else "nan",
                    _fmt(float(np.mean(fids))),
                )
            )
        )
    atomic_write(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Grid matrices (Wigner surfaces and bin matrices)


def write_grid_matrix(path: Path | str, row_axis, col_axis, values, comment: str) -> None:
    """Tabular text: first row = column axis, first column = row axis.

    The top-left cell is a 0 placeholder belonging to neither axis.
    """
    lines = [f"# {comment}", "# first row: column axis; first column: row axis"]
    lines.append(" ".join(["0"] + [_fmt(v) for v in col_axis]))
    for i, r in enumerate(row_axis):
        lines.append(" ".join([_fmt(r)] + [_fmt(v) for v in values[i]]))
    atomic_write(path, "\n".join(lines) + "\n")


def read_grid_matrix(path: Path | str):
    rows = []
    for ln, line in enumerate(Path(path).read_text().splitlines(), start=1):
        body = line.strip()
        if not body or body.startswith("#"):
            continue
        try:
            rows.append([float(tok) for tok in body.split()])
        except ValueError as exc:
            raise ValueError(f"{path}:{ln}: non-numeric entry") from exc
    if len(rows) < 2 or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError(f"{path}: grid must be rectangular with axis headers")
    col_axis = np.array(rows[0][1:])
    row_axis = np.array([r[0] for r in rows[1:]])
    values = np.array([r[1:] for r in rows[1:]])
    if np.any(np.diff(col_axis) <= 0) or np.any(np.diff(row_axis) <= 0):
        raise ValueError(f"{path}: axes must be strictly increasing")
    return row_axis, col_axis, values


# ---------------------------------------------------------------------------
# Measurement datasets (bases + counts)


def write_dataset(path: Path | str, data: list[tuple[MeasurementBasis, CountRecord]]) -> None:
    """One block per basis: d vector lines of re/im pairs, then a counts line."""
    chunks = ["# measurement dataset: per basis, d vector lines (re im pairs) then counts"]
    for basis, record in data:
        d = basis.dim
        for l in range(d):
            vec = basis.vector(l)
            chunks.append(" ".join(f"{_fmt(c.real)} {_fmt(c.imag)}" for c in vec))
        chunks.append(" ".join(str(int(c)) for c in record.counts))
        chunks.append("")
    atomic_write(path, "\n".join(chunks).rstrip("\n") + "\n")


def read_dataset(path: Path | str) -> list[tuple[MeasurementBasis, CountRecord]]:
    numbered = [
        (ln, line.strip())
        for ln, line in enumerate(Path(path).read_text().splitlines(), start=1)
        if line.strip() and not line.strip().startswith("#")
    ]
    if not numbered:
        raise ValueError(f"{path}: dataset is empty")
    first_tokens = numbered[0][1].split()
    if len(first_tokens) % 2 != 0 or not first_tokens:
        raise ValueError(f"{path}:{numbered[0][0]}: vector line needs an even token count")
    d = len(first_tokens) // 2
    data = []
    pos = 0
    while pos < len(numbered):
        block = numbered[pos : pos + d + 1]
        if len(block) < d + 1:
            raise ValueError(f"{path}:{block[-1][0]}: truncated basis block")
        vectors = np.zeros((d, d), dtype=np.complex128)
        for row, (ln, line) in enumerate(block[:d]):
            toks = line.split()
            if len(toks) != 2 * d:
                raise ValueError(f"{path}:{ln}: expected {2 * d} numbers on a vector line")
            try:
                vals = [float(t) for t in toks]
            except ValueError as exc:
                raise ValueError(f"{path}:{ln}: non-numeric entry") from exc
            vectors[:, row] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
        ln, line = block[d]
        toks = line.split()
        if len(toks) != d:
            raise ValueError(f"{path}:{ln}: expected {d} counts")
        try:
            counts = np.array([int(t) for t in toks], dtype=np.int64)
        except ValueError as exc:
            raise ValueError(f"{path}:{ln}: counts must be integers") from exc
        if np.any(counts < 0):
            raise ValueError(f"{path}:{ln}: counts must be nonnegative")
        total = counts.sum()
        if total == 0:
            raise ValueError(f"{path}:{ln}: basis block has zero total counts")
        try:
            basis = MeasurementBasis(vectors)
        except ValueError as exc:
            raise ValueError(f"{path}:{block[0][0]}: {exc}") from exc
        data.append(
            (basis, CountRecord(basis_index=len(data), counts=counts, frequencies=counts / total))
        )
        pos += d + 1
    return data


# ---------------------------------------------------------------------------
# Run manifests


def write_manifest(
    path: Path | str,
    command: str,
    effective_config: dict,
    outputs: dict[str, str],
    version: str,
) -> None:
    config_bytes = json.dumps(effective_config, sort_keys=True).encode()
    doc = {
        "tool": "tfrct",
        "version": version,
        "command": command,
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "effective_config": effective_config,
        "outputs": outputs,
    }
    atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
