"""Experiment configuration, sweep execution and CSV/JSON reporting."""

from __future__ import annotations

import copy
import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import jsonschema
import numpy as np

from . import arnoldi, diagnostics
from .baselines import bounding_tensor_fit, vandermonde_fit
from .exprlang import parse
from .geometry import Domain, SampleSet, domain_from_dict, equispaced_points, m_rule_count, named_domain, rejection_sample
from .indexing import MultiIndexSet, leading_indices, make_index_set
from .lawson import lawson_refine
from .weighted import mhat_rule_count, qr_weight_fit, va_weight_fit

REPORT_FORMAT = "polyva.report/1"
METHODS = ("va", "vandermonde", "bounding_tensor", "va_weight", "qr_weight", "va_lawson")
RANDOM_METHODS = ("bounding_tensor", "va_weight", "qr_weight")

# "auto" diagnostics are skipped when their flop count exceeds this
AUTO_FLOP_BUDGET = 2e11

_RULE = {"oneOf": [{"type": "string"}, {"type": "integer", "minimum": 1}]}
_AUTO = {"oneOf": [{"type": "boolean"}, {"const": "auto"}]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domain", "function", "space", "sampling", "method"],
    "properties": {
        "domain": {"oneOf": [{"type": "string"}, {"type": "object", "required": ["type"]}]},
        "function": {"type": "string", "minLength": 1},
        "space": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["total", "max"]},
                "parent_rule": {"enum": ["smallest", "largest"]},
                "degrees": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                "sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
            "oneOf": [{"required": ["degrees"]}, {"required": ["sizes"]}],
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind", "M_rule"],
            "properties": {
                "kind": {"enum": ["equispaced", "random"]},
                "M_rule": _RULE,
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "method": {"enum": list(METHODS)},
        "baseline": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"rescale": {"type": "boolean"}},
        },
        "weighted": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "M_hat_rule": _RULE,
                "constant": {"type": "number", "exclusiveMinimum": 0},
                "delta_hat": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "max_rounds": {"type": "integer", "minimum": 1},
            },
        },
        "lawson": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"iters": {"type": "integer", "minimum": 0}},
        },
        "eval": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"K_factor": {"type": "integer", "minimum": 1}},
        },
        "diagnostics": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"lebesgue": _AUTO, "qqstar": _AUTO},
        },
        "record_runtime": {"type": "boolean"},
        "output": {"type": "string"},
    },
}


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    domain: Domain
    function: str
    kind: str
    parent_rule: str
    degrees: list[int] | None
    sizes: list[int] | None
    sampling: str
    M_rule: str | int
    seed: int | None
    method: str
    rescale: bool = True
    M_hat_rule: str | int = "NlogN"
    M_hat_constant: float = 4.0
    delta_hat: float = 0.5
    max_rounds: int = 5
    lawson_iters: int = 10
    K_factor: int = 10
    lebesgue: bool | str = "auto"
    qqstar: bool | str = "auto"
    record_runtime: bool = True
    output: str | None = None
    raw: dict | None = None

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def sweep(self) -> list[int]:
        return list(self.degrees if self.degrees is not None else self.sizes)

    def index_set(self, i: int) -> MultiIndexSet:
        if self.degrees is not None:
            return make_index_set(self.kind, self.dim, self.degrees[i], self.parent_rule)
        return leading_indices(self.kind, self.dim, self.sizes[i], self.parent_rule)

    def point_seed(self, i: int) -> int | None:
        return None if self.seed is None else self.seed + i

    def replace(self, **changes) -> "ExperimentConfig":
        out = copy.copy(self)
        for k, v in changes.items():
            setattr(out, k, v)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as err:
            where = "/".join(str(p) for p in err.absolute_path) or "<root>"
            raise ConfigError(f"invalid config at {where}: {err.message}") from None
        try:
            dom = data["domain"]
            domain = named_domain(dom) if isinstance(dom, str) else domain_from_dict(dom)
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"invalid domain: {err}") from None
        space, sampling = data["space"], data["sampling"]
        sweep = space.get("degrees", space.get("sizes"))
        if any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        rules = ((sampling["M_rule"], ("N^2", "N2", "N^2logN", "N2logN")),
                 (data.get("weighted", {}).get("M_hat_rule", "NlogN"), ("NlogN", "N")))
        for rule, allowed in rules:
            if isinstance(rule, str) and rule not in allowed:
                raise ConfigError(f"unknown sample-count rule {rule!r}; expected one of {allowed}")
        seed = sampling.get("seed")
        if seed is None and (sampling["kind"] == "random" or data["method"] in RANDOM_METHODS):
            raise ConfigError("a seed is required for random sampling")
        try:
            parse(data["function"], domain.dim)
        except ValueError as err:
            raise ConfigError(f"invalid function: {err}") from None
        w = data.get("weighted", {})
        dg = data.get("diagnostics", {})
        return cls(
            domain=domain,
            function=data["function"],
            kind=space["kind"],
            parent_rule=space.get("parent_rule", "smallest"),
            degrees=space.get("degrees"),
            sizes=space.get("sizes"),
            sampling=sampling["kind"],
            M_rule=sampling["M_rule"],
            seed=seed,
            method=data["method"],
            rescale=data.get("baseline", {}).get("rescale", True),
            M_hat_rule=w.get("M_hat_rule", "NlogN"),
            M_hat_constant=float(w.get("constant", 4.0)),
            delta_hat=float(w.get("delta_hat", 0.5)),
            max_rounds=int(w.get("max_rounds", 5)),
            lawson_iters=data.get("lawson", {}).get("iters", 10),
            K_factor=data.get("eval", {}).get("K_factor", 10),
            lebesgue=dg.get("lebesgue", "auto"),
            qqstar=dg.get("qqstar", "auto"),
            record_runtime=data.get("record_runtime", True),
            output=data.get("output"),
            raw=copy.deepcopy(data),
        )

    @classmethod
    def load(cls, path, seed: int | None = None) -> "ExperimentConfig":
        """Read and validate a JSON config; ``seed`` overrides ``sampling.seed``."""
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"{path}: not valid JSON ({err})") from None
        if seed is not None and isinstance(data.get("sampling"), dict):
            data["sampling"]["seed"] = seed
        return cls.from_dict(data)


@dataclass
class ReportRow:
    method: str
    N: int
    n: int
    M: int | None = None
    M_hat: int | None = None
    sup_error: float | None = None
    ortho_defect: float | None = None
    lebesgue_estimate: float | None = None
    qqstar_factor: float | None = None
    s_n: float | None = None
    q_max: float | None = None
    cond_G: float | None = None
    runtime_ms: float | None = None
    seed: int | None = None
    error: str = ""


CSV_HEADER = [f.name for f in fields(ReportRow)]


def _want(flag, flops: float) -> bool:
    return flops <= AUTO_FLOP_BUDGET if flag == "auto" else bool(flag)


def _basis_stats(row: ReportRow, basis: arnoldi.ArnoldiBasis, eval_mesh: SampleSet, cfg: ExperimentConfig):
    row.ortho_defect = diagnostics.ortho_defect(basis)
    row.s_n = diagnostics.s_n_statistic(basis)
    row.q_max = diagnostics.q_max(basis)
    if _want(cfg.qqstar, 2.0 * basis.M**2 * basis.N):
        row.qqstar_factor = diagnostics.qqstar_factor(basis)
    if _want(cfg.lebesgue, 2.0 * eval_mesh.M * basis.M * basis.N):
        row.lebesgue_estimate = diagnostics.lebesgue_estimate(basis, eval_mesh)


def samples_for(cfg: ExperimentConfig, M: int, seed: int | None) -> SampleSet:
    if cfg.sampling == "random":
        return rejection_sample(cfg.domain, M, seed)
    return equispaced_points(cfg.domain, M)


def run_point(cfg: ExperimentConfig, i: int) -> ReportRow:
    """Execute sweep point ``i``; failures are recorded in the row's error field."""
    iset = cfg.index_set(i)
    N = len(iset)
    seed = cfg.point_seed(i)
    row = ReportRow(cfg.method, N, iset.degree, seed=seed)
    t0 = time.perf_counter()
    try:
        expr = parse(cfg.function, cfg.dim)
        M = m_rule_count(cfg.M_rule, N)
        row.M = M
        eval_mesh = equispaced_points(cfg.domain, cfg.K_factor * M)
        dom = cfg.domain.to_dict()
        if cfg.method in ("va", "va_lawson"):
            X = samples_for(cfg, M, seed)
            f = expr(X.points)
            basis, approx = arnoldi.fit(X, f, iset, dom)
            if cfg.method == "va_lawson":
                approx, _ = lawson_refine(basis, f, cfg.lawson_iters, dom)
            _basis_stats(row, basis, eval_mesh, cfg)
        elif cfg.method == "vandermonde":
            X = samples_for(cfg, M, seed)
            approx = vandermonde_fit(X, expr(X.points), iset, rescale=cfg.rescale, compute_cond=False)
        elif cfg.method == "bounding_tensor":
            res = bounding_tensor_fit(cfg.domain, expr, iset, M, seed)
            approx = res.approximant
            _basis_stats(row, res.basis, eval_mesh, cfg)
        else:
            M_hat = mhat_rule_count(cfg.M_hat_rule, N, cfg.M_hat_constant)
            row.M_hat = M_hat
            given = None if cfg.sampling == "random" else samples_for(cfg, M, seed)
            if cfg.method == "va_weight":
                res = va_weight_fit(cfg.domain, expr, iset, M, M_hat, seed or 0, cfg.delta_hat,
                                    cfg.max_rounds, samples=given)
                _basis_stats(row, res.basis, eval_mesh, cfg)
            else:
                res = qr_weight_fit(cfg.domain, expr, iset, M, M_hat, seed or 0, cfg.delta_hat,
                                    cfg.max_rounds, rescale=cfg.rescale, samples=given)
                row.ortho_defect = res.report.eps_m
            approx = res.approximant
            row.cond_G = res.report.kappa2
        row.sup_error = diagnostics.sup_error(approx, expr, eval_mesh)
    except Exception as err:  # one failing point must not abort the sweep
        row.error = f"{type(err).__name__}: {err}"
    if cfg.record_runtime:
        row.runtime_ms = (time.perf_counter() - t0) * 1e3
    return row


def thread_count() -> int:
    raw = os.environ.get("POLYVA_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"POLYVA_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("POLYVA_THREADS must be non-negative")
    return n


def run(cfg: ExperimentConfig, threads: int | None = None) -> list[ReportRow]:
    """Run the whole sweep; rows come back in sweep order."""
    threads = thread_count() if threads is None else threads
    idx = range(len(cfg.sweep))
    if threads <= 1:
        return [run_point(cfg, i) for i in idx]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda i: run_point(cfg, i), idx))


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "%.17e" % v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def rows_to_csv(rows: list[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_cell(getattr(r, k)) for k in CSV_HEADER])
    return buf.getvalue()


def read_report(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_report(rows: list[ReportRow], path, cfg: ExperimentConfig | None = None) -> tuple[Path, Path]:
    """Write the CSV and a ``.json`` sidecar holding the config and format tag."""
    from . import __version__

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(rows_to_csv(rows))
    sidecar = path.with_suffix(path.suffix + ".json")
    meta = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "columns": CSV_HEADER,
        "config": cfg.raw if cfg is not None else None,
        "rows": len(rows),
        "failed_rows": sum(1 for r in rows if r.error),
    }
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path, sidecar


def row_dict(row: ReportRow) -> dict:
    return asdict(row)


def as_array(rows: list[ReportRow], key: str) -> np.ndarray:
    return np.array([np.nan if getattr(r, key) is None else getattr(r, key) for r in rows], dtype=float)
