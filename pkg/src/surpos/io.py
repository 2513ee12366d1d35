"""CSV dataset loading, JSON run configuration, and report emission.

CSV schema: columns ``y1..yJ`` (endpoint outcomes, in order), ``z``
(0/1 treatment flag), then covariate columns named ``c_<name>:<kind>``
with kind one of ``cont``, ``bin``, ``count``.

Run configurations are JSON documents; emitted JSON reports embed the fully
resolved configuration (including dataset paths), so a saved report can be
passed back in as a configuration and rerun to the same numbers.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from surpos.covariates import ConditionalSpec, CovariateChainSpec, fit_covariate_chain
from surpos.dataset import COVARIATE_KINDS, ConfigError, EndpointSpec, ModelSpec, TrialDataset
from surpos.design import assemble_design
from surpos.engine import PosConfig, PosReport, ValidationSpec, pos_curve, pos_estimate
from surpos.hpd import HpdSpec
from surpos.region import region_from_dict

_COV_HEADER = re.compile(r"^c_(?P<name>[A-Za-z_][A-Za-z0-9_]*):(?P<kind>[a-z]+)$")


def _parse_header(header: list[str], path: str) -> tuple[int, list[str], list[str]]:
    """Validate the column layout; returns (J, covariate names, kinds)."""
    j = 0
    while j < len(header) and header[j] == f"y{j + 1}":
        j += 1
    if j == 0:
        raise ConfigError(f"{path}: first column must be 'y1', got {header[0]!r}")
    if j >= len(header) or header[j] != "z":
        found = header[j] if j < len(header) else "end of header"
        raise ConfigError(f"{path}: expected 'z' after y1..y{j}, got {found!r}")
    names, kinds = [], []
    for col, label in enumerate(header[j + 1 :], start=j + 2):
        m = _COV_HEADER.match(label)
        if not m:
            raise ConfigError(
                f"{path}: column {col} has malformed covariate header {label!r} "
                "(expected 'c_<name>:<kind>')"
            )
        if m["kind"] not in COVARIATE_KINDS:
            raise ConfigError(
                f"{path}: column {col} ({label!r}) has unknown kind {m['kind']!r}; "
                f"choose from {COVARIATE_KINDS}"
            )
        names.append(m["name"])
        kinds.append(m["kind"])
    return j, names, kinds


def load_dataset(path: str | Path) -> TrialDataset:
    """Read a trial dataset from CSV, reporting malformed cells by coordinate."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: file is empty") from None
        J, names, kinds = _parse_header([h.strip() for h in header], str(path))
        n_cols = J + 1 + len(names)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != n_cols:
                raise ConfigError(
                    f"{path}: row {lineno} has {len(row)} fields, expected {n_cols}"
                )
            parsed = []
            for col, cell in enumerate(row, start=1):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise ConfigError(
                        f"{path}: row {lineno}, column {col} ({header[col - 1]!r}): "
                        f"cannot parse {cell!r} as a number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise ConfigError(f"{path}: no data rows")
    data = np.asarray(rows)
    z = data[:, J]
    bad = np.flatnonzero(~np.isin(z, (0.0, 1.0)))
    if bad.size:
        raise ConfigError(
            f"{path}: row {bad[0] + 2}, column 'z': treatment must be 0 or 1, got {z[bad[0]]}"
        )
    return TrialDataset(
        outcomes=data[:, :J],
        treatment=z.astype(int),
        covariates=data[:, J + 1 :],
        covariate_names=tuple(names),
        covariate_kinds=tuple(kinds),
    )


def save_dataset(dataset: TrialDataset, path: str | Path) -> None:
    """Write a trial dataset to CSV in the schema that ``load_dataset`` reads."""
    header = [f"y{j + 1}" for j in range(dataset.n_endpoints)]
    header.append("z")
    header.extend(
        f"c_{name}:{kind}" for name, kind in zip(dataset.covariate_names, dataset.covariate_kinds)
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.outcomes[i]]
            row.append(str(int(dataset.treatment[i])))
            row.extend(repr(float(v)) for v in dataset.covariates[i])
            writer.writerow(row)


def _model_from_dict(obj: dict) -> ModelSpec:
    endpoints = []
    for ep in obj["endpoints"]:
        endpoints.append(
            EndpointSpec(
                covariates=tuple(ep.get("covariates", ())),
                intercept=bool(ep.get("intercept", True)),
                direction=ep.get("direction", ">"),
                delta=float(ep.get("delta", 0.0)),
            )
        )
    return ModelSpec(endpoints=tuple(endpoints))


def _chain_from_dict(obj: dict) -> CovariateChainSpec:
    return CovariateChainSpec(
        conditionals=tuple(
            ConditionalSpec(
                target=c["target"],
                predictors=tuple(c.get("predictors", ())),
                family=c.get("family", "gaussian"),
            )
            for c in obj.get("conditionals", ())
        )
    )


def _chain_to_dict(chain: CovariateChainSpec) -> dict:
    return {
        "conditionals": [
            {"target": c.target, "predictors": list(c.predictors), "family": c.family}
            for c in chain.conditionals
        ]
    }


def _validation_from_dict(obj: dict | None) -> ValidationSpec:
    if not obj:
        return ValidationSpec()
    hpd = obj.get("hpd")
    return ValidationSpec(
        mode=obj.get("mode", "unconstrained"),
        null_endpoints=tuple(obj.get("null_endpoints", ())),
        alternative_region=(
            region_from_dict(obj["alternative_region"])
            if obj.get("alternative_region") is not None
            else None
        ),
        hpd=(
            HpdSpec(
                method=hpd.get("method", "log-posterior"),
                q_hpd=float(hpd.get("q_hpd", 0.5)),
                bandwidth=hpd.get("bandwidth", "scott"),
            )
            if hpd
            else None
        ),
    )


def load_run_config(path: str | Path) -> dict:
    with open(path) as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: run configuration must be a JSON object")
    # an emitted report doubles as a configuration for exact reruns
    if "config" in obj and "pos_unadjusted" in obj:
        obj = _config_from_report(obj)
    obj.setdefault("_base_dir", str(Path(path).resolve().parent))
    return obj


def _config_from_report(report: dict) -> dict:
    echo = report["config"]
    pos_keys = (
        "n", "gamma", "q_rand", "inner_draws", "n_datasets", "seed",
        "inner_burn_in", "validation_burn_in",
    )
    return {
        "datasets": echo["datasets"],
        "model": echo["model"],
        "region": echo["region"],
        "covariate_chain": echo["covariate_chain"],
        "validation": echo["validation"],
        "weights": {"a0": echo["a0"], "b01": echo["b01"], "b02": echo["b02"]},
        "pos": {k: echo[k] for k in pos_keys},
        "comparator": echo.get("comparator", False),
    }


def _resolve_path(base_dir: str | None, p: str) -> Path:
    path = Path(p)
    if not path.is_absolute() and base_dir:
        path = Path(base_dir) / path
    return path


def run_from_config(cfg: dict, desk_scale: bool = False, n_workers: int | None = None) -> PosReport:
    """Execute a POS run described by a configuration dictionary."""
    base_dir = cfg.get("_base_dir")
    datasets = cfg.get("datasets", {})
    if "newer" not in datasets:
        raise ConfigError("configuration needs datasets.newer (most recent historical CSV)")
    newer = load_dataset(_resolve_path(base_dir, datasets["newer"]))
    older = None
    if datasets.get("older"):
        older = load_dataset(_resolve_path(base_dir, datasets["older"]))
    model = _model_from_dict(cfg["model"])
    region = region_from_dict(cfg["region"])
    chain = _chain_from_dict(cfg.get("covariate_chain", {}))
    vspec = _validation_from_dict(cfg.get("validation"))
    weights = cfg.get("weights", {})
    pos_cfg = dict(cfg.get("pos", {}))
    config = PosConfig(
        region=region,
        a0=float(weights.get("a0", 0.0)),
        b01=float(weights.get("b01", 0.0)),
        b02=float(weights.get("b02", 1.0)),
        **pos_cfg,
    )
    if desk_scale:
        config = config.desk_scale()
    hist = assemble_design(newer, model)
    fitting_hist = assemble_design(older, model) if older is not None else None
    histories = [(newer, config.b02)]
    if older is not None:
        histories.append((older, config.b01))
    if all(w == 0 for _, w in histories):
        # a flat covariate prior cannot generate covariates; fall back to the
        # newest history at full weight
        histories = [(newer, 1.0)]
    cov_post = fit_covariate_chain(histories, chain)
    comparator = bool(cfg.get("comparator", False))
    report = pos_estimate(
        config,
        model,
        hist,
        cov_post,
        vspec,
        fitting_hist=fitting_hist,
        comparator=comparator,
        n_workers=n_workers,
    )
    _extend_echo(report, cfg)
    return report


def run_curve_from_config(
    cfg: dict,
    n_grid: list[int],
    desk_scale: bool = False,
    n_workers: int | None = None,
) -> list[tuple[int, PosReport]]:
    """POS at each sample size of the grid, sharing seeds across grid points."""
    grid = [int(n) for n in n_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("n grid must be nonempty and strictly increasing")
    out = []
    for n in grid:
        point_cfg = dict(cfg)
        point_cfg["pos"] = dict(cfg.get("pos", {}), n=n)
        out.append((n, run_from_config(point_cfg, desk_scale=desk_scale, n_workers=n_workers)))
    return out


def _extend_echo(report: PosReport, cfg: dict) -> None:
    """Fold run-level inputs into the report's config echo for exact reruns."""
    report.config["datasets"] = {
        "newer": str(cfg["datasets"]["newer"]),
        "older": str(cfg["datasets"]["older"]) if cfg["datasets"].get("older") else None,
    }
    report.config["covariate_chain"] = _chain_to_dict(
        _chain_from_dict(cfg.get("covariate_chain", {}))
    )
    report.config["comparator"] = bool(cfg.get("comparator", False))
    if cfg.get("_base_dir"):
        report.config["base_dir"] = cfg["_base_dir"]


CSV_FIELDS = (
    "n", "a0", "b01", "b02", "gamma", "seed",
    "pos_unadjusted", "pos_adjusted", "mc_se", "comparator_rate",
)


def report_rows(reports: list[PosReport]) -> list[dict]:
    """Flatten reports to one row per (n, a0, b01, b02) configuration."""
    rows = []
    for rep in reports:
        c = rep.config
        rows.append(
            {
                "n": c.get("n"),
                "a0": c.get("a0"),
                "b01": c.get("b01"),
                "b02": c.get("b02"),
                "gamma": c.get("gamma"),
                "seed": c.get("seed"),
                "pos_unadjusted": rep.pos_unadjusted,
                "pos_adjusted": rep.pos_adjusted,
                "mc_se": rep.mc_se,
                "comparator_rate": rep.comparator_rate,
            }
        )
    return rows


def emit_report(reports: PosReport | list[PosReport], path: str | Path, fmt: str = "json") -> None:
    """Write reports as JSON (full diagnostics) or CSV (flat summary rows)."""
    if isinstance(reports, PosReport):
        reports = [reports]
    if fmt == "json":
        payload = reports[0].to_dict() if len(reports) == 1 else {
            "reports": [r.to_dict() for r in reports]
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_FIELDS)
            writer.writeheader()
            writer.writerows(report_rows(reports))
    else:
        raise ValueError(f"unknown report format {fmt!r}; choose 'json' or 'csv'")
