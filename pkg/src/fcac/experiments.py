"""Experiment drivers: privacy sweep, continual rounds, federated benchmark.

Each command takes a validated ExperimentConfig, runs one experiment per
seed, and returns a JSON-ready report: resolved config, per-seed run
records, cross-seed aggregates, a version string, and wall-clock timing.
Reports validate against the schema shipped as ``report_schema.json``.

Output layout (when an output directory is set): ``report.json`` at the
top level; per-seed artifacts under ``seed{n}/`` (and ``seed{n}/eps{tag}/``
when an epsilon grid is in play) so parallel seeds never share files.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
import subprocess
import time
from contextlib import contextmanager
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from .clusterer import write_nodes_csv
from .data import (
    LabeledDataset,
    gen_gaussian_mixture,
    load_csv,
    split_dirichlet,
    split_iid,
)
from .federation import FCAC, write_transfer_csv
from .metrics import ami, ari, nmi, wasserstein1, wasserstein1_marginal
from .privacy import PrivacyParams, privatize_dataset

KINDS = ("privacy-sweep", "continual-synthetic", "federated-benchmark")

# independent rng channels, appended to the experiment seed
_CH_DATASET = 11
_CH_SPLIT = 13
_CH_SUBSAMPLE = 17
_CH_NOISE = 19

_CONFIG_KEYS = {
    "kind", "dataset", "num_clients", "epsilons", "scenario", "rounds",
    "seeds", "out_dir",
}
_PROTOCOL_NAME = "eight-subset-gaussian"


# --------------------------------------------------------------- configuration

def _parse_epsilon(value) -> float:
    if value in ("inf", "Infinity", None):
        return math.inf
    eps = float(value)
    if not eps > 0:
        raise ValueError(f"epsilon must be positive, got {value!r}")
    return eps


def _eps_json(eps: float):
    return "inf" if math.isinf(eps) else float(eps)


def _eps_tag(eps: float) -> str:
    return "inf" if math.isinf(eps) else f"{eps:g}"


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Fully resolved experiment description; rejects anything it does not
    understand rather than guessing."""

    kind: str
    dataset: dict
    seeds: tuple
    num_clients: int = 1
    epsilons: tuple = (math.inf,)
    scenario: dict = dataclasses.field(default_factory=lambda: {"kind": "iid"})
    rounds: int = 1
    out_dir: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}; pick from {KINDS}")
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("seeds must be a non-empty list")
        if any(s < 0 for s in self.seeds):
            raise ValueError("seeds must be non-negative")
        if len(set(self.seeds)) != len(self.seeds):
            raise ValueError("seeds must be distinct")
        object.__setattr__(
            self, "epsilons", tuple(_parse_epsilon(e) for e in self.epsilons)
        )
        if not self.epsilons:
            raise ValueError("epsilons must be non-empty")
        if self.num_clients < 1:
            raise ValueError("num_clients must be positive")
        if self.rounds < 1:
            raise ValueError("rounds must be positive")
        self._check_scenario()
        self._check_dataset()
        if self.kind == "continual-synthetic":
            if self.num_clients != 2:
                raise ValueError("the continual protocol is fixed at 2 clients")
            if self.rounds != 3:
                raise ValueError("the continual protocol is fixed at 3 rounds")
            if len(self.epsilons) != 1:
                raise ValueError("the continual protocol runs a single epsilon")

    def _check_scenario(self):
        sc = dict(self.scenario)
        kind = sc.pop("kind", None)
        if kind == "iid":
            extra = set(sc)
        elif kind == "dirichlet":
            alpha = sc.pop("alpha", None)
            if alpha is None or not float(alpha) > 0:
                raise ValueError("dirichlet scenario needs a positive alpha")
            extra = set(sc)
            if self.num_clients < 2:
                raise ValueError("dirichlet scenario needs at least 2 clients")
        else:
            raise ValueError(f"unknown scenario kind {kind!r}")
        if extra:
            raise ValueError(f"unknown scenario keys: {sorted(extra)}")

    def _check_dataset(self):
        ds = self.dataset
        if not isinstance(ds, dict):
            raise ValueError("dataset must be a mapping")
        if self.kind == "continual-synthetic":
            extra = set(ds) - {"protocol", "scale"}
            if extra:
                raise ValueError(f"unknown dataset keys: {sorted(extra)}")
            if ds.get("protocol", _PROTOCOL_NAME) != _PROTOCOL_NAME:
                raise ValueError(
                    f"continual experiments use the {_PROTOCOL_NAME!r} protocol"
                )
            points_per_component = 15000 // int(ds.get("scale", 5))
            if points_per_component < 4 or points_per_component % 4:
                raise ValueError("scale must leave a component size divisible by 4")
            return
        has_path, has_gen = "path" in ds, "generator" in ds
        if has_path == has_gen:
            raise ValueError("dataset needs exactly one of 'path' or 'generator'")
        extra = set(ds) - {"path", "generator"}
        if extra:
            raise ValueError(f"unknown dataset keys: {sorted(extra)}")
        if has_gen:
            gen = ds["generator"]
            if gen.get("kind") != "gaussian-mixture":
                raise ValueError(f"unknown generator kind {gen.get('kind')!r}")
            extra = set(gen) - {"kind", "components", "scale_bounds"}
            if extra:
                raise ValueError(f"unknown generator keys: {sorted(extra)}")
            if not gen.get("components"):
                raise ValueError("generator needs a non-empty components list")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ValueError("config must be a JSON object")
        extra = set(raw) - _CONFIG_KEYS
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        if "kind" not in raw:
            raise ValueError("config needs a 'kind'")
        if "seeds" not in raw:
            raise ValueError("config needs a 'seeds' list")
        kw = dict(raw)
        if kw["kind"] == "continual-synthetic":
            kw.setdefault("dataset", {"protocol": _PROTOCOL_NAME, "scale": 5})
            kw.setdefault("num_clients", 2)
            kw.setdefault("rounds", 3)
        elif "dataset" not in kw:
            raise ValueError("config needs a 'dataset'")
        for key in ("epsilons", "seeds"):
            if key in kw and not isinstance(kw[key], (list, tuple)):
                raise ValueError(f"{key} must be a list")
        return cls(**kw)

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["seeds"] = list(self.seeds)
        out["epsilons"] = [_eps_json(e) for e in self.epsilons]
        return out


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return ExperimentConfig.from_dict(json.load(fh))


# ------------------------------------------------------------------- plumbing

class _Phases:
    """Accumulates wall-clock time per named phase."""

    def __init__(self):
        self.acc = {}

    @contextmanager
    def __call__(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.acc[name] = self.acc.get(name, 0.0) + time.perf_counter() - t0


def _version() -> str:
    root = Path(__file__).resolve().parents[2]
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always", "--dirty"],
            cwd=root, capture_output=True, text=True, timeout=5,
        )
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except OSError:
        pass
    try:
        return f"fcac-{metadata.version('fcac')}"
    except metadata.PackageNotFoundError:
        return "fcac-unknown"


def _stats(values) -> dict:
    arr = np.asarray(values, dtype=float)
    std = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
    return {"mean": float(arr.mean()), "std": std}


def build_dataset(spec: dict, seed) -> LabeledDataset:
    """Materialize a dataset spec: a CSV path or a Gaussian-mixture draw."""
    if "path" in spec:
        return load_csv(spec["path"])
    gen = spec["generator"]
    bounds = gen.get("scale_bounds", (0.0, 1.0))
    return gen_gaussian_mixture(
        gen["components"],
        scale_bounds=None if bounds is None else tuple(bounds),
        seed=seed,
    )


def write_points_csv(points, labels, path) -> None:
    """Plot-ready point dump: ``x_0 .. x_{d-1}, label``."""
    pts = np.asarray(points, dtype=float)
    lab = np.asarray(labels, dtype=np.int64)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x_{j}" for j in range(pts.shape[1])] + ["label"])
        for row, y in zip(pts, lab):
            writer.writerow([repr(float(v)) for v in row] + [int(y)])


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def validate_report(report: dict) -> None:
    """Check a report against the shipped schema; raises on mismatch."""
    import jsonschema

    schema = json.loads(
        resources.files("fcac").joinpath("report_schema.json").read_text()
    )
    jsonschema.validate(report, schema)


def _finish(config, runs, aggregate, phases, t0, notes=None) -> dict:
    report = {
        "kind": config.kind,
        "version": _version(),
        "config": config.to_json(),
        "seeds": list(config.seeds),
        "runs": runs,
        "aggregate": aggregate,
        "timing": {
            "total_s": time.perf_counter() - t0,
            "phases": dict(phases.acc),
        },
    }
    if notes:
        report["notes"] = list(notes)
    return report


def _seed_dir(out, seed) -> Path:
    path = Path(out) / f"seed{seed}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _round_record(model, round_index, labeling, ds, points_fed) -> dict:
    pred = model.predict_many(ds.points)
    return {
        "round": round_index,
        "per_client": [
            {"client_id": c, "nodes": st.num_nodes, "points_fed": int(points_fed[c])}
            for c, st in enumerate(model.clients)
        ],
        "server": {
            "nodes": model.server.num_nodes,
            "clusters": labeling.num_clusters,
            "ari": ari(ds.labels, pred),
            "ami": ami(ds.labels, pred),
            "nmi": nmi(ds.labels, pred),
        },
    }


def _dump_round(model, round_index, out_dir, dump_nodes, dump_transfer):
    if dump_nodes:
        for c, st in enumerate(model.clients):
            write_nodes_csv(st, out_dir / f"nodes_round{round_index}_client{c}.csv")
        write_nodes_csv(model.server, out_dir / f"nodes_round{round_index}_server.csv")
    if dump_transfer:
        c = model.config.num_clients
        batch = model.transfer_log[(round_index - 1) * c : round_index * c]
        write_transfer_csv(batch, out_dir / f"transfer_round{round_index}.csv")


# --------------------------------------------------------------- privacy sweep

def cmd_privacy_sweep(config: ExperimentConfig, out_dir=None) -> dict:
    """Measure how the transport distance between a dataset and its noised
    copy shrinks as the privacy budget grows."""
    t0 = time.perf_counter()
    phases = _Phases()
    out = out_dir or config.out_dir
    runs = []
    for seed in config.seeds:
        t_run = time.perf_counter()
        with phases("dataset"):
            ds = build_dataset(config.dataset, [seed, _CH_DATASET])
        if out:
            with phases("io"):
                write_points_csv(ds.points, ds.labels,
                                 _seed_dir(out, seed) / "points_original.csv")
        sweep = []
        for j, eps in enumerate(config.epsilons):
            with phases("noise"):
                params = PrivacyParams.from_data(ds.points, eps)
                noised = privatize_dataset(
                    ds.points, params, np.random.default_rng([seed, _CH_NOISE, j])
                )
            with phases("evaluate"):
                # headline distance compares per-dimension marginals; the
                # joint assignment distance rides along for reference
                sweep.append({
                    "epsilon": _eps_json(eps),
                    "d_ws": wasserstein1_marginal(ds.points, noised),
                    "d_ws_exact": wasserstein1(ds.points, noised),
                })
            if out:
                with phases("io"):
                    write_points_csv(
                        noised, ds.labels,
                        _seed_dir(out, seed) / f"points_eps{_eps_tag(eps)}.csv",
                    )
        runs.append({
            "seed": seed,
            "sweep": sweep,
            "timing": {"total_s": time.perf_counter() - t_run},
        })
    aggregate = {
        "per_epsilon": [
            {"epsilon": _eps_json(eps),
             **{f"{k}_d_ws": v for k, v in
                _stats([r["sweep"][j]["d_ws"] for r in runs]).items()}}
            for j, eps in enumerate(config.epsilons)
        ]
    }
    report = _finish(config, runs, aggregate, phases, t0)
    if out:
        with phases("io"):
            write_report(report, Path(out) / "report.json")
    return report


# ------------------------------------------------------------ continual rounds

def continual_protocol(seed, scale: int = 5):
    """The eight-subset continual stream over a three-Gaussian mixture.

    The mixture (three 2-D Gaussians, jointly scaled to [0, 1]) is split
    into three disjoint same-distribution parts A, B, C, one per round,
    each still containing every cluster.  A is quartered into A1..A4, B
    and C halved into B1/B2 and C1/C2.  Two clients then receive, per
    round: (A1+A2 | A3+A4), (B1 | B2), (C1 | C2), every point exactly
    once.  Later rounds bring fresh points from already-seen regions, so
    a learner that retains state should change little after round 2.
    Returns the full labeled dataset and the per-round, per-client index
    schedule.
    """
    n = 15000 // scale
    if n < 4 or n % 4:
        raise ValueError("scale must leave a component size divisible by 4")
    ds = gen_gaussian_mixture(
        [((0.0, 0.0), 0.4, n), ((6.0, 0.0), 0.4, n), ((3.0, 5.0), 0.4, n)],
        scale_bounds=(0.0, 1.0),
        seed=[seed, _CH_DATASET],
        name="continual-gaussians",
    )
    perm = np.random.default_rng([seed, _CH_SPLIT]).permutation(3 * n)
    part_a, part_b, part_c = perm[:n], perm[n:2 * n], perm[2 * n:]
    quarter, half = n // 4, n // 2
    schedule = [
        [part_a[:2 * quarter], part_a[2 * quarter:]],
        [part_b[:half], part_b[half:]],
        [part_c[:half], part_c[half:]],
    ]
    return ds, schedule


def cmd_continual(config: ExperimentConfig, out_dir=None, max_workers=None) -> dict:
    """Run the fixed two-client, three-round protocol and track how the
    server's clustering of the whole dataset evolves round over round."""
    t0 = time.perf_counter()
    phases = _Phases()
    out = out_dir or config.out_dir
    scale = int(config.dataset.get("scale", 5))
    runs = []
    for seed in config.seeds:
        t_run = time.perf_counter()
        with phases("dataset"):
            ds, schedule = continual_protocol(seed, scale)
        model = FCAC(2, config.epsilons[0], seed)
        round_recs = []
        for r, parts in enumerate(schedule, start=1):
            with phases("train"):
                labeling = model.fit_round(
                    [ds.points[p] for p in parts], max_workers=max_workers
                )
            with phases("evaluate"):
                round_recs.append(
                    _round_record(model, r, labeling, ds, [len(p) for p in parts])
                )
            if out:
                with phases("io"):
                    _dump_round(model, r, _seed_dir(out, seed),
                                dump_nodes=True, dump_transfer=True)
        runs.append({
            "seed": seed,
            "rounds": round_recs,
            "timing": {"total_s": time.perf_counter() - t_run},
        })
    final = [r["rounds"][-1]["server"] for r in runs]
    aggregate = {
        "final_ari": _stats([s["ari"] for s in final]),
        "final_nmi": _stats([s["nmi"] for s in final]),
        "server_nodes_by_round": [
            {"round": r + 1,
             **_stats([run["rounds"][r]["server"]["nodes"] for run in runs])}
            for r in range(3)
        ],
    }
    report = _finish(config, runs, aggregate, phases, t0)
    if out:
        with phases("io"):
            write_report(report, Path(out) / "report.json")
    return report


# -------------------------------------------------------------- the benchmark

def _split_clients(ds, config, seed):
    sc = config.scenario
    if sc["kind"] == "iid":
        return split_iid(ds, config.num_clients, [seed, _CH_SPLIT])
    return split_dirichlet(
        ds, config.num_clients, float(sc["alpha"]), [seed, _CH_SPLIT]
    )


def cmd_benchmark(
    config: ExperimentConfig,
    out_dir=None,
    max_points=None,
    dump_nodes=False,
    dump_transfer=False,
    max_workers=None,
) -> dict:
    """Score the full pipeline on a labeled dataset over a seed x epsilon
    grid and aggregate the external clustering metrics."""
    t0 = time.perf_counter()
    phases = _Phases()
    out = out_dir or config.out_dir
    notes = []
    cached = None
    if "path" in config.dataset:
        with phases("dataset"):
            cached = build_dataset(config.dataset, 0)
    runs = []
    for seed in config.seeds:
        with phases("dataset"):
            ds = cached if cached is not None else build_dataset(
                config.dataset, [seed, _CH_DATASET]
            )
            if max_points is not None and len(ds) > max_points:
                if not notes:
                    notes.append(
                        f"subsampled to {max_points} of {len(ds)} points per seed"
                    )
                keep = np.random.default_rng([seed, _CH_SUBSAMPLE]).choice(
                    len(ds), max_points, replace=False
                )
                ds = ds.subset(np.sort(keep))
            parts = _split_clients(ds, config, seed)
        for eps in config.epsilons:
            t_run = time.perf_counter()
            model = FCAC(config.num_clients, eps, seed)
            chunked = [np.array_split(p, config.rounds) for p in parts]
            round_recs = []
            for r in range(1, config.rounds + 1):
                with phases("train"):
                    labeling = model.fit_round(
                        [ds.points[c[r - 1]] for c in chunked],
                        max_workers=max_workers,
                    )
                with phases("evaluate"):
                    round_recs.append(_round_record(
                        model, r, labeling, ds, [len(c[r - 1]) for c in chunked]
                    ))
            if out:
                with phases("io"):
                    run_dir = _seed_dir(out, seed) / f"eps{_eps_tag(eps)}"
                    run_dir.mkdir(exist_ok=True)
                    for r in range(1, config.rounds + 1):
                        _dump_round(model, r, run_dir, dump_nodes, dump_transfer)
            last = round_recs[-1]["server"]
            runs.append({
                "seed": seed,
                "epsilon": _eps_json(eps),
                "rounds": round_recs,
                "metrics": {
                    "ari": last["ari"], "ami": last["ami"], "nmi": last["nmi"],
                    "nodes": last["nodes"], "clusters": last["clusters"],
                },
                "timing": {"total_s": time.perf_counter() - t_run},
            })
    aggregate = {
        "per_epsilon": [
            {
                "epsilon": _eps_json(eps),
                "num_seeds": len(config.seeds),
                **{
                    metric: _stats([
                        r["metrics"][metric] for r in runs
                        if r["epsilon"] == _eps_json(eps)
                    ])
                    for metric in ("ari", "ami", "nmi", "nodes", "clusters")
                },
            }
            for eps in config.epsilons
        ]
    }
    report = _finish(config, runs, aggregate, phases, t0, notes)
    if out:
        with phases("io"):
            write_report(report, Path(out) / "report.json")
    return report
