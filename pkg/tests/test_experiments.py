"""Experiment drivers: config validation, the three commands, reports."""

import csv
import json
import math
import timeit

import numpy as np
import pytest

from fcac.data import split_iid
from fcac.experiments import (
    _CH_DATASET,
    _CH_SPLIT,
    ExperimentConfig,
    build_dataset,
    cmd_benchmark,
    cmd_continual,
    cmd_privacy_sweep,
    continual_protocol,
    load_config,
    validate_report,
    write_report,
)
from fcac.federation import FCAC
from fcac.metrics import ari


def strip_timing(obj):
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k != "timing"}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def gaussian_spec(n=1000, bounds=(-1, 1)):
    return {"generator": {"kind": "gaussian-mixture",
                          "components": [{"mean": [0, 0], "cov": 1.0, "n": n}],
                          "scale_bounds": list(bounds)}}


def sweep_config(seeds, epsilons=(15, 25, 50, 75, "inf"), n=1000):
    return ExperimentConfig.from_dict({
        "kind": "privacy-sweep",
        "dataset": gaussian_spec(n),
        "epsilons": list(epsilons),
        "seeds": list(seeds),
    })


def three_blob_spec(n_per=250):
    comps = [{"mean": [0, 0], "cov": 0.4, "n": n_per},
             {"mean": [6, 0], "cov": 0.4, "n": n_per},
             {"mean": [3, 5], "cov": 0.4, "n": n_per}]
    return {"generator": {"kind": "gaussian-mixture", "components": comps,
                          "scale_bounds": [0, 1]}}


# --------------------------------------------------------------- configuration

class TestExperimentConfig:
    def test_unknown_keys_are_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys.*typo"):
            ExperimentConfig.from_dict({
                "kind": "privacy-sweep", "dataset": gaussian_spec(),
                "seeds": [0], "typo": 1,
            })

    def test_kind_and_seeds_are_required(self):
        with pytest.raises(ValueError, match="kind"):
            ExperimentConfig.from_dict({"dataset": gaussian_spec(), "seeds": [0]})
        with pytest.raises(ValueError, match="seeds"):
            ExperimentConfig.from_dict({"kind": "privacy-sweep",
                                        "dataset": gaussian_spec()})

    def test_dataset_required_outside_the_continual_protocol(self):
        with pytest.raises(ValueError, match="dataset"):
            ExperimentConfig.from_dict({"kind": "privacy-sweep", "seeds": [0]})

    def test_epsilon_parsing(self):
        cfg = sweep_config([0], epsilons=["inf", 15, 2.5])
        assert cfg.epsilons == (math.inf, 15.0, 2.5)
        with pytest.raises(ValueError, match="epsilon"):
            sweep_config([0], epsilons=[0])
        with pytest.raises(ValueError, match="epsilon"):
            sweep_config([0], epsilons=[-3])

    def test_seed_validation(self):
        with pytest.raises(ValueError, match="distinct"):
            sweep_config([1, 1])
        with pytest.raises(ValueError, match="non-negative"):
            sweep_config([-2])
        with pytest.raises(ValueError, match="non-empty"):
            sweep_config([])

    def test_scenario_validation(self):
        base = {"kind": "federated-benchmark", "dataset": gaussian_spec(),
                "seeds": [0], "num_clients": 3}
        with pytest.raises(ValueError, match="unknown scenario kind"):
            ExperimentConfig.from_dict({**base, "scenario": {"kind": "sorted"}})
        with pytest.raises(ValueError, match="alpha"):
            ExperimentConfig.from_dict({**base, "scenario": {"kind": "dirichlet"}})
        with pytest.raises(ValueError, match="unknown scenario keys"):
            ExperimentConfig.from_dict(
                {**base, "scenario": {"kind": "iid", "beta": 1}})
        with pytest.raises(ValueError, match="at least 2 clients"):
            ExperimentConfig.from_dict({
                **base, "num_clients": 1,
                "scenario": {"kind": "dirichlet", "alpha": 0.5},
            })

    def test_dataset_spec_validation(self):
        base = {"kind": "federated-benchmark", "seeds": [0]}
        with pytest.raises(ValueError, match="exactly one"):
            ExperimentConfig.from_dict({**base, "dataset": {}})
        with pytest.raises(ValueError, match="exactly one"):
            ExperimentConfig.from_dict({**base, "dataset": {
                "path": "x.csv", "generator": gaussian_spec()["generator"]}})
        with pytest.raises(ValueError, match="unknown generator kind"):
            ExperimentConfig.from_dict({**base, "dataset": {
                "generator": {"kind": "uniform", "components": [{}]}}})
        with pytest.raises(ValueError, match="unknown dataset keys"):
            ExperimentConfig.from_dict({**base, "dataset": {
                "path": "x.csv", "cache": True}})

    def test_continual_shape_is_fixed(self):
        cfg = ExperimentConfig.from_dict({"kind": "continual-synthetic", "seeds": [0]})
        assert (cfg.num_clients, cfg.rounds) == (2, 3)
        assert cfg.epsilons == (math.inf,)
        for bad in ({"num_clients": 3}, {"rounds": 2}, {"epsilons": [5, 10]}):
            with pytest.raises(ValueError, match="continual"):
                ExperimentConfig.from_dict(
                    {"kind": "continual-synthetic", "seeds": [0], **bad})

    def test_unknown_experiment_kind(self):
        with pytest.raises(ValueError, match="unknown experiment kind"):
            ExperimentConfig.from_dict({"kind": "ablation", "seeds": [0],
                                        "dataset": gaussian_spec()})

    def test_to_json_uses_the_inf_token(self):
        cfg = sweep_config([0], epsilons=["inf", 25])
        assert cfg.to_json()["epsilons"] == ["inf", 25.0]

    def test_load_config_round_trips_through_a_file(self, tmp_path):
        path = tmp_path / "cfg.json"
        raw = {"kind": "privacy-sweep", "dataset": gaussian_spec(),
               "epsilons": [15, "inf"], "seeds": [3, 4]}
        path.write_text(json.dumps(raw))
        cfg = load_config(path)
        assert cfg.seeds == (3, 4)
        assert cfg.epsilons == (15.0, math.inf)


# --------------------------------------------------------------- privacy sweep

class TestPrivacySweep:
    def test_no_noise_means_zero_distance(self):
        rep = cmd_privacy_sweep(sweep_config([0], epsilons=["inf"], n=200))
        assert rep["runs"][0]["sweep"][0]["d_ws"] == 0.0
        assert rep["runs"][0]["sweep"][0]["d_ws_exact"] == 0.0

    def test_distance_shrinks_as_the_budget_grows(self):
        rep = cmd_privacy_sweep(sweep_config([0, 1, 2]))
        means = [row["mean_d_ws"] for row in rep["aggregate"]["per_epsilon"][:4]]
        assert all(a > b for a, b in zip(means, means[1:]))

    def test_report_matches_the_published_schema(self):
        rep = cmd_privacy_sweep(sweep_config([0], epsilons=[25, "inf"], n=200))
        validate_report(rep)

    def test_report_embeds_config_version_and_timing(self):
        rep = cmd_privacy_sweep(sweep_config([5], epsilons=[25], n=200))
        assert rep["config"]["dataset"] == gaussian_spec(200)
        assert rep["seeds"] == [5]
        assert isinstance(rep["version"], str) and rep["version"]
        assert rep["timing"]["total_s"] > 0
        assert "noise" in rep["timing"]["phases"]

    def test_point_dumps_are_plot_ready(self, tmp_path):
        cmd_privacy_sweep(sweep_config([2], epsilons=[25, "inf"], n=150),
                          out_dir=tmp_path)
        for tag in ("original", "eps25", "epsinf"):
            with open(tmp_path / "seed2" / f"points_{tag}.csv", newline="") as fh:
                rows = list(csv.reader(fh))
            assert rows[0] == ["x_0", "x_1", "label"]
            assert len(rows) == 151
        with open(tmp_path / "report.json") as fh:
            validate_report(json.load(fh))

    def test_rerun_reproduces_every_metric(self):
        cfg = sweep_config([0, 1], epsilons=[15, "inf"], n=300)
        a, b = cmd_privacy_sweep(cfg), cmd_privacy_sweep(cfg)
        assert json.dumps(strip_timing(a), sort_keys=True) == \
            json.dumps(strip_timing(b), sort_keys=True)


# ------------------------------------------------------------ continual rounds

class TestContinualProtocol:
    def test_schedule_partitions_the_dataset(self):
        ds, schedule = continual_protocol(0, scale=25)
        n = 15000 // 25
        assert len(ds) == 3 * n
        assert [len(part) for parts in schedule for part in parts] == [n // 2] * 6
        everything = np.concatenate([p for parts in schedule for p in parts])
        assert np.array_equal(np.sort(everything), np.arange(3 * n))

    def test_every_round_carries_every_cluster(self):
        # each part is an iid slice of the mixture, not a single component
        ds, schedule = continual_protocol(1, scale=25)
        for parts in schedule:
            for part in parts:
                assert set(ds.labels[part]) == {0, 1, 2}

    def test_points_stay_in_the_unit_square(self):
        ds, _ = continual_protocol(3, scale=50)
        assert ds.points.min() == 0.0 and ds.points.max() == 1.0

    def test_bad_scale_is_rejected(self):
        with pytest.raises(ValueError, match="divisible by 4"):
            continual_protocol(0, scale=7)


class TestContinual:
    def make_config(self, seeds, scale=25):
        return ExperimentConfig.from_dict({
            "kind": "continual-synthetic",
            "dataset": {"protocol": "eight-subset-gaussian", "scale": scale},
            "seeds": list(seeds),
        })

    def test_three_rounds_with_per_round_server_scores(self):
        rep = cmd_continual(self.make_config([0]))
        validate_report(rep)
        rounds = rep["runs"][0]["rounds"]
        assert [r["round"] for r in rounds] == [1, 2, 3]
        for r in rounds:
            assert set(r["server"]) == {"nodes", "clusters", "ari", "ami", "nmi"}
            assert [c["client_id"] for c in r["per_client"]] == [0, 1]
            assert all(c["points_fed"] == 300 for c in r["per_client"])

    def test_client_states_grow_across_rounds(self):
        rep = cmd_continual(self.make_config([1]))
        per_round = [
            [c["nodes"] for c in r["per_client"]]
            for r in rep["runs"][0]["rounds"]
        ]
        for earlier, later in zip(per_round, per_round[1:]):
            assert all(b >= a for a, b in zip(earlier, later))

    def test_dumps_cover_every_round_and_party(self, tmp_path):
        cmd_continual(self.make_config([0]), out_dir=tmp_path)
        for r in (1, 2, 3):
            for who in ("client0", "client1", "server"):
                with open(tmp_path / "seed0" / f"nodes_round{r}_{who}.csv",
                          newline="") as fh:
                    header = next(csv.reader(fh))
                assert header[:4] == ["node_id", "cluster_id", "M", "sigma"]
            assert (tmp_path / "seed0" / f"transfer_round{r}.csv").exists()

    def test_aggregate_tracks_final_scores_and_node_counts(self):
        rep = cmd_continual(self.make_config([0, 1]))
        agg = rep["aggregate"]
        assert set(agg) == {"final_ari", "final_nmi", "server_nodes_by_round"}
        assert [row["round"] for row in agg["server_nodes_by_round"]] == [1, 2, 3]

    def test_rerun_reproduces_every_metric(self):
        cfg = self.make_config([4])
        a, b = cmd_continual(cfg), cmd_continual(cfg)
        assert json.dumps(strip_timing(a), sort_keys=True) == \
            json.dumps(strip_timing(b), sort_keys=True)


# -------------------------------------------------------------- the benchmark

class TestBenchmark:
    def make_config(self, **overrides):
        raw = {
            "kind": "federated-benchmark",
            "dataset": three_blob_spec(),
            "num_clients": 3,
            "epsilons": ["inf"],
            "seeds": [0, 1],
        }
        raw.update(overrides)
        return ExperimentConfig.from_dict(raw)

    def test_grid_runs_and_aggregates(self):
        rep = cmd_benchmark(self.make_config(epsilons=["inf", 50], seeds=[0, 1, 2]))
        validate_report(rep)
        assert len(rep["runs"]) == 6
        agg = rep["aggregate"]["per_epsilon"]
        assert [row["epsilon"] for row in agg] == ["inf", 50.0]
        for row in agg:
            assert row["num_seeds"] == 3
            for metric in ("ari", "ami", "nmi", "nodes", "clusters"):
                assert set(row[metric]) == {"mean", "std"}
                assert row[metric]["std"] >= 0

    def test_single_client_no_noise_equals_the_direct_pipeline(self):
        cfg = self.make_config(num_clients=1, seeds=[7])
        rep = cmd_benchmark(cfg)

        ds = build_dataset(cfg.dataset, [7, _CH_DATASET])
        parts = split_iid(ds, 1, [7, _CH_SPLIT])
        model = FCAC(1, math.inf, 7)
        labeling = model.fit_round([ds.points[parts[0]]])
        pred = model.predict_many(ds.points)

        got = rep["runs"][0]["metrics"]
        assert got["ari"] == ari(ds.labels, pred)
        assert got["nodes"] == model.server.num_nodes
        assert got["clusters"] == labeling.num_clusters

    def test_separated_blobs_cluster_well_without_noise(self):
        rep = cmd_benchmark(self.make_config(seeds=[0, 1]))
        assert rep["aggregate"]["per_epsilon"][0]["ari"]["mean"] > 0.7

    def test_subsampling_caps_the_dataset_and_is_documented(self):
        cfg = self.make_config(seeds=[0])
        rep = cmd_benchmark(cfg, max_points=300)
        assert any("subsampled to 300" in note for note in rep["notes"])
        full = cmd_benchmark(cfg)
        assert rep["runs"][0]["metrics"]["nodes"] <= \
            full["runs"][0]["metrics"]["nodes"] * 2  # smaller input, small model

    def test_dirichlet_scenario_runs(self):
        rep = cmd_benchmark(self.make_config(
            scenario={"kind": "dirichlet", "alpha": 0.5}, seeds=[0]))
        validate_report(rep)
        assert rep["config"]["scenario"] == {"kind": "dirichlet", "alpha": 0.5}

    def test_multi_round_chunking_feeds_every_point_once(self):
        rep = cmd_benchmark(self.make_config(rounds=3, seeds=[0]))
        rounds = rep["runs"][0]["rounds"]
        assert [r["round"] for r in rounds] == [1, 2, 3]
        fed = sum(c["points_fed"] for r in rounds for c in r["per_client"])
        assert fed == 750

    def test_node_dumps_are_scoped_by_seed_and_epsilon(self, tmp_path):
        cmd_benchmark(self.make_config(seeds=[0], epsilons=["inf", 25]),
                      out_dir=tmp_path, dump_nodes=True, dump_transfer=True)
        for tag in ("epsinf", "eps25"):
            base = tmp_path / "seed0" / tag
            assert (base / "nodes_round1_server.csv").exists()
            assert (base / "transfer_round1.csv").exists()

    def test_rerun_reproduces_every_metric(self):
        cfg = self.make_config(seeds=[3], epsilons=[40])
        a, b = cmd_benchmark(cfg), cmd_benchmark(cfg)
        assert json.dumps(strip_timing(a), sort_keys=True) == \
            json.dumps(strip_timing(b), sort_keys=True)

    def test_doubling_the_data_does_not_blow_up_runtime(self):
        # near-linear cost in n on fixed params; min-of-3 damps timer noise
        def spec(n):
            return {"generator": {
                "kind": "gaussian-mixture",
                "components": [{"mean": [0.0, 0.0], "cov": 1.0, "n": n}],
                "scale_bounds": [0.0, 1.0],
            }}

        def best_of(n):
            cfg = self.make_config(dataset=spec(n), num_clients=2, seeds=[0])
            return min(timeit.timeit(lambda: cmd_benchmark(cfg), number=1)
                       for _ in range(3))

        small, large = best_of(2500), best_of(5000)
        assert large < 2.5 * small, f"{small:.3f}s -> {large:.3f}s"


# -------------------------------------------------------------------- plumbing

class TestReportPlumbing:
    def test_write_report_refuses_non_finite_numbers(self, tmp_path):
        with pytest.raises(ValueError):
            write_report({"x": math.inf}, tmp_path / "r.json")

    def test_validate_report_rejects_garbage(self):
        with pytest.raises(Exception):
            validate_report({"kind": "privacy-sweep"})

    def test_build_dataset_from_csv_path(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,label\n0.0,1.0,0\n1.0,0.0,1\n")
        ds = build_dataset({"path": str(path)}, 0)
        assert len(ds) == 2 and ds.dim == 2
