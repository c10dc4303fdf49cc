"""Config-driven experiment harness and command-line interface."""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from coarserank.cli import main
from coarserank.engine import ClusterSpec
from coarserank.environments import (
    BernoulliInstance,
    BTLInstance,
    PreferenceMatrix,
    save_instance,
)
from coarserank.harness import (
    CSV_HEADER,
    AlgorithmSpec,
    ExperimentConfig,
    builtin_instance,
    complexity_report,
    config_from_dict,
    config_to_dict,
    emit_report,
    kernel_means,
    load_config,
    resolve_instance,
    run_experiment,
    save_config,
)

# Independently recomputed hardness of the builtin 15-arm instance at
# midpoint anchors (matches the frozen value in test_complexity).
H_MID_B = 46801.377327957394


def small_config(tmp_path: Path, **overrides) -> ExperimentConfig:
    base = dict(
        instance="B",
        algorithms=(AlgorithmSpec("lucb"), AlgorithmSpec("uniform")),
        boundaries=(3, 12, 15),
        epsilon=0.0,
        delta=0.1,
        trials=4,
        checkpoints=(60, 200, 800),
        master_seed=7,
        budget_cap=800,
        output_dir=str(tmp_path / "out"),
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestBuiltinInstance:
    def test_b_means_exact(self):
        inst = builtin_instance("B")
        assert isinstance(inst, BernoulliInstance)
        expected = (0.5,) + tuple(0.5 - a / 40 for a in range(2, 16))
        assert inst.means == expected
        assert inst.means[1] == 0.45
        assert inst.means[2] == 0.425
        assert inst.means[14] == 0.125
        assert len(inst.means) == 15

    def test_btl_uniform_example(self):
        inst = builtin_instance("btl-uniform(4, 3.77)")
        assert isinstance(inst, BTLInstance)
        assert inst.scores[0] == 0.0
        assert inst.scores[3] == 3.77
        assert inst.scores[1] == pytest.approx(1.2567, abs=5e-5)
        assert inst.scores[2] == pytest.approx(2.5133, abs=5e-5)

    def test_btl_uniform_spacing(self):
        scores = builtin_instance("btl-uniform(50, 3.77)").scores
        assert len(scores) == 50
        gaps = np.diff(scores)
        assert np.allclose(gaps, 3.77 / 49)

    def test_btl_uniform_whitespace_tolerant(self):
        a = builtin_instance("btl-uniform(5, 2.0)")
        b = builtin_instance("btl-uniform( 5 , 2.0 )")
        assert a.scores == b.scores

    @pytest.mark.parametrize(
        "name", ["C", "btl-uniform(1, 2.0)", "btl-uniform(5, 0)", "btl-uniform"]
    )
    def test_bad_names_rejected(self, name):
        with pytest.raises(ValueError):
            builtin_instance(name)

    def test_resolve_falls_back_to_file(self, tmp_path):
        path = tmp_path / "inst.json"
        save_instance(BernoulliInstance(means=(0.8, 0.2)), path)
        inst = resolve_instance(str(path))
        assert inst == BernoulliInstance(means=(0.8, 0.2))

    def test_resolve_unknown(self):
        with pytest.raises(ValueError, match="not a builtin"):
            resolve_instance("no-such-instance")


class TestKernelMeans:
    def test_direct_instance_passthrough(self):
        inst = BernoulliInstance(means=(0.9, 0.1))
        assert kernel_means(inst) == (0.9, 0.1)

    def test_matrix_instance_borda(self):
        p = np.array(
            [[0.5, 0.9, 0.8], [0.1, 0.5, 0.6], [0.2, 0.4, 0.5]]
        )
        scores = kernel_means(PreferenceMatrix(p))
        assert scores == pytest.approx((0.85, 0.35, 0.30))

    def test_btl_instance_borda(self):
        inst = builtin_instance("btl-uniform(4, 3.77)")
        scores = kernel_means(inst)
        assert sorted(scores) == list(scores)  # ascending latent scores
        assert scores[0] + scores[3] == pytest.approx(1.0)

    def test_unsupported_type(self):
        with pytest.raises(TypeError):
            kernel_means(object())


class TestExperimentConfig:
    def test_round_trip_through_dict(self, tmp_path):
        config = small_config(
            tmp_path,
            algorithms=(
                AlgorithmSpec("lucb"),
                AlgorithmSpec("lucb", label="loose", epsilon=0.3),
                AlgorithmSpec("uniform", budget_cap=500),
            ),
        )
        assert config_from_dict(config_to_dict(config)) == config

    def test_round_trip_through_file(self, tmp_path):
        config = small_config(tmp_path)
        path = tmp_path / "cfg.json"
        save_config(config, path)
        assert load_config(path) == config

    def test_string_algorithm_entries(self, tmp_path):
        data = config_to_dict(small_config(tmp_path))
        data["algorithms"] = ["lucb", "ar"]
        config = config_from_dict(data)
        assert [a.name for a in config.algorithms] == ["lucb", "ar"]

    def test_missing_field_named(self):
        with pytest.raises(ValueError, match="instance"):
            config_from_dict({"algorithms": ["lucb"], "boundaries": [1, 2]})

    def test_validation(self, tmp_path):
        with pytest.raises(ValueError, match="unknown algorithm"):
            AlgorithmSpec("quickest")
        with pytest.raises(ValueError, match="trials"):
            small_config(tmp_path, trials=0)
        with pytest.raises(ValueError, match="strictly increasing"):
            small_config(tmp_path, checkpoints=(100, 100))
        with pytest.raises(ValueError, match="positive"):
            small_config(tmp_path, checkpoints=(0, 100))
        with pytest.raises(ValueError, match="unique"):
            small_config(
                tmp_path, algorithms=(AlgorithmSpec("lucb"), AlgorithmSpec("lucb"))
            )
        with pytest.raises(ValueError, match="unknown algorithm fields"):
            config_from_dict(
                {
                    "instance": "B",
                    "algorithms": [{"name": "lucb", "rate": 2}],
                    "boundaries": [3, 12, 15],
                }
            )


class TestRunExperiment:
    def test_row_shape_and_order(self, tmp_path):
        config = small_config(tmp_path)
        result = run_experiment(config)
        assert len(result.rows) == 2 * 3
        assert [r.algorithm for r in result.rows] == ["lucb"] * 3 + ["uniform"] * 3
        assert [r.budget for r in result.rows[:3]] == [60, 200, 800]
        assert all(r.trials == 4 for r in result.rows)

    def test_reruns_identical(self, tmp_path):
        config = small_config(tmp_path)
        a = run_experiment(config)
        b = run_experiment(config)
        assert a.rows == b.rows
        assert a.terminations == b.terminations

    def test_jobs_do_not_change_results(self, tmp_path):
        config = small_config(tmp_path, trials=6)
        assert run_experiment(config, jobs=1).rows == run_experiment(config, jobs=3).rows

    def test_uniform_never_stops_naturally(self, tmp_path):
        result = run_experiment(small_config(tmp_path))
        by_name = {t.algorithm: t for t in result.terminations}
        assert by_name["uniform"].natural_stops == 0
        assert by_name["uniform"].tau_mean is None

    def test_trivial_epsilon_stops_at_initialization(self, tmp_path):
        """With tolerance > 1 every boundary settles on the first bounds."""
        config = small_config(
            tmp_path,
            algorithms=(AlgorithmSpec("lucb", epsilon=1.5),),
            budget_cap=None,
        )
        term = run_experiment(config).terminations[0]
        assert term.natural_stops == config.trials
        assert term.tau_mean == 15.0
        assert term.tau_min == term.tau_max == 15

    def test_uniform_requires_some_budget(self, tmp_path):
        config = small_config(
            tmp_path,
            algorithms=(AlgorithmSpec("uniform"),),
            checkpoints=(),
            budget_cap=None,
        )
        with pytest.raises(ValueError, match="budget"):
            run_experiment(config)

    def test_trial_failures_recorded_not_fatal(self, tmp_path, monkeypatch):
        import coarserank.fastsim as fastsim

        real = fastsim.run_trial

        def flaky(algorithm, means, spec, schedule, seed, trial, **kw):
            if trial == 1:
                raise RuntimeError("boom")
            return real(algorithm, means, spec, schedule, seed, trial, **kw)

        monkeypatch.setattr(fastsim, "run_trial", flaky)
        result = run_experiment(small_config(tmp_path))
        assert len(result.failures) == 2  # once per algorithm
        assert all(f.trial == 1 and "boom" in f.error for f in result.failures)
        assert all(r.trials == 3 for r in result.rows)

    def test_aborts_when_all_trials_fail(self, tmp_path, monkeypatch):
        import coarserank.fastsim as fastsim

        def broken(*args, **kw):
            raise RuntimeError("boom")

        monkeypatch.setattr(fastsim, "run_trial", broken)
        with pytest.raises(RuntimeError, match="all 4 trials"):
            run_experiment(small_config(tmp_path))

    def test_standard_error_shrinks_like_root_trials(self, tmp_path):
        """Quadrupling the trial count should halve the SE, within 25%."""
        kwargs = dict(
            algorithms=(AlgorithmSpec("lucb"),),
            checkpoints=(2000,),
            budget_cap=2000,
            master_seed=11,
        )
        se100 = run_experiment(
            small_config(tmp_path, trials=100, **kwargs)
        ).rows[0].kendall_tau_se
        se400 = run_experiment(
            small_config(tmp_path, trials=400, **kwargs)
        ).rows[0].kendall_tau_se
        assert se100 > 0 and se400 > 0
        assert 2.0 * 0.75 <= se100 / se400 <= 2.0 * 1.25


class TestEmitReport:
    @pytest.fixture()
    def emitted(self, tmp_path):
        config = small_config(tmp_path)
        result = run_experiment(config)
        report, err = complexity_report(config)
        assert err is None
        csv_path, manifest_path = emit_report(result, report)
        return config, result, csv_path, manifest_path

    def test_files_written(self, emitted):
        _, _, csv_path, manifest_path = emitted
        assert csv_path.is_file() and manifest_path.is_file()

    def test_csv_header_and_row_count(self, emitted):
        config, _, csv_path, _ = emitted
        lines = csv_path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) - 1 == len(config.algorithms) * len(config.checkpoints)

    def test_rerun_is_byte_identical(self, emitted, tmp_path):
        config, result, csv_path, manifest_path = emitted
        first = (csv_path.read_bytes(), manifest_path.read_bytes())
        report, _ = complexity_report(config)
        emit_report(run_experiment(config), report)
        assert (csv_path.read_bytes(), manifest_path.read_bytes()) == first

    def test_manifest_round_trips(self, emitted):
        config, _, _, manifest_path = emitted
        manifest = json.loads(manifest_path.read_text())
        assert config_from_dict(manifest["config"]) == config
        assert manifest["complexity"]["h_star_midpoint"] == pytest.approx(
            H_MID_B, rel=1e-12
        )
        assert manifest["versions"]["numpy"]
        assert manifest["kernel_means"][0] == 0.5

    def test_complexity_report_error_is_soft(self, tmp_path):
        # Two identical means make the strict-separation analysis impossible.
        path = tmp_path / "tied.json"
        save_instance(BernoulliInstance(means=(0.6, 0.6, 0.2)), path)
        config = small_config(
            tmp_path,
            instance=str(path),
            boundaries=(1, 3),
            algorithms=(AlgorithmSpec("uniform"),),
            checkpoints=(50,),
            budget_cap=50,
        )
        report, err = complexity_report(config)
        assert report is None
        assert err


class TestCli:
    def test_instance_emit_round_trips(self, capsys):
        assert main(["instance", "B", "--emit"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["kind"] == "direct"
        assert data["means"][:2] == [0.5, 0.45]

    def test_instance_summary(self, capsys):
        assert main(["instance", "btl-uniform(4, 3.77)"]) == 0
        out = capsys.readouterr().out
        assert "kind: btl" in out
        assert "items: 4" in out

    def test_complexity_json(self, capsys):
        assert main(["complexity", "B", "3,12,15", "--json"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["h_star_midpoint"] == pytest.approx(H_MID_B, rel=1e-12)
        assert data["boundaries"] == [3, 12, 15]

    def test_complexity_human_output(self, capsys):
        assert main(["complexity", "B", "3,12,15", "--optimize-anchors"]) == 0
        out = capsys.readouterr().out
        assert "H* (optimized anchors)" in out
        assert "sample bound (lower)" in out

    def test_run_with_overrides(self, tmp_path, capsys):
        config = small_config(tmp_path, trials=10)
        path = tmp_path / "cfg.json"
        save_config(config, path)
        out_dir = tmp_path / "cli-out"
        rc = main(
            [
                "run",
                str(path),
                "--trials",
                "2",
                "--seed",
                "99",
                "--output-dir",
                str(out_dir),
            ]
        )
        assert rc == 0
        lines = (out_dir / "results.csv").read_text().splitlines()
        assert len(lines) - 1 == 6
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["trials"] == 2
        assert manifest["config"]["master_seed"] == 99

    @pytest.mark.parametrize(
        "argv",
        [
            ["run", "does-not-exist.json"],
            ["complexity", "no-such-instance", "3,12,15"],
            ["complexity", "B", "3,x,15"],
            ["instance", "no-such-instance"],
        ],
    )
    def test_failures_exit_nonzero_with_one_line(self, argv, capsys):
        assert main(argv) != 0
        err = capsys.readouterr().err
        assert err.startswith("error: ")
        assert err.count("\n") == 1

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "coarserank.cli", "instance", "B"],
            capture_output=True,
            text=True,
            cwd=tmp_path,
        )
        assert proc.returncode == 0
        assert "items: 15" in proc.stdout

    def test_unknown_subcommand_exits_nonzero(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "coarserank.cli", "frobnicate"],
            capture_output=True,
            text=True,
            cwd=tmp_path,
        )
        assert proc.returncode != 0
