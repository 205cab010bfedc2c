import csv
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from dflsim.cli import main
from dflsim.config import parse_config
from dflsim.metrics import EpochMetrics, compute_aal
from dflsim.plots import (
    PlotError,
    aal_bars_from_summary,
    plot_csv,
    render_aal_bars,
    render_accuracy_plot,
)
from dflsim.sweep import run_experiment

TINY_CONFIG = """
name: tiny
output_dir: {out}
graph: {{family: dg, n: 10, param: 0.6}}
adversary_count: 2
epochs: 8
t_attack: 3
epsilon: 500
data: {{classes: 5, feature_dim: 8, samples_per_node: 10, test_samples: 100}}
sweep:
  strategy: [random, maxspan]
  seed: [1, 2]
"""


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("tiny")
    config = root / "tiny.yaml"
    out = root / "out"
    config.write_text(TINY_CONFIG.format(out=out))
    spec = parse_config(config)
    result = run_experiment(spec)
    return config, out, result


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestRunExperiment:
    def test_all_cells_complete(self, tiny_run):
        _, out, result = tiny_run
        assert result.n_cells == 4 and result.n_failed == 0
        assert len(list((out / "traces").glob("*.csv"))) == 8

    def test_trace_columns_and_variants(self, tiny_run):
        _, out, _ = tiny_run
        rows = read_csv(next(iter(sorted((out / "traces").glob("*__attacked.csv")))))
        assert set(rows[0]) == {"epoch", "run_id", "variant",
                                "avg_honest_test_acc", "n_honest_alive"}
        assert {r["variant"] for r in rows} == {"attacked"}
        assert len(rows) == 9  # epochs 0..8

    def test_summary_matches_recomputed_aal(self, tiny_run):
        # every summary row's AAL equals compute_aal re-run on its traces
        _, out, _ = tiny_run
        for row in read_csv(out / "summary.csv"):
            run_id = (f"{row['strategy']}_dg0.6_n{row['n']}"
                      f"_adv{row['n_advs']}_eps500_t3_k5_fnone_s{row['seed']}")
            def load(variant):
                return [EpochMetrics(epoch=int(r["epoch"]),
                                     accuracy=float(r["avg_honest_test_acc"]),
                                     n_honest_alive=int(r["n_honest_alive"]))
                        for r in read_csv(out / "traces"
                                          / f"{run_id}__{variant}.csv")]
            expect = compute_aal(load("baseline"), load("attacked"), 3)
            assert float(row["aal"]) == expect

    def test_aggregate_table(self, tiny_run):
        _, out, _ = tiny_run
        agg = read_csv(out / "summary_agg.csv")
        assert len(agg) == 2  # one row per strategy
        assert {r["strategy"] for r in agg} == {"random", "maxspan"}
        assert all(int(r["runs"]) == 2 for r in agg)

    def test_graph_cache_reused(self, tiny_run):
        _, out, _ = tiny_run
        graphs = sorted(p.name for p in (out / "graphs").glob("*.txt"))
        assert graphs == ["dg0.6_n10_s1.txt", "dg0.6_n10_s2.txt"]

    def test_byte_identical_rerun(self, tiny_run, tmp_path):
        config, out, _ = tiny_run
        spec = parse_config(config)
        second = tmp_path / "again"
        run_experiment(spec, output_dir=second)
        for path in sorted(out.rglob("*.csv")):
            twin = second / path.relative_to(out)
            assert twin.read_bytes() == path.read_bytes(), path.name

    def test_worker_pool_matches_serial(self, tiny_run, tmp_path):
        config, out, _ = tiny_run
        spec = parse_config(config)
        pooled = tmp_path / "pooled"
        run_experiment(spec, output_dir=pooled, workers=2)
        assert (pooled / "summary.csv").read_bytes() == \
               (out / "summary.csv").read_bytes()

    def test_empty_sweep_succeeds(self, tmp_path):
        config = tmp_path / "empty.yaml"
        config.write_text("name: empty\noutput_dir: %s\n"
                          "adversary_count: 1\nsweep: {seed: []}"
                          % (tmp_path / "out"))
        result = run_experiment(parse_config(config))
        assert result.n_cells == 0 and not result.all_failed
        assert read_csv(result.summary_path) == []

    def test_workers_env_variable(self, monkeypatch):
        from dflsim.sweep import resolve_workers

        monkeypatch.delenv("DFLSIM_WORKERS", raising=False)
        assert resolve_workers() == 1
        monkeypatch.setenv("DFLSIM_WORKERS", "3")
        assert resolve_workers() == 3
        assert resolve_workers(workers=2) == 2  # explicit argument wins

    def test_all_cells_failing_gives_exit_1(self, tmp_path):
        # an edge probability this small admits no strongly connected
        # graph, so every cell fails at graph generation
        config = tmp_path / "impossible.yaml"
        config.write_text(
            "name: impossible\noutput_dir: %s\nadversary_count: 1\n"
            "graph: {family: er, n: 12, param: 0.005}\nepochs: 2\n"
            "t_attack: 1\nsweep: {seed: [1, 2]}"
            % (tmp_path / "out"))
        assert main(["run", str(config)]) == 1
        failures = read_csv(tmp_path / "out" / "failures.csv")
        assert len(failures) == 2
        assert "strongly connected" in failures[0]["error"]


class TestPlots:
    def test_accuracy_plot_single_polyline(self, tiny_run, tmp_path):
        _, out, _ = tiny_run
        trace = sorted((out / "traces").glob("maxspan*s1__attacked.csv"))[0]
        svg_path = tmp_path / "acc.svg"
        plot_csv([str(trace)], "accuracy-vs-epoch", str(svg_path))
        root = ET.fromstring(svg_path.read_text())
        ns = "{http://www.w3.org/2000/svg}"
        polylines = root.findall(f".//{ns}polyline")
        assert len(polylines) == 1
        ys = [float(pair.split(",")[1])
              for pair in polylines[0].get("points").split()]
        # y pixels must stay inside the [0, 1] accuracy band of the canvas
        assert all(24 - 1e-9 <= y <= 432 + 1e-9 for y in ys)

    def test_plot_determinism(self, tiny_run, tmp_path):
        _, out, _ = tiny_run
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        plot_csv([str(out / "summary.csv")], "aal-bars", str(a))
        plot_csv([str(out / "summary.csv")], "aal-bars", str(b))
        assert a.read_bytes() == b.read_bytes()
        assert b"timestamp" not in a.read_bytes().lower()

    def test_bar_heights_proportional_to_means(self, tiny_run, tmp_path):
        _, out, _ = tiny_run
        bars = aal_bars_from_summary([str(out / "summary.csv")])
        svg_path = tmp_path / "bars.svg"
        plot_csv([str(out / "summary.csv")], "aal-bars", str(svg_path))
        root = ET.fromstring(svg_path.read_text())
        ns = "{http://www.w3.org/2000/svg}"
        rects = [r for r in root.findall(f".//{ns}rect")
                 if r.get("class") == "bar"]
        assert len(rects) == len(bars)
        # pixel-coordinate arithmetic: height ratios match AAL ratios
        span = max(max(v for _, v in bars), 0.0) - min(min(v for _, v in bars), 0.0)
        for rect, (_, value) in zip(rects, bars):
            expect = abs(value) / span * 408  # plot height in px
            assert float(rect.get("height")) == pytest.approx(expect, abs=0.011)

    def test_bar_order_follows_summary(self, tiny_run, tmp_path):
        _, out, _ = tiny_run
        bars = aal_bars_from_summary([str(out / "summary.csv")])
        assert [label for label, _ in bars] == ["random", "maxspan"]

    def test_malformed_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("this,is\nnot,a_summary\n")
        with pytest.raises(PlotError):
            plot_csv([str(bad)], "aal-bars", str(tmp_path / "x.svg"))

    def test_render_empty_series_rejected(self):
        with pytest.raises(PlotError):
            render_accuracy_plot([])
        with pytest.raises(PlotError):
            render_aal_bars([])


class TestCliVerbs:
    def test_run_and_exit_codes(self, tmp_path):
        config = tmp_path / "c.yaml"
        out = tmp_path / "out"
        config.write_text(TINY_CONFIG.format(out=out).replace(
            "seed: [1, 2]", "seed: [1]"))
        assert main(["run", str(config)]) == 0
        assert (out / "summary.csv").exists()

    def test_run_bad_config_exit_2(self, tmp_path):
        config = tmp_path / "bad.yaml"
        config.write_text("name: bad\nstrategy: nope\n")
        assert main(["run", str(config)]) == 2

    def test_plot_verb(self, tiny_run, tmp_path):
        _, out, _ = tiny_run
        svg = tmp_path / "bars.svg"
        assert main(["plot", str(out / "summary.csv"), "--kind", "aal-bars",
                     "-o", str(svg)]) == 0
        assert svg.exists()

    def test_plot_missing_input_exit_1(self, tmp_path):
        assert main(["plot", str(tmp_path / "nope.csv"), "--kind", "aal-bars",
                     "-o", str(tmp_path / "x.svg")]) == 1

    def test_verify_lemma_short_horizon(self, tmp_path):
        config = tmp_path / "lemma.yaml"
        config.write_text("horizon: 2\ntrials: 60\n")
        report = tmp_path / "report.csv"
        assert main(["verify-lemma", str(config), "-o", str(report)]) == 0
        rows = read_csv(report)
        assert len(rows) == 9
        assert set(rows[0]) == {"scenario_id", "n", "d", "n_advs",
                                "delta_min", "alpha", "T", "trials", "lhs",
                                "rhs", "margin", "stderr", "pass"}
        assert all(r["pass"] == "true" for r in rows)

    def test_verify_lemma_bad_config_exit_2(self, tmp_path):
        config = tmp_path / "lemma.yaml"
        config.write_text("horizons: 2\n")
        assert main(["verify-lemma", str(config)]) == 2

    def test_complexity_probe_verb(self, capsys):
        assert main(["complexity-probe", "--sizes", "40", "80",
                     "--repeats", "2"]) == 0
        assert "slope" in capsys.readouterr().out

    def test_presets_list(self, capsys):
        assert main(["presets", "list"]) == 0
        out = capsys.readouterr().out
        assert "connectivity-dg" in out and "300" in out

    def test_run_preset_by_name_resolves(self):
        # presets are accepted as the config argument; expansion is checked
        # without executing the 300-cell sweep
        from dflsim.presets import PRESETS
        assert "connectivity-dg" in PRESETS
