import json
import math

import numpy as np
import pytest

from mfot.config import ConfigError, RunConfig, load_config, parse_config
from mfot.definetti import Mixture
from mfot.experiments import ExperimentSpec, run_experiment
from mfot.io import (
    canonical_json,
    measure_from_dict,
    measure_to_dict,
    persist,
    read_manifest,
    svg_line_plot,
    table_csv,
)
from mfot.measures import NBodyMeasure, PairMeasure, SupportGrid, product

CONFIG = """
[run]
seed = 99
budget = 50000
jobs = 1
output_dir = "results"
formats = ["json", "csv"]

[tolerances]
feas = 1e-10

[[experiment]]
kind = "convergence"
n_range = "2..5"
measure = { uniform = [0.0, 1.0] }

[[experiment]]
kind = "hierarchy"
name = "chain"
n = 4
k_range = [2, 3, 4]
measure = { points = [0.0, 1.0], rho = [2.0, 2.0] }
"""


class TestCanonicalJson:
    def test_sorted_and_nonfinite(self):
        s = canonical_json({"b": math.inf, "a": [np.float64(0.1), np.int64(3), -math.inf, math.nan]})
        assert s == '{"a":[0.1,3,"-inf","nan"],"b":"inf"}\n'

    def test_stable_floats(self):
        x = 0.1 + 0.2
        assert json.loads(canonical_json({"x": x}))["x"] == x


def test_measure_round_trips(uniform2, rng):
    g = SupportGrid.torus(4, 2.0)
    items = [
        uniform2,
        PairMeasure(uniform2.grid, [[0.25, 0.25], [0.25, 0.25]]),
        product(uniform2, 3),
        product(uniform2, 2).to_dense(),
        Mixture(g, rng.dirichlet(np.ones(4), size=2), [0.3, 0.7]),
    ]
    for m in items:
        back = measure_from_dict(json.loads(canonical_json(measure_to_dict(m))))
        assert type(back) is type(m)
        assert np.array_equal(back.weights, m.weights)
        assert back.grid.compatible(m.grid)
    assert isinstance(measure_from_dict({"points": [0, 1], "weights": [[0, 0.5], [0.5, 0]]}), PairMeasure)
    assert isinstance(measure_to_dict(items[2]), dict) and isinstance(items[2], NBodyMeasure)


def test_csv_quoting():
    text = table_csv(["a", "b"], [{"a": 'x,"y"', "b": 0.5}, {"a": None, "b": math.inf}])
    assert text == 'a,b\r\n"x,""y""",0.5\r\n,inf\r\n'


def test_svg_is_wellformed():
    import xml.etree.ElementTree as ET

    svg = svg_line_plot({"F": ([2, 3, 4], [0.1, 0.2, math.inf])}, title="a<b", hlines=[("mf", 0.3)])
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg") and root.get("version") == "1.1"
    assert "a&lt;b" in svg


def test_persist_determinism(tmp_path):
    spec = ExperimentSpec("convergence", n_range="2..6")
    m1 = persist(run_experiment(spec, jobs=1, seed=5), tmp_path / "a")
    m2 = persist(run_experiment(spec, jobs=2, seed=5), tmp_path / "b")
    assert m1 == m2
    assert (tmp_path / "a" / "manifest.json").read_bytes() == (tmp_path / "b" / "manifest.json").read_bytes()
    assert m1["data_files"] == 2
    assert read_manifest(tmp_path / "a") == json.loads(canonical_json(m1))


def test_persist_empty(tmp_path):
    class Empty:
        timings = None

        def to_dict(self):
            return {}

        def tables(self):
            return {}

        def plots(self):
            return {}

    man = persist(Empty(), tmp_path / "e")
    assert man["data_files"] == 0 and [f["path"] for f in man["files"]] == ["result.json"]


def test_persist_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        persist(run_experiment(ExperimentSpec("convergence", n_range="2..3"), jobs=1), blocker / "sub")


class TestConfig:
    def test_parse(self):
        cfg = parse_config(CONFIG)
        assert cfg.seed == 99 and cfg.budget == 50000 and cfg.jobs == 1
        assert cfg.tolerances.feas == 1e-10 and cfg.tolerances.gap == 1e-8
        assert [e.kind for e in cfg.experiments] == ["convergence", "hierarchy"]
        assert cfg.experiments[0].n_range == [2, 3, 4, 5]

    def test_round_trip(self):
        cfg = parse_config(CONFIG)
        again = parse_config(cfg.to_toml())
        assert again == cfg
        assert parse_config(again.to_toml()) == again

    def test_json_alternative(self, tmp_path):
        cfg = parse_config(CONFIG)
        p = tmp_path / "c.json"
        p.write_text(json.dumps(cfg.to_dict()))
        assert load_config(p) == cfg

    @pytest.mark.parametrize("text", [
        "[run]\nseeds = 1\n",
        "[tolerances]\nfeasibility = 1e-9\n",
        "[other]\n",
        '[[experiment]]\nkind = "convergence"\ncolour = "red"\n',
        '[[experiment]]\nkind = "teleport"\n',
        '[run]\nformats = ["pdf"]\n',
        "[run]\nbudget = -1\n",
        "[run\n",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "missing.toml")

    def test_defaults(self):
        cfg = parse_config("")
        assert cfg == RunConfig()
