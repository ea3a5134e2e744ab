# Copyright 2026 The dnsexfil Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import math
import random

import pytest

import dnsexfil


def test_entropy_conventions():
    assert dnsexfil.ldh_entropy("aaaa") == 0.0
    assert dnsexfil.ldh_entropy("abab") == 1.0
    assert dnsexfil.ldh_entropy("") == 0.0


def test_primary_domain():
    assert dnsexfil.primary_domain("Mail.Example.CO.UK") == "example.co.uk."
    assert dnsexfil.primary_domain("a.b.example.com.") == "example.com."


def test_window_features():
    qnames = [f"host{i}.example.com" for i in range(10)] + ["host0.example.com"]
    types = ["A"] * 5 + ["TXT"] * 6
    f = dnsexfil.window_features(qnames, types)["example.com."]
    assert f["vol"] == 10
    assert f["uniq"] == pytest.approx(10 / 11)
    assert f["ni"] == pytest.approx(5 / 11)
    with pytest.raises(dnsexfil.Error):
        dnsexfil.window_features(qnames, ["A"])


def test_path_adjustment():
    assert dnsexfil.path_adjustment(1) == 0.0
    assert dnsexfil.path_adjustment(256) == pytest.approx(10.244770920, abs=1e-9)


def test_model_round_trip():
    rng = random.Random(3)
    rows = [[rng.gauss(0, 1) for _ in range(3)] for _ in range(1000)]
    model = dnsexfil.Model.train(rows, n_trees=50, nu=0.01, seed=4)
    assert model.n_trees == 50
    scores = model.score_all(rows)
    assert all(0.0 < s < 1.0 for s in scores)
    assert sum(s > model.threshold for s in scores) <= 0.01 * len(rows)
    assert model.score([9.0, -9.0, 9.0]) > max(scores)
    back = dnsexfil.Model.load(model.save())
    assert back.score_all(rows) == scores
    with pytest.raises(dnsexfil.Error):
        dnsexfil.Model.train(rows[:10])
    with pytest.raises(dnsexfil.Error):
        dnsexfil.Model.load("{}")


def test_pipeline(tmp_path):
    base = dict(users=300, catalog_size=1500, n_trees=40, psi=64, nu=0.01, out_dir=tmp_path / "out")
    summary, log = dnsexfil.simulate(
        dnsexfil.config_text(**base, inject=False, duration_hours=8, corpus=tmp_path / "train.csv.gz"))
    assert summary["records"] > 0
    assert "records" in log
    model = tmp_path / "model.json"
    summary, _ = dnsexfil.train(
        dnsexfil.config_text(**base, corpus=tmp_path / "train.csv.gz", model=model))
    assert summary["samples"] >= 64
    assert math.isfinite(summary["threshold"])
    dnsexfil.simulate(dnsexfil.config_text(**base, seed=2, duration_hours=4,
                                           start_ms=1509955200000, corpus=tmp_path / "test.csv.gz"))
    summary, _ = dnsexfil.detect(
        dnsexfil.config_text(**base, corpus=tmp_path / "test.csv.gz", model=model))
    assert "tunnelbridge.net." in summary["blocked"]


def test_bad_config():
    with pytest.raises(dnsexfil.Error):
        dnsexfil.train("no_such_key = 1\n")
