import json

import pytest
from fastapi.testclient import TestClient

from convspec import __version__
from convspec.service import app, execute_scenario

from conftest import SCENARIO_DIR, load_scenario

client = TestClient(app)


def test_health_and_version():
    assert client.get("/health").json() == {"status": "ok"}
    assert client.get("/version").json() == {"version": __version__}


def test_validate_ok():
    cfg = load_scenario("essential_gaussian_well.json")
    resp = client.post("/scenario/validate", json={"config": cfg})
    assert resp.status_code == 200
    assert resp.json() == {"valid": True}


def test_validate_bad_config_is_400():
    cfg = dict(load_scenario("essential_gaussian_well.json"), mystery=1)
    resp = client.post("/scenario/validate", json={"config": cfg})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "ConfigError"


def test_run_scenario():
    cfg = load_scenario("essential_gaussian_well.json")
    resp = client.post("/scenario/run", json={"config": cfg})
    assert resp.status_code == 200
    body = resp.json()
    assert body["certificate_failed"] is False
    assert body["report"]["results"]["gaps"] == [[-0.5, 0.0]]


def test_run_maps_sizing_error_to_422():
    cfg = {
        "name": "too-coarse",
        "kernel": {"builtin": "gaussian", "dim": 1},
        "potential": {"builtin": "zero", "dim": 1},
        "grid": {"dim": 1, "half_width": 8.0, "n": 64},
        "task": "weyl",
        "params": {"mode": "symbol_point", "lambda": 0.6065306597126334,
                   "n_list": [8, 64]},
    }
    resp = client.post("/scenario/run", json={"config": cfg})
    assert resp.status_code == 422
    assert resp.json()["detail"]["kind"] == "SizingError"


def test_run_flags_failed_certificate():
    cfg = load_scenario("certify_dual.json")
    cfg["params"] = dict(cfg["params"], r0=1.0)
    resp = client.post("/scenario/run", json={"config": cfg,
                                              "expect_pass": True})
    assert resp.status_code == 200
    assert resp.json()["certificate_failed"] is True


def test_sweep_endpoint():
    cfg = {
        "name": "mini-sweep",
        "kernel": {"builtin": "gaussian", "dim": 1},
        "potential": {"builtin": "power_tail", "dim": 1, "params": {"gamma": 1.0}},
        "grid": {"dim": 1, "half_width": 40.0, "n": 128},
        "task": "sweep",
        "params": {"half_widths": [20, 40], "spacing": 0.625,
                   "base_task": "eigs",
                   "base_params": {"mode": "above", "threshold": 1.0000001,
                                   "k": 4, "classify": False}},
        "seed": 11,
    }
    resp = client.post("/sweep/run", json={"config": cfg, "threads": 2})
    assert resp.status_code == 200
    points = resp.json()["results"]["points"]
    assert [p["status"] for p in points] == ["ok", "ok"]


def test_execute_scenario_matches_http():
    cfg = load_scenario("essential_gaussian_well.json")
    direct = execute_scenario(cfg)
    via_http = client.post("/scenario/run", json={"config": cfg}).json()
    assert direct.report["determinism_hash"] == \
        via_http["report"]["determinism_hash"]
