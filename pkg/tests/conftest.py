import json
import warnings
from pathlib import Path

import pytest

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


def load_scenario(name):
    path = SCENARIO_DIR / name
    if path.suffix in (".yaml", ".yml"):
        import yaml

        return yaml.safe_load(path.read_text())
    return json.loads(path.read_text())


def scenario_paths():
    return sorted(list(SCENARIO_DIR.glob("*.json")) + list(SCENARIO_DIR.glob("*.yaml")))


@pytest.fixture(autouse=True)
def _quiet_aliasing_warnings():
    # a few deliberate coarse-grid constructions in the tests trip the
    # under-resolved-kernel warning; keep the output readable
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="kernel under-resolved")
        yield


@pytest.fixture(scope="session")
def shipped_reports():
    """Run every shipped scenario once; reused by the acceptance tests."""
    from convspec.scenarios import run_scenario

    reports = {}
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="kernel under-resolved")
        for path in scenario_paths():
            cfg = load_scenario(path.name)
            reports[path.name] = run_scenario(cfg)
    return reports
