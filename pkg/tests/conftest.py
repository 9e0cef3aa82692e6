import copy

import pytest
import tomli

from ftconsensus.scenario import bundled_path, scenario_from_dict


def bundled_dict(name: str = "reference_autonomous") -> dict:
    return tomli.loads(bundled_path(name).read_text())


def single_follower_dict(**sections) -> dict:
    """One follower linked to the leader, short phase times, coarse step.

    ``sections`` maps a section name to key overrides.
    """
    data = {
        "name": "single",
        "topology": {"n_followers": 1, "edges": [], "leader_links": [1.0]},
        "leader": {"u0": {"kind": "cos", "amplitude": 4.0, "freq": 2.0}, "u0_max": 4.0, "x0": -1.0, "v0": 0.0},
        "disturbance": {"kind": "sin", "amplitude": 1.0, "freq": 40.0, "phase_step": 0.1, "delta": 1.0},
        "agents": {"x": [2.0], "v": [0.0], "xhat": [1.0], "vhat": [1.5]},
        "observer": {"alpha": 1.0, "beta": 2.0, "p": 1.5, "q": 3.0, "k": 0.5, "T_c1": 0.05, "T_c2": 0.15},
        "controller": {
            "alpha1": 0.25, "beta1": 4.0, "alpha2": 0.25, "beta2": 4.0, "p": 1.5, "q": 3.0, "k": 0.5,
            "That_c1": 0.2, "That_c2": 0.2,
        },
        "sim": {"dt": 1e-4, "horizon": 0.6},
    }
    data = copy.deepcopy(data)
    for section, values in sections.items():
        data.setdefault(section, {}).update(values)
    return data


def single_follower(strict: bool = True, **sections):
    return scenario_from_dict(single_follower_dict(**sections), strict=strict)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record ``(criterion, passed, detail)`` for the end-of-run acceptance summary."""
    log = request.config.stash.setdefault(ACCEPTANCE, {})

    def record(number: int, passed: bool, detail: str):
        log.setdefault(number, []).append((bool(passed), detail))
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(ACCEPTANCE, {})
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(log):
        entries = log[number]
        passed = all(ok for ok, _ in entries)
        detail = "; ".join(d for _, d in entries)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
