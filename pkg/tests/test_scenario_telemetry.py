import math

import numpy as np
import pytest

from cmrac import telemetry
from cmrac.exceptions import ConfigError
from cmrac.scenario import load_scenario, scenario_from_dict
from cmrac.simulation import simulate

SMALL = """
name = "small"
controller = "classical"
[plant]
A = [[0.0, 1.0], [-1.0, 0.5]]
B = [[0.0], [1.0]]
[reference]
A_r = [[0.0, 1.0], [-2.0, -3.0]]
B_r = [[0.0], [2.0]]
[reference.signal]
kind = "constant"
amplitudes = [1.0]
[constraints]
beta = 3.0
alpha1 = 2.0
u_max = 10.0
[gains.classical]
Gamma_x = 2.0
Gamma_r = 2.0
[simulation]
t_final = 0.2
"""


def write(tmp_path, text, name="s.toml"):
    p = tmp_path / name
    p.write_text(text)
    return p


# --- scenarios -------------------------------------------------------------------

def test_bundled_paper_scenario(paper):
    assert paper.name == "paper_sec4" and paper.controller == "constrained"
    assert paper.plant.A.shape == (7, 7) and paper.plant.B.shape == (7, 2)
    assert paper.plant.A[4, 4] == 20.2 and paper.plant.B[5, 1] == -4.25
    c = paper.constraints
    assert (c.beta, c.alpha1, c.k_b, c.u_max) == (2.0, 1.5, 0.5, 2.5) and math.isinf(c.alpha2)
    assert np.array_equal(paper.Q, np.eye(7))
    assert np.array_equal(paper.gains["constrained"]["Gamma_x"], 5 * np.eye(2))
    assert np.array_equal(paper.gains["constrained"]["Gamma_d"], np.eye(7))
    assert np.array_equal(paper.gains["classical"]["Gamma_r"], 25 * np.eye(2))
    assert paper.sim.dt == 1e-3 and paper.sim.t_final == 40.0 and paper.sim.log_stride == 10
    assert len(paper.sweep) >= 5
    assert all(np.linalg.norm(np.subtract(x0, xr0)) < 0.5 for _, x0, xr0 in paper.sweep)


def test_load_from_path(tmp_path):
    sc = load_scenario(write(tmp_path, SMALL))
    assert sc.name == "small" and sc.plant.n == 2
    assert np.array_equal(sc.gains["classical"]["Gamma_x"], 2 * np.eye(1))


@pytest.mark.parametrize(
    "old,new,field",
    [
        ("beta = 3.0", "beta = 1.0", "alpha1"),
        ("u_max = 10.0", "u_max = -1.0", "u_max"),
        ("A_r = [[0.0, 1.0], [-2.0, -3.0]]", "A_r = [[0.0, 1.0], [2.0, 3.0]]", "A_r"),
        ("B = [[0.0], [1.0]]", "B = [[0.0, 1.0]]", "B"),
        ("Gamma_x = 2.0", "Gamma_x = -2.0", "Gamma_x"),
        ("t_final = 0.2", "t_final = -1", "t_final"),
        ('kind = "constant"', 'kind = "square"', "kind"),
    ],
)
def test_invalid_configs_name_the_field(tmp_path, old, new, field):
    with pytest.raises(ConfigError) as info:
        load_scenario(write(tmp_path, SMALL.replace(old, new)))
    assert field in str(info.value)


def test_kb_consistency_and_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_scenario(write(tmp_path, SMALL.replace("u_max = 10.0", "u_max = 10.0\nk_b = 0.7")))
    with pytest.raises(ConfigError):
        load_scenario(tmp_path / "nope.toml")
    with pytest.raises(ConfigError):
        load_scenario(write(tmp_path, "not = [valid"))


def test_overrides(paper):
    sc = paper.with_overrides(dt=5e-4, u_max=math.inf, q_scale=2.0)
    assert sc.sim.dt == 5e-4 and math.isinf(sc.constraints.u_max)
    assert np.array_equal(sc.Q, 2 * np.eye(7))
    assert sc.cert.lambda_min == pytest.approx(2 * paper.cert.lambda_min, rel=1e-9)
    with pytest.raises(ConfigError):
        paper.with_overrides(q_scale=0.0)
    with pytest.raises(ConfigError):
        paper.with_overrides(dt=-1.0)


def test_scenario_from_dict_requires_gains():
    with pytest.raises(ConfigError):
        scenario_from_dict({"plant": {"A": [[-1.0]], "B": [[1.0]]}, "reference": {"A_r": [[-1.0]], "B_r": [[1.0]]},
                            "constraints": {"beta": 2.0, "alpha1": 1.0, "u_max": 1.0}})


# --- telemetry -------------------------------------------------------------------

def test_csv_header():
    assert telemetry.csv_header(2, 1) == [
        "t", "x1", "x2", "xr1", "xr2", "e_norm", "u1", "u_norm", "v1", "V", "Vdot", "barrier_ratio", "sat1"
    ]


def test_csv_roundtrip_is_exact(tmp_path, paper):
    res = simulate(paper.with_overrides(t_final=0.05), "constrained")
    path = telemetry.write_csv(res, tmp_path / "r.csv")
    cols = telemetry.read_csv(path)
    assert np.array_equal(cols["t"], res.log.t)
    assert np.array_equal(cols["x5"], np.array(res.log.x)[:, 4])
    assert np.array_equal(cols["V"], res.log.V)
    assert np.array_equal(cols["barrier_ratio"], res.log.barrier_ratio)
    assert set(np.unique(cols["sat1"])) <= {0.0, 1.0}


def test_summary_roundtrip_and_recheck(tmp_path, paper):
    sc = load_scenario(write(tmp_path, SMALL))
    res = simulate(sc, "classical")
    csv = telemetry.write_csv(res, tmp_path / "small.csv")
    doc = telemetry.summary_dict(res, sc, {"csv": csv.name}, seed=3)
    path = telemetry.write_summary(doc, tmp_path / "small_summary.toml")
    back = telemetry.read_summary(path)
    assert back["verdict"] == res.verdict and back["config"]["seed"] == "3"
    assert back["report"]["max_e_norm"] == res.report.max_e_norm
    assert telemetry.recheck(path) == []


def test_recheck_detects_tampering(tmp_path, run, paper):
    res = run("constrained")
    csv = telemetry.write_csv(res, tmp_path / "c.csv")
    doc = telemetry.summary_dict(res, paper, {"csv": csv.name})
    path = telemetry.write_summary(doc, tmp_path / "c_summary.toml")
    assert telemetry.recheck(path) == []
    doc["verdict"] = "pass"
    doc["report"]["max_u_norm"] = 1.0
    telemetry.write_summary(doc, path)
    problems = telemetry.recheck(path)
    assert any("verdict" in p for p in problems) and any("max_u_norm" in p for p in problems)
