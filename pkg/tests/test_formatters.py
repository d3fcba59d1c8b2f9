import io

import numpy as np

from drtubes import formatters
from drtubes.benchmark import BenchmarkRow, PowerCurve
from drtubes.files import BenchmarkFile, PowerCurveFile, ShapeCurveFile
from drtubes.tubes import TubeEstimate


def test_number_round_trips():
    values = np.random.default_rng(1).normal(size=100)
    assert [float(formatters.number(v)) for v in values] == values.tolist()
    assert formatters.number(float("nan")) == "nan"


def test_percent():
    assert formatters.percent(0.4334) == "43.3"
    assert formatters.percent(0.00123, 2) == "0.12"


def test_pvalue():
    assert formatters.pvalue(0.5) == "0.5000"
    assert formatters.pvalue(3e-6) == "<0.0001"
    assert formatters.pvalue(0.0) == "0.0000"
    assert formatters.pvalue(0.0312, 0.0009) == "0.0312 (se 0.0009)"


def test_gamma():
    assert formatters.gamma([]) == "-"
    assert formatters.gamma(0.14) == "0.14"
    assert formatters.gamma([0.05, 4.0]) == "0.05, 4"


def test_shape_curve_file():
    stream = io.StringIO()
    ShapeCurveFile(stream).write_complete([("emax(0.2)", np.array([0.0, 1.0]), np.array([0.0, 1.0]))])
    assert stream.getvalue().splitlines() == ["curve,dose,value", "emax(0.2),0.0,0.0", "emax(0.2),1.0,1.0"]


def test_power_curve_file():
    curve = PowerCurve(
        gamma=np.array([0.1, 1.0]),
        arc=np.array([0.0, 1.0]),
        lr=(TubeEstimate(0.8, 0.001, 100, 0.2), TubeEstimate(0.75, 0.002, 100, 0.2)),
        local_gamma=np.array([0.1]),
        local=np.array([[0.8], [0.5]]),
        r_crit=0.2,
    )
    stream = io.StringIO()
    PowerCurveFile(stream).write_complete([curve])
    lines = stream.getvalue().splitlines()
    assert lines[0] == "curve,gamma,arc,power,mc_se"
    assert lines[1] == "LR,0.1,0.0,0.8,0.001"
    assert lines[3] == "optimal gamma=0.1,0.1,0.0,0.8,0.0"
    assert len(lines) == 5


def test_benchmark_file():
    row = BenchmarkRow(0.5, "1 (Linear)", TubeEstimate(0.433, 0.001, 100, 0.21), (0.5, 0.4, 0.3), 0.468, 0.0016)
    stream = io.StringIO()
    with BenchmarkFile(stream, ["1", "2", "3"]) as table:
        table.write_batch(row)
    assert stream.getvalue().splitlines() == [
        "power,scenario,LR,1,2,3,MCP-Mod,LR_mc_se,MCP-Mod_mc_se",
        "50,1 (Linear),43.3,50.0,40.0,30.0,46.8,0.10,0.16",
    ]
