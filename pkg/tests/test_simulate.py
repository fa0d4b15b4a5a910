import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contractsos.contraction import DynSystem
from contractsos.polyalg import jacobian, parse_polynomial
from contractsos.simulate import (
    Trajectory, build_unidirectional_coupling, driven_subsystem, integrate, jet_with_delta,
    parameter_scan, phase_svg, rk4, settle_check, sync_distance,
)

from conftest import bundled


def system(exprs, names):
    return DynSystem(names, [parse_polynomial(e, names) for e in exprs])


DECAY = system(["-x"], ("x",))
HARMONIC = system(["x2", "-x1"], ("x1", "x2"))


def test_exponential_decay():
    tr = integrate(DECAY, [1.0], 1.0, 1e-3)
    assert tr.final[0] == pytest.approx(math.exp(-1), abs=1e-6)
    assert len(tr.times) == 1001 and tr.times[-1] == pytest.approx(1.0)


def test_harmonic_period():
    tr = integrate(HARMONIC, [1.0, 0.0], 2 * math.pi, 2 * math.pi / 6000)
    assert tr.final[0] == pytest.approx(1.0, abs=1e-4)
    assert tr.final[1] == pytest.approx(0.0, abs=1e-4)


def test_rk4_order():
    errs = [abs(integrate(DECAY, [1.0], 1.0, dt).final[0] - math.exp(-1)) for dt in (1e-2, 5e-3, 2.5e-3)]
    assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8


@settings(max_examples=15, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_time_reversal(a, b):
    fwd = integrate(HARMONIC, [a, b], 3.0, 1e-3)
    f = HARMONIC.function()
    back = rk4(lambda x: -np.asarray(f(x)), fwd.final, 3.0, 1e-3)
    assert np.allclose(back.final, [a, b], atol=1e-6)


def test_integrate_validation():
    with pytest.raises(ValueError):
        integrate(DECAY, [1.0], 1.0, 0.0)
    with pytest.raises(ValueError):
        integrate(DECAY, [1.0], 1e-4, 1e-3)
    with pytest.raises(ValueError):
        integrate(DECAY, [1.0, 2.0], 1.0, 1e-3)
    with pytest.raises(ValueError):
        integrate(driven_subsystem(1, 1, -1, 1.5), [0.0, 0.0], 1.0, 1e-3)


def test_blow_up_is_flagged():
    tr = integrate(system(["x^2"], ("x",)), [1.0], 5.0, 1e-3)
    assert tr.blew_up
    assert tr.times[-1] <= 1.01      # exact solution 1/(1 - t)
    assert np.all(np.isfinite(tr.states))
    assert not settle_check(tr, 0.1, 1.0).settled


def test_vdp_limit_cycle():
    tr = integrate(bundled("vdp"), [0.1, 0.0], 100.0, 1e-3, {"k": -0.5})
    _, xs = tr.window(50.0, 100.0)
    amp = np.abs(xs[:, 0]).max()
    assert 0.5 <= amp <= 4.0
    assert not settle_check(tr, 10.0, 1e-3).settled


def test_zero_coupling_decouples():
    sys = build_unidirectional_coupling(1.0, 1.0, -1.0, 0.0)
    vdp = bundled("vdp").with_nominal(k=-1.0)
    tr = integrate(sys, [1.0, 0.0, -1.0, 0.5], 5.0, 1e-3)
    a = integrate(vdp, [1.0, 0.0], 5.0, 1e-3)
    b = integrate(vdp, [-1.0, 0.5], 5.0, 1e-3)
    assert np.allclose(tr.states[:, :2], a.states, atol=1e-12)
    assert np.allclose(tr.states[:, 2:], b.states, atol=1e-12)


def test_coupled_y_jacobian():
    a, w, k, eta = 1.3, 0.7, -1.0, 1.5
    sys = build_unidirectional_coupling(a, w, k, eta)
    J = jacobian(sys.field_at())
    names = sys.states
    c = {"a": a, "w": w, "s": k + eta}
    expect = [["0", "1"], ["-w^2 - 2*a*y1*y2", "-a*(y1^2 + s)"]]
    for i in range(2):
        for j in range(2):
            got = J[2 + i, 2 + j]
            want = parse_polynomial(expect[i][j], names, c)
            assert (got - want).is_zero() or max(abs(v) for v in (got - want).terms.values()) <= 1e-14


def test_coupling_rejects_bad_parameters():
    with pytest.raises(ValueError):
        build_unidirectional_coupling(0.0, 1.0, -1.0, 1.5)


def test_sync_identical_start_is_exact():
    sys = build_unidirectional_coupling(1.0, 1.0, -1.0, 1.5)
    tr = integrate(sys, [1.0, 0.3, 1.0, 0.3], 20.0, 1e-3)
    # the y equation groups the coupling terms differently: roundoff only
    assert sync_distance(tr).max() <= 1e-12


def test_sync_distance_needs_four_states():
    with pytest.raises(ValueError):
        sync_distance(integrate(DECAY, [1.0], 1.0, 1e-2))


def test_settle_cases():
    still = integrate(system(["0*x"], ("x",)), [0.3], 2.0, 1e-2)
    r = settle_check(still, 1.0, 1e-12)
    assert r.settled and r.drift == 0.0
    osc = integrate(HARMONIC, [1.0, 0.0], 20.0, 1e-2)
    assert not settle_check(osc, 10.0, 1e-3).settled
    with pytest.raises(ValueError):
        settle_check(osc, 30.0, 1e-3)


def test_scan_matches_serial():
    sys = jet_with_delta()
    vals = [-0.5, -1.1]
    rows = parameter_scan(sys, "delta", vals, (0.5, 0.5), t_end=100.0, dt=1e-2, window=10.0, tol=1e-3)
    assert [r[0] for r in rows] == vals
    assert rows[0][1] and not rows[1][1]
    par = parameter_scan(sys, "delta", vals, (0.5, 0.5), t_end=100.0, dt=1e-2, window=10.0, tol=1e-3, jobs=2)
    assert par == rows


def test_csv_header_and_downsampling():
    tr = integrate(HARMONIC, [1.0, 0.0], 1.0, 0.1)
    buf = io.StringIO()
    tr.to_csv(buf, every=3, header=["seed = 1"])
    lines = buf.getvalue().splitlines()
    assert lines[:3] == ["format = 1", "# seed = 1", "t,x1,x2"]
    rows = lines[3:]
    assert len(rows) == len(range(0, 11, 3))
    assert float(rows[1].split(",")[0]) == pytest.approx(0.3)


def test_csv_marks_blow_up():
    tr = integrate(system(["x^2"], ("x",)), [1.0], 5.0, 1e-2)
    buf = io.StringIO()
    tr.to_csv(buf)
    assert "# blew_up = 1" in buf.getvalue().splitlines()


def test_trajectory_shape_check():
    with pytest.raises(ValueError):
        Trajectory(np.arange(3.0), np.zeros((2, 1)))


def test_svg_is_self_describing():
    tr = integrate(HARMONIC, [1.0, 0.0], 6.3, 1e-2)
    svg = phase_svg(tr, header=["seed = 1"])
    assert svg.startswith('<?xml version="1.0"')
    assert "<!-- format = 1 -->" in svg and "<polyline" in svg and svg.rstrip().endswith("</svg>")
    assert svg == phase_svg(tr, header=["seed = 1"])
