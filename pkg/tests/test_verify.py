import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contractsos.contraction import DynSystem, MetricCertificate
from contractsos.polyalg import PolyMatrix, Polynomial, parse_polynomial, rate_matrix
from contractsos.verify import (
    DisplacementPair, Region, ShrinkError, eigen_bounds, format_report, lyapunov_check,
    rate_of_change_check, sample_eigen_bounds, symmetric_part_max_eig, write_csv,
)

X = ("x1", "x2")


def system(exprs, names):
    return DynSystem(names, [parse_polynomial(e, names) for e in exprs])


def scalar_cert(m=1.0, beta=0.0):
    M = PolyMatrix.from_numbers(("x",), [[m]])
    return MetricCertificate(M, M.scale(-2.0 + beta), {}, 0.0, beta, 0)


# -- regions ----------------------------------------------------------------------

def test_region_parse_forms():
    assert Region.parse(X, "-1:2").lower == (-1.0, -1.0)
    r = Region.parse(X, "-1:1,0:3")
    assert r.lower == (-1.0, 0.0) and r.upper == (1.0, 3.0)
    assert Region.parse(X, "1.5").upper == (1.5, 1.5)
    assert Region.parse(X, "-1.5").lower == (-1.5, -1.5)
    with pytest.raises(ValueError):
        Region.parse(X, "0:1,0:1,0:1")
    with pytest.raises(ValueError):
        Region.parse(X, "a:b")


def test_region_validation():
    with pytest.raises(ValueError):
        Region(X, (1.0, 0.0), (0.0, 1.0))
    with pytest.raises(ValueError):
        Region.box(X, grid=1)


def test_region_points_deterministic():
    r = Region.box(X, 1.0, grid=3, samples=5)
    pts = r.points()
    assert pts.shape == (9 + 5, 2)
    assert np.array_equal(pts[:9], sorted(pts[:9].tolist()))
    assert np.array_equal(pts, Region.box(X, 1.0, grid=3, samples=5).points())
    assert not np.array_equal(pts, Region.box(X, 1.0, grid=3, samples=5, seed=1).points())


# -- eigenvalue sampling -------------------------------------------------------------

def test_identity_bounds():
    I = PolyMatrix.identity(X, 2)
    b = eigen_bounds(I, I.scale(-1.0), Region.box(X, 3.0, grid=5, samples=10))
    assert (b.min_eig_M, b.max_eig_R) == (1.0, -1.0)
    # ties go to the lexicographically smallest point
    assert np.array_equal(b.worst_M, [-3.0, -3.0])


def test_region_must_match_metric():
    I = PolyMatrix.identity(X, 2)
    with pytest.raises(ValueError):
        eigen_bounds(I, I, Region.box(("a", "b")))


def analytic_metric(a, w, s):
    names = ("y1", "y2")
    c = {"a": a, "w": w, "s": s}
    m11 = parse_polynomial("w^2 + a^2*(y1^2 + s)^2", names, c)
    m12 = parse_polynomial("a*(y1^2 + s)", names, c)
    M = PolyMatrix([[m11, m12], [m12, Polynomial.constant(names, 1.0)]], symmetric=True)
    f = [parse_polynomial("y2", names), parse_polynomial("-a*(y1^2 + s)*y2 - w^2*y1", names, c)]
    return M, rate_matrix(M, f)


def test_analytic_semi_metric_bounds():
    M, R = analytic_metric(1.0, 1.0, 0.5)
    b = eigen_bounds(M, R, Region.box(("y1", "y2"), 2.0))
    assert b.min_eig_M > 0
    assert abs(b.max_eig_R) <= 1e-12
    assert b.passes(0.0, semi=True)
    assert not b.passes(1e-4)


def test_jet_certificate_bounds(jet_cert):
    b = sample_eigen_bounds(jet_cert, Region.box(jet_cert.states, 1.0))
    assert b.min_eig_M >= jet_cert.eps / 2
    assert b.max_eig_R <= -jet_cert.eps / 2


def test_default_region_bounds(jet_cert):
    b = sample_eigen_bounds(jet_cert)
    assert b.npoints == 21 ** 2 + 1000
    assert b.passes(jet_cert.eps)


def test_semi_certificate_bounds(semi_cert):
    b = sample_eigen_bounds(semi_cert)
    assert b.passes(semi_cert.eps, semi=True)


# -- symmetric part -----------------------------------------------------------------

def test_symmetric_part_decay():
    assert symmetric_part_max_eig(system(["-x"], ("x",))) == pytest.approx(-1.0)


def test_symmetric_part_rotation():
    assert symmetric_part_max_eig(system(["x2", "-x1"], X)) == pytest.approx(0.0, abs=1e-15)


def test_symmetric_part_jet_positive(jet):
    assert symmetric_part_max_eig(jet, Region.box(jet.states, 1.0)) > 0


# -- rate-of-change identity -----------------------------------------------------------

def test_rate_check_linear_decay():
    sys = system(["-x"], ("x",))
    r = rate_of_change_check(sys, scalar_cert(), DisplacementPair([1.0], [1e-6]), t_end=1.0, dt=1e-3)
    assert r.max_rel_error <= 1e-5
    assert r.decreasing


def test_rate_check_jet(jet, jet_cert):
    r = rate_of_change_check(jet, jet_cert, DisplacementPair([0.5, 0.5], [1e-5, 0.0]), t_end=2.0, dt=1e-3)
    assert r.max_rel_error <= 1e-2
    assert r.decreasing


def test_rate_check_converges_in_dt(jet, jet_cert):
    # the displacement shrinks with dt so linearization error falls too;
    # dx = dt^1.5 keeps roundoff (~1e-16 / (dx dt)) below the truncation terms
    errs = []
    for dt in (1e-2, 1e-3, 1e-4):
        pair = DisplacementPair([0.5, 0.5], [dt ** 1.5, 0.0])
        errs.append(rate_of_change_check(jet, jet_cert, pair, t_end=2.0, dt=dt).max_rel_error)
    orders = [math.log10(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 1.0, (errs, orders)


def test_rate_check_rescales():
    # x' = x grows: the displacement is renormalised every factor of 10
    sys = system(["x"], ("x",))
    M = PolyMatrix.from_numbers(("x",), [[1.0]])
    cert = MetricCertificate(M, M.scale(2.0), {}, 0.0, 0.0, 0)
    r = rate_of_change_check(sys, cert, DisplacementPair([1.0], [1e-6]), t_end=5.0, dt=1e-3)
    assert r.rescales >= 2
    assert r.max_rel_error <= 1e-4
    assert not r.decreasing


def test_rate_check_shrink_error():
    sys = system(["-50*x"], ("x",))
    M = PolyMatrix.from_numbers(("x",), [[1.0]])
    cert = MetricCertificate(M, M.scale(-100.0), {}, 0.0, 0.0, 0)
    with pytest.raises(ShrinkError):
        rate_of_change_check(sys, cert, DisplacementPair([1.0], [1e-300]), t_end=1.0, dt=1e-3)


def test_displacement_must_be_nonzero():
    with pytest.raises(ValueError):
        DisplacementPair([0.0, 0.0], [0.0, 0.0])


# -- Lyapunov ----------------------------------------------------------------------

def test_lyapunov_scalar_with_rate():
    sys = system(["-x"], ("x",))
    chk = lyapunov_check(sys, scalar_cert(beta=1.0), Region.box(("x",), 2.0, grid=41, samples=0))
    assert chk.passes()
    assert chk.excluded == 1          # only the origin
    assert chk.min_V == pytest.approx(0.1 ** 2)
    assert chk.max_Vdot_plus_beta_V == 0.0


def test_lyapunov_jet(jet, jet_cert):
    chk = lyapunov_check(jet, jet_cert, Region.box(jet.states, 1.0))
    assert chk.passes()


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0), st.floats(0.0, 1.9))
def test_lyapunov_agrees_with_eigen_bounds(m, beta):
    sys = system(["-x"], ("x",))
    cert = scalar_cert(m, beta)
    region = Region.box(("x",), 2.0, grid=9, samples=20)
    chk = lyapunov_check(sys, cert, region)
    b = sample_eigen_bounds(cert, region)
    assert b.max_eig_R < 0
    assert chk.max_Vdot_plus_beta_V <= 1e-9


# -- outputs -----------------------------------------------------------------------

def test_report_and_csv_deterministic(tmp_path, jet, jet_cert):
    region = Region.box(jet.states, 1.0, grid=5, samples=7)
    texts = []
    for k in range(2):
        b = sample_eigen_bounds(jet_cert, region)
        rep = format_report(jet_cert, region, b, lyapunov_check(jet, jet_cert, region), header=["h"])
        write_csv(tmp_path / f"e{k}.csv", region, b, header=["h"])
        texts.append(rep)
    assert texts[0] == texts[1]
    assert texts[0].startswith("format = 1\n# h\n")
    assert "eigen_ok = 1" in texts[0]
    a, b = (tmp_path / "e0.csv").read_bytes(), (tmp_path / "e1.csv").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[2] == "phi,psi,min_eig_M,max_eig_R"
    assert len(lines) == 3 + 25 + 7
