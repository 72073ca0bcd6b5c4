import numpy as np
import pytest

from utils.boundary_data import (MODELS, BoundaryDatum, build_model, constant_datum, damped_turbulent_profile,
                                 evaluate_A1, extend_A1, face_h1_norms, load_face_csv, model_laminar3d,
                                 model_solenoidal2d, model_solenoidal3d, model_turbulent2d, turbulent_profile,
                                 turbulent_profile_derivative, validate, zero_datum)
from utils.errors import DataParseError, ValidationFailed, WrongDimension
from utils.geometry import make_domain
from utils.numerics import fd_jacobian

LAM, ALPHA, TAU = 3.0, 0.1, 10.0


def boundary_points(L, d, n, rng, avoid=()):
    faces = rng.integers(0, 2 * d, size=n)
    pts = rng.uniform(-L, L, size=(n, d))
    axis, sign = faces % d, np.where(faces < d, 1.0, -1.0)
    pts[np.arange(n), axis] = sign * L
    for value in avoid:
        pts = pts[np.all(np.abs(np.abs(pts) - value) > 1e-6, axis=1)]
    return pts


@pytest.fixture
def turbulent(domain2d):
    return model_turbulent2d(domain2d.L, domain2d.b, LAM, ALPHA, TAU)


def test_turbulent_profile_vanishes_at_ends():
    b = 0.5
    assert turbulent_profile(np.array([0.0, b, -b, 0.9]), b, ALPHA, TAU).tolist() == [0.0, 0.0, 0.0, 0.0]


def test_turbulent_model_is_admissible_with_warnings(turbulent, domain2d):
    report = validate(turbulent, domain2d)
    assert report.edge_mismatch <= 1e-8
    assert abs(report.total_flux) <= 1e-8
    assert report.vertex_max is None
    assert report.passed
    assert report.status == 'Warning'
    assert {issue['type'] for issue in report.issues} == {'face_jump', 'regularity'}


def test_turbulent_jump_matches_closed_form(turbulent, domain2d):
    b = domain2d.b
    report = validate(turbulent, domain2d)
    expected = TAU * b ** ALPHA * abs(np.sin(np.pi * np.sqrt(b)))
    assert len(report.face_jumps) == 2
    for size in report.face_jumps.values():
        assert size == pytest.approx(expected, rel=1e-6)


def test_damped_profile_vanishes_near_the_wake_axis():
    b, delta = 0.5, (0.5 / 8) ** 2
    near = np.linspace(-delta, delta, 21)
    values, slopes = damped_turbulent_profile(near, b, ALPHA, TAU, delta)
    assert not np.any(values) and not np.any(slopes)
    far = np.concatenate([np.linspace(2 * delta, 0.6, 50), -np.linspace(2 * delta, 0.6, 50)])
    values, slopes = damped_turbulent_profile(far, b, ALPHA, TAU, delta)
    assert np.allclose(values, turbulent_profile(far, b, ALPHA, TAU), rtol=1e-12, atol=0)
    assert np.allclose(slopes, turbulent_profile_derivative(far, b, ALPHA, TAU), rtol=1e-12, atol=0)


def test_damped_profile_derivative_matches_differences():
    b, delta = 0.5, (0.5 / 8) ** 2
    y = np.array([1.2, 1.5, 1.8, -1.3, -1.7]) * delta
    step = 1e-9
    _, slopes = damped_turbulent_profile(y, b, ALPHA, TAU, delta)
    ahead = damped_turbulent_profile(y + step, b, ALPHA, TAU, delta)[0]
    behind = damped_turbulent_profile(y - step, b, ALPHA, TAU, delta)[0]
    assert np.allclose(slopes, (ahead - behind) / (2 * step), rtol=1e-5, atol=1e-3)


def test_regularized_wake_keeps_the_datum_away_from_the_axis(turbulent, rng):
    b = turbulent.params['b']
    wake = turbulent.regularized(8)
    assert wake.axis == 1
    assert wake.delta == pytest.approx((b / 8) ** 2)
    offsets = sorted(offset for _, offset in wake.planes)
    assert all(abs(offset) < b for offset in offsets)
    assert {wake.delta, -wake.delta, 2 * wake.delta} <= set(offsets)
    assert {offset for _, offset in wake.rule_planes} <= set(offsets)
    assert wake.to_dict()['half_waves'] == len(wake.planes) // 2
    pts = boundary_points(turbulent.L, 2, 2000, rng, avoid=(b,))
    away = pts[np.abs(pts[:, 1]) >= 2 * wake.delta]
    assert np.allclose(wake.datum.evaluate(away), turbulent.evaluate(away), rtol=0, atol=1e-12)
    outflow = np.column_stack([np.ones(11), np.linspace(-wake.delta, wake.delta, 11)])
    assert not np.any(wake.datum.evaluate(outflow)[:, 1])
    assert np.allclose(wake.distance(outflow), np.abs(outflow[:, 1]))


def test_regularization_follows_linear_combinations(turbulent, domain2d, rng):
    assert zero_datum(2, domain2d.L).regularized(8) is None
    pts = boundary_points(domain2d.L, 2, 500, rng, avoid=(domain2d.b,))
    damped = turbulent.regularized(8).datum
    doubled = turbulent.scaled(2.0).regularized(8).datum
    assert np.allclose(doubled.evaluate(pts), 2.0 * damped.evaluate(pts), rtol=0, atol=1e-12)
    shifted = turbulent.plus(model_solenoidal2d(domain2d.L)).regularized(8).datum
    expected = damped.evaluate(pts) + model_solenoidal2d(domain2d.L).evaluate(pts)
    assert np.allclose(shifted.evaluate(pts), expected, rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        turbulent.regularized(0)


def test_laminar_verbatim_breaks_edge_continuity(domain3d):
    h = model_laminar3d(domain3d.L, 'verbatim')
    report = validate(h, domain3d)
    assert report.status == 'Failed'
    assert report.edge_mismatch == pytest.approx(domain3d.L ** 2, rel=1e-3)
    with pytest.raises(ValidationFailed) as excinfo:
        extend_A1(h, domain3d)
    assert excinfo.value.report.status == 'Failed'


def test_laminar_edge_vanishing_is_admissible(domain3d):
    report = validate(model_laminar3d(domain3d.L, 'edge_vanishing'), domain3d)
    assert report.status == 'Passed'
    assert report.vertex_max <= 1e-12


def test_turbulent_extension_matches_closed_form(turbulent, domain2d, rng):
    L = domain2d.L
    A1 = extend_A1(turbulent, domain2d)
    pts = rng.uniform(-L, L, size=(10_000, 2))
    x, y = pts[:, 0], pts[:, 1]
    g = turbulent_profile(y, domain2d.b, ALPHA, TAU)
    expected = np.column_stack([LAM * (y + L), (L + x) / (2 * L) * g])
    assert np.allclose(A1(pts), expected, rtol=0, atol=1e-12)


def test_laminar_extension_matches_closed_form(domain3d, rng):
    L = domain3d.L
    A1 = extend_A1(model_laminar3d(L, 'verbatim'), domain3d, strict=False)
    pts = rng.uniform(-L, L, size=(10_000, 3))
    x, y, z = pts.T
    wall = (y ** 2 - L ** 2) * (z ** 2 - L ** 2) / L ** 4
    t = (L + x) / (2 * L)
    expected = np.column_stack([2 * L ** 2 - y ** 2 - z ** 2, t * y * wall, t * z * wall])
    assert np.allclose(A1(pts), expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize('name, dimension', [('turbulent2d', 2), ('solenoidal2d', 2), ('solenoidal3d', 3),
                                             ('laminar3d', 3)])
def test_extension_reproduces_trace(name, dimension, rng):
    domain = make_domain(1.0, 0.7, 0.5) if dimension == 2 else make_domain(1.0, 0.5, 0.5, 0.5, dimension=3)
    params = {'variant': 'edge_vanishing'} if name == 'laminar3d' else None
    h = build_model(name, domain, params)
    A1 = extend_A1(h, domain)
    pts = boundary_points(domain.L, dimension, 2000, rng, avoid=(domain.b,))
    assert np.max(np.abs(A1(pts) - h.evaluate(pts))) <= 1e-10


@pytest.mark.parametrize('h', [model_solenoidal2d(1.0, 2.0), model_solenoidal3d(1.0),
                               model_laminar3d(1.0, 'edge_vanishing')], ids=lambda h: h.name)
def test_analytic_jacobian_matches_differences(h, rng):
    domain = make_domain(1.0, 0.5, 0.5, 0.5 if h.dimension == 3 else None, h.dimension)
    A1 = extend_A1(h, domain)
    pts = rng.uniform(-0.9, 0.9, size=(50, h.dimension))
    assert np.allclose(A1.jacobian(pts), fd_jacobian(A1, pts, 1e-5), atol=1e-6)
    values, jac = evaluate_A1(h, pts)
    assert np.array_equal(values, A1(pts))
    assert np.array_equal(jac, A1.jacobian(pts))


def test_zero_datum_gives_zero_extension(domain3d, rng):
    h = zero_datum(3, domain3d.L)
    A1 = extend_A1(h, domain3d)
    pts = rng.uniform(-1, 1, size=(20, 3))
    assert not np.any(A1(pts))
    assert all(value == 0.0 for value in face_h1_norms(h).values())


def test_nonzero_flux_fails(domain2d):
    h = constant_datum(2, domain2d.L, (1.0, 0.0)).plus(model_solenoidal2d(domain2d.L))
    assert validate(h, domain2d).status == 'Passed'
    faces = dict(h.faces)
    faces[1] = faces[1].scaled(2.0)
    report = validate(BoundaryDatum(2, domain2d.L, faces, 'leaky'), domain2d)
    assert 'zero_flux' in {issue['type'] for issue in report.issues}


def test_build_model_checks_name_dimension_and_parameters(domain2d, domain3d):
    with pytest.raises(DataParseError):
        build_model('poiseuille', domain2d)
    with pytest.raises(WrongDimension):
        build_model('laminar3d', domain2d)
    with pytest.raises(DataParseError):
        build_model('turbulent2d', domain2d, {'gamma': 1.0})
    assert set(MODELS) >= {'turbulent2d', 'laminar3d', 'zero'}
    assert build_model('turbulent2d', domain2d, {'lam': 2.0}).params['lam'] == 2.0
    assert build_model('zero', domain3d).dimension == 3


def write_face_csv(path, L, n, vector=(1.0, -2.0)):
    rows = ['face,s,u,v']
    for face in (1, 2, 3, 4):
        for s in np.linspace(-L, L, n):
            rows.append(f'{face},{float(s)!r},{vector[0]!r},{vector[1]!r}')
    path.write_text('\n'.join(rows) + '\n')
    return path


def test_load_face_csv_builds_grid_datum(tmp_path, domain2d):
    h = load_face_csv(write_face_csv(tmp_path / 'faces.csv', domain2d.L, 9), 2, domain2d.L)
    assert h.is_grid
    assert np.allclose(h.evaluate([[1.0, 0.3], [-0.2, -1.0]]), [[1.0, -2.0], [1.0, -2.0]])
    report = validate(h, domain2d)
    assert report.tol == 1e-4
    assert report.status == 'Passed'


def test_load_face_csv_without_header_keeps_first_row(tmp_path, domain2d):
    path = tmp_path / 'plain.csv'
    rows = [f'{face},{s:.6e},{1.0:.6e},{-2.0:.6e}' for face in (1, 2, 3, 4) for s in np.linspace(-1.0, 1.0, 5)]
    path.write_text('\n'.join(rows) + '\n')
    h = load_face_csv(path, 2, domain2d.L)
    assert len(h.faces[1].axes[0]) == 5
    assert np.allclose(h.evaluate([[1.0, -1.0]]), [[1.0, -2.0]])


def test_load_face_csv_rejects_bad_files(tmp_path):
    bad = tmp_path / 'bad.csv'
    bad.write_text('1,0.0,abc,1.0\n2,0.0,1.0,1.0\n')
    with pytest.raises(DataParseError):
        load_face_csv(bad, 2, 1.0)
    short = tmp_path / 'short.csv'
    short.write_text('1,0.0,1.0\n')
    with pytest.raises(DataParseError):
        load_face_csv(short, 2, 1.0)
    missing = write_face_csv(tmp_path / 'missing.csv', 1.0, 5)
    missing.write_text('\n'.join(line for line in missing.read_text().splitlines() if not line.startswith('4,')))
    with pytest.raises(DataParseError):
        load_face_csv(missing, 2, 1.0)
    with pytest.raises(DataParseError):
        load_face_csv(tmp_path / 'absent.csv', 2, 1.0)


def test_extension_is_linear_in_the_datum(turbulent, domain2d, rng):
    other = model_solenoidal2d(domain2d.L, 2.0)
    c = -1.7
    combined = extend_A1(turbulent.plus(other.scaled(c)), domain2d)
    first, second = extend_A1(turbulent, domain2d), extend_A1(other, domain2d)
    pts = rng.uniform(-domain2d.L, domain2d.L, size=(2000, 2))
    expected = first(pts) + c * second(pts)
    assert np.allclose(combined(pts), expected, rtol=0, atol=1e-12 * np.max(np.abs(expected)))
    off_axis = pts[np.abs(pts[:, 1]) > 1e-3]
    expected_jac = first.jacobian(off_axis) + c * second.jacobian(off_axis)
    assert np.allclose(combined.jacobian(off_axis), expected_jac, rtol=1e-12, atol=1e-9)
