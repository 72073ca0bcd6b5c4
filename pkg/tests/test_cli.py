import csv
import io
import json

import pytest

from app import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_models_listing(capsys):
    code, out, _ = run(capsys, 'models')
    assert code == 0
    listing = json.loads(out)
    assert listing['turbulent2d']['dimensions'] == [2]
    assert 'laminar3d' in listing


def test_constants_table(capsys, tmp_path):
    code, out, _ = run(capsys, 'constants', '--dim', '2', '--r', '1', '--out', str(tmp_path))
    assert code == 0
    rows = {row['name']: row for row in csv.DictReader(io.StringIO(out))}
    assert float(rows['ell']['computed']) == pytest.approx(2.14357, rel=1e-3)
    assert float(rows['w_L1']['computed']) == pytest.approx(1.0, rel=1e-8)
    assert (tmp_path / 'constants.csv').read_text() == out


def test_constants_rejects_nonpositive_radius(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(['constants', '--r', '0'])
    assert excinfo.value.code == 2


def test_bound_for_square_hole(capsys):
    code, out, _ = run(capsys, 'bound', '--a', '0.5', '--b', '0.5')
    assert code == 0
    report = json.loads(out)
    assert report['alpha_star'] == 0.0
    assert 'Gamma' not in report
    assert report['M'] > 0
    assert report['overall_status'] == 'Passed'


def test_bound_with_datum_reports_gamma(capsys, tmp_path):
    code, out, _ = run(capsys, 'bound', '--model', 'turbulent2d', '--budget', 'smoke', '--out', str(tmp_path))
    assert code == 0
    report = json.loads(out)
    assert report['Gamma'] >= report['gamma_report']['terms']['grad_A1']
    assert report['overall_status'] == 'Warning'
    assert json.loads((tmp_path / 'bound.json').read_text()) == report


def test_bound_rejects_bad_ordering(capsys):
    code, out, err = run(capsys, 'bound', '--a', '1.2')
    assert code == 2
    assert out == ''
    assert 'ERROR' in err


def test_bound_output_is_deterministic(capsys):
    first = run(capsys, 'bound', '--dim', '3')[1]
    second = run(capsys, 'bound', '--dim', '3')[1]
    assert first == second
    assert json.loads(first)['domain'] == {'dimension': 3, 'L': 1.0, 'a': 0.5, 'b': 0.5, 'c': 0.5}


def test_flags_override_config_file(capsys, tmp_path):
    config = tmp_path / 'run.json'
    config.write_text(json.dumps({'a': 0.6, 'b': 0.4, 'seed': 5}))
    code, out, _ = run(capsys, 'bound', '--config', str(config), '--a', '0.8')
    assert code == 0
    report = json.loads(out)
    assert report['domain']['a'] == 0.8
    assert report['domain']['b'] == 0.4
    assert report['seed'] == 5


def test_unknown_config_key_is_a_usage_error(capsys, tmp_path):
    config = tmp_path / 'run.json'
    config.write_text(json.dumps({'radius': 2.0}))
    assert run(capsys, 'bound', '--config', str(config))[0] == 2


def test_extend_zero_datum_writes_outputs(capsys, tmp_path):
    out_dir = tmp_path / 'out'
    code, out, err = run(capsys, 'extend', '--model', 'zero', '--budget', 'smoke', '--out', str(out_dir))
    assert code == 0
    report = json.loads(out)
    assert report['files'] == ['fields.csv', 'fields.vtk', 'phi.vtk', 'report.json']
    for name in report['files']:
        assert (out_dir / name).exists()
    with open(out_dir / 'fields.csv', encoding='utf-8') as handle:
        rows = list(csv.DictReader(handle))
    assert len(rows) == 17 ** 2
    assert all(float(row['v0_1']) == 0.0 and float(row['v0_2']) == 0.0 for row in rows)
    assert (out_dir / 'phi.vtk').read_text().startswith('# vtk DataFile Version 3.0')
    assert 'Extension passed' in err


def test_corrupt_face_data_is_a_usage_error(capsys, tmp_path):
    faces = tmp_path / 'faces.csv'
    faces.write_text('1,0.0,not-a-number,1.0\n')
    assert run(capsys, 'verify', '--face-data', str(faces), '--budget', 'smoke')[0] == 2


def test_verify_rejects_discontinuous_laminar_inflow(capsys):
    code, out, err = run(capsys, 'verify', '--dim', '3', '--model', 'laminar3d', '--budget', 'smoke',
                         '--model-param', 'variant=verbatim')
    assert code == 1
    assert out == ''
    assert 'edge' in err


def test_recorded_runs_show_in_history(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv('DATABASE_URL', f'sqlite:///{tmp_path / "runs.db"}')
    assert run(capsys, 'bound', '--record', '--a', '0.6')[0] == 0
    assert run(capsys, 'constants', '--record', '--dim', '3')[0] == 0
    code, out, _ = run(capsys, 'history', '--filter', 'bound')
    assert code == 0
    assert 'Found 1 recorded run(s).' in out
    assert 'bound' in out and 'a=0.6' in out
    assert 'constants' not in out


def test_bad_model_parameter_is_a_usage_error(capsys):
    code, out, err = run(capsys, 'bound', '--model', 'turbulent2d', '--model-param', 'b=2')
    assert code == 2
    assert out == ''
    assert 'ERROR' in err


def test_laminar_inflow_defaults_to_edge_vanishing(capsys):
    code, out, _ = run(capsys, 'bound', '--dim', '3', '--model', 'laminar3d', '--budget', 'smoke')
    assert code == 0
    report = json.loads(out)
    assert report['config']['model'] == 'laminar3d'
    assert report['validation']['status'] == 'Passed'


def test_extension_uses_the_exponent_selected_by_the_oracle(capsys, tmp_path):
    code, out, _ = run(capsys, 'verify', '--model', 'zero', '--budget', 'smoke', '--out', str(tmp_path))
    assert code == 0
    report = json.loads(out)
    oracle = report['exponent_oracle']
    assert oracle['source'] == 'oracle'
    assert oracle['coincide'] is True
    assert oracle['resolution'] == 9
    assert oracle['errors']['paper'] == oracle['errors']['dimensional']
    assert report['bog_exponent'] == oracle['selected'] == 'dimensional'


def test_fixed_exponent_skips_the_oracle(capsys):
    code, out, _ = run(capsys, 'verify', '--model', 'zero', '--budget', 'smoke', '--bog-exponent', 'paper')
    assert code == 0
    report = json.loads(out)
    assert report['exponent_oracle'] == {'selected': 'paper', 'source': 'config'}
    assert report['bog_exponent'] == 'paper'
