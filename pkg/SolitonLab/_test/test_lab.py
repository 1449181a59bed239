import json

import numpy as np
import pytest
from click.testing import CliRunner

from fieldio import readField, writeField, writeJson
from fields import ComplexField, Grid, SolitonParams
from lab import cli, commandDispatch, zipParams, runConfigSchema
from errors import ValidationError
from solitons import twoSoliton, oneSoliton

COLLIDING_ARGS = ['--eta', '1', '--eta', '1.5', '--xi', '1', '--xi', '-1']


def tinyConfig(path):
    writeJson(path, {
        'params': [{'xi': 0.0, 'eta': 1.0}],
        'perturbation': {'epsilon': 1e-3, 'seed': 1},
        'evolve': {'length': 40.0, 'n': 512, 'dt': 5e-3, 'tEnd': 1.0},
        'search': {'xiMin': -1.0, 'xiMax': 1.0, 'etaMin': 0.1, 'etaMax': 1.5},
        'sampleTimes': [0.0, 0.5, 1.0],
        'eigenfunctionTolerance': 1e-3,
    })
    return str(path)


def test_zip_params():
    params = zipParams((1.0, 1.5), (1.0, -1.0), (), (0.0, 0.3))
    assert params == [SolitonParams(1.0, 1.0, 0.0, 0.0), SolitonParams(-1.0, 1.5, 0.0, 0.3)]
    with pytest.raises(ValidationError):
        zipParams((1.0, 1.5), (1.0,), (), ())
    with pytest.raises(ValidationError):
        zipParams((), (), (), ())


def test_help():
    result = CliRunner().invoke(cli, ['--help'])
    assert result.exit_code == 0
    for name in ['soliton', 'dress', 'evolve', 'scatter', 'undress', 'stability', 'sweep']:
        assert name in result.output


def test_soliton_field_file(tmp_path):
    out = tmp_path / 'f.nlsf'
    code = commandDispatch(['soliton', *COLLIDING_ARGS, '--grid-n', '2048', '--grid-l', '80', '--t', '0',
                            '--out', str(out)])
    assert code == 0
    q = readField(out)
    grid = Grid.centered(2048, 80.0)
    expected = twoSoliton(SolitonParams(1.0, 1.0), SolitonParams(-1.0, 1.5), grid.x, 0.0)
    assert q.n == 2048 and q.t == 0.0
    assert np.abs(q.values - expected).max() < 1e-10
    assert np.abs(q.values).max() == pytest.approx(np.abs(expected).max(), rel=1e-12)


def test_soliton_surface_csv(tmp_path):
    out = tmp_path / 's.csv'
    code = commandDispatch(['soliton', '--eta', '0.5', '--grid-n', '64', '--grid-l', '20',
                            '--surface-csv', str(out), '--t-end', '1', '--t-count', '3'])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == 'x,t,abs_q_sq'
    assert len(lines) == 1 + 3 * 64


def test_count_mismatch_is_validation_error(tmp_path):
    code = commandDispatch(['soliton', '--eta', '1', '--eta', '1.5', '--xi', '1',
                            '--out', str(tmp_path / 'f.nlsf')])
    assert code == 1


def test_usage_error_prints_schema(capsys):
    assert commandDispatch(['soliton', '--frobnicate']) == 1
    err = capsys.readouterr().err
    assert 'RunConfig' in err and 'perturbation.epsilon' in err


def test_scatter_finds_colliding_eigenvalues(tmp_path):
    field = tmp_path / 'f.nlsf'
    assert commandDispatch(['soliton', *COLLIDING_ARGS, '--grid-n', '2048', '--grid-l', '80',
                            '--out', str(field)]) == 0
    out = tmp_path / 'f.json'
    assert commandDispatch(['scatter', '--in', str(field), '--region', '-2', '2', '0.1', '2.5',
                            '--out', str(out)]) == 0
    doc = json.loads(out.read_text())
    found = sorted((complex(xi, eta) for xi, eta in doc['eigenvalues']), key=lambda z: z.real)
    assert abs(found[0] - (-1 + 1.5j)) < 1e-6
    assert abs(found[1] - (1 + 1j)) < 1e-6
    assert len(doc['norming']) == 2 and len(doc['params']) == 2


def test_scatter_to_stdout_with_samples(tmp_path, capsys):
    field = tmp_path / 'zero.nlsf'
    writeField(field, ComplexField.zeros(Grid.centered(256, 20.0)))
    assert commandDispatch(['scatter', '--in', str(field), '--region', '-1', '1', '0.1', '1', '--a-samples']) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc['eigenvalues'] == []
    assert all(abs(a[0] - 1.0) < 1e-10 for _, a in doc['a_samples'])


def test_numerical_failure_exit_code(tmp_path):
    field = tmp_path / 'flat.nlsf'
    writeField(field, ComplexField.onGrid(Grid.centered(256, 20.0), np.full(256, 0.1, dtype=complex)))
    code = commandDispatch(['scatter', '--in', str(field), '--region', '-1', '1', '0.1', '1'])
    assert code == 2


def test_evolve_command(tmp_path):
    grid = Grid.centered(512, 40.0)
    p = SolitonParams(0.0, 1.0)
    field = tmp_path / 'q0.nlsf'
    writeField(field, ComplexField.onGrid(grid, oneSoliton(p, grid.x, 0.0)))
    out, series = tmp_path / 'q1.nlsf', tmp_path / 'series.csv'
    code = commandDispatch(['evolve', '--in', str(field), '--dt', '5e-3', '--t-end', '1',
                            '--samples', '0.5', '--scheme', 'yoshida4', '--out', str(out), '--series', str(series)])
    assert code == 0
    q = readField(out)
    assert q.t == 1.0
    assert np.abs(q.values - oneSoliton(p, grid.x, 1.0)).max() < 1e-4
    assert series.read_text().splitlines()[0] == 't,l2,boundary_level'
    # dt above the step bound
    assert commandDispatch(['evolve', '--in', str(field), '--dt', '0.1', '--t-end', '1',
                            '--out', str(out)]) == 1


def test_dress_and_undress(tmp_path):
    dressed, stripped = tmp_path / 'd.nlsf', tmp_path / 'u.nlsf'
    assert commandDispatch(['dress', '--eta', '0.5', '--xi', '0.1', '--grid-n', '4096', '--grid-l', '160',
                            '--out', str(dressed)]) == 0
    q = readField(dressed)
    assert np.abs(q.values - oneSoliton(SolitonParams(0.1, 0.5), q.x, 0.0)).max() < 1e-12
    assert commandDispatch(['undress', '--in', str(dressed), '--region', '-1', '1', '0.1', '1',
                            '--tolerance', '1e-3', '--out', str(stripped)]) == 0
    assert np.abs(readField(stripped).values).max() < 1e-3


def test_dress_on_jost_seeds(tmp_path):
    grid = Grid.centered(2048, 40.0)
    background = tmp_path / 'bg.nlsf'
    writeField(background, ComplexField.onGrid(grid, 0.01 * np.exp(-grid.x ** 2)))
    out = tmp_path / 'd.nlsf'
    assert commandDispatch(['dress', '--in', str(background), '--seed-kind', 'jost', '--eta', '0.5',
                            '--out', str(out)]) == 0
    q = readField(out)
    assert abs(np.abs(q.values).max() - 1.0) < 0.05


def test_stability_is_deterministic(tmp_path):
    config = tinyConfig(tmp_path / 'run.json')
    reports = []
    for name in ('a', 'b'):
        report, series = tmp_path / f'{name}.json', tmp_path / f'{name}.csv'
        assert commandDispatch(['stability', '--config', config, '--report', str(report),
                                '--series', str(series)]) == 0
        reports.append((report.read_bytes(), series.read_bytes()))
    assert reports[0] == reports[1]
    doc = json.loads(reports[0][0])
    assert doc['epsilon'] == 1e-3
    assert reports[0][1].decode().splitlines()[0] == 't,distance,l2_of_q,boundary_level'


def test_bad_config_exit_code(tmp_path):
    path = tmp_path / 'run.json'
    writeJson(path, {'params': [{'xi': 0.0, 'eta': 1.0}], 'horizon': 3})
    assert commandDispatch(['stability', '--config', str(path), '--report', str(tmp_path / 'r.json')]) == 1


def test_sweep(tmp_path, monkeypatch):
    monkeypatch.setenv('NLSF_THREADS', '2')
    config = tinyConfig(tmp_path / 'run.json')
    out = tmp_path / 'sweep.json'
    assert commandDispatch(['sweep', '--config', config, '--eps', '1e-3', '--eps', '2e-3',
                            '--report', str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc['reports']) == 2 and len(doc['estimates']) == 2
    assert doc['constant'] == max(doc['estimates'])


def test_schema_lists_every_section():
    schema = runConfigSchema()
    for key in ['params[].eta', 'evolve.dt', 'search.xiMin', 'perturbation.shape', 'sampleTimes']:
        assert key in schema
