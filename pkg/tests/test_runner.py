from pathlib import Path
import pytest
from yardsat import runner
from yardsat.util import dump_document, load_document
from conftest import data_path, one_track

TOY = str(data_path('toy.yaml'))


def _run_dir(out_dir):
    dirs = [d for d in Path(out_dir).iterdir() if d.is_dir()]
    assert len(dirs) == 1
    return dirs[0]


def _write(tmp_path, name, document):
    path = tmp_path / name
    path.write_text(dump_document(document))
    return str(path)


def test_saturate_writes_artifacts(tmp_path, capsys):
    assert runner.main(['run', TOY, '--out_dir', str(tmp_path)]) == runner.EXIT_OK
    run_dir = _run_dir(tmp_path)
    assert run_dir.name.startswith('toy-')
    names = sorted(p.name for p in run_dir.iterdir())
    assert names == ['heatmap.csv', 'report.txt', 'solution.yaml', 'summary.csv', 'verdict.yaml']
    solution = load_document(run_dir / 'solution.yaml')
    assert solution['status'] == 'optimal'
    assert solution['served'] == ['T1', 'T2']
    assert load_document(run_dir / 'verdict.yaml')['ok']
    assert '*** Solve' in capsys.readouterr().out


def test_runs_are_reproducible(tmp_path):
    first, second = tmp_path / 'a', tmp_path / 'b'
    for out_dir in (first, second):
        assert runner.main(['run', TOY, '--out_dir', str(out_dir)]) == runner.EXIT_OK
    a, b = _run_dir(first), _run_dir(second)
    assert a.name == b.name
    for path in a.iterdir():
        assert path.read_bytes() == (b / path.name).read_bytes()


def test_overrides_change_the_run_id(tmp_path):
    runner.main(['run', TOY, '--out_dir', str(tmp_path)])
    runner.main(['run', TOY, '--out_dir', str(tmp_path), '--cap', '0.9'])
    assert len(list(tmp_path.iterdir())) == 2


def test_validate_a_previous_solution(tmp_path):
    runner.main(['run', TOY, '--out_dir', str(tmp_path / 'solve')])
    solution = _run_dir(tmp_path / 'solve') / 'solution.yaml'
    code = runner.main(['validate', TOY, str(solution), '--out_dir', str(tmp_path / 'check')])
    assert code == runner.EXIT_OK
    assert (_run_dir(tmp_path / 'check') / 'verdict.yaml').exists()


def test_validate_rejects_a_clash(tmp_path):
    solution = _write(tmp_path, 'clash.yaml', {'trains': [
        {'id': 'T1', 'plan': 'p', 'starts': {'a': 10, 'load': 10, 'd': 40}},
        {'id': 'T2', 'plan': 'p', 'starts': {'a': 20, 'load': 20, 'd': 60}}]})
    code = runner.main(['validate', TOY, solution, '--out_dir', str(tmp_path / 'out')])
    assert code == runner.EXIT_INFEASIBLE
    verdict = load_document(_run_dir(tmp_path / 'out') / 'verdict.yaml')
    assert not verdict['ok']
    assert 'capacity' in [c['check'] for c in verdict['checks'] if not c['passed']]


def test_heatmap_only(tmp_path):
    runner.main(['run', TOY, '--out_dir', str(tmp_path / 'solve')])
    solution = _run_dir(tmp_path / 'solve') / 'solution.yaml'
    assert runner.main(['heatmap', TOY, str(solution), '--out_dir', str(tmp_path / 'heat')]) == runner.EXIT_OK
    assert sorted(p.name for p in _run_dir(tmp_path / 'heat').iterdir()) == ['heatmap.csv', 'summary.csv']


def test_export(tmp_path):
    assert runner.main(['export', TOY, '--out_dir', str(tmp_path)]) == runner.EXIT_OK
    run_dir = _run_dir(tmp_path)
    mps = (run_dir / 'model.mps').read_text().splitlines()
    assert mps[0].startswith('* run_id=toy-')
    assert mps[1].startswith('NAME')
    names = (run_dir / 'model.mps.names').read_text().splitlines()
    assert names[1] == '# objective: minimize -(max-served)'


def test_input_error(tmp_path, capsys):
    doc = one_track([('T1', 'fixed', 10, 40)])
    doc['operations'][2]['resources'] = ['crane']
    path = _write(tmp_path, 'broken.yaml', doc)
    assert runner.main(['run', path, '--out_dir', str(tmp_path / 'out')]) == runner.EXIT_INPUT
    assert 'load: operations[2].resources' in capsys.readouterr().err


def test_fixed_trains_that_clash(tmp_path):
    forced = [('T{}'.format(i), 'fixed', 10, 40) for i in (1, 2, 3)]
    path = _write(tmp_path, 'clash.yaml', one_track(forced, capacity=2))
    assert runner.main(['run', path, '--out_dir', str(tmp_path / 'out')]) == runner.EXIT_INFEASIBLE
    report = (_run_dir(tmp_path / 'out') / 'report.txt').read_text()
    assert 'No schedule found' in report


def test_time_budget(tmp_path):
    code = runner.main(['run', TOY, '--out_dir', str(tmp_path), '--engine', 'milp', '--time_budget', '0'])
    assert code == runner.EXIT_TIMEOUT


def test_feasibility_mode(tmp_path):
    args = ['run', TOY, '--out_dir', str(tmp_path), '--mode', 'feasibility', '--floor', '2']
    assert runner.main(args) == runner.EXIT_OK
    assert load_document(_run_dir(tmp_path) / 'solution.yaml')['status'] == 'feasible'


def test_heuristic_mode(tmp_path):
    previous_dir = tmp_path / 'previous'
    runner.main(['run', str(data_path('mini_scenario1.yaml')), '--out_dir', str(previous_dir)])
    previous = _run_dir(previous_dir) / 'solution.yaml'
    args = ['run', str(data_path('mini_scenario2.yaml')), '--mode', 'heuristic', '--previous', str(previous),
            '--out_dir', str(tmp_path / 'warm')]
    assert runner.main(args) == runner.EXIT_OK
    solution = load_document(_run_dir(tmp_path / 'warm') / 'solution.yaml')
    assert solution['heuristic']
    assert solution['objective'] == 4


def test_heuristic_needs_previous(tmp_path):
    with pytest.raises(SystemExit):
        runner.main(['run', TOY, '--mode', 'heuristic', '--out_dir', str(tmp_path)])
