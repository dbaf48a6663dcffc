"""Tests for the command-line harness."""
import json

import pytest

from bcclique.cli import build_parser, main, run


@pytest.fixture
def tiny_dimacs(tmp_path):
    path = tmp_path / 'tiny.dimacs'
    path.write_text('\n'.join([
        'c two disjoint paths',
        'p min 4 4',
        'n 1 s',
        'n 4 t',
        'a 1 2 0 1 1',
        'a 2 4 0 1 2',
        'a 1 3 0 1 3',
        'a 3 4 0 1 5',
    ]) + '\n')
    return path


@pytest.fixture
def lp_json(tmp_path):
    path = tmp_path / 'lp.json'
    path.write_text(json.dumps({
        'm': 3, 'n': 1, 'A': [[0, 0, 1.0], [1, 0, 1.0], [2, 0, 1.0]], 'b': [1.0],
        'c': [1.0, 2.0, 3.0], 'l': [0.0, 0.0, 0.0], 'u': [1.0, 1.0, 1.0], 'x0': [0.3, 0.3, 0.4],
    }))
    return path


class TestParser:
    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as info:
            build_parser().parse_args(['spanner', '--bogus'])

        assert info.value.code == 2
        assert 'usage' in capsys.readouterr().err

    def test_subcommand_required(self):
        with pytest.raises(SystemExit) as info:
            main([])

        assert info.value.code == 2


class TestCommands:
    def test_spanner(self):
        report, code = run(['--seed', '2', 'spanner', '--n', '12', '--k', '2'])

        assert code == 0
        assert report['command'] == 'spanner'
        assert report['seed'] == 2
        assert report['verdicts'] == {'stretch': True, 'views': True}
        assert report['result']['rounds'] > 0

    def test_mcmf_matches_the_oracle(self, tiny_dimacs):
        report, code = run(['--seed', '1', 'mcmf', '--input', str(tiny_dimacs), '--backend', 'dense'])

        assert code == 0
        assert (report['result']['value'], report['result']['cost']) == (2, 11)
        assert report['result']['reference'] == {'value': 2, 'cost': 11}

    def test_lpsolve(self, lp_json):
        report, code = run(['lpsolve', '--instance', str(lp_json)])

        assert code == 0
        assert report['result']['reference_objective'] == pytest.approx(1.0)
        assert report['result']['objective'] <= 1.0 + 1e-3

    def test_lapsolve(self):
        report, code = run(['lapsolve', '--n', '10', '--epsilon', '1e-8'])

        assert code == 0
        assert report['result']['relative_error'] <= 1e-8

    def test_library_error_is_reported(self, tmp_path):
        report, code = run(['lpsolve', '--instance', str(tmp_path / 'missing.json')])

        assert code == 1
        assert report['command'] == 'lpsolve'
        assert report['type'] == 'FileNotFoundError'

    def test_reports_are_reproducible(self):
        first, _ = run(['--seed', '4', 'sparsify', '--n', '12'])
        second, _ = run(['--seed', '4', 'sparsify', '--n', '12'])
        first.pop('elapsed')
        second.pop('elapsed')

        assert first == second

    def test_seed_from_environment(self, monkeypatch):
        monkeypatch.setenv('BCCLIQUE_SEED', '9')
        report, _ = run(['spanner', '--n', '8'])

        assert report['seed'] == 9


class TestMain:
    def test_json_output_file(self, tmp_path, tiny_dimacs):
        out = tmp_path / 'report.json'
        code = main(['--output', str(out), 'mcmf', '--input', str(tiny_dimacs), '--backend', 'dense'])

        assert code == 0
        assert json.loads(out.read_text())['pass'] is True

    def test_bench_csv(self, tmp_path):
        out = tmp_path / 'bench.csv'
        summary = tmp_path / 'summary.json'
        code = main(['--output', str(out), 'bench', 'spanner', '--n', '8,12', '--seeds', '0,1',
                     '--summary', str(summary)])

        lines = out.read_text().splitlines()
        assert code == 0
        assert lines[0].startswith('n,seed,m,k,rounds')
        assert len(lines) == 5
        assert json.loads(summary.read_text())['rows'] == 4

    def test_empty_bench(self, capsys):
        assert main(['bench', 'sparsify']) == 0
        assert capsys.readouterr().out == ''

    def test_message_log(self, tmp_path):
        path = tmp_path / 'messages.jsonl'
        main(['--log', str(path), '--output', str(tmp_path / 'r.json'), 'spanner', '--n', '8'])

        record = json.loads(path.read_text().splitlines()[0])
        assert set(record) == {'round', 'sender', 'bits', 'tag'}
