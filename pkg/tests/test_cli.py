import json
import logging

import pytest

from cli import EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_IO, EXIT_OK, main


@pytest.fixture(autouse=True)
def restore_root_handlers():
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield
    root.handlers[:] = handlers
    root.setLevel(level)


def test_run_writes_trace_and_manifest(write_config, small_run_entries, tmp_path):
    path = write_config(small_run_entries)

    assert main(['run', path]) == EXIT_OK

    out = tmp_path / 'out'
    assert (out / 'trace.csv').exists()
    assert (out / 'manifest.txt').exists()


def test_output_flag_overrides_config(write_config, small_run_entries, tmp_path):
    path = write_config(small_run_entries)
    assert main(['run', path, '-o', str(tmp_path / 'elsewhere')]) == EXIT_OK
    assert (tmp_path / 'elsewhere' / 'trace.csv').exists()


def test_missing_seed_exits_with_config_error(write_config, small_run_entries):
    del small_run_entries['seed']
    path = write_config(small_run_entries)

    assert main(['run', path]) == EXIT_CONFIG


def test_unwritable_output_exits_with_io_error(write_config, small_run_entries, tmp_path):
    blocker = tmp_path / 'blocker'
    blocker.write_text('not a directory', encoding='utf-8')
    path = write_config(small_run_entries)

    assert main(['run', path, '-o', str(blocker)]) == EXIT_IO


def test_divergence_exits_with_code_3_and_keeps_partial_trace(write_config, small_run_entries,
                                                              diverging, tmp_path):
    small_run_entries.update(diverging)
    path = write_config(small_run_entries)

    assert main(['run', path]) == EXIT_DIVERGENCE
    assert (tmp_path / 'out' / 'trace.csv').exists()


def test_replay_defaults_next_to_the_manifest(write_config, small_run_entries, tmp_path):
    main(['run', write_config(small_run_entries)])
    manifest = tmp_path / 'out' / 'manifest.txt'

    assert main(['replay', str(manifest)]) == EXIT_OK

    replayed = tmp_path / 'out' / 'replay' / 'trace.csv'
    assert replayed.read_bytes() == (tmp_path / 'out' / 'trace.csv').read_bytes()


def test_sweep(write_config, small_run_entries, tmp_path):
    path = write_config(small_run_entries)

    assert main(['sweep', path, '--seeds', '1,2']) == EXIT_OK
    assert (tmp_path / 'out' / 'summary.csv').exists()
    assert (tmp_path / 'out' / '001_seed_2' / 'trace.csv').exists()


def test_sweep_rejects_bad_seeds(write_config, small_run_entries):
    assert main(['sweep', write_config(small_run_entries), '--seeds', '1,x,-3']) == EXIT_CONFIG


def test_sweep_with_diverging_members_exits_with_code_3(write_config, small_run_entries, diverging):
    small_run_entries.update(diverging)
    assert main(['sweep', write_config(small_run_entries), '--seeds', '4']) == EXIT_DIVERGENCE


def test_unknown_verify_selector():
    assert main(['verify', 'lemma9']) == EXIT_CONFIG


def test_verify_contraction_with_report(tmp_path, capsys):
    report = tmp_path / 'report.json'

    assert main(['verify', 'contraction', '--report', str(report)]) == EXIT_OK

    out = capsys.readouterr().out
    assert '9/9 checks passed' in out
    data = json.loads(report.read_text(encoding='utf-8'))
    assert len(data) == 9
    assert {item['verdict'] for item in data} == {'PASS'}


def test_missing_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as excinfo:
        main([])
    assert excinfo.value.code == 2
