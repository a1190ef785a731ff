import math
from pathlib import Path

import pytest

from models.run_config import RunConfig
from utils.config_parser import parse_key_value_file, parse_key_value_text
from utils.exceptions import ConfigError


def test_valid_config_with_defaults(small_run_entries):
    config = RunConfig.from_mapping({k: str(v) for k, v in small_run_entries.items()})

    assert config.kernel == 'alg2'
    assert (config.d, config.n, config.T, config.seed) == (3, 5, 40, 11)
    assert config.weights == 'metropolis'
    assert config.max_angle == pytest.approx(math.pi / 4)
    assert config.schedule_params == {'eta0': 0.1, 'eta_power': 0.0, 'u0': 0.5, 'u_power': 0.75}
    assert config.output.endswith('out')


def test_missing_seed_is_reported(small_run_entries):
    del small_run_entries['seed']
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_mapping(small_run_entries)
    assert excinfo.value.keys == ['seed']


def test_every_offending_key_is_reported(small_run_entries):
    small_run_entries.update(d=0, n='many', colour='blue', weights='uniform')
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_mapping(small_run_entries)
    assert excinfo.value.keys == ['colour', 'd', 'n', 'weights']
    assert any('unknown key' in detail for detail in excinfo.value.details)


@pytest.mark.parametrize('key, value', [
    ('T', 0),
    ('seed', -1),
    ('max_angle', 4.0),
    ('init_std', -0.5),
    ('eta0', 'nan'),
    ('kernel', 'alg3'),
])
def test_out_of_range_values(small_run_entries, key, value):
    small_run_entries[key] = value
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_mapping(small_run_entries)
    assert key in excinfo.value.keys


def test_tracking_kernels_need_a_constant_step(small_run_entries):
    small_run_entries['eta_power'] = 0.5
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_mapping(small_run_entries)
    assert excinfo.value.keys == ['schedule']

    small_run_entries['kernel'] = 'alg1'
    assert RunConfig.from_mapping(small_run_entries).kernel == 'alg1'


def test_two_point_kernel_rejects_constant_step_theorems(small_run_entries):
    small_run_entries.update(kernel='alg1', schedule='theorem3')
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_mapping(small_run_entries)
    assert 'schedule' in excinfo.value.keys


def test_schedule_parameters_and_constants_are_required(small_run_entries):
    small_run_entries.update(suite='benchmark', schedule='theorem4')
    with pytest.raises(ConfigError) as excinfo:
        RunConfig.from_mapping(small_run_entries)
    assert excinfo.value.keys == ['L', 'alpha', 'mu', 'u1']


def test_quadratic_suite_supplies_its_own_constants(small_run_entries):
    small_run_entries.update(schedule='theorem4', alpha=1.0, u1=1.0)
    config = RunConfig.from_mapping(small_run_entries)
    assert config.L is None and config.mu is None


def test_to_entries_parses_back_to_an_equal_config(small_run_entries):
    small_run_entries.update(L=2.5, init_std=0.3, log_every=10)
    config = RunConfig.from_mapping(small_run_entries)

    entries = config.to_entries()

    assert 'output' not in entries
    assert RunConfig.from_mapping(entries) == config.with_output(None)


def test_with_seed_keeps_everything_else(small_run_entries):
    config = RunConfig.from_mapping(small_run_entries)
    other = config.with_seed(99)
    assert other.seed == 99
    assert other.with_seed(11) == config


class TestKeyValueParser:
    def test_comments_and_blank_lines(self):
        text = "# run\n\nkernel = alg1   # inline\nd=4\n"
        assert parse_key_value_text(text) == {'kernel': 'alg1', 'd': '4'}

    def test_malformed_and_duplicated_lines(self):
        with pytest.raises(ConfigError) as excinfo:
            parse_key_value_text("kernel = alg1\nnonsense\nkernel = alg2\n = 3\n")
        assert excinfo.value.keys == ['kernel', 'line 2', 'line 4']

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_key_value_file(str(tmp_path / 'absent.cfg'))

    def test_file_round_trip(self, write_config, small_run_entries):
        path = write_config(small_run_entries)
        assert parse_key_value_file(path)['u_power'] == '0.75'


@pytest.mark.parametrize('path', sorted((Path(__file__).parent.parent / 'configs').glob('*.cfg')),
                         ids=lambda p: p.stem)
def test_shipped_configs_are_valid(path):
    config = RunConfig.from_mapping(parse_key_value_file(str(path)))
    assert config.output.startswith('results/')
