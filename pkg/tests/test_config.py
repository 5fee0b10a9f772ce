import sys; sys.path.append('.')

import pytest

from src.utils.config import load_config, parse_config_args
from src.validation.mc_validation import ValidationSettings
from src.tails.tail_asymptotics import ConstantBudget


def test_base_config_defaults():
    config = load_config()

    assert config.get('constants.delta') == 0.005
    assert config.get('constants.S') == 50.0
    assert config.get('validation.lambda_res') == 10
    assert config.get('validation.max_grid') == 2 ** 22
    assert config.runtime.log_level == 'INFO'


def test_overrides_are_parsed_as_yaml():
    overrides = parse_config_args([
        '--config.constants.delta', '0.01',
        '--config.validation.convergence_band', '[0.8, 1.2]',
        '--config.runtime.silent', 'false',
    ])

    assert overrides.get('constants.delta') == 0.01
    assert list(overrides.get('validation.convergence_band')) == [0.8, 1.2]
    assert overrides.get('runtime.silent') is False


def test_overrides_keep_the_rest_of_the_config():
    config = load_config(['--config.validation.lambda_res', '20'])
    settings = ValidationSettings.from_config(config, threads=2)

    assert settings.lambda_res == 20
    assert settings.pilot_samples == 10000
    assert settings.convergence_band == (0.7, 1.3)
    assert settings.threads == 2
    assert ConstantBudget.from_config(config).pickands_S == 50.0


def test_malformed_overrides():
    with pytest.raises(ValueError):
        parse_config_args(['--config.constants.delta'])

    with pytest.raises(ValueError):
        parse_config_args(['--constants.delta', '0.01'])
