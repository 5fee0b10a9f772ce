from typing import List

import yaml
from firelab.config import Config

from src.utils.constants import BASE_CONFIG_PATH

CONFIG_ARG_PREFIX = '--config.'


def load_config(config_cli_args: List[str]=None, config_path: str=BASE_CONFIG_PATH) -> Config:
    """
    Loads the base config and overwrites it with `--config.a.b value` arguments

    :param config_cli_args: leftover CLI arguments
    :param config_path: path to the yml config
    :return: resolved config
    """
    config = Config.load(config_path)

    if config_cli_args:
        config = config.overwrite(parse_config_args(config_cli_args))

    return config


def parse_config_args(config_cli_args: List[str]) -> Config:
    if len(config_cli_args) % 2 != 0:
        raise ValueError(f'Config arguments should come in `--config.key value` pairs: {config_cli_args}')

    overrides = {}

    for key, value in zip(config_cli_args[::2], config_cli_args[1::2]):
        if not key.startswith(CONFIG_ARG_PREFIX):
            raise ValueError(f'Unknown argument: {key}')

        path = key[len(CONFIG_ARG_PREFIX):].split('.')
        node = overrides

        for p in path[:-1]:
            node = node.setdefault(p, {})

        node[path[-1]] = yaml.safe_load(value)

    return Config(overrides)
