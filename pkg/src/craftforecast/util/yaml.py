from pathlib import Path
from typing import TextIO

import yaml

from craftforecast.common import ConfigException, Map


class IndentDumper(yaml.SafeDumper):
    """Customized YAML dumper that indents lists."""

    def increase_indent(self, flow: bool = False, indentless: bool = False) -> None:
        return super().increase_indent(flow)


def dump(obj: object, fp: TextIO, indent: int = 2):
    fp.write(yaml.dump(obj, Dumper=IndentDumper, indent=indent, default_flow_style=False, sort_keys=False))


def load_mapping(path: Path) -> Map:
    """
    Reads a config file that must contain a single YAML mapping, an empty file gives an empty mapping.
    """
    if not path.exists():
        raise ConfigException(f"config: could not find {path}")
    with open(path) as fp:
        try:
            content = yaml.safe_load(fp)
        except yaml.YAMLError:
            raise ConfigException(f"Could not parse YAML, check file: {path}")
    if content is None:
        return {}
    if not isinstance(content, dict):
        raise ConfigException(f"config: {path} must contain a mapping of field names to values")
    return content
