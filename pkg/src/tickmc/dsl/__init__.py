"""Textual front end: model, property and config files."""

from .parser import (
    ModelParse,
    PropertyFile,
    load_model,
    parse_config,
    parse_model,
    parse_properties,
)
from .printer import format_config, format_number, pretty_print

__all__ = [
    "ModelParse",
    "PropertyFile",
    "format_config",
    "format_number",
    "load_model",
    "parse_config",
    "parse_model",
    "parse_properties",
    "pretty_print",
]
