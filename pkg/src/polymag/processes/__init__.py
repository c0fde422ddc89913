"""Process catalog and the spec document format."""
from .catalog import BUILTINS, builtin, check_point
from .parser import parse_expression, parse_spec, parse_time_coefficient, to_document

__all__ = [
    "BUILTINS",
    "builtin",
    "check_point",
    "parse_expression",
    "parse_spec",
    "parse_time_coefficient",
    "to_document",
]
