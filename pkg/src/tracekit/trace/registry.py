"""
Dialect registry for trace parser discovery and instantiation.

Parsers register themselves under their ``Dialect`` so the loader can pick one by
name after auto-detection, without importing concrete parser modules directly.

Example:
    Registering a parser:

    >>> @register_dialect(Dialect.KINETO_GPU)
    ... class KinetoParser(TraceParser):
    ...     ...

    Using the registry:

    >>> parser = get_parser("KinetoGpu")
    >>> timeline = parser.parse_file("rank0.json", rank=0)
"""

from typing import Callable, Type

from tracekit.trace.base import TraceParser
from tracekit.trace.model import Dialect

DIALECT_REGISTRY: dict[Dialect, Type[TraceParser]] = {}


def register_dialect(dialect: Dialect | str) -> Callable[[Type], Type]:
    """
    Decorator to register a parser class under a dialect.

    Parameters:
        dialect: The dialect the parser handles.

    Returns:
        A decorator that registers the class.
    """

    def decorator(cls):
        cls.dialect = Dialect(dialect)
        DIALECT_REGISTRY[Dialect(dialect)] = cls
        return cls

    return decorator


def get_parser(dialect: Dialect | str, **kwargs) -> TraceParser:
    """
    Factory function to instantiate the parser registered for a dialect.

    Parameters:
        dialect: The registered dialect name (e.g., "KinetoGpu").
        **kwargs: Passed to the parser's constructor (e.g., ``patterns``).

    Raises:
        ValueError: If no parser is registered for the dialect.
    """
    try:
        key = Dialect(dialect)
    except ValueError:
        key = None
    if key not in DIALECT_REGISTRY:
        available = [str(d) for d in DIALECT_REGISTRY]
        raise ValueError(f"Dialect '{dialect}' is not registered. Available dialects: {available}")
    return DIALECT_REGISTRY[key](**kwargs)
