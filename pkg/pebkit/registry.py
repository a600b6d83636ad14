# pebkit/registry.py

import inspect
from typing import Callable, Dict, get_type_hints

from pebkit.errors import InputError

# CLI name -> generator callable, and CLI name -> parameter schema
GENERATOR_REGISTRY: Dict[str, Callable] = {}
SCHEMA_REGISTRY: Dict[str, dict] = {}

_TYPE_NAMES = {int: "integer", float: "number", bool: "boolean", str: "string"}


def generator(name: str) -> Callable[[Callable], Callable]:
    """
    Decorator registering a channel generator under its CLI name:
      1) Inspects the signature and docstring to build a parameter schema.
      2) Registers the function object in GENERATOR_REGISTRY.
      3) Registers the schema in SCHEMA_REGISTRY for `pebkit zoo`.

    Parameter descriptions are read from docstring lines of the form
    ``param: description``.
    """
    def register(func: Callable) -> Callable:
        sig = inspect.signature(func)
        type_hints = get_type_hints(func)
        doc = inspect.getdoc(func) or ""
        first_line, *rest = doc.split("\n", 1)

        properties = {}
        required_fields = []
        for pname, param in sig.parameters.items():
            py_type = type_hints.get(pname, float)
            # `int | None` style hints register as their non-None member
            members = [t for t in getattr(py_type, "__args__", (py_type,)) if t is not type(None)]
            py_type = members[0] if members else float
            param_desc = ""
            if rest:
                for line in rest[0].splitlines():
                    line = line.strip()
                    if line.startswith(f"{pname}:"):
                        param_desc = line.split(":", 1)[1].strip()
                        break
            properties[pname] = {
                "type": _TYPE_NAMES.get(py_type, "string"),
                "python_type": py_type,
                "description": param_desc,
            }
            if param.default is inspect.Parameter.empty:
                required_fields.append(pname)
            else:
                properties[pname]["default"] = param.default

        GENERATOR_REGISTRY[name] = func
        SCHEMA_REGISTRY[name] = {
            "name": name,
            "description": first_line,
            "parameters": properties,
            "required": required_fields,
        }
        return func

    return register


def _coerce(value, py_type, pname: str):
    if not isinstance(value, str) or py_type is str:
        return value
    try:
        if py_type is bool:
            lowered = value.lower()
            if lowered not in ("1", "0", "true", "false", "yes", "no"):
                raise ValueError(value)
            return lowered in ("1", "true", "yes")
        if py_type is int:
            return int(value)
        return float(value)
    except ValueError:
        raise InputError(f"parameter '{pname}' expects {_TYPE_NAMES.get(py_type, 'a value')}, got {value!r}")


def make_channel(name: str, **params):
    """Call a registered generator, coercing string parameters through its schema."""
    if name not in GENERATOR_REGISTRY:
        known = ", ".join(sorted(GENERATOR_REGISTRY))
        raise InputError(f"unknown channel generator '{name}' (known: {known})")
    schema = SCHEMA_REGISTRY[name]
    unknown = set(params) - set(schema["parameters"])
    if unknown:
        raise InputError(f"generator '{name}' has no parameter(s) {sorted(unknown)}")
    missing = [p for p in schema["required"] if p not in params]
    if missing:
        raise InputError(f"generator '{name}' needs parameter(s) {missing}")
    coerced = {
        pname: _coerce(value, schema["parameters"][pname]["python_type"], pname)
        for pname, value in params.items()
    }
    return GENERATOR_REGISTRY[name](**coerced)
