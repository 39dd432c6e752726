"""Small argument checks shared by the config parser and the recipes."""

from __future__ import annotations


def check_int(name, value, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def check_probability(name, value, open_low=True):
    lo_ok = value > 0 if open_low else value >= 0
    if not (lo_ok and value <= 1):
        bound = "(0, 1]" if open_low else "[0, 1]"
        raise ValueError(f"{name} must be in {bound}, got {value}")
    return value


def check_choice(name, value, choices):
    if value not in choices:
        raise ValueError(f"{name} must be one of {sorted(choices)}, got {value!r}")
    return value


def check_nonempty(name, seq):
    if not seq:
        raise ValueError(f"{name} must not be empty")
    return seq
