"""Unit-suffixed quantity parsing for the command line.

Everything inside the package is SI; these helpers convert at the boundary.
"""
import math
import re

_SCALES = {
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9, "cm": 1e-2},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6},
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6},
    "temperature": {"k": 1.0, "mk": 1e-3, "uk": 1e-6, "µk": 1e-6, "nk": 1e-9},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "rate": {"hz": 1.0, "khz": 1e3},
    "number": {"": 1.0},
}

_DEFAULT_UNIT = {
    "length": "m",
    "time": "s",
    "frequency": "hz",
    "temperature": "k",
    "angle": "rad",
    "rate": "hz",
    "number": "",
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([^\s]*)\s*$")


def parse_quantity(text, kind, default_unit=None):
    """Parse ``"1.29mm"`` style input into an SI float.

    Parameters
    ----------
    text : str or float
        Number with an optional unit suffix. Bare numbers use
        ``default_unit`` (or the SI unit of ``kind``).
    kind : str
        One of ``length``, ``time``, ``frequency``, ``temperature``,
        ``angle``, ``rate``.
    default_unit : str, optional
        Unit applied to bare numbers.

    Raises
    ------
    ValueError
        On malformed numbers or units foreign to ``kind``.
    """
    if isinstance(text, (int, float)):
        value, unit = float(text), ""
    else:
        match = _NUMBER.match(str(text))
        if match is None:
            raise ValueError(f"cannot parse {kind} quantity {text!r}")
        value, unit = float(match.group(1)), match.group(2)
    scales = _SCALES[kind]
    unit = (unit or default_unit or _DEFAULT_UNIT[kind]).lower()
    if unit not in scales:
        raise ValueError(f"unknown {kind} unit {unit!r} in {text!r}; expected one of {sorted(scales)}")
    return value * scales[unit]


def parse_grid(text, kind, default_unit=None):
    """Parse ``start:stop:count`` (inclusive linspace) or a comma list."""
    import numpy as np

    text = str(text)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid {text!r} must be start:stop:count")
        lo = parse_quantity(parts[0], kind, default_unit)
        hi = parse_quantity(parts[1], kind, default_unit)
        count = int(parts[2])
        if count < 1:
            raise ValueError(f"grid {text!r} needs a positive count")
        return np.linspace(lo, hi, count)
    return np.array([parse_quantity(p, kind, default_unit) for p in text.split(",") if p.strip()])
