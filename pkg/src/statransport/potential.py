"""Gaussian-beam trap description, axial force models and effective frequency.

Offset convention: the ``HARMONIC`` and ``QUARTIC`` potentials are measured
from the bottom of the well (zero at the trap centre), ``FULL_GAUSSIAN`` from
the vacuum level (``-U0`` at the trap centre). Forces do not depend on it.
"""
from dataclasses import dataclass
from enum import Enum
import json
import math
from pathlib import Path

import numpy as np
from scipy import constants

AMU = constants.physical_constants["atomic mass constant"][0]
K_B = constants.k
MASS_K40 = 39.96399848 * AMU

#: default geometry of the science-chamber trap (40K, 1064 nm, 19.45 um waist)
DEFAULT_WAIST = 19.45e-6
DEFAULT_WAVELENGTH = 1.064e-6


class ForceModel(str, Enum):
    """Fidelity level of the axial trapping force."""

    HARMONIC = "harmonic"
    QUARTIC = "quartic"
    FULL_GAUSSIAN = "full-gaussian"

    @property
    def code(self):
        return {"harmonic": 0, "quartic": 1, "full-gaussian": 2}[self.value]

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"quartic-corrected": "quartic", "gaussian": "full-gaussian", "fullgaussian": "full-gaussian"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class TrapConfig:
    """Single-beam optical dipole trap.

    Parameters
    ----------
    depth : float
        Trap depth ``U0`` in J.
    waist : float
        Beam waist radius in m.
    wavelength : float
        Laser wavelength in m.
    mass : float
        Particle mass in kg.
    radial_freq : float, optional
        Radial angular frequency in rad/s. When omitted it is derived from the
        beam, ``sqrt(4 U0 / (m waist**2))``.
    """

    depth: float
    waist: float
    wavelength: float
    mass: float
    radial_freq: float | None = None

    def __post_init__(self):
        for name in ("depth", "waist", "wavelength", "mass"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"TrapConfig.{name} must be positive and finite, got {value!r}")
        if self.radial_freq is not None and not self.radial_freq > 0:
            raise ValueError(f"TrapConfig.radial_freq must be positive, got {self.radial_freq!r}")

    @property
    def rayleigh(self):
        """Rayleigh range ``pi waist**2 / wavelength``."""
        return math.pi * self.waist**2 / self.wavelength

    @property
    def omega0(self):
        """Harmonic axial angular frequency ``sqrt(2 U0 / (m zR**2))``."""
        return math.sqrt(2.0 * self.depth / (self.mass * self.rayleigh**2))

    @property
    def omega_r(self):
        if self.radial_freq is not None:
            return self.radial_freq
        return math.sqrt(4.0 * self.depth / (self.mass * self.waist**2))

    @property
    def aspect_ratio(self):
        return self.omega_r / self.omega0

    @classmethod
    def from_axial_frequency(cls, omega0, waist=DEFAULT_WAIST, wavelength=DEFAULT_WAVELENGTH,
                             mass=MASS_K40, radial_freq=None):
        """Build the config whose derived axial frequency equals ``omega0``."""
        zr = math.pi * waist**2 / wavelength
        depth = 0.5 * mass * omega0**2 * zr**2
        return cls(depth=depth, waist=waist, wavelength=wavelength, mass=mass, radial_freq=radial_freq)

    def with_aspect_ratio(self, ratio):
        """Copy with ``omega_r = ratio * omega0``."""
        return TrapConfig(self.depth, self.waist, self.wavelength, self.mass, ratio * self.omega0)

    def to_dict(self):
        return {
            "depth_J": self.depth,
            "waist_m": self.waist,
            "wavelength_m": self.wavelength,
            "mass_kg": self.mass,
            "omega_r_rad_s": self.omega_r,
            "omega0_rad_s": self.omega0,
            "rayleigh_m": self.rayleigh,
        }


def trap_config_from_mapping(data):
    """Build a :class:`TrapConfig` from configuration-file keys.

    Recognised keys: ``depth_uK`` (depth divided by Boltzmann's constant) or
    ``omega0_Hz`` (axial frequency ``omega0 / 2 pi`` in Hz), plus
    ``waist_um``, ``wavelength_nm``, ``mass_amu`` and optional ``omega_r_Hz``.
    """
    unknown = set(data) - {"depth_uK", "omega0_Hz", "waist_um", "wavelength_nm", "mass_amu", "omega_r_Hz"}
    if unknown:
        raise ValueError(f"unknown trap config keys: {sorted(unknown)}")
    has_depth = "depth_uK" in data
    has_freq = "omega0_Hz" in data
    if has_depth == has_freq:
        raise ValueError("trap config needs exactly one of depth_uK or omega0_Hz")
    waist = float(data.get("waist_um", DEFAULT_WAIST * 1e6)) * 1e-6
    wavelength = float(data.get("wavelength_nm", DEFAULT_WAVELENGTH * 1e9)) * 1e-9
    mass = float(data["mass_amu"]) * AMU if "mass_amu" in data else MASS_K40
    radial = 2 * math.pi * float(data["omega_r_Hz"]) if "omega_r_Hz" in data else None
    if has_depth:
        return TrapConfig(float(data["depth_uK"]) * 1e-6 * K_B, waist, wavelength, mass, radial)
    return TrapConfig.from_axial_frequency(2 * math.pi * float(data["omega0_Hz"]), waist, wavelength, mass, radial)


def load_trap_config(path):
    """Read a trap config file (``.json``, ``.toml``, ``.yaml``/``.yml``)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".json":
        data = json.loads(path.read_text())
    elif suffix == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:  # Python < 3.11
            import tomli as tomllib
        data = tomllib.loads(path.read_text())
    elif suffix in (".yaml", ".yml"):
        import yaml

        data = yaml.safe_load(path.read_text())
    else:
        raise ValueError(f"unsupported trap config format {suffix!r}")
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a key-value mapping")
    return trap_config_from_mapping(data)


def _as_float(z):
    # keep extended precision inputs (np.longdouble) intact
    z = np.asarray(z)
    return z if np.issubdtype(z.dtype, np.floating) else z.astype(float)


def axial_potential(z, z_cup, cfg, model):
    """On-axis potential energy of a particle at ``z`` in a trap centred at ``z_cup``."""
    model = ForceModel.parse(model)
    x = _as_float(z) - z_cup
    k = cfg.mass * cfg.omega0**2
    if model is ForceModel.HARMONIC:
        out = 0.5 * k * x**2
    elif model is ForceModel.QUARTIC:
        out = 0.5 * k * x**2 - 0.5 * k * x**4 / cfg.rayleigh**2
    else:
        out = -cfg.depth / (1.0 + (x / cfg.rayleigh) ** 2)
    return out if out.ndim else float(out)


def axial_force(z, z_cup, cfg, model):
    """Analytic negative gradient of :func:`axial_potential`."""
    model = ForceModel.parse(model)
    x = _as_float(z) - z_cup
    k = cfg.mass * cfg.omega0**2
    if model is ForceModel.HARMONIC:
        out = -k * x
    elif model is ForceModel.QUARTIC:
        out = -k * x * (1.0 - 2.0 * x**2 / cfg.rayleigh**2)
    else:
        q = 1.0 + (x / cfg.rayleigh) ** 2
        out = -k * x / q**2
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class EnsembleMoments:
    """Second moments of a cloud around the trap centre (m**2)."""

    radial_var: float
    axial_var: float

    def __post_init__(self):
        if self.radial_var < 0 or self.axial_var < 0:
            raise ValueError("ensemble variances must be non-negative")

    def anharmonic_shift(self, cfg):
        """``4 <r^2>/sigma^2 + <(z - z_cup)^2>/zR^2``."""
        return 4.0 * self.radial_var / cfg.waist**2 + self.axial_var / cfg.rayleigh**2

    @classmethod
    def from_axial(cls, cfg, axial_var, dof=2):
        """Moments with the radial variance estimated from the aspect ratio."""
        return cls(radial_variance_from_aspect(axial_var, cfg.omega0, cfg.omega_r, dof), axial_var)

    @classmethod
    def from_spread(cls, cfg, axial_rms, dof=2):
        return cls.from_axial(cfg, axial_rms**2, dof)


def radial_variance_from_aspect(axial_var, omega0, omega_r, dof=2):
    """Radial ``<r^2>`` from the axial variance by equipartition.

    Each transverse degree of freedom holds ``axial_var * (omega0/omega_r)**2``;
    ``<r^2> = <x^2> + <y^2>`` sums ``dof`` of them.
    """
    if omega0 <= 0 or omega_r <= 0:
        raise ValueError("frequencies must be positive")
    return dof * axial_var * (omega0 / omega_r) ** 2


def effective_frequency(cfg, mom, variant="linear"):
    """Softened axial frequency of a thermal cloud.

    ``variant="linear"`` returns ``omega0 * (1 - eps)`` with
    ``eps = 4 <r^2>/sigma^2 + <dz^2>/zR^2``; ``variant="sqrt"`` returns
    ``omega0 * sqrt(1 - eps)``, the frequency of the averaged Hamiltonian whose
    spring constant carries the bracket.

    Raises
    ------
    ValueError
        When ``eps >= 1`` (outside the perturbative regime) or the variant is
        unknown.
    """
    eps = mom.anharmonic_shift(cfg)
    if not eps < 1.0:
        raise ValueError(f"moments outside the perturbative regime (shift {eps:.3g} >= 1)")
    if variant == "linear":
        return cfg.omega0 * (1.0 - eps)
    if variant == "sqrt":
        return cfg.omega0 * math.sqrt(1.0 - eps)
    raise ValueError(f"unknown effective-frequency variant {variant!r}")


def frequency_ratio(cfg, cold, hot, variant="linear"):
    """``effective_frequency(cold) / effective_frequency(hot)``."""
    return effective_frequency(cfg, cold, variant) / effective_frequency(cfg, hot, variant)
