"""Run configuration: YAML parsing, validation and unit conversion.

Quoted units follow the conventions of the bundled reference runs:

* ``delta_MHz``, tooth detunings and all GHz-quoted pulse/shift values
  are optical frequencies and convert with a factor 2*pi to rad/s.
* ``gamma_MHz`` is an amplitude decay rate: gamma = value * 1e6 in 1/s
  (no 2*pi).  The headline storage figures of the reference operating
  points are reproduced under this reading; see the README.
* ``w0_um`` converts to metres, ``length_m`` is already SI.

Validation never stops at the first problem: every offending key is
reported with its path and, where the key appears literally in the
source, its line number.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ConfigError

__all__ = ["RunConfig", "parse_config", "serialize_config", "config_hash",
           "EXPERIMENTS"]

EXPERIMENTS = ("echo", "polarization", "transverse", "thermal", "atoms",
               "optimize", "sweep")

MHZ = 2.0 * np.pi * 1e6
GHZ = 2.0 * np.pi * 1e9

# schema: section -> key -> (kind, default, constraint)
#   kind: "int" | "float" | "str" | "list" | "dict"
#   default None with required=False means "omitted unless given"
_POSITIVE = ("> 0", lambda v: v > 0)
_NON_NEGATIVE = (">= 0", lambda v: v >= 0)
_ANY = (None, lambda v: True)

_SCHEMA = {
    "experiment": {
        "kind": ("str", None, (f"one of {EXPERIMENTS}",
                               lambda v: v in EXPERIMENTS)),
    },
    "comb": {
        "n_teeth": ("int", 9, (">= 1", lambda v: v >= 1)),
        "delta_MHz": ("float", 400.0, _POSITIVE),
        "gamma_MHz": ("float", 5.0, _POSITIVE),
        "weight": ("float", None, _NON_NEGATIVE),
        "optical_depth": ("float", None, _NON_NEGATIVE),
        "weight_scale": ("float", 1.0, _NON_NEGATIVE),
        "teeth": ("list", None, _ANY),
    },
    "medium": {
        "length_m": ("float", 1e-3, _POSITIVE),
    },
    "pulse": {
        "width_GHz": ("float", 0.0, _NON_NEGATIVE),   # 0 = optimise
        "mean_GHz": ("float", 0.0, _ANY),
    },
    "dual": {
        "shift_GHz": ("float", 0.0, _ANY),
        "cross_weights": ("list", [], _ANY),
    },
    "atom": {
        "name": ("str", "cs", _ANY),
        "field_T": ("float", 0.05, _POSITIVE),
        "gamma_MHz": ("float", 5.0, _POSITIVE),
    },
    "transverse": {
        "ell": ("int", 1, _ANY),
        "p": ("int", 0, _NON_NEGATIVE),
        "w0_um": ("float", 1000.0, _POSITIVE),
        "lambda_nm": ("float", 387.7, _POSITIVE),
        "grid_n": ("int", 128, (">= 32", lambda v: v >= 32)),
        "grid_extent_factor": ("float", 10.0, (">= 6", lambda v: v >= 6)),
        "nz": ("int", 8, (">= 1", lambda v: v >= 1)),
        "density": ("dict", {"kind": "homogeneous"}, _ANY),
    },
    "thermal": {
        "temperature_K": ("float", 0.0, _NON_NEGATIVE),
        "atom_mass_amu": ("float", 132.905451933, _POSITIVE),
        "fit_const": ("float", 0.76, _POSITIVE),
    },
    "optimizer": {
        "mode": ("str", "weight-too",
                 ("one of width-and-mean/mean-only/weight-too",
                  lambda v: v in ("width-and-mean", "mean-only", "weight-too"))),
        "coarse_points": ("int", 0, _NON_NEGATIVE),   # 0 = automatic
    },
    "sweep": {
        "axis": ("str", "lambda_GHz",
                 ("one of lambda_GHz/temperature_K/ell/width_GHz",
                  lambda v: v in ("lambda_GHz", "temperature_K", "ell",
                                  "width_GHz"))),
        "values": ("list", [], _ANY),
        "mode": ("str", "optimize-width-and-mean",
                 ("one of optimize-width-and-mean/fixed-width-optimize-mean",
                  lambda v: v in ("optimize-width-and-mean",
                                  "fixed-width-optimize-mean"))),
    },
    "output": {
        "basename": ("str", "run", _ANY),
    },
}

_REQUIRED_SECTIONS = {
    "echo": ("comb", "medium"),
    "polarization": ("comb", "medium"),
    "transverse": ("comb", "medium", "transverse"),
    "thermal": ("comb", "medium", "thermal"),
    "atoms": ("atom",),
    "optimize": ("comb", "medium", "optimizer"),
    "sweep": ("comb", "medium", "sweep"),
}

_KIND_CHECK = {
    "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "float": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "str": lambda v: isinstance(v, str),
    "list": lambda v: isinstance(v, list),
    "dict": lambda v: isinstance(v, dict),
}


@dataclass(frozen=True)
class Problem:
    path: str
    message: str
    line: int | None = None

    def __str__(self):
        where = f" (line {self.line})" if self.line else ""
        return f"{self.path}: {self.message}{where}"


@dataclass(frozen=True)
class RunConfig:
    """Validated, defaults-applied configuration for one experiment run."""

    experiment: str
    sections: dict
    defaulted: tuple = field(default_factory=tuple)
    given_sections: tuple = field(default_factory=tuple)

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def flat(self) -> dict:
        """'section.key' -> value mapping, for output headers."""
        out = {"experiment": self.experiment}
        for sec, keys in sorted(self.sections.items()):
            if sec == "experiment":
                continue
            for key, val in sorted(keys.items()):
                out[f"{sec}.{key}"] = val
        return out


def _line_of(text: str, key: str) -> int | None:
    for i, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0]
        if stripped.strip().startswith(f"{key}:"):
            return i
    return None


def parse_config(text: str) -> RunConfig:
    """Validate YAML configuration text; raise ConfigError listing every
    problem (unknown keys, type and range violations, missing sections).
    """
    problems: list[Problem] = []
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([Problem("<document>", f"not valid YAML: {exc}")])
    if not isinstance(raw, dict):
        raise ConfigError([Problem("<document>", "top level must be a mapping")])

    kind = raw.get("experiment")
    if kind not in EXPERIMENTS:
        problems.append(Problem("experiment",
                                f"must be one of {EXPERIMENTS}, got {kind!r}",
                                _line_of(text, "experiment")))
        raise ConfigError(problems)

    unknown_sections = set(raw) - set(_SCHEMA) - {"experiment"}
    for sec in sorted(unknown_sections):
        problems.append(Problem(sec, "unknown section", _line_of(text, sec)))

    sections: dict = {}
    defaulted: list[str] = []
    for sec, keys in _SCHEMA.items():
        if sec == "experiment":
            continue
        given = raw.get(sec, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            problems.append(Problem(sec, "section must be a mapping",
                                    _line_of(text, sec)))
            continue
        for key in sorted(set(given) - set(keys)):
            problems.append(Problem(f"{sec}.{key}", "unknown key",
                                    _line_of(text, key)))
        out = {}
        for key, (want, default, (desc, check)) in keys.items():
            if key in given:
                value = given[key]
                if value is not None and not _KIND_CHECK[want](value):
                    problems.append(Problem(
                        f"{sec}.{key}", f"expected {want}, got {value!r}",
                        _line_of(text, key)))
                    continue
                if value is not None and not check(value):
                    problems.append(Problem(
                        f"{sec}.{key}",
                        f"unit/range violation: must be {desc}, got {value!r}",
                        _line_of(text, key)))
                    continue
                out[key] = value
            else:
                if default is not None or key in ("weight", "optical_depth",
                                                  "teeth"):
                    out[key] = default
                    defaulted.append(f"{sec}.{key}")
        sections[sec] = out

    for sec in _REQUIRED_SECTIONS[kind]:
        if sec not in raw or raw.get(sec) in (None, {}):
            # defaults make every section usable; only flag sections whose
            # intent cannot be defaulted
            if sec in ("atom",) and kind == "atoms" and "atom" not in raw:
                problems.append(Problem(sec, "required section missing",
                                        None))

    if "comb" in sections:
        comb = sections["comb"]
        if comb.get("weight") is not None and comb.get("optical_depth") is not None:
            problems.append(Problem(
                "comb.weight", "give either weight or optical_depth, not both",
                _line_of(text, "weight")))
        teeth = comb.get("teeth")
        if teeth is not None:
            for idx, entry in enumerate(teeth):
                ok = (isinstance(entry, (list, tuple)) and len(entry) == 2
                      and all(isinstance(v, (int, float)) for v in entry)
                      and entry[1] >= 0)
                if not ok:
                    problems.append(Problem(
                        f"comb.teeth[{idx}]",
                        "expected [detuning_MHz, weight >= 0]",
                        _line_of(text, "teeth")))

    if problems:
        raise ConfigError(problems)
    given = tuple(sec for sec in _SCHEMA if sec != "experiment"
                  and isinstance(raw.get(sec), dict) and raw[sec])
    return RunConfig(kind, sections, tuple(defaulted), given)


def serialize_config(config: RunConfig) -> str:
    """Canonical YAML for a validated config (defaults included)."""
    doc = {"experiment": config.experiment}
    doc.update({sec: dict(sorted(keys.items()))
                for sec, keys in sorted(config.sections.items()) if keys})
    return yaml.safe_dump(doc, sort_keys=True)


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# builders: config sections -> physics objects
# ---------------------------------------------------------------------------

def build_medium(config: RunConfig):
    from .spectral import CombTooth, FrequencyComb, MediumSpec
    from .storage import reference_weight

    comb_cfg = config["comb"]
    length = config.get("medium", "length_m")
    gamma = comb_cfg["gamma_MHz"] * 1e6    # decay rate, 1/s
    if comb_cfg.get("teeth"):
        teeth = tuple(CombTooth(d * MHZ, w) for d, w in comb_cfg["teeth"])
        comb = FrequencyComb(teeth, gamma)
    else:
        from .spectral import make_ideal_comb
        delta = comb_cfg["delta_MHz"] * MHZ
        if comb_cfg.get("weight") is not None:
            weight = comb_cfg["weight"]
        elif comb_cfg.get("optical_depth") is not None:
            weight = comb_cfg["optical_depth"] * gamma / (2.0 * length)
        else:
            weight = None
        comb = make_ideal_comb(comb_cfg["n_teeth"], delta, gamma,
                               1.0 if weight is None else weight)
        if weight is None:
            comb = comb.scaled(reference_weight(comb, length))
    comb = comb.scaled(comb_cfg.get("weight_scale", 1.0))
    return MediumSpec(length, comb)


def build_dual_comb(config: RunConfig):
    from .polarization import DualComb

    medium = build_medium(config)
    dual = config["dual"]
    cross = tuple((d * MHZ, w) for d, w in dual.get("cross_weights") or [])
    return DualComb(medium.comb, medium.comb, cross,
                    dual.get("shift_GHz", 0.0) * GHZ), medium.length


def build_atomic_dual_comb(config: RunConfig):
    from .atoms import make_atomic_dual_comb
    from .polarization import DualComb
    from .storage import reference_weight

    atom = config["atom"]
    length = config.get("medium", "length_m")
    dc = make_atomic_dual_comb(atom["name"], atom["field_T"],
                               gamma=atom["gamma_MHz"] * 1e6)
    scale = reference_weight(dc.comb_plus, length)
    return DualComb(dc.comb_plus.scaled(scale),
                    dc.comb_minus.scaled(scale)), length


def build_lg_spec(config: RunConfig):
    from .transverse import LGModeSpec

    t = config["transverse"]
    return LGModeSpec(ell=t["ell"], p=t["p"], w0=t["w0_um"] * 1e-6,
                      wavelength=t["lambda_nm"] * 1e-9)


def build_density(config: RunConfig):
    from .transverse import DensityProfile

    t = config["transverse"]
    dens = t.get("density") or {"kind": "homogeneous"}
    kind = dens.get("kind", "homogeneous")
    if kind == "gaussian":
        ratio = dens.get("w0_prime_over_w0", 1.0)
        return DensityProfile("gaussian", dens.get("n0", 1.0),
                              w0_prime=ratio * t["w0_um"] * 1e-6)
    return DensityProfile("homogeneous", dens.get("n0", 1.0))


def build_thermal_spec(config: RunConfig):
    from scipy.constants import atomic_mass

    from .thermal import ThermalSpec

    th = config["thermal"]
    return ThermalSpec(th["temperature_K"], th["atom_mass_amu"] * atomic_mass,
                       th["fit_const"])
