"""
INI-style scenario files.

Example::

    [arrays]
    Nt = 8
    Nr = 4

    [ris]
    count = 1
    rows = 20
    cols = 20
    spacing_over_lambda = 0.5
    gamma_db = 0

    [angles]
    incoming_deg = 30
    outgoing_deg = 70
    spread_in_deg = 5
    spread_out_deg = 5

    [link]
    rho_db = 10
    direct_link = false
    carrier_ghz = 2.5

    [mc]
    n_samples = 2000
    seed = 1

    [optimize]
    method = alternating
    fp_tol = 1e-10
    outer_tol = 1e-8
    max_outer = 50

Per-RIS entries (``gamma_db`` and the four angle keys) hold ``count``
comma-separated values. ``[mc]`` and ``[optimize]`` may be omitted; every
other section and key is mandatory, and unknown sections or keys are
rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import ScenarioConfig
from .covariance import PlanarGrid
from .scenarios import RisSpec, build_scenario, db_to_linear, wavelength_from_ghz

__all__ = ["ScenarioError", "ScenarioFile", "read_scenario_file", "parse_scenario"]

METHODS = ("alternating", "closed_form", "eig_align", "none")

_SCHEMA = {
    "arrays": {"Nt": True, "Nr": True},
    "ris": {"count": True, "rows": True, "cols": True, "spacing_over_lambda": True,
            "gamma_db": True},
    "angles": {"incoming_deg": True, "outgoing_deg": True, "spread_in_deg": True,
               "spread_out_deg": True},
    "link": {"rho_db": True, "direct_link": True, "carrier_ghz": True},
    "mc": {"n_samples": False, "seed": False},
    "optimize": {"method": False, "fp_tol": False, "outer_tol": False, "max_outer": False},
}
_OPTIONAL_SECTIONS = {"mc", "optimize"}


class ScenarioError(ValueError):
    """Invalid scenario file; the message carries ``path:line``."""


@dataclass(frozen=True)
class ScenarioFile:
    """Parsed scenario, in the units of the file (dB, degrees, GHz)."""

    Nt: int
    Nr: int
    count: int
    rows: int
    cols: int
    spacing_over_lambda: float
    gamma_db: tuple
    incoming_deg: tuple
    outgoing_deg: tuple
    spread_in_deg: tuple
    spread_out_deg: tuple
    rho_db: float
    direct_link: bool
    carrier_ghz: float
    n_samples: int = 2000
    seed: int = 0
    method: str = "alternating"
    fp_tol: float = 1e-10
    outer_tol: float = 1e-8
    max_outer: int = 50

    @property
    def wavelength(self) -> float:
        return wavelength_from_ghz(self.carrier_ghz)

    @property
    def rho(self) -> float:
        return float(db_to_linear(self.rho_db))

    @property
    def gamma(self) -> np.ndarray:
        return db_to_linear(self.gamma_db)

    @property
    def grid(self) -> PlanarGrid:
        return PlanarGrid(self.rows, self.cols, self.spacing_over_lambda * self.wavelength)

    def replace(self, **changes) -> "ScenarioFile":
        return dataclasses.replace(self, **changes)

    def ris_specs(self) -> list:
        g = self.grid
        return [RisSpec(g, np.radians(self.incoming_deg[k]), np.radians(self.outgoing_deg[k]),
                        np.radians(self.spread_in_deg[k]), np.radians(self.spread_out_deg[k]),
                        float(self.gamma[k]))
                for k in range(self.count)]

    def to_config(self) -> ScenarioConfig:
        """Scenario with RIS covariances synthesised from the angular parameters."""
        return build_scenario(self.Nt, self.Nr, self.ris_specs(), self.rho, self.wavelength,
                              direct_link=self.direct_link, seed=self.seed)


def _line_of(lines, section, key=None) -> int:
    current = None
    for no, raw in enumerate(lines, 1):
        m = re.match(r"\s*\[([^\]]+)\]", raw)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return no
            continue
        if current == section and key is not None and re.match(
                rf"\s*{re.escape(key)}\s*[=:]", raw):
            return no
    return 0


def read_scenario_file(path) -> ScenarioFile:
    """
    Parse and validate a scenario file.

    Raises
    ------
    ScenarioError
        For missing, unknown, malformed or out-of-range entries.
    OSError
        If the file cannot be read.
    """
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        raise ScenarioError(f"{path}: {exc}") from exc

    def fail(msg, section, key=None):
        line = _line_of(lines, section, key)
        raise ScenarioError(f"{path}:{line}: {msg}")

    for section in parser.sections():
        if section not in _SCHEMA:
            fail(f"unknown section [{section}]", section)
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                fail(f"unknown key '{key}' in [{section}]", section, key)
    for section, keys in _SCHEMA.items():
        if not parser.has_section(section):
            if section in _OPTIONAL_SECTIONS:
                continue
            raise ScenarioError(f"{path}:0: missing section [{section}]")
        for key, required in keys.items():
            if required and key not in parser[section]:
                fail(f"missing key '{key}' in [{section}]", section)

    def get(section, key, conv, default=None):
        if not parser.has_section(section) or key not in parser[section]:
            return default
        raw = parser[section][key]
        try:
            return conv(raw)
        except ValueError:
            fail(f"bad value {raw!r} for '{key}'", section, key)

    def floats(raw):
        return tuple(float(v) for v in raw.split(",") if v.strip())

    def boolean(raw):
        v = raw.strip().lower()
        if v in ("true", "yes", "1", "on"):
            return True
        if v in ("false", "no", "0", "off"):
            return False
        raise ValueError(raw)

    def check(ok, msg, section, key):
        if not ok:
            fail(msg, section, key)

    Nt = get("arrays", "Nt", int)
    Nr = get("arrays", "Nr", int)
    check(Nt >= 1, "Nt must be at least 1", "arrays", "Nt")
    check(Nr >= 1, "Nr must be at least 1", "arrays", "Nr")
    K = get("ris", "count", int)
    check(K >= 0, "RIS count must be non-negative", "ris", "count")
    rows = get("ris", "rows", int)
    cols = get("ris", "cols", int)
    check(rows >= 1, "rows must be at least 1", "ris", "rows")
    check(cols >= 1, "cols must be at least 1", "ris", "cols")
    spacing = get("ris", "spacing_over_lambda", float)
    check(spacing > 0, "spacing must be positive", "ris", "spacing_over_lambda")

    per_ris = {}
    for section, key in (("ris", "gamma_db"), ("angles", "incoming_deg"),
                         ("angles", "outgoing_deg"), ("angles", "spread_in_deg"),
                         ("angles", "spread_out_deg")):
        vals = get(section, key, floats)
        check(len(vals) == K, f"'{key}' needs {K} value(s), got {len(vals)}", section, key)
        if key.startswith("spread"):
            check(all(v > 0 for v in vals), "angle spreads must be positive", section, key)
        elif key.endswith("_deg"):
            check(all(-90 <= v <= 90 for v in vals), "angles must lie in [-90, 90]",
                  section, key)
        per_ris[key] = vals

    carrier = get("link", "carrier_ghz", float)
    check(carrier > 0, "carrier frequency must be positive", "link", "carrier_ghz")
    n_samples = get("mc", "n_samples", int, 2000)
    check(n_samples >= 2, "n_samples must be at least 2", "mc", "n_samples")
    seed = get("mc", "seed", int, 0)
    check(0 <= seed < 2 ** 64, "seed must be a 64-bit unsigned integer", "mc", "seed")
    method = get("optimize", "method", str.strip, "alternating")
    check(method in METHODS, f"method must be one of {', '.join(METHODS)}",
          "optimize", "method")
    fp_tol = get("optimize", "fp_tol", float, 1e-10)
    outer_tol = get("optimize", "outer_tol", float, 1e-8)
    max_outer = get("optimize", "max_outer", int, 50)
    check(fp_tol > 0, "fp_tol must be positive", "optimize", "fp_tol")
    check(outer_tol >= 0, "outer_tol must be non-negative", "optimize", "outer_tol")
    check(max_outer >= 1, "max_outer must be at least 1", "optimize", "max_outer")

    return ScenarioFile(
        Nt=Nt, Nr=Nr, count=K, rows=rows, cols=cols, spacing_over_lambda=spacing,
        gamma_db=per_ris["gamma_db"], incoming_deg=per_ris["incoming_deg"],
        outgoing_deg=per_ris["outgoing_deg"], spread_in_deg=per_ris["spread_in_deg"],
        spread_out_deg=per_ris["spread_out_deg"], rho_db=get("link", "rho_db", float),
        direct_link=get("link", "direct_link", boolean), carrier_ghz=carrier,
        n_samples=n_samples, seed=seed, method=method, fp_tol=fp_tol,
        outer_tol=outer_tol, max_outer=max_outer)


def parse_scenario(path) -> ScenarioConfig:
    """Read a scenario file and build its :class:`ScenarioConfig`."""
    return read_scenario_file(path).to_config()
