"""Sectioned key=value run configuration: parsing, validation, canonical form.

Grammar (one directive per line):

    # comment                        blank lines and #-comments are skipped
    [section]                        sections: symbol, nonlinearity, grid,
                                     solver, sweep, output
    key = value                      keys listed in _SCHEMA; values are decimal
                                     text, bare words, or comma-separated lists

Unknown sections or keys are rejected with the offending line and column.
Missing keys take the documented defaults.  normalize() returns the canonical
text (sorted sections and keys, defaults materialized), which is what the
config hash is computed over.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .grids import PeriodicGrid
from .nonlinearity import CutoffSpec, NonlinearitySpec
from .solver import (
    NewtonParams,
    PGParams,
    SolveConfig,
    default_penalizer,
)
from .symbols import SymbolSpec, builtin_symbol

__all__ = ["RunConfig", "parse_config", "parse_config_text"]

_SCHEMA = {
    "symbol": {
        "name": "whitham",
        "sigma": "",  # fractional order, required for name = fractional
        "path": "",  # table file, required for name = table
    },
    "nonlinearity": {
        "q": "1",
        "gamma": "1",
        "form": "absolute",
        "cutoff": "on",
        "theta": "0.25",
        "c_a": "1",
    },
    "grid": {
        "p": "128",
        "n": "2048",
    },
    "solver": {
        "mu": "0.001",
        "s": "1",
        "penalizer": "on",
        "pg_max_iter": "4000",
        "pg_tol": "auto",
        "newton_max_iter": "30",
        "newton_tol": "1e-10",
        "gmres_tol": "1e-13",
    },
    "sweep": {
        "mu_top": "0.01",
        "mu_bottom": "0.0001",
        "rungs_per_decade": "2",
        "auto_p": "off",
        "p_ladder": "64,128,256",
    },
    "output": {
        "dir": "out",
        "plots": "off",
    },
}

_FLAGS = {"on": True, "off": False, "true": True, "false": False}


@dataclass(frozen=True)
class RunConfig:
    sections: dict = field(repr=False)
    source: str = ""

    def get(self, section: str, key: str) -> str:
        return self.sections[section][key.lower()]

    def get_float(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigurationError(f"[{section}] {key}: expected a number, got {raw!r}")

    def get_int(self, section: str, key: str) -> int:
        val = self.get_float(section, key)
        if val != int(val):
            raise ConfigurationError(f"[{section}] {key}: expected an integer, got {val}")
        return int(val)

    def get_flag(self, section: str, key: str) -> bool:
        raw = self.get(section, key).lower()
        if raw not in _FLAGS:
            raise ConfigurationError(f"[{section}] {key}: expected on/off, got {raw!r}")
        return _FLAGS[raw]

    def normalize(self) -> str:
        lines = []
        for section in sorted(self.sections):
            lines.append(f"[{section}]")
            for key in sorted(self.sections[section]):
                value = self.sections[section][key]
                if value != "":  # unset optional keys stay out of the canonical form
                    lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.normalize().encode()).hexdigest()[:12]

    # -- builders -----------------------------------------------------------

    def build_symbol(self) -> SymbolSpec:
        name = self.get("symbol", "name")
        if name == "whitham":
            return builtin_symbol("whitham")
        if name == "fractional":
            sigma = self.get("symbol", "sigma")
            if not sigma:
                raise ConfigurationError("[symbol] fractional needs sigma")
            return builtin_symbol("fractional", sigma=float(sigma))
        if name == "table":
            path = self.get("symbol", "path")
            if not path:
                raise ConfigurationError("[symbol] table needs path")
            return builtin_symbol("table", path=path)
        raise ConfigurationError(f"[symbol] unknown name {name!r}")

    def build_nonlinearity(self) -> NonlinearitySpec:
        return NonlinearitySpec(
            q=self.get_float("nonlinearity", "q"),
            gamma=self.get_float("nonlinearity", "gamma"),
            form=self.get("nonlinearity", "form"),
            cutoff=CutoffSpec(enabled=self.get_flag("nonlinearity", "cutoff"),
                              theta=self.get_float("nonlinearity", "theta"),
                              c_A=self.get_float("nonlinearity", "c_a")),
        )

    def build_grid(self) -> PeriodicGrid:
        return PeriodicGrid(P=self.get_float("grid", "P"), N=self.get_int("grid", "N"))

    def build_solve_config(self, mu: float | None = None,
                           pen_mu_max: float | None = None) -> SolveConfig:
        mu_val = mu if mu is not None else self.get_float("solver", "mu")
        s = self.get_float("solver", "s")
        pg_tol_raw = self.get("solver", "pg_tol")
        pg = PGParams(max_iter=self.get_int("solver", "pg_max_iter"),
                      tol=None if pg_tol_raw == "auto" else float(pg_tol_raw))
        newton = NewtonParams(max_iter=self.get_int("solver", "newton_max_iter"),
                              accept_tol=self.get_float("solver", "newton_tol"),
                              gmres_rtol_floor=self.get_float("solver", "gmres_tol"))
        pen = None
        if self.get_flag("solver", "penalizer"):
            pen = default_penalizer(pen_mu_max if pen_mu_max is not None else mu_val, s)
        return SolveConfig(mu=mu_val, grid=self.build_grid(), sym=self.build_symbol(),
                           nl=self.build_nonlinearity(), s=s, pen=pen, pg=pg,
                           newton=newton)

    def mu_ladder(self) -> list:
        top = self.get_float("sweep", "mu_top")
        bottom = self.get_float("sweep", "mu_bottom")
        per_decade = self.get_float("sweep", "rungs_per_decade")
        if not (0 < bottom < top):
            raise ConfigurationError("[sweep] needs 0 < mu_bottom < mu_top")
        n = int(round(np.log10(top / bottom) * per_decade)) + 1
        return list(np.geomspace(top, bottom, max(n, 2)))

    def p_ladder(self) -> list:
        raw = self.get("sweep", "p_ladder")
        try:
            vals = [float(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError:
            raise ConfigurationError(f"[sweep] p_ladder: expected comma-separated numbers, got {raw!r}")
        if len(vals) < 2 or any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigurationError("[sweep] p_ladder must be increasing with >= 2 entries")
        return vals


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    sections = {name: dict(defaults) for name, defaults in _SCHEMA.items()}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        stripped = line.strip()
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                col = len(line)
                raise ConfigurationError(f"{source}:{lineno}:{col}: unterminated section header")
            name = stripped[1:-1].strip()
            if name not in _SCHEMA:
                col = line.index("[") + 1
                raise ConfigurationError(
                    f"{source}:{lineno}:{col}: unknown section [{name}] "
                    f"(expected one of {sorted(_SCHEMA)})")
            current = name
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}:1: expected 'key = value' or '[section]'")
        if current is None:
            raise ConfigurationError(f"{source}:{lineno}:1: key outside any section")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key not in _SCHEMA[current]:
            col = max(line.lower().find(key), 0) + 1
            raise ConfigurationError(
                f"{source}:{lineno}:{col}: unknown key {key!r} in [{current}] "
                f"(expected one of {sorted(_SCHEMA[current])})")
        if not value:
            raise ConfigurationError(f"{source}:{lineno}:{len(line)}: empty value for {key!r}")
        sections[current][key] = value
    return RunConfig(sections=sections, source=source)


def parse_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}")
    return parse_config_text(text, source=str(path))
