"""
Scenario files: TOML with fixed sections, strict keys, documented defaults.

Every key is optional; an empty file is the reference configuration.
Unknown sections or keys are errors, so a typo never silently falls back to
a default.  See ``SCHEMA`` for keys and units.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .biphoton import SourceParams
from .counting import DetectorModel
from .dispersion import load_table
from .franson import FransonConfig, coherence_time_from_bandwidth
from .multiplex import default_banks
from .qpm import PolingSpec

__all__ = ["SCHEMA_VERSION", "SCHEMA", "ScenarioError", "Scenario", "parse_scenario", "load_scenario"]

SCHEMA_VERSION = 1

# section -> key -> (default, unit/description)
SCHEMA = {
    "": {
        "schema_version": (SCHEMA_VERSION, "file format version"),
        "seed": (20201, "master seed for every Monte-Carlo stage"),
        "output_dir": ("reproduce-out", "directory for report and CSVs"),
    },
    "source": {
        "pump_wavelength": (735.76, "nm"),
        "pump_power": (1.0, "mW"),
        "d33": (33.0, "pm/V"),
        "overlap": (0.928, "alpha^2, dimensionless"),
        "mode_area": (1.26, "um^2"),
        "gvd": (-60.0, "fs^2/mm at degeneracy"),
        "n_signal": (None, "index at 2x pump wavelength; bulk LN when unset"),
        "n_pump": (None, "index at pump wavelength; bulk LN when unset"),
        "dispersion_table": (None, "path to 'wavelength_nm n_eff' table for exact mode"),
    },
    "poling": {
        "period": (4.0, "um"),
        "duty_cycle": (0.5, "dimensionless"),
        "length": (6.0, "mm, also the SPDC interaction length"),
        "order": (1, "QPM order"),
    },
    "detector": {
        "eta1": (0.70, "arm-1 efficiency incl. fiber coupling"),
        "eta2": (0.70, "arm-2 efficiency incl. fiber coupling"),
        "dark_rate": (3500.0, "Hz per detector"),
        "window": (256.0, "coincidence window, ps"),
    },
    "channels": {
        "center": (1471.52, "degenerate wavelength, nm"),
        "pairs": (8, "number of channel pairs"),
        "spacing": (8.0, "pair spacing, nm-equivalent at the center"),
        "width": (0.8, "passband full width, nm"),
        "insertion_loss": (3.0, "dB"),
        "extinction": (60.0, "dB below the passband"),
        "accidental_floor": (1e-4, "accidental level relative to the matrix peak"),
        "grid_step": (10.0, "nm, correlation sweep grid"),
    },
    "franson": {
        "imbalance": (1.5, "ns"),
        "window": (256.0, "ps"),
        "bandwidth": (0.8, "single-photon filter bandwidth, nm"),
        "pump_coherence": (1.0, "us"),
        "visibility": (1.0, "intrinsic two-photon visibility"),
        "split_factor": (0.5, "pair survival through the output splitter"),
        "peak_counts": (1.0e4, "counts at the fringe maximum per scan point"),
        "phase_points": (12, "phase points per scan"),
        "coverage_seeds": (100, "seeds for the visibility coverage check"),
        "coverage_visibility": (0.9917, "injected visibility for the coverage check"),
    },
    "measurement": {
        "r1": (126e3, "Hz, singles arm 1 (full-band run)"),
        "r2": (295e3, "Hz, singles arm 2 (full-band run)"),
        "rcc": (4792.0, "Hz, coincidences (full-band run)"),
        "rac": (8.0, "Hz, accidentals (full-band run)"),
        "pump_power": (27.8e-6, "mW coupled pump (full-band run)"),
        "wdm_r1": (159e3, "Hz, singles arm 1 (0.8 nm channel)"),
        "wdm_r2": (215e3, "Hz, singles arm 2 (0.8 nm channel)"),
        "wdm_rcc": (1317.0, "Hz, coincidences (0.8 nm channel)"),
        "wdm_rac": (12.0, "Hz, accidentals (0.8 nm channel)"),
        "wdm_pump_power": (21.4e-3, "mW coupled pump (0.8 nm channel)"),
        "wdm_bandwidth": (0.8, "nm"),
    },
}


class ScenarioError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass(frozen=True)
class Scenario:
    source: SourceParams
    poling: PolingSpec
    detector: DetectorModel
    channels: dict
    franson: dict
    measurement: dict
    output_dir: Path
    seed: int
    source_path: Optional[Path] = field(default=None, compare=False)

    def banks(self):
        ch = self.channels
        return default_banks(
            center_nm=ch["center"], pairs=ch["pairs"], spacing_nm=ch["spacing"],
            width_nm=ch["width"], insertion_loss_db=ch["insertion_loss"],
            extinction_db=ch["extinction"],
        )

    def franson_config(self, **overrides):
        fr = self.franson
        kw = dict(
            imbalance_ns=fr["imbalance"],
            window_ps=fr["window"],
            tc1_ps=coherence_time_from_bandwidth(fr["bandwidth"], self.channels["center"]),
            tc2_us=fr["pump_coherence"],
            visibility=fr["visibility"],
            split_factor=fr["split_factor"],
        )
        kw.update(overrides)
        return FransonConfig(**kw)


def _typed(path, default, value):
    if isinstance(default, str) or (default is None and path.endswith("table")):
        if not isinstance(value, str):
            raise ScenarioError(f"{path}: expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    if isinstance(default, int) and not isinstance(default, bool) and int(value) != value:
        raise ScenarioError(f"{path}: expected an integer, got {value!r}")
    return value


def _merge(data):
    merged = {}
    for section, keys in SCHEMA.items():
        merged[section] = {k: v[0] for k, v in keys.items()}
    for key, value in data.items():
        if isinstance(value, dict):
            if key not in SCHEMA or key == "":
                raise ScenarioError(f"unknown section [{key}]")
            for sub, v in value.items():
                if sub not in SCHEMA[key]:
                    raise ScenarioError(f"unknown key '{sub}' in section [{key}]")
                merged[key][sub] = _typed(f"{key}.{sub}", SCHEMA[key][sub][0], v)
        else:
            if key not in SCHEMA[""]:
                raise ScenarioError(f"unknown key '{key}'")
            merged[""][key] = _typed(key, SCHEMA[""][key][0], value)
    return merged


def _build(merged, base_dir):
    top = merged[""]
    if top["schema_version"] != SCHEMA_VERSION:
        raise ScenarioError(
            f"schema_version: unsupported value {top['schema_version']!r} (expected {SCHEMA_VERSION})"
        )
    stage = "poling"
    try:
        p = merged["poling"]
        poling = PolingSpec(
            period_um=float(p["period"]), duty_cycle=float(p["duty_cycle"]),
            length_mm=float(p["length"]), order=p["order"],
        )
        stage = "source"
        s = merged["source"]
        table = None
        if s["dispersion_table"] is not None:
            tpath = Path(s["dispersion_table"])
            if not tpath.is_absolute():
                tpath = base_dir / tpath
            table = load_table(tpath)
        source = SourceParams(
            wl_pump_nm=float(s["pump_wavelength"]), power_mw=float(s["pump_power"]),
            d33_pm_per_v=float(s["d33"]), overlap=float(s["overlap"]),
            area_um2=float(s["mode_area"]), length_mm=poling.length_mm,
            gvd_fs2_per_mm=float(s["gvd"]),
            n_signal=None if s["n_signal"] is None else float(s["n_signal"]),
            n_pump=None if s["n_pump"] is None else float(s["n_pump"]),
            dispersion=table,
        )
        stage = "detector"
        d = merged["detector"]
        detector = DetectorModel(
            eta1=float(d["eta1"]), eta2=float(d["eta2"]),
            dark_hz=float(d["dark_rate"]), window_ps=float(d["window"]),
        )
        stage = "channels"
        ch = dict(merged["channels"])
        if int(ch["pairs"]) != ch["pairs"] or ch["pairs"] < 1:
            raise ValueError("pairs must be a positive integer")
        if not ch["accidental_floor"] >= 0:
            raise ValueError("accidental_floor must be non-negative")
        if not ch["grid_step"] > 0:
            raise ValueError("grid_step must be positive")
        scenario = Scenario(
            source=source, poling=poling, detector=detector, channels=ch,
            franson=dict(merged["franson"]), measurement=dict(merged["measurement"]),
            output_dir=Path(top["output_dir"]), seed=int(top["seed"]),
        )
        scenario.banks()
        stage = "franson"
        scenario.franson_config()
        fr = scenario.franson
        if int(fr["phase_points"]) != fr["phase_points"] or fr["phase_points"] < 6:
            raise ValueError("phase_points must be an integer >= 6")
        if not fr["peak_counts"] > 0:
            raise ValueError("peak_counts must be positive")
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"[{stage}]: {exc}") from None
    return scenario


def parse_scenario(text, base_dir="."):
    """Scenario from TOML text; parse errors carry line and column."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"parse error: {exc}") from None
    return _build(_merge(data), Path(base_dir))


def load_scenario(path=None):
    """Scenario from a file, or the reference defaults when ``path`` is None."""
    if path is None:
        return parse_scenario("")
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file: {exc}") from None
    try:
        sc = parse_scenario(text, base_dir=path.parent)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    return replace(sc, source_path=path)
