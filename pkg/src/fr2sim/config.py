"""Flat ``key=value`` run configuration, presets and provenance.

Every parameter has a default, so an empty file is a valid config. Values
resolve in order default < preset < file < command-line override, and the
source of each final value is kept for the run header.
"""

from __future__ import annotations

import difflib
import hashlib
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .channel import LinkBudget
from .errors import ConfigError
from .link_adapt import TableMode, TableModeKind
from .mac import PhyConfig, TddPattern
from .phy import BlerModel
from .scenario import ScenarioConfig, ScenarioKind

PRESETS = ("paper-fig5", "table2-default", "fwa-stationary")


def _optional_float(text: str):
    if text.strip().lower() in ("", "none", "off"):
        return None
    return float(text)


def _optional_positive(text: str):
    value = _optional_float(text)
    if value is not None and value <= 0:
        raise ValueError("must be positive")
    return value


def _kind(text: str) -> str:
    value = text.strip().lower()
    if value not in {k.value for k in ScenarioKind}:
        raise ValueError("expected stationary, walking, biking or fixed")
    return value


def _table_mode(text: str) -> str:
    value = text.strip().lower()
    if value not in {k.value for k in TableModeKind}:
        raise ValueError("expected 1, 2, 4 or adaptive")
    return value


def _bool(text: str) -> bool:
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


@dataclass(frozen=True)
class Key:
    name: str
    parse: object
    default: str
    help: str
    type_name: str


KEYS = {k.name: k for k in [
    Key("seed", int, "1", "master random seed", "integer"),
    Key("scenario.kind", _kind, "stationary", "stationary | walking | biking | fixed", "kind"),
    Key("scenario.initial_distance_m", float, "10", "start (or pinned) UE-gNB ground distance", "number"),
    Key("scenario.duration_s", _optional_positive, "none",
        "run length; none = per-kind default (walking 65.5 s, biking 30 s, else 1 s)", "number or none"),
    Key("scenario.speed_mps", _optional_float, "none",
        "UE speed; none = per-kind default (walking 1.375, biking 6.7)", "number or none"),
    Key("scenario.walk_excursion_m", float, "45", "how far the walking route heads out", "number"),
    Key("scenario.strict_paper_duration", _bool, "false",
        "force the quoted walking 60 s / biking 30 s durations", "boolean"),
    Key("scenario.cqi_period_slots", int, "40", "CSI report period in slots", "integer"),
    Key("scenario.cqi_delay_slots", int, "8", "CSI measurement-to-use delay in slots", "integer"),
    Key("budget.eirp_dbm", float, "67", "downlink effective radiated power (dBm)", "number"),
    Key("budget.ue_rx_gain_db", float, "1", "UE receive antenna gain (dB)", "number"),
    Key("budget.noise_figure_db", float, "10", "UE noise figure (dB)", "number"),
    Key("budget.carrier_freq_ghz", float, "24.8", "carrier frequency (GHz)", "number"),
    Key("budget.h_bs_m", float, "10", "gNB antenna height (m)", "number"),
    Key("budget.h_ut_m", float, "1.5", "UE antenna height (m)", "number"),
    Key("budget.sinr_ceiling_db", _optional_float, "none", "transmitter-impairment SINR cap", "number or none"),
    Key("budget.gnb_rx_gain_db", float, "29.5", "gNB receive gain; uplink only, unused", "number"),
    Key("carrier.n_prb", int, "66", "PRBs in the carrier", "integer"),
    Key("carrier.scs_khz", float, "120", "subcarrier spacing (kHz)", "number"),
    Key("channel.sigma_sf_db", float, "4", "shadow fading standard deviation (dB)", "number"),
    Key("channel.decorr_m", float, "10", "shadow decorrelation distance (m)", "number"),
    Key("channel.k_factor_db", float, "10", "Rician K factor (dB)", "number"),
    Key("bler.gap_db", float, "1.5", "50%-BLER point above Shannon SNR (dB)", "number"),
    Key("bler.slope", float, "2.0", "logistic waterfall steepness (1/dB)", "number"),
    Key("bler.harq_gain_db", float, "3.0", "combining gain per retransmission (dB)", "number"),
    Key("olla.target_bler", float, "0.1", "first-transmission BLER target", "number"),
    Key("olla.step_down_db", float, "0.5", "offset decrease on NACK (dB)", "number"),
    Key("table.mode", _table_mode, "2", "MCS table: 1 | 2 | 4 | adaptive", "table mode"),
    Key("table.switch_up_db", _optional_float, "none",
        "adaptive: filtered SINR to move to table 2; none = derived", "number or none"),
    Key("table.switch_down_db", _optional_float, "none",
        "adaptive: filtered SINR to fall back to table 1; none = derived", "number or none"),
    Key("harq.max_tx", int, "4", "transmissions per TB including the first", "integer"),
    Key("harq.processes", int, "16", "HARQ processes", "integer"),
    Key("phy.n_layers", int, "2", "MIMO layers", "integer"),
    Key("phy.dmrs_re_per_prb", int, "12", "DMRS resource elements per PRB", "integer"),
    Key("phy.x_overhead", int, "0", "higher-layer overhead per PRB (0, 6, 12, 18)", "integer"),
    Key("phy.control_symbols", int, "1", "PDCCH symbols per DL slot", "integer"),
    Key("tdd.dl_slots", int, "3", "full DL slots per period", "integer"),
    Key("tdd.ul_slots", int, "1", "full UL slots per period", "integer"),
    Key("tdd.special_dl_symbols", int, "10", "DL symbols in the special slot", "integer"),
    Key("tdd.special_ul_symbols", int, "1", "UL symbols in the special slot", "integer"),
]}


def parse_text(text: str, origin: str) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment."""
    values = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        check_key(key, f"{origin}:{line_no}")
        values[key] = value
    return values


def check_key(key: str, where: str = "config"):
    if key not in KEYS:
        near = difflib.get_close_matches(key, KEYS, n=1, cutoff=0.0)
        hint = f"; did you mean {near[0]!r}?" if near else ""
        raise ConfigError(f"{where}: unknown key {key!r}{hint}")


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files("fr2sim.presets").joinpath(f"{name}.cfg").read_text(encoding="utf-8")


@dataclass(frozen=True)
class ResolvedConfig:
    raw: dict            # key -> string value
    provenance: dict     # key -> "default" | "preset:<name>" | "file:<path>" | "flag"
    values: dict         # key -> parsed value

    def header_lines(self) -> list[str]:
        return [f"{k}={self.raw[k]} ({self.provenance[k]})" for k in sorted(self.raw)]

    @property
    def digest(self) -> str:
        text = "\n".join(f"{k}={self.values[k]!r}" for k in sorted(self.values))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]

    def scenario(self) -> ScenarioConfig:
        return build_scenario(self.values)


def resolve(source: str | None = None, overrides: dict | None = None,
            preset: str | None = None) -> ResolvedConfig:
    """Resolve a config from an optional preset, file or preset name, and overrides.

    ``source`` may be a path or a preset name.
    """
    raw = {k: key.default for k, key in KEYS.items()}
    prov = {k: "default" for k in KEYS}

    def apply(values, origin):
        for k, v in values.items():
            raw[k] = v
            prov[k] = origin

    if preset is not None:
        apply(parse_text(preset_text(preset), f"preset:{preset}"), f"preset:{preset}")
    if source is not None:
        if source in PRESETS:
            apply(parse_text(preset_text(source), f"preset:{source}"), f"preset:{source}")
        else:
            path = Path(source)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config {source}: {exc.strerror or exc}") from None
            apply(parse_text(text, str(path)), f"file:{path}")
    for k, v in (overrides or {}).items():
        check_key(k, "override")
        raw[k] = str(v)
        prov[k] = "flag"

    values = {}
    for k, text in raw.items():
        key = KEYS[k]
        try:
            values[k] = key.parse(text)
        except (ValueError, TypeError):
            raise ConfigError(f"key {k!r}: expected {key.type_name}, got {text!r}") from None
    return ResolvedConfig(raw, prov, values)


def build_scenario(v: dict) -> ScenarioConfig:
    try:
        budget = LinkBudget(
            eirp_dbm=v["budget.eirp_dbm"], ue_rx_gain_db=v["budget.ue_rx_gain_db"],
            noise_figure_db=v["budget.noise_figure_db"], n_prb=v["carrier.n_prb"],
            scs_hz=v["carrier.scs_khz"] * 1e3, carrier_freq_ghz=v["budget.carrier_freq_ghz"],
            h_bs_m=v["budget.h_bs_m"], h_ut_m=v["budget.h_ut_m"],
            sinr_ceiling_db=v["budget.sinr_ceiling_db"], gnb_rx_gain_db=v["budget.gnb_rx_gain_db"])
        bler = BlerModel(v["bler.gap_db"], v["bler.slope"], v["bler.harq_gain_db"])
        if v["table.mode"] == "adaptive":
            mode = TableMode.adaptive(bler, v["table.switch_up_db"], v["table.switch_down_db"])
        else:
            mode = TableMode.fixed(v["table.mode"])
        slot_s = 1e-3 / (v["carrier.scs_khz"] / 15.0)
        tdd = TddPattern(period_slots=v["tdd.dl_slots"] + v["tdd.ul_slots"] + 1,
                         dl_slots=v["tdd.dl_slots"], special_dl_symbols=v["tdd.special_dl_symbols"],
                         special_ul_symbols=v["tdd.special_ul_symbols"], ul_slots=v["tdd.ul_slots"],
                         slot_duration_s=slot_s)
        phy = PhyConfig(n_prb=v["carrier.n_prb"], n_layers=v["phy.n_layers"],
                        n_dmrs_re_per_prb=v["phy.dmrs_re_per_prb"], x_overhead=v["phy.x_overhead"],
                        control_symbols=v["phy.control_symbols"],
                        n_harq_processes=v["harq.processes"], max_tx=v["harq.max_tx"])
        if not 0.0 < v["olla.target_bler"] < 1.0:
            raise ValueError("olla.target_bler must lie in (0, 1)")
        if phy.max_tx < 1 or phy.n_harq_processes < 1:
            raise ValueError("harq.max_tx and harq.processes must be >= 1")
        return ScenarioConfig(
            kind=ScenarioKind(v["scenario.kind"]),
            initial_distance_m=v["scenario.initial_distance_m"],
            duration_s=v["scenario.duration_s"], speed_mps=v["scenario.speed_mps"],
            seed=v["seed"], table_mode=mode, budget=budget, bler=bler,
            olla_target_bler=v["olla.target_bler"], olla_step_down_db=v["olla.step_down_db"],
            tdd=tdd, phy=phy, sigma_sf_db=v["channel.sigma_sf_db"], decorr_m=v["channel.decorr_m"],
            k_factor_db=v["channel.k_factor_db"], cqi_period_slots=v["scenario.cqi_period_slots"],
            cqi_delay_slots=v["scenario.cqi_delay_slots"],
            walk_excursion_m=v["scenario.walk_excursion_m"],
            strict_paper_duration=v["scenario.strict_paper_duration"])
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None


def describe_keys() -> str:
    width = max(len(k) for k in KEYS)
    return "\n".join(f"  {k.ljust(width)}  {key.help} [default {key.default}]"
                     for k, key in KEYS.items())
