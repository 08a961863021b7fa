"""Flat ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. List values are comma separated;
integer ranges may be written ``0-9``. Recognised keys and their defaults are
listed in :data:`DEFAULTS`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .denoise import DenoiseParams
from .protocol import PROTOCOLS, ProtocolParams
from .radio import RadioParams
from .topology import NetworkConfig

DEFAULTS: dict[str, str] = {
    # network
    "node_count": "100",
    "diameter": "300",
    "corona_count": "auto",
    "regions_per_corona": "4",
    "inner_fraction": "0.2",
    "sensing_radius": "25",
    # radio
    "e_elec": "50e-9",
    "eps_fs": "10e-12",
    "eps_mp": "0.0013e-12",
    "e_agg": "5e-9",
    "d0": "auto",
    # protocol
    "packet_bits": "4000",
    "ch_energy_quantile": "0.05",
    "initial_energy": "0.5",
    "leach_p": "0.05",
    "protocols": "proposed,leach",
    "max_rounds": "8000",
    "seeds": "0-9",
    # denoising
    "patch": "8",
    "stride": "2",
    "group": "16",
    "r_min": "0.85",
    "tau": "0.95",
    "prior": "0.5",
    "q_floor": "0.05",
    "bins": "64",
    "min_component": "32",
    "images": "",
    "sigmas": "10,15,20,50",
    # coverage / probe
    "grid_resolution": "128",
    "probe_sizes": "64,128,256",
    "probe_rows": "32",
    "probe_support": "3",
    "probe_batch": "20",
    "probe_trials": "3",
    "output_dir": "results",
}


class ConfigError(ValueError):
    pass


def parse_text(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = value
    return values


def _int_list(value: str) -> list[int]:
    out: list[int] = []
    for item in filter(None, (v.strip() for v in value.split(","))):
        if "-" in item[1:]:
            lo, hi = item.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(item))
    return out


def _float_list(value: str) -> list[float]:
    return [float(v) for v in value.split(",") if v.strip()]


def _str_list(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


@dataclass
class ExperimentConfig:
    network: NetworkConfig = field(default_factory=NetworkConfig)
    radio: RadioParams = field(default_factory=RadioParams)
    protocol: ProtocolParams = field(default_factory=ProtocolParams)
    denoise: DenoiseParams = field(default_factory=DenoiseParams)
    protocols: list[str] = field(default_factory=lambda: list(PROTOCOLS))
    max_rounds: int = 8000
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    images: list[Path] = field(default_factory=list)
    sigmas: list[float] = field(default_factory=lambda: [10.0, 15.0, 20.0, 50.0])
    grid_resolution: int = 128
    probe_sizes: list[int] = field(default_factory=lambda: [64, 128, 256])
    probe_rows: int = 32
    probe_support: int = 3
    probe_batch: int = 20
    probe_trials: int = 3
    output_dir: Path = Path("results")

    @classmethod
    def from_mapping(cls, overrides: dict[str, str] | None = None) -> "ExperimentConfig":
        v = {**DEFAULTS, **(overrides or {})}
        unknown = set(v) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown keys: {sorted(unknown)}")
        try:
            network = NetworkConfig(
                node_count=int(v["node_count"]),
                diameter=float(v["diameter"]),
                corona_count=None if v["corona_count"] == "auto" else int(v["corona_count"]),
                regions_per_corona=int(v["regions_per_corona"]),
                inner_fraction=float(v["inner_fraction"]),
                sensing_radius=float(v["sensing_radius"]),
            )
            radio_keys = {k: v[k] for k in ("e_elec", "eps_fs", "eps_mp", "e_agg")}
            if v["d0"] != "auto":
                radio_keys["d0"] = v["d0"]
            radio = RadioParams.from_mapping(radio_keys)
            protocol = ProtocolParams(
                packet_bits=int(v["packet_bits"]),
                ch_energy_quantile=float(v["ch_energy_quantile"]),
                initial_energy=float(v["initial_energy"]),
                leach_p=float(v["leach_p"]),
            )
            base = DenoiseParams()
            denoise = DenoiseParams(
                **{
                    f.name: type(getattr(base, f.name))(v[f.name])
                    for f in fields(DenoiseParams)
                    if f.name in v
                }
            )
            cfg = cls(
                network=network,
                radio=radio,
                protocol=protocol,
                denoise=denoise,
                protocols=_str_list(v["protocols"]),
                max_rounds=int(v["max_rounds"]),
                seeds=_int_list(v["seeds"]),
                images=[Path(p) for p in _str_list(v["images"])],
                sigmas=_float_list(v["sigmas"]),
                grid_resolution=int(v["grid_resolution"]),
                probe_sizes=_int_list(v["probe_sizes"]),
                probe_rows=int(v["probe_rows"]),
                probe_support=int(v["probe_support"]),
                probe_batch=int(v["probe_batch"]),
                probe_trials=int(v["probe_trials"]),
                output_dir=Path(v["output_dir"]),
            )
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self):
        try:
            self.network.validate()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        bad = [p for p in self.protocols if p not in PROTOCOLS]
        if bad:
            raise ConfigError(f"unknown protocols {bad}; choose from {PROTOCOLS}")
        if self.max_rounds < 1:
            raise ConfigError("max_rounds must be >= 1")

    def network_for(self, seed: int) -> NetworkConfig:
        return replace(self.network, seed=seed)


def load_config(path=None, overrides: dict[str, str] | None = None) -> ExperimentConfig:
    values: dict[str, str] = {}
    if path is not None:
        values.update(parse_text(Path(path).read_text()))
    values.update(overrides or {})
    return ExperimentConfig.from_mapping(values)
