"""First-order radio energy model.

Transmission cost switches from free-space (d^2) to multipath (d^4) loss at the
crossover distance ``d0``. All energies are in joules, distances in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


# Table values: 50 nJ/bit electronics, 5 nJ/bit/signal aggregation,
# 10 pJ/bit/m^2 free space, 0.0013 pJ/bit/m^4 multipath.
E_ELEC = 50e-9
E_AGG = 5e-9
EPS_FS = 10e-12
EPS_MP = 0.0013e-12


@dataclass(frozen=True)
class RadioParams:
    e_elec: float = E_ELEC
    eps_fs: float = EPS_FS
    eps_mp: float = EPS_MP
    e_agg: float = E_AGG
    d0: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if self.d0 is None:
            object.__setattr__(self, "d0", math.sqrt(self.eps_fs / self.eps_mp))
        for name in ("e_elec", "eps_fs", "eps_mp", "e_agg", "d0"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be strictly positive, got {value!r}")

    @classmethod
    def from_mapping(cls, values: dict) -> "RadioParams":
        known = {"e_elec", "eps_fs", "eps_mp", "e_agg", "d0"}
        return cls(**{k: float(v) for k, v in values.items() if k in known})


def _check_nonneg(**kwargs):
    for name, value in kwargs.items():
        if value < 0:
            raise ValueError(f"{name} must be non-negative, got {value!r}")


def tx_energy(params: RadioParams, k: float, d: float) -> float:
    """Energy to transmit ``k`` bits over ``d`` meters."""
    _check_nonneg(k=k, d=d)
    if d < params.d0:
        return k * (params.e_elec + params.eps_fs * d * d)
    return k * (params.e_elec + params.eps_mp * d**4)


def rx_energy(params: RadioParams, k: float) -> float:
    _check_nonneg(k=k)
    return params.e_elec * k


def agg_energy(params: RadioParams, k: float, signals: int) -> float:
    """Energy to fuse ``signals`` incoming packets of ``k`` bits each."""
    _check_nonneg(k=k, signals=signals)
    return params.e_agg * k * signals


def tx_energy_array(params: RadioParams, k: float, d):
    """Vectorised :func:`tx_energy` over an array of distances."""
    d = np.asarray(d, dtype=float)
    if k < 0 or np.any(d < 0):
        raise ValueError("k and d must be non-negative")
    amp = np.where(d < params.d0, params.eps_fs * d**2, params.eps_mp * d**4)
    return k * (params.e_elec + amp)
