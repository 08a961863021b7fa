"""Batch experiments: lifetime runs, the corrupt-and-denoise chain, coverage
maps and the sparse-estimation timing probe. All outputs go to
``config.output_dir``."""

from __future__ import annotations

import json
import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ExperimentConfig
from .denoise import denoise_pipeline
from .imageio import read_image, to_uint8, write_heatmap, write_image
from .metrics import psnr, ssim
from .protocol import run_simulation
from .sparse import Dictionary, sparse_estimate
from .topology import build_topology, coverage_map, coverage_rate, deploy_nodes

log = logging.getLogger(__name__)


def _outdir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.6f}"


# --- lifetime -----------------------------------------------------------------


def run_lifetime_experiment(config: ExperimentConfig) -> dict:
    """One alive/energy series CSV per (seed, protocol) plus a JSON summary.

    Runs where nobody dies within ``max_rounds`` are censored: their FND/ADT are
    ``null`` in the run list and count as ``max_rounds + 1`` in the medians.
    """
    out = _outdir(config)
    runs = []
    for seed in config.seeds:
        for protocol in config.protocols:
            report = run_simulation(
                config.network_for(seed), config.protocol, config.radio, protocol, config.max_rounds
            )
            path = out / f"lifetime_{protocol}_seed{seed}.csv"
            path.write_text("\n".join(report.csv_rows()) + "\n")
            runs.append(report.to_dict())
            log.info("%s seed %d: FND=%s ADT=%s", protocol, seed, report.fnd, report.adt)

    censor = config.max_rounds + 1
    medians = {}
    for protocol in config.protocols:
        mine = [r for r in runs if r["protocol"] == protocol]
        medians[protocol] = {
            key: statistics.median(censor if r[key] is None else r[key] for r in mine)
            for key in ("fnd", "adt")
        }
    summary = {"max_rounds": config.max_rounds, "seeds": list(config.seeds), "runs": runs, "medians": medians}
    if {"proposed", "leach"} <= set(config.protocols):
        by_seed = {(r["protocol"], r["seed"]): r["fnd"] for r in runs}
        wins = sum(
            (by_seed[("proposed", s)] or censor) > (by_seed[("leach", s)] or censor) for s in config.seeds
        )
        summary["proposed_fnd_wins"] = wins
    (out / "lifetime_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# --- denoising ----------------------------------------------------------------

DENOISE_HEADER = "image,sigma,psnr_noisy,psnr_denoised,ssim_noisy,ssim_denoised,seed"


@dataclass
class DenoiseResult:
    rows: list[str] = field(default_factory=list)
    errors: list[str] = field(default_factory=list)
    outputs: list[Path] = field(default_factory=list)


def add_noise(clean: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """AWGN, clamped to [0, 255] and quantised to 8 bits like a sensor readout."""
    noisy = clean + sigma * rng.standard_normal(clean.shape)
    return to_uint8(noisy).astype(float)


def run_denoise_experiment(config: ExperimentConfig) -> DenoiseResult:
    """Corrupt each image at every sigma and seed, denoise, and score it.

    Writes ``<stem>_s<sigma>_seed<seed>_{noisy,partial,final}.<pgm|ppm>`` and
    one row per run in ``denoise_metrics.csv``. A file that fails to load is
    logged and skipped.
    """
    if not config.sigmas:
        raise ValueError("denoise experiment needs at least one sigma")
    out = _outdir(config)
    result = DenoiseResult(rows=[DENOISE_HEADER])
    for img_idx, path in enumerate(config.images):
        try:
            clean = read_image(path)
        except Exception as exc:  # noqa: BLE001 - any unreadable file is skipped
            msg = f"{path}: {exc}"
            log.error("skipping image %s", msg)
            result.errors.append(msg)
            continue
        ext = "ppm" if clean.ndim == 3 else "pgm"
        stem = Path(path).stem
        for sig_idx, sigma in enumerate(config.sigmas):
            for seed in config.seeds:
                rng = np.random.default_rng([seed, img_idx, sig_idx])
                noisy = add_noise(clean, sigma, rng)
                partial, _, final = denoise_pipeline(noisy, sigma, config.denoise)
                partial, final = to_uint8(partial), to_uint8(final)
                tag = f"{stem}_s{sigma:g}_seed{seed}"
                for kind, img in (("noisy", noisy), ("partial", partial), ("final", final)):
                    result.outputs.append(write_image(out / f"{tag}_{kind}.{ext}", img))
                row = ",".join(
                    [
                        stem,
                        f"{sigma:g}",
                        _fmt(psnr(clean, noisy)),
                        _fmt(psnr(clean, final)),
                        _fmt(ssim(clean, noisy)),
                        _fmt(ssim(clean, final)),
                        str(seed),
                    ]
                )
                result.rows.append(row)
                log.info("%s", row)
    (out / "denoise_metrics.csv").write_text("\n".join(result.rows) + "\n")
    return result


# --- coverage -----------------------------------------------------------------


def run_coverage_experiment(config: ExperimentConfig) -> dict:
    """Topology dump, coverage rate and a PGM coverage heatmap per seed."""
    out = _outdir(config)
    summary = {}
    for seed in config.seeds:
        net = config.network_for(seed)
        topo = build_topology(net)
        nodes = deploy_nodes(topo, net, config.protocol.initial_energy)
        rate = coverage_rate(nodes, topo, config.grid_resolution)
        write_heatmap(out / f"coverage_seed{seed}.pgm", coverage_map(nodes, topo, config.grid_resolution))
        summary[str(seed)] = rate
    (out / "topology.json").write_text(build_topology(config.network).dumps() + "\n")
    (out / "coverage_summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


# --- complexity probe -----------------------------------------------------------


@dataclass
class ProbeReport:
    sizes: list[int]
    seconds: list[float]
    rows: int
    support: int

    @property
    def slope(self) -> float | None:
        """Fitted exponent of N in the runtime (log-log least squares)."""
        if len(self.sizes) < 2:
            return None
        return float(np.polyfit(np.log(self.sizes), np.log(self.seconds), 1)[0])

    @property
    def ratios(self) -> list[float]:
        return [b / a for a, b in zip(self.seconds, self.seconds[1:])]

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "seconds": self.seconds,
            "rows": self.rows,
            "support": self.support,
            "slope": self.slope,
            "ratios": self.ratios,
        }


def run_complexity_probe(config: ExperimentConfig, write: bool = True) -> ProbeReport:
    """Time :func:`sparse_estimate` on random redundant dictionaries of growing
    width N at fixed height M and support size. Each timing is the best of
    ``probe_trials`` passes over a batch of ``probe_batch`` patches."""
    m, k = config.probe_rows, config.probe_support
    seconds = []
    for n in config.probe_sizes:
        rng = np.random.default_rng([n, m, k])
        A = rng.standard_normal((m, n))
        A /= np.linalg.norm(A, axis=0)
        dictionary = Dictionary(A)
        batch = []
        for _ in range(config.probe_batch):
            theta = np.zeros(n)
            theta[rng.choice(n, k, replace=False)] = rng.choice([-1.0, 1.0], k) * (1 + rng.random(k))
            batch.append(A @ theta + 0.01 * rng.standard_normal(m))
        best = math.inf
        for _ in range(max(1, config.probe_trials)):
            t0 = time.perf_counter()
            for y in batch:
                sparse_estimate(y, dictionary, 0.01)
            best = min(best, time.perf_counter() - t0)
        seconds.append(best)
    report = ProbeReport(list(config.probe_sizes), seconds, m, k)
    if write:
        out = _outdir(config)
        (out / "probe.json").write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    return report
