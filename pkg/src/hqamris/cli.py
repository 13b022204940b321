"""Command-line front end: figure presets, config handling, CSV emission.

Usage: ``hqamris <preset> [--key value]... --out DIR`` with presets
fig3a, fig3b, fig4, fig5, constellation-dump and analyze.  Every run
emits one CSV plus a manifest listing the exact effective configuration.
Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    PowerModel,
    asep_quadrature,
    asep_hqam_closed,
    fit_cascade,
    sep_awgn_hqam,
)
from .channel import ChannelParams, LinkBudget, average_snr
from .config import (
    ConfigError,
    ExperimentConfig,
    build_config,
    config_from_manifest,
    format_value,
    gamma_bar_db,
    manifest_text,
    parse_config_text,
)
from .constellation import build_hqam, build_qam, external_symbols
from .montecarlo import SweepSpec, run_sweep

_NOISE_NOTE = (
    "# noise convention: E_s = 1 and gamma_r = E_s/N0, i.e. per-component "
    "noise variance = 1/(2*gamma_r); floats carry 17 significant digits"
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def link_budget_from(cfg: ExperimentConfig) -> LinkBudget:
    return LinkBudget(
        P_t=cfg.p_t,
        G=cfg.g,
        C0_db=cfg.c0_db,
        d0=cfg.d0,
        d1=cfg.d1,
        d2=cfg.d2,
        n_ple=cfg.n_ple,
        sigma_n2=cfg.sigma_n2,
    )


def power_model_from(cfg: ExperimentConfig) -> PowerModel:
    return PowerModel(
        P_t=cfg.p_t,
        P_ctr=cfg.p_ctr,
        P_pin=cfg.p_pin,
        q=cfg.q,
        N=1,
        bandwidth_B=cfg.bandwidth_b,
        P_v=cfg.p_v,
    )


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _asep_rows(cfg: ExperimentConfig, with_ee: bool) -> str:
    lb = link_budget_from(cfg)
    pm = power_model_from(cfg) if with_ee else None
    header = [
        "scheme", "M", "q", "N", "gamma_bar_db", "m_t", "omega_t",
        "asep_analytic", "asep_sim", "asep_sim_stderr", "errors", "trials",
        "low_confidence",
    ]
    if with_ee:
        header += ["ee_analytic", "ee_sim"]
    lines = [_NOISE_NOTE, ",".join(header)]
    for s_idx, scheme in enumerate(cfg.schemes):
        for q_idx, q in enumerate(cfg.q_values):
            spec = SweepSpec(
                scheme=scheme,
                M=cfg.M,
                q=q,
                trials=cfg.trials,
                seed=(cfg.seed, s_idx, q_idx),
                workers=cfg.workers,
                n_grid=cfg.n_grid(),
            )
            for pt in run_sweep(spec, lb, pm, fading_m=cfg.m, fading_omega=cfg.omega):
                row = [
                    pt.scheme, pt.M, pt.q, pt.N,
                    _fmt(gamma_bar_db(pt.gamma_bar)),
                    _fmt(pt.m_t), _fmt(pt.omega_t), _fmt(pt.asep_analytic),
                    _fmt(pt.est.ser), _fmt(pt.est.stderr),
                    pt.est.errors, pt.est.trials, _fmt(pt.low_confidence),
                ]
                if with_ee:
                    row += [_fmt(pt.ee_analytic), _fmt(pt.ee_sim)]
                lines.append(",".join(str(v) for v in row))
    return "\n".join(lines) + "\n"


def _fig5_rows(cfg: ExperimentConfig) -> str:
    header = [
        "M", "gamma_db", "ser_proposed", "ser_mld", "stderr_proposed",
        "stderr_mld", "max_candidates", "mean_distance_ops",
        "errors_proposed", "errors_mld", "trials", "low_confidence",
    ]
    lines = [_NOISE_NOTE, ",".join(header)]
    for m_idx, m_order in enumerate(cfg.m_values):
        spec = SweepSpec(
            scheme="HQAM",
            M=m_order,
            q=1,
            trials=cfg.trials,
            seed=(cfg.seed, m_idx),
            workers=cfg.workers,
            gamma_db_grid=cfg.gamma_db_grid(),
        )
        for pt in run_sweep(spec, link_budget_from(cfg)):
            lines.append(
                ",".join(
                    str(v)
                    for v in [
                        pt.M, _fmt(pt.gamma_db), _fmt(pt.est.ser),
                        _fmt(pt.est_mld.ser), _fmt(pt.est.stderr),
                        _fmt(pt.est_mld.stderr), pt.max_candidates,
                        _fmt(pt.mean_distance_ops), pt.est.errors,
                        pt.est_mld.errors, pt.est.trials,
                        _fmt(pt.low_confidence),
                    ]
                )
            )
    return "\n".join(lines) + "\n"


def _constellation_rows(cfg: ExperimentConfig) -> str:
    c = build_hqam(cfg.M) if cfg.scheme == "HQAM" else build_qam(cfg.M)
    ext = set(external_symbols(c).tolist())
    lines = ["index,re,im,is_external"]
    for i, s in enumerate(c.symbols):
        lines.append(f"{i},{_fmt(s.real)},{_fmt(s.imag)},{_fmt(i in ext)}")
    return "\n".join(lines) + "\n"


def _analyze_rows(cfg: ExperimentConfig) -> str:
    lb = link_budget_from(cfg)
    gbar = average_snr(lb)
    c = build_hqam(cfg.M)
    lines = ["N,gamma_bar_db,m_t,omega_t,asep_closed,asep_quadrature"]
    for n in cfg.n_grid():
        cp = ChannelParams(N=n, m=cfg.m, omega=cfg.omega, q=cfg.q)
        fit = fit_cascade(cp)
        closed = asep_hqam_closed(gbar, fit, c)
        quad = asep_quadrature(gbar, lambda g: float(sep_awgn_hqam(g, c)), fit)
        lines.append(
            ",".join(
                [str(n), _fmt(gamma_bar_db(gbar)), _fmt(fit.m_t),
                 _fmt(fit.omega_t), _fmt(closed), _fmt(quad)]
            )
        )
    return "\n".join(lines) + "\n"


_RUNNERS = {
    "fig3a": lambda cfg: _asep_rows(cfg, with_ee=False),
    "fig3b": lambda cfg: _asep_rows(cfg, with_ee=False),
    "fig4": lambda cfg: _asep_rows(cfg, with_ee=True),
    "fig5": _fig5_rows,
    "constellation-dump": _constellation_rows,
    "analyze": _analyze_rows,
}


def run_preset(cfg: ExperimentConfig, out_dir: Path) -> tuple[Path, Path]:
    """Run one preset and write its CSV plus manifest (atomically)."""
    csv_text = _RUNNERS[cfg.preset](cfg)
    versions = {
        "hqamris": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = cfg.preset.replace("-", "_")
    csv_path = out_dir / f"{stem}.csv"
    manifest_path = out_dir / f"{stem}_manifest.txt"
    _write_atomic(csv_path, csv_text)
    _write_atomic(manifest_path, manifest_text(cfg, versions))
    return csv_path, manifest_path


def _collect_overrides(tokens: list[str]) -> dict:
    overrides: dict = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--") or i + 1 >= len(tokens):
            raise ConfigError(f"expected '--key value' pairs, got {tok!r}")
        key = tok[2:]
        raw = tokens[i + 1]
        parsed = parse_config_text(f"{key} = {raw}")
        overrides.update(parsed)
        i += 2
    return overrides


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hqamris",
        description="RIS-assisted HQAM link analysis and simulation presets",
    )
    parser.add_argument("preset", help="one of: " + ", ".join(_RUNNERS))
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--config", help="key=value config file applied before --key overrides")
    args, extra = parser.parse_known_args(argv)

    try:
        overrides: dict = {}
        if args.config:
            overrides.update(parse_config_text(Path(args.config).read_text()))
        overrides.update(_collect_overrides(extra))
        cfg = build_config(args.preset, overrides)
    except ConfigError as exc:
        print(f"hqamris: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"hqamris: cannot read config: {exc}", file=sys.stderr)
        return 2

    try:
        csv_path, manifest_path = run_preset(cfg, Path(args.out))
    except (RuntimeError, ArithmeticError) as exc:
        print(f"hqamris: numerical failure: {exc}", file=sys.stderr)
        return 3
    print(csv_path)
    print(manifest_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
