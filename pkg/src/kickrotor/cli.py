"""Command-line entry point.

Settings are layered: preset, then ``--config`` file (flat key=value),
then explicit flags. Every run writes ``manifest.txt`` into the output
directory; passing it back through ``--config`` reproduces the run.
"""
import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import dynamics, observables, scan, spectrum
from .params import (
    CS_MASS_KG,
    CS_WAVELENGTH_NM,
    AliasingError,
    ConfigError,
    SimParams,
    hbar_eff_from_lab,
    tau_from_lab,
)
from .schedule import build_schedule, write_schedule_csv

log = logging.getLogger("kickrotor")

EXIT_CONFIG = 2
EXIT_GUARD = 3


def _float(text):
    text = str(text).strip()
    if text in ("pi", "+pi"):
        return math.pi
    return float(text)


def _opt_int(text):
    text = str(text).strip()
    return None if text in ("", "none", "None") else int(text)


def _bool(text):
    text = str(text).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [float(x) for x in text]
    return [float(x) for x in str(text).replace(",", " ").split()]


def _ints(text):
    if isinstance(text, (list, tuple)):
        return [int(x) for x in text]
    return [int(x) for x in str(text).replace(",", " ").split()]


# key: (parser, default). Order fixes the manifest layout.
KEYS = {
    "K": (_float, 42.0),
    "hbar_eff": (_float, 5.76),
    "r": (_float, 1.0),
    "phi": (_float, 0.0),
    "tau": (_float, 0.0),
    "N1": (int, 10),
    "N2": (_opt_int, None),
    "A": (_float, 0.0),
    "mode": (str, "two-train"),
    "grid_size": (int, 2048),
    "beta_samples": (int, 32),
    "sigma_P": (_float, 1.0),
    "seed": (int, 0),
    "mod_phase": (_float, 0.0),
    "strict_overlap": (_bool, False),
    "substeps": (_opt_int, None),
    # lab units, converted once into hbar_eff and tau
    "f1_khz": (_float, None),
    "tau_us": (_float, None),
    "wavelength_nm": (_float, CS_WAVELENGTH_NM),
    "mass_kg": (_float, CS_MASS_KG),
    # run settings
    "window": (_float, 1.0),
    "pulse": (str, "auto"),
    "workers": (int, 1),
    "max_grid": (int, dynamics.MAX_GRID),
    "r_min": (_float, 0.95),
    "r_max": (_float, 1.05),
    "r_steps": (int, 41),
    "adaptive": (_bool, False),
    "k_inhomogeneity": (_bool, False),
    "waist_ratio": (_float, 1.6),
    "n1_list": (_ints, [5, 10, 20, 40, 80]),
    "k_list": (_floats, []),
    "include_modulated": (_bool, False),
    "r_list": (_floats, []),
    "f_min": (_float, 0.0),
    "f_max": (_float, 3.0),
    "f_steps": (int, 3001),
    "n_kicks": (int, 200),
    "ensemble_size": (int, 100000),
}

SIM_FIELDS = [k for k in KEYS if k in SimParams.__dataclass_fields__]

PRESETS = {
    "fig1": {"K": 42.0, "hbar_eff": 5.76, "tau": 0.054, "N1": 10, "phi": math.pi,
             "mode": "two-train", "grid_size": 128, "adaptive": True},
    "fig2": {"hbar_eff": 5.76, "tau": 0.054, "N1": 10, "phi": 0.0, "mode": "two-train",
             "r_list": [0.98, 0.93, 0.80], "f_min": 0.5, "f_max": 1.5, "f_steps": 2001},
    "fig3": {"K": 12.0, "hbar_eff": 2.89, "tau": 0.0, "phi": math.pi, "sigma_P": 4.0,
             "beta_samples": 16, "grid_size": 128, "mode": "two-train",
             "n1_list": [5, 10, 20, 40, 80, 160], "k_list": [12.0, 20.0, 42.0],
             "include_modulated": True},
}


def read_config(path):
    """Flat key=value file; blank lines and ``#`` comments are skipped."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = (x.strip() for x in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        out[key] = value
    return out


def _parse(key, value):
    parser, _ = KEYS[key]
    if value is None or isinstance(value, (list, bool)):
        return value
    try:
        return parser(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} ({exc})") from None


def resolve(preset=None, config=None, flags=None):
    """Merge defaults, preset, config file and flags (later wins)."""
    cfg = {k: d for k, (_, d) in KEYS.items()}
    if preset:
        cfg.update(PRESETS[preset])
    layers = []
    if config:
        layers.append(read_config(config))
    if flags:
        layers.append(flags)
    explicit = set()
    for layer in layers:
        for k, v in layer.items():
            cfg[k] = _parse(k, v)
            explicit.add(k)
    if cfg["f1_khz"] is not None:
        if "hbar_eff" in explicit:
            raise ConfigError("hbar_eff: give either hbar_eff or f1_khz, not both")
        cfg["hbar_eff"] = hbar_eff_from_lab(cfg["f1_khz"], cfg["wavelength_nm"], cfg["mass_kg"])
        log.info("hbar_eff=%.6g from f1=%g kHz", cfg["hbar_eff"], cfg["f1_khz"])
    if cfg["tau_us"] is not None:
        if cfg["f1_khz"] is None:
            raise ConfigError("tau_us: needs f1_khz for the conversion")
        if "tau" in explicit:
            raise ConfigError("tau: give either tau or tau_us, not both")
        cfg["tau"] = tau_from_lab(cfg["tau_us"], cfg["f1_khz"])
        log.info("tau*f1=%.6g from tau=%g us", cfg["tau"], cfg["tau_us"])
    if cfg["workers"] < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg['workers']}")
    if cfg["pulse"] not in ("auto", "delta"):
        raise ConfigError(f"pulse must be 'auto' or 'delta', got {cfg['pulse']!r}")
    if not cfg["window"] > 0:
        raise ConfigError(f"window must be > 0, got {cfg['window']}")
    return cfg


def sim_params(cfg):
    return SimParams(**{k: cfg[k] for k in SIM_FIELDS})


def _manifest_value(v):
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return " ".join(repr(x) if isinstance(x, float) else str(x) for x in v)
    return "none" if v is None else str(v)


def write_manifest(cfg, command, out):
    """Resolved config in reduced units; lab inputs are kept as comments."""
    lines = [f"# command={command}"]
    for k in KEYS:
        v = cfg[k]
        if k in ("f1_khz", "tau_us", "wavelength_nm", "mass_kg"):
            lines.append(f"# {k}={_manifest_value(v)}")
        else:
            lines.append(f"{k}={_manifest_value(v)}")
    (out / "manifest.txt").write_text("\n".join(lines) + "\n")


def _write_text(path, values):
    path.write_text(observables.summary_lines(values))


def _r_grid(cfg):
    if cfg["r_steps"] < 5 or not cfg["r_max"] > cfg["r_min"]:
        raise ConfigError("r range: need r_max > r_min and r_steps >= 5")
    return np.linspace(cfg["r_min"], cfg["r_max"], cfg["r_steps"])


def cmd_evolve(cfg, out):
    p = sim_params(cfg)
    sch = build_schedule(p)
    window = cfg["window"]

    def observe(ens):
        return observables.mean_p2(ens), observables.zero_momentum_population(ens, window)

    final, recs, m = dynamics.evolve_with_regrid(
        lambda M: dynamics.ensemble_from_params(p, grid_size=M), sch, p.grid_size,
        max_grid=cfg["max_grid"], pulse=cfg["pulse"], substeps=p.substeps, record=range(1, p.N1 + 1), observe=observe,
    )
    if m != p.grid_size:
        log.info("grid enlarged to %d", m)
    with open(out / "trajectory.csv", "w") as fh:
        fh.write("n,mean_P2,p0\n")
        for t, (p2, p0) in recs:
            fh.write(f"{int(round(t))},{p2!r},{p0!r}\n")
    dist = observables.momentum_distribution(final)
    dist.write_csv(out / "distribution.csv")
    write_schedule_csv(sch, out / "schedule.csv")
    # the heaviest member as a representative single-atom snapshot
    dynamics.write_snapshot_csv(final.member(int(np.argmax(final.weights))), out / "snapshot.csv")
    series = np.array([v[0] for _, v in recs])
    summary = {
        "mean_P2": float(series[-1]) if len(series) else observables.mean_p2(final),
        "p0": observables.zero_momentum_population(final, window),
        "p0_se": observables.p0_standard_error(final, window),
        "grid_size": m,
    }
    try:
        fit = observables.fit_localization_length(dist)
        summary.update(L=fit.L, fit_r2=fit.r2, exponential=fit.exponential)
    except observables.FitError as exc:
        summary["fit"] = f"unavailable ({exc})"
    try:
        summary["N_L"] = observables.estimate_localization_time(series)
    except ValueError as exc:
        summary["N_L"] = f"unavailable ({exc})"
    _write_text(out / "summary.txt", summary)


def _report_values(rep):
    vals = rep.as_dict()
    vals["left"] = rep.left
    vals["right"] = rep.right
    return vals


def cmd_scan(cfg, out):
    p = sim_params(cfg)
    kw = dict(window=cfg["window"], workers=cfg["workers"], pulse=cfg["pulse"])
    if cfg["k_inhomogeneity"]:
        res = scan.scan_with_k_inhomogeneity(p, _r_grid(cfg), waist_ratio=cfg["waist_ratio"], **kw)
        res.curve.write_csv(out / "resonance.csv")
        res.homogeneous.write_csv(out / "resonance_homogeneous.csv")
        _write_text(out / "inhomogeneity.txt", {
            "broadened_delta_r": res.broadened_width,
            "homogeneous_delta_r": res.homogeneous_width,
        })
        curve = res.curve
    elif cfg["adaptive"]:
        try:
            res = scan.adaptive_scan(p, **kw)
        except scan.WidthError as exc:
            _write_text(out / "width_report.txt", {"error": str(exc)})
            log.warning("no width: %s", exc)
            return
        res.coarse.write_csv(out / "resonance_coarse.csv")
        res.curve.write_csv(out / "resonance.csv")
        _write_text(out / "width_report.txt", _report_values(res.report))
        return
    else:
        curve = scan.scan_resonance(p, _r_grid(cfg), **kw)
        curve.write_csv(out / "resonance.csv")
    try:
        rep = scan.fwhm(curve)
        _write_text(out / "width_report.txt", _report_values(rep))
    except scan.WidthError as exc:
        _write_text(out / "width_report.txt", {"error": str(exc)})
        log.warning("no width: %s", exc)


def cmd_width_vs_n(cfg, out):
    p = sim_params(cfg)
    kw = dict(window=cfg["window"], workers=cfg["workers"], pulse=cfg["pulse"])
    runs = [("", p)]
    if cfg["k_list"]:
        runs = [(f"_K{k:g}", p.replace(K=k)) for k in cfg["k_list"]]
    if cfg["include_modulated"]:
        runs.append(("_modulated", p.replace(mode="modulated", A=1.0)))
    summary = {"fourier_limit": scan.FOURIER_LIMIT}
    for tag, q in runs:
        log.info("width_vs_n%s", tag or " (single K)")
        series = scan.width_vs_n(q, cfg["n1_list"], **kw)
        series.write_csv(out / f"width_vs_n{tag}.csv")
        for n1, flag in zip(series.n1, series.flags):
            if flag:
                summary[f"flag{tag}_N1_{n1}"] = flag
    _write_text(out / "summary.txt", summary)


def cmd_spectrum(cfg, out):
    p = sim_params(cfg)
    f = np.linspace(cfg["f_min"], cfg["f_max"], cfg["f_steps"])
    if cfg["r_list"]:
        for r in cfg["r_list"]:
            curve = spectrum.sequence_spectrum(build_schedule(p.replace(r=r)), f)
            curve.write_csv(out / f"spectrum_r{r:g}.csv")
    else:
        spectrum.sequence_spectrum(build_schedule(p), f).write_csv(out / "spectrum.csv")


def cmd_f_half(cfg, out):
    p = sim_params(cfg).replace(phi=0.0, mode="two-train")
    r = np.linspace(cfg["r_min"], cfg["r_max"], cfg["r_steps"])
    curve = spectrum.f_half(p, r)
    spectrum.write_f_half_csv(curve, out / "f_half.csv")
    vals = {"N1": p.N1, "N2": curve.meta["N2"], "tau": p.tau}
    try:
        vals["delta_F12"] = spectrum.f_half_width(p, r)
    except scan.WidthError as exc:
        vals["error"] = str(exc)
    _write_text(out / "summary.txt", vals)


def cmd_classical(cfg, out):
    series = dynamics.classical_diffusion(cfg["K"], cfg["n_kicks"], cfg["ensemble_size"],
                                          seed=cfg["seed"])
    with open(out / "classical.csv", "w") as fh:
        fh.write("n,mean_P2\n")
        for n, v in enumerate(series, 1):
            fh.write(f"{n},{float(v)!r}\n")
    n = np.arange(1, len(series) + 1)
    _write_text(out / "summary.txt", {
        "K": cfg["K"],
        "D_fit": float(np.polyfit(n, series, 1)[0]) if len(series) > 1 else float("nan"),
        "quasilinear_D": cfg["K"] ** 2 / 2,
    })


COMMANDS = {
    "evolve": cmd_evolve,
    "scan": cmd_scan,
    "width-vs-n": cmd_width_vs_n,
    "spectrum": cmd_spectrum,
    "f-half": cmd_f_half,
    "classical": cmd_classical,
}

HELP = {
    "evolve": "trajectory, final distribution and localization summary",
    "scan": "resonance curve p0(r) and its width report",
    "width-vs-n": "normalized width W against N1",
    "spectrum": "closed-form power spectrum of the kick train",
    "f-half": "Fourier baseline F_1/2(r) and its width",
    "classical": "standard-map momentum diffusion",
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="key=value file (a manifest works too)")
    g.add_argument("--preset", choices=sorted(PRESETS))
    g.add_argument("--out", default="out", help="output directory (default: out)")
    g.add_argument("-q", "--quiet", action="store_true", help="only warnings on stderr")
    s = common.add_argument_group("settings (override config and preset)")
    for key, (parser, default) in KEYS.items():
        flag = "--" + key.replace("_", "-")
        if parser is _bool:
            s.add_argument(flag, dest=key, nargs="?", const="true", default=argparse.SUPPRESS,
                           metavar="BOOL")
        else:
            s.add_argument(flag, dest=key, default=argparse.SUPPRESS, metavar=key.upper())
    ap = argparse.ArgumentParser(prog="kickrotor", description="Two-frequency kicked rotor toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HELP[name])
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    flags = {k: getattr(args, k) for k in KEYS if hasattr(args, k)}
    try:
        cfg = resolve(args.preset, args.config, flags)
        if args.command != "classical":
            sim_params(cfg)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_manifest(cfg, args.command, out)
        COMMANDS[args.command](cfg, out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AliasingError as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except OSError as exc:
        print(f"config error: output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
