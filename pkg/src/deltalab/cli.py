"""Command line entry point: ``deltalab <bs|pi|converge|resonance> --config FILE``.

Every command reads a JSON config, validates it (unknown keys are errors),
writes its artifacts into ``--out`` and embeds the SHA-256 of the
canonicalized config in each file.

Exit codes: 0 success, 1 I/O or schema error, 2 no resonance, 3 degenerate
resonance, 4 spectral point on the spectrum.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import bsop, convlab
from .core import (
    PointInteractionStrength,
    RadialPotential,
    build_graded_grid,
    domain_from_dict,
    export_operator,
)
from .errors import (
    DegeneracyError,
    DeltalabError,
    NoResonanceError,
    OrthogonalResonanceError,
    PoleError,
    SpectralPointError,
)
from .greens import c_alpha
from .resolvent import pi_eigenvalue, pi_resolvent

EXIT_OK, EXIT_IO, EXIT_NO_RESONANCE, EXIT_DEGENERATE, EXIT_SPECTRAL = 0, 1, 2, 3, 4

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}


def _obj(props, required=()):
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_BC = {"oneOf": [
    _obj({"kind": {"const": "dirichlet"}}, ["kind"]),
    _obj({"kind": {"const": "neumann"}}, ["kind"]),
    _obj({"kind": {"const": "robin"}, "b": _NUM}, ["kind", "b"]),
]}
_DOMAIN = {"oneOf": [
    _obj({"kind": {"const": "free"}}, ["kind"]),
    _obj({"kind": {"const": "ball"}, "radius": _POS, "bc": _BC}, ["kind", "radius", "bc"]),
]}
_PROFILE = {"oneOf": [
    _obj({"kind": {"const": "square_well"}, "depth": _NUM, "radius": _POS}, ["kind"]),
    _obj({"kind": {"const": "truncated_gaussian"}, "width": _POS, "radius": _POS,
          "depth": _NUM}, ["kind"]),
    _obj({"kind": {"const": "tabulated"},
          "r": {"type": "array", "items": _NUM, "minItems": 4},
          "values": {"type": "array", "items": _NUM, "minItems": 4}},
         ["kind", "r", "values"]),
]}
_POTENTIAL = _obj({"profile": _PROFILE, "coupling": _NUM, "dilation": _POS}, ["profile"])
_ALPHA = {"oneOf": [_NUM, {"enum": ["Infinity", "inf"]}]}
_RES_GRID = _obj({"panels": {"type": "integer", "minimum": 1},
                  "nodes_per_panel": {"type": "integer", "minimum": 2},
                  "inner_scale": _POS})
_SWEEP_GRID = _obj({"order": {"type": "integer", "minimum": 2},
                    "inner_panels": {"type": "integer", "minimum": 1},
                    "outer_panels": {"type": "integer", "minimum": 1},
                    "free_radius": _POS,
                    "workers": {"type": "integer", "minimum": 1}})
_COMMON = {"seed": {"type": "integer"}, "output_prefix": {"type": "string", "minLength": 1},
           "description": {"type": "string"}}

SCHEMAS = {
    "bs": _obj({**_COMMON, "domain": _DOMAIN, "potential": _POTENTIAL, "grid": _RES_GRID,
                "tune": {"type": "boolean"},
                "lambda": {"type": "array", "items": _NUM},
                "simplicity_gap": _POS}, ["potential"]),
    "pi": _obj({**_COMMON, "domain": _DOMAIN, "alpha": _ALPHA, "z": _POS, "e_max": _POS,
                "export": {"type": "boolean"}, "grid": _SWEEP_GRID},
               ["domain", "alpha"]),
    "converge": _obj({**_COMMON, "mode": {"enum": ["local", "free", "nonlocal"]},
                      "domain": _DOMAIN, "potential": _POTENTIAL, "density": _POTENTIAL,
                      "lambda": _NUM, "alpha": _NUM, "detune": _POS,
                      "eps": {"type": "array", "items": _POS, "minItems": 1},
                      "z": _POS,
                      "annulus": {"oneOf": [{"type": "null"},
                                            {"type": "array", "items": _POS,
                                             "minItems": 2, "maxItems": 2}]},
                      "scaling": {"enum": ["correct", "wrong"]},
                      "wrong_exponent": _POS,
                      "grid": _SWEEP_GRID, "resonance_grid": _RES_GRID,
                      "thresholds": _obj({"slope": _NUM, "r2": _NUM, "floor_ratio": _NUM}),
                      "plot": {"type": "boolean"}}, ["mode"]),
    "resonance": _obj({**_COMMON, "potential": _POTENTIAL, "resonance_file": {"type": "string"},
                       "grid": _RES_GRID,
                       "r_out": _obj({"min": _POS, "max": _POS,
                                      "n": {"type": "integer", "minimum": 2}})}),
}


class ConfigError(Exception):
    pass


def config_hash(config):
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path, command):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        config = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    try:
        jsonschema.validate(config, SCHEMAS[command])
    except jsonschema.ValidationError as exc:
        where = "/".join(map(str, exc.absolute_path)) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    return config


def _alpha(value):
    return PointInteractionStrength.parse(value).alpha


def _domain(config):
    d = config.get("domain", {"kind": "free"})
    return domain_from_dict(d)


def _resonance_grid(spec, V):
    g = {"panels": 40, "nodes_per_panel": 10, **(spec or {})}
    a = V.support
    return build_graded_grid(g["panels"], g["nodes_per_panel"], a,
                             g.get("inner_scale", a / g["panels"]))


def _write(out, name, text):
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def _dump(obj):
    return json.dumps(convlab._jsonable(obj), indent=2, sort_keys=True) + "\n"


def _tune(V, grid, domain=None, gap=None):
    res = bsop.tune_resonance(V, grid, domain)
    if gap is not None:
        res.simple = res.gap > gap
    return res


def cmd_bs(config, out):
    prefix = config.get("output_prefix", "resonance")
    domain = _domain(config)
    V = RadialPotential.from_dict(config["potential"])
    grid = _resonance_grid(config.get("grid"), V)
    lams = config.get("lambda", [0.0, 1.0])
    gap = config.get("simplicity_gap")
    payload = {"config_sha256": config_hash(config), "grid": {
        "size": grid.size, "breaks": grid.breaks.tolist(), "order": grid.order}}
    if config.get("tune", True):
        res = _tune(V, grid, domain, gap)
    else:
        _, v = bsop.split_uv(V, grid.nodes)
        B = bsop.assemble_b0(V, grid, domain=domain)
        pair = bsop.eigen_near(B, -1.0, v=v)
        payload["eigenvalue_nearest_minus_one"] = pair.value
        payload["second"] = float(np.real(pair.second))
        _write(out, f"{prefix}.json", _dump(payload))
        return EXIT_OK
    payload.update(res.to_dict(()))
    _write(out, f"{prefix}.json", _dump(payload))  # partial record before alpha checks
    if not res.simple:
        raise DegeneracyError(f"eigenvalue -1 is not simple (gap {res.gap:.3e})")
    payload["alpha"] = {repr(float(l)): res.alpha(l) for l in lams}
    _write(out, f"{prefix}.json", _dump(payload))
    return EXIT_OK


def cmd_pi(config, out):
    prefix = config.get("output_prefix", "pi")
    domain = _domain(config)
    alpha = _alpha(config["alpha"])
    E = pi_eigenvalue(domain, alpha, e_max=config.get("e_max", 100.0))
    payload = {"config_sha256": config_hash(config), "alpha": alpha,
               "eigenvalue": "none" if E is None else E}
    code = EXIT_OK
    if "z" in config:
        z = float(config["z"])
        payload["z"] = z
        try:
            payload["c_z"] = c_alpha(domain, z, alpha)
        except PoleError as exc:
            payload["error"] = str(exc)
            code = EXIT_SPECTRAL
        if code == EXIT_OK and config.get("export", False):
            spec = convlab.GridSpec(**config.get("grid", {}))
            r_max = spec.free_radius if domain is None else domain.radius
            grid = convlab._sweep_grid(domain, 0.05 * r_max, None, spec)
            out.mkdir(parents=True, exist_ok=True)
            export_operator(pi_resolvent(domain, z, alpha, grid), out / f"{prefix}_operator.npz")
            payload["operator_file"] = f"{prefix}_operator.npz"
    _write(out, f"{prefix}.json", _dump(payload))
    return code


def cmd_converge(config, out):
    mode = config["mode"]
    prefix = config.get("output_prefix", f"converge_{mode}")
    thresholds = {"slope": convlab.SLOPE_THRESHOLD, "r2": 0.98, "floor_ratio": 10.0,
                  **config.get("thresholds", {})}
    spec = convlab.GridSpec(**config.get("grid", {}))
    eps = config.get("eps", list(convlab.DEFAULT_EPS))
    z = float(config.get("z", 4.0 if mode == "nonlocal" else 1.0))
    annulus = config.get("annulus", [1.0, 2.0])
    annulus = None if annulus is None else tuple(annulus)
    if mode == "nonlocal":
        rho = RadialPotential.from_dict(config["density"]) if "density" in config else None
        if rho is None:
            raise ConfigError("nonlocal mode needs a 'density'")
        report = convlab.sweep_nonlocal(
            _domain(config), rho, float(config.get("alpha", -1.0 / (4 * math.pi))), eps, z,
            scaling=config.get("scaling", "correct"),
            wrong_exponent=float(config.get("wrong_exponent", 2.0)),
            annulus=annulus, grid_spec=spec)
    else:
        if "potential" not in config:
            raise ConfigError(f"{mode} mode needs a 'potential'")
        V = RadialPotential.from_dict(config["potential"])
        rgrid = _resonance_grid(config.get("resonance_grid"), V)
        res = bsop.tune_resonance(V, rgrid)
        if not res.simple:
            raise DegeneracyError(f"eigenvalue -1 is not simple (gap {res.gap:.3e})")
        V = res.potential.with_coupling(res.coupling * float(config.get("detune", 1.0)))
        domain = None if mode == "free" else _domain(config)
        if mode == "local" and domain is None:
            raise ConfigError("local mode needs a ball domain; use mode 'free' on R^3")
        report = convlab.sweep_local(domain, V, float(config.get("lambda", 0.0)), eps, z,
                                     annulus=annulus, resonance=res, grid_spec=spec)
    h = config_hash(config)
    report.meta["thresholds"] = thresholds
    report.meta["passed"] = _assess(report, thresholds)
    _write(out, f"{prefix}.csv", report.to_csv(h))
    _write(out, f"{prefix}.json", report.to_json(h) + "\n")
    if config.get("plot", False):
        _write(out, f"{prefix}.gp", f"# config_sha256={h}\n" + report.plot_script(f"{prefix}.csv"))
    if any(not r.valid for r in report.rows) and "spectral_point" in report.meta:
        return EXIT_SPECTRAL
    if any(not r.valid and "move z" in r.note for r in report.rows):
        return EXIT_SPECTRAL
    return EXIT_OK


def _assess(report, thresholds):
    out = {}
    try:
        slope, _, r2 = report.fit("norm_l0")
    except DeltalabError:
        return {"fit": False}
    out["slope"] = slope >= thresholds["slope"]
    out["r2"] = r2 >= thresholds["r2"]
    out["floor"] = report.alt_floor_ratio() >= thresholds["floor_ratio"]
    return out


def cmd_resonance_profile(config, out):
    prefix = config.get("output_prefix", "resonance_profile")
    if "resonance_file" in config:
        try:
            stored = json.loads(Path(config["resonance_file"]).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise NoResonanceError(f"resonance input unavailable: {exc}") from exc
        if "theta_star" not in stored or "potential" not in stored:
            raise NoResonanceError("resonance input carries no tuned coupling")
        V = RadialPotential.from_dict(stored["potential"])
    elif "potential" in config:
        V = RadialPotential.from_dict(config["potential"])
    else:
        raise NoResonanceError("no resonance input: give 'potential' or 'resonance_file'")
    grid = _resonance_grid(config.get("grid"), V)
    res = bsop.tune_resonance(V, grid)
    ro = {"min": 1.05, "max": 10.0, "n": 64, **config.get("r_out", {})}
    r_out = np.geomspace(ro["min"] * V.support, ro["max"] * V.support, ro["n"])
    prof = bsop.resonance_profile(res, r_out=r_out)
    tail = prof.tail_law()
    payload = {
        "config_sha256": config_hash(config),
        "theta_star": res.coupling, "overlap": prof.overlap,
        "tail_constant": prof.tail_constant, "tail_defect": prof.defect,
        "tail_spread": float(np.max(tail) - np.min(tail)),
        "residual": bsop.resonance_residual(res),
        "square_integrable": abs(prof.tail_constant) < 1e-12,
        "r": prof.r.tolist(), "psi": prof.psi.tolist(),
    }
    _write(out, f"{prefix}.json", _dump(payload))
    return EXIT_OK


COMMANDS = {"bs": cmd_bs, "pi": cmd_pi, "converge": cmd_converge, "resonance": cmd_resonance_profile}


def build_parser():
    p = argparse.ArgumentParser(prog="deltalab",
                                description="Point-interaction limits of scaled potentials.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        config = load_config(args.config, args.command)
        return COMMANDS[args.command](config, out)
    except (ConfigError, OSError) as exc:
        print(f"deltalab: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NoResonanceError, OrthogonalResonanceError) as exc:
        print(f"deltalab: {exc}", file=sys.stderr)
        return EXIT_NO_RESONANCE
    except DegeneracyError as exc:
        print(f"deltalab: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (SpectralPointError, PoleError) as exc:
        print(f"deltalab: {exc}", file=sys.stderr)
        return EXIT_SPECTRAL
    except DeltalabError as exc:
        print(f"deltalab: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
