"""Command-line front end: argparse dispatch, JSON run configs, input and
symbol construction from spec strings, and persistence of every report.

Exit codes: 0 success, 1 a selftest gate failed, 2 usage errors (unknown
flags, malformed options or configs, missing input files).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .experiments import (
    parse_norm,
    run_continuity_table,
    run_counterexample,
    run_sigma_estimate,
    run_wavefront,
)
from .frame import DEFAULT_FRAME, LPFrame, ModulationFunction
from .grid import (
    GridFunction,
    GridSpec,
    fft_forward,
    from_coeffs,
    lp_norm,
    random_band_limited,
    read_pdgf,
    single_mode,
    write_pdgf,
)
from .operators import (
    apply_auto,
    corona_ball_report,
    paradiff_split,
    spectral_support_rule_check,
    support_rule_check,
    vfm_limit,
    vfm_refinement,
)
from .pointwise import (
    MaximalParams,
    default_maximal_params,
    factorization_check,
    maximal_lp_constant,
    maximal_ratio,
    mihlin_bound_check,
    mihlin_rhs,
    mihlin_ratio,
    moment_decay_check,
    peetre_maximal,
    symbol_factor,
)
from .reporting import (
    _sanitize,
    write_csv,
    write_report_csv,
    write_report_dat,
    write_report_json,
    write_report_svg,
)
from .symbols import ching_symbol, parse_symbol_spec
from .experiments import ExperimentReport


# ---------------------------------------------------------------------------
# option grammars shared by several subcommands


def _parse_kv(rest: str, what: str) -> dict[str, str]:
    kv: dict[str, str] = {}
    if not rest:
        return kv
    for item in rest.split(","):
        k, eq, v = item.partition("=")
        if not eq or not k.strip():
            raise ValueError(f"bad {what} option {item!r}")
        kv[k.strip()] = v.strip()
    return kv


def _parse_eta(text: str, n: int):
    """'32' for n=1, '3x-4' for n=2 (comma is taken by the option list)."""
    parts = text.split("x")
    if len(parts) != n:
        raise ValueError(f"eta {text!r} has {len(parts)} components, grid has n={n}")
    vals = tuple(int(p) for p in parts)
    return vals[0] if n == 1 else vals


def make_input(text: str, spec: GridSpec, seed: int = 0) -> GridFunction:
    """Build a grid function from a generator string.

    Forms: single:eta=32 (n=2: eta=3x-4)
           lacunary:N=3[,d=0][,theta=1]
           ladder:J=6[,d=0.5]            (modes 2^j, weights 2^{-jd})
           random:band=0.4[,seed=0]
           file:u.pdgf
    """
    from .experiments import lacunary_input

    kind, _, rest = text.partition(":")
    if kind == "file":
        return read_pdgf(rest)
    kv = _parse_kv(rest, f"input mode {kind!r}")
    if kind == "single":
        if "eta" not in kv:
            raise ValueError("single mode needs eta=<freq>")
        return single_mode(spec, _parse_eta(kv["eta"], spec.n))
    if kind == "lacunary":
        if "N" not in kv:
            raise ValueError("lacunary mode needs N=<family index>")
        return lacunary_input(
            spec,
            int(kv["N"]),
            d=float(kv.get("d", "0")),
            theta=int(kv.get("theta", "1")),
        )
    if kind == "ladder":
        if spec.n != 1:
            raise ValueError("ladder mode runs on 1-d grids")
        J = int(kv.get("J", "6"))
        if not 1 <= J or 2**J > spec.N // 2:
            raise ValueError(f"ladder J={J} does not fit on an N={spec.N} grid")
        d = float(kv.get("d", "0.5"))
        return from_coeffs(spec, {2**j: 2.0 ** (-j * d) for j in range(1, J + 1)})
    if kind == "random":
        band = float(kv.get("band", "0.4"))
        if not 0.0 < band <= 1.0:
            raise ValueError(f"random band must be in (0, 1], got {band}")
        rng = np.random.default_rng(int(kv.get("seed", str(seed))))
        return random_band_limited(spec, band * (spec.N // 2), rng)
    raise ValueError(f"unknown input mode {kind!r} in {text!r}")


def frame_from_text(text: str) -> LPFrame:
    kv = _parse_kv(text, "frame")
    unknown = set(kv) - {"r", "R", "h", "profile"}
    if unknown:
        raise ValueError(f"unknown frame keys {sorted(unknown)}")
    psi = ModulationFunction(
        r=float(kv.get("r", "1")),
        R=float(kv.get("R", "2")),
        profile=kv.get("profile", "smoothstep"),
    )
    return LPFrame(psi=psi, h=int(kv.get("h", "3")))


def symbol_factory(text: str, frame: LPFrame):
    """Grid-adaptive symbol builder for a spec string.

    ching with jmax=auto picks the deepest truncation the grid holds,
    recomputed per grid; everything else defers to parse_symbol_spec.
    """
    normalized = text.replace(" ", "")
    if normalized.startswith("ching:") and "jmax=auto" in normalized:
        probe_text = normalized.replace("jmax=auto", "jmax=0")

        def build(spec: GridSpec):
            probe = parse_symbol_spec(probe_text, spec, frame)
            reach = max(probe.A.a1, float(np.linalg.norm(probe.theta)))
            cap = int(math.floor(math.log2((spec.N / 2) / reach) + 1e-12))
            if cap < 1:
                raise ValueError(
                    f"grid N={spec.N} holds no truncation of {text!r}"
                )
            return ching_symbol(
                d=probe.d, theta=probe.theta, A=probe.A, j_max=cap, spec=spec
            )

        return build
    return lambda spec: parse_symbol_spec(text, spec, frame)


# ---------------------------------------------------------------------------
# run configuration


_CONFIG_KEYS = {"grid", "frame", "symbol", "params", "seed", "thresholds", "out"}


@dataclass(frozen=True)
class RunConfig:
    """Validated experiment configuration; `raw` keeps the file's JSON
    object verbatim for embedding into reports."""

    grid: GridSpec | None
    frame: LPFrame
    symbol: str | None
    params: dict
    seed: int
    thresholds: dict
    out: dict
    raw: dict


def config_from_dict(obj: dict) -> RunConfig:
    if not isinstance(obj, dict):
        raise ValueError("config must be a JSON object")
    unknown = set(obj) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    grid = None
    if obj.get("grid") is not None:
        g = obj["grid"]
        extra = set(g) - {"n", "N"}
        if extra:
            raise ValueError(f"unknown grid keys {sorted(extra)}")
        if "N" not in g:
            raise ValueError("config grid needs N")
        grid = GridSpec(n=int(g.get("n", 1)), N=int(g["N"]))
    frame = DEFAULT_FRAME
    if obj.get("frame") is not None:
        f = obj["frame"]
        extra = set(f) - {"r", "R", "h", "profile"}
        if extra:
            raise ValueError(f"unknown frame keys {sorted(extra)}")
        frame = LPFrame(
            psi=ModulationFunction(
                r=float(f.get("r", 1.0)),
                R=float(f.get("R", 2.0)),
                profile=f.get("profile", "smoothstep"),
            ),
            h=int(f.get("h", 3)),
        )
    symbol = obj.get("symbol")
    if symbol is not None and not isinstance(symbol, str):
        raise ValueError("config symbol must be a spec string")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ValueError("config params must be an object")
    thresholds = obj.get("thresholds", {})
    if not isinstance(thresholds, dict):
        raise ValueError("config thresholds must be an object")
    for k, v in thresholds.items():
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ValueError(f"threshold {k!r} must be a number")
    out = obj.get("out", {})
    if not isinstance(out, dict) or any(not isinstance(v, str) for v in out.values()):
        raise ValueError("config out must map names to path strings")
    seed = obj.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError("config seed must be an integer")
    return RunConfig(grid, frame, symbol, dict(params), seed, dict(thresholds), dict(out), obj)


def load_config(path) -> RunConfig:
    return config_from_dict(json.loads(Path(path).read_text()))


def _pop_known(src: dict, allowed: set[str], what: str) -> dict:
    unknown = set(src) - allowed
    if unknown:
        raise ValueError(f"unknown {what} keys {sorted(unknown)}")
    return {k: src[k] for k in allowed if k in src}


def dispatch_experiment(runner: str, cfg: RunConfig) -> ExperimentReport:
    if runner == "counterexample":
        if cfg.symbol is not None:
            raise ValueError("counterexample builds its own symbol; drop config symbol")
        p = _pop_known(cfg.params, {"d", "N_list"}, "counterexample params")
        th = _pop_known(
            cfg.thresholds, {"family_margin", "family_factor"}, "counterexample thresholds"
        )
        kw: dict = dict(th)
        if "d" in p:
            kw["d"] = float(p["d"])
        if "N_list" in p:
            kw["N_list"] = tuple(int(x) for x in p["N_list"])
        if cfg.grid is not None:
            kw["spec"] = cfg.grid
        return run_counterexample(**kw)
    if runner == "wavefront":
        if cfg.symbol is not None:
            raise ValueError("wavefront builds its own symbol; drop config symbol")
        p = _pop_known(cfg.params, {"d", "J", "m_range", "holder_grid"}, "wavefront params")
        th = _pop_known(cfg.thresholds, {"slope_tol"}, "wavefront thresholds")
        kw = dict(th)
        if "d" in p:
            kw["d"] = float(p["d"])
        if "J" in p:
            kw["J"] = int(p["J"])
        if "m_range" in p:
            kw["m_range"] = [int(m) for m in p["m_range"]]
        if "holder_grid" in p:
            kw["holder_grid"] = int(p["holder_grid"])
        if cfg.grid is not None:
            kw["spec"] = cfg.grid
        return run_wavefront(**kw)
    if runner == "continuity":
        if cfg.symbol is None:
            raise ValueError("continuity needs a config symbol")
        p = _pop_known(
            cfg.params,
            {"cases", "grids", "trials", "band_fraction", "family_theta"},
            "continuity params",
        )
        th = _pop_known(
            cfg.thresholds,
            {"stability", "growth_factor", "family_factor", "family_margin"},
            "continuity thresholds",
        )
        if "cases" not in p:
            raise ValueError("continuity needs params.cases")
        cases = [tuple(c) for c in p["cases"]]
        if any(len(c) != 2 for c in cases):
            raise ValueError("each continuity case is a [source, target] pair")
        kw = dict(th)
        if "grids" in p:
            kw["grids"] = [int(g) for g in p["grids"]]
        if "trials" in p:
            kw["trials"] = int(p["trials"])
        if "band_fraction" in p:
            kw["band_fraction"] = float(p["band_fraction"])
        if "family_theta" in p:
            kw["family_theta"] = int(p["family_theta"])
        return run_continuity_table(
            symbol_factory(cfg.symbol, cfg.frame),
            cases,
            seed=cfg.seed,
            frame=cfg.frame,
            **kw,
        )
    if runner == "sigma":
        if cfg.symbol is None:
            raise ValueError("sigma needs a config symbol")
        if cfg.grid is None:
            raise ValueError("sigma needs a config grid")
        p = _pop_known(
            cfg.params,
            {"s_grid", "alphas", "offset", "j_range", "eps_grid", "r_expected", "strict"},
            "sigma params",
        )
        th = _pop_known(cfg.thresholds, {"slope_tol", "sigma_tol"}, "sigma thresholds")
        kw = dict(th)
        if "s_grid" in p:
            kw["s_grid"] = [float(s) for s in p["s_grid"]]
        if "alphas" in p:
            kw["alphas"] = [int(a) for a in p["alphas"]]
        if "offset" in p:
            kw["offset"] = int(p["offset"])
        if "j_range" in p:
            kw["j_range"] = [int(j) for j in p["j_range"]]
        if "eps_grid" in p:
            kw["eps_grid"] = [float(e) for e in p["eps_grid"]]
        if "r_expected" in p:
            kw["r_expected"] = float(p["r_expected"])
        if "strict" in p:
            kw["strict"] = bool(p["strict"])
        a = symbol_factory(cfg.symbol, cfg.frame)(cfg.grid)
        return run_sigma_estimate(a, cfg.grid, **kw)
    raise ValueError(f"unknown experiment {runner!r}")


# ---------------------------------------------------------------------------
# per-subcommand helpers


def _grid_from_args(args) -> GridSpec:
    return GridSpec(n=args.n, N=args.grid)


def _frame_from_args(args) -> LPFrame:
    return frame_from_text(args.frame) if args.frame else DEFAULT_FRAME


def _resolve_io(args) -> tuple[GridFunction, GridSpec]:
    """The input function and the grid every other object is built on.

    A .pdgf input defines the grid; explicit --grid/--n must then agree.
    Generator modes realize on the --grid/--n lattice.
    """
    if args.input is not None:
        u = read_pdgf(args.input)
        if args.grid != _GRID_DEFAULT and (u.spec.N != args.grid or u.spec.n != args.n):
            raise ValueError(
                f"{args.input} holds an n={u.spec.n}, N={u.spec.N} function; "
                f"--grid/--n disagree"
            )
        return u, u.spec
    spec = _grid_from_args(args)
    return make_input(args.mode, spec, seed=args.seed), spec


def _emit_json(obj: dict, out_path: str | None) -> None:
    text = json.dumps(_sanitize(obj), indent=2)
    if out_path:
        Path(out_path).write_text(text + "\n")
    print(text)


def _dominant_modes(y: GridFunction, limit: int = 8) -> list[dict]:
    c = fft_forward(y).coeffs
    flat = np.abs(c).ravel()
    top = flat.max()
    if top == 0.0:
        return []
    order = np.argsort(flat)[::-1][:limit]
    mesh = y.spec.freq_mesh()
    out = []
    for idx in order:
        if flat[idx] <= 1e-12 * top:
            break
        pos = np.unravel_index(idx, y.spec.shape)
        eta = [int(m[pos]) for m in mesh]
        val = c[pos]
        out.append(
            {
                "eta": eta[0] if y.spec.n == 1 else eta,
                "abs": float(abs(val)),
                "re": float(val.real),
                "im": float(val.imag),
            }
        )
    return out


def _add_symbol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--symbol", required=True, help="symbol spec string")
    p.add_argument("--grid", type=int, default=_GRID_DEFAULT, help="grid size N")
    p.add_argument("--n", type=int, choices=(1, 2), default=1, help="dimension")
    p.add_argument("--frame", help="frame options r=..,R=..,h=..[,profile=..]")
    p.add_argument("--seed", type=int, default=0, help="seed for random generators")


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    _add_symbol_flags(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="input .pdgf file")
    src.add_argument("--mode", help="input generator string")


_GRID_DEFAULT = 256


# ---------------------------------------------------------------------------
# subcommands


def cmd_apply(args) -> int:
    u, spec = _resolve_io(args)
    frame = _frame_from_args(args)
    a = symbol_factory(args.symbol, frame)(spec)
    y = apply_auto(a, u)
    if args.out:
        write_pdgf(y, args.out)
    if args.spectrum_csv:
        c = fft_forward(y).coeffs
        mesh = spec.freq_mesh()
        rows = []
        flat = c.ravel()
        for idx in range(flat.size):
            pos = np.unravel_index(idx, spec.shape)
            eta = [int(m[pos]) for m in mesh]
            rows.append(eta + [repr(flat[idx].real), repr(flat[idx].imag)])
        write_csv(
            args.spectrum_csv,
            [f"eta{i + 1}" for i in range(spec.n)] + ["re", "im"],
            rows,
        )
    _emit_json(
        {
            "grid": {"n": spec.n, "N": spec.N},
            "symbol": args.symbol,
            "in_l2": lp_norm(u, 2),
            "out_l2": lp_norm(y, 2),
            "dominant_modes": _dominant_modes(y),
            "out": args.out,
        },
        None,
    )
    return 0


def cmd_norms(args) -> int:
    frame = _frame_from_args(args)
    spec = _grid_from_args(args)
    if args.corpus is not None:
        entries = json.loads(Path(args.corpus).read_text())
        if not isinstance(entries, list):
            raise ValueError("corpus must be a JSON list of generator strings")
        rows = []
        for i, entry in enumerate(entries):
            if not isinstance(entry, str):
                raise ValueError(f"corpus entry {i} must be a generator string")
            u = make_input(entry, spec, seed=args.seed)
            label, fn, _ = parse_norm(args.space, frame)
            rows.append((i, entry, label, repr(fn(u))))
        if args.out:
            write_csv(args.out, ("index", "mode", "space", "norm"), rows)
        else:
            print("index,mode,space,norm")
            for row in rows:
                print(",".join(str(x) for x in row))
        return 0
    if args.input is not None:
        u = read_pdgf(args.input)
    elif args.mode is not None:
        u = make_input(args.mode, spec, seed=args.seed)
    else:
        raise ValueError("norms needs --input, --mode, or --corpus")
    label, fn, _ = parse_norm(args.space, frame)
    value = fn(u)
    if args.json:
        _emit_json(
            {"space": label, "value": value, "grid": {"n": u.spec.n, "N": u.spec.N}},
            None,
        )
    else:
        print(repr(value))
    return 0


def cmd_vfm(args) -> int:
    u, spec = _resolve_io(args)
    frame = _frame_from_args(args)
    build = symbol_factory(args.symbol, frame)
    if args.psi_count < 2:
        raise ValueError("need at least two modulation profiles")
    psis = tuple(
        ModulationFunction(r=1.0 * 0.8**i, R=2.0 * 0.8**i) for i in range(args.psi_count)
    )
    trace = vfm_limit(build(spec), u, psis, m_max=args.m_max)
    obj: dict = {
        "grid": {"n": spec.n, "N": spec.N},
        "symbol": args.symbol,
        "tags": trace.tags,
        "m_values": trace.m_values,
        "l2_norms": trace.l2_norms,
        "m_sat": trace.m_sat,
        "cross_profile_deviation": trace.cross_dev,
    }
    if args.refine:
        if args.refine < 2:
            raise ValueError("--refine counts grids, need at least 2")
        if args.mode is None:
            raise ValueError("--refine needs --mode (the input is re-sampled per grid)")
        specs = [GridSpec(n=args.n, N=args.grid << i) for i in range(args.refine)]
        rr = vfm_refinement(
            build, lambda s: make_input(args.mode, s, seed=args.seed), specs, psis
        )
        obj["refinement"] = {
            "grid_sizes": list(rr.grid_sizes),
            "l2_norms": list(rr.l2_norms),
            "growth_factors": list(rr.growth_factors),
            "rel_changes": list(rr.rel_changes),
            "diverging": rr.diverging,
            "cauchy": rr.cauchy,
        }
    _emit_json(obj, args.out)
    return 0


def cmd_paradiff(args) -> int:
    u, spec = _resolve_io(args)
    frame = _frame_from_args(args)
    a = symbol_factory(args.symbol, frame)(spec)
    terms = paradiff_split(a, u, frame)
    y = apply_auto(a, u)
    recon = GridFunction(
        spec, terms.t1.values + terms.t2.values + terms.t3.values
    )
    denom = max(lp_norm(y, math.inf), 1e-300)
    obj: dict = {
        "grid": {"n": spec.n, "N": spec.N},
        "symbol": args.symbol,
        "K": terms.K,
        "residual_rel": lp_norm(recon - y, math.inf) / denom,
    }
    if args.report == "corona":
        rep = corona_ball_report(terms, B=args.B)
        obj["corona"] = {
            "rows": [
                {
                    "term": row.series,
                    "k": row.k,
                    "outside_mass": row.outside_mass,
                    "bound": row.hi,
                    "lo": row.lo,
                    "mass": row.mass,
                    "active": row.active,
                }
                for row in rep.rows
            ],
            "max_outside": rep.max_outside,
            "tdc_B": rep.tdc_B,
            "eventual_tdc_ok": rep.eventual_tdc_ok,
        }
    _emit_json(obj, args.out)
    return 0


def cmd_support_rule(args) -> int:
    u, spec = _resolve_io(args)
    frame = _frame_from_args(args)
    a = symbol_factory(args.symbol, frame)(spec)
    check = spectral_support_rule_check if args.kind == "spectral" else support_rule_check
    rep = check(a, u, tau=args.tau)
    _emit_json(
        {
            "grid": {"n": spec.n, "N": spec.N},
            "symbol": args.symbol,
            "kind": args.kind,
            "holds": rep.holds,
            "violation_mass": rep.violation_mass,
            "tau": rep.tau,
            "output_support": rep.output_support,
            "allowed_support": rep.allowed_support,
        },
        args.out,
    )
    return 0


def _pointwise_csv(args, header, rows, summary: dict) -> int:
    if args.out:
        write_csv(args.out, header, rows)
        _emit_json(summary, None)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(str(x) for x in row))
        print(json.dumps(_sanitize(summary)), file=sys.stderr)
    return 0


def _x_column(spec: GridSpec) -> np.ndarray:
    if spec.n == 1:
        return spec.axis_coords()
    return np.arange(spec.npoints, dtype=float)


def cmd_pointwise_factorize(args) -> int:
    u, spec = _resolve_io(args)
    frame = _frame_from_args(args)
    a = symbol_factory(args.symbol, frame)(spec)
    p = default_maximal_params(u, args.tau)
    rep = factorization_check(a, u, p=p, tau=args.tau)
    lhs = np.abs(apply_auto(a, u).values).ravel()
    rhs = (
        symbol_factor(a, p, None, spec).values.real * peetre_maximal(u, p).values.real
    ).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0.0, lhs / rhs, np.where(lhs > 0.0, np.inf, 0.0))
    xs = _x_column(spec)
    rows = [
        (repr(float(x)), repr(float(a_)), repr(float(b)), repr(float(r)))
        for x, a_, b, r in zip(xs, lhs, rhs, ratio)
    ]
    return _pointwise_csv(
        args,
        ("x", "lhs", "rhs", "ratio"),
        rows,
        {
            "max_ratio": rep.max_ratio,
            "holds": rep.holds,
            "N_exp": rep.params.N_exp,
            "R": rep.params.R_spec,
        },
    )


def cmd_pointwise_maximal(args) -> int:
    spec = _grid_from_args(args)
    corpus = [
        random_band_limited(spec, args.band * (spec.N // 2), np.random.default_rng([args.seed, t]))
        for t in range(args.trials)
    ]
    n_exp = args.N_exp if args.N_exp is not None else math.floor(spec.n / args.p) + 1
    rows = []
    for t, u in enumerate(corpus):
        rhs = lp_norm(u, args.p)
        ratio = maximal_ratio([u], args.p, n_exp)
        rows.append((t, repr(ratio * rhs), repr(rhs), repr(ratio)))
    c_p = maximal_lp_constant(corpus, args.p, n_exp)
    return _pointwise_csv(
        args,
        ("x", "lhs", "rhs", "ratio"),
        rows,
        {"C_p": c_p, "p": args.p, "N_exp": n_exp, "trials": args.trials},
    )


def cmd_pointwise_mihlin(args) -> int:
    spec = _grid_from_args(args)
    frame = _frame_from_args(args)
    a = symbol_factory(args.symbol, frame)(spec)
    R = args.R if args.R is not None else spec.N / 4.0
    p = MaximalParams(N_exp=args.N_exp, R_spec=R)
    c = args.c if args.c is not None else mihlin_ratio(a, p, None, spec)
    rep = mihlin_bound_check(a, p, c, spec=spec, slack=args.slack)
    lhs = symbol_factor(a, p, None, spec).values.real.ravel()
    rhs = (c * mihlin_rhs(a, p, None, spec)).ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(rhs > 0.0, lhs / rhs, np.where(lhs > 0.0, np.inf, 0.0))
    xs = _x_column(spec)
    rows = [
        (repr(float(x)), repr(float(a_)), repr(float(b)), repr(float(r)))
        for x, a_, b, r in zip(xs, lhs, rhs, ratio)
    ]
    return _pointwise_csv(
        args,
        ("x", "lhs", "rhs", "ratio"),
        rows,
        {"k": rep.k, "c_used": rep.c_used, "worst_ratio": rep.worst_ratio, "holds": rep.holds},
    )


def cmd_pointwise_moment_decay(args) -> int:
    spec = _grid_from_args(args)
    frame = _frame_from_args(args)
    a = symbol_factory(args.symbol, frame)(spec)
    R = args.R if args.R is not None else spec.N / 8.0
    p = MaximalParams(N_exp=args.N_exp, R_spec=R)
    q_grid = [float(q) for q in args.q_grid.split(",")]
    rep = moment_decay_check(a, p, q_grid, args.M, spec=spec)
    base_x, base_v = rep.fit.xs[0], rep.fit.values[0]
    rows = []
    for q, v in zip(rep.fit.xs, rep.fit.values):
        fitted = base_v * (q / base_x) ** rep.fit.slope if base_v > 0.0 else 0.0
        r = v / fitted if fitted > 0.0 else (math.inf if v > 0.0 else 0.0)
        rows.append((repr(float(q)), repr(float(v)), repr(float(fitted)), repr(float(r))))
    return _pointwise_csv(
        args,
        ("x", "lhs", "rhs", "ratio"),
        rows,
        {
            "M": rep.M,
            "slope": rep.fit.slope,
            "cliff": rep.fit.cliff,
            "step_drops": list(rep.step_drops),
            "holds": rep.holds,
        },
    )


def cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    report = dispatch_experiment(args.runner, cfg)
    out = Path(args.out)
    write_report_json(report, out, config=cfg.raw)
    csv_path = args.csv or cfg.out.get("csv") or out.with_suffix(".csv")
    dat_path = args.dat or cfg.out.get("dat") or out.with_suffix(".dat")
    write_report_csv(report, csv_path)
    write_report_dat(report, dat_path)
    written = [str(out), str(csv_path), str(dat_path)]
    svg_path = args.svg or cfg.out.get("svg")
    if svg_path:
        write_report_svg(report, svg_path)
        written.append(str(svg_path))
    for name, verdict in report.verdicts.items():
        print(f"verdict {name}: {verdict}")
    print("wrote " + " ".join(written))
    return 0


# ---------------------------------------------------------------------------
# selftest gates


def _gate(cond: bool, msg: str) -> None:
    if not cond:
        raise AssertionError(msg)


def _gate_paradiff_pair():
    from .symbols import TabulatedSymbol, random_elementary

    spec = GridSpec(1, 128)
    a = random_elementary(spec, DEFAULT_FRAME, J=5, seed=1)
    tab = TabulatedSymbol(spec, a.table(spec), d=0.0)
    u = random_band_limited(spec, 40, np.random.default_rng(2))
    terms = paradiff_split(tab, u)
    y = apply_auto(tab, u)
    recon = GridFunction(spec, terms.t1.values + terms.t2.values + terms.t3.values)
    return terms, y, recon


def gate_paradiff_identity():
    _, y, recon = _gate_paradiff_pair()
    rel = lp_norm(recon - y, math.inf) / max(lp_norm(y, math.inf), 1e-300)
    _gate(rel <= 1e-10, f"three-series identity residual {rel:.3e} > 1e-10")


def gate_corona_containment():
    terms, _, _ = _gate_paradiff_pair()
    rep = corona_ball_report(terms)
    _gate(
        rep.max_outside <= 1e-10,
        f"corona outside mass {rep.max_outside:.3e} > 1e-10",
    )


def gate_lacunary_amplification():
    rep = run_counterexample(N_list=(2, 3), spec=GridSpec(1, 2**11))
    _gate(rep.verdicts["identity"], "lattice identity a(x,D)v_N = c_N v failed")
    ratios = list(rep.series("ratio").values())
    _gate(ratios[1] > ratios[0], "amplification ratios did not increase")


def gate_wavefront_flip():
    rep = run_wavefront(J=5, spec=GridSpec(1, 256))
    _gate(rep.verdicts["flip_exact"], "flip identity failed")
    _gate(rep.verdicts["spectrum_flipped"], "output mass not on the flipped half-axis")


def gate_frequency_shift():
    spec = GridSpec(1, 256)
    a = parse_symbol_spec("ching:d=0,theta=+1,jmax=6", spec)
    y = apply_auto(a, single_mode(spec, 32))
    c = fft_forward(y).coeffs
    total = float(np.sum(np.abs(c) ** 2))
    _gate(total > 0.0, "shifted output vanished")
    at_zero = float(np.abs(c[spec.N // 2]) ** 2)
    _gate(
        at_zero >= (1.0 - 1e-12) * total,
        "output spectrum is not the single frequency 0",
    )


def gate_factorization():
    from .symbols import random_elementary

    spec = GridSpec(1, 128)
    for seed in (0, 1, 2):
        a = random_elementary(spec, DEFAULT_FRAME, J=4, seed=seed)
        u = random_band_limited(spec, 16, np.random.default_rng(seed + 10))
        rep = factorization_check(a, u)
        _gate(
            rep.holds,
            f"pointwise factorization ratio {rep.max_ratio:.6f} > 1 (seed {seed})",
        )


def gate_strict_tdc():
    from .symbols import check_twisted_diagonal, localize_symbol, mask_twisted_diagonal

    spec = GridSpec(1, 128)
    a = ching_symbol(0.0, theta=2, j_max=5, spec=spec)
    mass = check_twisted_diagonal(a, a.tdc_B, spec=spec).violation_mass
    _gate(mass == 0.0, f"twisted-diagonal violation mass {mass:.3e} != 0")
    masked = mask_twisted_diagonal(a, a.tdc_B, spec=spec)
    loc = localize_symbol(masked, 0.25, spec)
    peak = float(np.abs(loc.table(spec)).max())
    _gate(peak == 0.0, f"localized strict-tdc symbol peaks at {peak:.3e}, not 0")


def gate_scales_agree():
    from .spaces import SpaceParams, space_norm

    spec = GridSpec(1, 64)
    u = random_band_limited(spec, 20, np.random.default_rng(3))
    b = space_norm(u, SpaceParams(0.5, 2.0, 2.0, "B"))
    f = space_norm(u, SpaceParams(0.5, 2.0, 2.0, "F"))
    _gate(abs(b - f) <= 1e-12 * f, f"B and F norms differ at p=q: {b!r} vs {f!r}")


def gate_summation_lemma():
    from .spaces import summation_lemma_check

    c = summation_lemma_check(s=-0.5, q=2.0, count=100, length=32, seed=0)
    _gate(math.isfinite(c) and c > 0.0, f"summation lemma fit returned {c!r}")


def gate_support_rule():
    from .symbols import random_elementary

    spec = GridSpec(1, 128)
    a = random_elementary(spec, DEFAULT_FRAME, J=4, seed=5)
    u = random_band_limited(spec, 16, np.random.default_rng(6))
    rep = spectral_support_rule_check(a, u)
    _gate(rep.holds, f"spectral support rule violated, mass {rep.violation_mass:.3e}")


def gate_maximal_stability():
    vals = []
    for N in (64, 128):
        spec = GridSpec(1, N)
        corpus = [
            random_band_limited(spec, 0.25 * (N // 2), np.random.default_rng([7, t]))
            for t in range(6)
        ]
        vals.append(maximal_lp_constant(corpus, 2.0, 2.0))
    lo, hi = sorted(vals)
    _gate(hi <= 1.5 * lo, f"maximal constant drifted {vals[0]:.4f} -> {vals[1]:.4f}")


def gate_sigma_order():
    from .symbols import RadialBump

    spec = GridSpec(1, 512)
    a = ching_symbol(
        0.0, theta=1, A=RadialBump(zero_order=1, zero_width=0.25), j_max=7, spec=spec
    )
    rep = run_sigma_estimate(a, spec, r_expected=1.0)
    _gate(rep.verdicts["sigma_matches"], "sigma_hat missed the planted zero order")
    _gate(rep.verdicts["onset_matches"], "boundedness onset missed -r")


def gate_continuity_identity():
    from .symbols import ConstantSymbol

    rep = run_continuity_table(
        ConstantSymbol(1.0), cases=[("L:p=2", "L:p=2")], grids=(64, 128), trials=3
    )
    _gate(
        rep.verdicts["L:p=2 -> L:p=2"] == "bounded-consistent",
        "identity operator not flagged bounded",
    )
    _gate(rep.verdicts["L:p=2 -> L:p=2 [control]"] == "clean", "control not clean")


def gate_vfm_independence():
    from .symbols import random_elementary

    spec = GridSpec(1, 128)
    a = random_elementary(spec, DEFAULT_FRAME, J=4, seed=7)
    u = random_band_limited(spec, 16, np.random.default_rng(8))
    trace = vfm_limit(a, u)
    _gate(
        trace.cross_dev <= 1e-12,
        f"saturated modulation outputs differ across profiles by {trace.cross_dev:.3e}",
    )


QUICK_GATES = [
    ("paradifferential three-series identity", gate_paradiff_identity),
    ("corona containment", gate_corona_containment),
    ("lacunary amplification identity", gate_lacunary_amplification),
    ("wavefront flip", gate_wavefront_flip),
    ("frequency-shift bookkeeping", gate_frequency_shift),
    ("pointwise factorization", gate_factorization),
    ("strict twisted-diagonal localization", gate_strict_tdc),
    ("B equals F at p=q", gate_scales_agree),
    ("dyadic summation lemma", gate_summation_lemma),
    ("spectral support rule", gate_support_rule),
]

FULL_GATES = QUICK_GATES + [
    ("maximal constant stability", gate_maximal_stability),
    ("sigma order recovery", gate_sigma_order),
    ("continuity identity table", gate_continuity_identity),
    ("vfm profile independence", gate_vfm_independence),
]


def cmd_selftest(args) -> int:
    gates = QUICK_GATES if args.quick else FULL_GATES
    for name, fn in gates:
        t0 = time.perf_counter()
        try:
            fn()
        except (AssertionError, ValueError) as exc:
            print(f"FAIL {name}: {exc}")
            return 1
        print(f"ok {name} ({time.perf_counter() - t0:.2f}s)")
    print(f"selftest: {len(gates)} gates passed")
    return 0


# ---------------------------------------------------------------------------
# parser assembly


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pdlab",
        description="Type 1,1 pseudo-differential operators on the discrete torus",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("apply", help="apply a symbol to an input function")
    _add_io_flags(p)
    p.add_argument("--out", help="write the output as .pdgf")
    p.add_argument("--spectrum-csv", help="write the full output spectrum as CSV")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("norms", help="evaluate a norm on inputs")
    p.add_argument("--space", required=True, help="L:p=.., H:s=.., B:s=..,p=..,q=.., F:..")
    p.add_argument("--input", help="input .pdgf file")
    p.add_argument("--mode", help="input generator string")
    p.add_argument("--corpus", help="JSON list of generator strings")
    p.add_argument("--grid", type=int, default=_GRID_DEFAULT)
    p.add_argument("--n", type=int, choices=(1, 2), default=1)
    p.add_argument("--frame", help="frame options r=..,R=..,h=..")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", action="store_true", help="print JSON instead of a bare float")
    p.add_argument("--out", help="write corpus norms as CSV")
    p.set_defaults(func=cmd_norms)

    p = sub.add_parser("vfm", help="vanishing frequency modulation trace")
    _add_io_flags(p)
    p.add_argument("--psi-count", type=int, default=2, help="number of modulation profiles")
    p.add_argument("--m-max", type=int, default=None, help="cap the modulation sweep")
    p.add_argument("--refine", type=int, default=0, help="compare this many doubling grids")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_vfm)

    p = sub.add_parser("paradiff", help="three-series paradifferential split")
    _add_io_flags(p)
    p.add_argument(
        "--report", choices=("identity", "corona"), default="identity",
        help="identity residual only, or add the corona containment table",
    )
    p.add_argument("--B", type=float, default=None, help="twisted-diagonal constant")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_paradiff)

    p = sub.add_parser("support-rule", help="kernel or spectral support containment")
    _add_io_flags(p)
    p.add_argument("--tau", type=float, default=1e-8, help="relative support threshold")
    p.add_argument("--kind", choices=("spatial", "spectral"), default="spatial")
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=cmd_support_rule)

    p = sub.add_parser("pointwise", help="pointwise factorization estimates")
    psub = p.add_subparsers(dest="pointwise_command", required=True)

    q = psub.add_parser("factorize", help="|a(x,D)u| <= F_a u* per grid point")
    _add_io_flags(q)
    q.add_argument("--tau", type=float, default=1e-10)
    q.add_argument("--out", help="write the CSV here (summary JSON to stdout)")
    q.set_defaults(func=cmd_pointwise_factorize)

    q = psub.add_parser("maximal-constant", help="fitted constant in ||u*||_p <= C||u||_p")
    q.add_argument("--p", type=float, required=True)
    q.add_argument("--N-exp", type=float, default=None, help="Peetre exponent (default n/p+1)")
    q.add_argument("--trials", type=int, default=8)
    q.add_argument("--band", type=float, default=0.4)
    q.add_argument("--grid", type=int, default=_GRID_DEFAULT)
    q.add_argument("--n", type=int, choices=(1, 2), default=1)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", help="write the CSV here (summary JSON to stdout)")
    q.set_defaults(func=cmd_pointwise_maximal)

    q = psub.add_parser("mihlin", help="F_a against the derivative-sum bound")
    _add_symbol_flags(q)
    q.add_argument("--N-exp", type=float, default=2.0)
    q.add_argument("--R", type=float, default=None, help="spectral radius (default N/4)")
    q.add_argument("--c", type=float, default=None, help="constant (default: fitted)")
    q.add_argument("--slack", type=float, default=0.01)
    q.add_argument("--out", help="write the CSV here (summary JSON to stdout)")
    q.set_defaults(func=cmd_pointwise_mihlin)

    q = psub.add_parser("moment-decay", help="decay of F over x-high-passed symbols")
    _add_symbol_flags(q)
    q.add_argument("--M", type=int, default=2)
    q.add_argument("--q-grid", default="2,4,8,16", help="comma-separated dyadic Q values")
    q.add_argument("--N-exp", type=float, default=2.0)
    q.add_argument("--R", type=float, default=None, help="spectral radius (default N/8)")
    q.add_argument("--out", help="write the CSV here (summary JSON to stdout)")
    q.set_defaults(func=cmd_pointwise_moment_decay)

    p = sub.add_parser("experiment", help="run a packaged experiment from a JSON config")
    p.add_argument(
        "runner", choices=("counterexample", "wavefront", "continuity", "sigma")
    )
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--out", required=True, help="JSON report path")
    p.add_argument("--csv", help="flat CSV path (default: report stem .csv)")
    p.add_argument("--dat", help="gnuplot .dat path (default: report stem .dat)")
    p.add_argument("--svg", help="SVG chart path (off unless given)")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("selftest", help="run the exact-identity gate suite")
    p.add_argument("--quick", action="store_true", help="core gates only")
    p.set_defaults(func=cmd_selftest)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        missing = exc.filename if exc.filename else str(exc)
        print(f"error: input file not found: {missing}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
