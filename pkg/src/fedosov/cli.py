"""Command line entry point: scenarios, configs and JSON reports.

Subcommands ``check`` (the scenario named in the config), ``star``
(``flat-closed-form`` plus a seeded star product table), ``trace``
(``trace-theorem``), ``action`` and ``report`` (all four scenarios).

Exit codes: 0 all checks passed, 1 an invariant failed, 2 bad config.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import checks
from .checks import CheckResult, fmt_value
from .coefficients import Gauss
from .geometry import ChartGeometry
from .gravity import KINDS
from .trace import HomotopyPath

log = logging.getLogger("fedosov")

SCENARIOS = ("core-identities", "flat-closed-form", "trace-theorem", "action")
CONTROLS = ("none", "bundle-sign", "form-involution")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    dim: int = 2
    bandwidth: int = 1  # K, torus bandwidth of random data
    order: int = 6  # N, Weyl truncation (total degree, deg h = 2)
    eps_order: int = 2  # E
    rank: int = 2
    backend: str = "exact"
    tol: float = 1e-9  # float backend only
    float_grid_bandwidth: int = 6
    seed: int = 0
    scenario: str = "core-identities"
    kinds: list = field(default_factory=lambda: list(KINDS))
    out: str | None = None
    negative_control: str = "none"
    curved_background: bool = True
    pairs: int = 50  # Moyal involution pairs
    triples: int = 25
    pool: int = 5  # flattening pool size; ordered pairs = pool (pool - 1)
    timings: bool = False

    def validate(self):
        if self.dim < 2 or self.dim % 2:
            raise ConfigError(f"dim must be a positive even number, got {self.dim}")
        if self.order < 2:
            raise ConfigError(f"Weyl truncation N must be >= 2, got {self.order}")
        if self.eps_order < 0 or self.bandwidth < 0:
            raise ConfigError("eps_order and bandwidth must be >= 0")
        if self.rank < 1:
            raise ConfigError("rank must be >= 1")
        if self.backend not in ("exact", "float"):
            raise ConfigError(f"backend must be 'exact' or 'float', got {self.backend!r}")
        if self.backend == "float" and not self.tol > 0:
            raise ConfigError("float backend needs tol > 0")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        bad = [k for k in self.kinds if k not in KINDS]
        if bad:
            raise ConfigError(f"unknown action kind(s) {bad}")
        if self.negative_control not in CONTROLS:
            raise ConfigError(f"negative_control must be one of {CONTROLS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.pool < 2:
            raise ConfigError("pool needs at least two sections")
        return self

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        for f in dataclasses.fields(cls):
            v = getattr(cfg, f.name)
            if f.type in ("int", "float") and isinstance(v, bool):
                raise ConfigError(f"{f.name} must be a number")
            if f.type == "int" and not isinstance(v, int):
                raise ConfigError(f"{f.name} must be an integer, got {v!r}")
        return cfg

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = tomllib.loads(text) if p.suffix == ".toml" else json.loads(text)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a table/object")
        return cls.from_mapping(data)


def threads() -> int:
    raw = os.environ.get("FEDOSOV_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"FEDOSOV_THREADS must be an integer, got {raw!r}")
    if n < 0:
        raise ConfigError("FEDOSOV_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# JSON encoding
# ---------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, (Gauss, complex)):
        return fmt_value(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, dict):
        return {(k if isinstance(k, str) else _key(k)): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if hasattr(x, "terms") and hasattr(x, "ring"):
        return {_mode_key(*k): fmt_value(v) for k, v in sorted(x.terms().items())}
    return x


def _key(k) -> str:
    if isinstance(k, tuple) and len(k) == 2 and all(isinstance(v, int) for v in k):
        return f"h^{k[0]} eps^{k[1]}"
    if isinstance(k, tuple):
        return ",".join(str(v) for v in k)
    return str(k)


def _mode_key(k, tp=0, ep=0) -> str:
    s = "e^i(" + ",".join(str(x) for x in k) + ")"
    if tp:
        s += f" t^{tp}"
    if ep:
        s += f" eps^{ep}"
    return s


def coefficient_table(table: dict) -> dict:
    """``{"h^p eps^m": {"re": .., "im": ..}}`` from a ``(p, m) -> value`` map."""
    out = {}
    for (p, m), v in sorted(table.items()):
        if isinstance(v, Gauss):
            out[f"h^{p} eps^{m}"] = {"re": str(v.re), "im": str(v.im)}
        else:
            z = complex(v)
            out[f"h^{p} eps^{m}"] = {"re": repr(z.real), "im": repr(z.imag)}
    return out


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


def _ring(cfg: RunConfig, eps: bool = False):
    return checks.make_ring(cfg.dim, cfg.backend, eps_order=cfg.eps_order if eps else None,
                            bandwidth=cfg.float_grid_bandwidth, tol=cfg.tol)


def _rng(cfg: RunConfig, salt: str) -> random.Random:
    return random.Random(f"{cfg.seed}:{salt}")


def scenario_core(cfg: RunConfig) -> tuple[list[CheckResult], dict]:
    ring = _ring(cfg)
    sign = -1 if cfg.negative_control == "bundle-sign" else 1
    flip = cfg.negative_control == "form-involution"
    ctx = checks.curved_context(ring, cfg.rank, cfg.order, _rng(cfg, "data"), K=cfg.bandwidth, bundle_sign=sign)
    rng = _rng(cfg, "checks")
    res = [checks.moyal_involution(ctx.space, ctx.bundle.gram, rng, n_pairs=cfg.pairs, flip_forms=flip)]
    res += checks.core_identities(ctx, rng, n_triples=cfg.triples, flip_forms=flip)
    return res, {}


def scenario_flat(cfg: RunConfig) -> tuple[list[CheckResult], dict]:
    ring = _ring(cfg)
    geo = ChartGeometry(cfg.dim // 2)
    res = [checks.flat_closed_form(ring, geo, h_max=cfg.order // 2)]
    ctx = checks.curved_context(ring, 1, max(cfg.order, 4), _rng(cfg, "bracket"), K=cfg.bandwidth)
    br = checks.first_order_bracket(ctx, _rng(cfg, "pairs"))
    res.append(br)
    return res, {"bracket_sign": br.detail.get("s")}


def scenario_trace(cfg: RunConfig) -> tuple[list[CheckResult], dict]:
    ring = _ring(cfg)
    sign = -1 if cfg.negative_control == "bundle-sign" else 1
    ctx = checks.curved_context(ring, cfg.rank, cfg.order + 1, _rng(cfg, "data"), K=cfg.bandwidth,
                                target=cfg.order, bundle_sign=sign)
    path = HomotopyPath(ctx, target=cfg.order)
    pool = checks.FlatteningPool(ctx, path, _rng(cfg, "pool"), size=cfg.pool)
    res = checks.flattening_checks(pool) + checks.trace_checks(pool)
    tabs = checks.trace_tables(pool)
    extra = {"element": tabs["element"],
             "tr(A+)": coefficient_table(tabs["tr(A+)"]),
             "conj tr(A)": coefficient_table(tabs["conj tr(A)"])}
    return res, extra


def _one_action(cfg: RunConfig, kind: str):
    ring = _ring(cfg, eps=True)
    geo = ChartGeometry(cfg.dim // 2)
    res, rep = checks.action_checks(kind, ring, geo, cfg.order, _rng(cfg, kind), K=cfg.bandwidth,
                                    curved_background=cfg.curved_background, float_tol=cfg.tol)
    summary = {"table": coefficient_table({(r["h"], r["eps"]): _row_value(r) for r in rep["rows"]}),
               "h0_quantum": {str(m): fmt_value(v) for m, v in sorted(rep["h0"].items())},
               "h0_classical": {str(m): fmt_value(v) for m, v in sorted((rep["oracle"] or {}).items())}}
    return res, summary


def _row_value(r):
    if isinstance(r["re"], Fraction):
        return Gauss(r["re"], r["im"])
    return complex(r["re"], r["im"])


def scenario_action(cfg: RunConfig) -> tuple[list[CheckResult], dict]:
    kinds = list(cfg.kinds)
    n = min(threads(), len(kinds))
    if n > 1:
        with ProcessPoolExecutor(max_workers=n) as ex:
            outs = list(ex.map(_one_action, [cfg] * len(kinds), kinds))
    else:
        outs = [_one_action(cfg, k) for k in kinds]
    res, extra = [], {}
    for kind, (r, summary) in zip(kinds, outs):
        res += r
        extra[kind] = summary
    return res, extra


RUNNERS = {
    "core-identities": scenario_core,
    "flat-closed-form": scenario_flat,
    "trace-theorem": scenario_trace,
    "action": scenario_action,
}


def run_scenario(cfg: RunConfig, scenario: str | None = None) -> dict:
    name = scenario or cfg.scenario
    t0 = time.perf_counter()
    results, extra = RUNNERS[name](cfg)
    block = {
        "scenario": name,
        "passed": all(r.passed for r in results),
        "checks": [_check_json(r, cfg.timings) for r in results],
    }
    if extra:
        block["tables"] = _jsonable(extra)
    if cfg.timings:
        block["seconds"] = round(time.perf_counter() - t0, 3)
    for r in results:
        log.info(r.line())
    return block


def _check_json(r: CheckResult, timings: bool) -> dict:
    d = {"name": r.name, "status": "pass" if r.passed else "fail", "count": r.count}
    if r.witness is not None:
        d["witness"] = _jsonable(r.witness)
    if timings:
        d["seconds"] = round(r.seconds, 3)
    return d


def star_table(cfg: RunConfig) -> dict:
    """Seeded ``A * B`` on the curved chart, as ``{h power: {entry: {mode: value}}}``."""
    ring = _ring(cfg)
    rng = _rng(cfg, "star")
    ctx = checks.curved_context(ring, cfg.rank, cfg.order, rng, K=cfg.bandwidth)
    sp = ctx.space
    from .data import random_section

    A, B = random_section(sp, rng), random_section(sp, rng)
    out = {}
    for p, v in sorted(ctx.star(A, B).h_coeffs().items()):
        out[f"h^{p}"] = {f"{i},{j}": _jsonable(v.entry(i, j)) for i in range(sp.rank) for j in range(sp.rank)}
    return out


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or TOML file with RunConfig fields")
    common.add_argument("--seed", type=int)
    common.add_argument("--backend", choices=["exact", "float"])
    common.add_argument("--out", help="write the JSON report here (default: stdout)")
    common.add_argument("--order-h", type=int, dest="order", help="Weyl truncation N (total degree)")
    common.add_argument("--order-eps", type=int, dest="eps_order", help="eps truncation E")
    common.add_argument("--kinds", help="comma separated action kinds")
    common.add_argument("--negative-control", choices=CONTROLS)
    common.add_argument("--timings", action="store_true", default=None, help="include wall times in the report")
    common.add_argument("-v", "--verbose", action="store_true")
    p = argparse.ArgumentParser(prog="fedosov", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("check", parents=[common], help="run the scenario named in the config")
    sub.add_parser("star", parents=[common], help="flat closed form, bracket sign and a seeded star product")
    sub.add_parser("trace", parents=[common], help="flattening map and trace identities")
    sub.add_parser("action", parents=[common], help="gravity actions: reality and classical limit")
    sub.add_parser("report", parents=[common], help="all scenarios in one report")
    return p


def resolve_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    for name in ("seed", "backend", "out", "order", "eps_order", "negative_control", "timings"):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, name, v)
    if args.kinds:
        cfg.kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    return cfg.validate()


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        threads()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    scenarios = {
        "check": [cfg.scenario],
        "star": ["flat-closed-form"],
        "trace": ["trace-theorem"],
        "action": ["action"],
        "report": list(SCENARIOS),
    }[args.command]
    # the output path is not part of the run, so identical runs give identical bytes
    echo = {k: v for k, v in dataclasses.asdict(cfg).items() if k != "out"}
    report = {"config": echo, "scenarios": []}
    try:
        for name in scenarios:
            report["scenarios"].append(run_scenario(cfg, name))
        if args.command == "star":
            report["star_product"] = star_table(cfg)
    except (ValueError, ZeroDivisionError) as exc:
        # inadmissible data for this configuration (e.g. a non-constant Gram form)
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report["passed"] = all(s["passed"] for s in report["scenarios"])
    text = json.dumps(report, indent=2, sort_keys=False) + "\n"
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    for s in report["scenarios"]:
        for c in s["checks"]:
            if c["status"] == "fail":
                print(f"FAIL {s['scenario']}/{c['name']}: {json.dumps(c.get('witness'))}", file=sys.stderr)
    return 0 if report["passed"] else 1


if __name__ == "__main__":
    sys.exit(main())
