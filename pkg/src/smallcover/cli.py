"""Command-line entry point: ``smallcover <command> --config run.json``.

Exit codes: 0 success, 1 violation found, 2 configuration or precondition
error, 3 enumeration budget exceeded. Errors go to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

from . import __version__
from .cover import cover_weight_delta, cover_weight_weak, verify_cover
from .errors import BudgetExceeded, ConfigError, EmptyFamilyError, PreconditionError
from .model import (DiscreteLaw, IndexSet, Instance, ValueMap, expected_supremum_exact,
                    expected_supremum_mc, jensen_bound, threshold_family)
from .rational import as_fraction
from .serialize import (COMMANDS, config_hash, dumps_report, instance_from_dict, jsonable,
                        normalize_config)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3


def _instance(cfg: dict) -> Instance:
    if "instance" not in cfg:
        raise ConfigError("this command needs an 'instance' block", "instance")
    return instance_from_dict(cfg["instance"])


def _codes(cfg: dict, name: str):
    if name not in cfg:
        raise ConfigError(f"missing field {name!r}", name)
    return cfg[name]


def _default_y(inst: Instance, cfg: dict):
    if "y" in cfg:
        return cfg["y"]
    return [[1] * inst.d for _ in range(inst.K)]


# -- commands ------------------------------------------------------------------------------

def cmd_estimate(cfg: dict, opts) -> tuple[dict, int]:
    inst = _instance(cfg)
    out = {"jensen_lower_bound": jensen_bound(inst)}
    if cfg["mode"] == "exact":
        out["S_T"] = expected_supremum_exact(inst, cfg["budget"])
    else:
        est, se = expected_supremum_mc(inst, cfg["samples"], cfg["seed"], workers=opts.workers)
        out.update(estimate=est, stderr=se, samples=cfg["samples"])
    return out, EXIT_OK


def cmd_family(cfg: dict, opts) -> tuple[dict, int]:
    inst = _instance(cfg)
    F = threshold_family(inst, cfg["budget"])
    return {"L": inst.threshold, "size": len(F), "family": [list(x) for x in F]}, EXIT_OK


def cmd_witness(cfg: dict, opts) -> tuple[dict, int]:
    from .witness import witness_trace

    inst = _instance(cfg)
    return witness_trace(_codes(cfg, "x"), _codes(cfg, "y"), inst), EXIT_OK


def cmd_cover(cfg: dict, opts) -> tuple[dict, int]:
    from .witness import build_cover_for_y

    inst = _instance(cfg)
    F = threshold_family(inst, cfg["budget"])
    y = _default_y(inst, cfg)
    G = build_cover_for_y(y, inst, F)
    rep = verify_cover(F, G)
    w = cover_weight_delta(G, inst.law)
    out = {
        "y": y,
        "entries": G.as_list(),
        "delta_weight": w,
        "weak_weight": cover_weight_weak(G, inst.law),
        "covered": rep.covered,
        "first_uncovered": rep.first_uncovered,
        "delta_small": w <= inst.delta,
    }
    return out, (EXIT_OK if rep.covered else EXIT_VIOLATION)


def cmd_classes(cfg: dict, opts) -> tuple[dict, int]:
    from .witness import class_partition

    inst = _instance(cfg)
    cp = class_partition(inst, budget=cfg["budget"])
    rows = cp.rows()
    if opts.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["j", "t", "Z", "members"])
        for r in rows:
            writer.writerow([r["j"], r["t"], json.dumps(r["Z"]), json.dumps(r["members"])])
        with open(opts.csv, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    out = {"classes": rows, "reconstruction_ok": cp.reconstruction_ok,
           "records": len(cp.records)}
    return out, (EXIT_OK if cp.reconstruction_ok else EXIT_VIOLATION)


def cmd_reduce(cfg: dict, opts) -> tuple[dict, int]:
    from .reduction import constants, law_from_spec, reduce_pipeline

    if "continuous" not in cfg:
        raise ConfigError("reduce needs a 'continuous' law block", "continuous")
    law = law_from_spec(cfg["continuous"])
    if "T" not in cfg:
        raise ConfigError("reduce needs an index set 'T'", "T")
    T = IndexSet(tuple(tuple(t) for t in cfg["T"]))
    variant = cfg.get("variant", "tail")
    C = cfg.get("C")
    if variant == "tail" and C is None:
        raise ConfigError("the tail-condition pipeline needs C", "C")
    out = reduce_pipeline(law, T, C=C, Kprime=cfg.get("Kprime"), K=cfg.get("K", 1),
                          variant=variant, budget=cfg["budget"])
    if C is not None:
        out["constants"] = constants(C, Fraction(1, 2))
    ok = out["total_weight"] <= out["discrete_weight"] + Fraction(1, 4)
    return out, (EXIT_OK if ok else EXIT_VIOLATION)


def cmd_verify(cfg: dict, opts) -> tuple[dict, int]:
    from . import verify

    if "random" in cfg:
        spec = cfg["random"]
        instances = verify.random_batch(int(spec.get("count", 200)), int(spec.get("seed", 0)))
    else:
        instances = [_instance(cfg)]
    checks = cfg.get("checks")
    names = [c for c in (checks or verify.CHECKS) if c != "bad_probability"]
    reports = verify.run_suite(instances, names, workers=opts.workers,
                               fail_fast=opts.fail_fast, budget=cfg["budget"])
    if checks is None or "bad_probability" in checks:
        # exact when the profiles fit the budget, unless mc is requested
        mode = "mc" if cfg["mode"] == "mc" else "auto"
        merged = verify.CheckReport("bad_probability")
        for inst in instances:
            rep = verify.check_bad_probability(inst, mode=mode, samples=cfg["samples"],
                                               seed=cfg.get("seed", 0), C=cfg.get("C"),
                                               workers=opts.workers, budget=cfg["budget"])
            merged = rep if len(instances) == 1 else merged.merge(rep)
            if opts.fail_fast and rep.violations:
                break
        reports["bad_probability"] = merged
    out = {name: rep.as_dict() for name, rep in reports.items()}
    failed = any(rep.violations for rep in reports.values())
    return {"instances": len(instances), "reports": out}, (EXIT_VIOLATION if failed else EXIT_OK)


def selector_report(T: IndexSet, p, K_prime=None, L=None, K: int = 1, y=None, seed=None,
                    budget: int = 10**7, delta=Fraction(1, 2)) -> dict:
    """Witness covers for the Bernoulli encoding ``n=2, f=(0,1), P(X=2)=p``.

    Returns the subsets W of the chosen G(y) and their weight ``sum p^|W|``.
    Without ``y``, the lowest-weight G(y) over all bad y is used. ``seed``
    is recorded for reproducibility; the search itself is exhaustive.
    """
    from .witness import engine_for

    p = as_fraction(p, "p")
    if not 0 < p < 1:
        raise ConfigError("p must lie in (0, 1)", "p")
    law = DiscreteLaw((1 - p, p))
    f = ValueMap((0, 1))
    if (L is None) == (K_prime is None):
        raise ConfigError("give exactly one of L and Kprime", "L")
    inst = Instance(law, f, T, K, delta, L=L, Kprime=K_prime)
    eng = engine_for(inst, None, budget)
    if not eng.F:
        return {"L": inst.threshold, "family_size": 0, "subsets": [], "weight": Fraction(0),
                "covered": True, "seed": seed, "delta": inst.delta, "small": True}
    if y is not None:
        from .model import check_replica, column_tops, column_totals

        y = check_replica(y, inst)
        if not eng.is_bad_totals(column_totals(y, inst)):
            raise PreconditionError("G(y) is only defined for bad y")
        tops = column_tops(y)
    else:
        tops = tuple([1] * inst.d)
        best = cover_weight_delta(eng.cover(tops), law)
        for prof in eng.bad_profiles():
            w = cover_weight_delta(eng.cover(prof.tops), law)
            if w < best:
                best, tops = w, prof.tops
    G = eng.cover(tops)
    subsets = sorted((sorted(e.W) for e in G), key=lambda w: (len(w), w))
    weight = sum((p ** len(e.W) for e in G), Fraction(0))
    assert weight == cover_weight_delta(G, law)
    return {
        "L": inst.threshold,
        "family_size": len(eng.F),
        "tops": list(tops),
        "subsets": subsets,
        "weight": weight,
        "weight_decimal": float(weight),
        "covered": verify_cover(eng.F, G).covered,
        "delta": inst.delta,
        "small": weight <= inst.delta,
        "seed": seed,
    }


def cmd_selector(cfg: dict, opts) -> tuple[dict, int]:
    spec = cfg.get("selector")
    if not isinstance(spec, dict):
        raise ConfigError("selector needs a 'selector' block", "selector")
    if "T" not in spec or "p" not in spec:
        raise ConfigError("selector block needs T and p", "selector.T")
    T = IndexSet(tuple(tuple(t) for t in spec["T"]))
    K = spec.get("K", 1)
    out = selector_report(T, spec["p"], K_prime=spec.get("Kprime"), L=spec.get("L"), K=K,
                          y=spec.get("y"), seed=cfg.get("seed"), budget=cfg["budget"])
    return out, (EXIT_OK if out["covered"] else EXIT_VIOLATION)


HANDLERS = {
    "estimate": cmd_estimate,
    "family": cmd_family,
    "witness": cmd_witness,
    "cover": cmd_cover,
    "classes": cmd_classes,
    "reduce": cmd_reduce,
    "verify": cmd_verify,
    "selector": cmd_selector,
}


# -- plumbing ------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="smallcover",
                                 description="Small covers for suprema of canonical processes.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--samples", type=int)
    ap.add_argument("--mode", choices=("exact", "mc"))
    ap.add_argument("--budget", type=int)
    ap.add_argument("--out", help="write the report here instead of stdout")
    ap.add_argument("--csv", help="classes: also write the class table as CSV")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--fail-fast", action="store_true")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return ap


def load_config(opts) -> dict:
    raw: dict = {}
    if opts.config:
        try:
            with open(opts.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}", "config") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON at line {exc.lineno}: {exc.msg}", "config") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "config")
    raw = dict(raw)
    for name in ("seed", "samples", "mode", "budget"):
        value = getattr(opts, name)
        if value is not None:
            raw[name] = value
    raw["command"] = opts.command
    return normalize_config(raw)


def _diagnostic(kind: str, exc: Exception, **extra) -> str:
    body = {"error": kind, "message": str(exc), **extra}
    return json.dumps(jsonable(body), sort_keys=True)


def run(argv=None) -> int:
    opts = build_parser().parse_args(argv)
    try:
        cfg = load_config(opts)
        result, code = HANDLERS[opts.command](cfg, opts)
    except BudgetExceeded as exc:
        print(_diagnostic("budget", exc, states=exc.states, budget=exc.budget), file=sys.stderr)
        return EXIT_BUDGET
    except ConfigError as exc:
        print(_diagnostic("config", exc, field=exc.field), file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, EmptyFamilyError) as exc:
        print(_diagnostic("precondition", exc), file=sys.stderr)
        return EXIT_CONFIG
    report = {
        "command": opts.command,
        "config_hash": config_hash(cfg),
        "seed": cfg.get("seed"),
        "version": __version__,
        "status": "ok" if code == EXIT_OK else "violation",
        "result": result,
    }
    text = dumps_report(report)
    if opts.out:
        with open(opts.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
