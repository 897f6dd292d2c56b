"""Command-line front end: ``polyheyt <subcommand> ...``.

Every subcommand writes JSON to standard output.  Exit codes: 0 success,
1 negative verdict, 2 search depth exhausted, 3 usage or validation error.
Defaults for the shared flags may come from a JSON or TOML file named by
the ``POLYHEYT_CONFIG`` environment variable; explicit flags win.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .errors import PolyheytError, PreconditionError
from .parse import parse_formula, parse_sequent, print_formula
from .prover import DEFAULT_DEPTH, EXHAUSTED, PROVED, derives
from .syntax import DEFAULT_N_DIM, Atom, Signature, all_indices

EXIT_OK, EXIT_NEGATIVE, EXIT_EXHAUSTED, EXIT_USAGE = 0, 1, 2, 3

DEFAULTS = {"depth": DEFAULT_DEPTH, "budget": 50, "bound": 7, "seed": 0, "jobs": 1, "pretty": False,
            "signature": None, "frame": None}


class UsageError(PolyheytError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_config() -> dict:
    path = os.environ.get("POLYHEYT_CONFIG")
    if not path:
        return {}
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read POLYHEYT_CONFIG file: {exc}") from None
    try:
        if p.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                try:
                    import tomli as tomllib
                except ModuleNotFoundError:
                    raise UsageError("TOML configuration needs Python 3.11 or the tomli package") from None
            data = tomllib.loads(text)
        else:
            data = json.loads(text)
    except ValueError as exc:
        raise UsageError(f"bad POLYHEYT_CONFIG file: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError("POLYHEYT_CONFIG must hold an object")
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown keys in POLYHEYT_CONFIG: {unknown}")
    return data


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from None


def _signature(arg) -> Signature | None:
    """``--signature`` holds inline JSON or the path of a JSON file."""
    if arg is None:
        return None
    if isinstance(arg, dict):
        return Signature.from_json(arg)
    text = arg.strip()
    data = json.loads(text) if text.startswith("{") else _read_json(text)
    return Signature.from_json(data)


def _atom_nodes(f, out):
    if isinstance(f, Atom):
        out.add(f)
    for child in (getattr(f, "left", None), getattr(f, "right", None), getattr(f, "body", None)):
        if child is not None:
            _atom_nodes(child, out)
    return out


def infer_signature(formulas) -> Signature:
    """The smallest signature covering the atoms and indices in ``formulas``."""
    atoms = {}
    for f in formulas:
        for a in _atom_nodes(f, set()):
            if atoms.setdefault(a.name, a.support) != a.support:
                raise UsageError(f"atom {a.name} is used with two supports")
    top = max((i for f in formulas for i in all_indices(f)), default=-1) + 1
    n_dim = max(DEFAULT_N_DIM, 1 + max((i for s in atoms.values() for i in s), default=-1))
    sig = Signature.make(atoms, n_dim=n_dim)
    if top > sig.limit:
        sig = Signature.make(atoms, n_dim=n_dim, n_spare=top - n_dim)
    return sig


def _frame_system(data):
    """A Kripke system and optional valuation from frame JSON.

    Accepts ``{worlds, order, domains, dim, valuation?}`` or the
    ``{system, valuation}`` shape written by the canonical construction.
    """
    from .kripke import KripkeSystem
    from .errors import ValidationError
    if not isinstance(data, dict):
        raise ValidationError("frame must be a JSON object")
    if "system" in data:
        return KripkeSystem.from_json(data["system"]), data.get("valuation")
    return KripkeSystem.from_json(data), data.get("valuation")


def _signature_from_valuation(val, dim) -> Signature:
    """Atom ``P`` of arity ``m`` gets support ``0, ..., m - 1``."""
    atoms = {}
    for name, per_world in val.items():
        rows = [t for ts in (per_world.values() if isinstance(per_world, dict) else per_world) for t in ts]
        atoms[name] = range(len(rows[0])) if rows else ()
    need = max((len(s) for s in atoms.values()), default=0)
    n_dim = max(DEFAULT_N_DIM, dim, need)
    return Signature.make(atoms, n_dim=n_dim)


def _alpha(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"--alpha must be a comma separated list of indices, got {text!r}") from None


# ---------------------------------------------------------------------------
# subcommands


def cmd_check(args):
    sig = _signature(args.signature)
    target = args.target
    text = Path(target).read_text() if os.path.isfile(target) else target
    gamma, delta, sig = parse_sequent(text, sig)
    res = derives(gamma, delta, args.depth)
    out = {"sequent": {"gamma": [print_formula(f) for f in gamma], "delta": [print_formula(f) for f in delta]}}
    out.update(res.to_json())
    code = EXIT_OK if res.status == PROVED else EXIT_EXHAUSTED if res.status == EXHAUSTED else EXIT_NEGATIVE
    return code, out


def _problem(data, sig_arg):
    if not isinstance(data, dict):
        raise UsageError("problem file must hold an object")
    sig = _signature(sig_arg) or (Signature.from_json(data["signature"]) if "signature" in data else None)

    def parse_all(key):
        items = data.get(key, [])
        if not isinstance(items, list):
            raise UsageError(f"{key} must be a list of formulas")
        return [parse_formula(t, sig) for t in items]

    gamma, theta = parse_all("gamma"), parse_all("theta")
    lam = parse_all("lambda")
    if sig is None:
        sig = infer_signature(gamma + theta + lam)

    def names(fs):
        return {a.name for f in fs for a in _atom_nodes(f, set())}

    x1 = set(data.get("x1", names(gamma)))
    x2 = set(data.get("x2", names(theta + lam)))
    return gamma, theta, lam, x1, x2, sig


def cmd_saturate(args, out_stream):
    from .henkin import (SaturationConfig, SeparationRefused, build_world_tree, canonical_frame, saturate,
                         verify_root)
    gamma, theta, lam, x1, x2, sig = _problem(_read_json(args.problem), args.signature)
    config = SaturationConfig() if args.depth is None else dataclasses.replace(SaturationConfig(), depth=args.depth)
    try:
        res = saturate(gamma, theta, lam, x1=x1, x2=x2, signature=sig, budget=args.budget, config=config,
                       log=out_stream)
    except SeparationRefused as exc:
        return EXIT_NEGATIVE, {"result": "separable", "separator": exc.separator, "certificate": exc.certificate}
    checks = res.checks()
    summary = {"result": "saturated", "final": res.to_json()}
    ok = checks["chain_inclusion"] and checks["consistency_certificates"] and checks["witness_property"]
    if args.canonical:
        tree = build_world_tree(res)
        frame = canonical_frame(tree)
        truth = verify_root(frame, gamma, theta, lam)
        summary["canonical"] = {"frame": frame.to_json(), "root_truth": truth.to_json()}
        ok = ok and truth.ok
    return (EXIT_OK if ok else EXIT_NEGATIVE), summary


def cmd_model(args):
    import numpy as np
    from .kripke import Model, Valuation
    if args.frame is None:
        raise UsageError("model needs --frame")
    sig = _signature(args.signature)
    S, val = _frame_system(_read_json(args.frame))
    if sig is None and val:
        sig = _signature_from_valuation(val, S.dim)
    f = parse_formula(args.formula, sig)
    need = max(all_indices(f), default=-1) + 1
    if S.dim < need:
        S = S.with_dim(need)
    model = Model(S, Valuation(S, val or {}))
    fam = model.eval(f)
    table = {}
    for k, w in enumerate(S.worlds):
        rows = []
        for a in np.nonzero(S.valid[k])[0]:
            rows.append({"assignment": list(S.decode(int(a))), "value": int(fam.values[k, a])})
        table[w] = rows
    everywhere = bool(all(r["value"] for rows in table.values() for r in rows))
    return EXIT_OK, {"formula": print_formula(f), "dim": S.dim, "worlds": list(S.worlds), "truth": table,
                     "valid": everywhere}


def cmd_interpolate(args):
    from .interpolation import interpolate, verify_interpolant
    sig = _signature(args.signature)
    phi = parse_formula(args.phi, sig)
    psi = parse_formula(args.psi, sig)
    try:
        res = interpolate(phi, psi, args.depth, args.bound, signature=sig, seed=args.seed)
    except PreconditionError as exc:
        code = EXIT_EXHAUSTED if exc.status == EXHAUSTED else EXIT_NEGATIVE
        return code, {"failure": "precondition", "message": str(exc)}
    out = res.to_json()
    if res.found:
        out["verified"] = verify_interpolant(phi, res.interpolant, psi, args.depth).to_json()
        return EXIT_OK, out
    return EXIT_NEGATIVE, out


def cmd_neat(args):
    from .kripke import enumerate_families
    from .neat import NeatEmbedding, product_neat_commute_check, roundtrip
    if args.frame is None:
        raise UsageError("neat needs --frame")
    data = _read_json(args.frame)
    alpha = _alpha(args.alpha)
    members = data.get("family") if isinstance(data, dict) and "family" in data else [data]
    systems = [_frame_system(m)[0] for m in members]
    if not systems:
        raise UsageError("the frame file holds an empty family")
    base = systems[0]
    beta = max(base.dim, max(alpha, default=-1) + 1)
    out = {"check": args.check, "alpha": sorted(set(alpha)), "beta": beta}
    if args.check == "embed":
        K = base.with_dim(len(set(alpha)))
        emb = NeatEmbedding(K, base.with_dim(beta), alpha)
        rep = emb.check(enumerate_families(K))
        out.update(rep.to_json())
        ok = rep.ok
    elif args.check == "roundtrip":
        K = base.with_dim(len(set(alpha)))
        rep = roundtrip(K, max(0, beta - K.dim), alpha=alpha, seed=args.seed)
        out.update(rep)
        ok = rep["ok"]
    else:
        family = [S.with_dim(beta) for S in systems]
        if len(family) == 1:
            family = family * 2
        rep = product_neat_commute_check(family, alpha, seed=args.seed)
        out.update(rep.to_json())
        ok = rep.ok
    return (EXIT_OK if ok else EXIT_NEGATIVE), out


def cmd_axioms(args):
    from .axioms import check_axioms
    rep = check_axioms(args.frames, args.instances, args.seed, jobs=args.jobs)
    return (EXIT_OK if rep.ok else EXIT_NEGATIVE), rep.to_json()


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--depth", type=int,
                        help=f"prover depth bound (default {DEFAULT_DEPTH}; 2 for saturate certificates)")
    common.add_argument("--budget", type=int, help="saturation steps (default 50)")
    common.add_argument("--bound", type=int, help="interpolant size bound (default 7)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--jobs", type=int, help="worker processes (default 1)")
    common.add_argument("--pretty", action="store_true", default=None, help="indented output")
    common.add_argument("--frame", help="frame JSON file")
    common.add_argument("--signature", help="signature as inline JSON or a JSON file")

    p = _Parser(prog="polyheyt", description="Polyadic Heyting algebra toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("check", parents=[common], help="prove or refute a sequent")
    c.add_argument("target", help="a sequent file, or an inline sequent or formula")

    s = sub.add_parser("saturate", parents=[common], help="Henkin saturation of a triple")
    s.add_argument("problem", help="JSON file with gamma, theta, lambda and optionally x1, x2, signature")
    s.add_argument("--canonical", action="store_true", help="also build and check the canonical frame")

    m = sub.add_parser("model", parents=[common], help="truth table of a formula on a frame")
    m.add_argument("--formula", required=True)

    i = sub.add_parser("interpolate", parents=[common], help="search for an interpolant")
    i.add_argument("phi")
    i.add_argument("psi")

    n = sub.add_parser("neat", parents=[common], help="neat reduct checks on a frame")
    n.add_argument("--alpha", required=True, help="retained coordinates, e.g. 0,1,2")
    n.add_argument("--check", choices=("embed", "product", "roundtrip"), default="embed")

    a = sub.add_parser("axioms", parents=[common], help="check the equational laws on random systems")
    a.add_argument("--frames", type=int, default=200)
    a.add_argument("--instances", type=int, default=20)
    return p


def _dump(obj, pretty: bool) -> str:
    if pretty:
        return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    pretty = False
    try:
        args = build_parser().parse_args(argv)
        config = _load_config()
        for key, default in DEFAULTS.items():
            if key == "depth" and args.command == "saturate" and "depth" not in config:
                continue  # step certificates use the saturation default
            if getattr(args, key, None) is None:
                setattr(args, key, config.get(key, default))
        pretty = bool(args.pretty)
        if args.command == "saturate":
            code, out = cmd_saturate(args, stdout)
        else:
            code, out = {"check": cmd_check, "model": cmd_model, "interpolate": cmd_interpolate,
                         "neat": cmd_neat, "axioms": cmd_axioms}[args.command](args)
    except (PolyheytError, ValueError) as exc:
        code, out = EXIT_USAGE, {"error": type(exc).__name__, "message": str(exc)}
    stdout.write(_dump(out, pretty) + "\n")
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
