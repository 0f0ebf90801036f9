"""Batch command-line front end.

Four subcommands: ``gen`` draws samples from a model file, ``learn``
recovers parameters or structure from a sample file, ``verify`` runs the
brute-force verification suites, and ``bench`` sweeps recovery success
rates over sample sizes.  Every run is reproducible from its seed, and
every output embeds or accompanies the fully resolved configuration.

Flag values take precedence over a JSON config file (``--config``),
which takes precedence over built-in defaults.  The default worker
count comes from MRFLEARN_THREADS.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import oracle
from ._rng import make_rng
from .ising import IsingModel, edge_precision_recall, learn_model, structure_edges
from .mrf import MrfConfig, MrfModel, learn_parameters, learn_structure
from .nonbinary import NonBinaryConfig, NonBinaryIsing
from .nonbinary import learn_structure as learn_nonbinary_structure
from .polynomials import MultilinearPoly
from .samplers import (
    MAX_STATES,
    SampleBatch,
    alphabet_size,
    delta_unbiasedness,
    exact_distribution,
    exact_sample,
    gibbs_sample,
    parity_mrf,
)


class CliError(Exception):
    pass


def load_model(path):
    """Detect the model family from the file's keys and parse it."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read model file {path}: {exc}")
    try:
        if "A" in data:
            return IsingModel.from_json_dict(data)
        if "W" in data:
            return NonBinaryIsing.from_json_dict(data)
        if "terms" in data:
            return MrfModel.from_json_dict(data)
    except (KeyError, ValueError) as exc:
        raise CliError(f"malformed model file {path}: {exc}")
    raise CliError(f"model file {path} has none of the recognized keys A/W/terms")


def _resolve(args, config_keys):
    """Merge flag values over config-file values over defaults."""
    file_cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config file {args.config}: {exc}")
    resolved = {}
    for key, default in config_keys.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            resolved[key] = flag_val
        elif key in file_cfg:
            resolved[key] = file_cfg[key]
        else:
            resolved[key] = default
    return resolved


def _default_threads():
    return int(os.environ.get("MRFLEARN_THREADS", "1"))


# ----------------------------------------------------------------------
# gen
# ----------------------------------------------------------------------


def cmd_gen(args):
    cfg = _resolve(
        args,
        {
            "model": None,
            "n_samples": 1000,
            "sampler": "exact",
            "seed": 0,
            "burn_in": None,
            "thinning": None,
            "out": None,
        },
    )
    if not cfg["model"] or not cfg["out"]:
        raise CliError("gen requires --model and --out")
    model = load_model(cfg["model"])
    k = alphabet_size(model)
    if cfg["sampler"] == "exact":
        batch = exact_sample(exact_distribution(model), cfg["n_samples"], cfg["seed"])
    elif cfg["sampler"] == "gibbs":
        batch = gibbs_sample(
            model,
            cfg["n_samples"],
            burn_in=cfg["burn_in"],
            thinning=cfg["thinning"],
            seed=cfg["seed"],
        )
    else:
        raise CliError(f"unknown sampler {cfg['sampler']!r} (choose exact or gibbs)")
    batch.save(cfg["out"])
    if k**model.n <= MAX_STATES:
        delta = f"{delta_unbiasedness(model):.6g}"
    else:
        delta = "n/a"
    print(json.dumps({"command": "gen", "delta_unbiasedness": delta, **cfg}))
    return 0


# ----------------------------------------------------------------------
# learn
# ----------------------------------------------------------------------


def _metrics(task, truth_model, result, eta):
    metrics = {}
    if task == "ising":
        est = result
        gap = est.A_sym - truth_model.A
        metrics["linf_gap"] = float(np.max(np.abs(gap)))
        metrics["l1_gap"] = float(np.sum(np.abs(gap)))
        if eta:
            found = structure_edges(est, eta)
            p, r = edge_precision_recall(found, truth_model.edges)
            metrics["precision"], metrics["recall"] = p, r
    elif task == "mrf-structure" or task == "nonbinary":
        found = result
        p, r = edge_precision_recall(found, truth_model.edges)
        metrics["precision"], metrics["recall"] = p, r
    else:  # mrf parameters
        poly = result
        keys = set(poly.coeffs) | set(truth_model.psi.coeffs)
        gaps = [abs(poly.coeff(m) - truth_model.psi.coeff(m)) for m in keys]
        metrics["linf_gap"] = float(max(gaps, default=0.0))
        metrics["l1_gap"] = float(sum(gaps))
    return metrics


def cmd_learn(args):
    cfg = _resolve(
        args,
        {
            "task": None,
            "samples": None,
            "out": None,
            "lam": None,
            "eps": 0.1,
            "eta": None,
            "rho": 0.05,
            "t": 2,
            "mode": None,
            "truth": None,
            "metrics_out": None,
            "threads": _default_threads(),
        },
    )
    for required in ("task", "samples", "out", "lam"):
        if cfg[required] is None:
            raise CliError(f"learn requires --{required.replace('_', '-')}")
    batch = SampleBatch.load(cfg["samples"])
    task = cfg["task"]
    truth = load_model(cfg["truth"]) if cfg["truth"] else None
    resolved = {"command": "learn", **{k: v for k, v in cfg.items()}}

    if task == "ising":
        if batch.k != 2:
            raise CliError(f"ising task needs a binary sample file, got alphabet {batch.k}")
        est = learn_model(
            batch, cfg["lam"], eps=cfg["eps"], rho=cfg["rho"], threads=cfg["threads"]
        )
        payload = est.to_json_dict()
        if cfg["eta"]:
            payload["edges"] = [list(e) for e in structure_edges(est, cfg["eta"])]
        payload["config"] = resolved
        payload["diagnostics"] = est.diagnostics
        with open(cfg["out"], "w") as fh:
            json.dump(payload, fh, indent=1)
        result_for_metrics = est
        task_key = "ising"
    elif task == "mrf":
        if batch.k != 2:
            raise CliError(f"mrf task needs a binary sample file, got alphabet {batch.k}")
        mode = cfg["mode"] or ("structure" if cfg["eta"] else "parameters")
        mrf_cfg = MrfConfig(
            lam=cfg["lam"],
            t=cfg["t"],
            eta=cfg["eta"] or 0.0,
            rho=cfg["rho"],
            eps=cfg["eps"],
            threads=cfg["threads"],
        )
        if mode == "structure":
            edges = learn_structure(batch, mrf_cfg)
            with open(cfg["out"], "w") as fh:
                for i, j in edges:
                    fh.write(f"{i} {j}\n")
            result_for_metrics = edges
            task_key = "mrf-structure"
        else:
            poly, diags = learn_parameters(batch, mrf_cfg)
            payload = poly.to_json_dict()
            payload["config"] = resolved
            payload["diagnostics"] = diags
            with open(cfg["out"], "w") as fh:
                json.dump(payload, fh, indent=1)
            result_for_metrics = poly
            task_key = "mrf-parameters"
    elif task == "nonbinary":
        if batch.k < 2:
            raise CliError("nonbinary task needs a sample file with alphabet >= 2")
        if not cfg["eta"]:
            raise CliError("nonbinary structure recovery requires --eta")
        nb_cfg = NonBinaryConfig(
            lam=cfg["lam"], eta=cfg["eta"], rho=cfg["rho"], threads=cfg["threads"]
        )
        edges = learn_nonbinary_structure(batch, batch.k, nb_cfg)
        with open(cfg["out"], "w") as fh:
            for i, j in edges:
                fh.write(f"{i} {j}\n")
        result_for_metrics = edges
        task_key = "nonbinary"
    else:
        raise CliError(f"unknown task {task!r} (choose ising, mrf, or nonbinary)")

    if truth is not None:
        metrics = _metrics(task_key, truth, result_for_metrics, cfg["eta"])
        metrics_path = cfg["metrics_out"] or (cfg["out"] + ".metrics.json")
        with open(metrics_path, "w") as fh:
            json.dump({"config": resolved, **metrics}, fh, indent=1)
        print(json.dumps(metrics))
    return 0


# ----------------------------------------------------------------------
# verify
# ----------------------------------------------------------------------


def cmd_verify(args):
    cfg = _resolve(
        args, {"suite": "all", "seed": 0, "trials": 200, "out": None}
    )
    names = list(oracle.ALL_SUITES) if cfg["suite"] == "all" else [cfg["suite"]]
    for name in names:
        if name not in oracle.ALL_SUITES:
            raise CliError(
                f"unknown suite {name!r} (choose all or one of {sorted(oracle.ALL_SUITES)})"
            )
    reports = oracle.run_suites(names, seed=cfg["seed"], trials=cfg["trials"])
    lines = []
    all_passed = True
    for rep in reports:
        print(f"{rep.name}: {'pass' if rep.passed else 'FAIL'} {json.dumps(rep.summary)}")
        lines.append(rep.to_json_lines())
        if not rep.passed:
            all_passed = False
            failing = [t for t in rep.trials if not t.get("ok", True)]
            if failing:
                print("worst failing trial:", json.dumps(failing[0]), file=sys.stderr)
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.writelines(lines)
    return 0 if all_passed else 1


# ----------------------------------------------------------------------
# bench
# ----------------------------------------------------------------------


def _scenario_registry():
    def four_cycle():
        A = np.zeros((6, 6))
        for idx, (i, j) in enumerate([(0, 1), (1, 2), (2, 3), (3, 0)]):
            A[i, j] = A[j, i] = 0.4 * (1 if idx % 2 == 0 else -1)
        return IsingModel(A, np.zeros(6))

    def single_edge():
        A = np.zeros((2, 2))
        A[0, 1] = A[1, 0] = 0.4
        return IsingModel(A, np.zeros(2))

    def triangle():
        return MrfModel(n=6, t=3, psi=MultilinearPoly(6, 3, {(0, 1, 2): 0.6}))

    def nb_edge():
        mat = 0.3 * np.array([[2.0, -1.0, -1.0], [-1.0, 2.0, -1.0], [-1.0, -1.0, 2.0]])
        return NonBinaryIsing(n=4, k=3, W={(0, 1): mat}, theta=np.zeros((4, 3)))

    return {
        "single-edge": {
            "build": single_edge, "lam": 1.0, "eta": 0.3, "t": 2, "kind": "ising",
        },
        "4-cycle": {
            "build": four_cycle, "lam": 0.8, "eta": 0.3, "t": 2, "kind": "ising",
        },
        "planted-triangle": {
            "build": triangle, "lam": 0.6, "eta": 0.3, "t": 3, "kind": "mrf",
        },
        "parity": {
            "build": lambda: parity_mrf(4, [0, 1], 0.6),
            "lam": 0.6, "eta": 0.5, "t": 3, "kind": "mrf",
        },
        "nonbinary-edge": {
            "build": nb_edge, "lam": 0.6, "eta": 0.5, "t": 2, "kind": "nonbinary",
        },
    }


def _run_scenario(spec, model, N, seed, threads):
    dist = exact_distribution(model)
    batch = exact_sample(dist, N, seed)
    if spec["kind"] == "ising":
        est = learn_model(batch, spec["lam"], eps=spec["eta"] / 2, threads=threads)
        found = structure_edges(est, spec["eta"])
    elif spec["kind"] == "mrf":
        cfg = MrfConfig(lam=spec["lam"], t=spec["t"], eta=spec["eta"], threads=threads)
        found = learn_structure(batch, cfg)
    else:
        cfg = NonBinaryConfig(lam=spec["lam"], eta=spec["eta"], threads=threads)
        found = learn_nonbinary_structure(batch, model.k, cfg)
    p, r = edge_precision_recall(found, model.edges)
    return p == 1.0 and r == 1.0


BENCH_COLUMNS = "scenario,n,t,lambda,eta,N,trials,successes,wall_ms"


def cmd_bench(args):
    cfg = _resolve(
        args,
        {
            "scenario": None,
            "sample_grid": "1000,10000",
            "trials": 5,
            "seed": 0,
            "threads": _default_threads(),
            "out": None,
        },
    )
    registry = _scenario_registry()
    if cfg["scenario"] not in registry:
        raise CliError(
            f"unknown scenario {cfg['scenario']!r} (choose from {sorted(registry)})"
        )
    spec = registry[cfg["scenario"]]
    model = spec["build"]()
    if isinstance(cfg["sample_grid"], str):
        grid = [int(v) for v in cfg["sample_grid"].split(",") if v]
    else:
        grid = [int(v) for v in cfg["sample_grid"]]
    scenario_id = sorted(registry).index(cfg["scenario"])

    lines = [BENCH_COLUMNS]
    for N in grid if cfg["trials"] > 0 else []:
        t0 = time.perf_counter()
        successes = 0
        for trial in range(cfg["trials"]):
            trial_seed = make_rng(cfg["seed"], scenario_id, N, trial).integers(2**62)
            if _run_scenario(spec, model, N, int(trial_seed), cfg["threads"]):
                successes += 1
        wall_ms = int(1000 * (time.perf_counter() - t0))
        lines.append(
            f"{cfg['scenario']},{model.n},{spec['t']},{spec['lam']},{spec['eta']},"
            f"{N},{cfg['trials']},{successes},{wall_ms}"
        )
    text = "\n".join(lines) + "\n"
    if cfg["out"]:
        with open(cfg["out"], "w") as fh:
            fh.write(text)
    print(text, end="")
    return 0


# ----------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mrflearn",
        description="Learn Ising models and Markov random fields from samples.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="draw samples from a model file")
    g.add_argument("--model")
    g.add_argument("--n-samples", dest="n_samples", type=int)
    g.add_argument("--sampler", choices=["exact", "gibbs"])
    g.add_argument("--seed", type=int)
    g.add_argument("--burn-in", dest="burn_in", type=int)
    g.add_argument("--thinning", type=int)
    g.add_argument("--out")
    g.add_argument("--config")
    g.set_defaults(func=cmd_gen)

    l = sub.add_parser("learn", help="recover parameters or structure from samples")
    l.add_argument("--task", choices=["ising", "mrf", "nonbinary"])
    l.add_argument("--samples")
    l.add_argument("--out")
    l.add_argument("--lam", "--lambda", dest="lam", type=float)
    l.add_argument("--eps", type=float)
    l.add_argument("--eta", type=float)
    l.add_argument("--rho", type=float)
    l.add_argument("--t", type=int)
    l.add_argument("--mode", choices=["structure", "parameters"])
    l.add_argument("--truth")
    l.add_argument("--metrics-out", dest="metrics_out")
    l.add_argument("--threads", type=int)
    l.add_argument("--config")
    l.set_defaults(func=cmd_learn)

    v = sub.add_parser("verify", help="run the brute-force verification suites")
    v.add_argument("--suite")
    v.add_argument("--seed", type=int)
    v.add_argument("--trials", type=int)
    v.add_argument("--out")
    v.add_argument("--config")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="success-rate curves over sample sizes")
    b.add_argument("--scenario")
    b.add_argument("--sample-grid", dest="sample_grid")
    b.add_argument("--trials", type=int)
    b.add_argument("--seed", type=int)
    b.add_argument("--threads", type=int)
    b.add_argument("--out")
    b.add_argument("--config")
    b.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
