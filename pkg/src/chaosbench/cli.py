"""Command-line front end.

Subcommands: generate (datasets), train, predict, analyze, sweep, report.
Sweep configs are YAML files whose keys mirror SweepConfig; every other
input/output is a trajectory text file, a .npz model file, or CSV.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
import yaml

from . import analysis, bench, esn, rnn
from .dynamics import Trajectory, integrate, load_trajectory, save_trajectory
from .precision import EXTENDED, Precision


def load_model(path):
    """Open either network kind by the tag inside the file."""
    kind = str(np.load(path, allow_pickle=False)["kind"][0])
    if kind == "esn":
        return esn.load_esn(path)
    return rnn.load_rnn(path)


def save_model(model, path):
    if isinstance(model, esn.EsnModel):
        esn.save_esn(model, path)
    else:
        rnn.save_rnn(model, path)


def _cmd_generate(args):
    paths = bench.generate_dataset(
        args.out, system=args.system, n_traj=args.n_traj,
        n_points=args.n_points, dt=args.dt, prec=args.precision,
        seed=args.seed)
    print(f"wrote {len(paths)} trajectories to {args.out}")
    return 0


def _cmd_train(args):
    traj = load_trajectory(args.data)
    if args.train_size is not None:
        if args.train_size + 1 > len(traj):
            print(f"error: train size {args.train_size} exceeds dataset "
                  f"({len(traj) - 1} steps)", file=sys.stderr)
            return 2
        traj = Trajectory(traj.system, traj.dt,
                          traj.points[:args.train_size + 1], traj.prec,
                          seed=traj.seed,
                          points_lo=None if traj.points_lo is None
                          else traj.points_lo[:args.train_size + 1])
    model = bench.build_and_train(args.net, args.precision, args.seed, traj)
    save_model(model, args.out)
    print(f"trained {args.net} ({args.precision}) on {len(traj) - 1} steps"
          f" -> {args.out}")
    return 0


def _cmd_predict(args):
    model = load_model(args.model)
    warm = load_trajectory(args.warm)
    if isinstance(model, esn.EsnModel):
        pred = esn.predict_closed_loop(model, warm, args.steps)
    else:
        pred = model.predict_closed_loop(warm, args.steps)
    save_trajectory(pred, args.out)
    print(f"wrote {args.steps} predicted points -> {args.out}")
    return 0


def _cmd_analyze(args):
    if args.metric == "tau":
        pred = load_trajectory(args.pred)
        ref = load_trajectory(args.ref)
        tau = analysis.tau_lim(pred, ref, threshold=args.threshold)
        print(f"tau_lim {tau:.6g}")
    elif args.metric == "xi":
        traj = load_trajectory(args.traj)
        rm = analysis.ReturnMap.from_trajectory(traj)
        fit = analysis.fit_return_map(rm)
        xi = analysis.return_map_error(rm, fit)
        print(f"xi {xi:.6g} ({len(rm)} pairs, cusp {fit.cusp:.4f})")
    elif args.metric == "lyapunov":
        sp = analysis.lyapunov_ode(args.system, dt=args.dt,
                                   n_steps=args.steps, prec=args.precision)
        print("lyapunov " + " ".join(f"{v:.6g}" for v in sp.lambdas))
    elif args.metric == "onestep":
        pred = load_trajectory(args.pred)
        mean, std = analysis.one_step_error(pred, start_index=args.start,
                                            n=args.n)
        print(f"onestep mean {mean:.6g} std {std:.6g}")
    return 0


def _cmd_sweep(args):
    with open(args.config) as fh:
        raw = yaml.safe_load(fh) or {}
    if args.out_dir:
        raw["out_dir"] = args.out_dir
    if args.seeds:
        raw["seeds"] = args.seeds
    if args.workers:
        raw["workers"] = args.workers
    cfg = bench.SweepConfig.from_dict(raw)
    rep = bench.run_sweep(cfg)
    bench.report(rep, cfg.out_dir)
    clean = len(rep.rows) - rep.n_failed
    print(f"sweep complete: {clean} rows ok, {rep.n_failed} failed "
          f"-> {cfg.out_dir}")
    return 0 if rep.n_failed == 0 else 2


def _cmd_report(args):
    rep = bench.ExperimentReport.load_rows(args.rows)
    rm_traj = load_trajectory(args.returnmap) if args.returnmap else None
    written = bench.report(rep, args.out, returnmap_traj=rm_traj)
    print(f"wrote {len(written)} report files -> {args.out}")
    return 0


def _precision(p):
    return Precision.parse(p)


def build_parser():
    ap = argparse.ArgumentParser(
        prog="chaosbench",
        description="precision benchmarks for chaotic-attractor forecasters")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write trajectory datasets")
    g.add_argument("out")
    g.add_argument("--system", default="lorenz",
                   choices=("lorenz", "rossler"))
    g.add_argument("--n-traj", type=int, default=100)
    g.add_argument("--n-points", type=int, default=50_000)
    g.add_argument("--dt", type=float, default=0.02)
    g.add_argument("--precision", type=_precision, default="double")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=_cmd_generate)

    t = sub.add_parser("train", help="train one network on one trajectory")
    t.add_argument("--data", required=True)
    t.add_argument("--net", required=True, choices=bench.NET_SPECS)
    t.add_argument("--precision", type=_precision, default="double")
    t.add_argument("--train-size", type=int, default=None)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", required=True)
    t.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="closed-loop prediction from a model")
    p.add_argument("--model", required=True)
    p.add_argument("--warm", required=True,
                   help="trajectory file used to warm up the network")
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    a = sub.add_parser("analyze", help="metrics on trajectory files")
    a.add_argument("--metric", required=True,
                   choices=("tau", "xi", "lyapunov", "onestep"))
    a.add_argument("--pred")
    a.add_argument("--ref")
    a.add_argument("--traj")
    a.add_argument("--threshold", type=float, default=0.05)
    a.add_argument("--system", default="lorenz",
                   choices=("lorenz", "rossler"))
    a.add_argument("--dt", type=float, default=0.01)
    a.add_argument("--steps", type=int, default=200_000)
    a.add_argument("--precision", type=_precision, default="double")
    a.add_argument("--start", type=int, default=25_000)
    a.add_argument("--n", type=int, default=10_000)
    a.set_defaults(func=_cmd_analyze)

    s = sub.add_parser("sweep", help="run a precision sweep from a config")
    s.add_argument("--config", required=True, help="YAML SweepConfig file")
    s.add_argument("--out-dir")
    s.add_argument("--seeds", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=_cmd_sweep)

    r = sub.add_parser("report", help="aggregate a rows.csv into reports")
    r.add_argument("--rows", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--returnmap", default=None,
                   help="trajectory file whose z-maxima pairs are written "
                        "as scatter data")
    r.set_defaults(func=_cmd_report)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
