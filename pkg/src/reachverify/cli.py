"""Command line: generate, train, verify, simulate, evaluate.

Exit codes: 0 success (or a safe verdict), 2 unsafe verdict, 1 error.
Every command writes ``report.json`` under ``--out``; wall-clock
measurements of generate/train/verify/simulate go to ``timings.json`` so the
reports themselves are reproducible byte for byte.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
import yaml

from . import datagen, metrics, reach, surrogate
from .config import RunConfig, config_hash, load_config
from .datagen import (BRAKE_SIGNAL, FeedbackGains, GenerationSummary, LaneVehicle, bv_feedback_control,
                      experiment_rng, idm_acceleration, mobil_lane_change, sample_system, split_of)
from .dynamics import integrate
from .errors import ReachVerifyError, StepError
from .plot import body_corners, occupancy_svg
from .safety import SafetyStandards, VehicleShape, check_system_safety, state_occupancy
from .scenario import Vehicle, VehicleSystem, expand_control
from .sets import IntervalBox

log = logging.getLogger("reachverify")

EXIT_OK, EXIT_ERROR, EXIT_UNSAFE = 0, 1, 2
EGO_GAINS = FeedbackGains(k_v=0.5, k_y=0.05, k_theta=0.6)


class UsageError(ReachVerifyError):
    pass


# -- shared helpers -------------------------------------------------------

def _threads() -> int:
    return max(int(os.environ.get("REACHVERIFY_THREADS", "1")), 1)


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header(cfg: RunConfig, command: str) -> dict:
    return {"command": command, "seed": cfg.seed, "config_hash": config_hash(cfg)}


def _standards(cfg: RunConfig) -> SafetyStandards:
    sec = cfg.section("safety")
    yb = sec["y_bounds"]
    spec = cfg.scenario
    return SafetyStandards(y_bounds=tuple(yb) if yb is not None else spec.road_bounds,
                           shape=VehicleShape(spec.vehicle_length, spec.vehicle_width),
                           check_s2=bool(sec["check_s2"]))


def _oracle_stepper(cfg: RunConfig):
    if cfg.oracle == "sampled":
        return lambda inp: reach.deduce_step_sampled(inp, cfg.sampled_n, cfg.seed)
    return reach.STEPPERS[cfg.oracle]


def _load_surrogate(cfg: RunConfig):
    if not Path(cfg.model).is_file():
        raise UsageError(f"surrogate model not found: {cfg.model}")
    return surrogate.load_model(cfg.model)


def _steppers(cfg: RunConfig, engine: str) -> dict:
    out = {}
    if engine in ("oracle", "both"):
        out["oracle"] = _oracle_stepper(cfg)
    if engine in ("surrogate", "both"):
        out["surrogate"] = surrogate.make_stepper(_load_surrogate(cfg))
    return out


def _box_dict(box: IntervalBox) -> dict:
    return {"lb": box.lb.tolist(), "ub": box.ub.tolist()}


def _flag(safe: bool) -> str:
    return "safe" if safe else "unsafe"


def _comparison(oracle_traces, other_traces) -> list:
    """Per-step recall/precision of ``other`` against the oracle, per vehicle."""
    rows = []
    for k in range(len(oracle_traces[0].steps)):
        rec, prec = [], []
        for ot, st in zip(oracle_traces, other_traces):
            pair = metrics.BoxPair2D.from_state_boxes(st.steps[k], ot.steps[k])
            rec.append(metrics.recall_pos(pair))
            prec.append(metrics.precision_pos(pair))
        rows.append({"step": k + 1, "recall_pos": rec, "precision_pos": prec})
    return rows


# -- generate ---------------------------------------------------------------

def cmd_generate(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    sec = cfg.section("generate")
    n = int(args.n if args.n is not None else sec["n_experiments"])
    if n < 0:
        raise UsageError("n_experiments must be >= 0")
    path = out / sec["dataset"]
    summary = GenerationSummary()
    t0 = time.perf_counter()
    rows = datagen.write_dataset(datagen.generate_dataset(cfg.scenario, n, cfg.seed, cfg.constants, summary), path)
    seconds = time.perf_counter() - t0
    with open(path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    report = _header(cfg, "generate") | {"dataset": sec["dataset"], "rows": rows, "sha256": digest,
                                          "summary": summary.to_dict()}
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {"seconds": seconds})
    print(f"wrote {rows} samples from {summary.experiments - summary.skipped}/{summary.experiments} "
          f"experiments to {path} ({seconds:.1f} s)")
    return EXIT_OK


# -- train ------------------------------------------------------------------

def _split_metrics(model, ds) -> dict:
    if len(ds) == 0:
        return {"samples": 0, "loss": None, "recall_pos": None, "precision_pos": None}
    pred = surrogate.forward(model, ds.inputs)
    rec, prec = metrics.recall_precision_batch(pred, ds.labels)
    return {"samples": len(ds), "loss": surrogate.evaluate_loss(model, ds.inputs, ds.labels),
            "recall_pos": float(rec.mean()), "precision_pos": float(prec.mean())}


def cmd_train(cfg: RunConfig, args) -> int:
    path = args.data or cfg.section("train")["dataset"]
    if path is None:
        raise UsageError("no dataset given (use --data or train.dataset)")
    if not Path(path).is_file():
        raise UsageError(f"dataset not found: {path}")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    surrogate.set_threads(_threads())
    ds = datagen.read_dataset(path)
    parts = datagen.split_dataset(ds)
    opcfg = cfg.operator
    model = surrogate.build_model(opcfg)

    def progress(epoch, loss, lr):
        if epoch % 10 == 0 or epoch == opcfg.epochs - 1:
            log.info("epoch %d loss %.5f lr %.3g", epoch, loss, lr)

    res = surrogate.train(model, parts["train"].inputs, parts["train"].labels, opcfg, progress=progress)
    with open(path, "rb") as fh:
        model.metadata["dataset_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    model.metadata["config_hash"] = config_hash(cfg)
    surrogate.save_model(model, out / "model.rvop")
    with open(out / "loss_curve.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "learning_rate"])
        for e, (loss, lr) in enumerate(zip(res.loss_history, res.lr_history)):
            w.writerow([e, format(loss, ".17g"), format(lr, ".17g")])
    splits = {name: _split_metrics(model, part) for name, part in parts.items()}
    report = _header(cfg, "train") | {
        "dataset": Path(path).name, "dataset_sha256": model.metadata["dataset_sha256"], "parameter_count": model.parameter_count(), "initial_loss": res.initial_loss,
        "final_loss": res.loss_history[-1] if res.loss_history else res.initial_loss, "splits": splits}
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {"train_seconds": res.seconds})
    for name, m in splits.items():
        if m["samples"]:
            print(f"{name:<10} n={m['samples']:<7} loss={m['loss']:.4f} "
                  f"recall_pos={m['recall_pos']:.4f} precision_pos={m['precision_pos']:.4f}")
    print(f"model written to {out / 'model.rvop'} ({res.seconds:.0f} s)")
    return EXIT_OK


# -- verify -----------------------------------------------------------------

def _vehicles_from_config(cfg: RunConfig) -> list:
    spec = cfg.scenario
    bounds = IntervalBox.from_bounds(spec.control_lb, spec.control_ub)
    vehicles = []
    for i, v in enumerate(cfg.section("verify")["vehicles"]):
        role = v.get("role", "ego" if i == 0 else "background")
        state = IntervalBox(v["state"]["centers"], v["state"]["radii"])
        if role == "background":
            control = bounds
        else:
            control = IntervalBox(v["control"]["centers"], v["control"]["radii"])
        vehicles.append(Vehicle(state, control, role))
    if not vehicles or vehicles[0].role != "ego":
        raise UsageError("verify.vehicles must start with the ego vehicle")
    return vehicles


def _engine_report(traces, result, shape) -> dict:
    steps = []
    for s in result.steps:
        k = s.step - 1
        steps.append({"step": s.step, "safe": s.safe, "s1": s.s1, "s2": s.s2,
                      "vehicles": [_box_dict(t.steps[k]) | {"octagon": state_occupancy(t.steps[k], shape).vertices.tolist()}
                                   for t in traces]})
    return {"flag": _flag(result.safe), "steps": steps}


def verify_system(system, steppers: dict, standards: SafetyStandards):
    """Run every engine on ``system``; returns (traces, results) dicts keyed by engine."""
    traces, results = {}, {}
    for name, stepper in steppers.items():
        traces[name] = reach.deduce_trajectory(system, stepper)
        results[name] = check_system_safety(traces[name], standards)
    return traces, results


def cmd_verify(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    surrogate.set_threads(_threads())
    system = VehicleSystem.from_spec(cfg.scenario, _vehicles_from_config(cfg), cfg.constants)
    standards = _standards(cfg)
    steppers = _steppers(cfg, args.engine)
    traces, results = verify_system(system, steppers, standards)
    report = _header(cfg, "verify") | {"engine": args.engine, "oracle": cfg.oracle, "N": system.N,
                                        "y_bounds": list(standards.y_bounds) if standards.y_bounds else None}
    if "surrogate" in steppers:
        report["model_weights_sha256"] = steppers["surrogate"].model.weights_digest()
    report["engines"] = {name: _engine_report(traces[name], results[name], standards.shape) for name in traces}
    decisive = "oracle" if "oracle" in results else "surrogate"
    safe = results[decisive].safe
    report["flag"] = _flag(safe)
    if len(results) == 2:
        flags_o = results["oracle"].step_flags
        flags_s = results["surrogate"].step_flags
        report["comparison"] = {"per_step": _comparison(traces["oracle"], traces["surrogate"]),
                                "step_agreement": metrics.agreement(flags_o, flags_s) if flags_o else 1.0,
                                "flag_agreement": results["oracle"].safe == results["surrogate"].safe}
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {name: {"step_seconds": [t.step_times for t in tr]}
                                       for name, tr in traces.items()})
    if args.svg:
        for name, tr in traces.items():
            polys = [[state_occupancy(b, standards.shape).vertices for b in t.steps] for t in tr]
            (out / f"verify_{name}.svg").write_text(
                occupancy_svg(polys, standards.y_bounds, f"{name}: {_flag(results[name].safe)}"))
    print(f"verdict: {_flag(safe)} ({decisive})")
    for name, res in results.items():
        print(f"  {name:<9} steps: " + " ".join("ok" if f else "UNSAFE" for f in res.step_flags))
    return EXIT_OK if safe else EXIT_UNSAFE


# -- simulate ---------------------------------------------------------------

def _nearest_lane(y, centers) -> int:
    return int(np.argmin([abs(y - c) for c in centers]))


def _advance(x, u, dt, k) -> np.ndarray:
    n = max(1, math.ceil(dt * k.lateral_stiffness / max(x[3], 0.25)))
    return integrate(x, u, dt, n, k)


def run_simulation(cfg: RunConfig, stepper, standards: SafetyStandards):
    """Closed loop: propose (IDM + MOBIL), verify, accept or brake, advance.

    Returns (rows, frames, frame_seconds): trajectory rows, per-frame verdict
    records with occupancy polygons, and wall-clock verification times.
    """
    sec = cfg.section("simulate")
    spec = cfg.scenario.with_updates(n_lanes=int(sec["n_lanes"]))
    k = cfg.constants
    lanes = spec.lane_centers()
    dt, n_frames = spec.dt, int(round(float(sec["duration"]) / spec.dt))
    prad = np.asarray(sec["perception_radii"], dtype=float)
    crad = np.asarray(sec["control_radii"], dtype=float)
    v_floor = float(sec["min_speed"])
    ego_cfg = sec["ego"]
    states = [np.array([ego_cfg["x"], lanes[ego_cfg["lane"]], 0.0, ego_cfg["v"], 0.0, 0.0])]
    targets = [(float(ego_cfg["v"]), int(ego_cfg["lane"]))]
    for b in sec["background"]:
        states.append(np.array([b["x"], lanes[b["lane"]], 0.0, b["v"], 0.0, 0.0]))
        targets.append((float(b["v"]), int(b["lane"])))
    ego_lane = int(ego_cfg["lane"])
    idm, length = datagen.IDMParams(), spec.vehicle_length
    standards = replace(standards, y_bounds=spec.road_bounds)
    rows, frames, seconds = [], [], []
    for f in range(n_frames):
        # proposal
        ego = states[0]
        lane_view = [LaneVehicle(s[0], s[3], _nearest_lane(s[1], lanes)) for s in states[1:]]
        me = LaneVehicle(ego[0], ego[3], ego_lane)
        decision = mobil_lane_change(me, lane_view, len(lanes), idm, length=length)
        if decision != "keep":
            ego_lane += 1 if decision == "left" else -1
        leaders = [o for o in lane_view if o.lane == ego_lane and o.x > ego[0]]
        if leaders:
            lead = min(leaders, key=lambda o: o.x)
            acc = idm_acceleration(ego[3], lead.v, max(lead.x - ego[0] - length, 1e-3), idm,
                                   (spec.control_lb[0], spec.control_ub[0]))
        else:
            acc = idm_acceleration(ego[3], params=idm, bounds=(spec.control_lb[0], spec.control_ub[0]))
        steer = bv_feedback_control(ego, targets[0][0], lanes[ego_lane], EGO_GAINS, spec.control_lb, spec.control_ub)[1]
        proposal = np.array([acc, steer])
        # verification of the proposal over the horizon
        ego_box = expand_control(proposal, crad, crad, spec.control_lb, spec.control_ub)
        vehicles = [Vehicle(IntervalBox(states[0], prad), ego_box, "ego")]
        bounds = IntervalBox.from_bounds(spec.control_lb, spec.control_ub)
        vehicles += [Vehicle(IntervalBox(s, prad), bounds, "background") for s in states[1:]]
        system = VehicleSystem.from_spec(spec, vehicles, k)
        t0 = time.perf_counter()
        polys, error = [], None
        try:
            traces = reach.deduce_trajectory(system, stepper)
            safe = check_system_safety(traces, standards).safe
            polys = [[state_occupancy(b, standards.shape).vertices.tolist() for b in t.steps] for t in traces]
        except ReachVerifyError as exc:
            # anything that stops the proof counts as "not verified"
            safe, error = False, str(exc)
        seconds.append(time.perf_counter() - t0)
        verdict = "safe" if safe else ("error" if error else "unsafe")
        applied = proposal if safe else np.array(BRAKE_SIGNAL)
        frames.append({"frame": f, "time": f * dt, "verdict": verdict, "decision": decision,
                       "ego_lane": ego_lane, "proposal": proposal.tolist(), "applied": applied.tolist(),
                       "error": error, "polygons": polys})
        controls = [applied]
        for s, (v_t, lane) in zip(states[1:], targets[1:]):
            controls.append(bv_feedback_control(s, v_t, lanes[lane], FeedbackGains(), spec.control_lb, spec.control_ub))
        for i, (s, u) in enumerate(zip(states, controls)):
            rows.append([f, f * dt, i, "ego" if i == 0 else "background", *s.tolist(), *np.asarray(u).tolist(),
                         verdict if i == 0 else ""])
        new_states = []
        for s, u in zip(states, controls):
            u = np.array(u, dtype=float)
            u[0] = max(u[0], (v_floor - s[3]) / dt)  # keep the point model away from standstill
            new_states.append(_advance(s, u, dt, k))
        states = new_states
    return rows, frames, seconds


SIM_COLUMNS = ["frame", "time", "vehicle", "role", "xpos", "ypos", "theta", "v", "w", "r", "acc", "deltaf", "verdict"]


def cmd_simulate(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    surrogate.set_threads(_threads())
    engine = "surrogate" if args.engine == "surrogate" else "oracle"
    stepper = _steppers(cfg, engine)[engine]
    standards = _standards(cfg)
    rows, frames, seconds = run_simulation(cfg, stepper, standards)
    with open(out / "trajectory.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SIM_COLUMNS)
        for r in rows:
            w.writerow([format(x, ".17g") if isinstance(x, float) else x for x in r])
    budget = float(cfg.section("simulate")["budget"])
    lane_changes = sum(fr["decision"] != "keep" for fr in frames)
    brakes = sum(fr["verdict"] != "safe" for fr in frames)
    report = _header(cfg, "simulate") | {
        "engine": engine, "frames": len(frames), "lane_changes": lane_changes, "brake_frames": brakes,
        "verdicts": [{k: fr[k] for k in ("frame", "time", "verdict", "decision", "ego_lane", "proposal",
                                          "applied", "error")} for fr in frames]}
    _write_json(out / "report.json", report)
    _write_json(out / "timings.json", {"budget_s": budget, "verify_seconds": seconds,
                                       "budget_violations": sum(s > budget for s in seconds)})
    if args.svg:
        shape = standards.shape
        road = cfg.scenario.with_updates(n_lanes=int(cfg.section("simulate")["n_lanes"])).road_bounds
        for fr in frames:
            bodies = [body_corners(r[4], r[5], r[6], shape.length, shape.width)
                      for r in rows if r[0] == fr["frame"]]
            polys = [[np.asarray(p) for p in veh] for veh in fr["polygons"]]
            (out / f"frame_{fr['frame']:04d}.svg").write_text(
                occupancy_svg(polys, road, f"t={fr['time']:.1f}s {fr['verdict']}", bodies))
    print(f"{len(frames)} frames, {lane_changes} lane changes, {brakes} brake frames")
    return EXIT_OK


# -- evaluate ---------------------------------------------------------------

def evaluation_ids(n: int) -> list:
    """The first ``n`` experiment ids of the validation split (never trained on)."""
    out, e = [], 0
    while len(out) < n:
        if split_of(e) == "validation":
            out.append(e)
        e += 1
    return out


def evaluate_experiment(cfg: RunConfig, steppers: dict, standards: SafetyStandards, eid: int) -> dict:
    system = sample_system(cfg.scenario, experiment_rng(cfg.seed, eid), cfg.constants)
    rec = {"experiment_id": eid}
    traces, flags = {}, {}
    for name, stepper in steppers.items():
        try:
            traces[name] = reach.deduce_trajectory(system, stepper)
            flags[name] = check_system_safety(traces[name], standards).safe
        except StepError as exc:
            # an engine that cannot finish the horizon cannot certify safety
            traces[name], flags[name] = None, False
            rec[f"{name}_error"] = str(exc)
    rec["flags"] = flags
    rec["step_times"] = {name: [t for tr in traces[name] for t in tr.step_times] if traces[name] else []
                         for name in steppers}
    if traces.get("oracle") and traces.get("surrogate"):
        rec["per_step"] = _comparison(traces["oracle"], traces["surrogate"])
        if flags["oracle"] != flags["surrogate"]:
            rec["diff"] = [{"step": k + 1,
                            "max_lb_diff": max(float(np.max(np.abs(s.steps[k].lb - o.steps[k].lb)))
                                               for o, s in zip(traces["oracle"], traces["surrogate"])),
                            "max_ub_diff": max(float(np.max(np.abs(s.steps[k].ub - o.steps[k].ub)))
                                               for o, s in zip(traces["oracle"], traces["surrogate"]))}
                           for k in range(system.N)]
    rec["_system"] = system
    return rec


def evaluate(cfg: RunConfig, model, n: int, repeats: int = 5) -> dict:
    if n < 1:
        raise UsageError("evaluate needs n_experiments >= 1")
    standards = _standards(cfg)
    steppers = {"oracle": _oracle_stepper(cfg), "surrogate": surrogate.make_stepper(model)}
    ids = evaluation_ids(n)
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        recs = list(pool.map(lambda e: evaluate_experiment(cfg, steppers, standards, e), ids))
    N = cfg.scenario.N
    per_step = []
    for k in range(N):
        r = [x for rec in recs if "per_step" in rec for x in rec["per_step"][k]["recall_pos"]]
        p = [x for rec in recs if "per_step" in rec for x in rec["per_step"][k]["precision_pos"]]
        per_step.append({"step": k + 1, "recall_pos_mean": float(np.mean(r)) if r else None,
                         "recall_pos_std": float(np.std(r)) if r else None,
                         "precision_pos_mean": float(np.mean(p)) if p else None,
                         "precision_pos_std": float(np.std(p)) if p else None, "n": len(r)})
    fo = [rec["flags"]["oracle"] for rec in recs]
    fs = [rec["flags"]["surrogate"] for rec in recs]
    agree = metrics.agreement(fo, fs)
    disagreements = [{k: v for k, v in rec.items() if k != "_system"} for rec in recs
                     if rec["flags"]["oracle"] != rec["flags"]["surrogate"]]
    for d in disagreements:
        log.warning("experiment %d: oracle %s, surrogate %s, diffs %s", d["experiment_id"],
                    _flag(d["flags"]["oracle"]), _flag(d["flags"]["surrogate"]), d.get("diff"))
    # single-step latency on the first experiment's ego input
    sys0 = recs[0]["_system"]
    inp = sys0.step_input(sys0.vehicles[0].state, sys0.control_box(0, 0))
    t_o = metrics.time_step(steppers["oracle"], (inp,), repeats=repeats)
    t_s = metrics.time_step(steppers["surrogate"], (inp,), repeats=repeats)
    rollout = {name: [t for rec in recs for t in rec["step_times"][name]] for name in steppers}
    return {
        "n_experiments": n, "experiment_ids": ids, "per_step": per_step,
        "agreement": {"fraction": agree, "count": int(round(agree * n)), "n": n},
        "oracle_unsafe": int(sum(not f for f in fo)), "surrogate_unsafe": int(sum(not f for f in fs)),
        "errors": [{k: v for k, v in rec.items() if k.endswith("_error") or k == "experiment_id"}
                   for rec in recs if any(k.endswith("_error") for k in rec)],
        "disagreements": disagreements,
        "timing": {"oracle_step": t_o.to_dict(), "surrogate_step": t_s.to_dict(),
                   "surrogate_over_oracle": t_s.mean / t_o.mean,
                   "rollout_step_mean_s": {k: float(np.mean(v)) if v else None for k, v in rollout.items()},
                   "rollout_step_std_s": {k: float(np.std(v)) if v else None for k, v in rollout.items()}},
    }


def cmd_evaluate(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    surrogate.set_threads(1)  # latency is reported single-threaded
    sec = cfg.section("evaluate")
    n = int(args.n if args.n is not None else sec["n_experiments"])
    res = evaluate(cfg, _load_surrogate(cfg), n, int(sec["timing_repeats"]))
    _write_json(out / "report.json", _header(cfg, "evaluate") | res)
    print(f"{'step':>4} {'recall_pos':>18} {'precision_pos':>18}")
    for row in res["per_step"]:
        if row["n"]:
            print(f"{row['step']:>4} {row['recall_pos_mean']:.4f} ± {row['recall_pos_std']:.4f}   "
                  f"{row['precision_pos_mean']:.4f} ± {row['precision_pos_std']:.4f}")
    a = res["agreement"]
    print(f"agreement: {a['fraction']:.2f} ({a['count']}/{a['n']})")
    t = res["timing"]
    print(f"time per step: oracle {t['oracle_step']['mean_s'] * 1e3:.2f} ms, "
          f"surrogate {t['surrogate_step']['mean_s'] * 1e3:.2f} ms, ratio {t['surrogate_over_oracle']:.3f}")
    return EXIT_OK


# -- entry point ------------------------------------------------------------

COMMANDS = {"generate": cmd_generate, "train": cmd_train, "verify": cmd_verify,
            "simulate": cmd_simulate, "evaluate": cmd_evaluate}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="reachverify", description="Reachability-based safety verification.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML run configuration")
        sp.add_argument("--seed", type=int, help="master seed (overrides the config)")
        sp.add_argument("--out", help="output directory (overrides the config)")
        sp.add_argument("--engine", choices=("oracle", "surrogate", "both"), default="oracle")
        sp.add_argument("--svg", action="store_true", help="write SVG plots")
        sp.add_argument("--model", help="surrogate model file (overrides the config)")
        sp.add_argument("-v", "--verbose", action="store_true")
        if name in ("generate", "evaluate"):
            sp.add_argument("--n", type=int, help="number of experiments")
        if name == "train":
            sp.add_argument("--data", help="dataset CSV")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
            cfg.operator = replace(cfg.operator, seed=args.seed)
        if args.out is not None:
            cfg.out = args.out
        if args.model is not None:
            cfg.model = args.model
        return COMMANDS[args.command](cfg, args)
    except (ReachVerifyError, OSError, ValueError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
