"""Command line interface: matrix runs, generators, trace conversion, plots."""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

from . import __version__
from .config import ScenarioConfig, load_config, parse_duration
from .contacts import (
    CommunityParams,
    ContactSequence,
    WaypointParams,
    convert_pairwise_trace,
    gen_community_schedule,
    gen_random_waypoint,
    gen_workload,
    parse_roster,
    parse_trace,
    parse_workload,
    select_pairs,
    validate_workload,
    write_contacts_csv,
    write_roster_csv,
    write_workload_csv,
)
from .engine import RunParams, run_scenario
from .metrics import METRICS, aggregate, compute_metrics, emit_csv, emit_svg_chart, read_results_csv
from .protocols import make_policy
from .types import OppSimError, ScenarioError


def _fmt(x: float | None) -> str:
    return "" if x is None else format(x, ".10g")


# ---------------------------------------------------------------------------
# input preparation


def prepare_contacts(cfg: ScenarioConfig, seed: int) -> ContactSequence:
    src = dict(cfg.contact_source)
    kind = src.pop("source")
    if kind == "trace":
        seq = parse_trace(src["path"])
        roster = parse_roster(cfg.roster_path)
        for node in seq.roster:
            if node not in roster:
                raise ScenarioError(f"trace node {node!r} missing from roster file")
        return ContactSequence(seq.events, roster, seq.duration)
    if kind == "random_waypoint":
        params = WaypointParams(**src, tick=cfg.tick, duration=cfg.end_time)
        return gen_random_waypoint(params, seed)
    params = CommunityParams(**src, duration=cfg.end_time)
    return gen_community_schedule(params, seed)


def prepare_workload(cfg: ScenarioConfig, roster: dict[str, str]):
    wl = cfg.workload
    if wl["source"] == "file":
        items = parse_workload(wl["path"])
        validate_workload(items, roster)
        return items
    per_day = wl.get("per_day", 500)
    size_range = (wl.get("size_min", 1000), wl.get("size_max", 100_000))
    seed = wl.get("seed", 1)
    rng = random.Random(seed)
    pairs = select_pairs(roster, wl.get("pairs", "all"), rng)
    return gen_workload(roster, per_day, size_range, pairs, cfg.end_time, seed)


def _cell_params(cfg: ScenarioConfig, ttl: int) -> RunParams:
    return RunParams(
        end_time=cfg.end_time,
        ttl=ttl,
        warmup=cfg.warmup,
        buffer_capacity=cfg.buffer_capacity,
        bandwidth=cfg.bandwidth,
        hop_limit=cfg.hop_limit,
        analytics=cfg.analytics,
    )


def _run_cell(args):
    params, contacts, workload, protocol, proto_params, seed = args
    try:
        policy = make_policy(protocol, proto_params)
        report = run_scenario(params, contacts, workload, policy, seed)
        return ("ok", report)
    except Exception as exc:  # cell failures must not kill the matrix
        return ("error", f"{protocol} ttl={params.ttl} seed={seed}: {exc!r}")


# ---------------------------------------------------------------------------
# matrix execution


def run_matrix(
    cfg: ScenarioConfig,
    out_dir: str | None = None,
    jobs: int = 1,
    protocols: list[str] | None = None,
    ttls: list[int] | None = None,
    seeds: list[int] | None = None,
    config_path: str | None = None,
) -> int:
    """Execute every (protocol, ttl, seed) cell and write the report files."""
    run_protocols = [p for p in cfg.protocols if protocols is None or p in protocols]
    run_ttls = [t for t in cfg.ttls if ttls is None or t in ttls]
    run_seeds = [s for s in cfg.seeds if seeds is None or s in seeds]
    if not run_protocols or not run_ttls or not run_seeds:
        raise ScenarioError("matrix is empty after applying filters")

    contacts_by_seed: dict[int, ContactSequence] = {}
    if cfg.contact_source["source"] == "trace":
        shared = prepare_contacts(cfg, run_seeds[0])
        for seed in run_seeds:
            contacts_by_seed[seed] = shared
    else:
        for seed in run_seeds:
            contacts_by_seed[seed] = prepare_contacts(cfg, seed)
    roster = contacts_by_seed[run_seeds[0]].roster
    workload = prepare_workload(cfg, roster)

    payloads = []
    for protocol in run_protocols:
        proto_params = cfg.protocol_params.get(protocol, {})
        for ttl in run_ttls:
            params = _cell_params(cfg, ttl)
            for seed in run_seeds:
                payloads.append(
                    (params, contacts_by_seed[seed], workload, protocol, proto_params, seed)
                )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_cell, payloads))
    else:
        outcomes = [_run_cell(p) for p in payloads]

    reports = [r for status, r in outcomes if status == "ok"]
    failures = [r for status, r in outcomes if status == "error"]

    out = out_dir or cfg.output_dir
    os.makedirs(out, exist_ok=True)
    if reports:
        agg = aggregate(reports)
        emit_csv(agg, os.path.join(out, "results.csv"))
        for metric in METRICS:
            emit_svg_chart(agg, metric, os.path.join(out, f"chart_{metric}.svg"))
        with open(os.path.join(out, "runs.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(
                "protocol,ttl_s,seed,created,delivered,relayed,"
                "delivery_probability,cost,latency\n"
            )
            for rep in sorted(reports, key=lambda r: (r.protocol, r.ttl, r.seed)):
                mv = compute_metrics(rep)
                fh.write(
                    f"{rep.protocol},{rep.ttl},{rep.seed},{rep.created},{rep.delivered},"
                    f"{rep.relayed},{_fmt(mv.delivery_probability)},{_fmt(mv.cost)},"
                    f"{_fmt(mv.latency)}\n"
                )
    manifest = {
        "tool": "oppsim",
        "version": __version__,
        "scenario": cfg.name,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "cells_total": len(payloads),
        "cells_failed": len(failures),
        "failures": failures,
    }
    if config_path is not None:
        with open(config_path, "rb") as fh:
            manifest["config_sha256"] = hashlib.sha256(fh.read()).hexdigest()
    with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 2 if failures else 0


# ---------------------------------------------------------------------------
# subcommands


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    return run_matrix(
        cfg,
        out_dir=args.out,
        jobs=args.jobs,
        protocols=args.protocols.split(",") if args.protocols else None,
        ttls=[parse_duration(t) for t in args.ttl.split(",")] if args.ttl else None,
        seeds=[int(s) for s in args.seeds.split(",")] if args.seeds else None,
        config_path=args.config,
    )


def cmd_gen_contacts(args) -> int:
    cfg = load_config(args.config)
    if cfg.contact_source["source"] == "trace":
        raise ScenarioError("gen-contacts needs a generator contact source in the config")
    seq = prepare_contacts(cfg, args.seed)
    write_contacts_csv(seq, args.out)
    if args.roster_out:
        write_roster_csv(seq.roster, args.roster_out)
    print(f"wrote {len(seq.events)} events for {len(seq.roster)} nodes to {args.out}")
    return 0


def cmd_gen_workload(args) -> int:
    roster = parse_roster(args.roster)
    rng = random.Random(args.seed)
    pairs = select_pairs(roster, args.pairs, rng)
    items = gen_workload(
        roster,
        args.per_day,
        (args.size_min, args.size_max),
        pairs,
        args.days * 86400,
        args.seed,
    )
    write_workload_csv(items, args.out)
    print(f"wrote {len(items)} messages to {args.out}")
    return 0


def cmd_convert_trace(args) -> int:
    n = convert_pairwise_trace(args.input, args.out)
    print(f"converted {n} contacts to {args.out}")
    return 0


def cmd_dump_social(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed
    contacts = prepare_contacts(cfg, seed)
    workload = prepare_workload(cfg, contacts.roster)
    times = sorted({parse_duration(tok) for tok in args.at.split(",")})
    rows: list[tuple] = []

    def probe(sim, t):
        for node in sim.nodes:
            snap = sim.social.snapshot(node.idx, t)
            rows.append((t, node.sid, "global_centrality", "", snap["global_centrality"]))
            rows.append((t, node.sid, "people_rank", "", snap["people_rank"]))
            rows.append((t, node.sid, "importance", "", snap["importance"]))
            rows.append((t, node.sid, "encounter_value", "", snap["encounter_value"]))
            for i, comm in enumerate(snap["communities"]):
                members = ";".join(sim.ids[m] for m in comm)
                rows.append((t, node.sid, "community", str(i), members))
            for peer, w in snap["weights"].items():
                rows.append((t, node.sid, "weight", sim.ids[peer], w))
            for peer, p in snap["predictability"].items():
                rows.append((t, node.sid, "predictability", sim.ids[peer], p))

    policy = make_policy(args.protocol, cfg.protocol_params.get(args.protocol, {}))
    params = _cell_params(cfg, max(cfg.ttls))
    run_scenario(params, contacts, workload, policy, seed, probe_times=times, probe_fn=probe)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("time_s,node,quantity,key,value\n")
        for t, node, quantity, key, value in rows:
            if isinstance(value, float):
                value = format(value, ".10g")
            fh.write(f"{t},{node},{quantity},{key},{value}\n")
    print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def cmd_plot(args) -> int:
    agg = read_results_csv(args.csv)
    if not agg.cells:
        raise ScenarioError(f"{args.csv}: no aggregate rows to plot")
    emit_svg_chart(agg, args.metric, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oppsim",
        description="Store-carry-and-forward network simulator",
    )
    parser.add_argument("--version", action="version", version=f"oppsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the protocol x ttl x seed matrix")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="output directory (default: from config)")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.add_argument("--protocols", default=None, help="comma list filter")
    p.add_argument("--ttl", default=None, help="comma list filter (duration syntax)")
    p.add_argument("--seeds", default=None, help="comma list filter")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("gen-contacts", help="generate a synthetic contact trace")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--roster-out", default=None)
    p.set_defaults(fn=cmd_gen_contacts)

    p = sub.add_parser("gen-workload", help="generate a message workload file")
    p.add_argument("--roster", required=True)
    p.add_argument("--per-day", type=int, default=500)
    p.add_argument("--days", type=int, default=12)
    p.add_argument("--size-min", type=int, default=1000)
    p.add_argument("--size-max", type=int, default=100_000)
    p.add_argument("--pairs", default="all", help="'all' or a pair-subset size")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_gen_workload)

    p = sub.add_parser("convert-trace", help="pairwise start/end lines -> canonical CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_convert_trace)

    p = sub.add_parser("dump-social", help="dump per-node social state at given times")
    p.add_argument("--config", required=True)
    p.add_argument("--protocol", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--at", required=True, help="comma list of probe times")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_dump_social)

    p = sub.add_parser("plot", help="render an SVG chart from a results CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--metric", required=True, choices=METRICS)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except OppSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
