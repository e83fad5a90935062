"""Command line interface.

Subcommands:
    gen     write a deterministic synthetic JSONL corpus
    eval    run the full parse/normalize/refine/evaluate pipeline on a corpus
    refine  refine waypoint lists from a JSONL file
    parse   parse one raw model output into structured JSON
    prompt  render planner prompts for records in a JSONL file

A config file (simple ``key = value`` lines, ``#`` comments) can preset any
eval option; explicit CLI flags win over file values.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .core import EgoHistory, RefinementConfig, Trajectory, Waypoint
from .normalize import normalize_length
from .pipeline import (
    RunConfig,
    load_records,
    run_pipeline,
    save_records,
    stub_generate,
)
from .refine import refine
from .structured import (
    MalformedStructureError,
    MalformedTrajectoryError,
    ParseError,
    PromptSpec,
    build_prompt,
    parse_response,
)

logger = logging.getLogger(__name__)

_REFINE_KEYS = (
    "z_threshold",
    "min_window",
    "max_window",
    "poly_order",
    "keypoint_angle",
    "keypoint_weight",
)
_CONFIG_KEYS = _REFINE_KEYS + (
    "input",
    "output",
    "workers",
    "seed",
    "target_len",
    "emit_plots",
    "no_refine",
)


def load_config_file(path: str) -> dict[str, str]:
    """Parse a ``key = value`` config file; unknown keys are rejected."""
    values: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path} line {lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path} line {lineno}: unknown key {key!r}")
            values[key] = value.strip()
    return values


def _pick(args: argparse.Namespace, file_cfg: dict[str, str], key: str, cast, default):
    flag_value = getattr(args, key, None)
    if flag_value is not None:
        return flag_value
    if key in file_cfg:
        raw = file_cfg[key]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes", "on")
        return cast(raw)
    return default


def _refinement_config(args: argparse.Namespace, file_cfg: dict[str, str]) -> RefinementConfig:
    base = RefinementConfig()
    return RefinementConfig(
        z_threshold=_pick(args, file_cfg, "z_threshold", float, base.z_threshold),
        min_window=_pick(args, file_cfg, "min_window", int, base.min_window),
        max_window=_pick(args, file_cfg, "max_window", int, base.max_window),
        poly_order=_pick(args, file_cfg, "poly_order", int, base.poly_order),
        keypoint_angle_deg=_pick(args, file_cfg, "keypoint_angle", float, base.keypoint_angle_deg),
        keypoint_weight=_pick(args, file_cfg, "keypoint_weight", float, base.keypoint_weight),
    )


def _add_refinement_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--z-threshold", dest="z_threshold", type=float)
    parser.add_argument("--min-window", dest="min_window", type=int)
    parser.add_argument("--max-window", dest="max_window", type=int)
    parser.add_argument("--poly-order", dest="poly_order", type=int)
    parser.add_argument("--keypoint-angle", dest="keypoint_angle", type=float)
    parser.add_argument("--keypoint-weight", dest="keypoint_weight", type=float)
    parser.add_argument("--target-len", dest="target_len", type=int)


def _cmd_gen(args: argparse.Namespace) -> int:
    records = stub_generate(
        args.count,
        args.seed,
        noise_sigma=args.noise_sigma,
        jitter_sigma=args.jitter_sigma,
        malformed_rate=args.malformed_rate,
        truncate_rate=args.truncate_rate,
        extend_rate=args.extend_rate,
    )
    save_records(records, args.output)
    print(f"wrote {len(records)} records to {args.output}")
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    file_cfg = load_config_file(args.config) if args.config else {}
    input_path = _pick(args, file_cfg, "input", str, None)
    output_dir = _pick(args, file_cfg, "output", str, None)
    if not input_path or not output_dir:
        print("eval: --input and --output are required (via flag or config)", file=sys.stderr)
        return 2
    cfg = RunConfig(
        input_path=input_path,
        output_dir=output_dir,
        refinement=_refinement_config(args, file_cfg),
        target_len=_pick(args, file_cfg, "target_len", int, 20),
        workers=_pick(args, file_cfg, "workers", int, 1),
        seed=_pick(args, file_cfg, "seed", int, 0),
        emit_plots=bool(_pick(args, file_cfg, "emit_plots", bool, False)),
        refine_enabled=not _pick(args, file_cfg, "no_refine", bool, False),
    )
    run_pipeline(cfg)
    return 0


def _cmd_parse(args: argparse.Namespace) -> int:
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            text = fh.read()
    else:
        text = sys.stdin.read()
    try:
        resp = parse_response(text)
    except MalformedStructureError as exc:
        print(json.dumps({"error": str(exc), "kind": "malformed_structure"}))
        return 1
    except MalformedTrajectoryError as exc:
        print(json.dumps({"error": str(exc), "kind": "malformed_trajectory"}))
        return 1
    print(
        json.dumps(
            {
                "description": resp.description,
                "decision": resp.decision,
                "trajectory": [[p.x, p.y] for p in resp.trajectory.points],
            }
        )
    )
    return 0


def _cmd_refine(args: argparse.Namespace) -> int:
    file_cfg: dict[str, str] = {}
    cfg = _refinement_config(args, file_cfg)
    target_len = args.target_len if args.target_len is not None else 20
    n_in = n_out = 0
    with open(args.input, encoding="utf-8") as fin, open(
        args.output, "w", encoding="utf-8"
    ) as fout:
        for lineno, line in enumerate(fin, 1):
            line = line.strip()
            if not line:
                continue
            n_in += 1
            try:
                obj = json.loads(line)
                rec_id = str(obj.get("id", lineno))
                if obj.get("pred") is not None:
                    traj = Trajectory(
                        tuple(Waypoint(float(x), float(y)) for x, y in obj["pred"])
                    )
                elif obj.get("raw_text") is not None:
                    traj = parse_response(obj["raw_text"]).trajectory
                else:
                    raise ValueError("record has neither 'pred' nor 'raw_text'")
                refined, report = refine(normalize_length(traj, target_len), cfg, target_len)
            except (ParseError, ValueError, TypeError) as exc:
                logger.warning("%s line %d: %s", args.input, lineno, exc)
                fout.write(json.dumps({"id": str(lineno), "error": str(exc)}) + "\n")
                continue
            fout.write(
                json.dumps(
                    {
                        "id": rec_id,
                        "refined": [[round(p.x, 4), round(p.y, 4)] for p in refined.points],
                        "outlier_indices": list(report.outlier_indices),
                        "keypoint_indices": list(report.keypoint_indices),
                    }
                )
                + "\n"
            )
            n_out += 1
    print(f"refined {n_out}/{n_in} records into {args.output}")
    return 0


def _cmd_prompt(args: argparse.Namespace) -> int:
    records = load_records(args.input)
    out = sys.stdout if not args.output else open(args.output, "w", encoding="utf-8")
    try:
        for record in records:
            spec = PromptSpec(
                ego_history=record.ego_history or EgoHistory(),
                nav_instruction=record.nav_instruction,
            )
            out.write(json.dumps({"id": record.id, "prompt": build_prompt(spec)}) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drivepipe",
        description="Trajectory post-processing and evaluation for structured planner output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a synthetic JSONL corpus")
    p_gen.add_argument("--output", required=True)
    p_gen.add_argument("--count", type=int, default=100)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--noise-sigma", type=float, default=0.15)
    p_gen.add_argument("--jitter-sigma", type=float, default=0.5)
    p_gen.add_argument("--malformed-rate", type=float, default=0.05)
    p_gen.add_argument("--truncate-rate", type=float, default=0.25)
    p_gen.add_argument("--extend-rate", type=float, default=0.25)
    p_gen.set_defaults(func=_cmd_gen)

    p_eval = sub.add_parser("eval", help="run the full evaluation pipeline")
    p_eval.add_argument("--input")
    p_eval.add_argument("--output")
    p_eval.add_argument("--config")
    p_eval.add_argument("--workers", type=int)
    p_eval.add_argument("--seed", type=int)
    p_eval.add_argument("--emit-plots", dest="emit_plots", action="store_const", const=True)
    p_eval.add_argument("--no-refine", dest="no_refine", action="store_const", const=True)
    _add_refinement_flags(p_eval)
    p_eval.set_defaults(func=_cmd_eval)

    p_parse = sub.add_parser("parse", help="parse raw model text (file or stdin)")
    p_parse.add_argument("--input")
    p_parse.set_defaults(func=_cmd_parse)

    p_refine = sub.add_parser("refine", help="refine waypoint lists from JSONL")
    p_refine.add_argument("--input", required=True)
    p_refine.add_argument("--output", required=True)
    _add_refinement_flags(p_refine)
    p_refine.set_defaults(func=_cmd_refine)

    p_prompt = sub.add_parser("prompt", help="render prompts for JSONL records")
    p_prompt.add_argument("--input", required=True)
    p_prompt.add_argument("--output")
    p_prompt.set_defaults(func=_cmd_prompt)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"fatal: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
