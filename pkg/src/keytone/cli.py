"""keytone command-line interface.

Exit codes: 0 success, 1 pipeline-quality failure, 2 input/usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import chartgen, pipeline, pressmodel, separation
from .chartgen import AdaptationParams, ChartKind
from .classify import ClassifyPolicy, ImageCategory
from .evaluate import Judgment, bradley_terry, ranking_report, score_points
from .server import SessionSpec, make_server, make_session


class InputError(Exception):
    pass


def _seed(args) -> int:
    env = os.environ.get("KEYTONE_SEED")
    if env is not None:
        return int(env)
    return getattr(args, "seed", 0)


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _write(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def cmd_classify(args) -> int:
    try:
        img = pipeline.load_lab_image(args.image)
    except (OSError, ValueError) as exc:
        raise InputError(f"cannot load image {args.image}: {exc}") from exc
    policy = ClassifyPolicy.MEAN_L if args.policy == "mean-l" else ClassifyPolicy.MAX_BAND_MASS
    result = pipeline.classify_image(img, policy=policy,
                                     exclude_background=args.exclude_background)
    if args.json:
        print(json.dumps(result))
    else:
        m = result["masses"]
        print(f"{result['category']}  (high={m['high']:.3f} "
              f"normal={m['normal']:.3f} low={m['low']:.3f})")
    return 0


def cmd_chart(args) -> int:
    params = AdaptationParams(gamma=args.gamma)
    if args.kind == "standard":
        chart = chartgen.standard_chart()
    elif args.kind == "adapted-new":
        chart = chartgen.adapted_chart_new(ImageCategory(args.category), params)
    elif args.kind == "adapted-remap":
        chart = chartgen.adapt_standard_chart(chartgen.standard_chart(),
                                              ImageCategory(args.category), params)
    else:
        raise InputError(f"unknown chart kind {args.kind!r}")
    _write(args.out, chartgen.chart_to_cgats(chart))
    return 0


def cmd_grayscale(args) -> int:
    try:
        chart = chartgen.gray_scale(args.steps, args.k_min, args.k_max)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write(args.out, chartgen.chart_to_cgats(chart))
    return 0


def cmd_simulate(args) -> int:
    chart = chartgen.chart_from_cgats(_read(args.chart))
    model = pressmodel.paper_preset(args.preset) if args.preset else \
        pressmodel.press_from_text(_read(args.press))
    meas = pressmodel.simulate_print(chart, model, noise_sigma=args.noise,
                                     seed=_seed(args))
    _write(args.out, pressmodel.measurements_to_cgats(meas))
    return 0


def cmd_fit(args) -> int:
    chart = chartgen.chart_from_cgats(_read(args.chart))
    meas = pressmodel.measurements_from_cgats(_read(args.measurements),
                                              path=args.measurements)
    try:
        fwd = separation.fit_forward(meas, chart, n_fixed=args.n_fixed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write(args.out, pressmodel.press_to_text(fwd.model))
    report = {"mean_residual": fwd.mean_residual, "max_residual": fwd.max_residual,
              "yule_nielsen_n": fwd.model.yule_nielsen_n}
    print(json.dumps(report))
    return 0


def cmd_separate(args) -> int:
    chart = chartgen.chart_from_cgats(_read(args.chart))
    meas = pressmodel.measurements_from_cgats(_read(args.measurements),
                                              path=args.measurements)
    fwd = separation.fit_forward(meas, chart)
    opts = separation.SeparationOptions(
        gcr_strength=args.gcr, black_start=args.black_start,
        total_ink_limit=args.ink_limit, grid_size=args.grid)
    profile = separation.build_separation(fwd, opts, source_kind=chart.kind,
                                          source_category=chart.category)
    _write(args.out, separation.profile_to_text(profile))
    return 0


def cmd_pipeline(args) -> int:
    try:
        report = pipeline.run_pipeline(
            args.image, preset=args.preset, mode=args.mode, gamma=args.gamma,
            grid_size=args.grid, gcr_strength=args.gcr,
            black_start=args.black_start, total_ink_limit=args.ink_limit,
            category_override=args.category)
    except (OSError, ValueError) as exc:
        raise InputError(str(exc)) from exc
    print(json.dumps(report, indent=2))
    if report["forward_fit"]["mean_residual"] > 5.0:
        print("pipeline quality failure: forward fit residual too high",
              file=sys.stderr)
        return 1
    return 0


def cmd_score(args) -> int:
    judgments = []
    with open(args.judgments, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                judgments.append(Judgment.from_json(line))
    if not judgments:
        raise InputError("judgment file is empty")
    try:
        result = bradley_terry(judgments)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if args.json:
        print(json.dumps({"n_judgments": result.n_judgments,
                          "points": result.points,
                          "strengths": result.strengths,
                          "degenerate": result.degenerate}))
    else:
        print(ranking_report(result))
    return 0


def cmd_serve(args) -> int:
    if args.session:
        spec = SessionSpec.from_dict(json.loads(_read(args.session)))
    else:
        variants = {}
        for item in args.variant or []:
            name, _, path = item.partition("=")
            if not path:
                raise InputError(f"variant must be name=path, got {item!r}")
            variants[name] = path
        try:
            spec = make_session(args.session_id, variants, seed=_seed(args),
                                judges_expected=args.judges)
        except ValueError as exc:
            raise InputError(str(exc)) from exc
    static_dir = args.static
    if static_dir is None:
        bundled = os.path.join(os.path.dirname(__file__), "..", "..",
                               "frontend", "dist")
        bundled = os.path.realpath(bundled)
        static_dir = bundled if os.path.isdir(bundled) else None
    server = make_server(spec, args.judgments, port=args.port, static_dir=static_dir)
    host, port = server.server_address
    print(f"serving pair-comparison session {spec.session_id!r} on http://{host}:{port}/")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="keytone")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="classify an image by L* distribution")
    p.add_argument("image")
    p.add_argument("--policy", choices=["max-band-mass", "mean-l"],
                   default="max-band-mass")
    p.add_argument("--exclude-background", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("chart", help="generate a test chart as CGATS")
    p.add_argument("kind", choices=["standard", "adapted-new", "adapted-remap"])
    p.add_argument("--category", choices=[c.value for c in ImageCategory],
                   default="low-key")
    p.add_argument("--gamma", type=float, default=2.2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_chart)

    p = sub.add_parser("grayscale", help="generate a K-only gray scale chart")
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--k-min", type=float, default=0.0)
    p.add_argument("--k-max", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_grayscale)

    p = sub.add_parser("simulate", help="print a chart on the simulated press")
    p.add_argument("chart")
    p.add_argument("--preset", choices=["coated", "uncoated"])
    p.add_argument("--press", help="press model file (alternative to --preset)")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a forward press model from measurements")
    p.add_argument("chart")
    p.add_argument("measurements")
    p.add_argument("--n-fixed", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("separate", help="build a separation profile")
    p.add_argument("chart")
    p.add_argument("measurements")
    p.add_argument("--gcr", type=float, default=0.5)
    p.add_argument("--black-start", type=float, default=45.0)
    p.add_argument("--ink-limit", type=float, default=3.2)
    p.add_argument("--grid", type=int, default=17)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_separate)

    p = sub.add_parser("pipeline", help="run the full reproduction experiment")
    p.add_argument("image")
    p.add_argument("--preset", choices=["coated", "uncoated"], default="coated")
    p.add_argument("--mode", choices=["standard", "adapted"], default="standard")
    p.add_argument("--gamma", type=float, default=2.2)
    p.add_argument("--grid", type=int, default=17)
    p.add_argument("--gcr", type=float, default=0.5)
    p.add_argument("--black-start", type=float, default=45.0)
    p.add_argument("--ink-limit", type=float, default=3.2)
    p.add_argument("--category", choices=[c.value for c in ImageCategory])
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("score", help="score a judgment file")
    p.add_argument("judgments")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("serve", help="host a pair-comparison session")
    p.add_argument("--session", help="session spec JSON file")
    p.add_argument("--session-id", default="session")
    p.add_argument("--variant", action="append",
                   help="name=path, repeatable (builds a session)")
    p.add_argument("--judges", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--judgments", required=True, help="JSON-lines output file")
    p.add_argument("--port", type=int, default=8731)
    p.add_argument("--static", help="directory of built UI assets")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
