"""Command-line interface.

Exit codes: 0 success (verdicts are reported as data), 2 usage error or
unreadable input, 3 invalid input content. Diagnostics go to stderr as a
single line.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from percept.abstraction import OmegaMapping, check_exact_transformation
from percept.errors import PerceptError
from percept.gaussian import implied_distribution
from percept.interventions import NULL, InterventionSet, InterventionSpec, apply_do, make_intervention
from percept.perception import causal_perception, check_conjunction, observational_perception, pib_report
from percept.profiles import ReceiverProfile, assemble_high_level, assemble_low_level, parse_grid, parse_profile
from percept.report import distribution_to_dict, pib_to_dict, render_report, scm_to_dict, to_json
from percept.sampler import sample

EXIT_USAGE = 2
EXIT_INVALID = 3


class UsageError(Exception):
    pass


def _read(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _profile(path: str) -> ReceiverProfile:
    try:
        return parse_profile(_read(path))
    except PerceptError as exc:
        raise _with_path(exc, path)


def _with_path(exc: PerceptError, path: str) -> PerceptError:
    exc.args = (f"{path}: {exc}",)
    return exc


def _parse_do(text: str | None) -> InterventionSpec:
    if not text:
        return NULL
    items = []
    for part in text.split(","):
        name, sep, value = part.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"bad --do assignment {part!r}; expected VAR=VALUE")
        try:
            items.append((name.strip(), float(value)))
        except ValueError:
            raise UsageError(f"bad value in --do assignment {part!r}") from None
    return make_intervention(items)


def _iset(args, *profiles: ReceiverProfile) -> InterventionSet:
    if getattr(args, "observational", False):
        return InterventionSet((NULL,))
    if args.interventions:
        try:
            return parse_grid(_read(args.interventions))
        except PerceptError as exc:
            raise _with_path(exc, args.interventions)
    specs = set()
    for p in profiles:
        if p.interventions is not None:
            specs.update(p.interventions.enumerate())
    return InterventionSet(tuple(sorted(specs, key=InterventionSpec.sort_key)))


def _emit(data: bytes, args):
    if getattr(args, "output", None):
        Path(args.output).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_validate(args):
    profile = _profile(args.profile)
    scm = assemble_high_level(profile)
    n = len(scm.graph.edges)
    _emit(f"ok: graph acyclic, {n} edge{'s' if n != 1 else ''}\n".encode(), args)


def cmd_build(args):
    profile = _profile(args.profile)
    scm = assemble_high_level(profile, args.tau) if args.level == "high" else assemble_low_level(profile)
    doc = scm_to_dict(scm, profile.id, args.level)
    if args.format == "json":
        _emit(to_json(doc), args)
        return
    lines = [f"receiver: {profile.id}  level: {args.level}", f"factorization: {doc['factorization']}"]
    lines += [f"{e['from']} -> {e['to']}: {e['coefficient']!r}" for e in doc["edges"]]
    lines += [f"noise {n}: mean {v['mean']!r} var {v['var']!r}" for n, v in doc["noise"].items()]
    _emit(("\n".join(lines) + "\n").encode(), args)


def _model(profile, level, tau=None):
    return assemble_high_level(profile, tau) if level == "high" else assemble_low_level(profile)


def cmd_distribution(args):
    profile = _profile(args.profile)
    spec = _parse_do(args.do)
    dist = implied_distribution(apply_do(_model(profile, args.level), spec))
    doc = distribution_to_dict(dist, profile.id, spec)
    if args.format == "json":
        _emit(to_json(doc), args)
        return
    lines = [f"receiver: {profile.id}  intervention: {spec}"]
    lines += [f"{v}: mean {m!r} var {dist.cov[i, i]!r}" for i, (v, m) in enumerate(zip(dist.variables, doc["mean"]))]
    _emit(("\n".join(lines) + "\n").encode(), args)


def cmd_sample(args):
    profile = _profile(args.profile)
    if args.n < 1:
        raise UsageError("-n must be at least 1")
    scm = apply_do(_model(profile, args.level), _parse_do(args.do))
    _emit(sample(scm, args.n, args.seed, args.workers).to_csv().encode(), args)


def cmd_compare(args):
    a, b = _profile(args.a), _profile(args.b)
    if args.observational:
        report = observational_perception(a, b, args.metric, args.epsilon, args.ridge, workers=args.workers)
    else:
        report = causal_perception(
            a, b, _iset(args, a, b), args.metric, args.agg, args.epsilon, args.ridge, workers=args.workers
        )
    _emit(render_report(report, args.format), args)


def cmd_consistency(args):
    profile = _profile(args.profile)
    report = check_exact_transformation(
        profile,
        _iset(args, profile),
        args.metric,
        args.tol,
        args.tau,
        OmegaMapping.parse(args.omega),
        args.ridge,
        args.workers,
    )
    _emit(render_report(report, args.format), args)


def cmd_pib(args):
    reference = _profile(args.reference)
    others = [_profile(p) for p in args.others]
    rows = pib_report(
        reference, others, _iset(args, reference, *others), args.metric, args.agg, args.epsilon, args.ridge, args.workers
    )
    if args.format == "json":
        _emit(to_json(pib_to_dict(reference.id, rows, args.metric, args.agg, args.epsilon)), args)
        return
    lines = [f"reference: {reference.id}"]
    lines += [f"{r.id}  {r.aggregate_distance!r}  {r.kind}" for r in rows]
    _emit(("\n".join(lines) + "\n").encode(), args)


def cmd_fallacy(args):
    _emit(render_report(check_conjunction(args.joint, args.pa, args.pb), args.format), args)


def _common(p, workers=True, output=True, fmt=True):
    if fmt:
        p.add_argument("--format", choices=("json", "text"), default="json")
    if output:
        p.add_argument("-o", "--output", help="write to this file instead of stdout")
    if workers:
        p.add_argument("--workers", type=int, default=1)


def _analysis(p):
    p.add_argument("--metric", choices=("w2", "kl"), default="w2")
    p.add_argument("--ridge", type=float, default=None, help="covariance ridge for kl (default 1e-9)")
    p.add_argument("--interventions", help="intervention grid JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="percept", description="Causal perception analysis of receiver profiles.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a receiver profile")
    p.add_argument("profile")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("build", help="print the assembled SCM")
    p.add_argument("profile")
    p.add_argument("--level", choices=("high", "low"), default="high")
    p.add_argument("--tau", choices=("sum", "mean"), default=None)
    _common(p, workers=False)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("distribution", help="print the implied Gaussian")
    p.add_argument("profile")
    p.add_argument("--do", help="intervention, e.g. Z=1,X1=0.5")
    p.add_argument("--level", choices=("high", "low"), default="high")
    _common(p, workers=False)
    p.set_defaults(func=cmd_distribution)

    p = sub.add_parser("sample", help="draw samples as CSV")
    p.add_argument("profile")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--do")
    p.add_argument("--level", choices=("high", "low"), default="high")
    _common(p, fmt=False)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("compare", help="perception between two receivers")
    p.add_argument("a")
    p.add_argument("b")
    _analysis(p)
    p.add_argument("--agg", choices=("max", "mean"), default="max")
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--observational", action="store_true", help="compare observational distributions only")
    _common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("consistency", help="check the descriptor-to-variable exact transformation")
    p.add_argument("profile")
    _analysis(p)
    p.add_argument("--tau", choices=("sum", "mean"), default=None)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--omega", default="equal-split", help="equal-split or single:<index>")
    _common(p)
    p.set_defaults(func=cmd_consistency)

    p = sub.add_parser("pib", help="rank receivers by deviation from a reference receiver")
    p.add_argument("--reference", required=True)
    p.add_argument("others", nargs="+")
    _analysis(p)
    p.add_argument("--agg", choices=("max", "mean"), default="max")
    p.add_argument("--epsilon", type=float, default=0.01)
    _common(p)
    p.set_defaults(func=cmd_pib)

    p = sub.add_parser("fallacy", help="check the conjunction rule")
    p.add_argument("--joint", type=float, required=True)
    p.add_argument("--pa", type=float, required=True)
    p.add_argument("--pb", type=float, required=True)
    _common(p, workers=False)
    p.set_defaults(func=cmd_fallacy)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except UsageError as exc:
        print(f"percept: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PerceptError as exc:
        print(f"percept: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return 0


if __name__ == "__main__":
    sys.exit(main())
