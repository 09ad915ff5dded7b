"""Command line front end.

Subcommands: ``simulate`` (detector event streams), ``extract`` (bits
from clock counts), ``bias`` (analytic vs Monte Carlo parity split),
``test`` (statistical battery -> CSV report), ``protocol`` (BBM92/BB84
harness), ``eve`` (timing-adversary advantage sweep) and ``replay``
(reproduce any earlier output from its manifest).

Exit codes: 0 success; 1 usage error; 2 data error; 3 (``test`` only)
at least one applicable procedure failed at the significance level.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, GuardError
from .extract import (
    BitStream,
    ExtractorConfig,
    Modulus,
    balance,
    extract_mod2,
    flip_debias,
    intervals,
    _mod4_arrays,
)
from .formats import (
    BIT_FORMATS,
    EVENT_FORMATS,
    RunManifest,
    read_bits,
    read_events,
    read_manifest,
    write_bits,
    write_events,
    write_manifest,
    write_report,
)
from .models import Distribution, SourceModel, parity_probabilities
from .qkd import ProtocolParams, eve_qnd_advantage, run_bb84, run_bbm92
from .sim import (
    GENERATOR_ALGORITHM,
    ClockConfig,
    ClockMode,
    IntraGateProfile,
    empirical_parity,
    generate_free_running,
    generate_gated,
)
from .suite import TestId, run_battery

__all__ = ["main", "run", "build_parser"]

_CONVENTIONS = {
    "first_interval": "counted from clock tick 0",
    "mod4_bit_order": "basis bit is the high bit, key bit the low bit",
    "flip_debias_phase": "bit t is XORed with t mod 2, counting from t = 0",
    "basis_application": "detection T uses the chooser's T-th output",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_source_args(parser: _Parser) -> None:
    parser.add_argument("--dist", choices=[d.value for d in Distribution], default="poisson")
    parser.add_argument("--mu", type=float, default=None, help="mean photon number per window")
    parser.add_argument("--eta", type=float, default=1.0, help="detector efficiency")
    parser.add_argument(
        "--mu-eta", type=float, default=None, dest="mu_eta",
        help="shorthand for --mu VALUE --eta 1.0",
    )


def _source_from_args(args) -> SourceModel:
    if args.mu_eta is not None:
        if args.mu is not None:
            raise UsageError("--mu and --mu-eta are mutually exclusive")
        return SourceModel(Distribution(args.dist), args.mu_eta, 1.0)
    if args.mu is None:
        raise UsageError("one of --mu or --mu-eta is required")
    return SourceModel(Distribution(args.dist), args.mu, args.eta)


def _profile_from_spec(spec: str) -> IntraGateProfile:
    if spec == "uniform":
        return IntraGateProfile.uniform()
    if spec.startswith("fixed:"):
        return IntraGateProfile.fixed_slot(int(spec.split(":", 1)[1]))
    if spec.startswith("weighted:"):
        weights = [float(w) for w in spec.split(":", 1)[1].split(",")]
        return IntraGateProfile.weighted(weights)
    raise UsageError(
        f"unknown profile {spec!r}; expected 'uniform', 'fixed:K' or 'weighted:w1,w2,...'"
    )


def _resolve_seed(seed) -> int:
    if seed is not None:
        return int(seed)
    return int(np.random.SeedSequence().entropy)


def _generator_info(seed: int) -> dict:
    return {"algorithm": GENERATOR_ALGORITHM, "seed": seed, "numpy": np.__version__}


def _source_argv(args, source: SourceModel) -> list[str]:
    return ["--dist", source.distribution.value, "--mu", repr(source.mu), "--eta", repr(source.eta)]


def cmd_simulate(args) -> int:
    source = _source_from_args(args)
    profile = _profile_from_spec(args.profile)
    mode = ClockMode.GATED if args.mode == "gated" else ClockMode.FREE_RUNNING
    clock = ClockConfig(
        mode=mode,
        slots_per_gate=args.slots_per_gate,
        dark_prob=args.dark_prob,
        dead_slots=args.dead_slots,
    )
    seed = _resolve_seed(args.seed)
    if mode is ClockMode.GATED:
        stream = generate_gated(source, clock, profile, args.events, seed)
    else:
        stream = generate_free_running(source, clock, args.events, seed)
    write_events(stream, args.out, fmt=args.format)
    argv = (
        ["simulate"]
        + _source_argv(args, source)
        + [
            "--mode", args.mode,
            "--slots-per-gate", str(clock.slots_per_gate),
            "--profile", args.profile,
            "--dark-prob", repr(clock.dark_prob),
            "--dead-slots", str(clock.dead_slots),
            "--events", str(args.events),
            "--seed", str(seed),
            "--format", args.format,
            "--out", str(args.out),
        ]
    )
    manifest = RunManifest(
        subcommand="simulate",
        argv=argv,
        parameters={
            "distribution": source.distribution.value,
            "mu": source.mu,
            "eta": source.eta,
            "mode": mode.value,
            "slots_per_gate": clock.slots_per_gate,
            "profile": args.profile,
            "dark_prob": clock.dark_prob,
            "dead_slots": clock.dead_slots,
            "events": args.events,
            "format": args.format,
        },
        outputs=[str(args.out)],
        generator=_generator_info(seed),
        conventions={"first_interval": _CONVENTIONS["first_interval"]},
    )
    write_manifest(manifest, args.out)
    print(f"wrote {len(stream)} events to {args.out}")
    return 0


def cmd_extract(args) -> int:
    stream = read_events(args.events, fmt=args.events_format)
    modulus = Modulus(args.modulus)
    if modulus is Modulus.MOD2:
        bits = extract_mod2(stream, ExtractorConfig(include_first=args.include_first))
    else:
        gaps = intervals(stream, include_first=args.include_first)
        basis, key = _mod4_arrays(gaps)
        interleaved = np.empty(2 * basis.size, dtype=np.uint8)
        interleaved[0::2] = basis
        interleaved[1::2] = key
        bits = BitStream(interleaved)
    if args.debias:
        bits = flip_debias(bits)
    write_bits(bits, args.out, fmt=args.bits_format)
    argv = [
        "extract",
        "--events", str(args.events),
        "--events-format", args.events_format,
        "--modulus", modulus.value,
        "--include-first" if args.include_first else "--no-include-first",
        "--bits-format", args.bits_format,
        "--out", str(args.out),
    ]
    if args.debias:
        argv.insert(1, "--debias")
    conventions = {"first_interval": _CONVENTIONS["first_interval"]}
    if modulus is Modulus.MOD4:
        conventions["mod4_bit_order"] = _CONVENTIONS["mod4_bit_order"]
    if args.debias:
        conventions["flip_debias_phase"] = _CONVENTIONS["flip_debias_phase"]
    manifest = RunManifest(
        subcommand="extract",
        argv=argv,
        parameters={
            "events": str(args.events),
            "events_format": args.events_format,
            "modulus": modulus.value,
            "include_first": args.include_first,
            "debias": args.debias,
            "bits_format": args.bits_format,
        },
        outputs=[str(args.out)],
        conventions=conventions,
    )
    write_manifest(manifest, args.out)
    result = balance(bits)
    print(f"wrote {len(bits)} bits to {args.out} (balance {result.ratio:.6f})")
    return 0


def cmd_bias(args) -> int:
    source = _source_from_args(args)
    analytic = parity_probabilities(source)
    print(f"distribution        {source.distribution.value}")
    print(f"mu_eta              {source.effective_mean:.6g}")
    print(f"P_EVEN              {analytic.p_even:.6f}")
    print(f"P_ODD               {analytic.p_odd:.6f}")
    print(f"predicted_balance   {analytic.p_even / analytic.p_odd:.6f}")
    if args.mc_events:
        seed = _resolve_seed(args.seed)
        clock = ClockConfig(mode=ClockMode.FREE_RUNNING)
        stream = generate_free_running(source, clock, args.mc_events, seed)
        even, odd = empirical_parity(stream)
        total = even + odd
        print(f"mc_events           {total}")
        print(f"mc_seed             {seed}")
        print(f"mc_even_fraction    {even / total:.6f}")
        print(f"mc_odd_fraction     {odd / total:.6f}")
    return 0


def cmd_test(args) -> int:
    bits = read_bits(args.bits, fmt=args.bits_format)
    report = run_battery(bits, alpha=args.alpha, run_len=args.run_len)
    runs = len({e.run_index for e in report.entries})
    for test_id in TestId:
        rows = [e for e in report.entries if e.test_id is test_id]
        applicable = [e for e in rows if e.applicable]
        if not applicable:
            print(f"{test_id.value:20s} n/a")
            continue
        passed = sum(e.passed for e in applicable)
        worst = min(e.p_value for e in applicable)
        print(f"{test_id.value:20s} pass {passed}/{len(applicable)}  min p = {worst:.4g}")
    if args.out:
        write_report(report, args.out)
        manifest = RunManifest(
            subcommand="test",
            argv=[
                "test",
                "--bits", str(args.bits),
                "--bits-format", args.bits_format,
                "--alpha", repr(args.alpha),
                "--run-len", str(args.run_len),
                "--out", str(args.out),
            ],
            parameters={
                "bits": str(args.bits),
                "bits_format": args.bits_format,
                "alpha": args.alpha,
                "run_len": args.run_len,
                "runs": runs,
                **report.parameters,
            },
            outputs=[str(args.out)],
        )
        write_manifest(manifest, args.out)
        print(f"wrote report ({len(report.entries)} rows) to {args.out}")
    return 3 if report.failures() else 0


def _protocol_params(args, source: SourceModel, profile: IntraGateProfile, seed: int) -> ProtocolParams:
    clock = ClockConfig(
        mode=ClockMode.GATED,
        slots_per_gate=args.slots_per_gate,
        dark_prob=args.dark_prob,
    )
    return ProtocolParams(
        pair_source=source,
        clock_alice=clock,
        clock_bob=clock,
        profile=profile,
        n_gates=args.gates,
        seed=seed,
        channel_transmittance_alice=args.t_alice,
        channel_transmittance_bob=args.t_bob,
        intrinsic_error=args.error,
        k_bootstrap=args.k_bootstrap,
    )


def cmd_protocol(args) -> int:
    source = _source_from_args(args)
    profile = _profile_from_spec(args.profile)
    seed = _resolve_seed(args.seed)
    params = _protocol_params(args, source, profile, seed)
    if args.protocol == "bbm92":
        result = run_bbm92(params)
    else:
        result = run_bb84(params, heralded_alice=(args.protocol == "bb84-heralded"))
    lines = [
        f"protocol={args.protocol}",
        f"gates={params.n_gates}",
        f"seed={seed}",
        f"coincidences={result.coincidences}",
        f"sifted_length={result.sifted_length}",
        f"qber={result.qber:.6f}",
        f"basis_balance_alice={result.basis_balance_alice:.6f}",
        f"basis_balance_bob={result.basis_balance_bob:.6f}",
        f"sift_fraction={result.sift_fraction:.6f}",
        f"pair_gates={result.pair_gates}",
    ]
    text = "\n".join(lines) + "\n"
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
        manifest = RunManifest(
            subcommand="protocol",
            argv=(
                ["protocol", "--protocol", args.protocol]
                + _source_argv(args, source)
                + [
                    "--gates", str(args.gates),
                    "--t-alice", repr(args.t_alice),
                    "--t-bob", repr(args.t_bob),
                    "--error", repr(args.error),
                    "--slots-per-gate", str(args.slots_per_gate),
                    "--dark-prob", repr(args.dark_prob),
                    "--profile", args.profile,
                    "--k-bootstrap", str(args.k_bootstrap),
                    "--seed", str(seed),
                    "--out", str(args.out),
                ]
            ),
            parameters={
                "protocol": args.protocol,
                "distribution": source.distribution.value,
                "mu": source.mu,
                "eta": source.eta,
                "gates": args.gates,
                "t_alice": args.t_alice,
                "t_bob": args.t_bob,
                "error": args.error,
                "slots_per_gate": args.slots_per_gate,
                "dark_prob": args.dark_prob,
                "profile": args.profile,
                "k_bootstrap": args.k_bootstrap,
            },
            outputs=[str(args.out)],
            generator=_generator_info(seed),
            conventions=dict(_CONVENTIONS),
        )
        write_manifest(manifest, args.out)
    return 0


def cmd_eve(args) -> int:
    source = _source_from_args(args)
    profile = _profile_from_spec(args.profile)
    seed = _resolve_seed(args.seed)
    try:
        r_values = [int(v) for v in args.r_values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--r-values must be a comma-separated list of integers, got {args.r_values!r}")
    if not r_values:
        raise UsageError("--r-values must name at least one gate width")
    rows = []
    for r in r_values:
        clock = ClockConfig(mode=ClockMode.GATED, slots_per_gate=r, dark_prob=args.dark_prob)
        params = ProtocolParams(
            pair_source=source,
            clock_alice=clock,
            clock_bob=clock,
            profile=profile,
            n_gates=1,
            seed=seed,
        )
        rows.append((r, eve_qnd_advantage(params, args.events)))
    text = "slots_per_gate,advantage\n" + "".join(f"{r},{adv:.6f}\n" for r, adv in rows)
    print(text, end="")
    if args.out:
        Path(args.out).write_text(text)
        manifest = RunManifest(
            subcommand="eve",
            argv=(
                ["eve"]
                + _source_argv(args, source)
                + [
                    "--r-values", args.r_values,
                    "--profile", args.profile,
                    "--dark-prob", repr(args.dark_prob),
                    "--events", str(args.events),
                    "--seed", str(seed),
                    "--out", str(args.out),
                ]
            ),
            parameters={
                "distribution": source.distribution.value,
                "mu": source.mu,
                "eta": source.eta,
                "r_values": r_values,
                "profile": args.profile,
                "dark_prob": args.dark_prob,
                "events": args.events,
            },
            outputs=[str(args.out)],
            generator=_generator_info(seed),
        )
        write_manifest(manifest, args.out)
    return 0


def cmd_replay(args) -> int:
    manifest = read_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    argv = list(manifest.argv)
    for output in manifest.outputs:
        replacement = str(out_dir / Path(output).name)
        argv = [replacement if item == output else item for item in argv]
    return main(argv)


def build_parser() -> _Parser:
    parser = _Parser(prog="tickrng", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("simulate", help="simulate a detector event stream")
    _add_source_args(p)
    p.add_argument("--mode", choices=["free", "gated"], default="free")
    p.add_argument("--slots-per-gate", type=int, default=1)
    p.add_argument("--profile", default="uniform", help="uniform | fixed:K | weighted:w1,w2,...")
    p.add_argument("--dark-prob", type=float, default=0.0)
    p.add_argument("--dead-slots", type=int, default=0)
    p.add_argument("--events", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=EVENT_FORMATS, default="ascii")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extract", help="extract bits from an event stream")
    p.add_argument("--events", required=True)
    p.add_argument("--events-format", choices=EVENT_FORMATS, default="ascii")
    p.add_argument("--modulus", choices=[m.value for m in Modulus], default="mod2")
    p.add_argument("--include-first", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--debias", action="store_true")
    p.add_argument("--bits-format", choices=BIT_FORMATS, default="ascii01")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("bias", help="analytic parity split, optionally vs Monte Carlo")
    _add_source_args(p)
    p.add_argument("--mc-events", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bias)

    p = sub.add_parser("test", help="run the statistical battery on a bit stream")
    p.add_argument("--bits", required=True)
    p.add_argument("--bits-format", choices=BIT_FORMATS, default="ascii01")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--run-len", type=int, default=1_000_000)
    p.add_argument("--out", default=None, help="write the CSV report here")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("protocol", help="run a QKD protocol round")
    p.add_argument("--protocol", choices=["bbm92", "bb84", "bb84-heralded"], default="bbm92")
    _add_source_args(p)
    p.add_argument("--gates", type=int, required=True)
    p.add_argument("--t-alice", type=float, default=1.0)
    p.add_argument("--t-bob", type=float, default=1.0)
    p.add_argument("--error", type=float, default=0.0)
    p.add_argument("--slots-per-gate", type=int, default=2)
    p.add_argument("--dark-prob", type=float, default=0.0)
    p.add_argument("--profile", default="uniform")
    p.add_argument("--k-bootstrap", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_protocol)

    p = sub.add_parser("eve", help="timing-adversary advantage for several gate widths")
    _add_source_args(p)
    p.add_argument("--r-values", default="1,2", help="comma-separated slots-per-gate values")
    p.add_argument("--profile", default="uniform")
    p.add_argument("--dark-prob", type=float, default=0.0)
    p.add_argument("--events", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eve)

    p = sub.add_parser("replay", help="re-run a manifest, writing outputs to a new directory")
    p.add_argument("manifest")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except GuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    raise SystemExit(main())
