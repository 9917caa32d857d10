"""Command-line interface.

Exit codes: 0 success, 1 domain error (ill-moded policy, missing token,
inequivalent logs, ...), 2 usage error.
"""

import argparse
import csv
import io
import os
import statistics
import sys
import time

from . import schemes
from .audit import Trace, ereduce, normalize
from .crypto import KeySource
from .crypto.akh import akh_adjust
from .evalkit import GenSpec, gen_log, log_equivalent
from .logstore import read_log, serialized_size, write_log
from .modecheck import (arities, is_well_moded, parse_delta, parse_modes,
                        render_delta)
from .policy import (GLBA_EXAMPLE, GLBA_MODES, constant_values,
                     displacements_of, parse_policy, render_policy)


class UsageError(Exception):
    pass


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _modes(path):
    return parse_modes(_read(path))


def _policy(path, modes=None):
    return parse_policy(_read(path), arities(modes) if modes else None)


def _literal_list(text):
    out = []
    for item in (text or "").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            out.append(int(item))
        except ValueError:
            out.append(item.strip('"'))
    return out


# ---------------------------------------------------------------- commands

def cmd_modecheck(args):
    modes = _modes(args.modes)
    ok, result = is_well_moded(_policy(args.policy, modes), modes)
    if not ok:
        print(f"not well-moded: {result}", file=sys.stderr)
        return 1
    sys.stdout.write(render_delta(result))
    return 0


def cmd_keygen(args):
    modes = _modes(args.schema)
    delta = parse_delta(_read(args.delta)) if args.delta else frozenset()
    src = KeySource(args.seed)
    if args.scheme == "det":
        keys = schemes.keygen_det(modes, delta, src)
    else:
        keys = schemes.keygen_kh(modes, delta, src)
    _write(args.out, schemes.render_keys(keys))
    return 0


def _disps(args):
    if getattr(args, "disps", None):
        return set(_literal_list(args.disps)) | {0}
    if getattr(args, "policy", None):
        return displacements_of(_policy(args.policy))
    return {0}


def cmd_encrypt_log(args):
    keys = schemes.parse_keys(_read(args.keys))
    scheme = "kh" if isinstance(keys, schemes.KhKeySet) else "det"
    if args.scheme and args.scheme != scheme:
        raise UsageError(f"key file holds {scheme} keys, not {args.scheme}")
    modes = _modes(args.modes) if args.modes else None
    log = read_log(args.log, modes)
    elog = schemes.encrypt_log(scheme, log, keys, _disps(args), args.variant)
    write_log(elog, args.out)
    return 0


def cmd_encrypt_policy(args):
    keys = schemes.parse_keys(_read(args.keys))
    scheme = "kh" if isinstance(keys, schemes.KhKeySet) else "det"
    enc = schemes.encrypt_policy_constants(scheme, _policy(args.policy), keys)
    _write(args.out, render_policy(enc))
    return 0


def cmd_gen_tokens(args):
    keys = schemes.parse_keys(_read(args.keys))
    if not isinstance(keys, schemes.KhKeySet):
        raise UsageError("tokens are only defined for KH key sets")
    tokens = schemes.generate_token(parse_delta(_read(args.delta)), keys)
    _write(args.out, schemes.render_tokens(tokens))
    return 0


def cmd_audit(args):
    if args.scheme == "kh" and not args.tokens:
        raise UsageError("--scheme kh requires --tokens")
    if args.scheme == "det" and args.tokens:
        raise UsageError("--scheme det does not take --tokens")
    modes = _modes(args.modes) if args.modes else None
    log = read_log(args.log, modes)
    if log.kind != args.scheme:
        raise UsageError(f"log directory holds a {log.kind} log, not {args.scheme}")
    tokens = schemes.parse_tokens(_read(args.tokens)) if args.tokens else None
    policy = _policy(args.policy)
    trace = Trace() if args.trace_queries else None
    residual = ereduce(log, policy, tokens, modes=modes, trace=trace)
    _write(args.out, render_policy(residual))
    if trace is not None:
        text = "".join(line + "\n" for line in trace.lines())
        if args.trace_out:
            _write(args.trace_out, text)
        else:
            sys.stderr.write(text)
    return 0


def cmd_decrypt_result(args):
    keys = schemes.parse_keys(_read(args.keys))
    residual = parse_policy(_read(args.residual))
    _write(args.out, render_policy(schemes.decrypt_policy_constants(residual, keys)))
    return 0


def cmd_gen_log(args):
    modes = _modes(args.modes)
    policy = _policy(args.policy, modes)
    spec = GenSpec(policy, modes, args.actions, args.violations, args.seed,
                   frozenset(_literal_list(args.incomplete)), args.reuse, args.noise)
    write_log(gen_log(spec), args.out)
    return 0


def cmd_check_equiv(args):
    modes = _modes(args.modes)
    l1, l2 = read_log(args.log1, modes), read_log(args.log2, modes)
    delta = parse_delta(_read(args.delta)) if args.delta else frozenset()
    res = log_equivalent(l1, l2, delta, _literal_list(args.consts),
                         set(_literal_list(args.disps)) | {0}, modes)
    if res.ok:
        print("equivalent")
        return 0
    print(f"not equivalent: {res.reason}")
    return 1


# ------------------------------------------------------------------- bench

def _fresh_indexes(log):
    for t in log:
        t._indexes = {}
        t._rowset = None


def bench(policy, modes, action_counts, scheme_names, repeats=3, seed=0,
          incomplete=frozenset(), violations=0, include_encryption=False, verify=False):
    """Time the audit phase per scheme; returns a list of row dicts."""
    ok, delta = is_well_moded(policy, modes)
    if not ok:
        raise ValueError(f"policy is not well-moded: {delta}")
    disps = displacements_of(policy)
    rows = []
    for n in action_counts:
        log = gen_log(GenSpec(policy, modes, n, violations, seed + n, frozenset(incomplete)))
        reference = None
        for name in scheme_names:
            enc_ms = 0.0
            if name == "plain":
                target, pol, tokens, scheme = log, policy, None, None
            else:
                cls = schemes.DetScheme if name == "det" else schemes.KhScheme
                t0 = time.perf_counter()
                scheme = cls(modes, delta, seed=seed)
                target = scheme.encrypt_log(log, disps)
                pol = scheme.encrypt_policy(policy)
                tokens = scheme.tokens
                enc_ms = (time.perf_counter() - t0) * 1000
            times = []
            residual = None
            for _ in range(repeats):
                _fresh_indexes(target)
                akh_adjust.cache_clear()
                t0 = time.perf_counter()
                residual = ereduce(target, pol, tokens, modes=modes)
                times.append((time.perf_counter() - t0) * 1000)
            total = statistics.median(times)
            if verify:
                plain = residual if scheme is None else scheme.decrypt(residual)
                if reference is None:
                    reference = normalize(plain)
                elif normalize(plain) != reference:
                    raise RuntimeError(f"{name} residual differs at {n} actions")
            row = {"scheme": name, "actions": n, "total_ms": round(total, 3),
                   "per_action_ms": round(total / n, 5),
                   "log_bytes": serialized_size(target)}
            if include_encryption:
                row["encrypt_ms"] = round(enc_ms, 3)
            rows.append(row)
    return rows


def bench_csv(rows):
    buf = io.StringIO()
    fields = ["scheme", "actions", "total_ms", "per_action_ms", "log_bytes"]
    if rows and "encrypt_ms" in rows[0]:
        fields.append("encrypt_ms")
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_bench(args):
    if args.threads != 1:
        print("note: audits run single-threaded; --threads is accepted for "
              "interface compatibility", file=sys.stderr)
    modes = _modes(args.modes) if args.modes else parse_modes(GLBA_MODES)
    policy = _policy(args.policy, modes) if args.policy else parse_policy(GLBA_EXAMPLE, arities(modes))
    counts = [int(x) for x in args.actions.split(",") if x.strip()]
    names = [x.strip() for x in args.schemes.split(",") if x.strip()]
    for nm in names:
        if nm not in ("plain", "det", "kh"):
            raise UsageError(f"unknown scheme {nm!r}")
    rows = bench(policy, modes, counts, names, args.repeats, args.seed,
                 frozenset(_literal_list(args.incomplete)), args.violations,
                 args.include_encryption, args.verify)
    _write(args.out, bench_csv(rows))
    return 0


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="encaudit", description="Audit privacy policies over encrypted logs.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("modecheck", help="mode-check a policy and print its equality scheme")
    s.add_argument("policy")
    s.add_argument("modes")
    s.set_defaults(fn=cmd_modecheck)

    s = sub.add_parser("keygen", help="generate a key set")
    s.add_argument("--scheme", choices=("det", "kh"), required=True)
    s.add_argument("--schema", required=True, help="mode declaration file")
    s.add_argument("--delta", help="equality scheme file (modecheck output)")
    s.add_argument("--seed")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_keygen)

    s = sub.add_parser("encrypt-log", help="encrypt a log directory")
    s.add_argument("--scheme", choices=("det", "kh"))
    s.add_argument("--keys", required=True)
    s.add_argument("--log", required=True)
    s.add_argument("--modes")
    s.add_argument("--policy", help="policy whose displacements to register")
    s.add_argument("--disps", help="comma-separated displacements")
    s.add_argument("--variant", choices=("tree", "static"), default="tree")
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_encrypt_log)

    s = sub.add_parser("encrypt-policy", help="encrypt the constants of a policy")
    s.add_argument("--keys", required=True)
    s.add_argument("--policy", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_encrypt_policy)

    s = sub.add_parser("gen-tokens", help="issue KH tokens for an equality scheme")
    s.add_argument("--keys", required=True)
    s.add_argument("--delta", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_gen_tokens)

    s = sub.add_parser("audit", help="run ereduce on an encrypted log")
    s.add_argument("--scheme", choices=("det", "kh"), required=True)
    s.add_argument("--log", required=True)
    s.add_argument("--policy", required=True)
    s.add_argument("--tokens")
    s.add_argument("--modes", help="mode file, used to index input columns")
    s.add_argument("--out", required=True)
    s.add_argument("--trace-queries", action="store_true")
    s.add_argument("--trace-out", help="write the query trace here instead of stderr")
    s.set_defaults(fn=cmd_audit)

    s = sub.add_parser("decrypt-result", help="decrypt the constants of a residual")
    s.add_argument("--keys", required=True)
    s.add_argument("--residual", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_decrypt_result)

    s = sub.add_parser("gen-log", help="generate a synthetic plaintext log")
    s.add_argument("--policy", required=True)
    s.add_argument("--modes", required=True)
    s.add_argument("--actions", type=int, required=True)
    s.add_argument("--violations", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--incomplete", default="", help="comma-separated incomplete tables")
    s.add_argument("--reuse", type=float, default=0.0)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--out", required=True)
    s.set_defaults(fn=cmd_gen_log)

    s = sub.add_parser("check-equiv", help="check plaintext log equivalence")
    s.add_argument("log1")
    s.add_argument("log2")
    s.add_argument("--modes", required=True)
    s.add_argument("--delta")
    s.add_argument("--consts", default="")
    s.add_argument("--disps", default="0")
    s.set_defaults(fn=cmd_check_equiv)

    s = sub.add_parser("bench", help="benchmark audit time per scheme (CSV)")
    s.add_argument("--actions", default="100,200,400")
    s.add_argument("--schemes", default="plain,det,kh")
    s.add_argument("--policy")
    s.add_argument("--modes")
    s.add_argument("--repeats", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--violations", type=int, default=0)
    s.add_argument("--incomplete", default="")
    s.add_argument("--include-encryption", action="store_true")
    s.add_argument("--verify", action="store_true")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(fn=cmd_bench)
    return p


def run_command(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "fn", None):
            raise UsageError("a subcommand is required")
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, LookupError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
