"""``gmult`` command line.

Exit codes: 0 when the verdict is ``pass``, 1 for any other verdict
(failed check, singular multiplier, unmet condition), 2 for input errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from gmult import dualizer, gframe, multiplier, perturb
from gmult import symbol as sym
from gmult.errors import (
    ConditionNotMetError,
    GMultError,
    InvalidInputError,
    PerturbationTooLargeError,
    SingularFrameError,
    SingularOperatorError,
)
from gmult.instance import (
    Instance,
    InstanceError,
    canonical_json,
    digest,
    emit_instance,
    encode_frame,
    load_instance,
)
from gmult.opspace import SpaceLayout, cond, get_tolerances, op_norm, use_tolerances
from gmult.verify import random_instance, run_invariants

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class _Report:
    def __init__(self, command, input_digest, seed):
        self.command = command
        self.input_digest = input_digest
        self.seed = seed
        self.checks = []
        self.data = {}
        self.verdict = None

    def check(self, name, measured, bound, passed=None, kind="le"):
        if passed is None:
            passed = measured <= bound if kind == "le" else measured >= bound
        self.checks.append({"name": name, "measured": measured, "bound": bound, "pass": bool(passed)})

    def finish(self):
        if self.verdict is None:
            self.verdict = "pass" if all(c["pass"] for c in self.checks) else "fail"
        tol = get_tolerances()
        return {
            "command": self.command,
            "input_digest": self.input_digest,
            "seed": self.seed,
            "tolerances": {"rank": tol.rank, "invertibility": tol.invertibility},
            "checks": self.checks,
            "data": self.data,
            "verdict": self.verdict,
        }


def _seed(args, inst: Instance | None) -> int:
    if args.seed is not None:
        return args.seed
    if inst is not None and inst.seed is not None:
        return inst.seed
    return 0


def _symbol_or_identity(inst: Instance):
    return inst.symbol if inst.symbol is not None else sym.Symbol.identity(inst.layout)


def cmd_analyze(inst: Instance, rep: _Report, args):
    f = inst.frame(args.frame)
    fb = gframe.frame_bounds(f)
    rep.data.update(
        frame=args.frame,
        lower=fb.lower,
        upper=fb.upper,
        excess=gframe.excess(f),
        classification=fb.classification,
    )
    if not fb.is_frame:
        rep.verdict = "not-a-g-frame"
        return
    kappa = fb.ratio
    can = gframe.canonical_dual(f)
    residual = op_norm(f.synthesis @ can.analysis - np.eye(f.n))
    rep.data["reconstruction_residual"] = residual
    rep.check("reconstruction", residual, 1e-9 * kappa)
    cb = gframe.frame_bounds(can)
    rep.check(
        "canonical_dual_bounds",
        max(abs(cb.lower * fb.upper - 1), abs(cb.upper * fb.lower - 1)),
        1e-9,
    )


def cmd_multiplier(inst: Instance, rep: _Report, args):
    lam, gam = inst.frame("Lambda"), inst.frame("Gamma")
    u = inst.require_symbol()
    r = multiplier.assemble(lam, u, gam)
    rep.data.update(
        M=r.M,
        singular_values=r.singular_values,
        invertible=r.invertible,
        cond=r.cond,
    )
    rep.check("assembly_consistency", r.assembly_residual, 1e-12)
    nc = multiplier.necessary_conditions(lam, u, gam, r)
    rep.data["necessary_conditions"] = {
        "Lambda": nc.lambda_lower,
        "Gamma": nc.gamma_lower,
        "UGamma": nc.u_gamma_lower,
        "UstarLambda": nc.u_star_lambda_lower,
    }
    rep.check("necessary_conditions", float(nc.consistent), 1.0, nc.consistent)
    if r.lower_bracket is not None:
        br = multiplier.norm_bracket(lam, u, gam)
        rep.data["norm_bracket"] = [br.lower, br.upper]
        rep.check("norm_bracket", br.norm, br.upper + 1e-9, br.holds(1e-9))
    if not r.invertible:
        rep.verdict = "singular"


def cmd_invert(inst: Instance, rep: _Report, args):
    lam, gam = inst.frame("Lambda"), inst.frame("Gamma")
    u = inst.require_symbol()
    seed = _seed(args, inst)
    r = multiplier.assemble(lam, u, gam)
    if not r.invertible or not sym.is_semi_normalized(u).ok:
        rep.data.update(invertible=False, singular_values=r.singular_values)
        rep.verdict = "singular"
        return
    d = dualizer.canonical_inverse_diagnostics(lam, u, gam, seed=seed)
    kappa_sg = gframe.frame_bounds(gam).ratio
    rep.data.update(
        invertible=True,
        M_inv=d.m_inv,
        gamma_dagger=encode_frame(d.gamma_dagger),
        psi_norm=d.psi_norm,
        canonical_flag=d.canonical_flag,
        upper_opt_dagger=d.upper_opt_dagger,
        inv_lower_gamma=d.inv_lower_gamma,
    )
    rep.check("duality", d.duality_residual, 1e-8 * r.cond * kappa_sg)
    rep.check("representation", d.representation_residual, 1e-8 * r.cond * max(1.0, op_norm(d.m_inv)))
    rep.check(
        "decomposition",
        d.decomposition_residual,
        1e-9 * max(1.0, op_norm(gam.synthesis) * op_norm(d.gamma_dagger.analysis)),
    )
    rep.check("sandwich", d.upper_opt_dagger, d.sandwich_upper + 1e-9, d.sandwich_holds())
    margins = dualizer.uniqueness_margins(lam, u, gam, d, trials=args.trials, seed=seed)
    rep.data["uniqueness_competitors"] = int(margins.size)
    rep.check(
        "uniqueness",
        float(margins.min()) if margins.size else float("inf"),
        dualizer.EXPOSURE_MARGIN,
        bool(np.all(margins > dualizer.EXPOSURE_MARGIN)),
    )
    if r.lower_bracket is not None:
        r_inv = multiplier.riesz_inverse(lam, u, gam)
        rep.data["riesz_inverse"] = r_inv
        rep.check("riesz_inverse", op_norm(r_inv @ r.M - np.eye(lam.n)), 1e-8 * r.cond)


def cmd_construct(inst: Instance, rep: _Report, args):
    u = inst.require_symbol()
    if args.mode in ("gamma", "gamma-minimal"):
        lam = inst.frame("Lambda")
        t = inst.operator("T")
        if args.mode == "gamma":
            phi = inst.operator("Phi", np.zeros((lam.K, lam.n)))
            new = multiplier.construct_gamma(lam, u, t, phi)
        else:
            new = multiplier.minimal_norm_gamma(lam, u, t)
            rep.data["minimal_norm_ratio"] = multiplier.minimal_norm_ratio(lam, u, t)
        target, name, pair = t, "Gamma", (lam, new)
    else:
        gam = inst.frame("Gamma")
        t1 = inst.operator("T1")
        t2 = inst.operator("T2", np.eye(gam.n))
        psi = inst.operator("Psi", np.zeros((gam.n, gam.K)))
        new = multiplier.construct_lambda(gam, u, psi, t1, t2)
        target, name, pair = t1, "Lambda", (new, gam)
    m = multiplier.multiplier_matrix(pair[0], u, pair[1])
    residual = op_norm(m - target) / max(op_norm(target), 1e-300)
    scale = cond(pair[0 if name == "Gamma" else 1].synthesis) * cond(sym.as_operator(u)) * cond(target)
    rep.data.update(mode=args.mode, name=name, frame=encode_frame(new), multiplier_residual=residual)
    rep.check("multiplier_residual", residual, 1e-8 * scale)
    if args.emit:
        inst.frames[name] = new
        Path(args.emit).write_text(canonical_json(emit_instance(inst)) + "\n")


def cmd_perturb(inst: Instance, rep: _Report, args):
    lam = inst.frame("Lambda")
    u = inst.require_symbol()
    mode = args.mode or ("transfer" if "LambdaPrime" in inst.frames else "sufficient")
    rep.data["mode"] = mode
    if mode == "transfer":
        gam, lp = inst.frame("Gamma"), inst.frame("LambdaPrime")
        try:
            pr = perturb.transfer_gamma(lam, u, gam, lp)
        except PerturbationTooLargeError as exc:
            rep.data.update(mu=exc.mu, limit=exc.limit)
            rep.verdict = "perturbation-too-large"
            return
        m = multiplier.multiplier_matrix(lam, u, gam)
        rep.data.update(
            mu=pr.mu,
            lambda_const=pr.lambda_const,
            gamma_prime=encode_frame(pr.gamma_prime),
            multiplier_residual=pr.multiplier_residual,
            transfer_distance=pr.transfer_distance,
        )
        rep.check(
            "multiplier_preserved",
            pr.multiplier_residual,
            1e-8 * max(1.0, op_norm(m)) * gframe.frame_bounds(lp).ratio,
        )
        rep.check("transfer_distance", pr.transfer_distance, pr.bound + 1e-10)
        rep.check("adjoint_identity", pr.identity_residual, 1e-9 * max(1.0, pr.transfer_distance))
        rep.check("perturbed_lower_bound", pr.measured_lower, pr.guaranteed_lower - 1e-9, kind="ge")
        ba = perturb.best_approx_check(lam, u, gam, lp, pr, trials=args.trials, seed=_seed(args, inst))
        rep.data["best_approx_margin"] = ba.margin
        rep.data["best_approx_asserted"] = ba.asserted
        if ba.asserted:
            rep.check("best_approximation", ba.margin, -1e-10, kind="ge")
    else:
        gam = inst.frame("Gamma")
        ld = inst.frames.get("LambdaDual") or gframe.canonical_dual(lam)
        try:
            sr = perturb.sufficient_condition(lam, ld, gam, u)
        except ConditionNotMetError as exc:
            rep.data.update(lambda_sum=exc.report.lambda_sum, mu_sum=exc.report.mu_sum)
            rep.verdict = "condition-not-met"
            return
        rep.data.update(
            lambda_sum=sr.lambda_sum,
            mu_sum=sr.mu_sum,
            inv_norm_bracket=[sr.inv_norm_lo, sr.inv_norm_hi],
            gamma_bounds_claimed=[sr.gamma_lower, sr.gamma_upper],
            gamma_bounds_measured=[sr.measured_gamma_lower, sr.measured_gamma_upper],
            singular_values=sr.singular_values,
        )
        for name, ok in sr.checks().items():
            rep.check(name, float(ok), 1.0, ok)


def cmd_verify(inst: Instance | None, rep: _Report, args):
    seed = _seed(args, inst)
    if inst is not None:
        lam = inst.frame("Lambda")
        gam = inst.frames.get("Gamma", lam)
        u = _symbol_or_identity(inst)
        checks = run_invariants(lam, gam, u, seed=seed, trials=args.trials)
        rep.checks.extend(c.as_dict() for c in checks)
        return
    rng = np.random.default_rng(seed)
    runs, failures = {}, {}
    passed = 0
    for i in range(args.random):
        lam, gam, u = random_instance(rng)
        checks = run_invariants(lam, gam, u, seed=seed + i, trials=args.trials)
        for c in checks:
            runs[c.name] = runs.get(c.name, 0) + 1
            if not c.passed:
                failures.setdefault(c.name, []).append(i)
        passed += all(c.passed for c in checks)
    # per invariant: measured = number of failing instances, bound = 0
    for name in sorted(runs):
        count = len(failures.get(name, []))
        rep.check(name, count, 0)
    rep.data["tally"] = {"instances": args.random, "passed": passed, "failed": args.random - passed}
    rep.data["runs"] = runs
    rep.data["failures"] = failures


def cmd_gen(args) -> Instance:
    sizes = [int(k) for k in args.blocks.split(",")]
    layout = SpaceLayout(sizes)
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    seeds = [int(s) for s in rng.integers(0, 2**31, size=3)]
    lam = gframe.random_gframe(args.n, layout, args.cap, seeds[0])
    gam = gframe.random_gframe(args.n, layout, args.cap, seeds[1])
    u = sym.random_symbol(layout, seeds[2], kind=args.symbol)
    form = "weights" if args.symbol == "weights" else "blocks"
    return Instance(args.n, tuple(sizes), {"Lambda": lam, "Gamma": gam}, u, form, {}, args.seed)


COMMANDS = {
    "analyze": cmd_analyze,
    "multiplier": cmd_multiplier,
    "invert": cmd_invert,
    "construct": cmd_construct,
    "perturb": cmd_perturb,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for randomized checks")
    common.add_argument("--tol", type=float, default=None, help="rank and invertibility threshold")
    common.add_argument("--json", action="store_true", help="print the JSON report")
    common.add_argument("--out", default=None, help="write the JSON report (or generated instance) here")

    p = argparse.ArgumentParser(prog="gmult", description="Generalized g-frame multiplier toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[common], help="frame bounds, excess and classification")
    a.add_argument("file")
    a.add_argument("--frame", default="Lambda")

    m = sub.add_parser("multiplier", parents=[common], help="assemble and diagnose M(Lambda, U, Gamma)")
    m.add_argument("file")

    i = sub.add_parser("invert", parents=[common], help="represent the inverse as a multiplier")
    i.add_argument("file")
    i.add_argument("--trials", type=int, default=50)

    c = sub.add_parser("construct", parents=[common], help="build Gamma or Lambda for a target multiplier")
    c.add_argument("file")
    c.add_argument("--mode", choices=["gamma", "gamma-minimal", "lambda"], default="gamma")
    c.add_argument("--emit", default=None, help="write the instance with the constructed frame added")

    pt = sub.add_parser("perturb", parents=[common], help="multiplier-preserving transfer or sufficiency test")
    pt.add_argument("file")
    pt.add_argument("--mode", choices=["transfer", "sufficient"], default=None)
    pt.add_argument("--trials", type=int, default=200)

    g = sub.add_parser("gen", parents=[common], help="generate a random instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--blocks", required=True, help="comma separated block sizes")
    g.add_argument("--cap", type=float, default=100.0, help="cap on B/A")
    g.add_argument("--symbol", choices=["general", "weights", "unitary", "psd"], default="general")

    v = sub.add_parser("verify", parents=[common], help="run the invariant suite")
    v.add_argument("file", nargs="?")
    v.add_argument("--random", type=int, default=None, metavar="COUNT")
    v.add_argument("--trials", type=int, default=10)
    return p


def _print_human(report: dict, stream):
    print(f"{report['command']}: {report['verdict']}", file=stream)
    for c in report["checks"]:
        status = "PASS" if c["pass"] else "FAIL"
        print(f"  {status} {c['name']}: measured {c['measured']} bound {c['bound']}", file=stream)
    for key in sorted(report["data"]):
        value = report["data"][key]
        if isinstance(value, (int, float, str, bool)):
            print(f"  {key} = {value}", file=stream)


def _run(args) -> int:
    if args.command == "gen":
        inst = cmd_gen(args)
        text = canonical_json(emit_instance(inst)) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return EXIT_OK

    inst = None
    if args.command == "verify" and args.file is None:
        if args.random is None:
            raise InstanceError("verify needs an instance file or --random COUNT")
        input_digest = digest({"random": args.random, "seed": _seed(args, None)})
    else:
        try:
            text = Path(args.file).read_text()
        except OSError as exc:
            raise InstanceError(f"{args.file}: {exc.strerror}") from None
        inst = load_instance(text)
        input_digest = digest(emit_instance(inst))

    overrides = dict(inst.tolerances) if inst is not None else {}
    if args.tol is not None:
        overrides = {"rank": args.tol, "invertibility": args.tol}
    with use_tolerances(**overrides):
        rep = _Report(args.command, input_digest, _seed(args, inst))
        try:
            COMMANDS[args.command](inst, rep, args)
        except (SingularOperatorError, SingularFrameError) as exc:
            rep.data["error"] = str(exc)
            rep.verdict = "singular"
        report = rep.finish()

    text = canonical_json(report) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    if args.json:
        sys.stdout.write(text)
    else:
        _print_human(report, sys.stdout)
    return EXIT_OK if report["verdict"] == "pass" else EXIT_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (InvalidInputError, GMultError) as exc:
        print(f"gmult: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
