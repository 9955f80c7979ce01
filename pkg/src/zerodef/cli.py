"""Command-line front end.

Exit codes: 0 success, 2 parse error, 3 hypothesis failure, 4 numerical
failure (including violated runtime invariants), 5 infeasible request.
Machine output via --json; every output file embeds a reproducibility
manifest (command, input hash, seed, config echo, version).  The sampling
worker pool is capped by the ZERODEF_THREADS environment variable.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import click
import numpy as np

from . import __version__
from .errors import (
    DomainError,
    InfeasibleError,
    NumericalError,
    ParseError,
    StructuralError,
    ValidationError,
    ZerodefError,
)
from .network import support_set, validate
from .parser import parse, serialize
from .stoichiometry import stoichiometric_bases
from .equilibria import (
    base_equilibrium,
    class_equilibrium,
    class_has_boundary_equilibria,
    homogeneity_check,
)
from .lyapunov import certify, dissipation_margin_batch
from .control import make_feedback, select_actuators
from .simulate import SimConfig, integrate, perturbed_within_margin
from .models import McKeithanParams, mckeithan

EXIT_PARSE = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERIC = 4
EXIT_INFEASIBLE = 5


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guard(fn):
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ParseError as e:
            _fail(EXIT_PARSE, str(e))
        except ValidationError as e:
            _fail(EXIT_HYPOTHESIS, str(e))
        except (InfeasibleError,) as e:
            _fail(EXIT_INFEASIBLE, str(e))
        except (NumericalError,) as e:
            _fail(EXIT_NUMERIC, str(e))
        except (DomainError, StructuralError, ZerodefError) as e:
            _fail(EXIT_INFEASIBLE, str(e))

    wrapper.__name__ = fn.__name__
    return wrapper


def _load(path: str, check: bool = True):
    try:
        text = open(path).read()
    except OSError as e:
        raise ParseError(str(e)) from None
    return parse(text, check=check), text


def _manifest(command: str, text: str, seed=None, config=None) -> dict:
    return {
        "command": command,
        "input_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "seed": seed,
        "config": config or {},
        "version": __version__,
    }


def _parse_state(net, spec: str, bases=None) -> np.ndarray:
    """A comma-separated state vector, or complement coordinates (advanced)."""
    try:
        vals = [float(v) for v in spec.replace(";", ",").split(",") if v.strip() != ""]
    except ValueError:
        raise DomainError(f"cannot parse state {spec!r}") from None
    if len(vals) == net.n:
        return np.array(vals)
    if bases is None:
        bases = stoichiometric_bases(net)
    if len(vals) == bases.Dperp.shape[1]:
        return bases.Dperp @ np.array(vals)
    raise DomainError(
        f"state needs {net.n} components "
        f"(or {bases.Dperp.shape[1]} complement coordinates)"
    )


def _fmt_vec(x) -> str:
    return " ".join(format(v, ".12g") for v in np.asarray(x))


@click.group()
@click.version_option(__version__)
def main():
    """Analysis, equilibria, certificates, and simulation for .crn networks."""


@main.command()
@click.argument("crn", type=click.Path(exists=True, dir_okay=False))
@click.option("--class", "class_spec", default=None, help="state whose class to examine")
@click.option("--json", "as_json", is_flag=True)
@_guard
def analyze(crn, class_spec, as_json):
    """Hypothesis checks, subspace dimensions, supports, boundary equilibria."""
    net, text = _load(crn, check=False)
    report = validate(net)
    out = {
        "manifest": _manifest("analyze", text),
        "species": list(net.species),
        "n": net.n,
        "m": net.m,
        "checks": {c.name: {"passed": c.passed, "detail": c.detail} for c in report.checks},
        "all_pass": report.ok,
    }
    if report.ok:
        bases = stoichiometric_bases(net)
        out["dim_difference_space"] = bases.D.shape[1]
        out["dim_complement"] = bases.Dperp.shape[1]
        out["supports"] = {
            str(j + 1): sorted(net.species[k] for k in support_set(net, j))
            for j in range(net.m)
        }
        out["homogeneous_weighting"] = homogeneity_check(net)
        if class_spec is not None:
            from .stoichiometry import ClassId

            p = _parse_state(net, class_spec, bases)
            coords = tuple(float(v) for v in bases.Dperp.T @ p)
            cls = ClassId(coords, p)
            answer, witness = class_has_boundary_equilibria(net, cls, bases)
            out["class"] = {
                "representative": list(map(float, p)),
                "boundary_equilibria": answer,
                "witness": None if witness is None else list(map(float, witness)),
            }
    if as_json:
        click.echo(json.dumps(out, sort_keys=True))
    else:
        click.echo(f"species ({net.n}): {' '.join(net.species)}")
        click.echo(f"complexes: {net.m}")
        for c in report.checks:
            status = "pass" if c.passed else "FAIL"
            click.echo(f"  {c.name}: {status}" + (f" ({c.detail})" if c.detail else ""))
        if report.ok:
            click.echo(f"difference-space dimension: {out['dim_difference_space']}")
            click.echo(f"complement dimension: {out['dim_complement']}")
            for j, names in out["supports"].items():
                click.echo(f"  support of complex {j}: {{{', '.join(names)}}}")
            click.echo(f"uniform-weighting certificate: {out['homogeneous_weighting']}")
            if class_spec is not None:
                ans = out["class"]["boundary_equilibria"]
                msg = {
                    True: "boundary equilibria present in this class",
                    False: "no boundary equilibria in this class",
                    None: "undecided (enumeration cap exceeded)",
                }[ans]
                click.echo(msg)
                if out["class"]["witness"]:
                    click.echo(f"  witness: {_fmt_vec(out['class']['witness'])}")
    if not report.ok:
        sys.exit(EXIT_HYPOTHESIS)


@main.command()
@click.argument("crn", type=click.Path(exists=True, dir_okay=False))
@click.option("--class", "class_spec", required=True, help="state identifying the class")
@click.option("--json", "as_json", is_flag=True)
@_guard
def equilibrium(crn, class_spec, as_json):
    """Unique positive equilibrium of the given class, with residual."""
    net, text = _load(crn)
    bases = stoichiometric_bases(net)
    p = _parse_state(net, class_spec, bases)
    eq = class_equilibrium(net, p, bases=bases)
    if as_json:
        click.echo(
            json.dumps(
                {
                    "manifest": _manifest("equilibrium", text),
                    "state": list(map(float, eq.x)),
                    "residual": eq.residual,
                },
                sort_keys=True,
            )
        )
    else:
        click.echo(_fmt_vec(eq.x))
        click.echo(f"residual: {eq.residual:.3e}")


@main.command()
@click.argument("crn", type=click.Path(exists=True, dir_okay=False))
@click.option("--x0", required=True, help="initial state")
@click.option("--t-end", default=100.0, show_default=True)
@click.option("--method", type=click.Choice(["adaptive", "rk4"]), default="adaptive")
@click.option("--step", default=1e-3, show_default=True, help="fixed step for rk4")
@click.option("--rtol", default=1e-8, show_default=True)
@click.option("--atol", default=1e-10, show_default=True)
@click.option("--perturb", default=None, type=float, help="margin fraction in [0,1)")
@click.option("--feedback", default=None, help="actuated species (names or indices)")
@click.option("--gains", default=None, help="one positive gain per actuator")
@click.option("--target", default=None, help="equilibrium to stabilize (default: base)")
@click.option("--out", default=None, type=click.Path(dir_okay=False), help="CSV output")
@click.option("--json-out", default=None, type=click.Path(dir_okay=False))
@_guard
def simulate(crn, x0, t_end, method, step, rtol, atol, perturb, feedback, gains,
             target, out, json_out):
    """Integrate the network with runtime invariant monitors."""
    net, text = _load(crn)
    bases = stoichiometric_bases(net)
    x_start = _parse_state(net, x0, bases)
    cfg = SimConfig(t_end=t_end, method=method, step=step, rtol=rtol, atol=atol)
    config_echo = {
        "x0": list(map(float, x_start)),
        "t_end": t_end,
        "method": method,
        "step": step,
        "rtol": rtol,
        "atol": atol,
        "perturb": perturb,
        "feedback": feedback,
        "gains": gains,
        "target": target,
    }
    manifest = _manifest("simulate", text, config=config_echo)

    law = None
    if feedback is not None:
        if perturb is not None:
            raise DomainError("feedback cannot be combined with a perturbation")
        idx = []
        for tok in feedback.split(","):
            tok = tok.strip()
            idx.append(int(tok) if tok.isdigit() else net.species_index(tok))
        gvals = (
            [float(g) for g in gains.split(",")] if gains else [1.0] * len(idx)
        )
        x_bar = (
            _parse_state(net, target, bases)
            if target
            else base_equilibrium(net, bases).x
        )
        law = make_feedback(net, x_bar, idx, gvals, bases)

    if perturb is not None:
        traj = perturbed_within_margin(net, x_start, perturb, cfg, bases)
    else:
        traj = integrate(net, x_start, cfg, feedback=law, bases=bases)

    if out:
        traj.to_csv(out, manifest=manifest)
    if json_out:
        traj.to_json(json_out, manifest=manifest)
    click.echo(f"termination: {traj.reason} after {traj.n_accepted} steps")
    click.echo(f"final state: {_fmt_vec(traj.final_state)}")
    for mon in traj.monitors:
        if mon.enabled:
            click.echo(
                f"  monitor {mon.name}: {'pass' if mon.passed else 'FAIL'}"
                f" (checked {mon.n_checked}, worst {mon.worst:.3e})"
            )
    if traj.reason == "step_failure" or traj.invariant_violated:
        sys.exit(EXIT_NUMERIC)


@main.command()
@click.argument("crn", type=click.Path(exists=True, dir_okay=False))
@click.option("--target", default=None, help="equilibrium to stabilize (default: base)")
@click.option("--json", "as_json", is_flag=True)
@_guard
def stabilize(crn, target, as_json):
    """List admissible actuator sets for globally stabilizing feedback."""
    net, text = _load(crn)
    bases = stoichiometric_bases(net)
    choices = select_actuators(net, bases)
    x_bar = (
        _parse_state(net, target, bases) if target else base_equilibrium(net, bases).x
    )
    rows = []
    for ch in choices:
        law = make_feedback(net, x_bar, ch.indices, [1.0] * len(ch.indices), bases)
        rows.append(
            {
                "species": [net.species[k] for k in ch.indices],
                "indices": list(ch.indices),
                "covering_complex": ch.covering_complex + 1,
                "gains": list(law.gains),
            }
        )
    if as_json:
        click.echo(
            json.dumps(
                {
                    "manifest": _manifest("stabilize", text),
                    "target": list(map(float, x_bar)),
                    "actuator_sets": rows,
                },
                sort_keys=True,
            )
        )
    else:
        click.echo(f"target: {_fmt_vec(x_bar)}")
        if not rows:
            click.echo("no admissible actuator set")
        for row in rows:
            click.echo(
                f"  {{{', '.join(row['species'])}}} (covers complex "
                f"{row['covering_complex']})"
            )


def _margin_worker(args):
    text, seed, count, lo, hi = args
    net = parse(text)
    rng = np.random.default_rng(seed)
    X = rng.uniform(lo, hi, size=(count, net.n))
    Z = rng.uniform(lo, hi, size=(count, net.n))
    margins = dissipation_margin_batch(net, X, Z)
    finite = margins[~np.isnan(margins)]
    return float(finite.min()) if finite.size else math.inf, int(
        (finite < -1e-9).sum()
    )


@main.command()
@click.argument("crn", type=click.Path(exists=True, dir_okay=False))
@click.option("--class", "class_spec", required=True, help="state identifying the class")
@click.option("--at", "at_spec", default=None, help="state to evaluate the margin at")
@click.option("--spot-check", default=0, type=int, help="random pairs to sample")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_guard
def margin(crn, class_spec, at_spec, spot_check, seed, as_json):
    """Certificate constants and robustness budget for a class."""
    net, text = _load(crn)
    bases = stoichiometric_bases(net)
    rep = _parse_state(net, class_spec, bases)
    at = _parse_state(net, at_spec, bases) if at_spec else None
    if at is None:
        eq = class_equilibrium(net, rep, bases=bases)
        at = eq.x
    cert = certify(net, at, class_rep=rep, bases=bases)
    out = {
        "manifest": _manifest("margin", text, seed=seed),
        "kappa": cert.kappa,
        "c0": cert.c0_at,
        "c": cert.c_at,
        "delta_S": cert.delta_S_at,
        "inequality_margin": cert.inequality_margin,
        "exp_rate": cert.exp_rate,
        "exp_radius": cert.exp_radius,
    }
    if spot_check > 0:
        workers = os.cpu_count() or 1
        env_cap = os.environ.get("ZERODEF_THREADS")
        if env_cap:
            workers = max(1, min(workers, int(env_cap)))
        # chunk layout is fixed so results are reproducible across machines
        chunks = max(1, min(16, spot_check))
        per = [spot_check // chunks + (1 if i < spot_check % chunks else 0)
               for i in range(chunks)]
        jobs = [(text, seed + i, c, 0.1, 10.0) for i, c in enumerate(per) if c > 0]
        if workers == 1:
            results = [_margin_worker(j) for j in jobs]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_margin_worker, jobs))
        out["spot_check"] = {
            "samples": spot_check,
            "min_margin": min(r[0] for r in results),
            "violations": sum(r[1] for r in results),
        }
    if as_json:
        click.echo(json.dumps(out, sort_keys=True))
    else:
        click.echo(f"kappa:   {cert.kappa:.12g}")
        click.echo(f"c0:      {cert.c0_at:.12g}")
        click.echo(f"c:       {cert.c_at:.12g}")
        click.echo(f"delta_S: {cert.delta_S_at:.12g}")
        if cert.inequality_margin is not None:
            click.echo(f"inequality margin: {cert.inequality_margin:.12g}")
        click.echo(f"exp rate: {cert.exp_rate:.6g} (radius {cert.exp_radius:.6g})")
        if spot_check > 0:
            sc = out["spot_check"]
            click.echo(
                f"spot-check: {sc['samples']} pairs, min margin "
                f"{sc['min_margin']:.3e}, violations {sc['violations']}"
            )


@main.command("mckeithan")
@click.option("--n", "--N", "nsteps", required=True, type=int, help="modification steps N")
@click.option("--k1", default=1.0, show_default=True)
@click.option("--kp", default=None, help="comma-separated forward rates (N values)")
@click.option("--km", default=None, help="comma-separated dissociation rates (N+1)")
@click.option("--random-rates", is_flag=True, help="log-uniform rates in [0.1, 10]")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("-o", "--out", default=None, type=click.Path(dir_okay=False))
@_guard
def mckeithan_cmd(nsteps, k1, kp, km, random_rates, seed, out):
    """Emit the proofreading chain with N steps as a .crn document."""
    if random_rates:
        rng = np.random.default_rng(seed)

        def draw(count):
            return tuple(float(v) for v in np.exp(rng.uniform(np.log(0.1), np.log(10.0), count)))

        params = McKeithanParams(nsteps, draw(1)[0], draw(nsteps), draw(nsteps + 1))
    else:
        kp_vals = tuple(float(v) for v in kp.split(",")) if kp else (1.0,) * nsteps
        km_vals = tuple(float(v) for v in km.split(",")) if km else (1.0,) * (nsteps + 1)
        params = McKeithanParams(nsteps, k1, kp_vals, km_vals)
    text = serialize(mckeithan(params))
    manifest = _manifest(
        "mckeithan", text, seed=seed if random_rates else None,
        config={"N": nsteps},
    )
    doc = "# manifest: " + json.dumps(manifest, sort_keys=True) + "\n" + text
    if out:
        with open(out, "w") as fh:
            fh.write(doc)
        click.echo(f"wrote {out}")
    else:
        click.echo(doc, nl=False)


if __name__ == "__main__":
    main()
