"""Command-line entry point.

One subcommand per verification suite, plus `all`.  Exit status is 0 when
every executed check passes, 1 when any check fails, and 2 on configuration
errors.  Thread count resolves as --threads, then FDYSON_THREADS, then 1.
"""

from __future__ import annotations

import os
import sys

import click

from .errors import ConfigInvalid
from .harness import SUITE_NAMES, ExperimentConfig, run_suite

_EXIT_SUITE_FAILED = 1
_EXIT_CONFIG_ERROR = 2


def _resolve_threads(flag_value):
    if flag_value is not None:
        return flag_value
    env = os.environ.get("FDYSON_THREADS")
    if env is not None:
        try:
            k = int(env)
            if k < 1:
                raise ValueError
        except ValueError:
            raise ConfigInvalid(f"FDYSON_THREADS: need a positive integer, got {env!r}")
        return k
    return 1


def _run(suites, config, seed, out, threads, replicates):
    try:
        if config is not None:
            cfg = ExperimentConfig.from_file(config)
        else:
            cfg = ExperimentConfig()
        cfg.suites = suites
        if seed is not None:
            cfg.master_seed = seed
        if out is not None:
            cfg.out_dir = out
        if replicates is not None:
            cfg.replicates = replicates
        cfg.threads = _resolve_threads(threads)
        cfg.validate()
    except ConfigInvalid as e:
        for msg in getattr(e, "messages", None) or [str(e)]:
            click.echo(f"config error: {msg}", err=True)
        sys.exit(_EXIT_CONFIG_ERROR)

    manifest = run_suite(cfg)
    for suite, reports in manifest["suites"].items():
        for r in reports:
            status = "PASS" if r["passed"] else "FAIL"
            click.echo(
                f"[{status}] {r['name']}: statistic={r['statistic']:.6g} "
                f"threshold={r['threshold']:.6g}"
            )
    click.echo(f"manifest: {cfg.out_dir}/manifest.json")
    sys.exit(0 if manifest["all_passed"] else _EXIT_SUITE_FAILED)


def _common(f):
    f = click.option("--config", type=click.Path(), default=None,
                     help="JSON configuration file.")(f)
    f = click.option("--seed", type=click.IntRange(min=0), default=None,
                     help="Master seed (overrides the config).")(f)
    f = click.option("--out", type=click.Path(), default=None,
                     help="Output directory (overrides the config).")(f)
    f = click.option("--threads", type=click.IntRange(min=1), default=None,
                     help="Worker threads (default: FDYSON_THREADS or 1).")(f)
    f = click.option("--replicates", type=click.IntRange(min=1), default=None,
                     help="Replicates per suite (overrides the config).")(f)
    return f


@click.group()
def main():
    """Simulation and verification of matrix-fBm eigenvalue processes."""


def _register(name, help_text):
    @main.command(name=name, help=help_text)
    @_common
    def _cmd(config, seed, out, threads, replicates, _name=name):
        _run([_name], config, seed, out, threads, replicates)


_register("simulate", "Simulate one matrix path and emit its eigenvalue "
                      "trajectories and drift/residual decomposition.")
_register("noncollide", "Check that eigenvalue trajectories never collide.")
_register("variation", "Check 1/H-variation limits and Hölder regularity.")
_register("selfsim", "Check H-self-similarity of eigenvalues and residuals.")
_register("gradcheck", "Verify eigenvalue derivatives against finite "
                       "differences and exact identities.")
_register("itocheck", "Verify the drift/residual decomposition, the pathwise "
                      "Young-sum route, and the H=1/2 reduction.")
_register("density", "Check eigenvalue gap laws and negative-moment scaling.")


@main.command(name="all", help="Run every suite.")
@_common
def _all(config, seed, out, threads, replicates):
    _run(list(SUITE_NAMES), config, seed, out, threads, replicates)


if __name__ == "__main__":
    main()
