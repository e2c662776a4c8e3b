"""
oracle: compare vectorised ops against brute-force loop references
"""
import click

from hct_sod.commands.common import EXIT_ORACLE
from hct_sod.services.oracles.suite import run_oracle_suite


@click.command("oracle")
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_context
def command(ctx: click.Context, seed: int):
    """Exit status 4 on any mismatch"""
    results = run_oracle_suite(seed)
    for r in results:
        mark = "ok  " if r.passed else "FAIL"
        click.echo(f"{mark} {r.name:<24} max abs err {r.max_abs_err:.3e} (tol {r.tolerance:.0e}, {r.cases} cases)")
    if not all(r.passed for r in results):
        ctx.exit(EXIT_ORACLE)
