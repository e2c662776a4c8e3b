"""
gradcheck: central differences against backpropagation over a fresh toy model
"""
from pathlib import Path
from typing import Optional, Tuple

import click

from hct_sod.commands.common import EXIT_GRADCHECK
from hct_sod.models.config import ModelConfig
from hct_sod.services.training.model_gradcheck import MODEL_ABS_FLOOR, model_grad_check
from hct_sod.utilities.config_file import build_configs, parse_overrides


@click.command("gradcheck")
@click.option("--seed", type=int, default=0, show_default=True, help="Init seed and sample seed")
@click.option("--size", type=click.IntRange(min=16), default=64, show_default=True, help="Input side length")
@click.option("--entries", type=click.IntRange(min=1), default=4, show_default=True,
              help="Scalar entries sampled per parameter")
@click.option("--all-entries", is_flag=True, help="Perturb every scalar (slow)")
@click.option("--tolerance", type=float, default=1e-5, show_default=True, help="Relative error bound")
@click.option("--abs-floor", type=float, default=MODEL_ABS_FLOOR, show_default=True,
              help="Absolute error accepted as round-off")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a model config key")
@click.option("--report", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Write the per-parameter report as JSON")
@click.pass_context
def command(ctx: click.Context, seed: int, size: int, entries: int, all_entries: bool, tolerance: float,
            abs_floor: float, overrides: Tuple[str, ...], report: Optional[Path]):
    """Exit status 3 when any parameter's relative error reaches the tolerance"""
    values = parse_overrides(overrides)
    values.setdefault("image_size", str(size))
    values.setdefault("init_seed", str(seed))
    cfg, _ = build_configs(values, model_base=ModelConfig.toy())

    result = model_grad_check(cfg, seed=seed, max_entries=None if all_entries else entries,
                              tolerance=tolerance, abs_floor=abs_floor)
    if report is not None:
        report.parent.mkdir(parents=True, exist_ok=True)
        report.write_text(result.model_dump_json(indent=2), encoding="utf-8")

    for entry in result.failures():
        click.echo(f"FAIL {entry.name}: rel {entry.max_rel_err:.3e} abs {entry.max_abs_err:.3e}")
    status = "passed" if result.passed else "failed"
    click.echo(
        f"gradcheck {status}: {len(result.entries)} tensors, "
        f"{sum(e.checked for e in result.entries)} entries, max rel err {result.max_rel_err:.3e}"
    )
    if not result.passed:
        ctx.exit(EXIT_GRADCHECK)
