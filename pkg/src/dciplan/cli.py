"""Command-line front end.

Exit codes: 0 success/feasible, 2 domain-infeasible, 1 usage or I/O error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import report as rep
from .catalog import ScenarioError, load_scenario
from .gridplan import fiber_capacity
from .budget import check_amplifier_power, link_budget, osnr_limited_reach
from .wavesim import CriterionUnreachable, WaveformConfig, cd_penalty_sweep, curve_csv, find_cd_limit

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2


class InputError(click.ClickException):
    exit_code = EXIT_ERROR


def _fmt(value, digits: int, unit: str = "") -> str:
    if value is None:
        return "n/a"
    if value == float("inf"):
        return "unlimited"
    return f"{value:.{digits}f}{unit}"


def _load(ctx: click.Context, path: str):
    try:
        return load_scenario(path, strict=not ctx.obj["lenient"])
    except OSError as exc:
        raise InputError(f"cannot read scenario {path}: {exc.strerror or exc}") from None
    except ScenarioError as exc:
        raise InputError(f"{path}: {exc}") from None


def _profile_or_fail(scenario, profile_id):
    try:
        return scenario.profile(profile_id)
    except KeyError as exc:
        raise InputError(exc.args[0]) from None


def _emit_json(obj) -> None:
    click.echo(json.dumps(rep.to_jsonable(obj), indent=2))


@click.group()
@click.option("--json", "as_json", is_flag=True, help="Emit one JSON document on stdout.")
@click.option("--lenient", is_flag=True, help="Ignore unknown scenario keys.")
@click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=1, show_default=True,
              help="Master RNG seed for waveform simulation.")
@click.pass_context
def cli(ctx, as_json, lenient, seed):
    """Data-center-interconnect link planner."""
    ctx.ensure_object(dict)
    ctx.obj.update(json=as_json, lenient=lenient, seed=seed)


@cli.command()
@click.argument("scenario")
@click.argument("profile_id")
@click.option("--no-dcm", is_flag=True, help="Plan without any dispersion compensation.")
@click.pass_context
def plan(ctx, scenario, profile_id, no_dcm):
    """Feasibility of PROFILE_ID over the scenario link."""
    sc = _load(ctx, scenario)
    _profile_or_fail(sc, profile_id)
    r = rep.build_plan(sc, profile_id, compensate=not no_dcm)
    if ctx.obj["json"]:
        _emit_json(r)
    else:
        b, c, reach = r.budget, r.compensation, r.reach
        lines = [
            f"profile            {r.profile}",
            f"total loss         {_fmt(b.components['total_loss_db'], 2, ' dB')}",
            f"achievable OSNR    {_fmt(b.achievable_osnr, 2, ' dB')}",
            f"required OSNR      {_fmt(b.required_osnr, 2, ' dB')}",
            f"OSNR margin        {_fmt(b.residual_margin, 2, ' dB')}  ({'ok' if b.feasible else 'FAIL'})",
            f"accumulated CD     {_fmt(r.accumulated_cd, 1, ' ps/nm')}",
            f"fixed DCM          {_fmt(c.fixed_module, 1, ' ps/nm')}",
            f"tunable DCM        {_fmt(c.tunable_setting, 1, ' ps/nm')}",
            f"residual CD        {_fmt(c.residual_cd, 1, ' ps/nm')} of +/-{_fmt(c.cd_tolerance, 1)}"
            f"  ({'ok' if c.feasible else 'FAIL'})",
            f"effective reach    {_fmt(reach.km, 1, ' km')} ({reach.limiting_factor}-limited)",
            f"amplifier output   {_fmt(r.power.total_dbm, 2, ' dBm')} of {_fmt(r.power.max_total_dbm, 2, ' dBm')}"
            f"  ({'ok' if r.power.ok else 'FAIL'})",
            f"capacity           {_fmt(r.capacity.total_tbps, 2, ' Tb/s')}",
            f"feasible           {'yes' if r.feasible else 'no'}",
        ]
        click.echo("\n".join(lines))
    return EXIT_OK if r.feasible else EXIT_INFEASIBLE


@cli.command()
@click.argument("scenario")
@click.option("--detection", type=click.Choice(["IM-DD", "coherent"]), default=None,
              help="Only profiles with this detection type.")
@click.option("--profiles", default=None, help="Comma-separated profile ids to include.")
@click.pass_context
def compare(ctx, scenario, detection, profiles):
    """Compare every catalog profile over the scenario link."""
    sc = _load(ctx, scenario)
    ids = sorted(sc.catalog)
    if profiles:
        wanted = [p.strip() for p in profiles.split(",") if p.strip()]
        for p in wanted:
            _profile_or_fail(sc, p)
        ids = [p for p in ids if p in wanted]
    if detection:
        ids = [p for p in ids if sc.catalog[p].detection == detection]
    if not ids:
        raise InputError("no profiles left to compare")
    rows = rep.compare(sc, ids)
    if ctx.obj["json"]:
        _emit_json(rows)
        return EXIT_OK
    header = f"{'profile':<14}{'detect':<10}{'feasible':<10}{'reach km':>10}  {'limit':<6}{'SE b/s/Hz':>10}{'C Tb/s':>9}{'C+L Tb/s':>10}"
    click.echo(header)
    for r in rows:
        click.echo(
            f"{r.profile:<14}{r.detection:<10}{('yes' if r.feasible else 'no'):<10}"
            f"{_fmt(r.reach_km, 1):>10}  {r.limiting_factor:<6}{_fmt(r.spectral_efficiency, 2):>10}"
            f"{_fmt(r.capacity_c_tbps, 2):>9}{_fmt(r.capacity_cl_tbps, 2):>10}"
        )
    return EXIT_OK


@cli.command()
@click.argument("scenario")
@click.argument("profile_id")
@click.option("--bands", default="C,L", show_default=True, help="Comma-separated band ids.")
@click.option("--guard-ghz", type=float, default=0.0, show_default=True)
@click.pass_context
def capacity(ctx, scenario, profile_id, bands, guard_ghz):
    """Per-fiber capacity of PROFILE_ID over the chosen bands."""
    sc = _load(ctx, scenario)
    profile = _profile_or_fail(sc, profile_id)
    chosen = []
    for band_id in [b.strip() for b in bands.split(",") if b.strip()]:
        try:
            chosen.append(sc.band(band_id))
        except KeyError:
            raise InputError(f"band {band_id!r} not defined in scenario") from None
    try:
        cap = fiber_capacity(chosen, profile, rep.profile_fiber(sc, profile), guard_ghz)
    except ScenarioError as exc:
        raise InputError(str(exc)) from None
    if ctx.obj["json"]:
        _emit_json(cap)
        return EXIT_OK
    click.echo(f"profile {cap.profile}: SE {_fmt(cap.spectral_efficiency, 2, ' b/s/Hz')}")
    for band_id, tbps in cap.per_band_tbps.items():
        click.echo(
            f"  band {band_id}: {cap.channels[band_id]} ch, {_fmt(tbps, 2, ' Tb/s')}, "
            f"reach penalty {_fmt(cap.reach_penalty_km[band_id], 1, ' km')} "
            f"(naive OSNR-factor reading: x{_fmt(cap.naive_osnr_factor[band_id], 2)})"
        )
    click.echo(f"  total: {_fmt(cap.total_tbps, 2, ' Tb/s')}")
    return EXIT_OK


@cli.command()
@click.argument("scenario")
@click.option("--profile", "profile_id", default=None, help="Profile whose required OSNR to check.")
@click.option("--channels", type=click.IntRange(min=1), default=1, show_default=True,
              help="Channel count loaded into the amplifier.")
@click.pass_context
def budget(ctx, scenario, profile_id, channels):
    """Itemized OSNR budget of the scenario link."""
    sc = _load(ctx, scenario)
    profile = _profile_or_fail(sc, profile_id) if profile_id else None
    link = rep.profile_link(sc, profile) if profile else sc.link
    report = link_budget(link, profile.required_osnr if profile else 0.0)
    power = check_amplifier_power(link.launch_power_per_channel, channels, link.preamp)
    reach = None
    if profile:
        reach = osnr_limited_reach(
            profile, rep.profile_fiber(sc, profile), link.launch_power_per_channel,
            link.preamp.noise_figure, link.design_margin, link.lumped_loss_db,
        )
    if ctx.obj["json"]:
        _emit_json({"budget": report, "power": power, "osnr_limited_reach_km": reach})
    else:
        for name, value in report.components.items():
            click.echo(f"{name:<22}{_fmt(value, 2)}")
        click.echo(f"{'achievable_osnr_db':<22}{_fmt(report.achievable_osnr, 2)}")
        if profile:
            click.echo(f"{'required_osnr_db':<22}{_fmt(report.required_osnr, 2)}")
            click.echo(f"{'residual_margin_db':<22}{_fmt(report.residual_margin, 2)}")
            click.echo(f"{'osnr_reach_km':<22}{_fmt(reach, 1)}")
        click.echo(f"{'amp_total_dbm':<22}{_fmt(power.total_dbm, 2)} ({'ok' if power.ok else 'over limit'})")
    if profile and not report.feasible:
        return EXIT_INFEASIBLE
    return EXIT_OK if power.ok else EXIT_INFEASIBLE


@cli.command("cd-sweep")
@click.option("--baud", type=float, default=56.0, show_default=True, help="Symbol rate, GBd.")
@click.option("--criterion-db", type=float, default=2.0, show_default=True,
              help="Worst-eye penalty defining the CD limit.")
@click.option("--points", type=int, default=21, show_default=True, help="Sweep points from 0 to --max-cd.")
@click.option("--max-cd", type=float, default=100.0, show_default=True, help="Sweep end, ps/nm.")
@click.option("--search-bound", type=float, default=500.0, show_default=True)
@click.option("--symbols", type=int, default=4096, show_default=True)
@click.option("--sps", type=int, default=16, show_default=True, help="Samples per symbol.")
@click.option("--shaping", type=click.Choice(["nrz", "nrz-gaussian", "raised-cosine"]),
              default="nrz-gaussian", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the CSV here.")
@click.pass_context
def cd_sweep(ctx, baud, criterion_db, points, max_cd, search_bound, symbols, sps, shaping, workers, out):
    """Simulated PAM-4 eye penalty versus accumulated dispersion."""
    if points < 2:
        raise InputError("need at least 2 sweep points")
    if criterion_db <= 0:
        raise InputError("--criterion-db must be > 0")
    try:
        config = WaveformConfig(baud=baud, samples_per_symbol=sps, symbol_count=symbols,
                                pulse_shaping=shaping, rng_seed=ctx.obj["seed"])
    except ValueError as exc:
        raise InputError(str(exc)) from None
    curve = cd_penalty_sweep(config, np.linspace(0.0, max_cd, points), workers=workers)
    text = curve_csv(curve)
    try:
        limit = find_cd_limit(config, criterion_db, max_cd=search_bound)
    except CriterionUnreachable as exc:
        limit, error = None, str(exc)
    else:
        error = None

    if out:
        try:
            Path(out).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc.strerror or exc}") from None
    if ctx.obj["json"]:
        _emit_json({"baud": baud, "criterion_db": criterion_db, "cd_limit_ps_nm": limit,
                    "error": error, "curve": curve})
    else:
        if not out:
            click.echo(text, nl=False)
        if error:
            click.echo(error, err=True)
        else:
            click.echo(f"cd limit {limit:.1f} ps/nm at {criterion_db:.2f} dB worst-eye penalty ({baud:g} GBd PAM-4)")
    return EXIT_INFEASIBLE if error else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        rc = cli.main(args=argv, prog_name="dciplan", standalone_mode=False, obj={})
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_ERROR
    except click.ClickException as exc:
        exc.show()
        return EXIT_ERROR
    return rc if isinstance(rc, int) else EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
