"""CLI commands for Balancibility."""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import click
import numpy as np

from ..balancibility.certificate import certify as run_certify
from ..balancibility.oracle import solve_scenario
from ..balancibility.search import Unbalanceable, search_disks
from ..balancibility.sweep import bus_increment, sweep
from ..network.loads import LoadState, loads_from_document, make_load_state
from ..network.model import NetworkModel, case_path, load_case, load_network, read_json
from ..powerflow.solver import PowerFlowDivergence
from ..robust.dual import vuf_lgr
from ..robust.sampling import sample_oracle
from ..robust.verdict import Method, validate_request
from ..robust.vuf import vuf_bound, vuf_polytope
from ..solvability.disks import DiskBundle, build_disks, entry_disks
from ..solvability.stress import compute_stress
from ..unbalance.metrics import Metric, SequenceKind, VoltageTriple, all_metrics
from ..utils.settings import Settings, get_settings, load_settings
from .output import Table, emit

logger = logging.getLogger(__name__)

DEFAULT_CASE = "five_bus"
DEFAULT_CASE_LOADS = "five_bus_loads"

METRIC_CHOICE = click.Choice([m.value for m in Metric])
METHOD_CHOICE = click.Choice([m.value for m in Method])

network_option = click.option(
    '--network', type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help='Network JSON (defaults to the bundled five-bus feeder)',
)
loads_option = click.option(
    '--loads', type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help='Loads JSON (defaults to the bundled loads, or no load for a custom network)',
)


# ==================== Helpers ====================

def _settings(ctx: click.Context) -> Settings:
    return ctx.obj['settings']


def _robust_options(settings: Settings) -> Dict:
    r = settings.robust
    return {
        'lgr_delta': r.lgr_delta,
        'lgr_restarts': r.lgr_restarts,
        'lgr_max_iter': r.lgr_max_iter,
        'psd_tol': r.psd_tol,
        'pg_tol': r.pg_tol,
        'pg_max_iter': r.pg_max_iter,
    }


def _search_options(settings: Settings, tol: Optional[float] = None) -> Dict:
    b = settings.bisection
    return {
        'tol': b.tol if tol is None else tol,
        'eps_lo': b.eps_lo,
        'eps_hi': b.eps_hi,
        'max_iter': b.max_iter,
        'grid_points': b.grid_points,
    }


def _load_inputs(settings: Settings, network: Optional[Path], loads: Optional[Path]) -> Tuple[NetworkModel, LoadState]:
    model = load_case(DEFAULT_CASE) if network is None else load_network(network)
    pf = settings.powerflow
    if loads is None and network is None:
        loads = case_path(DEFAULT_CASE_LOADS)
    if loads is None:
        zero = np.zeros(model.n_load, dtype=complex)
        return model, make_load_state(model, zero, zero, tol=pf.tol, max_iter=pf.max_iter)
    return model, loads_from_document(model, read_json(loads), tol=pf.tol, max_iter=pf.max_iter)


def _request(metric: str, method: str) -> Tuple[Metric, Method]:
    try:
        return validate_request(metric, method)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="'--method'")


def _parse_floats(text: str, count: Optional[int] = None, what: str = 'value') -> List[float]:
    try:
        values = [float(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"Expected comma-separated numbers, got '{text}'", param_hint=what)
    if count is not None and len(values) != count:
        raise click.BadParameter(f"Expected {count} numbers, got {len(values)}", param_hint=what)
    return values


def _parse_points(text: str, what: str = "'--centers'") -> List[List[float]]:
    """Parse "re,im;re,im;re,im"."""
    pairs = [p for p in text.split(';') if p.strip()]
    if len(pairs) != 3:
        raise click.BadParameter(f"Expected three re,im pairs separated by ';', got '{text}'", param_hint=what)
    return [_parse_floats(p, 2, what) for p in pairs]


def _parse_k(text: str) -> List[int]:
    """Parse "1..10" or "0,2,5"."""
    try:
        if '..' in text:
            start, stop = text.split('..')
            return list(range(int(start), int(stop) + 1))
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError:
        raise click.BadParameter(f"Expected a range like 1..10 or a list like 1,2,3, got '{text}'", param_hint="'--k'")


def _metadata(ctx: click.Context, **extra) -> Dict:
    metadata = {'command': ctx.info_name, 'seed': ctx.obj['seed']}
    metadata.update(extra)
    metadata['config'] = _settings(ctx).model_dump()
    return metadata


def _emit(ctx: click.Context, table: Table) -> None:
    emit(table, ctx.obj['format'], ctx.obj['output'])


def _fmt(value: Optional[float]) -> Optional[float]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


# ==================== Commands ====================

@click.group()
@click.option('--config', 'config_path', type=click.Path(dir_okay=False, path_type=Path),
              envvar='BALANCIBILITY_CONFIG', help='Configuration YAML')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'json']), help='Output format')
@click.option('--output', '-o', type=click.Path(dir_okay=False, path_type=Path), help='Write to a file instead of stdout')
@click.option('--threads', type=click.IntRange(min=1), envvar='BALANCIBILITY_THREADS', help='Worker threads')
@click.option('--seed', type=int, envvar='BALANCIBILITY_SEED', help='Sampling seed')
@click.pass_context
def cli(ctx, config_path, fmt, output, threads, seed):
    """Balancibility - solvability and robust voltage-balance certificates for three-phase feeders."""
    ctx.ensure_object(dict)
    settings = get_settings() if config_path is None else load_settings(config_path)
    ctx.obj['settings'] = settings
    ctx.obj['format'] = fmt or settings.cli.format
    ctx.obj['output'] = output
    ctx.obj['threads'] = threads or settings.cli.threads
    ctx.obj['seed'] = settings.sampling.seed if seed is None else seed


@cli.command()
@network_option
@loads_option
@click.option('--nominal', is_flag=True, help='Solve at the nominal loading instead of the actual one')
@click.pass_context
def pf(ctx, network, loads, nominal):
    """Solve the fixed-point power flow."""
    settings = _settings(ctx)
    model, state = _load_inputs(settings, network, loads)
    target = make_load_state(model, state.s_nominal, state.s_nominal, v_nominal=state.v_nominal) if nominal else state
    try:
        result = solve_scenario(
            model, target, tol=settings.powerflow.tol,
            max_iter=settings.powerflow.max_iter, blowup=settings.powerflow.blowup,
        )
    except PowerFlowDivergence as e:
        click.echo(f"✗ Power flow diverged ({e.reason}): {e}", err=True)
        return 2

    table = Table(
        columns=['bus', 'phase', 'v_re', 'v_im', 'magnitude', 'angle_deg', 'v_norm_re', 'v_norm_im'],
        metadata=_metadata(ctx, network=model.name, iterations=result.iterations, residual=result.residual),
    )
    for k, (bus, phase) in enumerate(model.load_labels):
        voltage = result.voltages[k]
        table.add(
            bus=bus, phase=phase,
            v_re=float(voltage.real), v_im=float(voltage.imag),
            magnitude=float(abs(voltage)), angle_deg=float(np.degrees(np.angle(voltage))),
            v_norm_re=float(result.v[k].real), v_norm_im=float(result.v[k].imag),
        )
    _emit(ctx, table)
    return 0


@cli.command()
@network_option
@loads_option
@click.pass_context
def solvability(ctx, network, loads):
    """Evaluate the existence and uniqueness certificate."""
    settings = _settings(ctx)
    model, state = _load_inputs(settings, network, loads)
    stress = compute_stress(model, state, settings.solvability.delta_clamp)

    table = Table(
        columns=['bus', 'phase', 'eta_re', 'eta_im', 'xi', 'gamma'],
        metadata=_metadata(
            ctx, network=model.name, eta=stress.eta_max, xi=stress.xi_max, gamma=stress.gamma_max,
            delta=stress.delta, feasible=stress.feasible, radius=stress.radius, margin=stress.margin,
        ),
    )
    for bus, phase, eta, xi, gamma in stress.rows(model):
        table.add(bus=bus, phase=phase, eta_re=eta.real, eta_im=eta.imag, xi=xi, gamma=gamma)
    _emit(ctx, table)

    if not stress.feasible:
        click.echo("✗ Solvability certificate does not hold", err=True)
        return 2
    return 0


@cli.command()
@network_option
@loads_option
@click.option('--node', 'nodes', multiple=True, help='Critical three-phase bus (repeatable)')
@click.option('--all', 'all_entries', is_flag=True, help='Disks for every PQ node-phase')
@click.pass_context
def disks(ctx, network, loads, nodes, all_entries):
    """Construct the voltage disks around the certified solution."""
    if not nodes and not all_entries:
        raise click.UsageError("Give at least one --node, or --all")
    settings = _settings(ctx)
    model, state = _load_inputs(settings, network, loads)
    stress = compute_stress(model, state, settings.solvability.delta_clamp)
    if not stress.feasible:
        click.echo("✗ Solvability certificate does not hold; no disks", err=True)
        return 2

    table = Table(
        columns=['node', 'phase', 'center_re', 'center_im', 'radius'],
        metadata=_metadata(ctx, network=model.name, r=stress.radius),
    )
    if all_entries:
        entries = entry_disks(model, state, stress)
        for k, (bus, phase) in enumerate(model.load_labels):
            center = entries.centers[k]
            table.add(node=bus, phase=phase, center_re=float(center.real),
                      center_im=float(center.imag), radius=float(entries.radii[k]))
    else:
        for node in nodes:
            bundle = build_disks(model, state, stress, node)
            for phase, center, radius in zip('abc', bundle.centers, bundle.radii):
                table.add(node=node, phase=phase, center_re=float(center.real),
                          center_im=float(center.imag), radius=float(radius))
    _emit(ctx, table)
    return 0


@cli.command()
@click.option('--voltages', 'voltages_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='JSON file {"voltages": [[re, im], [re, im], [re, im]]}')
@click.option('--values', help='Inline triple "re,im;re,im;re,im"')
@click.pass_context
def metrics(ctx, voltages_path, values):
    """Evaluate every unbalance metric at one voltage triple."""
    if (voltages_path is None) == (values is None):
        raise click.UsageError("Give exactly one of --voltages or --values")
    if voltages_path is not None:
        document = read_json(voltages_path)
        try:
            points = document['voltages']
        except (KeyError, TypeError):
            raise click.BadParameter("Document needs a 'voltages' list", param_hint="'--voltages'")
    else:
        points = _parse_points(values, "'--values'")
    points = np.asarray(points, dtype=float)
    if points.shape != (3, 2):
        raise click.BadParameter("Expected three [re, im] pairs", param_hint="'--voltages'")

    triple = VoltageTriple.from_real(points.reshape(6))
    table = Table(columns=['metric', 'value'], metadata=_metadata(ctx))
    for metric, value in all_metrics(triple).items():
        table.add(metric=metric, value=value)
    _emit(ctx, table)
    return 0


@cli.command()
@network_option
@loads_option
@click.option('--node', 'nodes', multiple=True, default=('4',), show_default=True, help='Critical bus (repeatable)')
@click.option('--request', 'requests', multiple=True, help='metric:method:eps (repeatable)')
@click.option('--metric', type=METRIC_CHOICE, help='Single request: metric')
@click.option('--method', type=METHOD_CHOICE, help='Single request: method')
@click.option('--eps', type=float, help='Single request: tolerance')
@click.option('--m', 'm', type=click.IntRange(min=2), default=32, show_default=True, help='Polytope parameter')
@click.option('--true', 'compute_true', is_flag=True, help='Also report the true unbalance from the power flow')
@click.option('--min-eps', 'search_min_eps', is_flag=True, help='Also search the smallest passing tolerance')
@click.pass_context
def certify(ctx, network, loads, nodes, requests, metric, method, eps, m, compute_true, search_min_eps):
    """Check the full balancibility condition."""
    requests = list(requests)
    if metric or method or eps is not None:
        if not (metric and method and eps is not None):
            raise click.UsageError("--metric, --method and --eps go together")
        _request(metric, method)
        requests.append(f"{metric}:{method}:{eps}")
    if not requests:
        raise click.UsageError("Give at least one --request or --metric/--method/--eps")
    for text in requests:
        parts = text.split(':')
        if len(parts) != 3:
            raise click.BadParameter(f"'{text}' must look like metric:method:eps", param_hint="'--request'")
        _request(parts[0], parts[1])

    settings = _settings(ctx)
    model, state = _load_inputs(settings, network, loads)
    certificate = run_certify(
        model, state, list(nodes), requests,
        compute_true=compute_true,
        search_min_eps=search_min_eps,
        delta_clamp=settings.solvability.delta_clamp,
        pf_tol=settings.powerflow.tol,
        pf_max_iter=settings.powerflow.max_iter,
        search_options=_search_options(settings),
        m=m,
        **_robust_options(settings),
    )

    table = Table(
        columns=['node', 'metric', 'method', 'eps', 'passed', 'exactness', 'worst', 'min_eps', 'true_value'],
        metadata=_metadata(ctx, network=model.name, solvable=certificate.solvable, balanced=certificate.balanced),
    )
    for node in certificate.nodes:
        for request, verdict in node.verdicts:
            truth = node.true_unbalance.get(request.metric) if node.true_unbalance else None
            table.add(
                node=node.node, metric=request.metric, method=request.method, eps=request.epsilon,
                passed=verdict.passed, exactness=verdict.exactness, worst=verdict.worst,
                min_eps=node.min_eps.get((request.metric, request.method)), true_value=_fmt(truth),
            )
    _emit(ctx, table)

    if not certificate.solvable:
        click.echo("✗ Solvability certificate does not hold", err=True)
        return 2
    if not certificate.balanced:
        click.echo("✗ Balance requirement not certified", err=True)
        return 2
    return 0


@cli.command('min-eps')
@network_option
@loads_option
@click.option('--node', default='4', show_default=True, help='Critical bus')
@click.option('--metric', type=METRIC_CHOICE, required=True)
@click.option('--method', type=METHOD_CHOICE, required=True)
@click.option('--tol', type=click.FloatRange(min=0, min_open=True), help='Bisection tolerance')
@click.option('--m', 'm', type=click.IntRange(min=2), default=32, show_default=True, help='Polytope parameter')
@click.pass_context
def min_eps(ctx, network, loads, node, metric, method, tol, m):
    """Search the smallest tolerance a method certifies."""
    metric, method = _request(metric, method)
    settings = _settings(ctx)
    model, state = _load_inputs(settings, network, loads)
    stress = compute_stress(model, state, settings.solvability.delta_clamp)
    if not stress.feasible:
        click.echo("✗ Solvability certificate does not hold", err=True)
        return 2

    bundle = build_disks(model, state, stress, node)
    try:
        found = search_disks(bundle, metric, method, m=m, **_search_options(settings, tol), **_robust_options(settings))
    except Unbalanceable as e:
        click.echo(f"✗ {e}", err=True)
        return 2

    table = Table(
        columns=['node', 'metric', 'method', 'min_eps', 'iterations'],
        metadata=_metadata(ctx, network=model.name, tol=_search_options(settings, tol)['tol']),
    )
    table.add(node=node, metric=metric, method=method, min_eps=found.epsilon, iterations=found.iterations)
    _emit(ctx, table)
    return 0


@cli.command('compare-approx')
@click.option('--centers', help='Disk centers "re,im;re,im;re,im"')
@click.option('--radii', help='Disk radii "ra,rb,rc"')
@click.option('--disks', 'disks_path', type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help='JSON file {"centers": [[re, im] x3], "radii": [r x3]}')
@click.option('--eps', type=click.FloatRange(min=0, max=1, min_open=True, max_open=True), required=True)
@click.option('--m', 'm_list', help='Polytope parameters, e.g. 2,4,8,16,32')
@click.option('--samples', type=click.IntRange(min=1), help='Sampling oracle size')
@click.option('--sequence', type=click.Choice([s.value for s in SequenceKind]), default='negative', show_default=True)
@click.pass_context
def compare_approx(ctx, centers, radii, disks_path, eps, m_list, samples, sequence):
    """Compare the VUF approximations against the sampling oracle on raw disks."""
    if disks_path is not None:
        if centers or radii:
            raise click.UsageError("Use either --disks or --centers/--radii")
        try:
            bundle = DiskBundle.from_document(read_json(disks_path))
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="'--disks'")
    else:
        if not (centers and radii):
            raise click.UsageError("Give --centers and --radii, or --disks")
        try:
            bundle = DiskBundle.from_points(_parse_points(centers), _parse_floats(radii, 3, "'--radii'"))
        except ValueError as e:
            raise click.BadParameter(str(e), param_hint="'--radii'")

    settings = _settings(ctx)
    which = SequenceKind(sequence)
    ms = [int(v) for v in _parse_floats(m_list, what="'--m'")] if m_list else list(settings.robust.polytope_m)
    if any(m < 2 for m in ms):
        raise click.BadParameter("Every m must be at least 2", param_hint="'--m'")
    n = samples or settings.sampling.samples
    seed = ctx.obj['seed']

    f_sample = sample_oracle(
        bundle, eps, which, n=n, seed=seed,
        batch_size=settings.sampling.batch_size, threads=ctx.obj['threads'],
    )
    table = Table(
        columns=['method', 'm', 'value', 'F_sample', 'gap'],
        metadata=_metadata(ctx, eps=eps, sequence=which.value, samples=n, seed=seed,
                           centers=bundle.real_centers.tolist(), radii=bundle.radii.tolist()),
    )

    bound = vuf_bound(bundle, eps, which).worst
    table.add(method='bound', m=None, value=bound, F_sample=f_sample, gap=bound - f_sample)
    for m in ms:
        f_e, f_i, _, _ = vuf_polytope(bundle, eps, m, which)
        table.add(method='polytope', m=m, value=f_e, F_sample=f_sample, gap=f_e - f_sample)
        table.add(method='polytope-inscribed', m=m, value=f_i, F_sample=f_sample, gap=f_i - f_sample)
    gamma, _, verdict = vuf_lgr(bundle, eps, which, **{
        'delta': settings.robust.lgr_delta,
        'restarts': settings.robust.lgr_restarts,
        'max_iter': settings.robust.lgr_max_iter,
        'psd_tol': settings.robust.psd_tol,
        'pg_tol': settings.robust.pg_tol,
        'pg_max_iter': settings.robust.pg_max_iter,
    })
    table.add(method='lgr', m=None, value=gamma, F_sample=f_sample, gap=gamma - f_sample)
    table.metadata['lgr_exactness'] = verdict.exactness.value
    _emit(ctx, table)
    return 0


@cli.command('sweep-case')
@network_option
@loads_option
@click.option('--k', 'k_text', default='1..10', show_default=True, help='Scenario indices, e.g. 1..10 or 0,2,4')
@click.option('--bus', default='5', show_default=True, help='Bus receiving the increment')
@click.option('--increment', default='10,-5,-5', show_default=True, help='Per-phase kW increment a,b,c')
@click.option('--node', default='4', show_default=True, help='Critical bus')
@click.option('--pair', 'pairs', multiple=True, help='metric:method to search (repeatable)')
@click.option('--lvur-method', type=click.Choice([Method.LINE_BOUND.value, Method.MAG_BOUND.value]),
              default=Method.LINE_BOUND.value, show_default=True, help='LVUR method of the default pairs')
@click.pass_context
def sweep_case(ctx, network, loads, k_text, bus, increment, node, pairs, lvur_method):
    """Sweep load increments and tabulate min eps against the true unbalance."""
    if pairs:
        selected = []
        for text in pairs:
            parts = text.split(':')
            if len(parts) != 2:
                raise click.BadParameter(f"'{text}' must look like metric:method", param_hint="'--pair'")
            selected.append(_request(*parts))
    else:
        selected = [
            (Metric.PVUR, Method.CLOSED),
            (Metric.LVUR, Method(lvur_method)),
            (Metric.VUF_N, Method.LGR),
        ]
    ks = _parse_k(k_text)
    per_phase = _parse_floats(increment, 3, "'--increment'")

    settings = _settings(ctx)
    model, state = _load_inputs(settings, network, loads)
    rows = sweep(
        model, state, bus_increment(model, bus, per_phase), ks, node,
        pairs=selected,
        threads=ctx.obj['threads'],
        delta_clamp=settings.solvability.delta_clamp,
        pf_tol=settings.powerflow.tol,
        pf_max_iter=settings.powerflow.max_iter,
        search_options=_search_options(settings),
        **_robust_options(settings),
    )

    table = Table(
        columns=['k', 'metric', 'method', 'min_eps', 'true_value', 'ratio', 'solvable'],
        json_columns=['error'],
        metadata=_metadata(ctx, network=model.name, bus=bus, increment_kw=per_phase, node=node,
                           bisection=settings.bisection.model_dump()),
    )
    for row in rows:
        table.add(**row.as_dict())
        if row.error:
            click.echo(f"✗ k={row.k} {row.metric.value}/{row.method.value}: {row.error}", err=True)
    _emit(ctx, table)
    return 0
