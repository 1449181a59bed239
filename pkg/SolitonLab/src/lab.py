# lab.py: command-line entry point
#
#   python lab.py soliton --eta 1 --eta 1.5 --xi 1 --xi -1 --out f.nlsf
#   python lab.py scatter --in f.nlsf --region -2 2 0.1 2.5 --out f.json
#   python lab.py stability --config ../configs/two_soliton.json --report r.json --series r.csv
#
# Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.

import dataclasses
import logging
import os
import sys

import click
import numba
import numpy as np

import fieldio
import scattering
import stability
from dressing import dress, jostSeed, vacuumSeed, undress
from errors import ValidationError, NumericalError, StageError
from evolver import EvolveConfig, evolve, diagnostics
from fields import ComplexField, Grid, SolitonParams
from solitons import nSoliton

logger = logging.getLogger(__name__)

DEFAULT_GRID_N = 2048
DEFAULT_GRID_L = 80.0


def configureThreads():
    env = os.environ.get('NLSF_THREADS')
    if not env:
        return
    n = stability.workerCount()
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    logger.debug(f'numba threads capped at {numba.get_num_threads()}')


def runConfigSchema():
    '''
    Plain-text listing of the RunConfig JSON keys.
    '''
    lines = ['RunConfig (JSON object):']
    sections = [('', stability.ExperimentConfig), ('perturbation.', stability.PerturbationConfig),
                ('evolve.', EvolveConfig), ('search.', scattering.SearchRegion),
                ('params[].', SolitonParams)]
    for prefix, cls in sections:
        for f in dataclasses.fields(cls):
            default = '' if f.default is dataclasses.MISSING else f' = {f.default!r}'
            lines.append(f'  {prefix}{f.name}{default}')
    return '\n'.join(lines)


def zipParams(eta, xi, x0, theta):
    '''
    Repeated --eta/--xi/--x0/--theta flags, zipped per soliton. --x0 and --theta may be omitted.
    '''
    n = len(eta)
    if n == 0:
        raise ValidationError('Give at least one --eta')
    if len(xi) not in (0, n):
        raise ValidationError(f'{len(xi)} --xi values for {n} --eta values')
    for name, vals in (('x0', x0), ('theta', theta)):
        if len(vals) not in (0, n):
            raise ValidationError(f'{len(vals)} --{name} values for {n} --eta values')
    xi = xi or (0.0,) * n
    x0 = x0 or (0.0,) * n
    theta = theta or (0.0,) * n
    return [SolitonParams(*vals) for vals in zip(xi, eta, x0, theta)]


def paramOptions(f):
    for name in ('theta', 'x0', 'xi', 'eta'):
        f = click.option(f'--{name}', type=float, multiple=True, help=f'{name} of each soliton (repeatable)')(f)
    return f


def gridOptions(f):
    f = click.option('--grid-l', 'gridL', type=float, default=DEFAULT_GRID_L, show_default=True)(f)
    f = click.option('--grid-n', 'gridN', type=int, default=DEFAULT_GRID_N, show_default=True)(f)
    return f


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
def cli(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format='[%(levelname)s]: %(message)s')
    configureThreads()


@cli.command('soliton')
@paramOptions
@gridOptions
@click.option('--t', 't', type=float, default=0.0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), help='FieldFile for the field at --t')
@click.option('--surface-csv', 'surfaceCsv', type=click.Path(dir_okay=False), help='(x, t, |q|^2) rows')
@click.option('--t-end', 'tEnd', type=float, default=1.0, show_default=True)
@click.option('--t-count', 'tCount', type=int, default=11, show_default=True)
def solitonCommand(eta, xi, x0, theta, gridN, gridL, t, out, surfaceCsv, tEnd, tCount):
    '''n-soliton field, or its surface over [0, t-end].'''
    params = zipParams(eta, xi, x0, theta)
    grid = Grid.centered(gridN, gridL)
    if out:
        fieldio.writeField(out, nSoliton(params, grid, t))
    if surfaceCsv:
        times = np.linspace(0.0, tEnd, tCount)
        fields = [nSoliton(params, grid, s) for s in times]
        fieldio.writeCsv(surfaceCsv, fieldio.surfaceFrame(times, fields))


@cli.command('dress')
@paramOptions
@gridOptions
@click.option('--in', 'inPath', type=click.Path(exists=True, dir_okay=False),
              help='Background field (default: zero field on the grid)')
@click.option('--seed-kind', 'seedKind', type=click.Choice(['vacuum', 'jost']), default='vacuum', show_default=True)
@click.option('--t', 't', type=float, default=0.0, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), required=True)
def dressCommand(eta, xi, x0, theta, gridN, gridL, inPath, seedKind, t, out):
    '''Add solitons to a background field.'''
    params = zipParams(eta, xi, x0, theta)
    if inPath:
        q0 = fieldio.readField(inPath)
    else:
        q0 = ComplexField.zeros(Grid.centered(gridN, gridL), t)
    if seedKind == 'jost':
        seeds = jostSeed(q0, params, q0.t)
    else:
        seeds = vacuumSeed(params, q0.t, q0.grid)
    fieldio.writeField(out, dress(q0, seeds, [p.point for p in params]))


@cli.command('evolve')
@click.option('--in', 'inPath', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--dt', type=float, default=1e-3, show_default=True)
@click.option('--t-end', 'tEnd', type=float, required=True)
@click.option('--samples', type=float, multiple=True, help='Extra output times (repeatable)')
@click.option('--scheme', type=click.Choice(['strang', 'yoshida4']), default='strang', show_default=True)
@click.option('--no-dealias', 'noDealias', is_flag=True)
@click.option('--out', type=click.Path(dir_okay=False), required=True, help='FieldFile at t-end')
@click.option('--series', type=click.Path(dir_okay=False), help='CSV of t, l2, boundary level')
def evolveCommand(inPath, dt, tEnd, samples, scheme, noDealias, out, series):
    '''Integrate the NLS from a FieldFile.'''
    q0 = fieldio.readField(inPath)
    cfg = EvolveConfig(length=q0.grid.length, n=q0.n, dt=dt, tEnd=tEnd, dealias=not noDealias,
                       scheme=scheme, sampleTimes=samples)
    trajectory = evolve(q0, cfg)
    fieldio.writeField(out, trajectory[-1])
    if series:
        fieldio.writeCsv(series, diagnostics(trajectory))


def regionOption(f):
    return click.option('--region', type=float, nargs=4, required=True,
                        help='xi_min xi_max eta_min eta_max')(f)


@cli.command('scatter')
@click.option('--in', 'inPath', type=click.Path(exists=True, dir_okay=False), required=True)
@regionOption
@click.option('--a-samples', 'aSamples', is_flag=True, help='Include a(z) on the real axis')
@click.option('--out', type=click.Path(dir_okay=False), help='JSON document (default: stdout)')
def scatterCommand(inPath, region, aSamples, out):
    '''Eigenvalues, norming constants and soliton parameters of a field.'''
    q = fieldio.readField(inPath)
    data = scattering.scatter(q, scattering.SearchRegion(*region), withSamples=aSamples)
    doc = fieldio.scatteringDocument(data)
    doc['params'] = fieldio.paramsDocument(scattering.paramsFromScattering(data))
    if out:
        fieldio.writeJson(out, doc)
    else:
        click.echo(fieldio.dumpJson(doc))


@cli.command('undress')
@click.option('--in', 'inPath', type=click.Path(exists=True, dir_okay=False), required=True)
@regionOption
@click.option('--tolerance', type=float, default=stability.EIGENFUNCTION_TOL, show_default=True)
@click.option('--out', type=click.Path(dir_okay=False), required=True)
def undressCommand(inPath, region, tolerance, out):
    '''Remove every bound state found in the region.'''
    q = fieldio.readField(inPath)
    op = scattering.ZsOperator(q)
    points = op.findEigenvalues(scattering.SearchRegion(*region))
    qt = undress(q, [(p, op.boundState(p)) for p in points], tolerance)
    fieldio.writeField(out, qt)


def loadExperiment(path):
    return stability.ExperimentConfig.fromDict(fieldio.loadJson(path))


@cli.command('stability')
@click.option('--config', 'configPath', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--report', type=click.Path(dir_okay=False), required=True)
@click.option('--series', type=click.Path(dir_okay=False))
def stabilityCommand(configPath, report, series):
    '''One perturbed-soliton experiment.'''
    result = stability.runExperiment(loadExperiment(configPath))
    fieldio.writeJson(report, result.document())
    if series:
        fieldio.writeCsv(series, result.seriesFrame())


@cli.command('sweep')
@click.option('--config', 'configPath', type=click.Path(exists=True, dir_okay=False), required=True)
@click.option('--eps', type=float, multiple=True, required=True)
@click.option('--report', type=click.Path(dir_okay=False), required=True)
def sweepCommand(configPath, eps, report):
    '''The same experiment over several epsilon; reports the fitted constant.'''
    reports = stability.runSweep(loadExperiment(configPath), eps)
    fit = stability.fitConstant(reports)
    fieldio.writeJson(report, {'constant': fit.constant, 'non_uniform': fit.nonUniform,
                               'estimates': fit.estimates,
                               'reports': [r.document() for r in reports]})
    logger.info(f'C = {fit.constant:.3f}' + (' (non-uniform)' if fit.nonUniform else ''))


def commandDispatch(argv):
    try:
        cli.main(args=list(argv), prog_name='lab', standalone_mode=False)
    except click.UsageError as e:
        click.echo(f'Error: {e.format_message()}', err=True)
        click.echo(runConfigSchema(), err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except StageError as e:
        logger.error(str(e))
        return 1 if isinstance(e.cause, ValidationError) else 2
    except ValidationError as e:
        logger.error(str(e))
        return 1
    except NumericalError as e:
        logger.error(str(e))
        return 2
    return 0


if __name__ == '__main__':
    sys.exit(commandDispatch(sys.argv[1:]))
