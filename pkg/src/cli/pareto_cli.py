#!/usr/bin/env python3
"""
Pareto CLI - train, check, generate, benchmark and oracle commands

Exit codes: 0 success / on-front, 1 rejected (check), 2 usage or config,
3 runtime failure. Progress logging goes to stderr.
"""

import os
import sys

import click

# Add the project root to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../..')))

from src.cli.tools import benchmark_impl, check_impl, generate_impl, oracle_impl, train_impl
from utils.log_utils import setup_logging


def _finish(ctx: click.Context, message: str, code: int, machine_output: bool = False):
    # machine answers and successes go to stdout, failures to stderr
    click.echo(message, err=(code not in (0, 1) and not machine_output))
    ctx.exit(code)


@click.group()
@click.option('--log-level', default=None, help='Logging level (default from PFM_LOG_LEVEL or INFO)')
@click.option('--verbose', '-v', is_flag=True, help='Debug logging')
def cli(log_level, verbose):
    """Pareto-front modeling with projection-based active GPR"""
    setup_logging(log_level, verbose)


@cli.command()
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.pass_context
def train(ctx, config_path):
    """Train a chained PF model from a run config"""
    message, code = train_impl(config_path)
    _finish(ctx, message, code)


@cli.command(context_settings={"ignore_unknown_options": True})
@click.argument('model_path', type=click.Path(dir_okay=False))
@click.argument('values', nargs=-1, type=float, required=True)
@click.pass_context
def check(ctx, model_path, values):
    """Check whether a metric vector lies on the modeled front"""
    message, code = check_impl(model_path, list(values))
    _finish(ctx, message, code, machine_output=code in (0, 1))


@cli.command()
@click.argument('model_path', type=click.Path(dir_okay=False))
@click.option('--n', '-n', 'n', type=click.IntRange(min=1), default=1000, show_default=True,
              help='Number of points')
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', 'out_csv', type=click.Path(dir_okay=False), required=True, help='Output CSV')
@click.pass_context
def generate(ctx, model_path, n, seed, out_csv):
    """Sample front points from a trained model"""
    message, code = generate_impl(model_path, n, seed, out_csv)
    _finish(ctx, message, code)


@cli.command()
@click.argument('config_path', type=click.Path(dir_okay=False))
@click.pass_context
def benchmark(ctx, config_path):
    """Repeated-run accuracy benchmark of the configured methods"""
    message, code = benchmark_impl(config_path)
    _finish(ctx, message, code)


@cli.command()
@click.argument('problem')
@click.option('--n', '-n', 'n', type=click.IntRange(min=1), default=1000, show_default=True)
@click.option('--seed', type=int, default=0, show_default=True)
@click.option('--out', 'out_csv', type=click.Path(dir_okay=False), required=True, help='Output CSV')
@click.pass_context
def oracle(ctx, problem, n, seed, out_csv):
    """Dump true-PF samples of a problem with their oracle distances"""
    message, code = oracle_impl(problem, n, seed, out_csv)
    _finish(ctx, message, code)


if __name__ == '__main__':
    cli()
