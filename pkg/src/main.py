"""Main entry point for Balancibility."""

import os
import sys
import logging
from typing import Optional, Sequence

import click
import colorlog
from dotenv import load_dotenv


def setup_logging():
    """Set up colored logging on stderr."""
    log_level = os.getenv('LOG_LEVEL', 'INFO').upper()

    formatter = colorlog.ColoredFormatter(
        '%(log_color)s%(asctime)s - %(name)s - %(levelname)s%(reset)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'red,bg_white',
        }
    )

    # stdout is reserved for CSV/JSON
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    root_logger.addHandler(handler)
    root_logger.setLevel(getattr(logging, log_level, logging.INFO))

    logging.getLogger('concurrent.futures').setLevel(logging.WARNING)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return its exit status.

    0 = computed or certified, 2 = valid computation with a failing verdict,
    1 = input or numeric error.
    """
    from .balancibility.search import BalancibilityException
    from .cli.commands import cli
    from .network.model import NetworkException
    from .powerflow.solver import PowerFlowException
    from .robust.verdict import CertificationException
    from .solvability.stress import SolvabilityException
    from .unbalance.metrics import UnbalanceException
    from .utils.settings import SettingsException

    errors = (
        NetworkException,
        PowerFlowException,
        SolvabilityException,
        UnbalanceException,
        CertificationException,
        BalancibilityException,
        SettingsException,
        ValueError,
        OSError,
    )
    try:
        status = cli.main(args=list(argv) if argv is not None else None,
                          prog_name='balancibility', standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("✗ Aborted", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return 1
    except errors as e:
        logging.getLogger(__name__).debug("Command failed", exc_info=True)
        click.echo(f"✗ {e}", err=True)
        return 1
    return int(status or 0)


def main():
    """Main entry point."""
    load_dotenv()
    setup_logging()
    sys.exit(run(sys.argv[1:]))


if __name__ == '__main__':
    main()
