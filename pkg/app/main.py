import asyncio
import logging
import sys

from app.cli.commands import CommandError, build_parser, dispatch, print_error
from app.config import get_settings

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def configure_logging(level: str) -> None:
    # stderr keeps stdout clean for CSV output
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    settings = get_settings()
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level or settings.log_level)

    try:
        return asyncio.run(dispatch(args))
    except CommandError as e:
        print_error(e.detail)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
