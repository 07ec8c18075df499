from .run_cli import RunDriver, build_parser, main

__all__ = ['RunDriver', 'build_parser', 'main']
