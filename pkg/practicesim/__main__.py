#!/usr/bin/env python3
"""Main entry point for the psim command."""

from practicesim.cli import cli


def main():
    cli(prog_name="psim")


if __name__ == "__main__":
    main()
