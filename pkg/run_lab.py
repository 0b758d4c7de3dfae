#!/usr/bin/env python3
"""
Run script for the selfsim lab.
Checks the numerical stack, then hands the arguments to the CLI.
"""
import sys
from pathlib import Path

# Add current directory to Python path
current_dir = Path(__file__).parent
sys.path.insert(0, str(current_dir))


def main():
    """Main entry point for the lab."""
    try:
        from selfsim.cli import main as cli_main
    except ImportError as e:
        print(f"❌ Error: Missing dependency - {e}")
        print("\n📦 Please install the package:")
        print("   pip install -e .")
        print("\n   Or install dependencies:")
        print("   pip install -r selfsim/requirements.txt")
        sys.exit(1)

    # no arguments: regenerate both reference panels
    args = sys.argv[1:] or None
    if args is None:
        import click

        for panel in ("left", "right"):
            print(f"🚀 Reproducing the {panel} panel...")
            try:
                cli_main(["reproduce", "--panel", panel], standalone_mode=False)
            except click.ClickException as e:
                e.show()
                sys.exit(e.exit_code)
        return
    cli_main(args)


if __name__ == "__main__":
    main()
