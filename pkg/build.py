"""
Build script for the matched decoding simulator.
Packages main.py and the experiment configs into a single executable.
"""
import os
import subprocess
import sys
from pathlib import Path

APP_NAME = "matched-sim"


def main():
    project_dir = Path(__file__).parent

    print("=" * 60)
    print("Matched decoding simulator - Build Script")
    print("=" * 60)
    print()

    # Step 1: Install PyInstaller if needed
    print("[1/2] Checking PyInstaller...")
    try:
        import PyInstaller
        print("      PyInstaller is installed")
    except ImportError:
        print("      Installing PyInstaller...")
        subprocess.run([sys.executable, "-m", "pip", "install", "pyinstaller"], check=True)

    # Step 2: Build the executable
    print("[2/2] Building executable...")
    print()

    configs = project_dir / "configs"
    result = subprocess.run([
        sys.executable, "-m", "PyInstaller",
        "--clean",
        "--onefile",
        "--name", APP_NAME,
        "--add-data", f"{configs}{os.pathsep}configs",
        "--hidden-import", "scipy.special",
        "--hidden-import", "scipy.spatial.distance",
        str(project_dir / "main.py"),
    ], cwd=project_dir)

    if result.returncode == 0:
        suffix = ".exe" if os.name == "nt" else ""
        print()
        print("=" * 60)
        print("BUILD SUCCESSFUL!")
        print("=" * 60)
        print()
        print("Executable created at:")
        print(f"  {project_dir / 'dist' / (APP_NAME + suffix)}")
        print()
        print(f"Try: {APP_NAME} selftest")
    else:
        print()
        print("BUILD FAILED!")
        return 1

    return 0


if __name__ == "__main__":
    sys.exit(main() or 0)
