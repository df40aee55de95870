#!/usr/bin/env python3
"""
install_requirements.py
Sets up .venv next to this file, installs requirements.txt into it and confirms the
numerical stack imports.
"""
import importlib
import importlib.util
import os
import platform
import subprocess
import sys
import venv

MIN_PYTHON = (3, 10)
ROOT = os.path.dirname(os.path.abspath(__file__))
REQUIREMENTS = os.path.join(ROOT, "requirements.txt")
VENV_DIR = os.path.join(ROOT, ".venv")

# import name -> requirement name
STACK = {"numpy": "numpy", "scipy": "scipy", "networkx": "networkx", "pytest": "pytest"}


def check_python_version():
    found = sys.version_info[:2]
    if found < MIN_PYTHON:
        print(f"[!] Python {MIN_PYTHON[0]}.{MIN_PYTHON[1]}+ needed, found {found[0]}.{found[1]}")
        sys.exit(1)
    print(f"[*] Python {found[0]}.{found[1]}")


def ensure_pip():
    if importlib.util.find_spec("pip") is not None:
        return
    print("[*] Bootstrapping pip")
    try:
        import ensurepip
        ensurepip.bootstrap(upgrade=True)
    except Exception as e:
        print(f"[!] ensurepip failed ({e}); install pip by hand and re-run")
        sys.exit(1)


def read_requirements(path=REQUIREMENTS):
    """Requirement lines with comments and blanks removed."""
    with open(path, 'r', encoding='utf-8') as f:
        lines = (line.split("#", 1)[0].strip() for line in f)
        return [line for line in lines if line]


def install_packages():
    ensure_pip()
    packages = read_requirements()
    print(f"[*] Installing {len(packages)} packages: {', '.join(packages)}")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", REQUIREMENTS])
    except subprocess.CalledProcessError as e:
        print(f"[!] pip exited with {e.returncode}")
        sys.exit(1)


def check_stack():
    """Import every stack package once; returns the names that failed."""
    missing = []
    for module, requirement in STACK.items():
        try:
            version = getattr(importlib.import_module(module), "__version__", "?")
            print(f"[+] {module} {version}")
        except ImportError:
            print(f"[!] {module} does not import (requirement '{requirement}')")
            missing.append(module)
    return missing


def _venv_python():
    if platform.system() == "Windows":
        return os.path.join(VENV_DIR, "Scripts", "python.exe")
    return os.path.join(VENV_DIR, "bin", "python3")


def ensure_venv():
    if sys.prefix != getattr(sys, "base_prefix", sys.prefix):
        print(f"[*] Using virtual environment {sys.prefix}")
        return
    if not os.path.isdir(VENV_DIR):
        print(f"[*] Creating {VENV_DIR}")
        venv.create(VENV_DIR, with_pip=True)
    python = _venv_python()
    if not os.path.exists(python):
        print(f"[!] {python} is missing; is the venv module installed?")
        sys.exit(1)
    os.execv(python, [python] + sys.argv)


def check_line_endings():
    if platform.system() != "Linux":
        return
    with open(__file__, 'rb') as f:
        if b'\r' in f.readline():
            print("[!] CRLF line endings; run: sed -i 's/\\r$//' install_requirements.py")
            sys.exit(1)


def main():
    check_line_endings()
    check_python_version()
    ensure_venv()
    install_packages()
    missing = check_stack()
    if missing:
        sys.exit(1)
    print("[+] Environment ready")


if __name__ == "__main__":
    main()
