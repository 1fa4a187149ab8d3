"""Run the acceptance suite and print only the verdict lines."""

import subprocess
import sys
from pathlib import Path

root = Path(__file__).resolve().parent.parent
proc = subprocess.run(
    [sys.executable, "-m", "pytest", str(root / "tests" / "test_acceptance.py"), "-q"],
    capture_output=True, text=True, cwd=root)
lines = [ln for ln in proc.stdout.splitlines() if ln.startswith(("[PASS]", "[FAIL]", "    "))]
print("\n".join(lines) if lines else proc.stdout)
print(proc.stdout.strip().splitlines()[-1])
sys.exit(proc.returncode)
